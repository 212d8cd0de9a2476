"""``noisesync`` command line.

Exit status: 0 on success, 1 on I/O or simulation failure, 2 on usage errors.
Failures print one line ``error: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone

from . import __version__
from .analysis import AnalysisError, lock_report, peak_fwhm, periodogram, phase_report
from .coloring import (
    COLOR_T_END,
    Graph,
    GraphError,
    NetSettings,
    circulant_graph,
    color_via_oscillators,
    read_dimacs,
    verify_coloring,
    write_dimacs,
)
from .engine import SimConfig, SimulationError, read_trace_csv, simulate, write_events_csv, write_trace_csv
from .experiments import (
    DECISION_T_END,
    SweepResult,
    bracket_check,
    detuned_pair,
    find_critical_coupling,
    find_noise_threshold,
    population_detune,
    sweep_amplitude,
    sweep_population,
)
from .model import DEFAULT_PARAMS, OscillatorParams, build_network
from .noise import DEFAULT_HOLD, NoiseSpec

_OSC_KEYS = {f.name for f in fields(OscillatorParams)}
_SIM_KEYS = {f.name for f in fields(SimConfig)}
_EXTRA_KEYS = {"c_noise", "hold_interval"}


class UsageError(Exception):
    pass


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[str] = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ----------------------------------------------------------------- params


def _load_params(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise UsageError("--params file must hold a JSON object")
    unknown = set(data) - _OSC_KEYS - _SIM_KEYS - _EXTRA_KEYS
    if unknown:
        raise UsageError(f"unknown keys in --params file: {sorted(unknown)}")
    return data


def _osc_params(overrides: dict) -> OscillatorParams:
    return replace(DEFAULT_PARAMS, **{k: float(v) for k, v in overrides.items() if k in _OSC_KEYS})


def _sim_config(net, overrides: dict, t_end_flag: float | None, default_t_end: float) -> SimConfig:
    kw = {k: float(v) for k, v in overrides.items() if k in _SIM_KEYS}
    if t_end_flag is not None:
        kw["t_end"] = t_end_flag
    kw.setdefault("t_end", default_t_end)
    return SimConfig.for_network(net, **kw)


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _write_json(path: str, command: str, params: dict, result) -> None:
    doc = {
        "command": command,
        "params": params,
        "result": result,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _settings(args, params: dict, graph_n: int) -> NetSettings:
    st = NetSettings(
        params=_osc_params(params),
        c_c=args.cc,
        c_noise=float(params.get("c_noise", NetSettings.c_noise)),
        noise_common=not getattr(args, "independent_noise", False),
    )
    if getattr(args, "detune_spread", None) is not None:
        st = replace(st, detune_spread=args.detune_spread)
    return st


def _resolved(settings: NetSettings, cfg: SimConfig | None, **extra) -> dict:
    out = {"oscillator": asdict(settings.params)}
    out["network"] = {k: v for k, v in asdict(settings).items() if k != "params"}
    if cfg is not None:
        out["sim"] = asdict(cfg)
    out.update(extra)
    return out


# --------------------------------------------------------------- commands


def _cmd_gen(args, params) -> CommandOutcome:
    n, k = args.circulant
    g = circulant_graph(n, k)
    write_dimacs(g, args.out, comment=f"circulant n={n} k={k}")
    return CommandOutcome(0, [args.out])


def _cmd_sim(args, params) -> CommandOutcome:
    g = read_dimacs(args.graph)
    st = _settings(args, params, g.n)
    net = st.network(g)
    if args.detune is not None:
        det = _csv_floats(args.detune)
        net = build_network(g.n, [(i - 1, j - 1) for i, j in g.sorted_edges()], st.params,
                            c_c=st.c_c, c_noise=st.c_noise, detune=det, noise_common=st.noise_common)
    cfg = _sim_config(net, params, args.t_end, SimConfig.t_end)
    hold = float(params.get("hold_interval", DEFAULT_HOLD))
    trace = simulate(net, NoiseSpec(args.noise_rms, hold, args.seed), cfg, seed=args.seed)
    artifacts = []
    if args.trace:
        write_trace_csv(trace, args.trace)
        artifacts.append(args.trace)
    if args.events:
        write_events_csv(trace, args.events)
        artifacts.append(args.events)
    if args.report:
        result = {"n": g.n, "events": len(trace.event_time),
                  "troughs": [int(len(trace.troughs(i))) for i in range(g.n)]}
        try:
            lock = lock_report(trace)
            result["lock"] = asdict(lock)
            result["phase"] = asdict(phase_report(trace)) if lock.locked else None
        except AnalysisError as exc:
            result["lock"] = None
            result["analysis_error"] = str(exc)
        resolved = _resolved(st, cfg, noise={"rms_voltage": args.noise_rms, "hold_interval": hold},
                             seed=args.seed, detune=[p.r_f / st.params.r_f - 1 for p in net.oscillators])
        _write_json(args.report, "sim", resolved, result)
        artifacts.append(args.report)
    return CommandOutcome(0, artifacts)


def _cmd_spectrum(args, params) -> CommandOutcome:
    trace = read_trace_csv(args.trace)
    if not 1 <= args.osc <= trace.n:
        raise UsageError(f"--osc must lie in 1..{trace.n}")
    spec = periodogram(trace, args.osc - 1, args.window, args.zero_pad)
    spec.write_csv(args.out)
    try:
        peak = peak_fwhm(spec)
        print(json.dumps({"f_peak_hz": peak.f_peak, "fwhm_hz": peak.fwhm}))
    except AnalysisError as exc:
        print(json.dumps({"f_peak_hz": None, "fwhm_hz": None, "note": str(exc)}))
    return CommandOutcome(0, [args.out])


def _cmd_color(args, params) -> CommandOutcome:
    g = read_dimacs(args.graph)
    st = _settings(args, params, g.n)
    cfg = _sim_config(st.network(g), params, args.t_end, COLOR_T_END)
    hold = float(params.get("hold_interval", DEFAULT_HOLD))
    res = color_via_oscillators(g, st, NoiseSpec(args.noise_rms, hold), cfg, args.runs, args.seed)
    result = res.to_dict()
    result["valid"] = None if res.coloring is None else bool(verify_coloring(g, res.coloring))
    resolved = _resolved(st, cfg, noise={"rms_voltage": args.noise_rms, "hold_interval": hold},
                         seed=args.seed, runs=args.runs)
    _write_json(args.out, "color", resolved, result)
    if res.coloring is None:
        print(f"error: unlocked: no run out of {args.runs} locked", file=sys.stderr)
        return CommandOutcome(1, [args.out])
    return CommandOutcome(0, [args.out])


def _cmd_threshold(args, params) -> CommandOutcome:
    osc = _osc_params(params)
    c_noise = float(params.get("c_noise", NetSettings.c_noise))
    if args.graph is not None:
        g = read_dimacs(args.graph)
    else:
        if args.n < 2:
            raise UsageError("--n must be >= 2")
        g = Graph(args.n)
    if args.detune is not None:
        det = _csv_floats(args.detune)
    else:
        det = [0.0, 0.02] if g.n == 2 else list(population_detune(g.n))
    edges = [(i - 1, j - 1) for i, j in g.sorted_edges()]
    if edges and not args.cc > 0:
        raise UsageError("--cc must be > 0 for a graph with edges")
    net = build_network(g.n, edges, osc, c_c=args.cc if edges else 0.0, c_noise=c_noise,
                        detune=det, noise_common=not args.independent_noise)
    cfg = _sim_config(net, params, args.t_end, DECISION_T_END)
    hold = float(params.get("hold_interval", DEFAULT_HOLD))
    seeds = list(range(args.seeds))
    res = find_noise_threshold(net, args.v_min, args.v_max, args.resolution, seeds, args.quorum, cfg, hold)
    result = res.to_dict()
    chk = bracket_check(res, net, cfg=cfg, hold_interval=hold)
    result["bracket_check"] = None if chk is None else {"below": chk[0], "at": chk[1]}
    resolved = {"oscillator": asdict(osc), "c_noise": c_noise, "c_c": args.cc if edges else 0.0,
                "detune": [float(d) for d in det], "noise_common": not args.independent_noise,
                "hold_interval": hold, "sim": asdict(cfg)}
    _write_json(args.out, "threshold", resolved, result)
    arts = [args.out]
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(res.to_csv())
        arts.append(args.csv)
    return CommandOutcome(0, arts)


def _sweep_coupling(spec: dict, osc: OscillatorParams, c_noise: float) -> SweepResult:
    if "graph" in spec:
        g = read_dimacs(spec["graph"])
    elif "circulant" in spec:
        g = circulant_graph(*spec["circulant"])
    else:
        raise UsageError("coupling sweep spec needs 'graph' (DIMACS path) or 'circulant' [n, k]")
    st = NetSettings(params=osc, c_noise=c_noise, detune_spread=float(spec.get("detune_spread", 0.01)))
    rms_values = [float(v) for v in spec.get("noise_rms", [0.0])]
    kw = dict(
        c_lo=float(spec.get("c_lo", 0.5e-12)),
        c_hi=float(spec.get("c_hi", 20e-12)),
        resolution_ratio=float(spec.get("resolution_ratio", 1.05)),
        seeds=list(range(int(spec.get("seeds", 10)))),
        quorum=float(spec.get("quorum", 0.8)),
        settings=st,
        t_end=float(spec.get("t_end", COLOR_T_END)),
    )
    results = [find_critical_coupling(g, v, **kw) for v in rms_values]
    flags = tuple({"found": "ok", "below_range": "below_range", "none_found": "censored"}[r.status]
                  for r in results)
    return SweepResult("coupling", "noise_rms", "V", tuple(rms_values),
                       tuple(r.c_star for r in results), flags, details=tuple(results),
                       meta={"reference_reduction": 5.0})


_SWEEP_KEYS = {
    "amplitude": {"amplitudes", "detune", "v_hi_ratio", "resolution", "seeds", "quorum", "t_end"},
    "population": {"sizes", "detune_spread", "v_hi", "resolution", "seeds", "quorum", "t_end"},
    "coupling": {"graph", "circulant", "noise_rms", "c_lo", "c_hi", "resolution_ratio", "seeds",
                 "quorum", "detune_spread", "t_end"},
}


def _cmd_sweep(args, params) -> CommandOutcome:
    with open(args.spec) as fh:
        spec = json.load(fh)
    if not isinstance(spec, dict):
        raise UsageError("--spec file must hold a JSON object")
    unknown = set(spec) - _SWEEP_KEYS[args.kind]
    if unknown:
        raise UsageError(f"unknown keys for a {args.kind} sweep: {sorted(unknown)}")
    osc = _osc_params(params)
    c_noise = float(params.get("c_noise", NetSettings.c_noise))
    t_end = float(spec.get("t_end", params.get("t_end", DECISION_T_END)))
    seeds = list(range(int(spec.get("seeds", 10))))
    if args.kind == "amplitude":
        res = sweep_amplitude(
            spec.get("amplitudes", [1.5, 2.0, 2.5, 3.0]),
            detuned_pair(float(spec.get("detune", 0.02)), osc, c_noise),
            float(spec.get("v_hi_ratio", 0.5)),
            float(spec.get("resolution", 5e-3)),
            seeds,
            float(spec.get("quorum", 0.8)),
            t_end,
        )
    elif args.kind == "population":
        res = sweep_population(
            spec.get("sizes", [2, 3, 4]),
            float(spec.get("detune_spread", 0.02)),
            osc,
            float(spec.get("v_hi", 1.0)),
            float(spec.get("resolution", 5e-3)),
            seeds,
            float(spec.get("quorum", 0.8)),
            t_end,
        )
    else:
        res = _sweep_coupling(spec, osc, c_noise)
    resolved = {"oscillator": asdict(osc), "c_noise": c_noise, "sweep": spec}
    _write_json(args.out, "sweep", resolved, res.to_dict())
    arts = [args.out]
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(res.to_csv())
        arts.append(args.csv)
    return CommandOutcome(0, arts)


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="noisesync", description="Coupled relaxation-oscillator network simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--params", metavar="FILE", help="JSON overrides for oscillator and integrator defaults")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="write a circulant graph as DIMACS")
    g.add_argument("--circulant", nargs=2, type=int, metavar=("N", "K"), required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("sim", help="simulate the oscillator network of a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--cc", type=float, default=NetSettings.c_c, help="coupling capacitance (F)")
    s.add_argument("--noise-rms", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--t-end", type=float, default=None)
    s.add_argument("--detune", default=None, help="comma-separated fractional r_f offsets")
    s.add_argument("--detune-spread", type=float, default=None)
    s.add_argument("--independent-noise", action="store_true")
    s.add_argument("--trace")
    s.add_argument("--events")
    s.add_argument("--report")
    s.set_defaults(func=_cmd_sim)

    sp = sub.add_parser("spectrum", help="power spectrum of one trace channel")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--osc", type=int, default=1, help="1-based oscillator number")
    sp.add_argument("--window", choices=("hann", "rect"), default="hann")
    sp.add_argument("--zero-pad", type=int, default=4)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_spectrum)

    c = sub.add_parser("color", help="color a graph from oscillator phases")
    c.add_argument("--graph", required=True)
    c.add_argument("--cc", type=float, default=NetSettings.c_c)
    c.add_argument("--noise-rms", type=float, default=0.0)
    c.add_argument("--runs", type=int, default=12)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--t-end", type=float, default=None)
    c.add_argument("--detune-spread", type=float, default=None)
    c.add_argument("--independent-noise", action="store_true")
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_color)

    t = sub.add_parser("threshold", help="noise threshold for frequency locking")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph")
    src.add_argument("--n", type=int)
    t.add_argument("--cc", type=float, default=NetSettings.c_c)
    t.add_argument("--detune", default=None)
    t.add_argument("--v-min", type=float, default=0.0)
    t.add_argument("--v-max", type=float, default=1.0)
    t.add_argument("--resolution", type=float, default=5e-3)
    t.add_argument("--seeds", type=int, default=10)
    t.add_argument("--quorum", type=float, default=0.8)
    t.add_argument("--t-end", type=float, default=None)
    t.add_argument("--independent-noise", action="store_true")
    t.add_argument("--out", required=True)
    t.add_argument("--csv")
    t.set_defaults(func=_cmd_threshold)

    w = sub.add_parser("sweep", help="threshold or coupling sweeps driven by a JSON spec")
    w.add_argument("--kind", choices=("amplitude", "population", "coupling"), required=True)
    w.add_argument("--spec", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--csv")
    w.set_defaults(func=_cmd_sweep)
    return p


def dispatch(argv) -> CommandOutcome:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "runs", 1) < 1 or getattr(args, "seeds", 1) < 1:
            raise UsageError("--runs and --seeds must be >= 1")
        params = _load_params(args.params)
        return args.func(args, params)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(2)
    except (OSError, GraphError, SimulationError, AnalysisError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return CommandOutcome(1)
    except ValueError as exc:
        print(f"error: invalid value: {exc}".replace("\n", " "), file=sys.stderr)
        return CommandOutcome(2)


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
