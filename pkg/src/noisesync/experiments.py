"""Threshold searches and parameter sweeps built on repeated simulation.

Every stochastic statistic here is a deterministic function of the settings
and an explicit seed list.  Seed ``s`` drives both the initial state and the
noise generator, and the same seeds are reused at every probe level
(common random numbers).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .analysis import AnalysisError, circular_mean_deg, circular_std_deg, lock_report, phase_report
from .coloring import COLOR_T_END, Graph, NetSettings
from .engine import SimConfig, SimulationError, State, simulate
from .model import DEFAULT_PARAMS, NetworkSpec, OscillatorParams, build_network
from .noise import DEFAULT_HOLD, NoiseSpec

__all__ = [
    "DECISION_T_END",
    "DEFAULT_SEEDS",
    "LockStats",
    "ThresholdResult",
    "CouplingResult",
    "SweepResult",
    "PhasePoint",
    "detuned_pair",
    "population_detune",
    "lock_probability",
    "find_noise_threshold",
    "bracket_check",
    "sweep_amplitude",
    "sweep_population",
    "find_critical_coupling",
    "phase_vs_noise",
]

DECISION_T_END = 20e-3
DEFAULT_SEEDS = tuple(range(10))
DEFAULT_QUORUM = 0.8
REFERENCE_THRESHOLD_V = 0.270  # breadboard reference at the lower supply; metadata only


def detuned_pair(detune: float = 0.02, params: OscillatorParams = DEFAULT_PARAMS,
                 c_noise: float = 1e-12, noise_common: bool = True) -> NetworkSpec:
    """Two uncoupled oscillators with r_f offsets (0, detune)."""
    return build_network(2, (), params, c_noise=c_noise, detune=(0.0, detune), noise_common=noise_common)


def population_detune(n: int, spread: float = 0.02) -> np.ndarray:
    """Fractional r_f offsets evenly spaced over [0, spread]."""
    if n < 2:
        raise ValueError("population size must be >= 2")
    return np.linspace(0.0, spread, n)


def _decision_cfg(net: NetworkSpec, cfg: SimConfig | None) -> SimConfig:
    return cfg if cfg is not None else SimConfig.for_network(net, t_end=DECISION_T_END)


@dataclass(frozen=True)
class LockStats:
    locked: int
    failed: int  # simulation or analysis aborts, counted as not locked
    total: int

    @property
    def probability(self) -> float:
        return self.locked / self.total


def lock_probability(
    net: NetworkSpec,
    rms: float,
    cfg: SimConfig | None = None,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    hold_interval: float = DEFAULT_HOLD,
    window_fraction: float = 0.5,
    eps_f: float = 1e-3,
    eps_phi_deg: float = 10.0,
    initial: State | None = None,
) -> LockStats:
    """Locked fraction over ``seeds``; aborted runs are counted in ``failed``.

    ``initial`` pins the starting state for every seed (only the noise then
    varies); by default each seed draws its own.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    cfg = _decision_cfg(net, cfg)
    locked = failed = 0
    for s in seeds:
        try:
            trace = simulate(net, NoiseSpec(rms, hold_interval, s), cfg, seed=s, initial=initial)
            locked += lock_report(trace, window_fraction, eps_f, eps_phi_deg).locked
        except (SimulationError, AnalysisError):
            failed += 1
    return LockStats(locked, failed, len(seeds))


# ------------------------------------------------------------ result types


def _csv_text(rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "value", "flag"])
    for x, value, flag in rows:
        w.writerow([f"{x:.12g}", "" if value is None else f"{value:.12g}", flag])
    return buf.getvalue()


@dataclass(frozen=True)
class ThresholdResult:
    """Outcome of a noise-threshold bisection.

    ``status`` is ``"found"``, ``"below_range"`` (already locked at
    ``v_lo``, which is then reported as the threshold) or ``"none_found"``
    (not locked at ``v_hi``; ``v_t_noise`` is None).
    """

    v_t_noise: float | None
    status: str
    probes: tuple[tuple[float, float, int], ...]  # (v_rms, probability, failed runs)
    seeds: tuple[int, ...]
    quorum: float
    v_lo: float
    v_hi: float
    resolution: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probes"] = [{"v_rms": v, "lock_probability": p, "failed": f} for v, p, f in self.probes]
        d["seeds"] = list(self.seeds)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def csv_rows(self):
        for v, p, f in sorted(self.probes):
            yield v, p, "pass" if p >= self.quorum else "fail"

    def to_csv(self) -> str:
        return _csv_text(self.csv_rows())


@dataclass(frozen=True)
class CouplingResult:
    c_star: float | None
    status: str  # "found" | "below_range" | "none_found"
    noise_rms: float
    probes: tuple[tuple[float, float, int], ...]  # (c_c, probability, failed runs)
    seeds: tuple[int, ...]
    quorum: float
    c_lo: float
    c_hi: float
    resolution_ratio: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probes"] = [{"c_c": c, "lock_probability": p, "failed": f} for c, p, f in self.probes]
        d["seeds"] = list(self.seeds)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        return _csv_text((c, p, "pass" if p >= self.quorum else "fail") for c, p, _ in sorted(self.probes))


@dataclass(frozen=True)
class SweepResult:
    """One measurement per input value; None marks a censored point."""

    kind: str
    x_name: str
    x_unit: str
    x: tuple[float, ...]
    values: tuple[float | None, ...]
    flags: tuple[str, ...]
    fit: dict | None = None
    fit_flag: str | None = None
    details: tuple = field(default_factory=tuple)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "x_name": self.x_name,
            "x_unit": self.x_unit,
            "x": list(self.x),
            "values": list(self.values),
            "flags": list(self.flags),
            "fit": self.fit,
            "fit_flag": self.fit_flag,
            "meta": self.meta,
            "details": [d.to_dict() for d in self.details],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        return _csv_text(zip(self.x, self.values, self.flags))


# --------------------------------------------------------------- searches


def find_noise_threshold(
    net: NetworkSpec,
    v_lo: float = 0.0,
    v_hi: float = 1.0,
    resolution: float = 5e-3,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    quorum: float = DEFAULT_QUORUM,
    cfg: SimConfig | None = None,
    hold_interval: float = DEFAULT_HOLD,
) -> ThresholdResult:
    """Smallest probed rms at which ``lock_probability >= quorum``.

    Bisection keeps a failing lower end and a passing upper end until they
    are within ``resolution``; the passing end is returned.
    """
    if not v_lo < v_hi:
        raise ValueError("need v_lo < v_hi")
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    if not 0 < quorum <= 1:
        raise ValueError("quorum must lie in (0, 1]")
    seeds = tuple(int(s) for s in seeds)
    cfg = _decision_cfg(net, cfg)
    probes: dict[float, LockStats] = {}

    def holds(v: float) -> bool:
        if v not in probes:
            probes[v] = lock_probability(net, v, cfg, seeds, hold_interval)
        return probes[v].probability >= quorum

    def result(v_t, status):
        rows = tuple((v, st.probability, st.failed) for v, st in sorted(probes.items()))
        return ThresholdResult(v_t, status, rows, seeds, quorum, v_lo, v_hi, resolution)

    if holds(v_lo):
        return result(v_lo, "below_range")
    if not holds(v_hi):
        return result(None, "none_found")
    lo, hi = v_lo, v_hi
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return result(hi, "found")


def bracket_check(
    result: ThresholdResult,
    net: NetworkSpec,
    offset: float | None = None,
    cfg: SimConfig | None = None,
    hold_interval: float = DEFAULT_HOLD,
) -> tuple[float, float] | None:
    """Lock probabilities at ``v_t - offset`` and ``v_t`` (offset defaults
    to twice the resolution).  None if there is no finite threshold."""
    if result.v_t_noise is None:
        return None
    offset = 2 * result.resolution if offset is None else offset
    cfg = _decision_cfg(net, cfg)
    below = lock_probability(net, max(0.0, result.v_t_noise - offset), cfg, result.seeds, hold_interval)
    at = lock_probability(net, result.v_t_noise, cfg, result.seeds, hold_interval)
    return below.probability, at.probability


def _linear_fit(x, y) -> tuple[dict | None, str | None]:
    if len(x) < 2:
        return None, "insufficient_points"
    if np.ptp(x) == 0:
        return None, "degenerate_variance"
    fit = stats.linregress(x, y)
    r2 = float(fit.rvalue ** 2) if np.ptp(y) > 0 else 1.0
    return {"slope": float(fit.slope), "intercept": float(fit.intercept), "r_squared": r2}, None


def _threshold_flag(res: ThresholdResult) -> str:
    return {"found": "ok", "below_range": "below_range", "none_found": "censored"}[res.status]


def sweep_amplitude(
    amplitudes: Sequence[float],
    net: NetworkSpec | None = None,
    v_hi_ratio: float = 0.5,
    resolution: float = 5e-3,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    quorum: float = DEFAULT_QUORUM,
    t_end: float = DECISION_T_END,
) -> SweepResult:
    """Noise threshold against output amplitude ``v_a``.

    Each amplitude is searched over ``[0, v_hi_ratio * v_a]``.  Censored
    amplitudes are flagged and left out of the least-squares fit.
    """
    amps = [float(a) for a in amplitudes]
    if len(amps) < 3:
        raise ValueError("need at least 3 amplitudes")
    base = net if net is not None else detuned_pair()
    results = []
    for a in amps:
        n_a = base.with_amplitude(a)
        cfg = SimConfig.for_network(n_a, t_end=t_end)
        results.append(find_noise_threshold(n_a, 0.0, v_hi_ratio * a, resolution, seeds, quorum, cfg))
    values = tuple(r.v_t_noise if r.status == "found" else None for r in results)
    flags = tuple(_threshold_flag(r) for r in results)
    if np.ptp(amps) == 0:
        fit, fit_flag = None, "degenerate_variance"
    else:
        pts = [(a, v) for a, v in zip(amps, values) if v is not None]
        fit, fit_flag = _linear_fit([p[0] for p in pts], [p[1] for p in pts])
    if fit is not None:
        fit["signal_to_noise"] = None if fit["slope"] == 0 else 1.0 / fit["slope"]
    return SweepResult(
        "amplitude", "v_a", "V", tuple(amps), values, flags, fit, fit_flag, tuple(results),
        {"reference_threshold_v": REFERENCE_THRESHOLD_V, "reference_signal_to_noise": 9.0},
    )


def sweep_population(
    sizes: Sequence[int],
    detune_spread: float = 0.02,
    params: OscillatorParams = DEFAULT_PARAMS,
    v_hi: float = 1.0,
    resolution: float = 5e-3,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    quorum: float = DEFAULT_QUORUM,
    t_end: float = DECISION_T_END,
) -> SweepResult:
    """Noise threshold of ``n`` uncoupled oscillators sharing one source."""
    sizes = [int(n) for n in sizes]
    if not sizes:
        raise ValueError("need at least one size")
    if min(sizes) < 2:
        raise ValueError("population size must be >= 2 (lock is undefined for one oscillator)")
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be non-decreasing")
    results = []
    for n in sizes:
        net = build_network(n, (), params, detune=population_detune(n, detune_spread))
        cfg = SimConfig.for_network(net, t_end=t_end)
        results.append(find_noise_threshold(net, 0.0, v_hi, resolution, seeds, quorum, cfg))
    values = tuple(r.v_t_noise if r.status == "found" else None for r in results)
    flags = tuple(_threshold_flag(r) for r in results)
    finite = [v for v in values if v is not None]
    non_increasing = len(finite) == len(values) and all(b <= a for a, b in zip(values, values[1:]))
    return SweepResult(
        "population", "n", "oscillators", tuple(float(n) for n in sizes), values, flags,
        None, None, tuple(results), {"non_increasing": non_increasing, "detune_spread": detune_spread},
    )


def find_critical_coupling(
    g: Graph,
    noise_rms: float = 0.0,
    c_lo: float = 0.1e-12,
    c_hi: float = 100e-12,
    resolution_ratio: float = 1.05,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    quorum: float = DEFAULT_QUORUM,
    settings: NetSettings = NetSettings(),
    t_end: float = COLOR_T_END,
    hold_interval: float = DEFAULT_HOLD,
) -> CouplingResult:
    """Smallest ``c_c`` (log-scale bisection) reaching the lock quorum."""
    if not g.edges:
        raise ValueError("coupling search is undefined on a graph without edges")
    if not 0 < c_lo < c_hi:
        raise ValueError("need 0 < c_lo < c_hi")
    if not resolution_ratio > 1:
        raise ValueError("resolution_ratio must be > 1")
    seeds = tuple(int(s) for s in seeds)
    probes: dict[float, LockStats] = {}

    def holds(c: float) -> bool:
        if c not in probes:
            net = replace(settings, c_c=c).network(g)
            cfg = SimConfig.for_network(net, t_end=t_end)
            probes[c] = lock_probability(net, noise_rms, cfg, seeds, hold_interval,
                                         settings.window_fraction, settings.eps_f, settings.eps_phi_deg)
        return probes[c].probability >= quorum

    def result(c, status):
        rows = tuple((c_, st.probability, st.failed) for c_, st in sorted(probes.items()))
        return CouplingResult(c, status, noise_rms, rows, seeds, quorum, c_lo, c_hi, resolution_ratio)

    if holds(c_lo):
        return result(c_lo, "below_range")
    if not holds(c_hi):
        return result(None, "none_found")
    lo, hi = c_lo, c_hi
    while hi / lo > resolution_ratio:
        mid = math.sqrt(lo * hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return result(hi, "found")


@dataclass(frozen=True)
class PhasePoint:
    v_rms: float
    phase_deg: float | None  # circular mean over locked seeds
    phase_std_deg: float | None
    locked_seeds: int
    total_seeds: int
    flag: str  # "ok" | "unlocked" | "sub_threshold"

    def to_dict(self) -> dict:
        return asdict(self)


def phase_vs_noise(
    net: NetworkSpec,
    rms_values: Sequence[float],
    seeds: Sequence[int] = DEFAULT_SEEDS,
    cfg: SimConfig | None = None,
    threshold: float | None = None,
    hold_interval: float = DEFAULT_HOLD,
    initial: State | None = None,
) -> list[PhasePoint]:
    """Relative phase of oscillator 2 against oscillator 1 at each rms.

    Points below ``threshold`` are still measured but flagged.
    """
    if net.n != 2:
        raise ValueError("phase_vs_noise needs a two-oscillator network")
    cfg = _decision_cfg(net, cfg)
    seeds = list(seeds)
    out = []
    for v in rms_values:
        phases = []
        for s in seeds:
            try:
                trace = simulate(net, NoiseSpec(v, hold_interval, s), cfg, seed=s, initial=initial)
                if lock_report(trace).locked:
                    phases.append(phase_report(trace).phases_deg[1])
            except (SimulationError, AnalysisError):
                pass
        if phases:
            mean, std = circular_mean_deg(phases), circular_std_deg(phases)
            flag = "ok"
        else:
            mean = std = None
            flag = "unlocked"
        if threshold is not None and v < threshold:
            flag = "sub_threshold"
        out.append(PhasePoint(float(v), mean, std, len(phases), len(seeds), flag))
    return out
