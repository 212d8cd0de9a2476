"""Event-driven integrator for the hybrid oscillator network.

Between comparator switches and noise-sample boundaries the capacitor-node
voltages obey the linear charge balance

    M dv/dt = D (u - v),    D = diag(1 / r_f),  u_i = s_i v_a_i,

with ``M`` the constant nodal capacitance matrix.  Each hold boundary of the
injected noise moves charge through the noise capacitors, so the voltages
jump by ``M^-1 c_N dV_N``.  The comparators switch when ``v_i`` reaches
``+beta v_a`` (while high) or ``-beta v_a`` (while low).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import linalg

from .model import NetworkSpec, capacitance_matrix, natural_period
from .noise import NoiseSpec, generate_noise, sample_count

__all__ = [
    "SimulationError",
    "ZenoError",
    "State",
    "SimConfig",
    "Trace",
    "LinearNetwork",
    "initial_state",
    "simulate",
    "extract_troughs",
    "write_trace_csv",
    "write_events_csv",
]

RISE, FALL = "rise", "fall"
_TAYLOR_ORDER = 4


class SimulationError(RuntimeError):
    pass


class ZenoError(SimulationError):
    pass


@dataclass(frozen=True)
class State:
    t: float
    v: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.  All values in seconds."""

    t_end: float = 10e-3
    dt: float = 110e-9
    dt_out: float = 3.4e-6
    crossing_tol: float = 1e-9
    zeno_guard: float = 10e-9

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if not 0 < self.dt <= self.dt_out:
            raise ValueError("need 0 < dt <= dt_out")
        if not 0 < self.crossing_tol < self.dt:
            raise ValueError("need 0 < crossing_tol < dt")
        if self.zeno_guard < 0:
            raise ValueError("zeno_guard must be >= 0")

    @classmethod
    def for_network(cls, net: NetworkSpec, t_end: float = 10e-3, **overrides) -> "SimConfig":
        """Defaults scaled to the fastest oscillator: dt = T/2000, dt_out = T/64."""
        period = min(natural_period(p) for p in net.oscillators)
        kw = dict(t_end=t_end, dt=period / 2000, dt_out=period / 64)
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class Trace:
    """Sampled voltages/states plus the exact comparator switching record."""

    times: np.ndarray
    v_samples: np.ndarray  # (n, samples)
    s_samples: np.ndarray  # (n, samples), int8 in {-1, +1}
    event_osc: np.ndarray
    event_time: np.ndarray
    event_rise: np.ndarray
    noise_used: NoiseSpec
    seed: int
    t_end: float
    dt_out: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.v_samples.shape[0]

    @property
    def events(self) -> list[tuple[int, float, str]]:
        return [
            (int(i), float(t), RISE if r else FALL)
            for i, t, r in zip(self.event_osc, self.event_time, self.event_rise)
        ]

    def troughs(self, oscillator: int) -> np.ndarray:
        return extract_troughs(self, oscillator)

    def truncated(self, t_stop: float) -> "Trace":
        keep = self.times <= t_stop
        ev = self.event_time <= t_stop
        return Trace(
            self.times[keep], self.v_samples[:, keep], self.s_samples[:, keep],
            self.event_osc[ev], self.event_time[ev], self.event_rise[ev],
            self.noise_used, self.seed, t_stop, self.dt_out, dict(self.meta),
        )


class LinearNetwork:
    """Constant linear-algebra objects of one network, factorised once."""

    def __init__(self, net: NetworkSpec):
        self.net = net
        self.n = net.n
        self.m = capacitance_matrix(net)
        self._chol = linalg.cho_factor(self.m)
        self.c_noise = np.asarray(net.c_noise, dtype=float)
        self.v_a = net.column("v_a")
        self.thr = net.column("beta") * self.v_a
        # A = M^-1 D, so dv/dt = A (u - v)
        self.a = linalg.cho_solve(self._chol, np.diag(1.0 / net.column("r_f")))
        # Taylor terms of exp(-A h): RK4 applied to a linear system is exactly
        # the degree-4 truncation sum_k (-A h)^k / k!
        terms = [np.eye(self.n)]
        for k in range(1, _TAYLOR_ORDER + 1):
            terms.append(terms[-1] @ (-self.a) / k)
        self.taylor = np.stack(terms)
        if net.noise_common:
            self._kick = linalg.cho_solve(self._chol, self.c_noise)
        else:
            self._kick = linalg.cho_solve(self._chol, np.diag(self.c_noise))

    def rk4_step(self, h: float) -> np.ndarray:
        """One classical RK4 step of length ``h`` as a matrix acting on ``v - u``."""
        return self._poly_matrix(h)

    def _poly_matrix(self, h: float) -> np.ndarray:
        out = self.taylor[_TAYLOR_ORDER].copy()
        for k in range(_TAYLOR_ORDER - 1, -1, -1):
            out = out * h + self.taylor[k]
        return out

    def propagator(self, span: float, dt: float) -> np.ndarray:
        """``ceil(span / dt)`` equal RK4 steps covering ``span``."""
        steps = max(1, math.ceil(span / dt * (1 - 1e-12)))
        return np.linalg.matrix_power(self._poly_matrix(span / steps), steps)

    def kick(self, dv_noise) -> np.ndarray:
        """Voltage jump caused by a step ``dv_noise`` of the noise source(s)."""
        if self.net.noise_common:
            return self._kick * float(dv_noise)
        return self._kick @ np.asarray(dv_noise, dtype=float)

    def dense_coeffs(self, y: np.ndarray) -> np.ndarray:
        """Coefficients ``c_k`` with ``v(t0 + th) - u = sum_k th^k c_k``."""
        return self.taylor @ y


def initial_state(net: NetworkSpec, seed: int) -> State:
    """Random start inside the hysteresis band, reproducible from ``seed``."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64))
    thr = net.column("beta") * net.column("v_a")
    unit = rng.uniform(-1.0, 1.0, size=net.n)
    s = np.where(rng.random(net.n) < 0.5, -1, 1).astype(np.int8)
    return State(0.0, unit * thr, s)


_OK, _ZENO, _NONFINITE, _FULL = 0, 1, 2, 3


@njit(cache=True)
def _horner(taylor, h):
    out = taylor[_TAYLOR_ORDER].copy()
    for k in range(_TAYLOR_ORDER - 1, -1, -1):
        out = out * h + taylor[k]
    return out


@njit(cache=True)
def _kernel(full, taylor, kick, src, v, s, v_a, thr, hold, n_hold, t_end, dt,
            times, crossing_tol, zeno_guard, has_noise, cap):
    n = v.shape[0]
    n_out = times.shape[0]
    v_out = np.empty((n, n_out))
    s_out = np.empty((n, n_out), dtype=np.int8)
    ev_osc = np.empty(cap, dtype=np.int64)
    ev_time = np.empty(cap)
    ev_rise = np.empty(cap, dtype=np.bool_)
    n_ev = 0
    last = np.full(n, -np.inf)
    u = np.empty(n)
    y = np.empty(n)
    coeffs = np.empty((_TAYLOR_ORDER + 1, n))
    j_out = 0
    for k in range(n_hold):
        t0 = k * hold
        t1 = min((k + 1) * hold, t_end)
        if k > 0 and has_noise:
            dv = src[k] - src[k - 1]
            v = v + kick @ dv
        a = t0
        first_seg = True
        while True:
            # switches already due at the segment start (noise jumps, restarts)
            for i in range(n):
                if s[i] * v[i] >= thr[i]:
                    if a - last[i] < zeno_guard:
                        return _ZENO, i, a, v_out, s_out, ev_osc, ev_time, ev_rise, n_ev, j_out
                    if n_ev == cap:
                        return _FULL, i, a, v_out, s_out, ev_osc, ev_time, ev_rise, n_ev, j_out
                    last[i] = a
                    ev_osc[n_ev] = i
                    ev_time[n_ev] = a
                    ev_rise[n_ev] = s[i] < 0
                    n_ev += 1
                    s[i] = -s[i]
            for i in range(n):
                u[i] = s[i] * v_a[i]
                y[i] = v[i] - u[i]
            span = t1 - a
            if first_seg and k < n_hold - 1:
                v_end = u + full @ y
            else:
                steps = max(1, int(np.ceil(span / dt * (1 - 1e-12))))
                step = _horner(taylor, span / steps)
                z = y.copy()
                for _ in range(steps):
                    z = step @ z
                v_end = u + z
            first_seg = False
            have_coeffs = False
            best = -1
            theta = span
            for i in range(n):
                if s[i] * v_end[i] >= thr[i]:
                    if not have_coeffs:
                        for q in range(_TAYLOR_ORDER + 1):
                            coeffs[q] = taylor[q] @ y
                        have_coeffs = True
                    lo = 0.0
                    hi = span
                    f_lo = s[i] * (u[i] + coeffs[0, i]) - thr[i]
                    f_hi = s[i] * v_end[i] - thr[i]
                    while hi - lo > crossing_tol:
                        mid = 0.5 * (lo + hi)
                        val = coeffs[_TAYLOR_ORDER, i]
                        for q in range(_TAYLOR_ORDER - 1, -1, -1):
                            val = val * mid + coeffs[q, i]
                        f_mid = s[i] * (u[i] + val) - thr[i]
                        if f_mid >= 0:
                            hi = mid
                            f_hi = f_mid
                        else:
                            lo = mid
                            f_lo = f_mid
                    # secant finish: the bracket is tiny and the curve smooth,
                    # so this removes the systematic late bias of `hi`
                    root = hi
                    if f_hi > f_lo:
                        root = lo + (hi - lo) * (-f_lo) / (f_hi - f_lo)
                    if best < 0 or root < theta:
                        best = i
                        theta = root
            b = a + theta if best >= 0 else t1
            closing = best < 0 and k == n_hold - 1
            while j_out < n_out and (times[j_out] < b or (closing and times[j_out] <= b * (1 + 1e-12))):
                if not have_coeffs:
                    for q in range(_TAYLOR_ORDER + 1):
                        coeffs[q] = taylor[q] @ y
                    have_coeffs = True
                th = times[j_out] - a
                for i in range(n):
                    val = coeffs[_TAYLOR_ORDER, i]
                    for q in range(_TAYLOR_ORDER - 1, -1, -1):
                        val = val * th + coeffs[q, i]
                    v_out[i, j_out] = u[i] + val
                    s_out[i, j_out] = s[i]
                j_out += 1
            if best < 0:
                v = v_end
                break
            for i in range(n):
                val = coeffs[_TAYLOR_ORDER, i]
                for q in range(_TAYLOR_ORDER - 1, -1, -1):
                    val = val * theta + coeffs[q, i]
                v[i] = u[i] + val
            # the earliest crosser switches at b even if the polynomial leaves
            # it a rounding error short of the threshold
            if b - last[best] < zeno_guard:
                return _ZENO, best, b, v_out, s_out, ev_osc, ev_time, ev_rise, n_ev, j_out
            if n_ev == cap:
                return _FULL, best, b, v_out, s_out, ev_osc, ev_time, ev_rise, n_ev, j_out
            last[best] = b
            ev_osc[n_ev] = best
            ev_time[n_ev] = b
            ev_rise[n_ev] = s[best] < 0
            n_ev += 1
            s[best] = -s[best]
            a = b
        if not np.isfinite(v.sum()):
            return _NONFINITE, -1, t1, v_out, s_out, ev_osc, ev_time, ev_rise, n_ev, j_out
    for jj in range(j_out, n_out):
        for i in range(n):
            v_out[i, jj] = v[i]
            s_out[i, jj] = s[i]
    return _OK, -1, t_end, v_out, s_out, ev_osc, ev_time, ev_rise, n_ev, n_out


def simulate(
    net: NetworkSpec,
    noise: NoiseSpec,
    cfg: SimConfig,
    seed: int = 0,
    initial: State | None = None,
) -> Trace:
    """Integrate the network from ``initial`` (or ``initial_state(net, seed)``).

    Between events the state advances with fixed RK4 steps no longer than
    ``cfg.dt``; steps are aligned with the noise hold boundaries so noise jumps
    land exactly on them.  Switch instants are localised by bisection on the
    RK4 dense polynomial to ``cfg.crossing_tol`` and integration restarts
    from there.
    """
    sys = LinearNetwork(net)
    n = sys.n
    st = initial if initial is not None else initial_state(net, seed)
    v = np.array(st.v, dtype=float)
    s = np.array(st.s, dtype=np.int8)
    if v.shape != (n,) or s.shape != (n,):
        raise ValueError("initial state does not match the network size")

    t_end, hold = cfg.t_end, noise.hold_interval
    n_hold = sample_count(t_end, hold)
    if net.noise_common:
        src = generate_noise(noise, t_end).samples[:, None]
        kick = sys._kick[:, None]
    else:
        src = np.stack([generate_noise(noise, t_end, stream=i).samples for i in range(n)], axis=1)
        kick = sys._kick
    has_noise = noise.rms_voltage > 0 and bool(np.any(sys.c_noise > 0))
    full = sys.propagator(hold, cfg.dt)
    n_out = int(math.floor(t_end / cfg.dt_out * (1 + 1e-12))) + 1
    times = np.arange(n_out) * cfg.dt_out

    half = min(natural_period(p) for p in net.oscillators) / 2
    cap = int(n * (t_end / half + 4) * 1.5) + 16
    while True:
        status, osc, when, v_out, s_out, e_osc, e_time, e_rise, n_ev, _ = _kernel(
            full, sys.taylor, np.ascontiguousarray(kick), np.ascontiguousarray(src),
            v.copy(), s.copy(), sys.v_a, sys.thr, hold, n_hold, t_end, cfg.dt,
            times, cfg.crossing_tol, cfg.zeno_guard, has_noise, cap,
        )
        if status != _FULL:
            break
        cap *= 4
    if status == _ZENO:
        raise ZenoError(
            f"oscillator {osc} switched twice within zeno_guard={cfg.zeno_guard:g} s near t={when:.9g}"
        )
    if status == _NONFINITE:
        raise SimulationError(f"non-finite state at t={when:.9g}")

    return Trace(
        times=times,
        v_samples=v_out,
        s_samples=s_out,
        event_osc=e_osc[:n_ev].astype(int),
        event_time=e_time[:n_ev].copy(),
        event_rise=e_rise[:n_ev].copy(),
        noise_used=noise,
        seed=int(seed),
        t_end=t_end,
        dt_out=cfg.dt_out,
    )


def extract_troughs(trace: Trace, oscillator: int) -> np.ndarray:
    """Times at which ``oscillator`` switched upward (the waveform minima).

    Returns an empty array when there are none.
    """
    if not 0 <= oscillator < trace.n:
        raise IndexError(f"oscillator {oscillator} out of range")
    mask = (trace.event_osc == oscillator) & trace.event_rise
    return trace.event_time[mask]


def write_trace_csv(trace: Trace, path) -> None:
    n = trace.n
    header = ["t"] + [f"v{i + 1}" for i in range(n)] + [f"s{i + 1}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for j, t in enumerate(trace.times):
            w.writerow(
                [f"{t:.15g}"]
                + [f"{x:.15g}" for x in trace.v_samples[:, j]]
                + [str(int(x)) for x in trace.s_samples[:, j]]
            )


def write_events_csv(trace: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["osc", "t", "direction"])
        for i, t, d in trace.events:
            w.writerow([i + 1, f"{t:.15g}", d])


def read_trace_csv(path) -> Trace:
    """Load a trace written by ``write_trace_csv`` (events are not restored)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = (data.shape[1] - 1) // 2
    times = data[:, 0]
    dt_out = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return Trace(
        times=times,
        v_samples=data[:, 1:1 + n].T.copy(),
        s_samples=data[:, 1 + n:].T.astype(np.int8),
        event_osc=np.zeros(0, dtype=int),
        event_time=np.zeros(0),
        event_rise=np.zeros(0, dtype=bool),
        noise_used=NoiseSpec(),
        seed=0,
        t_end=float(times[-1]),
        dt_out=dt_out,
    )
