"""Spectra, FWHM, lock detection and trough-based relative phases."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from .engine import Trace, extract_troughs

__all__ = [
    "AnalysisError",
    "Spectrum",
    "PeakReport",
    "LockReport",
    "PhaseReport",
    "spectrum_of",
    "periodogram",
    "peak_fwhm",
    "lock_report",
    "phase_report",
    "circular_mean_deg",
    "circular_std_deg",
]

MIN_TROUGHS = 8


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    freqs: np.ndarray
    power: np.ndarray
    window_length: float
    window_kind: str

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["freq_hz", "power"])
            for f, p in zip(self.freqs, self.power):
                w.writerow([f"{f:.12g}", f"{p:.12g}"])


@dataclass(frozen=True)
class PeakReport:
    f_peak: float
    fwhm: float


@dataclass(frozen=True)
class LockReport:
    locked: bool
    mean_period: tuple[float, ...]
    max_rel_period_spread: float
    phase_std_deg: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


@dataclass(frozen=True)
class PhaseReport:
    reference: int
    period_t: float
    phases_deg: tuple[float, ...]
    delta_t: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def circular_mean_deg(angles_deg) -> float:
    """Resultant-vector angle in [0, 360)."""
    rad = np.deg2rad(np.asarray(angles_deg, dtype=float))
    mean = math.degrees(math.atan2(np.sin(rad).mean(), np.cos(rad).mean())) % 360.0
    return 0.0 if mean >= 360.0 else mean


def circular_std_deg(angles_deg) -> float:
    """``sqrt(-2 ln R)`` in degrees, R the mean resultant length."""
    rad = np.deg2rad(np.asarray(angles_deg, dtype=float))
    r = math.hypot(np.sin(rad).mean(), np.cos(rad).mean())
    return math.degrees(math.sqrt(max(0.0, -2.0 * math.log(min(1.0, max(r, 1e-300))))))


_WINDOWS = {"rectangular": np.ones, "rect": np.ones, "hann": lambda m: np.hanning(m + 1)[:-1]}


def spectrum_of(x, fs: float, window_kind: str = "hann", zero_pad_factor: int = 1) -> Spectrum:
    """One-sided power spectrum of a uniformly sampled signal.

    The mean is removed, the window applied, and the result zero-padded to
    ``zero_pad_factor`` times the length.  Power is normalised so that its sum
    equals the energy of the windowed signal.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 16:
        raise AnalysisError("need at least 16 samples")
    if window_kind not in _WINDOWS:
        raise ValueError(f"unknown window {window_kind!r}")
    if int(zero_pad_factor) < 1:
        raise ValueError("zero_pad_factor must be >= 1")
    xw = (x - x.mean()) * _WINDOWS[window_kind](len(x))
    nfft = len(x) * int(zero_pad_factor)
    power = np.abs(np.fft.rfft(xw, nfft)) ** 2 / nfft
    power[1:(nfft + 1) // 2] *= 2.0
    freqs = np.fft.rfftfreq(nfft, 1.0 / fs)
    kind = "rectangular" if window_kind == "rect" else window_kind
    return Spectrum(freqs, power, len(x) / fs, kind)


def periodogram(
    trace: Trace,
    oscillator: int,
    window_kind: str = "hann",
    zero_pad_factor: int = 1,
    t_start: float = 0.0,
) -> Spectrum:
    """Spectrum of one oscillator's capacitor voltage from ``t_start`` on."""
    keep = trace.times >= t_start
    return spectrum_of(trace.v_samples[oscillator, keep], 1.0 / trace.dt_out, window_kind, zero_pad_factor)


def peak_fwhm(spec: Spectrum) -> PeakReport:
    """Strongest non-DC peak and its half-power width (linear interpolation)."""
    p = spec.power
    f = spec.freqs
    if len(p) < 3:
        raise AnalysisError("spectrum too short")
    k = 1 + int(np.argmax(p[1:]))
    if k >= len(p) - 1:
        raise AnalysisError("peak at the edge of the frequency grid")
    half = p[k] / 2.0
    left = k
    while left > 0 and p[left] > half:
        left -= 1
    right = k
    while right < len(p) - 1 and p[right] > half:
        right += 1
    if p[left] > half or p[right] > half:
        raise AnalysisError("half-power level not reached inside the grid")

    def cross(i0, i1):
        # power falls through `half` between bins i0 (above) and i1 (at/below)
        return f[i0] + (p[i0] - half) / (p[i0] - p[i1]) * (f[i1] - f[i0])

    return PeakReport(float(f[k]), float(cross(right - 1, right) - cross(left + 1, left)))


def _window_troughs(trace: Trace, window_fraction: float) -> tuple[float, list[np.ndarray]]:
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    t_start = trace.t_end * (1.0 - window_fraction)
    out = []
    for i in range(trace.n):
        tr = extract_troughs(trace, i)
        tr = tr[tr >= t_start]
        if len(tr) < MIN_TROUGHS:
            raise AnalysisError(
                f"oscillator {i} has {len(tr)} troughs in the analysis window, need {MIN_TROUGHS}"
            )
        out.append(tr)
    return t_start, out


def _nearest_offsets(ref: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Signed offset from each ``ref`` time to the closest ``other`` time."""
    idx = np.clip(np.searchsorted(other, ref), 1, len(other) - 1) if len(other) > 1 else np.zeros(len(ref), int)
    if len(other) == 1:
        return other[0] - ref
    before = other[idx - 1] - ref
    after = other[idx] - ref
    return np.where(np.abs(before) <= np.abs(after), before, after)


def lock_report(
    trace: Trace,
    window_fraction: float = 0.5,
    eps_f: float = 1e-3,
    eps_phi_deg: float = 10.0,
) -> LockReport:
    """Frequency-lock verdict over the trailing ``window_fraction`` of a trace.

    Locked means every pair of mean trough periods agrees to ``eps_f``
    (relative to the grand mean) and every pairwise per-cycle phase offset
    has a circular standard deviation below ``eps_phi_deg``.
    """
    _, troughs = _window_troughs(trace, window_fraction)
    periods = np.array([(tr[-1] - tr[0]) / (len(tr) - 1) for tr in troughs])
    grand = float(periods.mean())
    spread = float((periods.max() - periods.min()) / grand)
    phase_std = 0.0
    for i, j in combinations(range(trace.n), 2):
        deg = _nearest_offsets(troughs[i], troughs[j]) / grand * 360.0
        phase_std = max(phase_std, circular_std_deg(deg))
    return LockReport(
        locked=bool(spread < eps_f and phase_std < eps_phi_deg),
        mean_period=tuple(float(p) for p in periods),
        max_rel_period_spread=spread,
        phase_std_deg=phase_std,
    )


def phase_report(trace: Trace, reference: int = 0, window_fraction: float = 0.5) -> PhaseReport:
    """Relative phase of every oscillator against ``reference``.

    ``T`` is the reference's mean trough spacing in the window; for each
    reference trough the signed offset to the nearest trough of oscillator
    ``i`` is converted to degrees and the circular mean taken.  Positive
    phase means oscillator ``i`` reaches its trough later.
    """
    _, troughs = _window_troughs(trace, window_fraction)
    ref = troughs[reference]
    period = float((ref[-1] - ref[0]) / (len(ref) - 1))
    all_troughs = [extract_troughs(trace, i) for i in range(trace.n)]
    phases, delays = [], []
    for i in range(trace.n):
        if i == reference:
            phases.append(0.0)
            delays.append(0.0)
            continue
        off = _nearest_offsets(ref, all_troughs[i])
        phi = circular_mean_deg(off / period * 360.0)
        phases.append(phi)
        delays.append(phi / 360.0 * period)
    return PhaseReport(reference, period, tuple(phases), tuple(delays))
