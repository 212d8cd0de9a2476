# %% [markdown]
# # One relaxation oscillator
# A Schmitt trigger charging a capacitor through a resistor swings between
# +-beta*v_a.  Its period has a closed form; the event-driven integrator
# should land on it.

# %%
import numpy as np

from noisesync import DEFAULT_PARAMS, NoiseSpec, SimConfig, build_network, natural_period, simulate
from noisesync.analysis import peak_fwhm, periodogram

net = build_network(1, c_noise=0.0)
trace = simulate(net, NoiseSpec(), SimConfig.for_network(net, t_end=20e-3), seed=0)
gaps = np.diff(trace.troughs(0))
print(f"closed form  : {natural_period(DEFAULT_PARAMS) * 1e6:.4f} us")
print(f"simulated    : {gaps.mean() * 1e6:.4f} us  (spread {gaps.std() * 1e12:.2f} ps)")

# %% [markdown]
# The capacitor waveform is a train of exponential segments; its spectrum
# peaks at 1/T with odd harmonics.

# %%
spec = periodogram(trace, 0, "hann", 4, t_start=2e-3)
peak = peak_fwhm(spec)
print(f"spectral peak: {peak.f_peak:.1f} Hz, FWHM {peak.fwhm:.1f} Hz over {spec.window_length * 1e3:.0f} ms")
third = spec.power[np.argmin(np.abs(spec.freqs - 3 * peak.f_peak))]
print(f"fundamental / third harmonic power: {spec.power.max() / third:.1f}")
