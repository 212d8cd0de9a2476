# %% [markdown]
# # Capacitive coupling locks a detuned pair
# A coupling capacitor between the two capacitor nodes pulls the pair into
# a common frequency with nearly opposite phase.

# %%
from noisesync import NoiseSpec, SimConfig, build_network, lock_report, phase_report, simulate
from noisesync.analysis import peak_fwhm, periodogram

for c_c in (0.2e-12, 1e-12, 5e-12):
    net = build_network(2, [(0, 1)], c_c=c_c, detune=(0, 0.02))
    tr = simulate(net, NoiseSpec(), SimConfig.for_network(net, t_end=40e-3), seed=2)
    rep = lock_report(tr)
    line = f"c_c = {c_c * 1e12:4.1f} pF: locked={rep.locked}, spread {rep.max_rel_period_spread:.5f}"
    if rep.locked:
        line += f", phase {phase_report(tr).phases_deg[1]:.1f} deg"
    print(line)

# %% [markdown]
# Once locked, both spectra share one peak.

# %%
peaks = [peak_fwhm(periodogram(tr, i, "hann", 4, t_start=20e-3)) for i in range(2)]
for i, p in enumerate(peaks):
    print(f"oscillator {i + 1}: {p.f_peak:.1f} Hz (FWHM {p.fwhm:.1f} Hz)")
