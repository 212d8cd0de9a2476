# %% [markdown]
# # Common noise on two uncoupled, detuned oscillators
# Both oscillators receive the same white noise through a 1 pF capacitor.
# We ask how close they come to frequency locking as the noise grows.

# %%
import numpy as np

from noisesync import NoiseSpec, SimConfig, lock_report, simulate
from noisesync.experiments import detuned_pair, find_noise_threshold

net = detuned_pair(0.02)
cfg = SimConfig.for_network(net, t_end=20e-3)
for rms in (0.0, 0.5, 1.0, 2.0):
    reps = [lock_report(simulate(net, NoiseSpec(rms, seed=s), cfg, seed=s)) for s in range(5)]
    print(f"{rms:4.1f} V rms: period spread {np.median([r.max_rel_period_spread for r in reps]):.4f}, "
          f"phase std {np.median([r.phase_std_deg for r in reps]):5.1f} deg, "
          f"locked {sum(r.locked for r in reps)}/5")

# %% [markdown]
# The noise kick on each node is c_noise / (c_l + c_noise), about 1 % of the
# source step, so the pair keeps its intrinsic 2 % frequency mismatch.  The
# threshold search reports this explicitly rather than inventing a value.

# %%
res = find_noise_threshold(net, 0.0, 1.0, 5e-3, seeds=range(10))
print(res.status, res.v_t_noise, res.probes)
