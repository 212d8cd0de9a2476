# %% [markdown]
# # Rings with four nearest neighbours
# circulant(N, 4) joins every node to the two nodes on each side.  We color
# a few sizes with strong coupling, then with five times less coupling plus
# common noise, and compare with an exhaustive search where it is feasible.

# %%
from noisesync import NoiseSpec, SimConfig
from noisesync.coloring import NetSettings, chromatic_number_bruteforce, circulant_graph, color_via_oscillators

for n in (8, 11, 16):
    g = circulant_graph(n, 4)
    chi = chromatic_number_bruteforce(g)
    row = [f"N={n:2d} optimum {chi}"]
    for c_c, rms in ((20e-12, 0.0), (4e-12, 0.3)):
        st = NetSettings(c_c=c_c)
        cfg = SimConfig.for_network(st.network(g), t_end=max(40e-3, 4e-3 * n))
        r = color_via_oscillators(g, st, NoiseSpec(rms), cfg, runs=8, seed=1)
        row.append(f"{c_c * 1e12:.0f} pF/{rms} V -> {r.num_colors} colors ({r.locked_runs}/8 locked)")
    print(" | ".join(row))
