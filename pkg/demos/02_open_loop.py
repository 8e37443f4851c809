"""Open-loop equilibria: the analysis tables next to simulated trajectories.

Run: python3 demos/02_open_loop.py
"""

# %%
from lanedrop import analysis, engine
from lanedrop import config as cfgmod
from lanedrop.flow_core import reference_constants

dc = reference_constants()

# %% With d = 2C and u = v_1 both an uncongested and a congested state exist
for eq in analysis.open_loop_equilibria(dc, 2 * dc.C, dc.v_1):
    st = analysis.classify_stability(dc, eq, 2 * dc.C, 600.0)
    print(f"{eq.regime:<12} k*={eq.k_star:.6f} g*={eq.g_star / dc.C:.3f}C  {st.kind}  ({eq.basin_note})")

# %% Which one the zone reaches depends on where it starts
for name in ("paper_3_open_loop_no_control", "paper_3_open_loop_v1", "paper_3_open_loop_v1_congested"):
    tr = engine.run(cfgmod.load(name))
    print(f"{name:<32} k(0)={tr.k_obs[0]:.4f}  final k={tr.final_density:.6f}  "
          f"late g={engine.metrics(tr).late_mean_g / dc.C:.3f}C")

# %% The best constant limit for any demand
for factor in (0.5, 0.8, 0.9, 2.0):
    opt = analysis.optimal_speed_limit(dc, factor * dc.C)
    print(f"d={factor}C: g*={opt.g_star / dc.C:.2f}C, u*={opt.u_star}, any u >= {opt.u_threshold:.3f} "
          f"(needs uncongested start: {opt.requires_uncongested_start})")
