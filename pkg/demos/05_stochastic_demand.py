"""Noisy trapezoid arrivals through both plants, with and without control.

Run: python3 demos/05_stochastic_demand.py [out_dir]
"""

# %%
import sys
from pathlib import Path

from lanedrop import engine, svg
from lanedrop import config as cfgmod

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

# %% Ten seeds per plant; the baseline keeps u = v_f on the same arrivals
for name in ("paper_5_3_stochastic", "paper_6_ctm_I"):
    cmp = engine.compare_seeds(cfgmod.load(name), range(10))
    lo, hi = cmp.reduction_range
    print(f"{name:<22} travel-time reduction {cmp.mean_reduction:.3f} ({lo:.3f}..{hi:.3f}), "
          f"TT {sum(cmp.tt_vsl) / 10:.0f} s vs {sum(cmp.tt_base) / 10:.0f} s")

# %% One CTM realisation: panels with the baseline dashed, and the density map
cfg = cfgmod.load("paper_6_ctm_I", seed=0)
vsl, base = engine.run(cfg), engine.run(engine.baseline_of(cfg))
(out / "ctm_panels.svg").write_text(svg.timeseries_svg(vsl, base))
(out / "ctm_contour_vsl.svg").write_text(svg.contour_svg(vsl))
(out / "ctm_contour_base.svg").write_text(svg.contour_svg(base))

# %% Without a capacity drop there is nothing to win
rows = engine.sweep_delta(cfgmod.load("paper_5_3_stochastic"), [0.0, 0.1, 0.2, 0.3], seeds=range(3))
for delta, red in rows:
    print(f"delta = {delta:.1f}  reduction = {red:+.3f}")
print(f"wrote plots to {out}/")
