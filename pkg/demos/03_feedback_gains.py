"""I and PI feedback on the link queue, and the switched linearisation that explains them.

Run: python3 demos/03_feedback_gains.py [out_dir]
"""

# %%
import sys
from pathlib import Path

from lanedrop import analysis, engine, svg
from lanedrop import config as cfgmod
from lanedrop.flow_core import reference_constants

dc = reference_constants()
out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

# %% Late-window discharge for the four gain settings
for name in ("paper_5_1_I_beta4", "paper_5_1_I_beta20", "paper_5_1_PI_a400_b20", "paper_5_1_PI_a500_b20"):
    cfg = cfgmod.load(name)
    tr = engine.run(cfg)
    m = engine.metrics(tr)
    sys_ = analysis.build_switched_system(dc, cfg.l_0, cfg.controller.alpha, cfg.controller.beta)
    lb = analysis.classify_limit_behavior(sys_, dc.k_1, 0.0)
    period = f", period {lb.period:.0f} s" if lb.period else ""
    print(f"{name:<24} late g = {m.late_mean_g / dc.C:.4f}C   switched system: {lb.kind}{period}")
    (out / f"{name}.svg").write_text(svg.timeseries_svg(tr))

# %% Pure P control keeps a congested state, any integral action removes it
print(analysis.closed_loop_equilibria(dc, 2 * dc.C, 10.0, 0.0))
print(analysis.closed_loop_equilibria(dc, 2 * dc.C, 10.0, 1.0))
print(f"wrote time-series panels to {out}/")
