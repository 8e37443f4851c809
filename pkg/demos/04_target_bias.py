"""Aiming the controller slightly off k_1: below is safe, above brings the drop back.

Run: python3 demos/04_target_bias.py [out_dir]
"""

# %%
import sys
from pathlib import Path

import numpy as np

from lanedrop import engine, svg
from lanedrop import config as cfgmod

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)
base = cfgmod.load("paper_5_2_xi_plus10")
C = base.bottleneck.C

# %% Sweep xi over [-0.2, 0.2]; g jumps down just above zero
xis = np.round(np.arange(-0.2, 0.2001, 0.01), 2)
rows = engine.sweep_xi(base, xis)
for xi, g in rows[::4]:
    print(f"xi = {xi:+.2f}  late mean g = {g / C:.4f}C")
print(f"jump at 0+: {(rows[20][1] - rows[21][1]) / C:.3f}C")
(out / "xi_sweep.svg").write_text(svg.curve_svg(xis, [g / C for _, g in rows], "target bias", "xi", "g / C"))
