"""Fundamental diagram, derived constants and the two boundary flux laws.

Run: python3 demos/01_constants_and_fluxes.py
"""

# %% Reference two-to-one lane drop
import numpy as np

from lanedrop import flow_core as fc

dc = fc.reference_constants()
print(f"k_c = {dc.k_c:.6f}  k_1 = {dc.k_1:.6f}  k_2 = {dc.k_2:.6f}  k_3 = {dc.k_3:.6f} veh/m")
print(f"v_1 = {dc.v_1:.6f}  v_2 = {dc.v_2:.6f} m/s")
print(f"road capacity {dc.fd.capacity:.4f} veh/s, bottleneck C = {dc.C:.4f}, dropped {0.8 * dc.C:.4f}")

# %% Discharge jumps down once the zone density passes k_1
for k in (0.5 * dc.k_1, dc.k_1, dc.k_1 * (1 + 1e-9), 2 * dc.k_1):
    print(f"k = {k:.6f} -> g = {fc.discharge_flux(dc, k):.6f}")

# %% A speed limit caps the inflow; v_1 is the limit whose cap equals C
u = np.array([0.5, dc.v_2, dc.v_1, 10.0, dc.v_f])
print("u   ", np.round(u, 3))
print("cap ", np.round(fc.vsl_cap(dc.fd, u), 4))
print("f   ", np.round(fc.inflow_flux(dc, 2 * dc.C, u, 0.0), 4))
