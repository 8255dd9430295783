"""
Orthoglide leg under growing tension
====================================

One leg of the Orthoglide is pulled along its actuator axis from 0 to 4 mm in
0.01 mm steps at each of the four reference postures. The tangent stiffness
collapses once the leg buckles; the report lists the stiffness before and
after the critical point.

The leg geometry is partly assumed (bar length, drive stiffness, orientation
of the foot compliance frame); see ``OrthoglideGeometry``.
"""

import numpy as np

from vjmstiff import AXIAL, detect_buckling, displacement_sweep
from vjmstiff.models import POSTURES, orthoglide_chain

print(f"{'posture':>7} {'K0':>8} {'K1':>8} {'F_cr':>7} {'d_cr':>6} {'K2':>8} {'K1/K2':>7}  method")
print(f"{'':>7} {'N/mm':>8} {'N/mm':>8} {'N':>7} {'mm':>6} {'N/mm':>8}")
curves = {}
for posture in sorted(POSTURES):
    chain, q0 = orthoglide_chain(posture)
    curve = displacement_sweep(chain, q0, AXIAL, 4e-3, 1e-5)
    r = detect_buckling(curve)
    curves[posture] = curve
    print(f"{posture:>7} {r.K0 / 1e3:>8.0f} {r.K1 / 1e3:>8.0f} {r.F_cr:>7.0f} {1e3 * r.delta_cr:>6.3f} "
          f"{r.K2 / 1e3:>8.2f} {r.K1 / r.K2:>7.0f}  {r.method}")

# %%
# Posture B has no sharp bifurcation: its knee is smooth and the stiffness
# only falls by a factor of about four across it.

# %%
# Plot the curves when matplotlib is around.
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, ax = plt.subplots()
    for posture, curve in curves.items():
        ax.plot(1e3 * curve.deltas, curve.forces, label=f"posture {posture}")
    ax.set_xlabel("displacement [mm]")
    ax.set_ylabel("force [N]")
    ax.legend()
    fig.savefig("orthoglide_sweeps.png", dpi=120)
    print("\nwrote orthoglide_sweeps.png")
