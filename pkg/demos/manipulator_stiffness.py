"""
From one leg to the whole manipulator
=====================================

A single Orthoglide leg resists only two motions: translation along its bar
and a rotation. Three legs with orthogonal actuators, summed in a common tool
frame, give a full-rank, isotropic stiffness at the central posture.
Preloading the tool changes that matrix.
"""

import numpy as np

from vjmstiff import aggregate_parallel, stiffness_at_offset, stiffness_unloaded
from vjmstiff.models import orthoglide_legs

np.set_printoptions(precision=4, suppress=True, linewidth=110)

legs = orthoglide_legs()
single = stiffness_unloaded(*legs[0])
print("one leg, eigenvalues:", single.spectrum)

total = aggregate_parallel([stiffness_unloaded(chain, q0) for chain, q0 in legs])
print("three legs, diagonal:", np.diag(total.K))

# %%
# Move the tool 0.5 mm along x. The legs now carry load, the geometric
# stiffness terms switch on and the translational stiffness is no longer
# isotropic: it grows along x and shifts by a fraction of a percent elsewhere.
offset = np.array([5e-4, 0, 0, 0, 0, 0])
loaded = aggregate_parallel([stiffness_at_offset(chain, q0, offset)[1] for chain, q0 in legs])
print("loaded, diagonal:   ", np.diag(loaded.K))
print("relative change:    ", np.diag(loaded.K) / np.diag(total.K) - 1)
