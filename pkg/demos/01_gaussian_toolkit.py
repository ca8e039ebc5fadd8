"""
Gaussian states in shot-noise units
===================================

A tour of the covariance-matrix toolkit: build states, mix them on beam
splitters, read off symplectic spectra and entropies, and condition on
homodyne and heterodyne outcomes.
"""

import numpy as np

from twoway_cvqkd import gaussian_core as gc

np.set_printoptions(precision=4, suppress=True)

# A two-mode squeezed vacuum with variance 20 per mode is pure: both
# symplectic eigenvalues are 1 and its entropy vanishes.
g = gc.tmsv(20.0, labels=("A", "B"))
print(g.matrix)
print("spectrum", gc.symplectic_eigenvalues(g))
print("entropy ", gc.von_neumann_entropy(g))

# Each mode on its own is thermal, so half of the pair carries G(20) bits.
print("G(20) =", gc.entropy_g(20.0))

# A beam splitter of transmittance 0.8 mixes a thermal state with vacuum.
mixed = gc.apply_symplectic(gc.beam_splitter(0.8, 0, 1, 2), gc.direct_sum(gc.thermal(20.0), gc.vacuum()))
print("after the splitter:", np.diag(mixed.matrix))

# Measuring x on A squeezes x on B down to 1/V and leaves p alone.
cond = gc.condition_on_quadratures(g, [(0, "x")])
print("B after homodyne on A:", np.diag(cond.matrix), "expected", [1 / 20, 20])

# Heterodyne is a balanced split with vacuum followed by two homodynes.
split = gc.heterodyne_split(g, 0)
print("labels after the split:", split.labels)
het = gc.heterodyne_condition(g, 0)
a, c, b = g.mode_block(0), g.mode_block(1, 0), g.mode_block(1)
print("heterodyne result    ", np.diag(het.matrix))
print("closed form          ", np.diag(b - c @ np.linalg.inv(a + np.eye(2)) @ c.T))

# The spectrum is invariant under any symplectic map and any mode reordering.
rng = np.random.default_rng(1)
state = gc.direct_sum(gc.thermal(3.0), gc.thermal(7.0), gc.vacuum())
s = gc.squeezer(0.4, 0, 3) @ gc.beam_splitter(0.3, 0, 2, 3) @ gc.phase_rotation(1.1, 1, 3)
moved = gc.permute_modes(gc.apply_symplectic(s, state), rng.permutation(3))
print("spectrum before", gc.symplectic_eigenvalues(state))
print("spectrum after ", gc.symplectic_eigenvalues(moved))
