"""Quantum potential and Fermi-set capacity of the 3D oscillator ground state.

The ground state is real, so its Bohm momentum vanishes and all of its
energy sits in V + Q.  Its Fermi set is a 6-ball whose symplectic capacity
is 3h/2, three times the area of a quantum blob.
"""

import math

import numpy as np

from qphase import (
    Potential,
    StateSpec,
    build_fermi_hamiltonian,
    capacity_quadratic,
    core_mask,
    default_grid,
    eval_fermi,
    fermi_set_quadratic,
    quantum_blob_contained,
    quantum_potential,
    realize,
    stationary_identity_check,
)

spec = StateSpec("coherent3d")
wf = realize(spec, default_grid(spec))
Q = quantum_potential(wf)
r2 = wf.grid.radius_squared()
sel = core_mask(wf) & ~Q.mask
print(f"Q at the origin:             {Q.values[32, 32, 32]:.10f}  (closed form 1.5)")
print(f"max |Q - (3/2 - r^2/2)|:     {np.max(np.abs(Q.values[sel] - (1.5 - r2[sel] / 2))):.2e}")
print(f"max |V + Q - E|:             {stationary_identity_check(wf, Potential('harmonic'), 1.5):.2e}")

fh = build_fermi_hamiltonian(wf)
print(f"H_F(0, 0) = {eval_fermi(fh, [0, 0, 0], [0, 0, 0]):+.6f},  H_F(0, (1,1,1)) = {eval_fermi(fh, [0, 0, 0], [1, 1, 1]):+.2e}")

form = fermi_set_quadratic(spec).form
c = capacity_quadratic(form)
print(f"capacity of the Fermi set:   {c:.12f} = {c / (2 * math.pi):.6f} h")
print(f"quantum-blob ratio c/(h/2):  {quantum_blob_contained(form).ratio:.6f}")
