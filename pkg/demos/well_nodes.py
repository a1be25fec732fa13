"""Nodes of infinite-well eigenstates and the quantum potential around them.

For sin(n pi x / L) the amplitude obeys R'' = -(n pi / L)^2 R away from
nodes, so Q equals the eigenvalue E_n everywhere it is defined, right up to
the node.  The report below samples Q on shells around each node.
"""

import math

from qphase import StateSpec, default_grid, node_diagnostics, realize

for n in (2, 3, 4):
    spec = StateSpec("well1d", n=n)
    rep = node_diagnostics(realize(spec, default_grid(spec)))
    E = n**2 * math.pi**2 / 2
    print(f"n={n}: E_n = {E:.6f}")
    for node in rep.nodes:
        shells = ", ".join(f"{s[2]:.6f}" for s in node.shells[:3])
        print(f"  node at x = {node.position:.6f} (= {node.position * n:.4f} L/{n})  Q on shells: {shells} ...  -> {node.behaviour}")
