"""
A divergence-free eigenbasis on the unit square
===============================================

Matrix fields with divergence-free columns, no boundary condition imposed.
The four constant matrices come first at eigenvalue 1.  The next eigenvalue
approaches 1 + pi^2 (the cosine cos(pi x) in one column) as the mesh is refined.
"""

import numpy as np

from viscospec.neumann_basis import RectGrid, assemble, eigensolve, gram_matrices, project_Pn

for nx in (8, 16, 32):
    basis = eigensolve(RectGrid(nx, nx), 8)
    print(f"nx={nx:2d}:", " ".join(f"{p.lam:.5f}" for p in basis))
print("continuum:", 1 + np.pi**2)

g = RectGrid(16, 16)
asm = assemble(g)
basis = eigensolve(g, 40, asm)
G, W = gram_matrices(basis, asm)
print("L2 Gram error:", np.abs(G - np.eye(40)).max())
print("W  Gram error:", np.abs(W - np.diag([p.lam for p in basis])).max())

# Partial sums of a smooth divergence-free field: Bessel's inequality at work.
F = sum(np.sin(j) * p.phi / p.lam for j, p in enumerate(basis))
for k in (4, 8, 16, 24, 40):
    print(f"k={k:2d} residual {project_Pn(F, basis[:k]).residual_norm(g):.3e}")
