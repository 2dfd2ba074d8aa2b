"""Dense eigenbasis of divergence-free matrix fields on a rectangle.

Discrete form of: find ``Phi`` with ``div Phi = 0`` and

    (grad Phi, grad Xi) + (Phi, Xi) = lambda (Phi, Xi)

for every divergence-free ``Xi``, with no boundary condition imposed (the
natural one arises from the variational form).  The columns of ``Phi`` do not
interact, so the matrix problem is ``d`` copies of one vector problem; we
solve that once and lift each vector eigenpair to ``d`` matrix eigenpairs.

Nodes sit at ``i h`` for ``i = 1..n`` with ``h = l / (n + 1)``.  Mass weights
are ``h`` inside and ``1.5 h`` at the two end nodes, which absorb the half cell
to the wall; they sum to ``l``.  A discrete field is stored as an array of
shape ``(2, 2, nx, ny)`` with ``phi[i, j]`` the entry ``Phi_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import BudgetExceeded, NullspaceDeficient

MAX_NODES = 4096
D = 2


@dataclass(frozen=True)
class RectGrid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    # periodic cross-check layout: n nodes per axis, spacing l / n, wrap-around stencils
    periodic: bool = False

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("node counts must be positive")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("side lengths must be positive")

    @property
    def hx(self) -> float:
        return self.lx / (self.nx if self.periodic else self.nx + 1)

    @property
    def hy(self) -> float:
        return self.ly / (self.ny if self.periodic else self.ny + 1)

    @property
    def nodes(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        off = 0 if self.periodic else 1
        x = (np.arange(self.nx) + off) * self.hx
        y = (np.arange(self.ny) + off) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def weights(self) -> np.ndarray:
        """Quadrature weight of each node, shape ``(nx, ny)``."""
        return np.outer(_weights_1d(self.nx, self.hx, self.periodic),
                        _weights_1d(self.ny, self.hy, self.periodic))


def _weights_1d(n: int, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return np.full(n, h)
    if n == 1:
        return np.array([2 * h])
    w = np.full(n, h)
    w[0] = w[-1] = 1.5 * h
    return w


def _stiffness_1d(n: int, h: float, periodic: bool) -> np.ndarray:
    """``sum over edges (f_{i+1} - f_i)^2 / h``: the 1-d Dirichlet form."""
    K = np.zeros((n, n))
    edges = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        edges.append((n - 1, 0))
    for a, b in edges:
        K[a, a] += 1
        K[b, b] += 1
        K[a, b] -= 1
        K[b, a] -= 1
    return K / h


def _derivative_1d(n: int, h: float, periodic: bool) -> np.ndarray:
    """Central differences; one-sided second order at the ends (first order if n == 2)."""
    Dm = np.zeros((n, n))
    if n == 1:
        return Dm
    if periodic:
        for i in range(n):
            Dm[i, (i + 1) % n] += 0.5
            Dm[i, (i - 1) % n] -= 0.5
        return Dm / h
    for i in range(1, n - 1):
        Dm[i, i + 1] = 0.5
        Dm[i, i - 1] = -0.5
    if n == 2:
        Dm[0, :] = [-1.0, 1.0]
        Dm[1, :] = [-1.0, 1.0]
    else:
        Dm[0, :3] = [-1.5, 2.0, -0.5]
        Dm[-1, -3:] = [0.5, -2.0, 1.5]
    return Dm / h


@dataclass(frozen=True)
class Assembly:
    """Operators of the vector (single-column) problem on ``grid``.

    ``A`` and ``M`` act on stacked components ``(v_1, v_2)`` of length ``2 N``;
    ``D`` maps them to the divergence at the ``N`` nodes.  The matrix problem
    uses these block-diagonally, once per column.
    """

    grid: RectGrid
    A: np.ndarray
    M: np.ndarray
    D: np.ndarray

    def matrix_operators(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Full ``(A, M, D)`` on matrix fields flattened as ``phi.reshape(-1)``.

        Entry order is ``(i, j, node)``; column ``j`` of ``Phi`` is ``(phi[0, j], phi[1, j])``.
        """
        N = self.grid.nodes
        perm = _column_permutation(N)
        A = sla.block_diag(self.A, self.A)[np.ix_(perm, perm)]
        M = sla.block_diag(self.M, self.M)[np.ix_(perm, perm)]
        Dm = sla.block_diag(self.D, self.D)[:, perm]
        return A, M, Dm


def _column_permutation(N: int) -> np.ndarray:
    # column-major stacking (j, i, node) -> row-major (i, j, node)
    idx = np.arange(4 * N).reshape(D, D, N)          # [j, i, node] in column stacking
    return np.transpose(idx, (1, 0, 2)).reshape(-1)


def assemble(grid: RectGrid) -> Assembly:
    """Stiffness-plus-mass ``A``, mass ``M`` and divergence ``D`` for one column."""
    if grid.nodes > MAX_NODES:
        raise BudgetExceeded(f"{grid.nodes} nodes exceed the dense budget of {MAX_NODES}")
    wx = _weights_1d(grid.nx, grid.hx, grid.periodic)
    wy = _weights_1d(grid.ny, grid.hy, grid.periodic)
    Kx = _stiffness_1d(grid.nx, grid.hx, grid.periodic)
    Ky = _stiffness_1d(grid.ny, grid.hy, grid.periodic)
    Ms = np.kron(np.diag(wx), np.diag(wy))
    Ks = np.kron(Kx, np.diag(wy)) + np.kron(np.diag(wx), Ky)
    Dx = np.kron(_derivative_1d(grid.nx, grid.hx, grid.periodic), np.eye(grid.ny))
    Dy = np.kron(np.eye(grid.nx), _derivative_1d(grid.ny, grid.hy, grid.periodic))
    As = Ks + Ms
    Z = np.zeros_like(As)
    A = np.block([[As, Z], [Z, As]])
    M = np.block([[Ms, Z], [Z, Ms]])
    return Assembly(grid, A, M, np.hstack([Dx, Dy]))


@dataclass(frozen=True)
class EigenPair:
    lam: float
    phi: np.ndarray                 # (2, 2, nx, ny)
    grid: RectGrid = field(repr=False)

    @property
    def lambda_(self) -> float:
        return self.lam


def inner_h(a: np.ndarray, b: np.ndarray, grid: RectGrid) -> float:
    """Discrete L2 inner product of two matrix (or vector) fields."""
    return float(np.sum(a * b * grid.weights()))


def norm_h(a: np.ndarray, grid: RectGrid) -> float:
    return float(np.sqrt(inner_h(a, a, grid)))


def column_divergence(phi: np.ndarray, grid: RectGrid) -> np.ndarray:
    """``(div Phi)_j = d_1 Phi_1j + d_2 Phi_2j`` with the assembly's stencils, shape ``(2, nx, ny)``."""
    Dx = _derivative_1d(grid.nx, grid.hx, grid.periodic)
    Dy = _derivative_1d(grid.ny, grid.hy, grid.periodic)
    out = np.empty((D,) + grid.shape)
    for j in range(D):
        out[j] = Dx @ phi[0, j] + phi[1, j] @ Dy.T
    return out


def w_inner(a: np.ndarray, b: np.ndarray, asm: Assembly) -> float:
    """``(grad a, grad b) + (a, b)`` in the discrete form used by ``A``."""
    N = asm.grid.nodes
    total = 0.0
    for j in range(D):
        va = a[:, j].reshape(D * N)
        vb = b[:, j].reshape(D * N)
        total += float(va @ asm.A @ vb)
    return total


def divergence_free_basis(asm: Assembly) -> np.ndarray:
    """Orthonormal basis (Euclidean) of ``ker D`` for one column, shape ``(2N, m)``."""
    return sla.null_space(asm.D, rcond=1e-10)


def eigensolve(grid: RectGrid, k: int, asm: Assembly | None = None) -> list[EigenPair]:
    """The ``k`` smallest eigenpairs of the matrix problem, ascending, M-orthonormal."""
    if k < 1:
        raise ValueError("k must be positive")
    asm = asm or assemble(grid)
    Z = divergence_free_basis(asm)
    if D * Z.shape[1] < k:
        raise NullspaceDeficient(f"divergence-free space has dimension {D * Z.shape[1]} < {k}")
    Ar = Z.T @ asm.A @ Z
    Mr = Z.T @ asm.M @ Z
    Ar = 0.5 * (Ar + Ar.T)
    Mr = 0.5 * (Mr + Mr.T)
    n_vec = min(Z.shape[1], -(-k // D))
    lam, W = sla.eigh(Ar, Mr, subset_by_index=(0, n_vec - 1))
    V = Z @ W                                   # M-orthonormal columns
    N = grid.nodes
    pairs = []
    for m in range(n_vec):
        v = V[:, m].reshape(D, *grid.shape)
        for j in range(D):
            phi = np.zeros((D, D) + grid.shape)
            phi[:, j] = v
            pairs.append(EigenPair(float(lam[m]), phi, grid))
    return pairs[:k]


def periodic_eigenvalues(grid: RectGrid) -> np.ndarray:
    """Closed-form spectrum of the periodic assembly, ascending, with multiplicities."""
    if not grid.periodic:
        raise ValueError("closed form applies to the periodic layout only")
    out = []
    for m1 in range(grid.nx):
        for m2 in range(grid.ny):
            lam = 1.0 + 4 / grid.hx**2 * np.sin(np.pi * m1 / grid.nx) ** 2 \
                + 4 / grid.hy**2 * np.sin(np.pi * m2 / grid.ny) ** 2
            s1 = np.sin(2 * np.pi * m1 / grid.nx) / grid.hx
            s2 = np.sin(2 * np.pi * m2 / grid.ny) / grid.hy
            dof = 2 if np.hypot(s1, s2) < 1e-12 else 1
            out.extend([lam] * (dof * D))
    return np.sort(np.array(out))


@dataclass(frozen=True)
class Projection:
    coefficients: np.ndarray
    reconstruction: np.ndarray
    residual: np.ndarray

    def residual_norm(self, grid: RectGrid) -> float:
        return norm_h(self.residual, grid)


def project_Pn(F: np.ndarray, basis: list[EigenPair]) -> Projection:
    """Coefficients ``(F, Phi^j)_h``, the partial sum and the remainder."""
    if not basis:
        raise ValueError("basis is empty")
    grid = basis[0].grid
    F = np.asarray(F, float)
    w = grid.weights()
    coef = np.array([float(np.sum(F * b.phi * w)) for b in basis])
    rec = np.tensordot(coef, np.stack([b.phi for b in basis]), axes=1)
    return Projection(coef, rec, F - rec)


def gram_matrices(basis: list[EigenPair], asm: Assembly) -> tuple[np.ndarray, np.ndarray]:
    """``(L2 Gram, W Gram)`` of the basis."""
    grid = asm.grid
    k = len(basis)
    G = np.empty((k, k))
    W = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            G[a, b] = G[b, a] = inner_h(basis[a].phi, basis[b].phi, grid)
            W[a, b] = W[b, a] = w_inner(basis[a].phi, basis[b].phi, asm)
    return G, W


def solution_operator(asm: Assembly, Z: np.ndarray | None = None) -> np.ndarray:
    """``S = (Z^T A Z)^{-1} (Z^T M Z)`` on the divergence-free subspace (one column)."""
    Z = divergence_free_basis(asm) if Z is None else Z
    return np.linalg.solve(Z.T @ asm.A @ Z, Z.T @ asm.M @ Z)
