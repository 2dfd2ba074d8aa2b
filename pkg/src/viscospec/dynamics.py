"""Right-hand sides of the regularised viscoelastic system on the torus.

    du/dt = P[ -div(u (x) u) + lap u + div(F F^T) ]
    dF/dt = Q[ -(u . grad) F + (grad u) F + eps lap F ]

``P`` is the Leray projector and ``Q`` its column-wise version, which stands
in for the multiplier enforcing ``div F = 0``.  Every quadratic product is
formed on the grid and dealiased before it is differentiated or returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch
from .spectral import (Grid, TensorField, VectorField, div_hat, fft_inverse, grad_hat,
                       gradient_norm_sq, project_hat)


@dataclass(frozen=True)
class SimState:
    """Time, velocity, deformation gradient and regularisation parameter.

    The spectral coefficients of ``u`` and ``F`` are the Galerkin coordinates.
    """

    t: float
    u: VectorField
    F: TensorField
    eps: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.F.grid:
            raise GridMismatch("u and F must share one grid")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid, eps: float = 0.0, t: float = 0.0) -> "SimState":
        return cls(t, VectorField.zeros(grid), TensorField.zeros(grid), eps)

    def projected(self) -> "SimState":
        g = self.grid
        return SimState(self.t,
                        VectorField._wrap(g, project_hat(self.u.hat, g), True),
                        TensorField._wrap(g, project_hat(self.F.hat, g), True),
                        self.eps)


@dataclass(frozen=True)
class RhsEval:
    du_dt: VectorField
    dF_dt: TensorField
    exchange: float


def _rhs_arrays(grid, uhat: np.ndarray, Fhat: np.ndarray, eps: float,
                conservative: bool = False, with_exchange: bool = False):
    """Spectral time derivatives of ``(u, F)``; optionally the exchange term too.

    ``grid`` is a :class:`Grid` (full spectra) or its ``half`` layout.  All
    inverse transforms go through one batched call, likewise the forward ones.
    """
    d = grid.d
    sp = uhat.shape[1:]
    gu_hat = grad_hat(uhat, grid)
    parts = [uhat, Fhat.reshape((d * d,) + sp), gu_hat.reshape((d * d,) + sp)]
    if not conservative:
        parts.append(grad_hat(Fhat, grid).reshape((d**3,) + sp))
    phys = grid.inverse(np.concatenate(parts))
    u = phys[:d]
    F = phys[d : d + d * d].reshape((d, d) + phys.shape[1:])
    gu = phys[d + d * d : d + 2 * d * d].reshape((d, d) + phys.shape[1:])  # gu[i, k] = d_k u_i
    mask = grid.dealias_mask

    uu = np.einsum("i...,j...->ij...", u, u)
    FFt = np.einsum("ik...,jk...->ij...", F, F)
    stretch = np.einsum("ik...,kj...->ij...", gu, F)
    if conservative:
        uF = np.einsum("i...,jk...->ijk...", u, F)
        prods = np.concatenate([(FFt - uu).reshape((d * d,) + u.shape[1:]),
                                stretch.reshape((d * d,) + u.shape[1:]),
                                uF.reshape((d**3,) + u.shape[1:])])
    else:
        gF = phys[d + 2 * d * d :].reshape((d, d, d) + phys.shape[1:])  # gF[i, j, k] = d_k F_ij
        adv = np.einsum("k...,ijk...->ij...", u, gF)
        prods = np.concatenate([(FFt - uu).reshape((d * d,) + u.shape[1:]),
                                (stretch - adv).reshape((d * d,) + u.shape[1:])])
    ph = grid.forward(prods) * mask
    stress_hat = ph[: d * d].reshape((d, d) + sp)
    du = project_hat(div_hat(stress_hat, grid) - grid.k2 * uhat, grid)

    dF = ph[d * d : 2 * d * d].reshape((d, d) + sp)
    if conservative:
        dF = dF - div_hat(ph[2 * d * d :].reshape((d, d, d) + sp), grid)
    if eps:
        dF = dF - eps * grid.k2 * Fhat
    dF = project_hat(dF, grid)

    if with_exchange:
        ex = grid.cell_volume * float(np.sum(FFt * gu))
        return du, dF, ex
    return du, dF


def rhs(s: SimState, conservative: bool = False) -> RhsEval:
    du, dF, ex = _rhs_arrays(s.grid, s.u.hat, s.F.hat, s.eps, conservative, with_exchange=True)
    return RhsEval(VectorField._wrap(s.grid, du, True), TensorField._wrap(s.grid, dF, True), ex)


def momentum_rhs(s: SimState) -> VectorField:
    return rhs(s).du_dt


def deformation_rhs(s: SimState, conservative: bool = False) -> TensorField:
    """``Q[-u.grad F + grad u F + eps lap F]``.

    ``conservative=True`` uses ``-div(u (x) F)`` for transport instead; the two
    agree in the continuum for solenoidal ``u`` but not exactly on the grid.
    """
    return rhs(s, conservative).dF_dt


def exchange_term(s: SimState) -> float:
    """``(F F^T, grad u)``, the power moved between kinetic and elastic energy."""
    g = s.grid
    F = s.F.phys
    gu = fft_inverse(grad_hat(s.u.hat, g), g)
    FFt = np.einsum("ik...,jk...->ij...", F, F)
    return g.cell_volume * float(np.sum(FFt * gu))


def energy_productions(s: SimState, ev: RhsEval | None = None) -> tuple[float, float]:
    """Energy production of each equation with its own dissipation added back.

    Returns ``((du/dt, u) + ||grad u||^2, (dF/dt, F) + eps ||grad F||^2)``; these
    equal ``-exchange`` and ``+exchange`` for band-limited data.
    """
    ev = ev if ev is not None else rhs(s)
    pu = ev.du_dt.inner(s.u) + gradient_norm_sq(s.u)
    pF = ev.dF_dt.inner(s.F) + s.eps * gradient_norm_sq(s.F)
    return pu, pF


def stretching_pairing(w: VectorField, G: TensorField, Xi: TensorField) -> float:
    """``int (grad w) G . Xi``."""
    g = w.grid
    gw = fft_inverse(grad_hat(w.hat, g), g)
    return g.cell_volume * float(np.sum(np.einsum("ik...,kj...,ij...->...", gw, G.phys, Xi.phys)))


def transport_pairing(w: VectorField, G: TensorField, Xi: TensorField) -> float:
    """``int (w (x) G^T) . grad Xi`` with ``(grad Xi)[i, j, k] = d_k Xi_ij``."""
    g = w.grid
    gX = fft_inverse(grad_hat(Xi.hat, g), g)
    return g.cell_volume * float(np.sum(np.einsum("i...,kj...,ijk...->...", w.phys, G.phys, gX)))
