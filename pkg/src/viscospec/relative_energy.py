"""Relative energy between two trajectories and the Gronwall-type envelope check."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .diagnostics import cumulative
from .dynamics import SimState
from .errors import GridMismatch, InitialMismatch, UnresolvedWarning
from .integrator import Trajectory
from .spectral import (Field, Grid, _resize_axis, fft_inverse, grad_hat, gradient_norm_sq,
                       transfer)

TAIL_TOL = 1e-8


def _common_grid(a: Grid, b: Grid) -> Grid:
    if a.d != b.d or not np.isclose(a.length, b.length, rtol=0, atol=1e-14):
        raise GridMismatch(f"cannot compare states on {a} and {b}")
    lo, hi = sorted((a.n, b.n))
    if hi % lo:
        raise GridMismatch(f"mode counts {a.n} and {b.n} are not nested")
    return a if a.n >= b.n else b


def _on(s: SimState, grid: Grid) -> SimState:
    if s.grid == grid:
        return s
    return SimState(s.t, transfer(s.u, grid), transfer(s.F, grid), s.eps)


def align(s: SimState, s_ref: SimState) -> tuple[SimState, SimState]:
    """Both states on the finer of their two grids (prolongation is exact)."""
    g = _common_grid(s.grid, s_ref.grid)
    return _on(s, g), _on(s_ref, g)


def rel_energy(s: SimState, s_ref: SimState, visc_accum_diff: float = 0.0) -> float:
    """``||u - u~||^2/2 + ||F - F~||^2/2 + visc_accum_diff``.

    ``visc_accum_diff`` is the caller's running value of ``int_0^t ||grad(u - u~)||^2``.
    """
    a, b = align(s, s_ref)
    du = a.u - b.u
    dF = a.F - b.F
    return 0.5 * du.norm() ** 2 + 0.5 * dF.norm() ** 2 + visc_accum_diff


def rel_energy_expanded(s: SimState, s_ref: SimState, visc: float = 0.0, visc_ref: float = 0.0,
                        visc_cross: float = 0.0) -> float:
    """Same quantity assembled as ``E + E~ - (u, u~) - (F, F~) - 2 int (grad u, grad u~)``.

    ``visc``, ``visc_ref`` and ``visc_cross`` are the time integrals of
    ``||grad u||^2``, ``||grad u~||^2`` and ``(grad u, grad u~)``.
    """
    a, b = align(s, s_ref)
    e = 0.5 * a.u.norm() ** 2 + 0.5 * a.F.norm() ** 2 + visc
    e_ref = 0.5 * b.u.norm() ** 2 + 0.5 * b.F.norm() ** 2 + visc_ref
    return e + e_ref - a.u.inner(b.u) - a.F.inner(b.F) - 2.0 * visc_cross


def spectral_tail(f: Field) -> float:
    """Fraction of the norm carried by modes outside the dealiased band."""
    nrm = f.norm()
    if nrm == 0:
        return 0.0
    outside = f.hat * (~f.grid.dealias_mask)
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(outside) ** 2)) / nrm)


def _padded_values(hat: np.ndarray, grid: Grid, factor: int) -> np.ndarray:
    fine = Grid(grid.d, grid.n * factor, grid.length)
    lead = hat.ndim - grid.d
    for a in range(grid.d):
        hat = _resize_axis(hat, lead + a, fine.n)
    return fft_inverse(hat, fine)


def sup_norms(s: SimState, oversample: int = 4) -> tuple[float, float, float]:
    """``(max|grad u|, max|grad F|, max|F|)`` with pointwise Frobenius norms.

    The fields are evaluated on a grid refined ``oversample`` times by zero
    padding, so the maxima are those of the trigonometric polynomials to high
    accuracy rather than of their node values.
    """
    for f in (s.u, s.F):
        tail = spectral_tail(f)
        if tail > TAIL_TOL:
            warnings.warn(f"spectral tail {tail:.2e} of norm; sup norms may be unreliable",
                          UnresolvedWarning, stacklevel=2)
    g = s.grid
    gu = _padded_values(grad_hat(s.u.hat, g), g, oversample)
    gF = _padded_values(grad_hat(s.F.hat, g), g, oversample)
    F = _padded_values(s.F.hat, g, oversample)
    m = g.d
    return (float(np.sqrt(np.max(np.sum(gu.reshape((m * m,) + gu.shape[2:]) ** 2, axis=0)))),
            float(np.sqrt(np.max(np.sum(gF.reshape((m**3,) + gF.shape[3:]) ** 2, axis=0)))),
            float(np.sqrt(np.max(np.sum(F.reshape((m * m,) + F.shape[2:]) ** 2, axis=0)))))


def gronwall_coefficient(s: SimState, oversample: int = 4) -> float:
    a, b, c = sup_norms(s, oversample)
    return a + b + c * c


@dataclass(frozen=True)
class RelEnergySeries:
    times: np.ndarray
    rel_energy: np.ndarray
    coeff: np.ndarray
    coeff_integral: np.ndarray      # int_0^t coeff

    @property
    def rel0(self) -> float:
        return float(self.rel_energy[0])

    def envelope(self, c: float) -> np.ndarray:
        return self.rel0 * np.exp(c * self.coeff_integral)

    def fit_c(self, tol: float = 0.0) -> float:
        """Minimal ``c >= 0`` with ``rel_energy <= envelope(c) + tol`` at every time."""
        need = self.rel_energy - tol
        over = need > self.rel0
        if not np.any(over):
            return 0.0
        if self.rel0 <= 0:
            return float("inf")
        with np.errstate(divide="ignore"):
            ratio = np.log(need[over] / self.rel0) / self.coeff_integral[over]
        # nudge up so the binding point is not lost to rounding in exp/log
        return float(np.max(ratio)) * (1 + 1e-9)


def relative_energy_series(traj: Trajectory, traj_ref: Trajectory, oversample: int = 4,
                           max_coeff_evals: int = 128) -> RelEnergySeries:
    """Relative energy of ``traj`` with respect to ``traj_ref`` at their shared times.

    The coarser of the two is prolonged onto the finer grid.  The gradient-gap
    integral uses a cubic-spline rule over the stored states.  The Gronwall
    coefficient needs oversampled sup norms, so it is evaluated on at most
    ``max_coeff_evals`` evenly strided states (always including both ends) and
    linearly interpolated in between.
    """
    ta, tb = traj.times, traj_ref.times
    if len(ta) != len(tb) or not np.allclose(ta, tb, rtol=0, atol=1e-12):
        raise ValueError("trajectories must share snapshot times (use a fixed dt)")
    g = _common_grid(traj.grid, traj_ref.grid)
    l2 = np.empty(len(ta))
    grad_gap = np.empty(len(ta))
    for j, (s, r) in enumerate(zip(traj.states, traj_ref.states)):
        a, b = _on(s, g), _on(r, g)
        du = a.u - b.u
        l2[j] = 0.5 * du.norm() ** 2 + 0.5 * (a.F - b.F).norm() ** 2
        grad_gap[j] = gradient_norm_sq(du)
    stride = max(1, -(-(len(ta) - 1) // max(1, max_coeff_evals - 1)))
    idx = np.unique(np.r_[np.arange(0, len(ta), stride), len(ta) - 1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnresolvedWarning)
        sub = np.array([gronwall_coefficient(traj_ref.states[i], oversample) for i in idx])
    coeff = np.interp(ta, ta[idx], sub)
    rel = l2 + cumulative(grad_gap, ta)
    return RelEnergySeries(ta, rel, coeff, np.interp(ta, ta[idx], cumulative(sub, ta[idx])))


@dataclass(frozen=True)
class UniquenessReport:
    passed: bool
    series: RelEnergySeries
    c: float
    fitted: bool
    rel0: float
    sup_rel: float
    kappa: float                # largest envelope value plus tol
    envelope_violation: float   # max(rel - envelope - tol), <= 0 when the envelope holds
    tol: float


def verify_uniqueness(traj: Trajectory, traj_ref: Trajectory, c: float | None = 1.0,
                      tol: float = 1e-12, tol0: float = 1e-2, oversample: int = 4) -> UniquenessReport:
    """Check ``rel_energy(t) <= rel_energy(0) exp(c int_0^t coeff) + tol``.

    ``c=None`` fits the smallest admissible constant instead of using a given one.  Raises
    :class:`InitialMismatch` when the initial relative energy exceeds ``tol0``.
    """
    series = relative_energy_series(traj, traj_ref, oversample)
    if series.rel0 > tol0:
        raise InitialMismatch(f"initial relative energy {series.rel0:.3e} exceeds {tol0:.3e}")
    fitted = c is None
    if fitted:
        c = series.fit_c(tol)
    env = series.envelope(c) if np.isfinite(c) else np.full_like(series.rel_energy, np.inf)
    if series.rel0 == 0 and not np.isfinite(c):
        env = np.zeros_like(series.rel_energy)
    viol = float(np.max(series.rel_energy - env - tol))
    sup_rel = float(np.max(series.rel_energy))
    kappa = float(np.max(env) + tol) if np.all(np.isfinite(env)) else float("inf")
    passed = viol <= 0 and sup_rel <= kappa
    return UniquenessReport(passed, series, float(c), fitted, series.rel0, sup_rel, kappa,
                            viol, tol)
