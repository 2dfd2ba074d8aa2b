"""Energy-inequality checks, the vanishing-regularisation defect study and
weak-form residuals.

Everything here is a finite-resolution proxy: the defect is measured against
the smallest-eps run, and the corrector norm is the L1 norm of a matrix field.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .dynamics import SimState
from .errors import LedgerMissing, NonFinite, TestFieldNotDivergenceFree
from .integrator import IntegratorConfig, Trajectory, cfl_dt, run
from .ledger import CSV_COLUMNS, LedgerRow, initial_row, inject_energy, ledger_update  # noqa: F401
from .spectral import (Grid, TensorField, VectorField, fft_inverse, grad_hat,
                       gradient_norm_sq, max_divergence)

THREADS_ENV = "VISCOSPEC_THREADS"


def thread_count() -> int:
    """Worker count for parameter sweeps; ``VISCOSPEC_THREADS`` overrides the CPU count."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def cumulative(values, times) -> np.ndarray:
    """Running time integral from ``times[0]`` along the last axis.

    Uses the antiderivative of a not-a-knot cubic spline (fourth order) when
    there are at least four points, Simpson's rule for three, trapezoid for two.
    """
    values = np.asarray(values, float)
    times = np.asarray(times, float)
    if len(times) < 2:
        return np.zeros_like(values)
    if len(times) >= 4:
        return CubicSpline(times, values, axis=-1).antiderivative()(times)
    if len(times) == 2:
        inc = 0.5 * np.diff(times) * (values[..., 1:] + values[..., :-1])
    else:
        inc = cumulative_simpson(values, x=times, axis=-1)
    return np.concatenate([np.zeros(values.shape[:-1] + (1,)), inc], axis=-1)


# -- energy inequality ------------------------------------------------------------

@dataclass(frozen=True)
class EnergyCheck:
    passed: bool
    worst_violation: float      # max over t of lhs(t) - E(0); <= tol means pass
    times: np.ndarray
    slack: np.ndarray           # E(0) - lhs(t), the discrete stand-in for the defect
    tol: float


def verify_energy_inequality(traj: Trajectory, tol: float = 1e-8) -> EnergyCheck:
    """Check ``E(t) + int_0^t ||grad u||^2 <= E(0) + tol`` at every ledger row.

    ``E = (||u||^2 + ||F||^2) / 2``.  The regularisation dissipation is left out
    of the left side, so for eps > 0 it shows up in the slack.
    """
    rows = getattr(traj, "ledger", None)
    if not rows:
        raise LedgerMissing("trajectory carries no energy ledger")
    e0 = rows[0].initial_total
    t = np.array([r.t for r in rows])
    lhs = np.array([r.kinetic + r.elastic + r.visc_accum for r in rows])
    slack = e0 - lhs
    worst = float(np.max(-slack))
    return EnergyCheck(worst <= tol, worst, t, slack, tol)


def balance_violation(traj: Trajectory) -> float:
    """Largest positive balance residual (energy produced) over the run."""
    if not traj.ledger:
        raise LedgerMissing("trajectory carries no energy ledger")
    return max(0.0, max(r.balance_residual for r in traj.ledger))


def exchange_cancellation(traj: Trajectory) -> float:
    """Largest per-step ``|production_u + production_F|``."""
    if not traj.ledger:
        raise LedgerMissing("trajectory carries no energy ledger")
    return max(abs(r.production_u + r.production_F) for r in traj.ledger)


def max_divergence_drift(traj: Trajectory) -> float:
    """Largest ``max|div| / norm`` over stored states, for ``u`` and ``F``."""
    worst = 0.0
    for s in traj.states:
        for f in (s.u, s.F):
            nrm = f.norm()
            if nrm > 0:
                worst = max(worst, max_divergence(f) / nrm)
    return worst


# -- defect study -----------------------------------------------------------------

@dataclass
class DefectReport:
    eps_values: np.ndarray
    times: np.ndarray
    D_proxy: np.ndarray             # (n_eps, n_t), raw sign
    corrector_proxy: np.ndarray     # (n_eps, n_t)
    corrector_integral: np.ndarray  # int_0^t corrector_proxy
    defect_integral: np.ndarray     # int_0^t max(D_proxy, 0)
    fitted_c: np.ndarray            # per eps; nan for runs identical to the reference
    reg_accum: np.ndarray           # eps int_0^T ||grad F||^2 per run
    dominated: np.ndarray           # per eps, bool
    tol: float
    trajectories: list[Trajectory]

    @property
    def reference(self) -> Trajectory:
        return self.trajectories[-1]

    def c_spread(self) -> float:
        """``max/min - 1`` of the finite fitted constants (0 with fewer than two)."""
        c = self.fitted_c[np.isfinite(self.fitted_c) & (self.fitted_c > 0)]
        if len(c) < 2:
            return 0.0
        return float(c.max() / c.min() - 1.0)

    def rows(self):
        for i, e in enumerate(self.eps_values):
            for j, t in enumerate(self.times):
                yield (e, t, self.D_proxy[i, j], self.corrector_proxy[i, j], self.reg_accum[i])


def _corrector(s: SimState, ref: SimState) -> float:
    F, R = s.F.phys, ref.F.phys
    diff = np.einsum("ik...,jk...->ij...", R, R) - np.einsum("ik...,jk...->ij...", F, F)
    pointwise = np.sqrt(np.sum(diff**2, axis=(0, 1)))
    return s.grid.cell_volume * float(np.sum(pointwise))


def fit_domination(lhs: np.ndarray, rhs: np.ndarray, tol: float) -> float:
    """Smallest ``c >= 0`` with ``lhs <= c rhs + tol`` pointwise (inf if impossible)."""
    need = lhs - tol
    if np.all(need <= 0):
        return 0.0
    bad = (need > 0) & (rhs <= 0)
    if np.any(bad):
        return float("inf")
    pos = need > 0
    return float(np.max(need[pos] / rhs[pos]))


def defect_study(scenario, eps_values, grid: Grid | None = None,
                 cfg: IntegratorConfig | None = None, *, tol: float = 1e-10,
                 workers: int | None = None) -> DefectReport:
    """Run the scenario once per eps and compare against the smallest-eps run.

    All runs share the initial data and one fixed step, taken as the smallest
    stable step over the eps values, so their snapshots fall on the same times.
    """
    from .scenarios import make_initial

    eps_values = np.asarray(eps_values, float)
    if eps_values.ndim != 1 or len(eps_values) < 1:
        raise ValueError("eps_values must be a non-empty 1-d sequence")
    if np.any(np.diff(eps_values) > 0) or np.any(eps_values < 0):
        raise ValueError("eps_values must be non-negative and non-increasing")
    if grid is not None:
        scenario = scenario.with_(d=grid.d, n=grid.n, length=grid.length)
    cfg = cfg or scenario.config
    s0 = make_initial(scenario)
    starts = [SimState(0.0, s0.u, s0.F, float(e)) for e in eps_values]
    dt = cfg.dt
    if cfg.adaptive:
        dt = min(cfl_dt(s, cfg) for s in starts)
    fixed = replace(cfg, dt=dt, adaptive=False)

    def one(s):
        try:
            return run(s, fixed)
        except NonFinite as exc:
            raise NonFinite(str(exc).split(" (")[0], t=exc.t, eps=s.eps) from exc

    n_workers = workers or thread_count()
    if n_workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=min(n_workers, len(starts))) as pool:
            trajs = list(pool.map(one, starts))
    else:
        trajs = [one(s) for s in starts]
    return defect_report(trajs, tol=tol)


def defect_report(trajs: list[Trajectory], tol: float = 1e-10) -> DefectReport:
    """Defect and corrector proxies of each trajectory against the last one."""
    ref = trajs[-1]
    times = ref.times
    for tr in trajs:
        if len(tr.times) != len(times) or not np.allclose(tr.times, times, rtol=0, atol=1e-12):
            raise ValueError("trajectories must share snapshot times")
    ref_visc = np.array([r.visc_accum for r in ref.snapshot_rows()])
    D, C = [], []
    for tr in trajs:
        visc = np.array([r.visc_accum for r in tr.snapshot_rows()])
        el_gap = np.array([r.F.norm() ** 2 - s.F.norm() ** 2 for s, r in zip(tr.states, ref.states)])
        D.append(el_gap + (ref_visc - visc))
        C.append([_corrector(s, r) for s, r in zip(tr.states, ref.states)])
    D = np.array(D)
    C = np.array(C)
    ci = cumulative(C, times)
    di = cumulative(np.maximum(D, 0.0), times)
    cs = []
    for i in range(len(trajs)):
        if np.all(C[i] == 0) and np.all(D[i] == 0):
            cs.append(np.nan)
        else:
            cs.append(fit_domination(ci[i], di[i], tol))
    cs = np.array(cs)
    dominated = np.array([np.isnan(c) or np.isfinite(c) for c in cs])
    reg = np.array([tr.ledger[-1].reg_accum for tr in trajs])
    eps = np.array([tr.eps for tr in trajs])
    return DefectReport(eps, times, D, C, ci, di, cs, reg, dominated, tol, trajs)


def lsc_gap(coarse: Trajectory, fine: Trajectory) -> np.ndarray:
    """``||F_coarse||^2 - ||F_fine||^2`` at matched snapshot times."""
    if not np.allclose(coarse.times, fine.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories must share snapshot times")
    return np.array([a.F.norm() ** 2 - b.F.norm() ** 2 for a, b in zip(coarse.states, fine.states)])


# -- weak forms -------------------------------------------------------------------

@dataclass(frozen=True)
class WeakFormResidual:
    times: np.ndarray
    momentum: np.ndarray        # (n_tests, n_t)
    deformation: np.ndarray     # (n_tests, n_t)

    def worst(self) -> float:
        return float(max(np.max(np.abs(self.momentum)), np.max(np.abs(self.deformation))))

    def flagged(self, tol: float = 1e-8) -> bool:
        return self.worst() > tol


def _check_test_field(f, tol):
    nrm = f.norm()
    if nrm > 0 and max_divergence(f) > tol * nrm:
        raise TestFieldNotDivergenceFree(f"test field divergence {max_divergence(f):.3g} "
                                         f"exceeds {tol:g} x norm")


def _weak_integrands(s: SimState, psi: VectorField, Psi: TensorField):
    g = s.grid
    u, F = s.u.phys, s.F.phys
    gpsi = fft_inverse(grad_hat(psi.hat, g), g)       # d_k psi_i
    gPsi = fft_inverse(grad_hat(Psi.hat, g), g)       # d_k Psi_ij
    gu = fft_inverse(grad_hat(s.u.hat, g), g)
    cv = g.cell_volume
    A = np.einsum("i...,j...->ij...", u, u) - np.einsum("ik...,jk...->ij...", F, F)
    grads = g.volume * float(np.sum(g.k2 * (s.u.hat * np.conj(psi.hat)).real))
    mom = cv * float(np.sum(A * np.swapaxes(gpsi, 0, 1))) - grads
    transport = cv * float(np.sum(np.einsum("k...,ij...,ijk...->...", u, F, gPsi)))
    stretch = cv * float(np.sum(np.einsum("ik...,kj...,ij...->...", gu, F, Psi.phys)))
    reg = s.eps * g.volume * float(np.sum(g.k2 * (s.F.hat * np.conj(Psi.hat)).real))
    return mom, transport + stretch - reg


def weak_form_residual(traj: Trajectory, test_fields, div_tol: float = 1e-10) -> WeakFormResidual:
    """Residuals of the momentum and deformation weak identities on ``[0, t]``.

    ``test_fields`` is a sequence of ``(psi, Psi)`` pairs of time-independent,
    divergence-free fields on the trajectory's grid.  Time integrals use
    a cubic-spline rule over the stored states, so store every step for sharp values.
    """
    pairs = list(test_fields)
    for psi, Psi in pairs:
        _check_test_field(psi, div_tol)
        _check_test_field(Psi, div_tol)
    states = traj.states
    times = traj.times
    s0 = states[0]
    mom = np.empty((len(pairs), len(states)))
    dfm = np.empty_like(mom)
    for a, (psi, Psi) in enumerate(pairs):
        im = np.empty(len(states))
        idf = np.empty(len(states))
        for j, s in enumerate(states):
            im[j], idf[j] = _weak_integrands(s, psi, Psi)
        cm = cumulative(im, times)
        cd = cumulative(idf, times)
        for j, s in enumerate(states):
            mom[a, j] = s.u.inner(psi) - s0.u.inner(psi) - cm[j]
            dfm[a, j] = s.F.inner(Psi) - s0.F.inner(Psi) - cd[j]
    return WeakFormResidual(times, mom, dfm)


__all__ = [
    "CSV_COLUMNS", "LedgerRow", "initial_row", "ledger_update", "inject_energy",
    "EnergyCheck", "verify_energy_inequality", "balance_violation", "exchange_cancellation",
    "max_divergence_drift", "DefectReport", "defect_study", "defect_report", "fit_domination",
    "lsc_gap", "WeakFormResidual", "weak_form_residual", "thread_count", "cumulative",
]
