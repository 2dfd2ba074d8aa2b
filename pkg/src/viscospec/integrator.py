"""Explicit RK4 time integration of the semi-discrete system."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SimState, _rhs_arrays
from .errors import NonFinite
from .ledger import LedgerRow, _advance
from .spectral import Grid, HalfSpectrum, TensorField, VectorField, project_hat


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    cfl_safety: float = 0.5
    scheme: str = "rk4"
    snapshot_every: int = 1
    # False -> every step uses exactly ``dt`` (the last one may be shortened)
    adaptive: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


@dataclass
class Trajectory:
    states: list[SimState]
    steps: list[int]                    # step index of each stored state
    ledger: list[LedgerRow]             # one row per step, row 0 at t = 0
    config: IntegratorConfig | None = None
    dts: list[float] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    @property
    def eps(self) -> float:
        return self.states[0].eps

    def snapshot_rows(self) -> list[LedgerRow]:
        return [self.ledger[i] for i in self.steps]

    @property
    def final(self) -> SimState:
        return self.states[-1]


def _dissipation(h: HalfSpectrum, uhat, Fhat, eps):
    v = h.volume * h.sumsq(uhat, h.k2)
    r = eps * h.volume * h.sumsq(Fhat, h.k2) if eps else 0.0
    return v, r


def _instant(h: HalfSpectrum, uhat, Fhat, eps, k):
    """Ledger quantities at one state from half-layout coefficients and its RHS ``k``."""
    vol = h.volume
    kin = 0.5 * vol * h.sumsq(uhat)
    ela = 0.5 * vol * h.sumsq(Fhat)
    vr, rr = _dissipation(h, uhat, Fhat, eps)
    pu = vol * h.inner(k[0], uhat) + vr
    pF = vol * h.inner(k[1], Fhat) + rr
    return kin, ela, vr, rr, k[2], pu, pF


def _rk4(h, uhat, Fhat, eps, dt, k1=None):
    """One RK4 step with projection after every stage.

    Returns the new coefficients and the stage-weighted viscous and
    regularisation dissipation over the step.  ``h`` is a grid or its half layout.
    """
    if k1 is None:
        k1 = _rhs_arrays(h, uhat, Fhat, eps)
    w = (1.0, 2.0, 2.0, 1.0)
    stages = [(uhat, Fhat)]
    ks = [k1[:2]]
    for c in (0.5, 0.5, 1.0):
        ku, kF = ks[-1]
        us = project_hat(uhat + c * dt * ku, h)
        Fs = project_hat(Fhat + c * dt * kF, h)
        stages.append((us, Fs))
        ks.append(_rhs_arrays(h, us, Fs, eps))
    du = sum(wi * k[0] for wi, k in zip(w, ks))
    dF = sum(wi * k[1] for wi, k in zip(w, ks))
    unew = project_hat(uhat + dt / 6.0 * du, h)
    Fnew = project_hat(Fhat + dt / 6.0 * dF, h)
    dv = dr = 0.0
    if isinstance(h, HalfSpectrum):
        for wi, (us, Fs) in zip(w, stages):
            v, r = _dissipation(h, us, Fs, eps)
            dv += wi * v
            dr += wi * r
    return unew, Fnew, dt / 6.0 * dv, dt / 6.0 * dr


def _check_finite(uhat, Fhat, t, eps):
    if not (np.all(np.isfinite(uhat)) and np.all(np.isfinite(Fhat))):
        raise NonFinite("non-finite coefficients", t=t, eps=eps)


def step_rk4(s: SimState, dt: float) -> SimState:
    g = s.grid
    h = g.half
    with np.errstate(over="ignore", invalid="ignore"):
        u, F, _, _ = _rk4(h, h.from_full(s.u.hat), h.from_full(s.F.hat), s.eps, dt)
    _check_finite(u, F, s.t + dt, s.eps)
    return _full_state(h, s.t + dt, u, F, s.eps)


def _full_state(h: HalfSpectrum, t, uhat, Fhat, eps) -> SimState:
    g = h.grid
    return SimState(t, VectorField._wrap(g, h.to_full(uhat), True),
                    TensorField._wrap(g, h.to_full(Fhat), True), eps)


def _umax(h: HalfSpectrum, uhat) -> float:
    u = h.inverse(uhat)
    return float(np.sqrt(np.max(np.sum(u**2, axis=0))))


def _cfl(grid: Grid, umax: float, eps: float, safety: float, cap: float | None) -> float:
    kmax = grid.k_max
    adv = 1.0 / (kmax * umax) if umax > 0 else math.inf
    diff = 2.0 / (max(1.0, eps) * kmax**2)
    dt = safety * min(adv, diff)
    return dt if cap is None else min(dt, cap)


def cfl_dt(s: SimState, cfg: IntegratorConfig | None = None, *, safety: float | None = None) -> float:
    """Stable step: ``safety * min(1/(k_max max|u|), 2/(nu_eff k_max^2))``, capped by ``cfg.dt``."""
    if safety is None:
        safety = cfg.cfl_safety if cfg is not None else 1.0
    umax = float(np.sqrt(np.max(np.sum(s.u.phys**2, axis=0))))
    return _cfl(s.grid, umax, s.eps, safety, cfg.dt if cfg is not None else None)


# overflow is reported through NonFinite, not as numpy warnings
@np.errstate(over="ignore", invalid="ignore")
def run(initial: SimState, cfg: IntegratorConfig) -> Trajectory:
    """Integrate from ``initial`` to ``cfg.t_end``.

    The initial data are projected first.  A ledger row is recorded for every
    step; states are stored every ``cfg.snapshot_every`` steps and at the end.
    """
    s0 = initial.projected()
    g, eps = s0.grid, s0.eps
    h = g.half
    uhat, Fhat = h.from_full(s0.u.hat), h.from_full(s0.F.hat)
    k1 = _rhs_arrays(h, uhat, Fhat, eps, with_exchange=True)
    kin, ela, vr, rr, ex, pu, pF = _instant(h, uhat, Fhat, eps, k1)
    row = LedgerRow(s0.t, kin, ela, 0.0, 0.0, ex, 0.0, vr, rr, pu, pF, kin + ela)
    traj = Trajectory([s0], [0], [row], cfg)
    t = s0.t
    t_end = s0.t + cfg.t_end
    close = 1e-12 * max(1.0, abs(t_end))
    step = 0
    while t < t_end - close:
        dt = _cfl(g, _umax(h, uhat), eps, cfg.cfl_safety, cfg.dt) if cfg.adaptive else cfg.dt
        dt = min(dt, t_end - t)
        uhat, Fhat, dv, dr = _rk4(h, uhat, Fhat, eps, dt, k1)
        step += 1
        t = t + dt
        _check_finite(uhat, Fhat, t, eps)
        k1 = _rhs_arrays(h, uhat, Fhat, eps, with_exchange=True)
        row = _advance(row, t, dt, _instant(h, uhat, Fhat, eps, k1), (dv, dr))
        traj.ledger.append(row)
        traj.dts.append(dt)
        if step % cfg.snapshot_every == 0 or t >= t_end - close:
            traj.states.append(_full_state(h, t, uhat, Fhat, eps))
            traj.steps.append(step)
    return traj
