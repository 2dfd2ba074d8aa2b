"""Per-step energy bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .dynamics import RhsEval, SimState, energy_productions, exchange_term
from .spectral import gradient_norm_sq

CSV_COLUMNS = ("t", "kinetic", "elastic", "visc_accum", "reg_accum", "exchange",
               "balance_residual")


@dataclass(frozen=True)
class LedgerRow:
    t: float
    kinetic: float
    elastic: float
    visc_accum: float
    reg_accum: float
    exchange: float
    balance_residual: float
    # instantaneous rates, used by trapezoidal accumulation and the cancellation check
    visc_rate: float = 0.0
    reg_rate: float = 0.0
    production_u: float = 0.0
    production_F: float = 0.0
    initial_total: float = 0.0

    @property
    def total(self) -> float:
        return self.kinetic + self.elastic + self.visc_accum + self.reg_accum

    def csv_values(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def _instant(s: SimState, ev: RhsEval | None):
    kin = 0.5 * s.u.norm() ** 2
    ela = 0.5 * s.F.norm() ** 2
    vr = gradient_norm_sq(s.u)
    rr = s.eps * gradient_norm_sq(s.F)
    if ev is not None:
        pu, pF = energy_productions(s, ev)
        ex = ev.exchange
    else:
        pu = pF = 0.0
        ex = exchange_term(s)
    return kin, ela, vr, rr, ex, pu, pF


def initial_row(s: SimState, ev: RhsEval | None = None) -> LedgerRow:
    kin, ela, vr, rr, ex, pu, pF = _instant(s, ev)
    return LedgerRow(s.t, kin, ela, 0.0, 0.0, ex, 0.0, vr, rr, pu, pF, kin + ela)


def _advance(prev: LedgerRow, t: float, dt: float, instant, increments) -> LedgerRow:
    kin, ela, vr, rr, ex, pu, pF = instant
    if increments is None:
        dv = 0.5 * dt * (prev.visc_rate + vr)
        dr = 0.5 * dt * (prev.reg_rate + rr)
    else:
        dv, dr = increments
    va = prev.visc_accum + dv
    ra = prev.reg_accum + dr
    res = (kin + ela + va + ra) - prev.initial_total
    return LedgerRow(t, kin, ela, va, ra, ex, res, vr, rr, pu, pF, prev.initial_total)


def ledger_update(prev: LedgerRow, s: SimState, dt: float,
                  increments: tuple[float, float] | None = None,
                  ev: RhsEval | None = None) -> LedgerRow:
    """Advance the ledger to state ``s`` reached after a step of size ``dt``.

    ``increments`` are the viscous and regularisation dissipation integrals over
    the step.  The integrator passes its stage-weighted values, which keep the
    balance residual at the scheme's order; without them the trapezoidal rule is
    used.
    """
    return _advance(prev, s.t, dt, _instant(s, ev), increments)


def inject_energy(row: LedgerRow, amount: float) -> LedgerRow:
    """Copy of ``row`` with ``amount`` of spurious kinetic energy (negative controls)."""
    return replace(row, kinetic=row.kinetic + amount,
                   balance_residual=row.balance_residual + amount)
