import math

import numpy as np
import pytest

from viscospec.diagnostics import (cumulative, defect_report, defect_study, exchange_cancellation,
                                   fit_domination, initial_row, inject_energy, ledger_update,
                                   lsc_gap, max_divergence_drift, thread_count,
                                   verify_energy_inequality, weak_form_residual)
from viscospec.dynamics import SimState
from viscospec.errors import LedgerMissing, NonFinite, TestFieldNotDivergenceFree
from viscospec.integrator import IntegratorConfig, Trajectory, run
from viscospec.scenarios import Scenario, make_initial
from viscospec.spectral import Grid, TensorField, VectorField, project_hat


def stokes_mode(n=16, mode=(2, 1)):
    return make_initial(Scenario("stokes", "single_mode", n=n, params={"mode": list(mode)}))


def fixed(dt, t_end, every=1):
    return IntegratorConfig(dt, t_end, adaptive=False, snapshot_every=every)


def mode_pair(g, m):
    """Divergence-free test pair built from the Fourier mode ``m``."""
    x = g.x
    ph = sum(mi * xi for mi, xi in zip(m, x))
    psi = VectorField.from_physical(g, np.stack([np.cos(ph), np.sin(ph)]))
    Psi = np.zeros((2, 2) + g.shape)
    Psi[0, 1], Psi[1, 0] = np.sin(ph), np.cos(ph)
    Psi = TensorField.from_physical(g, Psi)
    return (VectorField(g, project_hat(psi.hat, g), divergence_free=True),
            TensorField(g, project_hat(Psi.hat, g), divergence_free=True))


# -- cumulative -------------------------------------------------------------------

def test_cumulative_exact_for_cubics():
    t = np.sort(np.random.default_rng(0).uniform(0, 2, 9))
    t[0] = 0.0
    f = 1 - 2 * t + 3 * t**2 - t**3
    F = t - t**2 + t**3 - t**4 / 4
    assert np.abs(cumulative(f, t) - F).max() < 1e-13


def test_cumulative_short_inputs():
    assert cumulative([3.0], [0.0]).tolist() == [0.0]
    assert cumulative([1.0, 3.0], [0.0, 2.0]).tolist() == [0.0, 4.0]
    # three points: Simpson is exact for the quadratic on the full interval
    t = np.array([0.0, 0.5, 1.0])
    assert cumulative(t**2, t)[-1] == pytest.approx(1 / 3, abs=1e-15)


def test_cumulative_fourth_order():
    errs = []
    for n in (21, 41, 81):
        t = np.linspace(0, 1, n)
        errs.append(np.abs(cumulative(np.exp(t), t) - (np.exp(t) - 1)).max())
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("VISCOSPEC_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("VISCOSPEC_THREADS", "0")
    assert thread_count() == 1
    monkeypatch.setenv("VISCOSPEC_THREADS", "many")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.delenv("VISCOSPEC_THREADS")
    assert thread_count() >= 1


# -- ledger -----------------------------------------------------------------------

def test_zero_state_row_is_zero(g16):
    s = SimState(0.0, VectorField.zeros(g16), TensorField.zeros(g16), 0.1)
    r0 = initial_row(s)
    r1 = ledger_update(r0, SimState(0.1, s.u, s.F, 0.1), 0.1)
    for r in (r0, r1):
        assert all(v == 0.0 for v in r.csv_values()[1:])
    assert r1.t == 0.1


def test_ledger_update_trapezoid_matches_hand_sum():
    s0 = stokes_mode()
    tr = run(s0, fixed(0.01, 0.02))
    r = ledger_update(initial_row(tr.states[0]), tr.states[1], 0.01)
    v0 = tr.ledger[0].visc_rate
    v1 = tr.ledger[1].visc_rate
    assert r.visc_accum == pytest.approx(0.005 * (v0 + v1), rel=1e-14)
    assert r.kinetic == pytest.approx(tr.ledger[1].kinetic, rel=1e-14)
    assert r.exchange == pytest.approx(tr.ledger[1].exchange, abs=1e-15)


def test_stokes_decay_ledger_closes_to_fourth_order():
    k2 = 5
    residuals = []
    for dt in (0.04, 0.02, 0.01):
        tr = run(stokes_mode(), fixed(dt, 1.0))
        residuals.append(max(abs(r.balance_residual) for r in tr.ledger))
    k0 = tr.ledger[0].kinetic
    for r in tr.ledger[::10]:
        assert r.kinetic == pytest.approx(k0 * math.exp(-2 * k2 * r.t), rel=1e-6)
    assert residuals[-1] < 2e-6
    for a, b in zip(residuals, residuals[1:]):
        assert a / b > 12


@pytest.mark.parametrize("seed", range(4))
def test_generic_run_never_produces_energy(seed):
    sc = Scenario("r", "random_divfree", n=32, eps=0.05 * (seed % 2), params={"seed": seed})
    tr = run(make_initial(sc), IntegratorConfig(0.05, 0.25))
    assert max(r.balance_residual for r in tr.ledger) < 1e-8
    assert all(r.kinetic >= 0 and r.elastic >= 0 and r.visc_accum >= 0 and r.reg_accum >= 0
               for r in tr.ledger)
    assert exchange_cancellation(tr) < 1e-10
    assert max_divergence_drift(tr) < 1e-9


def test_inject_energy():
    r = initial_row(stokes_mode())
    bad = inject_energy(r, 0.5)
    assert bad.kinetic == r.kinetic + 0.5 and bad.balance_residual == 0.5


# -- energy inequality ------------------------------------------------------------

def test_zero_trajectory_passes_with_zero_slack(g16):
    s = SimState(0.0, VectorField.zeros(g16), TensorField.zeros(g16), 0.0)
    chk = verify_energy_inequality(run(s, fixed(0.1, 0.5)))
    assert chk.passed
    assert np.all(chk.slack == 0.0)


def test_regularised_run_slack_covers_reg_dissipation():
    sc = Scenario("r", "random_divfree", n=32, eps=0.1, params={"seed": 2})
    tr = run(make_initial(sc), IntegratorConfig(0.05, 0.5))
    chk = verify_energy_inequality(tr)
    assert chk.passed
    reg = np.array([r.reg_accum for r in tr.ledger])
    assert reg[-1] > 1e-3
    assert np.all(chk.slack >= reg - 1e-8)


def test_injected_energy_fails():
    tr = run(stokes_mode(), fixed(0.002, 0.2))
    assert verify_energy_inequality(tr).passed
    tr.ledger[7] = inject_energy(tr.ledger[7], 1e-6)
    chk = verify_energy_inequality(tr)
    assert not chk.passed
    assert chk.worst_violation == pytest.approx(1e-6, rel=1e-3)


def test_missing_ledger():
    tr = run(stokes_mode(), fixed(0.1, 0.2))
    with pytest.raises(LedgerMissing):
        verify_energy_inequality(Trajectory(tr.states, tr.steps, []))


# -- defect study -----------------------------------------------------------------

SMOOTH = Scenario("smooth", "random_divfree", n=16, params={"seed": 1},
                  config=IntegratorConfig(0.02, 0.5, snapshot_every=1))


def test_repeated_eps_gives_zero_proxies():
    rep = defect_study(SMOOTH, [0.05, 0.05], workers=1)
    assert np.all(rep.D_proxy == 0.0) and np.all(rep.corrector_proxy == 0.0)
    assert np.all(np.isnan(rep.fitted_c)) and rep.dominated.all()
    assert rep.c_spread() == 0.0


def test_reg_accum_decreases_along_eps_sequence():
    rep = defect_study(SMOOTH, [0.1, 0.05, 0.025])
    assert rep.reg_accum[0] > rep.reg_accum[1] > rep.reg_accum[2] > 0
    assert rep.dominated.all()


def test_defect_shrinks_towards_reference():
    rep = defect_study(SMOOTH, [0.1, 0.05, 0.025, 0.0125])
    final = rep.D_proxy[:, -1]
    assert final[0] > final[1] > final[2] > 0
    assert final[3] == 0.0
    assert np.all(np.isfinite(rep.fitted_c[:3]))
    assert rep.c_spread() < 0.2
    assert len(list(rep.rows())) == 4 * len(rep.times)


def test_defect_study_is_deterministic_across_workers():
    a = defect_study(SMOOTH, [0.1, 0.05, 0.025], workers=1)
    b = defect_study(SMOOTH, [0.1, 0.05, 0.025], workers=3)
    assert np.array_equal(a.D_proxy, b.D_proxy)
    assert np.array_equal(a.corrector_proxy, b.corrector_proxy)
    assert np.array_equal(a.eps_values, b.eps_values)


@pytest.mark.parametrize("eps", [[0.05, 0.1], [], [0.1, -0.01]])
def test_defect_study_rejects_bad_sequences(eps):
    with pytest.raises(ValueError):
        defect_study(SMOOTH, eps)


def test_defect_study_names_eps_on_blow_up():
    sc = Scenario("wild", "random_divfree", n=16, params={"seed": 0, "amplitude": 200.0},
                  config=IntegratorConfig(0.5, 20.0, adaptive=False))
    with pytest.raises(NonFinite) as info:
        defect_study(sc, [0.01], workers=1)
    assert info.value.eps == 0.01


def test_defect_report_requires_matching_times():
    a = run(stokes_mode(), fixed(0.1, 0.5))
    b = run(stokes_mode(), fixed(0.05, 0.5))
    with pytest.raises(ValueError):
        defect_report([a, b])


def test_fit_domination_examples():
    assert fit_domination(np.array([0.0, 1e-12]), np.array([0.0, 0.0]), 1e-10) == 0.0
    assert fit_domination(np.array([0.0, 2.0]), np.array([0.0, 4.0]), 0.0) == 0.5
    assert fit_domination(np.array([1.0]), np.array([0.0]), 0.0) == math.inf


# -- lower semicontinuity proxy ----------------------------------------------------

def test_elastic_energy_gap_under_resolution_doubling():
    cfg = fixed(0.005, 0.5, every=10)
    for seed in range(4):
        sc = Scenario("r", "random_divfree", eps=0.05, params={"seed": seed, "kmax": 5})
        coarse = run(make_initial(sc.with_(n=16)), cfg)
        fine = run(make_initial(sc.with_(n=32)), cfg)
        # truncated triads move energy either way, so only a relative floor holds
        floor = 1e-6 * coarse.states[0].F.norm() ** 2
        assert np.all(lsc_gap(coarse, fine) >= -floor)


def test_lsc_gap_needs_matched_times():
    with pytest.raises(ValueError):
        lsc_gap(run(stokes_mode(), fixed(0.1, 0.5)), run(stokes_mode(), fixed(0.1, 0.3)))


# -- weak forms -------------------------------------------------------------------

def test_zero_trajectory_weak_residual_vanishes(g16):
    s = SimState(0.0, VectorField.zeros(g16), TensorField.zeros(g16), 0.0)
    res = weak_form_residual(run(s, fixed(0.1, 0.5)), [mode_pair(g16, (1, 2))])
    assert res.worst() == 0.0 and not res.flagged()


def test_resolved_stokes_decay_weak_residual():
    tr = run(stokes_mode(), fixed(0.0025, 1.0))
    g = tr.grid
    pairs = [mode_pair(g, m) for m in [(1, 0), (0, 1), (2, 1), (1, -3), (3, 3)]]
    res = weak_form_residual(tr, pairs)
    assert res.momentum.shape == (5, len(tr.states))
    assert res.worst() < 1e-8


def test_under_resolved_run_is_flagged():
    tr = run(stokes_mode(), fixed(0.0025, 1.0, every=50))
    res = weak_form_residual(tr, [mode_pair(tr.grid, (2, 1))])
    assert res.flagged(1e-8)


def test_weak_residual_rejects_divergent_test_field():
    tr = run(stokes_mode(), fixed(0.1, 0.2))
    g = tr.grid
    psi, Psi = mode_pair(g, (1, 1))
    x, _ = g.x
    bad = VectorField.from_physical(g, np.stack([np.sin(x), np.zeros(g.shape)]))
    with pytest.raises(TestFieldNotDivergenceFree):
        weak_form_residual(tr, [(bad, Psi)])
