"""Quick property suite behind the ``check`` command.

Each check returns a :class:`CheckResult`; the suite is deterministic (fixed
seeds) and takes a few seconds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diagnostics import exchange_cancellation, max_divergence_drift, verify_energy_inequality
from .dynamics import SimState, energy_productions, exchange_term, rhs, stretching_pairing, transport_pairing
from .integrator import IntegratorConfig, run
from .neumann_basis import RectGrid, assemble, eigensolve, gram_matrices
from .scenarios import Scenario, make_initial
from .snapshot import state_bytes, state_from_bytes
from .spectral import Grid, TensorField, VectorField, dealias, fft_forward, max_divergence, project_hat


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<34} value={self.value:.3e}  tol={self.tol:.1e}  ({self.seconds:.2f}s)"


def random_field(cls, grid: Grid, rng: np.random.Generator, band: bool = True, project: bool = True):
    vals = rng.standard_normal((grid.d,) * cls.rank + grid.shape)
    hat = fft_forward(vals, grid)
    if band:
        hat = dealias(hat, grid)
    if project and cls.rank > 0:
        hat = project_hat(hat, grid)
    return cls(grid, hat, divergence_free=project and cls.rank > 0)


def _parseval(rng):
    g = Grid(2, 16)
    worst = 0.0
    for _ in range(20):
        f = random_field(TensorField, g, rng, band=False, project=False)
        worst = max(worst, abs(f.norm() - f.norm_physical()) / f.norm())
    return worst


def _projection(rng):
    g = Grid(3, 8)
    u = random_field(VectorField, g, rng, band=False, project=False)
    v = random_field(VectorField, g, rng, band=False, project=False)
    Pu = project_hat(u.hat, g)
    idem = np.abs(project_hat(Pu, g) - Pu).max()
    sym = abs(VectorField(g, Pu).inner(v) - u.inner(VectorField(g, project_hat(v.hat, g))))
    return max(idem, sym / (u.norm() * v.norm()))


def _rhs_divergence(rng):
    g = Grid(2, 16)
    s = SimState(0.0, random_field(VectorField, g, rng), random_field(TensorField, g, rng), 0.1)
    ev = rhs(s)
    return max(max_divergence(ev.du_dt) / ev.du_dt.norm(), max_divergence(ev.dF_dt) / ev.dF_dt.norm())


def _exchange(rng):
    g = Grid(2, 16)
    s = SimState(0.0, random_field(VectorField, g, rng), random_field(TensorField, g, rng))
    pu, pF = energy_productions(s)
    ex = exchange_term(s)
    return max(abs(pu + ex), abs(pF - ex)) / max(1.0, abs(ex))


def _ibp(rng):
    g = Grid(2, 16)
    worst = 0.0
    for _ in range(10):
        w = random_field(VectorField, g, rng, project=False)
        G = random_field(TensorField, g, rng)
        X = random_field(TensorField, g, rng, project=False)
        a = stretching_pairing(w, G, X)
        b = transport_pairing(w, G, X)
        worst = max(worst, abs(a + b) / max(1.0, abs(a)))
    return worst


def _short_run():
    sc = Scenario("check", "random_divfree", n=16, eps=0.05,
                  config=IntegratorConfig(0.01, 0.25), params={"seed": 11})
    return run(make_initial(sc), sc.config)


def _eigen():
    g = RectGrid(8, 8)
    asm = assemble(g)
    basis = eigensolve(g, 6, asm)
    G, W = gram_matrices(basis, asm)
    lam = np.array([p.lam for p in basis])
    return max(np.abs(lam[:4] - 1).max(), np.abs(G - np.eye(len(basis))).max(),
               np.abs(W - np.diag(lam)).max() / lam.max())


def _snapshot(rng):
    g = Grid(2, 8)
    s = SimState(0.3, random_field(VectorField, g, rng), random_field(TensorField, g, rng), 0.1)
    b = state_bytes(s)
    return 0.0 if state_bytes(state_from_bytes(b)) == b else 1.0


def run_checks() -> list[CheckResult]:
    rng = np.random.default_rng(20240601)
    traj_box: dict = {}

    def traj():
        if "t" not in traj_box:
            traj_box["t"] = _short_run()
        return traj_box["t"]

    suite: list[tuple[str, Callable[[], float], float]] = [
        ("parseval", lambda: _parseval(rng), 1e-12),
        ("projection idempotent/symmetric", lambda: _projection(rng), 1e-12),
        ("rhs divergence-free", lambda: _rhs_divergence(rng), 1e-11),
        ("exchange antisymmetry", lambda: _exchange(rng), 1e-10),
        ("integration by parts", lambda: _ibp(rng), 1e-10),
        ("energy inequality (short run)", lambda: verify_energy_inequality(traj()).worst_violation, 1e-8),
        ("exchange cancellation per step", lambda: exchange_cancellation(traj()), 1e-10),
        ("divergence drift", lambda: max_divergence_drift(traj()), 1e-9),
        ("eigenbasis structure", _eigen, 1e-10),
        ("snapshot round trip", lambda: _snapshot(rng), 0.0),
    ]
    out = []
    for name, fn, tol in suite:
        t0 = time.perf_counter()
        try:
            v = float(fn())
        except Exception:  # a crashing check is a failing check
            v = float("inf")
        out.append(CheckResult(name, v, tol, time.perf_counter() - t0))
    return out
