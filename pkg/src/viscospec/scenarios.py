"""Scenario descriptions and initial-data generators.

A scenario file is flat ``key = value`` text::

    name = tg
    generator = taylor_green
    d = 2
    n = 32
    eps = 0.0
    dt = 0.01
    t_end = 1.0

Unknown keys are kept in ``Scenario.params`` and passed to the generator.
"""

from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .dynamics import SimState
from .errors import UnknownGenerator
from .integrator import IntegratorConfig
from .spectral import Grid, TensorField, VectorField, fft_forward, project_hat

_SECTION = "scenario"
_CORE_KEYS = {"name", "generator", "d", "n", "length", "eps", "dt", "t_end", "cfl_safety",
              "snapshot_every", "adaptive", "scheme"}


@dataclass(frozen=True)
class Scenario:
    name: str
    generator: str
    d: int = 2
    n: int = 32
    length: float = 2 * np.pi
    eps: float = 0.0
    config: IntegratorConfig = field(default_factory=lambda: IntegratorConfig(0.01, 1.0))
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return Grid(self.d, self.n, self.length)

    def with_(self, **changes) -> "Scenario":
        """Copy with top-level fields, config fields or generator params replaced."""
        top = {k: v for k, v in changes.items() if k in {"name", "generator", "d", "n", "length", "eps"}}
        cfg = {k: v for k, v in changes.items() if k in IntegratorConfig.__dataclass_fields__}
        rest = {k: v for k, v in changes.items() if k not in top and k not in cfg}
        return replace(self, config=replace(self.config, **cfg), params={**self.params, **rest}, **top)


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return [_parse_value(p) for p in text.split(",") if p.strip()]
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if low in ("pi", "2pi"):
        return np.pi * (2 if low == "2pi" else 1)
    return text


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(f"[{_SECTION}]\n" + text)
    raw = {k: _parse_value(v) for k, v in cp[_SECTION].items()}
    if "generator" not in raw:
        raise ValueError("scenario needs a 'generator' key")
    cfg = IntegratorConfig(
        dt=float(raw.get("dt", 0.01)),
        t_end=float(raw.get("t_end", 1.0)),
        cfl_safety=float(raw.get("cfl_safety", 0.5)),
        scheme=str(raw.get("scheme", "rk4")),
        snapshot_every=int(raw.get("snapshot_every", 1)),
        adaptive=bool(raw.get("adaptive", True)),
    )
    return Scenario(
        name=str(raw.get("name", name)),
        generator=str(raw["generator"]),
        d=int(raw.get("d", 2)),
        n=int(raw.get("n", 32)),
        length=float(raw.get("length", 2 * np.pi)),
        eps=float(raw.get("eps", 0.0)),
        config=cfg,
        params={k: v for k, v in raw.items() if k not in _CORE_KEYS},
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), name=path.stem)


def format_scenario(sc: Scenario) -> str:
    def fmt(v):
        if isinstance(v, (list, tuple)):
            return ", ".join(fmt(x) for x in v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    c = sc.config
    items = dict(name=sc.name, generator=sc.generator, d=sc.d, n=sc.n, length=sc.length,
                 eps=sc.eps, dt=c.dt, t_end=c.t_end, cfl_safety=c.cfl_safety, scheme=c.scheme,
                 snapshot_every=c.snapshot_every, adaptive=c.adaptive, **sc.params)
    return "".join(f"{k} = {fmt(v)}\n" for k, v in items.items())


# -- generators -------------------------------------------------------------------

def _identity(grid: Grid, scale: float) -> np.ndarray:
    hat = np.zeros((grid.d, grid.d) + grid.shape, complex)
    for i in range(grid.d):
        hat[(i, i) + (0,) * grid.d] = scale
    return hat


def _half_space_modes(d: int, kmax: int):
    """Integer wavevectors with first nonzero entry positive, in lexicographic order."""
    for m in itertools.product(range(-kmax, kmax + 1), repeat=d):
        nz = [c for c in m if c]
        if nz and nz[0] > 0:
            yield m


def _taylor_green(grid: Grid, p):
    a = float(p.get("amplitude", 1.0))
    x = grid.x * (2 * np.pi / grid.length)
    u = np.zeros((grid.d,) + grid.shape)
    if grid.d == 2:
        u[0] = np.sin(x[0]) * np.cos(x[1])
        u[1] = -np.cos(x[0]) * np.sin(x[1])
    else:
        u[0] = np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2])
        u[1] = -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2])
    return fft_forward(a * u, grid), _identity(grid, float(p.get("f_mean", 0.0)))


def _tangent(m: np.ndarray) -> np.ndarray:
    if len(m) == 2:
        t = np.array([-m[1], m[0]], float)
    else:
        e = np.zeros(3)
        e[np.argmin(np.abs(m))] = 1.0
        t = np.cross(m, e)
    return t / np.linalg.norm(t)


def _mode_vector(grid: Grid, p, default) -> np.ndarray:
    m = p.get("mode", default)
    m = np.atleast_1d(np.asarray(m, dtype=int))
    if m.size != grid.d:
        raise ValueError(f"mode needs {grid.d} integers, got {list(m)}")
    return m


def _single_mode(grid: Grid, p):
    m = _mode_vector(grid, p, [1] + [0] * (grid.d - 1))
    if not m.any():
        raise ValueError("single_mode needs a nonzero mode")
    a = float(p.get("amplitude", 1.0))
    phase = np.tensordot(m, grid.x, axes=1) * (2 * np.pi / grid.length)
    u = a * _tangent(m).reshape((grid.d,) + (1,) * grid.d) * np.sin(phase)[None]
    return fft_forward(u, grid), _identity(grid, float(p.get("f_mean", 0.0)))


def _identity_plus_perturbation(grid: Grid, p):
    m = _mode_vector(grid, p, [0, 1] + [0] * (grid.d - 2))
    delta = float(p.get("delta", 0.1))
    phase = np.tensordot(m, grid.x, axes=1) * (2 * np.pi / grid.length)
    pert = np.zeros((grid.d, grid.d) + grid.shape)
    pert[0, 0] = np.cos(phase)
    Fhat = _identity(grid, 1.0) + delta * project_hat(fft_forward(pert, grid), grid)
    uhat = np.zeros((grid.d,) + grid.shape, complex)
    return uhat, Fhat


def _random_divfree(grid: Grid, p):
    """Complex Gaussian coefficients with modulus decay ``|k|^-3``.

    Draws are made over a fixed wavevector box ``|k_axis| <= kmax`` independent of
    the grid, so the same seed yields nested data on nested grids; modes outside
    a grid's dealiased band are dropped.
    """
    d = grid.d
    kmax = int(p.get("kmax", max(1, (grid.n - 1) // 3)))
    seed = int(p.get("seed", 0))
    amp = float(p.get("amplitude", 0.1))
    famp = float(p.get("f_amplitude", 0.25))
    modes = list(_half_space_modes(d, kmax))
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((len(modes), d + d * d, 2))
    coef = (draws[..., 0] + 1j * draws[..., 1]) / np.sqrt(2)
    uhat = np.zeros((d,) + grid.shape, complex)
    Fhat = np.zeros((d, d) + grid.shape, complex)
    lim = grid.n
    for m, c in zip(modes, coef):
        if any(3 * abs(x) >= lim for x in m):
            continue
        scale = float(np.linalg.norm(m)) ** -3
        idx = tuple(x % grid.n for x in m)
        nidx = tuple((-x) % grid.n for x in m)
        cu = amp * scale * c[:d]
        cF = famp * scale * c[d:].reshape(d, d)
        uhat[(slice(None),) + idx] = cu
        uhat[(slice(None),) + nidx] = np.conj(cu)
        Fhat[(slice(None), slice(None)) + idx] = cF
        Fhat[(slice(None), slice(None)) + nidx] = np.conj(cF)
    Fhat = Fhat + _identity(grid, float(p.get("f_mean", 1.0)))
    return uhat, Fhat


GENERATORS = {
    "taylor_green": _taylor_green,
    "random_divfree": _random_divfree,
    "single_mode": _single_mode,
    "identity_plus_perturbation": _identity_plus_perturbation,
}


def make_initial(sc: Scenario) -> SimState:
    """Divergence-free initial state at ``t = 0`` for ``sc``.

    Coefficients outside the dealiased band are zeroed: that band is the
    Galerkin space, and transform round-off left there would sit on the
    stiffest modes.
    """
    try:
        gen = GENERATORS[sc.generator]
    except KeyError:
        raise UnknownGenerator(f"unknown generator {sc.generator!r}; "
                               f"choose from {sorted(GENERATORS)}") from None
    grid = sc.grid
    uhat, Fhat = gen(grid, sc.params)
    mask = grid.dealias_mask
    u = VectorField._wrap(grid, project_hat(uhat * mask, grid), True)
    F = TensorField._wrap(grid, project_hat(Fhat * mask, grid), True)
    return SimState(0.0, u, F, sc.eps)
