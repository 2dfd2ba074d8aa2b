"""Periodic grids, dual-representation fields and Fourier-space operators.

Spectral coefficients are normalised so that a constant field ``c`` has
coefficient ``c`` at mode zero (``numpy.fft`` with ``norm="forward"``).  With
this convention the torus integral of a product is

    int f g dx = length**d * sum_k f_hat[k] * conj(g_hat[k]).

Index conventions used throughout the package:

* ``(grad u)[i, j] = d_j u_i`` -- the derivative index is appended last;
* ``(div Phi)[j] = sum_i d_i Phi[i, j]`` -- tensor divergence contracts the
  first index, so the column ``Phi[:, j]`` is the vector being projected;
* ``(a (x) B)[i, j, k] = a_i B[j, k]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar

import numpy as np
from scipy import fft as sfft

from .errors import GridMismatch, InvalidShape


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the torus ``[0, length)^d``."""

    d: int
    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.d not in (2, 3):
            raise InvalidShape(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n % 2:
            raise InvalidShape(f"modes per axis must be even and >= 8, got {self.n}")
        if not self.length > 0:
            raise InvalidShape("torus period must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @property
    def volume(self) -> float:
        return self.length**self.d

    @property
    def cell_volume(self) -> float:
        return (self.length / self.n) ** self.d

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers in FFT order, ``[0, 1, ..., n/2-1, -n/2, ..., -1]``."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(int)

    def _broadcast(self, v: np.ndarray) -> np.ndarray:
        out = np.empty((self.d,) + self.shape)
        for a in range(self.d):
            sh = [1] * self.d
            sh[a] = self.n
            out[a] = v.reshape(sh)
        return out

    @cached_property
    def k(self) -> np.ndarray:
        """Wavevectors, shape ``(d, n, ..., n)``; includes the Nyquist mode ``-n/2``."""
        return self._broadcast(self.mode_index * (2 * np.pi / self.length))

    @cached_property
    def kd(self) -> np.ndarray:
        # First derivatives and the Leray projector use Nyquist-free wavenumbers so
        # that odd derivatives of real fields stay real.
        m = self.mode_index.astype(float)
        m[self.n // 2] = 0.0
        return self._broadcast(m * (2 * np.pi / self.length))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def _kd2_inv(self) -> np.ndarray:
        kd2 = np.sum(self.kd**2, axis=0)
        with np.errstate(divide="ignore"):
            inv = np.where(kd2 > 0, 1.0 / np.where(kd2 > 0, kd2, 1.0), 0.0)
        return inv

    @cached_property
    def k_max(self) -> float:
        """Largest wavevector modulus present on the grid."""
        return float(np.sqrt(self.d) * (self.n // 2) * 2 * np.pi / self.length)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m = np.abs(self.mode_index)
        keep1 = 3 * m < self.n
        mask = np.ones(self.shape, dtype=bool)
        for a in range(self.d):
            sh = [1] * self.d
            sh[a] = self.n
            mask = mask & keep1.reshape(sh)
        return mask

    @cached_property
    def x(self) -> np.ndarray:
        """Physical coordinates, shape ``(d, n, ..., n)``."""
        return self._broadcast(np.arange(self.n) * (self.length / self.n))

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.shape

    def forward(self, values: np.ndarray) -> np.ndarray:
        return sfft.fftn(values, axes=self.axes, norm="forward")

    def inverse(self, hat: np.ndarray) -> np.ndarray:
        return sfft.ifftn(hat, axes=self.axes, norm="forward").real

    @cached_property
    def half(self) -> "HalfSpectrum":
        return HalfSpectrum(self)

    def check(self, arr: np.ndarray, rank: int) -> None:
        want = (self.d,) * rank + self.shape
        if arr.shape != want:
            raise InvalidShape(f"expected array of shape {want}, got {arr.shape}")


class HalfSpectrum:
    """Real-to-complex layout of a grid's spectrum (last axis holds modes ``0..n/2``).

    Used inside the time stepper, where it halves the transform work; fields
    exchanged with callers always carry full conjugate-symmetric spectra.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self.d = grid.d
        self.n = grid.n
        nh = grid.n // 2 + 1
        self.spectral_shape = grid.shape[:-1] + (nh,)
        sl = (slice(None),) * grid.d + (slice(0, nh),)
        self.k = grid.k[sl].copy()
        self.k[-1] = np.abs(self.k[-1])         # last axis: +n/2 instead of -n/2
        self.kd = grid.kd[sl].copy()
        self.kd[-1] = np.abs(self.kd[-1])
        self.k2 = np.sum(self.k**2, axis=0)
        self._kd2_inv = grid._kd2_inv[sl[1:]].copy()
        self.dealias_mask = grid.dealias_mask[sl[1:]].copy()
        w = np.full(nh, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.weights = np.broadcast_to(w, self.spectral_shape)
        self.volume = grid.volume
        self.cell_volume = grid.cell_volume
        self.axes = grid.axes

    def forward(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, axes=self.axes, norm="forward")

    def inverse(self, hat: np.ndarray) -> np.ndarray:
        return sfft.irfftn(hat, s=self.grid.shape, axes=self.axes, norm="forward")

    def from_full(self, hat: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(hat[..., : self.spectral_shape[-1]])

    def to_full(self, half: np.ndarray) -> np.ndarray:
        """Rebuild the full spectrum by conjugate mirroring (exact, no transforms)."""
        n, nh = self.n, self.spectral_shape[-1]
        full = np.empty(half.shape[:-1] + (n,), dtype=complex)
        full[..., :nh] = half
        src = half[..., 1 : n - nh + 1]                # last-axis modes 1 .. n/2-1
        lead = tuple(range(half.ndim - self.d, half.ndim - 1))
        if lead:
            src = np.roll(np.flip(src, axis=lead), 1, axis=lead)
        full[..., nh:] = np.conj(src[..., ::-1])
        return full

    def sumsq(self, hat: np.ndarray, weight: np.ndarray | None = None) -> float:
        """``sum_k w |hat_k|^2`` over the full spectrum, evaluated on the half layout."""
        a = hat.real**2 + hat.imag**2
        w = self.weights if weight is None else self.weights * weight
        return float(np.sum(a * w))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """``sum_k Re(a_k conj(b_k))`` over the full spectrum."""
        return float(np.sum((a.real * b.real + a.imag * b.imag) * self.weights))


def fft_forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral coefficients of real grid values (transform over the last ``d`` axes)."""
    values = np.asarray(values, dtype=float)
    if values.shape[values.ndim - grid.d :] != grid.shape or values.ndim < grid.d:
        raise InvalidShape(f"trailing shape {values.shape} does not match grid {grid.shape}")
    return sfft.fftn(values, axes=grid.axes, norm="forward")


def fft_inverse(hat: np.ndarray, grid: Grid) -> np.ndarray:
    hat = np.asarray(hat)
    if hat.shape[hat.ndim - grid.d :] != grid.shape or hat.ndim < grid.d:
        raise InvalidShape(f"trailing shape {hat.shape} does not match grid {grid.shape}")
    return sfft.ifftn(hat, axes=grid.axes, norm="forward").real


def conjugate_mirror(hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Return ``conj(hat[-k])`` so that real fields satisfy ``hat == conjugate_mirror(hat)``."""
    flipped = np.flip(hat, axis=grid.axes)
    return np.conj(np.roll(flipped, 1, axis=grid.axes))


class Field:
    """Immutable field with spectral coefficients and a lazily evaluated physical view.

    ``divergence_free`` is a flag carried along by operations that guarantee it;
    it is never inferred.
    """

    rank: ClassVar[int] = 0

    def __init__(self, grid: Grid, hat: np.ndarray, *, phys: np.ndarray | None = None,
                 divergence_free: bool = False, _copy: bool = True):
        hat = np.array(hat, dtype=np.complex128, copy=_copy)
        grid.check(hat, self.rank)
        hat.flags.writeable = False
        self.grid = grid
        self.hat = hat
        self.divergence_free = divergence_free
        if phys is not None:
            phys = np.array(phys, dtype=float, copy=_copy)
            grid.check(phys, self.rank)
            phys.flags.writeable = False
            self.__dict__["phys"] = phys

    @classmethod
    def from_physical(cls, grid: Grid, values, divergence_free: bool = False):
        values = np.asarray(values, dtype=float)
        grid.check(values, cls.rank)
        return cls(grid, fft_forward(values, grid), phys=values,
                   divergence_free=divergence_free, _copy=False)

    @classmethod
    def from_spectral(cls, grid: Grid, hat, divergence_free: bool = False):
        return cls(grid, hat, divergence_free=divergence_free)

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros((grid.d,) * cls.rank + grid.shape, complex),
                   divergence_free=True, _copy=False)

    @classmethod
    def _wrap(cls, grid, hat, divergence_free=False):
        return cls(grid, hat, divergence_free=divergence_free, _copy=False)

    @cached_property
    def phys(self) -> np.ndarray:
        out = fft_inverse(self.hat, self.grid)
        out.flags.writeable = False
        return out

    def inner(self, other: "Field") -> float:
        """L2 inner product over the torus, evaluated in spectral space."""
        _same_grid(self, other)
        return float(self.grid.volume * np.sum((self.hat * np.conj(other.hat)).real))

    def norm(self) -> float:
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.hat) ** 2)))

    def norm_physical(self) -> float:
        return float(np.sqrt(self.grid.cell_volume * np.sum(self.phys**2)))

    def _combine(self, other, op):
        _same_grid(self, other)
        return type(self)._wrap(self.grid, op(self.hat, other.hat),
                                self.divergence_free and other.divergence_free)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return type(self)._wrap(self.grid, -self.hat, self.divergence_free)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return type(self)._wrap(self.grid, self.hat * float(c), self.divergence_free)

    __rmul__ = __mul__

    def __repr__(self):
        return f"{type(self).__name__}(d={self.grid.d}, n={self.grid.n}, norm={self.norm():.6g})"


class ScalarField(Field):
    rank = 0


class VectorField(Field):
    rank = 1


class TensorField(Field):
    rank = 2


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"fields live on different grids: {a.grid} vs {b.grid}")
    if a.rank != b.rank:
        raise InvalidShape(f"rank mismatch: {a.rank} vs {b.rank}")


# -- array-level kernels ----------------------------------------------------------

def grad_hat(hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral gradient; the derivative index is appended after the component indices."""
    lead = hat.ndim - grid.d
    kd = grid.kd.reshape((1,) * lead + grid.kd.shape)
    return 1j * kd * np.expand_dims(hat, lead)


def div_hat(hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Contract the FIRST component index with the derivative."""
    kd = grid.kd.reshape(grid.kd.shape[:1] + (1,) * (hat.ndim - grid.d - 1) + grid.kd.shape[1:])
    return np.sum(1j * kd * hat, axis=0)


def project_hat(hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Apply ``I - k k^T / |k|^2`` along the first component index, modewise."""
    extra = hat.ndim - grid.d - 1
    kd = grid.kd.reshape(grid.kd.shape[:1] + (1,) * extra + grid.kd.shape[1:])
    s = np.sum(kd * hat, axis=0) * grid._kd2_inv
    return hat - kd * s[None]


def dealias(hat, grid: Grid | None = None):
    """Zero every mode with some ``|k_axis| >= n/3``.

    Accepts either a :class:`Field` or a raw coefficient array plus its grid.
    """
    if isinstance(hat, Field):
        return type(hat)._wrap(hat.grid, hat.hat * hat.grid.dealias_mask, hat.divergence_free)
    if grid is None:
        raise TypeError("grid is required when dealiasing a raw coefficient array")
    return np.asarray(hat) * grid.dealias_mask


# -- field-level operations -------------------------------------------------------

def divergence_vec(u: VectorField) -> ScalarField:
    return ScalarField._wrap(u.grid, div_hat(u.hat, u.grid))


def divergence_tensor(F: TensorField) -> VectorField:
    return VectorField._wrap(F.grid, div_hat(F.hat, F.grid))


def gradient(f: Field) -> Field:
    """Gradient of a scalar (-> VectorField) or vector field (-> TensorField)."""
    if f.rank == 0:
        return VectorField._wrap(f.grid, grad_hat(f.hat, f.grid))
    if f.rank == 1:
        return TensorField._wrap(f.grid, grad_hat(f.hat, f.grid))
    raise InvalidShape("gradient of a tensor field has rank 3; use grad_physical")


def grad_physical(f: Field) -> np.ndarray:
    return fft_inverse(grad_hat(f.hat, f.grid), f.grid)


def laplacian(f: Field) -> Field:
    return type(f)._wrap(f.grid, -f.grid.k2 * f.hat, f.divergence_free)


def project_divfree_vec(u: VectorField) -> VectorField:
    return VectorField._wrap(u.grid, project_hat(u.hat, u.grid), divergence_free=True)


def project_divfree_tensor(F: TensorField) -> TensorField:
    return TensorField._wrap(F.grid, project_hat(F.hat, F.grid), divergence_free=True)


def max_divergence(f: Field) -> float:
    """Max modulus of the (first-index) divergence on the grid."""
    return float(np.max(np.abs(fft_inverse(div_hat(f.hat, f.grid), f.grid))))


def gradient_norm_sq(f: Field) -> float:
    """``||grad f||^2`` over the torus."""
    return float(f.grid.volume * np.sum(f.grid.k2 * np.abs(f.hat) ** 2))


# -- grid transfer ----------------------------------------------------------------

def _resize_axis(hat: np.ndarray, axis: int, m: int) -> np.ndarray:
    n = hat.shape[axis]
    if m == n:
        return hat
    h = min(n, m) // 2
    shape = list(hat.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)

    def sl(a, b):
        idx = [slice(None)] * hat.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    # modes strictly inside the common band
    out[sl(0, h)] = hat[sl(0, h)]
    out[sl(m - h + 1, m)] = hat[sl(n - h + 1, n)]
    if m > n:
        # split the coarse Nyquist coefficient between +n/2 and -n/2
        half = hat[sl(h, h + 1)] / 2
        out[sl(h, h + 1)] = half
        out[sl(m - h, m - h + 1)] = half
    else:
        out[sl(h, h + 1)] = hat[sl(h, h + 1)] + hat[sl(n - h, n - h + 1)]
    return out


def transfer(f: Field, grid: Grid) -> Field:
    """Spectral prolongation or restriction of ``f`` onto ``grid``.

    Exact for fields whose spectrum fits on both grids.  Raises
    :class:`GridMismatch` when the grids differ in dimension or period, or when
    the finer mode count is not an integer multiple of the coarser one.
    """
    src = f.grid
    if src == grid:
        return f
    if src.d != grid.d or not np.isclose(src.length, grid.length, rtol=0, atol=1e-14):
        raise GridMismatch(f"cannot transfer between {src} and {grid}")
    lo, hi = sorted((src.n, grid.n))
    if hi % lo:
        raise GridMismatch(f"mode counts {src.n} and {grid.n} are not nested")
    hat = f.hat
    lead = hat.ndim - src.d
    for a in range(src.d):
        hat = _resize_axis(hat, lead + a, grid.n)
    return type(f)._wrap(grid, hat, f.divergence_free)
