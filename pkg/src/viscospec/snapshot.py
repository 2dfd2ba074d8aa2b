"""Binary snapshots of states and eigenbases.

State file, all little-endian::

    magic    8 bytes   b"VSCSNAP\\0"
    version  uint32    1
    d, n     uint32 x2
    reserved uint32    0
    length, t, eps     float64 x3
    payload  complex128 (re, im as float64) spectral coefficients of
             u_1..u_d then F_11, F_12, .., F_dd, each in row-major mode order

Basis file::

    magic    8 bytes   b"VSCBASIS"
    version  uint32    1
    nx, ny, k          uint32 x3
    lx, ly             float64 x2
    k records: lambda float64, then Phi_11, Phi_12, Phi_21, Phi_22 node values
             (float64, row-major over (x, y))
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .dynamics import SimState
from .errors import BadMagic, SnapshotError, TruncatedPayload, VersionUnsupported
from .neumann_basis import EigenPair, RectGrid
from .spectral import Grid, TensorField, VectorField

STATE_MAGIC = b"VSCSNAP\0"
BASIS_MAGIC = b"VSCBASIS"
VERSION = 1
_STATE_HEADER = struct.Struct("<8sIIII3d")
_BASIS_HEADER = struct.Struct("<8sIIII2d")
_C16 = np.dtype("<c16")
_F8 = np.dtype("<f8")


def state_bytes(s: SimState) -> bytes:
    g = s.grid
    head = _STATE_HEADER.pack(STATE_MAGIC, VERSION, g.d, g.n, 0, g.length, s.t, s.eps)
    body = np.concatenate([s.u.hat.reshape(-1), s.F.hat.reshape(-1)]).astype(_C16)
    return head + body.tobytes()


def save_snapshot(path: str | Path, s: SimState) -> None:
    Path(path).write_bytes(state_bytes(s))


def _check_header(buf: bytes, st: struct.Struct, magic: bytes):
    if len(buf) < len(magic) or buf[: len(magic)] != magic:
        raise BadMagic(f"expected magic {magic!r}")
    if len(buf) < st.size:
        raise TruncatedPayload(f"header needs {st.size} bytes, file has {len(buf)}")
    fields = st.unpack_from(buf)
    if fields[1] != VERSION:
        raise VersionUnsupported(f"version {fields[1]} (supported: {VERSION})")
    return fields


def state_from_bytes(buf: bytes) -> SimState:
    _, _, d, n, _, length, t, eps = _check_header(buf, _STATE_HEADER, STATE_MAGIC)
    grid = Grid(d, n, length)
    count = (d + d * d) * n**d
    need = _STATE_HEADER.size + count * _C16.itemsize
    if len(buf) < need:
        raise TruncatedPayload(f"payload needs {need} bytes, file has {len(buf)}")
    if len(buf) > need:
        raise SnapshotError(f"{len(buf) - need} trailing bytes after payload")
    data = np.frombuffer(buf, dtype=_C16, count=count, offset=_STATE_HEADER.size)
    data = data.astype(np.complex128)
    split = d * n**d
    u = data[:split].reshape((d,) + grid.shape)
    F = data[split:].reshape((d, d) + grid.shape)
    return SimState(t, VectorField(grid, u, divergence_free=True),
                    TensorField(grid, F, divergence_free=True), eps)


def load_snapshot(path: str | Path) -> SimState:
    return state_from_bytes(Path(path).read_bytes())


def save_basis(path: str | Path, basis: list[EigenPair]) -> None:
    if not basis:
        raise ValueError("basis is empty")
    g = basis[0].grid
    parts = [_BASIS_HEADER.pack(BASIS_MAGIC, VERSION, g.nx, g.ny, len(basis), g.lx, g.ly)]
    for p in basis:
        parts.append(np.float64(p.lam).astype(_F8).tobytes())
        parts.append(np.ascontiguousarray(p.phi, dtype=_F8).tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_basis(path: str | Path) -> list[EigenPair]:
    buf = Path(path).read_bytes()
    _, _, nx, ny, k, lx, ly = _check_header(buf, _BASIS_HEADER, BASIS_MAGIC)
    grid = RectGrid(nx, ny, lx, ly)
    rec = 1 + 4 * nx * ny
    need = _BASIS_HEADER.size + k * rec * _F8.itemsize
    if len(buf) < need:
        raise TruncatedPayload(f"basis needs {need} bytes, file has {len(buf)}")
    if len(buf) > need:
        raise SnapshotError(f"{len(buf) - need} trailing bytes after payload")
    data = np.frombuffer(buf, dtype=_F8, count=k * rec, offset=_BASIS_HEADER.size).reshape(k, rec)
    return [EigenPair(float(r[0]), r[1:].reshape(2, 2, nx, ny).astype(float), grid) for r in data]
