"""NSFLD1 velocity snapshot files.

Layout (all little-endian): 8-byte magic "NSFLD1\\0\\0", packed header
{version u32, Nx u32, Ny u32, Lx f64, H f64, time f64, nu f64, bc u8,
beta f64, alpha0 f64}, then u and v as row-major float64 arrays.
Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import BCKind, DomainSpec, ScalarField, VelocityField

MAGIC = b"NSFLD1\x00\x00"
VERSION = 1
_HEADER = struct.Struct("<IIIddddBdd")

_BC_CODE = {BCKind.NO_SLIP: 0, BCKind.NAVIER_FRICTION: 1}
_BC_FROM_CODE = {v: k for k, v in _BC_CODE.items()}


class SnapshotFormatError(ValueError):
    """Malformed NSFLD1 file; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def save_snapshot(path, vel: VelocityField) -> None:
    d = vel.domain
    header = _HEADER.pack(
        VERSION, d.Nx, d.Ny, d.Lx, d.H, vel.time, vel.nu,
        _BC_CODE[d.bc_kind], d.beta, d.alpha0,
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header)
        fh.write(np.ascontiguousarray(vel.u.data, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(vel.v.data, dtype="<f8").tobytes())


def load_snapshot(path) -> VelocityField:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise SnapshotFormatError("bad magic", 0)
    off = 8
    if len(raw) < off + _HEADER.size:
        raise SnapshotFormatError("truncated header", len(raw))
    version, Nx, Ny, Lx, H, time, nu, bc, beta, alpha0 = _HEADER.unpack_from(raw, off)
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}", off)
    off += _HEADER.size
    n = Nx * Ny * 8
    if len(raw) < off + 2 * n:
        raise SnapshotFormatError("truncated payload", len(raw))
    u = np.frombuffer(raw, dtype="<f8", count=Nx * Ny, offset=off).reshape(Nx, Ny)
    bad = np.nonzero(~np.isfinite(u.ravel()))[0]
    if bad.size:
        raise SnapshotFormatError("non-finite value in u payload", off + int(bad[0]) * 8)
    off += n
    v = np.frombuffer(raw, dtype="<f8", count=Nx * Ny, offset=off).reshape(Nx, Ny)
    bad = np.nonzero(~np.isfinite(v.ravel()))[0]
    if bad.size:
        raise SnapshotFormatError("non-finite value in v payload", off + int(bad[0]) * 8)
    domain = DomainSpec(
        Lx=Lx, H=H, Nx=Nx, Ny=Ny, bc_kind=_BC_FROM_CODE[bc],
        alpha0=alpha0, beta=beta,
    )
    return VelocityField(
        ScalarField(u.copy(), domain, time), ScalarField(v.copy(), domain, time), nu
    )
