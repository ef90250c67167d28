"""Per-x-mode elliptic solves on the channel.

Everything here works in rfft space along x: a 2D problem splits into
independent (Ny x Ny) dense linear systems, one per x-mode, which are
factorized once per (domain, parameter) combination and cached.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import DomainSpec, ScalarField, d2y_matrix, ddy_matrix

_NEUMANN_COMPAT_TOL = 1e-12


def to_modes(data: np.ndarray) -> np.ndarray:
    return np.fft.rfft(data, axis=0)


def from_modes(data_hat: np.ndarray, Nx: int) -> np.ndarray:
    return np.fft.irfft(data_hat, n=Nx, axis=0)


def _bc_rows_dirichlet(A: np.ndarray) -> None:
    A[0, :] = 0.0
    A[0, 0] = 1.0
    A[-1, :] = 0.0
    A[-1, -1] = 1.0


def _bc_rows_neumann(A: np.ndarray, D: np.ndarray) -> None:
    A[0, :] = D[0, :]
    A[-1, :] = D[-1, :]


@lru_cache(maxsize=16)
def _poisson_operators(domain: DomainSpec, bc: str):
    """Stacked inverses of (D2y - k^2) with the requested wall rows.

    The mean mode of the Neumann problem is singular; its entry is a
    pseudo-inverse together with the left null vector used for the
    compatibility check.
    """
    D = ddy_matrix(domain)
    D2 = d2y_matrix(domain)
    kx = domain.kx
    Ny = domain.Ny
    inv = np.zeros((kx.size, Ny, Ny))
    null_left = {}
    for m, k in enumerate(kx):
        A = D2 - k**2 * np.eye(Ny)
        if bc == "dirichlet":
            _bc_rows_dirichlet(A)
        elif bc == "neumann":
            _bc_rows_neumann(A, D)
        else:
            raise ValueError(f"unknown boundary condition {bc!r}")
        if bc == "neumann" and k == 0.0:
            inv[m] = np.linalg.pinv(A, rcond=1e-12)
            u_svd, s, _ = np.linalg.svd(A)
            z = u_svd[:, -1]
            null_left[m] = z / np.linalg.norm(z)
        else:
            inv[m] = np.linalg.inv(A)
    return inv, null_left


def poisson_solve_channel(rhs: ScalarField, bc: str) -> ScalarField:
    """Solve Lap(phi) = rhs, periodic in x, with phi = 0 (bc='dirichlet') or
    d(phi)/dy = 0 (bc='neumann') at the walls.

    Neumann data must be compatible: the component of the mean x-mode along
    the discrete left null vector is rejected above 1e-12 * ||rhs||.
    """
    d = rhs.domain
    inv, null_left = _poisson_operators(d, bc)
    rhs_hat = to_modes(rhs.data)
    rhs_hat[:, 0] = 0.0
    rhs_hat[:, -1] = 0.0
    if bc == "neumann":
        norm = np.linalg.norm(rhs.data) + 1e-300
        for m, z in null_left.items():
            defect = z @ rhs_hat[m]
            if abs(defect) > _NEUMANN_COMPAT_TOL * norm * np.sqrt(d.Nx):
                raise ValueError(
                    "incompatible Neumann data: nonzero discrete mean "
                    f"({abs(defect):.3e})"
                )
            rhs_hat[m] -= defect * z
    phi_hat = np.einsum("kij,kj->ki", inv, rhs_hat)
    phi = from_modes(phi_hat, d.Nx)
    return ScalarField(phi, d, rhs.time)


# ---------------------------------------------------------------------------
# Leray projection


@lru_cache(maxsize=16)
def _projection_operators(domain: DomainSpec):
    """Inverses of the projection Poisson problem built from the composed
    first-derivative operator, so the corrected field is divergence-free
    under the *same* discrete divergence used by diagnostics.

    System per mode k:  rows 0 and Ny-1 impose (Dy phi) = 0 at the walls
    (the normal velocity correction vanishes there); interior rows are
    (Dy Dy - k^2) phi = div.  Modes whose spectral x-derivative vanishes
    (k = 0 and Nyquist) are singular and use a pseudo-inverse.
    """
    D = ddy_matrix(domain)
    M = D @ D
    kx_eff = domain.kx.copy()
    if domain.Nx % 2 == 0:
        kx_eff[-1] = 0.0  # ddx annihilates the Nyquist mode
    Ny = domain.Ny
    inv = np.zeros((kx_eff.size, Ny, Ny))
    for m, k in enumerate(kx_eff):
        A = M - k**2 * np.eye(Ny)
        A[0, :] = D[0, :]
        A[-1, :] = D[-1, :]
        if k == 0.0:
            inv[m] = np.linalg.pinv(A, rcond=1e-11)
        else:
            inv[m] = np.linalg.inv(A)
    ik = 1j * domain.kx
    if domain.Nx % 2 == 0:
        ik = ik.copy()
        ik[-1] = 0.0
    return inv, D, ik


def projection_correction(domain: DomainSpec, div_hat: np.ndarray):
    """Gradient (gx_hat, gy_hat) of the pressure potential whose removal
    cancels the interior divergence (in rfft space)."""
    inv, D, ik = _projection_operators(domain)
    rhs = div_hat.copy()
    rhs[:, 0] = 0.0
    rhs[:, -1] = 0.0
    phi_hat = np.einsum("kij,kj->ki", inv, rhs)
    gx_hat = ik[:, None] * phi_hat
    gy_hat = phi_hat @ D.T
    return gx_hat, gy_hat


# ---------------------------------------------------------------------------
# Crank-Nicolson diffusion


@lru_cache(maxsize=64)
def _cn_operators(domain: DomainSpec, theta: float, bc: str, alpha: float):
    """Implicit/explicit Crank-Nicolson pairs per x-mode.

    Solves (I - theta*(D2 - k^2)) w_new = (I + theta*(D2 - k^2)) w_old + dt*rhs
    with wall rows replaced by the boundary condition:
      'dirichlet'  w = 0
      'robin'      dw/dy = +alpha*w at y=0 and dw/dy = -alpha*w at y=H
    Returns (inv_stack, explicit_stack); wall rows of the explicit operator
    are zero, so boundary data enters only through the implicit rows.
    """
    D = ddy_matrix(domain)
    D2 = d2y_matrix(domain)
    Ny = domain.Ny
    kx = domain.kx
    eye = np.eye(Ny)
    inv = np.zeros((kx.size, Ny, Ny))
    expl = np.zeros((kx.size, Ny, Ny))
    for m, k in enumerate(kx):
        L = D2 - k**2 * eye
        L[0, :] = 0.0
        L[-1, :] = 0.0
        B = eye - theta * L
        E = eye + theta * L
        if bc == "dirichlet":
            B[0, :] = 0.0
            B[0, 0] = 1.0
            B[-1, :] = 0.0
            B[-1, -1] = 1.0
        elif bc == "robin":
            B[0, :] = D[0, :]
            B[0, 0] -= alpha
            B[-1, :] = D[-1, :]
            B[-1, -1] += alpha
        else:
            raise ValueError(f"unknown boundary condition {bc!r}")
        E[0, :] = 0.0
        E[-1, :] = 0.0
        inv[m] = np.linalg.inv(B)
        expl[m] = E
    return inv, expl


def cn_diffuse(
    domain: DomainSpec,
    w_hat: np.ndarray,
    rhs_hat: np.ndarray,
    nu: float,
    dt: float,
    bc: str,
    alpha: float = 0.0,
) -> np.ndarray:
    """One Crank-Nicolson diffusion solve in rfft space.

    rhs_hat carries the already dt-scaled explicit terms (advection,
    forcing); its wall rows are overwritten by the boundary condition.
    """
    inv, expl = _cn_operators(domain, 0.5 * nu * dt, bc, alpha)
    b = np.einsum("kij,kj->ki", expl, w_hat) + rhs_hat
    b[:, 0] = 0.0
    b[:, -1] = 0.0
    return np.einsum("kij,kj->ki", inv, b)
