"""Channel grid, fields, differential operators, shifts and subdomain quadrature.

Geometry is a periodic channel: x in [0, Lx) periodic, y in [0, H] with
flat walls at y = 0 and y = H.  Fields are collocated on the nodes
x_i = i*Lx/Nx, y_j = j*H/(Ny-1); x-derivatives are Fourier-spectral,
y-derivatives are second-order centered with second-order one-sided
stencils at the walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline

DIV_TOL = 1e-10


class BCKind(Enum):
    NO_SLIP = "noslip"
    NAVIER_FRICTION = "navier"


@dataclass(frozen=True)
class DomainSpec:
    """Channel geometry, resolution and wall model.

    alpha0 and beta parameterize the inverse slip length of the
    Navier-friction condition, alpha(nu) = alpha0 * nu**(-beta); they are
    ignored under no-slip walls.
    """

    Lx: float
    H: float
    Nx: int
    Ny: int
    T_final: float = 1.0
    bc_kind: BCKind = BCKind.NO_SLIP
    alpha0: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.Lx > 0 and self.H > 0):
            raise ValueError("Lx and H must be positive")
        if self.Nx < 8 or self.Nx % 2 != 0:
            raise ValueError("Nx must be even and >= 8")
        if self.Ny < 9:
            raise ValueError("Ny must be >= 9")
        if self.T_final < 0:
            raise ValueError("T_final must be nonnegative")
        if self.bc_kind is BCKind.NAVIER_FRICTION:
            if self.alpha0 <= 0:
                raise ValueError("alpha0 must be positive for Navier-friction walls")
            if not (0.0 <= self.beta <= 1.0):
                raise ValueError("beta must lie in [0, 1]")

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return self.H / (self.Ny - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny) * self.dy

    @property
    def kx(self) -> np.ndarray:
        """Physical x-wavenumbers of the rfft modes."""
        return 2.0 * np.pi / self.Lx * np.arange(self.Nx // 2 + 1)

    def alpha(self, nu: float) -> float:
        """Effective inverse slip length at viscosity nu."""
        return self.alpha0 * nu ** (-self.beta)

    def quadrature_weights(self) -> np.ndarray:
        """(Nx, Ny) trapezoidal weights: uniform in x (periodic), trapezoid in y."""
        wy = np.full(self.Ny, self.dy)
        wy[0] = wy[-1] = 0.5 * self.dy
        return np.full((self.Nx, 1), self.dx) * wy[None, :]


@dataclass
class ScalarField:
    """A scalar sampled on the channel grid at one instant."""

    data: np.ndarray
    domain: DomainSpec
    time: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (self.domain.Nx, self.domain.Ny):
            raise ValueError(
                f"field shape {self.data.shape} does not match grid "
                f"({self.domain.Nx}, {self.domain.Ny})"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field contains NaN or Inf")

    def copy(self) -> "ScalarField":
        return ScalarField(self.data.copy(), self.domain, self.time)

    def l2_norm(self) -> float:
        w = self.domain.quadrature_weights()
        return float(np.sqrt(np.sum(w * self.data**2)))


@dataclass
class VelocityField:
    """Solenoidal velocity (u, v) at viscosity nu."""

    u: ScalarField
    v: ScalarField
    nu: float = 0.0

    def __post_init__(self):
        if self.u.domain is not self.v.domain and self.u.domain != self.v.domain:
            raise ValueError("u and v must share a domain")
        if self.nu < 0:
            raise ValueError("viscosity must be nonnegative")

    @property
    def domain(self) -> DomainSpec:
        return self.u.domain

    @property
    def time(self) -> float:
        return self.u.time

    def copy(self) -> "VelocityField":
        return VelocityField(self.u.copy(), self.v.copy(), self.nu)

    def l2_norm(self) -> float:
        w = self.domain.quadrature_weights()
        return float(np.sqrt(np.sum(w * (self.u.data**2 + self.v.data**2))))

    def kinetic_energy(self) -> float:
        return 0.5 * self.l2_norm() ** 2

    def check_invariants(self, div_tol: float = DIV_TOL) -> None:
        """Impermeability at the walls, tangential wall condition, interior
        divergence below div_tol * ||u||.

        Divergence is checked on interior rows only: at the wall rows the
        discrete continuity equation is replaced by the boundary conditions.
        """
        if np.max(np.abs(self.v.data[:, 0])) != 0.0 or np.max(np.abs(self.v.data[:, -1])) != 0.0:
            raise ValueError("impermeability violated: v nonzero on a wall row")
        if self.domain.bc_kind is BCKind.NO_SLIP:
            wall_u = max(np.max(np.abs(self.u.data[:, 0])), np.max(np.abs(self.u.data[:, -1])))
            if wall_u != 0.0:
                raise ValueError("no-slip violated: u nonzero on a wall row")
        norm = self.l2_norm()
        div = divergence(self).data[:, 1:-1]
        if np.max(np.abs(div)) > div_tol * max(norm, 1e-300):
            raise ValueError(
                f"divergence {np.max(np.abs(div)):.3e} exceeds {div_tol:.1e} * ||u||"
            )


@dataclass
class VorticityField:
    """Scalar vorticity w = dv/dx - du/dy."""

    w: ScalarField

    @property
    def domain(self) -> DomainSpec:
        return self.w.domain


@dataclass(frozen=True)
class Subdomain:
    """Open rectangle strictly inside the channel (in y; x is periodic)."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("need x_lo < x_hi")
        if not 0.0 < self.y_lo < self.y_hi:
            raise ValueError("need 0 < y_lo < y_hi")

    def margin(self, domain: DomainSpec) -> float:
        """Distance from the rectangle to the walls."""
        m = min(self.y_lo, domain.H - self.y_hi)
        if m <= 0:
            raise ValueError("subdomain touches or crosses a wall")
        return m


# ---------------------------------------------------------------------------
# derivatives


def ddx(data: np.ndarray, domain: DomainSpec) -> np.ndarray:
    """Spectral x-derivative; the Nyquist mode derivative is set to zero."""
    fh = np.fft.rfft(data, axis=0)
    ik = 1j * domain.kx
    if domain.Nx % 2 == 0:
        ik = ik.copy()
        ik[-1] = 0.0
    return np.fft.irfft(fh * ik[:, None], n=domain.Nx, axis=0)


def ddy(data: np.ndarray, domain: DomainSpec) -> np.ndarray:
    """Second-order y-derivative, one-sided second order at the walls."""
    dy = domain.dy
    out = np.empty_like(data)
    out[:, 1:-1] = (data[:, 2:] - data[:, :-2]) / (2.0 * dy)
    out[:, 0] = (-3.0 * data[:, 0] + 4.0 * data[:, 1] - data[:, 2]) / (2.0 * dy)
    out[:, -1] = (3.0 * data[:, -1] - 4.0 * data[:, -2] + data[:, -3]) / (2.0 * dy)
    return out


def ddy_matrix(domain: DomainSpec) -> np.ndarray:
    """Dense (Ny, Ny) matrix representation of ddy (acts on y-columns)."""
    Ny, dy = domain.Ny, domain.dy
    D = np.zeros((Ny, Ny))
    for j in range(1, Ny - 1):
        D[j, j - 1] = -0.5 / dy
        D[j, j + 1] = 0.5 / dy
    D[0, 0], D[0, 1], D[0, 2] = -1.5 / dy, 2.0 / dy, -0.5 / dy
    D[-1, -1], D[-1, -2], D[-1, -3] = 1.5 / dy, -2.0 / dy, 0.5 / dy
    return D


def d2y_matrix(domain: DomainSpec) -> np.ndarray:
    """Dense 3-point second-derivative matrix; wall rows are zero (to be
    replaced by boundary-condition rows)."""
    Ny, dy = domain.Ny, domain.dy
    A = np.zeros((Ny, Ny))
    for j in range(1, Ny - 1):
        A[j, j - 1] = 1.0 / dy**2
        A[j, j] = -2.0 / dy**2
        A[j, j + 1] = 1.0 / dy**2
    return A


def curl(vel: VelocityField) -> VorticityField:
    """Discrete vorticity dv/dx - du/dy."""
    d = vel.domain
    w = ddx(vel.v.data, d) - ddy(vel.u.data, d)
    return VorticityField(ScalarField(w, d, vel.time))


def divergence(vel: VelocityField) -> ScalarField:
    """Discrete divergence du/dx + dv/dy (same stencils as curl)."""
    d = vel.domain
    return ScalarField(ddx(vel.u.data, d) + ddy(vel.v.data, d), d, vel.time)


def gradient(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    return ddx(f.data, f.domain), ddy(f.data, f.domain)


# ---------------------------------------------------------------------------
# shifts


@dataclass
class ShiftedField:
    """f(x + r) with a per-row validity mask (rows shifted out of [0, H])."""

    data: np.ndarray
    valid_rows: np.ndarray  # boolean, length Ny
    domain: DomainSpec


def shift_sample(f: ScalarField, r: tuple[float, float]) -> ShiftedField:
    """Sample f(x + r): periodic wrap in x (spectral for off-grid shifts),
    exact row shift for grid-aligned r_y, cubic interpolation otherwise.

    Rows whose target y + r_y leaves [0, H] are flagged invalid.
    """
    d = f.domain
    rx, ry = float(r[0]), float(r[1])
    if abs(ry) >= d.H:
        raise ValueError("y-shift moves every row out of the channel")

    data = f.data
    # x-shift
    nx = rx / d.dx
    if abs(nx - round(nx)) < 1e-9:
        data = np.roll(data, -int(round(nx)), axis=0)
    else:
        fh = np.fft.rfft(data, axis=0)
        data = np.fft.irfft(fh * np.exp(1j * d.kx * rx)[:, None], n=d.Nx, axis=0)

    # y-shift
    my = ry / d.dy
    valid = np.ones(d.Ny, dtype=bool)
    if abs(my - round(my)) < 1e-9:
        m = int(round(my))
        out = np.zeros_like(data)
        if m >= 0:
            if m > 0:
                out[:, : d.Ny - m] = data[:, m:]
                valid[d.Ny - m:] = False
            else:
                out = data
        else:
            out[:, -m:] = data[:, :m]
            valid[:-m] = False
        data = out
    else:
        y_new = d.y + ry
        valid = (y_new >= 0.0) & (y_new <= d.H)
        spline = CubicSpline(d.y, data, axis=1)
        out = np.zeros_like(data)
        out[:, valid] = spline(y_new[valid])
        data = out

    if not np.any(valid):
        raise ValueError("y-shift leaves no valid rows")
    return ShiftedField(data, valid, d)


# ---------------------------------------------------------------------------
# subdomain quadrature


@dataclass
class Restriction:
    """Grid nodes of a subdomain together with their quadrature weights."""

    ix: np.ndarray
    iy: np.ndarray
    weights: np.ndarray  # (len(ix), len(iy))
    domain: DomainSpec

    def values(self, data: np.ndarray) -> np.ndarray:
        return data[np.ix_(self.ix, self.iy)]

    def integrate(self, data: np.ndarray, row_valid: np.ndarray | None = None) -> float:
        w = self.weights
        if row_valid is not None:
            w = w * row_valid[self.iy][None, :]
        return float(np.sum(w * self.values(data)))

    def area(self, row_valid: np.ndarray | None = None) -> float:
        w = self.weights
        if row_valid is not None:
            w = w * row_valid[self.iy][None, :]
        return float(np.sum(w))


def _axis_weights(n_sel: int, spacing: float, full_period: bool) -> np.ndarray:
    w = np.full(n_sel, spacing)
    if not full_period:
        if n_sel == 1:
            w[:] = spacing
        else:
            w[0] = w[-1] = 0.5 * spacing
    return w


def restrict(f_or_domain, U: Subdomain) -> Restriction:
    """Quadrature over the nodes of U (trapezoidal weights at the edges).

    Accepts a ScalarField or a DomainSpec.
    """
    d = f_or_domain.domain if isinstance(f_or_domain, ScalarField) else f_or_domain
    U.margin(d)
    tol = 1e-12
    ix = np.nonzero((d.x >= U.x_lo - tol * d.Lx) & (d.x <= U.x_hi + tol * d.Lx))[0]
    iy = np.nonzero((d.y >= U.y_lo - tol * d.H) & (d.y <= U.y_hi + tol * d.H))[0]
    if ix.size == 0 or iy.size == 0:
        raise ValueError("subdomain contains no grid nodes")
    full_x = ix.size == d.Nx
    wx = _axis_weights(ix.size, d.dx, full_period=full_x)
    wy = _axis_weights(iy.size, d.dy, full_period=False)
    return Restriction(ix, iy, wx[:, None] * wy[None, :], d)


# ---------------------------------------------------------------------------
# stream function (defined here to keep field reconstruction with the
# operators; the elliptic solve itself lives in elliptic.py)


def stream_function(w: VorticityField, nu: float = 0.0) -> VelocityField:
    """Velocity reconstruction from vorticity: solve -Lap(psi) = w with
    psi = 0 on both walls, return (d_y psi, -d_x psi).

    The output is impermeable and discretely solenoidal at every node
    (the x- and y-derivative operators commute).
    """
    from .elliptic import poisson_solve_channel

    d = w.domain
    psi = poisson_solve_channel(ScalarField(-w.w.data, d, w.w.time), bc="dirichlet")
    u = ddy(psi.data, d)
    v = -ddx(psi.data, d)
    v[:, 0] = 0.0  # psi vanishes on the walls; remove transform round-off
    v[:, -1] = 0.0
    return VelocityField(
        ScalarField(u, d, w.w.time), ScalarField(v, d, w.w.time), nu
    )
