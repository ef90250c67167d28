"""Functional-norm measurements on channel fields.

Structure functions over shift sets, Besov difference norms, localized
fractional Sobolev norms via cutoff + periodic extension, and the
embedding / cutoff-inequality verifiers.  All norms are L2-based (p = 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    DomainSpec,
    Restriction,
    ScalarField,
    Subdomain,
    VelocityField,
    ddx,
    ddy,
    restrict,
    shift_sample,
)

_DEFAULT_DIRECTIONS = np.array(
    [
        (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0),
        (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0),
    ]
) / np.array([1.0, 1.0, 1.0, 1.0, np.sqrt(2), np.sqrt(2), np.sqrt(2), np.sqrt(2)])[:, None]


@dataclass(frozen=True)
class ShiftSet:
    """Displacement directions and magnitudes used for increments."""

    directions: tuple  # tuple of (dx, dy) unit vectors
    magnitudes: tuple  # strictly increasing lengths

    def __post_init__(self):
        mags = np.asarray(self.magnitudes)
        if mags.size == 0 or np.any(np.diff(mags) <= 0):
            raise ValueError("magnitudes must be strictly increasing")

    @classmethod
    def for_subdomain(
        cls,
        domain: DomainSpec,
        U: Subdomain,
        n_magnitudes: int = 12,
        directions: np.ndarray | None = None,
        r_min: float | None = None,
        r_max_frac: float = 0.95,
    ) -> "ShiftSet":
        """Log-spaced magnitudes from the grid spacing to 0.95 * dist(U, walls)."""
        margin = U.margin(domain)
        lo = r_min if r_min is not None else min(domain.dx, domain.dy)
        hi = r_max_frac * margin
        if hi <= lo:
            raise ValueError("subdomain margin too small for any shift")
        mags = np.geomspace(lo, hi, n_magnitudes)
        # snap to distinct grid multiples of the finer spacing where possible
        h = min(domain.dx, domain.dy)
        snapped = np.unique(np.maximum(1, np.round(mags / h)) * h)
        snapped = snapped[snapped <= hi + 1e-12]
        dirs = _DEFAULT_DIRECTIONS if directions is None else np.asarray(directions)
        return cls(
            directions=tuple(map(tuple, dirs)),
            magnitudes=tuple(snapped.tolist()),
        )

    def displacement(self, direction, magnitude, domain: DomainSpec) -> tuple[float, float]:
        """r = magnitude * direction with components snapped to the grid."""
        rx = magnitude * direction[0]
        ry = magnitude * direction[1]
        rx = round(rx / domain.dx) * domain.dx
        ry = round(ry / domain.dy) * domain.dy
        return rx, ry


@dataclass
class StructureFunctionTable:
    """Time-integrated second-order structure function over a subdomain."""

    U: Subdomain
    shifts: ShiftSet
    values: np.ndarray  # (n_directions, n_magnitudes)
    r_actual: np.ndarray  # (n_directions, n_magnitudes) actual |r| after snapping
    time_window: tuple[float, float]
    n_snapshots: int

    def direction_average(self) -> tuple[np.ndarray, np.ndarray]:
        """(mean |r|, mean S2) per magnitude over directions with valid data."""
        with np.errstate(invalid="ignore"):
            r = np.nanmean(np.where(self.r_actual > 0, self.r_actual, np.nan), axis=0)
            s = np.nanmean(np.where(self.r_actual > 0, self.values, np.nan), axis=0)
        good = np.isfinite(r) & np.isfinite(s)
        return r[good], s[good]


def _increment_sq_integral(
    vel: VelocityField, r: tuple[float, float], R: Restriction
) -> float:
    """Integral over U (valid rows only) of |u(x+r) - u(x)|^2."""
    su = shift_sample(vel.u, r)
    sv = shift_sample(vel.v, r)
    diff = (su.data - vel.u.data) ** 2 + (sv.data - vel.v.data) ** 2
    return R.integrate(diff, row_valid=su.valid_rows)


def structure_function(
    snapshots: list[VelocityField], U: Subdomain, shifts: ShiftSet
) -> StructureFunctionTable:
    """S2(r; U) = trapezoid-in-time of the squared-increment integral, both
    velocity components summed, rows shifted out of the channel excluded."""
    if not snapshots:
        raise ValueError("empty snapshot series")
    domain = snapshots[0].domain
    margin = U.margin(domain)
    for m in shifts.magnitudes:
        if m >= margin:
            raise ValueError(f"shift magnitude {m} >= dist(U, walls) = {margin}")
    R = restrict(domain, U)
    times = np.array([s.time for s in snapshots])
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must be increasing")
    wt = _trapezoid_weights(times)

    ndir, nmag = len(shifts.directions), len(shifts.magnitudes)
    values = np.zeros((ndir, nmag))
    r_act = np.zeros((ndir, nmag))
    for i, direction in enumerate(shifts.directions):
        for j, mag in enumerate(shifts.magnitudes):
            r = shifts.displacement(direction, mag, domain)
            r_act[i, j] = np.hypot(*r)
            acc = 0.0
            for snap, w in zip(snapshots, wt):
                acc += w * _increment_sq_integral(snap, r, R)
            values[i, j] = acc
    return StructureFunctionTable(
        U=U,
        shifts=shifts,
        values=values,
        r_actual=r_act,
        time_window=(float(times[0]), float(times[-1])),
        n_snapshots=len(snapshots),
    )


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    if times.size == 1:
        return np.array([1.0])  # single slice: plain spatial integral
    w = np.zeros_like(times)
    w[:-1] += 0.5 * np.diff(times)
    w[1:] += 0.5 * np.diff(times)
    return w


# ---------------------------------------------------------------------------
# norm reports


@dataclass
class NormReport:
    kind: str
    value: float
    region: Subdomain | None = None
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "params": dict(sorted(self.params.items())),
        }


def l2_norm_subdomain(f, U: Subdomain) -> float:
    if isinstance(f, VelocityField):
        R = restrict(f.domain, U)
        return float(np.sqrt(R.integrate(f.u.data**2 + f.v.data**2)))
    R = restrict(f.domain, U)
    return float(np.sqrt(R.integrate(f.data**2)))


def besov_norm(f, sigma: float, U: Subdomain, shifts: ShiftSet) -> NormReport:
    """Discrete B2^{sigma,inf}(U) norm: ||f||_{L2(U)} plus the sup over the
    shift set of the |r|^-sigma weighted increment L2 norm."""
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (0, 1)")
    domain = f.domain
    R = restrict(domain, U)
    base = l2_norm_subdomain(f, U)
    per_shift = {}
    sup = 0.0
    for direction in shifts.directions:
        for mag in shifts.magnitudes:
            r = shifts.displacement(direction, mag, domain)
            rn = np.hypot(*r)
            if rn == 0.0 or rn >= U.margin(domain):
                continue
            if isinstance(f, VelocityField):
                val = np.sqrt(_increment_sq_integral(f, r, R))
            else:
                sf = shift_sample(f, r)
                val = np.sqrt(R.integrate((sf.data - f.data) ** 2, row_valid=sf.valid_rows))
            q = val / rn**sigma
            per_shift[(direction, mag)] = q
            sup = max(sup, q)
    return NormReport(
        kind="besov",
        value=base + sup,
        region=U,
        params={"sigma": sigma, "p": 2},
        details={"l2": base, "seminorm": sup, "per_shift": per_shift},
    )


# ---------------------------------------------------------------------------
# cutoffs and localized Sobolev norms


def _bump_ramp(t: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - t^2)) on [0, 1): 1 at t=0 decaying smoothly to 0 at t=1."""
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    out[t <= 0.0] = 1.0
    return out


def _axis_profile(coords: np.ndarray, lo_out, lo_in, hi_in, hi_out) -> np.ndarray:
    """1 on [lo_in, hi_in], 0 outside (lo_out, hi_out), bump ramps between."""
    prof = np.ones_like(coords)
    left = coords < lo_in
    if lo_in > lo_out:
        t = (lo_in - coords[left]) / (lo_in - lo_out)
        prof[left] = _bump_ramp(t)
    else:
        prof[left] = 0.0
    right = coords > hi_in
    if hi_out > hi_in:
        t = (coords[right] - hi_in) / (hi_out - hi_in)
        prof[right] = _bump_ramp(t)
    else:
        prof[right] = 0.0
    return prof


@dataclass
class Cutoff:
    """Smooth cutoff: 1 on U_inner, supported inside U_outer."""

    U_outer: Subdomain
    U_inner: Subdomain
    values: ScalarField

    @classmethod
    def build(cls, domain: DomainSpec, U_outer: Subdomain, U_inner: Subdomain) -> "Cutoff":
        if not (
            U_outer.x_lo <= U_inner.x_lo
            and U_inner.x_hi <= U_outer.x_hi
            and U_outer.y_lo <= U_inner.y_lo
            and U_inner.y_hi <= U_outer.y_hi
        ):
            raise ValueError("inner rectangle must sit inside the outer one")
        min_gap = 4 * max(domain.dx, domain.dy)
        gaps = (
            U_inner.x_lo - U_outer.x_lo, U_outer.x_hi - U_inner.x_hi,
            U_inner.y_lo - U_outer.y_lo, U_outer.y_hi - U_inner.y_hi,
        )
        full_x = U_outer.x_lo <= 0.0 and U_outer.x_hi >= domain.Lx
        checked = gaps[2:] if full_x else gaps
        if any(g < min_gap for g in checked):
            raise ValueError("cutoff transition thinner than 4 grid cells")
        if full_x:
            px = np.ones(domain.Nx)
        else:
            px = _axis_profile(
                domain.x, U_outer.x_lo, U_inner.x_lo, U_inner.x_hi, U_outer.x_hi
            )
        py = _axis_profile(
            domain.y, U_outer.y_lo, U_inner.y_lo, U_inner.y_hi, U_outer.y_hi
        )
        chi = px[:, None] * py[None, :]
        return cls(U_outer, U_inner, ScalarField(chi, domain))

    def holder_norm(self, s: float, shifts: ShiftSet) -> float:
        """Discrete C^s norm: sup|chi| + sup_r max_x |chi(x+r)-chi(x)| / |r|^s
        over the shift set."""
        chi = self.values
        domain = chi.domain
        semi = 0.0
        for direction in shifts.directions:
            for mag in shifts.magnitudes:
                r = shifts.displacement(direction, mag, domain)
                rn = np.hypot(*r)
                if rn == 0.0:
                    continue
                sf = shift_sample(chi, r)
                diff = np.abs(sf.data - chi.data)[:, sf.valid_rows]
                if diff.size:
                    semi = max(semi, float(np.max(diff)) / rn**s)
        return float(np.max(np.abs(chi.data))) + semi


def extend_periodic(data: np.ndarray, domain: DomainSpec) -> tuple[np.ndarray, float, float]:
    """Zero-extend a wall-vanishing field to the doubly periodic box
    [0,Lx) x [0,2H); returns (array, box Lx, box Ly)."""
    Ny_ext = 2 * (domain.Ny - 1)
    if np.max(np.abs(data[:, 0])) > 0 or np.max(np.abs(data[:, -1])) > 0:
        raise ValueError("field support touches the periodic extension seam")
    ext = np.zeros((domain.Nx, Ny_ext))
    ext[:, : domain.Ny] = data
    return ext, domain.Lx, 2.0 * domain.H


def _periodic_hs_norm(ext: np.ndarray, Lbx: float, Lby: float, s: float) -> float:
    nx, ny = ext.shape
    fh = np.fft.fft2(ext) / (nx * ny)
    kx = 2.0 * np.pi * np.fft.fftfreq(nx, d=1.0 / nx) / Lbx
    ky = 2.0 * np.pi * np.fft.fftfreq(ny, d=1.0 / ny) / Lby
    mult = (1.0 + kx[:, None] ** 2 + ky[None, :] ** 2) ** s
    return float(np.sqrt(Lbx * Lby * np.sum(mult * np.abs(fh) ** 2)))


def sobolev_norm_cutoff(f, s: float, chi: Cutoff) -> NormReport:
    """||chi * f||_{H^s} by zero extension to a doubly periodic box and the
    Fourier multiplier (1 + |k|^2)^{s/2}."""
    if not -2.0 < s < 1.0:
        raise ValueError("s must lie in (-2, 1)")
    domain = chi.values.domain
    if isinstance(f, VelocityField):
        comps = [f.u.data, f.v.data]
    else:
        comps = [f.data]
    total = 0.0
    for comp in comps:
        ext, lbx, lby = extend_periodic(chi.values.data * comp, domain)
        total += _periodic_hs_norm(ext, lbx, lby, s) ** 2
    return NormReport(
        kind="sobolev",
        value=float(np.sqrt(total)),
        region=chi.U_outer,
        params={"s": s},
    )


def sobolev_norm_series(snapshots, s: float, chi: Cutoff) -> NormReport:
    """L2-in-time of the cutoff H^s norm over a snapshot series."""
    times = np.array([f.time for f in snapshots])
    wt = _trapezoid_weights(times)
    vals = np.array([sobolev_norm_cutoff(f, s, chi).value for f in snapshots])
    return NormReport(
        kind="sobolev_l2t",
        value=float(np.sqrt(np.sum(wt * vals**2))),
        region=chi.U_outer,
        params={"s": s},
        details={"per_snapshot": vals.tolist()},
    )


def lq_norm_subdomain(f, q: float, U: Subdomain) -> float:
    domain = f.domain if isinstance(f, ScalarField) else f.domain
    R = restrict(domain, U)
    if isinstance(f, VelocityField):
        mag = np.sqrt(f.u.data**2 + f.v.data**2)
    else:
        mag = np.abs(f.data)
    return float(R.integrate(mag**q) ** (1.0 / q))


# ---------------------------------------------------------------------------
# embedding verifiers


@dataclass
class EmbeddingReport:
    s: float
    eps: float
    q: float
    ratios_besov_to_sobolev: np.ndarray
    ratios_besov_to_lq: np.ndarray
    ratios_sobolev_to_besov: np.ndarray

    def max_ratios(self) -> dict:
        return {
            "besov_to_sobolev": float(np.max(self.ratios_besov_to_sobolev)),
            "besov_to_lq": float(np.max(self.ratios_besov_to_lq)),
            "sobolev_to_besov": float(np.max(self.ratios_sobolev_to_besov)),
        }

    def all_finite(self) -> bool:
        return all(np.isfinite(v) for v in self.max_ratios().values())


def make_band_limited_field(
    domain: DomainSpec,
    support: Subdomain,
    band: tuple[float, float],
    spectral_exponent: float,
    seed: int,
) -> ScalarField:
    """Random band-limited scalar with mode amplitudes
    (1+|k|^2)^(-spectral_exponent/2), windowed into `support`.  Phases are
    drawn for the whole mode lattice, so changing the band keeps a seeded
    field nested."""
    rng = np.random.default_rng(seed)
    n_kx = domain.Nx // 3
    m_max = (domain.Ny - 1) // 2
    kxx = 2.0 * np.pi * np.arange(n_kx + 1) / domain.Lx
    kyy = np.pi * np.arange(1, m_max + 1) / domain.H
    kk = np.hypot(kxx[:, None], kyy[None, :])
    theta = rng.uniform(0.0, 2.0 * np.pi, size=kk.shape)
    amp = (1.0 + kk**2) ** (-spectral_exponent / 2.0)
    amp[(kk < band[0]) | (kk > band[1])] = 0.0
    coeff = amp * np.exp(1j * theta)
    ex = np.exp(1j * kxx[None, :] * domain.x[:, None])
    sy = np.sin(kyy[:, None] * domain.y[None, :])
    data = np.real(ex @ (coeff @ sy))
    win_x = (
        np.ones(domain.Nx)
        if (support.x_lo <= 0.0 and support.x_hi >= domain.Lx)
        else _axis_profile(
            domain.x, support.x_lo,
            support.x_lo + 0.25 * (support.x_hi - support.x_lo),
            support.x_hi - 0.25 * (support.x_hi - support.x_lo),
            support.x_hi,
        )
    )
    win_y = _axis_profile(
        domain.y, support.y_lo,
        support.y_lo + 0.25 * (support.y_hi - support.y_lo),
        support.y_hi - 0.25 * (support.y_hi - support.y_lo),
        support.y_hi,
    )
    return ScalarField(data * win_x[:, None] * win_y[None, :], domain)


def verify_embedding_chain(
    domain: DomainSpec,
    U: Subdomain,
    V: Subdomain,
    s: float,
    eps: float,
    q: float,
    n_fields: int = 200,
    band: tuple[float, float] = (2.0, 16.0),
    seed: int = 0,
) -> EmbeddingReport:
    """Ratios for the three continuous embeddings on an ensemble of random
    band-limited fields supported inside V (d = 2, p = 2):

        B2^{s,inf}(U) in W^{s-eps,2}(V),  B2^{s,inf}(U) in L^q(V)  for
        q < 4/(2-2s),  and  W^{s,2}(U) in B2^{s,inf}(V).
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    if not 0.0 < eps < s:
        raise ValueError("eps must lie in (0, s)")
    if not 1.0 <= q < 4.0 / (2.0 - 2.0 * s):
        raise ValueError("q out of the admissible range [1, 4/(2-2s))")
    if V.margin(domain) <= U.margin(domain):
        pass  # V is interior to U by construction below; validated geometrically
    chi = Cutoff.build(domain, U_outer=U, U_inner=V)
    shifts_U = ShiftSet.for_subdomain(domain, U)
    shifts_V = ShiftSet.for_subdomain(domain, V)
    r1, r2, r3 = [], [], []
    for i in range(n_fields):
        f = make_band_limited_field(domain, V, band, 1.0 + s, seed=seed + i)
        b_u = besov_norm(f, s, U, shifts_U).value
        b_v = besov_norm(f, s, V, shifts_V).value
        hs_me = sobolev_norm_cutoff(f, s - eps, chi).value
        hs = sobolev_norm_cutoff(f, s, chi).value
        lq = lq_norm_subdomain(f, q, V)
        r1.append(hs_me / b_u if b_u > 0 else 0.0)
        r2.append(lq / b_u if b_u > 0 else 0.0)
        r3.append(b_v / hs if hs > 0 else 0.0)
    return EmbeddingReport(
        s=s, eps=eps, q=q,
        ratios_besov_to_sobolev=np.array(r1),
        ratios_besov_to_lq=np.array(r2),
        ratios_sobolev_to_besov=np.array(r3),
    )


def periodic_besov_norm(ext: np.ndarray, lbx: float, lby: float, sigma: float,
                        shifts_cells: list[tuple[int, int]]) -> float:
    """Besov norm of a field on the periodic extension box, shifts taken as
    whole grid cells with periodic wrap in both axes."""
    nx, ny = ext.shape
    dx, dy = lbx / nx, lby / ny
    area_w = dx * dy
    base = np.sqrt(area_w * np.sum(ext**2))
    sup = 0.0
    for mx, my in shifts_cells:
        if mx == 0 and my == 0:
            continue
        shifted = np.roll(np.roll(ext, -mx, axis=0), -my, axis=1)
        rn = np.hypot(mx * dx, my * dy)
        val = np.sqrt(area_w * np.sum((shifted - ext) ** 2))
        sup = max(sup, val / rn**sigma)
    return base + sup


def verify_cutoff_inequality(
    f, chi: Cutoff, s: float, calibration_constant: float,
    shifts: ShiftSet | None = None,
) -> dict:
    """Check ||chi f||_{B^{s,inf}(extension box)} <= C ||chi||_{C^s} ||f||_{B^{s,inf}(U)}.

    Returns the measured ratio and the pass/fail against the supplied
    calibration constant.
    """
    domain = chi.values.domain
    U = chi.U_outer
    if shifts is None:
        shifts = ShiftSet.for_subdomain(domain, U)
    ext, lbx, lby = extend_periodic(
        chi.values.data * (f.data if isinstance(f, ScalarField) else f.u.data), domain
    )
    cells = []
    for direction in shifts.directions:
        for mag in shifts.magnitudes:
            rx, ry = shifts.displacement(direction, mag, domain)
            cells.append((int(round(rx / domain.dx)), int(round(ry / domain.dy))))
    lhs = periodic_besov_norm(ext, lbx, lby, s, cells)
    rhs_f = besov_norm(
        f if isinstance(f, ScalarField) else f.u, s, U, shifts
    ).value
    rhs = chi.holder_norm(s, shifts) * rhs_f
    ratio = lhs / rhs if rhs > 0 else 0.0
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "calibration_constant": calibration_constant,
        "passed": bool(ratio <= calibration_constant),
    }
