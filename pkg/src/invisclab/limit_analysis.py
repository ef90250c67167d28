"""Exponent fits, dissipation scale, uniformity verdicts, weak-form residuals
and the vanishing-viscosity sweep.

The central quantities: a local scaling exponent zeta2 fitted from the
structure function on a subdomain, the dissipation scale
eta(nu) = nu^(1/(2 - zeta2)) that the exponent defines, and the residuals of
the weak Euler form measured against a bank of compactly supported
divergence-free test fields.  `run_sweep` chains everything over a
decreasing viscosity sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .grid import (
    DomainSpec,
    ScalarField,
    Subdomain,
    VelocityField,
    curl,
    ddx,
    ddy,
    divergence,
)
from .norms import (
    Cutoff,
    ShiftSet,
    StructureFunctionTable,
    besov_norm,
    l2_norm_subdomain,
    sobolev_norm_cutoff,
    structure_function,
)
from .solver import EnergyLedger, ForcingSpec, RandomSpectrum, RunConfig, build_forcing, run

ETA_CLAMP = (0.05, 1.95)  # raw-exponent clamp used only to evaluate eta


# ---------------------------------------------------------------------------
# exponent fitting


@dataclass
class ZetaFit:
    """Fitted local structure-function exponent and its dissipation scale."""

    zeta2: float  # reported exponent, clamped to (0, 2)
    zeta2_raw: float
    C_U: float
    nu: float
    fit_range: tuple[float, float]
    rms_logfit_residual: float
    iterations: int
    flags: tuple[str, ...] = ()

    @property
    def eta(self) -> float:
        """Dissipation scale nu^(1/(2 - zeta2)), recomputed on access."""
        return self.nu ** (1.0 / (2.0 - self.zeta2))

    def to_dict(self) -> dict:
        return {
            "zeta2": self.zeta2,
            "zeta2_raw": self.zeta2_raw,
            "C_U": self.C_U,
            "nu": self.nu,
            "eta": self.eta,
            "fit_range": list(self.fit_range),
            "rms_logfit_residual": self.rms_logfit_residual,
            "iterations": self.iterations,
            "flags": list(self.flags),
        }


def _lsq_slope(logr: np.ndarray, logs: np.ndarray) -> tuple[float, float]:
    coef = np.polyfit(logr, logs, 1)
    resid = logs - np.polyval(coef, logr)
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def fit_zeta2(table: StructureFunctionTable, nu: float) -> ZetaFit:
    """Fixed-point fit of S2(r) ~ C r^zeta2 with the range restricted to
    r >= eta(nu), eta defined through the exponent being fitted.

    Starts from the full-range least-squares slope, recomputes eta, refits on
    |r| >= eta, and iterates until the exponent moves by less than 1e-3
    (at most 10 iterations).  If the restricted range has fewer than 3
    points the full-range fit is returned with the flag
    "inertial range unresolved".
    """
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    r, s2 = table.direction_average()
    good = s2 > 0
    r, s2 = r[good], s2[good]
    if r.size < 6:
        raise ValueError("need at least 6 magnitudes with positive S2")
    logr, logs = np.log(r), np.log(s2)

    flags: list[str] = []
    zeta, rms = _lsq_slope(logr, logs)
    sel = np.ones(r.size, dtype=bool)
    iterations = 0
    for iterations in range(1, 11):
        eta = nu ** (1.0 / (2.0 - np.clip(zeta, *ETA_CLAMP)))
        new_sel = r >= eta
        if np.count_nonzero(new_sel) < 3:
            flags.append("inertial range unresolved")
            zeta, rms = _lsq_slope(logr, logs)
            sel = np.ones(r.size, dtype=bool)
            break
        new_zeta, rms = _lsq_slope(logr[new_sel], logs[new_sel])
        sel = new_sel
        if abs(new_zeta - zeta) < 1e-3:
            zeta = new_zeta
            break
        zeta = new_zeta

    reported = float(np.clip(zeta, 1e-6, 2.0 - 1e-6))
    if not 0.0 < zeta < 2.0:
        flags.append("exponent out of range")
    C_U = float(np.max(s2[sel] / r[sel] ** reported))
    return ZetaFit(
        zeta2=reported,
        zeta2_raw=float(zeta),
        C_U=C_U,
        nu=nu,
        fit_range=(float(r[sel][0]), float(r[sel][-1])),
        rms_logfit_residual=rms,
        iterations=iterations,
        flags=tuple(flags),
    )


def check_inertial_condition(
    fits: list[ZetaFit | None],
    tol_growth: float = 3.0,
    zeta_floor: float = 0.1,
    pairwise_tol: float = 0.15,
) -> dict:
    """Uniform-constant verdict across a viscosity sweep: the C_U ratio stays
    below tol_growth, every exponent exceeds zeta_floor, and no two exponents
    differ by more than pairwise_tol."""
    present = [f for f in fits if f is not None]
    if len(present) < 3:
        return {"verdict": "PARTIAL", "reason": "fewer than 3 fits available"}
    cs = np.array([f.C_U for f in present])
    zs = np.array([f.zeta2 for f in present])
    ratio = float(np.max(cs) / np.min(cs))
    spread = float(np.max(zs) - np.min(zs))
    out = {
        "verdict": "PASS",
        "C_ratio": ratio,
        "zeta_min": float(np.min(zs)),
        "zeta_spread": spread,
        "partial": len(present) < len(fits),
    }
    if ratio > tol_growth:
        out.update(verdict="FAIL", reason=f"C_U ratio {ratio:.3g} > {tol_growth}")
    elif np.min(zs) < zeta_floor:
        out.update(verdict="FAIL", reason=f"zeta2 min {np.min(zs):.3g} < {zeta_floor}")
    elif spread > pairwise_tol:
        out.update(verdict="FAIL", reason=f"zeta2 spread {spread:.3g} > {pairwise_tol}")
    return out


def sub_dissipation_check(
    table: StructureFunctionTable,
    fit: ZetaFit,
    nu: float,
    dissipation_bulk_T: float,
) -> dict:
    """Below the dissipation scale: S2(r) <= (r^2/nu) * D_bulk(T) and
    (r/sqrt(nu))^2 <= r^zeta2; above it, S2 <= C r^zeta2 with the reported
    effective constant."""
    r, s2 = table.direction_average()
    eta = fit.eta
    below = r <= eta
    if not np.any(below):
        return {"verdict": "dissipation range unresolved", "eta": eta}
    rb, sb = r[below], s2[below]
    grad_ok = bool(np.all(sb <= rb**2 / nu * dissipation_bulk_T * (1 + 1e-12)))
    interp_ok = bool(
        np.all((rb / np.sqrt(nu)) ** 2 <= rb**fit.zeta2 * (1 + 1e-10))
    )
    c_eff = float(np.max(s2 / r**fit.zeta2))
    return {
        "verdict": "PASS" if (grad_ok and interp_ok) else "FAIL",
        "eta": eta,
        "gradient_bound_ok": grad_ok,
        "interpolation_ok": interp_ok,
        "effective_constant": c_eff,
    }


# ---------------------------------------------------------------------------
# test fields


def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump_scalar(s: float) -> float:
    return float(np.exp(1.0 - 1.0 / (1.0 - s * s))) if abs(s) < 1.0 else 0.0


def _dbump_scalar(s: float) -> float:
    if abs(s) >= 1.0:
        return 0.0
    return _bump_scalar(s) * (-2.0 * s / (1.0 - s * s) ** 2)


@dataclass
class TestField:
    """Space-time test velocity phi = grad-perp(psi) with
    psi = B((x-x0)/rho) B((y-y0)/rho) B((t-t0)/tau), B the standard bump.

    The spatial factor is sampled once and differentiated with the grid
    operators, so the discrete divergence of phi vanishes identically; the
    time factor stays analytic."""

    __test__ = False  # not a pytest class, despite the name

    domain: DomainSpec
    x0: float
    y0: float
    t0: float
    rho: float
    tau: float
    phi_x: np.ndarray = field(init=False, repr=False)
    phi_y: np.ndarray = field(init=False, repr=False)
    grad: dict = field(init=False, repr=False)

    def __post_init__(self):
        d = self.domain
        if self.rho >= d.Lx / 2:
            raise ValueError("bump radius exceeds half the x-period")
        margin = 2 * d.dy
        if self.y0 - self.rho < margin or self.y0 + self.rho > d.H - margin:
            raise ValueError("bump support too close to a wall (need 2 cells)")
        dxp = (d.x[:, None] - self.x0 + d.Lx / 2) % d.Lx - d.Lx / 2
        dyp = d.y[None, :] - self.y0
        psi = _bump(dxp / self.rho) * _bump(dyp / self.rho)
        self.phi_x = ddy(psi, d)
        self.phi_y = -ddx(psi, d)
        self.grad = {
            "xx": ddx(self.phi_x, d),
            "xy": ddy(self.phi_x, d),
            "yx": ddx(self.phi_y, d),
            "yy": ddy(self.phi_y, d),
        }

    def time_factor(self, t: float) -> float:
        return _bump_scalar((t - self.t0) / self.tau)

    def time_derivative_factor(self, t: float) -> float:
        return _dbump_scalar((t - self.t0) / self.tau) / self.tau

    def support_times(self) -> tuple[float, float]:
        return (self.t0 - self.tau, self.t0 + self.tau)

    def w1inf_norm(self) -> float:
        """Max over the grid and time samples of |phi|, |grad phi|, |dt phi|."""
        mag = np.sqrt(self.phi_x**2 + self.phi_y**2)
        g = max(np.max(np.abs(v)) for v in self.grad.values())
        # |B'| peaks just above 1; sample the time factor densely
        ts = np.linspace(self.t0 - self.tau, self.t0 + self.tau, 201)
        bmax = max(abs(_bump_scalar((t - self.t0) / self.tau)) for t in ts)
        dbmax = max(
            abs(_dbump_scalar((t - self.t0) / self.tau)) / self.tau for t in ts
        )
        return float(max(np.max(mag) * bmax, g * bmax, np.max(mag) * dbmax))

    def grad_l2l2(self) -> float:
        """L2-in-spacetime norm of grad phi (time factor integrated exactly
        enough: dense trapezoid)."""
        d = self.domain
        w = d.quadrature_weights()
        gsq = sum(np.sum(w * v**2) for v in self.grad.values())
        ts = np.linspace(self.t0 - self.tau, self.t0 + self.tau, 801)
        bsq = np.array([_bump_scalar((t - self.t0) / self.tau) ** 2 for t in ts])
        return float(np.sqrt(gsq * np.trapezoid(bsq, ts)))

    def check_divergence_free(self, tol: float = 1e-10) -> None:
        vel = VelocityField(
            ScalarField(self.phi_x, self.domain), ScalarField(self.phi_y, self.domain)
        )
        div = divergence(vel).data[:, 1:-1]
        scale = max(np.max(np.abs(self.phi_x)), np.max(np.abs(self.phi_y)), 1e-300)
        if np.max(np.abs(div)) > tol * scale:
            raise ValueError("test field is not discretely divergence-free")


@dataclass
class TestFieldBank:
    __test__ = False  # not a pytest class, despite the name

    fields: list[TestField]

    @classmethod
    def default(cls, domain: DomainSpec, T: float) -> "TestFieldBank":
        """12 fields: 4 spatial bumps x 3 time windows, supports strictly
        inside the channel and the time interval."""
        rho = 0.25 * domain.H
        centers = [
            (0.25 * domain.Lx, 0.45 * domain.H),
            (0.75 * domain.Lx, 0.55 * domain.H),
            (0.50 * domain.Lx, 0.50 * domain.H),
            (0.10 * domain.Lx, 0.50 * domain.H),
        ]
        tau = T / 6.0
        t_centers = [0.3 * T, 0.5 * T, 0.7 * T]
        fields = [
            TestField(domain, x0, y0, t0, rho, tau)
            for (x0, y0) in centers
            for t0 in t_centers
        ]
        for f in fields:
            f.check_divergence_free()
        return cls(fields)


# ---------------------------------------------------------------------------
# pairings and residuals


def _times(snapshots: list[VelocityField]) -> np.ndarray:
    t = np.array([s.time for s in snapshots])
    if np.any(np.diff(t) <= 0):
        raise ValueError("snapshot times must be strictly increasing")
    return t


def weak_pairing(snapshots: list[VelocityField], bank: TestFieldBank) -> dict:
    """P[j] = integral over space-time of u . phi_j, plus per-time-slice rows."""
    t = _times(snapshots)
    d = snapshots[0].domain
    w = d.quadrature_weights()
    slices = np.zeros((len(bank.fields), len(snapshots)))
    for i, snap in enumerate(snapshots):
        for j, f in enumerate(bank.fields):
            b = f.time_factor(t[i])
            if b == 0.0:
                continue
            slices[j, i] = b * float(
                np.sum(w * (snap.u.data * f.phi_x + snap.v.data * f.phi_y))
            )
    P = np.array([np.trapezoid(slices[j], t) for j in range(len(bank.fields))])
    return {"P": P, "slices": slices, "times": t}


def euler_residual(
    snapshots: list[VelocityField],
    bank: TestFieldBank,
    forcing: tuple[np.ndarray, np.ndarray] | None = None,
) -> dict:
    """Weak Euler residual R[j] and viscous counterpart V[j] per test field.

    R[j] = int u . dt(phi) + u (x) u : grad(phi) + f . phi
    V[j] = nu * int grad(u) : grad(phi)

    For an exact Navier-Stokes solution R = V up to discretization error.
    Requires at least 8 snapshots per time half-width tau of every field.
    """
    t = _times(snapshots)
    d = snapshots[0].domain
    w = d.quadrature_weights()
    nu = snapshots[0].nu
    dt_max = float(np.max(np.diff(t)))
    for f in bank.fields:
        if dt_max > f.tau / 8.0:
            raise ValueError(
                "snapshot cadence too coarse for the test bank: spacing "
                f"{dt_max:.3g} exceeds tau/8 = {f.tau / 8.0:.3g}"
            )

    n_f = len(bank.fields)
    rows_R = np.zeros((n_f, len(snapshots)))
    rows_V = np.zeros((n_f, len(snapshots)))
    for i, snap in enumerate(snapshots):
        u, v = snap.u.data, snap.v.data
        ux, uy = ddx(u, d), ddy(u, d)
        vx, vy = ddx(v, d), ddy(v, d)
        for j, f in enumerate(bank.fields):
            b = f.time_factor(t[i])
            db = f.time_derivative_factor(t[i])
            if b == 0.0 and db == 0.0:
                continue
            pair = float(np.sum(w * (u * f.phi_x + v * f.phi_y)))
            adv = float(
                np.sum(
                    w
                    * (
                        u * u * f.grad["xx"]
                        + u * v * (f.grad["xy"] + f.grad["yx"])
                        + v * v * f.grad["yy"]
                    )
                )
            )
            frc = 0.0
            if forcing is not None:
                frc = float(
                    np.sum(w * (forcing[0] * f.phi_x + forcing[1] * f.phi_y))
                )
            rows_R[j, i] = pair * db + (adv + frc) * b
            rows_V[j, i] = nu * b * float(
                np.sum(
                    w
                    * (
                        ux * f.grad["xx"]
                        + uy * f.grad["xy"]
                        + vx * f.grad["yx"]
                        + vy * f.grad["yy"]
                    )
                )
            )
    R = np.array([simpson(rows_R[j], x=t) for j in range(n_f)])
    V = np.array([simpson(rows_V[j], x=t) for j in range(n_f)])
    return {"R": R, "V": V, "times": t}


def dissipation_l2l2_gradient(snapshots: list[VelocityField]) -> float:
    """Snapshot-quadrature value of the space-time integral of |grad u|^2."""
    t = _times(snapshots)
    d = snapshots[0].domain
    w = d.quadrature_weights()
    vals = []
    for snap in snapshots:
        u, v = snap.u.data, snap.v.data
        vals.append(
            float(
                np.sum(
                    w
                    * (
                        ddx(u, d) ** 2
                        + ddy(u, d) ** 2
                        + ddx(v, d) ** 2
                        + ddy(v, d) ** 2
                    )
                )
            )
        )
    return float(np.trapezoid(vals, t))


# ---------------------------------------------------------------------------
# equivalence and limit diagnostics


def _l2_in_time(values: np.ndarray, t: np.ndarray) -> float:
    return float(np.sqrt(np.trapezoid(np.asarray(values) ** 2, t)))


def equivalence_report(
    snapshots: list[VelocityField],
    U: Subdomain,
    W: Subdomain,
    V: Subdomain,
    delta: float,
    zeta2: float,
    shifts: ShiftSet | None = None,
) -> dict:
    """Both directions of the structure-function / vorticity-norm equivalence
    on nested subdomains U containing W containing V.

    Step 1: Besov(zeta2/2) of u on U against the H^(delta-1) norm of the
    vorticity localized near V.  Step 2: H^delta of the cutoff velocity
    against the localized H^(delta-1) vorticity norm plus the L2 norm on U.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    sigma = 0.5 * zeta2
    if not 0.0 < sigma < 1.0:
        raise ValueError("zeta2/2 must lie in (0, 1)")
    d = snapshots[0].domain
    chi_WV = Cutoff.build(d, U_outer=W, U_inner=V)
    chi_UW = Cutoff.build(d, U_outer=U, U_inner=W)
    if shifts is None:
        shifts = ShiftSet.for_subdomain(d, U)
    t = _times(snapshots)
    bes, vortV, vortU, l2u, hdel = [], [], [], [], []
    for snap in snapshots:
        omega = curl(snap).w
        bes.append(besov_norm(snap, sigma, U, shifts).value)
        vortV.append(sobolev_norm_cutoff(omega, delta - 1.0, chi_WV).value)
        vortU.append(sobolev_norm_cutoff(omega, delta - 1.0, chi_UW).value)
        l2u.append(l2_norm_subdomain(snap, U))
        hdel.append(sobolev_norm_cutoff(snap, delta, chi_UW).value)
    besov_u = _l2_in_time(np.array(bes), t)
    vort_V = _l2_in_time(np.array(vortV), t)
    vort_U = _l2_in_time(np.array(vortU), t)
    l2_u = _l2_in_time(np.array(l2u), t)
    hdelta_u = _l2_in_time(np.array(hdel), t)
    return {
        "delta": delta,
        "sigma": sigma,
        "besov_u_U": besov_u,
        "vorticity_norm_V": vort_V,
        "vorticity_norm_U": vort_U,
        "l2_u_U": l2_u,
        "hdelta_u": hdelta_u,
        "ratio_step1": besov_u / vort_V if vort_V > 0 else 0.0,
        "ratio_step2": hdelta_u / (vort_U + l2_u) if vort_U + l2_u > 0 else 0.0,
    }


def dissipation_anomaly(nus: list[float], ledgers: list[EnergyLedger]) -> dict:
    """Total dissipation at the final time per viscosity, a log-log trend
    classification and a Richardson-style limit estimate."""
    if len(nus) < 3:
        raise ValueError("need at least 3 viscosities")
    order = np.argsort(nus)[::-1]
    nu_s = np.array([nus[i] for i in order], dtype=float)
    D = np.array(
        [
            ledgers[i].dissipation_bulk[-1] + ledgers[i].dissipation_wall[-1]
            for i in order
        ]
    )
    if np.all(D > 0):
        slope = float(np.polyfit(np.log(nu_s), np.log(D), 1)[0])
    else:
        slope = float("inf")
    if slope > 0.1:
        trend = "vanishing"
    elif slope < -0.1:
        trend = "increasing"
    else:
        trend = "plateau"
    # Richardson step assuming D(nu) = D_inf + c nu^p on the last three points
    d0, d1, d2 = D[-3], D[-2], D[-1]
    est = float(d2)
    if (d0 - d1) != 0 and (d1 - d2) / (d0 - d1) > 0:
        ratio = (d1 - d2) / (d0 - d1)
        if abs(1.0 - ratio) > 1e-12:
            est = float(d2 - (d1 - d2) * ratio / (1.0 - ratio))
    return {
        "nus": nu_s.tolist(),
        "D": D.tolist(),
        "trend": trend,
        "loglog_slope": slope,
        "limit_estimate": est,
    }


def limit_besov_check(
    snaps_a: list[VelocityField],
    snaps_b: list[VelocityField],
    U: Subdomain,
    zeta2: float,
    per_nu_besov: list[float],
    shifts: ShiftSet | None = None,
) -> dict:
    """Besov(zeta2/2) of the weak-limit proxy (the average of the two
    finest-viscosity runs) against the largest per-viscosity value; the
    proxy norm must not exceed it by more than 10% (a discrete surrogate of
    weak lower semicontinuity)."""
    n = min(len(snaps_a), len(snaps_b))
    flags = [] if len(snaps_a) == len(snaps_b) else ["snapshot series truncated"]
    d = snaps_a[0].domain
    proxy = []
    for a, b in zip(snaps_a[:n], snaps_b[:n]):
        proxy.append(
            VelocityField(
                ScalarField(0.5 * (a.u.data + b.u.data), d, a.time),
                ScalarField(0.5 * (a.v.data + b.v.data), d, a.time),
                0.0,
            )
        )
    if shifts is None:
        shifts = ShiftSet.for_subdomain(d, U)
    t = _times(proxy)
    sigma = 0.5 * zeta2
    vals = [besov_norm(p, sigma, U, shifts).value for p in proxy]
    proxy_norm = _l2_in_time(np.array(vals), t)
    bound = max(per_nu_besov) * 1.1
    return {
        "proxy_besov": proxy_norm,
        "max_per_nu": max(per_nu_besov),
        "passed": bool(proxy_norm <= bound),
        "flags": flags,
    }


# ---------------------------------------------------------------------------
# sweep harness


@dataclass(frozen=True)
class SweepConfig:
    domain: DomainSpec
    nus: tuple[float, ...]
    dt: float
    init: RandomSpectrum
    snapshot_every: int
    U: Subdomain
    W: Subdomain
    V: Subdomain
    forcing: ForcingSpec = ForcingSpec()
    n_magnitudes: int = 12
    eps: float = 0.05
    tol_growth: float = 3.0
    threads: int = 1

    def __post_init__(self):
        if len(self.nus) < 1:
            raise ValueError("need at least one viscosity")
        if any(nu <= 0 for nu in self.nus):
            raise ValueError("viscosities must be positive")


@dataclass
class SweepReport:
    nus: list[float]
    per_nu: list[dict]
    cross: dict
    config_echo: dict

    def to_dict(self) -> dict:
        return {
            "nus": self.nus,
            "per_nu": self.per_nu,
            "cross": self.cross,
            "config": self.config_echo,
        }


def _single_run(cfg: SweepConfig, nu: float):
    run_cfg = RunConfig(
        domain=cfg.domain,
        nu=nu,
        dt=cfg.dt,
        forcing=cfg.forcing,
        init=cfg.init,
        snapshot_every=cfg.snapshot_every,
    )
    return run(run_cfg)


def _ledger_summary(ledger: EnergyLedger) -> dict:
    return {
        "E0": ledger.kinetic[0],
        "E_final": ledger.kinetic[-1],
        "dissipation_bulk": ledger.dissipation_bulk[-1],
        "dissipation_wall": ledger.dissipation_wall[-1],
        "force_work": ledger.force_work[-1],
        "max_step_violation": ledger.max_step_violation(),
    }


def run_sweep(cfg: SweepConfig) -> SweepReport:
    """Decaying runs over the viscosity sequence (shared initial data), then
    all diagnostics.  A failed run is recorded and skipped downstream;
    the report is deterministic given the config."""
    nus = sorted(set(cfg.nus), reverse=True)
    domain = cfg.domain
    T = domain.T_final
    shifts = ShiftSet.for_subdomain(domain, cfg.U, n_magnitudes=cfg.n_magnitudes)
    bank = TestFieldBank.default(domain, T)
    forcing_arrays = None
    if cfg.forcing.kind != "none":
        forcing_arrays = build_forcing(cfg.forcing, domain)

    results: dict[float, tuple] = {}
    if cfg.threads > 1 and len(nus) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            futs = {nu: pool.submit(_single_run, cfg, nu) for nu in nus}
            for nu, fut in futs.items():
                try:
                    results[nu] = fut.result()
                except Exception as exc:  # noqa: BLE001 - per-run isolation
                    results[nu] = exc
    else:
        for nu in nus:
            try:
                results[nu] = _single_run(cfg, nu)
            except Exception as exc:  # noqa: BLE001 - per-run isolation
                results[nu] = exc

    per_nu: list[dict] = []
    fits: list[ZetaFit | None] = []
    kept: list[tuple[float, list, EnergyLedger, StructureFunctionTable]] = []
    for nu in nus:
        res = results[nu]
        if isinstance(res, Exception):
            per_nu.append({"nu": nu, "failed": True, "reason": str(res)})
            fits.append(None)
            continue
        snapshots, ledger = res
        table = structure_function(snapshots, cfg.U, shifts)
        fit = fit_zeta2(table, nu)
        fits.append(fit)
        kept.append((nu, snapshots, ledger, table))
        per_nu.append(
            {
                "nu": nu,
                "failed": False,
                "fit": fit.to_dict(),
                "energy": _ledger_summary(ledger),
                "s2_table": {
                    "directions": [list(dd) for dd in shifts.directions],
                    "r": table.r_actual.tolist(),
                    "S2": table.values.tolist(),
                },
            }
        )

    cross: dict = {}
    if kept:
        zeta_med = float(np.median([f.zeta2 for f in fits if f is not None]))
        sigma = float(np.clip(0.5 * zeta_med, 0.05, 0.95))
        delta = float(np.clip(0.5 * zeta_med - cfg.eps, 0.05, 0.45))
        cross["zeta2_median"] = zeta_med
        cross["delta"] = delta

        rec_by_nu = {nu: (snaps, led, tab) for nu, snaps, led, tab in kept}
        besovs, pairings, resids = {}, {}, {}
        for k, (nu, snapshots, ledger, table) in enumerate(kept):
            fit = next(f for f in fits if f is not None and f.nu == nu)
            eq = equivalence_report(
                snapshots, cfg.U, cfg.W, cfg.V, delta, 2.0 * sigma, shifts
            )
            pr = weak_pairing(snapshots, bank)
            try:
                er = euler_residual(snapshots, bank, forcing_arrays)
            except ValueError as exc:
                er = {"error": str(exc)}
            besovs[nu] = eq["besov_u_U"]
            pairings[nu] = pr["P"]
            resids[nu] = er
            rec = next(p for p in per_nu if p.get("nu") == nu and not p["failed"])
            rec["equivalence"] = eq
            rec["pairings"] = pr["P"].tolist()
            if "error" not in er:
                # |V_j| <= sqrt(nu) * ||sqrt(nu) grad u||_{L2L2} * ||grad phi_j||
                # and the ledger already carries nu * int |grad u|^2
                d_led = ledger.dissipation_bulk[-1]
                bound = [
                    float(np.sqrt(max(d_led, 0.0)) * f.grad_l2l2())
                    for f in bank.fields
                ]
                rec["residuals"] = {
                    "R": er["R"].tolist(),
                    "V": er["V"].tolist(),
                    "cauchy_bound": bound,
                }
            else:
                rec["residuals"] = er
            rec["sub_dissipation"] = sub_dissipation_check(
                table, fit, nu, ledger.dissipation_bulk[-1]
            )

        cross["inertial_condition"] = check_inertial_condition(
            fits, tol_growth=cfg.tol_growth
        )
        vort_vals = [
            p["equivalence"]["vorticity_norm_V"]
            for p in per_nu
            if not p.get("failed")
        ]
        if len(vort_vals) >= 3 and min(vort_vals) > 0:
            vratio = max(vort_vals) / min(vort_vals)
            cross["vorticity_uniformity"] = {
                "verdict": "PASS" if vratio <= cfg.tol_growth else "FAIL",
                "ratio": float(vratio),
            }
            cross["verdicts_agree"] = (
                cross["vorticity_uniformity"]["verdict"]
                == cross["inertial_condition"].get("verdict")
            )
        else:
            cross["vorticity_uniformity"] = {"verdict": "PARTIAL"}
            cross["verdicts_agree"] = None

        ok_nus = [nu for nu, *_ in kept]
        if len(ok_nus) >= 2:
            gaps = []
            for a, b in zip(ok_nus[:-1], ok_nus[1:]):
                gaps.append(
                    {
                        "nu_pair": [a, b],
                        "max_gap": float(np.max(np.abs(pairings[a] - pairings[b]))),
                    }
                )
            cross["pairing_cauchy_gaps"] = gaps

        v_ok = [
            (nu, resids[nu]["V"]) for nu in ok_nus if "error" not in resids[nu]
        ]
        if len(v_ok) >= 3:
            vmax = np.array([np.max(np.abs(V)) for _, V in v_ok])
            vnus = np.array([nu for nu, _ in v_ok])
            pos = vmax > 0
            if np.count_nonzero(pos) >= 3:
                vslope = float(
                    np.polyfit(np.log(vnus[pos]), np.log(vmax[pos]), 1)[0]
                )
                cross["viscous_residual_slope"] = {
                    "slope": vslope,
                    "note": "heuristic check of |V| ~ sqrt(nu); "
                    "no convergence rate is asserted",
                }

        if len(kept) >= 3:
            cross["dissipation_anomaly"] = dissipation_anomaly(
                [nu for nu, *_ in kept], [led for _, _, led, _ in kept]
            )
        else:
            cross["dissipation_anomaly"] = "insufficient data"

        if len(kept) >= 2:
            (nu_a, snaps_a, *_), (nu_b, snaps_b, *_) = kept[-2], kept[-1]
            cross["limit_besov"] = limit_besov_check(
                snaps_a,
                snaps_b,
                cfg.U,
                2.0 * sigma,
                [besovs[nu] for nu in ok_nus],
                shifts,
            )
        else:
            cross["limit_besov"] = "insufficient data"
    else:
        cross["inertial_condition"] = {"verdict": "PARTIAL", "reason": "no runs"}

    config_echo = {
        "Lx": domain.Lx,
        "H": domain.H,
        "Nx": domain.Nx,
        "Ny": domain.Ny,
        "T_final": domain.T_final,
        "bc_kind": domain.bc_kind.value,
        "alpha0": domain.alpha0,
        "beta": domain.beta,
        "dt": cfg.dt,
        "nus": nus,
        "seed": cfg.init.seed,
        "init_slope": cfg.init.slope,
        "init_band": [cfg.init.k_min, cfg.init.k_max],
        "init_amplitude": cfg.init.amplitude,
        "snapshot_every": cfg.snapshot_every,
    }
    return SweepReport(nus=nus, per_nu=per_nu, cross=cross, config_echo=config_echo)
