"""Command-line entry points.

Subcommands: simulate, diagnose, sweep, verify.  Global flags --config,
--out, --threads, --seed.  Any key in a config file can be overridden by an
environment variable INVISCLAB_<KEY> (upper-cased key).

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 IO error.
Failures print a single machine-parsable line `error:<CODE>: message`.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class CliFailure(Exception):
    def __init__(self, code: int, tag: str, message: str):
        super().__init__(message)
        self.code = code
        self.tag = tag


def _build_parser() -> argparse.ArgumentParser:
    def _add_global_flags(parser, suppress):
        default = argparse.SUPPRESS if suppress else None
        parser.add_argument("--config", default=default,
                            help="flat key = value configuration file")
        parser.add_argument("--out", default=default, help="output directory")
        parser.add_argument("--threads", type=int, default=default,
                            help="worker processes")
        parser.add_argument("--seed", type=int, default=default,
                            help="override init_seed")

    # flags on the subparsers use SUPPRESS so a flag given before the
    # subcommand is not clobbered by the subparser's defaults
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)
    p = argparse.ArgumentParser(
        prog="invisclab",
        description="Wall-bounded 2D Navier-Stokes laboratory: solver, "
        "functional norms and vanishing-viscosity diagnostics.",
        epilog="Config values can be overridden with environment variables "
        "prefixed INVISCLAB_, e.g. INVISCLAB_NU=1e-3.",
    )
    _add_global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common],
                   help="integrate one run; write snapshots and energy.csv")

    d = sub.add_parser("diagnose", parents=[common],
                       help="norm diagnostics over stored snapshots")
    d.add_argument("--snapshots", required=True, help="directory of NSFLD1 files")
    d.add_argument("--subdomain", required=True, help="x0,x1,y0,y1")

    sub.add_parser("sweep", parents=[common],
                   help="vanishing-viscosity sweep and report")

    v = sub.add_parser("verify", parents=[common],
                       help="run a property suite; nonzero exit on failure")
    v.add_argument("--suite", required=True, choices=["embeddings", "equivalence", "solver"])
    return p


def _load_config(args):
    from .config import ConfigError, parse_config

    if not args.config:
        raise CliFailure(EXIT_CONFIG, "E_CONFIG", "--config is required")
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        raise CliFailure(EXIT_CONFIG, "E_CONFIG", "; ".join(exc.errors))
    if args.seed is not None:
        cfg.values["init_seed"] = args.seed
    if args.threads is not None:
        cfg.values["threads"] = args.threads
    return cfg


def _require_out(args) -> Path:
    if not args.out:
        raise CliFailure(EXIT_CONFIG, "E_CONFIG", "--out is required")
    return Path(args.out)


def cmd_simulate(args) -> int:
    from .plots import plot_energy
    from .solver import SolverBlowupError, run

    cfg = _load_config(args)
    out = _require_out(args)
    run_cfg = cfg.run_config(out_dir=out)
    try:
        snapshots, ledger = run(run_cfg)
    except SolverBlowupError as exc:
        raise CliFailure(EXIT_NUMERICAL, "E_NUMERICAL", str(exc))
    (out / "config_echo.txt").write_text(
        "\n".join(cfg.echo_lines()) + "\n", encoding="utf-8"
    )
    plot_energy(ledger, out)
    print(f"wrote {len(snapshots)} snapshots and energy.csv to {out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    from .grid import Subdomain
    from .limit_analysis import fit_zeta2, sub_dissipation_check
    from .norms import ShiftSet, besov_norm, structure_function
    from .plots import plot_s2_loglog
    from .report import emit_diagnose_bundle
    from .snapshots import SnapshotFormatError, load_snapshot

    out = _require_out(args)
    snap_dir = Path(args.snapshots)
    try:
        vals = [float(t) for t in args.subdomain.split(",")]
        U = Subdomain(*vals)
    except (ValueError, TypeError) as exc:
        raise CliFailure(EXIT_CONFIG, "E_CONFIG", f"bad --subdomain: {exc}")
    files = sorted(snap_dir.glob("*.nsfld"))
    if not files:
        raise CliFailure(EXIT_IO, "E_IO", f"no .nsfld files in {snap_dir}")
    try:
        snapshots = [load_snapshot(f) for f in files]
    except SnapshotFormatError as exc:
        raise CliFailure(EXIT_IO, "E_IO", str(exc))
    snapshots.sort(key=lambda s: s.time)

    domain = snapshots[0].domain
    try:
        shifts = ShiftSet.for_subdomain(domain, U)
        table = structure_function(snapshots, U, shifts)
        nu = snapshots[0].nu
        constants = {}
        norm_reports = []
        if nu > 0:
            fit = fit_zeta2(table, nu)
            constants = {
                "zeta2": fit.zeta2,
                "C_U": fit.C_U,
                "eta": fit.eta,
                "fit_flags": list(fit.flags),
            }
            sigma = float(np.clip(0.5 * fit.zeta2, 0.05, 0.95))
            norm_reports = [besov_norm(s, sigma, U, shifts) for s in snapshots]
            constants["sub_dissipation"] = "not computed (no ledger)"
    except ValueError as exc:
        raise CliFailure(EXIT_NUMERICAL, "E_NUMERICAL", str(exc))
    emit_diagnose_bundle(table, norm_reports, constants, out)
    plot_s2_loglog({"snapshots": table}, out)
    print(f"wrote s2.csv, norms.json, constants.json to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .limit_analysis import run_sweep
    from .plots import plot_residual_trends
    from .report import emit_sweep_bundle

    cfg = _load_config(args)
    out = _require_out(args)
    try:
        report = run_sweep(cfg.sweep_config())
    except ValueError as exc:
        raise CliFailure(EXIT_NUMERICAL, "E_NUMERICAL", str(exc))
    json_path = emit_sweep_bundle(report, cfg.echo_lines(), out)
    _plot_sweep_tables(report, cfg, out)
    plot_residual_trends(report.to_dict(), out)
    print(f"wrote {json_path}")
    return EXIT_OK


def _plot_sweep_tables(report, cfg, out) -> None:
    from .norms import ShiftSet, StructureFunctionTable
    from .plots import plot_s2_loglog

    tables = {}
    for rec in report.per_nu:
        if rec.get("failed") or "s2_table" not in rec:
            continue
        t = rec["s2_table"]
        shifts = ShiftSet(
            directions=tuple(map(tuple, t["directions"])),
            magnitudes=tuple(range(1, len(t["r"][0]) + 1)),  # labels only
        )
        tables[f"nu={rec['nu']:.3g}"] = StructureFunctionTable(
            U=cfg.values["subdomain_U"],
            shifts=shifts,
            values=np.array(t["S2"]),
            r_actual=np.array(t["r"]),
            time_window=(0.0, cfg.values["T_final"]),
            n_snapshots=0,
        )
    if tables:
        plot_s2_loglog(tables, out)


def cmd_verify(args) -> int:
    failures = []
    if args.suite == "solver":
        failures = _verify_solver()
    elif args.suite == "embeddings":
        failures = _verify_embeddings()
    elif args.suite == "equivalence":
        failures = _verify_equivalence()
    if failures:
        for f in failures:
            print(f"FAIL: {f}")
        raise CliFailure(EXIT_NUMERICAL, "E_VERIFY", f"{len(failures)} check(s) failed")
    print(f"suite {args.suite}: all checks passed")
    return EXIT_OK


def _verify_solver() -> list[str]:
    from scipy.optimize import brentq

    from .grid import BCKind, DomainSpec
    from .solver import RandomSpectrum, RunConfig, StokesMode, run

    failures = []
    d = DomainSpec(Lx=1.0, H=1.0, Nx=16, Ny=129, T_final=0.1)
    cfg = RunConfig(domain=d, nu=0.01, dt=1e-4, init=StokesMode(1), snapshot_every=1000)
    snaps, ledger = run(cfg)
    lam = np.pi / d.H
    exact = np.sin(lam * d.y)[None, :] * np.exp(-0.01 * lam**2 * 0.1)
    err = np.sqrt(
        np.sum(d.quadrature_weights() * (snaps[-1].u.data - exact) ** 2)
    )
    if err > 1e-6:
        failures.append(f"no-slip decay error {err:.3e} > 1e-6")
    if not ledger.check():
        failures.append("energy budget violated on no-slip decay")

    alpha = 2.0
    dr = DomainSpec(
        Lx=1.0, H=1.0, Nx=16, Ny=129, T_final=0.1,
        bc_kind=BCKind.NAVIER_FRICTION, alpha0=alpha, beta=0.0,
    )
    lam_r = brentq(lambda t: t * np.tan(t * dr.H / 2) - alpha, 1e-6, np.pi / dr.H - 1e-6)
    prof = np.cos(lam_r * (dr.y - dr.H / 2))
    # Robin-mode initial data is bespoke; drive the stepper directly
    from .grid import ScalarField, VelocityField
    from .solver import Stepper

    state = VelocityField(
        ScalarField(np.tile(prof, (dr.Nx, 1)), dr),
        ScalarField(np.zeros((dr.Nx, dr.Ny)), dr),
        0.01,
    )
    run_cfg = RunConfig(domain=dr, nu=0.01, dt=1e-4, init=StokesMode(1), snapshot_every=1000)
    st = Stepper(run_cfg, state=state)
    while st.state.time < 0.1 - 1e-12:
        st.step()
    exact_r = prof[None, :] * np.exp(-0.01 * lam_r**2 * st.state.time)
    err_r = np.sqrt(np.sum(dr.quadrature_weights() * (st.state.u.data - exact_r) ** 2))
    if err_r > 1e-6:
        failures.append(f"friction-wall decay error {err_r:.3e} > 1e-6")
    if not st.ledger.check():
        failures.append("energy budget violated on friction-wall decay")
    if st.ledger.dissipation_wall[-1] <= 0:
        failures.append("wall dissipation not positive under friction condition")
    return failures


def _verify_embeddings() -> list[str]:
    from .grid import DomainSpec, Subdomain
    from .norms import (
        Cutoff,
        ShiftSet,
        make_band_limited_field,
        verify_cutoff_inequality,
        verify_embedding_chain,
    )

    failures = []
    d = DomainSpec(Lx=2.0, H=1.0, Nx=96, Ny=97)
    U = Subdomain(0.0, 2.0, 0.15, 0.85)
    V = Subdomain(0.0, 2.0, 0.35, 0.65)
    rep = verify_embedding_chain(d, U, V, s=0.5, eps=0.1, q=2.5, n_fields=200, seed=0)
    rep2 = verify_embedding_chain(
        d, U, V, s=0.5, eps=0.1, q=2.5, n_fields=200, band=(2.0, 32.0), seed=0
    )
    if not rep.all_finite():
        failures.append("embedding ratios not all finite")
    m1, m2 = rep.max_ratios(), rep2.max_ratios()
    for key in m1:
        change = abs(m2[key] - m1[key]) / m1[key]
        if change > 0.10:
            failures.append(f"embedding constant {key} moved {change:.1%} under band doubling")
    chi = Cutoff.build(d, U_outer=U, U_inner=V)
    shifts = ShiftSet.for_subdomain(d, U)
    calib = 1.0 + chi.holder_norm(0.5, shifts)  # conservative product-rule constant
    for seed in range(200):
        f = make_band_limited_field(d, V, (2.0, 16.0), 1.5, seed=seed)
        res = verify_cutoff_inequality(f, chi, 0.5, calib, shifts)
        if not res["passed"]:
            failures.append(f"cutoff inequality ratio {res['ratio']:.3f} > {calib:.3f} (seed {seed})")
            break
    return failures


def _verify_equivalence() -> list[str]:
    from .grid import DomainSpec, ScalarField, Subdomain, VelocityField
    from .limit_analysis import equivalence_report
    from .synthetic import make_homogeneous_velocity

    failures = []
    d = DomainSpec(Lx=2 * np.pi, H=np.pi, Nx=128, Ny=65)
    U = Subdomain(0.0, d.Lx, 0.25 * d.H, 0.75 * d.H)
    W = Subdomain(0.0, d.Lx, 0.35 * d.H, 0.65 * d.H)
    V = Subdomain(0.0, d.Lx, 0.45 * d.H, 0.55 * d.H)
    ratios = []
    for seed in range(32):
        vel = make_homogeneous_velocity(d, 0.5, 2.0, 16.0, seed)
        vel.u.time = 0.0
        snap2 = VelocityField(
            ScalarField(vel.u.data, d, 1.0), ScalarField(vel.v.data, d, 1.0), 0.0
        )
        rep = equivalence_report([vel, snap2], U, W, V, delta=0.2, zeta2=0.5)
        if not np.isfinite(rep["ratio_step2"]) or rep["ratio_step2"] <= 0:
            failures.append(f"step-2 ratio not finite/positive (seed {seed})")
        ratios.append(rep["ratio_step2"])
    if ratios and max(ratios) / min(ratios) > 10.0:
        failures.append(
            f"step-2 constant spread {max(ratios)/min(ratios):.2f} > 10 across ensemble"
        )
    return failures


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "diagnose": cmd_diagnose,
        "sweep": cmd_sweep,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except CliFailure as exc:
        print(f"error:{exc.tag}: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error:E_IO: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
