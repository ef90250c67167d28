"""Channel-flow laboratory for the vanishing-viscosity limit.

A periodic-in-x / walled-in-y 2D incompressible Navier-Stokes solver
(no-slip or Navier-friction walls), a functional-norm toolkit
(structure functions, Besov, fractional/negative Sobolev), and a sweep
harness that runs a decreasing sequence of viscosities from common
initial data and records uniformity and weak-residual verdicts.
"""

__version__ = "0.1.0"

from .grid import (
    BCKind,
    DomainSpec,
    ScalarField,
    Subdomain,
    VelocityField,
    VorticityField,
    curl,
    divergence,
    restrict,
    shift_sample,
    stream_function,
)
from .elliptic import poisson_solve_channel
from .snapshots import SnapshotFormatError, load_snapshot, save_snapshot
from .solver import (
    EnergyLedger,
    ForcingSpec,
    RandomSpectrum,
    RunConfig,
    SolverBlowupError,
    Stepper,
    StokesMode,
    make_initial,
    run,
)
from .norms import (
    Cutoff,
    ShiftSet,
    StructureFunctionTable,
    besov_norm,
    extend_periodic,
    sobolev_norm_cutoff,
    sobolev_norm_series,
    structure_function,
    verify_cutoff_inequality,
    verify_embedding_chain,
)
from .limit_analysis import (
    SweepConfig,
    SweepReport,
    TestFieldBank,
    ZetaFit,
    check_inertial_condition,
    dissipation_anomaly,
    equivalence_report,
    euler_residual,
    fit_zeta2,
    run_sweep,
    sub_dissipation_check,
)
from .config import Config, ConfigError, parse_config
from .report import emit_diagnose_bundle, emit_sweep_bundle

__all__ = [
    "BCKind",
    "Config",
    "ConfigError",
    "Cutoff",
    "DomainSpec",
    "EnergyLedger",
    "ForcingSpec",
    "RandomSpectrum",
    "RunConfig",
    "ScalarField",
    "ShiftSet",
    "SnapshotFormatError",
    "SolverBlowupError",
    "Stepper",
    "StokesMode",
    "StructureFunctionTable",
    "Subdomain",
    "SweepConfig",
    "SweepReport",
    "TestFieldBank",
    "VelocityField",
    "VorticityField",
    "ZetaFit",
    "besov_norm",
    "check_inertial_condition",
    "curl",
    "dissipation_anomaly",
    "divergence",
    "emit_diagnose_bundle",
    "emit_sweep_bundle",
    "equivalence_report",
    "euler_residual",
    "extend_periodic",
    "fit_zeta2",
    "load_snapshot",
    "make_initial",
    "parse_config",
    "poisson_solve_channel",
    "restrict",
    "run",
    "run_sweep",
    "save_snapshot",
    "shift_sample",
    "sobolev_norm_cutoff",
    "sobolev_norm_series",
    "stream_function",
    "structure_function",
    "sub_dissipation_check",
    "verify_cutoff_inequality",
    "verify_embedding_chain",
    "__version__",
]
