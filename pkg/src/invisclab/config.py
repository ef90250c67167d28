"""Flat key=value configuration files.

One schema covers single runs and sweeps.  Unknown keys, duplicates and
out-of-range values are hard errors; every problem in the file is reported
at once, with line numbers.  Environment variables with the INVISCLAB_
prefix override file values (INVISCLAB_NU=... overrides `nu`).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .grid import BCKind, DomainSpec, Subdomain
from .limit_analysis import SweepConfig
from .solver import FileSnapshot, ForcingSpec, RandomSpectrum, RunConfig, StokesMode

ENV_PREFIX = "INVISCLAB_"


class ConfigError(ValueError):
    """All validation problems of a config file, one per line."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _parse_float(s): return float(s)
def _parse_int(s): return int(s)


def _parse_bc(s):
    try:
        return BCKind(s.strip().lower())
    except ValueError:
        raise ValueError("must be 'noslip' or 'navier'")


def _parse_floats(s):
    return tuple(float(p) for p in s.replace(",", " ").split())


def _parse_box(s):
    vals = _parse_floats(s)
    if len(vals) != 4:
        raise ValueError("expected 4 numbers: x0,x1,y0,y1")
    return Subdomain(vals[0], vals[1], vals[2], vals[3])


# key -> (parser, default).  A None default means required only where used.
_SCHEMA = {
    "Lx": (_parse_float, 6.283185307179586),
    "H": (_parse_float, 3.141592653589793),
    "Nx": (_parse_int, 256),
    "Ny": (_parse_int, 129),
    "T_final": (_parse_float, 1.0),
    "bc_kind": (_parse_bc, BCKind.NO_SLIP),
    "alpha0": (_parse_float, 1.0),
    "beta": (_parse_float, 0.0),
    "nu": (_parse_float, 1e-2),
    "dt": (_parse_float, 1e-3),
    "snapshot_every": (_parse_int, 20),
    "forcing_kind": (lambda s: s.strip().lower(), "none"),
    "forcing_amplitude": (_parse_float, 0.0),
    "forcing_kx": (_parse_int, 1),
    "forcing_ky": (_parse_int, 1),
    "init_kind": (lambda s: s.strip().lower(), "random"),
    "stokes_n": (_parse_int, 1),
    "init_slope": (_parse_float, 2.0 / 3.0),
    "init_k_min": (_parse_float, 2.0),
    "init_k_max": (_parse_float, 8.0),
    "init_seed": (_parse_int, 0),
    "init_amplitude": (_parse_float, 0.02),
    "init_file": (str, ""),
    "nus": (_parse_floats, (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4)),
    "subdomain_U": (_parse_box, Subdomain(0.0, 6.283185307179586, 0.7853981633974483, 2.356194490192345)),
    "subdomain_W": (_parse_box, Subdomain(0.0, 6.283185307179586, 1.0995574287564276, 2.0420352248333655)),
    "subdomain_V": (_parse_box, Subdomain(0.0, 6.283185307179586, 1.413716694115407, 1.7278759594743862)),
    "n_magnitudes": (_parse_int, 12),
    "eps": (_parse_float, 0.05),
    "tol_growth": (_parse_float, 3.0),
    "threads": (_parse_int, 1),
}


@dataclass
class Config:
    """Validated flat configuration; builders construct the typed configs."""

    values: dict
    source_path: str

    def domain(self) -> DomainSpec:
        v = self.values
        return DomainSpec(
            Lx=v["Lx"], H=v["H"], Nx=v["Nx"], Ny=v["Ny"], T_final=v["T_final"],
            bc_kind=v["bc_kind"], alpha0=v["alpha0"], beta=v["beta"],
        )

    def initial_condition(self):
        v = self.values
        kind = v["init_kind"]
        if kind == "stokes":
            return StokesMode(v["stokes_n"])
        if kind == "random":
            return RandomSpectrum(
                slope=v["init_slope"], k_min=v["init_k_min"], k_max=v["init_k_max"],
                seed=v["init_seed"], amplitude=v["init_amplitude"],
            )
        if kind == "file":
            return FileSnapshot(v["init_file"])
        raise ConfigError([f"init_kind: unknown kind {kind!r}"])

    def forcing(self) -> ForcingSpec:
        v = self.values
        return ForcingSpec(
            kind=v["forcing_kind"], amplitude=v["forcing_amplitude"],
            kx=v["forcing_kx"], ky=v["forcing_ky"],
        )

    def run_config(self, out_dir=None) -> RunConfig:
        v = self.values
        return RunConfig(
            domain=self.domain(), nu=v["nu"], dt=v["dt"],
            forcing=self.forcing(), init=self.initial_condition(),
            snapshot_every=v["snapshot_every"],
            out_dir=str(out_dir) if out_dir else None,
        )

    def sweep_config(self) -> SweepConfig:
        v = self.values
        return SweepConfig(
            domain=self.domain(), nus=tuple(v["nus"]), dt=v["dt"],
            init=self.initial_condition(), snapshot_every=v["snapshot_every"],
            U=v["subdomain_U"], W=v["subdomain_W"], V=v["subdomain_V"],
            forcing=self.forcing(), n_magnitudes=v["n_magnitudes"],
            eps=v["eps"], tol_growth=v["tol_growth"], threads=v["threads"],
        )

    def echo_lines(self) -> list[str]:
        out = []
        for key in sorted(self.values):
            val = self.values[key]
            if isinstance(val, BCKind):
                val = val.value
            elif isinstance(val, Subdomain):
                val = f"{val.x_lo},{val.x_hi},{val.y_lo},{val.y_hi}"
            elif isinstance(val, tuple):
                val = ",".join(repr(x) for x in val)
            elif isinstance(val, float):
                val = repr(val)
            out.append(f"{key} = {val}")
        return out


def _validate(values: dict, errors: list[str]) -> None:
    beta = values["beta"]
    if not 0.0 <= beta <= 1.0:
        errors.append(f"beta: {beta} out of range, beta must lie in [0,1]")
    if values["nu"] <= 0:
        errors.append("nu: must be positive")
    if values["dt"] <= 0:
        errors.append("dt: must be positive")
    if any(nu <= 0 for nu in values["nus"]):
        errors.append("nus: all viscosities must be positive")
    if values["init_kind"] not in ("stokes", "random", "file"):
        errors.append(f"init_kind: unknown kind {values['init_kind']!r}")
    if values["forcing_kind"] not in ("none", "steady"):
        errors.append(f"forcing_kind: unknown kind {values['forcing_kind']!r}")
    if values["init_kind"] == "file" and not values["init_file"]:
        errors.append("init_file: required when init_kind = file")


def parse_config(path: str) -> Config:
    """Parse and validate; raises ConfigError listing every problem found."""
    errors: list[str] = []
    seen: dict[str, int] = {}
    raw: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"])

    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, val = stripped.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(
                f"line {lineno}: duplicate key {key!r} (first at line {seen[key]})"
            )
            continue
        seen[key] = lineno
        raw[key] = val

    for key in _SCHEMA:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            raw[key] = env
            seen.setdefault(key, 0)

    values: dict = {}
    for key, (parser, default) in _SCHEMA.items():
        if key in raw:
            try:
                values[key] = parser(raw[key])
            except (ValueError, TypeError) as exc:
                where = f"line {seen[key]}" if seen.get(key) else "environment"
                errors.append(f"{where}: {key}: {exc}")
                values[key] = default
        else:
            values[key] = default

    _validate(values, errors)
    if not errors:
        try:
            cfg = Config(values=values, source_path=str(path))
            cfg.domain()
        except ValueError as exc:
            errors.append(str(exc))
    if errors:
        raise ConfigError(errors)
    return Config(values=values, source_path=str(path))
