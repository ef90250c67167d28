"""Deterministic report bundles: JSON with sorted keys, CSV tables, the
echoed configuration and a content hash.  Identical inputs must produce
byte-identical files."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__


def sanitize(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON-able types."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(data: dict, path: Path) -> None:
    text = json.dumps(sanitize(data), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def content_hash(paths: list[Path]) -> str:
    h = hashlib.sha256()
    for p in sorted(paths):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def emit_sweep_bundle(report, config_echo_lines: list[str], out_dir) -> Path:
    """Write sweep_report.json, per-viscosity s2_nu_<k>.csv, residuals.csv,
    the echoed config, and embed version + content hash in the JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    echo_path = out / "config_echo.txt"
    echo_path.write_text("\n".join(config_echo_lines) + "\n", encoding="utf-8")

    csv_paths = []
    for k, rec in enumerate(report.per_nu):
        if rec.get("failed"):
            continue
        table = rec.get("s2_table")
        if table is None:
            continue
        path = out / f"s2_nu_{k}.csv"
        rows = []
        for i, direction in enumerate(table["directions"]):
            for j in range(len(table["r"][i])):
                rows.append(
                    (i, direction[0], direction[1], table["r"][i][j], table["S2"][i][j])
                )
        write_csv(path, ["direction_index", "dir_x", "dir_y", "r", "S2"], rows)
        csv_paths.append(path)

    res_rows = []
    for rec in report.per_nu:
        if rec.get("failed") or "residuals" not in rec:
            continue
        res = rec["residuals"]
        if "R" not in res:
            continue
        for j, (r, v) in enumerate(zip(res["R"], res["V"])):
            res_rows.append((rec["nu"], j, r, v))
    res_path = out / "residuals.csv"
    write_csv(res_path, ["nu", "field_index", "R", "V"], res_rows)

    data = report.to_dict()
    # tables are exported to CSV; keep the JSON compact
    for rec in data["per_nu"]:
        rec.pop("s2_table", None)
    data["version"] = __version__
    data["content_hash"] = content_hash([echo_path, res_path, *csv_paths])
    json_path = out / "sweep_report.json"
    dump_json(data, json_path)
    return json_path


def emit_diagnose_bundle(table, norm_reports: list, constants: dict, out_dir) -> None:
    """s2.csv, norms.json and constants.json for a snapshot-directory scan."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, direction in enumerate(table.shifts.directions):
        for j in range(table.values.shape[1]):
            rows.append(
                (direction[0], direction[1], table.r_actual[i, j], table.values[i, j])
            )
    write_csv(out / "s2.csv", ["dir_x", "dir_y", "r", "S2"], rows)
    dump_json(
        {"norms": [r.to_dict() for r in norm_reports], "version": __version__},
        out / "norms.json",
    )
    dump_json({**constants, "version": __version__}, out / "constants.json")
