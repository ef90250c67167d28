"""Static figures rendered next to the delimited output.

Everything uses the Agg backend and writes PNG files; nothing opens a
window.  Figures are presentation-only and never feed back into verdicts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _figdir(out_dir) -> Path:
    d = Path(out_dir) / "figures"
    d.mkdir(parents=True, exist_ok=True)
    return d


def plot_s2_loglog(tables_by_label: dict, out_dir, fname="s2_loglog.png") -> Path:
    """Direction-averaged S2 against |r| on log axes, one curve per label
    (typically one per viscosity)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, table in tables_by_label.items():
        r, s2 = table.direction_average()
        ax.loglog(r, s2, marker="o", ms=3, lw=1, label=str(label))
    ax.set_xlabel(r"$|r|$")
    ax.set_ylabel(r"$S_2(r;U)$")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = _figdir(out_dir) / fname
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_energy(ledger, out_dir, fname="energy.png") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    t = np.asarray(ledger.times)
    ax.plot(t, ledger.kinetic, label="E(t)")
    ax.plot(t, ledger.dissipation_bulk, label="cumulative bulk dissipation")
    if max(ledger.dissipation_wall) > 0:
        ax.plot(t, ledger.dissipation_wall, label="cumulative wall dissipation")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = _figdir(out_dir) / fname
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_residual_trends(report_dict, out_dir, fname="residuals.png") -> Path:
    """max |V_j| and max |R_j| against viscosity from a sweep report."""
    nus, vmax, rmax = [], [], []
    for rec in report_dict["per_nu"]:
        if rec.get("failed") or "residuals" not in rec:
            continue
        res = rec["residuals"]
        if "R" not in res:
            continue
        nus.append(rec["nu"])
        rmax.append(max(abs(x) for x in res["R"]))
        vmax.append(max(abs(x) for x in res["V"]))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if nus:
        ax.loglog(nus, vmax, "o-", label=r"$\max_j |V_j|$")
        ax.loglog(nus, rmax, "s-", label=r"$\max_j |R_j|$")
        ref = np.array(nus)
        ax.loglog(ref, vmax[0] * np.sqrt(ref / ref[0]), "k--", lw=0.8,
                  label=r"$\sqrt{\nu}$ reference")
        ax.legend(fontsize=8)
    ax.set_xlabel(r"$\nu$")
    ax.set_ylabel("residual")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = _figdir(out_dir) / fname
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
