"""Figure rendering over emitted run artifacts.

Post-processing only: the solver emits delimited data and snapshots, and this
module reads those files back and drops PNG figures next to them.  Nothing
here feeds back into the computation.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

_BOOL_COLUMNS = ("monotone_ok", "positive_ok", "potential_bounds_ok", "tail_ok")


def load_timeseries(path: str | Path) -> dict[str, np.ndarray]:
    """Read an emitted timeseries CSV into column arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {}
    out: dict[str, np.ndarray] = {}
    for key in rows[0]:
        if key == "status":
            out[key] = np.array([row[key] for row in rows])
        elif key == "picard_iters" or key in _BOOL_COLUMNS:
            out[key] = np.array([int(row[key]) for row in rows])
        else:
            out[key] = np.array([float(row[key]) for row in rows])
    return out


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_run_figures(run_dir: str | Path) -> list[Path]:
    """Render norm, residual, step-size, and profile figures for one run."""
    run_dir = Path(run_dir)
    cols = load_timeseries(run_dir / "timeseries.csv")
    written: list[Path] = []
    if not cols:
        return written
    t = cols["t"]

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for key, label in [("l1", "L1"), ("l2", "L2"), ("l2pd", "L2+d"), ("linf", "sup")]:
        ax.plot(t, cols[key], label=label, lw=1.2)
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(frameon=False)
    ax.set_title("norm history")
    written.append(_save(fig, run_dir / "norms.png"))

    fig, axes = plt.subplots(2, 1, figsize=(6.4, 5.4), sharex=True)
    axes[0].plot(t, cols["mass_balance_residual"], lw=1.2, color="tab:red")
    axes[0].set_yscale("log")
    axes[0].set_ylabel("balance residual")
    pr = np.maximum(cols["picard_ratio"], 1e-300)
    axes[1].plot(t, pr, lw=1.2, color="tab:purple")
    axes[1].set_yscale("log")
    axes[1].set_ylabel("picard contraction")
    axes[1].set_xlabel("t")
    written.append(_save(fig, run_dir / "residuals.png"))

    fig, axes = plt.subplots(2, 1, figsize=(6.4, 5.4), sharex=True)
    axes[0].plot(t, cols["dt"], lw=1.2, color="tab:green")
    axes[0].set_yscale("log")
    axes[0].set_ylabel("dt")
    axes[1].step(t, cols["picard_iters"], lw=1.2, color="tab:orange", where="post")
    axes[1].set_ylabel("picard solves")
    axes[1].set_xlabel("t")
    written.append(_save(fig, run_dir / "stepsize.png"))

    snaps = sorted((run_dir / "snapshots").glob("snapshot_*.json"))
    if snaps:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        picks = snaps if len(snaps) <= 6 else [
            snaps[i] for i in np.linspace(0, len(snaps) - 1, 6).astype(int)
        ]
        for p in picks:
            record = json.loads(p.read_text())
            r = np.linspace(0.0, record["radius"], record["n"])
            ax.plot(r, record["values"], lw=1.2, label=f"t={record['t']:.3g}")
        ax.set_xlabel("r")
        ax.set_ylabel("u")
        ax.legend(frameon=False, fontsize=8)
        ax.set_title("field profiles")
        written.append(_save(fig, run_dir / "profiles.png"))
    return written


def render_sweep_figures(sweep_dir: str | Path) -> list[Path]:
    """Overlay the L2 histories of every entry in a sweep directory."""
    sweep_dir = Path(sweep_dir)
    entries = sorted(sweep_dir.glob("alpha_*/timeseries.csv"))
    written: list[Path] = []
    if not entries:
        return written
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for path in entries:
        cols = load_timeseries(path)
        if not cols:
            continue
        label = path.parent.name.replace("alpha_", "alpha=")
        ax.plot(cols["t"], cols["l2"], lw=1.2, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("L2 norm")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("sweep: L2 histories")
    written.append(_save(fig, sweep_dir / "sweep_l2.png"))
    return written
