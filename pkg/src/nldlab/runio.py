"""Configuration documents, delimited output, snapshots, and run manifests.

Runs are driven by a flat YAML document; unknown keys are rejected and every
validation error names the offending key.  Outputs are deliberately plain:

  * ``timeseries.csv`` with one row per accepted step and a fixed 15-column
    schema (floats as shortest round-trip decimals, booleans as 0/1), so a
    repeated run reproduces the file byte for byte;
  * self-describing JSON snapshots carrying the grid, the field at full
    precision, the original initial data, and the solver state needed to
    resume bit-identically;
  * a JSON manifest echoing the configuration, the emitted artifact
    checksums, and the terminal status.

The snapshot and manifest records are versioned; loading validates the
version and the configuration hash (which covers every dynamics-affecting
field and nothing about output locations).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import yaml

from .diagnostics import Snapshot, StepStatus, Trajectory
from .grid import DomainKind, RadialField, make_grid
from .scenarios import GridSpec, InitialDataSpec, ScenarioError
from .stepper import SolverConfig, SolverState

SNAPSHOT_VERSION = "nldlab-snapshot-1"
MANIFEST_VERSION = "nldlab-manifest-1"

CSV_COLUMNS = [
    "t",
    "dt",
    "l1",
    "l2",
    "l2pd",
    "linf",
    "mass_balance_residual",
    "picard_iters",
    "picard_ratio",
    "weighted_h2",
    "monotone_ok",
    "positive_ok",
    "potential_bounds_ok",
    "tail_ok",
    "status",
]


class ConfigError(ValueError):
    """Malformed configuration document."""


_DEFAULTS: dict[str, object] = {
    "alpha": 0.4,
    "delta": 0.1,
    "domain": "free",
    "radius": 8.0,
    "n": 1025,
    "family": "gaussian",
    "amplitude": 1.0,
    "width": 1.0,
    "plateau": 1.0,
    "cutoff": 3.0,
    "power": 12.0,
    "dt0": 1e-3,
    "dt_min": 1e-10,
    "dt_max": 1e-2,
    "t_end": 1.0,
    "picard_max": 8,
    "picard_tol": 1e-10,
    "blowup_threshold": 1e6,
    "snapshot_stride": 10,
    "r0": 0.5,
    "tol_monotone": 1e-8,
    "tol_mono_bound": 1e-10,
    "tail_rtol": 1e-10,
    "decay_tol": 1e-8,
    "burnin_frac": 0.01,
    "alphas": None,
}

# fields whose values change the computed trajectory; output knobs excluded
_DYNAMICS_KEYS = (
    "alpha",
    "domain",
    "radius",
    "n",
    "family",
    "amplitude",
    "width",
    "plateau",
    "cutoff",
    "power",
    "dt0",
    "dt_min",
    "dt_max",
    "t_end",
    "picard_max",
    "picard_tol",
    "blowup_threshold",
)


@dataclass(frozen=True)
class ParsedConfig:
    """Validated configuration: solver knobs, grid request, data family."""

    solver: SolverConfig
    grid: GridSpec
    data: InitialDataSpec
    alphas: tuple[float, ...]
    raw: dict

    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    """Hash of the dynamics-affecting configuration subset."""
    payload = {k: raw[k] for k in _DYNAMICS_KEYS}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_config(text: str) -> ParsedConfig:
    """Parse a YAML configuration document, applying documented defaults."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
    raw = dict(_DEFAULTS)
    raw.update(doc)

    domain_name = str(raw["domain"]).lower()
    if domain_name not in ("free", "ball"):
        raise ConfigError(f"domain: must be 'free' or 'ball', got {raw['domain']!r}")
    domain = DomainKind.FREE if domain_name == "free" else DomainKind.BALL
    raw["domain"] = domain_name
    if domain is DomainKind.BALL:
        if "radius" in doc and float(doc["radius"]) != 1.0:
            raise ConfigError("radius: the ball domain forces radius 1")
        raw["radius"] = 1.0

    numeric = [k for k in _DEFAULTS if k not in ("domain", "family", "alphas", "n",
                                                 "picard_max", "snapshot_stride")]
    for key in numeric:
        try:
            raw[key] = float(raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected a number, got {raw[key]!r}") from exc
    for key in ("n", "picard_max", "snapshot_stride"):
        try:
            raw[key] = int(raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw[key]!r}") from exc

    alphas = raw["alphas"]
    if alphas is None:
        alphas_t = (raw["alpha"],)
    else:
        if not isinstance(alphas, (list, tuple)) or not alphas:
            raise ConfigError("alphas: expected a non-empty list of numbers")
        try:
            alphas_t = tuple(float(a) for a in alphas)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"alphas: expected numbers, got {alphas!r}") from exc
        raw["alphas"] = list(alphas_t)

    try:
        solver = SolverConfig(
            alpha=raw["alpha"],
            dt0=raw["dt0"],
            dt_min=raw["dt_min"],
            dt_max=raw["dt_max"],
            t_end=raw["t_end"],
            picard_max=raw["picard_max"],
            picard_tol=raw["picard_tol"],
            blowup_threshold=raw["blowup_threshold"],
            snapshot_stride=raw["snapshot_stride"],
            delta=raw["delta"],
            r0=raw["r0"],
            tol_monotone=raw["tol_monotone"],
            tol_mono_bound=raw["tol_mono_bound"],
            tail_rtol=raw["tail_rtol"],
            decay_tol=raw["decay_tol"],
            burnin_frac=raw["burnin_frac"],
        )
        grid = GridSpec(domain=domain, n=raw["n"], radius=raw["radius"])
        data = InitialDataSpec(
            family=str(raw["family"]).lower(),
            amplitude=raw["amplitude"],
            width=raw["width"],
            plateau=raw["plateau"],
            cutoff=raw["cutoff"],
            power=raw["power"],
        )
        grid.build()  # surface node-count / radius violations now
    except (ValueError, ScenarioError) as exc:
        raise ConfigError(str(exc)) from exc
    if any(a < 0 for a in alphas_t):
        raise ConfigError("alpha: values must be nonnegative")
    return ParsedConfig(solver=solver, grid=grid, data=data, alphas=alphas_t, raw=raw)


def emit_config(parsed: ParsedConfig) -> str:
    """Canonical YAML echo of a parsed configuration; parse(emit(p)) == p."""
    doc = {k: v for k, v in parsed.raw.items() if not (k == "alphas" and v is None)}
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_timeseries(traj: Trajectory, path: str | Path) -> Path:
    """Write the per-step report table as deterministic CSV."""
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for rep in traj.reports:
        lines.append(
            ",".join(
                [
                    _fmt(rep.t),
                    _fmt(rep.dt),
                    _fmt(rep.l1),
                    _fmt(rep.l2),
                    _fmt(rep.l2pd),
                    _fmt(rep.linf),
                    _fmt(rep.mass_balance_residual),
                    str(rep.picard_iters),
                    _fmt(rep.picard_ratio),
                    _fmt(rep.weighted_h2),
                    str(int(rep.monotone_ok)),
                    str(int(rep.positive_ok)),
                    str(int(rep.potential_bounds_ok)),
                    str(int(rep.tail_ok)),
                    rep.status.value,
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_snapshot(path: str | Path, snap: Snapshot, u0: RadialField, cfg_hash: str) -> Path:
    """Write one resumable snapshot record."""
    grid = snap.field.grid
    record = {
        "version": SNAPSHOT_VERSION,
        "config_hash": cfg_hash,
        "t": snap.t,
        "step_index": snap.step_index,
        "domain": grid.kind.value,
        "n": grid.n,
        "radius": grid.radius,
        "values": [float(v) for v in snap.field.values],
        "u0_values": [float(v) for v in u0.values],
        "state": asdict(snap.state),
    }
    path = Path(path)
    path.write_text(json.dumps(record))
    return path


def load_snapshot(path: str | Path, cfg_hash: str | None = None):
    """Read a snapshot; returns (u0 field, current field, solver state).

    Raises ConfigError on version mismatch, hash mismatch (resuming with an
    altered configuration), or a structurally corrupt record.
    """
    path = Path(path)
    try:
        record = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"corrupt snapshot {path}: {exc}") from exc
    if record.get("version") != SNAPSHOT_VERSION:
        raise ConfigError(
            f"snapshot version mismatch: {record.get('version')!r} "
            f"(expected {SNAPSHOT_VERSION!r})"
        )
    if cfg_hash is not None and record["config_hash"] != cfg_hash:
        raise ConfigError(
            "snapshot config hash mismatch: the run configuration changed"
        )
    try:
        grid = make_grid(DomainKind(record["domain"]), record["n"], record["radius"])
        u0 = RadialField(grid=grid, values=record["u0_values"])
        field = RadialField(grid=grid, values=record["values"])
        state = SolverState(**record["state"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"corrupt snapshot {path}: {exc}") from exc
    return u0, field, state


def latest_snapshot(run_dir: str | Path) -> Path | None:
    """Highest-step snapshot file in a run directory, if any."""
    snap_dir = Path(run_dir) / "snapshots"
    if not snap_dir.is_dir():
        return None
    snaps = sorted(snap_dir.glob("snapshot_*.json"))
    return snaps[-1] if snaps else None


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Record of one run: config echo, artifact checksums, terminal status."""

    version: str
    config: dict
    outputs: dict[str, str]
    terminal_status: str
    reason: str
    duration_s: float


def emit_manifest(manifest: RunManifest, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True))
    return path


def parse_manifest(path: str | Path) -> RunManifest:
    record = json.loads(Path(path).read_text())
    if record.get("version") != MANIFEST_VERSION:
        raise ConfigError(
            f"manifest version mismatch: {record.get('version')!r} "
            f"(expected {MANIFEST_VERSION!r})"
        )
    return RunManifest(**record)


def write_run_outputs(
    traj: Trajectory, out_dir: str | Path, parsed: ParsedConfig, duration_s: float
) -> RunManifest:
    """Persist a trajectory: config echo, CSV, snapshots, manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_hash = parsed.hash()
    outputs: dict[str, str] = {}

    cfg_path = out / "config.yaml"
    cfg_path.write_text(emit_config(parsed))
    outputs["config.yaml"] = sha256_file(cfg_path)

    ts_path = emit_timeseries(traj, out / "timeseries.csv")
    outputs["timeseries.csv"] = sha256_file(ts_path)

    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for stale in snap_dir.glob("snapshot_*.json"):
        stale.unlink()
    for snap in traj.snapshots:
        p = emit_snapshot(
            snap_dir / f"snapshot_{snap.step_index:08d}.json", snap, traj.u0, cfg_hash
        )
        outputs[f"snapshots/{p.name}"] = sha256_file(p)

    manifest = RunManifest(
        version=MANIFEST_VERSION,
        config=dict(parsed.raw),
        outputs=outputs,
        terminal_status=traj.status.value,
        reason=traj.reason,
        duration_s=duration_s,
    )
    emit_manifest(manifest, out / "manifest.json")
    return manifest
