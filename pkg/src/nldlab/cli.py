"""Command-line entry points.

    nldlab run      --config cfg.yaml [--out DIR] [--resume DIR]
    nldlab sweep    --config cfg.yaml [--alphas 0.4,0.8,1.5] [--out DIR]
    nldlab verify   [--out DIR]
    nldlab converge --config cfg.yaml [--levels N] [--t-probe T] [--out DIR]
    nldlab report   --run DIR

Exit codes: 0 success, 1 a requested check failed, 2 configuration error.
The default output directory is $NLDLAB_OUT, falling back to ./nldlab-out.
Figures are rendered only by the report path, over the emitted CSV and
snapshots; the solver itself writes data files only.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .acceptance import run_acceptance
from .grid import GridError
from .runio import (
    ConfigError,
    ParsedConfig,
    latest_snapshot,
    load_snapshot,
    parse_config,
    write_run_outputs,
)
from .scenarios import ScenarioError, SweepSpec, convergence_study, run_regime_sweep, run_scenario
from .stepper import run as run_stepper

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def _default_out() -> Path:
    return Path(os.environ.get("NLDLAB_OUT", "nldlab-out"))


def _load_config(path: str | None) -> ParsedConfig:
    if path is None:
        return parse_config("{}")
    return parse_config(Path(path).read_text())


def _say(quiet: bool, *parts) -> None:
    if not quiet:
        print(*parts)


def _cmd_run(args) -> int:
    parsed = _load_config(args.config)
    out = Path(args.out) / "run" if args.resume is None else None
    if args.resume is not None:
        run_dir = Path(args.resume)
        echoed = parse_config((run_dir / "config.yaml").read_text())
        snap = latest_snapshot(run_dir)
        if snap is None:
            raise ConfigError(f"no snapshots to resume from in {run_dir}")
        u0, fld, state = load_snapshot(snap, echoed.hash())
        if state.t >= echoed.solver.t_end * (1.0 - 1e-12):
            _say(args.quiet, f"run in {run_dir} already reached t_end; nothing to do")
            return EXIT_OK
        _say(args.quiet, f"resuming from {snap.name} at t={state.t:.6g}")
        start = time.perf_counter()
        traj = run_stepper(u0, echoed.solver, resume_field=fld, resume_state=state)
        duration = time.perf_counter() - start
        out = run_dir / f"resume-{state.step_index:08d}"
        write_run_outputs(traj, out, echoed, duration)
        _say(args.quiet, f"{traj.status.value}: {traj.reason} ({len(traj.reports)} steps)")
        _say(args.quiet, f"outputs in {out}")
        return EXIT_OK
    start = time.perf_counter()
    traj = run_scenario(parsed.solver, parsed.grid, parsed.data)
    duration = time.perf_counter() - start
    write_run_outputs(traj, out, parsed, duration)
    _say(args.quiet, f"{traj.status.value}: {traj.reason} ({len(traj.reports)} steps)")
    _say(args.quiet, f"outputs in {out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    parsed = _load_config(args.config)
    alphas = parsed.alphas
    if args.alphas:
        alphas = tuple(float(a) for a in args.alphas.split(","))
    spec = SweepSpec(alphas=alphas, data=parsed.data, grid=parsed.grid, solver=parsed.solver)
    out = Path(args.out) / "sweep"
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    entries = run_regime_sweep(spec)
    duration = time.perf_counter() - start
    lines = ["alpha,regime,passed,status,t_final,detail"]
    failed = False
    for entry in entries:
        run_out = out / f"alpha_{entry.alpha:.6f}"
        write_run_outputs(entry.trajectory, run_out, parsed, duration_s=duration)
        verdict = entry.verdict
        t_final = entry.trajectory.reports[-1].t if entry.trajectory.reports else 0.0
        passed = "" if verdict.passed is None else str(int(verdict.passed))
        detail = verdict.detail.replace(",", ";")
        lines.append(
            f"{entry.alpha!r},{verdict.regime},{passed},"
            f"{entry.trajectory.status.value},{t_final!r},{detail}"
        )
        if verdict.passed is False:
            failed = True
        mark = "----" if verdict.passed is None else ("PASS" if verdict.passed else "FAIL")
        _say(args.quiet, f"alpha={entry.alpha:g} [{verdict.regime}] {mark}  {verdict.detail}")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    _say(args.quiet, f"outputs in {out}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _cmd_verify(args) -> int:
    results = run_acceptance(quiet=args.quiet)
    all_pass = all(r.passed for r in results)
    if args.quiet:
        for r in results:
            print(f"[{r.cid:2d}] {'PASS' if r.passed else 'FAIL'}  {r.name}: {r.measured}")
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def _cmd_converge(args) -> int:
    parsed = _load_config(args.config)
    study = convergence_study(
        parsed.data, parsed.solver.alpha, t_probe=args.t_probe, levels=args.levels
    )
    out = Path(args.out) / "converge"
    out.mkdir(parents=True, exist_ok=True)
    lines = ["sweep,h,dt,error"]
    for label, rows in (("spatial", study.spatial), ("temporal", study.temporal)):
        _say(args.quiet, f"{label} sweep:")
        for row in rows:
            _say(args.quiet, f"  h={row.h:.5g}  dt={row.dt:.5g}  error={row.error:.5e}")
        lines += [f"{label},{row.h!r},{row.dt!r},{row.error!r}" for row in rows]
    (out / "converge.csv").write_text("\n".join(lines) + "\n")
    _say(
        args.quiet,
        f"observed orders: spatial={study.spatial_order:.2f}, "
        f"temporal={study.temporal_order:.2f}",
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    from .report import render_run_figures, render_sweep_figures

    run_dir = Path(args.run)
    if not run_dir.is_dir():
        raise ConfigError(f"not a directory: {run_dir}")
    written = []
    if (run_dir / "timeseries.csv").exists():
        written += render_run_figures(run_dir)
    written += render_sweep_figures(run_dir)
    for sub in sorted(run_dir.glob("alpha_*")):
        if (sub / "timeseries.csv").exists():
            written += render_run_figures(sub)
    if not written:
        raise ConfigError(f"nothing to render in {run_dir} (no timeseries.csv found)")
    for p in written:
        _say(args.quiet, f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nldlab",
        description="Radial nonlocal diffusion laboratory: "
        "u_t = ((-lap)^-1 u) lap u + alpha u^2",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=str(_default_out()), help="output directory")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("--config", help="YAML configuration document")
    p_run.add_argument("--resume", metavar="DIR", help="continue from the latest snapshot in DIR")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the regime sweep")
    p_sweep.add_argument("--config", help="YAML configuration document")
    p_sweep.add_argument("--alphas", help="comma-separated alpha overrides")
    common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the acceptance-criteria suite")
    common(p_verify)
    p_verify.set_defaults(func=_cmd_verify)

    p_conv = sub.add_parser("converge", help="grid/dt refinement study")
    p_conv.add_argument("--config", help="YAML configuration document")
    p_conv.add_argument("--levels", type=int, default=3)
    p_conv.add_argument("--t-probe", dest="t_probe", type=float, default=0.5)
    common(p_conv)
    p_conv.set_defaults(func=_cmd_converge)

    p_rep = sub.add_parser("report", help="render figures for an emitted run or sweep")
    p_rep.add_argument("--run", required=True, metavar="DIR", help="run or sweep directory")
    common(p_rep)
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, GridError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
