"""Command-line entry point: ``dfsgate {tune,gate,sweep-time,sweep-trap,sweep-rabi-error,cluster}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from .config import ExperimentConfig, load_config
from .dfs_logic import DFS_LABELS
from .drive import MODE_INDEX
from .dynamics import mode_detunings
from .errors import ConfigError, NumericalError
from .experiments import (
    SweepRecord,
    WorkingPoint,
    cluster_from_physics,
    cluster_ideal,
    point_fidelity,
    sweep_rabi_error,
    sweep_time,
    sweep_trap,
    working_point,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
TWO_PI = 2 * np.pi


def fmt(x: float) -> str:
    """12 significant digits, positional notation."""
    x = float(x)
    if not np.isfinite(x):
        return str(x)
    return np.format_float_positional(x, precision=12, unique=False, fractional=False, trim="k")


def write_csv(path, columns: Sequence[str], rows: Sequence[Sequence], comments: Sequence[str]) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _working_point_comment(wp: WorkingPoint) -> str:
    return (
        f"working_point: mode={wp.mode}; trap_frequency_hz={fmt(wp.crystal.trap_frequency / TWO_PI)}; "
        f"rabi_hz={fmt(wp.rabi / TWO_PI)}; gate_time={fmt(wp.gate_time)}"
    )


def cmd_tune(cfg: ExperimentConfig, out=None, threads: int = 1) -> str:
    wp = working_point(cfg)
    c, m = wp.crystal, wp.modes
    det = mode_detunings(m, wp.drive)
    lines = [
        f"mode               {cfg.mode}",
        f"length_scale       {fmt(c.length_scale)} m",
        f"trap_frequency     {fmt(c.trap_frequency / TWO_PI)} Hz",
        f"rabi_frequency     {fmt(wp.rabi / TWO_PI)} Hz",
        f"gate_time          {fmt(wp.gate_time)} s",
        "",
        "p  name       mu             omega_p/2pi (Hz)   z_p (m)            detuning/2pi (Hz)",
    ]
    names = {v: k for k, v in MODE_INDEX.items()}
    for p in range(c.n_ions):
        lines.append(
            f"{p}  {names.get(p, '?'):<9}  {fmt(m.eigenvalues[p]):<13}  {fmt(m.mode_frequencies[p] / TWO_PI):<17}  "
            f"{fmt(m.ground_state_spreads[p]):<17}  {fmt(det[p] / TWO_PI)}"
        )
    text = "\n".join(lines) + "\n"
    if out is not None:
        resolved = replace(cfg, trap_frequency=c.trap_frequency, rabi=wp.rabi)
        with open(out, "w", newline="") as fh:
            fh.write("# tuned working point\n")
            for k, v in resolved.to_items():
                fh.write(f"{k} = {v}\n")
    return text


def cmd_gate(cfg: ExperimentConfig, out=None, threads: int = 1) -> str:
    wp = working_point(cfg)
    report = point_fidelity(wp)
    lines = [
        f"mode            {cfg.mode}",
        f"gate_time       {fmt(wp.gate_time)} s ({wp.loops} loop(s))",
        f"trap_frequency  {fmt(wp.crystal.trap_frequency / TWO_PI)} Hz",
        f"rabi_frequency  {fmt(wp.rabi / TWO_PI)} Hz",
        f"fidelity        {fmt(report.fidelity)}",
        f"infidelity      {fmt(report.infidelity)}",
        "state   |alpha|         phase error (rad)",
    ]
    for s, a, e in zip(DFS_LABELS, report.residual_displacements, report.phase_errors):
        lines.append(f"{s}    {fmt(a):<14}  {fmt(e)}")
    if out is not None:
        rec = SweepRecord.from_report(wp.gate_time, report)
        write_csv(out, SweepRecord.columns("time"), [rec.row()],
                  [f"config: {cfg.describe()}", _working_point_comment(wp)])
    return "\n".join(lines) + "\n"


def cmd_sweep_time(cfg: ExperimentConfig, out=None, threads: int = 1, modes: Sequence[str] | None = None) -> str:
    modes = list(modes or cfg.sweep_modes)
    rows, comments = [], [f"config: {cfg.describe()}"]
    summary = []
    for name in modes:
        sub = cfg.with_mode(name)
        comments.append(_working_point_comment(working_point(sub)))
        records = sweep_time(sub, threads)
        rows += [[name] + r.row() for r in records]
        best = min(records, key=lambda r: r.infidelity)
        summary.append(f"{name:<10} min infidelity {fmt(best.infidelity)} at delta_t = {fmt(best.value)}")
    text = write_csv(out, ["mode"] + SweepRecord.columns("delta_t"), rows, comments)
    return "\n".join(summary) + "\n" if out else text


def cmd_sweep_trap(cfg: ExperimentConfig, out=None, threads: int = 1) -> str:
    records, width = sweep_trap(cfg, threads)
    comments = [
        f"config: {cfg.describe()}",
        _working_point_comment(working_point(cfg)),
        f"plateau_width_hz: {fmt(width)} (fidelity > {cfg.plateau_threshold})",
    ]
    text = write_csv(out, SweepRecord.columns("trap_frequency_hz"), [r.row() for r in records], comments)
    summary = f"mode {cfg.mode}: plateau width {fmt(width)} Hz where fidelity > {cfg.plateau_threshold}\n"
    return summary if out else summary + text


def cmd_sweep_rabi_error(cfg: ExperimentConfig, out=None, threads: int = 1) -> str:
    records, slope = sweep_rabi_error(cfg, threads)
    extra = ["rabi_infidelity"]
    comments = [
        f"config: {cfg.describe()}",
        _working_point_comment(working_point(cfg)),
        f"loglog_slope: {fmt(slope)} (rabi_infidelity vs |epsilon|)",
    ]
    text = write_csv(out, SweepRecord.columns("epsilon", extra), [r.row(extra) for r in records], comments)
    summary = f"mode {cfg.mode}: log-log slope {fmt(slope)}\n"
    return summary if out else summary + text


def cmd_cluster(cfg: ExperimentConfig, out=None, threads: int = 1) -> str:
    if cfg.ideal:
        report = cluster_ideal()
        source = "ideal gate"
    else:
        report = cluster_from_physics(working_point(cfg))
        source = f"physical gate, mode {cfg.mode}"
    lines = [f"source    {source}", f"overlap   {fmt(report.overlap)}", f"leakage   {fmt(report.leakage)}"]
    for s, a in zip(DFS_LABELS, report.state.amplitudes):
        lines.append(f"{s}      {fmt(a.real)} {fmt(a.imag)}j")
    if out is not None:
        write_csv(out, ["overlap", "leakage"], [[report.overlap, report.leakage]], [f"config: {cfg.describe()}"])
    return "\n".join(lines) + "\n"


COMMANDS = {
    "tune": cmd_tune,
    "gate": cmd_gate,
    "sweep-time": cmd_sweep_time,
    "sweep-trap": cmd_sweep_trap,
    "sweep-rabi-error": cmd_sweep_rabi_error,
    "cluster": cmd_cluster,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dfsgate", description="Decoherence-free-subspace phase gate on a four-ion crystal.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output file (CSV, or a config file for 'tune')")
        p.add_argument("--mode", choices=sorted(MODE_INDEX), help="mediating mode (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        if name == "cluster":
            p.add_argument("--ideal", action="store_true", help="bypass the physics, apply the ideal gate")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, mode=args.mode)
        if getattr(args, "ideal", False):
            cfg = replace(cfg, ideal=True)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        kwargs = {}
        if args.command == "sweep-time" and args.mode:
            kwargs["modes"] = [args.mode]
        text = COMMANDS[args.command](cfg, args.out, args.threads, **kwargs)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
