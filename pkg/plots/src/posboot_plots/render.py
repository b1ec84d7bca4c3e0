"""Render posboot output files into figures.

Consumes only the CLI's stable file formats (trajectory CSVs with header
round,joined,omega and sweep CSVs with header z,mean_round,std,seeds) and
never recomputes metrics. Rendering is pure with respect to inputs: the
same files produce byte-identical images.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

TRAJECTORY_HEADER = ["round", "joined", "omega"]

FIG_WIDTH = 7.0
GOLDEN = (math.sqrt(5) - 1.0) / 2.0
DPI = 150


class SchemaError(Exception):
    """An input file does not match the expected column layout."""


def read_trajectory(path) -> tuple[list[int], list[float]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRAJECTORY_HEADER:
            raise SchemaError(f"{path}: expected header {','.join(TRAJECTORY_HEADER)}")
        rounds, omega = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rounds.append(int(row[0]))
                omega.append(float(row[2]))
            except (ValueError, IndexError):
                raise SchemaError(f"{path}: line {lineno}: bad trajectory row") from None
    return rounds, omega


def read_sidecar_stop(path) -> int | None:
    """stop_t from the trajectory's JSON sidecar, when present."""
    sidecar = Path(path).with_suffix(".json")
    if not sidecar.exists():
        return None
    try:
        return int(json.loads(sidecar.read_text())["config"]["stop_t"])
    except (KeyError, ValueError, json.JSONDecodeError):
        return None


def read_sweep(path) -> tuple[list[float], list[float], list[float] | None]:
    """Returns (z, mean_round, std); std is None when the column is absent."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        names = [h.strip() for h in header]
        if "z" not in names or "mean_round" not in names:
            raise SchemaError(f"{path}: expected columns z,mean_round[,std]")
        zi, mi = names.index("z"), names.index("mean_round")
        si = names.index("std") if "std" in names else None
        z, mean, std = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                m = float(row[mi])
                if math.isnan(m):
                    continue  # threshold never reached on any seed
                z.append(float(row[zi]))
                mean.append(m)
                if si is not None:
                    s = float(row[si])
                    std.append(0.0 if math.isnan(s) else s)
            except (ValueError, IndexError):
                raise SchemaError(f"{path}: line {lineno}: bad sweep row") from None
    return z, mean, (std if si is not None else None)


@dataclass
class PlotSpec:
    traj_paths: list[str]
    out_path: str
    labels: list[str] = field(default_factory=list)
    stop_markers: list[int] | None = None  # None: take from sidecars
    z_lines: list[float] = field(default_factory=list)


def _new_axes():
    fig = plt.figure(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN))
    ax = fig.add_subplot(1, 1, 1)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    return fig, ax


def _save(fig, out_path) -> None:
    fig.savefig(out_path, dpi=DPI, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)


def render_trajectories(spec: PlotSpec) -> None:
    """One score-vs-round line per input file, with optional stop-round
    markers and horizontal threshold lines."""
    if not spec.traj_paths:
        raise SchemaError("no trajectory files given")
    fig, ax = _new_axes()
    for i, path in enumerate(spec.traj_paths):
        rounds, omega = read_trajectory(path)
        label = spec.labels[i] if i < len(spec.labels) else Path(path).stem
        (line,) = ax.plot(rounds, omega, label=label, linewidth=1.4)
        stop = (
            spec.stop_markers[i]
            if spec.stop_markers is not None and i < len(spec.stop_markers)
            else read_sidecar_stop(path)
        )
        if stop is not None and stop <= max(rounds):
            ax.axvline(stop, color=line.get_color(), linestyle=":", alpha=0.5, linewidth=1.0)
    for z in spec.z_lines:
        ax.axhline(z, color="grey", linestyle="--", alpha=0.6, linewidth=0.9)
    ax.set_xlabel("round")
    ax.set_ylabel("centralization score")
    ax.set_ylim(bottom=0)
    ax.legend(frameon=False)
    _save(fig, spec.out_path)


def render_sweep(in_path, out_path) -> None:
    """Mean first-round-below-z per threshold, error bars from the std
    column when present (a warning is printed when it is missing)."""
    z, mean, std = read_sweep(in_path)
    if not z:
        raise SchemaError(f"{in_path}: no plottable rows")
    if std is None:
        print(f"warning: {in_path} has no std column; rendering without error bars",
              file=sys.stderr)
    order = sorted(range(len(z)), key=lambda i: -z[i])
    z = [z[i] for i in order]
    mean = [mean[i] for i in order]
    fig, ax = _new_axes()
    if std is not None:
        std = [std[i] for i in order]
        ax.errorbar(z, mean, yerr=std, fmt="o-", capsize=3, linewidth=1.2)
    else:
        ax.plot(z, mean, "o-", linewidth=1.2)
    ax.invert_xaxis()  # tighter targets to the right
    ax.set_xlabel("score threshold z")
    ax.set_ylabel("mean first round at or below z")
    _save(fig, out_path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posboot-render",
        description="Render posboot trajectory and sweep files into figures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="score-vs-round lines from trajectory files")
    p.add_argument("--traj", nargs="+", required=True, help="trajectory CSV files")
    p.add_argument("--labels", nargs="*", default=[], help="legend labels, one per file")
    p.add_argument("--stop-t", nargs="*", type=int, default=None, dest="stop_t",
                   help="stop-round markers (default: from JSON sidecars)")
    p.add_argument("--z", nargs="*", type=float, default=[], help="horizontal threshold lines")
    p.add_argument("--out", required=True, help="output image path")

    p = sub.add_parser("render-sweep", help="threshold sweep chart with error bars")
    p.add_argument("--in", dest="infile", required=True, help="sweep CSV file")
    p.add_argument("--out", required=True, help="output image path")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "render":
            render_trajectories(PlotSpec(
                traj_paths=args.traj,
                out_path=args.out,
                labels=args.labels,
                stop_markers=args.stop_t,
                z_lines=args.z,
            ))
        else:
            render_sweep(args.infile, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
