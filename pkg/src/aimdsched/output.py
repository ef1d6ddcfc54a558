"""Deterministic CSV/JSON writers with an embedded provenance header."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .engine import CycleRecord
from .metrics import TracePoint

CYCLE_COLUMNS = ["k", "t_start", "T", "node", "u", "gamma", "w", "u_av", "w_av", "t_delta", "t_w", "t_total"]
TRACE_COLUMNS = ["t", "node", "u_tau", "w_tau", "delta_i_tau"]


@dataclass(frozen=True)
class RunManifest:
    config_sha256: str
    subcommand: str
    seed: int | None = None
    outputs: tuple[str, ...] = ()
    tool: str = "aimdsched"
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "subcommand": self.subcommand,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "outputs": list(self.outputs),
        }

    def header_lines(self) -> list[str]:
        lines = []
        for key, val in self.to_dict().items():
            text = "" if val is None else (",".join(val) if isinstance(val, list) else str(val))
            lines.append(f"# {key}: {text}".rstrip())
        return lines


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def _write_csv(path: Path, manifest: RunManifest, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        for line in manifest.header_lines():
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def cycle_rows(records: Sequence[CycleRecord]):
    for rec in records:
        for i, nc in enumerate(rec.nodes, start=1):
            m = nc.metrics
            yield (
                rec.k, rec.t_start, rec.T, i, nc.u, nc.gamma, nc.w,
                m.u_av if m else None, m.w_av if m else None,
                m.t_delta if m else None, m.t_w if m else None, m.t_total if m else None,
            )


def trace_rows(points: Iterable[TracePoint]):
    for pt in points:
        for i, (u, w, d) in enumerate(zip(pt.u, pt.w, pt.delta_i), start=1):
            yield (pt.t, i, u, w, d)


def write_cycles_csv(path, manifest: RunManifest, records: Sequence[CycleRecord]) -> None:
    _write_csv(Path(path), manifest, CYCLE_COLUMNS, cycle_rows(records))


def write_trace_csv(path, manifest: RunManifest, points: Iterable[TracePoint]) -> None:
    _write_csv(Path(path), manifest, TRACE_COLUMNS, trace_rows(points))


def write_rows_csv(path, manifest: RunManifest, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    _write_csv(Path(path), manifest, columns, rows)


def write_json(path, manifest: RunManifest, payload: dict) -> None:
    doc = {"manifest": manifest.to_dict(), **payload}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def validate_cycles_csv(path, lam: float, rel_tol: float = 1e-9, conservation: bool = True) -> list[str]:
    """Re-read a written cycles file and re-check nonnegativity and conservation."""
    problems = []
    per_cycle: dict[str, list[float]] = {}
    for row in read_csv(path):
        k = row["k"]
        for col in ("T", "u", "gamma"):
            if float(row[col]) < 0:
                problems.append(f"k={k} node={row['node']}: negative {col}={row[col]}")
        if float(row["w"]) < -1e-12:
            problems.append(f"k={k} node={row['node']}: negative w={row['w']}")
        if float(row["T"]) <= 0:
            problems.append(f"k={k}: non-positive cycle period {row['T']}")
        if conservation and row["u_av"]:
            per_cycle.setdefault(k, []).append(float(row["u_av"]))
    for k, rates in per_cycle.items():
        residual = abs(math.fsum(rates) - lam)
        if residual > rel_tol * lam:
            problems.append(f"k={k}: sum(u_av)={math.fsum(rates)!r} differs from lambda by {residual:.3e}")
    return problems
