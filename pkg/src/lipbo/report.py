"""Trace JSON, aggregate CSV and error-curve figures.

Trace files hold no timing information so two runs with the same seed give
byte-identical JSON; wall-clock times go to a separate ``timings_<benchmark>.csv``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "lipbo"

from .harness import IterationRecord, RunTrace, SummaryRow, aggregate, record_to_dict  # noqa: E402

CSV_HEADER = ("iteration", "method", "mean_abs_error", "std_abs_error", "q10", "q90")


def validate_out_dir(path) -> Path:
    """Create ``path`` if needed and prove it is writable, before any run starts."""
    p = Path(path)
    if p.exists() and not p.is_dir():
        raise NotADirectoryError(f"output path {p} exists and is not a directory")
    p.mkdir(parents=True, exist_ok=True)
    try:
        fd, probe = tempfile.mkstemp(dir=p, prefix=".probe")
        os.close(fd)
        os.unlink(probe)
    except OSError as exc:
        raise PermissionError(f"output directory {p} is not writable: {exc}") from exc
    return p


def slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", text).strip("_")


def _finite_or_none(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, list):
        return [_finite_or_none(u) for u in v]
    if isinstance(v, dict):
        return {k: _finite_or_none(u) for k, u in v.items()}
    return v


def trace_to_dict(trace: RunTrace) -> dict:
    return _finite_or_none({
        "benchmark": trace.benchmark,
        "method": trace.method,
        "seed": trace.seed,
        "ref_optimum": trace.ref_optimum,
        "failed": trace.failed,
        "error": trace.error,
        "records": [record_to_dict(r) for r in trace.records],
    })


def trace_from_dict(d: dict) -> RunTrace:
    recs = [IterationRecord(**r) for r in d["records"]]
    return RunTrace(d["benchmark"], d["method"], int(d["seed"]), float(d["ref_optimum"]),
                    recs, bool(d.get("failed", False)), d.get("error"))


def trace_json(trace: RunTrace) -> str:
    return json.dumps(trace_to_dict(trace), indent=1, sort_keys=True) + "\n"


def trace_path(out_dir, trace: RunTrace) -> Path:
    return Path(out_dir) / "traces" / trace.benchmark / f"{slug(trace.method)}_seed{trace.seed}.json"


def write_trace(out_dir, trace: RunTrace) -> Path:
    p = trace_path(out_dir, trace)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(trace_json(trace))
    return p


def load_trace(path) -> RunTrace:
    return trace_from_dict(json.loads(Path(path).read_text()))


def load_traces(out_dir, benchmark: str | None = None) -> list[RunTrace]:
    root = Path(out_dir) / "traces"
    pattern = f"{benchmark}/*.json" if benchmark else "*/*.json"
    return [load_trace(p) for p in sorted(root.glob(pattern))]


def write_summary_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.iteration, r.method, repr(r.mean_abs_error), repr(r.std_abs_error),
                        repr(r.q10), repr(r.q90)])
    return path


def read_summary_csv(path) -> list[SummaryRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        return [SummaryRow(int(r[0]), r[1], *map(float, r[2:])) for r in reader]


def write_timings(traces, path) -> Path:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("benchmark", "method", "seed", "iteration", "wall_time"))
        for tr in traces:
            for r in tr.records:
                w.writerow((tr.benchmark, tr.method, tr.seed, r.t, f"{r.wall_time:.6f}"))
    return path


def plot_error_curves(rows, path, title: str = "", log_scale: bool = False) -> Path:
    """One line per method.  Linear scale shades mean +/- std, log scale the q10-q90 band.

    Each method's artists carry ``gid=<method>`` so the SVG has one named group per method.
    """
    by_method: dict[str, list] = {}
    for r in rows:
        by_method.setdefault(r.method, []).append(r)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method, rs in by_method.items():
        rs = sorted(rs, key=lambda r: r.iteration)
        it = [r.iteration for r in rs]
        mean = [r.mean_abs_error for r in rs]
        if log_scale:
            lo = [r.q10 for r in rs]
            hi = [r.q90 for r in rs]
        else:
            lo = [r.mean_abs_error - r.std_abs_error for r in rs]
            hi = [r.mean_abs_error + r.std_abs_error for r in rs]
        (line,) = ax.plot(it, mean, label=method, lw=1.5)
        line.set_gid(method)
        band = ax.fill_between(it, lo, hi, alpha=0.15, color=line.get_color(), lw=0)
        band.set_gid(method + "-band")
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("function evaluations")
    ax.set_ylabel("absolute error")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format=Path(path).suffix.lstrip(".") or "svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def emit_outputs(summary, traces, out_dir, benchmark: str, log_scale: bool = False) -> dict:
    """Write every trace, the group CSV, the group SVG and the timings file."""
    out = Path(out_dir)
    paths = {"traces": [write_trace(out, tr) for tr in traces]}
    paths["csv"] = write_summary_csv(summary, out / f"summary_{slug(benchmark)}.csv")
    paths["svg"] = plot_error_curves(summary, out / f"errors_{slug(benchmark)}.svg", benchmark, log_scale)
    paths["timings"] = write_timings(traces, out / f"timings_{slug(benchmark)}.csv")
    return paths


def rebuild_reports(out_dir, log_scale_for=None) -> list[dict]:
    """Regroup every trace under ``out_dir`` by benchmark and rewrite CSV + SVG."""
    out = Path(out_dir)
    results = []
    for bdir in sorted(p for p in (out / "traces").glob("*") if p.is_dir()):
        traces = load_traces(out, bdir.name)
        rows = aggregate(traces)
        log_scale = bool(log_scale_for(bdir.name)) if log_scale_for else False
        results.append({
            "benchmark": bdir.name,
            "csv": write_summary_csv(rows, out / f"summary_{slug(bdir.name)}.csv"),
            "svg": plot_error_curves(rows, out / f"errors_{slug(bdir.name)}.svg", bdir.name, log_scale),
        })
    return results
