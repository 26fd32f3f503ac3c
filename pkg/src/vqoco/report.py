"""CSV traces, JSON manifests and chart files for runs and comparisons."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .algorithm import RunResult
from .errors import IncompleteTraceError, VQOCOError
from .harness import Comparison
from . import plotting


class OutputError(VQOCOError, OSError):
    pass


def _num(v) -> str:
    return repr(float(v))


def trace_header(n: int, m: int) -> list[str]:
    return (
        ["t"]
        + [f"x_{i}" for i in range(1, n + 1)]
        + ["loss", "regret_cum"]
        + [f"g_{k}" for k in range(1, m + 1)]
        + [f"viol_cum_{k}" for k in range(1, m + 1)]
        + [f"Q_{k}" for k in range(1, m + 1)]
        + ["drift"]
    )


def trace_rows(result: RunResult) -> list[list[str]]:
    """Rounds 1..T; Q columns hold the queue after the round's update."""
    if result.cumulative_regret is None:
        raise IncompleteTraceError("metrics not computed; call compute_metrics first")
    rows = []
    for i, r in enumerate(result.trace[1:]):
        rows.append(
            [str(r.t)]
            + [_num(v) for v in r.x]
            + [_num(r.loss), _num(result.cumulative_regret[i])]
            + [_num(v) for v in r.g_vals]
            + [_num(v) for v in result.cumulative_violation[i]]
            + [_num(v) for v in r.queue_after]
            + [_num(r.drift)]
        )
    return rows


def _open(path: Path, mode="w"):
    try:
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_trace_csv(result: RunResult, path) -> Path:
    path = Path(path)
    n = len(result.trace[0].x)
    m = len(result.trace[0].g_vals)
    with _open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace_header(n, m))
        writer.writerows(trace_rows(result))
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_manifest(payload: dict, path) -> Path:
    path = Path(path)
    with _open(path) as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def max_violation_series(result: RunResult) -> np.ndarray:
    cv = result.cumulative_violation
    return cv.max(axis=1) if cv.size else np.zeros(0)


def emit_run(result: RunResult, out_dir, plots: bool = True, stem: str = "run") -> list[Path]:
    """Trace CSV, manifest and (optionally) regret and per-constraint violation charts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [write_trace_csv(result, out / f"{stem}_trace.csv")]
    manifest = dict(result.manifest)
    manifest["final"] = {
        "regret": float(result.cumulative_regret[-1]) if result.T else 0.0,
        "cumulative_violation": result.cumulative_violation[-1].tolist() if result.T else [],
    }
    files.append(write_manifest(manifest, out / f"{stem}_manifest.json"))
    if plots:
        label = manifest.get("label", manifest.get("algorithm", "run"))
        files.append(plotting.plot_regret({label: result.cumulative_regret}, out / f"{stem}_regret.svg"))
        m = len(result.trace[0].g_vals)
        viol = {f"constraint {k + 1}": result.cumulative_violation[:, k] for k in range(m)}
        files.append(plotting.plot_violation(viol, out / f"{stem}_violation.svg"))
    return files


def emit_comparison(table: Comparison, out_dir, plots: bool = True, stem: str = "compare") -> list[Path]:
    """Summary table, seed-aligned series CSV, manifest and overlay charts.

    The charts show each algorithm's curve averaged over the seeds that completed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    path = out / f"{stem}_summary.csv"
    with _open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm", "seed", "final_regret", "final_max_violation", "error"])
        for c in table.cells:
            writer.writerow([
                c.algorithm, c.seed,
                "" if c.final_regret is None else _num(c.final_regret),
                "" if c.final_max_violation is None else _num(c.final_max_violation),
                c.error or "",
            ])
    files.append(path)

    keys = [(a, s) for s in table.seeds for a in table.algorithms if (a, s) in table.results]
    path = out / f"{stem}_series.csv"
    with _open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["t"]
        for a, s in keys:
            header += [f"regret_cum[{a}|{s}]", f"viol_cum_max[{a}|{s}]"]
        writer.writerow(header)
        cols = []
        for key in keys:
            res = table.results[key]
            cols += [res.cumulative_regret, max_violation_series(res)]
        for t in range(table.T):
            writer.writerow([str(t + 1)] + [_num(c[t]) for c in cols])
    files.append(path)

    manifest = {
        "T": table.T,
        "seeds": table.seeds,
        "algorithms": table.algorithms,
        "runs": {f"{a}|{s}": table.results[(a, s)].manifest for a, s in keys},
        "errors": {f"{c.algorithm}|{c.seed}": c.error for c in table.cells if c.error},
    }
    files.append(write_manifest(manifest, out / f"{stem}_manifest.json"))

    if plots:
        regret, viol = {}, {}
        for a in table.algorithms:
            runs = [table.results[(a, s)] for s in table.seeds if (a, s) in table.results]
            if runs:
                regret[a] = np.mean([r.cumulative_regret for r in runs], axis=0)
                viol[a] = np.mean([max_violation_series(r) for r in runs], axis=0)
        files.append(plotting.plot_regret(regret, out / f"{stem}_regret.svg"))
        files.append(plotting.plot_violation(viol, out / f"{stem}_violation.svg"))
    return files


def emit_outputs(result, out_dir, plots: bool = True, stem: str | None = None) -> list[Path]:
    """Write the file set for a single run or a comparison table."""
    if isinstance(result, Comparison):
        return emit_comparison(result, out_dir, plots, stem or "compare")
    return emit_run(result, out_dir, plots, stem or "run")
