"""Render solver CSV outputs to static figure files.

Consumes the documented CSV schemas only (never the solver in-process):

  runs.csv   problem,d,method,M,n_in,n_bc,n_t0,r_m,seed,e_inf,e_rms,
             residual,iters,time_s          -> convergence curves
  slice.csv  xi,xj,u_pred,u_exact,abs_err   -> three-panel heatmaps
  rate.csv   n,mse_mean,mse_std             -> log-log scatter + fit

Lines starting with '#' are header comments and are skipped (rate.csv
carries the fitted slope in one). Rendering is deterministic: identical
CSV input produces identical image bytes (no timestamps are embedded).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("convergence", "slice-triptych", "rate")

RUNS_COLUMNS = ("problem", "d", "method", "M", "n_in", "n_bc", "n_t0",
                "r_m", "seed", "e_inf", "e_rms", "residual", "iters",
                "time_s")
SLICE_COLUMNS = ("xi", "xj", "u_pred", "u_exact", "abs_err")
RATE_COLUMNS = ("n", "mse_mean", "mse_std")

SWEEP_CANDIDATE_COLUMNS = ("M", "n_bc", "n_in")


class SchemaError(ValueError):
    """CSV does not conform to its documented schema; carries a line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class PlotJob:
    input_csv: str
    kind: str
    out_path: str
    x_column: str | None = None  # convergence only; default: auto-detect
    xlabel: str | None = None
    ylabel: str | None = None


@dataclass(frozen=True)
class RenderResult:
    out_path: str
    slope: float | None = None        # recomputed fit (rate plots)
    header_slope: float | None = None  # slope written by the producer


def read_table(path, required, numeric):
    """Parse a CSV under a schema; report violations with line numbers.

    Returns (comments, rows) where rows map column -> str or float.
    """
    comments = []
    rows = []
    header = None
    with open(path, newline="") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if raw.lstrip().startswith("#"):
                comments.append(raw.strip().lstrip("# "))
                continue
            if not raw.strip():
                continue
            fields = next(csv.reader([raw]))
            if header is None:
                header = fields
                missing = [c for c in required if c not in header]
                if missing:
                    raise SchemaError(line_no, f"missing columns {missing}")
                continue
            if len(fields) != len(header):
                raise SchemaError(
                    line_no, f"expected {len(header)} fields, got "
                    f"{len(fields)}")
            row = dict(zip(header, fields))
            for col in numeric:
                try:
                    row[col] = float(row[col])
                except ValueError:
                    raise SchemaError(
                        line_no, f"column {col!r} is not numeric: "
                        f"{row[col]!r}") from None
            rows.append(row)
    if header is None:
        raise SchemaError(1, "empty file")
    if not rows:
        raise SchemaError(2, "no data rows")
    return comments, rows


def _detect_sweep_column(rows):
    varying = [c for c in SWEEP_CANDIDATE_COLUMNS
               if len({r[c] for r in rows}) > 1]
    if len(varying) != 1:
        raise SchemaError(
            2, f"cannot auto-detect the sweep axis (varying: {varying}); "
            "pass --x")
    return varying[0]


def render_convergence(job: PlotJob) -> RenderResult:
    numeric = ("M", "n_in", "n_bc", "n_t0", "r_m", "e_inf", "e_rms",
               "residual", "time_s")
    _, rows = read_table(job.input_csv, RUNS_COLUMNS, numeric)
    x_col = job.x_column or _detect_sweep_column(rows)
    if x_col not in RUNS_COLUMNS:
        raise SchemaError(1, f"unknown x column {x_col!r}")
    order = np.argsort([r[x_col] for r in rows])
    x = np.array([rows[i][x_col] for i in order])
    e_inf = np.array([rows[i]["e_inf"] for i in order])
    e_rms = np.array([rows[i]["e_rms"] for i in order])

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.semilogy(x, e_inf, "o-", label="max error")
    ax.semilogy(x, e_rms, "s--", label="rms error")
    ax.set_xlabel(job.xlabel or x_col)
    ax.set_ylabel(job.ylabel or "error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(job.out_path, dpi=150)
    plt.close(fig)
    return RenderResult(job.out_path)


def render_slice_triptych(job: PlotJob) -> RenderResult:
    _, rows = read_table(job.input_csv, SLICE_COLUMNS, SLICE_COLUMNS)
    n = len(rows)
    q = int(round(math.sqrt(n)))
    if q * q != n or q < 2:
        raise SchemaError(2, f"{n} data rows do not form a q x q grid")
    xi = np.array([r["xi"] for r in rows]).reshape(q, q)
    xj = np.array([r["xj"] for r in rows]).reshape(q, q)
    pred = np.array([r["u_pred"] for r in rows]).reshape(q, q)
    exact = np.array([r["u_exact"] for r in rows]).reshape(q, q)
    err = np.array([r["abs_err"] for r in rows]).reshape(q, q)
    extent = (xi.min(), xi.max(), xj.min(), xj.max())

    # solution panels share one color scale; the error panel has its own
    vmin = min(pred.min(), exact.min())
    vmax = max(pred.max(), exact.max())
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.4))
    panels = (("exact", exact, dict(vmin=vmin, vmax=vmax)),
              ("computed", pred, dict(vmin=vmin, vmax=vmax)),
              ("absolute error", err, {}))
    for ax, (title, field, kw) in zip(axes, panels):
        im = ax.imshow(field.T, origin="lower", extent=extent,
                       aspect="auto", **kw)
        ax.set_title(title)
        ax.set_xlabel(job.xlabel or "xi")
        ax.set_ylabel(job.ylabel or "xj")
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(job.out_path, dpi=150)
    plt.close(fig)
    return RenderResult(job.out_path)


def render_rate(job: PlotJob) -> RenderResult:
    comments, rows = read_table(job.input_csv, RATE_COLUMNS, RATE_COLUMNS)
    n = np.array([r["n"] for r in rows])
    mean = np.array([r["mse_mean"] for r in rows])
    std = np.array([r["mse_std"] for r in rows])
    if len(n) < 2:
        raise SchemaError(2, "need at least two widths for a fit")
    slope, intercept = np.polyfit(np.log(n), np.log(np.maximum(mean, 1e-300)),
                                  1)
    header_slope = None
    for comment in comments:
        if "slope" in comment and "=" in comment:
            header_slope = float(comment.split("=", 1)[1])

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.errorbar(n, mean, yerr=std, fmt="o", capsize=3, label="measured")
    fit = np.exp(intercept) * n ** slope
    ax.plot(n, fit, "-", label=f"fit slope {slope:.3f}")
    ax.plot(n, mean[0] * (n / n[0]) ** -1.0, ":", label="reference slope -1")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(job.xlabel or "number of random features")
    ax.set_ylabel(job.ylabel or "mean squared error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(job.out_path, dpi=150)
    plt.close(fig)
    return RenderResult(job.out_path, slope=float(slope),
                        header_slope=header_slope)


def render(job: PlotJob) -> RenderResult:
    if job.kind == "convergence":
        return render_convergence(job)
    if job.kind == "slice-triptych":
        return render_slice_triptych(job)
    if job.kind == "rate":
        return render_rate(job)
    raise ValueError(f"unknown plot kind {job.kind!r}; choose from {KINDS}")
