"""Error metrics against exact solutions and cross-section slices."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import BoxDomain

SLICE_COLUMNS = ("xi", "xj", "u_pred", "u_exact", "abs_err")


@dataclass(frozen=True)
class ErrorPair:
    e_inf: float  # max absolute error
    e_rms: float  # root-mean-square error
    n_points: int


def errors(predicted: np.ndarray, exact: np.ndarray) -> ErrorPair:
    predicted = np.asarray(predicted, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if predicted.shape != exact.shape or predicted.ndim != 1:
        raise ValueError(
            f"vectors must be 1-d and equal length, got {predicted.shape} "
            f"and {exact.shape}")
    if predicted.size == 0:
        raise ValueError("need at least one point")
    delta = predicted - exact
    return ErrorPair(float(np.max(np.abs(delta))),
                     float(np.sqrt(np.mean(delta**2))),
                     predicted.size)


def slice_grid(domain: BoxDomain, dims: tuple[int, int],
               fixed: dict[int, float] | None = None,
               q: int = 800) -> np.ndarray:
    """Uniform q x q grid on the (dims[0], dims[1]) coordinate plane.

    Remaining coordinates are pinned to `fixed` values (defaults:
    mid-domain, i.e. (a+b)/2 spatially and T/2 in time). Either plane
    axis may be the time axis of a dynamic domain. Points are ordered
    row-major with dims[0] varying slowest.
    """
    i, j = dims
    if i == j:
        raise ValueError("plane axes must differ")
    dim_total = domain.dim_total
    for axis in (i, j):
        if not (0 <= axis < dim_total):
            raise ValueError(f"axis {axis} out of range for dim_total "
                             f"{dim_total}")
    if q < 2:
        raise ValueError("q must be >= 2")

    lo = np.append(domain.lo, 0.0) if domain.time_dependent else domain.lo
    hi = (np.append(domain.hi, domain.time_extent)
          if domain.time_dependent else domain.hi)
    pinned = (lo + hi) / 2.0
    for axis, value in (fixed or {}).items():
        if axis in (i, j):
            raise ValueError(f"axis {axis} is a plane axis, cannot be fixed")
        if not (lo[axis] <= value <= hi[axis]):
            raise ValueError(f"fixed value {value} outside [{lo[axis]}, "
                             f"{hi[axis]}] on axis {axis}")
        pinned[axis] = value

    xi = np.linspace(lo[i], hi[i], q)
    xj = np.linspace(lo[j], hi[j], q)
    grid = np.tile(pinned, (q * q, 1))
    grid[:, i] = np.repeat(xi, q)
    grid[:, j] = np.tile(xj, q)
    return grid


def write_slice_csv(path, domain: BoxDomain, dims: tuple[int, int],
                    predict, exact, q: int = 800,
                    fixed: dict[int, float] | None = None,
                    block_rows: int = 16) -> None:
    """Stream a slice to CSV in row blocks (bounds memory at q=800).

    `predict` and `exact` map point blocks to value vectors. Columns:
    xi, xj, u_pred, u_exact, abs_err.
    """
    grid = slice_grid(domain, dims, fixed, q)
    i, j = dims
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SLICE_COLUMNS)
        for start in range(0, q * q, block_rows * q):
            block = grid[start:start + block_rows * q]
            up = predict(block)
            ue = exact(block)
            err = np.abs(up - ue)
            for row in range(block.shape[0]):
                writer.writerow([f"{block[row, i]:.17g}",
                                 f"{block[row, j]:.17g}",
                                 f"{up[row]:.17g}", f"{ue[row]:.17g}",
                                 f"{err[row]:.17g}"])
