"""Face-blended boundary embedding (A-TFC) and the full-TFC oracle.

The full constrained expression u = g - T g + T C enforces u = C on the
boundary of a box exactly, but T carries O(3^d) face/edge/corner terms.
The truncation A keeps only the 2d codimension-1 face terms,

    A f(x) = sum_i [ (b_i - x_i)/(b_i - a_i) f(x | x_i = a_i)
                   + (x_i - a_i)/(b_i - a_i) f(x | x_i = b_i) ],

plus, on time-dependent domains, a one-sided entry (T - t)/T f(x, t=0)
for the initial face. With u = g - A g + A H the boundary error at a
face point y reduces to the mismatch [A g - g](y) - [A H - H](y), which
is what the boundary rows enforce; on stationary hypercubes this equals
the closed-form face-blend conditions term by term.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .features import FeatureLayer, eval_features
from .geometry import BoxDomain, UnsupportedConfigurationError


@dataclass(frozen=True)
class StencilEntry:
    """One blended projection: weight sign*(x_axis - ref)/denom -> face.

    The weight is evaluated as a per-point quotient so that it is
    exactly 1 on the entry's own face and exactly 0 on the opposite one
    (boundary cancellations in the mismatch identity are then bitwise).
    """

    axis: int
    face_value: float
    sign: float
    ref: float
    denom: float
    is_time: bool

    @property
    def slope(self) -> float:
        """d(weight)/d(x_axis); the weight is affine in that coordinate."""
        return self.sign / self.denom

    def weight(self, points: np.ndarray) -> np.ndarray:
        return self.sign * (points[:, self.axis] - self.ref) / self.denom

    def project(self, points: np.ndarray) -> np.ndarray:
        out = points.copy()
        out[:, self.axis] = self.face_value
        return out


def stencil(domain: BoxDomain) -> list[StencilEntry]:
    """Spatial low/high entry pairs plus the initial-time entry."""
    entries = []
    for i in range(domain.d):
        a, b = domain.lo[i], domain.hi[i]
        entries.append(StencilEntry(i, a, -1.0, b, b - a, False))
        entries.append(StencilEntry(i, b, 1.0, a, b - a, False))
    if domain.time_dependent:
        t_axis = domain.dim_total - 1
        T = domain.time_extent
        entries.append(StencilEntry(t_axis, 0.0, -1.0, T, T, True))
    return entries


def apply_A(field, points: np.ndarray, domain: BoxDomain,
            order: str = "value"):
    """Evaluate A field (or a derivative of it) at points.

    `field` follows the ScalarField protocol (value / grad / diag2 over
    full coordinates). order is one of:
      value -> (n,);  grad -> (n, dim_total) including d_t last when
      time-dependent;  lap -> (n,) spatial Laplacian;  dt -> (n,).
    Weights are affine in the pinned coordinate, so the pinned direction
    contributes slope * f(projected) to first derivatives and nothing to
    pure second derivatives.
    """
    points = np.asarray(points, dtype=float)
    d = domain.d
    n = points.shape[0]
    if order == "value":
        out = np.zeros(n)
    elif order == "grad":
        out = np.zeros((n, domain.dim_total))
    elif order in ("lap", "dt"):
        out = np.zeros(n)
    else:
        raise ValueError(f"unknown order {order!r}")
    if order == "dt" and not domain.time_dependent:
        raise ValueError("dt requested on a stationary domain")

    for entry in stencil(domain):
        proj = entry.project(points)
        w = entry.weight(points)
        if order == "value":
            out += w * field.value(proj)
        elif order == "grad":
            g = field.grad(proj)
            out += w[:, None] * g
            # pinned direction: restriction is constant, weight is affine
            out[:, entry.axis] += entry.slope * field.value(proj) \
                - w * g[:, entry.axis]
        elif order == "lap":
            d2 = field.diag2(proj)[:, :d]
            s = np.sum(d2, axis=1)
            if not entry.is_time:
                s = s - d2[:, entry.axis]
            out += w * s
        elif order == "dt":
            if entry.is_time:
                out += entry.slope * field.value(proj)
            else:
                out += w * field.grad(proj)[:, -1]
    return out


def on_face_mask(domain: BoxDomain, points: np.ndarray,
                 rtol: float = 1e-12) -> np.ndarray:
    """True where a point lies on a spatial face or the initial face."""
    hit = np.zeros(points.shape[0], dtype=bool)
    for i in range(domain.d):
        tol = rtol * (domain.hi[i] - domain.lo[i])
        hit |= np.abs(points[:, i] - domain.lo[i]) <= tol
        hit |= np.abs(points[:, i] - domain.hi[i]) <= tol
    if domain.time_dependent:
        hit |= np.abs(points[:, -1]) <= rtol * domain.time_extent
    return hit


def mismatch_rows(layer: FeatureLayer, problem, y: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Boundary rows (A V - V)(y) and right-hand side (A H - H)(y).

    Enforcing rows . Phi = rhs makes the constrained expression match
    the boundary data at y: u(y) - H(y) = -[(A g - g)(y) - (A H - H)(y)].
    """
    domain = problem.domain
    y = np.asarray(y, dtype=float)
    if not np.all(on_face_mask(domain, y)):
        raise ValueError("mismatch rows require points on domain faces")
    rows = -eval_features(layer, y, 0).values
    rhs = -problem.boundary.value(y)
    for entry in stencil(domain):
        proj = entry.project(y)
        w = entry.weight(y)
        rows += w[:, None] * eval_features(layer, proj, 0).values
        rhs += w * problem.boundary.value(proj)
    return rows, rhs


def full_tfc_oracle(f, points: np.ndarray, domain: BoxDomain) -> np.ndarray:
    """Full constrained-expression operator T f by O(3^d) enumeration.

    `f` is a plain callable on point blocks. Enumerates every j-tuple of
    pinned directions with every corner assignment (3^d - 1 terms in
    total), alternating signs across levels. Restricted to d <= 3; this
    is a validation oracle, not a solver path.
    """
    if domain.time_dependent:
        raise UnsupportedConfigurationError(
            "full TFC oracle covers stationary boxes only")
    d = domain.d
    if d > 3:
        raise UnsupportedConfigurationError(
            f"full TFC enumeration limited to d <= 3, got d={d}")
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[0])
    for level in range(1, d + 1):
        sign = (-1.0) ** (level - 1)
        for dims in combinations(range(d), level):
            for corners in product((0, 1), repeat=level):
                proj = points.copy()
                weight = np.ones(points.shape[0])
                for axis, side in zip(dims, corners):
                    a, b = domain.lo[axis], domain.hi[axis]
                    if side == 0:
                        weight *= (b - points[:, axis]) / (b - a)
                        proj[:, axis] = a
                    else:
                        weight *= (points[:, axis] - a) / (b - a)
                        proj[:, axis] = b
                out += sign * weight * f(proj)
    return out
