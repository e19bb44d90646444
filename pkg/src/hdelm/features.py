"""Frozen random hidden layer and analytic derivatives of its basis.

The trial solution is u(x) = sum_j phi_j V_j(x) where V_j(x) =
sigma(w_j . x + b_j) with w_j, b_j drawn uniformly from [-r_m, r_m] and
frozen. Because each basis function is a ridge function of z = w.x + b,
every pure partial derivative factors as a power of a weight component
times an activation chain factor:

    d_k   V = w_k   * a1(z)
    d_k^2 V = w_k^2 * a2(z)
    d_k^3 V = w_k^3 * a3(z)

FeatureEval stores the chain factors (N x M) and builds the full
N x dim x M derivative blocks on demand; operator assembly only ever
needs weighted sums over directions, which reduce to elementwise
products with the factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import make_rng


@dataclass(frozen=True)
class TanhActivation:
    """tanh and its first three derivatives expressed through s = tanh(z)."""

    name: str = "tanh"

    def chain(self, z: np.ndarray, max_order: int) -> list[np.ndarray]:
        s = np.tanh(z)
        out = [s]
        if max_order >= 1:
            u = 1.0 - s * s
            out.append(u)
        if max_order >= 2:
            out.append(-2.0 * s * u)
        if max_order >= 3:
            out.append(u * (6.0 * s * s - 2.0))
        return out


ACTIVATIONS = {"tanh": TanhActivation()}


@dataclass(frozen=True)
class FeatureLayer:
    """Immutable random hidden layer: weights/biases uniform on [-r_m, r_m]."""

    dim_total: int
    width: int
    weights: np.ndarray  # (width, dim_total)
    biases: np.ndarray  # (width,)
    r_m: float
    seed: int
    activation: str = "tanh"

    def __post_init__(self):
        self.weights.setflags(write=False)
        self.biases.setflags(write=False)


def init_layer(dim_total: int, width: int, r_m: float, seed: int,
               activation: str = "tanh") -> FeatureLayer:
    """Draw a frozen random layer; identical arguments give identical bits."""
    if dim_total < 1:
        raise ValueError(f"dim_total must be >= 1, got {dim_total}")
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    if not (r_m > 0.0):
        raise ValueError(f"r_m must be positive, got {r_m}")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    rng = make_rng(seed)
    weights = rng.uniform(-r_m, r_m, size=(width, dim_total))
    biases = rng.uniform(-r_m, r_m, size=width)
    return FeatureLayer(dim_total, width, weights, biases, float(r_m),
                        int(seed), activation)


class FeatureEval:
    """Feature values and derivative factors at a block of points.

    `values` is N x M. `grad`, `diag2`, `diag3` are N x dim x M blocks of
    pure partials, built lazily from the chain factors; accessing an
    order beyond the requested `max_order` raises.
    """

    def __init__(self, layer: FeatureLayer, points: np.ndarray, max_order: int):
        self.layer = layer
        self.n_points = points.shape[0]
        self.max_order = max_order
        z = points @ layer.weights.T + layer.biases
        chain = ACTIVATIONS[layer.activation].chain(z, max_order)
        self.values = chain[0]
        self.a1 = chain[1] if max_order >= 1 else None
        self.a2 = chain[2] if max_order >= 2 else None
        self.a3 = chain[3] if max_order >= 3 else None
        self._cache: dict[str, np.ndarray] = {}

    def _block(self, name: str, factor, power: int) -> np.ndarray:
        if factor is None:
            raise ValueError(
                f"{name} requires max_order >= {power}, eval was built with "
                f"max_order={self.max_order}")
        if name not in self._cache:
            w = self.layer.weights ** power  # (M, dim)
            self._cache[name] = np.einsum("mk,nm->nkm", w, factor)
        return self._cache[name]

    @property
    def grad(self) -> np.ndarray:
        return self._block("grad", self.a1, 1)

    @property
    def diag2(self) -> np.ndarray:
        return self._block("diag2", self.a2, 2)

    @property
    def diag3(self) -> np.ndarray:
        return self._block("diag3", self.a3, 3)


def eval_features(layer: FeatureLayer, points: np.ndarray,
                  max_order: int = 0) -> FeatureEval:
    """Evaluate the basis (and pure partials up to max_order) at points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != layer.dim_total:
        raise ValueError(
            f"points must be (n, {layer.dim_total}), got {points.shape}")
    if max_order not in (0, 1, 2, 3):
        raise ValueError(f"max_order must be in 0..3, got {max_order}")
    return FeatureEval(layer, points, max_order)
