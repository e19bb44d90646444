"""Benchmark PDE catalog and the generic operator specification.

Every catalog problem is manufactured around a ridge solution
u = f(s) g(t) with s = (1/d) sum_i x_i, so forcing and boundary data are
closed-form and the measured errors are exact. The generic linear
operator is

    L = c_time d_t + c_lap Lap + adv . grad + c_third sum_i d_i^3 + c_id,

and an optional nonlinear term N(x; u, grad u, Lap u) with analytic
partials (needed by the Gauss-Newton Jacobian).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .features import FeatureEval
from .geometry import BoxDomain


@dataclass(frozen=True)
class LinearOperatorSpec:
    c_time: float = 0.0
    c_lap: float = 0.0
    advection: np.ndarray | None = None  # (d,)
    c_third: float = 0.0
    c_id: float = 0.0

    def __post_init__(self):
        if self.advection is not None:
            adv = np.asarray(self.advection, dtype=float)
            adv.setflags(write=False)
            object.__setattr__(self, "advection", adv)

    @property
    def time_dependent(self) -> bool:
        return self.c_time != 0.0

    @property
    def required_order(self) -> int:
        if self.c_third != 0.0:
            return 3
        if self.c_lap != 0.0:
            return 2
        if self.c_time != 0.0 or self.advection is not None:
            return 1
        return 0


@dataclass(frozen=True)
class NonlinearTerm:
    """mu * N with N depending on (x, u, grad u, Lap u).

    `value(points, u, grad_u, lap_u)` returns N per point; `partials`
    returns (dN/du, dN/d(grad u) as (n, d), dN/d(Lap u)). grad_u holds
    the d spatial first partials, lap_u the spatial Laplacian.
    """

    mu: float
    value: Callable
    partials: Callable


class ScalarField:
    """A scalar function of the full coordinates with analytic partials.

    `grad` and `diag2` are (n, dim_total) blocks of first and pure
    second partials (time, when present, is the last column). Fields
    constructed without analytic derivatives fall back to central
    differences with h = 1e-4.
    """

    def __init__(self, value, grad=None, diag2=None, fd_step: float = 1e-4):
        self.value = value
        self._grad = grad
        self._diag2 = diag2
        self._h = fd_step

    def grad(self, points: np.ndarray) -> np.ndarray:
        if self._grad is not None:
            return self._grad(points)
        out = np.empty_like(points)
        for k in range(points.shape[1]):
            p, m = points.copy(), points.copy()
            p[:, k] += self._h
            m[:, k] -= self._h
            out[:, k] = (self.value(p) - self.value(m)) / (2 * self._h)
        return out

    def diag2(self, points: np.ndarray) -> np.ndarray:
        if self._diag2 is not None:
            return self._diag2(points)
        out = np.empty_like(points)
        base = self.value(points)
        for k in range(points.shape[1]):
            p, m = points.copy(), points.copy()
            p[:, k] += self._h
            m[:, k] -= self._h
            out[:, k] = (self.value(p) - 2 * base + self.value(m)) / self._h**2
        return out


@dataclass(frozen=True)
class PdeProblem:
    name: str
    domain: BoxDomain
    linear: LinearOperatorSpec
    nonlinear: NonlinearTerm | None
    forcing: Callable  # Q(points) -> (n,)
    boundary: ScalarField  # H on the domain closure
    exact: ScalarField | None

    def __post_init__(self):
        if self.linear.time_dependent and not self.domain.time_dependent:
            raise ValueError("c_time != 0 requires a time-dependent domain")


def _ridge(d: int, f, fp, fpp, g=None, gp=None, gpp=None) -> ScalarField:
    """Field f(s) g(t), s = mean of the spatial coordinates."""

    def s_of(points):
        return points[:, :d].mean(axis=1)

    def value(points):
        v = f(s_of(points))
        return v * g(points[:, -1]) if g is not None else v

    def grad(points):
        s = s_of(points)
        out = np.empty_like(points)
        if g is None:
            out[:, :d] = (fp(s) / d)[:, None]
        else:
            t = points[:, -1]
            out[:, :d] = (fp(s) * g(t) / d)[:, None]
            out[:, -1] = f(s) * gp(t)
        return out

    def diag2(points):
        s = s_of(points)
        out = np.empty_like(points)
        if g is None:
            out[:, :d] = (fpp(s) / d**2)[:, None]
        else:
            t = points[:, -1]
            out[:, :d] = (fpp(s) * g(t) / d**2)[:, None]
            out[:, -1] = f(s) * gpp(t)
        return out

    return ScalarField(value, grad, diag2)


def _nonlinear_poisson_term() -> NonlinearTerm:
    # -div(a(u) grad u) with a(u) = u^2 - u, written through the state
    # (u, grad u, Lap u):  N = -a'(u) |grad u|^2 - a(u) Lap u.
    def value(points, u, grad_u, lap_u):
        g2 = np.sum(grad_u**2, axis=1)
        return -(2 * u - 1) * g2 - (u * u - u) * lap_u

    def partials(points, u, grad_u, lap_u):
        g2 = np.sum(grad_u**2, axis=1)
        du = -2.0 * g2 - (2 * u - 1) * lap_u
        dgrad = -2.0 * (2 * u - 1)[:, None] * grad_u
        dlap = -(u * u - u)
        return du, dgrad, dlap

    return NonlinearTerm(mu=1.0, value=value, partials=partials)


def make_problem(name: str, d: int) -> PdeProblem:
    """Instantiate a catalog problem on [-1, 1]^d (T = 1 when dynamic)."""
    if d < 1:
        raise ValueError("d must be >= 1")

    def s_of(points):
        return points[:, :d].mean(axis=1)

    if name == "poisson":
        domain = BoxDomain.cube(d)
        linear = LinearOperatorSpec(c_lap=-1.0)
        exact = _ridge(d, lambda s: s * s + np.sin(s),
                       lambda s: 2 * s + np.cos(s),
                       lambda s: 2 - np.sin(s))
        forcing = lambda pts: (np.sin(s_of(pts)) - 2.0) / d
        nonlinear = None
    elif name == "nonlinear-poisson":
        domain = BoxDomain.cube(d)
        linear = LinearOperatorSpec()
        exact = _ridge(d, lambda s: np.exp(-s),
                       lambda s: -np.exp(-s),
                       lambda s: np.exp(-s))
        forcing = lambda pts: (-3 * np.exp(-3 * s_of(pts))
                               + 2 * np.exp(-2 * s_of(pts))) / d
        nonlinear = _nonlinear_poisson_term()
    elif name == "heat":
        domain = BoxDomain.cube(d, time_extent=1.0)
        linear = LinearOperatorSpec(c_time=1.0, c_lap=-1.0)
        exact = _ridge(d, np.cos, lambda s: -np.sin(s), lambda s: -np.cos(s),
                       g=lambda t: np.exp(-t), gp=lambda t: -np.exp(-t),
                       gpp=lambda t: np.exp(-t))
        forcing = lambda pts: ((1.0 / d - 1.0) * np.cos(s_of(pts))
                               * np.exp(-pts[:, -1]))
        nonlinear = None
    elif name == "advection-diffusion":
        domain = BoxDomain.cube(d, time_extent=1.0)
        linear = LinearOperatorSpec(c_time=1.0, c_lap=-1.0,
                                    advection=np.full(d, 1.0 / d))
        exact = _ridge(d, np.sin, np.cos, lambda s: -np.sin(s),
                       g=lambda t: np.exp(-t / d),
                       gp=lambda t: -np.exp(-t / d) / d,
                       gpp=lambda t: np.exp(-t / d) / d**2)
        forcing = lambda pts: (np.cos(s_of(pts)) * np.exp(-pts[:, -1] / d) / d)
        nonlinear = None
    elif name == "kdv":
        domain = BoxDomain.cube(d, time_extent=1.0)
        linear = LinearOperatorSpec(c_time=1.0, c_third=1.0)
        exact = _ridge(d, np.sin, np.cos, lambda s: -np.sin(s),
                       g=lambda t: np.exp(-t / d**2),
                       gp=lambda t: -np.exp(-t / d**2) / d**2,
                       gpp=lambda t: np.exp(-t / d**2) / d**4)
        forcing = lambda pts: (-(np.sin(s_of(pts)) + np.cos(s_of(pts)))
                               * np.exp(-pts[:, -1] / d**2) / d**2)
        nonlinear = None
    else:
        raise ValueError(f"unknown problem {name!r}")

    return PdeProblem(name, domain, linear, nonlinear, forcing,
                      boundary=exact, exact=exact)


PROBLEM_NAMES = ("poisson", "nonlinear-poisson", "heat",
                 "advection-diffusion", "kdv")


def network_field(layer, phi: np.ndarray) -> ScalarField:
    """The trial map u = V(x) phi as a ScalarField with analytic partials."""
    from .features import eval_features

    phi = np.asarray(phi, dtype=float)
    W = layer.weights

    def value(points):
        return eval_features(layer, points, 0).values @ phi

    def grad(points):
        return eval_features(layer, points, 1).a1 @ (W * phi[:, None])

    def diag2(points):
        return eval_features(layer, points, 2).a2 @ (W**2 * phi[:, None])

    return ScalarField(value, grad, diag2)


def apply_linear(spec: LinearOperatorSpec, feval: FeatureEval,
                 d_spatial: int) -> np.ndarray:
    """(L V_j)(x_i) as an n x M matrix from the ridge-factor structure."""
    if feval.max_order < spec.required_order:
        raise ValueError(
            f"operator needs derivatives of order {spec.required_order}, "
            f"eval holds {feval.max_order}")
    W = feval.layer.weights
    out = np.zeros_like(feval.values)
    if spec.c_id != 0.0:
        out += spec.c_id * feval.values
    if spec.advection is not None:
        out += (W[:, :d_spatial] @ spec.advection) * feval.a1
    if spec.c_time != 0.0:
        out += spec.c_time * W[:, -1] * feval.a1
    if spec.c_lap != 0.0:
        out += spec.c_lap * np.sum(W[:, :d_spatial] ** 2, axis=1) * feval.a2
    if spec.c_third != 0.0:
        out += spec.c_third * np.sum(W[:, :d_spatial] ** 3, axis=1) * feval.a3
    return out


def verify_manufactured(problem: PdeProblem, points: np.ndarray,
                        h2: float = 1e-4, h3: float = 1e-2) -> float:
    """Max |L u_ex + mu N(u_ex) - Q| over points, via finite differences.

    Independent of the analytic derivative paths: only the exact
    solution's values are differenced (step h2 for first/second and
    time derivatives, h3 for third).
    """
    if problem.exact is None:
        raise ValueError("problem has no exact solution")
    u = problem.exact.value
    spec = problem.linear
    d = problem.domain.d
    res = np.zeros(points.shape[0])
    base = u(points)
    if spec.c_id != 0.0:
        res += spec.c_id * base

    def shift(k, h):
        p = points.copy()
        p[:, k] += h
        return u(p)

    grad = np.empty((points.shape[0], d))
    lap = np.zeros(points.shape[0])
    for k in range(d):
        up, um = shift(k, h2), shift(k, -h2)
        grad[:, k] = (up - um) / (2 * h2)
        lap += (up - 2 * base + um) / h2**2
    if spec.advection is not None:
        res += grad @ spec.advection
    if spec.c_lap != 0.0:
        res += spec.c_lap * lap
    if spec.c_time != 0.0:
        t_idx = points.shape[1] - 1
        res += spec.c_time * (shift(t_idx, h2) - shift(t_idx, -h2)) / (2 * h2)
    if spec.c_third != 0.0:
        third = np.zeros(points.shape[0])
        for k in range(d):
            third += (shift(k, 2 * h3) - 2 * shift(k, h3)
                      + 2 * shift(k, -h3) - shift(k, -2 * h3)) / (2 * h3**3)
        res += spec.c_third * third
    if problem.nonlinear is not None:
        term = problem.nonlinear
        res += term.mu * term.value(points, base, grad, lap)
    return float(np.max(np.abs(res - problem.forcing(points))))
