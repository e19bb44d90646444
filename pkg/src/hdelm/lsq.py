"""Minimum-norm linear least squares and the perturbed Gauss-Newton solver.

The linear path is rank-revealing least squares with the documented
singular-value cutoff rcond = eps * max(n_rows, n_cols), returning the
minimum-norm solution on rank-deficient systems. The nonlinear path is
Gauss-Newton with a trust region (steps from the SVD of the Jacobian,
radius adapted by acceptance-ratio thresholds), wrapped in random
perturbation restarts that re-launch from the best-known point when the
final cost stays above a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .seeding import make_rng


@dataclass(frozen=True)
class NllsqOptions:
    max_iterations: int = 100
    step_tol: float = 1e-12
    residual_tol: float = 0.0
    ftol: float = 1e-10  # stop when predicted relative cost drop is below
    init_radius: float = 1.0
    shrink_factor: float = 0.25
    expand_factor: float = 2.0
    accept_ratio: float = 0.25
    expand_ratio: float = 0.75
    perturb_magnitude: float = 0.5
    restart_cost_threshold: float | None = None  # default 1e-10 * n_rows
    max_restarts: int = 5
    seed: int = 0


@dataclass
class SolveResult:
    phi: np.ndarray
    residual_norm: float
    rank: int | None = None
    iterations: int = 0
    restarts: int = 0
    converged: bool = True


def min_norm_lsq(A: np.ndarray, b: np.ndarray) -> SolveResult:
    """Least-squares solution of A phi = b, minimum-norm among minimizers."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    if not (np.isfinite(A).all() and np.isfinite(b).all()):
        raise ValueError("non-finite entries in the least-squares system")
    cond = np.finfo(float).eps * max(A.shape)
    phi, _, rank, _ = scipy.linalg.lstsq(A, b, cond=cond,
                                         lapack_driver="gelsd")
    res = float(np.linalg.norm(A @ phi - b))
    return SolveResult(phi, res, rank=int(rank), iterations=1)


def _trust_region_step(J: np.ndarray, r: np.ndarray, radius: float
                       ) -> np.ndarray:
    """argmin ||J step + r|| subject to ||step|| <= radius, via SVD."""
    U, sing, Vt = scipy.linalg.svd(J, full_matrices=False)
    c = U.T @ r
    if sing.size == 0 or sing[0] == 0.0:
        return np.zeros(J.shape[1])
    cutoff = np.finfo(float).eps * max(J.shape) * sing[0]
    keep = sing > cutoff
    gn_coef = np.where(keep, -c / np.where(keep, sing, 1.0), 0.0)
    gn_norm = np.linalg.norm(gn_coef)
    if gn_norm <= radius:
        return Vt.T @ gn_coef

    def step_norm(lam):
        return float(np.linalg.norm(sing * c / (sing**2 + lam)))

    lam_hi = sing[0] ** 2
    while step_norm(lam_hi) > radius:
        lam_hi *= 10.0
    lam = brentq(lambda l: step_norm(l) - radius, 0.0, lam_hi,
                 xtol=1e-300, rtol=1e-12)
    return Vt.T @ (-sing * c / (sing**2 + lam))


def gauss_newton_trust(residual, jacobian, phi0: np.ndarray,
                       options: NllsqOptions = NllsqOptions()) -> SolveResult:
    """Trust-region Gauss-Newton iteration from phi0.

    Each iteration solves the linearized least squares within the radius;
    a step is accepted when the actual/predicted squared-cost reduction
    ratio exceeds `accept_ratio`; the radius shrinks below it and expands
    above `expand_ratio`. Stops on the step or residual tolerance, or at
    `max_iterations` with converged=False.
    """
    phi = np.asarray(phi0, dtype=float).copy()
    r = np.asarray(residual(phi), dtype=float)
    if not np.isfinite(r).all():
        raise ValueError("residual is non-finite at the starting point")
    cost = float(r @ r)
    radius = options.init_radius
    converged = False
    iterations = 0
    for _ in range(options.max_iterations):
        if np.sqrt(cost) <= options.residual_tol:
            converged = True
            break
        J = jacobian(phi)
        iterations += 1
        step = _trust_region_step(J, r, radius)
        step_norm = float(np.linalg.norm(step))
        if step_norm <= options.step_tol * (np.linalg.norm(phi)
                                            + options.step_tol):
            converged = True  # stationary point of the Gauss-Newton model
            break
        lin = r + J @ step
        predicted = cost - float(lin @ lin)
        if predicted <= options.ftol * cost:
            converged = True  # the linear model cannot improve the cost
            break
        r_new = np.asarray(residual(phi + step), dtype=float)
        actual = cost - float(r_new @ r_new)
        ratio = actual / predicted if predicted > 0 else -np.inf
        if ratio > options.accept_ratio:
            phi = phi + step
            r = r_new
            cost = float(r_new @ r_new)
            if np.sqrt(cost) <= options.residual_tol or \
                    step_norm <= options.step_tol * (np.linalg.norm(phi)
                                                     + options.step_tol):
                converged = True
                break
            if ratio > options.expand_ratio:
                radius = max(radius, options.expand_factor * step_norm)
        else:
            radius = options.shrink_factor * min(radius, step_norm)
            if radius <= options.step_tol * (np.linalg.norm(phi) + 1.0):
                converged = True  # no admissible step improves the model
                break
    return SolveResult(phi, float(np.sqrt(cost)), iterations=iterations,
                       converged=converged)


def nllsq_perturb(residual, jacobian, n_dof: int,
                  options: NllsqOptions = NllsqOptions()) -> SolveResult:
    """Gauss-Newton from zero plus random perturbation restarts.

    While the best cost stays above the restart threshold and restarts
    remain, the best-known coefficients are perturbed by a uniform
    vector of magnitude `perturb_magnitude` (scaled by the coefficient
    size) and the trust-region solve is re-run; the best result over all
    trials is returned. Deterministic in options.seed.
    """
    rng = make_rng(options.seed)
    best = gauss_newton_trust(residual, jacobian, np.zeros(n_dof), options)
    threshold = options.restart_cost_threshold
    if threshold is None:
        threshold = 1e-10 * residual(best.phi).shape[0]
    restarts = 0
    while best.residual_norm > threshold and restarts < options.max_restarts:
        scale = max(1.0, float(np.max(np.abs(best.phi))))
        start = best.phi + rng.uniform(-options.perturb_magnitude,
                                       options.perturb_magnitude,
                                       n_dof) * scale
        trial = gauss_newton_trust(residual, jacobian, start, options)
        restarts += 1
        if trial.residual_norm < best.residual_norm:
            best = trial
    best.restarts = restarts
    return best


__all__ = ["NllsqOptions", "SolveResult", "min_norm_lsq",
           "gauss_newton_trust", "nllsq_perturb"]
