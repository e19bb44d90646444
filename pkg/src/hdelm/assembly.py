"""Algebraic system assembly: plain/local ELM and the A-TFC variant.

Row layout (matching the collocation bookkeeping): the PDE residual is
enforced at every collocation point of every sub-domain (interior,
spatial-boundary and initial points alike), Dirichlet rows at the
external boundary/initial points, and C^0/C^1 continuity rows at the
aligned interface points. For a single domain with N_in interior and
N_bc-per-face boundary points this gives N_a = N_in + 2 * N_bc_tot rows.

Linear problems produce a dense LinearSystem; problems with a nonlinear
term produce a NonlinearSystem exposing residual(phi)/jacobian(phi) for
the Gauss-Newton solver, with the Jacobian assembled from the term's
analytic partials via the chain rule through the trial map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import atfc
from .features import FeatureLayer, eval_features
from .geometry import (CollocationSet, Decomposition, FaceId,
                       UnsupportedConfigurationError, spatial_faces)
from .problems import PdeProblem, apply_linear


@dataclass(frozen=True)
class RowSpan:
    kind: str  # "pde" | "dirichlet" | "continuity"
    start: int
    stop: int
    subdomain: int = 0
    level: int | None = None  # continuity order for continuity spans


@dataclass(frozen=True)
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    rows: tuple[RowSpan, ...]
    cols: tuple[tuple[int, int], ...]  # per-sub-domain column spans

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_dof(self) -> int:
        return self.matrix.shape[1]


@dataclass
class _PdeBlock:
    """Per-sub-domain PDE rows plus the state map for nonlinear terms."""

    pts: np.ndarray
    L: np.ndarray
    q: np.ndarray
    col: tuple[int, int]
    basis_val: np.ndarray | None = None
    basis_grad: list | None = None
    basis_lap: np.ndarray | None = None
    base_val: np.ndarray | None = None
    base_grad: np.ndarray | None = None
    base_lap: np.ndarray | None = None


class NonlinearSystem:
    """Residual/Jacobian pair R(phi), J(phi) over all assembled rows."""

    def __init__(self, problem: PdeProblem, blocks: list[_PdeBlock],
                 static_matrix: np.ndarray, static_rhs: np.ndarray,
                 rows: tuple[RowSpan, ...],
                 cols: tuple[tuple[int, int], ...]):
        self.problem = problem
        self.blocks = blocks
        self.static_matrix = static_matrix
        self.static_rhs = static_rhs
        self.rows = rows
        self.cols = cols
        self.n_dof = cols[-1][1]
        self.n_rows = sum(b.L.shape[0] for b in blocks) + static_matrix.shape[0]

    def _state(self, block: _PdeBlock, phi_i: np.ndarray):
        d = self.problem.domain.d
        u = block.base_val + block.basis_val @ phi_i
        grad = np.empty((block.pts.shape[0], d))
        for k in range(d):
            grad[:, k] = block.basis_grad[k] @ phi_i
        grad += block.base_grad
        lap = block.base_lap + block.basis_lap @ phi_i
        return u, grad, lap

    def residual(self, phi: np.ndarray) -> np.ndarray:
        term = self.problem.nonlinear
        parts = []
        for block, col in zip(self.blocks, self.cols):
            phi_i = phi[col[0]:col[1]]
            r = block.L @ phi_i - block.q
            if term is not None:
                u, grad, lap = self._state(block, phi_i)
                r = r + term.mu * term.value(block.pts, u, grad, lap)
            parts.append(r)
        parts.append(self.static_matrix @ phi - self.static_rhs)
        return np.concatenate(parts)

    def jacobian(self, phi: np.ndarray) -> np.ndarray:
        term = self.problem.nonlinear
        out = np.zeros((self.n_rows, self.n_dof))
        r0 = 0
        for block, col in zip(self.blocks, self.cols):
            n = block.L.shape[0]
            phi_i = phi[col[0]:col[1]]
            J = block.L.copy()
            if term is not None:
                u, grad, lap = self._state(block, phi_i)
                du, dgrad, dlap = term.partials(block.pts, u, grad, lap)
                J += term.mu * du[:, None] * block.basis_val
                for k in range(grad.shape[1]):
                    J += term.mu * dgrad[:, k][:, None] * block.basis_grad[k]
                J += term.mu * dlap[:, None] * block.basis_lap
            out[r0:r0 + n, col[0]:col[1]] = J
            r0 += n
        out[r0:] = self.static_matrix
        return out


def _as_lists(layers, colloc_sets):
    if isinstance(layers, FeatureLayer):
        layers = [layers]
    if isinstance(colloc_sets, CollocationSet):
        colloc_sets = [colloc_sets]
    if len(layers) != len(colloc_sets):
        raise ValueError("need one layer per collocation set")
    return list(layers), list(colloc_sets)


def _basis_state(feval, d: int):
    """Value/first/Laplacian matrices of the plain trial map u = V phi."""
    W = feval.layer.weights
    grads = [W[:, k] * feval.a1 for k in range(d)]
    lap = np.sum(W[:, :d] ** 2, axis=1) * feval.a2
    return feval.values, grads, lap


def assemble_elm(problem: PdeProblem, layers, colloc_sets,
                 decomposition: Decomposition | None = None,
                 continuity_order: int | None = None,
                 condition_weight: float = 1.0):
    """Assemble the collocation system for global or local ELM.

    With a decomposition, `colloc_sets` must be face-aligned (interface
    blocks identical); a C^c continuity row is emitted per interface
    point for every level c <= continuity_order (default: 1 for
    second-order operators, i.e. value and normal-derivative rows).
    Returns LinearSystem when the problem has no nonlinear term, else
    NonlinearSystem.
    """
    layers, sets = _as_lists(layers, colloc_sets)
    spec = problem.linear
    d = problem.domain.d
    n_sub = len(layers)
    if decomposition is None:
        if n_sub != 1:
            raise ValueError("multiple sub-domains require a decomposition")
        interfaces = ()
        external = None
    else:
        if decomposition.n_subdomains != n_sub:
            raise ValueError("layer/set count must match the decomposition")
        interfaces = decomposition.interfaces
        external = {(itf.lo_id, itf.axis, 1) for itf in interfaces}
        external |= {(itf.hi_id, itf.axis, 0) for itf in interfaces}
    if continuity_order is None:
        continuity_order = 1 if spec.c_lap != 0.0 else 0
    if continuity_order not in (0, 1):
        raise UnsupportedConfigurationError(
            "continuity beyond C^1 is not supported")
    if interfaces and spec.c_third != 0.0:
        raise UnsupportedConfigurationError(
            "third-order operators need C^2 interface continuity, which is "
            "out of scope; solve on a single domain")
    for itf in interfaces:
        lo_block = sets[itf.lo_id].faces[FaceId(itf.axis, 1)]
        hi_block = sets[itf.hi_id].faces[FaceId(itf.axis, 0)]
        if not np.array_equal(lo_block, hi_block):
            raise ValueError(
                f"interface {itf.lo_id}-{itf.hi_id} is not aligned; apply "
                "align_shared_faces first")

    widths = [layer.width for layer in layers]
    offsets = np.concatenate([[0], np.cumsum(widths)])
    cols = tuple((int(offsets[i]), int(offsets[i + 1])) for i in range(n_sub))
    n_dof = int(offsets[-1])
    nonlinear = problem.nonlinear is not None
    order = max(spec.required_order, 2 if nonlinear else 0)

    blocks: list[_PdeBlock] = []
    row_spans: list[RowSpan] = []
    r0 = 0
    for i, (layer, cset) in enumerate(zip(layers, sets)):
        pts = cset.all_points()
        fe = eval_features(layer, pts, order)
        block = _PdeBlock(pts=pts, L=apply_linear(spec, fe, d),
                          q=problem.forcing(pts), col=cols[i])
        if nonlinear:
            val, grads, lap = _basis_state(fe, d)
            block.basis_val, block.basis_grad, block.basis_lap = \
                val, grads, lap
            n = pts.shape[0]
            block.base_val = np.zeros(n)
            block.base_grad = np.zeros((n, d))
            block.base_lap = np.zeros(n)
        blocks.append(block)
        row_spans.append(RowSpan("pde", r0, r0 + pts.shape[0], i))
        r0 += pts.shape[0]

    # Dirichlet rows at external faces and the initial block.
    static_rows = []
    static_rhs = []
    for i, (layer, cset) in enumerate(zip(layers, sets)):
        pieces = [cset.faces[f] for f in spatial_faces(cset.domain.d)
                  if external is None or (i, f.axis, f.side) not in external]
        pieces.append(cset.initial)
        y = np.vstack(pieces)
        if y.shape[0] == 0:
            continue
        vals = eval_features(layer, y, 0).values
        row = np.zeros((y.shape[0], n_dof))
        row[:, cols[i][0]:cols[i][1]] = vals
        static_rows.append(condition_weight * row)
        static_rhs.append(condition_weight * problem.boundary.value(y))
        row_spans.append(RowSpan("dirichlet", r0, r0 + y.shape[0], i))
        r0 += y.shape[0]

    # Continuity rows at aligned interface points.
    for itf in interfaces:
        z = sets[itf.lo_id].faces[FaceId(itf.axis, 1)]
        if z.shape[0] == 0:
            continue
        fe_lo = eval_features(layers[itf.lo_id], z, continuity_order)
        fe_hi = eval_features(layers[itf.hi_id], z, continuity_order)
        for level in range(continuity_order + 1):
            if level == 0:
                lo_vals, hi_vals = fe_lo.values, fe_hi.values
            else:
                lo_vals = layers[itf.lo_id].weights[:, itf.axis] * fe_lo.a1
                hi_vals = layers[itf.hi_id].weights[:, itf.axis] * fe_hi.a1
            row = np.zeros((z.shape[0], n_dof))
            lo_c, hi_c = cols[itf.lo_id], cols[itf.hi_id]
            row[:, lo_c[0]:lo_c[1]] = lo_vals
            row[:, hi_c[0]:hi_c[1]] = -hi_vals
            static_rows.append(condition_weight * row)
            static_rhs.append(np.zeros(z.shape[0]))
            row_spans.append(RowSpan("continuity", r0, r0 + z.shape[0],
                                     itf.lo_id, level=level))
            r0 += z.shape[0]

    static_matrix = (np.vstack(static_rows) if static_rows
                     else np.zeros((0, n_dof)))
    static_rhs = (np.concatenate(static_rhs) if static_rhs
                  else np.zeros(0))

    if nonlinear:
        return NonlinearSystem(problem, blocks, static_matrix, static_rhs,
                               tuple(row_spans), cols)
    matrix = np.zeros((r0, n_dof))
    rhs = np.zeros(r0)
    rr = 0
    for block in blocks:
        n = block.L.shape[0]
        matrix[rr:rr + n, block.col[0]:block.col[1]] = block.L
        rhs[rr:rr + n] = block.q
        rr += n
    matrix[rr:] = static_matrix
    rhs[rr:] = static_rhs
    return LinearSystem(matrix, rhs, tuple(row_spans), cols)


def _atfc_operator(problem: PdeProblem, layer: FeatureLayer,
                   pts: np.ndarray, need_state: bool):
    """L(V - A V) rows, transformed rhs Q - L A H, and the state map.

    The blended projections have affine weights, so L distributes over
    the stencil with the pinned direction dropping out of pure second
    derivatives and contributing slope * value to first derivatives.
    """
    spec = problem.linear
    domain = problem.domain
    d = domain.d
    W = layer.weights
    sumw2 = np.sum(W[:, :d] ** 2, axis=1)
    adv = spec.advection
    advw = W[:, :d] @ adv if adv is not None else None
    H = problem.boundary

    fe = eval_features(layer, pts, max(spec.required_order, 2))
    L = apply_linear(spec, fe, d)
    q1 = problem.forcing(pts).copy()
    state = None
    if need_state:
        val, grads, lap = _basis_state(fe, d)
        n = pts.shape[0]
        state = dict(basis_val=val.copy(), basis_grad=[g.copy() for g in grads],
                     basis_lap=lap.copy(), base_val=np.zeros(n),
                     base_grad=np.zeros((n, d)), base_lap=np.zeros(n))

    for entry in atfc.stencil(domain):
        proj = entry.project(pts)
        w = entry.weight(pts)
        wc = w[:, None]
        fe_e = eval_features(layer, proj, 2)
        h_val = H.value(proj)
        h_grad = H.grad(proj)
        h_diag2 = H.diag2(proj)
        i = entry.axis

        LA = np.zeros_like(fe_e.values)
        LAH = np.zeros(pts.shape[0])
        if spec.c_id != 0.0:
            LA += spec.c_id * fe_e.values
            LAH += spec.c_id * h_val
        if entry.is_time:
            lap_cols = np.sum(h_diag2[:, :d], axis=1)
            if spec.c_lap != 0.0:
                LA += spec.c_lap * sumw2 * fe_e.a2
                LAH += spec.c_lap * lap_cols
            if adv is not None:
                LA += advw * fe_e.a1
                LAH += h_grad[:, :d] @ adv
            if spec.c_time != 0.0:
                # d_t hits the affine time weight, not the restriction
                LA = w[:, None] * LA
                LAH = w * LAH
                LA += spec.c_time * entry.slope * fe_e.values
                LAH += spec.c_time * entry.slope * h_val
            else:
                LA = w[:, None] * LA
                LAH = w * LAH
        else:
            if spec.c_lap != 0.0:
                LA += spec.c_lap * (sumw2 - W[:, i] ** 2) * fe_e.a2
                lap_excl = np.sum(h_diag2[:, :d], axis=1) - h_diag2[:, i]
                LAH += spec.c_lap * lap_excl
            if adv is not None:
                LA += (advw - adv[i] * W[:, i]) * fe_e.a1
                LAH += h_grad[:, :d] @ adv - adv[i] * h_grad[:, i]
            if spec.c_time != 0.0:
                LA += spec.c_time * W[:, -1] * fe_e.a1
                LAH += spec.c_time * h_grad[:, -1]
            LA = wc * LA
            LAH = w * LAH
            if adv is not None and adv[i] != 0.0:
                LA += adv[i] * entry.slope * fe_e.values
                LAH += adv[i] * entry.slope * h_val
        L -= LA
        q1 -= LAH

        if need_state:
            state["basis_val"] -= wc * fe_e.values
            state["base_val"] += w * h_val
            state["base_lap"] += w * (np.sum(h_diag2[:, :d], axis=1)
                                      - (0.0 if entry.is_time
                                         else h_diag2[:, i]))
            state["basis_lap"] -= wc * ((sumw2 * fe_e.a2) if entry.is_time
                                        else (sumw2 - W[:, i] ** 2) * fe_e.a2)
            for k in range(d):
                if not entry.is_time and k == i:
                    state["basis_grad"][k] -= entry.slope * fe_e.values
                    state["base_grad"][:, k] += entry.slope * h_val
                else:
                    state["basis_grad"][k] -= wc * (W[:, k] * fe_e.a1)
                    state["base_grad"][:, k] += w * h_grad[:, k]
    return L, q1, state


def assemble_atfc(problem: PdeProblem, layer: FeatureLayer,
                  colloc: CollocationSet, condition_weight: float = 1.0):
    """Assemble the boundary-embedded system on a single domain.

    PDE rows enforce L(V - A V) phi (+ the nonlinear term evaluated on
    u = A H + (V - A V) phi) = Q - L A H at all collocation points;
    boundary rows are the face-blend mismatch rows at every face and
    initial point. The reconstruction is u = g - A g + A H.
    """
    spec = problem.linear
    if spec.c_third != 0.0:
        raise UnsupportedConfigurationError(
            "A-TFC path supports operators up to second order (boundary "
            "data exposes first/second derivatives only)")
    nonlinear = problem.nonlinear is not None
    pts = colloc.all_points()
    y = colloc.boundary_stack()

    L, q1, state = _atfc_operator(problem, layer, pts, nonlinear)
    B, s = atfc.mismatch_rows(layer, problem, y)
    B = condition_weight * B
    s = condition_weight * s

    rows = (RowSpan("pde", 0, pts.shape[0], 0),
            RowSpan("dirichlet", pts.shape[0], pts.shape[0] + y.shape[0], 0))
    cols = ((0, layer.width),)
    if not nonlinear:
        return LinearSystem(np.vstack([L, B]), np.concatenate([q1, s]),
                            rows, cols)
    block = _PdeBlock(pts=pts, L=L, q=q1, col=(0, layer.width), **state)
    return NonlinearSystem(problem, [block], B, s, rows, cols)
