"""Experiment drivers: single solves, sweeps, r_m selection, rate study.

A run is fully determined by its RunConfig: layer, collocation, test-set
and solver seeds are derived from the single config seed, so every CSV
row is reproducible from its echoed configuration. Test errors follow
the fixed protocol (n_bc_test, n_in_test) = (100, 7000) of random test
points, drawn on the terminal time slice for dynamic problems.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .assembly import LinearSystem, assemble_atfc, assemble_elm
from .atfc import stencil
from .features import FeatureLayer, eval_features, init_layer
from .geometry import (Decomposition, UnsupportedConfigurationError,
                       decompose, sample_collocation, sample_test_set,
                       locate_subdomain, subdomain_collocation)
from .lsq import NllsqOptions, min_norm_lsq, nllsq_perturb
from .metrics import ErrorPair, errors, write_slice_csv
from .problems import PdeProblem, make_problem
from .seeding import derive_seed, make_rng

RUNS_COLUMNS = ("problem", "d", "method", "M", "n_in", "n_bc", "n_t0",
                "r_m", "seed", "e_inf", "e_rms", "residual", "iters",
                "time_s")
RATE_COLUMNS = ("n", "mse_mean", "mse_std")

METHODS = ("elm", "elm-atfc")
SWEEP_AXES = ("width", "n_bc", "n_in")


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    problem: str
    d: int
    method: str = "elm"
    width: int = 1000
    n_in: int = 1000
    n_bc: int = 100
    n_t0: int = 0
    r_m: float = 0.1
    seed: int = 1
    split_dirs: tuple[int, ...] = ()
    split_counts: tuple[int, ...] = ()
    continuity_order: int | None = None
    n_bc_test: int = 100
    n_in_test: int = 7000
    solver: NllsqOptions = field(default_factory=NllsqOptions)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        solver = data.pop("solver", None)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("split_dirs", "split_counts"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        if solver is not None:
            bad = set(solver) - set(NllsqOptions.__dataclass_fields__)
            if bad:
                raise ConfigError(f"unknown solver keys: {sorted(bad)}")
            cfg = replace(cfg, solver=NllsqOptions(**solver))
        return cfg

    def to_dict(self) -> dict:
        data = asdict(self)
        data["split_dirs"] = list(self.split_dirs)
        data["split_counts"] = list(self.split_counts)
        return data


def validate_config(config: RunConfig, catalog_only: bool = True,
                    time_dependent: bool | None = None) -> None:
    from .problems import PROBLEM_NAMES
    if catalog_only and config.problem not in PROBLEM_NAMES:
        raise ConfigError(f"unknown problem {config.problem!r}; choose from "
                          f"{PROBLEM_NAMES}")
    if config.method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    if config.d < 1 or config.width < 1:
        raise ConfigError("d and width must be positive")
    if min(config.n_in, config.n_bc, config.n_t0) < 0:
        raise ConfigError("collocation counts must be >= 0")
    if not (config.r_m > 0):
        raise ConfigError("r_m must be positive")
    split = bool(config.split_dirs)
    if len(config.split_dirs) != len(config.split_counts):
        raise ConfigError("split_dirs and split_counts must match")
    if split and config.method == "elm-atfc":
        raise ConfigError("elm-atfc does not combine with decomposition")
    if split and config.problem == "kdv":
        raise ConfigError("kdv needs C^2 interface continuity (unsupported); "
                          "run it on a single domain")
    if config.problem == "kdv" and config.method == "elm-atfc":
        raise ConfigError("elm-atfc supports operators up to second order")
    if time_dependent is None:
        time_dependent = config.problem in ("heat", "advection-diffusion",
                                            "kdv")
    if config.n_t0 > 0 and not time_dependent:
        raise ConfigError(f"{config.problem} is stationary; n_t0 must be 0")
    if time_dependent and config.n_t0 == 0:
        raise ConfigError(f"{config.problem} needs initial-condition points "
                          "(n_t0 > 0)")


@dataclass
class TrainedModel:
    """Everything needed to evaluate the trained solution field."""

    method: str
    problem: PdeProblem
    layers: list[FeatureLayer]
    phis: list[np.ndarray]
    decomp: Decomposition | None = None
    block_rows: int = 20000

    def predict(self, points: np.ndarray) -> np.ndarray:
        out = np.empty(points.shape[0])
        for start in range(0, points.shape[0], self.block_rows):
            block = points[start:start + self.block_rows]
            out[start:start + block.shape[0]] = self._predict_block(block)
        return out

    def _predict_block(self, points: np.ndarray) -> np.ndarray:
        if self.method == "elm-atfc":
            layer, phi = self.layers[0], self.phis[0]
            H = self.problem.boundary
            u = eval_features(layer, points, 0).values @ phi
            for entry in stencil(self.problem.domain):
                proj = entry.project(points)
                w = entry.weight(points)
                g_proj = eval_features(layer, proj, 0).values @ phi
                u += w * (H.value(proj) - g_proj)
            return u
        if self.decomp is None or self.decomp.n_subdomains == 1:
            return eval_features(self.layers[0], points, 0).values \
                @ self.phis[0]
        out = np.empty(points.shape[0])
        owner = locate_subdomain(self.decomp, points)
        for i in range(self.decomp.n_subdomains):
            mask = owner == i
            if mask.any():
                out[mask] = eval_features(self.layers[i], points[mask],
                                          0).values @ self.phis[i]
        return out


@dataclass
class SolveReport:
    config: RunConfig
    e_inf: float
    e_rms: float
    n_test: int
    residual_norm: float
    rank: int | None
    iterations: int
    restarts: int
    converged: bool
    time_train_s: float
    time_total_s: float
    model: TrainedModel | None = None

    def csv_row(self) -> list[str]:
        c = self.config
        vals = [c.problem, c.d, c.method, c.width, c.n_in, c.n_bc, c.n_t0,
                c.r_m, c.seed, self.e_inf, self.e_rms, self.residual_norm,
                self.iterations, self.time_total_s]
        return [v if isinstance(v, str) else
                (str(v) if isinstance(v, (int, np.integer)) else f"{v:.17g}")
                for v in vals]


def run_solve(config: RunConfig, keep_model: bool = True,
              problem: PdeProblem | None = None) -> SolveReport:
    """Sample, assemble, solve and evaluate one configuration.

    A PdeProblem may be passed directly (e.g. user-defined data);
    otherwise config.problem names a catalog entry.
    """
    validate_config(config, catalog_only=problem is None,
                    time_dependent=(None if problem is None
                                    else problem.domain.time_dependent))
    if problem is None:
        problem = make_problem(config.problem, config.d)
    dim_total = problem.domain.dim_total
    t_start = time.perf_counter()

    colloc_seed = derive_seed(config.seed, "colloc")
    if config.split_dirs:
        decomp = decompose(problem.domain, config.split_dirs,
                           config.split_counts)
        sets = subdomain_collocation(decomp, config.n_in, config.n_bc,
                                     config.n_t0, colloc_seed)
        layers = [init_layer(dim_total, config.width, config.r_m,
                             derive_seed(config.seed, "layer", i))
                  for i in range(decomp.n_subdomains)]
    else:
        decomp = None
        sets = [sample_collocation(problem.domain, config.n_in, config.n_bc,
                                   config.n_t0, colloc_seed)]
        layers = [init_layer(dim_total, config.width, config.r_m,
                             derive_seed(config.seed, "layer"))]

    if config.method == "elm-atfc":
        system = assemble_atfc(problem, layers[0], sets[0])
    else:
        system = assemble_elm(problem, layers, sets, decomposition=decomp,
                              continuity_order=config.continuity_order)

    if isinstance(system, LinearSystem):
        result = min_norm_lsq(system.matrix, system.rhs)
    else:
        options = replace(config.solver,
                          seed=derive_seed(config.seed, "nllsq"))
        result = nllsq_perturb(system.residual, system.jacobian,
                               system.n_dof, options)
    time_train = time.perf_counter() - t_start

    phis = [result.phi[c0:c1] for c0, c1 in system.cols]
    model = TrainedModel(config.method, problem, layers, phis, decomp)
    test_pts = sample_test_set(problem.domain, config.n_bc_test,
                               config.n_in_test,
                               derive_seed(config.seed, "test"))
    pair = errors(model.predict(test_pts), problem.exact.value(test_pts))
    time_total = time.perf_counter() - t_start
    return SolveReport(config, pair.e_inf, pair.e_rms, pair.n_points,
                       result.residual_norm, result.rank, result.iterations,
                       result.restarts, result.converged, time_train,
                       time_total, model if keep_model else None)


def write_runs_csv(path, reports, header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(RUNS_COLUMNS)
        for report in reports:
            writer.writerow(report.csv_row())


def append_runs_csv(path, report) -> None:
    import os
    exists = os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if not exists:
            writer.writerow(RUNS_COLUMNS)
        writer.writerow(report.csv_row())


def select_r_m(candidates, metric_values) -> int:
    """Index of the winning candidate: lowest metric, ties to smaller r_m."""
    order = sorted(range(len(candidates)),
                   key=lambda k: (metric_values[k], candidates[k]))
    return order[0]


@dataclass
class SelectionResult:
    r_m0: float
    reports: list[SolveReport]
    metric: str  # "e_rms" or "residual"


def run_select_rm(config: RunConfig, candidates) -> SelectionResult:
    """Sweep r_m candidates with everything else fixed; pick the winner.

    The winner minimizes the rms test error when the problem has an
    exact solution, otherwise the final residual norm; ties break toward
    the smaller candidate.
    """
    candidates = [float(c) for c in candidates]
    if not candidates:
        raise ConfigError("need at least one r_m candidate")
    reports = [run_solve(replace(config, r_m=c), keep_model=False)
               for c in candidates]
    has_exact = make_problem(config.problem, config.d).exact is not None
    metric = "e_rms" if has_exact else "residual"
    values = [r.e_rms if has_exact else r.residual_norm for r in reports]
    best = select_r_m(candidates, values)
    return SelectionResult(candidates[best], reports, metric)


def run_sweep(config: RunConfig, axis: str, values,
              out=None) -> list[SolveReport]:
    """One solve per axis value; layer and collocation seeds stay fixed."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    values = list(values)
    if len(values) < 2:
        raise ConfigError("a sweep needs at least two axis values")
    field_name = {"width": "width", "n_bc": "n_bc", "n_in": "n_in"}[axis]
    reports = [run_solve(replace(config, **{field_name: int(v)}),
                         keep_model=False) for v in values]
    if out is not None:
        write_runs_csv(out, reports, header_lines=(
            f"sweep axis={axis}",
            "seed policy: layer and collocation streams are derived from "
            f"the fixed config seed {config.seed} and do not vary along "
            "the sweep",
        ))
    return reports


def rate_target(points: np.ndarray) -> np.ndarray:
    """Lipschitz benchmark target |s| + sin(s), s = mean of coordinates."""
    s = points.mean(axis=1)
    return np.abs(s) + np.sin(s)


@dataclass
class RateStudyResult:
    widths: list[int]
    mse_mean: np.ndarray
    mse_std: np.ndarray
    slope: float


def run_rate_study(d: int, widths, n_samples: int, seeds, r_m: float = 1.0,
                   out=None, target=rate_target) -> RateStudyResult:
    """Monte-Carlo approximation-rate study for random-feature regression.

    Fits the Lipschitz target on [-1, 1]^d by minimum-norm least squares
    at each width, averages the held-out mean-squared error over seeds,
    and fits the log-log slope of error versus width (theory: -1).
    """
    widths = [int(n) for n in widths]
    seeds = [int(s) for s in seeds]
    if len(widths) < 3:
        raise ConfigError("rate study needs at least three widths")
    if len(seeds) < 3:
        raise ConfigError("rate study needs at least three seeds")
    if n_samples < max(widths):
        raise ConfigError("need more samples than the largest width")

    mse = np.empty((len(seeds), len(widths)))
    for si, seed in enumerate(seeds):
        rng = make_rng(derive_seed(seed, "rate-points"))
        train = rng.uniform(-1.0, 1.0, (n_samples, d))
        test = rng.uniform(-1.0, 1.0, (n_samples, d))
        y_train = target(train)
        y_test = target(test)
        for wi, n in enumerate(widths):
            layer = init_layer(d, n, r_m, derive_seed(seed, "rate-layer", n))
            phi = min_norm_lsq(eval_features(layer, train, 0).values,
                               y_train).phi
            pred = eval_features(layer, test, 0).values @ phi
            mse[si, wi] = np.mean((pred - y_test) ** 2)
    mse_mean = mse.mean(axis=0)
    mse_std = mse.std(axis=0)
    slope = float(np.polyfit(np.log(widths),
                             np.log(np.maximum(mse_mean, 1e-300)), 1)[0])
    result = RateStudyResult(widths, mse_mean, mse_std, slope)
    if out is not None:
        write_rate_csv(out, result)
    return result


def write_rate_csv(path, result: RateStudyResult) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# fitted_log_log_slope = {result.slope:.17g}\n")
        writer = csv.writer(fh)
        writer.writerow(RATE_COLUMNS)
        for n, mean, std in zip(result.widths, result.mse_mean,
                                result.mse_std):
            writer.writerow([str(n), f"{mean:.17g}", f"{std:.17g}"])


def write_run_slice(report: SolveReport, dims: tuple[int, int], q: int,
                    path, fixed=None) -> None:
    """Evaluate the trained model on a coordinate-plane grid, write CSV."""
    if report.model is None:
        raise ValueError("report carries no trained model")
    problem = report.model.problem
    if problem.exact is None:
        raise ValueError("slice output needs an exact solution column")
    write_slice_csv(path, problem.domain, dims, report.model.predict,
                    problem.exact.value, q=q, fixed=fixed)
