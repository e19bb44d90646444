"""Random-feature (ELM) least-squares solvers for high-dimensional PDEs.

The solution field (or, with boundary embedding, a free function) is a
single random hidden layer with frozen uniform weights; only the linear
output coefficients are trained, by minimum-norm linear least squares or
a perturbed trust-region Gauss-Newton iteration, on random collocation
points from the domain interior and its hyperfaces.
"""

from .assembly import (LinearSystem, NonlinearSystem, assemble_atfc,
                       assemble_elm)
from .atfc import apply_A, full_tfc_oracle, mismatch_rows
from .features import FeatureLayer, eval_features, init_layer
from .geometry import (BoxDomain, CollocationSet, Decomposition, FaceId,
                       UnsupportedConfigurationError, align_shared_faces,
                       decompose, sample_collocation, sample_faces,
                       sample_interior, sample_test_set,
                       subdomain_collocation)
from .harness import (RunConfig, SolveReport, run_rate_study, run_select_rm,
                      run_solve, run_sweep)
from .lsq import (NllsqOptions, SolveResult, gauss_newton_trust, min_norm_lsq,
                  nllsq_perturb)
from .metrics import ErrorPair, errors, slice_grid
from .problems import (LinearOperatorSpec, NonlinearTerm, PdeProblem,
                       apply_linear, make_problem, verify_manufactured)

__version__ = "0.1.0"
