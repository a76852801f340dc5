"""Quasi-static elastoplastic truss analysis via accelerated proximal gradients.

Each load increment is an unconstrained nonsmooth convex program: a
quadratic elastic/hardening energy plus a weighted l1 penalty on the
plastic elongation increments.  The package assembles truss models,
solves increments with (accelerated) proximal gradient iterations, runs
path-dependent multi-step analyses with warm starts, and provides
independent complementarity-based verification oracles.
"""

__version__ = "0.1.0"

from .driver import (
    AnalysisHistory,
    IncrementFailure,
    LoadingProgram,
    load_program,
    run_program,
    solve_increment,
)
from .energy import (
    IncrementProblem,
    grad_g1,
    hessian,
    lipschitz_exact,
    lipschitz_gershgorin,
    objective,
)
from .hardening import (
    HardeningLaw,
    LinearIsotropic,
    Mixed,
    PiecewiseLinear,
    StateSnapshot,
    initial_state,
    update_state,
)
from .model import TrussModel, barrel_vault, build, load_model, random_model, save_model
from .socp import SocpExport, export_socp
from .solvers import (
    IncrementSolution,
    SolverConfig,
    apgm_piecewise_solve,
    apgm_solve,
    pgm_solve,
    soft_threshold,
)
from .verify import (
    ResidualReport,
    brute_force_solve,
    kkt_residual,
    prox_fixed_point_residual,
    rel_diff,
)

__all__ = [
    "AnalysisHistory",
    "HardeningLaw",
    "IncrementFailure",
    "IncrementProblem",
    "IncrementSolution",
    "LinearIsotropic",
    "LoadingProgram",
    "Mixed",
    "PiecewiseLinear",
    "ResidualReport",
    "SocpExport",
    "SolverConfig",
    "StateSnapshot",
    "TrussModel",
    "apgm_piecewise_solve",
    "apgm_solve",
    "barrel_vault",
    "brute_force_solve",
    "build",
    "export_socp",
    "grad_g1",
    "hessian",
    "initial_state",
    "kkt_residual",
    "lipschitz_exact",
    "lipschitz_gershgorin",
    "load_model",
    "load_program",
    "objective",
    "pgm_solve",
    "prox_fixed_point_residual",
    "random_model",
    "rel_diff",
    "run_program",
    "save_model",
    "soft_threshold",
    "solve_increment",
    "update_state",
]
