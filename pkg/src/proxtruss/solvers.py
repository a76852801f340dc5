"""Proximal-gradient solvers for one load increment.

Three solvers share the same fixed point:

* :func:`pgm_solve` -- plain proximal gradient iteration.
* :func:`apgm_solve` -- momentum-accelerated iteration with adaptive
  restart: whenever the objective fails to decrease, the momentum weight
  resets to 1 and the extrapolation points snap back to the iterate.
* :func:`apgm_piecewise_solve` -- the same accelerated scheme over the
  three-block variables (v, p, s) of the bilinear hardening law.

Per iteration the work is one sparse matrix-vector product with the
compatibility matrix, one with its transpose, and a handful of
component-wise vector operations; no linear systems are solved.  The
objective needed by the restart test is obtained from B@v by linearity of
the extrapolation, so no extra sparse product is spent on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import energy as _energy
from . import verify as _verify
from .energy import IncrementProblem

TERMINATED_CONVERGED = "converged"
TERMINATED_MAX_ITER = "max_iter"


@dataclass
class SolverConfig:
    """Solver settings shared by all increment solvers.

    step_mode selects the step size: "exact" uses 1/L with L the largest
    Hessian eigenvalue, "gershgorin" the cheaper row-sum bound, "fixed"
    takes ``alpha`` as given.  Termination compares successive iterates
    in the infinity norm by default ("euclid" selects the 2-norm).
    """

    step_mode: str = "exact"
    alpha: float | None = None
    epsilon: float = 1e-8
    max_iter: int = 1_000_000
    accelerate: bool = True
    restart: bool = True
    record_history: bool = False
    norm: str = "inf"

    def __post_init__(self):
        if self.step_mode not in ("exact", "gershgorin", "fixed"):
            raise ValueError(f"unknown step_mode {self.step_mode!r}")
        if self.step_mode == "fixed":
            if self.alpha is None or self.alpha <= 0.0:
                raise ValueError("fixed step mode requires alpha > 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.norm not in ("inf", "euclid"):
            raise ValueError(f"unknown norm {self.norm!r}")


@dataclass(frozen=True)
class IncrementSolution:
    """Solution of one load increment.

    ``gamma`` is the per-member plastic multiplier increment |p| (plus
    |s| for the bilinear law).  ``elongation`` is the total elongation
    increment B@v and ``q`` the end-of-step axial forces; both let the
    state update proceed without a model reference.  ``residuals`` is the
    complementarity residual report of the returned point.
    """

    v: np.ndarray
    p: np.ndarray
    s: np.ndarray | None
    gamma: np.ndarray
    elongation: np.ndarray
    q: np.ndarray
    objective: float
    iterations: int
    terminated: str
    alpha: float
    residuals: "object"
    history: list[float] | None = field(default=None, repr=False)

    @property
    def converged(self) -> bool:
        return self.terminated == TERMINATED_CONVERGED


def soft_threshold(w, tau):
    """Shrink ``w`` toward zero by ``tau`` componentwise.

    Returns sgn(w) * max(|w| - tau, 0), the proximal mapping of the
    tau-weighted l1 norm.  ``tau`` must be nonnegative.
    """
    w = np.asarray(w, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise ValueError("soft threshold requires tau >= 0")
    return np.sign(w) * np.maximum(np.abs(w) - tau, 0.0)


def momentum_weight(tau: float) -> float:
    """Next momentum weight: tau_next = (1 + sqrt(1 + 4 tau^2)) / 2."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tau * tau))


def resolve_step_size(problem: IncrementProblem, config: SolverConfig) -> float:
    """Step size per config: 1/L, 1/L' or the fixed value."""
    if config.step_mode == "fixed":
        return float(config.alpha)
    if config.step_mode == "exact":
        return 1.0 / _energy.lipschitz_exact(problem)
    return 1.0 / _energy.lipschitz_gershgorin(problem)


def _delta_norm(config: SolverConfig, *pairs) -> float:
    if config.norm == "inf":
        return max(float(np.max(np.abs(a - b), initial=0.0)) for a, b in pairs)
    total = 0.0
    for a, b in pairs:
        diff = a - b
        total += float(diff @ diff)
    return math.sqrt(total)


def _initial_point(problem: IncrementProblem, initial_point):
    d = problem.model.n_free_dofs
    m = problem.model.n_members
    if initial_point is None:
        v0 = np.zeros(d)
        p0 = np.zeros(m)
        s0 = np.zeros(m) if problem.is_piecewise else None
        return v0, p0, s0
    v0 = np.array(initial_point[0], dtype=float)
    p0 = np.array(initial_point[1], dtype=float)
    if v0.shape != (d,) or p0.shape != (m,):
        raise ValueError("initial point dimensions do not match the problem")
    s0 = None
    if problem.is_piecewise:
        if len(initial_point) < 3 or initial_point[2] is None:
            s0 = np.zeros(m)
        else:
            s0 = np.array(initial_point[2], dtype=float)
            if s0.shape != (m,):
                raise ValueError("initial s has wrong length")
    return v0, p0, s0


def _finalize(
    problem: IncrementProblem,
    v: np.ndarray,
    p: np.ndarray,
    s: np.ndarray | None,
    Bv: np.ndarray,
    objective: float,
    iterations: int,
    terminated: str,
    alpha: float,
    history: list[float] | None,
) -> IncrementSolution:
    e = Bv - p if s is None else Bv - p - s
    q_new = problem.q_t + problem.model.k * e
    gamma = np.abs(p) if s is None else np.abs(p) + np.abs(s)
    report = _verify.kkt_arrays(problem, v, p, s, gamma)
    return IncrementSolution(
        v=v,
        p=p,
        s=s,
        gamma=gamma,
        elongation=Bv.copy(),
        q=q_new,
        objective=objective,
        iterations=iterations,
        terminated=terminated,
        alpha=alpha,
        residuals=report,
        history=history,
    )


def pgm_solve(
    problem: IncrementProblem,
    config: SolverConfig,
    initial_point=None,
    alpha: float | None = None,
) -> IncrementSolution:
    """Proximal gradient iteration for the linear or mixed hardening laws.

    Iterates a gradient step on v and a shrinkage step on p until the
    change between successive iterates drops below ``config.epsilon``.
    The objective sequence is nonincreasing for any step size in
    (0, 1/L].
    """
    if problem.is_piecewise:
        raise ValueError("pgm_solve handles the linear and mixed laws only")
    if alpha is None:
        alpha = resolve_step_size(problem, config)

    B = problem.model.B
    Bt = B.T
    k = problem.model.k
    q_t, f = problem.q_t, problem.f
    h, beta_t = problem.h_p, problem.beta_t
    tau_p = alpha * problem.w_p

    v, p, _ = _initial_point(problem, initial_point)
    Bv = B @ v
    history: list[float] | None = [] if config.record_history else None
    if history is not None:
        history.append(_energy.objective(problem, v, p, elongation=Bv - p))

    obj = math.inf
    terminated = TERMINATED_MAX_ITER
    iterations = config.max_iter
    for it in range(1, config.max_iter + 1):
        e = Bv - p
        kq = k * e + q_t
        g_v = Bt @ kq - f
        g_p = h * p + beta_t - kq

        v_new = v - alpha * g_v
        p_new = soft_threshold(p - alpha * g_p, tau_p)
        Bv = B @ v_new

        delta = _delta_norm(config, (v_new, v), (p_new, p))
        v, p = v_new, p_new
        if history is not None:
            history.append(_energy.objective(problem, v, p, elongation=Bv - p))
        if delta <= config.epsilon:
            terminated = TERMINATED_CONVERGED
            iterations = it
            break

    obj = _energy.objective(problem, v, p, elongation=Bv - p)
    return _finalize(problem, v, p, None, Bv, obj, iterations, terminated, alpha, history)


def apgm_solve(
    problem: IncrementProblem,
    config: SolverConfig,
    initial_point=None,
    alpha: float | None = None,
) -> IncrementSolution:
    """Accelerated proximal gradient with adaptive restart (linear/mixed laws).

    The momentum weight follows tau_{l+1} = (1 + sqrt(1 + 4 tau_l^2)) / 2;
    extrapolation uses (tau_l - 1) / tau_{l+1}.  When the objective fails
    to decrease (ties included) the momentum is restarted, which keeps
    the objective sequence from oscillating.  Disable via
    ``config.restart`` for the plain accelerated scheme.
    """
    if problem.is_piecewise:
        raise ValueError("apgm_solve handles the linear and mixed laws only; "
                         "use apgm_piecewise_solve")
    if alpha is None:
        alpha = resolve_step_size(problem, config)

    B = problem.model.B
    Bt = B.T
    k = problem.model.k
    q_t, f = problem.q_t, problem.f
    h, beta_t = problem.h_p, problem.beta_t
    tau_p = alpha * problem.w_p

    v_prev, p_prev, _ = _initial_point(problem, initial_point)
    Bv_prev = B @ v_prev
    obj_prev = _energy.objective(problem, v_prev, p_prev, elongation=Bv_prev - p_prev)

    # Momentum points start at the iterate.
    mu = v_prev.copy()
    rho = p_prev.copy()
    B_mu = Bv_prev.copy()
    tau = 1.0

    history: list[float] | None = [obj_prev] if config.record_history else None

    obj = obj_prev
    terminated = TERMINATED_MAX_ITER
    iterations = config.max_iter
    for it in range(1, config.max_iter + 1):
        e_mu = B_mu - rho
        kq = k * e_mu + q_t
        g_v = Bt @ kq - f
        g_p = h * rho + beta_t - kq

        v = mu - alpha * g_v
        p = soft_threshold(rho - alpha * g_p, tau_p)
        Bv = B @ v

        obj = _energy.objective(problem, v, p, elongation=Bv - p)
        if history is not None:
            history.append(obj)

        tau_next = momentum_weight(tau)
        decreased = (it == 1) or (obj < obj_prev)
        if decreased or not config.restart:
            c = (tau - 1.0) / tau_next
            mu = v + c * (v - v_prev)
            rho = p + c * (p - p_prev)
            B_mu = Bv + c * (Bv - Bv_prev)
            tau = tau_next
        else:
            tau = 1.0
            mu = v.copy()
            rho = p.copy()
            B_mu = Bv.copy()

        delta = _delta_norm(config, (v, v_prev), (p, p_prev))
        v_prev, p_prev, Bv_prev, obj_prev = v, p, Bv, obj
        if delta <= config.epsilon:
            terminated = TERMINATED_CONVERGED
            iterations = it
            break

    return _finalize(
        problem, v_prev, p_prev, None, Bv_prev, obj, iterations, terminated, alpha, history
    )


def apgm_piecewise_solve(
    problem: IncrementProblem,
    config: SolverConfig,
    initial_point=None,
    alpha: float | None = None,
) -> IncrementSolution:
    """Accelerated proximal gradient over (v, p, s) for the bilinear law.

    The second plastic block s has its own shrinkage weights and
    quadratic modulus eta; the elastic elongation becomes
    e = B@v - p - s.  Restart and termination mirror :func:`apgm_solve`.
    """
    if not problem.is_piecewise:
        raise ValueError("apgm_piecewise_solve requires the piecewise law")
    if alpha is None:
        alpha = resolve_step_size(problem, config)

    B = problem.model.B
    Bt = B.T
    k = problem.model.k
    q_t, f = problem.q_t, problem.f
    h1, eta = problem.h_p, problem.eta
    tau_p = alpha * problem.w_p
    tau_s = alpha * problem.w_s

    v_prev, p_prev, s_prev = _initial_point(problem, initial_point)
    Bv_prev = B @ v_prev
    obj_prev = _energy.objective(
        problem, v_prev, p_prev, s_prev, elongation=Bv_prev - p_prev - s_prev
    )

    mu = v_prev.copy()
    rho = p_prev.copy()
    sig = s_prev.copy()
    B_mu = Bv_prev.copy()
    tau = 1.0

    history: list[float] | None = [obj_prev] if config.record_history else None

    obj = obj_prev
    terminated = TERMINATED_MAX_ITER
    iterations = config.max_iter
    for it in range(1, config.max_iter + 1):
        e_mu = B_mu - rho - sig
        kq = k * e_mu + q_t
        g_v = Bt @ kq - f

        v = mu - alpha * g_v
        p = soft_threshold(rho - alpha * (h1 * rho - kq), tau_p)
        s = soft_threshold(sig - alpha * (eta * sig - kq), tau_s)
        Bv = B @ v

        obj = _energy.objective(problem, v, p, s, elongation=Bv - p - s)
        if history is not None:
            history.append(obj)

        tau_next = momentum_weight(tau)
        decreased = (it == 1) or (obj < obj_prev)
        if decreased or not config.restart:
            c = (tau - 1.0) / tau_next
            mu = v + c * (v - v_prev)
            rho = p + c * (p - p_prev)
            sig = s + c * (s - s_prev)
            B_mu = Bv + c * (Bv - Bv_prev)
            tau = tau_next
        else:
            tau = 1.0
            mu = v.copy()
            rho = p.copy()
            sig = s.copy()
            B_mu = Bv.copy()

        delta = _delta_norm(config, (v, v_prev), (p, p_prev), (s, s_prev))
        v_prev, p_prev, s_prev, Bv_prev, obj_prev = v, p, s, Bv, obj
        if delta <= config.epsilon:
            terminated = TERMINATED_CONVERGED
            iterations = it
            break

    return _finalize(
        problem, v_prev, p_prev, s_prev, Bv_prev, obj, iterations, terminated, alpha, history
    )
