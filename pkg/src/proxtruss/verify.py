"""Independent correctness checks for increment solutions.

The incremental problem is equivalent to a complementarity system over
two-dimensional second-order cones: equilibrium of the updated axial
forces, admissibility |q - beta| <= R with the end-of-step radii,
orthogonality of (R, q - beta) and (gamma, -p), and consistency
gamma = |p|.  :func:`kkt_residual` evaluates all of these for a candidate
solution; :func:`brute_force_solve` solves small instances exactly by
enumerating the sign pattern of the plastic multipliers, which serves as
a reference the iterative solvers are compared against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import energy as _energy
from .energy import IncrementProblem

BRUTE_FORCE_MAX_MEMBERS = 6
BRUTE_FORCE_MAX_MEMBERS_PIECEWISE = 4
REL_DIFF_ABS_FLOOR = 1e-12


@dataclass(frozen=True)
class ResidualReport:
    """Complementarity-system residuals of a candidate increment solution.

    Absolute residuals carry their natural units; ``max_scaled`` divides
    each by the problem magnitude (forces by max(|f|_inf, max R), lengths
    by max(1, |v|_inf)) and takes the worst, so a single dimensionless
    threshold works across unit systems.
    """

    equilibrium_inf: float        # N
    yield_violation_inf: float    # N
    complementarity_inf: float    # N*m
    flow_consistency_inf: float   # m
    max_scaled: float             # dimensionless


def kkt_arrays(
    problem: IncrementProblem,
    v: np.ndarray,
    p: np.ndarray,
    s: np.ndarray | None = None,
    gamma: np.ndarray | None = None,
) -> ResidualReport:
    """Residual report from raw solution arrays."""
    model = problem.model
    e = model.B @ v - p
    if s is not None:
        e = e - s
    q_new = problem.q_t + model.k * e

    equilibrium = float(np.max(np.abs(model.B.T @ q_new - problem.f)))

    gamma_p = np.abs(p)
    # First cone pair: radius grown by the primary mechanism vs shifted force.
    if problem.is_piecewise:
        shifted = q_new
    else:
        beta_new = problem.beta_t + (problem.h_p - _iso_share(problem)) * p
        shifted = q_new - beta_new
    R_new = problem.w_p + _iso_share(problem) * gamma_p

    yield_viol = np.maximum(np.abs(shifted) - R_new, 0.0)
    comp = np.abs(R_new * gamma_p - shifted * p)

    flow = 0.0
    if gamma is not None:
        total = gamma_p if s is None else gamma_p + np.abs(s)
        flow = float(np.max(np.abs(gamma - total)))

    if problem.is_piecewise and s is not None:
        gamma_s = np.abs(s)
        R2 = problem.w_s + problem.eta * gamma_s
        yield_viol = np.maximum(yield_viol, np.maximum(np.abs(q_new) - R2, 0.0))
        comp = np.maximum(comp, np.abs(R2 * gamma_s - q_new * s))

    yield_inf = float(np.max(yield_viol))
    comp_inf = float(np.max(comp))

    force_scale = max(float(np.max(np.abs(problem.f), initial=0.0)),
                      float(np.max(problem.w_p)))
    length_scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    max_scaled = max(
        equilibrium / force_scale,
        yield_inf / force_scale,
        comp_inf / (force_scale * length_scale),
        flow / length_scale,
    )
    return ResidualReport(
        equilibrium_inf=equilibrium,
        yield_violation_inf=yield_inf,
        complementarity_inf=comp_inf,
        flow_consistency_inf=flow,
        max_scaled=max_scaled,
    )


def _iso_share(problem: IncrementProblem):
    """Modulus feeding the yield radius within the step (theta*h for mixed)."""
    from .hardening import Mixed

    if isinstance(problem.law, Mixed):
        return problem.law.theta * problem.h_p
    return problem.h_p


def kkt_residual(problem: IncrementProblem, solution) -> ResidualReport:
    """Residual report for an :class:`~proxtruss.solvers.IncrementSolution`."""
    gamma = getattr(solution, "gamma", None)
    return kkt_arrays(problem, solution.v, solution.p, solution.s, gamma)


def prox_fixed_point_residual(problem: IncrementProblem, solution, alpha: float) -> float:
    """Distance of a point from the proximal fixed-point characterization.

    Returns |p - prox(p - a*grad_p)|_inf + |a*grad_v|_inf, plus the
    analogous s term for the bilinear law; zero exactly at the optimum
    for any positive step size.
    """
    from .solvers import soft_threshold

    v = np.asarray(solution.v, dtype=float)
    p = np.asarray(solution.p, dtype=float)
    s = None if solution.s is None else np.asarray(solution.s, dtype=float)
    grads = _energy.grad_g1(problem, v, p, s)
    g_v, g_p = grads[0], grads[1]
    res = float(np.max(np.abs(alpha * g_v)))
    p_star = soft_threshold(p - alpha * g_p, alpha * problem.w_p)
    res += float(np.max(np.abs(p - p_star)))
    if s is not None:
        g_s = grads[2]
        s_star = soft_threshold(s - alpha * g_s, alpha * problem.w_s)
        res += float(np.max(np.abs(s - s_star)))
    return res


class BruteForceSolution(NamedTuple):
    v: np.ndarray
    p: np.ndarray
    s: np.ndarray | None
    objective: float


def _stationary_candidate(problem, signs_p, signs_s):
    """Solve the stationarity system for a fixed sign pattern.

    Members with sign 0 have their multiplier pinned to zero; active
    members contribute a linear stationarity row with |p_i| resolved by
    the sign.  Returns None when the restricted system is singular or the
    solution contradicts the assumed signs.
    """
    model = problem.model
    B = model.B.toarray()
    k = model.k
    d = model.n_free_dofs
    m = model.n_members

    act_p = np.flatnonzero(signs_p)
    act_s = np.flatnonzero(signs_s) if signs_s is not None else np.array([], dtype=int)
    na, ns = len(act_p), len(act_s)
    n = d + na + ns

    A = np.zeros((n, n))
    rhs = np.zeros(n)
    BtKB = B.T @ (k[:, None] * B)
    A[:d, :d] = BtKB
    rhs[:d] = problem.f - B.T @ problem.q_t
    for col, i in enumerate(act_p):
        A[:d, d + col] = -k[i] * B[i]
    for col, i in enumerate(act_s):
        A[:d, d + na + col] = -k[i] * B[i]

    for row, i in enumerate(act_p):
        r = d + row
        A[r, :d] = -k[i] * B[i]
        A[r, d + row] = k[i] + problem.h_p[i]
        if i in act_s:
            A[r, d + na + int(np.flatnonzero(act_s == i))] = k[i]
        rhs[r] = problem.q_t[i] - problem.beta_t[i] - signs_p[i] * problem.w_p[i]

    for row, i in enumerate(act_s):
        r = d + na + row
        A[r, :d] = -k[i] * B[i]
        if i in act_p:
            A[r, d + int(np.flatnonzero(act_p == i))] = k[i]
        A[r, d + na + row] = k[i] + problem.eta[i]
        rhs[r] = problem.q_t[i] - signs_s[i] * problem.w_s[i]

    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return None

    v = x[:d]
    p = np.zeros(m)
    p[act_p] = x[d:d + na]
    s = None
    if signs_s is not None:
        s = np.zeros(m)
        s[act_s] = x[d + na:]

    if np.any(signs_p[act_p] * p[act_p] < -1e-12):
        return None
    if s is not None and np.any(signs_s[act_s] * s[act_s] < -1e-12):
        return None
    return v, p, s


def brute_force_solve(problem: IncrementProblem) -> BruteForceSolution:
    """Exact small-instance solve by sign-pattern enumeration.

    Every sign pattern in {-1, 0, +1}^m for p (squared with the pattern
    for s under the bilinear law) yields a linear stationarity system;
    sign-consistent candidates are collected and the one with the least
    objective is the global minimizer, since the restriction never beats
    the true pattern.  Limited to m <= 6 (m <= 4 piecewise).
    """
    m = problem.model.n_members
    limit = (
        BRUTE_FORCE_MAX_MEMBERS_PIECEWISE
        if problem.is_piecewise
        else BRUTE_FORCE_MAX_MEMBERS
    )
    if m > limit:
        raise ValueError(f"brute force limited to {limit} members, got {m}")

    best = None
    patterns = itertools.product((-1, 0, 1), repeat=m)
    for pat_p in patterns:
        signs_p = np.array(pat_p)
        if problem.is_piecewise:
            for pat_s in itertools.product((-1, 0, 1), repeat=m):
                cand = _stationary_candidate(problem, signs_p, np.array(pat_s))
                if cand is None:
                    continue
                obj = _energy.objective(problem, cand[0], cand[1], cand[2])
                if best is None or obj < best[1]:
                    best = (cand, obj)
        else:
            cand = _stationary_candidate(problem, signs_p, None)
            if cand is None:
                continue
            obj = _energy.objective(problem, cand[0], cand[1])
            if best is None or obj < best[1]:
                best = (cand, obj)

    if best is None:
        raise RuntimeError("no sign-consistent stationary point (singular model?)")
    (v, p, s), obj = best
    return BruteForceSolution(v=v, p=p, s=s, objective=obj)


def rel_diff(candidate_objective: float, reference_objective: float) -> float:
    """Relative objective gap (candidate - reference) / reference.

    The sign follows the raw formula, so with a negative reference a
    worse (higher-energy) candidate gives a negative value.  References
    below 1e-12 in magnitude fall back to the absolute difference.
    """
    if abs(reference_objective) < REL_DIFF_ABS_FLOOR:
        return candidate_objective - reference_objective
    return (candidate_objective - reference_objective) / reference_objective
