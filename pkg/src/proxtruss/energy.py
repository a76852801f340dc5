"""Incremental energy: smooth/nonsmooth split, gradients, and step sizes.

One load increment minimizes ``g1(v, p[, s]) + g2(p[, s])`` over the
incremental free displacements ``v`` and plastic elongations ``p`` (plus a
second plastic block ``s`` for the bilinear law):

* ``g1`` collects the elastic energy of ``e = B v - p [- s]`` around the
  current axial forces, the quadratic hardening energy, the back-force
  work term, and the external work ``-f.v``.  It is quadratic with a
  constant positive-definite Hessian.
* ``g2`` is the weighted l1 term: current yield radii times |p| (plus the
  second-mechanism weights times |s|).

The gradient Lipschitz constant of ``g1`` equals the largest Hessian
eigenvalue; it is computed matrix-free by power iteration, with a cheap
Gershgorin row-sum bound as an alternative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .hardening import (
    HardeningLaw,
    LinearIsotropic,
    Mixed,
    PiecewiseLinear,
    StateSnapshot,
)
from .model import TrussModel

POWER_ITER_CAP = 10_000
POWER_ITER_RTOL = 1e-8
LIPSCHITZ_SAFETY = 1e-8


@dataclass(frozen=True)
class IncrementProblem:
    """One load step: model + path state + hardening law + external load.

    Derived per-member arrays are cached on construction: the l1 weights
    (``w_p`` on |p|, ``w_s`` on |s| for the bilinear law), the quadratic
    moduli, and the frozen current forces.  Weights freeze the state at
    step start and are never updated during a solve.
    """

    model: TrussModel
    state: StateSnapshot
    law: HardeningLaw
    f: np.ndarray

    q_t: np.ndarray = field(init=False, repr=False)
    w_p: np.ndarray = field(init=False, repr=False)
    beta_t: np.ndarray = field(init=False, repr=False)
    h_p: np.ndarray = field(init=False, repr=False)
    eta: np.ndarray | None = field(init=False, repr=False)
    w_s: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        m = self.model.n_members
        d = self.model.n_free_dofs
        f = np.asarray(self.f, dtype=float)
        if f.shape != (d,):
            raise ValueError(f"load vector must have length {d}, got {f.shape}")
        if self.state.n_members != m:
            raise ValueError("state member count does not match model")
        object.__setattr__(self, "f", f)

        object.__setattr__(self, "q_t", np.asarray(self.state.q, dtype=float))
        object.__setattr__(self, "w_p", np.asarray(self.state.R, dtype=float))
        if np.any(self.w_p <= 0.0):
            raise ValueError("yield radii must be positive")

        law = self.law
        if isinstance(law, LinearIsotropic):
            h_p = np.broadcast_to(np.asarray(law.h, dtype=float), (m,))
            beta_t = np.zeros(m)
            eta = None
            w_s = None
        elif isinstance(law, Mixed):
            h_p = np.broadcast_to(np.asarray(law.h, dtype=float), (m,))
            beta_t = np.asarray(self.state.beta, dtype=float)
            eta = None
            w_s = None
        elif isinstance(law, PiecewiseLinear):
            h_p = np.broadcast_to(np.asarray(law.h1, dtype=float), (m,))
            beta_t = np.zeros(m)
            eta = np.broadcast_to(np.asarray(law.eta, dtype=float), (m,)).copy()
            R_s = np.broadcast_to(np.asarray(law.R_s, dtype=float), (m,))
            if np.any(R_s <= self.state.R0):
                raise ValueError("R_s must exceed the initial yield radii")
            # Once the radius has passed the kink, the second mechanism
            # must resume from the current radius, not from R_s.
            w_s = np.maximum(R_s, self.w_p)
        else:
            raise TypeError(f"unknown hardening law {type(law).__name__}")

        object.__setattr__(self, "h_p", np.ascontiguousarray(h_p, dtype=float))
        object.__setattr__(self, "beta_t", beta_t)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "w_s", w_s)

    @property
    def is_piecewise(self) -> bool:
        return self.eta is not None

    @property
    def n_variables(self) -> int:
        d, m = self.model.n_free_dofs, self.model.n_members
        return d + 2 * m if self.is_piecewise else d + m


def _elongation(problem: IncrementProblem, v, p, s):
    e = problem.model.B @ v - p
    if s is not None:
        e = e - s
    return e


def smooth_energy(problem: IncrementProblem, v, p, s=None, elongation=None) -> float:
    """Quadratic part g1 at (v, p[, s]); pass ``elongation`` to reuse B@v - p - s."""
    e = _elongation(problem, v, p, s) if elongation is None else elongation
    k = problem.model.k
    val = problem.q_t @ e + 0.5 * (k * e) @ e
    val += 0.5 * (problem.h_p * p) @ p
    val += problem.beta_t @ p
    if s is not None:
        if not problem.is_piecewise:
            raise ValueError("s given for a non-piecewise problem")
        val += 0.5 * (problem.eta * s) @ s
    val -= problem.f @ v
    return float(val)


def nonsmooth_energy(problem: IncrementProblem, p, s=None) -> float:
    """Weighted l1 part g2 at (p[, s])."""
    val = problem.w_p @ np.abs(p)
    if s is not None:
        val += problem.w_s @ np.abs(s)
    return float(val)


def objective(problem: IncrementProblem, v, p, s=None, elongation=None) -> float:
    """Total increment energy g1 + g2 in J."""
    return smooth_energy(problem, v, p, s, elongation) + nonsmooth_energy(problem, p, s)


def grad_g1(problem: IncrementProblem, v, p, s=None):
    """Gradient of g1: returns (grad_v, grad_p) or (grad_v, grad_p, grad_s).

    With q = q_t + k*e and e the incremental elastic elongation:
    grad_v = B^T q - f, grad_p = h*p + beta_t - q [, grad_s = eta*s - q].
    """
    e = _elongation(problem, v, p, s)
    k = problem.model.k
    kq = k * e + problem.q_t
    g_v = problem.model.B.T @ kq - problem.f
    g_p = problem.h_p * p + problem.beta_t - kq
    if s is None:
        return g_v, g_p
    g_s = problem.eta * s - kq
    return g_v, g_p, g_s


def hessian(problem: IncrementProblem) -> sp.csr_matrix:
    """Assembled sparse Hessian of g1 (constant over the step)."""
    B = problem.model.B
    K = sp.diags(problem.model.k)
    BtK = (B.T @ K).tocsr()
    BtKB = (BtK @ B).tocsr()
    Kh = sp.diags(problem.model.k + problem.h_p)
    if not problem.is_piecewise:
        H = sp.bmat([[BtKB, -BtK], [-BtK.T, Kh]], format="csr")
    else:
        Keta = sp.diags(problem.model.k + problem.eta)
        H = sp.bmat(
            [
                [BtKB, -BtK, -BtK],
                [-BtK.T, Kh, K],
                [-BtK.T, K, Keta],
            ],
            format="csr",
        )
    return H


def hessian_matvec(problem: IncrementProblem, x: np.ndarray) -> np.ndarray:
    """Matrix-free Hessian-vector product via the factored form."""
    d = problem.model.n_free_dofs
    m = problem.model.n_members
    B = problem.model.B
    k = problem.model.k
    v = x[:d]
    p = x[d:d + m]
    if problem.is_piecewise:
        s = x[d + m:]
        e = B @ v - p - s
        ke = k * e
        return np.concatenate([B.T @ ke, -ke + problem.h_p * p, -ke + problem.eta * s])
    e = B @ v - p
    ke = k * e
    return np.concatenate([B.T @ ke, -ke + problem.h_p * p])


def lipschitz_exact(
    problem: IncrementProblem,
    rtol: float = POWER_ITER_RTOL,
    max_iter: int = POWER_ITER_CAP,
) -> float:
    """Largest Hessian eigenvalue by matrix-free power iteration.

    Deterministic all-ones start; the returned value is inflated by
    (1 + 1e-8) so a step size of 1/L stays on the safe side of the
    truncated iteration.

    Raises
    ------
    RuntimeError
        If the eigenvalue estimate has not stabilized to ``rtol`` within
        ``max_iter`` iterations (ill-posed model).
    """
    n = problem.n_variables
    x = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        y = hessian_matvec(problem, x)
        lam_new = float(np.linalg.norm(y))
        if lam_new == 0.0:
            raise RuntimeError("Hessian annihilated the start vector")
        x = y / lam_new
        if abs(lam_new - lam) <= rtol * lam_new:
            return lam_new * (1.0 + LIPSCHITZ_SAFETY)
        lam = lam_new
    raise RuntimeError(
        f"power iteration did not converge in {max_iter} iterations"
    )


def lipschitz_gershgorin(problem: IncrementProblem) -> float:
    """Gershgorin row-sum upper bound on the largest Hessian eigenvalue.

    All diagonal entries are nonnegative, so the bound reduces to the
    maximum absolute row sum over the sparse Hessian.
    """
    H = hessian(problem)
    row_sums = np.abs(H).sum(axis=1)
    return float(np.max(row_sums))
