"""Hardening laws and the evolution of path state between load steps.

Three material variants are supported, all with a symmetric yield interval
|q - beta| <= R on the member axial force:

* :class:`LinearIsotropic` -- the yield radius grows as R += h * |dγ|.
* :class:`Mixed` -- a fraction ``theta`` of the modulus feeds the radius,
  the rest shifts the interval center (back force) beta.
* :class:`PiecewiseLinear` -- bilinear radius growth: modulus h1 until the
  radius reaches Rs, then h2 (0 < h2 < h1).

State is carried between steps as a :class:`StateSnapshot` of accumulated
quantities; :func:`update_state` is pure and returns a new snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import TrussModel


def _as_positive(name: str, value) -> np.ndarray | float:
    arr = np.asarray(value, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} must be positive")
    return arr if arr.ndim else float(arr)


@dataclass(frozen=True)
class LinearIsotropic:
    """Linear isotropic hardening with modulus h (N/m, scalar or per member)."""

    h: np.ndarray | float

    def __post_init__(self):
        object.__setattr__(self, "h", _as_positive("h", self.h))


@dataclass(frozen=True)
class Mixed:
    """Combined isotropic/kinematic hardening.

    ``theta`` in [0, 1] is the isotropic share of the total modulus h:
    theta=1 reduces to pure isotropic, theta=0 to pure kinematic.
    """

    theta: float
    h: np.ndarray | float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        object.__setattr__(self, "h", _as_positive("h", self.h))


@dataclass(frozen=True)
class PiecewiseLinear:
    """Bilinear radius hardening: modulus h1 below Rs, h2 above, 0 < h2 < h1.

    The derived constant eta = h1*h2/(h1 - h2) is the modulus of the
    second internal mechanism in the two-mechanism decomposition used by
    the solver.
    """

    h1: np.ndarray | float
    h2: np.ndarray | float
    R_s: np.ndarray | float

    def __post_init__(self):
        h1 = _as_positive("h1", self.h1)
        h2 = _as_positive("h2", self.h2)
        if np.any(np.asarray(h2) >= np.asarray(h1)):
            raise ValueError("h2 must be strictly less than h1")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        object.__setattr__(self, "R_s", _as_positive("R_s", self.R_s))

    @property
    def eta(self) -> np.ndarray | float:
        h1 = np.asarray(self.h1)
        h2 = np.asarray(self.h2)
        eta = h1 * h2 / (h1 - h2)
        return eta if eta.ndim else float(eta)


HardeningLaw = Union[LinearIsotropic, Mixed, PiecewiseLinear]


@dataclass(frozen=True)
class StateSnapshot:
    """Path state after ``step_index`` converged load steps.

    All arrays are per member except ``u`` (per free DOF).  ``R0`` keeps
    the initial yield radii so that R can be recomputed from the
    accumulated multiplier instead of drifting through incremental
    updates.
    """

    q: np.ndarray          # axial forces, N
    R: np.ndarray          # yield radii, N
    beta: np.ndarray       # back forces, N (zero unless kinematic)
    c_total: np.ndarray    # accumulated elongations, m
    c_plastic: np.ndarray  # accumulated plastic elongations, m
    gamma_acc: np.ndarray  # accumulated plastic multiplier, m
    u: np.ndarray          # displacements, m
    step_index: int
    R0: np.ndarray         # initial yield radii, N

    @property
    def n_members(self) -> int:
        return self.q.shape[0]


def initial_state(model: TrussModel, R0) -> StateSnapshot:
    """Virgin state: zero forces, elongations and displacements, radii R0."""
    m = model.n_members
    R0_arr = np.broadcast_to(np.asarray(R0, dtype=float), (m,)).copy()
    if np.any(R0_arr <= 0.0):
        raise ValueError("initial yield radii must be positive")
    zeros_m = np.zeros(m)
    return StateSnapshot(
        q=zeros_m.copy(),
        R=R0_arr.copy(),
        beta=zeros_m.copy(),
        c_total=zeros_m.copy(),
        c_plastic=zeros_m.copy(),
        gamma_acc=zeros_m.copy(),
        u=np.zeros(model.n_free_dofs),
        step_index=0,
        R0=R0_arr,
    )


def piecewise_radius(law: PiecewiseLinear, R0: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Bilinear radius curve R(gamma): slope h1 up to the kink, h2 beyond.

    The kink sits at gamma_s = (Rs - R0) / h1 where the radius reaches Rs.
    """
    h1 = np.asarray(law.h1)
    h2 = np.asarray(law.h2)
    R_s = np.asarray(law.R_s)
    gamma_s = (R_s - R0) / h1
    return np.minimum(R0 + h1 * gamma, R_s + h2 * np.maximum(gamma - gamma_s, 0.0))


def update_state(state: StateSnapshot, solution, law: HardeningLaw) -> StateSnapshot:
    """Advance the path state by one converged increment.

    ``solution`` is an :class:`~proxtruss.solvers.IncrementSolution`; its
    end-of-step axial forces and total elongation increment carry the
    model-dependent part, so no model reference is needed here.
    """
    m = state.n_members
    p = np.asarray(solution.p, dtype=float)
    if p.shape != (m,):
        raise ValueError(f"solution has {p.shape[0]} members, state has {m}")
    s = None if solution.s is None else np.asarray(solution.s, dtype=float)
    if s is not None and s.shape != (m,):
        raise ValueError("piecewise slack vector has wrong length")
    v = np.asarray(solution.v, dtype=float)
    if v.shape != state.u.shape:
        raise ValueError("solution displacement length does not match state")

    plastic_inc = p if s is None else p + s
    gamma_inc = np.abs(p) if s is None else np.abs(p) + np.abs(s)

    c_plastic = state.c_plastic + plastic_inc
    gamma_acc = state.gamma_acc + gamma_inc

    if isinstance(law, LinearIsotropic):
        R = state.R0 + np.asarray(law.h) * gamma_acc
        beta = state.beta.copy()
    elif isinstance(law, Mixed):
        h = np.asarray(law.h)
        R = state.R0 + law.theta * h * gamma_acc
        beta = (1.0 - law.theta) * h * c_plastic
    elif isinstance(law, PiecewiseLinear):
        R = piecewise_radius(law, state.R0, gamma_acc)
        beta = state.beta.copy()
    else:
        raise TypeError(f"unknown hardening law {type(law).__name__}")

    return StateSnapshot(
        q=np.asarray(solution.q, dtype=float).copy(),
        R=np.broadcast_to(R, (m,)).copy(),
        beta=np.broadcast_to(beta, (m,)).copy(),
        c_total=state.c_total + np.asarray(solution.elongation, dtype=float),
        c_plastic=c_plastic,
        gamma_acc=gamma_acc,
        u=state.u + v,
        step_index=state.step_index + 1,
        R0=state.R0,
    )


def state_to_dict(state: StateSnapshot) -> dict:
    return {
        "q": state.q.tolist(),
        "R": state.R.tolist(),
        "beta": state.beta.tolist(),
        "c_total": state.c_total.tolist(),
        "c_plastic": state.c_plastic.tolist(),
        "gamma_acc": state.gamma_acc.tolist(),
        "u": state.u.tolist(),
        "step_index": state.step_index,
        "R0": state.R0.tolist(),
    }


def state_from_dict(doc: dict) -> StateSnapshot:
    try:
        return StateSnapshot(
            q=np.asarray(doc["q"], dtype=float),
            R=np.asarray(doc["R"], dtype=float),
            beta=np.asarray(doc["beta"], dtype=float),
            c_total=np.asarray(doc["c_total"], dtype=float),
            c_plastic=np.asarray(doc["c_plastic"], dtype=float),
            gamma_acc=np.asarray(doc["gamma_acc"], dtype=float),
            u=np.asarray(doc["u"], dtype=float),
            step_index=int(doc["step_index"]),
            R0=np.asarray(doc["R0"], dtype=float),
        )
    except KeyError as exc:
        raise ValueError(f"state document is missing key {exc}") from exc
