"""Shared fixtures and instance generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

import proxtruss as pt


def unit_bar(k: float = 1.0) -> pt.TrussModel:
    """Single bar along X, length 1 m, far end free in X only, stiffness k N/m."""
    nodes = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
    members = [(0, 1, k / 1e-6, 1.0)]  # E = 1 Pa, area sized for the target k
    supports = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2)]
    return pt.build(nodes, members, supports)


def two_bar_chain(k=(1.0, 1.0)) -> pt.TrussModel:
    """Two collinear bars; both interior DOFs free in X only (d = 2)."""
    nodes = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]
    members = [(0, 1, k[0] / 1e-6, 1.0), (1, 2, k[1] / 1e-6, 1.0)]
    supports = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)]
    return pt.build(nodes, members, supports)


def bar_problem(f: float, law=None, R0: float = 1.0, q0: float = 0.0,
                k: float = 1.0) -> pt.IncrementProblem:
    """Unit-scale single-bar increment problem (k=1, R0=1 by default)."""
    model = unit_bar(k)
    state = pt.initial_state(model, R0)
    if q0 != 0.0:
        state = pt.StateSnapshot(
            q=np.array([q0]), R=state.R, beta=state.beta,
            c_total=state.c_total, c_plastic=state.c_plastic,
            gamma_acc=state.gamma_acc, u=state.u,
            step_index=state.step_index, R0=state.R0,
        )
    if law is None:
        law = pt.LinearIsotropic(h=0.1)
    return pt.IncrementProblem(model=model, state=state, law=law,
                               f=np.array([float(f)]))


def utilization_scaled_load(model: pt.TrussModel, R0: np.ndarray,
                            rng: np.random.Generator, target: float) -> np.ndarray:
    """Random load scaled so the elastic member utilization max|q|/R0 = target.

    target < 1 keeps the increment elastic, target > 1 forces yielding.
    """
    f_raw = rng.uniform(-1.0, 1.0, model.n_free_dofs)
    Bd = model.B.toarray()
    K = Bd.T @ (model.k[:, None] * Bd)
    u = np.linalg.solve(K, f_raw)
    q = model.k * (Bd @ u)
    utilization = float(np.max(np.abs(q) / R0))
    return f_raw * (target / utilization)


def random_problem(seed: int, target: float | None = None):
    """Standard random desk-scale instance: m <= 6, d <= 4, unit-scale data.

    k in [0.5, 2], h = 0.1 k, R0 in [0.5, 2]; load utilization alternates
    between elastic (0.6) and plastic (2.5) by seed parity unless given.
    """
    model = pt.random_model(seed)
    rng = np.random.default_rng(10_000 + seed)
    R0 = rng.uniform(0.5, 2.0, model.n_members)
    law = pt.LinearIsotropic(h=0.1 * model.k)
    state = pt.initial_state(model, R0)
    if target is None:
        target = 2.5 if seed % 2 else 0.6
    f = utilization_scaled_load(model, R0, rng, target)
    return pt.IncrementProblem(model=model, state=state, law=law, f=f)


def web_model(seed: int = 3, n_free: int = 12, n_anchor: int = 8,
              n_members: int = 50) -> pt.TrussModel:
    """Planar web: free nodes scattered in a disk, anchors on the rim.

    Produces a moderately conditioned instance of exactly ``n_members``
    members; every free node is tied to its two nearest anchors so the
    model stays kinematically determinate.
    """
    rng = np.random.default_rng(seed)
    while True:
        free = rng.uniform(-1.0, 1.0, size=(n_free, 2))
        ang = np.linspace(0.0, 2.0 * np.pi, n_anchor, endpoint=False)
        anchors = 2.2 * np.column_stack([np.cos(ang), np.sin(ang)])
        pts = np.vstack([free, anchors])
        nodes = np.column_stack([pts, np.zeros(len(pts))])
        pairs = set()
        for i in range(n_free):
            dist = np.linalg.norm(anchors - free[i], axis=1)
            for j in np.argsort(dist)[:2]:
                pairs.add((i, n_free + int(j)))
        while len(pairs) < n_members:
            a = int(rng.integers(0, n_free))
            b = int(rng.integers(0, n_free + n_anchor))
            if a == b:
                continue
            lo, hi = min(a, b), max(a, b)
            if hi < n_free and np.linalg.norm(free[lo] - free[hi]) < 0.2:
                continue
            pairs.add((lo, hi))
        members = []
        for a, b in sorted(pairs):
            length = np.linalg.norm(pts[a] - pts[b])
            members.append((a, b, rng.uniform(0.5, 2.0) * length / 1e-6, 1.0))
        supports = [(n_free + j, ax) for j in range(n_anchor) for ax in range(3)]
        supports += [(i, 2) for i in range(n_free)]
        try:
            model = pt.build(nodes, members, supports)
        except ValueError:
            continue
        if np.linalg.matrix_rank(model.B.toarray()) == model.n_free_dofs:
            return model


def barrel_top_load(model: pt.TrussModel, nx: int, ny: int,
                    fz: float = 0.0, fy: float = 0.0) -> np.ndarray:
    """Load every free top-layer node of a barrel vault (N per node)."""
    f = np.zeros(model.n_free_dofs)
    for i in range(nx + 1):
        for j in range(ny + 1):
            node = i * (ny + 1) + j
            dof_z = model.dof_map[node, 2]
            if dof_z >= 0:
                f[dof_z] += fz
            dof_y = model.dof_map[node, 1]
            if dof_y >= 0:
                f[dof_y] += fy
    return f


@pytest.fixture
def bar_model():
    return unit_bar()
