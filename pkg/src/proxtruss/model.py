"""Truss geometry and topology: compatibility matrix, stiffnesses, generators.

A truss model is fully described by node coordinates, member connectivity
with section properties, and per-axis support flags.  From these the module
assembles the sparse compatibility matrix ``B`` (member elongations per unit
free-node displacement, i.e. direction cosines scattered to free DOFs) and
the member elongation stiffnesses ``k = E*a/l``.

Units are SI internally: coordinates in m, forces in N, stiffnesses in N/m.
Cross-sectional areas are accepted in mm^2 and converted on build.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

MM2_TO_M2 = 1.0e-6

DEFAULT_AREA_MM2 = 500.0
DEFAULT_YOUNG_PA = 200.0e9

_AXES = 3


@dataclass(frozen=True)
class TrussModel:
    """Immutable truss model with assembled operators.

    Attributes
    ----------
    nodes : (n, 3) float array
        Node coordinates in meters.
    members : (m, 2) int array
        End-node indices of each member.
    areas_mm2 : (m,) float array
        Cross-sectional areas in mm^2.
    young_pa : (m,) float array
        Young moduli in Pa.
    supports : (n, 3) bool array
        True where a node axis is fixed.
    dof_map : (n, 3) int array
        Index of the free DOF for each (node, axis), -1 where fixed.
    B : (m, d) CSR matrix
        Compatibility matrix: row i maps free displacements to the
        elongation of member i.  At most 6 nonzeros per row.
    k : (m,) float array
        Elongation stiffnesses E*a/l in N/m.
    lengths : (m,) float array
        Undeformed member lengths in m.
    """

    nodes: np.ndarray
    members: np.ndarray
    areas_mm2: np.ndarray
    young_pa: np.ndarray
    supports: np.ndarray
    dof_map: np.ndarray
    B: sp.csr_matrix
    k: np.ndarray
    lengths: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_members(self) -> int:
        return self.members.shape[0]

    @property
    def n_free_dofs(self) -> int:
        return self.B.shape[1]


def _supports_to_mask(supports, n_nodes: int) -> np.ndarray:
    """Normalize supports to an (n, 3) boolean mask.

    Accepts either a boolean (n, 3) array-like or an iterable of
    ``(node, axis)`` pairs of fixed axes.
    """
    if supports is None:
        return np.zeros((n_nodes, _AXES), dtype=bool)
    arr = np.asarray(supports)
    if arr.dtype == bool and arr.shape == (n_nodes, _AXES):
        return arr.copy()
    mask = np.zeros((n_nodes, _AXES), dtype=bool)
    for pair in supports:
        node, axis = int(pair[0]), int(pair[1])
        if not (0 <= node < n_nodes):
            raise ValueError(f"support references unknown node {node}")
        if not (0 <= axis < _AXES):
            raise ValueError(f"support axis {axis} out of range 0..2")
        mask[node, axis] = True
    return mask


def build(nodes, members, supports=None, *, allow_zero_rows: bool = False) -> TrussModel:
    """Assemble a :class:`TrussModel` from raw geometry.

    Parameters
    ----------
    nodes : (n, 3) array-like
        Node coordinates in meters.
    members : iterable of (node_a, node_b, area_mm2, young_pa)
        Member connectivity and section data.
    supports : optional
        Boolean (n, 3) mask of fixed axes, or iterable of (node, axis)
        pairs.  Omitted means no supports.
    allow_zero_rows : bool
        Permit members whose compatibility row is identically zero
        (both ends fully supported).  Such members carry no load and are
        rejected by default; generators that produce them intentionally
        (e.g. :func:`barrel_vault` with NY=1) opt in.

    Raises
    ------
    ValueError
        On empty member list, invalid node index, zero-length member,
        a model without free DOFs, or a zero compatibility row.
    """
    nodes = np.asarray(nodes, dtype=float).reshape(-1, _AXES)
    n = nodes.shape[0]

    member_list = list(members)
    if not member_list:
        raise ValueError("model needs at least one member")
    conn = np.array([[mb[0], mb[1]] for mb in member_list], dtype=int)
    areas = np.array([mb[2] for mb in member_list], dtype=float)
    young = np.array([mb[3] for mb in member_list], dtype=float)
    m = conn.shape[0]

    if conn.min() < 0 or conn.max() >= n:
        raise ValueError("member references a node index out of range")
    if np.any(areas <= 0.0) or np.any(young <= 0.0):
        raise ValueError("member areas and Young moduli must be positive")

    fixed = _supports_to_mask(supports, n)
    dof_map = -np.ones((n, _AXES), dtype=int)
    free = ~fixed
    d = int(free.sum())
    if d == 0:
        raise ValueError("model has no free degree of freedom")
    dof_map[free] = np.arange(d)

    vec = nodes[conn[:, 1]] - nodes[conn[:, 0]]
    lengths = np.linalg.norm(vec, axis=1)
    if np.any(lengths <= 1e-12):
        bad = int(np.argmin(lengths))
        raise ValueError(f"member {bad} has zero length")
    cosines = vec / lengths[:, None]
    k = young * (areas * MM2_TO_M2) / lengths

    # Row i of B: +t on node_b free axes, -t on node_a free axes.
    rows = np.repeat(np.arange(m), 2 * _AXES)
    cols = np.hstack([dof_map[conn[:, 0]], dof_map[conn[:, 1]]]).ravel()
    data = np.hstack([-cosines, cosines]).ravel()
    keep = (cols >= 0) & (data != 0.0)
    B = sp.coo_matrix(
        (data[keep], (rows[keep], cols[keep])), shape=(m, d)
    ).tocsr()

    row_nnz = np.diff(B.indptr)
    if not allow_zero_rows and np.any(row_nnz == 0):
        bad = np.flatnonzero(row_nnz == 0)
        raise ValueError(
            f"members {bad.tolist()} connect only fixed DOFs "
            "(zero compatibility row)"
        )

    return TrussModel(
        nodes=nodes,
        members=conn,
        areas_mm2=areas,
        young_pa=young,
        supports=fixed,
        dof_map=dof_map,
        B=B,
        k=k,
        lengths=lengths,
    )


def barrel_vault(
    nx: int,
    ny: int,
    area_mm2: float = DEFAULT_AREA_MM2,
    young_pa: float = DEFAULT_YOUNG_PA,
) -> TrussModel:
    """Generate the barrel-vault benchmark: a two-way grid of square pyramids.

    The top layer is an (nx+1) x (ny+1) node grid lying on a cylindrical
    arc whose axis is parallel to X, with unit spacing in X and along the
    arc, a half-chord of ny/2 m and a rise of ny/4 m.  The arc radius
    follows from chord and rise: rho = (c^2 + f^2) / (2 f).  The bottom
    layer holds one pyramid apex under each top-grid cell, placed at the
    mid-angle on a concentric circle offset so that the perpendicular
    pyramid depth is exactly 1 m.

    Members: top chords in both directions, four diagonals per pyramid,
    and bottom chords in both directions, 8*nx*ny in total.  The two
    extreme-Y rows of the top layer (the lowest nodes) are pin-supported.

    Parameters
    ----------
    nx, ny : int
        Grid cell counts in X and Y, both >= 1.
    area_mm2, young_pa : float
        Uniform section properties (defaults 500 mm^2, 200 GPa).
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")

    rise = ny / 4.0
    half_chord = ny / 2.0
    rho = (half_chord**2 + rise**2) / (2.0 * rise)
    phi = np.arcsin(half_chord / rho)
    y_center = half_chord
    z_center = rise - rho
    dtheta = 2.0 * phi / ny

    n_top = (nx + 1) * (ny + 1)

    def top_id(i: int, j: int) -> int:
        return i * (ny + 1) + j

    def bot_id(i: int, j: int) -> int:
        return n_top + i * ny + j

    theta_top = -phi + dtheta * np.arange(ny + 1)
    y_top = y_center + rho * np.sin(theta_top)
    z_top = z_center + rho * np.cos(theta_top)

    # Offset so the apex sits 1 m below the (planar) base quad.
    r_off = 1.0 + rho * (1.0 - np.cos(dtheta / 2.0))
    theta_bot = -phi + dtheta * (np.arange(ny) + 0.5)
    y_bot = y_center + (rho - r_off) * np.sin(theta_bot)
    z_bot = z_center + (rho - r_off) * np.cos(theta_bot)

    nodes = np.empty((n_top + nx * ny, _AXES))
    for i in range(nx + 1):
        for j in range(ny + 1):
            nodes[top_id(i, j)] = (float(i), y_top[j], z_top[j])
    for i in range(nx):
        for j in range(ny):
            nodes[bot_id(i, j)] = (i + 0.5, y_bot[j], z_bot[j])

    members = []
    for i in range(nx):  # top chords along X
        for j in range(ny + 1):
            members.append((top_id(i, j), top_id(i + 1, j), area_mm2, young_pa))
    for i in range(nx + 1):  # top chords along Y
        for j in range(ny):
            members.append((top_id(i, j), top_id(i, j + 1), area_mm2, young_pa))
    for i in range(nx):  # pyramid diagonals
        for j in range(ny):
            apex = bot_id(i, j)
            for corner in (
                top_id(i, j),
                top_id(i + 1, j),
                top_id(i, j + 1),
                top_id(i + 1, j + 1),
            ):
                members.append((corner, apex, area_mm2, young_pa))
    for i in range(nx - 1):  # bottom chords along X
        for j in range(ny):
            members.append((bot_id(i, j), bot_id(i + 1, j), area_mm2, young_pa))
    for i in range(nx):  # bottom chords along Y
        for j in range(ny - 1):
            members.append((bot_id(i, j), bot_id(i, j + 1), area_mm2, young_pa))

    supports = [
        (top_id(i, j), axis)
        for i in range(nx + 1)
        for j in (0, ny)
        for axis in range(_AXES)
    ]
    # NY=1 pins every top node, leaving the top chords with zero rows;
    # those members are inert and the model stays valid.
    return build(nodes, members, supports, allow_zero_rows=True)


def top_layer_nodes(model: TrussModel, nx: int, ny: int) -> np.ndarray:
    """Node indices of the top layer of a :func:`barrel_vault` model."""
    return np.arange((nx + 1) * (ny + 1))


def random_model(
    seed: int,
    max_members: int = 6,
    max_free_dofs: int = 4,
    rng: np.random.Generator | None = None,
) -> TrussModel:
    """Generate a small random kinematically determinate truss.

    Useful for desk-scale randomized testing: member count <= max_members,
    free DOF count <= max_free_dofs, and the compatibility matrix has full
    column rank.  Geometry is sampled in a unit-scale box; sections are
    sized so that k = E*a/l lands in [0.5, 2] N/m, giving unit-scale
    problems.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    for _ in range(200):
        d = int(rng.integers(1, max_free_dofs + 1))
        m = int(rng.integers(d, max_members + 1))

        # One or two partially free nodes; all other nodes fully pinned.
        n_free_nodes = 1 if d <= _AXES else 2
        axes_split = [d] if n_free_nodes == 1 else [_AXES, d - _AXES]

        free_coords = rng.uniform(-1.0, 1.0, size=(n_free_nodes, _AXES))
        if n_free_nodes == 2 and np.linalg.norm(free_coords[1] - free_coords[0]) < 0.3:
            continue

        # Each free node needs at least as many members as free axes.
        owners = []
        for node, n_axes in enumerate(axes_split):
            owners.extend([node] * n_axes)
        while len(owners) < m:
            owners.append(int(rng.integers(0, n_free_nodes)))
        rng.shuffle(owners)

        nodes = [free_coords[i] for i in range(n_free_nodes)]
        members = []
        supports = []
        for owner in owners:
            anchor = free_coords[owner] + rng.uniform(-1.0, 1.0, _AXES)
            if np.linalg.norm(anchor - free_coords[owner]) < 0.3:
                anchor = free_coords[owner] + np.array([1.0, 0.3, -0.2])
            anchor_id = len(nodes)
            nodes.append(anchor)
            supports.extend((anchor_id, ax) for ax in range(_AXES))
            length = np.linalg.norm(anchor - free_coords[owner])
            k_target = rng.uniform(0.5, 2.0)
            area_mm2 = k_target * length / (1.0 * MM2_TO_M2)  # with E = 1 Pa
            members.append((owner, anchor_id, area_mm2, 1.0))

        # Pin the unused axes of the free nodes.
        for node, n_axes in enumerate(axes_split):
            supports.extend((node, ax) for ax in range(n_axes, _AXES))

        try:
            model = build(np.array(nodes), members, supports)
        except ValueError:
            continue
        if model.n_free_dofs != d:
            continue
        # Well-conditioned, not merely full rank: near-mechanisms make the
        # increment problem arbitrarily badly conditioned.
        smin = np.linalg.svd(model.B.toarray(), compute_uv=False)[-1]
        if smin >= 0.3:
            return model
    raise RuntimeError(f"failed to generate a determinate random model (seed={seed})")


def model_to_dict(model: TrussModel) -> dict:
    """Serialize a model to the JSON document structure."""
    supports = [
        [int(node), int(axis)]
        for node, axis in np.argwhere(model.supports)
    ]
    members = [
        [int(a), int(b), float(area), float(e)]
        for (a, b), area, e in zip(model.members, model.areas_mm2, model.young_pa)
    ]
    return {
        "nodes": [[float(x) for x in row] for row in model.nodes],
        "members": members,
        "supports": supports,
    }


def model_from_dict(doc: dict) -> TrussModel:
    """Rebuild a model from its JSON document structure."""
    try:
        nodes = doc["nodes"]
        members = doc["members"]
        supports = doc["supports"]
    except KeyError as exc:
        raise ValueError(f"model document is missing key {exc}") from exc
    return build(nodes, members, supports, allow_zero_rows=True)


def save_model(model: TrussModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> TrussModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
