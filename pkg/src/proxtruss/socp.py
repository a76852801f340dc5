"""Conic-program export of a linear-isotropic increment.

The quadratic increment energy can be minimized as a second-order cone
program: the two quadratic energy terms are bounded by scalar epigraph
variables via rotated-cone identities, the elongation split becomes
affine equalities, and each |p| bound becomes a 2-cone.  The exporter
emits the resulting structured program as a plain JSON-able document so
external conic solvers can consume it.

Variable layout (offsets in order): elastic elongations (m), epigraph of
the elastic energy (1), plastic multipliers (m), epigraph of the
hardening energy (1), displacements (d), plastic elongations (m).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .energy import IncrementProblem
from .hardening import LinearIsotropic


@dataclass(frozen=True)
class SocpExport:
    """Structured conic program: minimize c.x s.t. A x = b, cones."""

    blocks: dict            # name -> (offset, size)
    objective: np.ndarray   # (n,) linear coefficients
    eq_rows: list           # list of [(var, coeff), ...] per equality
    eq_rhs: np.ndarray      # (m,)
    cones: list             # list of cones; each a list of affine entries

    @property
    def n_variables(self) -> int:
        return self.objective.shape[0]

    def to_dict(self) -> dict:
        return {
            "variables": self.n_variables,
            "blocks": {name: [off, size] for name, (off, size) in self.blocks.items()},
            "objective": self.objective.tolist(),
            "equalities": [
                {
                    "terms": [[int(var), float(coeff)] for var, coeff in row],
                    "rhs": float(rhs),
                }
                for row, rhs in zip(self.eq_rows, self.eq_rhs)
            ],
            "cones": [
                {
                    "dim": len(cone),
                    "entries": [
                        {
                            "const": float(const),
                            "terms": [[int(var), float(coeff)] for var, coeff in terms],
                        }
                        for const, terms in cone
                    ],
                }
                for cone in self.cones
            ],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")


def export_socp(problem: IncrementProblem) -> SocpExport:
    """Convert a linear-isotropic increment problem to conic form.

    Raises ``ValueError`` for other hardening laws; the epigraph
    encoding below covers the single-modulus quadratic only.
    """
    if not isinstance(problem.law, LinearIsotropic):
        raise ValueError("conic export supports the linear isotropic law only")

    model = problem.model
    m = model.n_members
    d = model.n_free_dofs
    k = model.k
    h = problem.h_p

    blocks = {
        "elastic_elongation": (0, m),
        "elastic_epigraph": (m, 1),
        "plastic_multiplier": (m + 1, m),
        "hardening_epigraph": (2 * m + 1, 1),
        "displacement": (2 * m + 2, d),
        "plastic_elongation": (2 * m + 2 + d, m),
    }
    off_ce = 0
    off_xi = m
    off_gamma = m + 1
    off_zeta = 2 * m + 1
    off_u = 2 * m + 2
    off_cp = 2 * m + 2 + d

    n = d + 3 * m + 2
    c = np.zeros(n)
    c[off_ce:off_ce + m] = problem.q_t
    c[off_xi] = 1.0
    c[off_gamma:off_gamma + m] = problem.w_p
    c[off_zeta] = 1.0
    c[off_u:off_u + d] = -problem.f

    B = model.B.tocsr()
    eq_rows = []
    for i in range(m):
        row = [(off_ce + i, 1.0), (off_cp + i, 1.0)]
        start, stop = B.indptr[i], B.indptr[i + 1]
        for col, val in zip(B.indices[start:stop], B.data[start:stop]):
            row.append((off_u + int(col), -float(val)))
        eq_rows.append(row)
    eq_rhs = np.zeros(m)

    cones = []
    for i in range(m):
        cones.append([
            (0.0, [(off_gamma + i, 1.0)]),
            (0.0, [(off_cp + i, 1.0)]),
        ])
    elastic_cone = [(1.0, [(off_xi, 1.0)]), (-1.0, [(off_xi, 1.0)])]
    elastic_cone += [
        (0.0, [(off_ce + i, float(np.sqrt(2.0 * k[i])))]) for i in range(m)
    ]
    cones.append(elastic_cone)
    hardening_cone = [(1.0, [(off_zeta, 1.0)]), (-1.0, [(off_zeta, 1.0)])]
    hardening_cone += [
        (0.0, [(off_gamma + i, float(np.sqrt(2.0 * h[i])))]) for i in range(m)
    ]
    cones.append(hardening_cone)

    return SocpExport(
        blocks=blocks,
        objective=c,
        eq_rows=eq_rows,
        eq_rhs=eq_rhs,
        cones=cones,
    )
