"""Geometry, compatibility assembly, and the barrel-vault generator."""

import json

import numpy as np
import pytest

import proxtruss as pt
from proxtruss.model import model_from_dict, model_to_dict

from conftest import unit_bar


class TestBuild:
    def test_axis_aligned_bar(self):
        nodes = [[0, 0, 0], [1, 0, 0]]
        members = [(0, 1, 500.0, 200e9)]
        supports = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2)]
        model = pt.build(nodes, members, supports)
        assert model.n_members == 1
        assert model.n_free_dofs == 1
        assert model.B.toarray() == pytest.approx([[1.0]])
        assert model.k[0] == pytest.approx(1.0e8)

    def test_direction_cosine_row(self):
        # bar axis has cosines (0.6, 0.8, 0); far node free in X and Y
        nodes = [[0, 0, 0], [0.6, 0.8, 0]]
        members = [(0, 1, 500.0, 200e9)]
        supports = [(0, 0), (0, 1), (0, 2), (1, 2)]
        model = pt.build(nodes, members, supports)
        assert model.B.toarray() == pytest.approx([[0.6, 0.8]])

    def test_triangle_apex(self):
        nodes = [[0, 0, 0], [2, 0, 0], [1, 1, 0]]
        supports = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 2)]
        two_bars = [(0, 2, 500.0, 200e9), (1, 2, 500.0, 200e9)]
        model = pt.build(nodes, two_bars, supports)
        assert (model.n_members, model.n_free_dofs) == (2, 2)

        # adding the pinned-pinned base bar produces a zero row
        three_bars = two_bars + [(0, 1, 500.0, 200e9)]
        with pytest.raises(ValueError, match="zero compatibility row"):
            pt.build(nodes, three_bars, supports)
        relaxed = pt.build(nodes, three_bars, supports, allow_zero_rows=True)
        assert (relaxed.n_members, relaxed.n_free_dofs) == (3, 2)
        assert relaxed.B[2].nnz == 0

    def test_row_nonzeros_bounded(self):
        model = pt.barrel_vault(3, 3)
        assert np.max(np.diff(model.B.indptr)) <= 6

    def test_zero_length_rejected(self):
        nodes = [[0, 0, 0], [0, 0, 0]]
        with pytest.raises(ValueError, match="zero length"):
            pt.build(nodes, [(0, 1, 500.0, 200e9)], [(0, 0), (0, 1), (0, 2)])

    def test_bad_member_index_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            pt.build([[0, 0, 0], [1, 0, 0]], [(0, 5, 500.0, 200e9)], None)

    def test_bad_support_index_rejected(self):
        with pytest.raises(ValueError, match="unknown node"):
            pt.build([[0, 0, 0], [1, 0, 0]], [(0, 1, 500.0, 200e9)], [(7, 0)])

    def test_no_members_rejected(self):
        with pytest.raises(ValueError, match="at least one member"):
            pt.build([[0, 0, 0]], [], None)

    def test_fully_fixed_rejected(self):
        nodes = [[0, 0, 0], [1, 0, 0]]
        supports = [(n, a) for n in range(2) for a in range(3)]
        with pytest.raises(ValueError, match="no free degree"):
            pt.build(nodes, [(0, 1, 500.0, 200e9)], supports)

    def test_rigid_translation_gives_zero_elongation(self):
        # no supports: a uniform X translation of every node elongates nothing
        rng = np.random.default_rng(4)
        nodes = rng.uniform(0, 2, size=(5, 3))
        members = [(i, j, 500.0, 200e9) for i in range(5) for j in range(i + 1, 5)]
        model = pt.build(nodes, members, supports=None)
        shift = np.zeros(model.n_free_dofs)
        shift[model.dof_map[:, 0]] = 1.0
        assert np.max(np.abs(model.B @ shift)) < 1e-14

    def test_stiffness_definition(self):
        model = pt.barrel_vault(4, 4)
        expected = model.young_pa * (model.areas_mm2 * 1e-6) / model.lengths
        assert np.allclose(model.k, expected, rtol=1e-12, atol=0.0)


class TestBarrelVault:
    @pytest.mark.parametrize(
        "n, members, dofs",
        [(10, 800, 597), (20, 3200, 2397), (30, 7200, 5397)],
    )
    def test_reference_counts(self, n, members, dofs):
        model = pt.barrel_vault(n, n)
        assert model.n_members == members
        assert model.n_free_dofs == dofs

    def test_smallest_instance(self):
        model = pt.barrel_vault(1, 1)
        assert model.n_members == 8
        assert model.n_nodes == 5
        assert int(model.supports.all(axis=1).sum()) == 4
        assert model.n_free_dofs == 3

    def test_rectangular_counts(self):
        model = pt.barrel_vault(3, 8)
        assert model.n_members == 8 * 3 * 8
        expected_d = 3 * ((3 + 1) * (8 + 1) + 3 * 8 - 2 * (3 + 1))
        assert model.n_free_dofs == expected_d

    def test_geometry(self):
        nx = ny = 6
        model = pt.barrel_vault(nx, ny)
        top = model.nodes[: (nx + 1) * (ny + 1)]
        # rise ny/4 above the supported edges, unit spacing in X
        assert top[:, 2].min() == pytest.approx(0.0, abs=1e-12)
        assert top[:, 2].max() == pytest.approx(ny / 4.0)
        assert np.unique(np.round(top[:, 0], 12)).tolist() == list(map(float, range(nx + 1)))

        # apex of the first pyramid sits 1 m below its base plane
        apex = model.nodes[(nx + 1) * (ny + 1)]
        base = model.nodes[[0, ny + 1, 1, ny + 2]]
        normal = np.cross(base[1] - base[0], base[2] - base[0])
        normal /= np.linalg.norm(normal)
        depth = abs(float(np.dot(apex - base[0], normal)))
        assert depth == pytest.approx(1.0, abs=1e-9)

    def test_supported_rows(self):
        nx, ny = 5, 4
        model = pt.barrel_vault(nx, ny)
        pinned = np.flatnonzero(model.supports.all(axis=1))
        expected = sorted(
            i * (ny + 1) + j for i in range(nx + 1) for j in (0, ny)
        )
        assert pinned.tolist() == expected

    def test_invalid_sizes(self):
        with pytest.raises(ValueError):
            pt.barrel_vault(0, 4)
        with pytest.raises(ValueError):
            pt.barrel_vault(4, 0)


class TestRandomModel:
    def test_sizes_and_rank(self):
        for seed in range(20):
            model = pt.random_model(seed)
            assert 1 <= model.n_members <= 6
            assert 1 <= model.n_free_dofs <= 4
            assert model.n_members >= model.n_free_dofs
            rank = np.linalg.matrix_rank(model.B.toarray())
            assert rank == model.n_free_dofs

    def test_reproducible(self):
        a = pt.random_model(11)
        b = pt.random_model(11)
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.k, b.k)


class TestSerialization:
    def test_round_trip_bitwise(self, tmp_path):
        model = pt.barrel_vault(3, 4)
        path = tmp_path / "model.json"
        pt.save_model(model, path)
        loaded = pt.load_model(path)
        assert np.array_equal(loaded.nodes, model.nodes)
        assert np.array_equal(loaded.members, model.members)
        assert np.array_equal(loaded.supports, model.supports)
        assert np.array_equal(loaded.k, model.k)
        assert np.array_equal(loaded.B.toarray(), model.B.toarray())

    def test_dict_round_trip_unit_bar(self):
        model = unit_bar()
        clone = model_from_dict(model_to_dict(model))
        assert np.array_equal(clone.B.toarray(), model.B.toarray())

    def test_missing_key_rejected(self):
        with pytest.raises(ValueError, match="missing key"):
            model_from_dict({"nodes": [], "members": []})

    def test_json_parses(self, tmp_path):
        model = pt.barrel_vault(2, 2)
        path = tmp_path / "m.json"
        pt.save_model(model, path)
        doc = json.loads(path.read_text())
        assert set(doc) == {"nodes", "members", "supports"}
