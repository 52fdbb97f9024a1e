import os
import sys
import unittest

import networkx as nx
import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

# Add project root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.classical import direct_solve  # noqa: E402
from src.covers import (  # noqa: E402
    IDENTITY,
    SWAP,
    CoverSpec,
    adversarial_two_cover,
    build_cover,
    cover_from_matrix,
    cover_system,
    kronecker_bridge_check,
    kronecker_double_cover,
    lift_state,
    lift_vector,
    project_vector,
    random_two_cover,
    validate_cover,
)
from src.errors import CoverError  # noqa: E402
from src.gallery import (  # noqa: E402
    chord_model,
    random_model,
    triangle_cover_matrix,
    triangle_model,
    two_node_model,
)
from src.message_engine import MessageState, ReweightedSystem, sync_step  # noqa: E402
from src.model import QuadraticModel, make_parameters  # noqa: E402


def _path_model():
    gamma = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, 0.3], [0.0, 0.3, 1.0]])
    return QuadraticModel(gamma, np.ones(3))


class TestBuildCover(unittest.TestCase):

    def test_one_cover_is_base(self):
        model = chord_model(0.3)
        spec = CoverSpec(1, {(i, j): (0,) for i, j in [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]})
        cover = build_cover(model, spec)
        assert_array_equal(cover.model.gamma, model.gamma)

    def test_identity_two_cover_is_disjoint(self):
        model = triangle_model()
        spec = CoverSpec(2, {(0, 1): IDENTITY, (1, 2): IDENTITY, (0, 2): IDENTITY})
        graph = build_cover(model, spec).graph()
        self.assertEqual(nx.number_connected_components(graph), 2)

    def test_printed_triangle_cover(self):
        spec = CoverSpec(2, {(0, 1): IDENTITY, (1, 2): IDENTITY, (0, 2): SWAP})
        cover = build_cover(triangle_model(), spec)
        assert_array_equal(cover.model.gamma, triangle_cover_matrix())
        self.assertEqual(validate_cover(cover), (True, []))

    def test_reversed_key_uses_transpose(self):
        perm = (1, 2, 0)
        forward = build_cover(two_node_model(), CoverSpec(3, {(0, 1): perm}))
        backward = build_cover(
            two_node_model(), CoverSpec(3, {(1, 0): tuple(np.argsort(perm).tolist())})
        )
        assert_array_equal(forward.model.gamma, backward.model.gamma)

    def test_bad_permutation(self):
        with self.assertRaises(CoverError):
            build_cover(two_node_model(), CoverSpec(2, {(0, 1): (0, 0)}))
        with self.assertRaises(CoverError):
            build_cover(triangle_model(), CoverSpec(2, {(0, 1): SWAP}))

    def test_kronecker_triangle_is_hexagon(self):
        graph = kronecker_double_cover(triangle_model()).graph()
        self.assertTrue(nx.is_isomorphic(graph, nx.cycle_graph(6)))
        self.assertTrue(nx.is_bipartite(graph))

    def test_kronecker_of_bipartite_base_is_two_copies(self):
        graph = kronecker_double_cover(_path_model()).graph()
        components = list(nx.connected_components(graph))
        self.assertEqual(len(components), 2)
        for nodes in components:
            self.assertTrue(nx.is_isomorphic(graph.subgraph(nodes), nx.path_graph(3)))

    def test_adversarial_cover(self):
        cover = adversarial_two_cover(triangle_model())
        assert_array_equal(cover.model.gamma, kronecker_double_cover(triangle_model()).model.gamma)
        self.assertLessEqual(np.linalg.eigvalsh(cover.model.gamma)[0], -0.2 + 1e-9)

        negative = triangle_model(-0.3)
        graph = adversarial_two_cover(negative).graph()
        self.assertEqual(nx.number_connected_components(graph), 2)

    def test_random_covers_seeded(self):
        model = triangle_model()
        first = random_two_cover(model, seed=3).model.gamma
        assert_array_equal(random_two_cover(model, seed=3).model.gamma, first)
        minima = [
            np.linalg.eigvalsh(random_two_cover(model, seed=s).model.gamma)[0]
            for s in range(100)
        ]
        self.assertTrue(any(m < 0.0 for m in minima))
        for s in range(10):
            self.assertTrue(validate_cover(random_two_cover(model, seed=s))[0])


class TestValidateCover(unittest.TestCase):

    def test_kronecker_valid(self):
        self.assertEqual(validate_cover(kronecker_double_cover(chord_model(0.4))), (True, []))

    def test_doubled_edge_rejected(self):
        gamma = np.array(
            [
                [1.0, 0.0, 0.5, 0.5],
                [0.0, 1.0, 0.0, 0.0],
                [0.5, 0.0, 1.0, 0.0],
                [0.5, 0.0, 0.0, 1.0],
            ]
        )
        ok, violations = validate_cover(cover_from_matrix(two_node_model(), gamma, 2))
        self.assertFalse(ok)
        self.assertIn("neighborhood not bijective at 0", violations)


class TestLiftProject(unittest.TestCase):

    def test_lift_and_project(self):
        cover = kronecker_double_cover(triangle_model())
        lifted = lift_vector(np.array([1.0, 2.0, 3.0]), cover)
        assert_array_equal(lifted, [1.0, 1.0, 2.0, 2.0, 3.0, 3.0])
        assert_array_equal(project_vector(lifted, cover), [1.0, 2.0, 3.0])

    def test_solutions_lift_and_project(self):
        rng = np.random.default_rng(23)
        for seed in range(10):
            model = random_model(rng, n=5, scale=0.15)
            cover = random_two_cover(model, seed=seed)
            x = direct_solve(model)
            lifted = lift_vector(x, cover)
            assert_allclose(cover.model.gamma @ lifted, cover.model.h, atol=1e-10)
            y = direct_solve(cover.model)
            assert_allclose(model.gamma @ project_vector(y, cover), model.h, atol=1e-10)

    def test_eigenpairs(self):
        rng = np.random.default_rng(29)
        for seed in range(5):
            model = random_model(rng, n=4)
            cover = random_two_cover(model, seed=seed)
            values, vectors = np.linalg.eigh(model.gamma)
            for lam, x in zip(values, vectors.T):
                lifted = lift_vector(x, cover)
                assert_allclose(cover.model.gamma @ lifted, lam * lifted, atol=1e-10)
            values, vectors = np.linalg.eigh(cover.model.gamma)
            for lam, y in zip(values, vectors.T):
                x = project_vector(y, cover)
                if np.linalg.norm(x) > 1e-8:
                    assert_allclose(model.gamma @ x, lam * x, atol=1e-8)


class TestIndistinguishability(unittest.TestCase):

    def test_cover_messages_equal_lifted_base(self):
        cases = [
            (triangle_model(), random_two_cover(triangle_model(), seed=1), 1.0),
            (chord_model(0.4), kronecker_double_cover(chord_model(0.4)), 2.0),
            (chord_model(0.3), random_two_cover(chord_model(0.3), seed=4), -1.0),
        ]
        for model, cover, c in cases:
            params = make_parameters(model, c)
            base = ReweightedSystem.build(model, params)
            lifted = cover_system(cover, params)
            base_state = MessageState.zeros(len(base))
            cover_state = MessageState.zeros(len(lifted))
            for _ in range(30):
                base_state = sync_step(base_state, base)
                cover_state = sync_step(cover_state, lifted)
                expected = lift_state(base_state, cover, base, lifted)
                assert_array_equal(cover_state.a, expected.a)
                assert_array_equal(cover_state.b, expected.b)
                assert_array_equal(cover_state.unbounded, expected.unbounded)

    def test_kronecker_bridge(self):
        model = chord_model(0.4)
        ok, message = kronecker_bridge_check(model, make_parameters(model, 2.0), rounds=20)
        self.assertTrue(ok, message)
        ok, message = kronecker_bridge_check(triangle_model(), make_parameters(triangle_model(), 1.0))
        self.assertTrue(ok, message)


if __name__ == '__main__':
    unittest.main()
