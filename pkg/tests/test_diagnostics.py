import os
import sys
import unittest

import numpy as np
from numpy.testing import assert_allclose

# Add project root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.covers import adversarial_two_cover, random_two_cover  # noqa: E402
from src.diagnostics import (  # noqa: E402
    adversarial_witness,
    is_sdd_witness,
    normalize_diagonal,
    perron_vector,
    positive_definite_check,
    sdd_witness,
    spectral_radius_nonneg,
    walk_summability,
)
from src.errors import ConvergenceError, ModelError  # noqa: E402
from src.gallery import chord_model, random_model, triangle_model  # noqa: E402
from src.model import QuadraticModel  # noqa: E402


class TestPowerIteration(unittest.TestCase):

    def test_symmetric_pair(self):
        self.assertAlmostEqual(spectral_radius_nonneg(np.array([[0.0, 1.0], [1.0, 0.0]])), 1.0)

    def test_disconnected_components(self):
        matrix = np.zeros((4, 4))
        matrix[0, 1] = matrix[1, 0] = 0.5
        matrix[2, 3] = matrix[3, 2] = 0.9
        rho, vector = perron_vector(matrix)
        self.assertAlmostEqual(rho, 0.9, places=10)
        self.assertTrue(np.all(vector > 0.0))
        assert_allclose(vector, np.ones(4), atol=1e-10)

    def test_isolated_nodes(self):
        self.assertEqual(spectral_radius_nonneg(np.zeros((3, 3))), 0.0)

    def test_matches_eigensolver(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            matrix = np.abs(rng.normal(size=(6, 6)))
            matrix = matrix + matrix.T
            expected = np.max(np.abs(np.linalg.eigvalsh(matrix)))
            self.assertAlmostEqual(spectral_radius_nonneg(matrix), expected, places=8)

    def test_reports_best_estimate(self):
        path = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        with self.assertRaises(ConvergenceError) as ctx:
            spectral_radius_nonneg(path, max_iter=1)
        self.assertAlmostEqual(ctx.exception.best_estimate, 1.5)

    def test_rejects_negative_entries(self):
        with self.assertRaises(ModelError):
            spectral_radius_nonneg(np.array([[0.0, -1.0], [-1.0, 0.0]]))


class TestWalkSummability(unittest.TestCase):

    def test_triangle(self):
        model = triangle_model()
        pd, lam_min = positive_definite_check(model)
        self.assertTrue(pd)
        self.assertAlmostEqual(lam_min, 0.4, places=12)
        summable, rho = walk_summability(model)
        self.assertFalse(summable)
        self.assertAlmostEqual(rho, 1.2, places=10)
        self.assertIsNone(sdd_witness(model))

    def test_dominant_pair(self):
        model = QuadraticModel(np.array([[2.0, 1.0], [1.0, 2.0]]), np.ones(2))
        result = walk_summability(model)
        self.assertTrue(result.summable)
        self.assertAlmostEqual(result.rho, 0.5, places=12)
        w = sdd_witness(model)
        assert_allclose(w, [1.0, 1.0], atol=1e-12)
        self.assertTrue(is_sdd_witness(model, w))

    def test_diagonal_model(self):
        model = QuadraticModel(np.diag([1.0, 3.0, 5.0]), np.ones(3))
        summable, rho = walk_summability(model)
        self.assertTrue(summable)
        self.assertEqual(rho, 0.0)
        assert_allclose(sdd_witness(model), np.ones(3))

    def test_chord_model(self):
        self.assertTrue(walk_summability(chord_model(0.3)).summable)
        self.assertFalse(walk_summability(chord_model(0.45)).summable)

    def test_nonpositive_diagonal(self):
        model = QuadraticModel(np.array([[0.0, 1.0], [1.0, 1.0]]), np.ones(2))
        with self.assertRaises(ModelError):
            walk_summability(model)

    def test_witness_check_rejects_nonpositive(self):
        model = QuadraticModel(np.array([[2.0, 1.0], [1.0, 2.0]]), np.ones(2))
        self.assertFalse(is_sdd_witness(model, np.array([1.0, 0.0])))
        self.assertFalse(is_sdd_witness(model, np.array([1.0, 3.0])))


class TestCoverCharacterization(unittest.TestCase):
    """Walk-summability against the positive definiteness of 2-covers."""

    def test_witness_quadratic_form(self):
        witness = adversarial_witness(triangle_model())
        self.assertAlmostEqual(witness.rho, 1.2, places=10)
        self.assertAlmostEqual(witness.quadratic_form, -0.2, places=8)
        self.assertAlmostEqual(float(np.linalg.norm(witness.z)), 1.0, places=12)

    def test_random_corpus(self):
        rng = np.random.default_rng(37)
        seen = {True: 0, False: 0}
        for trial in range(30):
            model = random_model(rng, n=5, scale=0.3 if trial % 2 else 0.8)
            result = walk_summability(model)
            if result.indeterminate:
                continue
            seen[result.summable] += 1
            witness = sdd_witness(model)
            self.assertEqual(witness is not None, result.summable)
            if result.summable:
                self.assertTrue(positive_definite_check(adversarial_two_cover(model).model)[0])
                for seed in range(50):
                    self.assertTrue(
                        positive_definite_check(random_two_cover(model, seed=seed).model)[0]
                    )
            else:
                adversarial = adversarial_witness(model)
                self.assertAlmostEqual(adversarial.quadratic_form, 1.0 - result.rho, places=8)
                pd, lam_min = positive_definite_check(adversarial.cover.model)
                self.assertFalse(pd)
                self.assertLessEqual(lam_min, 1.0 - result.rho + 1e-8)
        self.assertGreater(seen[True], 0)
        self.assertGreater(seen[False], 0)

    def test_normalization(self):
        model = random_model(np.random.default_rng(41), n=4)
        normalized = normalize_diagonal(model)
        assert_allclose(normalized.diagonal, np.ones(4))
        scale = 1.0 / np.sqrt(model.diagonal)
        assert_allclose(normalized.gamma, scale[:, None] * model.gamma * scale[None, :])


if __name__ == '__main__':
    unittest.main()
