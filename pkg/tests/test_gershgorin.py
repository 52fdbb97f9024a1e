import os
import sys
import unittest

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

# Add project root to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.computation_tree import build_computation_tree, exact_tree_elimination  # noqa: E402
from src.errors import ParameterError  # noqa: E402
from src.gallery import (  # noqa: E402
    chord_model,
    random_pd_model,
    triangle_model,
    variances_only_model,
)
from src.gershgorin import (  # noqa: E402
    find_uniform_r,
    gershgorin_certificate,
    leaf_scale,
)
from src.message_engine import ReweightedSystem, run  # noqa: E402
from src.model import make_parameters  # noqa: E402


def _unit_diagonal_lambda_min(tree):
    """Smallest eigenvalue of the tree matrix after congruence to unit diagonal."""
    scale = 1.0 / np.sqrt(tree.curvature)
    children = np.arange(1, tree.size)
    parents = tree.parent[1:]
    values = tree.coupling[1:] * scale[children] * scale[parents]
    lower = scipy.sparse.coo_matrix(
        (values, (children, parents)), shape=(tree.size, tree.size)
    )
    matrix = (scipy.sparse.identity(tree.size) + lower + lower.T).tocsc()
    if tree.size <= 2000:
        return float(scipy.linalg.eigvalsh(matrix.toarray(), subset_by_index=[0, 0])[0])
    return float(
        scipy.sparse.linalg.eigsh(
            matrix, k=1, which="SA", ncv=40, tol=1e-10, return_eigenvectors=False
        )[0]
    )


class TestCertificate(unittest.TestCase):

    def test_triangle_margins(self):
        cert = gershgorin_certificate(triangle_model(), r=5.0, s=0.8)
        self.assertIsNotNone(cert)
        self.assertAlmostEqual(cert.leaf_margin, 0.25)
        self.assertAlmostEqual(cert.internal_margin, 0.0772)
        self.assertAlmostEqual(cert.root_margin, 0.808)
        self.assertAlmostEqual(cert.slack, 0.0772)

    def test_failure_returns_none(self):
        self.assertIsNone(gershgorin_certificate(triangle_model(), r=2.0, s=1.0))

    def test_parameter_ranges(self):
        with self.assertRaises(ParameterError):
            gershgorin_certificate(triangle_model(), r=0.5, s=1.0)
        with self.assertRaises(ParameterError):
            gershgorin_certificate(triangle_model(), r=2.0, s=0.0)

    def test_leaf_scale(self):
        self.assertEqual(leaf_scale(triangle_model()), 1.0)
        self.assertAlmostEqual(leaf_scale(random_pd_model()), 29.0 / 14.0 + 0.5)


class TestSearch(unittest.TestCase):

    def test_known_values(self):
        cases = [
            (triangle_model(), 4.0),
            (chord_model(0.45), 4.0),
            (random_pd_model(), 64.0),
        ]
        for model, expected in cases:
            found = find_uniform_r(model)
            self.assertIsNotNone(found)
            r, s, cert = found
            self.assertEqual(r, expected)
            self.assertGreater(cert.slack, 0.0)

    def test_r_max_respected(self):
        self.assertIsNone(find_uniform_r(random_pd_model(), r_max=32.0))

    def test_certified_trees_are_positive_definite(self):
        # Weights are positive for r >= 1, so positive normalized pivots
        # mean a positive definite tree; depth 8 is also eigensolved below.
        models = [triangle_model(), chord_model(0.45), random_pd_model(), variances_only_model()]
        for model in models:
            r, _, _ = find_uniform_r(model)
            system = ReweightedSystem.build(model, make_parameters(model, r))
            for root in range(model.n):
                for depth in (2, 5, 8):
                    tree = build_computation_tree(system, root, depth)
                    result = exact_tree_elimination(tree, eigen_limit=600)
                    self.assertTrue(result.pivots_positive, f"root={root} depth={depth}")
                    if result.lambda_min is not None and r <= 4.0:
                        self.assertGreater(result.lambda_min, 0.0)

    def test_certified_depth_eight_trees_eigensolve(self):
        models = [triangle_model(), chord_model(0.45), random_pd_model(), variances_only_model()]
        for model in models:
            r, _, _ = find_uniform_r(model)
            system = ReweightedSystem.build(model, make_parameters(model, r))
            for root in range(model.n):
                tree = build_computation_tree(system, root, 8)
                lambda_min = _unit_diagonal_lambda_min(tree)
                self.assertGreater(lambda_min, 0.0, f"r={r} root={root}")

    def test_certified_parameter_keeps_message_passing_positive(self):
        for model in (triangle_model(), chord_model(0.45)):
            r, _, _ = find_uniform_r(model)
            report = run(model, make_parameters(model, r), max_iter=2000)
            self.assertTrue(report.trees_positive)
            self.assertTrue(report.a_monotone)


if __name__ == '__main__':
    unittest.main()
