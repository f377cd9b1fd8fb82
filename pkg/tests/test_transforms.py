import itertools

import numpy as np
import pytest

from qpfaff import (
    CSEKernel,
    GridKernel,
    GroundSet,
    QMatrix,
    Sine4Kernel,
    conditional_kernel,
    correlation,
    grid_discretize,
    kg_transform,
    palm_many,
    palm_one,
    palm_ratio,
    qdet,
)
from qpfaff.errors import DegeneratePalmError, ExistenceError, SingularResolventError
from qpfaff.transforms import PalmKernel
from qpfaff.verify import dilute_cse, dilute_sine4, projection_kernel, separated_points


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


class TestPalm:
    def test_vanishes_at_palm_point(self):
        K = palm_one(Sine4Kernel(), 0.0)
        assert np.max(np.abs(K(0.0, 0.0))) < 1e-15
        assert np.max(np.abs(K(0.0, 1.3))) < 1e-15

    def test_uncoupled_point_changes_nothing(self):
        T = GridKernel.from_matrix(np.diag([0.5, 0.3, 0.2]))
        P = palm_one(T, 1.0)
        assert np.allclose(P.entries[[0, 2]][:, [0, 2]], T.entries[[0, 2]][:, [0, 2]])

    def test_sine4_intensity_relation(self, rng):
        K = Sine4Kernel()
        P = palm_one(K, 0.0)
        for x in rng.uniform(0.2, 10, 20):
            lhs = 0.25 * P(x, x)[0].real
            assert abs(lhs - correlation(K, [0.0, x])) < 1e-9

    def test_m_one_equals_palm_one(self):
        a = palm_many(CSEKernel(6), [0.3])(0.1, -1.0)
        b = palm_one(CSEKernel(6), 0.3)(0.1, -1.0)
        assert np.array_equal(a, b)

    def test_order_invariance(self, rng):
        K = CSEKernel(6)
        x = separated_points(rng, 3, -2.8, 2.8, 0.6)
        ys = np.array([-2.9, 0.05, 1.1])
        ref = palm_many(K, x).matrix(ys).entries
        for perm in itertools.permutations(range(3)):
            other = palm_many(K, x[list(perm)]).matrix(ys).entries
            assert np.max(np.abs(other - ref)) < 1e-10

    def test_ratio_formula(self, rng):
        K = CSEKernel(6)
        x = separated_points(rng, 2, -2.8, 2.8, 0.6)
        P = palm_many(K, x)
        for a, b in [(0.4, -1.9), (1.0, 1.0)]:
            assert np.allclose(palm_ratio(K, x, a, b).to_array(), P(a, b), atol=1e-12)

    def test_product_rule(self, rng):
        K = CSEKernel(6)
        pts = separated_points(rng, 5, -2.8, 2.8, 0.6)
        x, y = pts[:2], pts[2:]
        lhs = qdet(K.matrix(pts))
        rhs = qdet(K.matrix(x)) * qdet(palm_many(K, x).matrix(y))
        assert rel(lhs, rhs) < 1e-8

    def test_telescoping(self, rng):
        K = Sine4Kernel("limit")
        pts = separated_points(rng, 4, 0, 10, 1.2)
        prod = 1.0
        cur = K
        for p in pts:
            prod *= cur(p, p)[0]
            cur = palm_one(cur, p)
        assert rel(prod, qdet(K.matrix(pts))) < 1e-10

    def test_self_adjoint(self, rng):
        P = palm_many(Sine4Kernel("limit"), [0.0, 2.0])
        assert P.self_adjoint_deviation(rng.uniform(-3, 5, 6)) < 1e-10

    def test_degenerate(self):
        with pytest.raises(DegeneratePalmError):
            palm_one(GridKernel.from_matrix(np.diag([0.0, 0.5])), 0.0)
        with pytest.raises(DegeneratePalmError):
            palm_many(Sine4Kernel(), [1.0, 1.0])
        # at a Palm point the iterated kernel has zero intensity
        with pytest.raises(DegeneratePalmError):
            PalmKernel(palm_one(Sine4Kernel(), 0.0), 0.0)

    def test_grid_palm_matches_analytic(self):
        G = GroundSet([0.0, 1.0, 2.5], [1, 1, 1])
        T = grid_discretize(Sine4Kernel("limit"), G)
        a = palm_one(T, 1.0).entries
        b = grid_discretize(palm_one(Sine4Kernel("limit"), 1.0), G).entries
        assert np.allclose(a, b, atol=1e-14)


class TestKg:
    def test_identity_and_zero(self, rng):
        T = dilute_sine4(6)
        assert np.array_equal(kg_transform(T, np.ones(6)).entries, T.entries)
        assert np.all(kg_transform(T, np.zeros(6)).entries == 0)

    def test_self_adjoint_raw(self, rng):
        T = dilute_cse(6)
        _, raw = kg_transform(T, rng.uniform(0, 2, 6), return_raw=True)
        from qpfaff.qmatrix import self_adjoint_deviation

        assert self_adjoint_deviation(raw) < 1e-10

    def test_composition(self, rng):
        T = projection_kernel(7, 3, rng)
        g, h = rng.uniform(0, 2, 7), rng.uniform(0, 2, 7)
        a = kg_transform(kg_transform(T, g), h).entries
        b = kg_transform(T, g * h).entries
        assert np.max(np.abs(a - b)) < 1e-8

    def test_existence_error(self):
        # a unit-eigenvalue projection with g = 0 on its support: E[Psi_g] = 0
        T = GridKernel.from_matrix(np.diag([1.0, 0.5]))
        with pytest.raises(ExistenceError):
            kg_transform(T, [0.0, 1.0])

    def test_input_checks(self):
        T = dilute_sine4(3)
        with pytest.raises(ValueError):
            kg_transform(T, [1, 1])
        with pytest.raises(ValueError):
            kg_transform(T, [1, -1, 1])


class TestConditional:
    def test_empty_window(self):
        T = dilute_cse(5)
        assert np.allclose(conditional_kernel(T, []).entries, T.entries, atol=1e-15)

    def test_weak_coupling(self, rng):
        e = np.diag([0.3, 0.4, 0.5]).astype(complex)
        eps = 1e-6
        e[0, 2] = e[2, 0] = eps
        T = GridKernel.from_matrix(e)
        C = conditional_kernel(T, [2])
        assert np.max(np.abs(C.entries - T.entries[:2, :2])) < 10 * eps

    def test_unoccupied_window_is_kg(self, rng):
        T = dilute_sine4(7)
        B = [1, 4]
        g = np.ones(7)
        g[B] = 0
        keep = [i for i in range(7) if i not in B]
        a = conditional_kernel(T, B).entries
        b = kg_transform(T, g).entries[np.ix_(keep, keep)]
        assert np.max(np.abs(a - b)) < 1e-12

    def test_labels_and_errors(self):
        T = dilute_sine4(5)
        C = conditional_kernel(T, [0, 3], [3])
        assert list(C.ground.labels) == [1, 2, 4]
        with pytest.raises(ValueError):
            conditional_kernel(T, [0], [1])
        with pytest.raises(IndexError):
            conditional_kernel(T, [7])
        P = GridKernel.from_matrix(np.diag([1.0, 0.5]))
        with pytest.raises(SingularResolventError):
            conditional_kernel(P, [0])
        with pytest.raises(DegeneratePalmError):
            conditional_kernel(GridKernel.from_matrix(np.diag([0.0, 0.5])), [0], [0])
