import numpy as np
import pytest

from qpfaff import (
    QMatrix,
    expectation_multiplicative,
    fredholm_pfaffian,
    fredholm_series,
    fredholm_signed,
    random_self_adjoint,
)
from qpfaff.errors import SizeCapError
from qpfaff.fredholm import log_det
from qpfaff.qmatrix import phi_lift
from qpfaff.sampler import atom_oracle
from qpfaff.verify import dilute_sine4, projection_kernel


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def zeros(n):
    return QMatrix(np.zeros((n, n, 4)))


def test_zero_kernel():
    assert fredholm_series(zeros(4)) == 1
    res = fredholm_signed(zeros(4))
    assert res.value == 1 and res.residual == 0


def test_scalar_diagonal_factorizes():
    t = np.array([0.3, -0.7, 2.0, 1j])
    T = QMatrix.diag(t)
    assert rel(fredholm_series(T), np.prod(1 + t)) < 1e-13
    assert rel(fredholm_signed(T).value, np.prod(1 + t)) < 1e-13


@pytest.mark.parametrize("n", [1, 3, 6, 9])
def test_routes_agree(rng, n):
    for scale in (0.2, 1.0, 3.0):
        T = random_self_adjoint(n, rng, scale=scale)
        s = fredholm_signed(T)
        assert rel(s.value, fredholm_series(T)) < 1e-9
        assert rel(s.value, fredholm_pfaffian(T)) < 1e-9


def test_residual_bound(rng):
    T = random_self_adjoint(8, rng)
    res = fredholm_signed(T)
    d = np.linalg.det(np.eye(16) + phi_lift(T))
    assert res.residual <= 1e-8 * max(1, abs(d))
    assert res.steps >= 32
    assert res.route == "sign-tracked-sqrt"


def test_zero_near_the_path(rng):
    # Qdet(1 + zT) has a zero close to the default arc for this instance
    rng = np.random.default_rng(0)
    for _ in range(20):
        random_self_adjoint(2, rng, scale=0.5)
    T = random_self_adjoint(2, rng, scale=0.5)
    assert rel(fredholm_signed(T).value, fredholm_series(T)) < 1e-9


def test_negative_value():
    # scalar diagonal with one factor below zero: the sign must survive
    T = QMatrix.diag([-3.0, 0.5])
    assert fredholm_signed(T).value == pytest.approx(-3.0)


def test_series_cap():
    with pytest.raises(SizeCapError):
        fredholm_series(zeros(15))


def test_log_det(rng):
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    la, arg = log_det(A)
    assert np.isclose(np.exp(la + 1j * arg), np.linalg.det(A))
    assert log_det(np.zeros((2, 2)))[0] == -np.inf


class TestExpectation:
    def test_g_one(self):
        T = dilute_sine4(5)
        assert expectation_multiplicative(T, np.ones(5)) == 1

    def test_g_zero_is_empty_probability(self, rng):
        T = projection_kernel(6, 2, rng)
        atoms = atom_oracle(T)
        val = expectation_multiplicative(T, np.zeros(6))
        assert abs(val - atoms.probs[0]) < 1e-12
        T = dilute_sine4(6)
        val = expectation_multiplicative(T, np.zeros(6))
        assert abs(val - atom_oracle(T).probs[0]) < 1e-12 and val.real > 0

    def test_branch_independence(self, rng):
        T = dilute_sine4(6)
        g = rng.uniform(0, 2, 6)
        r = np.sqrt(g - 1 + 0j)
        vals = []
        for sign in (1, -1):
            rr = sign * r
            e = rr[:, None, None] * T.entries * rr[None, :, None]
            vals.append(fredholm_signed(QMatrix(e, symmetrize=True)).value)
        assert vals[0] == vals[1]

    def test_matches_oracle_moment(self, rng):
        T = dilute_sine4(6)
        g = rng.uniform(0, 2, 6)
        atoms = atom_oracle(T)
        expected = sum(p * np.prod(g[[i for i in range(6) if m >> i & 1]])
                       for m, p in enumerate(atoms.probs))
        assert rel(expectation_multiplicative(T, g), expected) < 1e-10

    def test_bad_g(self):
        T = dilute_sine4(3)
        with pytest.raises(ValueError):
            expectation_multiplicative(T, [1, 1])
        with pytest.raises(ValueError):
            expectation_multiplicative(T, [1, np.inf, 1])
