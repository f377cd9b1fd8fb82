import json

import numpy as np
import pytest
from hypothesis import given

from qpfaff import Quaternion
from qpfaff.quaternion import I, J, K, ONE, conj, inner, mul, phi, phi_inv

from conftest import quaternions, random_quaternion


def close(p, q, tol=1e-10):
    return p.isclose(q, rtol=tol, atol=tol)


def test_unit_rules():
    assert mul(I, J) == K
    assert mul(J, I) == -K
    assert I * I == Quaternion(-1)
    assert J * K == I and K * I == J


def test_product_examples():
    q = Quaternion(2 + 1j, 0.5, -1j, 3)
    assert ONE * q == q
    assert (1 + I) * (1 + J) == Quaternion(1, 1, 1, 1)


def test_conj_examples():
    assert conj(K) == -K
    assert conj(Quaternion(3, 2)) == Quaternion(3, -2)


def test_scalar_embedding():
    q = Quaternion.scalar(2 - 3j)
    assert q.components == (2 - 3j, 0, 0, 0)
    assert q.is_scalar()
    assert not (q + J).is_scalar()
    assert q == q.conj()


def test_phi_examples():
    np.testing.assert_array_equal(phi(J), [[0, -1], [1, 0]])
    np.testing.assert_array_equal(phi(ONE), np.eye(2))
    assert phi_inv(np.array([[0, -1], [1, 0]])) == J
    assert phi_inv(np.eye(2)) == ONE


def test_inner_examples():
    assert inner(I, I) == 1
    assert inner(I, J) == 0
    assert inner(Quaternion(1, 1j), Quaternion(1, 1j)) == 2


@given(quaternions, quaternions)
def test_conj_reverses_products(p, q):
    assert close(conj(p * q), conj(q) * conj(p))


@given(quaternions, quaternions, quaternions)
def test_associative(p, q, r):
    assert close((p * q) * r, p * (q * r), 1e-9)


@given(quaternions, quaternions)
def test_phi_homomorphism(p, q):
    lhs = phi(p * q)
    rhs = phi(p) @ phi(q)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(rhs).max()))


@given(quaternions, quaternions)
def test_phi_inv_of_product(p, q):
    assert close(phi_inv(phi(p) @ phi(q)), p * q)


@given(quaternions)
def test_phi_roundtrip_and_norm(q):
    assert close(phi_inv(phi(q)), q, 1e-14)
    n = q * conj(q)
    assert n.is_scalar(atol=1e-9 * max(1.0, abs(q.norm2())))
    assert np.isclose(np.linalg.det(phi(q)), q.norm2(), rtol=1e-10, atol=1e-10)


@given(quaternions)
def test_dagger_rule(q):
    # [[x, y], [z, w]] -> [[w, -y], [-z, x]]
    m = phi(q)
    dag = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    assert np.allclose(phi(conj(q)), dag)
    assert conj(conj(q)) == q


@given(quaternions, quaternions)
def test_scalar_product_property(p, q):
    assert close(p * q + conj(q) * conj(p), q * p + conj(p) * conj(q), 1e-9)


def test_json_roundtrip(rng):
    q = random_quaternion(rng)
    text = json.dumps(q.to_json())
    assert Quaternion.from_json(json.loads(text)) == q


def test_json_rejects_short():
    with pytest.raises(ValueError):
        Quaternion.from_json([[1, 0]] * 3)


def test_scalar_arithmetic():
    q = Quaternion(1, 2, 3, 4)
    assert 2 * q == q * 2 == Quaternion(2, 4, 6, 8)
    assert q / 2 == Quaternion(0.5, 1, 1.5, 2)
    assert q - 1 == Quaternion(0, 2, 3, 4)
    assert 1 - q == Quaternion(0, -2, -3, -4)
    with pytest.raises(AttributeError):
        q.q0 = 5
