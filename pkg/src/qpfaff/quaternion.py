"""Complexified quaternions and the isomorphism onto 2x2 complex matrices.

Two layers live here.  ``Quaternion`` is a small immutable value type for
scalar work.  The ``*_arr`` functions operate on arrays whose last axis holds
the four complex components ``(q0, q1, q2, q3)`` and are what the matrix code
uses internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Quaternion",
    "mul",
    "conj",
    "phi",
    "phi_inv",
    "inner",
    "qmul_arr",
    "qconj_arr",
    "phi_arr",
    "phi_inv_arr",
    "as_qarray",
    "ONE",
    "I",
    "J",
    "K",
]


def qmul_arr(a, b):
    """Broadcasting product of quaternion arrays (last axis of length 4)."""
    a = np.asarray(a)
    b = np.asarray(b)
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


_CONJ_SIGNS = np.array([1, -1, -1, -1])


def qconj_arr(a):
    return np.asarray(a) * _CONJ_SIGNS


def phi_arr(a):
    """Map quaternion arrays ``(..., 4)`` to complex arrays ``(..., 2, 2)``."""
    a = np.asarray(a, dtype=complex)
    q0, q1, q2, q3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    out = np.empty(a.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = q0 + 1j * q3
    out[..., 0, 1] = 1j * q1 - q2
    out[..., 1, 0] = 1j * q1 + q2
    out[..., 1, 1] = q0 - 1j * q3
    return out


def phi_inv_arr(m):
    """Inverse of :func:`phi_arr`."""
    m = np.asarray(m, dtype=complex)
    x, y, z, w = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    return np.stack(
        [(x + w) / 2, (y + z) / 2j, (z - y) / 2, (x - w) / 2j], axis=-1
    )


def as_qarray(q):
    """Coerce a Quaternion, complex scalar, or 4-sequence to a length-4 array."""
    if isinstance(q, Quaternion):
        return q.to_array()
    arr = np.asarray(q, dtype=complex)
    if arr.ndim == 0:
        return np.array([arr, 0, 0, 0], dtype=complex)
    return arr


@dataclass(frozen=True, slots=True)
class Quaternion:
    """``q0 + q1 i + q2 j + q3 k`` with complex coefficients."""

    q0: complex = 0j
    q1: complex = 0j
    q2: complex = 0j
    q3: complex = 0j

    def __post_init__(self):
        for name in ("q0", "q1", "q2", "q3"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    @classmethod
    def from_array(cls, arr) -> Quaternion:
        a = np.asarray(arr, dtype=complex).reshape(4)
        return cls(a[0], a[1], a[2], a[3])

    @classmethod
    def scalar(cls, c) -> Quaternion:
        return cls(c)

    def to_array(self) -> np.ndarray:
        return np.array([self.q0, self.q1, self.q2, self.q3], dtype=complex)

    @property
    def components(self) -> tuple[complex, complex, complex, complex]:
        return (self.q0, self.q1, self.q2, self.q3)

    def conj(self) -> Quaternion:
        return Quaternion(self.q0, -self.q1, -self.q2, -self.q3)

    def norm2(self) -> complex:
        """``q * conj(q)``, which is a scalar; equals ``det(phi(q))``."""
        return self.q0**2 + self.q1**2 + self.q2**2 + self.q3**2

    def is_scalar(self, atol=1e-10) -> bool:
        return max(abs(self.q1), abs(self.q2), abs(self.q3)) <= atol

    def isclose(self, other, rtol=1e-10, atol=1e-10) -> bool:
        a = self.to_array()
        b = as_qarray(other)
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
        return bool(np.max(np.abs(a - b)) <= atol + rtol * scale)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return Quaternion(*(self.to_array() + other.to_array()))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return Quaternion(*(self.to_array() - other.to_array()))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return Quaternion(-self.q0, -self.q1, -self.q2, -self.q3)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(*qmul_arr(self.to_array(), other.to_array()))
        if isinstance(other, (int, float, complex, np.number)):
            return Quaternion(*(self.to_array() * other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return Quaternion(*(self.to_array() * other))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return Quaternion(*(self.to_array() / other))
        return NotImplemented

    def to_json(self) -> list:
        return [[c.real, c.imag] for c in self.components]

    @classmethod
    def from_json(cls, data) -> Quaternion:
        if len(data) != 4:
            raise ValueError("quaternion needs 4 components")
        return cls(*(complex(re, im) for re, im in data))

    def __repr__(self):
        return f"Quaternion({self.q0}, {self.q1}, {self.q2}, {self.q3})"


def _coerce(x):
    if isinstance(x, Quaternion):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Quaternion(x)
    return NotImplemented


ONE = Quaternion(1)
I = Quaternion(0, 1)
J = Quaternion(0, 0, 1)
K = Quaternion(0, 0, 0, 1)


def mul(p: Quaternion, q: Quaternion) -> Quaternion:
    return p * q


def conj(q: Quaternion) -> Quaternion:
    return q.conj()


def phi(q: Quaternion) -> np.ndarray:
    """The 2x2 complex matrix of ``q``."""
    return phi_arr(q.to_array())


def phi_inv(m) -> Quaternion:
    return Quaternion.from_array(phi_inv_arr(m))


def inner(p: Quaternion, q: Quaternion) -> complex:
    """``sum_i p_i * conj(q_i)`` over the four complex components."""
    return complex(np.sum(p.to_array() * np.conj(q.to_array())))
