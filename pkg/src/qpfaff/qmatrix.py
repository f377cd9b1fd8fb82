"""Quaternion matrices and their Moore-Dyson determinants.

Matrices are stored as complex arrays of shape ``(n, n, 4)``.  Three routes to
the quaternion determinant are provided:

* :func:`qdet_recursive` -- Dyson's row recursion, valid for almost
  self-adjoint matrices, cost ``O(n!)``;
* :func:`qdet_moore` -- Moore's cycle-ordered permutation sum, self-adjoint
  only, cost ``O(n * n!)``;
* :func:`qdet` -- ``Pf(-Y_n phi(M))`` via a Parlett-Reid Pfaffian, ``O(n^3)``.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

from .errors import NotSelfAdjointError, SingularMatrixError, SizeCapError
from .quaternion import (
    Quaternion,
    as_qarray,
    phi_arr,
    phi_inv_arr,
    qconj_arr,
    qmul_arr,
)

__all__ = [
    "QMatrix",
    "SELF_ADJOINT",
    "ALMOST_SELF_ADJOINT",
    "GENERAL",
    "self_adjoint_deviation",
    "qmatmul",
    "qdet_recursive",
    "qdet_moore",
    "pfaffian",
    "pfaffian_cofactor",
    "psi",
    "qdet",
    "phi_lift",
    "phi_unlift",
    "y_matrix",
    "swap",
    "scale",
    "add_multiple",
    "elementary_op",
    "qmat_inverse",
    "random_self_adjoint",
]

SELF_ADJOINT = "self-adjoint"
ALMOST_SELF_ADJOINT = "almost-self-adjoint"
GENERAL = "general"

SA_RTOL = 1e-10
RECURSIVE_CAP = 8
MOORE_CAP = 6


def _scale_of(entries):
    if entries.size == 0:
        return 0.0
    return float(np.max(np.abs(entries)))


def self_adjoint_deviation(entries, skip=None):
    """Max-entry deviation of ``M - M^dagger``, relative to ``max |M|``.

    With ``skip=k`` the row and column ``k`` are ignored, which is the
    almost-self-adjoint condition.
    """
    e = np.asarray(entries)
    diff = e - qconj_arr(np.swapaxes(e, 0, 1))
    if skip is not None:
        keep = np.ones(e.shape[0], dtype=bool)
        keep[skip] = False
        diff = diff[np.ix_(keep, keep)]
    if diff.size == 0:
        return 0.0
    scale = _scale_of(e)
    dev = float(np.max(np.abs(diff)))
    return dev / scale if scale > 0 else dev


def _symmetrize(entries):
    return 0.5 * (entries + qconj_arr(np.swapaxes(entries, 0, 1)))


def qmatmul(a, b):
    """Product of quaternion matrices given as ``(n, m, 4)`` and ``(m, p, 4)``."""
    return qmul_arr(a[:, :, None, :], b[None, :, :, :]).sum(axis=1)


class QMatrix:
    """Square matrix over the complexified quaternions.

    Parameters
    ----------
    entries : array_like
        Shape ``(n, n, 4)`` quaternion components, or ``(n, n)`` complex
        scalars.
    adjointness : {"self-adjoint", "almost-self-adjoint", "general"}, optional
        Declared structure.  When omitted it is detected: self-adjoint if the
        check passes, general otherwise.
    k : int, optional
        Exceptional index for ``"almost-self-adjoint"``.
    symmetrize : bool
        Replace the entries by ``(M + M^dagger) / 2`` before checking.  Only
        meaningful for self-adjoint matrices.
    tol : float
        Relative tolerance of the self-adjointness check.
    """

    __slots__ = ("_entries", "adjointness", "k")

    def __init__(self, entries, adjointness=None, k=None, symmetrize=False, tol=SA_RTOL):
        e = np.array(entries, dtype=complex)
        if e.ndim == 2:
            e = np.stack([e, np.zeros_like(e), np.zeros_like(e), np.zeros_like(e)], axis=-1)
        if e.ndim != 3 or e.shape[0] != e.shape[1] or e.shape[2] != 4:
            raise ValueError(f"expected shape (n, n, 4), got {e.shape}")
        if symmetrize:
            e = _symmetrize(e)
            adjointness = SELF_ADJOINT if adjointness is None else adjointness
        if adjointness is None:
            adjointness = SELF_ADJOINT if self_adjoint_deviation(e) <= tol else GENERAL
        if adjointness == SELF_ADJOINT:
            dev = self_adjoint_deviation(e)
            if dev > tol:
                raise NotSelfAdjointError(f"matrix is not self-adjoint (deviation {dev:.3g})")
            k = None
        elif adjointness == ALMOST_SELF_ADJOINT:
            if k is None or not 0 <= k < e.shape[0]:
                raise ValueError("almost-self-adjoint matrix needs an exceptional index k")
            dev = self_adjoint_deviation(e, skip=k)
            if dev > tol:
                raise NotSelfAdjointError(
                    f"matrix is not almost self-adjoint at k={k} (deviation {dev:.3g})"
                )
        elif adjointness == GENERAL:
            k = None
        else:
            raise ValueError(f"unknown adjointness {adjointness!r}")
        e.setflags(write=False)
        self._entries = e
        self.adjointness = adjointness
        self.k = k

    # construction helpers

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n, dtype=complex), SELF_ADJOINT)

    @classmethod
    def from_quaternions(cls, rows, **kwargs):
        arr = np.array([[as_qarray(q) for q in row] for row in rows], dtype=complex)
        return cls(arr, **kwargs)

    @classmethod
    def diag(cls, values):
        vals = [as_qarray(v) for v in values]
        n = len(vals)
        e = np.zeros((n, n, 4), dtype=complex)
        for i, v in enumerate(vals):
            e[i, i] = v
        return cls(e)

    # accessors

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, idx) -> Quaternion:
        i, j = idx
        return Quaternion.from_array(self._entries[i, j])

    @property
    def is_self_adjoint(self) -> bool:
        return self.adjointness == SELF_ADJOINT

    def scale(self) -> float:
        return _scale_of(self._entries)

    def dagger(self) -> QMatrix:
        return QMatrix(qconj_arr(np.swapaxes(self._entries, 0, 1)))

    def submatrix(self, idx) -> QMatrix:
        idx = np.asarray(idx, dtype=int)
        adj = SELF_ADJOINT if self.is_self_adjoint else None
        return QMatrix(self._entries[np.ix_(idx, idx)], adj)

    def direct_sum(self, other: QMatrix) -> QMatrix:
        n, m = self.n, other.n
        e = np.zeros((n + m, n + m, 4), dtype=complex)
        e[:n, :n] = self._entries
        e[n:, n:] = other.entries
        adj = SELF_ADJOINT if (self.is_self_adjoint and other.is_self_adjoint) else None
        return QMatrix(e, adj)

    def __matmul__(self, other: QMatrix) -> QMatrix:
        return QMatrix(qmatmul(self._entries, other.entries))

    def __add__(self, other: QMatrix) -> QMatrix:
        return QMatrix(self._entries + other.entries)

    def __sub__(self, other: QMatrix) -> QMatrix:
        return QMatrix(self._entries - other.entries)

    def __mul__(self, c) -> QMatrix:
        if isinstance(c, (int, float, complex, np.number)):
            adj = SELF_ADJOINT if self.is_self_adjoint else None
            return QMatrix(self._entries * c, adj)
        return NotImplemented

    __rmul__ = __mul__

    def allclose(self, other, rtol=1e-10, atol=1e-12) -> bool:
        b = other.entries if isinstance(other, QMatrix) else np.asarray(other)
        scale = max(self.scale(), _scale_of(b))
        return bool(np.max(np.abs(self._entries - b), initial=0.0) <= atol + rtol * scale)

    def __repr__(self):
        k = f", k={self.k}" if self.k is not None else ""
        return f"QMatrix(n={self.n}, {self.adjointness}{k})"

    # serialization

    def to_json(self) -> dict:
        flat = self._entries.reshape(-1, 4)
        if self.adjointness == ALMOST_SELF_ADJOINT:
            adj = f"{ALMOST_SELF_ADJOINT}:{self.k}"
        else:
            adj = self.adjointness
        return {
            "n": self.n,
            "entries": [[[c.real, c.imag] for c in q] for q in flat],
            "adjointness": adj,
        }

    @classmethod
    def from_json(cls, data) -> QMatrix:
        n = int(data["n"])
        raw = np.asarray(data["entries"], dtype=float)
        if raw.shape == (n, n, 4, 2):
            raw = raw.reshape(n * n, 4, 2)
        if raw.shape != (n * n, 4, 2):
            raise ValueError(f"entries must hold {n * n} quaternions")
        e = (raw[..., 0] + 1j * raw[..., 1]).reshape(n, n, 4)
        adj = data.get("adjointness", SELF_ADJOINT)
        k = None
        if adj.startswith(ALMOST_SELF_ADJOINT + ":"):
            adj, k = ALMOST_SELF_ADJOINT, int(adj.split(":", 1)[1])
        return cls(e, adj, k=k)


# ---------------------------------------------------------------------------
# phi lift and psi


def y_matrix(n) -> np.ndarray:
    """Block diagonal of ``n`` copies of ``phi(j) = [[0, -1], [1, 0]]``."""
    return np.kron(np.eye(n), np.array([[0, -1], [1, 0]], dtype=complex))


def phi_lift(M) -> np.ndarray:
    """Replace each quaternion entry by its 2x2 block; returns ``(2n, 2n)``."""
    e = M.entries if isinstance(M, QMatrix) else np.asarray(M)
    n, m = e.shape[:2]
    return phi_arr(e).transpose(0, 2, 1, 3).reshape(2 * n, 2 * m)


def phi_unlift(A) -> np.ndarray:
    """Inverse of :func:`phi_lift` on raw arrays; returns ``(n, m, 4)``."""
    A = np.asarray(A, dtype=complex)
    n, m = A.shape[0] // 2, A.shape[1] // 2
    return phi_inv_arr(A.reshape(n, 2, m, 2).transpose(0, 2, 1, 3))


def _require_self_adjoint(M):
    if not isinstance(M, QMatrix):
        M = QMatrix(M)
    if not M.is_self_adjoint:
        raise NotSelfAdjointError(f"expected a self-adjoint matrix, got {M.adjointness}")
    return M


def psi(M) -> np.ndarray:
    """The skew-symmetric matrix ``-Y_n phi(M)`` of a self-adjoint ``M``."""
    M = _require_self_adjoint(M)
    return -y_matrix(M.n) @ phi_lift(M)


# ---------------------------------------------------------------------------
# Pfaffians


def pfaffian(A, tol=1e-10) -> complex:
    """Pfaffian of a skew-symmetric complex matrix.

    Parlett-Reid reduction to tridiagonal form with largest-magnitude
    pivoting.  ``Pf([[0, 1], [-1, 0]]) == 1``.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("Pfaffian needs a square matrix")
    if n % 2:
        raise ValueError("Pfaffian needs an even dimension")
    if n == 0:
        return 1.0 + 0j
    scale = np.max(np.abs(A))
    if np.max(np.abs(A + A.T)) > tol * max(scale, 1e-300):
        raise ValueError("matrix is not skew-symmetric")

    result = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1 :, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            result = -result
        pivot = A[k + 1, k]
        if pivot == 0:
            return 0j
        result *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            col = A[k + 2 :, k + 1].copy()
            A[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return complex(result)


def pfaffian_cofactor(A) -> complex:
    """Pfaffian by expansion along the first row; ``O((2n-1)!!)``, tests only."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n % 2:
        return 0j
    total = 0j
    rest = np.arange(1, n)
    for pos, j in enumerate(rest):
        if A[0, j] == 0:
            continue
        keep = np.delete(rest, pos)
        sign = -1 if pos % 2 else 1
        total += sign * A[0, j] * pfaffian_cofactor(A[np.ix_(keep, keep)])
    return total


# ---------------------------------------------------------------------------
# quaternion determinants


def _qdet_rec(e, k):
    """Dyson recursion along the exceptional row ``k``; returns a 4-array."""
    n = e.shape[0]
    if n == 1:
        return e[0, 0]
    keep = [i for i in range(n) if i != k]
    total = np.zeros(4, dtype=complex)
    for l in range(n):
        if l == k:
            sub = e[np.ix_(keep, keep)]
            # deleting the exceptional row and column leaves a self-adjoint block
            total = total + qmul_arr(e[k, k], _qdet_rec(sub, n - 2))
        else:
            replaced = e.copy()
            replaced[:, l] = e[:, k]
            sub = replaced[np.ix_(keep, keep)]
            total = total - qmul_arr(e[k, l], _qdet_rec(sub, l if l < k else l - 1))
    return total


def qdet_recursive(M: QMatrix, k=None, cap=RECURSIVE_CAP):
    """Quaternion determinant by Dyson's row recursion.

    For a self-adjoint ``M`` the expansion row ``k`` may be chosen freely
    (default: last row) and a complex number is returned.  For an almost
    self-adjoint ``M`` the expansion runs along its exceptional row and the
    result is a :class:`Quaternion`.
    """
    if not isinstance(M, QMatrix):
        M = QMatrix(M)
    if M.adjointness == GENERAL:
        raise NotSelfAdjointError("recursion needs an (almost) self-adjoint matrix")
    if M.n > cap:
        raise SizeCapError(f"n={M.n} exceeds recursion cap {cap}")
    if M.n == 0:
        return 1.0 + 0j
    if M.is_self_adjoint:
        row = M.n - 1 if k is None else k
        if not 0 <= row < M.n:
            raise IndexError(row)
        return complex(_qdet_rec(M.entries, row)[0])
    if k is not None and k != M.k:
        raise ValueError("almost-self-adjoint matrices expand along their exceptional row")
    return Quaternion.from_array(_qdet_rec(M.entries, M.k))


def _cycles_moore(perm):
    """Cycles of ``perm`` each starting at its largest element, largest first."""
    n = len(perm)
    seen = [False] * n
    cycles = []
    for start in range(n - 1, -1, -1):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        j = perm[start]
        while j != start:
            cyc.append(j)
            seen[j] = True
            j = perm[j]
        cycles.append(cyc)
    return cycles


@functools.lru_cache(maxsize=None)
def _moore_terms(n):
    """Factor index sequences and signs of all permutations of ``n``.

    Row ``p`` of ``rows``/``cols`` lists the entries of the term for the
    ``p``-th permutation in Moore's order.
    """
    rows, cols, signs = [], [], []
    for perm in itertools.permutations(range(n)):
        cycles = _cycles_moore(perm)
        seq = [a for cyc in cycles for a in cyc]
        rows.append(seq)
        cols.append([perm[a] for a in seq])
        signs.append(-1 if (n - len(cycles)) % 2 else 1)
    return np.array(rows), np.array(cols), np.array(signs)


def qdet_moore(M: QMatrix, cap=MOORE_CAP) -> complex:
    """Quaternion determinant by Moore's ordered permutation expansion."""
    M = _require_self_adjoint(M)
    n = M.n
    if n > cap:
        raise SizeCapError(f"n={n} exceeds Moore cap {cap}")
    if n == 0:
        return 1.0 + 0j
    rows, cols, signs = _moore_terms(n)
    e = M.entries
    term = e[rows[:, 0], cols[:, 0]]
    for s in range(1, n):
        term = qmul_arr(term, e[rows[:, s], cols[:, s]])
    return complex(signs @ term[:, 0])


def qdet(M: QMatrix) -> complex:
    """Quaternion determinant of a self-adjoint matrix as ``Pf(psi(M))``."""
    M = _require_self_adjoint(M)
    if M.n == 0:
        return 1.0 + 0j
    A = psi(M)
    A = 0.5 * (A - A.T)
    return pfaffian(A, tol=np.inf)


# ---------------------------------------------------------------------------
# elementary operations


def _congruence(M, A):
    """``A^dagger M A`` as a self-adjoint QMatrix."""
    Ad = qconj_arr(np.swapaxes(A, 0, 1))
    return QMatrix(qmatmul(qmatmul(Ad, M.entries), A), symmetrize=True)


def _check_index(M, *idx):
    for i in idx:
        if not 0 <= i < M.n:
            raise IndexError(f"index {i} out of range for n={M.n}")


def swap(M: QMatrix, i, j) -> QMatrix:
    """Exchange rows ``i, j`` and columns ``i, j``; the qdet is unchanged."""
    M = _require_self_adjoint(M)
    _check_index(M, i, j)
    perm = np.arange(M.n)
    perm[[i, j]] = perm[[j, i]]
    return QMatrix(M.entries[np.ix_(perm, perm)], SELF_ADJOINT)


def scale(M: QMatrix, i, q) -> QMatrix:
    """Right-multiply column ``i`` by ``q`` and left-multiply row ``i`` by
    ``conj(q)``; the qdet picks up the factor ``q conj(q)``."""
    M = _require_self_adjoint(M)
    _check_index(M, i)
    D = np.zeros((M.n, M.n, 4), dtype=complex)
    D[np.arange(M.n), np.arange(M.n), 0] = 1
    D[i, i] = as_qarray(q)
    return _congruence(M, D)


def add_multiple(M: QMatrix, i, j, q) -> QMatrix:
    """Add column ``i`` right-multiplied by ``q`` to column ``j`` and row ``i``
    left-multiplied by ``conj(q)`` to row ``j``; the qdet is unchanged."""
    M = _require_self_adjoint(M)
    _check_index(M, i, j)
    if i == j:
        raise ValueError("add_multiple needs distinct indices")
    A = np.zeros((M.n, M.n, 4), dtype=complex)
    A[np.arange(M.n), np.arange(M.n), 0] = 1
    A[i, j] = as_qarray(q)
    return _congruence(M, A)


def elementary_op(M: QMatrix, op) -> QMatrix:
    """Apply an operation descriptor: ``("swap", i, j)``, ``("scale", i, q)``
    or ``("add", i, j, q)``."""
    kind, *args = op
    if kind == "swap":
        return swap(M, *args)
    if kind == "scale":
        return scale(M, *args)
    if kind in ("add", "add-multiple"):
        return add_multiple(M, *args)
    raise ValueError(f"unknown elementary operation {kind!r}")


# ---------------------------------------------------------------------------
# inverse


def qmat_inverse(M: QMatrix, rtol=1e-12) -> QMatrix:
    """Inverse through the lifted complex matrix.

    Self-adjoint input is declared singular when ``|qdet M|`` falls below
    ``rtol * max|M|^n``; other input when the lifted condition number
    exceeds ``1 / rtol``.
    """
    if not isinstance(M, QMatrix):
        M = QMatrix(M)
    lifted = phi_lift(M)
    if M.is_self_adjoint:
        d = qdet(M)
        if abs(d) <= rtol * M.scale() ** M.n:
            raise SingularMatrixError(f"|qdet| = {abs(d):.3g} is below tolerance")
    elif np.linalg.cond(lifted) > 1 / rtol:
        raise SingularMatrixError("lifted matrix is numerically singular")
    inv = phi_unlift(np.linalg.inv(lifted))
    if M.is_self_adjoint:
        return QMatrix(inv, symmetrize=True)
    return QMatrix(inv)


def random_self_adjoint(n, rng, scale=1.0) -> QMatrix:
    """Random self-adjoint matrix with complex Gaussian components."""
    e = (rng.standard_normal((n, n, 4)) + 1j * rng.standard_normal((n, n, 4))) * scale
    return QMatrix(e, symmetrize=True)
