"""Quaternion correlation kernels on one-dimensional ground spaces.

Every kernel is a callable ``K(x, y)`` returning quaternion components with a
trailing axis of length 4 and broadcasting over ``x`` and ``y``.
:meth:`Kernel.matrix` builds the sample matrix ``[K(x_i, y_j)]`` and
:func:`correlation` evaluates ``rho_k`` as its quaternion determinant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import NotSelfAdjointError, QpfaffError
from .qmatrix import GENERAL, QMatrix, qdet, self_adjoint_deviation

__all__ = [
    "GroundSet",
    "Configuration",
    "Kernel",
    "CSEKernel",
    "Sine4Kernel",
    "ScalarKernel",
    "GridKernel",
    "cse_kernel",
    "sine4_kernel",
    "sine_s",
    "sine_is",
    "sine_ds",
    "correlation",
    "grid_discretize",
    "kernel_from_json",
]


@dataclass(frozen=True)
class GroundSet:
    """Finite discretization of the ground space: points with positive weights."""

    points: np.ndarray
    weights: np.ndarray
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape != w.shape:
            raise ValueError("points and weights differ in length")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("ground-set points must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("ground-set weights must be strictly positive")
        labels = np.arange(pts.size) if self.labels is None else np.asarray(self.labels, dtype=int)
        for name, arr in (("points", pts), ("weights", w), ("labels", labels)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, a, b, n) -> GroundSet:
        """Midpoints of ``n`` equal cells of ``[a, b]`` with the cell length as weight."""
        h = (b - a) / n
        return cls(a + h * (np.arange(n) + 0.5), np.full(n, h))

    def __len__(self):
        return self.points.size

    def index_of(self, x, atol=1e-12) -> int:
        i = int(np.argmin(np.abs(self.points - x)))
        if abs(self.points[i] - x) > atol * max(1.0, abs(x)):
            raise ValueError(f"{x} is not a ground-set point")
        return i

    def subset(self, idx) -> GroundSet:
        idx = np.asarray(idx, dtype=int)
        return GroundSet(self.points[idx], self.weights[idx], self.labels[idx])

    def to_json(self) -> dict:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, data) -> GroundSet:
        if "uniform" in data:
            u = data["uniform"]
            return cls.uniform(float(u["a"]), float(u["b"]), int(u["n"]))
        return cls(data["points"], data["weights"])


@dataclass(frozen=True)
class Configuration:
    """A simple point configuration, as sorted distinct points."""

    points: tuple

    def __post_init__(self):
        pts = tuple(sorted(float(p) for p in self.points))
        if len(set(pts)) != len(pts):
            raise ValueError("configuration has repeated points")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_occupancy(cls, ground: GroundSet, occupancy) -> Configuration:
        occ = np.asarray(occupancy, dtype=bool)
        return cls(tuple(ground.points[occ]))

    def occupancy(self, ground: GroundSet) -> np.ndarray:
        occ = np.zeros(len(ground), dtype=bool)
        for p in self.points:
            occ[ground.index_of(p)] = True
        return occ

    def __len__(self):
        return len(self.points)


def _self_adjoint_matrix(e, tol=1e-10):
    """Check self-adjointness to ``tol``, then remove the rounding residue."""
    dev = self_adjoint_deviation(e)
    if dev > tol:
        raise NotSelfAdjointError(f"kernel sample matrix is not self-adjoint (deviation {dev:.3g})")
    return QMatrix(e, symmetrize=True)


class Kernel:
    """Base class; subclasses implement :meth:`__call__`."""

    def __call__(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def matrix(self, xs, ys=None) -> QMatrix:
        """Sample matrix ``[K(x_i, y_j)]``; self-adjoint when ``ys`` is omitted."""
        xs = np.asarray(xs, dtype=float).reshape(-1)
        same = ys is None
        ys = xs if same else np.asarray(ys, dtype=float).reshape(-1)
        e = self(xs[:, None], ys[None, :])
        if same:
            return _self_adjoint_matrix(e)
        return QMatrix(e, GENERAL)

    def self_adjoint_deviation(self, xs) -> float:
        xs = np.asarray(xs, dtype=float).reshape(-1)
        return self_adjoint_deviation(self(xs[:, None], xs[None, :]))

    def to_json(self) -> dict:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# sine-type special functions


def sine_s(x):
    """``sin(pi x) / (pi x)``."""
    return np.sinc(x)


def sine_is(x):
    """``Is(x) = int_0^x sin(pi t)/(pi t) dt = Si(pi x) / pi``."""
    return special.sici(np.pi * np.asarray(x, dtype=float))[0] / np.pi


_DS_SERIES = [
    (-1) ** n * 2 * n * math.pi ** (2 * n) / math.factorial(2 * n + 1) for n in range(1, 12)
]


def sine_ds(x):
    """Derivative of ``sin(pi x)/(pi x)``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    xs = np.where(small, 1.0, x)
    closed = np.cos(np.pi * xs) / xs - np.sin(np.pi * xs) / (np.pi * xs**2)
    series = sum(c * x ** (2 * n + 1) for n, c in enumerate(_DS_SERIES))
    return np.where(small, series, closed)


def _assemble(q0, q1, q2):
    q0, q1, q2 = np.broadcast_arrays(q0, q1, q2)
    out = np.zeros(q0.shape + (4,), dtype=complex)
    out[..., 0] = q0
    out[..., 1] = q1
    out[..., 2] = q2
    return out


# ---------------------------------------------------------------------------
# CSE


class CSEKernel(Kernel):
    """Circular symplectic ensemble kernel ``sigma_{4,N}(theta1 - theta2)``.

    ``form="sum"`` evaluates the half-integer Fourier sum; ``form="closed"``
    uses ``s_{2N}(theta) = sin(N theta) / (2 pi sin(theta / 2))`` with its
    analytic derivative and a termwise antiderivative.
    """

    def __init__(self, N: int, form: str = "sum"):
        if N < 1:
            raise ValueError("CSE kernel needs N >= 1")
        if form not in ("sum", "closed"):
            raise ValueError(f"unknown CSE form {form!r}")
        self.N = int(N)
        self.form = form
        self._p = np.arange(self.N) + 0.5

    def sigma(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.form == "sum":
            return self._sigma_sum(theta)
        return self._sigma_closed(theta)

    def __call__(self, x, y):
        return self.sigma(np.subtract(x, y))

    def _sigma_sum(self, theta):
        p = self._p
        pt = theta[..., None] * p
        c = np.cos(pt).sum(-1)
        sn = np.sin(pt)
        q1 = (sn * (1j * (p**2 - 1) / (2 * p))).sum(-1)
        q2 = (sn * ((p**2 + 1) / (2 * p))).sum(-1)
        return _assemble(c, q1, q2) / (2 * np.pi)

    def s2n(self, theta):
        theta = np.asarray(theta, dtype=float)
        half = np.sin(theta / 2)
        near = np.abs(half) < 1e-3
        safe = np.where(near, 1.0, half)
        closed = np.sin(self.N * theta) / (2 * np.pi * safe)
        series = np.cos(theta[..., None] * self._p).sum(-1) / np.pi
        return np.where(near, series, closed)

    def ds2n(self, theta):
        theta = np.asarray(theta, dtype=float)
        N = self.N
        half = np.sin(theta / 2)
        near = np.abs(half) < 1e-3
        h = np.where(near, 1.0, half)
        closed = (
            N * np.cos(N * theta) * h - 0.5 * np.sin(N * theta) * np.cos(theta / 2)
        ) / (2 * np.pi * h**2)
        series = -(self._p * np.sin(theta[..., None] * self._p)).sum(-1) / np.pi
        return np.where(near, series, closed)

    def is2n(self, theta):
        theta = np.asarray(theta, dtype=float)
        return (np.sin(theta[..., None] * self._p) / self._p).sum(-1) / np.pi

    def _sigma_closed(self, theta):
        s = self.s2n(theta)
        i_s = self.is2n(theta)
        d_s = self.ds2n(theta)
        return _assemble(2 * s, -1j * (i_s + d_s), i_s - d_s) / 4

    def to_json(self):
        return {"type": "cse", "N": self.N, "form": self.form}


def cse_kernel(N, theta1, theta2, form="sum"):
    """Quaternion value ``sigma_{4,N}(theta1 - theta2)``."""
    from .quaternion import Quaternion

    return Quaternion.from_array(CSEKernel(N, form)(theta1, theta2))


# ---------------------------------------------------------------------------
# Sine_4


class Sine4Kernel(Kernel):
    """Translation-invariant ``Sine_4`` kernel.

    ``form="quarter"`` is ``(1/4)[s - i(Is + Ds) i + (Is - Ds) j]`` with density
    1/4.  ``form="limit"`` is ``(1/4)[2s - i(Is + Ds) i + (Is - Ds) j]``, the
    bulk scaling limit of the CSE kernel at density 1/2.  Only the latter has
    nonnegative two-point correlation and is usable for sampling.
    """

    def __init__(self, form: str = "quarter"):
        if form not in ("quarter", "limit"):
            raise ValueError(f"unknown Sine4 form {form!r}")
        self.form = form

    @property
    def density(self) -> float:
        return 0.25 if self.form == "quarter" else 0.5

    def sigma(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = sine_s(x)
        i_s = sine_is(x)
        d_s = sine_ds(x)
        lead = s if self.form == "quarter" else 2 * s
        return _assemble(lead, -1j * (i_s + d_s), i_s - d_s) / 4

    def __call__(self, x, y):
        return self.sigma(np.subtract(x, y))

    def to_json(self):
        return {"type": "sine4", "form": self.form}


def sine4_kernel(x, y, form="quarter"):
    """Quaternion value ``sigma_4(x - y)``."""
    from .quaternion import Quaternion

    return Quaternion.from_array(Sine4Kernel(form)(x, y))


# ---------------------------------------------------------------------------
# scalar and grid kernels


class ScalarKernel(Kernel):
    """Complex symmetric scalar kernel, from a closed form or a table.

    Parameters
    ----------
    func : callable, optional
        ``func(x, y)`` returning complex values; must satisfy
        ``func(x, y) == func(y, x)``.
    name : str, optional
        Closed form by name; ``"sine"`` is ``sin(pi (x - y)) / (pi (x - y))``.
    points, table : array_like, optional
        Tabulated values ``table[i, j] = K(points[i], points[j])``.
    """

    _NAMED = {"sine": lambda x, y: np.sinc(np.subtract(x, y))}

    def __init__(self, func=None, name=None, points=None, table=None):
        if name is not None:
            if name not in self._NAMED:
                raise ValueError(f"unknown scalar kernel {name!r}")
            func = self._NAMED[name]
        self.name = name
        self.func = func
        if table is not None:
            self.points = np.asarray(points, dtype=float)
            self.table = np.asarray(table, dtype=complex)
            if np.max(np.abs(self.table - self.table.T), initial=0) > 1e-10 * max(
                1.0, np.max(np.abs(self.table))
            ):
                raise ValueError("scalar kernel table must be symmetric")
        else:
            self.points = self.table = None
        if func is None and table is None:
            raise ValueError("scalar kernel needs a function, a name, or a table")

    def _lookup(self, v):
        v = np.asarray(v, dtype=float)
        idx = np.searchsorted(self.points, v)
        idx = np.clip(idx, 0, len(self.points) - 1)
        lower = np.clip(idx - 1, 0, len(self.points) - 1)
        pick = np.where(
            np.abs(self.points[lower] - v) < np.abs(self.points[idx] - v), lower, idx
        )
        if np.any(np.abs(self.points[pick] - v) > 1e-12 * np.maximum(1, np.abs(v))):
            raise ValueError("point not in the kernel table")
        return pick

    def __call__(self, x, y):
        if self.func is not None:
            val = np.asarray(self.func(x, y), dtype=complex)
        else:
            xi, yi = np.broadcast_arrays(self._lookup(x), self._lookup(y))
            val = self.table[xi, yi]
        zero = np.zeros_like(val)
        return np.stack([val, zero, zero, zero], axis=-1)

    def to_json(self):
        if self.name is not None:
            return {"type": "scalar", "name": self.name}
        if self.table is None:
            raise QpfaffError("scalar kernels built from Python callables are not serializable")
        return {
            "type": "scalar",
            "points": self.points.tolist(),
            "table": [[[v.real, v.imag] for v in row] for row in self.table],
        }


class GridKernel(Kernel):
    """Kernel tabulated on a :class:`GroundSet`, weights folded in.

    ``table[i, j] = sqrt(w_i) K(x_i, x_j) sqrt(w_j)``, so principal quaternion
    minors are inclusion probabilities ``P(X contains S)`` of the finite
    process.
    """

    def __init__(self, ground: GroundSet, table):
        if not isinstance(table, QMatrix):
            table = QMatrix(table, symmetrize=True)
        if not table.is_self_adjoint:
            raise ValueError("grid kernel table must be self-adjoint")
        if table.n != len(ground):
            raise ValueError("table size does not match the ground set")
        self.ground = ground
        self.table = table

    @classmethod
    def from_matrix(cls, table, ground: GroundSet | None = None) -> GridKernel:
        """Wrap a raw matrix; the default ground set is ``0..N-1`` with unit weights."""
        if not isinstance(table, QMatrix):
            table = QMatrix(table, symmetrize=True)
        if ground is None:
            ground = GroundSet(np.arange(table.n, dtype=float), np.ones(table.n))
        return cls(ground, table)

    @property
    def n(self) -> int:
        return self.table.n

    @property
    def entries(self) -> np.ndarray:
        return self.table.entries

    def indices(self, pts) -> np.ndarray:
        return np.array([self.ground.index_of(p) for p in np.atleast_1d(pts)], dtype=int)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        xi = self.indices(x.reshape(-1)).reshape(x.shape)
        yi = self.indices(y.reshape(-1)).reshape(y.shape)
        return self.table.entries[xi, yi]

    def submatrix(self, idx) -> QMatrix:
        return self.table.submatrix(idx)

    def matrix(self, xs, ys=None) -> QMatrix:
        xi = self.indices(xs)
        if ys is None:
            return self.table.submatrix(xi)
        yi = self.indices(ys)
        return QMatrix(self.table.entries[np.ix_(xi, yi)], GENERAL)

    def diagonal(self) -> np.ndarray:
        """Scalar parts of the diagonal: one-cell occupation probabilities."""
        return np.diagonal(self.table.entries[..., 0]).copy()

    def to_json(self):
        return {"type": "grid", "ground_set": self.ground.to_json(), "table": self.table.to_json()}


def kernel_from_json(data) -> Kernel:
    kind = data.get("type")
    if kind == "cse":
        return CSEKernel(int(data["N"]), data.get("form", "sum"))
    if kind == "sine4":
        return Sine4Kernel(data.get("form", "quarter"))
    if kind == "scalar":
        if "name" in data:
            return ScalarKernel(name=data["name"])
        tab = np.asarray(data["table"], dtype=float)
        table = tab[..., 0] + 1j * tab[..., 1] if tab.ndim == 3 else tab
        return ScalarKernel(points=data["points"], table=table)
    if kind == "grid":
        return GridKernel(GroundSet.from_json(data["ground_set"]), QMatrix.from_json(data["table"]))
    raise ValueError(f"unknown kernel type {kind!r}")


# ---------------------------------------------------------------------------
# correlation functions and discretization


def correlation(K: Kernel, points, imag_tol=1e-8, return_imag=False):
    """``rho_k(x_1, ..., x_k) = Qdet[K(x_i, x_j)]`` for distinct points.

    Returns the real part; with ``return_imag=True`` the pair
    ``(real, imag)`` so callers can inspect the imaginary residue.
    """
    pts = np.asarray(points, dtype=float).reshape(-1)
    if pts.size == 0:
        raise ValueError("correlation needs at least one point")
    if np.unique(pts).size != pts.size:
        raise ValueError("correlation points must be distinct")
    val = qdet(K.matrix(pts))
    if abs(val.imag) > imag_tol * max(1.0, abs(val.real)):
        warnings.warn(f"rho_{pts.size} has imaginary part {val.imag:.3g}", RuntimeWarning, stacklevel=2)
    if return_imag:
        return val.real, val.imag
    return val.real


def grid_discretize(K: Kernel, G: GroundSet) -> GridKernel:
    """Tabulate ``sqrt(w_i) K(x_i, x_j) sqrt(w_j)`` on ``G``."""
    if np.any(G.weights <= 0):
        raise ValueError("weights must be positive")
    sw = np.sqrt(G.weights)
    e = K(G.points[:, None], G.points[None, :]) * (sw[:, None] * sw[None, :])[..., None]
    return GridKernel(G, _self_adjoint_matrix(e))
