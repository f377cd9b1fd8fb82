"""Kernel transforms: Palm conditioning, multiplicative functionals, and
conditioning on the configuration inside a window.

Analytic kernels are Palm-conditioned lazily through :class:`PalmKernel`.
Grid kernels produce explicit tables.  Operator inverses go through the
lifted ``2N x 2N`` complex matrices, since the lift is an algebra
isomorphism.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DegeneratePalmError,
    ExistenceError,
    NumericalError,
    SingularResolventError,
)
from .kernels import GridKernel, Kernel
from .qmatrix import (
    ALMOST_SELF_ADJOINT,
    QMatrix,
    phi_lift,
    phi_unlift,
    qdet,
    qdet_recursive,
)
from .quaternion import Quaternion, qconj_arr, qmul_arr

__all__ = [
    "PalmKernel",
    "palm_one",
    "palm_many",
    "palm_ratio",
    "palm_grid_table",
    "kg_transform",
    "conditional_kernel",
    "PALM_TOL",
    "COND_LIMIT",
]

PALM_TOL = 1e-12
COND_LIMIT = 1e12
# lifted inverses carry O(cond * eps) asymmetry; beyond this the result is rejected
_SA_ACCEPT = 1e-8
_EPS = np.finfo(float).eps


class PalmKernel(Kernel):
    """``K^{x0}(x, y) = K(x, y) - K(x, x0) K(x0, y) / K(x0, x0)``, evaluated lazily."""

    def __init__(self, base: Kernel, x0: float, tol: float = PALM_TOL):
        self.base = base
        self.x0 = float(x0)
        d = base(self.x0, self.x0)
        self.k00 = d[0]
        scale = max(1.0, float(np.max(np.abs(d))))
        if not self.k00.real > tol * scale:
            raise DegeneratePalmError(
                f"K(x0, x0) = {self.k00:.3g} at x0={self.x0}; Palm measure undefined"
            )

    @property
    def points(self) -> tuple:
        inner = self.base.points if isinstance(self.base, PalmKernel) else ()
        return inner + (self.x0,)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        kxy = self.base(x, y)
        kx0 = self.base(x, self.x0)
        k0y = self.base(self.x0, y)
        return kxy - qmul_arr(kx0, k0y) / self.k00


def palm_grid_table(entries: np.ndarray, i0: int, tol: float = PALM_TOL) -> np.ndarray:
    """One Palm step on a raw grid table at cell ``i0``."""
    d = entries[i0, i0, 0]
    scale = max(1e-300, float(np.max(np.abs(entries))))
    if not d.real > tol * scale:
        raise DegeneratePalmError(f"diagonal at cell {i0} is {d:.3g}; Palm measure undefined")
    corr = qmul_arr(entries[:, i0][:, None, :], entries[i0, :][None, :, :]) / d
    out = entries - corr
    # the conditioned cell is exactly empty under the Palm measure
    out[i0, :] = 0
    out[:, i0] = 0
    return out


def palm_one(K: Kernel, x0, tol: float = PALM_TOL) -> Kernel:
    """Palm kernel at one point.

    For a :class:`GridKernel`, ``x0`` is a ground-set point and the result is
    an explicit table on the same ground set.
    """
    if isinstance(K, GridKernel):
        i0 = K.ground.index_of(x0)
        e = palm_grid_table(np.array(K.entries), i0, tol)
        return GridKernel(K.ground, QMatrix(e, symmetrize=True))
    return PalmKernel(K, x0, tol)


def palm_many(K: Kernel, pts, tol: float = PALM_TOL) -> Kernel:
    """Palm kernel at several points, by iterating :func:`palm_one`."""
    pts = list(np.atleast_1d(np.asarray(pts, dtype=float)))
    if len(set(pts)) != len(pts):
        raise DegeneratePalmError("Palm points must be distinct")
    out = K
    for p in pts:
        out = palm_one(out, p, tol)
    return out


def palm_ratio(K: Kernel, pts, x, y):
    """Palm kernel value as a ratio of quaternion determinants.

    The numerator is the almost self-adjoint matrix whose row points are
    ``(x, x_1, ..., x_m)`` and column points ``(y, x_1, ..., x_m)``, expanded
    along its exceptional first row.  Used as a cross-check on
    :func:`palm_many`.
    """
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    rows = np.concatenate([[x], pts])
    cols = np.concatenate([[y], pts])
    e = K(rows[:, None], cols[None, :])
    num = qdet_recursive(QMatrix(e, ALMOST_SELF_ADJOINT, k=0))
    den = qdet(K.matrix(pts))
    return Quaternion.from_array(num.to_array() / den)


# ---------------------------------------------------------------------------
# multiplicative functionals


def _as_grid(T) -> GridKernel:
    if isinstance(T, GridKernel):
        return T
    return GridKernel.from_matrix(T)


def _lifted_diag(v):
    return np.repeat(np.asarray(v), 2)


def _finish(entries, label, cond=1.0, ref_scale=0.0):
    """Accept a lifted-inverse result if its asymmetry is at rounding level.

    The asymmetry is measured against the larger of the result and input
    scales, since rounding errors come from the input.
    """
    diff = entries - qconj_arr(np.swapaxes(entries, 0, 1))
    scale = max(float(np.max(np.abs(entries), initial=0.0)), ref_scale)
    dev = float(np.max(np.abs(diff), initial=0.0)) / scale if scale > 0 else 0.0
    if dev > max(_SA_ACCEPT, 100 * cond * _EPS):
        raise NumericalError(f"{label} lost self-adjointness (deviation {dev:.3g})")
    return QMatrix(entries, symmetrize=True)


def kg_transform(T, g, cond_limit: float = COND_LIMIT, return_raw: bool = False):
    """``K^g = sqrt(g) K (1 + (g - 1) K)^{-1} sqrt(g)`` on a grid.

    Parameters
    ----------
    T : GridKernel or QMatrix
    g : array_like
        Nonnegative values, one per cell.
    return_raw : bool
        Also return the unsymmetrized table, for self-adjointness audits.
    """
    T = _as_grid(T)
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.size != T.n:
        raise ValueError("g must have one value per cell")
    if np.any(g < 0):
        raise ValueError("g must be nonnegative")
    if np.all(g == 1):
        # exact: the lift round trip would perturb the last bits
        return (T, np.array(T.entries)) if return_raw else T
    phi_k = phi_lift(T.table)
    gl = _lifted_diag(g)
    A = np.eye(2 * T.n) + (gl - 1)[:, None] * phi_k
    c = np.linalg.cond(A)
    if not c <= cond_limit:
        raise ExistenceError(f"1 + (g - 1) K is not invertible (condition number {c:.3g})")
    # phi(K) A^{-1} via A^T X^T = phi(K)^T
    right = np.linalg.solve(A.T, phi_k.T).T
    sg = np.sqrt(gl)
    raw = phi_unlift(sg[:, None] * right * sg[None, :])
    out = GridKernel(T.ground, _finish(raw, "K^g", c, T.table.scale()))
    return (out, raw) if return_raw else out


def conditional_kernel(T, B, occupied=(), cond_limit: float = COND_LIMIT, return_raw: bool = False):
    """Kernel of the process on the complement of ``B`` given ``X cap B``.

    Parameters
    ----------
    T : GridKernel or QMatrix
    B : sequence of int
        Cell indices of the conditioning window.
    occupied : sequence of int
        The occupied cells, a subset of ``B``.

    Returns
    -------
    GridKernel
        Table on the complement cells, in increasing index order; the
        ground set keeps the original cell labels.
    """
    T = _as_grid(T)
    n = T.n
    B = sorted({int(b) for b in B})
    occupied = sorted({int(o) for o in occupied})
    if any(not 0 <= b < n for b in B):
        raise IndexError("window index out of range")
    if not set(occupied) <= set(B):
        raise ValueError("occupied cells must lie in the window")
    comp = [i for i in range(n) if i not in set(B)]
    e = np.array(T.entries)
    for i0 in occupied:
        e = palm_grid_table(e, i0)
    chi_b = np.zeros(n)
    chi_b[B] = 1.0
    phi_k = phi_lift(e)
    R = np.eye(2 * n) - _lifted_diag(chi_b)[:, None] * phi_k
    c = np.linalg.cond(R)
    if not c <= cond_limit:
        raise SingularResolventError(
            f"1 - chi_B K is not invertible (condition number {c:.3g})"
        )
    full = np.linalg.solve(R.T, phi_k.T).T
    lifted_comp = np.repeat(2 * np.asarray(comp, dtype=int), 2)
    lifted_comp[1::2] += 1
    raw = phi_unlift(full[np.ix_(lifted_comp, lifted_comp)])
    table = _finish(raw, "conditional kernel", c, T.table.scale()) if comp else QMatrix(np.zeros((0, 0, 4)))
    out = GridKernel(T.ground.subset(comp), table)
    return (out, raw) if return_raw else out
