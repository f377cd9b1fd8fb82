"""Fredholm quaternion determinants ``Qdet(1 + T)`` on finite grids.

Two routes:

* :func:`fredholm_series` sums ``qdet(T_S)`` over all subsets ``S`` of the
  grid, exponential cost, used as an oracle;
* :func:`fredholm_signed` takes the square root of ``d(z) = det(1 + z phi(T))``
  and fixes its branch by continuation from ``d(0) = 1`` along a path in the
  ``z``-plane.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import SingularPathError, SizeCapError
from .kernels import GridKernel
from .qmatrix import QMatrix, phi_lift, pfaffian, psi

__all__ = [
    "FredholmResult",
    "fredholm_series",
    "fredholm_signed",
    "fredholm_pfaffian",
    "expectation_multiplicative",
    "log_det",
    "SERIES_CAP",
]

SERIES_CAP = 14
INITIAL_STEPS = 32
MAX_STEPS = 2**14
# bulge heights of the continuation paths tried in turn
_ARC_HEIGHTS = (0.5, -0.5, 0.3, -0.3, 0.8, -0.8)
# |d(1)| below 1e-24 of the path maximum: |Qdet| is below 1e-12 of its scale
_VANISHING_LOG = math.log(1e-24)


@dataclass(frozen=True)
class FredholmResult:
    value: complex
    route: str
    steps: int
    residual: float

    def to_json(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "route": self.route,
            "steps": self.steps,
            "residual": self.residual,
        }


def _table(T) -> QMatrix:
    if isinstance(T, GridKernel):
        return T.table
    if isinstance(T, QMatrix):
        return T
    return QMatrix(T, symmetrize=True)


def fredholm_series(T) -> complex:
    """``sum_S qdet(T_S)`` over all subsets, the empty one contributing 1."""
    M = _table(T)
    n = M.n
    if n > SERIES_CAP:
        raise SizeCapError(f"series route is capped at N={SERIES_CAP}, got {n}")
    if n == 0:
        return 1.0 + 0j
    full = psi(M)
    full = 0.5 * (full - full.T)
    total = 1.0 + 0j
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        lifted = [2 * i + b for i in idx for b in (0, 1)]
        total += pfaffian(full[np.ix_(lifted, lifted)], tol=np.inf)
    return total


def fredholm_pfaffian(T) -> complex:
    """``Pf(psi(1 + T))`` directly; a third route for cross-checks."""
    M = _table(T)
    A = psi(QMatrix(M.entries + QMatrix.identity(M.n).entries, symmetrize=True))
    return pfaffian(0.5 * (A - A.T), tol=np.inf)


def log_det(A):
    """``(log|det A|, arg det A)`` from an LU factorization with partial pivoting."""
    with warnings.catch_warnings():
        # an exactly zero pivot is reported through the return value
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=False)
    u = np.diagonal(lu)
    if np.any(u == 0):
        return -math.inf, 0.0
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    arg = float(np.sum(np.angle(u))) + (math.pi if swaps % 2 else 0.0)
    return float(np.sum(np.log(np.abs(u)))), arg


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def _subtended(za, zb, zeros):
    """Total angle under which the chord ``[za, zb]`` is seen from the zeros."""
    if zeros.size == 0:
        return 0.0
    ang = np.angle((zb - zeros) / (za - zeros))
    return float(np.sum(np.abs(ang)))


def _continue_sqrt(phi_t, height, max_steps, zeros):
    """Track ``sqrt(det(1 + z phi_t))`` along ``z(t) = t + i height sin(pi t)``.

    ``zeros`` are the zeros of ``d``.  A step is accepted when the chord
    between its ends is seen from the zeros under a total angle of at most
    ``pi / 2``; that bounds the true phase change of ``d`` on the chord, so
    the wrapped phase difference of the two LU determinants is exact.

    Returns ``(log_abs_d1, total_phase, steps)`` or ``None`` when the step
    budget runs out.  A step into ``t = 1`` is accepted unrefined when
    ``|d(1)|`` is at rounding level relative to the largest ``|d|`` seen,
    because then both branches of the root agree to within that level.
    """
    eye = np.eye(phi_t.shape[0])

    def z_of(t):
        return complex(t, height * math.sin(math.pi * t))

    def at(t):
        return log_det(eye + z_of(t) * phi_t)

    steps = 0
    phase = 0.0
    t_prev, (la, aa) = 0.0, at(0.0)
    l_max = la
    stack = [k / INITIAL_STEPS for k in range(INITIAL_STEPS, 0, -1)]
    while stack:
        t_next = stack[-1]
        lb, ab = at(t_next)
        l_max = max(l_max, la)
        vanishing_end = t_next == 1.0 and lb < l_max + _VANISHING_LOG
        swept = _subtended(z_of(t_prev), z_of(t_next), zeros)
        if not (swept <= math.pi / 2 or vanishing_end):
            if steps + len(stack) >= max_steps:
                return None
            stack.append(0.5 * (t_prev + t_next))
            continue
        stack.pop()
        phase += _wrap(ab - aa)
        t_prev, la, aa = t_next, lb, ab
        steps += 1
    return la, phase, steps


def fredholm_signed(T, max_steps: int = MAX_STEPS) -> FredholmResult:
    """``Qdet(1 + T)`` as the continued square root of ``det(1 + phi(T))``.

    ``d(z) = det(1 + z phi(T))`` is the square of the entire function
    ``Qdet(1 + z T)``, so continuation along any zero-free path from
    ``z = 0`` gives the correct branch.  Paths are arcs through the upper
    and lower half planes; the real segment is avoided because a simple
    zero of ``Qdet`` on it is a double zero of ``d`` that leaves no trace in
    the phase.  The zeros of ``d`` are located once from the eigenvalues of
    ``phi(T)`` and used only to size the steps.
    """
    M = _table(T)
    n = M.n
    if n == 0:
        return FredholmResult(1.0 + 0j, "sign-tracked-sqrt", 0, 0.0)
    phi_t = phi_lift(M)
    if not np.any(phi_t):
        return FredholmResult(1.0 + 0j, "sign-tracked-sqrt", 0, 0.0)
    l1, a1 = log_det(np.eye(2 * n) + phi_t)
    if not math.isfinite(l1):
        return FredholmResult(0j, "sign-tracked-sqrt", 0, 0.0)
    d1 = cmath.exp(complex(l1, a1))
    lam = np.linalg.eigvals(phi_t)
    lam = lam[np.abs(lam) > 1e-300]
    zeros = -1.0 / lam
    for height in _ARC_HEIGHTS:
        res = _continue_sqrt(phi_t, height, max_steps, zeros)
        if res is None:
            continue
        la, phase, steps = res
        value = cmath.exp(complex(0.5 * la, 0.5 * phase))
        residual = abs(value * value - d1)
        return FredholmResult(value, "sign-tracked-sqrt", steps, residual)
    raise SingularPathError("square-root continuation did not converge on any path")


def expectation_multiplicative(T, g) -> complex:
    """``E[prod_{x in X} g(x)] = Qdet(1 + sqrt(g - 1) T sqrt(g - 1))``.

    ``g`` is a bounded complex function given by its values on the grid.  The
    principal square root is used; the result does not depend on the branch.
    """
    M = _table(T)
    g = np.asarray(g, dtype=complex).reshape(-1)
    if g.size != M.n:
        raise ValueError("g must have one value per cell")
    if not np.all(np.isfinite(g)):
        raise ValueError("g must be bounded")
    r = np.sqrt(g - 1)
    e = r[:, None, None] * M.entries * r[None, :, None]
    return fredholm_signed(QMatrix(e, symmetrize=True)).value
