"""Numerical identity suite.

Each check draws random instances from a seeded generator, measures the
worst residual of an identity and compares it with a tolerance.  The CLI
``verify`` subcommand and the acceptance tests both run these checks.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NumericalError
from .fredholm import expectation_multiplicative, fredholm_series, fredholm_signed
from .kernels import CSEKernel, GridKernel, GroundSet, Sine4Kernel, correlation, grid_discretize
from .qmatrix import (
    ALMOST_SELF_ADJOINT,
    QMatrix,
    add_multiple,
    phi_lift,
    qdet,
    qmatmul,
    qdet_moore,
    qdet_recursive,
    random_self_adjoint,
    scale,
    swap,
)
from .quaternion import Quaternion, qconj_arr
from .sampler import (
    atom_oracle,
    cells_of,
    chain_probabilities,
    conditional_oracle,
    gap_probability,
    inclusion_probabilities,
    sequential_sample,
)
from .transforms import conditional_kernel, kg_transform, palm_many, palm_ratio

__all__ = [
    "CheckResult",
    "CHECKS",
    "run_suite",
    "projection_kernel",
    "dilute_sine4",
    "dilute_cse",
    "separated_points",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return (f"{status} {self.name}: residual {self.residual:.3g} "
                f"<= {self.tolerance:.0e}, {self.seconds:.2f} s{extra}")

    def to_json(self) -> dict:
        return asdict(self)


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    den = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    if den == 0.0:
        return 0.0
    return float(np.max(np.abs(a - b))) / den


def _result(name, residual, tol, t0, detail="", time_limit=None):
    secs = time.perf_counter() - t0
    ok = residual <= tol
    if time_limit is not None:
        ok = ok and secs < time_limit
        detail = (detail + "; " if detail else "") + f"time limit {time_limit:g} s"
    return CheckResult(name, bool(ok), float(residual), tol, secs, detail)


# ---------------------------------------------------------------------------
# test kernels


def projection_kernel(n, rank, rng) -> GridKernel:
    """Real symmetric rank-``rank`` projection on ``n`` cells (a valid determinantal process)."""
    q, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    return GridKernel.from_matrix(q @ q.T)


def dilute_sine4(n, weight=0.4, spacing=1.0) -> GridKernel:
    """Bulk ``Sine_4`` on ``n`` equally spaced cells, scaled down to stay valid."""
    G = GroundSet(np.arange(n) * spacing, np.full(n, weight))
    return grid_discretize(Sine4Kernel("limit"), G)


def dilute_cse(n, N=6, weight=0.3) -> GridKernel:
    G = GroundSet(np.linspace(-np.pi, np.pi, n + 1)[1:], np.full(n, weight))
    return grid_discretize(CSEKernel(N), G)


def separated_points(rng, k, lo, hi, gap):
    """``k`` uniform points in ``[lo, hi]`` with pairwise distance at least ``gap``."""
    for _ in range(10_000):
        pts = rng.uniform(lo, hi, k)
        if k < 2 or np.min(np.diff(np.sort(pts))) >= gap:
            return pts
    raise RuntimeError("could not place separated points")


# ---------------------------------------------------------------------------
# checks


def check_routes(seed=0, count=200, sizes=range(1, 7)):
    """Recursion, Moore expansion and Pfaffian agree."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in sizes:
        for _ in range(count):
            M = random_self_adjoint(n, rng)
            p = qdet(M)
            worst = max(worst, _rel(qdet_recursive(M), p), _rel(qdet_moore(M), p))
    return _result("determinant routes", worst, 1e-9, t0, time_limit=30)


def check_squared(seed=0, count=50, nmax=8):
    """``qdet(M)^2 = det(phi(M))``."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(1, nmax + 1):
        for _ in range(count):
            M = random_self_adjoint(n, rng)
            worst = max(worst, _rel(qdet(M) ** 2, np.linalg.det(phi_lift(M))))
    return _result("squared identity", worst, 1e-8, t0)


def _random_q(rng):
    return Quaternion.from_array(rng.standard_normal(4) + 1j * rng.standard_normal(4))


def _almost(rng, n, k, row=None):
    e = np.array(random_self_adjoint(n, rng).entries)
    if row is None:
        row = rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
    e[k] = row
    return e


def check_dyson(seed=0, count=100):
    """Row independence, vanishing on repeated rows, row additivity,
    elementary-operation rules and block multiplicativity."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    parts = {}

    w = 0.0
    for _ in range(count):
        M = random_self_adjoint(int(rng.integers(2, 7)), rng)
        ref = qdet(M)
        w = max(w, max(_rel(qdet_recursive(M, k), ref) for k in range(M.n)))
    parts["row-independence"] = w

    w = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 7))
        N = random_self_adjoint(n - 1, rng)
        i = int(rng.integers(0, n - 1))
        # duplicate index i: E maps n coordinates onto n - 1
        E = np.zeros((n - 1, n, 4), dtype=complex)
        E[np.arange(n - 1), np.arange(n - 1), 0] = 1
        E[i, n - 1, 0] = 1
        e = qmatmul(qmatmul(qconj_arr(np.swapaxes(E, 0, 1)), N.entries), E)
        M = QMatrix(e, symmetrize=True)
        w = max(w, abs(qdet(M)) / max(1.0, M.scale()) ** n)
    parts["identical-rows"] = w

    w = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(0, n))
        base = _almost(rng, n, k)
        r1 = rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
        r2 = rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
        vals = []
        for row in (r1, r2, r1 + r2):
            e = base.copy()
            e[k] = row
            vals.append(qdet_recursive(QMatrix(e, ALMOST_SELF_ADJOINT, k=k)).to_array())
        w = max(w, _rel(vals[0] + vals[1], vals[2]))
    parts["row-additivity"] = w

    w = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 7))
        M = random_self_adjoint(n, rng)
        ref = qdet(M)
        i, j = (int(v) for v in rng.choice(n, 2, replace=False))
        q = _random_q(rng)
        w = max(
            w,
            _rel(qdet(swap(M, i, j)), ref),
            _rel(qdet(scale(M, i, q)), complex(q.norm2()) * ref),
            _rel(qdet(add_multiple(M, i, j, q)), ref),
        )
    parts["elementary-ops"] = w

    w = 0.0
    for _ in range(count):
        A = random_self_adjoint(int(rng.integers(1, 5)), rng)
        B = random_self_adjoint(int(rng.integers(1, 5)), rng)
        w = max(w, _rel(qdet(A.direct_sum(B)), qdet(A) * qdet(B)))
    parts["block"] = w

    worst = max(parts.values())
    detail = ", ".join(f"{k} {v:.2g}" for k, v in parts.items())
    return _result("Dyson properties", worst, 1e-9, t0, detail)


def _palm_kernels():
    # points at least 0.6 mean spacings apart: closer tuples have correlations
    # far below the entry scale and lose relative accuracy to cancellation
    return [
        ("CSE N=6", CSEKernel(6), (-2.8, 2.8), 0.6),
        ("Sine4", Sine4Kernel("limit"), (0.0, 12.0), 1.2),
    ]


def check_palm(seed=0, trials=10):
    """Palm product rule, ratio formula and order invariance."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    prod = ratio = order = 0.0
    for _, K, (lo, hi), gap in _palm_kernels():
        for m in range(1, 4):
            for n in range(1, 4):
                for _ in range(trials):
                    pts = separated_points(rng, m + n, lo, hi, gap)
                    x, y = pts[:m], pts[m:]
                    Kx = palm_many(K, x)
                    lhs = qdet(K.matrix(pts))
                    rhs = qdet(K.matrix(x)) * qdet(Kx.matrix(y))
                    prod = max(prod, _rel(lhs, rhs))
                    # ratio formula for one entry, diagonal and off-diagonal
                    for a, b in ((y[0], y[-1]), (y[0], y[0])):
                        ratio = max(ratio, _rel(palm_ratio(K, x, a, b).to_array(), Kx(a, b)))
                    ref = Kx.matrix(y).entries
                    for perm in itertools.permutations(range(m)):
                        other = palm_many(K, x[list(perm)]).matrix(y).entries
                        order = max(order, float(np.max(np.abs(other - ref))))
    worst_rel = max(prod, ratio)
    detail = f"product {prod:.2g}, ratio {ratio:.2g}, order {order:.2g}"
    ok = worst_rel <= 1e-8 and order <= 1e-10
    res = _result("Palm identities", worst_rel, 1e-8, t0, detail)
    res.passed = bool(ok)
    return res


def check_factorization(seed=0, trials=20, n=8):
    """Three-term factorization of multiplicative functionals."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    kernels = [projection_kernel(n, 3, rng), dilute_sine4(n), dilute_cse(n)]
    worst = 0.0
    exact = True
    for T in kernels:
        exact &= bool(np.array_equal(kg_transform(T, np.ones(n)).entries, T.entries))
        for _ in range(trials):
            g = rng.uniform(0, 2, n)
            h = rng.uniform(0, 2, n)
            lhs = expectation_multiplicative(T, g * h)
            rhs = expectation_multiplicative(kg_transform(T, g), h) * expectation_multiplicative(T, g)
            worst = max(worst, _rel(lhs, rhs))
    res = _result("multiplicative factorization", worst, 1e-8, t0,
                  f"g=1 exact: {'yes' if exact else 'no'}")
    res.passed = bool(res.passed and exact)
    return res


def check_fredholm(seed=0, count=20, nmax=10):
    """Subset series and sign-tracked square root agree."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(1, nmax + 1):
        for _ in range(count):
            T = random_self_adjoint(n, rng, scale=0.5)
            worst = max(worst, _rel(fredholm_series(T), fredholm_signed(T).value))
    zero = fredholm_signed(QMatrix(np.zeros((5, 5, 4)))).value == 1.0
    res = _result("Fredholm routes", worst, 1e-9, t0,
                  f"T=0 gives 1: {'yes' if zero else 'no'}", time_limit=60)
    res.passed = bool(res.passed and zero)
    return res


def _oracle_kernels(seed, sizes):
    rng = np.random.default_rng(seed)
    out = []
    for n in sizes:
        out.append((f"projection N={n}", projection_kernel(n, max(1, n // 3), rng)))
    out.append(("Sine4 N=8", dilute_sine4(8)))
    return out


def check_conditional(seed=0, sizes=(6, 8, 10), max_window=3, atol=1e-10):
    """Conditional kernel against the conditional oracle."""
    t0 = time.perf_counter()
    worst = 0.0
    conditions = 0
    for _, T in _oracle_kernels(seed, sizes):
        atoms = atom_oracle(T)
        for r in range(max_window + 1):
            for B in itertools.combinations(range(T.n), r):
                for k in range(r + 1):
                    for occ in itertools.combinations(B, k):
                        try:
                            cond = conditional_oracle(atoms, B, occ, atol=atol)
                        except NumericalError:
                            continue
                        pred = inclusion_probabilities(conditional_kernel(T, B, occ))
                        worst = max(worst, float(np.max(np.abs(cond.inclusion() - pred))))
                        conditions += 1
    return _result("conditional kernels", worst, 1e-8, t0, f"{conditions} conditions")


def check_gap(seed=0, sizes=(8, 10)):
    """Gap probabilities from the oracle and from Fredholm determinants."""
    t0 = time.perf_counter()
    worst = 0.0
    for _, T in _oracle_kernels(seed, sizes):
        atoms = atom_oracle(T)
        for W in range(1, 1 << T.n):
            cells = cells_of(W)
            g = np.ones(T.n)
            g[cells] = 0
            e = expectation_multiplicative(T, g)
            worst = max(worst, abs(e - gap_probability(atoms, cells)))
    return _result("gap probabilities", worst, 1e-8, t0)


def check_sampler(seed=0, count=200_000, n=8):
    """Chain consistency and empirical total variation."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    chain = 0.0
    for T in (projection_kernel(n, 3, rng), dilute_sine4(n)):
        chain = max(chain, float(np.max(np.abs(chain_probabilities(T) - atom_oracle(T).probs))))
    P = projection_kernel(n, 3, rng)
    atoms = atom_oracle(P)
    batch = sequential_sample(P, seed, count)
    tv = batch.empirical().total_variation(atoms)
    support = set(int(m) for m in np.unique(batch.masks())) <= atoms.support()
    res = _result("sampler", chain, 1e-9, t0,
                  f"TV {tv:.4f} with {count} samples, support ok: {'yes' if support else 'no'}",
                  time_limit=120)
    res.passed = bool(res.passed and tv <= 0.01 and support)
    return res


def check_kernel_values(seed=0):
    """One-point densities and the two CSE forms."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-20, 20, 25)
    sine = max(abs(correlation(Sine4Kernel(), [x]) - 0.25) for x in xs)
    cse = 0.0
    for N in range(1, 9):
        for form in ("sum", "closed"):
            K = CSEKernel(N, form)
            cse = max(cse, max(abs(correlation(K, [t]) - N / (2 * np.pi))
                               for t in rng.uniform(-np.pi, np.pi, 10)))
    grid = np.linspace(-np.pi, np.pi, 51)[1:]
    forms = 0.0
    for N in (1, 2, 6, 12):
        a = CSEKernel(N, "sum")(grid[:, None], grid[None, :])
        b = CSEKernel(N, "closed")(grid[:, None], grid[None, :])
        forms = max(forms, float(np.max(np.abs(a - b))))
    ok = sine <= 1e-12 and cse <= 1e-10 and forms <= 1e-9
    res = _result("kernel values", max(sine, cse, forms), 1e-9, t0,
                  f"Sine4 rho1 {sine:.2g}, CSE rho1 {cse:.2g}, forms {forms:.2g}")
    res.passed = bool(ok)
    return res


CHECKS = {
    "routes": check_routes,
    "squared": check_squared,
    "dyson": check_dyson,
    "palm": check_palm,
    "factorization": check_factorization,
    "fredholm": check_fredholm,
    "conditional": check_conditional,
    "gap": check_gap,
    "sampler": check_sampler,
    "kernel-values": check_kernel_values,
}

_QUICK = {
    "routes": {"count": 20},
    "squared": {"count": 10},
    "dyson": {"count": 20},
    "palm": {"trials": 2},
    "factorization": {"trials": 5},
    "fredholm": {"count": 3, "nmax": 8},
    "conditional": {"sizes": (6,), "max_window": 2},
    "gap": {"sizes": (6,)},
    "sampler": {"count": 100_000, "n": 6},
    "kernel-values": {},
}


def run_suite(seed=0, quick=False, only=None):
    """Run the checks in order; returns a list of :class:`CheckResult`."""
    names = list(CHECKS) if only is None else list(only)
    out = []
    for name in names:
        kwargs = dict(_QUICK[name]) if quick else {}
        try:
            out.append(CHECKS[name](seed=seed, **kwargs))
        except NumericalError as exc:
            out.append(CheckResult(name, False, float("nan"), float("nan"), 0.0, str(exc)))
    return out
