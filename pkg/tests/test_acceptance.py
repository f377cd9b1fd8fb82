"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints one ``PASS``/``FAIL`` line.  Run directly with
``python3 tests/test_acceptance.py`` for the lines alone.
"""

import sys

import pytest

from qpfaff import verify

# (number, description, check name, keyword arguments at full scale)
CRITERIA = [
    (1, "determinant routes agree, n=1..6, 200 each, 1e-9, < 30 s", "routes",
     {"count": 200, "sizes": range(1, 7)}),
    (2, "qdet(M)^2 = det(phi(M)), n <= 8, 1e-8", "squared", {"count": 50, "nmax": 8}),
    (3, "Dyson properties, >= 100 instances each, 1e-9", "dyson", {"count": 100}),
    (4, "Palm product and ratio identities 1e-8, order invariance 1e-10", "palm", {"trials": 10}),
    (5, "multiplicative factorization N=8, 1e-8; g=1 exact", "factorization", {"trials": 20, "n": 8}),
    (6, "Fredholm series = sign-tracked root, N <= 10, 1e-9, < 60 s", "fredholm",
     {"count": 20, "nmax": 10}),
    (7, "conditional kernel vs oracle, N <= 10, |B| <= 3, 1e-8", "conditional",
     {"sizes": (6, 8, 10), "max_window": 3}),
    (8, "gap probabilities, all windows, N <= 10, 1e-8", "gap", {"sizes": (8, 10)}),
    (9, "chain consistency 1e-9; TV <= 0.01 at 200k samples, < 2 min", "sampler",
     {"count": 200_000, "n": 8}),
    (10, "Sine4 rho1 = 1/4, CSE rho1 = N/2pi, CSE forms agree", "kernel-values", {}),
]


def run_criterion(number, description, name, kwargs, seed=0):
    res = verify.CHECKS[name](seed=seed, **kwargs)
    status = "PASS" if res.passed else "FAIL"
    line = (f"criterion {number:2d} {status}: {description} | residual {res.residual:.3g}, "
            f"{res.seconds:.1f} s" + (f" | {res.detail}" if res.detail else ""))
    return res, line


@pytest.mark.parametrize("number,description,name,kwargs", CRITERIA, ids=[c[2] for c in CRITERIA])
def test_criterion(number, description, name, kwargs, capsys):
    res, line = run_criterion(number, description, name, kwargs)
    with capsys.disabled():
        print("\n" + line)
    assert res.passed, line


if __name__ == "__main__":
    ok = True
    for crit in CRITERIA:
        res, line = run_criterion(*crit)
        print(line, flush=True)
        ok &= res.passed
    sys.exit(0 if ok else 1)
