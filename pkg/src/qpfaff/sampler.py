"""Exact machinery for Pfaffian processes on a finite grid.

Configurations are bit masks over the ``N`` cells, bit ``i`` for cell ``i``.
The atom oracle turns inclusion probabilities ``P(X contains S) = qdet T_S``
into atoms ``P(X = S)`` by Moebius inversion; the sequential sampler decides
cells left to right using the diagonal of the conditional kernel given the
cells already decided.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidKernelError, NumericalError, SizeCapError, ZeroProbabilityError
from .kernels import GridKernel
from .qmatrix import pfaffian, psi
from .transforms import conditional_kernel

__all__ = [
    "AtomTable",
    "SampleBatch",
    "ORACLE_CAP",
    "inclusion_probabilities",
    "atom_oracle",
    "conditional_oracle",
    "gap_probability",
    "step_probability",
    "chain_probabilities",
    "sequential_sample",
    "kernel_hash",
    "mask_of",
    "cells_of",
]

ORACLE_CAP = 14
NEG_TOL = 1e-9
SUM_TOL = 1e-8
CLAMP = 1e-9
ZERO_MASS = 1e-13


def mask_of(cells) -> int:
    m = 0
    for c in cells:
        m |= 1 << int(c)
    return m


def cells_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _grid(T) -> GridKernel:
    if isinstance(T, GridKernel):
        return T
    return GridKernel.from_matrix(T)


@dataclass(frozen=True)
class AtomTable:
    """``probs[mask] = P(X = S)`` for every subset ``S`` of ``n`` cells.

    ``labels`` are the cell labels of the underlying ground set; a
    conditional table on a complement keeps the original labels.
    """

    n: int
    probs: np.ndarray
    labels: tuple = field(default=None)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (1 << self.n,):
            raise ValueError("atom table needs 2**n entries")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(self.n)))

    def __getitem__(self, cells) -> float:
        return float(self.probs[mask_of(cells)])

    def inclusion(self) -> np.ndarray:
        """``P(X contains S)`` for every mask (superset sums)."""
        q = np.array(self.probs)
        for i in range(self.n):
            bit = 1 << i
            idx = np.arange(q.size)
            lo = idx[(idx & bit) == 0]
            q[lo] += q[lo | bit]
        return q

    def expected_count(self) -> float:
        sizes = np.array([bin(m).count("1") for m in range(self.probs.size)])
        return float(self.probs @ sizes)

    def support(self, atol=1e-12) -> set:
        return {int(m) for m in np.nonzero(self.probs > atol)[0]}

    def total_variation(self, other) -> float:
        q = other.probs if isinstance(other, AtomTable) else np.asarray(other)
        return 0.5 * float(np.abs(self.probs - q).sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("configuration,probability\n")
        for m, p in enumerate(self.probs):
            bits = "".join("1" if m >> i & 1 else "0" for i in range(self.n))
            buf.write(f"{bits},{p:.15g}\n")
        return buf.getvalue()


def inclusion_probabilities(T) -> np.ndarray:
    """``qdet`` of every principal submatrix, indexed by mask."""
    T = _grid(T)
    n = T.n
    if n > ORACLE_CAP:
        raise SizeCapError(f"oracle is capped at N={ORACLE_CAP}, got {n}")
    full = psi(T.table)
    full = 0.5 * (full - full.T)
    out = np.empty(1 << n, dtype=complex)
    out[0] = 1.0
    for mask in range(1, 1 << n):
        lifted = [2 * i + b for i in cells_of(mask) for b in (0, 1)]
        out[mask] = pfaffian(full[np.ix_(lifted, lifted)], tol=np.inf)
    return out


def _moebius_superset(q):
    """Invert superset sums: ``p[S] = sum_{U >= S} (-1)^{|U - S|} q[U]``."""
    p = np.array(q)
    n = int(p.size).bit_length() - 1
    idx = np.arange(p.size)
    for i in range(n):
        bit = 1 << i
        lo = idx[(idx & bit) == 0]
        p[lo] -= p[lo | bit]
    return p


def _validate(probs, labels, imag_max):
    worst = int(np.argmin(probs))
    if probs[worst] < -NEG_TOL:
        raise InvalidKernelError(
            f"negative atom {probs[worst]:.3g} at cells {[labels[c] for c in cells_of(worst)]}",
            subset=[labels[c] for c in cells_of(worst)],
            value=float(probs[worst]),
        )
    total = probs.sum()
    if abs(total - 1) > SUM_TOL:
        raise InvalidKernelError(f"atoms sum to {total!r}")
    if imag_max > 1e-8:
        raise InvalidKernelError(f"atoms have imaginary parts up to {imag_max:.3g}")


def atom_oracle(T, validate: bool = True) -> AtomTable:
    """All configuration probabilities by inclusion-exclusion."""
    T = _grid(T)
    q = inclusion_probabilities(T)
    p = _moebius_superset(q)
    labels = tuple(int(l) for l in T.ground.labels)
    if validate:
        _validate(p.real, labels, float(np.max(np.abs(p.imag), initial=0.0)))
    return AtomTable(T.n, p.real, labels)


def gap_probability(atoms: AtomTable, window) -> float:
    """``P(X cap W = empty)`` from an atom table."""
    w = mask_of(window)
    masks = np.arange(atoms.probs.size)
    return float(atoms.probs[(masks & w) == 0].sum())


def conditional_oracle(atoms: AtomTable, B, occupied=(), atol: float = ZERO_MASS) -> AtomTable:
    """Atoms on the complement of ``B`` given ``X cap B = occupied``.

    ``atoms`` is the full table from :func:`atom_oracle` (or a kernel, in
    which case the table is computed).  Events of mass at most ``atol`` are
    treated as impossible; the default sits at the rounding level of the
    inclusion-exclusion sums.
    """
    if not isinstance(atoms, AtomTable):
        atoms = atom_oracle(atoms)
    n = atoms.n
    b_mask = mask_of(B)
    o_mask = mask_of(occupied)
    if o_mask & ~b_mask:
        raise ValueError("occupied cells must lie in the window")
    comp = [i for i in range(n) if not b_mask >> i & 1]
    masks = np.arange(1 << n)
    sel = (masks & b_mask) == o_mask
    mass = float(atoms.probs[sel].sum())
    if not mass > atol:
        raise ZeroProbabilityError(f"conditioning event has probability {mass:.3g}")
    out = np.zeros(1 << len(comp))
    for m in masks[sel]:
        sub = 0
        for j, c in enumerate(comp):
            if m >> c & 1:
                sub |= 1 << j
        out[sub] += atoms.probs[m]
    return AtomTable(len(comp), out / mass, tuple(atoms.labels[c] for c in comp))


# ---------------------------------------------------------------------------
# sequential sampling


def _clamp(p, where):
    if -CLAMP <= p < 0:
        return 0.0
    if 1 < p <= 1 + CLAMP:
        return 1.0
    if not 0 <= p <= 1:
        raise InvalidKernelError(f"occupation probability {p!r} out of range at {where}")
    return p


def step_probability(T, prefix) -> float:
    """Probability that cell ``len(prefix)`` is occupied given the decided prefix."""
    T = _grid(T)
    i = len(prefix)
    B = list(range(i))
    occ = [c for c, bit in enumerate(prefix) if bit]
    K = conditional_kernel(T, B, occ) if B else T
    val = K.entries[0, 0]
    if abs(val[0].imag) > 1e-8 or np.max(np.abs(val[1:])) > 1e-8 * max(1.0, abs(val[0])):
        raise InvalidKernelError(f"diagonal of conditional kernel at cell {i} is not real scalar")
    return _clamp(float(val[0].real), f"cell {i} after prefix {tuple(prefix)}")


def chain_probabilities(T, prune: float = 1e-10) -> np.ndarray:
    """Product of sequential step probabilities for every configuration.

    Prefixes of probability below ``prune`` are not extended (their
    conditional kernel is undefined); their descendants get probability 0.
    """
    T = _grid(T)
    n = T.n
    out = np.zeros(1 << n)

    def walk(prefix, weight):
        if len(prefix) == n:
            out[mask_of(c for c, b in enumerate(prefix) if b)] = weight
            return
        p = step_probability(T, prefix)
        for bit, w in ((1, p), (0, 1 - p)):
            nxt = weight * w
            if nxt > prune:
                walk(prefix + (bit,), nxt)

    walk((), 1.0)
    return out


def kernel_hash(T) -> str:
    T = _grid(T)
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(T.entries).tobytes())
    h.update(np.ascontiguousarray(T.ground.points).tobytes())
    h.update(np.ascontiguousarray(T.ground.weights).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class SampleBatch:
    seed: int
    count: int
    samples: np.ndarray
    kernel_hash: str = ""

    def to_csv(self) -> str:
        header = json.dumps({"seed": self.seed, "count": self.count, "kernel_hash": self.kernel_hash},
                            sort_keys=True)
        rows = "\n".join(",".join(str(int(b)) for b in row) for row in self.samples)
        return f"# {header}\n{rows}\n" if rows else f"# {header}\n"

    @classmethod
    def from_csv(cls, text: str) -> SampleBatch:
        lines = text.strip("\n").split("\n")
        meta = json.loads(lines[0].lstrip("# "))
        rows = [[int(v) for v in line.split(",")] for line in lines[1:] if line]
        return cls(meta["seed"], meta["count"], np.array(rows, dtype=np.int8), meta["kernel_hash"])

    def masks(self) -> np.ndarray:
        weights = 1 << np.arange(self.samples.shape[1], dtype=np.int64)
        return self.samples.astype(np.int64) @ weights

    def empirical(self) -> AtomTable:
        n = self.samples.shape[1]
        counts = np.bincount(self.masks(), minlength=1 << n)
        return AtomTable(n, counts / max(self.count, 1))


def sequential_sample(T, seed: int, count: int) -> SampleBatch:
    """Draw ``count`` exact samples, deciding cells in index order.

    Step probabilities depend only on the decided prefix and are memoized,
    so the cost is one conditional kernel per distinct prefix reached.
    Randomness is a Philox counter-based stream keyed by ``seed``.
    """
    T = _grid(T)
    n = T.n
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = rng.random((count, n))
    samples = np.zeros((count, n), dtype=np.int8)
    codes = np.zeros(count, dtype=np.int64)
    cache: dict[tuple, float] = {}
    for i in range(n):
        probs = np.empty(count)
        for code in np.unique(codes):
            prefix = tuple(int(code >> c & 1) for c in range(i))
            if prefix not in cache:
                try:
                    cache[prefix] = step_probability(T, prefix)
                except NumericalError as exc:
                    raise type(exc)(f"sampling step {i} failed: {exc}") from exc
            probs[codes == code] = cache[prefix]
        occ = u[:, i] < probs
        samples[:, i] = occ
        codes |= occ.astype(np.int64) << i
    return SampleBatch(int(seed), int(count), samples, kernel_hash(T))
