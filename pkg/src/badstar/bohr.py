"""Bohr sets H and K of multiples of xi, and checks of their counting bounds.

H(p, q) = {p < x <= q : ||x xi|| <= delta / (p ln(p+1))**beta}
K(p, q) = {p < x <= q : ||x xi|| <= delta / (x ln(x+1))**beta}

Two enumeration routes exist for every set. ``naive`` classifies every x in
the range. ``accelerated`` only visits x for which x*P mod Q falls in a
narrow window around 0, where P/Q is a convergent of xi with Q beyond the
range; the candidates are then classified exactly like the naive route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from badstar import fastscan
from badstar.certarith import (
    PRECISION_CAP,
    PRECISION_START,
    BadlyApproxWitness,
    DomainError,
    QuadraticReal,
    RationalEnclosure,
    as_fraction,
    convergents,
    floor_xlogx,
    log_enclosure,
    pow_enclosure,
    threshold_enclosure,
)

NAIVE = "naive"
ACCELERATED = "accelerated"
_CHUNK = 1 << 20


class PreconditionError(DomainError):
    """A lemma was invoked outside the hypotheses it is stated under."""


@dataclass(frozen=True)
class BohrQuery:
    xi: BadlyApproxWitness | QuadraticReal
    beta: Fraction
    delta: Fraction
    p: int
    q: int

    def __post_init__(self):
        beta, delta = as_fraction(self.beta), as_fraction(self.delta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "delta", delta)
        if not 0 <= beta <= 1:
            raise DomainError(f"beta must lie in [0, 1], got {beta}")
        if not 0 < delta < Fraction(1, 2):
            raise DomainError(f"delta must lie in (0, 1/2), got {delta}")
        if self.p < 0:
            raise DomainError("p must be >= 0")
        if self.q < self.p:
            raise DomainError(f"empty or reversed range ({self.p}, {self.q}]")

    @property
    def real(self) -> QuadraticReal:
        return self.xi.xi if isinstance(self.xi, BadlyApproxWitness) else self.xi


@dataclass(frozen=True)
class BohrSetResult:
    members: tuple[int, ...]
    mode: str
    conservative_count: int = 0

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def to_json(self) -> dict:
        return {"members": list(self.members), "mode": self.mode,
                "conservative_count": self.conservative_count}


def _collect(xi, xs: np.ndarray, beta, delta, weight, cap_bits) -> tuple[list[int], int]:
    dang, cons = fastscan.classify_many(xi, xs, beta, delta, cap_bits, weight)
    return [int(v) for v in xs[dang]], int(np.count_nonzero(cons & dang))


def _naive(query: BohrQuery, weight, cap_bits) -> BohrSetResult:
    members: list[int] = []
    conservative = 0
    for start in range(query.p + 1, query.q + 1, _CHUNK):
        xs = np.arange(start, min(start + _CHUNK, query.q + 1), dtype=np.int64)
        m, c = _collect(query.real, xs, query.beta, query.delta, weight, cap_bits)
        members += m
        conservative += c
    return BohrSetResult(tuple(members), NAIVE, conservative)


# ---------------------------------------------------------------------------
# modular-window candidate generation
# ---------------------------------------------------------------------------


def first_in_window(a: int, m: int, lo: int, hi: int) -> int | None:
    """Smallest k >= 0 with lo <= (a*k mod m) <= hi, where 0 <= lo <= hi < m."""
    if lo == 0:
        return 0
    a %= m
    if a == 0:
        return None
    k = -(-lo // a)
    if a * k <= hi:
        return k
    # no multiple of a in [lo, hi]: need a*k - m*y in [lo, hi] with y >= 1
    y = first_in_window(m % a, a, (-hi) % a, (-lo) % a)
    if y is None:
        return None
    return -(-(lo + m * y) // a)


def _next_hit(P: int, Q: int, W: int, start: int) -> int | None:
    """Smallest x >= start with (P*x + W) mod Q <= 2W."""
    c = (P * start + W) % Q
    lo, hi = (-c) % Q, (-c + 2 * W) % Q
    if lo <= hi:
        k = first_in_window(P, Q, lo, hi)
    else:
        k1 = first_in_window(P, Q, lo, Q - 1)
        k2 = first_in_window(P, Q, 0, hi)
        ks = [k for k in (k1, k2) if k is not None]
        k = min(ks) if ks else None
    return None if k is None else start + k


def _approximant(xi: QuadraticReal, n: int) -> tuple[int, int, Fraction]:
    """Convergent P/Q with Q > n and a rational upper bound on |xi - P/Q|."""
    for P, Q in convergents(xi):
        if Q > n:
            break
    bits = 2 * Q.bit_length() + 32
    lo, hi = xi.enclosure(bits)
    r = Fraction(P, Q)
    return P, Q, max(abs(lo - r), abs(hi - r))


def window_candidates(xi: QuadraticReal, lo: int, hi: int, radius: Fraction) -> np.ndarray:
    """Superset of {lo <= x <= hi : ||x xi|| <= radius}, in increasing order."""
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    P, Q, err = _approximant(xi, hi)
    W = math.floor((radius + hi * err) * Q) + 1
    if 2 * W + 1 >= Q:
        return np.arange(lo, hi + 1, dtype=np.int64)
    out = []
    x = lo
    while x <= hi:
        x = _next_hit(P, Q, W, x)
        if x is None or x > hi:
            break
        out.append(x)
        x += 1
    return np.array(out, dtype=np.int64)


def _blocks(p: int, q: int):
    """Split (p, q] into (X, 2X] pieces; yields (first, last)."""
    X = max(p, 1)
    if p == 0:
        yield 1, min(1, q)
    while X < q:
        yield X + 1, min(2 * X, q)
        X *= 2


def _accelerated(query: BohrQuery, weight, cap_bits) -> BohrSetResult:
    xi = query.real
    if xi.is_rational:
        raise DomainError("accelerated enumeration needs an irrational xi")
    members: list[int] = []
    conservative = 0
    if query.beta == 0 or weight is not None:
        pieces = [(query.p + 1, query.q)]
    else:
        pieces = list(_blocks(query.p, query.q))
    for first, last in pieces:
        if last < first:
            continue
        w = weight if weight is not None else first
        radius = threshold_enclosure(w, query.beta, query.delta).hi
        xs = window_candidates(xi, first, last, radius)
        m, c = _collect(xi, xs, query.beta, query.delta, weight, cap_bits)
        members += m
        conservative += c
    return BohrSetResult(tuple(members), ACCELERATED, conservative)


# ---------------------------------------------------------------------------
# public enumeration API
# ---------------------------------------------------------------------------


def _check_mode(mode: str) -> str:
    mode = {"fast": ACCELERATED}.get(mode, mode)
    if mode not in (NAIVE, ACCELERATED):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def enumerate_H(query: BohrQuery, mode: str = NAIVE, cap_bits: int = PRECISION_CAP) -> BohrSetResult:
    """Members of H(p, q); the threshold is fixed by the range start p."""
    if query.p < 1:
        raise DomainError("H threshold is undefined at p = 0")
    if _check_mode(mode) == ACCELERATED:
        return _accelerated(query, query.p, cap_bits)
    return _naive(query, query.p, cap_bits)


def enumerate_K(query: BohrQuery, mode: str = NAIVE, cap_bits: int = PRECISION_CAP) -> BohrSetResult:
    """Members of K(p, q); each x is compared with its own threshold."""
    if _check_mode(mode) == ACCELERATED:
        return enumerate_K_accelerated(query, cap_bits)
    return _naive(query, None, cap_bits)


def enumerate_K_accelerated(query: BohrQuery, cap_bits: int = PRECISION_CAP) -> BohrSetResult:
    return _accelerated(query, None, cap_bits)


# ---------------------------------------------------------------------------
# counting bounds
# ---------------------------------------------------------------------------


def _witness_delta_check(xi, delta: Fraction) -> None:
    if not isinstance(xi, BadlyApproxWitness):
        raise PreconditionError("a certified BadlyApproxWitness is required")
    if delta > xi.delta_xi:
        raise PreconditionError(
            f"delta = {delta} exceeds the certified delta_xi = {xi.delta_xi}")


@dataclass(frozen=True)
class Lemma2Record:
    p: int
    beta: Fraction
    delta: Fraction
    count: int
    conservative_count: int
    bound: RationalEnclosure
    ok: bool
    warning: bool = False


def lemma2_bound(delta, beta, p: int, bits: int = PRECISION_START) -> RationalEnclosure:
    """Enclosure of (24 delta + 2) p**(1-beta) / ln(p+1)**beta."""
    delta, beta = as_fraction(delta), as_fraction(beta)
    alpha = 1 - beta
    num = pow_enclosure(RationalEnclosure.point(p), alpha, bits) * (24 * delta + 2)
    den = pow_enclosure(log_enclosure(p + 1, bits), beta, bits)
    return RationalEnclosure(num.lo / den.hi, num.hi / den.lo,
                             f"(24*{delta}+2)*{p}^{alpha}/ln({p + 1})^{beta}")


def lemma2_check(xi: BadlyApproxWitness, delta, beta, p: int, mode: str = NAIVE,
                 cap_bits: int = PRECISION_CAP) -> Lemma2Record:
    """Count H(p, 2p) and compare it with (24 delta + 2) p^(1-beta) / ln(p+1)^beta."""
    delta, beta = as_fraction(delta), as_fraction(beta)
    _witness_delta_check(xi, delta)
    if p < 1:
        raise DomainError("p must be >= 1")
    res = enumerate_H(BohrQuery(xi, beta, delta, p, 2 * p), mode, cap_bits)
    count = len(res)
    bits = PRECISION_START
    while True:
        bound = lemma2_bound(delta, beta, p, bits)
        if count <= bound.lo:
            return Lemma2Record(p, beta, delta, count, res.conservative_count, bound, True)
        if count > bound.hi:
            return Lemma2Record(p, beta, delta, count, res.conservative_count, bound, False)
        if bits >= cap_bits:
            return Lemma2Record(p, beta, delta, count, res.conservative_count, bound, True, True)
        bits *= 2


def corollary_range_end(p: int, delta) -> int:
    """[p^2/delta * ln(p^2/delta)] + 1."""
    c = Fraction(p * p) / as_fraction(delta)
    return floor_xlogx(c) + 1


@dataclass(frozen=True)
class Corollary3Record:
    p: int
    q: int
    beta: Fraction
    delta: Fraction
    n_members: int
    conservative_count: int
    sum: RationalEnclosure
    bound: RationalEnclosure
    ok: bool


def corollary3_bound(delta, bits: int = PRECISION_START) -> RationalEnclosure:
    """Enclosure of 2**6 (1 + ln(1/delta))."""
    L = log_enclosure(1 / as_fraction(delta), bits)
    return RationalEnclosure(64 * (1 + L.lo), 64 * (1 + L.hi), f"64(1+ln(1/{delta}))")


def weighted_sum(members: Sequence[int], alpha, bits: int = PRECISION_START) -> RationalEnclosure:
    """Enclosure of sum over members of 1 / (x ln(x+1))**alpha."""
    alpha = as_fraction(alpha)
    if alpha == 0:
        return RationalEnclosure.point(len(members))
    scale = 1 << (bits + 16)
    lo = hi = 0
    for x in members:
        w = pow_enclosure(log_enclosure(x + 1, bits) * x, alpha, bits)
        lo += (scale * w.hi.denominator) // w.hi.numerator
        hi += -((-scale * w.lo.denominator) // w.lo.numerator)
    return RationalEnclosure(Fraction(lo, scale), Fraction(hi, scale),
                             f"sum 1/(x ln(x+1))^{alpha}")


def corollary3_sum(xi: BadlyApproxWitness, delta, beta, p: int, mode: str = ACCELERATED,
                   members: Sequence[int] | None = None,
                   cap_bits: int = PRECISION_CAP) -> Corollary3Record:
    """Weighted sum over K(p, q), q = [p^2/delta ln(p^2/delta)] + 1, against 64(1 + ln(1/delta)).

    ``members`` may hold a precomputed K(0, Q) with Q >= q; it is filtered to (p, q].
    """
    delta, beta = as_fraction(delta), as_fraction(beta)
    if delta >= Fraction(1, 24):
        raise PreconditionError(f"the weighted-sum bound needs delta < 1/24, got {delta}")
    _witness_delta_check(xi, delta)
    if p < 1:
        raise DomainError("p must be >= 1")
    q = corollary_range_end(p, delta)
    conservative = 0
    if members is None:
        res = enumerate_K(BohrQuery(xi, beta, delta, p, q), mode, cap_bits)
        chosen = list(res.members)
        conservative = res.conservative_count
    else:
        chosen = [x for x in members if p < x <= q]
    s = weighted_sum(chosen, 1 - beta)
    bound = corollary3_bound(delta)
    return Corollary3Record(p, q, beta, delta, len(chosen), conservative, s, bound, s.hi <= bound.lo)
