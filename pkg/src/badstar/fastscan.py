"""Vectorized prefilter for threshold tests over many integers.

Each float decision carries an explicit error bound: IEEE-754 +, -, *, / are
correctly rounded, ``rint``/``frexp`` are exact, and ln is evaluated by a
truncated atanh series instead of libm. Anything the float pass cannot
separate by a safe margin is handed to the exact classifier.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from badstar.certarith import (
    PRECISION_CAP,
    QuadraticReal,
    Verdict,
    as_fraction,
    classify_with_flag,
    nearest_int_dist,
)

# relative slack absorbing accumulated rounding in short product chains
REL = 1e-12
_TINY = 2.0**-60
_LN2 = math.log(2.0)
_MAX_FAST_EXPONENT = 16


def float_below(fr: Fraction) -> float:
    f = float(fr)
    if Fraction(f) > fr:
        f = math.nextafter(f, -math.inf)
    return f


def float_above(fr: Fraction) -> float:
    f = float(fr)
    if Fraction(f) < fr:
        f = math.nextafter(f, math.inf)
    return f


def dist_float(xi: QuadraticReal, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Float ||x xi|| and an absolute error bound for each x (x < 2**53)."""
    xf = float(xi)
    v = xs.astype(np.float64) * xf
    d = np.abs(v - np.rint(v))
    err = xs.astype(np.float64) * ((abs(xf) + 1.0) * 2.0**-52) + _TINY
    return d, err


def ln1p_bounds(ws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rigorous float bounds on ln(w + 1)."""
    m, e = np.frexp(ws.astype(np.float64) + 1.0)
    s = (m - 1.0) / (m + 1.0)  # in [-1/3, 0)
    s2 = s * s
    t = s.copy()
    acc = np.zeros_like(s)
    for k in range(24):  # truncation error < 3**-49
        acc += t / (2 * k + 1)
        t *= s2
    val = e * _LN2 + 2.0 * acc
    slack = np.abs(val) * REL + 1e-13
    return val - slack, val + slack


def _power(a: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(a)
    for _ in range(k):
        out = out * a
    return out


def classify_many(xi: QuadraticReal, xs, beta, delta, cap_bits: int = PRECISION_CAP,
                  weight: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized threshold classification.

    Returns boolean arrays (dangerous, conservative) aligned with ``xs``.
    ``weight`` fixes the threshold base (H-sets); otherwise each x is its own.
    """
    xs = np.asarray(xs, dtype=np.int64)
    beta, delta = as_fraction(beta), as_fraction(delta)
    dangerous = np.zeros(xs.shape, dtype=bool)
    conservative = np.zeros(xs.shape, dtype=bool)
    if xs.size == 0:
        return dangerous, conservative
    undecided = np.ones(xs.shape, dtype=bool)

    if not xi.is_rational and int(xs.max()) < 2**52:
        d, err = dist_float(xi, xs)
        dl, dh = np.maximum(d - err, 0.0), d + err
        if beta == 0:
            safe = dl > float_above(delta)
            dang = dh < float_below(delta)
            undecided = ~(safe | dang)
            dangerous = dang
        elif beta.numerator <= _MAX_FAST_EXPONENT and beta.denominator <= _MAX_FAST_EXPONENT:
            bp, bq = beta.numerator, beta.denominator
            ws = xs if weight is None else np.full(xs.shape, weight, dtype=np.int64)
            llo, lhi = ln1p_bounds(ws)
            wf = ws.astype(np.float64)
            lhs_lo = _power(dl, bq) * _power(wf * llo, bp) * (1.0 - REL)
            lhs_hi = _power(dh, bq) * _power(wf * lhi, bp) * (1.0 + REL)
            rhs = delta**bq
            safe = lhs_lo > float_above(rhs)
            dang = lhs_hi < float_below(rhs)
            undecided = ~(safe | dang)
            dangerous = dang

    for i in np.flatnonzero(undecided):
        verdict, flag = classify_with_flag(xi, int(xs[i]), beta, delta, cap_bits, weight)
        dangerous[i] = verdict is Verdict.DANGEROUS
        conservative[i] = flag
    return dangerous, conservative


def first_below_badness(xi: QuadraticReal, delta_xi: Fraction, up_to: int,
                        chunk: int = 1 << 20) -> int | None:
    """Smallest p <= up_to with p*||p xi|| < delta_xi, or None."""
    target = float_above(delta_xi)
    for start in range(1, up_to + 1, chunk):
        ps = np.arange(start, min(start + chunk, up_to + 1), dtype=np.int64)
        if xi.is_rational:
            check = ps
        else:
            d, err = dist_float(xi, ps)
            lo = ps.astype(np.float64) * np.maximum(d - err, 0.0) * (1.0 - REL)
            check = ps[~(lo > target)]
        for p in check:
            p = int(p)
            if nearest_int_dist(xi, p) * p < delta_xi:
                return p
    return None


def bad01_failures(xi: QuadraticReal, delta: Fraction, up_to: int) -> list[int]:
    """All p <= up_to with p*||p xi|| < delta."""
    out = []
    target = float_above(delta)
    ps = np.arange(1, up_to + 1, dtype=np.int64)
    if xi.is_rational:
        check = ps
    else:
        d, err = dist_float(xi, ps)
        lo = ps.astype(np.float64) * np.maximum(d - err, 0.0) * (1.0 - REL)
        check = ps[~(lo > target)]
    for p in check:
        p = int(p)
        if nearest_int_dist(xi, p) * p < delta:
            out.append(p)
    return out
