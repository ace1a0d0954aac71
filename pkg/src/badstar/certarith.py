"""Exact quadratic-irrational arithmetic and certified rational enclosures.

Everything here works over Python integers and :class:`fractions.Fraction`.
Transcendental quantities (natural logs, rational powers) are returned as
:class:`RationalEnclosure` values whose endpoints are dyadic rationals; the
enclosure at ``k`` bits is the closed level-``k`` dyadic cell containing the
true value, so refinements are nested by construction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Union

Rational = Union[int, Fraction]

PRECISION_START = 64
PRECISION_CAP = 4096


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class Verdict(enum.Enum):
    SAFE = "safe"
    DANGEROUS = "dangerous"


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"expected an exact rational, got {type(v).__name__}")


def iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 0:
        raise DomainError("iroot of a negative integer")
    if k == 1 or n < 2:
        return n
    if k == 2:
        return math.isqrt(n)
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def is_squarefree(d: int) -> bool:
    if d < 1:
        return False
    f = 2
    while f * f <= d:
        if d % (f * f) == 0:
            return False
        f += 1
    return True


# ---------------------------------------------------------------------------
# Quadratic reals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticReal:
    """The exact real number ``a + b*sqrt(d)``.

    ``d`` must be squarefree and at least 2 whenever ``b != 0``; a value with
    ``b == 0`` is stored with ``d == 1`` and is an ordinary rational.
    """

    a: Fraction
    b: Fraction = Fraction(0)
    d: int = 1

    def __post_init__(self):
        a, b = as_fraction(self.a), as_fraction(self.b)
        d = int(self.d)
        if b == 0:
            d = 1
        elif d < 2 or not is_squarefree(d):
            raise DomainError(f"radicand must be squarefree and >= 2, got {d}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)

    @classmethod
    def rational(cls, r: Rational) -> "QuadraticReal":
        return cls(as_fraction(r))

    @classmethod
    def golden(cls) -> "QuadraticReal":
        """(sqrt(5) - 1) / 2, the fractional part of the golden ratio."""
        return cls(Fraction(-1, 2), Fraction(1, 2), 5)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def int_parts(self) -> tuple[int, int, int]:
        """Integers (A, B, C) with value == (A + B*sqrt(d)) / C and C > 0."""
        c = self.a.denominator * self.b.denominator // math.gcd(
            self.a.denominator, self.b.denominator
        )
        return self.a.numerator * (c // self.a.denominator), self.b.numerator * (
            c // self.b.denominator
        ), c

    def _coerce(self, other) -> "QuadraticReal":
        if isinstance(other, QuadraticReal):
            if other.b != 0 and self.b != 0 and other.d != self.d:
                raise DomainError("cannot mix different radicands")
            return other
        return QuadraticReal(as_fraction(other))

    def __add__(self, other):
        o = self._coerce(other)
        return QuadraticReal(self.a + o.a, self.b + o.b, max(self.d, o.d))

    __radd__ = __add__

    def __neg__(self):
        return QuadraticReal(-self.a, -self.b, self.d)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, QuadraticReal):
            o = self._coerce(other)
            d = max(self.d, o.d)
            return QuadraticReal(self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d)
        r = as_fraction(other)
        return QuadraticReal(self.a * r, self.b * r, self.d)

    __rmul__ = __mul__

    def reciprocal(self) -> "QuadraticReal":
        norm = self.a * self.a - self.b * self.b * self.d
        if norm == 0:
            raise ZeroDivisionError("reciprocal of zero")
        return QuadraticReal(self.a / norm, -self.b / norm, self.d)

    def sign(self) -> int:
        """Exact sign, decided by squaring over the integers."""
        A, B, _ = self.int_parts()
        if B == 0:
            return (A > 0) - (A < 0)
        if A >= 0 and B >= 0:
            return 1 if A or B else 0
        if A <= 0 and B <= 0:
            return -1
        # opposite signs: compare A^2 with B^2 d
        lhs, rhs = A * A, B * B * self.d
        if lhs == rhs:
            return 0
        dominant = A if lhs > rhs else B
        return 1 if dominant > 0 else -1

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def floor(self) -> int:
        A, B, C = self.int_parts()
        if B == 0:
            return A // C
        s = math.isqrt(B * B * self.d)  # floor(|B| sqrt d); never exact
        n = A + s if B > 0 else A - s - 1
        return n // C

    def compare(self, r: Rational) -> Ordering:
        return Ordering((self - as_fraction(r)).sign())

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rational (lo, hi) with hi - lo <= 2**-bits; exact when rational."""
        if self.b == 0:
            return self.a, self.a
        A, B, C = self.int_parts()
        f = math.isqrt(B * B * self.d << (2 * bits))
        if B < 0:
            f = -f - 1
        lo = Fraction((A << bits) + f, C << bits)
        return lo, lo + Fraction(1, C << bits)

    def __float__(self):
        lo, _ = self.enclosure(80)
        return float(lo)

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        return f"{self.a} + {self.b}*sqrt({self.d})"


def compare(a: QuadraticReal, r: Rational) -> Ordering:
    """Exact ordering of ``a`` against the rational ``r``."""
    return a.compare(r)


def nearest_int_dist(xi: QuadraticReal, x: int) -> QuadraticReal:
    """Exact ||x*xi||, the distance from x*xi to the nearest integer."""
    if x < 1:
        raise DomainError("x must be a positive integer")
    v = xi * x
    n = (v + Fraction(1, 2)).floor()
    return abs(v - n)


def dist_enclosure(xi: QuadraticReal, x: int, bits: int) -> tuple[Fraction, Fraction]:
    """Enclosure of ||x*xi|| of width <= 2**-bits (exact for rational xi)."""
    if xi.b == 0:
        v = xi.a * x
        r = v - math.floor(v + Fraction(1, 2))
        return abs(r), abs(r)
    A, B, C = xi.int_parts()
    f = math.isqrt(x * x * B * B * xi.d << (2 * bits))
    if B < 0:
        f = -f - 1
    num = (x * A << bits) + f  # x*xi in (num, num+1) / (C 2^bits)
    den = C << bits
    n = (2 * num + den) // (2 * den)
    lo = Fraction(num - n * den, den)
    dist = abs(lo)
    w = Fraction(1, den)
    return max(Fraction(0), dist - w), min(Fraction(1, 2), dist + w)


def continued_fraction(xi: QuadraticReal) -> Iterator[int]:
    """Partial quotients of xi (finite for rationals, infinite otherwise)."""
    v = xi
    while True:
        a = v.floor()
        yield a
        v = v - a
        if v.sign() == 0:
            return
        v = v.reciprocal()


def convergents(xi: QuadraticReal) -> Iterator[tuple[int, int]]:
    """Convergents (P, Q) of xi in order."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    for a in continued_fraction(xi):
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1


# ---------------------------------------------------------------------------
# Enclosures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalEnclosure:
    lo: Fraction
    hi: Fraction
    # human-readable description of the enclosed quantity; not part of equality
    target: str = field(default="", compare=False)

    def __post_init__(self):
        lo, hi = as_fraction(self.lo), as_fraction(self.hi)
        if lo > hi:
            raise ValueError(f"empty enclosure [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, v: Rational, target: str = "") -> "RationalEnclosure":
        v = as_fraction(v)
        return cls(v, v, target or str(v))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, v) -> bool:
        if isinstance(v, QuadraticReal):
            return v >= self.lo and v <= self.hi
        return self.lo <= v <= self.hi

    def within(self, other: "RationalEnclosure") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __mul__(self, other):
        """Product of enclosures of nonnegative quantities."""
        if isinstance(other, RationalEnclosure):
            if self.lo < 0 or other.lo < 0:
                raise DomainError("enclosure product only defined for nonnegative values")
            return RationalEnclosure(self.lo * other.lo, self.hi * other.hi,
                                     f"({self.target})*({other.target})")
        r = as_fraction(other)
        if r < 0:
            raise DomainError("negative scale factor")
        return RationalEnclosure(self.lo * r, self.hi * r, f"{r}*({self.target})")

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, RationalEnclosure):
            return RationalEnclosure(self.lo + other.lo, self.hi + other.hi,
                                     f"{self.target}+{other.target}")
        r = as_fraction(other)
        return RationalEnclosure(self.lo + r, self.hi + r, f"{self.target}+{r}")

    def reciprocal(self) -> "RationalEnclosure":
        if self.lo <= 0:
            raise DomainError("reciprocal of an enclosure touching zero")
        return RationalEnclosure(1 / self.hi, 1 / self.lo, f"1/({self.target})")

    def __str__(self):
        return f"[{float(self.lo):.12g}, {float(self.hi):.12g}]"


def _atanh_fixed(u: int, v: int, prec: int) -> tuple[int, int]:
    """Integers (lo, hi) bracketing atanh(u/v) * 2**prec, for |u/v| <= 1/3."""
    if u == 0:
        return 0, 0
    if u < 0:
        lo, hi = _atanh_fixed(-u, v, prec)
        return -hi, -lo
    total = 0
    terms = 0
    pu, pv = u << prec, v
    u2, v2 = u * u, v * v
    k = 0
    while pu >= pv:
        total += pu // (pv * (2 * k + 1))
        terms += 1
        pu *= u2
        pv *= v2
        k += 1
    # each floor loses < 1 ulp; the tail is below 1/(1 - 1/9) ulp
    return total, total + terms + 2


@lru_cache(maxsize=64)
def _ln2_fixed(prec: int) -> tuple[int, int]:
    lo, hi = _atanh_fixed(1, 3, prec)
    return 2 * lo, 2 * hi


def _ln_fixed(x: Fraction, prec: int) -> tuple[int, int]:
    """Integers bracketing ln(x) * 2**prec for rational x > 0."""
    n, d = x.numerator, x.denominator
    e = n.bit_length() - d.bit_length()
    # y = x / 2^e lies in (1/2, 2); pull it into [2/3, 4/3]
    num, den = (n, d << e) if e >= 0 else (n << -e, d)
    if 3 * num > 4 * den:
        e += 1
        den *= 2
    elif 3 * num < 2 * den:
        e -= 1
        num *= 2
    lo, hi = _atanh_fixed(num - den, num + den, prec)
    lo, hi = 2 * lo, 2 * hi
    l2lo, l2hi = _ln2_fixed(prec)
    if e >= 0:
        return lo + e * l2lo, hi + e * l2hi
    return lo + e * l2hi, hi + e * l2lo


def _dyadic_cell(bracket, bits: int, max_guard: int = 1 << 14) -> tuple[Fraction, Fraction]:
    """Level-``bits`` dyadic cell containing a non-dyadic value.

    ``bracket(prec)`` must return integers bracketing value * 2**prec.
    """
    guard = 16
    while guard <= max_guard:
        lo, hi = bracket(bits + guard)
        c = lo >> guard
        if c == hi >> guard:
            return Fraction(c, 1 << bits), Fraction(c + 1, 1 << bits)
        guard *= 2
    raise ArithmeticError("could not isolate value in a dyadic cell")


def log_enclosure(x: Rational, precision_bits: int) -> RationalEnclosure:
    """Enclosure of the natural log of ``x`` of width at most 2**-precision_bits."""
    x = as_fraction(x)
    if x <= 0:
        raise DomainError("log of a nonpositive number")
    if precision_bits < 1:
        raise DomainError("precision_bits must be >= 1")
    if x == 1:
        return RationalEnclosure(Fraction(0), Fraction(0), "ln(1)")
    lo, hi = _dyadic_cell(lambda prec: _ln_fixed(x, prec), precision_bits)
    return RationalEnclosure(lo, hi, f"ln({x})")


def _pow_point(b: Fraction, num: int, den: int, bits: int) -> tuple[Fraction, Fraction]:
    """Cell bounds for b**(num/den), b > 0; exact when the power lies on the grid."""
    N = b.numerator ** num << (bits * den)
    D = b.denominator ** num
    t = iroot(N // D, den)
    scale = 1 << bits
    if t ** den * D == N:
        return Fraction(t, scale), Fraction(t, scale)
    return Fraction(t, scale), Fraction(t + 1, scale)


def pow_enclosure(base: RationalEnclosure, exponent: Rational, precision_bits: int) -> RationalEnclosure:
    """Sound enclosure of base**exponent for a positive base and rational exponent >= 0."""
    exponent = as_fraction(exponent)
    if base.lo <= 0:
        raise DomainError("pow_enclosure needs a strictly positive base")
    if exponent < 0:
        raise DomainError("negative exponents are not supported")
    target = f"({base.target})^({exponent})"
    if exponent == 0:
        return RationalEnclosure(Fraction(1), Fraction(1), target)
    if exponent == 1:
        return RationalEnclosure(base.lo, base.hi, target)
    p, q = exponent.numerator, exponent.denominator
    lo, _ = _pow_point(base.lo, p, q, precision_bits)
    _, hi = _pow_point(base.hi, p, q, precision_bits)
    return RationalEnclosure(lo, hi, target)


# ---------------------------------------------------------------------------
# delta-badly approximable witnesses and threshold classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BadlyApproxWitness:
    """xi together with a certified lower bound on p*||p xi|| for p <= checked_up_to."""

    xi: QuadraticReal
    delta_xi: Fraction
    checked_up_to: int

    @classmethod
    def certify(cls, xi: QuadraticReal, delta_xi: Rational, checked_up_to: int) -> "BadlyApproxWitness":
        """Verify p*||p xi|| >= delta_xi for every p <= checked_up_to, or raise."""
        from badstar import fastscan

        delta_xi = as_fraction(delta_xi)
        if checked_up_to < 1:
            raise DomainError("checked_up_to must be >= 1")
        bad = fastscan.first_below_badness(xi, delta_xi, checked_up_to)
        if bad is not None:
            raise DomainError(f"p*||p xi|| < {delta_xi} at p = {bad}")
        return cls(xi, delta_xi, checked_up_to)


@lru_cache(maxsize=None)
def golden_witness() -> BadlyApproxWitness:
    """Golden-ratio conjugate with p*||p xi|| >= 0.38 brute-force checked to 10**6.

    The classical infimum (3 - sqrt 5)/2 = 0.3819... at p = 1 is not assumed.
    """
    return BadlyApproxWitness.certify(QuadraticReal.golden(), Fraction(38, 100), 10**6)


def _xi_of(xi) -> QuadraticReal:
    return xi.xi if isinstance(xi, BadlyApproxWitness) else xi


def log1p_int_enclosure(w: int, bits: int) -> RationalEnclosure:
    return log_enclosure(Fraction(w + 1), bits)


def classify_with_flag(xi, x: int, beta: Rational, delta: Rational,
                       cap_bits: int = PRECISION_CAP, weight: int | None = None) -> tuple[Verdict, bool]:
    """Classify ||x xi|| against delta / (w ln(w+1))**beta, w = weight or x.

    Returns (verdict, conservative); ``conservative`` is True when the verdict
    is DANGEROUS only because the precision cap was reached.
    """
    xi = _xi_of(xi)
    beta, delta = as_fraction(beta), as_fraction(delta)
    w = x if weight is None else weight
    if x < 1:
        raise DomainError("x must be >= 1")
    if beta != 0 and w < 1:
        raise DomainError("threshold weight must be >= 1")
    bp, bq = beta.numerator, beta.denominator
    rhs = delta ** bq
    bits = PRECISION_START
    while True:
        dlo, dhi = dist_enclosure(xi, x, bits)
        if dhi == 0:
            return Verdict.DANGEROUS, False
        if beta == 0:
            if dhi <= delta:
                return Verdict.DANGEROUS, False
            if dlo > delta:
                return Verdict.SAFE, False
        else:
            L = log1p_int_enclosure(w, bits)
            if dhi ** bq * (w * L.hi) ** bp <= rhs:
                return Verdict.DANGEROUS, False
            if dlo ** bq * (w * L.lo) ** bp > rhs:
                return Verdict.SAFE, False
        if bits >= cap_bits:
            return Verdict.DANGEROUS, True
        bits = min(2 * bits, cap_bits)


def threshold_classify(xi, x: int, beta: Rational, delta: Rational,
                       cap_bits: int = PRECISION_CAP) -> Verdict:
    """SAFE iff ||x xi|| > delta/(x ln(x+1))**beta is certified; otherwise DANGEROUS."""
    return classify_with_flag(xi, x, beta, delta, cap_bits)[0]


def threshold_enclosure(w: int, beta: Rational, delta: Rational, bits: int = PRECISION_START) -> RationalEnclosure:
    """Enclosure of delta / (w ln(w+1))**beta."""
    beta, delta = as_fraction(beta), as_fraction(delta)
    if beta == 0:
        return RationalEnclosure.point(delta)
    L = log1p_int_enclosure(w, bits)
    P = pow_enclosure(L * w, beta, bits)
    return RationalEnclosure(delta / P.hi, delta / P.lo, f"{delta}/({w} ln({w + 1}))^{beta}")


def floor_xlogx(c: Rational, cap_bits: int = PRECISION_CAP) -> int:
    """floor(c * ln c) for a rational c > 1, decided with nested log enclosures."""
    c = as_fraction(c)
    if c <= 1:
        raise DomainError("floor_xlogx needs c > 1")
    bits = PRECISION_START
    while True:
        L = log_enclosure(c, bits + c.numerator.bit_length())
        lo, hi = math.floor(c * L.lo), math.floor(c * L.hi)
        if lo == hi:
            return lo
        if bits >= cap_bits:
            raise ArithmeticError(f"floor of {c} ln {c} undecided at {bits} bits")
        bits *= 2
