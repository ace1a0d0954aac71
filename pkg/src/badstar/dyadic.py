"""Removal intervals, their dyadic covers, and an exact algebra of dyadic sets.

A :class:`DyadicSet` is a finite union of closed segments with dyadic
endpoints. Internally it keeps maximal runs ``[lo/2^s, hi/2^s]`` over one
common scale ``s``; the mixed-level segment view is derived on demand and is
canonical (siblings always merged). Points where two closed pieces merely
touch never survive an operation on their own; only positive-length pieces
are kept.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from badstar.certarith import (
    PRECISION_CAP,
    PRECISION_START,
    DomainError,
    as_fraction,
    log_enclosure,
    pow_enclosure,
)

# extra bits carried by removal radii beyond the cover level
RADIUS_GUARD_BITS = 40


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The closed segment [numerator / 2^level, (numerator + 1) / 2^level]."""

    numerator: int
    level: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.numerator < (1 << self.level):
            raise DomainError(f"not a dyadic segment of [0,1]: ({self.numerator}, {self.level})")

    @property
    def lo(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.level)

    @property
    def hi(self) -> Fraction:
        return Fraction(self.numerator + 1, 1 << self.level)

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    def __contains__(self, t) -> bool:
        return self.lo <= t <= self.hi

    def to_set(self) -> "DyadicSet":
        return DyadicSet([(self.numerator, self.numerator + 1)], self.level)


def _normalize(runs: Iterable[tuple[int, int]], scale: int) -> tuple[tuple[tuple[int, int], ...], int]:
    top = 1 << scale
    pieces = sorted((max(lo, 0), min(hi, top)) for lo, hi in runs)
    merged: list[list[int]] = []
    for lo, hi in pieces:
        if lo >= hi:
            continue
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    if not merged:
        return (), 0
    bits = 0
    for lo, hi in merged:
        bits |= lo | hi
    shift = scale if bits == 0 else min(scale, (bits & -bits).bit_length() - 1)
    return tuple((lo >> shift, hi >> shift) for lo, hi in merged), scale - shift


class DyadicSet:
    """Finite union of closed dyadic segments of [0, 1]."""

    __slots__ = ("runs", "scale")

    def __init__(self, runs: Iterable[tuple[int, int]] = (), scale: int = 0):
        self.runs, self.scale = _normalize(runs, scale)

    @classmethod
    def empty(cls) -> "DyadicSet":
        return cls()

    @classmethod
    def full(cls) -> "DyadicSet":
        return cls([(0, 1)], 0)

    @classmethod
    def from_segments(cls, segments: Iterable[DyadicInterval]) -> "DyadicSet":
        segments = list(segments)
        if not segments:
            return cls()
        s = max(seg.level for seg in segments)
        return cls([(seg.numerator << (s - seg.level), (seg.numerator + 1) << (s - seg.level))
                    for seg in segments], s)

    @classmethod
    def union_all(cls, sets: Iterable["DyadicSet"]) -> "DyadicSet":
        sets = [t for t in sets if t.runs]
        if not sets:
            return cls()
        s = max(t.scale for t in sets)
        return cls([r for t in sets for r in t._at(s)], s)

    def _at(self, scale: int) -> list[tuple[int, int]]:
        k = scale - self.scale
        return [(lo << k, hi << k) for lo, hi in self.runs]

    def __eq__(self, other):
        return isinstance(other, DyadicSet) and self.runs == other.runs and self.scale == other.scale

    def __hash__(self):
        return hash((self.runs, self.scale))

    def __bool__(self):
        return bool(self.runs)

    def __repr__(self):
        return f"DyadicSet({len(self.runs)} runs, scale={self.scale}, measure={self.measure()})"

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    def measure(self) -> Fraction:
        return Fraction(sum(hi - lo for lo, hi in self.runs), 1 << self.scale)

    def segments(self) -> list[DyadicInterval]:
        """Canonical decomposition into maximal dyadic segments, left to right."""
        out = []
        for lo, hi in self.runs:
            while lo < hi:
                k = (lo & -lo).bit_length() - 1 if lo else self.scale
                while (1 << k) > hi - lo:
                    k -= 1
                out.append(DyadicInterval(lo >> k, self.scale - k))
                lo += 1 << k
        return out

    def cells(self, level: int) -> Iterator[int]:
        """Indices k of the level cells [k/2^level, (k+1)/2^level] making up the set."""
        if self.runs and level < self.scale:
            raise DomainError(f"set is not a union of level-{level} cells")
        for lo, hi in self._at(max(level, self.scale)):
            yield from range(lo, hi)

    def __contains__(self, t) -> bool:
        t = as_fraction(t) * (1 << self.scale)
        i = bisect.bisect_right(self.runs, (t, math.inf)) - 1
        return i >= 0 and self.runs[i][0] <= t <= self.runs[i][1]

    def complement(self) -> "DyadicSet":
        top = 1 << self.scale
        gaps, prev = [], 0
        for lo, hi in self.runs:
            gaps.append((prev, lo))
            prev = hi
        gaps.append((prev, top))
        return DyadicSet(gaps, self.scale)

    def intersect(self, other: "DyadicSet") -> "DyadicSet":
        s = max(self.scale, other.scale)
        a, b = self._at(s), other._at(s)
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            lo, hi = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return DyadicSet(out, s)

    def union(self, other: "DyadicSet") -> "DyadicSet":
        return DyadicSet.union_all([self, other])

    def difference(self, other: "DyadicSet") -> "DyadicSet":
        return self.intersect(other.complement())

    __and__ = intersect
    __or__ = union
    __sub__ = difference

    def issubset(self, other: "DyadicSet") -> bool:
        return self.intersect(other) == self

    __le__ = issubset

    def to_json(self) -> list[list[int]]:
        return [[seg.numerator, seg.level] for seg in self.segments()]

    @classmethod
    def from_json(cls, pairs: Sequence[Sequence[int]]) -> "DyadicSet":
        return cls.from_segments(DyadicInterval(int(a), int(l)) for a, l in pairs)


def complement(S: DyadicSet) -> DyadicSet:
    return S.complement()


def intersect(S1: DyadicSet, S2: DyadicSet) -> DyadicSet:
    return S1.intersect(S2)


def measure(S: DyadicSet) -> Fraction:
    return S.measure()


# ---------------------------------------------------------------------------
# levels and removal families
# ---------------------------------------------------------------------------


def _floor_log2(r: Fraction) -> int:
    n, d = r.numerator, r.denominator
    e = n.bit_length() - d.bit_length()
    if (n << max(0, -e)) < (d << max(0, e)):
        e -= 1
    return e


def _check_delta(delta: Fraction) -> None:
    if not 0 < delta < Fraction(1, 2):
        raise DomainError(f"delta must lie in (0, 1/2), got {delta}")


def level_of(x: int, alpha, delta, cap_bits: int = PRECISION_CAP) -> int:
    """Dyadic level [log2(x^(1+alpha) ln(x+1)^alpha / (2 delta))], clamped at 0."""
    alpha, delta = as_fraction(alpha), as_fraction(delta)
    _check_delta(delta)
    if x == 0:
        return 0
    if x < 0:
        raise DomainError("x must be >= 0")
    if alpha == 0:
        return max(0, _floor_log2(Fraction(x) / (2 * delta)))
    ap, aq = alpha.numerator, alpha.denominator
    base = Fraction(x ** (aq + ap)) / (2 * delta) ** aq
    bits = PRECISION_START
    while True:
        L = log_enclosure(x + 1, bits)
        lo = _floor_log2(base * L.lo ** ap) // aq
        hi = _floor_log2(base * L.hi ** ap) // aq
        if lo == hi:
            return max(0, lo)
        if bits >= cap_bits:
            raise ArithmeticError(f"level of x={x} undecided at {bits} bits")
        bits *= 2


@dataclass(frozen=True)
class RemovalFamily:
    """The open intervals (y/x - R, y/x + R), y = 0..x, clipped to [0, 1].

    ``radius`` is an upper bound on delta / (x^(1+alpha) ln(x+1)^alpha): the
    exact value when alpha == 0, otherwise rounded up to a dyadic rational.
    """

    x: int
    alpha: Fraction
    delta: Fraction
    level: int
    radius: Fraction

    def intervals(self) -> Iterator[tuple[Fraction, Fraction]]:
        """Clipped intervals as (lo, hi); open except where clipped at 0 or 1."""
        R = self.radius
        for y in range(self.x + 1):
            c = Fraction(y, self.x)
            yield max(Fraction(0), c - R), min(Fraction(1), c + R)

    def cell_range(self, y: int) -> tuple[int, int]:
        """Level cells k0..k1 (inclusive) meeting the closure of the y-th interval.

        An open endpoint that lands exactly on a cell boundary still pulls in
        the cell on the far side, so covers never depend on boundary points.
        """
        top = (1 << self.level) - 1
        rn, rd = self.radius.numerator, self.radius.denominator
        D = self.x * rd
        k0 = -((-((y * rd - rn * self.x) << self.level)) // D) - 1
        k1 = ((y * rd + rn * self.x) << self.level) // D
        return max(k0, 0), min(k1, top)

    def y_window(self, lo: Fraction, hi: Fraction) -> tuple[int, int]:
        """Range of y whose cells may overlap [lo, hi] in positive length."""
        pad = self.radius + Fraction(1, 1 << self.level)
        y0 = math.ceil((lo - pad) * self.x)
        y1 = math.floor((hi + pad) * self.x)
        return max(y0, 0), min(y1, self.x)


def build_removal(x: int, alpha, delta) -> RemovalFamily:
    alpha, delta = as_fraction(alpha), as_fraction(delta)
    _check_delta(delta)
    if x < 1:
        raise DomainError("removal families need x >= 1")
    level = level_of(x, alpha, delta)
    if alpha == 0:
        return RemovalFamily(x, alpha, delta, level, delta / x)
    bits = max(PRECISION_START, level + RADIUS_GUARD_BITS)
    L = log_enclosure(x + 1, bits)
    weight = pow_enclosure(L * x, alpha, bits)  # (x ln(x+1))^alpha
    r_hi = delta / (x * weight.lo)
    num = -((-r_hi.numerator << bits) // r_hi.denominator)
    return RemovalFamily(x, alpha, delta, level, Fraction(num, 1 << bits))


def dyadic_cover(family: RemovalFamily) -> DyadicSet:
    """Smallest union of level-l closed segments covering every removal interval."""
    runs = []
    for y in range(family.x + 1):
        k0, k1 = family.cell_range(y)
        if k0 <= k1:
            runs.append((k0, k1 + 1))
    return DyadicSet(runs, family.level)


def cover_near(family: RemovalFamily, S: DyadicSet) -> DyadicSet:
    """Part of the dyadic cover that can meet S; (cover_near & S) == (dyadic_cover & S)."""
    if not S:
        return DyadicSet()
    windows = []
    for lo, hi in S.runs:
        windows.append(family.y_window(Fraction(lo, 1 << S.scale), Fraction(hi, 1 << S.scale)))
    windows.sort()
    runs = []
    last = -1
    for y0, y1 in windows:
        for y in range(max(y0, last + 1), y1 + 1):
            k0, k1 = family.cell_range(y)
            if k0 <= k1:
                runs.append((k0, k1 + 1))
        last = max(last, y1)
    return DyadicSet(runs, family.level)


def floor_sum(n: int, m: int, a: int, b: int) -> int:
    """sum_{i=0}^{n-1} floor((a*i + b) / m) for n >= 0, m >= 1, a, b >= 0."""
    ans = 0
    while True:
        if a >= m:
            ans += (n - 1) * n // 2 * (a // m)
            a %= m
        if b >= m:
            ans += n * (b // m)
            b %= m
        y_max = a * n + b
        if y_max < m:
            return ans
        n, b = divmod(y_max, m)
        m, a = a, m


def _cells_in(family: RemovalFamily, y: int, c0: int, c1: int) -> int:
    k0, k1 = family.cell_range(y)
    return max(0, min(k1, c1 - 1) - max(k0, c0) + 1)


def _count_cells(family: RemovalFamily, c0: int, c1: int) -> int:
    """Number of cover cells with index in [c0, c1), assuming distinct y never share a cell."""
    if c0 >= c1:
        return 0
    x, L = family.x, family.level
    rn, rd = family.radius.numerator, family.radius.denominator
    D, rx, den = x * rd, rn * x, rd << L
    # y whose cells all lie in [c0, c1): k0 >= c0 and k1 <= c1 - 1
    ya = x * (c0 * rd + (rn << L)) // den + 1
    yb = -((-x * (c1 * rd - (rn << L))) // den) - 1
    # y whose cells can reach [c0, c1) at all
    ylo = max(0, x * (c0 * rd - (rn << L)) // den - 1)
    yhi = min(x, -((-x * (c1 * rd + (rn << L))) // den) + 1)
    ia, ib = max(ya, ylo), min(yb, yhi)
    if ia > ib:
        return sum(_cells_in(family, y, c0, c1) for y in range(ylo, yhi + 1))
    total = sum(_cells_in(family, y, c0, c1) for y in range(ylo, ia))
    total += sum(_cells_in(family, y, c0, c1) for y in range(ib + 1, yhi + 1))
    # k1 - k0 + 1 = floor(hi / D) - ceil(lo / D) + 2 with lo, hi the scaled endpoints
    n, a = ib - ia + 1, rd << L
    total += (floor_sum(n, D, a, (ia * rd + rx) << L)
              - floor_sum(n, D, a, ((ia * rd - rx) << L) + D - 1) + 2 * n)
    return total


def _cell_in_cover(family: RemovalFamily, k: int) -> bool:
    y0, y1 = family.y_window(Fraction(k, 1 << family.level), Fraction(k + 1, 1 << family.level))
    for y in range(y0, y1 + 1):
        k0, k1 = family.cell_range(y)
        if k0 <= k <= k1:
            return True
    return False


def disjoint_cells(family: RemovalFamily) -> bool:
    """True when cells generated by different y can never coincide."""
    gap = (Fraction(1, family.x) - 2 * family.radius) * (1 << family.level)
    return gap > 1


def cover_measure_within(family: RemovalFamily, S: DyadicSet) -> Fraction:
    """Exact measure of (dyadic cover of family) intersected with S.

    Large families are counted with floor sums instead of being materialized.
    """
    if not S:
        return Fraction(0)
    if not disjoint_cells(family):
        return cover_near(family, S).intersect(S).measure()
    L, s = family.level, S.scale
    total = Fraction(0)
    for lo, hi in S.runs:
        if s <= L:
            c0, c1 = lo << (L - s), hi << (L - s)
            total += Fraction(_count_cells(family, c0, c1), 1 << L)
            continue
        k = s - L
        c0, c1 = -((-lo) >> k), hi >> k
        if c0 > c1:  # run sits inside the single cell c1
            if _cell_in_cover(family, c1):
                total += Fraction(hi - lo, 1 << s)
            continue
        total += Fraction(_count_cells(family, c0, c1), 1 << L)
        if lo < (c0 << k) and _cell_in_cover(family, c0 - 1):
            total += Fraction((c0 << k) - lo, 1 << s)
        if (c1 << k) < hi and _cell_in_cover(family, c1):
            total += Fraction(hi - (c1 << k), 1 << s)
    return total
