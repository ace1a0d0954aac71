"""Nested survivor sets B_q, their measures, and certification of (eta, xi) pairs.

B_q is what remains of [0, 1] after removing the dyadic cover A_{alpha_i}(x)
for every x in K^{(beta_i)}(0, q), i = 1, 2. Stages are refined along a
schedule q_0 = 0 < q_1 < ..., each refinement only subtracting the covers
of the newly dangerous x. Everything is exact: survivor measures are
rationals, thresholds are decided with certified enclosures.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from badstar import fastscan
from badstar.bohr import ACCELERATED, BohrQuery, PreconditionError, enumerate_K
from badstar.certarith import (
    PRECISION_CAP,
    PRECISION_START,
    BadlyApproxWitness,
    DomainError,
    QuadraticReal,
    RationalEnclosure,
    as_fraction,
    floor_xlogx,
    log1p_int_enclosure,
    pow_enclosure,
)
from badstar.dyadic import (
    DyadicInterval,
    DyadicSet,
    build_removal,
    cover_measure_within,
    cover_near,
)

DEFAULT_BUDGET = 10**8
# below this delta the halving lemma is proven; above it runs are empirical
GUARANTEED_DELTA = Fraction(1, 2**20)


class FeasibilityError(RuntimeError):
    """Predicted work for a refinement exceeds the configured budget."""


class EmptySurvivorError(RuntimeError):
    """A stage has no surviving segment left to extract a witness from."""


@dataclass(frozen=True)
class ConstructionParams:
    xi: BadlyApproxWitness
    delta: Fraction
    alpha1: Fraction
    alpha2: Fraction
    beta1: Fraction | None = None
    beta2: Fraction | None = None
    mode: str = ACCELERATED
    cap_bits: int = PRECISION_CAP
    work_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        delta = as_fraction(self.delta)
        a1, a2 = as_fraction(self.alpha1), as_fraction(self.alpha2)
        b1 = 1 - a1 if self.beta1 is None else as_fraction(self.beta1)
        b2 = 1 - a2 if self.beta2 is None else as_fraction(self.beta2)
        for name, v in (("delta", delta), ("alpha1", a1), ("alpha2", a2), ("beta1", b1), ("beta2", b2)):
            object.__setattr__(self, name, v)
        if not 0 < delta < Fraction(1, 2):
            raise DomainError(f"delta must lie in (0, 1/2), got {delta}")
        if not (0 <= a2 <= a1 <= 1):
            raise DomainError(f"need 0 <= alpha2 <= alpha1 <= 1, got {a1}, {a2}")
        if a1 + b1 != 1 or a2 + b2 != 1:
            raise DomainError("each exponent pair must sum to 1")
        if delta > self.xi.delta_xi:
            raise DomainError(f"delta {delta} exceeds the certified badness {self.xi.delta_xi} of xi")

    @property
    def warning(self) -> bool:
        """True when delta is above the range where halving is guaranteed."""
        return self.delta > GUARANTEED_DELTA

    @property
    def families(self) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        return (self.alpha1, self.beta1), (self.alpha2, self.beta2)


def schedule_next(q: int, delta) -> int:
    """q -> floor((q^2/delta) ln(q^2/delta)) + 1, with 0 -> 1."""
    delta = as_fraction(delta)
    if not 0 < delta < Fraction(1, 2):
        raise DomainError(f"delta must lie in (0, 1/2), got {delta}")
    if q < 0:
        raise DomainError("q must be >= 0")
    if q == 0:
        return 1
    return floor_xlogx(Fraction(q * q) / delta) + 1


@dataclass(frozen=True)
class Schedule:
    q_values: tuple[int, ...]
    rule: str = "custom"

    def __post_init__(self):
        qs = tuple(int(q) for q in self.q_values)
        object.__setattr__(self, "q_values", qs)
        if not qs or qs[0] != 0:
            raise DomainError("a schedule starts at q_0 = 0")
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise DomainError(f"schedule must be strictly increasing: {qs}")

    @classmethod
    def standard(cls, delta, nu_max: int) -> "Schedule":
        qs = [0]
        for _ in range(nu_max):
            qs.append(schedule_next(qs[-1], delta))
        return cls(tuple(qs), "standard")

    @classmethod
    def custom(cls, qs: Sequence[int]) -> "Schedule":
        return cls(tuple(qs), "custom")

    def __len__(self):
        return len(self.q_values)


@dataclass(frozen=True)
class StageRecord:
    nu: int
    q: int
    survivor: DyadicSet = field(repr=False)
    measure: Fraction
    dangerous_counts: tuple[int, int] = (0, 0)
    conservative_count: int = 0
    # mu_nu >= mu_{nu-1} / 2; the stage-0 entry counts as holding
    halved: bool = True
    # the halving statement held one step earlier with positive measure
    hypothesis: bool | None = None
    # set when only the part of the survivor inside this segment was refined
    window: DyadicInterval | None = None

    @property
    def meets_bound(self) -> bool:
        """mu(B_q) >= 2^(-nu)."""
        return self.measure * (1 << self.nu) >= 1

    def csv_row(self) -> list:
        return [self.nu, self.q, self.measure.numerator, self.measure.denominator,
                self.dangerous_counts[0], self.dangerous_counts[1], self.conservative_count]


TRACE_HEADER = ["nu", "q", "measure_num", "measure_den", "k1_count", "k2_count", "conservative_count"]


def initial_stage() -> StageRecord:
    full = DyadicSet.full()
    return StageRecord(0, 0, full, full.measure())


# ---------------------------------------------------------------------------
# work estimation
# ---------------------------------------------------------------------------


def estimate_work(p: int, q: int, delta, beta, scale: float = 1.0) -> float:
    """Heuristic size of sum_{x in K(p, q]} (scale * x + 1).

    Uses the density 2 delta / (x ln(x+1))^beta of K, integrated crudely with
    the log frozen at its smallest value. Overestimates for beta > 0.
    """
    if q <= p:
        return 0.0
    delta, beta = float(as_fraction(delta)), float(as_fraction(beta))
    lo = max(p, 1)
    ln = math.log(lo + 1) ** beta
    a = 1.0 - beta
    # integral of 2 delta x^(-beta) (scale x + 1) dx over [lo, q], in log space for huge q
    hi_l, lo_l = math.log(q), math.log(lo)
    total = 0.0
    for power, coeff in ((a + 1, scale), (a, 1.0)):
        if coeff == 0:
            continue
        if power == 0:
            total += coeff * (hi_l - lo_l)
            continue
        top = math.exp(min(power * hi_l, 700.0))
        total += coeff * (top - math.exp(power * lo_l)) / power
    return 2 * delta * total / ln + 1


def _check_budget(estimate: float, budget: int, what: str) -> None:
    if estimate > budget:
        raise FeasibilityError(f"{what}: predicted work {estimate:.3g} exceeds budget {budget}")


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------


def _dangerous(params: ConstructionParams, beta, p: int, q: int):
    query = BohrQuery(params.xi, beta, params.delta, p, q)
    return enumerate_K(query, params.mode, params.cap_bits)


def _subtract_covers(survivor: DyadicSet, params: ConstructionParams, p: int, q: int,
                     scale: Fraction) -> tuple[DyadicSet, tuple[int, int], int]:
    covers, counts, conservative = [], [], 0
    for alpha, beta in params.families:
        _check_budget(estimate_work(p, q, params.delta, beta, float(scale)), params.work_budget,
                      f"refinement ({p}, {q}] beta={beta}")
        result = _dangerous(params, beta, p, q)
        exact = sum(math.ceil(x * scale) + 2 for x in result.members)
        _check_budget(exact, params.work_budget, f"refinement ({p}, {q}] beta={beta}")
        counts.append(len(result))
        conservative += result.conservative_count
        for x in result.members:
            covers.append(cover_near(build_removal(x, alpha, params.delta), survivor))
    if covers:
        survivor = survivor - DyadicSet.union_all(covers)
    return survivor, (counts[0], counts[1]), conservative


def refine(prev: StageRecord, q_to: int, params: ConstructionParams) -> StageRecord:
    """Remove the covers of every x in K^{(beta_i)}(prev.q, q_to], i = 1, 2."""
    if q_to <= prev.q:
        raise DomainError(f"refine needs q_to > {prev.q}, got {q_to}")
    scale = Fraction(1) if prev.window is None else prev.window.measure
    survivor, counts, conservative = _subtract_covers(prev.survivor, params, prev.q, q_to, scale)
    mu = survivor.measure()
    return StageRecord(
        nu=prev.nu + 1,
        q=q_to,
        survivor=survivor,
        measure=mu,
        dangerous_counts=counts,
        conservative_count=conservative,
        halved=2 * mu >= prev.measure,
        hypothesis=prev.halved and prev.measure > 0,
        window=prev.window,
    )


def run_trace(params: ConstructionParams, schedule: Schedule | None = None,
              nu_max: int | None = None) -> list[StageRecord]:
    """Stages nu = 0..nu_max along ``schedule`` (``schedule_next`` iterates by default).

    Every step is checked against the work budget before anything runs, so an
    infeasible schedule fails up front instead of after partial work.
    """
    if schedule is None:
        if nu_max is None:
            raise DomainError("give a schedule or nu_max")
        schedule = Schedule.standard(params.delta, nu_max)
    if nu_max is None:
        nu_max = len(schedule) - 1
    if nu_max < 0 or nu_max >= len(schedule):
        raise DomainError(f"nu_max must lie in [0, {len(schedule) - 1}]")
    qs = schedule.q_values[: nu_max + 1]
    for p, q in zip(qs, qs[1:]):
        for _, beta in params.families:
            _check_budget(estimate_work(p, q, params.delta, beta), params.work_budget,
                          f"stage ({p}, {q}] beta={beta}")
    if params.warning:
        warnings.warn(f"delta = {params.delta} > 2^-20: halving is not guaranteed, results are empirical",
                      stacklevel=2)
    trace = [initial_stage()]
    for q in qs[1:]:
        trace.append(refine(trace[-1], q, params))
    return trace


def deepen(stage: StageRecord, q_to: int, params: ConstructionParams,
           window: DyadicInterval | None = None) -> StageRecord:
    """Follow one segment of the survivor up to q_to.

    Each step doubles q and refines only inside a single segment (``window``
    first, then the largest one left), so the work scales with the segment
    length rather than with the whole survivor. The result is nested in
    ``stage`` and is a witness candidate certified by construction up to q_to.
    """
    current = stage
    while current.q < q_to:
        seg = window if current is stage and window is not None else largest_segment(current.survivor)
        local = current.survivor & seg.to_set()
        start = StageRecord(current.nu, current.q, local, local.measure(), window=seg)
        current = refine(start, min(q_to, max(2 * current.q, 1)), params)
    return current


def largest_segment(S: DyadicSet) -> DyadicInterval:
    """Largest segment of the canonical decomposition, leftmost on ties."""
    best = None
    for seg in S.segments():
        if best is None or seg.level < best.level:
            best = seg
    if best is None:
        raise EmptySurvivorError("survivor is empty")
    return best


def extract_witness(trace: Sequence[StageRecord]) -> DyadicInterval:
    if not trace:
        raise EmptySurvivorError("empty trace")
    return largest_segment(trace[-1].survivor)


# ---------------------------------------------------------------------------
# per-point measure bound on the survivor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lemma4Record:
    q: int
    x: int
    alpha: Fraction
    lhs: Fraction
    rhs: RationalEnclosure
    ok: bool


def lemma4_range_start(q: int, delta) -> int:
    """Smallest x with x >= (q^2/delta) ln(q^2/delta); 1 when q = 0."""
    return schedule_next(q, delta)


def lemma4_check(stage: StageRecord, x: int, alpha, delta,
                 cap_bits: int = PRECISION_CAP) -> Lemma4Record:
    """mu(B_q & A_alpha(x)) <= 8 delta mu(B_q) / (x ln(x+1))^alpha, certified."""
    alpha, delta = as_fraction(alpha), as_fraction(delta)
    mu = stage.measure
    if mu == 0:
        raise PreconditionError("the survivor has measure 0")
    if x < lemma4_range_start(stage.q, delta):
        raise PreconditionError(f"x = {x} is below (q^2/delta) ln(q^2/delta) for q = {stage.q}")
    lhs = cover_measure_within(build_removal(x, alpha, delta), stage.survivor)
    top = 8 * delta * mu
    bits = PRECISION_START
    while True:
        if alpha == 0:
            rhs = RationalEnclosure.point(top)
        else:
            w = pow_enclosure(log1p_int_enclosure(x, bits) * x, alpha, bits)
            rhs = RationalEnclosure(top / w.hi, top / w.lo)
        if lhs <= rhs.lo or lhs > rhs.hi or bits >= cap_bits:
            return Lemma4Record(stage.q, x, alpha, lhs, rhs, lhs <= rhs.lo)
        bits *= 2


# ---------------------------------------------------------------------------
# certification of a pair (eta interval, xi)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessCertificate:
    eta_interval: DyadicInterval
    xi: QuadraticReal
    delta: Fraction
    alphas: tuple[Fraction, Fraction]
    betas: tuple[Fraction, Fraction]
    verified_up_to: int
    failures: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures


def interval_int_distance(lo: Fraction, hi: Fraction, p: int) -> Fraction:
    """min over t in [lo, hi] of ||p t||."""
    a, b = p * lo, p * hi
    if math.floor(b) > math.floor(a) or a == math.floor(a):
        return Fraction(0)
    return min(a - math.floor(a), math.ceil(b) - b)


def _eta_side(dist: Fraction, p: int, alpha: Fraction, delta: Fraction, cap_bits: int) -> bool:
    """Certify dist >= delta / (p ln(p+1))^alpha."""
    if alpha == 0:
        return dist >= delta
    if dist == 0:
        return False
    ap, aq = alpha.numerator, alpha.denominator
    lhs0, rhs = dist ** aq, delta ** aq
    bits = PRECISION_START
    while True:
        L = log1p_int_enclosure(p, bits)
        if lhs0 * (p * L.lo) ** ap >= rhs:
            return True
        if lhs0 * (p * L.hi) ** ap < rhs or bits >= cap_bits:
            return False
        bits *= 2


def certify_pair(eta_interval: DyadicInterval, params: ConstructionParams, P: int) -> WitnessCertificate:
    """Check every p <= P against both weighted families and the BAD(0,1) coordinate.

    A p passes family i when either (p ln(p+1))^beta_i ||p xi|| >= delta is
    certified, or ||p t|| >= delta / (p ln(p+1))^alpha_i for every t in the
    interval. It must also satisfy p ||p xi|| >= delta.
    """
    if P < 1:
        raise DomainError("P must be >= 1")
    xi, delta = params.xi.xi, params.delta
    lo, hi = eta_interval.lo, eta_interval.hi
    failures = set(fastscan.bad01_failures(xi, delta, P))
    ps = np.arange(1, P + 1, dtype=np.int64)
    for alpha, beta in params.families:
        dangerous, _ = fastscan.classify_many(xi, ps, beta, delta, params.cap_bits)
        for p in ps[dangerous]:
            p = int(p)
            if p in failures:
                continue
            if not _eta_side(interval_int_distance(lo, hi, p), p, alpha, delta, params.cap_bits):
                failures.add(p)
    return WitnessCertificate(eta_interval, xi, delta, (params.alpha1, params.alpha2),
                              (params.beta1, params.beta2), P, tuple(sorted(failures)))
