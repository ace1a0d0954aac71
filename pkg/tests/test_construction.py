import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from badstar.bohr import PreconditionError
from badstar.certarith import DomainError, golden_witness
from badstar.construction import (
    ConstructionParams,
    EmptySurvivorError,
    FeasibilityError,
    Schedule,
    StageRecord,
    certify_pair,
    deepen,
    estimate_work,
    extract_witness,
    initial_stage,
    interval_int_distance,
    lemma4_check,
    lemma4_range_start,
    refine,
    run_trace,
    schedule_next,
)
from badstar.dyadic import DyadicInterval, DyadicSet, build_removal, dyadic_cover

from . import oracles

W = golden_witness()
QUARTER = Fraction(1, 4)


def params(delta=QUARTER, a1=Fraction(2, 3), a2=Fraction(1, 3), **kw):
    return ConstructionParams(W, delta, a1, a2, **kw)


@pytest.fixture(scope="module")
def trace():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_trace(params(), nu_max=3)


def test_schedule_next_examples():
    assert schedule_next(0, Fraction(1, 3)) == 1
    assert schedule_next(1, QUARTER) == 6
    assert schedule_next(6, QUARTER) == 716
    assert schedule_next(716, QUARTER) == 29803062
    with pytest.raises(DomainError):
        schedule_next(3, Fraction(1, 2))


def test_standard_schedule():
    assert Schedule.standard(QUARTER, 3).q_values == (0, 1, 6, 716)
    with pytest.raises(DomainError):
        Schedule.custom([0, 5, 5])
    with pytest.raises(DomainError):
        Schedule.custom([1, 5])


def test_params_validation():
    with pytest.raises(DomainError):
        params(a1=Fraction(1, 3), a2=Fraction(2, 3))
    with pytest.raises(DomainError):
        params(beta1=Fraction(1, 2))
    with pytest.raises(DomainError):
        params(delta=Fraction(2, 5))
    assert params().warning and not params(delta=Fraction(1, 2**20)).warning
    assert params().beta1 == Fraction(1, 3) and params().beta2 == Fraction(2, 3)


def test_refine_examples():
    p = params(a1=Fraction(1, 2), a2=Fraction(1, 2))
    start = initial_stage()
    same = refine(start, 2, p)
    assert same.survivor == DyadicSet.full() and same.measure == 1
    r = refine(start, 30, p)
    assert r.dangerous_counts == (3, 3)
    removed = DyadicSet.union_all(dyadic_cover(build_removal(x, Fraction(1, 2), QUARTER)) for x in (8, 13, 21))
    assert r.survivor == DyadicSet.full() - removed
    assert 0 < r.measure < 1
    with pytest.raises(DomainError):
        refine(r, 30, p)


def test_subtracting_everything_leaves_empty():
    stage = StageRecord(0, 0, DyadicSet.full(), Fraction(1))
    assert (stage.survivor - DyadicSet.full()).measure() == 0
    with pytest.raises(EmptySurvivorError):
        extract_witness([StageRecord(1, 1, DyadicSet.empty(), Fraction(0))])


def test_trace_values(trace):
    assert [s.q for s in trace] == [0, 1, 6, 716]
    assert [s.measure for s in trace] == [1, 1, Fraction(5, 16), Fraction(4091, 65536)]
    assert trace[0].measure == 1
    for a, b in zip(trace, trace[1:]):
        assert b.survivor <= a.survivor and b.measure <= a.measure
    assert [s.halved for s in trace] == [True, True, False, False]
    assert [s.hypothesis for s in trace] == [None, True, True, False]


def test_extract_witness(trace):
    assert extract_witness([initial_stage()]) == DyadicInterval(0, 0)
    w = extract_witness(trace)
    assert w.to_set() <= trace[-1].survivor
    assert all(w.level <= s.level for s in trace[-1].survivor.segments())
    assert w == DyadicInterval(371, 11)


def test_tiny_delta_is_infeasible():
    with pytest.raises(FeasibilityError):
        run_trace(params(delta=Fraction(1, 2**20)), nu_max=3)
    assert estimate_work(716, 29803062, QUARTER, Fraction(1, 3)) > 10**8


def test_lemma4_examples(trace):
    stage = trace[0]
    x = 5
    fam = build_removal(x, Fraction(2, 3), QUARTER)
    r = lemma4_check(stage, x, Fraction(2, 3), QUARTER)
    assert r.lhs == dyadic_cover(fam).measure() and r.ok
    start = lemma4_range_start(6, QUARTER)
    assert start == 716
    for x in (start, 2 * start, 4 * start):
        for a in (Fraction(2, 3), Fraction(1, 3)):
            assert lemma4_check(trace[2], x, a, QUARTER).ok
    with pytest.raises(PreconditionError):
        lemma4_check(trace[2], 715, Fraction(1, 3), QUARTER)
    with pytest.raises(PreconditionError):
        lemma4_check(StageRecord(1, 1, DyadicSet.empty(), Fraction(0)), 10, Fraction(1, 3), QUARTER)


def test_interval_int_distance():
    assert interval_int_distance(Fraction(1, 4), Fraction(1, 2), 2) == 0
    assert interval_int_distance(Fraction(1, 8), Fraction(1, 4), 2) == Fraction(1, 4)
    assert interval_int_distance(Fraction(1, 3), Fraction(2, 5), 1) == Fraction(1, 3)


@given(st.fractions(0, 1, max_denominator=64), st.fractions(0, Fraction(1, 16), max_denominator=256),
       st.integers(1, 50))
def test_interval_int_distance_matches_sampling(lo, width, p):
    hi = min(Fraction(1), lo + width)
    d = interval_int_distance(lo, hi, p)
    samples = [lo + (hi - lo) * Fraction(k, 64) for k in range(65)]
    best = min(min(p * t - (p * t).__floor__(), (p * t).__ceil__() - p * t) for t in samples)
    assert d <= best


def test_certify_examples():
    p = params()
    half = DyadicInterval(512, 10)  # [1/2, 1/2 + 1/1024]
    assert certify_pair(half, p, 10).failures == (8,)
    assert certify_pair(half, p, 2).failures == ()
    assert certify_pair(DyadicInterval(1, 1), p, 10).failures == (3, 5, 8)
    with pytest.raises(DomainError):
        certify_pair(half, p, 0)


def test_point_violations_are_interval_failures():
    p = params()
    for seg in (DyadicInterval(512, 10), DyadicInterval(1, 1), DyadicInterval(3, 4)):
        failures = set(certify_pair(seg, p, 300).failures)
        for t in (seg.lo, seg.hi, (seg.lo + seg.hi) / 2):
            viol = oracles.violations_at_point(t, oracles.golden(), [p.alpha1, p.alpha2], p.delta, 300)
            assert set(viol) <= failures
    mid = DyadicInterval(512, 10)
    t = (mid.lo + mid.hi) / 2
    assert oracles.violations_at_point(t, oracles.golden(), [p.alpha1, p.alpha2], p.delta, 10) == [8]


def test_deepened_witness_certifies(trace):
    p = params()
    deep = deepen(trace[-1], 10**4, p)
    assert deep.window is not None and deep.q == 10**4
    assert deep.survivor <= trace[-1].survivor
    w = extract_witness([deep])
    assert certify_pair(w, p, 10**4).failures == ()


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([Fraction(1, 8), Fraction(1, 32), Fraction(1, 256)]),
       st.sampled_from([(Fraction(1, 2), Fraction(1, 2)), (Fraction(2, 3), Fraction(1, 3)), (Fraction(1), Fraction(0))]),
       st.lists(st.integers(1, 1000), min_size=1, max_size=4, unique=True))
def test_nesting_under_custom_schedules(delta, alphas, qs):
    p = params(delta, *alphas)
    sched = Schedule.custom([0] + sorted(qs))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = run_trace(p, sched)
    for a, b in zip(tr, tr[1:]):
        assert b.survivor <= a.survivor


@pytest.mark.parametrize("delta", [Fraction(1, 32), Fraction(1, 256)])
def test_small_delta_traces_meet_bound(delta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = run_trace(params(delta), nu_max=2)
    assert all(s.meets_bound for s in tr)
    with pytest.raises(FeasibilityError):
        run_trace(params(delta), nu_max=3)


def test_determinism():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = run_trace(params(), nu_max=3)
        b = run_trace(params(), nu_max=3)
    assert [s.survivor for s in a] == [s.survivor for s in b]
