"""Exact machinery for weighted badly approximable pairs.

Bohr-set enumeration for a quadratic irrational xi, dyadic removal covers,
nested survivor sets with exact measures, and certification of (eta, xi)
pairs against the weighted approximation inequalities.
"""

from badstar.certarith import BadlyApproxWitness, QuadraticReal, golden_witness
from badstar.construction import ConstructionParams, Schedule, run_trace, schedule_next
from badstar.dyadic import DyadicInterval, DyadicSet

__all__ = [
    "BadlyApproxWitness",
    "ConstructionParams",
    "DyadicInterval",
    "DyadicSet",
    "QuadraticReal",
    "Schedule",
    "golden_witness",
    "run_trace",
    "schedule_next",
]
