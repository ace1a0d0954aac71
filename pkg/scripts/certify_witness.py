"""Build the delta=1/4 witness, refine it to a horizon and certify it.

The certificate is checked on the whole interval, then on random rational
points by a direct evaluation of both weighted distances.

    python3 scripts/certify_witness.py --horizon 100000 --points 100
"""

import argparse
import math
import random
import warnings
from fractions import Fraction

from badstar.certarith import golden_witness
from badstar.construction import ConstructionParams, certify_pair, deepen, extract_witness, run_trace

GOLDEN = (math.sqrt(5) - 1) / 2


def point_ok(t: Fraction, params, P: int) -> bool:
    """Float spot check at a single point (approximate, for a quick sanity read)."""
    for p in range(1, P + 1):
        w = p * math.log(p + 1)
        d_xi = abs(p * GOLDEN - round(p * GOLDEN))
        pt = p * t
        d_eta = float(min(pt - math.floor(pt), math.ceil(pt) - pt))
        if max(w ** float(params.alpha1) * d_xi, w ** float(params.alpha2) * d_eta) < float(params.delta):
            return False
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", default="1/4")
    ap.add_argument("--horizon", type=int, default=10**5)
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    params = ConstructionParams(golden_witness(), Fraction(args.delta), Fraction(2, 3), Fraction(1, 3))
    warnings.simplefilter("ignore")
    trace = run_trace(params, nu_max=3)
    deep = deepen(trace[-1], args.horizon, params)
    seg = extract_witness([deep])
    cert = certify_pair(seg, params, args.horizon)
    print(f"witness [{seg.lo}, {seg.hi}] (level {seg.level})")
    print(f"interval certificate up to p={args.horizon}: failures={list(cert.failures)[:10]}")
    rng = random.Random(args.seed)
    P = min(args.horizon, 10**4)
    good = sum(point_ok(seg.lo + (seg.hi - seg.lo) * Fraction(rng.randint(0, 10**6), 10**6), params, P)
               for _ in range(args.points))
    print(f"{good}/{args.points} random points pass the float spot check up to p={P}")


if __name__ == "__main__":
    main()
