"""Print the survivor measures of the construction for a few values of delta.

For each delta the default schedule is followed until the next stage would exceed
the work budget, and the table shows q, the exact measure, the 2^-nu target and
whether the halving step held.

    python3 scripts/trace_measures.py --deltas 1/4,1/32,1/256 --nu-max 4
"""

import argparse
import warnings
from fractions import Fraction

from badstar.certarith import golden_witness
from badstar.construction import ConstructionParams, FeasibilityError, Schedule, refine, initial_stage


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--deltas", default="1/4,1/32,1/256")
    ap.add_argument("--alphas", default="2/3,1/3")
    ap.add_argument("--nu-max", type=int, default=4)
    args = ap.parse_args()
    a1, a2 = (Fraction(a) for a in args.alphas.split(","))
    warnings.simplefilter("ignore")
    print(f"{'delta':>8} {'nu':>3} {'q':>10} {'measure':>12} {'2^-nu':>8} halved")
    for d in args.deltas.split(","):
        delta = Fraction(d)
        params = ConstructionParams(golden_witness(), delta, a1, a2)
        stage = initial_stage()
        for q in Schedule.standard(delta, args.nu_max).q_values:
            if q > stage.q:
                try:
                    stage = refine(stage, q, params)
                except FeasibilityError as exc:
                    print(f"{str(delta):>8} {stage.nu + 1:>3} {q:>10}  stopped: {exc}")
                    break
            print(f"{str(delta):>8} {stage.nu:>3} {stage.q:>10} {float(stage.measure):>12.6f} "
                  f"{2.0 ** -stage.nu:>8.4f} {stage.halved}")


if __name__ == "__main__":
    main()
