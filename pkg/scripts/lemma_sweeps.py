"""Sweep the counting and summation bounds over ranges of p and write CSV.

    python3 scripts/lemma_sweeps.py --delta 1/32 --out sweeps.csv
"""

import argparse
import csv
import sys
from fractions import Fraction

from badstar.bohr import BohrQuery, corollary3_sum, corollary_range_end, enumerate_K, lemma2_check
from badstar.certarith import golden_witness


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", default="1/32")
    ap.add_argument("--max-exp", type=int, default=14, help="counting check for p = 2, 4, ..., 2^max_exp")
    ap.add_argument("--max-p", type=int, default=100, help="summation check for p = 2 .. max_p")
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args()
    delta = Fraction(args.delta)
    w = golden_witness()
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    out = csv.writer(fh)
    out.writerow(["check", "p", "beta", "value", "bound", "ok"])
    for beta in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
        for e in range(1, args.max_exp + 1):
            r = lemma2_check(w, delta, beta, 2**e)
            out.writerow(["count", r.p, beta, r.count, f"{float(r.bound.lo):.4f}", r.ok])
    if delta < Fraction(1, 24):
        q_max = corollary_range_end(args.max_p, delta)
        for beta in (Fraction(1, 2), Fraction(1)):
            members = enumerate_K(BohrQuery(w, beta, delta, 0, q_max), "accelerated").members
            for p in range(2, args.max_p + 1):
                r = corollary3_sum(w, delta, beta, p, members=members)
                out.writerow(["sum", p, beta, f"{float(r.sum.hi):.4f}", f"{float(r.bound.lo):.4f}", r.ok])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
