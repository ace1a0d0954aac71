"""Command-line front end.

Exit codes: 0 ok, 1 a checked property failed, 2 usage error, 3 the requested
work exceeds the budget, 4 the survivor set became empty.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from badstar import bohr, construction
from badstar.bohr import BohrQuery, PreconditionError
from badstar.certarith import (
    PRECISION_CAP,
    BadlyApproxWitness,
    DomainError,
    QuadraticReal,
    golden_witness,
)
from badstar.dyadic import DyadicInterval

# "paper" is accepted as an older spelling of the default schedule
STANDARD_NAMES = ("standard", "paper")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_EMPTY = 0, 1, 2, 3, 4


class UsageError(ValueError):
    pass


def frac_str(v: Fraction) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def parse_frac(s) -> Fraction:
    if isinstance(s, bool):
        raise UsageError(f"not a rational: {s!r}")
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, str):
        try:
            return Fraction(s.strip())
        except ValueError:
            pass
    raise UsageError(f"rationals are written as 'num/den' strings, got {s!r}")


@dataclass
class Config:
    xi: object = "golden"
    delta: Fraction = Fraction(1, 4)
    alpha1: Fraction = Fraction(2, 3)
    alpha2: Fraction = Fraction(1, 3)
    schedule: object = "standard"
    precision_cap_bits: int = PRECISION_CAP
    work_budget: int = construction.DEFAULT_BUDGET
    # refine the chosen segment up to this q before extracting a witness
    horizon: int | None = 10**5
    # brute-force range used to certify a custom xi as badly approximable
    xi_checked_up_to: int = 10**5
    trace_csv: str = "trace.csv"
    witness_json: str = "witness.json"
    certificate_json: str = "certificate.json"

    @classmethod
    def from_dict(cls, raw: dict) -> "Config":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        for name in ("delta", "alpha1", "alpha2"):
            setattr(cfg, name, parse_frac(getattr(cfg, name)))
        if not 0 < cfg.delta < Fraction(1, 2):
            raise UsageError(f"delta must lie in (0, 1/2), got {cfg.delta}")
        for name in ("alpha1", "alpha2"):
            if not 0 <= getattr(cfg, name) <= 1:
                raise UsageError(f"{name} must lie in [0, 1]")
        if cfg.schedule not in STANDARD_NAMES:
            if not isinstance(cfg.schedule, list) or not all(isinstance(q, int) for q in cfg.schedule):
                raise UsageError("schedule is 'standard' or a list of integers")
        return cfg

    @property
    def beta1(self) -> Fraction:
        return 1 - self.alpha1

    @property
    def beta2(self) -> Fraction:
        return 1 - self.alpha2

    def witness(self) -> BadlyApproxWitness:
        if self.xi == "golden":
            return golden_witness()
        if not isinstance(self.xi, dict) or set(self.xi) - {"a", "b", "d"}:
            raise UsageError("xi is 'golden' or an object {a, b, d}")
        real = QuadraticReal(parse_frac(self.xi.get("a", "0")), parse_frac(self.xi.get("b", "0")),
                             int(self.xi.get("d", 1)))
        try:
            return BadlyApproxWitness.certify(real, self.delta, self.xi_checked_up_to)
        except DomainError as exc:
            raise UsageError(f"xi is not certified badly approximable at delta: {exc}") from exc

    def params(self, mode: str) -> construction.ConstructionParams:
        return construction.ConstructionParams(
            self.witness(), self.delta, self.alpha1, self.alpha2, mode=mode,
            cap_bits=self.precision_cap_bits, work_budget=self.work_budget)

    def make_schedule(self, nu_max: int | None) -> construction.Schedule:
        """The configured schedule; ``nu_max`` None means 3 stages, or the whole custom list."""
        if self.schedule in STANDARD_NAMES:
            return construction.Schedule.standard(self.delta, 3 if nu_max is None else nu_max)
        return construction.Schedule.custom(self.schedule)


def load_config(args) -> Config:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
    cfg = Config.from_dict(raw)
    if args.precision_cap is not None:
        cfg.precision_cap_bits = args.precision_cap
    if args.budget is not None:
        cfg.work_budget = args.budget
    if getattr(args, "delta", None) is not None:
        cfg.delta = parse_frac(args.delta)
    return cfg


def _out_path(args, name: str) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _emit(args, name: str, text: str) -> None:
    sys.stdout.write(text)
    path = _out_path(args, name)
    if path is not None:
        path.write_text(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def parse_int_list(spec: str) -> list[int]:
    """'2,3,5', '2..100' (inclusive) or '2^1..2^14' (powers of two)."""
    out = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            if a.startswith("2^") and b.startswith("2^"):
                out += [1 << k for k in range(int(a[2:]), int(b[2:]) + 1)]
            else:
                out += list(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_bohr(args, cfg: Config) -> int:
    beta = parse_frac(args.beta)
    if args.p < 0 or args.q < args.p:
        raise UsageError(f"invalid range ({args.p}, {args.q}]")
    query = BohrQuery(cfg.witness(), beta, cfg.delta, args.p, args.q)
    if args.kind == "H":
        res = bohr.enumerate_H(query, args.mode, cfg.precision_cap_bits)
    else:
        res = bohr.enumerate_K(query, args.mode, cfg.precision_cap_bits)
    doc = {"kind": args.kind, "beta": frac_str(beta), "delta": frac_str(cfg.delta),
           "p": args.p, "q": args.q, **res.to_json()}
    _emit(args, "bohr.json", json.dumps(doc) + "\n")
    return EXIT_OK


LEMMA_HEADER = ["lemma", "p", "q", "x", "beta", "alpha", "lhs", "rhs", "ok", "note"]


def _lemma2_rows(args, cfg: Config):
    for beta in args.beta:
        for p in args.p:
            try:
                r = bohr.lemma2_check(cfg.witness(), cfg.delta, beta, p, args.mode, cfg.precision_cap_bits)
            except DomainError as exc:
                yield ["lemma2", p, "", "", frac_str(beta), "", "", "", False, f"precondition: {exc}"]
                continue
            note = "undecided at precision cap" if r.warning else ""
            yield ["lemma2", p, 2 * p, "", frac_str(beta), frac_str(1 - beta), r.count,
                   frac_str(r.bound.lo), r.ok, note]


def _cor3_rows(args, cfg: Config):
    for beta in args.beta:
        for p in args.p:
            try:
                r = bohr.corollary3_sum(cfg.witness(), cfg.delta, beta, p, args.mode,
                                        cap_bits=cfg.precision_cap_bits)
            except DomainError as exc:
                yield ["cor3", p, "", "", frac_str(beta), "", "", "", False, f"precondition: {exc}"]
                continue
            yield ["cor3", p, r.q, "", frac_str(beta), frac_str(1 - beta), frac_str(r.sum.hi),
                   frac_str(r.bound.lo), r.ok, ""]


def _lemma4_rows(args, cfg: Config):
    params = cfg.params(args.mode)
    schedule = cfg.make_schedule(args.nu_max)
    nu_max = len(schedule.q_values) - 1 if args.nu_max is None else args.nu_max
    trace = construction.run_trace(params, schedule, nu_max)
    rng = random.Random(args.seed)
    for stage in trace:
        if stage.measure == 0:
            continue
        start = construction.lemma4_range_start(stage.q, cfg.delta)
        xs = sorted({start, *(rng.randint(start, args.x_span * start) for _ in range(args.samples - 1))})
        for alpha in (cfg.alpha1, cfg.alpha2):
            for x in xs:
                try:
                    r = construction.lemma4_check(stage, x, alpha, cfg.delta, cfg.precision_cap_bits)
                except DomainError as exc:
                    yield ["lemma4", "", stage.q, x, "", frac_str(alpha), "", "", False,
                           f"precondition: {exc}"]
                    continue
                yield ["lemma4", "", stage.q, x, frac_str(1 - alpha), frac_str(alpha),
                       frac_str(r.lhs), frac_str(r.rhs.lo), r.ok, ""]


def cmd_lemma(args, cfg: Config) -> int:
    args.beta = [parse_frac(b) for b in args.beta.split(",")]
    args.p = parse_int_list(args.p)
    rows = list({"lemma2": _lemma2_rows, "cor3": _cor3_rows, "lemma4": _lemma4_rows}[args.which](args, cfg))
    _emit(args, f"{args.which}.csv", _csv_text(LEMMA_HEADER, rows))
    return EXIT_OK if all(r[8] is True for r in rows) else EXIT_FAIL


def witness_doc(seg: DyadicInterval, verified_up_to: int) -> dict:
    return {"numerator": seg.numerator, "level": seg.level, "lo": frac_str(seg.lo),
            "hi": frac_str(seg.hi), "verified_up_to": verified_up_to}


def certificate_doc(cert: construction.WitnessCertificate) -> dict:
    return {
        "eta_interval": witness_doc(cert.eta_interval, cert.verified_up_to),
        "xi": {"a": frac_str(cert.xi.a), "b": frac_str(cert.xi.b), "d": cert.xi.d},
        "delta": frac_str(cert.delta),
        "alphas": [frac_str(a) for a in cert.alphas],
        "betas": [frac_str(b) for b in cert.betas],
        "verified_up_to": cert.verified_up_to,
        "failures": list(cert.failures),
    }


def cmd_construct(args, cfg: Config) -> int:
    params = cfg.params(args.mode)
    horizon = args.horizon if args.horizon is not None else cfg.horizon
    schedule = cfg.make_schedule(args.nu_max)
    nu_max = len(schedule.q_values) - 1 if args.nu_max is None else args.nu_max
    trace = construction.run_trace(params, schedule, nu_max)
    rows = [stage.csv_row() for stage in trace]
    _write(args, cfg.trace_csv, _csv_text(construction.TRACE_HEADER, rows))
    last = trace[-1]
    if horizon is not None and horizon > last.q:
        last = construction.deepen(last, horizon, params)
    seg = construction.largest_segment(last.survivor)
    cert = construction.certify_pair(seg, params, last.q) if last.q >= 1 else None
    verified = last.q if cert is not None and cert.ok else 0
    _write(args, cfg.witness_json, json.dumps(witness_doc(seg, verified)) + "\n")
    for stage in trace:
        print(f"nu={stage.nu} q={stage.q} measure={frac_str(stage.measure)} "
              f">=2^-nu:{stage.meets_bound} halved:{stage.halved} hypothesis:{stage.hypothesis}",
              file=sys.stderr)
    return EXIT_OK


def _write(args, name: str, text: str) -> None:
    path = Path(args.out or ".") / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    sys.stdout.write(text)


def read_witness(path: str) -> DyadicInterval:
    try:
        doc = json.loads(Path(path).read_text())
        seg = DyadicInterval(int(doc["numerator"]), int(doc["level"]))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed witness file: {exc}") from exc
    for key, want in (("lo", seg.lo), ("hi", seg.hi)):
        if key in doc and parse_frac(doc[key]) != want:
            raise UsageError(f"witness {key} does not match numerator/level")
    return seg


def cmd_certify(args, cfg: Config) -> int:
    if args.P < 1:
        raise UsageError("P must be >= 1")
    seg = read_witness(args.witness)
    cert = construction.certify_pair(seg, cfg.params(args.mode), args.P)
    _emit(args, cfg.certificate_json, json.dumps(certificate_doc(cert)) + "\n")
    return EXIT_OK if cert.ok else EXIT_FAIL


def cmd_schedule(args, cfg: Config) -> int:
    qs = construction.Schedule.standard(cfg.delta, args.nu_max).q_values
    _emit(args, "schedule.csv", _csv_text(["nu", "q"], enumerate(qs)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="directory for output files")
    common.add_argument("--mode", choices=["naive", "fast"], default="fast",
                        help="Bohr-set enumeration strategy")
    common.add_argument("--precision-cap", type=int, dest="precision_cap",
                        help="largest enclosure precision in bits")
    common.add_argument("--budget", type=int, help="work budget for a refinement")
    common.add_argument("--delta", help="override delta from the config (num/den)")

    parser = argparse.ArgumentParser(prog="badstar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bohr", parents=[common], help="enumerate a Bohr set")
    p.add_argument("--beta", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--kind", choices=["H", "K"], default="K")

    p = sub.add_parser("lemma", parents=[common], help="sweep a counting or measure bound")
    p.add_argument("which", choices=["lemma2", "cor3", "lemma4"])
    p.add_argument("--beta", default="1/2", help="comma-separated list")
    p.add_argument("--p", default="2^1..2^14", help="'2,3', '2..100' or '2^1..2^14'")
    p.add_argument("--nu-max", type=int, default=None, dest="nu_max")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--x-span", type=int, default=4, dest="x_span",
                   help="sample x from [x0, x_span * x0]")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("construct", parents=[common], help="run the nested construction")
    p.add_argument("--nu-max", type=int, default=None, dest="nu_max")
    p.add_argument("--horizon", type=int, help="refine the witness segment up to this q")

    p = sub.add_parser("certify", parents=[common], help="certify a witness interval")
    p.add_argument("--witness", required=True)
    p.add_argument("--P", type=int, required=True)

    p = sub.add_parser("schedule", parents=[common], help="print the default q schedule")
    p.add_argument("--nu-max", type=int, default=4, dest="nu_max")
    return parser


COMMANDS = {"bohr": cmd_bohr, "lemma": cmd_lemma, "construct": cmd_construct,
            "certify": cmd_certify, "schedule": cmd_schedule}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    args.mode = bohr.ACCELERATED if args.mode == "fast" else bohr.NAIVE
    warnings.simplefilter("ignore")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, DomainError) as exc:
        if isinstance(exc, PreconditionError):
            print(f"precondition failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except construction.FeasibilityError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except construction.EmptySurvivorError as exc:
        print(f"empty survivor: {exc}", file=sys.stderr)
        return EXIT_EMPTY


if __name__ == "__main__":
    sys.exit(main())
