"""Command-line driver.

Exit codes: 0 success, 1 a checked property failed, 2 bad input,
3 internal error.
"""
import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import formats
from .analysis import (
    DOMINANCE_EDGES,
    INCOMPARABLE,
    RandomProfileSpec,
    approximation_audit,
    as_rule,
    check_proportional_spending,
    check_range_respect,
    check_single_minded_proportionality,
    compare_on,
    enumerate_profiles,
    gap_family,
    pwu_lower_bound_family,
    random_profile,
    rule_name,
    substream,
    truthfulness_probe,
    worst_case_family,
)
from .core import BudgetAggError, InternalInvariantError, social_welfare
from .decomp import DecompositionCertificate, greedy_decomp, is_decomposable, verify_certificate
from .optdecomp import DEFAULT_NODE_LIMIT, util_decomp
from .phantoms import Mechanism, run_phantom
from .weighted import (
    WeightedProfile,
    random_weighted_profile,
    run_weighted_phantom,
    verify_weighted_certificate,
    weighted_greedy_decomp,
    weighted_welfare,
)

NODE_LIMIT_ENV = "BUDGET_AGG_NODE_LIMIT"
MAX_ENUMERATED = 200_000
FAMILIES = ("worst-case", "pwu-lb", "gap")
CHECKS = ("proportional-spending", "range-respect", "single-minded", "decomposable")


class UsageError(BudgetAggError):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    mechanisms: list = field(default_factory=list)
    fmt: str = "table"
    seed: int = 0
    trials: int = 100
    denominator: int = 12
    node_limit: int = DEFAULT_NODE_LIMIT
    options: dict = field(default_factory=dict)


# rendering

def _alloc_fields(a, prefix="allocation"):
    return {prefix: formats.vec(a), f"{prefix}_decimal_approx": [formats.approx(x) for x in a]}


def _emit(report: dict, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(report, indent=2) + "\n")
    elif fmt == "csv":
        _emit_csv(report, out)
    else:
        _emit_table(report, out)


def _rows_of(report):
    for key in ("pairs", "checks"):
        if key in report:
            return report[key]
    if "allocation" in report:
        return [
            {"alternative": j + 1, "allocation": x, "decimal_approx": d}
            for j, (x, d) in enumerate(zip(report["allocation"], report["allocation_decimal_approx"]))
        ]
    return None


def _cell(v):
    if isinstance(v, list):
        return " ".join(_cell(x) for x in v)
    if isinstance(v, dict):
        return json.dumps(v)
    if v is None:
        return "-"
    return str(v).lower() if isinstance(v, bool) else str(v)


def _emit_csv(report, out):
    rows = _rows_of(report)
    w = csv.writer(out, lineterminator="\n")
    if rows:
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([_cell(r.get(k)) for k in keys])
    else:
        w.writerow(["key", "value"])
        for k, v in report.items():
            w.writerow([k, _cell(v)])


def _emit_table(report, out):
    scalars = {k: v for k, v in report.items() if not (isinstance(v, list) and v and isinstance(v[0], dict))}
    width = max(len(k) for k in scalars) if scalars else 0
    for k, v in scalars.items():
        if isinstance(v, list) and v and isinstance(v[0], list):
            out.write(f"{k:<{width}}\n")
            for row in v:
                out.write(f"{'':<{width}}  {_cell(row)}\n")
        else:
            out.write(f"{k:<{width}}  {_cell(v)}\n")
    for k, v in report.items():
        if isinstance(v, list) and v and isinstance(v[0], dict):
            keys = list(v[0])
            cells = [[_cell(r.get(c)) for c in keys] for r in v]
            widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(keys)]
            out.write(f"\n{k}\n")
            out.write("  ".join(c.ljust(wd) for c, wd in zip(keys, widths)).rstrip() + "\n")
            for row in cells:
                out.write("  ".join(c.ljust(wd) for c, wd in zip(row, widths)).rstrip() + "\n")


# input

def _read_input(path):
    if path is None:
        raise UsageError("an input profile is required")
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_profile(path):
    p, _ = formats.parse_profile(_read_input(path))
    return p


def _family_profile(args):
    if args.n is None:
        raise UsageError("--n is required for --family")
    if args.family == "worst-case":
        if args.ell is None:
            raise UsageError("--ell is required for the worst-case family")
        return worst_case_family(args.n, args.ell)
    if args.family == "pwu-lb":
        return pwu_lower_bound_family(args.n)
    eps = formats.parse_number(args.eps) if args.eps else Fraction(1, 1000)
    return gap_family(args.n, eps)


def _mechs(args):
    return [Mechanism.parse(name) for name in (args.mech or [])]


def _node_limit(args):
    if args.node_limit is not None:
        return args.node_limit
    env = os.environ.get(NODE_LIMIT_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{NODE_LIMIT_ENV} must be an integer") from None
    return DEFAULT_NODE_LIMIT


def _spec(args, n_default=3, m_default=3):
    return RandomProfileSpec(
        args.n if args.n is not None else n_default,
        args.m if args.m is not None else m_default,
        args.denominator,
        args.seed,
    )


# commands

def cmd_run(args, out):
    p = _load_profile(args.input)
    mech = _mechs(args)[0]
    rep = run_phantom(p, mech)
    report = {
        "command": "run",
        "mechanism": rep.mechanism,
        "n": p.n,
        "m": p.m,
        **_alloc_fields(rep.allocation),
        "t_star": formats.frac(rep.t_star),
        "welfare": formats.frac(rep.welfare),
        "welfare_decimal_approx": formats.approx(rep.welfare),
        "phantom_positions": formats.vec(rep.phantom_positions),
    }
    _emit(report, args.format, out)
    return 0


def cmd_decomp(args, out):
    p = _load_profile(args.input)
    cert = greedy_decomp(p)
    w = social_welfare(p, cert.allocation)
    report = {
        "command": "decomp",
        "mechanism": "GreedyDecomp",
        "n": p.n,
        "m": p.m,
        **_alloc_fields(cert.allocation),
        "welfare": formats.frac(w),
        "welfare_decimal_approx": formats.approx(w),
        "contributions": formats.mat(cert.contributions),
        "certificate_valid": verify_certificate(p, cert),
    }
    _emit(report, args.format, out)
    return 0


def cmd_optdecomp(args, out):
    p = _load_profile(args.input)
    if p.n * p.m > args.max_size:
        raise UsageError(
            f"instance has n*m = {p.n * p.m} > {args.max_size}; the exact search is exponential "
            "(raise --max-size to try anyway)"
        )
    res = util_decomp(p, _node_limit(args))
    cert = DecompositionCertificate(res.allocation, res.contributions)
    report = {
        "command": "optdecomp",
        "mechanism": "UtilDecomp",
        "n": p.n,
        "m": p.m,
        **_alloc_fields(res.allocation),
        "welfare": formats.frac(res.welfare),
        "welfare_decimal_approx": formats.approx(res.welfare),
        "contributions": formats.mat(res.contributions),
        "certificate_valid": verify_certificate(p, cert),
        "nodes_explored": res.nodes_explored,
    }
    _emit(report, args.format, out)
    return 0


def cmd_weighted_run(args, out):
    p, weights = formats.parse_profile(_read_input(args.input))
    if args.weights:
        weights = formats.parse_weights(args.weights)
    if weights is None:
        raise UsageError('weights missing: add a "weights" array or pass --weights')
    wp = WeightedProfile(p, weights)
    name = (args.mech or ["greedydecomp"])[0]
    report = {"command": "weighted-run", "n": p.n, "m": p.m, "weights": list(weights), "total_weight": wp.total}
    if name.replace("-", "").lower() == "greedydecomp":
        cert = weighted_greedy_decomp(wp, args.weight_cap)
        w = weighted_welfare(wp, cert.allocation)
        report.update(
            mechanism="GreedyDecomp",
            **_alloc_fields(cert.allocation),
            welfare=formats.frac(w),
            welfare_decimal_approx=formats.approx(w),
            contributions=formats.mat(cert.contributions),
            certificate_valid=verify_weighted_certificate(wp, cert),
        )
    else:
        rep = run_weighted_phantom(wp, Mechanism.parse(name))
        report.update(
            mechanism=rep.mechanism,
            **_alloc_fields(rep.allocation),
            t_star=formats.frac(rep.t_star),
            welfare=formats.frac(rep.welfare),
            welfare_decimal_approx=formats.approx(rep.welfare),
        )
    _emit(report, args.format, out)
    return 0


def _pair_rows(records):
    rows = []
    for r in records:
        rows.append({
            "a": rule_name(r.mech_a),
            "b": rule_name(r.mech_b),
            "claimed": "a>=b" if r.claimed else "incomparable",
            "a_higher": r.a_higher,
            "equal": r.equal,
            "b_higher": r.b_higher,
            "holds": r.holds,
            "counterexample": formats.mat(r.counterexample.votes) if r.counterexample else None,
        })
    return rows


def _parse_pairs(text):
    if not text:
        return list(DOMINANCE_EDGES) + list(INCOMPARABLE)
    pairs = []
    for item in text.split(","):
        if ":" not in item:
            raise UsageError(f"pair {item!r} must look like a:b")
        a, b = item.split(":", 1)
        pairs.append((Mechanism.parse(a), Mechanism.parse(b)))
    return pairs


def _dominance_report(args, command):
    pairs = _parse_pairs(args.pairs)
    # every requested a:b is read as "a never loses to b", except the known incomparable pair
    claimed = [pr not in INCOMPARABLE for pr in pairs]
    if args.enumerate:
        spec = _spec(args, 2, 2)
        count = (spec.denominator + 1) ** (spec.m * spec.n)
        if count > MAX_ENUMERATED * 1000:
            raise UsageError("enumeration too large; lower --n, --m or --denominator")
        profiles = list(enumerate_profiles(spec.n, spec.m, spec.denominator))
        if len(profiles) > MAX_ENUMERATED:
            raise UsageError(f"{len(profiles)} profiles exceed the enumeration cap {MAX_ENUMERATED}")
        records = compare_on(pairs, profiles, claimed)
        mode, total = "exhaustive", len(profiles)
    else:
        spec = _spec(args)
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        profiles = (random_profile(spec, substream(spec.seed, t)) for t in range(args.trials))
        records = compare_on(pairs, profiles, claimed)
        mode, total = "sampled", args.trials
    # only claimed edges can fail; incomparability needs witnesses the sample may lack
    ok = all(r.holds for r in records if r.claimed)
    report = {
        "command": command,
        "mode": mode,
        "n": spec.n,
        "m": spec.m,
        "denominator": spec.denominator,
        "seed": spec.seed,
        "profiles": total,
        "ok": ok,
        "pairs": _pair_rows(records),
    }
    return report, ok


def cmd_dominate(args, out):
    report, ok = _dominance_report(args, "dominate")
    _emit(report, args.format, out)
    return 0 if ok else 1


def _check_rows(p, mechs, checks):
    rows = []
    for mech in mechs:
        a = as_rule(mech)(p)
        for check in checks:
            detail = ""
            if check == "proportional-spending":
                rep = check_proportional_spending(p, a)
                passed = bool(rep)
                detail = "; ".join(f"k={v.k}: {v.overlap} < {v.required}" for v in rep.violations)
            elif check == "range-respect":
                passed = check_range_respect(p, a)
            elif check == "single-minded":
                passed = check_single_minded_proportionality(mech, p)
            else:
                passed = is_decomposable(p, a) is not None
            rows.append({
                "mechanism": rule_name(mech),
                "check": check,
                "passed": passed,
                "allocation": formats.vec(a),
                "detail": detail,
            })
    return rows


def cmd_audit(args, out):
    if args.dominance:
        report, ok = _dominance_report(args, "audit")
        _emit(report, args.format, out)
        return 0 if ok else 1
    if args.truthfulness:
        names = args.mech or [m.cli_name for m in Mechanism]
        spec = _spec(args)
        rows = []
        for name in names:
            rep = truthfulness_probe(name, spec, args.trials)
            first = rep.violations[0] if rep.violations else None
            rows.append({
                "mechanism": rep.mechanism,
                "check": "truthfulness",
                "passed": not rep.violations,
                "pairs_checked": rep.pairs_checked,
                "violations": len(rep.violations),
                "detail": (
                    f"voter {first.voter + 1} gains {first.gain} by reporting {' '.join(map(str, first.misreport))}"
                    if first else ""
                ),
            })
        ok = all(r["passed"] for r in rows)
        _emit({"command": "audit", "ok": ok, "checks": rows}, args.format, out)
        return 0 if ok else 1

    if args.family:
        p = _family_profile(args)
    else:
        p = _load_profile(args.input)
    report = {"command": "audit", "n": p.n, "m": p.m}
    if args.check:
        rows = _check_rows(p, args.mech or ["utilprop"], args.check)
        ok = all(r["passed"] for r in rows)
        report.update(ok=ok, checks=rows)
    else:
        aud = approximation_audit(p)
        report.update(
            ok=aud.ok,
            alpha_star=formats.frac(aud.alpha_star),
            optimal_welfare=formats.frac(aud.optimal_welfare),
            utilprop_welfare=formats.frac(aud.utilprop_welfare),
            greedy_welfare=formats.frac(aud.greedy_welfare),
            ratio_utilprop=formats.frac(aud.r_utilprop),
            ratio_utilprop_decimal_approx=formats.approx(aud.r_utilprop),
            ratio_greedy=formats.frac(aud.r_greedy),
            ratio_greedy_decimal_approx=formats.approx(aud.r_greedy),
            alpha_bound_tight=aud.alpha_tight,
            checks=[
                {"check": "utilprop ratio <= alpha*(n)", "passed": aud.utilprop_within_alpha, "asserted": True},
                {"check": "utilprop ratio <= m/(2sqrt(m)-2)", "passed": aud.utilprop_within_m_bound, "asserted": True},
                {"check": "greedy ratio <= alpha*(n)", "passed": aud.greedy_within_alpha, "asserted": True},
                {"check": "greedy ratio <= m/(2sqrt(m)-2)", "passed": aud.greedy_within_m_bound, "asserted": False},
            ],
        )
        for mech in _mechs(args):
            w = social_welfare(p, as_rule(mech)(p))
            report[f"ratio_{mech.cli_name}"] = formats.frac(aud.optimal_welfare / w)
        ok = aud.ok
    _emit(report, args.format, out)
    return 0 if ok else 1


def cmd_gen(args, out):
    weights = None
    if args.random:
        spec = _spec(args)
        if args.max_weight:
            import random as _random
            wp = random_weighted_profile(spec, _random.Random(spec.seed), args.max_weight)
            p, weights = wp.profile, wp.weights
        else:
            p = random_profile(spec)
    elif args.family:
        p = _family_profile(args)
    else:
        raise UsageError("gen needs --family or --random")
    text = formats.profile_to_json(p, weights) if args.format == "json" or weights else formats.profile_to_csv(p)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="budgetagg", description="Exact budget aggregation mechanisms.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="table"):
        sp.add_argument("--format", choices=("json", "table", "csv"), default=fmt_default)

    def sampling(sp):
        sp.add_argument("--n", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--denominator", type=int, default=12)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--trials", type=int, default=100)

    sp = sub.add_parser("run", help="run a moving-phantom mechanism")
    sp.add_argument("input", help="profile file (CSV or JSON), or - for stdin")
    sp.add_argument("--mech", action="append", required=True)
    common(sp)

    sp = sub.add_parser("decomp", help="greedy decomposable allocation with certificate")
    sp.add_argument("input")
    common(sp)

    sp = sub.add_parser("optdecomp", help="welfare-optimal decomposable allocation")
    sp.add_argument("input")
    sp.add_argument("--node-limit", type=int, default=None)
    sp.add_argument("--max-size", type=int, default=20, help="largest n*m accepted (default 20)")
    common(sp)

    sp = sub.add_parser("weighted-run", help="mechanism on a weighted profile")
    sp.add_argument("input")
    sp.add_argument("--mech", action="append")
    sp.add_argument("--weights", help="comma-separated weights, overrides the file")
    sp.add_argument("--weight-cap", type=int, default=64)
    common(sp)

    sp = sub.add_parser("audit", help="check axioms and welfare bounds")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--family", choices=FAMILIES)
    sp.add_argument("--ell", type=int)
    sp.add_argument("--eps")
    sp.add_argument("--mech", action="append")
    sp.add_argument("--check", action="append", choices=CHECKS)
    sp.add_argument("--dominance", action="store_true")
    sp.add_argument("--truthfulness", action="store_true")
    sp.add_argument("--enumerate", action="store_true")
    sp.add_argument("--pairs")
    sampling(sp)
    common(sp)

    sp = sub.add_parser("dominate", help="pairwise welfare comparisons")
    sp.add_argument("--pairs", help="comma-separated a:b pairs; default is the full claimed order")
    sp.add_argument("--enumerate", action="store_true")
    sampling(sp)
    common(sp)

    sp = sub.add_parser("gen", help="write a profile")
    sp.add_argument("--family", choices=FAMILIES)
    sp.add_argument("--random", action="store_true")
    sp.add_argument("--ell", type=int)
    sp.add_argument("--eps")
    sp.add_argument("--max-weight", type=int)
    sp.add_argument("-o", "--output")
    sampling(sp)
    common(sp, "csv")
    return ap


COMMANDS = {
    "run": cmd_run,
    "decomp": cmd_decomp,
    "optdecomp": cmd_optdecomp,
    "weighted-run": cmd_weighted_run,
    "audit": cmd_audit,
    "dominate": cmd_dominate,
    "gen": cmd_gen,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except InternalInvariantError as e:
        err.write(f"internal error: {e}\n")
        return 3
    except (BudgetAggError, ValueError) as e:
        err.write(f"error: {e}\n")
        return 2
    except Exception as e:  # anything unexpected is our bug, not the user's
        err.write(f"internal error: {type(e).__name__}: {e}\n")
        return 3


def run_capture(argv) -> tuple[int, str, str]:
    """Run main() and return (exit code, stdout, stderr); handy for tests."""
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


if __name__ == "__main__":
    sys.exit(main())
