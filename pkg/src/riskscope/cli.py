"""Command-line surface: compute | synthesize | distinguish | coherence |
paper | plot.

Output is machine-first (compact JSON on stdout; --pretty switches to a
human table where it exists).  Exit codes: 0 success, 1 domain
infeasibility (unmeetable constraints, too few members), 2 usage or input
errors.  RISKSCOPE_SEED sets the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .ambiguity import (
    CannotReachKError,
    InfeasibleError,
    SynthesisOptions,
    constraints_from_json_dict,
    distinguish,
    synthesize_family,
    verify_family,
)
from .coherence import (
    AXIOMS,
    check_axiom,
    check_subadditivity,
    loan_counterexample,
    random_joint_corpus,
)
from .distributions import InvalidDistributionError, lift_tail, TailSpec
from .jsonio import dist_loads, dist_to_json_dict, dumps
from .measures import build_report, parse_measure_list
from .plotting import density_csv, density_svg
from .scenarios import FIXTURE_IDS, evaluate_fixture, load, run_all


def _default_seed() -> int:
    raw = os.environ.get("RISKSCOPE_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def _load_dist_file(path: str):
    text = Path(path).read_text()
    return dist_loads(text)


# ---------------------------------------------------------------------------
# compute

def _cmd_compute(args) -> int:
    specs = parse_measure_list(args.measures)
    if not specs:
        raise ValueError("--measures must name at least one measure")
    reports = []
    failed = False
    for i, path in enumerate(args.dist):
        try:
            dist = _load_dist_file(path)
            report = build_report(
                path, dist, specs, mc_n=args.mc, seed=args.seed, seed_key=(i,)
            )
            reports.append(report.to_json_dict())
        except (OSError, ValueError) as exc:
            failed = True
            reports.append({"dist_id": path, "error": str(exc)})
    if args.pretty:
        for doc in reports:
            print(doc["dist_id"])
            if "error" in doc:
                print(f"  error: {doc['error']}")
                continue
            for row in doc["entries"]:
                label = row["kind"] + (
                    f"@{row['level']:g}" if "level" in row else ""
                )
                line = f"  {label:<10} {row['value']:>20.10g}  [{row['method']}]"
                if "mc_value" in row:
                    line += f"  mc={row['mc_value']:.10g} se={row['mc_se']:.4g}"
                print(line)
    else:
        print(dumps(reports))
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# synthesize

def _cmd_synthesize(args) -> int:
    doc = json.loads(Path(args.constraints).read_text())
    constraints = constraints_from_json_dict(doc)
    families = None
    if args.families:
        families = tuple(t.strip() for t in args.families.split(",") if t.strip())
    options = SynthesisOptions(
        families=families,
        min_separation=args.min_separation,
        seed=args.seed,
    )
    family = synthesize_family(constraints, args.count, options)
    report = verify_family(family, min_separation=args.min_separation)
    out = {
        "alpha": constraints.alpha,
        "family": family.to_json_dict(),
        "verification": report.to_json_dict(),
    }
    print(dumps(out))
    return 0


# ---------------------------------------------------------------------------
# distinguish

def _cmd_distinguish(args) -> int:
    if len(args.dists) < 2:
        print("error: need at least 2 distribution files", file=sys.stderr)
        return 2
    members = [_load_dist_file(p) for p in args.dists]
    menu = parse_measure_list(args.menu)
    result = distinguish(members, menu)
    doc = result.to_json_dict()
    doc["members"] = list(args.dists)
    if args.pretty:
        if result.separating is None:
            pairs = ", ".join(
                f"({args.dists[i]}, {args.dists[j]})"
                for i, j in result.unseparated_pairs
            )
            print(f"indistinguishable; unseparated pairs: {pairs}")
        else:
            print("separating set:", ", ".join(s.label() for s in result.separating))
        for path, vec in zip(args.dists, result.vectors):
            vals = "  ".join(f"{s.label()}={v:.10g}" for s, v in vec.entries)
            print(f"  {path}: {vals}")
    else:
        print(dumps(doc))
    return 0


# ---------------------------------------------------------------------------
# coherence

def _cmd_coherence(args) -> int:
    measures = parse_measure_list(args.measures)
    axioms = [a.strip() for a in args.axioms.split(",") if a.strip()]
    unknown = set(axioms) - set(AXIOMS)
    if unknown:
        raise ValueError(f"unknown axioms: {sorted(unknown)}")
    if args.dist:
        base = _load_dist_file(args.dist)
    else:
        base = lift_tail(
            TailSpec(alpha=0.95, segments=((0.0, 0.005), (10.0, 0.005)))
        )
    joint, _ = loan_counterexample()
    results = []
    for measure in measures:
        for axiom in axioms:
            if axiom == "subadditivity":
                results.append(check_subadditivity(measure, joint))
            elif axiom == "translation_invariance":
                results.append(
                    check_axiom(measure, base, axiom, shift_by=args.shift)
                )
            elif axiom == "positive_homogeneity":
                results.append(
                    check_axiom(measure, base, axiom, scale_by=args.scale)
                )
            else:
                results.append(check_axiom(measure, base, axiom))
    out = {"results": [r.to_json_dict() for r in results]}
    if args.corpus:
        violations = []
        for idx, j in enumerate(random_joint_corpus(args.seed, args.corpus)):
            for measure in measures:
                r = check_subadditivity(measure, j)
                if r.verdict == "violated":
                    doc = r.to_json_dict()
                    doc["corpus_index"] = idx
                    violations.append(doc)
        out["corpus"] = {"checked": args.corpus, "violations": violations}
    if args.pretty:
        for r in results:
            print(
                f"{r.measure.label():<8} {r.axiom:<24} {r.verdict:<14} "
                f"lhs={r.lhs:.10g} rhs={r.rhs:.10g}"
            )
        if args.corpus:
            print(
                f"corpus: {out['corpus']['checked']} joints, "
                f"{len(out['corpus']['violations'])} violations"
            )
    else:
        print(dumps(out))
    return 0


# ---------------------------------------------------------------------------
# paper

def _cmd_paper(args) -> int:
    if args.all:
        report = run_all()
        if args.pretty:
            for res in report.results:
                _print_fixture_table(res)
            print("all pass:", report.all_pass)
        else:
            print(dumps(report.to_json_dict()))
        return 0
    if args.figure is not None:
        fixture_id = f"fig{args.figure}"
    elif args.id:
        fixture_id = args.id
    else:
        raise ValueError("paper needs --figure N, --id ID, or --all")
    if fixture_id not in FIXTURE_IDS:
        raise ValueError(
            f"unknown fixture {fixture_id!r}; known: {', '.join(FIXTURE_IDS)}"
        )
    fixture = load(fixture_id)
    result = evaluate_fixture(fixture)
    doc = result.to_json_dict()
    doc["members"] = [
        {"id": mid, "dist": dist_to_json_dict(m)}
        for mid, m in zip(fixture.member_ids, fixture.members)
    ]
    if args.pretty:
        _print_fixture_table(result)
    else:
        print(dumps(doc))
    return 0


def _print_fixture_table(res) -> None:
    print(f"{res.fixture_id}: {res.narrative}")
    print(f"  {'member':<28} {'measure':<8} {'expected':>16} {'actual':>16} {'abs err':>10}")
    for row in res.rows:
        print(
            f"  {row.member_id:<28} {row.measure:<8} {row.expected:>16.10g} "
            f"{row.actual:>16.10g} {row.abs_error:>10.2e}"
        )
    if res.separating is None:
        print(f"  five-measure menu: indistinguishable {list(res.unseparated_pairs)}")
    else:
        print(f"  five-measure menu separates via: {', '.join(res.separating)}")
    print(f"  pass: {res.passes}")


# ---------------------------------------------------------------------------
# plot

def _cmd_plot(args) -> int:
    dist = _load_dist_file(args.dist)
    if args.format == "csv":
        payload = density_csv(dist)
    else:
        payload = density_svg(dist, alpha=args.alpha)
    out = Path(args.out)
    try:
        out.write_text(payload)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 2
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskscope",
        description="Exact risk-measure analytics on structured loss distributions",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("compute", help="evaluate measures on distribution files")
    p.add_argument("--dist", action="append", required=True, metavar="FILE")
    p.add_argument("--measures", required=True, help="e.g. var95,es95,ml")
    p.add_argument("--mc", type=int, default=None, help="add Monte Carlo oracle columns")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_compute)

    p = sub.add_parser("synthesize", help="build a family sharing a measure vector")
    p.add_argument("--constraints", required=True, metavar="FILE")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--families", default=None, help="restrict template tags (csv)")
    p.add_argument("--min-separation", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("distinguish", help="minimal measure set separating members")
    p.add_argument("--dists", nargs="+", required=True, metavar="FILE")
    p.add_argument(
        "--menu",
        default="var95,var99,es95,es99,ml",
        help="measure menu (default: the recommended five-measure vector)",
    )
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_distinguish)

    p = sub.add_parser("coherence", help="axiom checks and the two-loan paradox")
    p.add_argument("--measures", default="var95,es95,ml")
    p.add_argument("--axioms", default=",".join(AXIOMS))
    p.add_argument("--dist", default=None, metavar="FILE")
    p.add_argument("--shift", type=float, default=3.0)
    p.add_argument("--scale", type=float, default=2.0)
    p.add_argument("--corpus", type=int, default=0, help="also check N random joints")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_coherence)

    p = sub.add_parser("paper", help="print a bundled reference family and its table")
    p.add_argument("--figure", type=int, default=None)
    p.add_argument("--id", default=None)
    p.add_argument("--all", action="store_true")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_paper)

    p = sub.add_parser("plot", help="density plot artifact (svg or csv)")
    p.add_argument("--dist", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--format", choices=("svg", "csv"), required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InfeasibleError, CannotReachKError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvalidDistributionError,) as exc:
        print(f"error: invalid distribution: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
