"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
come; tolerances and time budgets are pinned in the tests themselves.
"""

import time

import numpy as np

from strategies import random_distribution

from riskscope import (
    ConstraintSet,
    DiscreteDistribution,
    JointDiscrete,
    MeasureSpec,
    SynthesisOptions,
    TailSpec,
    TemplateFamily,
    check_axiom,
    check_subadditivity,
    convolve,
    distinguish,
    dist_dumps,
    dist_loads,
    es,
    load,
    loan_counterexample,
    max_loss,
    mc_estimate,
    random_joint_corpus,
    solve_template,
    synthesize_family,
    var,
    verify_family,
)
from riskscope.cli import main
from riskscope.scenarios import FIVE_MEASURE_MENU

VAR95 = MeasureSpec("var", 0.95)
ES95 = MeasureSpec("es", 0.95)
ML = MeasureSpec("ml")


def finish(number: int, name: str, failures: list, started: float, budget: float):
    elapsed = time.perf_counter() - started
    if elapsed > budget:
        failures.append(f"took {elapsed:.2f}s, budget {budget:.0f}s")
    status = "PASS" if not failures else "FAIL"
    print(f"ACCEPTANCE {number} ({name}): {status} [{elapsed:.2f}s]")
    assert not failures, failures


def test_criterion_1_loan_counterexample():
    started = time.perf_counter()
    failures = []
    one = DiscreteDistribution(atoms=((0.0, 0.96), (1_000_000.0, 0.04)))
    pair = convolve(one, one)
    if pair.atoms != ((0.0, 0.9216), (1_000_000.0, 0.0768), (2_000_000.0, 0.0016)):
        failures.append(f"pair atoms {pair.atoms}")
    joint, loan_2m = loan_counterexample()
    if var(loan_2m, 0.95) != 0.0:
        failures.append("2M loan quantile not 0")
    if var(one, 0.95) != 0.0:
        failures.append("1M loan quantile not 0")
    if var(pair, 0.95) != 1_000_000.0:
        failures.append("pair quantile not 1M")
    check = check_subadditivity(VAR95, joint)
    if check.verdict != "violated" or check.lhs != 1_000_000.0 or check.rhs != 0.0:
        failures.append(f"subadditivity check: {check.verdict} {check.lhs} {check.rhs}")
    finish(1, "loan counterexample, exact", failures, started, 1.0)


# (fixture_id, measure label, per-member expected values)
FIGURE_TABLE = [
    ("fig2", "es95", [5 / 2, 20 / 3, 20 / 3]),
    ("fig2", "ml", [5.0, 20.0, 10.0]),
    ("fig3", "es95", [10.0, 10.0, 10.0]),
    ("fig3", "ml", [16.0, 15.0, 30.0]),
    ("fig3", "var95", [4.0, 0.0, 0.0]),
    ("fig4", "var95", [-5.0, 0.0, 0.0]),
    ("fig4", "es95", [-5 / 3, 10 / 3, 5 / 2]),
    ("fig4", "ml", [5.0, 5.0, 5.0]),
    ("fig5", "var95", [0.0, 0.0, 0.0]),
    ("fig5", "es95", [10.0, 10.0, 10.0]),
    ("fig5", "ml", [20.0, 15.0, 30.0]),
    ("fig6", "var95", [0.0, 0.0, 0.0]),
    ("fig6", "ml", [5.0, 5.0, 5.0]),
    ("fig6", "es95", [5 / 3, 5 / 2, 10 / 3]),
    ("fig7", "es95", [5.0, 5.0, 5.0]),
    ("fig7", "ml", [15.0, 15.0, 15.0]),
    ("fig7", "var95", [-5.0, -15.0, 0.0]),
    ("fig8", "var95", [0.0, 0.0, 0.0, 0.0]),
    ("fig8", "es95", [5.0, 5.0, 5.0, 5.0]),
    ("fig8", "ml", [10.0, 10.0, 10.0, 10.0]),
]


def test_criterion_2_figure_value_table():
    started = time.perf_counter()
    failures = []
    evaluators = {
        "var95": lambda d: var(d, 0.95),
        "es95": lambda d: es(d, 0.95),
        "ml": max_loss,
    }
    for fid, label, expected in FIGURE_TABLE:
        fixture = load(fid)
        for member_id, dist, want in zip(fixture.member_ids, fixture.members, expected):
            got = evaluators[label](dist)
            if abs(got - want) > 1e-12:
                failures.append(f"{fid}/{member_id} {label}: {got!r} != {want!r}")
    finish(2, "figure value table at 1e-12", failures, started, 1.0)


def test_criterion_3_distinguisher_claims():
    started = time.perf_counter()
    failures = []
    fig2 = list(load("fig2").members)
    r = distinguish(fig2, [ES95])
    if not (r.indistinguishable and r.unseparated_pairs == ((1, 2),)):
        failures.append(f"fig2 es95: {r.unseparated_pairs}")
    r = distinguish(fig2, [ML])
    if r.indistinguishable:
        failures.append("fig2 ml should separate")
    r = distinguish(list(load("fig5").members), [VAR95, ES95])
    if not r.indistinguishable:
        failures.append("fig5 var95+es95 should not separate")
    r = distinguish(list(load("fig6").members), [ES95])
    if r.indistinguishable:
        failures.append("fig6 es95 should separate")
    r = distinguish(list(load("fig7").members), [VAR95])
    if r.indistinguishable:
        failures.append("fig7 var95 should separate")
    finish(3, "distinguisher claims, exact", failures, started, 1.0)


def test_criterion_4_ambiguity_synthesis():
    started = time.perf_counter()
    failures = []
    constraints = ConstraintSet(
        alpha=0.95, targets=((VAR95, 0.0), (ES95, 5.0), (ML, 10.0))
    )
    family = synthesize_family(constraints, k=4, options=SynthesisOptions(seed=8))
    if len(family.members) < 4:
        failures.append(f"only {len(family.members)} members")
    if not verify_family(family).passes:
        failures.append("family fails verification")
    low = min(d for _, _, d in family.distinctness)
    if low < 1e-3:
        failures.append(f"pairwise L1 {low} below 1e-3")
    for n in (2, 4, 8):
        train = solve_template(TemplateFamily(tag="triangle_train", n=n), constraints)
        got = (var(train, 0.95), es(train, 0.95), max_loss(train))
        if any(abs(g - w) > 1e-12 for g, w in zip(got, (0.0, 5.0, 10.0))):
            failures.append(f"train({n}) evaluates to {got}")
    finish(4, "ambiguity synthesis", failures, started, 5.0)


def test_criterion_5_five_measure_indistinguishability():
    started = time.perf_counter()
    failures = []
    # re-derive the targets from the constant shape on [0, 10]: the
    # worst-1% boundary is the point where the tail holds 0.04 of mass,
    # and the sub-tail average is the sub-tail midpoint
    c, d, alpha, nested = 0.0, 10.0, 0.95, 0.99
    height = (1.0 - alpha) / (d - c)
    q99 = c + (nested - alpha) / height
    es99 = 0.5 * (q99 + d)
    if abs(q99 - 8.0) > 1e-9 or abs(es99 - 9.0) > 1e-9:
        failures.append(f"derived targets off: {q99}, {es99}")
    constraints = ConstraintSet(
        alpha=alpha,
        targets=(
            (VAR95, 0.0),
            (MeasureSpec("var", 0.99), 8.0),
            (ES95, 5.0),
            (MeasureSpec("es", 0.99), 9.0),
            (ML, 10.0),
        ),
        nested_levels=(0.99,),
    )
    family = synthesize_family(constraints, k=2, options=SynthesisOptions(seed=5))
    if len(family.members) < 2:
        failures.append("fewer than 2 members")
    if not verify_family(family).passes:
        failures.append("family fails verification")
    result = distinguish(list(family.members), list(FIVE_MEASURE_MENU))
    if not result.indistinguishable:
        failures.append(f"separated by {[s.label() for s in result.separating]}")
    finish(5, "five-measure indistinguishability", failures, started, 10.0)


def test_criterion_6_monte_carlo_oracle_suite():
    started = time.perf_counter()
    failures = []
    n = 1_000_000
    seed = 0
    for fid in ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"):
        fixture = load(fid)
        for member_id, dist in zip(fixture.member_ids, fixture.members):
            seed += 1
            for spec in (VAR95, ES95):
                exact = var(dist, 0.95) if spec.kind == "var" else es(dist, 0.95)
                est = mc_estimate(dist, spec, n, seed=(611, seed))
                if abs(est.value - exact) > 3.0 * est.se:
                    failures.append(
                        f"{fid}/{member_id} {spec.label()}: exact {exact}, "
                        f"mc {est.value} +- {est.se}"
                    )
    finish(6, "Monte Carlo oracle suite at n=1e6", failures, started, 60.0)


def _random_case_dist(rng):
    if rng.random() < 0.5:
        n = int(rng.integers(2, 7))
        xs = np.cumsum(rng.uniform(0.3, 6.0, size=n)) + rng.uniform(-30.0, 30.0)
        fs = rng.uniform(0.05, 3.0, size=n)
        fs = fs / np.trapezoid(fs, xs)
        from riskscope import PiecewiseLinearDensity

        return PiecewiseLinearDensity(knots=tuple(zip(map(float, xs), map(float, fs))))
    n = int(rng.integers(1, 7))
    xs = np.cumsum(rng.uniform(0.5, 40.0, size=n)) + rng.uniform(-200.0, 200.0)
    raw = rng.uniform(0.05, 1.0, size=n)
    probs = raw / raw.sum()
    probs[-1] = 1.0 - float(probs[:-1].sum())
    return DiscreteDistribution(atoms=tuple(zip(map(float, xs), map(float, probs))))


def test_criterion_7_axiom_property_suite():
    started = time.perf_counter()
    failures = []
    rng = np.random.default_rng(20260807)
    # 500 transform cases x 3 measures x 2 axioms
    for i in range(500):
        dist = _random_case_dist(rng)
        a = float(rng.uniform(-500.0, 500.0))
        k = float(rng.uniform(0.01, 50.0))
        for spec in (VAR95, ES95, ML):
            r = check_axiom(spec, dist, "translation_invariance", shift_by=a)
            if r.verdict != "holds_on_cases":
                failures.append(f"case {i} translation {spec.label()}: {r.lhs} vs {r.rhs}")
            r = check_axiom(spec, dist, "positive_homogeneity", scale_by=k)
            if r.verdict != "holds_on_cases":
                failures.append(f"case {i} homogeneity {spec.label()}: {r.lhs} vs {r.rhs}")
    # 500 joint cases: the atom-splitting tail average must never violate;
    # quantile violations are collected and must replay bit-identically
    var_violations = []
    var80 = MeasureSpec("var", 0.8)
    for idx, joint in enumerate(random_joint_corpus(seed=20260808, count=500)):
        r = check_subadditivity(ES95, joint)
        if r.verdict == "violated":
            failures.append(f"joint {idx}: tail average violated subadditivity")
        for spec in (var80, VAR95):
            r = check_subadditivity(spec, joint)
            if r.verdict == "violated":
                var_violations.append((idx, spec, r))
    for idx, spec, r in var_violations:
        replay = check_subadditivity(
            spec, JointDiscrete(outcomes=tuple(tuple(o) for o in r.witness["joint"]))
        )
        if (replay.lhs, replay.rhs, replay.verdict) != (r.lhs, r.rhs, r.verdict):
            failures.append(f"joint {idx} witness does not replay")
    print(
        f"  (quantile subadditivity violations found and replayed: "
        f"{len(var_violations)})"
    )
    finish(7, "axiom property suite, 1000 cases", failures, started, 30.0)


def test_criterion_8_round_trip_and_determinism(tmp_path, capsys):
    started = time.perf_counter()
    failures = []
    rng = np.random.default_rng(20260809)
    for i in range(100):
        dist = random_distribution(rng)
        text = dist_dumps(dist)
        if dist_dumps(dist_loads(text)) != text:
            failures.append(f"round trip {i} not byte-stable")
    src = tmp_path / "tail.json"
    t = TailSpec(alpha=0.95, segments=((0.0, 0.005), (10.0, 0.005)))
    src.write_text(dist_dumps(t))
    payloads = []
    for name in ("first.svg", "second.svg"):
        out = tmp_path / name
        code = main(["plot", "--dist", str(src), "--out", str(out), "--format", "svg"])
        capsys.readouterr()
        if code != 0:
            failures.append(f"plot exited {code}")
        payloads.append(out.read_bytes())
    if payloads[0] != payloads[1]:
        failures.append("plot output not byte-identical across runs")
    finish(8, "round-trip and determinism", failures, started, 30.0)
