"""Synthesis of distinct tails sharing a measure vector, and the converse
search for a minimal measure set that tells a family apart.

The generator is never trusted: every candidate member is re-verified
through the measure evaluators and an exact L1-distance gate before it is
admitted, so correctness does not depend on the construction being clever.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import (
    Distribution,
    TailSpec,
    l1_distance,
    validate,
)
from .jsonio import dist_to_json_dict
from .measures import (
    MeasureSpec,
    MeasureVector,
    canonical_specs,
    evaluate,
    evaluate_vector,
)

TARGET_TOL = 1e-9
DEFAULT_MIN_SEPARATION = 1e-3

TEMPLATE_TAGS = (
    "uniform",
    "rising_ramp",
    "falling_ramp",
    "triangle_train",
    "symmetric_perturbation",
)


class InfeasibleError(ValueError):
    """The constraint set cannot be met; `.forced` maps each missed target
    label to the value the construction forces."""

    def __init__(self, message: str, forced: dict[str, float] | None = None):
        super().__init__(message)
        self.forced = dict(forced or {})


class CannotReachKError(RuntimeError):
    """Fewer verified distinct members exist than requested under the budget."""

    def __init__(self, found: int, requested: int):
        super().__init__(
            f"only {found} verified distinct members found, {requested} requested"
        )
        self.found = found
        self.requested = requested


@dataclass(frozen=True)
class ConstraintSet:
    """Prescribed measure values: the base tail level, the targets, and any
    nested (deeper) levels the targets refer to."""

    alpha: float
    targets: tuple[tuple[MeasureSpec, float], ...]
    nested_levels: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(
            self,
            "targets",
            tuple((s, float(v)) for s, v in self.targets),
        )
        object.__setattr__(
            self, "nested_levels", tuple(float(x) for x in self.nested_levels)
        )

    def target(self, kind: str, level: float | None = None) -> float | None:
        for spec, value in self.targets:
            if spec.kind == kind and (
                kind == "ml" or spec.level == level
            ):
                return value
        return None

    def specs(self) -> tuple[MeasureSpec, ...]:
        return tuple(s for s, _ in self.targets)


def validate_constraints(cs: ConstraintSet) -> list[str]:
    out = []
    if not (0.0 < cs.alpha < 1.0):
        out.append(f"alpha {cs.alpha} outside (0, 1)")
    if not cs.targets:
        out.append("no targets")
        return out
    keys = [s.canonical_key() for s, _ in cs.targets]
    if len(set(keys)) != len(keys):
        out.append("duplicate target measures")
    allowed = {cs.alpha, *cs.nested_levels}
    for spec, _ in cs.targets:
        if spec.kind != "ml" and spec.level not in allowed:
            out.append(
                f"target level {spec.level} is neither the base alpha nor a "
                "declared nested level"
            )
    for lv in cs.nested_levels:
        if not (cs.alpha < lv < 1.0):
            out.append(f"nested level {lv} must lie strictly between alpha and 1")
    v = cs.target("var", cs.alpha)
    e = cs.target("es", cs.alpha)
    m = cs.target("ml")
    if v is not None and e is not None and not (v < e):
        out.append("VaR must be < ES")
    if e is not None and m is not None and not (e < m):
        out.append("ES must be < ML")
    if v is not None and m is not None and not (v < m):
        out.append("VaR must be < ML")
    return out


def _require_constraints(cs: ConstraintSet) -> None:
    violations = validate_constraints(cs)
    if violations:
        raise InfeasibleError("infeasible: " + "; ".join(violations))


def constraints_from_json_dict(doc: dict) -> ConstraintSet:
    try:
        targets = []
        for row in doc["targets"]:
            kind = row["kind"]
            level = row.get("level")
            spec = MeasureSpec(kind=kind, level=None if kind == "ml" else float(level))
            targets.append((spec, float(row["value"])))
        return ConstraintSet(
            alpha=float(doc["alpha"]),
            targets=tuple(targets),
            nested_levels=tuple(float(x) for x in doc.get("nested_levels", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed constraint JSON: {exc}") from exc


def constraints_to_json_dict(cs: ConstraintSet) -> dict:
    rows = []
    for spec, value in cs.targets:
        row = {"kind": spec.kind}
        if spec.level is not None:
            row["level"] = spec.level
        row["value"] = value
        rows.append(row)
    return {
        "alpha": cs.alpha,
        "targets": rows,
        "nested_levels": list(cs.nested_levels),
    }


# ---------------------------------------------------------------------------
# templates

@dataclass(frozen=True)
class BumpSpec:
    """Two mirrored pairs of tents about `center`: a +area pair at
    center +- offsets[0] and a -area pair at center +- offsets[1].

    One opposite-sign pair of single tents cannot conserve both mass and
    first moment, so the pairs are mirrored: the perturbation then adds
    zero mass and zero moment, leaving every anchored quantile and tail
    average untouched, and is exactly symmetric about `center`.
    """

    center: float
    offsets: tuple[float, float]
    width: float
    area: float

    def tents(self) -> tuple[tuple[float, float], ...]:
        dp, dm = self.offsets
        return (
            (self.center - dp, self.area),
            (self.center + dp, self.area),
            (self.center - dm, -self.area),
            (self.center + dm, -self.area),
        )


@dataclass(frozen=True)
class TemplateFamily:
    """A closed-form tail shape: constant, the two ramps, a train of n
    congruent triangles, or a bump perturbation of the constant shape."""

    tag: str
    n: int | None = None
    bumps: BumpSpec | None = None

    def __post_init__(self):
        if self.tag not in TEMPLATE_TAGS:
            raise ValueError(f"unknown template tag {self.tag!r}")
        if self.tag == "triangle_train":
            if self.n is None or self.n < 1:
                raise ValueError("triangle_train needs n >= 1")
        elif self.n is not None:
            raise ValueError(f"{self.tag} takes no n")
        if (self.tag == "symmetric_perturbation") != (self.bumps is not None):
            raise ValueError("bumps present iff tag is symmetric_perturbation")

    def label(self) -> str:
        if self.tag == "triangle_train":
            return f"triangle_train({self.n})"
        return self.tag


def _template_segments(
    family: TemplateFamily, c: float, d: float, mass: float
) -> tuple[tuple[float, float], ...]:
    span = d - c
    if family.tag == "uniform":
        h = mass / span
        return ((c, h), (d, h))
    if family.tag == "rising_ramp":
        return ((c, 0.0), (d, 2.0 * mass / span))
    if family.tag == "falling_ramp":
        return ((c, 2.0 * mass / span), (d, 0.0))
    if family.tag == "triangle_train":
        n = family.n
        xs = np.linspace(c, d, 2 * n + 1)
        h = 2.0 * mass / span
        return tuple(
            (float(x), h if i % 2 else 0.0) for i, x in enumerate(xs)
        )
    if family.tag == "symmetric_perturbation":
        base = _template_segments(TemplateFamily(tag="uniform"), c, d, mass)
        return _apply_bumps(base, family.bumps, c, d)
    raise ValueError(f"unknown template tag {family.tag!r}")


def _apply_bumps(
    segments: tuple[tuple[float, float], ...], bumps: BumpSpec, c: float, d: float
) -> tuple[tuple[float, float], ...]:
    half = bumps.width / 2.0
    for pos, _ in bumps.tents():
        if not (c < pos - half and pos + half < d):
            raise ValueError(
                f"bump at {pos} (half-width {half}) leaves the open tail interval"
            )
    xs = [x for x, _ in segments]
    for pos, _ in bumps.tents():
        xs.extend((pos - half, pos, pos + half))
    grid = np.unique(np.array(xs, dtype=np.float64))
    base_x = np.array([x for x, _ in segments])
    base_f = np.array([f for _, f in segments])
    vals = np.interp(grid, base_x, base_f)
    for pos, area in bumps.tents():
        peak = 2.0 * area / bumps.width
        vals = vals + peak * np.maximum(0.0, 1.0 - np.abs(grid - pos) / half)
    return tuple((float(x), float(f)) for x, f in zip(grid, vals))


def solve_template(family: TemplateFamily, constraints: ConstraintSet) -> TailSpec:
    """Closed-form parameter solve for one template.

    The tail support is anchored by the base-level VaR target (start) and
    the ML target (end); the template shape then forces every remaining
    measure.  If any target is missed by more than 1e-9 the template is
    infeasible and the error reports each forced value.
    """
    _require_constraints(constraints)
    c = constraints.target("var", constraints.alpha)
    d = constraints.target("ml")
    if c is None or d is None:
        raise InfeasibleError(
            "infeasible: templates need a base-level var target and an ml target"
        )
    if not (c < d):
        raise InfeasibleError(f"infeasible: var target {c} must be below ml target {d}")
    mass = 1.0 - constraints.alpha
    segments = _template_segments(family, c, d, mass)
    tail = TailSpec(alpha=constraints.alpha, segments=segments)
    problems = validate(tail)
    if problems:
        raise InfeasibleError(
            f"infeasible: {family.label()} violates tail invariants: "
            + "; ".join(problems)
        )
    forced: dict[str, float] = {}
    missed = []
    for spec, target in constraints.targets:
        actual = evaluate(tail, spec)
        forced[spec.label()] = actual
        if abs(actual - target) > TARGET_TOL:
            missed.append(f"{spec.label()} forced to {actual!r}, target {target!r}")
    if missed:
        raise InfeasibleError(
            f"infeasible for {family.label()}: " + "; ".join(missed), forced=forced
        )
    return tail


# ---------------------------------------------------------------------------
# family synthesis

@dataclass(frozen=True)
class SynthesisOptions:
    families: tuple[str, ...] | None = None  # None = all template tags
    min_separation: float = DEFAULT_MIN_SEPARATION
    seed: int = 0
    train_schedule: tuple[int, ...] = (2, 4)
    max_attempts: int = 200


@dataclass(frozen=True)
class AmbiguityFamily:
    """Pairwise-distinct tails certified to share one measure vector."""

    members: tuple[TailSpec, ...]
    member_tags: tuple[str, ...]
    shared_vector: MeasureVector
    distinctness: tuple[tuple[int, int, float], ...]

    def to_json_dict(self) -> dict:
        vec = []
        for spec, value in self.shared_vector.entries:
            row = {"kind": spec.kind}
            if spec.level is not None:
                row["level"] = spec.level
            row["value"] = value
            vec.append(row)
        return {
            "shared_vector": vec,
            "member_tags": list(self.member_tags),
            "members": [dist_to_json_dict(m) for m in self.members],
            "distinctness": [[i, j, d] for i, j, d in self.distinctness],
        }


@dataclass(frozen=True)
class FamilyVerification:
    passes: bool
    worst_deviation: float
    worst_member: int | None
    worst_entry: str | None
    min_l1: float
    min_pair: tuple[int, int] | None
    failures: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "passes": self.passes,
            "worst_deviation": self.worst_deviation,
            "worst_member": self.worst_member,
            "worst_entry": self.worst_entry,
            "min_l1": self.min_l1,
            "min_pair": list(self.min_pair) if self.min_pair else None,
            "failures": list(self.failures),
        }


def verify_family(
    family: AmbiguityFamily,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    tol: float = TARGET_TOL,
) -> FamilyVerification:
    """Re-check the family's two defining invariants from scratch.

    Every member is re-evaluated against the shared vector (absolute
    tolerance `tol` per entry) and all pairwise L1 distances are recomputed
    and compared to `min_separation`.  Diagnostic: never raises.
    """
    failures = []
    worst_dev = 0.0
    worst_member = None
    worst_entry = None
    for i, member in enumerate(family.members):
        problems = validate(member)
        if problems:
            failures.append(f"member {i}: invalid: " + "; ".join(problems))
            continue
        for spec, target in family.shared_vector.entries:
            dev = abs(evaluate(member, spec) - target)
            if dev > worst_dev:
                worst_dev, worst_member, worst_entry = dev, i, spec.label()
            if dev > tol:
                failures.append(
                    f"member {i}: {spec.label()} deviates by {dev!r} (> {tol})"
                )
    min_l1 = float("inf")
    min_pair = None
    for i in range(len(family.members)):
        for j in range(i + 1, len(family.members)):
            d = l1_distance(family.members[i], family.members[j])
            if d < min_l1:
                min_l1, min_pair = d, (i, j)
            if d < min_separation:
                failures.append(
                    f"members {i} and {j}: L1 distance {d!r} below {min_separation}"
                )
    return FamilyVerification(
        passes=not failures,
        worst_deviation=worst_dev,
        worst_member=worst_member,
        worst_entry=worst_entry,
        min_l1=min_l1,
        min_pair=min_pair,
        failures=tuple(failures),
    )


def _perturbation_region(
    constraints: ConstraintSet, base: TailSpec
) -> tuple[float, float]:
    """Open interval the bumps must stay inside.

    Without nested levels, the whole tail interior.  With nested levels the
    bumps live strictly below the innermost sub-tail boundary so no mass
    crosses it; the sub-tails themselves stay bit-identical to the base.
    """
    c, d = base.start, base.end
    if not constraints.nested_levels:
        return c, d
    boundary = min(
        evaluate(base, MeasureSpec(kind="var", level=lv))
        for lv in constraints.nested_levels
    )
    return c, boundary


def synthesize_family(
    constraints: ConstraintSet, k: int, options: SynthesisOptions | None = None
) -> AmbiguityFamily:
    """Produce at least k verified, pairwise-distinct tails meeting the
    constraint set.

    Feasible closed-form templates are enumerated first (constant shape,
    ramps, triangle trains); if more members are needed, mass-and-moment
    neutral bump perturbations of the constant shape are drawn from a
    fixed-seed schedule.  Every candidate is admitted only after
    re-evaluating all targets and clearing the L1 separation gate.
    """
    if k < 2:
        raise ValueError(f"a family needs k >= 2 members, got {k}")
    options = options or SynthesisOptions()
    _require_constraints(constraints)
    enabled = options.families if options.families is not None else TEMPLATE_TAGS
    unknown = set(enabled) - set(TEMPLATE_TAGS)
    if unknown:
        raise ValueError(f"unknown template tags: {sorted(unknown)}")

    members: list[TailSpec] = []
    tags: list[str] = []

    def admit(candidate: TailSpec, label: str) -> bool:
        if validate(candidate):
            return False
        for spec, target in constraints.targets:
            if abs(evaluate(candidate, spec) - target) > TARGET_TOL:
                return False
        for other in members:
            if l1_distance(candidate, other) < options.min_separation:
                return False
        members.append(candidate)
        tags.append(label)
        return True

    plain = [t for t in ("uniform", "rising_ramp", "falling_ramp") if t in enabled]
    for tag in plain:
        try:
            admit(solve_template(TemplateFamily(tag=tag), constraints), tag)
        except InfeasibleError:
            pass
    if "triangle_train" in enabled:
        for n in options.train_schedule:
            if len(members) >= k:
                break
            fam = TemplateFamily(tag="triangle_train", n=n)
            try:
                admit(solve_template(fam, constraints), fam.label())
            except InfeasibleError:
                break  # the forced values do not depend on n

    if len(members) < k and "symmetric_perturbation" in enabled:
        try:
            base = solve_template(TemplateFamily(tag="uniform"), constraints)
        except InfeasibleError:
            base = None
        if base is not None:
            lo, hi = _perturbation_region(constraints, base)
            span = hi - lo
            h0 = base.segments[0][1]
            center = 0.5 * (lo + hi)
            rng = np.random.default_rng(options.seed)
            attempt = 0
            generated = 0
            while len(members) < k and attempt < options.max_attempts:
                attempt += 1
                w = span * float(rng.uniform(0.05, 0.12))
                margin = 0.02 * span
                lo_off = 0.55 * w
                hi_off = 0.5 * span - margin - 0.55 * w
                if hi_off <= lo_off:
                    break
                dp, dm = np.sort(rng.uniform(lo_off, hi_off, size=2))
                if dm - dp < 1.1 * w:
                    continue
                if rng.random() < 0.5:
                    dp, dm = dm, dp  # vary which pair carries the positive sign
                area = float(rng.uniform(0.5, 0.95)) * 0.36 * w * h0
                bumps = BumpSpec(
                    center=center, offsets=(float(dp), float(dm)), width=w, area=area
                )
                fam = TemplateFamily(tag="symmetric_perturbation", bumps=bumps)
                try:
                    candidate = solve_template(fam, constraints)
                except (InfeasibleError, ValueError):
                    continue
                generated += 1
                admit(candidate, f"symmetric_perturbation({generated})")

    if len(members) < k:
        raise CannotReachKError(found=len(members), requested=k)

    shared = MeasureVector(
        entries=tuple(
            (s, v)
            for s, v in sorted(
                constraints.targets, key=lambda t: t[0].canonical_key()
            )
        )
    )
    distinctness = tuple(
        (i, j, l1_distance(members[i], members[j]))
        for i in range(len(members))
        for j in range(i + 1, len(members))
    )
    family = AmbiguityFamily(
        members=tuple(members),
        member_tags=tuple(tags),
        shared_vector=shared,
        distinctness=distinctness,
    )
    report = verify_family(family, min_separation=options.min_separation)
    if not report.passes:
        raise RuntimeError(
            "synthesis produced a family that fails verification: "
            + "; ".join(report.failures)
        )
    return family


# ---------------------------------------------------------------------------
# minimal separating measure sets

@dataclass(frozen=True)
class DistinguishResult:
    separating: tuple[MeasureSpec, ...] | None
    vectors: tuple[MeasureVector, ...]
    unseparated_pairs: tuple[tuple[int, int], ...] = ()

    @property
    def indistinguishable(self) -> bool:
        return self.separating is None

    def to_json_dict(self) -> dict:
        def spec_row(spec):
            row = {"kind": spec.kind}
            if spec.level is not None:
                row["level"] = spec.level
            return row

        return {
            "separating": None
            if self.separating is None
            else [spec_row(s) for s in self.separating],
            "indistinguishable": self.indistinguishable,
            "unseparated_pairs": [list(p) for p in self.unseparated_pairs],
            "vectors": [
                [
                    {**spec_row(s), "value": v}
                    for s, v in vec.entries
                ]
                for vec in self.vectors
            ],
        }


def distinguish(
    members: Sequence[Distribution],
    menu: Sequence[MeasureSpec],
    tol: float = TARGET_TOL,
) -> DistinguishResult:
    """Smallest subset of the menu whose values differ pairwise across the
    members.

    Subsets are searched exhaustively in (cardinality, canonical measure
    order), so the first hit is minimal and the output is deterministic.
    When even the full menu leaves some pair of members with identical
    values, the result lists those pairs and reports indistinguishable.
    """
    if len(members) < 2:
        raise ValueError(f"need at least 2 members, got {len(members)}")
    if not menu:
        raise ValueError("menu must not be empty")
    specs = canonical_specs(menu)
    vectors = []
    for i, member in enumerate(members):
        try:
            vectors.append(evaluate_vector(member, specs))
        except Exception as exc:
            raise ValueError(f"member {i}: {exc}") from exc
    values = [vec.values() for vec in vectors]

    def separated_pairs(cols: tuple[int, ...]) -> list[tuple[int, int]]:
        bad = []
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                if not any(abs(values[i][s] - values[j][s]) > tol for s in cols):
                    bad.append((i, j))
        return bad

    for size in range(1, len(specs) + 1):
        for cols in itertools.combinations(range(len(specs)), size):
            if not separated_pairs(cols):
                return DistinguishResult(
                    separating=tuple(specs[s] for s in cols),
                    vectors=tuple(vectors),
                )
    return DistinguishResult(
        separating=None,
        vectors=tuple(vectors),
        unseparated_pairs=tuple(separated_pairs(tuple(range(len(specs))))),
    )
