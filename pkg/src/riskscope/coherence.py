"""Property checks for the risk-measure axioms.

These are case-based demonstrations, not proofs: each check evaluates both
sides of an axiom on a concrete input and compares at a relative tolerance
of 1e-9 (with a unit floor so values at 0 compare sanely).  The classic
two-loan portfolio shows the quantile measure punishing diversification;
the atom-splitting tail average never does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .distributions import (
    DiscreteDistribution,
    Distribution,
    require_valid,
    scale,
    shift,
    to_loss,
)
from .jsonio import dist_to_json_dict
from .measures import MeasureSpec, evaluate, max_loss

REL_TOL = 1e-9

AXIOMS = ("monotonicity", "positive_homogeneity", "translation_invariance", "subadditivity")


def _close(lhs: float, rhs: float) -> bool:
    return abs(lhs - rhs) <= REL_TOL * max(1.0, abs(lhs), abs(rhs))


@dataclass(frozen=True)
class AxiomCheckResult:
    axiom: str
    measure: MeasureSpec
    verdict: str  # "holds_on_cases" | "violated"
    lhs: float
    rhs: float
    witness: dict | None = None

    def __post_init__(self):
        if self.verdict not in ("holds_on_cases", "violated"):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if (self.witness is not None) != (self.verdict == "violated"):
            raise ValueError("witness present iff violated")

    def to_json_dict(self) -> dict:
        doc = {
            "axiom": self.axiom,
            "measure": {"kind": self.measure.kind},
            "verdict": self.verdict,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "witness": self.witness,
        }
        if self.measure.level is not None:
            doc["measure"]["level"] = self.measure.level
        return doc


@dataclass(frozen=True)
class JointDiscrete:
    """Joint outcome table for a pair of positions: (loss1, loss2, prob)."""

    outcomes: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "outcomes",
            tuple((float(a), float(b), float(p)) for a, b, p in self.outcomes),
        )

    def validate(self) -> list[str]:
        out = []
        if not self.outcomes:
            return ["outcomes: empty"]
        for i, (a, b, p) in enumerate(self.outcomes):
            if not all(map(math.isfinite, (a, b, p))):
                out.append(f"outcomes: non-finite entry at index {i}")
            elif not (0.0 <= p <= 1.0):
                out.append(f"outcomes: probability {p} outside [0, 1] at index {i}")
        if not out:
            total = float(math.fsum(p for _, _, p in self.outcomes))
            if abs(total - 1.0) > 1e-12:
                out.append(f"outcomes: probabilities sum to {total!r} != 1")
        return out

    def marginal(self, which: int) -> DiscreteDistribution:
        acc: dict[float, float] = {}
        for a, b, p in self.outcomes:
            v = (a, b)[which]
            acc[v] = acc.get(v, 0.0) + p
        return DiscreteDistribution(atoms=tuple(sorted(acc.items())))

    def sum_distribution(self) -> DiscreteDistribution:
        acc: dict[float, float] = {}
        for a, b, p in self.outcomes:
            acc[a + b] = acc.get(a + b, 0.0) + p
        return DiscreteDistribution(atoms=tuple(sorted(acc.items())))

    @staticmethod
    def independent(d1: DiscreteDistribution, d2: DiscreteDistribution) -> "JointDiscrete":
        d1 = to_loss(require_valid(d1))
        d2 = to_loss(require_valid(d2))
        outs = tuple(
            (x1, x2, p1 * p2) for x1, p1 in d1.atoms for x2, p2 in d2.atoms
        )
        return JointDiscrete(outcomes=outs)

    def to_json_list(self) -> list:
        return [[a, b, p] for a, b, p in self.outcomes]


def _require_joint(joint: JointDiscrete) -> JointDiscrete:
    violations = joint.validate()
    if violations:
        raise ValueError("; ".join(violations))
    return joint


def check_axiom(
    measure: MeasureSpec,
    dist: Distribution,
    axiom: str,
    shift_by: float | None = None,
    scale_by: float | None = None,
) -> AxiomCheckResult:
    """Evaluate both sides of one axiom on one case.

    translation_invariance needs shift_by (lhs = rho(L + a), rhs = rho(L) + a
    in loss space); positive_homogeneity needs scale_by >= 0; monotonicity
    takes no transform and asserts that a position with no possible loss
    gets a nonpositive measure.  Subadditivity lives on joint tables: see
    check_subadditivity.
    """
    require_valid(dist)
    if axiom == "translation_invariance":
        if shift_by is None:
            raise ValueError("translation_invariance needs shift_by")
        lhs = evaluate(shift(dist, shift_by), measure)
        rhs = evaluate(dist, measure) + float(shift_by)
        witness = None
        verdict = "holds_on_cases"
        if not _close(lhs, rhs):
            verdict = "violated"
            witness = {"dist": dist_to_json_dict(dist), "shift": float(shift_by)}
        return AxiomCheckResult(axiom, measure, verdict, lhs, rhs, witness)
    if axiom == "positive_homogeneity":
        if scale_by is None:
            raise ValueError("positive_homogeneity needs scale_by")
        if scale_by < 0:
            raise ValueError(f"scale factor must be nonnegative, got {scale_by}")
        lhs = evaluate(scale(dist, scale_by), measure)
        rhs = float(scale_by) * evaluate(dist, measure)
        witness = None
        verdict = "holds_on_cases"
        if not _close(lhs, rhs):
            verdict = "violated"
            witness = {"dist": dist_to_json_dict(dist), "scale": float(scale_by)}
        return AxiomCheckResult(axiom, measure, verdict, lhs, rhs, witness)
    if axiom == "monotonicity":
        lhs = evaluate(dist, measure)
        rhs = 0.0
        no_loss_possible = max_loss(dist) <= 0.0
        if no_loss_possible and lhs > REL_TOL * max(1.0, abs(lhs)):
            return AxiomCheckResult(
                axiom,
                measure,
                "violated",
                lhs,
                rhs,
                {"dist": dist_to_json_dict(dist)},
            )
        return AxiomCheckResult(axiom, measure, "holds_on_cases", lhs, rhs, None)
    if axiom == "subadditivity":
        raise ValueError("subadditivity is checked on a JointDiscrete; use check_subadditivity")
    raise ValueError(f"unknown axiom {axiom!r}")


def check_subadditivity(measure: MeasureSpec, joint: JointDiscrete) -> AxiomCheckResult:
    """Compare rho(X1 + X2) against rho(X1) + rho(X2) by exact enumeration."""
    _require_joint(joint)
    total = evaluate(joint.sum_distribution(), measure)
    part1 = evaluate(joint.marginal(0), measure)
    part2 = evaluate(joint.marginal(1), measure)
    lhs, rhs = total, part1 + part2
    if lhs > rhs + REL_TOL * max(1.0, abs(lhs), abs(rhs)):
        witness = {
            "joint": joint.to_json_list(),
            "sum_measure": total,
            "marginal_measures": [part1, part2],
        }
        return AxiomCheckResult("subadditivity", measure, "violated", lhs, rhs, witness)
    return AxiomCheckResult("subadditivity", measure, "holds_on_cases", lhs, rhs, None)


def loan_counterexample() -> tuple[JointDiscrete, DiscreteDistribution]:
    """The diversification paradox fixture.

    Two independent 1M loans and one 2M loan, each defaulting with
    probability 0.04.  Individually every loan clears the 95% quantile at 0,
    yet the diversified pair loses at least 1M with probability 0.0784, so
    its 95% quantile is 1M: the quantile measure punishes splitting the
    position.  Returns the joint table of the pair and the 2M loan.
    """
    one_million = DiscreteDistribution(atoms=((0.0, 0.96), (1_000_000.0, 0.04)))
    two_million = DiscreteDistribution(atoms=((0.0, 0.96), (2_000_000.0, 0.04)))
    return JointDiscrete.independent(one_million, one_million), two_million


def random_joint_corpus(seed: int, count: int) -> Iterator[JointDiscrete]:
    """Fixed-seed stream of small joint tables (grids up to 6x6).

    Losses are drawn on a moderate range of both signs; probabilities are
    normalized positives with the last entry adjusted so the total is
    exactly the float 1.0.  Exact enumeration keeps every downstream oracle
    trivial.
    """
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n1 = int(rng.integers(2, 7))
        n2 = int(rng.integers(2, 7))
        l1 = np.sort(rng.uniform(-100.0, 1000.0, size=n1))
        l2 = np.sort(rng.uniform(-100.0, 1000.0, size=n2))
        raw = rng.exponential(1.0, size=n1 * n2) + 1e-3
        probs = raw / raw.sum()
        probs[-1] = 1.0 - float(probs[:-1].sum())
        outs = []
        k = 0
        for a in l1:
            for b in l2:
                outs.append((float(a), float(b), float(probs[k])))
                k += 1
        yield JointDiscrete(outcomes=tuple(outs))
