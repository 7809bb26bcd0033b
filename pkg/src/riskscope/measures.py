"""Value at Risk, Expected Shortfall, and Maximum Loss.

Every measure is evaluated in loss space (positive = bad); return-oriented
inputs are converted once on entry, which also absorbs the sign flip in the
usual return-space definitions.  Closed forms are exact for polylines,
tails, and outcome tables; `mc_estimate` provides an independent
sampling-based oracle.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distributions import (
    DiscreteDistribution,
    Distribution,
    EmpiricalSample,
    PiecewiseLinearDensity,
    TailSpec,
    _poly_first_reach,
    interval_first_moment,
    interval_mass,
    lift_tail,
    require_valid,
    sample,
    to_loss,
)

ATOM_SPLITTING = "atom_splitting"
STRICT_CONDITIONAL = "strict_conditional"

_KIND_ORDER = {"var": 0, "es": 1, "ml": 2}


class UndefinedMeasureError(ValueError):
    """Measure has no value on this input (e.g. conditioning on a null event)."""


@dataclass(frozen=True)
class MeasureSpec:
    """Which measure at which level.

    kind is one of {"var", "es", "ml"}; level is the confidence level in
    (0, 1) and must be present exactly for var and es.  es_mode selects
    between the coherent atom-splitting tail average (default) and the
    literal conditional mean above the quantile.
    """

    kind: str
    level: float | None = None
    es_mode: str = ATOM_SPLITTING

    def __post_init__(self):
        if self.kind not in _KIND_ORDER:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == "ml":
            if self.level is not None:
                raise ValueError("ml takes no level")
        else:
            if self.level is None:
                raise ValueError(f"{self.kind} requires a level")
            if not (0.0 < self.level < 1.0):
                raise ValueError(f"level {self.level} outside (0, 1)")
        if self.es_mode not in (ATOM_SPLITTING, STRICT_CONDITIONAL):
            raise ValueError(f"unknown es_mode {self.es_mode!r}")

    def canonical_key(self):
        return (_KIND_ORDER[self.kind], self.level if self.level is not None else 0.0)

    def label(self) -> str:
        """Short spec string: var95, es99, ml, var@0.975 for awkward levels."""
        if self.kind == "ml":
            return "ml"
        pct = self.level * 100.0
        if abs(pct - round(pct)) < 1e-9 and 1 <= round(pct) <= 99:
            return f"{self.kind}{round(pct):02d}"
        return f"{self.kind}@{self.level:.12g}"


_SHORT = re.compile(r"^(var|es|ml)(\d{2})?$")
_AT = re.compile(r"^(var|es)@(0\.\d+)$")


def parse_measure_spec(text: str) -> MeasureSpec:
    """Parse the CLI grammar: var95, es99, ml, or the general var@0.975."""
    s = text.strip().lower()
    m = _SHORT.match(s)
    if m:
        kind, digits = m.group(1), m.group(2)
        if kind == "ml":
            if digits is not None:
                raise ValueError(f"ml takes no level: {text!r}")
            return MeasureSpec(kind="ml")
        if digits is None:
            raise ValueError(f"{kind} needs a level, e.g. {kind}95: {text!r}")
        return MeasureSpec(kind=kind, level=int(digits) / 100.0)
    m = _AT.match(s)
    if m:
        return MeasureSpec(kind=m.group(1), level=float(m.group(2)))
    raise ValueError(f"cannot parse measure spec {text!r}")


def parse_measure_list(text: str) -> list[MeasureSpec]:
    return [parse_measure_spec(part) for part in text.split(",") if part.strip()]


@dataclass(frozen=True)
class MeasureVector:
    """Evaluated measures in the canonical order (VaR by level, ES by level,
    ML last)."""

    entries: tuple[tuple[MeasureSpec, float], ...]

    def value(self, spec: MeasureSpec) -> float:
        for s, v in self.entries:
            if s.canonical_key() == spec.canonical_key():
                return v
        raise KeyError(spec)

    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.entries)


@dataclass(frozen=True)
class ReportEntry:
    spec: MeasureSpec
    value: float
    method: str = "closed_form"  # or "monte_carlo"
    se: float | None = None
    mc_value: float | None = None
    mc_se: float | None = None

    def __post_init__(self):
        if self.method not in ("closed_form", "monte_carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if (self.se is not None) != (self.method == "monte_carlo"):
            raise ValueError("standard error present iff method is monte_carlo")


@dataclass(frozen=True)
class RiskReport:
    dist_id: str
    entries: tuple[ReportEntry, ...]

    def to_json_dict(self) -> dict:
        rows = []
        for e in self.entries:
            row = {"kind": e.spec.kind}
            if e.spec.level is not None:
                row["level"] = e.spec.level
            row["value"] = e.value
            row["method"] = e.method
            if e.se is not None:
                row["se"] = e.se
            if e.mc_value is not None:
                row["mc_value"] = e.mc_value
                row["mc_se"] = e.mc_se
            rows.append(row)
        return {"dist_id": self.dist_id, "entries": rows}


def _check_level(level: float) -> float:
    level = float(level)
    if not (0.0 < level < 1.0):
        raise ValueError(f"level {level} outside (0, 1)")
    return level


def _tail_level_floor(d: TailSpec, level: float):
    if level < d.alpha:
        raise ValueError(
            f"a tail at alpha={d.alpha} determines measures only at levels >= alpha; "
            f"got {level}"
        )


def var(dist: Distribution, level: float) -> float:
    """The level-quantile of the loss: inf{x : P(L > x) <= 1 - level}.

    Flat stretches of the CDF resolve to their left endpoint.  On a tail,
    the level must be at least the tail's alpha; at exactly alpha the
    answer is the tail start by construction.
    """
    level = _check_level(level)
    d = to_loss(require_valid(dist))
    if isinstance(d, TailSpec):
        _tail_level_floor(d, level)
        if level == d.alpha:
            return d.start
        return float(_poly_first_reach(d.xs, d.fs, level - d.alpha))
    if isinstance(d, PiecewiseLinearDensity):
        return float(_poly_first_reach(d.xs, d.fs, level))
    if isinstance(d, DiscreteDistribution):
        order = np.argsort(d.losses, kind="stable")
        losses = d.losses[order]
        cums = np.cumsum(d.probs[order])
        idx = min(int(np.searchsorted(cums, level, side="left")), losses.size - 1)
        return float(losses[idx])
    if isinstance(d, EmpiricalSample):
        losses = np.sort(d.losses)
        n = losses.size
        cums = np.arange(1, n + 1) / n
        idx = min(int(np.searchsorted(cums, level, side="left")), n - 1)
        return float(losses[idx])
    raise TypeError(f"not a distribution: {type(d).__name__}")


def _upper_bound(d) -> float:
    if isinstance(d, (PiecewiseLinearDensity, TailSpec)):
        return float(d.xs[-1])
    if isinstance(d, DiscreteDistribution):
        return float(np.max(d.losses))
    return float(np.max(d.losses))


def es(dist: Distribution, level: float, es_mode: str = ATOM_SPLITTING) -> float:
    """Average loss in the worst 1 - level of outcomes.

    atom_splitting (default): the strictly-worse-than-VaR moment is topped
    up with just enough of the quantile atom to weight exactly 1 - level;
    this is the coherent tail average.  strict_conditional: the literal
    E[L | L > VaR], undefined when the exceedance has zero probability.
    The two agree on continuous carriers with positive density at the
    quantile.
    """
    level = _check_level(level)
    if es_mode not in (ATOM_SPLITTING, STRICT_CONDITIONAL):
        raise ValueError(f"unknown es_mode {es_mode!r}")
    d = to_loss(require_valid(dist))
    if isinstance(d, TailSpec):
        _tail_level_floor(d, level)
    q = var(d, level)
    hi = _upper_bound(d)
    if hi <= q:
        mass_above = 0.0
        moment_above = 0.0
    else:
        mass_above = interval_mass(d, q, hi)
        moment_above = interval_first_moment(d, q, hi)
    rest = 1.0 - level
    if es_mode == STRICT_CONDITIONAL:
        if mass_above <= 0.0:
            raise UndefinedMeasureError(
                f"strict conditional ES at level {level} conditions on a "
                "zero-probability event"
            )
        return moment_above / mass_above
    return (moment_above + q * (rest - mass_above)) / rest


def max_loss(dist: Distribution) -> float:
    """Essential supremum of the loss: the last polyline knot with density
    not identically zero to its left, the largest atom with positive
    probability, or the sample maximum."""
    d = to_loss(require_valid(dist))
    if isinstance(d, (PiecewiseLinearDensity, TailSpec)):
        xs, fs = d.xs, d.fs
        for i in range(len(xs) - 2, -1, -1):
            if fs[i] > 0.0 or fs[i + 1] > 0.0:
                return float(xs[i + 1])
        raise UndefinedMeasureError("density is identically zero")
    if isinstance(d, DiscreteDistribution):
        vals = [v for v, p in d.atoms if p > 0.0]
        if not vals:
            raise UndefinedMeasureError("no atom has positive probability")
        return float(max(vals))
    if isinstance(d, EmpiricalSample):
        return float(np.max(d.losses))
    raise TypeError(f"not a distribution: {type(d).__name__}")


def evaluate(dist: Distribution, spec: MeasureSpec) -> float:
    if spec.kind == "var":
        return var(dist, spec.level)
    if spec.kind == "es":
        return es(dist, spec.level, spec.es_mode)
    return max_loss(dist)


def canonical_specs(specs: Iterable[MeasureSpec]) -> tuple[MeasureSpec, ...]:
    specs = tuple(specs)
    keys = [s.canonical_key() for s in specs]
    if len(set(keys)) != len(keys):
        raise ValueError("measure specs must be pairwise distinct")
    return tuple(s for _, s in sorted(zip(keys, specs), key=lambda t: t[0]))


def evaluate_vector(dist: Distribution, specs: Sequence[MeasureSpec]) -> MeasureVector:
    """Evaluate several measures by the exact path, in canonical order."""
    if not specs:
        raise ValueError("need at least one measure spec")
    ordered = canonical_specs(specs)
    return MeasureVector(entries=tuple((s, evaluate(dist, s)) for s in ordered))


# ---------------------------------------------------------------------------
# Monte Carlo oracle

@dataclass(frozen=True)
class McEstimate:
    value: float
    se: float
    n: int


_BOOTSTRAP_RESAMPLES = 200


def _bootstrap_order_stat_se(sorted_losses: np.ndarray, m: int, rng) -> float:
    """SE of the m-th order statistic under multinomial resampling.

    The m-th order statistic of n draws from a sorted sample is the sample
    value at index ceil(n * B) where B ~ Beta(m, n - m + 1): discrete
    uniform draws are ceil(n * U) and taking order statistics commutes with
    the monotone map.  This samples the exact bootstrap-replicate
    distribution without materializing resamples.
    """
    n = sorted_losses.size
    betas = rng.beta(m, n - m + 1, size=_BOOTSTRAP_RESAMPLES)
    idx = np.clip(np.ceil(n * betas).astype(np.int64), 1, n) - 1
    reps = sorted_losses[idx]
    return float(np.std(reps, ddof=1))


def mc_estimate(dist: Distribution, spec: MeasureSpec, n: int, seed) -> McEstimate:
    """Empirical quantile / tail average / maximum on n fresh draws.

    Tails are completed with the default body first (legitimate because
    measures at levels >= alpha do not depend on the body).  Quantile and
    maximum standard errors come from a 200-replicate bootstrap; the tail
    average uses the sample SD of the exceedances.
    """
    if n < 1000:
        raise ValueError(f"Monte Carlo needs n >= 1000, got {n}")
    d = to_loss(require_valid(dist))
    if isinstance(d, TailSpec):
        if spec.level is not None:
            _tail_level_floor(d, spec.level)
        d = lift_tail(d)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    draw_seed, boot_seed = ss.spawn(2)
    emp = sample(d, n, draw_seed)
    losses = np.sort(emp.losses)
    rng = np.random.default_rng(boot_seed)
    if spec.kind == "var":
        cums = np.arange(1, n + 1) / n
        idx = min(int(np.searchsorted(cums, spec.level, side="left")), n - 1)
        value = float(losses[idx])
        se = _bootstrap_order_stat_se(losses, idx + 1, rng)
        return McEstimate(value=value, se=se, n=n)
    if spec.kind == "es":
        value = es(EmpiricalSample(losses=losses), spec.level, spec.es_mode)
        q = var(EmpiricalSample(losses=losses), spec.level)
        # The estimator is q + mean((L - q)+) / (1 - level); its asymptotic
        # SD is the sample SD of the positive parts scaled by the tail
        # probability.  SD of the exceedances alone would miss the
        # binomial variability of how many draws land in the tail.
        excess = np.maximum(losses - q, 0.0)
        se = float(np.std(excess, ddof=1) / ((1.0 - spec.level) * math.sqrt(n)))
        return McEstimate(value=value, se=se, n=n)
    value = float(losses[-1])
    se = _bootstrap_order_stat_se(losses, n, rng)
    return McEstimate(value=value, se=se, n=n)


def build_report(
    dist_id: str,
    dist: Distribution,
    specs: Sequence[MeasureSpec],
    mc_n: int | None = None,
    seed: int = 0,
    seed_key: tuple = (),
) -> RiskReport:
    """Closed-form report over the given specs; with mc_n, each entry also
    carries the Monte Carlo oracle columns.  Seeds are partitioned
    deterministically per entry via spawn keys (prefix with seed_key to keep
    several reports in one run independent)."""
    ordered = canonical_specs(specs)
    entries = []
    for j, spec in enumerate(ordered):
        value = evaluate(dist, spec)
        if mc_n is None:
            entries.append(ReportEntry(spec=spec, value=value))
        else:
            child = np.random.SeedSequence(entropy=seed, spawn_key=seed_key + (j,))
            est = mc_estimate(dist, spec, mc_n, child)
            entries.append(
                ReportEntry(
                    spec=spec, value=value, mc_value=est.value, mc_se=est.se
                )
            )
    return RiskReport(dist_id=dist_id, entries=tuple(entries))
