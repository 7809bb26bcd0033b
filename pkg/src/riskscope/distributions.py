"""Loss-distribution carriers and exact piecewise integration.

Four carriers cover everything downstream: a piecewise-linear density (the
universal continuous shape), a tail (the worst ``1 - alpha`` slice of a
density, which is all the upper risk measures ever look at), a finite
outcome table, and a raw sample.  All values are immutable after
construction and safe to share across threads.

Sign convention: the canonical internal orientation is LOSS (positive =
bad).  Every carrier stores an orientation tag; conversion to loss space
negates values exactly once at the boundary (`to_loss`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence, Union

import numpy as np

# Structural invariants (unit mass, tail mass, atom totals) are closed-form
# arithmetic, so they get a tight tolerance; sampling noise is handled
# separately by the Monte Carlo machinery at 3 standard errors.
MASS_TOL = 1e-12


class Orientation(Enum):
    LOSS = "loss"
    RETURN = "return"


class InvalidDistributionError(ValueError):
    """A distribution failed validation; `.violations` lists the reasons."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def _as_knots(pairs) -> tuple[tuple[float, float], ...]:
    return tuple((float(x), float(f)) for x, f in pairs)


@dataclass(frozen=True, eq=False)
class PiecewiseLinearDensity:
    """Unit-mass density given by linear interpolation between knots.

    `knots` is an ordered sequence of (x, f(x)) pairs; the density is zero
    outside [first x, last x].  Vertical jumps are not representable at a
    single x: express them with two knots at x ± eps of the caller's
    choosing.
    """

    knots: tuple[tuple[float, float], ...]
    orientation: Orientation = Orientation.LOSS

    def __post_init__(self):
        object.__setattr__(self, "knots", _as_knots(self.knots))

    @property
    def xs(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots], dtype=np.float64)

    @property
    def fs(self) -> np.ndarray:
        return np.array([k[1] for k in self.knots], dtype=np.float64)

    @property
    def support(self) -> tuple[float, float]:
        return self.knots[0][0], self.knots[-1][0]


@dataclass(frozen=True, eq=False)
class TailSpec:
    """The worst-(1 - alpha) region of a loss distribution.

    `segments` is a polyline on [start, end] whose integral is ``1 - alpha``
    (not 1); the remaining mass alpha lies strictly below `start` in some
    unspecified arrangement.  Density must be positive immediately after
    `start` and immediately before `end`, so that those two points really
    are the alpha-quantile and the worst loss of any completion.
    """

    alpha: float
    segments: tuple[tuple[float, float], ...]
    orientation: Orientation = Orientation.LOSS

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "segments", _as_knots(self.segments))

    @property
    def xs(self) -> np.ndarray:
        return np.array([k[0] for k in self.segments], dtype=np.float64)

    @property
    def fs(self) -> np.ndarray:
        return np.array([k[1] for k in self.segments], dtype=np.float64)

    @property
    def start(self) -> float:
        return self.segments[0][0]

    @property
    def end(self) -> float:
        return self.segments[-1][0]

    @property
    def tail_mass(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite outcome table: (loss value, probability) atoms."""

    atoms: tuple[tuple[float, float], ...]
    orientation: Orientation = Orientation.LOSS

    def __post_init__(self):
        object.__setattr__(self, "atoms", _as_knots(self.atoms))

    @property
    def losses(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms], dtype=np.float64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Unordered observed losses; measures treat it as the empirical law."""

    losses: np.ndarray
    orientation: Orientation = Orientation.LOSS

    def __post_init__(self):
        arr = np.asarray(self.losses, dtype=np.float64).reshape(-1).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "losses", arr)


Distribution = Union[
    PiecewiseLinearDensity, TailSpec, DiscreteDistribution, EmpiricalSample
]


# ---------------------------------------------------------------------------
# validation

def _validate_polyline(xs, fs, label: str) -> list[str]:
    out = []
    if len(xs) < 2:
        out.append(f"{label}: need at least 2 knots, got {len(xs)}")
        return out
    for i, (x, f) in enumerate(zip(xs, fs)):
        if not (math.isfinite(x) and math.isfinite(f)):
            out.append(f"{label}: non-finite knot at index {i}: ({x}, {f})")
    if out:
        return out
    for i in range(len(xs) - 1):
        if not xs[i] < xs[i + 1]:
            out.append(
                f"{label}: x not strictly increasing at index {i + 1} "
                f"({xs[i + 1]} after {xs[i]})"
            )
    for i, f in enumerate(fs):
        if f < 0:
            out.append(f"{label}: negative density {f} at knot {i}")
    return out


def validate(dist: Distribution) -> list[str]:
    """Check every type invariant; return [] iff the value is valid.

    Diagnostics, not exceptions: each violation names the invariant and the
    offending location.  Operations reject invalid inputs by raising
    `InvalidDistributionError` built from this report.
    """
    if isinstance(dist, PiecewiseLinearDensity):
        xs, fs = dist.xs, dist.fs
        out = _validate_polyline(xs, fs, "knots")
        if not out:
            total = _poly_mass(xs, fs, xs[0], xs[-1])
            if abs(total - 1.0) > MASS_TOL:
                out.append(f"mass: total integral {total!r} != 1")
        return out
    if isinstance(dist, TailSpec):
        out = []
        if not (0.0 < dist.alpha < 1.0):
            out.append(f"alpha: {dist.alpha} outside (0, 1)")
        xs, fs = dist.xs, dist.fs
        out += _validate_polyline(xs, fs, "segments")
        if not out:
            total = _poly_mass(xs, fs, xs[0], xs[-1])
            if abs(total - dist.tail_mass) > MASS_TOL:
                out.append(
                    f"mass: tail integral {total!r} != 1 - alpha = {dist.tail_mass!r}"
                )
            if max(fs[0], fs[1]) <= 0.0:
                out.append(
                    "segments: density vanishes on a right-neighborhood of the "
                    f"start {xs[0]}, so the start is not the quantile"
                )
            if max(fs[-2], fs[-1]) <= 0.0:
                out.append(
                    "segments: density vanishes on a left-neighborhood of the "
                    f"end {xs[-1]}, so the end is not the maximum loss"
                )
        return out
    if isinstance(dist, DiscreteDistribution):
        out = []
        if not dist.atoms:
            out.append("atoms: empty")
            return out
        seen: dict[float, int] = {}
        for i, (x, p) in enumerate(dist.atoms):
            if not (math.isfinite(x) and math.isfinite(p)):
                out.append(f"atoms: non-finite atom at index {i}: ({x}, {p})")
                continue
            if not (0.0 <= p <= 1.0):
                out.append(f"atoms: probability {p} outside [0, 1] at index {i}")
            if x in seen:
                out.append(
                    f"atoms: duplicate loss value {x} at indices {seen[x]} and {i}"
                )
            else:
                seen[x] = i
        if not out:
            total = float(math.fsum(p for _, p in dist.atoms))
            if abs(total - 1.0) > MASS_TOL:
                out.append(f"mass: probabilities sum to {total!r} != 1")
        return out
    if isinstance(dist, EmpiricalSample):
        out = []
        if dist.losses.size == 0:
            out.append("losses: empty sample")
        elif not np.all(np.isfinite(dist.losses)):
            bad = int(np.flatnonzero(~np.isfinite(dist.losses))[0])
            out.append(f"losses: non-finite value at index {bad}")
        return out
    raise TypeError(f"not a distribution: {type(dist).__name__}")


def require_valid(dist: Distribution) -> Distribution:
    violations = validate(dist)
    if violations:
        raise InvalidDistributionError(violations)
    return dist


# ---------------------------------------------------------------------------
# exact piecewise-linear integration
#
# Every piece is linear, so the trapezoid rule is exact for mass and
# Simpson's rule is exact for the first moment (x * f is quadratic).

def _interp(x0, f0, x1, f1, x):
    return f0 + (f1 - f0) * (x - x0) / (x1 - x0)


def _piece_mass(x0, f0, x1, f1, a, b):
    fa = _interp(x0, f0, x1, f1, a)
    fb = _interp(x0, f0, x1, f1, b)
    return 0.5 * (fa + fb) * (b - a)


def _piece_moment(x0, f0, x1, f1, a, b):
    fa = _interp(x0, f0, x1, f1, a)
    fb = _interp(x0, f0, x1, f1, b)
    m = 0.5 * (a + b)
    fm = _interp(x0, f0, x1, f1, m)
    return (b - a) / 6.0 * (a * fa + 4.0 * m * fm + b * fb)


def _poly_panels(xs, fs):
    return 0.5 * (fs[1:] + fs[:-1]) * np.diff(xs)


def _poly_mass(xs, fs, a, b):
    total = 0.0
    for i in range(len(xs) - 1):
        lo = max(a, xs[i])
        hi = min(b, xs[i + 1])
        if hi > lo:
            total += _piece_mass(xs[i], fs[i], xs[i + 1], fs[i + 1], lo, hi)
    return float(total)


def _poly_moment(xs, fs, a, b):
    total = 0.0
    for i in range(len(xs) - 1):
        lo = max(a, xs[i])
        hi = min(b, xs[i + 1])
        if hi > lo:
            total += _piece_moment(xs[i], fs[i], xs[i + 1], fs[i + 1], lo, hi)
    return float(total)


def _poly_cum(xs, fs):
    cums = np.concatenate(([0.0], np.cumsum(_poly_panels(xs, fs))))
    return cums


def _invert_panel(x0, f0, x1, f1, v):
    """Smallest t with integral of the panel density over [x0, x0+t] = v."""
    w = x1 - x0
    if v <= 0.0:
        return x0
    s = (f1 - f0) / w
    disc = f0 * f0 + 2.0 * s * v
    denom = f0 + math.sqrt(max(disc, 0.0))
    if denom <= 0.0:
        return x1
    return x0 + min(2.0 * v / denom, w)


def _poly_first_reach(xs, fs, target):
    """Smallest x whose cumulative mass reaches `target` (the infimum rule:
    a flat stretch of the CDF at exactly `target` resolves to its left end)."""
    cums = _poly_cum(xs, fs)
    idx = int(np.searchsorted(cums[1:], target, side="left"))
    idx = min(idx, len(xs) - 2)
    return _invert_panel(
        xs[idx], fs[idx], xs[idx + 1], fs[idx + 1], target - cums[idx]
    )


def density_at(dist: Distribution, x) -> np.ndarray:
    """Density of a continuous carrier at x (vectorized; zero off-support)."""
    if isinstance(dist, PiecewiseLinearDensity):
        return np.interp(x, dist.xs, dist.fs, left=0.0, right=0.0)
    if isinstance(dist, TailSpec):
        return np.interp(x, dist.xs, dist.fs, left=0.0, right=0.0)
    raise TypeError("density_at needs a continuous carrier")


# ---------------------------------------------------------------------------
# distribution operations

def cdf(dist: Distribution, x: float) -> float:
    """P(L <= x).

    Piecewise-quadratic closed form for polylines, right-continuous step
    function for discrete atoms and samples.  For a TailSpec the answer is
    only determined from the tail start onward (below it, only the total
    mass alpha is known), so smaller x raises ValueError.
    """
    require_valid(dist)
    x = float(x)
    if isinstance(dist, PiecewiseLinearDensity):
        xs, fs = dist.xs, dist.fs
        if x <= xs[0]:
            return 0.0
        return min(_poly_mass(xs, fs, xs[0], min(x, xs[-1])), 1.0)
    if isinstance(dist, TailSpec):
        if x < dist.start:
            raise ValueError(
                "cdf of a tail is determined only at and above its start "
                f"({dist.start}); got {x}"
            )
        xs, fs = dist.xs, dist.fs
        return min(dist.alpha + _poly_mass(xs, fs, xs[0], min(x, xs[-1])), 1.0)
    if isinstance(dist, DiscreteDistribution):
        return float(math.fsum(p for v, p in dist.atoms if v <= x))
    if isinstance(dist, EmpiricalSample):
        return float(np.count_nonzero(dist.losses <= x)) / dist.losses.size
    raise TypeError(f"not a distribution: {type(dist).__name__}")


def interval_mass(dist: Distribution, a: float, b: float) -> float:
    """Exact probability carried on the interval: integral of the density
    over [a, b] for continuous carriers, sum over atoms in (a, b] otherwise."""
    require_valid(dist)
    a, b = float(a), float(b)
    if a > b:
        raise ValueError(f"interval bounds out of order: {a} > {b}")
    if isinstance(dist, (PiecewiseLinearDensity, TailSpec)):
        return _poly_mass(dist.xs, dist.fs, a, b)
    if isinstance(dist, DiscreteDistribution):
        return float(math.fsum(p for v, p in dist.atoms if a < v <= b))
    if isinstance(dist, EmpiricalSample):
        n = dist.losses.size
        return float(np.count_nonzero((dist.losses > a) & (dist.losses <= b))) / n
    raise TypeError(f"not a distribution: {type(dist).__name__}")


def interval_first_moment(dist: Distribution, a: float, b: float) -> float:
    """Exact integral of x * density over [a, b] (atoms: sum of x * p over
    (a, b]).  Each linear piece is integrated in closed form."""
    require_valid(dist)
    a, b = float(a), float(b)
    if a > b:
        raise ValueError(f"interval bounds out of order: {a} > {b}")
    if isinstance(dist, (PiecewiseLinearDensity, TailSpec)):
        return _poly_moment(dist.xs, dist.fs, a, b)
    if isinstance(dist, DiscreteDistribution):
        return float(math.fsum(v * p for v, p in dist.atoms if a < v <= b))
    if isinstance(dist, EmpiricalSample):
        n = dist.losses.size
        sel = dist.losses[(dist.losses > a) & (dist.losses <= b)]
        return float(np.sum(sel)) / n
    raise TypeError(f"not a distribution: {type(dist).__name__}")


def convolve(
    d1: DiscreteDistribution, d2: DiscreteDistribution
) -> DiscreteDistribution:
    """Distribution of the independent sum of two outcome tables.

    Atoms with equal loss are merged; probabilities multiply and sum.
    Output is loss-oriented and sorted by loss.
    """
    d1 = to_loss(require_valid(d1))
    d2 = to_loss(require_valid(d2))
    acc: dict[float, float] = {}
    for x1, p1 in d1.atoms:
        for x2, p2 in d2.atoms:
            acc[x1 + x2] = acc.get(x1 + x2, 0.0) + p1 * p2
    atoms = tuple(sorted(acc.items()))
    return DiscreteDistribution(atoms=atoms, orientation=Orientation.LOSS)


def to_loss(dist: Distribution, orientation: Orientation | None = None):
    """Convert to the canonical loss orientation.

    `orientation` says how to read the stored numbers and defaults to the
    carrier's own tag.  Return-oriented values are negated exactly once
    (a density of returns reflected about 0 is the density of losses);
    loss-oriented values pass through unchanged.
    """
    how = dist.orientation if orientation is None else orientation
    if how is Orientation.LOSS:
        if dist.orientation is Orientation.LOSS:
            return dist
        return replace(dist, orientation=Orientation.LOSS)
    if isinstance(dist, PiecewiseLinearDensity):
        knots = tuple((-x, f) for x, f in reversed(dist.knots))
        return PiecewiseLinearDensity(knots=knots, orientation=Orientation.LOSS)
    if isinstance(dist, TailSpec):
        segs = tuple((-x, f) for x, f in reversed(dist.segments))
        return TailSpec(alpha=dist.alpha, segments=segs, orientation=Orientation.LOSS)
    if isinstance(dist, DiscreteDistribution):
        atoms = tuple(sorted((-x, p) for x, p in dist.atoms))
        return DiscreteDistribution(atoms=atoms, orientation=Orientation.LOSS)
    if isinstance(dist, EmpiricalSample):
        return EmpiricalSample(losses=-dist.losses, orientation=Orientation.LOSS)
    raise TypeError(f"not a distribution: {type(dist).__name__}")


def shift(dist: Distribution, a: float):
    """The law of L + a in loss space (converts to loss orientation first)."""
    d = to_loss(dist)
    a = float(a)
    if isinstance(d, PiecewiseLinearDensity):
        return PiecewiseLinearDensity(knots=tuple((x + a, f) for x, f in d.knots))
    if isinstance(d, TailSpec):
        return TailSpec(alpha=d.alpha, segments=tuple((x + a, f) for x, f in d.segments))
    if isinstance(d, DiscreteDistribution):
        return DiscreteDistribution(atoms=tuple((x + a, p) for x, p in d.atoms))
    return EmpiricalSample(losses=d.losses + a)


def scale(dist: Distribution, k: float):
    """The law of k * L for k > 0 (densities transform as f(x/k)/k).

    k = 0 collapses atoms and samples to a point mass at 0; it is rejected
    for continuous carriers, which cannot represent one.
    """
    d = to_loss(dist)
    k = float(k)
    if k < 0.0:
        raise ValueError(f"scale factor must be nonnegative, got {k}")
    if k == 0.0:
        if isinstance(d, DiscreteDistribution):
            return DiscreteDistribution(atoms=((0.0, 1.0),))
        if isinstance(d, EmpiricalSample):
            return EmpiricalSample(losses=np.zeros_like(d.losses))
        raise ValueError("scale factor 0 gives a point mass, which a density cannot carry")
    if isinstance(d, PiecewiseLinearDensity):
        return PiecewiseLinearDensity(knots=tuple((x * k, f / k) for x, f in d.knots))
    if isinstance(d, TailSpec):
        return TailSpec(alpha=d.alpha, segments=tuple((x * k, f / k) for x, f in d.segments))
    if isinstance(d, DiscreteDistribution):
        return DiscreteDistribution(atoms=tuple((x * k, p) for x, p in d.atoms))
    return EmpiricalSample(losses=d.losses * k)


# ---------------------------------------------------------------------------
# completing a tail into a full density

@dataclass(frozen=True)
class BodyRule:
    """Where the non-tail mass alpha goes: uniform on [lo, hi].

    `hi` must coincide with the tail start.  Anything above the start would
    corrupt the tail's measures; a gap below it would flatten the CDF at
    level alpha early and drag the quantile left.  `join_width` is the
    width of the linear ramp that bridges the body height to the tail's
    starting density (jumps need two knots at distinct x); default is 1e-9
    of the body width.
    """

    lo: float
    hi: float
    join_width: float | None = None


def lift_tail(tail: TailSpec, body: BodyRule | None = None) -> PiecewiseLinearDensity:
    """Complete a tail into a full unit-mass density.

    The result restricts to the tail's own segments on [start, end] and
    places the remaining mass alpha strictly below the start, so any
    measure at a level >= alpha agrees between the two representations.
    """
    t = to_loss(require_valid(tail))
    c = t.start
    if body is None:
        width = t.end - c
        body = BodyRule(lo=c - width, hi=c)
    if body.hi > c:
        raise ValueError(
            f"body rule places mass above the tail start: hi={body.hi} > {c}"
        )
    if body.hi < c:
        raise ValueError(
            f"body rule must reach the tail start (hi={body.hi} < {c}); "
            "a zero-density gap would move the quantile off the start"
        )
    width = c - body.lo
    if width <= 0.0:
        raise ValueError(f"body rule has nonpositive width: [{body.lo}, {body.hi}]")
    eps = body.join_width if body.join_width is not None else width * 1e-9
    if not (0.0 < eps < width):
        raise ValueError(f"join width {eps} must lie in (0, body width {width})")
    f_c = t.segments[0][1]
    h = (t.alpha - f_c * eps * 0.5) / (width - eps * 0.5)
    if h <= 0.0:
        raise ValueError("body too wide to hold mass alpha at nonnegative height")
    knots = ((body.lo, h), (c - eps, h)) + t.segments
    return PiecewiseLinearDensity(knots=knots, orientation=Orientation.LOSS)


# ---------------------------------------------------------------------------
# sampling

def sample(dist: Distribution, n: int, seed) -> EmpiricalSample:
    """n i.i.d. draws by inverse CDF; deterministic for a fixed seed.

    Tails must be completed with `lift_tail` first: a tail alone does not
    determine the law below its start.
    """
    require_valid(dist)
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if isinstance(dist, TailSpec):
        raise ValueError("cannot sample a bare tail; complete it with lift_tail first")
    d = to_loss(dist)
    rng = np.random.default_rng(seed)
    if isinstance(d, PiecewiseLinearDensity):
        xs, fs = d.xs, d.fs
        cums = _poly_cum(xs, fs)
        u = rng.random(n) * cums[-1]
        idx = np.minimum(np.searchsorted(cums[1:], u, side="left"), len(xs) - 2)
        x0, x1 = xs[idx], xs[idx + 1]
        f0, f1 = fs[idx], fs[idx + 1]
        w = x1 - x0
        v = u - cums[idx]
        s = (f1 - f0) / w
        disc = np.maximum(f0 * f0 + 2.0 * s * v, 0.0)
        denom = f0 + np.sqrt(disc)
        t = np.where(denom > 0.0, 2.0 * v / np.where(denom > 0.0, denom, 1.0), 0.0)
        draws = x0 + np.minimum(t, w)
        return EmpiricalSample(losses=draws)
    if isinstance(d, DiscreteDistribution):
        order = np.argsort(d.losses, kind="stable")
        losses = d.losses[order]
        cums = np.cumsum(d.probs[order])
        u = rng.random(n)
        idx = np.minimum(np.searchsorted(cums, u, side="right"), losses.size - 1)
        return EmpiricalSample(losses=losses[idx])
    if isinstance(d, EmpiricalSample):
        return EmpiricalSample(losses=rng.choice(d.losses, size=n, replace=True))
    raise TypeError(f"not a distribution: {type(dist).__name__}")


# ---------------------------------------------------------------------------
# distance between densities

def l1_distance(d1: Distribution, d2: Distribution) -> float:
    """Exact integral of |f1 - f2| over the union of supports.

    Both inputs must be continuous carriers (a tail is compared through its
    segments).  Within each cell of the merged knot grid the difference is
    linear, so the integral splits exactly at the zero crossing.
    """
    a = to_loss(require_valid(d1))
    b = to_loss(require_valid(d2))
    if not isinstance(a, (PiecewiseLinearDensity, TailSpec)):
        raise TypeError("l1_distance needs continuous carriers")
    if not isinstance(b, (PiecewiseLinearDensity, TailSpec)):
        raise TypeError("l1_distance needs continuous carriers")
    grid = np.unique(np.concatenate([a.xs, b.xs]))
    mids = 0.5 * (grid[1:] + grid[:-1])
    # Each grid cell lies fully inside or fully outside either support
    # (both support endpoints are grid points), so the density restricted
    # to a cell is the knot interpolation when the cell is inside and zero
    # when it is outside -- never a mix across the support-edge jump.
    def cell_values(d):
        lo, hi = d.xs[0], d.xs[-1]
        inside = (mids >= lo) & (mids <= hi)
        v0 = np.where(inside, np.interp(grid[:-1], d.xs, d.fs), 0.0)
        v1 = np.where(inside, np.interp(grid[1:], d.xs, d.fs), 0.0)
        return v0, v1

    a0, a1 = cell_values(a)
    b0, b1 = cell_values(b)
    d0, d1 = a0 - b0, a1 - b1
    total = 0.0
    for i in range(grid.size - 1):
        g0, g1 = d0[i], d1[i]
        w = grid[i + 1] - grid[i]
        if g0 * g1 < 0.0:
            z = g0 / (g0 - g1) * w
            total += 0.5 * (abs(g0) * z + abs(g1) * (w - z))
        else:
            total += 0.5 * (abs(g0) + abs(g1)) * w
    return float(total)
