"""Hypothesis strategies and a plain seeded generator for random
distributions."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from riskscope import (
    DiscreteDistribution,
    EmpiricalSample,
    PiecewiseLinearDensity,
    TailSpec,
)

finite = dict(allow_nan=False, allow_infinity=False)


def _trapz(xs, fs):
    return float(np.trapezoid(fs, xs))


@st.composite
def polylines(st_draw, min_knots=2, max_knots=6, x_start=st.floats(-30.0, 30.0, **finite)):
    n = st_draw(st.integers(min_knots, max_knots))
    start = st_draw(x_start)
    steps = st_draw(
        st.lists(st.floats(0.2, 10.0, **finite), min_size=n - 1, max_size=n - 1)
    )
    xs = np.concatenate([[start], start + np.cumsum(steps)])
    fs = np.array(
        st_draw(st.lists(st.floats(0.0, 5.0, **finite), min_size=n, max_size=n))
    )
    total = _trapz(xs, fs)
    if total <= 1e-6:
        fs = fs + 1.0
        total = _trapz(xs, fs)
    fs = fs / total
    return PiecewiseLinearDensity(knots=tuple(zip(map(float, xs), map(float, fs))))


@st.composite
def strictly_positive_polylines(st_draw, min_knots=2, max_knots=6):
    n = st_draw(st.integers(min_knots, max_knots))
    start = st_draw(st.floats(-30.0, 30.0, **finite))
    steps = st_draw(
        st.lists(st.floats(0.2, 10.0, **finite), min_size=n - 1, max_size=n - 1)
    )
    xs = np.concatenate([[start], start + np.cumsum(steps)])
    fs = np.array(
        st_draw(st.lists(st.floats(0.1, 5.0, **finite), min_size=n, max_size=n))
    )
    fs = fs / _trapz(xs, fs)
    return PiecewiseLinearDensity(knots=tuple(zip(map(float, xs), map(float, fs))))


@st.composite
def tails(st_draw, min_knots=2, max_knots=6):
    alpha = st_draw(st.floats(0.5, 0.99, **finite))
    n = st_draw(st.integers(min_knots, max_knots))
    start = st_draw(st.floats(-30.0, 30.0, **finite))
    steps = st_draw(
        st.lists(st.floats(0.2, 10.0, **finite), min_size=n - 1, max_size=n - 1)
    )
    xs = np.concatenate([[start], start + np.cumsum(steps)])
    fs = np.array(
        st_draw(st.lists(st.floats(0.1, 5.0, **finite), min_size=n, max_size=n))
    )
    fs = fs * ((1.0 - alpha) / _trapz(xs, fs))
    return TailSpec(
        alpha=alpha, segments=tuple(zip(map(float, xs), map(float, fs)))
    )


@st.composite
def discretes(st_draw, min_atoms=1, max_atoms=6):
    n = st_draw(st.integers(min_atoms, max_atoms))
    start = st_draw(st.floats(-100.0, 100.0, **finite))
    steps = st_draw(
        st.lists(st.floats(0.5, 50.0, **finite), min_size=n - 1, max_size=n - 1)
    )
    xs = np.concatenate([[start], start + np.cumsum(steps)])
    raw = np.array(
        st_draw(st.lists(st.floats(0.05, 1.0, **finite), min_size=n, max_size=n))
    )
    probs = raw / raw.sum()
    probs[-1] = 1.0 - float(probs[:-1].sum())
    return DiscreteDistribution(atoms=tuple(zip(map(float, xs), map(float, probs))))


def distributions():
    return st.one_of(polylines(), tails(), discretes())


# ---------------------------------------------------------------------------
# plain seeded generator (for the fixed 100-distribution round-trip corpus)

def random_distribution(rng: np.random.Generator):
    kind = rng.integers(0, 4)
    if kind == 0:
        n = int(rng.integers(2, 8))
        xs = np.cumsum(rng.uniform(0.2, 8.0, size=n)) + rng.uniform(-40.0, 40.0)
        fs = rng.uniform(0.0, 4.0, size=n)
        if np.trapezoid(fs, xs) <= 1e-9:
            fs = fs + 1.0
        fs = fs / np.trapezoid(fs, xs)
        return PiecewiseLinearDensity(knots=tuple(zip(map(float, xs), map(float, fs))))
    if kind == 1:
        alpha = float(rng.uniform(0.5, 0.99))
        n = int(rng.integers(2, 8))
        xs = np.cumsum(rng.uniform(0.2, 8.0, size=n)) + rng.uniform(-40.0, 40.0)
        fs = rng.uniform(0.1, 4.0, size=n)
        fs = fs * ((1.0 - alpha) / np.trapezoid(fs, xs))
        return TailSpec(alpha=alpha, segments=tuple(zip(map(float, xs), map(float, fs))))
    if kind == 2:
        n = int(rng.integers(1, 8))
        xs = np.cumsum(rng.uniform(0.5, 60.0, size=n)) + rng.uniform(-500.0, 500.0)
        raw = rng.uniform(0.05, 1.0, size=n)
        probs = raw / raw.sum()
        probs[-1] = 1.0 - float(probs[:-1].sum())
        return DiscreteDistribution(atoms=tuple(zip(map(float, xs), map(float, probs))))
    n = int(rng.integers(1, 60))
    return EmpiricalSample(losses=rng.normal(0.0, 100.0, size=n))
