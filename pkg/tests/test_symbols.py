from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdolab.errors import DomainError, InputError
from pdolab.symbols import (PiecewiseConstantTrack, SamplePlan, Symbol, certify, ellipticity_margin,
                            multi_indices, regular_upper_bound)


def step_track(values, T=2.0):
    n = len(values)
    return PiecewiseConstantTrack(tuple(np.linspace(0, T, n + 1)), tuple(values))


def test_eval_examples():
    assert Symbol.fractional_laplacian(2.0).eval(0.0, [3.0]) == pytest.approx(-9.0)
    assert Symbol.fractional_laplacian(1.0).eval(0.0, [0.0]) == 0.0
    sym = Symbol.time_modulated(2.0, PiecewiseConstantTrack.constant(2.0, 1.0))
    assert sym.eval(0.5, [1.0, 1.0]) == pytest.approx(-4.0)


def test_eval_time_array_shape():
    sym = Symbol.time_modulated(2.0, step_track([1.0, 3.0]))
    out = sym.eval(np.array([0.5, 1.5, 1.9]), np.array([[1.0], [2.0]]))
    assert out.shape == (3, 2)
    np.testing.assert_allclose(out, [[-1, -4], [-3, -12], [-3, -12]])


def test_derivative_examples():
    heat = Symbol.fractional_laplacian(2.0)
    assert heat.eval_derivative(0.0, [3.0], (1,)) == pytest.approx(-6.0)
    assert heat.eval_derivative(0.0, [5.0], (2,)) == pytest.approx(-2.0)
    poisson = Symbol.fractional_laplacian(1.0)
    h = 1e-6
    fd = (poisson.eval(0.0, [2.0 + h]) - poisson.eval(0.0, [2.0 - h])) / (2 * h)
    assert poisson.eval_derivative(0.0, [2.0], (1,)) == pytest.approx(-1.0)
    assert fd == pytest.approx(-1.0, abs=1e-6)


def test_derivative_at_origin_raises_when_singular():
    with pytest.raises(DomainError):
        Symbol.fractional_laplacian(1.0).eval_derivative(0.0, [0.0], (2,))


@pytest.mark.parametrize("gamma", [0.7, 1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("alpha", [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1)])
def test_base_derivative_matches_finite_differences(gamma, alpha):
    sym = Symbol.anisotropic(gamma, (1.0, 2.5))
    xi = np.array([0.7, -1.3])
    h = 1e-3

    def deriv(order, point):
        # nested central differences
        if not any(order):
            return sym.base(point)
        i = next(k for k, a in enumerate(order) if a)
        lower = list(order)
        lower[i] -= 1
        e = np.zeros(2)
        e[i] = h
        return (deriv(lower, point + e) - deriv(lower, point - e)) / (2 * h)

    assert sym.base_derivative(xi, alpha) == pytest.approx(deriv(list(alpha), xi), rel=1e-4, abs=1e-6)


def test_time_integral_examples():
    heat = Symbol.fractional_laplacian(2.0)
    assert heat.time_integral(0.0, 1.0, [2.0]) == pytest.approx(-4.0)
    sym = Symbol.time_modulated(2.0, step_track([1.0, 3.0]))
    assert sym.time_integral(0.0, 2.0, [1.0]) == pytest.approx(-4.0)
    assert sym.time_integral(0.3, 1.7, [0.0]) == 0.0
    with pytest.raises(InputError):
        sym.time_integral(1.0, 1.0, [1.0])


def test_complex_shift_integral():
    sym = Symbol.complex_shift(2.0, PiecewiseConstantTrack.constant(0.5, 1.0))
    assert sym.time_integral(0.0, 1.0, [2.0]) == pytest.approx(-(1 + 0.5j) * 4)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.9), st.floats(0.01, 1.0), st.integers(1, 6), st.integers(0, 1000))
def test_track_integral_is_additive(s, gap, n, seed):
    track = PiecewiseConstantTrack.random(2.0, n, 0.5, 2.0, seed=seed)
    t = min(2.0, s + gap)
    mid = 0.5 * (s + t)
    assert track.integral(s, t) == pytest.approx(track.integral(s, mid) + track.integral(mid, t), abs=1e-12)
    lo, hi = min(track.values), max(track.values)
    assert lo * (t - s) - 1e-12 <= track.integral(s, t) <= hi * (t - s) + 1e-12


def test_ellipticity_examples():
    heat = Symbol.fractional_laplacian(2.0)
    assert ellipticity_margin(heat, SamplePlan.default(heat, 1)) == 1.0
    tm = Symbol.time_modulated(2.0, step_track([1.0, 3.0]))
    assert ellipticity_margin(tm, SamplePlan.default(tm, 1)) == pytest.approx(1.0)
    cs = Symbol.complex_shift(2.0, PiecewiseConstantTrack.constant(0.5, 1.0))
    assert ellipticity_margin(cs, SamplePlan.default(cs, 2)) == pytest.approx(1.0)


def test_regular_upper_bound_examples():
    heat = Symbol.fractional_laplacian(2.0)
    plan = SamplePlan.default(heat, 1)
    assert regular_upper_bound(heat, 2, plan) == pytest.approx(2.0)
    assert regular_upper_bound(heat, 0, plan) == pytest.approx(1.0)
    tm = Symbol.time_modulated(2.0, step_track([1.0, 3.0]))
    assert regular_upper_bound(tm, 0, SamplePlan.default(tm, 1)) == pytest.approx(3.0)


def test_certify_labels_result_as_sampled():
    heat = Symbol.fractional_laplacian(2.0)
    cert = certify(heat, 3, SamplePlan.default(heat, 1))
    assert cert["ok"] and cert["label"] == "sampled bound"


def test_multi_indices_count():
    assert sorted(multi_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert list(multi_indices(1, 3)) == [(3,)]


@pytest.mark.parametrize("sym", [
    Symbol.fractional_laplacian(1.5),
    Symbol.anisotropic(2.0, (1.0, 3.0)),
    Symbol.time_modulated(2.0, PiecewiseConstantTrack((0.0, 0.5, 1.0), (1.0, 2.0))),
])
def test_symbol_roundtrip(sym):
    assert Symbol.from_dict(sym.to_dict()) == sym


def test_random_track_from_seed_is_deterministic():
    data = {"kind": "time_modulated", "gamma": 2.0, "seed": 5,
            "track": {"random": {"T": 1.0, "n_intervals": 4, "low": 0.5, "high": 2.0, "step": 0.125}}}
    a, b = Symbol.from_dict(data), Symbol.from_dict(data)
    assert a.track == b.track
    assert a.track.is_aligned(1 / 64)
