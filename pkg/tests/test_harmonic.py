from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import direct_maximal_sharp
from pdolab.errors import InputError
from pdolab.grid import BandLimitedFamily, Field, SpacetimeGrid
from pdolab.harmonic import (DyadicBox, ParabolicCube, brute_force_maximal_sharp, dyadic_labels,
                             fefferman_stein_ratios, maximal_function, quasi_metric, quasi_triangle_constant,
                             sharp_function, sharp_maximal_pointwise_check, sharp_maximal_ratio)
from pdolab.norms import NormSpec
from pdolab.symbols import Symbol

SMALL = SpacetimeGrid(1, 1.0, 8, 1.0, 7)
SMALL2 = SpacetimeGrid(2, 1.0, 8, 1.0, 7)


def test_quasi_metric_examples():
    assert quasi_metric((0.0, [0.0]), (4.0, [1.0]), 2.0) == pytest.approx(3.0)
    assert quasi_metric((1.0, [2.0]), (1.0, [2.0]), 2.0) == 0.0
    assert quasi_metric((1.0, [1.0, 1.0]), (0.0, [0.0, 0.0]), 1.0) == pytest.approx(1 + math.sqrt(2))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 3.0), *[st.tuples(st.floats(-5, 5), st.floats(-5, 5)) for _ in range(3)])
def test_quasi_triangle_inequality(gamma, a, b, c):
    K = quasi_triangle_constant(gamma)
    dab = quasi_metric((a[0], a[1]), (b[0], b[1]), gamma)
    dbc = quasi_metric((b[0], b[1]), (c[0], c[1]), gamma)
    dac = quasi_metric((a[0], a[1]), (c[0], c[1]), gamma)
    assert dac <= K * (dab + dbc) + 1e-9


def test_parabolic_cube_and_dyadic_box():
    cube = ParabolicCube((0.0, np.zeros(1)), 1.0, 2.0)
    assert cube.contains(0.5, [0.5]) and not cube.contains(1.0, [0.0])
    assert cube.volume == pytest.approx(4.0)
    box = DyadicBox.containing(2, 0.1, [0.3], gamma=2.0)
    assert box.contains(0.1, [0.3])
    assert box.parent().contains(0.1, [0.3])
    assert box.volume == pytest.approx(2.0 ** -6)


def test_dyadic_labels_nest():
    g = SpacetimeGrid(1, 2.0, 32, 1.0, 64)
    fine, coarse = dyadic_labels(g, 3, 2.0), dyadic_labels(g, 2, 2.0)
    for lab in np.unique(fine):
        assert np.unique(coarse[fine == lab]).size == 1


def test_constant_field():
    f = Field(SMALL, np.full(SMALL.shape, 3.0))
    np.testing.assert_allclose(maximal_function(f, 2.0), 3.0)
    assert np.all(sharp_function(f, 2.0) == 0.0)


@pytest.mark.parametrize("grid", [SMALL, SMALL2])
@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_single_cell_indicator_matches_direct_enumeration(grid, gamma):
    vals = np.zeros(grid.shape)
    vals[(3,) + (4,) * grid.d] = 1.0
    f = Field(grid, vals)
    M, S = direct_maximal_sharp(vals, gamma, grid.dx, grid.dt)
    np.testing.assert_allclose(maximal_function(f, gamma), M, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(sharp_function(f, gamma), S, rtol=1e-12, atol=1e-15)
    if grid.dx ** gamma <= grid.dt:
        # the smallest cube is the cell itself
        assert maximal_function(f, gamma)[(3,) + (4,) * grid.d] == 1.0


@pytest.mark.parametrize("seed", range(5))
def test_random_fields_match_direct_enumeration(seed):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(SMALL.shape)
    M, S = direct_maximal_sharp(vals, 2.0, SMALL.dx, SMALL.dt)
    f = Field(SMALL, vals)
    np.testing.assert_allclose(maximal_function(f, 2.0), M, rtol=1e-12)
    np.testing.assert_allclose(sharp_function(f, 2.0), S, rtol=1e-12)


def test_complex_fields_match_package_brute_force():
    rng = np.random.default_rng(3)
    vals = rng.standard_normal(SMALL.shape) + 1j * rng.standard_normal(SMALL.shape)
    f = Field(SMALL, vals)
    M, S = direct_maximal_sharp(vals, 2.0, SMALL.dx, SMALL.dt)
    M2, S2 = brute_force_maximal_sharp(f, 2.0)
    np.testing.assert_allclose(sharp_function(f, 2.0), S, rtol=1e-12)
    np.testing.assert_allclose(M2, M, rtol=1e-12)
    np.testing.assert_allclose(S2, S, rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(0.1, 5))
def test_homogeneity_and_translation(seed, c, lam):
    vals = np.random.default_rng(seed).standard_normal(SMALL.shape)
    f = Field(SMALL, vals)
    np.testing.assert_allclose(maximal_function(Field(SMALL, lam * vals), 2.0),
                               lam * maximal_function(f, 2.0), rtol=1e-12)
    np.testing.assert_allclose(sharp_function(Field(SMALL, vals + c), 2.0), sharp_function(f, 2.0),
                               rtol=1e-9, atol=1e-12)
    assert np.all(maximal_function(f, 2.0) >= np.abs(vals) - 1e-12)


def test_fefferman_stein_family_is_stable():
    g = SpacetimeGrid(1, 4.0, 16, 1.0, 8)
    fam = BandLimitedFamily(1, 2)
    rep = fefferman_stein_ratios(fam.fields(g, 6), 2.0, NormSpec.lp(2.0), refined=fam.fields(g.refined(), 6))
    assert rep.row("maximal_over_f").measured >= 1
    assert rep.passed, rep.summary()


def test_pointwise_ratio_edge_cases():
    g = SpacetimeGrid(1, 4.0, 16, 1.0, 16)
    heat = Symbol.fractional_laplacian(2.0)
    assert sharp_maximal_ratio(heat, Field.zeros(g), 0.0, 0.5, 2.0) == 0.0
    with pytest.raises(InputError):
        sharp_maximal_pointwise_check(heat, 0.0, [0.25, 0.5], 2.5, [Field.zeros(g)])
