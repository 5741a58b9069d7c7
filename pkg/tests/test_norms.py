from __future__ import annotations

import numpy as np
import pytest

from pdolab.errors import AdmissibilityError, InputError
from pdolab.grid import BandLimitedFamily, Field, SpacetimeGrid
from pdolab.norms import NormSpec, norm_equivalence_check, time_quadrature, weight_on_grid, weighted_norm
from pdolab.weights import WeightSpec


def test_unweighted_matches_plain_l2():
    g = SpacetimeGrid(1, 2.0, 32, 1.0, 16)
    f = BandLimitedFamily(0, 4).sample(g, 0)
    tau = time_quadrature(g)
    plain = np.sqrt(np.sum(np.abs(f.values) ** 2 * tau[:, None]) * g.dx)
    assert weighted_norm(f, NormSpec.lp(2.0)) == pytest.approx(plain, rel=1e-12)
    assert weighted_norm(f, NormSpec.lp(2.0, WeightSpec.constant(2.0, 2))) == pytest.approx(plain, rel=1e-12)


def test_mixed_equals_product_weight_for_separable_fields():
    g = SpacetimeGrid(1, 2.0, 32, 1.0, 16)
    f = Field.from_function(g, lambda t, X: (1 + t) * np.exp(-X[..., 0] ** 2))
    w1, w2 = WeightSpec.power_time(0.5, 2.0), WeightSpec.power_space(0.5, 2.0, 1)
    mixed = weighted_norm(f, NormSpec.mixed(2.0, 2.0, w1, w2))
    product = weighted_norm(f, NormSpec.lp(2.0, WeightSpec.product_power(0.5, 0.5, 2.0, 1, q=2.0)))
    assert mixed == pytest.approx(product, rel=1e-12)


def test_indicator_norm_with_boundary_weight():
    # |x|^1 with p = 2 sits on the A_2 boundary, so the example needs a non-strict spec
    with pytest.raises(AdmissibilityError):
        NormSpec.lp(2.0, WeightSpec(kind="power_space", p=2.0, dim=1, alpha=1.0))
    spec = NormSpec.lp(2.0, WeightSpec(kind="power_space", p=2.0, dim=1, alpha=1.0), strict=False)
    errs = []
    for N in (256, 512, 1024):
        g = SpacetimeGrid(1, 2.0, N, 1.0, 8)
        x = g.x
        ind = ((x >= 0) & (x <= 1)).astype(float)
        ind[x == 0] = 0.5
        ind[x == 1] = 0.5
        f = Field(g, np.broadcast_to(ind, g.shape).copy())
        errs.append(abs(weighted_norm(f, spec) - 2 ** -0.5))
    assert errs[-1] < 1e-3
    assert errs[0] / errs[-1] > 3


def test_singular_nodes_get_cell_averages():
    g = SpacetimeGrid(1, 1.0, 8, 1.0, 4)
    w = weight_on_grid(WeightSpec.power_space(-0.5, 2.0, 1), g)
    origin = w[0, g.N // 2]
    # average of |x|^{-1/2} over [-dx/2, dx/2] is 2 (dx/2)^{-1/2}
    assert origin == pytest.approx(2 * (g.dx / 2) ** -0.5, rel=1e-12)
    wt = weight_on_grid(WeightSpec.power_time(0.5, 2.0), g)
    assert wt[0, 0] == pytest.approx((g.dt / 2) ** 0.5 / 1.5 / 2 * 2, rel=1e-9)


def test_spacetime_weight_shape_and_role_checks():
    g = SpacetimeGrid(1, 1.0, 8, 1.0, 4)
    w = weight_on_grid(WeightSpec.spacetime_power(0.5, 2.0, 1), g)
    assert w.shape == g.shape and np.all(np.isfinite(w)) and np.all(w > 0)
    with pytest.raises(InputError):
        weight_on_grid(WeightSpec.power_space(0.5, 2.0, 2), g, role="space")


def test_single_slice_norm():
    g = SpacetimeGrid(1, 2.0, 32, 1.0, 4)
    f = Field(g, np.ones(g.N), layout="single-slice")
    assert weighted_norm(f, NormSpec.lp(2.0)) == pytest.approx(np.sqrt(2 * g.L), rel=1e-12)


def test_norm_spec_validation_and_roundtrip():
    with pytest.raises(InputError):
        NormSpec("sobolev", 2.0)
    with pytest.raises(InputError):
        NormSpec.lp(1.0)
    spec = NormSpec.mixed(3.0, 2.0, WeightSpec.power_time(0.5, 3.0), WeightSpec.power_space(0.5, 2.0, 1))
    assert NormSpec.from_dict(spec.to_dict()) == spec


def test_equivalence_nu_zero_bookends():
    g = SpacetimeGrid(1, 2.0, 32, 1.0, 8)
    fields = BandLimitedFamily(0, 4).fields(g, 4)
    rep = norm_equivalence_check(fields, 2.0, 0.0)
    r = np.array(rep.metadata["ratios"])
    assert np.all(r == pytest.approx(0.5))
    assert rep.passed


def test_equivalence_single_mode_ratio():
    g = SpacetimeGrid(1, np.pi, 32, 1.0, 4)
    xi0, nu = 3.0, 1.5
    f = Field.from_function(g, lambda t, X: np.exp(1j * xi0 * X[..., 0]) + 0 * t)
    rep = norm_equivalence_check([f], 2.0, nu)
    expected = (1 + xi0 ** 2) ** (nu / 2) / (1 + xi0 ** nu)
    assert rep.metadata["ratios"][0] == pytest.approx(expected, rel=1e-12)


def test_equivalence_weighted_family_is_stable():
    g = SpacetimeGrid(1, 4.0, 64, 1.0, 16)
    fam = BandLimitedFamily(7, 8)
    w = WeightSpec.spacetime_power(0.5, 2.0, 1)
    rep = norm_equivalence_check(fam.fields(g, 32), 2.0, 1.0, w, refined=fam.fields(g.refined(), 32))
    assert rep.passed, rep.summary()
