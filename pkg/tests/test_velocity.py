"""Averaging kernel, renormalized convolution, and drift velocity tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predprey.grid import DomainSpec, Field, build_grid, full, zeros
from predprey.velocity import (HorizonTooSmall, make_kernel,
                               modified_convolution, radial_profile, velocity,
                               verify_hypothesis_v)


def grid1d(n=64):
    return build_grid(DomainSpec(((0.0, 1.0),)), n)


@pytest.fixture(scope="module")
def kernel64():
    return make_kernel(0.25, grid1d(64))


def test_horizon_too_small():
    with pytest.raises(HorizonTooSmall):
        make_kernel(0.01, grid1d(64))


def test_profile_is_nonincreasing_with_flat_start(kernel64):
    ell, ell_bar = kernel64.ell, kernel64.ell_bar
    r = np.linspace(0, ell, 200)
    vals = radial_profile(r, ell, ell_bar)
    assert np.all(np.diff(vals) <= 1e-12)
    # first and second derivative vanish at r = 0 (quartic-in-r^4 profile)
    h = 1e-5
    d1 = (radial_profile(h, ell, ell_bar) - radial_profile(0.0, ell, ell_bar)) / h
    d2 = (radial_profile(2 * h, ell, ell_bar) - 2 * radial_profile(h, ell, ell_bar)
          + radial_profile(0.0, ell, ell_bar)) / h**2
    assert abs(d1) < 1e-6
    assert abs(d2) < 1e-6
    assert radial_profile(ell * 1.01, ell, ell_bar) == 0.0


def test_continuum_normalization_1d():
    # ell_bar makes the radial quadrature of the profile integrate to one
    k = make_kernel(0.25, grid1d(256))
    r = np.linspace(-0.25, 0.25, 20001)
    mass = np.trapezoid(radial_profile(np.abs(r), k.ell, k.ell_bar), r)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_interior_stencil_mass(kernel64):
    k = kernel64
    assert k.weights.sum() * k.grid.cell_volume == pytest.approx(1.0, abs=1e-12)
    interior = k.denominators[(k.grid.axis_centers[0] > 0.25)
                              & (k.grid.axis_centers[0] < 0.75)]
    assert np.max(np.abs(interior - 1.0)) < 1e-6


def test_boundary_denominator_half():
    k = make_kernel(0.25, grid1d(256))
    assert k.denominators[0] == pytest.approx(0.5, abs=0.02)
    assert k.denominators[-1] == pytest.approx(0.5, abs=0.02)
    assert np.all(k.denominators > 0)
    assert np.all(k.denominators <= 1.0 + 1e-12)


def test_convolution_preserves_constants(kernel64):
    g = kernel64.grid
    for c in (1.0, -2.5, 7.25):
        out = modified_convolution(full(g, c), kernel64)
        assert np.max(np.abs(out.values - c)) < 1e-9


def test_convolution_of_zero(kernel64):
    out = modified_convolution(zeros(kernel64.grid), kernel64)
    assert np.all(out.values == 0.0)


def test_convolution_delta_spike(kernel64):
    g = kernel64.grid
    vals = np.zeros(g.shape)
    i0 = 32
    vals[i0] = 1.0 / g.cell_volume
    out = modified_convolution(Field(g, vals), kernel64)
    # the response is the stencil row around the spike over the denominator
    r = kernel64.radius_cells[0]
    expected = np.zeros(g.shape)
    expected[i0 - r:i0 + r + 1] = kernel64.weights
    expected /= kernel64.denominators
    assert np.max(np.abs(out.values - expected)) < 1e-9


def test_convolution_linearity(kernel64):
    g = kernel64.grid
    rng = np.random.default_rng(3)
    r1 = Field(g, rng.normal(size=g.shape))
    r2 = Field(g, rng.normal(size=g.shape))
    lhs = modified_convolution(Field(g, 2.0 * r1.values - 3.0 * r2.values), kernel64)
    rhs = (2.0 * modified_convolution(r1, kernel64).values
           - 3.0 * modified_convolution(r2, kernel64).values)
    assert np.max(np.abs(lhs.values - rhs)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=64, max_size=64),
       st.lists(st.floats(0, 5), min_size=64, max_size=64))
def test_convolution_monotone(a, b):
    g = grid1d(64)
    k = make_kernel(0.25, g)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    conv_lo = modified_convolution(Field(g, lo), k)
    conv_hi = modified_convolution(Field(g, hi), k)
    assert np.all(conv_lo.values <= conv_hi.values + 1e-12)


def test_convolution_matches_plain_convolution_interior():
    # density supported far from the boundary: the renormalization is inactive
    g = grid1d(256)
    k = make_kernel(0.1, g)
    x = g.axis_centers[0]
    rho = np.where(np.abs(x - 0.5) < 0.2, np.cos((x - 0.5) * np.pi / 0.4) ** 2, 0.0)
    out = modified_convolution(Field(g, rho), k)
    plain = np.convolve(rho, k.weights[::-1], mode="same") * g.cell_volume
    interior = (x > 0.15) & (x < 0.85)
    assert np.max(np.abs(out.values[interior] - plain[interior])) < 1e-8


def test_velocity_of_constant_is_zero(kernel64):
    v = velocity(full(kernel64.grid, 3.0), kernel64, kappa=1.0)
    assert np.max(np.abs(v.components)) < 1e-9


def test_velocity_speed_cap(kernel64):
    rng = np.random.default_rng(11)
    for _ in range(5):
        w = Field(kernel64.grid, rng.uniform(0, 10, kernel64.grid.shape))
        v = velocity(w, kernel64, kappa=0.7)
        assert np.max(v.magnitude()) <= 0.7


def test_velocity_points_uphill():
    g = grid1d(128)
    k = make_kernel(0.25, g)
    x = g.axis_centers[0]
    w = Field(g, np.sin(np.pi * x))
    v = velocity(w, k, kappa=1.0, attract=1)
    mask = (x > 0.05) & (x < 0.25)  # inside (0, 1/2 - ell)
    assert np.all(v.components[0][mask] > 0)
    v_rep = velocity(w, k, kappa=1.0, attract=-1)
    assert np.all(v_rep.components[0][mask] < 0)


def test_velocity_2d_speed_cap():
    g = build_grid(DomainSpec(((0.0, 1.0), (0.0, 1.0))), (48, 48))
    k = make_kernel(0.2, g)
    xs, ys = g.centers()
    w = Field(g, np.exp(-30 * ((xs - 0.6) ** 2 + (ys - 0.4) ** 2)))
    v = velocity(w, k, kappa=0.5)
    assert np.max(v.magnitude()) <= 0.5


def test_hypothesis_v_zero_sample(kernel64):
    rep = verify_hypothesis_v(kernel64, 1.0, [zeros(kernel64.grid)])
    assert rep.k_v == 0.0
    assert rep.c_v == 0.0


def test_hypothesis_v_proportional_fields(kernel64):
    g = kernel64.grid
    x = g.axis_centers[0]
    w = Field(g, np.exp(-40 * (x - 0.5) ** 2))
    w2 = Field(g, 2.0 * w.values)
    rep = verify_hypothesis_v(kernel64, 1.0, [w, w2])
    assert np.isfinite(rep.lipschitz_quotient)
    assert rep.lipschitz_quotient > 0


def test_hypothesis_v_random_suite(kernel64):
    g = kernel64.grid
    rng = np.random.default_rng(5)
    x = g.axis_centers[0]
    samples = []
    for _ in range(20):
        c0 = rng.uniform(0.2, 0.8)
        width = rng.uniform(10, 60)
        samples.append(Field(g, rng.uniform(0.1, 1.0) * np.exp(-width * (x - c0) ** 2)))
    rep = verify_hypothesis_v(kernel64, 1.0, samples)
    assert rep.k_v > 0
    assert rep.c_v > 0
    assert rep.n_samples == 20
    # the speed bound quotient is the weakest of the three by construction
    assert rep.speed_quotient <= rep.k_v


def test_degenerate_sample_raises():
    # a hand-built broken report path: zero-mass sample cannot produce velocity,
    # so fabricate one by monkeypatching is overkill; assert the guard directly
    g = grid1d(64)
    k = make_kernel(0.25, g)
    rep = verify_hypothesis_v(k, 1.0, [zeros(g)])
    assert rep.speed_quotient == 0.0
    with pytest.raises(ValueError):
        verify_hypothesis_v(k, 1.0, [])
