import math

import numpy as np
import pytest

from hdlab import (CircleQuadrature, KernelSpec, gaussian_domination_check,
                   lower_bound_constant, measure, smooth_sphere,
                   smooth_sphere_value, sphere_fourier, sphere_fourier_radial)
from hdlab.sphere import THETA, decay_envelope


def test_weights_sum_to_one():
    q = CircleQuadrature(128, 2.0)
    assert sphere_fourier(q, np.zeros(2)) == pytest.approx(1.0, abs=1e-15)


def test_phase_independence_for_radial_integrands():
    # quadrature of a radial function must not depend on the node phase
    def radial_avg(q):
        pts = q.nodes() + np.array([0.3, 0.0])
        r2 = (pts**2).sum(axis=-1)
        return float(np.exp(-r2).mean())

    base = radial_avg(CircleQuadrature(256, 1.0, phase=0.0))
    for phase in (0.1, 1.0, 2.5):
        assert abs(radial_avg(CircleQuadrature(256, 1.0, phase=phase)) - base) <= 1e-12


@pytest.mark.parametrize("m", [4, 16, 64, 256])
def test_smoothed_gaussian_at_origin_exact(m):
    # every node sits at distance 1 from the origin, so the node sum is exact
    q = CircleQuadrature(m, 1.0)
    v = smooth_sphere_value(q, KernelSpec("g", 1.0), np.zeros(2))
    assert v == pytest.approx(math.exp(-math.pi), abs=1e-10)


def test_smoothed_gaussian_far_tail():
    q = CircleQuadrature(64, 1.0)
    v = smooth_sphere_value(q, KernelSpec("g", 1.0), np.array([10.0, 0.0]))
    assert v <= math.exp(-math.pi * 81)


def test_smoothed_grids_integrals():
    q = CircleQuadrature(256, 2.0)
    res = smooth_sphere(q, KernelSpec("g", 1.0), 16.0, 1 / 32)
    assert not res.under_resolved
    assert measure(res.grid) == pytest.approx(1.0, abs=1e-6)
    res_k = smooth_sphere(q, KernelSpec("k", 1.0), 16.0, 1 / 32)
    assert abs(measure(res_k.grid)) <= 1e-6


def test_smoothed_grid_positive_and_radial():
    q = CircleQuadrature(256, 1.0)
    res = smooth_sphere(q, KernelSpec("g", 1.0), 8.0, 1 / 32)
    vals = res.grid.values
    assert vals.min() > 0
    # radial symmetry about the window centre: compare against transpose
    # and both axis flips (the sampling lattice is symmetric under these)
    assert np.abs(vals - vals.T).max() <= 1e-10
    assert np.abs(vals - vals[::-1, :]).max() <= 1e-10
    assert np.abs(vals - vals[:, ::-1]).max() <= 1e-10


def test_under_resolved_flag():
    q = CircleQuadrature(8, 4.0)
    res = smooth_sphere(q, KernelSpec("g", 0.01), 16.0, 1 / 16)
    assert res.under_resolved


def test_sphere_fourier_real_radial_for_even_m():
    # radial to round-off while the node count dominates 2 pi lam |xi|
    q = CircleQuadrature(256, 1.0)
    radii = np.array([0.5, 1.0, 3.0, 7.0])
    base = None
    for ang in (0.0, 0.7, 2.1):
        pts = np.stack([radii * math.cos(ang), radii * math.sin(ang)], axis=-1)
        vals = sphere_fourier(q, pts)
        assert np.abs(vals.imag).max() <= 1e-10
        if base is None:
            base = vals.real
        else:
            assert np.abs(vals.real - base).max() <= 1e-10


def test_sphere_fourier_refinement_agreement():
    q1 = CircleQuadrature(64, 1.0)
    q2 = CircleQuadrature(128, 1.0)
    xi = np.array([1.0, 0.0])
    assert sphere_fourier(q1, xi) == pytest.approx(sphere_fourier(q2, xi), abs=1e-8)


def test_sphere_fourier_decay(constants):
    radii = np.linspace(10.0, 100.0, 1201)
    q = CircleQuadrature(1600, 1.0)  # at least 16 nodes per unit frequency
    assert decay_envelope(q, radii) <= constants.value("C_decay")


def test_radial_profile_matches_pointwise():
    q = CircleQuadrature(128, 1.5)
    u = np.array([0.3, 1.2, 4.0])
    prof = sphere_fourier_radial(q, u)
    pts = np.stack([u, np.zeros_like(u)], axis=-1)
    assert np.abs(prof - sphere_fourier(q, pts).real).max() <= 1e-12


def test_lower_bound_constant(constants):
    c, r = lower_bound_constant(256, 801)
    assert c >= constants.value("c_ball")
    assert c > 0
    # value at the origin is exactly exp(-pi); the minimum sits on the rim
    v0 = smooth_sphere_value(CircleQuadrature(256, 1.0), KernelSpec("g", 1.0), np.zeros(2))
    assert v0 == pytest.approx(math.exp(-math.pi), abs=1e-12)
    assert r == pytest.approx(2.0, abs=1e-9)
    # radial monotonicity beyond the circle
    radii = np.linspace(1.0, 2.0, 64)
    pts = np.stack([radii, np.zeros_like(radii)], axis=-1)
    vals = smooth_sphere_value(CircleQuadrature(256, 1.0), KernelSpec("g", 1.0), pts)
    assert np.all(np.diff(vals) < 0)


def test_domination_basic(constants):
    c = constants.value("C_domination")
    pts = np.array([[0.0, 0.0]])
    res = gaussian_domination_check(1.0, 1.0, 1.0, pts, c)
    assert res.status == "ok"
    assert res.holds
    assert res.margin >= 1.0


def test_domination_on_circle(constants):
    c = constants.value("C_domination")
    pts = np.array([[1.0, 0.0], [0.5, 0.5]])
    res = gaussian_domination_check(1.0, 0.5, 0.5, pts, c)
    assert res.holds


def test_domination_monotone_in_eps(constants):
    # halving eps multiplies the dominating side by 8, so margins only grow
    c = constants.value("C_domination")
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    m1 = gaussian_domination_check(1.0, 0.5, 0.5, pts, c).margin
    m2 = gaussian_domination_check(1.0, 0.5, 0.25, pts, c).margin
    assert m2 >= m1 * 7.9


def test_domination_validates_ranges():
    with pytest.raises(ValueError):
        gaussian_domination_check(1.0, 0.25, 0.5, np.zeros((1, 2)), 1.0)


def test_scale_band_radicand_positive():
    # sqrt((t lam)^2 - 2 s^2) stays real across the whole working band
    for tlam in (0.01, 0.5, 1.0, 7.0):
        s = np.linspace(THETA * tlam, math.e * THETA * tlam, 101)
        assert np.all(tlam**2 - 2 * s**2 > 0)
