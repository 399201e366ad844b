import cmath
import math

import numpy as np
import pytest

from spininterp.curves import (
    CurveFamily,
    TubeRegion,
    barvinok_map_coeffs,
    build_curve_family,
    certify_tubes,
    mobius_arc,
    r_hat,
    s_gamma,
    s_gamma_inverse,
)
from spininterp.series import series_evaluate


def test_barvinok_endpoints_closed_form():
    for g in (0.9, 0.4, 0.05, 1e-3):
        assert s_gamma(g, 0.0) == 0.0
        assert s_gamma(g, 1.0) == 1.0


def test_barvinok_strip_bounds():
    for g in (1.0 - 1e-9, 0.3, 0.05):
        rh = r_hat(g)
        theta = np.linspace(0.0, 2.0 * math.pi, 2048, endpoint=False) + 1e-5
        vals = np.array([s_gamma(g, rh * cmath.exp(1j * t)) for t in theta])
        assert vals.real.min() >= -g - 1e-9
        assert vals.real.max() <= 1.0 + g + 1e-9
        assert np.abs(vals.imag).max() <= math.pi * g / 2.0 + 1e-9


def test_r_hat_gamma_one():
    want = (1.0 - math.exp(-2.0)) / (1.0 - math.exp(-1.0))
    assert r_hat(1.0 - 1e-12) == pytest.approx(want, rel=1e-9)
    assert r_hat(0.5) > 1.0


def test_barvinok_coeffs_and_inverse():
    g = 0.35
    ser = barvinok_map_coeffs(g, 40)
    assert ser.coeffs[0] == 0.0
    alpha = 1.0 - math.exp(-1.0 / g)
    for k in range(1, 6):
        assert ser.coeffs[k] == pytest.approx(g * alpha**k / k, rel=1e-14)
    # truncation converges inside the disk; inverse undoes the map
    for z in (0.3, 0.2 + 0.4j):
        val = s_gamma(g, z)
        assert series_evaluate(ser, z) == pytest.approx(val, abs=1e-12)
        assert s_gamma_inverse(g, val) == pytest.approx(z, rel=1e-12)
    with pytest.raises(ValueError):
        barvinok_map_coeffs(1.5, 8)


def test_mobius_arc_properties():
    bstar, N = 0.5, 3
    for k in range(-N - 1, N + 2):
        arc = mobius_arc(bstar, N, k)
        assert arc(0.0) == 0.0
        assert arc(1.0) == pytest.approx(bstar, rel=1e-14)
        # tangent angle at 0
        want = math.pi * k / (2.0 * (N + 1))
        assert cmath.phase(arc.deriv(0.0)) == pytest.approx(want, abs=1e-12)
        # inverse round trip
        y = arc(0.37)
        assert arc.inverse(y) == pytest.approx(0.37, rel=1e-12)
    with pytest.raises(ValueError):
        mobius_arc(bstar, N, N + 2)


def test_mobius_k0_is_linear():
    ser = mobius_arc(0.5, 3, 0).series(6)
    want = np.zeros(7, dtype=complex)
    want[1] = 0.5
    assert np.abs(ser.coeffs - want).max() <= 1e-15


def test_mobius_series_matches_geometric_form():
    bstar, N, k, m = 0.4, 2, 1, 12
    arc = mobius_arc(bstar, N, k)
    ser = arc.series(m)
    w = arc.w
    want = np.zeros(m + 1, dtype=complex)
    for j in range(1, m + 1):
        want[j] = bstar * w * (1.0 - w) ** (j - 1)
    assert np.abs(ser.coeffs - want).max() <= 1e-12


def test_family_exact_endpoints():
    fam = build_curve_family(
        beta_star=0.5, epsilon=0.2, delta=0.3, kappa=0.2, N=3, m=20, beta_2nd=1.0
    )
    for k in fam.ks:
        assert fam.series_for(k).coeffs[0] == 0.0
        assert fam.curve_exact(k, 0.0) == 0.0
        assert abs(fam.curve_exact(k, 1.0) - 0.5) <= 1e-10


def test_family_beta_star_range():
    with pytest.raises(ValueError):
        build_curve_family(
            beta_star=0.7, epsilon=0.2, delta=0.3, kappa=0.2, N=2, m=8, beta_2nd=1.0
        )


def test_family_truncation_converges_geometrically():
    # comparing depth-m and depth-2m evaluations at z = 1
    fam_m = build_curve_family(
        beta_star=0.3, epsilon=0.2, delta=0.3, kappa=0.2, N=1, m=24, beta_2nd=1.0, gamma=0.35
    )
    fam_2m = build_curve_family(
        beta_star=0.3, epsilon=0.2, delta=0.3, kappa=0.2, N=1, m=48, beta_2nd=1.0, gamma=0.35
    )
    rh = fam_m.r_hat
    for k in fam_m.ks:
        e_m = abs(series_evaluate(fam_m.series_for(k), 1.0) - 0.3)
        e_2m = abs(series_evaluate(fam_2m.series_for(k), 1.0) - 0.3)
        assert e_2m <= e_m
        assert e_m <= 50.0 * (1.0 / rh) ** 24


def test_family_tangent_angles_increasing():
    fam = build_curve_family(
        beta_star=0.4, epsilon=0.2, delta=0.3, kappa=0.2, N=3, m=10, beta_2nd=1.0
    )
    angles = [cmath.phase(fam.series_for(k).coeffs[1]) for k in fam.ks]
    assert all(b > a for a, b in zip(angles, angles[1:]))


def test_family_coefficient_decay_envelope():
    fam = build_curve_family(
        beta_star=0.4, epsilon=0.2, delta=0.3, kappa=0.2, N=2, m=48, beta_2nd=1.0, gamma=0.3
    )
    rh = fam.r_hat
    for k in fam.ks:
        peak = np.abs(fam.boundary_samples(k, 512)).max()
        coeffs = np.abs(fam.series_for(k).coeffs)
        js = np.arange(1, coeffs.size)
        # Cauchy envelope with sampling slack
        assert np.all(coeffs[1:] <= 1.05 * peak * (1.0 / rh) ** js)


def test_boundary_images_inside_endpoint_disk():
    fam = build_curve_family(
        beta_star=0.3, epsilon=0.15, delta=0.3, kappa=0.2, N=2, m=12, beta_2nd=1.0
    )
    limit = 0.3 + 4.0 * math.sqrt(fam.a)
    for k in fam.ks:
        assert np.abs(fam.boundary_samples(k, 1024)).max() <= limit + 1e-9


def test_tube_region_membership():
    reg = TubeRegion(0.1)
    assert reg.contains(0.5 + 0.0j)
    assert reg.contains(0.0)
    assert reg.contains(1.0)
    assert not reg.contains(0.5 + 0.5j)
    assert reg.distance(0.5 + 0.5j) > 0.3


def test_certify_small_families():
    for N, bstar in ((1, 0.5), (2, 0.3)):
        fam = build_curve_family(
            beta_star=bstar, epsilon=0.15, delta=0.3, kappa=0.2, N=N, m=12, beta_2nd=1.0
        )
        rep = certify_tubes(fam, samples=1024)
        assert rep.all_ok, rep.witnesses


def test_certify_refuses_outside_hypothesis():
    # a = 4 gamma = 0.8 > 0.5 violates the disjointness hypothesis
    fam = build_curve_family(
        beta_star=0.3, epsilon=0.15, delta=0.3, kappa=0.2, N=1, m=8, beta_2nd=1.0, gamma=0.2
    )
    with pytest.raises(ValueError, match="hypothesis"):
        certify_tubes(fam, samples=256)


def test_certify_reports_violations_not_raises():
    # within the schedule the geometry claims are theorems, so a sampled
    # violation needs an inconsistent family: shrink the recorded working
    # disk below the actual curve reach and check that the certifier
    # reports witnesses instead of raising
    import dataclasses

    fam = build_curve_family(
        beta_star=0.3, epsilon=0.2, delta=0.3, kappa=0.2, N=1, m=8, beta_2nd=1.0
    )
    bad = dataclasses.replace(fam, beta_2nd=0.25)  # limit 0.2 < reach 0.3
    rep = certify_tubes(bad, samples=512)
    assert not rep.all_ok
    assert not rep.containment_ok
    assert rep.witnesses["containment"]  # witness points recorded
