import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spininterp.model import Domain, MixtureSpec, build_disorder, pure_p_spec, sk_spec
from spininterp.series import (
    ComplexSeries,
    WorkBudgetError,
    moments_combinatorial,
    series_compose,
    series_divide,
    series_evaluate,
    series_exp,
    series_log,
    series_multiply,
    sphere_monomial_expectation,
)
from spininterp.threshold import slice_log_measure


def _random_series(rng, m, scale=1.0, ratio=0.6, unit_c0=None):
    c = (rng.standard_normal(m + 1) + 1j * rng.standard_normal(m + 1)) * scale
    c *= ratio ** np.arange(m + 1)
    if unit_c0 is not None:
        c[0] = unit_c0
    return ComplexSeries(c)


# ---------------------------------------------------------------------------
# algebra


def test_multiply_one_minus_z_squared():
    a = ComplexSeries([1.0, 1.0, 0.0])
    b = ComplexSeries([1.0, -1.0, 0.0])
    prod = series_multiply(a, b)
    assert np.allclose(prod.coeffs, [1.0, 0.0, -1.0])


def test_multiply_identity():
    rng = np.random.default_rng(0)
    a = _random_series(rng, 9)
    one = ComplexSeries.from_coeffs([1.0], degree=9)
    assert np.array_equal(series_multiply(a, one).coeffs, a.coeffs)


def test_multiply_against_reversed_order_convolution():
    rng = np.random.default_rng(1)
    a = _random_series(rng, 16)
    b = _random_series(rng, 16)
    prod = series_multiply(a, b)
    # independent reference loop accumulating in reversed order
    ref = np.zeros(17, dtype=np.complex128)
    for k in range(17):
        for j in range(k, -1, -1):
            ref[k] += a.coeffs[j] * b.coeffs[k - j]
    assert np.abs(prod.coeffs - ref).max() <= 1e-13


def test_multiply_degree_mismatch():
    with pytest.raises(ValueError):
        series_multiply(ComplexSeries([1.0, 2.0]), ComplexSeries([1.0]))


def test_log_of_exp_series():
    m = 12
    a = ComplexSeries([1.0 / math.factorial(k) for k in range(m + 1)])
    b = series_log(a)
    want = np.zeros(m + 1)
    want[1] = 1.0
    assert np.abs(b.coeffs - want).max() <= 1e-14


def test_log_of_one_plus_z():
    m = 10
    a = ComplexSeries.from_coeffs([1.0, 1.0], degree=m)
    b = series_log(a)
    want = np.zeros(m + 1)
    for k in range(1, m + 1):
        want[k] = (-1.0) ** (k + 1) / k
    assert np.abs(b.coeffs - want).max() <= 1e-14


def test_log_requires_unit_constant():
    with pytest.raises(ValueError):
        series_log(ComplexSeries([2.0, 1.0]))
    with pytest.raises(ValueError):
        series_exp(ComplexSeries([0.5, 1.0]))


def test_round_trip_m20():
    rng = np.random.default_rng(3)
    a = _random_series(rng, 20, unit_c0=1.0)
    rt = series_exp(series_log(a))
    assert np.abs(rt.coeffs - a.coeffs).max() <= 1e-12


def test_round_trip_dd_beats_plain_double():
    # adversarial draw at m = 64: the plain double recurrences (run here
    # as a reference) lose several digits; the dd path must not
    rng = np.random.default_rng(7)
    m = 64
    a = _random_series(rng, m, scale=1.0, ratio=0.75, unit_c0=1.0)

    def plain_log(c):
        b = np.zeros(m + 1, dtype=np.complex128)
        for k in range(1, m + 1):
            s = sum(j * b[j] * c[k - j] for j in range(1, k))
            b[k] = c[k] - s / k
        return b

    def plain_exp(b):
        c = np.zeros(m + 1, dtype=np.complex128)
        c[0] = 1.0
        for k in range(1, m + 1):
            c[k] = sum(c[j] * (k - j) * b[k - j] for j in range(k)) / k
        return c

    plain_err = np.abs(plain_exp(plain_log(a.coeffs)) - a.coeffs).max()
    dd_err = np.abs(series_exp(series_log(a)).coeffs - a.coeffs).max()
    assert dd_err <= max(plain_err, 1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 64))
    a = _random_series(rng, m, scale=0.5, ratio=0.55, unit_c0=1.0)
    rt = series_exp(series_log(a))
    assert np.abs(rt.coeffs - a.coeffs).max() <= 1e-12


def test_compose_identity():
    rng = np.random.default_rng(4)
    z = _random_series(rng, 8)
    ident = ComplexSeries.from_coeffs([0.0, 1.0], degree=8)
    assert np.abs(series_compose(z, ident).coeffs - z.coeffs).max() <= 1e-15


def test_compose_geometric_in_z_squared():
    m = 6
    geo = ComplexSeries(np.ones(m + 1))  # 1/(1-z) truncated
    zsq = ComplexSeries.from_coeffs([0.0, 0.0, 1.0], degree=m)
    out = series_compose(geo, zsq)
    assert np.allclose(out.coeffs, [1, 0, 1, 0, 1, 0, 1])


def test_compose_requires_vanishing_inner():
    a = ComplexSeries([1.0, 1.0])
    with pytest.raises(ValueError):
        series_compose(a, ComplexSeries([0.5, 1.0]))


def test_compose_against_cauchy_integral_oracle():
    rng = np.random.default_rng(5)
    m = 12
    Z = _random_series(rng, m)
    l = _random_series(rng, m, unit_c0=0.0)
    out = series_compose(Z, l)
    # contour evaluation of the composed truncations: coefficient k is the
    # circle mean of F(z) z^{-k}.  The 1/r^k amplification of double-rounding
    # noise makes tiny radii useless at k = 12; r = 0.3 keeps the noise under
    # the 1e-8 target while the 256-point trapezoid still kills aliasing.
    r = 0.3
    theta = np.arange(256) * (2.0 * math.pi / 256)
    zs = r * np.exp(1j * theta)
    inner = np.array([series_evaluate(l, z) for z in zs])
    F = np.array(
        [series_evaluate(Z, iv) for iv in inner]
    )
    for k in range(m + 1):
        ck = np.mean(F * np.exp(-1j * k * theta)) / r**k
        assert abs(ck - out.coeffs[k]) <= 1e-8, k


def test_compose_associativity():
    rng = np.random.default_rng(6)
    m = 12
    Z = _random_series(rng, m)
    l1 = _random_series(rng, m, unit_c0=0.0)
    l2 = _random_series(rng, m, unit_c0=0.0)
    left = series_compose(series_compose(Z, l1), l2)
    right = series_compose(Z, series_compose(l1, l2))
    assert np.abs(left.coeffs - right.coeffs).max() <= 1e-10


def test_divide_known_quotient():
    # (1 - z^2) / (1 - z) = 1 + z
    m = 5
    num = ComplexSeries.from_coeffs([1.0, 0.0, -1.0], degree=m)
    den = ComplexSeries.from_coeffs([1.0, -1.0], degree=m)
    q = series_divide(num, den)
    assert np.allclose(q.coeffs, [1, 1, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        series_divide(num, ComplexSeries.from_coeffs([0.0, 1.0], degree=m))


def test_series_csv_dump(tmp_path):
    import io

    a = ComplexSeries([1.0, 2.0 + 1.0j])
    buf = io.StringIO()
    a.write_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "k,re,im"
    assert lines[2].startswith("1,2.0,1.0")


# ---------------------------------------------------------------------------
# sphere monomial expectations


def test_sphere_second_moment_is_one():
    for n in (1, 2, 4, 9):
        assert sphere_monomial_expectation(n, (2,)) == pytest.approx(1.0, rel=1e-13)


def test_sphere_fourth_moment_beta_quadrature():
    # first-coordinate law: sigma_1 = sqrt(n) m with m ~ rho^1; quadrature
    # of m^4 against the slice density gives the independent value
    from scipy.integrate import quad

    n = 4
    dens = lambda m: math.exp(slice_log_measure(Domain.SPHERE, n, m))
    val, err = quad(lambda m: m**4 * dens(m), -1, 1, limit=200)
    want = n**2 * val
    assert err < 1e-7  # endpoint sqrt-kink limits the quad error estimate
    assert sphere_monomial_expectation(n, (4,)) == pytest.approx(want, rel=1e-7)


def test_sphere_mixed_moment_monte_carlo():
    n = 4
    rng = np.random.default_rng(8)
    x = rng.standard_normal((1_000_000, n))
    sig = math.sqrt(n) * x / np.linalg.norm(x, axis=1, keepdims=True)
    samples = sig[:, 0] ** 2 * sig[:, 1] ** 2
    mc = samples.mean()
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    val = sphere_monomial_expectation(n, (2, 2))
    assert abs(val - mc) <= 5.0 * se


def test_sphere_expectation_rejects_odd():
    with pytest.raises(ValueError):
        sphere_monomial_expectation(5, (1, 2))


# ---------------------------------------------------------------------------
# combinatorial moments


def test_moment_k1_pure3_vanishes(pure3):
    G = build_disorder(pure3, 4, 13)
    mom = moments_combinatorial(pure3, G, 1)
    assert mom[0] == 1.0
    assert mom[1] == 0.0  # no index triple has all-even multiplicities


def test_moment_k1_sk_diagonal(sk):
    n = 6
    G = build_disorder(sk, n, 21)
    mom = moments_combinatorial(sk, G, 1)
    want = sk.gamma(2) / math.sqrt(n) * G.as_ndarray(2).trace()
    assert mom[1] == pytest.approx(want, rel=1e-12)


def test_moments_collapsed_equals_literal_hypercube(sk, pure3):
    for spec, n, kmax in ((sk, 3, 4), (pure3, 2, 3)):
        G = build_disorder(spec, n, 5)
        lit = moments_combinatorial(spec, G, kmax, method="literal")
        col = moments_combinatorial(spec, G, kmax, method="collapsed")
        assert np.abs(lit - col).max() <= 1e-9 * max(1.0, np.abs(lit).max())


def test_moments_collapsed_equals_literal_sphere(sk_sphere):
    G = build_disorder(sk_sphere, 3, 5)
    lit = moments_combinatorial(sk_sphere, G, 3, method="literal")
    col = moments_combinatorial(sk_sphere, G, 3, method="collapsed")
    assert np.abs(lit - col).max() <= 1e-9 * max(1.0, np.abs(lit).max())


def test_moments_match_sweep(sk, pure3):
    from spininterp.exact import exact_moments_hypercube

    for spec in (sk, pure3):
        G = build_disorder(spec, 8, 2)
        kmax = 8
        sweep = exact_moments_hypercube(spec, G, kmax)
        comb = moments_combinatorial(spec, G, kmax)
        for k in range(kmax + 1):
            tol = 1e-9 * max(abs(sweep[k]), abs(comb[k]), 1.0)
            assert abs(sweep[k] - comb[k]) <= tol, k


def test_sphere_k2_against_term_oracle(sk_sphere):
    # E[H^2] = (g2^2/n) sum_{ijkl} G_ij G_kl E[s_i s_j s_k s_l]
    n = 5
    G = build_disorder(sk_sphere, n, 31)
    M = G.as_ndarray(2)
    g2 = sk_sphere.gamma(2)
    e4 = sphere_monomial_expectation(n, (4,))
    e22 = sphere_monomial_expectation(n, (2, 2))
    want = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    ex = [0] * n
                    for idx in (i, j, k, l):
                        ex[idx] += 1
                    if any(e % 2 for e in ex):
                        continue
                    pattern = tuple(sorted(e for e in ex if e))
                    if pattern == (4,):
                        val = e4
                    elif pattern == (2, 2):
                        val = e22
                    else:
                        raise AssertionError(pattern)
                    want += M[i, j] * M[k, l] * val
    want *= g2**2 / n
    mom = moments_combinatorial(sk_sphere, G, 2)
    assert mom[2] == pytest.approx(want, rel=1e-11)


def test_even_moments_nonnegative(mixed23):
    G = build_disorder(mixed23, 5, 17)
    mom = moments_combinatorial(mixed23, G, 6)
    assert all(mom[k] >= 0.0 for k in range(0, 7, 2))


def test_work_budget_refusal(sk):
    G = build_disorder(sk, 10, 1)
    with pytest.raises(WorkBudgetError, match="operations"):
        moments_combinatorial(sk, G, 10, method="literal")
    with pytest.raises(WorkBudgetError):
        moments_combinatorial(sk, G, 10, budget=10.0)
