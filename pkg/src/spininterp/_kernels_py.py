"""Pure-numpy implementations of the hot kernels.

Mirrors the API of the compiled module ``spininterp._kernels``; one of the
two is selected at import time by :mod:`spininterp.backend`.

Kernels:
  * ``htable``          -- Hamiltonian values over all 2^n sign vectors,
                           enumerated in Gray-code order (index c visits the
                           configuration with sign bits c XOR (c >> 1)).
  * ``z_and_dz``        -- compensated mean of exp(beta*H) and H*exp(beta*H).
  * ``scaled_moments``  -- compensated mean of (H/s)^k for k = 0..k_max.
  * ``dd_log_coeffs`` / ``dd_exp_coeffs`` -- double-double triangular
                           recurrences converting between a power series with
                           unit constant term and its logarithm.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"

# ---------------------------------------------------------------------------
# Gray-code sign enumeration


def gray_signs(n: int, start: int, stop: int) -> np.ndarray:
    """Sign matrix (stop-start, n): row c-start holds the configuration with
    sign pattern g = c ^ (c >> 1); bit i set means sigma_i = -1."""
    c = np.arange(start, stop, dtype=np.uint64)
    g = c ^ (c >> np.uint64(1))
    bits = (g[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)
    return 1.0 - 2.0 * bits.astype(np.float64)


def _order_contract(S: np.ndarray, flat: np.ndarray, n: int, p: int) -> np.ndarray:
    """sum_{i_1..i_p} G_{i_1..i_p} sigma_{i_1}..sigma_{i_p} for each row of S."""
    cur = S @ flat.reshape(n, -1)  # (B, n^{p-1})
    for _ in range(p - 1):
        cur = cur.reshape(S.shape[0], n, -1)
        cur = np.einsum("bi,bij->bj", S, cur)
    return cur[:, 0]


def htable(n: int, terms: list[tuple[int, float, np.ndarray]]) -> np.ndarray:
    """H over all 2^n configurations in Gray-code enumeration order.

    ``terms`` lists (p, coefficient, flat coupling array); the contribution of
    each order is coefficient * sum_alpha G_alpha sigma^alpha.
    """
    size = 1 << n
    out = np.zeros(size)
    # Block size keeps the (B, n^{p-1}) intermediate under ~64 MB.
    widest = max((n ** (p - 1) for p, _, _ in terms), default=1)
    block = max(1, min(size, (64 << 20) // (8 * widest), 1 << 14))
    for start in range(0, size, block):
        stop = min(size, start + block)
        S = gray_signs(n, start, stop)
        acc = np.zeros(stop - start)
        for p, coef, flat in terms:
            acc += coef * _order_contract(S, flat, n, p)
        out[start:stop] = acc
    return out


# ---------------------------------------------------------------------------
# Compensated reductions over the table


def _fsum_mean(values: np.ndarray) -> float:
    return math.fsum(values) / values.size


def z_and_dz(table: np.ndarray, beta: complex) -> tuple[complex, complex]:
    """(E exp(beta H), E H exp(beta H)) with exact compensated summation."""
    w = np.exp(beta * table)
    if np.iscomplexobj(w):
        z = complex(math.fsum(w.real), math.fsum(w.imag)) / table.size
        hw = table * w
        dz = complex(math.fsum(hw.real), math.fsum(hw.imag)) / table.size
    else:
        z = complex(_fsum_mean(w))
        dz = complex(_fsum_mean(table * w))
    return z, dz


def scaled_moments(table: np.ndarray, k_max: int) -> tuple[np.ndarray, float]:
    """Moments of H/s for s = max|H| (s = 1 when H is identically 0).

    Returns (t, s) with t[k] = E[(H/s)^k]; rescaling keeps every power in
    the unit interval so no k overflows.
    """
    s = float(np.abs(table).max()) if table.size else 1.0
    if s == 0.0:
        s = 1.0
    x = table / s
    t = np.empty(k_max + 1)
    t[0] = 1.0
    cur = np.ones_like(x)
    for k in range(1, k_max + 1):
        cur = cur * x
        t[k] = _fsum_mean(cur)
    return t, s


# ---------------------------------------------------------------------------
# Double-double arithmetic (vectorized error-free transformations)

_SPLITTER = 134217729.0  # 2^27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    e = e + xl + yl
    return _quick_two_sum(s, e)


def _dd_mul(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    e = e + xh * yl + xl * yh
    return _quick_two_sum(p, e)


def _dd_div_scalar(xh, xl, d: float):
    q1 = xh / d
    p, e = _two_prod(q1, d)
    rh, rl = _dd_add(xh, xl, -p, -e)
    q2 = (rh + rl) / d
    return _quick_two_sum(q1, q2)


def _cdd_mul(ar_h, ar_l, ai_h, ai_l, br_h, br_l, bi_h, bi_l):
    pr_h, pr_l = _dd_mul(ar_h, ar_l, br_h, br_l)
    qr_h, qr_l = _dd_mul(ai_h, ai_l, bi_h, bi_l)
    re_h, re_l = _dd_add(pr_h, pr_l, -qr_h, -qr_l)
    pi_h, pi_l = _dd_mul(ar_h, ar_l, bi_h, bi_l)
    qi_h, qi_l = _dd_mul(ai_h, ai_l, br_h, br_l)
    im_h, im_l = _dd_add(pi_h, pi_l, qi_h, qi_l)
    return re_h, re_l, im_h, im_l


def _dd_sum(h, l):
    """Tree reduction of a double-double vector; returns a scalar pair."""
    while h.size > 1:
        if h.size & 1:
            h = np.append(h, 0.0)
            l = np.append(l, 0.0)
        h, l = _dd_add(h[0::2], l[0::2], h[1::2], l[1::2])
    return float(h[0]), float(l[0])


def dd_log_coeffs(a: np.ndarray, a_low: np.ndarray | None = None):
    """log of a power series with a[0] = 1, in double-double arithmetic:
    b_k = a_k - (1/k) sum_{j=1}^{k-1} j b_j a_{k-j}.

    Returns (hi, lo) complex arrays whose sum is the double-double value;
    ``a_low`` optionally supplies the input's low components.
    """
    m = a.size - 1
    alr = a_low.real if a_low is not None else np.zeros(m + 1)
    ali = a_low.imag if a_low is not None else np.zeros(m + 1)
    hi = np.zeros(m + 1, dtype=np.complex128)
    lo = np.zeros(m + 1, dtype=np.complex128)
    brh = np.zeros(m + 1)
    brl = np.zeros(m + 1)
    bih = np.zeros(m + 1)
    bil = np.zeros(m + 1)
    jw = np.arange(m + 1, dtype=np.float64)
    for k in range(1, m + 1):
        if k > 1:
            j = slice(1, k)
            rev = slice(k - 1, 0, -1)
            arh = a[rev].real.copy()
            aih = a[rev].imag.copy()
            arl_ = alr[rev].copy()
            ail_ = ali[rev].copy()
            # j * b_j in double-double (two_prod catches the product error)
            jbh_r, jbl_r = _two_prod(brh[j], jw[j])
            jbl_r = jbl_r + brl[j] * jw[j]
            jbh_i, jbl_i = _two_prod(bih[j], jw[j])
            jbl_i = jbl_i + bil[j] * jw[j]
            re_h, re_l, im_h, im_l = _cdd_mul(
                jbh_r, jbl_r, jbh_i, jbl_i, arh, arl_, aih, ail_
            )
            sr_h, sr_l = _dd_sum(re_h, re_l)
            si_h, si_l = _dd_sum(im_h, im_l)
        else:
            sr_h = sr_l = si_h = si_l = 0.0
        sr_h, sr_l = _dd_div_scalar(sr_h, sr_l, float(k))
        si_h, si_l = _dd_div_scalar(si_h, si_l, float(k))
        rh, rl = _dd_add(a[k].real, alr[k], -sr_h, -sr_l)
        ih, il = _dd_add(a[k].imag, ali[k], -si_h, -si_l)
        brh[k], brl[k], bih[k], bil[k] = rh, rl, ih, il
        hi[k] = complex(rh, ih)
        lo[k] = complex(rl, il)
    return hi, lo


def dd_exp_coeffs(b: np.ndarray, b_low: np.ndarray | None = None):
    """exp of a power series with b[0] = 0, in double-double arithmetic:
    a_k = (1/k) sum_{j=0}^{k-1} a_j (k-j) b_{k-j}.  Returns (hi, lo)."""
    m = b.size - 1
    blr = b_low.real if b_low is not None else np.zeros(m + 1)
    bli = b_low.imag if b_low is not None else np.zeros(m + 1)
    hi = np.zeros(m + 1, dtype=np.complex128)
    lo = np.zeros(m + 1, dtype=np.complex128)
    hi[0] = 1.0
    arh = np.zeros(m + 1)
    arl = np.zeros(m + 1)
    aih = np.zeros(m + 1)
    ail = np.zeros(m + 1)
    arh[0] = 1.0
    kw = np.arange(m + 1, dtype=np.float64)
    for k in range(1, m + 1):
        j = slice(0, k)
        rev = slice(k, 0, -1)
        w = kw[rev]  # k-j for j = 0..k-1
        # (k-j) * b_{k-j} in double-double
        wbh_r, wbl_r = _two_prod(b[rev].real.copy(), w)
        wbl_r = wbl_r + blr[rev] * w
        wbh_i, wbl_i = _two_prod(b[rev].imag.copy(), w)
        wbl_i = wbl_i + bli[rev] * w
        re_h, re_l, im_h, im_l = _cdd_mul(
            arh[j], arl[j], aih[j], ail[j], wbh_r, wbl_r, wbh_i, wbl_i
        )
        sr_h, sr_l = _dd_sum(re_h, re_l)
        si_h, si_l = _dd_sum(im_h, im_l)
        sr_h, sr_l = _dd_div_scalar(sr_h, sr_l, float(k))
        si_h, si_l = _dd_div_scalar(si_h, si_l, float(k))
        arh[k], arl[k], aih[k], ail[k] = sr_h, sr_l, si_h, si_l
        hi[k] = complex(sr_h, si_h)
        lo[k] = complex(sr_l, si_l)
    return hi, lo
