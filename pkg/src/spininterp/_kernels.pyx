# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Gray-code Hamiltonian sweep, compensated
reductions, and double-double series recurrences.

Same API as spininterp._kernels_py; selected at import by
spininterp.backend.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, sin

cnp.import_array()

NAME = "compiled"


cdef inline double _order_value(double* flat, double* sig, int n, int p) nogil:
    """Full contraction sum_alpha G_alpha sigma^alpha for one configuration."""
    cdef long total = 1
    cdef int j
    for j in range(p):
        total *= n
    cdef double acc = 0.0
    cdef double prod
    cdef long idx, rem
    for idx in range(total):
        rem = idx
        prod = 1.0
        for j in range(p):
            prod *= sig[rem % n]
            rem //= n
        acc += flat[idx] * prod
    return acc


def htable(int n, terms):
    """H over all 2^n configurations in Gray-code enumeration order.

    Order-2 contributions are updated incrementally (O(n) per bit flip);
    higher orders are recomputed per configuration.
    """
    cdef long size = 1 << n
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(size)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sig = np.ones(n)
    cdef double coef2 = 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] G2
    cdef bint has2 = False
    higher = []
    for p, coef, flat in terms:
        if p == 2:
            has2 = True
            coef2 = coef
            G2 = np.ascontiguousarray(flat, dtype=np.float64)
        else:
            higher.append((int(p), float(coef), np.ascontiguousarray(flat, dtype=np.float64)))

    cdef double h2 = 0.0
    cdef double* g2 = NULL
    cdef int i, j
    if has2:
        g2 = <double*> G2.data
        for i in range(n):
            for j in range(n):
                h2 += g2[i * n + j]  # all-ones start configuration

    cdef long c, g, gprev, diff
    cdef int bit
    cdef double acc, si, dot
    cdef double* sp = <double*> sig.data
    cdef double* op = <double*> out.data
    cdef int hp
    cdef double hcoef
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hflat
    gprev = 0
    for c in range(size):
        g = c ^ (c >> 1)
        diff = g ^ gprev
        if diff:
            bit = 0
            while not (diff >> bit) & 1:
                bit += 1
            si = sp[bit]
            if has2:
                dot = 0.0
                for j in range(n):
                    dot += (g2[bit * n + j] + g2[j * n + bit]) * sp[j]
                dot -= 2.0 * g2[bit * n + bit] * si
                h2 -= 2.0 * si * dot
            sp[bit] = -si
            gprev = g
        acc = coef2 * h2 if has2 else 0.0
        for hp_entry in higher:
            hp = hp_entry[0]
            hcoef = hp_entry[1]
            hflat = hp_entry[2]
            acc += hcoef * _order_value(<double*> hflat.data, sp, n, hp)
        op[c] = acc
    return out


def z_and_dz(cnp.ndarray[cnp.float64_t, ndim=1] table, beta):
    """(E exp(beta H), E H exp(beta H)) via Kahan summation in table order."""
    cdef double br = beta.real
    cdef double bi = beta.imag
    cdef long size = table.shape[0]
    cdef double* h = <double*> table.data
    cdef double zr = 0.0, zr_c = 0.0, zi = 0.0, zi_c = 0.0
    cdef double dr = 0.0, dr_c = 0.0, di = 0.0, di_c = 0.0
    cdef double ex, ph, wr, wi, y, t
    cdef long k
    for k in range(size):
        ex = exp(br * h[k])
        ph = bi * h[k]
        wr = ex * cos(ph)
        wi = ex * sin(ph)
        y = wr - zr_c; t = zr + y; zr_c = (t - zr) - y; zr = t
        y = wi - zi_c; t = zi + y; zi_c = (t - zi) - y; zi = t
        y = h[k] * wr - dr_c; t = dr + y; dr_c = (t - dr) - y; dr = t
        y = h[k] * wi - di_c; t = di + y; di_c = (t - di) - y; di = t
    return complex(zr, zi) / size, complex(dr, di) / size


def scaled_moments(cnp.ndarray[cnp.float64_t, ndim=1] table, int k_max):
    """Moments of H/s for s = max|H|, via Kahan summation per power."""
    cdef long size = table.shape[0]
    cdef double* h = <double*> table.data
    cdef double s = 0.0
    cdef long i
    for i in range(size):
        if fabs(h[i]) > s:
            s = fabs(h[i])
    if s == 0.0:
        s = 1.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cur = np.empty(size)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t_out = np.empty(k_max + 1)
    cdef double* cp = <double*> cur.data
    cdef double acc, comp, y, tt
    cdef int k
    for i in range(size):
        cp[i] = 1.0
    t_out[0] = 1.0
    for k in range(1, k_max + 1):
        acc = 0.0
        comp = 0.0
        for i in range(size):
            cp[i] *= h[i] / s
            y = cp[i] - comp
            tt = acc + y
            comp = (tt - acc) - y
            acc = tt
        t_out[k] = acc / size
    return t_out, s


# ---------------------------------------------------------------------------
# Double-double scalar arithmetic

cdef double SPLITTER = 134217729.0

cdef inline void two_sum(double a, double b, double* s, double* e) nogil:
    cdef double ss = a + b
    cdef double bb = ss - a
    s[0] = ss
    e[0] = (a - (ss - bb)) + (b - bb)

cdef inline void quick_two_sum(double a, double b, double* s, double* e) nogil:
    cdef double ss = a + b
    s[0] = ss
    e[0] = b - (ss - a)

cdef inline void two_prod(double a, double b, double* p, double* e) nogil:
    cdef double pp = a * b
    cdef double ta = SPLITTER * a
    cdef double ahi = ta - (ta - a)
    cdef double alo = a - ahi
    cdef double tb = SPLITTER * b
    cdef double bhi = tb - (tb - b)
    cdef double blo = b - bhi
    p[0] = pp
    e[0] = ((ahi * bhi - pp) + ahi * blo + alo * bhi) + alo * blo

cdef inline void dd_add(double xh, double xl, double yh, double yl,
                        double* rh, double* rl) nogil:
    cdef double s, e
    two_sum(xh, yh, &s, &e)
    e = e + xl + yl
    quick_two_sum(s, e, rh, rl)

cdef inline void dd_mul(double xh, double xl, double yh, double yl,
                        double* rh, double* rl) nogil:
    cdef double p, e
    two_prod(xh, yh, &p, &e)
    e = e + xh * yl + xl * yh
    quick_two_sum(p, e, rh, rl)

cdef inline void dd_div_scalar(double xh, double xl, double d,
                               double* rh, double* rl) nogil:
    cdef double q1 = xh / d
    cdef double p, e, th, tl
    two_prod(q1, d, &p, &e)
    dd_add(xh, xl, -p, -e, &th, &tl)
    quick_two_sum(q1, (th + tl) / d, rh, rl)


def dd_log_coeffs(cnp.ndarray[cnp.complex128_t, ndim=1] a, a_low=None):
    """b_k = a_k - (1/k) sum_{j=1}^{k-1} j b_j a_{k-j}, double-double.
    Returns (hi, lo) arrays; a_low optionally carries input low parts."""
    cdef int m = a.shape[0] - 1
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] alow
    if a_low is None:
        alow = np.zeros(m + 1, dtype=np.complex128)
    else:
        alow = np.ascontiguousarray(a_low, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] brh = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] brl = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bih = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bil = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] hi = np.zeros(m + 1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] lo = np.zeros(m + 1, dtype=np.complex128)
    cdef int k, j
    cdef double sr_h, sr_l, si_h, si_l
    cdef double jbh_r, jbl_r, jbh_i, jbl_i
    cdef double t1h, t1l, t2h, t2l, ph, pl
    for k in range(1, m + 1):
        sr_h = sr_l = si_h = si_l = 0.0
        for j in range(1, k):
            # (j * b_j) as double-double
            two_prod(brh[j], <double> j, &jbh_r, &jbl_r)
            jbl_r += brl[j] * j
            two_prod(bih[j], <double> j, &jbh_i, &jbl_i)
            jbl_i += bil[j] * j
            # real part: jb_r * a_r - jb_i * a_i
            dd_mul(jbh_r, jbl_r, a[k - j].real, alow[k - j].real, &t1h, &t1l)
            dd_mul(jbh_i, jbl_i, a[k - j].imag, alow[k - j].imag, &t2h, &t2l)
            dd_add(t1h, t1l, -t2h, -t2l, &ph, &pl)
            dd_add(sr_h, sr_l, ph, pl, &sr_h, &sr_l)
            # imag part: jb_r * a_i + jb_i * a_r
            dd_mul(jbh_r, jbl_r, a[k - j].imag, alow[k - j].imag, &t1h, &t1l)
            dd_mul(jbh_i, jbl_i, a[k - j].real, alow[k - j].real, &t2h, &t2l)
            dd_add(t1h, t1l, t2h, t2l, &ph, &pl)
            dd_add(si_h, si_l, ph, pl, &si_h, &si_l)
        dd_div_scalar(sr_h, sr_l, <double> k, &sr_h, &sr_l)
        dd_div_scalar(si_h, si_l, <double> k, &si_h, &si_l)
        dd_add(a[k].real, alow[k].real, -sr_h, -sr_l, &jbh_r, &jbl_r)
        dd_add(a[k].imag, alow[k].imag, -si_h, -si_l, &jbh_i, &jbl_i)
        brh[k] = jbh_r
        brl[k] = jbl_r
        bih[k] = jbh_i
        bil[k] = jbl_i
        hi[k] = complex(jbh_r, jbh_i)
        lo[k] = complex(jbl_r, jbl_i)
    return hi, lo


def dd_exp_coeffs(cnp.ndarray[cnp.complex128_t, ndim=1] bser, b_low=None):
    """a_k = (1/k) sum_{j=0}^{k-1} a_j (k-j) b_{k-j}, double-double.
    Returns (hi, lo) arrays; b_low optionally carries input low parts."""
    cdef int m = bser.shape[0] - 1
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] blow
    if b_low is None:
        blow = np.zeros(m + 1, dtype=np.complex128)
    else:
        blow = np.ascontiguousarray(b_low, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arh = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arl = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aih = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ail = np.zeros(m + 1)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] hi = np.zeros(m + 1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] lo = np.zeros(m + 1, dtype=np.complex128)
    arh[0] = 1.0
    hi[0] = 1.0
    cdef int k, j, w
    cdef double sr_h, sr_l, si_h, si_l
    cdef double wbh_r, wbl_r, wbh_i, wbl_i
    cdef double t1h, t1l, t2h, t2l, ph, pl
    for k in range(1, m + 1):
        sr_h = sr_l = si_h = si_l = 0.0
        for j in range(k):
            w = k - j
            # (k-j) * b_{k-j} as double-double
            two_prod(bser[w].real, <double> w, &wbh_r, &wbl_r)
            wbl_r += blow[w].real * w
            two_prod(bser[w].imag, <double> w, &wbh_i, &wbl_i)
            wbl_i += blow[w].imag * w
            # real: a_r * wb_r - a_i * wb_i
            dd_mul(arh[j], arl[j], wbh_r, wbl_r, &t1h, &t1l)
            dd_mul(aih[j], ail[j], wbh_i, wbl_i, &t2h, &t2l)
            dd_add(t1h, t1l, -t2h, -t2l, &ph, &pl)
            dd_add(sr_h, sr_l, ph, pl, &sr_h, &sr_l)
            # imag: a_r * wb_i + a_i * wb_r
            dd_mul(arh[j], arl[j], wbh_i, wbl_i, &t1h, &t1l)
            dd_mul(aih[j], ail[j], wbh_r, wbl_r, &t2h, &t2l)
            dd_add(t1h, t1l, t2h, t2l, &ph, &pl)
            dd_add(si_h, si_l, ph, pl, &si_h, &si_l)
        dd_div_scalar(sr_h, sr_l, <double> k, &sr_h, &sr_l)
        dd_div_scalar(si_h, si_l, <double> k, &si_h, &si_l)
        arh[k] = sr_h
        arl[k] = sr_l
        aih[k] = si_h
        ail[k] = si_l
        hi[k] = complex(sr_h, si_h)
        lo[k] = complex(sr_l, si_l)
    return hi, lo
