"""Second-moment threshold, magnetization-slice measures, and exact
Curie-Weiss partition functions.

The threshold beta_2nd is the supremum of beta >= 0 for which

    phi(m) = beta^2 xi(m) + h(m)

is negative on [-1,1] away from 0 and concave at 0 (phi''(0) = 2 beta^2
gamma_2^2 - 1 < 0), with h the domain entropy.  Certification of the
negativity is numerical but rigorous up to floating-point rounding:
a Taylor bound handles a neighborhood of 0, an evaluation grid with
per-cell first/second-derivative envelopes covers the bulk, and monotone
comparisons handle the endpoints.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from spininterp.model import Domain, MixtureSpec

__all__ = [
    "EntropyProfile",
    "PhiProfile",
    "entropy_profile",
    "beta_2nd",
    "beta_rs_sphere",
    "slice_log_measure",
    "curie_weiss_Z",
    "verify_cw_bound",
    "CwBoundReport",
    "zero_count_bound",
    "SLACK_C0",
]

# Cap constant for the o_n(1) slack in the mixed Curie-Weiss bound,
# slack(n) <= SLACK_C0 / sqrt(n).  Calibrated once over the test mixture
# panel (SK and gamma_2 > 0 mixed specs, beta = 0.9 beta_2nd,
# n in {100, 400, 1600}; max observed sqrt(n) * slack = 0.244) and frozen.
SLACK_C0 = 0.5


@dataclass(frozen=True)
class EntropyProfile:
    """Magnetization entropy h with derivatives, for one spin domain.

    h(0) = 0, h is even, h''(0) = -1 for both domains.  ``d2_upper`` and
    ``d3_abs`` are monotone envelopes: on any cell [a, b] of constant sign,
    h'' <= d2_upper(min |m|) and |h'''| <= d3_abs(max |m|).
    """

    domain: Domain
    h: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3_abs: Callable[[float], float]
    edge_value: float  # limit of h at m -> 1 (-inf on the sphere)


def _h_cube(m):
    m = np.asarray(m, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(m) < 1.0, -0.5 * ((1 - m) * np.log1p(-m) + (1 + m) * np.log1p(m)), -math.log(2.0))
    return t if t.ndim else float(t)


def _h_cube_d1(m):
    m = np.asarray(m, dtype=np.float64)
    t = 0.5 * (np.log1p(-m) - np.log1p(m))
    return t if t.ndim else float(t)


def _h_cube_d2(m):
    m = np.asarray(m, dtype=np.float64)
    t = -1.0 / (1.0 - m * m)
    return t if t.ndim else float(t)


def _h_sphere(m):
    m = np.asarray(m, dtype=np.float64)
    t = 0.5 * np.log1p(-m * m)
    return t if t.ndim else float(t)


def _h_sphere_d1(m):
    m = np.asarray(m, dtype=np.float64)
    t = -m / (1.0 - m * m)
    return t if t.ndim else float(t)


def _h_sphere_d2(m):
    m = np.asarray(m, dtype=np.float64)
    t = -(1.0 + m * m) / (1.0 - m * m) ** 2
    return t if t.ndim else float(t)


_PROFILES = {
    Domain.HYPERCUBE: EntropyProfile(
        domain=Domain.HYPERCUBE,
        h=_h_cube,
        d1=_h_cube_d1,
        d2=_h_cube_d2,
        d3_abs=lambda a: 2.0 * a / (1.0 - a * a) ** 2,
        edge_value=-math.log(2.0),
    ),
    Domain.SPHERE: EntropyProfile(
        domain=Domain.SPHERE,
        h=_h_sphere,
        d1=_h_sphere_d1,
        d2=_h_sphere_d2,
        d3_abs=lambda a: 2.0 * a * (1.0 + 3.0 * a * a) / (1.0 - a * a) ** 3,
        edge_value=-math.inf,
    ),
}


def entropy_profile(domain: Domain | str) -> EntropyProfile:
    return _PROFILES[Domain.parse(domain)]


@dataclass(frozen=True)
class PhiProfile:
    """phi(m) = beta^2 xi(m) + h(m) for a fixed beta."""

    beta: float
    spec: MixtureSpec
    entropy: EntropyProfile = field(repr=False)

    @classmethod
    def build(cls, spec: MixtureSpec, beta: float) -> "PhiProfile":
        return cls(beta=float(beta), spec=spec, entropy=entropy_profile(spec.domain))

    def phi(self, m):
        return self.beta**2 * self.spec.xi(m) + self.entropy.h(m)

    def d1(self, m):
        return self.beta**2 * self.spec.xi_d1(m) + self.entropy.d1(m)

    def d2(self, m):
        return self.beta**2 * self.spec.xi_d2(m) + self.entropy.d2(m)

    @property
    def d2_at_zero(self) -> float:
        return 2.0 * self.beta**2 * self.spec.gamma(2) ** 2 - 1.0


GRID_CELLS = 1 << 15  # per side; ~2^16 evaluation points across [-1, 1]


def _certify_negative(prof: PhiProfile, cells: int = GRID_CELLS) -> bool:
    """True if phi(m) < 0 for all m in [-1,1] away from 0 is certified.

    Three regimes: a second-order Taylor bound on |m| <= m0, per-cell
    envelope bounds on [m0, m_edge], and a monotone tail bound on
    [m_edge, 1] (xi(m) <= xi(1) and h decreasing in |m|).
    """
    spec, ent, beta = prof.spec, prof.entropy, prof.beta
    dd0 = prof.d2_at_zero
    if not dd0 < 0.0:
        return False

    # near-zero Taylor: phi(m) <= dd0 m^2/2 + M3 |m|^3/6 < 0 for |m| <= m0
    m0 = 1e-3
    for _ in range(200):
        M3 = beta**2 * spec.xi_abs_d3(m0) + ent.d3_abs(m0)
        if M3 * m0 < 1.5 * abs(dd0):
            break
        m0 *= 0.5
    else:
        return False

    # edge: for |m| >= m_edge, phi(m) <= beta^2 xi(1) + h(m_edge)
    edge_cap = beta**2 * spec.xi(1.0)
    m_edge = None
    for j in range(8, 45):
        cand = 1.0 - 2.0**-j
        if edge_cap + ent.h(cand) < 0.0:
            m_edge = cand
            break
    if m_edge is None:
        return False
    if m_edge <= m0:
        return True

    # bulk grid, each sign handled separately (xi need not be even)
    grid = np.linspace(m0, m_edge, cells + 1)
    delta = grid[1] - grid[0]
    for sign in (1.0, -1.0):
        pts = sign * grid
        inner = grid[:-1]  # |m| at the cell end closer to 0
        outer = grid[1:]
        vals = prof.phi(pts[:-1])
        d1 = sign * prof.d1(pts[:-1])  # derivative along increasing |m|
        d2_ub = beta**2 * _xi_abs_d2_vec(spec, outer) + ent.d2(inner)
        bound = vals + np.maximum(0.0, d1) * delta + 0.5 * np.maximum(0.0, d2_ub) * delta**2
        if not np.all(bound < 0.0):
            return False
    return True


def _xi_abs_d2_vec(spec: MixtureSpec, a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    for p in spec.active_orders:
        out += spec.gamma(p) ** 2 * p * (p - 1) * np.abs(a) ** (p - 2)
    return out


def _satisfies_second_moment(spec: MixtureSpec, beta: float) -> bool:
    return _certify_negative(PhiProfile.build(spec, beta))


@functools.lru_cache(maxsize=256)
def _beta_2nd_cached(spec: MixtureSpec, tol: float) -> float:
    lo = 0.0
    g2 = spec.gamma(2)
    if g2 > 0:
        hi = 1.0 / (g2 * math.sqrt(2.0))
    else:
        hi = 1.0
        while _satisfies_second_moment(spec, hi):
            lo = hi
            hi *= 2.0
            if hi > 1e6:
                raise RuntimeError("no violation found below beta = 1e6")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _satisfies_second_moment(spec, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_2nd(spec: MixtureSpec, tol: float = 1e-7) -> float:
    """Second-moment threshold via bisection over certified beta."""
    if not 0.0 < tol <= 1e-3:
        raise ValueError("tol must be in (0, 1e-3]")
    return _beta_2nd_cached(spec, float(tol))


def beta_rs_sphere(spec: MixtureSpec, tol: float = 1e-7, cells: int = GRID_CELLS) -> float:
    """Replica-symmetric threshold diagnostic (spherical case):
    sup{beta : beta^2 xi(m) + m + log(1-m) < 0 on (0,1)}.

    Same grid-plus-envelope machinery as beta_2nd; diagnostic only.
    """
    if spec.domain is not Domain.SPHERE:
        raise ValueError("beta_rs is implemented for the spherical domain only")

    def ok(beta: float) -> bool:
        # psi(m) = m + log(1-m): psi(0) = 0, psi'(0) = 0, psi''(0) = -1
        dd0 = 2.0 * beta**2 * spec.gamma(2) ** 2 - 1.0
        if not dd0 < 0.0:
            return False
        m0 = 1e-3
        for _ in range(200):
            M3 = beta**2 * spec.xi_abs_d3(m0) + 2.0 / (1.0 - m0) ** 3
            if M3 * m0 < 1.5 * abs(dd0):
                break
            m0 *= 0.5
        else:
            return False
        m_edge = None
        cap = beta**2 * spec.xi(1.0)
        for j in range(8, 45):
            cand = 1.0 - 2.0**-j
            if cap + cand + math.log1p(-cand) < 0.0:
                m_edge = cand
                break
        if m_edge is None:
            return False
        if m_edge <= m0:
            return True
        grid = np.linspace(m0, m_edge, cells + 1)
        delta = grid[1] - grid[0]
        a, b = grid[:-1], grid[1:]
        vals = beta**2 * spec.xi(a) + a + np.log1p(-a)
        d1 = beta**2 * spec.xi_d1(a) + 1.0 - 1.0 / (1.0 - a)
        d2_ub = beta**2 * _xi_abs_d2_vec(spec, b) - 1.0 / (1.0 - a) ** 2
        bound = vals + np.maximum(0.0, d1) * delta + 0.5 * np.maximum(0.0, d2_ub) * delta**2
        return bool(np.all(bound < 0.0))

    lo, hi = 0.0, 1.0
    while ok(hi):
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("no violation found below beta = 1e6")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Slice measures and Curie-Weiss partition functions


def slice_log_measure(domain: Domain | str, n: int, m: float) -> float:
    """log of the magnetization-slice measure rho^1(m).

    Hypercube: log of 2^-n binom(n, (1+m)n/2); m must be a lattice point.
    Sphere: log density of the first coordinate of a uniform point on
    |sigma|^2 = n, rescaled to m in (-1, 1).  Both via log-Gamma.
    """
    domain = Domain.parse(domain)
    if domain is Domain.HYPERCUBE:
        k = (1.0 + m) * n / 2.0
        k_int = round(k)
        if abs(k - k_int) > 1e-9 or not 0 <= k_int <= n:
            raise ValueError(f"m = {m} is not a magnetization value for n = {n}")
        return (
            math.lgamma(n + 1)
            - math.lgamma(k_int + 1)
            - math.lgamma(n - k_int + 1)
            - n * math.log(2.0)
        )
    if not -1.0 < m < 1.0:
        raise ValueError(f"sphere slice density requires |m| < 1, got {m}")
    return (
        -0.5 * math.log(math.pi)
        + math.lgamma(n / 2.0)
        - math.lgamma((n - 1) / 2.0)
        + 0.5 * (n - 3) * math.log1p(-m * m)
    )


def _sphere_log_panel(spec: MixtureSpec, n: int, b: float, lo: float, hi: float, order: int) -> float:
    """log integral of rho^1(m) exp(b n xi(m)) over [lo, hi], Gauss-Legendre."""
    x, w = leggauss(order)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    pts = mid + half * x
    logs = np.array([slice_log_measure(Domain.SPHERE, n, float(m)) for m in pts])
    logs = logs + b * n * np.asarray(spec.xi(pts), dtype=np.float64)
    return float(logsumexp(logs + np.log(w * half)))


def curie_weiss_Z(spec: MixtureSpec, n: int, b: float) -> float:
    """log Z_CW(b) = log E_sigma exp(b n xi(<sigma,1>/n)), computed in log
    space (slice sum on the hypercube, adaptive panel quadrature on the
    sphere)."""
    if b < 0:
        raise ValueError("b must be >= 0")
    if spec.domain is Domain.HYPERCUBE:
        j = np.arange(n + 1)
        m = (2.0 * j - n) / n
        logs = np.array([slice_log_measure(Domain.HYPERCUBE, n, float(mm)) for mm in m])
        logs = logs + b * n * np.asarray(spec.xi(m), dtype=np.float64)
        return float(logsumexp(logs))

    if n < 3:
        raise ValueError("sphere Curie-Weiss requires n >= 3")
    # adaptive panel bisection: accept when the 16- and 32-node
    # Gauss-Legendre values agree to 1e-12 in log space, or when the panel
    # is negligible against the global peak (its weight is below e^-60 of
    # the peak, far under the 1e-10 target)
    probe = np.linspace(-1.0 + 1e-12, 1.0 - 1e-12, 4001)
    log_f = np.array([slice_log_measure(Domain.SPHERE, n, float(m)) for m in probe])
    log_f = log_f + b * n * np.asarray(spec.xi(probe), dtype=np.float64)
    log_peak = float(log_f.max())  # density is bounded for n >= 3

    eps = 1.0 / (4.0 * n)
    knots = np.concatenate(
        [
            [-1.0 + 1e-15],
            np.linspace(-1.0 + eps, 1.0 - eps, 9),
            [1.0 - 1e-15],
        ]
    )
    stack = [(float(a), float(bb), 0) for a, bb in zip(knots[:-1], knots[1:])]
    pieces = []
    while stack:
        lo, hi, depth = stack.pop()
        coarse = _sphere_log_panel(spec, n, b, lo, hi, 16)
        fine = _sphere_log_panel(spec, n, b, lo, hi, 32)
        negligible = fine < log_peak - 60.0
        if abs(fine - coarse) < 1e-12 or negligible or depth >= 48 or hi - lo < 1e-14:
            pieces.append(fine)
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return float(logsumexp(np.array(pieces)))


def rs_form_bound(spec: MixtureSpec, beta: float) -> float:
    """(1/2) log(1 / (1 - 2 beta^2 gamma_2^2)), the n-free comparison value."""
    x = 2.0 * beta**2 * spec.gamma(2) ** 2
    if x >= 1.0:
        raise ValueError("comparison bound requires 2 beta^2 gamma_2^2 < 1")
    return -0.5 * math.log1p(-x)


@dataclass(frozen=True)
class CwBoundRow:
    n: int
    beta: float
    log_zcw: float
    rs_bound: float
    slack: float
    cap: float
    bound_ok: bool


@dataclass(frozen=True)
class CwBoundReport:
    rows: tuple[CwBoundRow, ...]
    monotone_ok: bool
    c0: float

    @property
    def all_bound_ok(self) -> bool:
        return all(r.bound_ok for r in self.rows)

    def slacks(self, beta: float) -> dict[int, float]:
        return {r.n: r.slack for r in self.rows if r.beta == beta}


def verify_cw_bound(
    spec: MixtureSpec,
    n_list,
    beta_grid,
    c0: float = SLACK_C0,
) -> CwBoundReport:
    """Check log Z_CW(beta^2) <= rs_form_bound + c0/sqrt(n) over the grid,
    and monotonicity of b -> log Z_CW(b).  Failures are reported, not
    raised."""
    b2 = beta_2nd(spec, 1e-6)
    betas = sorted(float(b) for b in beta_grid)
    if betas and betas[-1] >= b2:
        raise ValueError(f"beta grid must stay below beta_2nd = {b2:.6f}")
    rows = []
    monotone_ok = True
    for n in n_list:
        prev = -math.inf
        for beta in betas:
            lz = curie_weiss_Z(spec, int(n), beta**2)
            if lz < prev - 1e-12:
                monotone_ok = False
            prev = lz
            rb = rs_form_bound(spec, beta)
            slack = lz - rb
            cap = c0 / math.sqrt(n)
            rows.append(
                CwBoundRow(
                    n=int(n),
                    beta=beta,
                    log_zcw=lz,
                    rs_bound=rb,
                    slack=slack,
                    cap=cap,
                    bound_ok=slack <= cap,
                )
            )
    return CwBoundReport(rows=tuple(rows), monotone_ok=monotone_ok, c0=c0)


def zero_count_bound(spec: MixtureSpec, n: int, r: float, R: float) -> float:
    """Expected-count bound (1/2) log Z_CW(R^2) / log(R/r) for zeros in the
    disk of radius r, from the boundary circle of radius R < beta_2nd."""
    if not 0.0 < r < R:
        raise ValueError("need 0 < r < R")
    if R >= beta_2nd(spec, 1e-6):
        raise ValueError("R must be below beta_2nd")
    return 0.5 * curie_weiss_Z(spec, n, R * R) / math.log(R / r)
