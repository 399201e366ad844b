"""Interpolating-curve construction and tube-geometry certification.

Each curve is a composition ell_k = mu_k . S_gamma:

  * S_gamma(z) = -gamma log(1 - alpha(gamma) z), alpha(gamma) = 1 - e^{-1/gamma},
    maps the disk of radius r_hat(gamma) > 1 into a thin neighborhood of
    [0, 1] (real part in [-gamma, 1+gamma], imaginary part within
    pi*gamma/2) with S_gamma(0) = 0, S_gamma(1) = 1.
  * mu_k(z) = beta* w z / (1 - z + w z), w = exp(i pi k / (2(N+1))), is the
    Moebius arc from 0 to beta* leaving the origin at angle pi k / (2(N+1)).

The certification checks the neighborhood geometry numerically at a fixed
sampling density: strip membership in the convex region U_a, pairwise tube
disjointness away from the shared endpoints, containment in the working
disk, and inversion invariance of the transformed region V_a.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from spininterp.series import ComplexSeries, series_compose, series_divide

__all__ = [
    "barvinok_map_coeffs",
    "r_hat",
    "s_gamma",
    "s_gamma_inverse",
    "MobiusArc",
    "mobius_arc",
    "CurveFamily",
    "build_curve_family",
    "TubeRegion",
    "certify_tubes",
    "TubeReport",
]


def r_hat(gamma: float) -> float:
    """(1 - exp(-1 - 1/gamma)) / (1 - exp(-1/gamma)); always > 1."""
    e = math.exp(-1.0 / gamma)
    return (1.0 - e / math.e) / (1.0 - e)


def alpha_of(gamma: float) -> float:
    return -math.expm1(-1.0 / gamma)


def barvinok_map_coeffs(gamma: float, m: int) -> ComplexSeries:
    """Taylor coefficients of S_gamma: zero constant term, then
    gamma * alpha^k / k."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    a = alpha_of(gamma)
    k = np.arange(1, m + 1, dtype=np.float64)
    c = np.zeros(m + 1, dtype=np.complex128)
    c[1:] = gamma * a**k / k
    return ComplexSeries(c)


def s_gamma(gamma: float, z: complex) -> complex:
    """Closed-form S_gamma(z); z = 1 maps to exactly 1."""
    if z == 1.0:
        return 1.0 + 0.0j
    u = (1.0 - z) + z * math.exp(-1.0 / gamma)
    return -gamma * cmath.log(u)


def s_gamma_batch(gamma: float, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    u = (1.0 - z) + z * math.exp(-1.0 / gamma)
    out = -gamma * np.log(u)
    out[z == 1.0] = 1.0
    return out


def s_gamma_inverse(gamma: float, s: complex) -> complex:
    """Inverse map: z = (1 - exp(-s/gamma)) / alpha(gamma)."""
    try:
        e = cmath.exp(-s / gamma)
    except OverflowError:
        return complex(math.inf, 0.0)
    return (1.0 - e) / alpha_of(gamma)


@dataclass(frozen=True)
class MobiusArc:
    """mu_k with exact evaluation, derivative, inverse, and Taylor series."""

    beta_star: float
    N: int
    k: int

    def __post_init__(self):
        if not -(self.N + 1) <= self.k <= self.N + 1:
            raise ValueError(f"k = {self.k} outside -(N+1)..N+1 for N = {self.N}")

    @property
    def w(self) -> complex:
        return cmath.exp(1j * math.pi * self.k / (2.0 * (self.N + 1)))

    def __call__(self, z: complex) -> complex:
        w = self.w
        return self.beta_star * w * z / (1.0 - z + w * z)

    def deriv(self, z: complex) -> complex:
        w = self.w
        return self.beta_star * w / (1.0 - z + w * z) ** 2

    def inverse(self, y: complex) -> complex:
        w = self.w
        return y / (self.beta_star * w + y * (1.0 - w))

    def series(self, m: int) -> ComplexSeries:
        """Taylor coefficients at 0 by truncated series division of
        (beta* w z) by (1 + (w-1) z)."""
        num = np.zeros(m + 1, dtype=np.complex128)
        den = np.zeros(m + 1, dtype=np.complex128)
        if m >= 1:
            num[1] = self.beta_star * self.w
        den[0] = 1.0
        if m >= 1:
            den[1] = self.w - 1.0
        return series_divide(ComplexSeries(num), ComplexSeries(den))


def mobius_arc(beta_star: float, N: int, k: int) -> MobiusArc:
    return MobiusArc(beta_star=float(beta_star), N=int(N), k=int(k))


@dataclass(frozen=True)
class CurveFamily:
    """The 2N+1 interpolating curves for one target beta*, as truncated
    series plus exact evaluators, with the tube geometry parameters."""

    beta_star: float
    N: int
    gamma: float
    a: float
    eps_hat: float
    epsilon: float
    beta_2nd: float
    m: int
    arcs: tuple[MobiusArc, ...] = field(repr=False)
    curve_series: tuple[ComplexSeries, ...] = field(repr=False)

    @property
    def r_hat(self) -> float:
        return r_hat(self.gamma)

    @property
    def ks(self) -> tuple[int, ...]:
        return tuple(range(-self.N, self.N + 1))

    def arc(self, k: int) -> MobiusArc:
        return self.arcs[k + self.N]

    def series_for(self, k: int) -> ComplexSeries:
        return self.curve_series[k + self.N]

    def curve_exact(self, k: int, z: complex) -> complex:
        """Closed-form ell_k(z) = mu_k(S_gamma(z))."""
        return self.arc(k)(s_gamma(self.gamma, z))

    def in_tube(self, k: int, y: complex) -> bool:
        """Exact membership y in ell_k(D(0, r_hat)) via the closed-form
        inverses."""
        pre = s_gamma_inverse(self.gamma, self.arc(k).inverse(y))
        return bool(np.isfinite(pre) and abs(pre) < self.r_hat * (1.0 - 1e-12))

    def in_tube_batch(self, k: int, ys: np.ndarray) -> np.ndarray:
        arc = self.arc(k)
        w = arc.w
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            pre_mu = ys / (arc.beta_star * w + ys * (1.0 - w))
            pre = (1.0 - np.exp(-pre_mu / self.gamma)) / alpha_of(self.gamma)
        return np.isfinite(pre) & (np.abs(pre) < self.r_hat * (1.0 - 1e-12))

    def boundary_samples(self, k: int, samples: int) -> np.ndarray:
        theta = (np.arange(samples) + 0.5) * (2.0 * math.pi / samples)
        rim = self.r_hat * np.exp(1j * theta)
        arc = self.arc(k)
        w = arc.w
        s = s_gamma_batch(self.gamma, rim)
        return arc.beta_star * w * s / (1.0 - s + w * s)


def build_curve_family(
    beta_star: float,
    epsilon: float,
    delta: float,
    kappa: float,
    N: int,
    m: int,
    beta_2nd: float,
    gamma: float | None = None,
) -> CurveFamily:
    """Assemble the 2N+1 curves with the tube-width schedule
    eps_hat = min(eps beta_2nd / (4N), kappa beta_2nd, 2 pi/(3(N+1)));
    gamma = eps_hat^2/64 and a = 4 gamma unless gamma is overridden
    (the relation a = 4 gamma is kept either way)."""
    if not 0.0 <= beta_star < (1.0 - 2.0 * epsilon) * beta_2nd:
        raise ValueError(
            f"beta_star = {beta_star} outside [0, (1-2 eps) beta_2nd) "
            f"= [0, {(1 - 2 * epsilon) * beta_2nd:.6f})"
        )
    if N < 1:
        raise ValueError("need N >= 1")
    eps_hat = min(
        epsilon * beta_2nd / (4.0 * N),
        kappa * beta_2nd,
        2.0 * math.pi / (3.0 * (N + 1)) - 1e-12,
    )
    if gamma is None:
        gamma = eps_hat**2 / 64.0
    a = 4.0 * gamma
    arcs = tuple(mobius_arc(beta_star, N, k) for k in range(-N, N + 1))
    s_series = barvinok_map_coeffs(gamma, m)
    curve_series = tuple(series_compose(arc.series(m), s_series) for arc in arcs)
    return CurveFamily(
        beta_star=float(beta_star),
        N=int(N),
        gamma=float(gamma),
        a=float(a),
        eps_hat=float(eps_hat),
        epsilon=float(epsilon),
        beta_2nd=float(beta_2nd),
        m=int(m),
        arcs=arcs,
        curve_series=curve_series,
    )


# ---------------------------------------------------------------------------
# Tube geometry


@dataclass(frozen=True)
class TubeRegion:
    """U_a: convex hull of two disks bracketing [0, 1]."""

    a: float

    @property
    def c1(self) -> float:
        return -self.a**2 / (1.0 - self.a**2)

    @property
    def c2(self) -> float:
        return 1.0 / (1.0 - self.a**2)

    @property
    def rad(self) -> float:
        return self.a / (1.0 - self.a**2)

    def distance(self, z: complex) -> float:
        """Euclidean distance to U_a (0 inside)."""
        d1 = abs(z - self.c1) - self.rad
        d2 = abs(z - self.c2) - self.rad
        # rectangle T(a): re in [c1, c2], |im| <= rad
        dx = max(self.c1 - z.real, z.real - self.c2, 0.0)
        dy = max(abs(z.imag) - self.rad, 0.0)
        dt = math.hypot(dx, dy)
        return max(0.0, min(d1, d2, dt))

    def distance_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        d1 = np.abs(z - self.c1) - self.rad
        d2 = np.abs(z - self.c2) - self.rad
        dx = np.maximum(np.maximum(self.c1 - z.real, z.real - self.c2), 0.0)
        dy = np.maximum(np.abs(z.imag) - self.rad, 0.0)
        dt = np.hypot(dx, dy)
        return np.maximum(0.0, np.minimum(np.minimum(d1, d2), dt))

    def contains(self, z: complex, slack: float = 1e-12) -> bool:
        return self.distance(z) <= slack


def _mobius_phi(z: complex) -> complex:
    return z / (1.0 - z)


def _mobius_phi_inv(z: complex) -> complex:
    return z / (1.0 + z)


def _ua_boundary(a: float, samples: int) -> np.ndarray:
    """Points on the boundary of U_a: the two outer half-circles plus the
    top and bottom rectangle edges."""
    reg = TubeRegion(a)
    quarter = samples // 4
    out = []
    th = np.linspace(0.5 * math.pi, 1.5 * math.pi, quarter)
    out.append(reg.c1 + reg.rad * np.exp(1j * th))  # left cap
    th = np.linspace(-0.5 * math.pi, 0.5 * math.pi, quarter)
    out.append(reg.c2 + reg.rad * np.exp(1j * th))  # right cap
    xs = np.linspace(reg.c1, reg.c2, quarter)
    out.append(xs + 1j * reg.rad)
    out.append(xs - 1j * reg.rad)
    return np.concatenate(out)


@dataclass(frozen=True)
class TubeReport:
    strip_ok: bool
    pairwise_ok: bool
    containment_ok: bool
    inversion_ok: bool
    witnesses: dict

    @property
    def all_ok(self) -> bool:
        return self.strip_ok and self.pairwise_ok and self.containment_ok and self.inversion_ok


def certify_tubes(family: CurveFamily, samples: int = 4096) -> TubeReport:
    """Sampling-based validation of the tube geometry.

    Refuses (ValueError) outside the disjointness hypothesis
    N+1 <= 2 pi / (6 sqrt a), a <= 0.5.  Violations found by sampling are
    reported with witness points, not raised.

    The pairwise and containment checks run on the sleeve covers mu_k(U_a)
    (which contain the curve images ell_k(D(0, r_hat)) whenever the strip
    check passes): their boundaries parameterize the whole sleeve uniformly
    even when gamma is tiny and the z-disk boundary image degenerates
    numerically to a neighborhood of the endpoints.
    """
    a = family.a
    if a > 0.5 or family.N + 1 > 2.0 * math.pi / (6.0 * math.sqrt(a)):
        raise ValueError(
            f"outside the disjointness hypothesis: need N+1 <= 2 pi/(6 sqrt a) "
            f"and a <= 0.5 (N = {family.N}, a = {a:.3g})"
        )
    gamma = family.gamma
    rh = family.r_hat
    region = TubeRegion(a)
    witnesses: dict[str, list] = {"strip": [], "pairwise": [], "containment": [], "inversion": []}

    # (i) S_gamma(boundary of D(0, r_hat)) inside U_a; the image of the open
    # disk then lies in U_a too (S_gamma is injective and U_a is convex).
    theta = (np.arange(samples) + 0.5) * (2.0 * math.pi / samples)
    rim = rh * np.exp(1j * theta)
    for z, s in zip(rim, s_gamma_batch(gamma, rim)):
        if not region.contains(complex(s), slack=1e-12):
            witnesses["strip"].append((complex(z), complex(s)))

    # sleeve boundaries mu_k(boundary of U_a)
    ua_rim = _ua_boundary(a, samples)
    sleeves = {}
    for k in family.ks:
        arc = family.arc(k)
        w = arc.w
        sleeves[k] = family.beta_star * w * ua_rim / (1.0 - ua_rim + w * ua_rim)

    # (ii) pairwise sleeve intersections confined to the endpoint disks:
    # boundary samples of sleeve j outside D(0, 4 sqrt a) and
    # D(beta*, 4 sqrt a) must not fall inside sleeve k (exact membership
    # through the closed-form Moebius inverse)
    rad_excl = 4.0 * math.sqrt(a)
    for j in family.ks:
        pts = sleeves[j]
        keep = (np.abs(pts) > rad_excl) & (np.abs(pts - family.beta_star) > rad_excl)
        pts = pts[keep]
        if pts.size == 0:
            continue
        for k in family.ks:
            if k == j:
                continue
            arc = family.arc(k)
            w = arc.w
            with np.errstate(invalid="ignore", divide="ignore"):
                pre = pts / (family.beta_star * w + pts * (1.0 - w))
            inside = np.isfinite(pre) & (region.distance_batch(pre) <= 0.0)
            for y in pts[inside]:
                witnesses["pairwise"].append((j, k, complex(y)))

    # (iii) containment: sleeves inside D(0, |beta*| + 4 sqrt a) and inside
    # the working disk D(0, (1 - eps) beta_2nd)
    limit = min(
        abs(family.beta_star) + rad_excl,
        (1.0 - family.epsilon) * family.beta_2nd,
    ) + 1e-12
    for k in family.ks:
        bad = np.abs(sleeves[k]) > limit
        for y in sleeves[k][bad]:
            witnesses["containment"].append((k, complex(y)))

    # (iv) V_a = phi(U_a) invariant under inversion: for boundary samples z
    # of V_a, 1/conj(z) stays within 1e-9 of V_a
    for u in ua_rim:
        v = _mobius_phi(complex(u))
        if v == 0:
            continue
        w = 1.0 / v.conjugate()
        back = _mobius_phi_inv(w)
        if region.distance(back) > 1e-9:
            witnesses["inversion"].append((complex(u), complex(w)))

    return TubeReport(
        strip_ok=not witnesses["strip"],
        pairwise_ok=not witnesses["pairwise"],
        containment_ok=not witnesses["containment"],
        inversion_ok=not witnesses["inversion"],
        witnesses={k: v[:8] for k, v in witnesses.items()},
    )
