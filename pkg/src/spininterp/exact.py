"""Ground-truth engines for small n: exact partition functions, exact
moments, zero location in the complex inverse-temperature plane, and the
log-radius identity (Jensen) connecting zeros to boundary averages.

Hypercube values come from a single sweep over all 2^n sign vectors
(Gray-code enumeration, compensated summation); spherical values come from
the entire Taylor series with exactly computed moments.  Zero location runs
a recursive quadrisection on winding numbers of Z'/Z with Newton polishing.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from spininterp import backend
from spininterp.model import (
    Domain,
    DisorderTensor,
    MixtureSpec,
    build_disorder,
)
from spininterp.series import moments_combinatorial
from spininterp.threshold import curie_weiss_Z

__all__ = [
    "EXACT_N_CAP",
    "ZEvaluator",
    "ZeroList",
    "SphereZResult",
    "SecondMomentCheck",
    "JensenCheck",
    "exact_Z_hypercube",
    "exact_Z_and_derivative",
    "exact_moments_hypercube",
    "sphere_Z_series",
    "locate_zeros",
    "winding_on_circle",
    "jensen_check",
    "second_moment_identity_check",
    "z_raster",
]

EXACT_N_CAP = 22


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise ValueError(f"exact enumeration refused: n = {n} exceeds cap {cap} (cost 2^n)")


class ZEvaluator:
    """Partition function of one disorder realization on the hypercube,
    backed by a cached table of all 2^n Hamiltonian values.

    ``z`` and ``dz`` are exact up to summation rounding; ``z_batch``
    evaluates many inverse temperatures at once (pairwise summation).
    """

    def __init__(self, spec: MixtureSpec, G: DisorderTensor, cap: int = EXACT_N_CAP):
        if spec.domain is not Domain.HYPERCUBE:
            raise ValueError("ZEvaluator enumerates the hypercube domain only")
        _check_cap(G.n, cap)
        self.spec = spec
        self.G = G
        self.n = G.n
        terms = [
            (p, spec.gamma(p) * G.n ** (-(p - 1) / 2.0), G.order(p))
            for p in G.orders
        ]
        self.table = backend.htable(G.n, terms)

    def z(self, beta: complex) -> complex:
        return backend.z_and_dz(self.table, beta)[0]

    def dz(self, beta: complex) -> complex:
        return backend.z_and_dz(self.table, beta)[1]

    def z_and_dz(self, beta: complex) -> tuple[complex, complex]:
        return backend.z_and_dz(self.table, beta)

    def z_batch(self, betas: np.ndarray) -> np.ndarray:
        betas = np.asarray(betas)
        w = np.exp(np.multiply.outer(self.table, betas))
        return w.mean(axis=0)

    def z_and_dz_batch(self, betas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        betas = np.asarray(betas)
        w = np.exp(np.multiply.outer(self.table, betas))
        return w.mean(axis=0), (self.table[:, None] * w).mean(axis=0)

    def scaled_moments(self, k_max: int) -> tuple[np.ndarray, float]:
        """(t, s) with t[k] = E[(H/s)^k], s = max |H|."""
        return backend.scaled_moments(self.table, k_max)

    def moments(self, k_max: int) -> np.ndarray:
        t, s = self.scaled_moments(k_max)
        return t * s ** np.arange(k_max + 1)

    def log_z_real(self, beta: float) -> float:
        """log Z(beta) for real beta, overflow-safe via a max-shift."""
        x = beta * self.table
        mx = float(x.max())
        return mx + math.log(float(np.exp(x - mx).mean()))


def exact_Z_hypercube(
    spec: MixtureSpec, G: DisorderTensor, beta: complex, cap: int = EXACT_N_CAP
) -> complex:
    """E over all 2^n sign vectors of exp(beta H)."""
    return ZEvaluator(spec, G, cap=cap).z(beta)


def exact_Z_and_derivative(
    spec: MixtureSpec, G: DisorderTensor, beta: complex, cap: int = EXACT_N_CAP
) -> tuple[complex, complex]:
    """(Z(beta), Z'(beta)) = (E exp(beta H), E H exp(beta H)) in one sweep."""
    return ZEvaluator(spec, G, cap=cap).z_and_dz(beta)


def exact_moments_hypercube(
    spec: MixtureSpec, G: DisorderTensor, k_max: int, cap: int = EXACT_N_CAP
) -> np.ndarray:
    """E[H^k] for k = 0..k_max from a single sweep."""
    return ZEvaluator(spec, G, cap=cap).moments(k_max)


@dataclass(frozen=True)
class SphereZResult:
    value: complex
    tail_estimate: float
    converged: bool


def sphere_Z_series(
    spec: MixtureSpec,
    G: DisorderTensor,
    beta: complex,
    k_max: int,
    moment_budget: float = 5e8,
) -> SphereZResult:
    """Z(beta) on the sphere via the entire series sum_k beta^k E[H^k]/k!.

    The tail estimate extrapolates the last three retained terms
    geometrically; a non-decaying tail sets converged=False (caller should
    raise k_max).
    """
    if spec.domain is not Domain.SPHERE:
        raise ValueError("sphere_Z_series requires a spherical spec")
    mom = moments_combinatorial(spec, G, k_max, budget=moment_budget)
    beta = complex(beta)
    terms = np.empty(k_max + 1, dtype=np.complex128)
    for k in range(k_max + 1):
        terms[k] = mom[k] * beta**k / math.factorial(k)
    value = complex(np.sum(terms[::-1]))
    mags = np.abs(terms[-3:])
    if mags[-1] == 0.0:
        return SphereZResult(value=value, tail_estimate=0.0, converged=True)
    ratios = [mags[i + 1] / mags[i] for i in range(len(mags) - 1) if mags[i] > 0]
    rho = max(ratios) if ratios else 1.0
    if rho >= 1.0:
        return SphereZResult(value=value, tail_estimate=math.inf, converged=False)
    tail = float(mags[-1] * rho / (1.0 - rho))
    return SphereZResult(value=value, tail_estimate=tail, converged=True)


# ---------------------------------------------------------------------------
# Zero location


@dataclass(frozen=True)
class ZeroList:
    """Zeros of an analytic function inside a disk, with multiplicities."""

    disk_center: complex
    disk_radius: float
    zeros: tuple[tuple[complex, int], ...]
    residual: float

    @property
    def count(self) -> int:
        return sum(mult for _, mult in self.zeros)

    def log_radius_sum(self, R: float | None = None) -> float:
        """sum over zeros of mult * log(R / |omega - center|)."""
        R = self.disk_radius if R is None else R
        return sum(
            mult * math.log(R / abs(w - self.disk_center))
            for w, mult in self.zeros
            if abs(w - self.disk_center) < R
        )

    def to_json(self) -> dict:
        return {
            "disk_center": [self.disk_center.real, self.disk_center.imag],
            "disk_radius": self.disk_radius,
            "residual": self.residual,
            "zeros": [
                {"re": w.real, "im": w.imag, "multiplicity": mult}
                for w, mult in self.zeros
            ],
        }

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "multiplicity"])
        for w, mult in self.zeros:
            writer.writerow([repr(w.real), repr(w.imag), mult])


class _ContourTooClose(Exception):
    pass


WINDING_SNAP = 0.2  # reject a boundary integral further than this from an integer


def _edge_integral(fdf, a: complex, b: complex, tol: float = 0.02) -> complex:
    """(1/2 pi i) int_a^b f'/f dz by trapezoid doubling (incremental:
    each refinement only evaluates the new midpoints)."""
    nseg = 16
    t = np.linspace(0.0, 1.0, nseg + 1)
    fz, dfz = fdf(a + t * (b - a))
    if np.any(np.abs(fz) < 1e-280):
        raise _ContourTooClose
    g = dfz / fz
    trapz = np.sum(g[1:-1]) + 0.5 * (g[0] + g[-1])
    prev = None
    while nseg <= (1 << 13):
        val = (b - a) * trapz / nseg / (2.0j * math.pi)
        if prev is not None and abs(val - prev) < tol:
            return complex(val)
        prev = val
        tm = (np.arange(nseg) + 0.5) / nseg
        fz, dfz = fdf(a + tm * (b - a))
        if np.any(np.abs(fz) < 1e-280):
            raise _ContourTooClose
        trapz = trapz + np.sum(dfz / fz)
        nseg *= 2
    return complex(prev)


def _rect_winding(fdf, lo: complex, size: float) -> int:
    corners = [lo, lo + size, lo + size + 1j * size, lo + 1j * size, lo]
    total = 0.0 + 0.0j
    for a, b in zip(corners[:-1], corners[1:]):
        total += _edge_integral(fdf, a, b)
    w = round(total.real)
    if abs(total - w) > WINDING_SNAP:
        raise _ContourTooClose
    return int(w)


def winding_on_circle(Z, dZ=None, center: complex = 0.0, radius: float = 1.0, samples: int = 8192) -> int:
    """Argument-principle count of zeros inside the circle (periodic
    trapezoid rule with doubling until stable)."""
    _, fdf = _batched_pair(Z, dZ)

    def value(num: int) -> complex:
        theta = np.linspace(0.0, 2.0 * math.pi, num, endpoint=False)
        z = center + radius * np.exp(1j * theta)
        fz, dfz = fdf(z)
        if np.any(np.abs(fz) < 1e-280):
            raise _ContourTooClose("zero on or numerically at the circle")
        # dz = i radius e^{i theta} d theta
        return complex(np.sum(dfz / fz * (z - center)) / num)

    num = 256
    prev = value(num)
    while num < samples:
        num *= 2
        cur = value(num)
        if abs(cur - prev) < 0.02 and abs(cur - round(cur.real)) <= WINDING_SNAP:
            return int(round(cur.real))
        prev = cur
    if abs(prev - round(prev.real)) > WINDING_SNAP:
        raise ValueError(f"circle winding {prev} does not snap to an integer")
    return int(round(prev.real))


def _newton_polish(fdf, z0: complex, mult: int, tol: float) -> complex:
    z = complex(z0)
    for _ in range(200):
        fz, dfz = fdf(np.array([z]))
        fz, dfz = complex(fz[0]), complex(dfz[0])
        if dfz == 0:
            break
        step = mult * fz / dfz
        z -= step
        if abs(step) < 1e-6 * tol:
            break
    return z


def _as_batched(fn) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap a scalar complex function to accept ndarray input."""

    def wrapped(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        return np.array([fn(complex(v)) for v in z.ravel()]).reshape(z.shape)

    return wrapped


def _batched_pair(Z, dZ):
    """(f, fdf): value-only and value-plus-derivative batch evaluators."""
    if isinstance(Z, ZEvaluator):
        return Z.z_batch, Z.z_and_dz_batch
    if dZ is None:
        raise ValueError("a derivative callable is required unless Z is a ZEvaluator")
    f, df = Z, dZ
    try:
        out = f(np.zeros(2, dtype=np.complex128))
        if np.shape(out) != (2,):
            raise TypeError
    except Exception:
        f = _as_batched(Z)
        df = _as_batched(dZ)
    return f, lambda z, f=f, df=df: (f(z), df(z))


def locate_zeros(
    Z,
    dZ=None,
    center: complex = 0.0,
    radius: float = 1.0,
    tol: float = 1e-9,
    max_retries: int = 5,
) -> ZeroList:
    """Zeros of Z strictly inside D(center, radius) by recursive
    quadrisection on boundary winding numbers, refined by Newton iteration.

    ``Z`` is a ZEvaluator or a (vectorized or scalar) callable with
    derivative ``dZ``.  A zero too close to a contour triggers a retry with
    the whole subdivision offset by tol*(1+i)/2; after ``max_retries`` the
    failure is raised.
    """
    f, fdf = _batched_pair(Z, dZ)
    coarse = max(tol, radius * 3e-2)
    theta = (np.arange(256) + 0.5) * (2.0 * math.pi / 256)
    scale = float(np.abs(f(center + radius * np.exp(1j * theta))).max())
    accept_residual = 1e-10 * max(scale, 1e-300)

    # cheap screen: a clean zero count on the disk boundary short-circuits
    # the subdivision when the disk is zero-free
    try:
        if winding_on_circle(Z, dZ, center, radius) == 0:
            return ZeroList(
                disk_center=complex(center),
                disk_radius=float(radius),
                zeros=(),
                residual=0.0,
            )
    except (_ContourTooClose, ValueError):
        pass

    # Fixed jitter keeps dyadic subdivision lines off the axes, where zeros
    # of structured test functions tend to sit; the square still covers the
    # disk.  Retries shift the whole subdivision by tol*(1+i)/2 steps (with
    # a small floor so the shift clears a contour-adjacent zero).
    pad = 1.5e-3 * radius
    jitter = radius * (2.33e-4 + 1.79e-4j)
    step = max(tol, 1e-7 * radius) * (1.0 + 1.0j) / 2.0
    for attempt in range(max_retries + 1):
        offset = jitter + attempt * step
        lo0 = center - (radius + pad) * (1.0 + 1.0j) + offset
        try:
            found: list[tuple[complex, int]] = []
            stack = [(lo0, 2.0 * (radius + pad))]
            while stack:
                lo, size = stack.pop()
                # prune squares with no overlap with the disk
                dx = max(lo.real - center.real, center.real - lo.real - size, 0.0)
                dy = max(lo.imag - center.imag, center.imag - lo.imag - size, 0.0)
                if math.hypot(dx, dy) >= radius:
                    continue
                w = _rect_winding(fdf, lo, size)
                if w == 0:
                    continue
                mid = lo + (size / 2.0) * (1.0 + 1.0j)
                if size <= coarse:
                    z = _newton_polish(fdf, mid, w, tol)
                    landed = abs(z - mid) <= size
                    small = abs(complex(f(np.array([z]))[0])) <= accept_residual
                    if landed and small:
                        found.append((z, w))
                        continue
                    if size <= tol:  # cannot separate further
                        raise _ContourTooClose
                half = size / 2.0
                for corner in (
                    lo,
                    lo + half,
                    lo + 1j * half,
                    lo + half + 1j * half,
                ):
                    stack.append((corner, half))
            break
        except _ContourTooClose:
            if attempt == max_retries:
                raise RuntimeError(
                    f"zero location failed after {max_retries} contour perturbations"
                )
            continue

    # merge duplicates from adjacent squares, keep zeros strictly in the disk
    merged: list[tuple[complex, int]] = []
    for z, w in sorted(found, key=lambda t: (t[0].real, t[0].imag)):
        for i, (zm, wm) in enumerate(merged):
            if abs(z - zm) <= 4.0 * tol:
                merged[i] = (zm, wm) if wm >= w else (z, w)
                break
        else:
            merged.append((z, w))
    inside = [(z, w) for z, w in merged if abs(z - center) < radius]
    residual = max((abs(complex(f(np.array([z]))[0])) for z, _ in inside), default=0.0)
    return ZeroList(
        disk_center=complex(center),
        disk_radius=float(radius),
        zeros=tuple(inside),
        residual=float(residual),
    )


@dataclass(frozen=True)
class JensenCheck:
    lhs: float
    rhs: float


def jensen_check(
    Z,
    R: float,
    quad_points: int,
    dZ=None,
    zeros: ZeroList | None = None,
) -> JensenCheck:
    """lhs = sum over zeros in D(0,R) of log(R/|omega|); rhs = boundary mean
    of log|Z(R e^{i theta}) / Z(0)|.  Requires Z(0) != 0."""
    f, _ = _batched_pair(Z, dZ)
    z0 = complex(f(np.array([0.0 + 0.0j]))[0])
    if z0 == 0:
        raise ValueError("Jensen check requires Z(0) != 0")
    if zeros is None:
        zeros = locate_zeros(Z, dZ, center=0.0, radius=R)
    lhs = sum(m * math.log(R / abs(w)) for w, m in zeros.zeros if abs(w) < R)
    theta = (np.arange(quad_points) + 0.5) * (2.0 * math.pi / quad_points)
    vals = f(R * np.exp(1j * theta))
    rhs = float(np.mean(np.log(np.abs(vals / z0))))
    return JensenCheck(lhs=float(lhs), rhs=rhs)


# ---------------------------------------------------------------------------
# Second-moment identity


@dataclass(frozen=True)
class SecondMomentCheck:
    mc_ratio: float
    cw_value: float
    stderr: float


def second_moment_identity_check(
    spec: MixtureSpec,
    n: int,
    beta: float,
    num_seeds: int,
    seed_base: int = 0,
    cap: int = EXACT_N_CAP,
) -> SecondMomentCheck:
    """Monte Carlo over disorder of Z^2 / E[Z]^2 against the Curie-Weiss
    value at beta^2.  E[Z] = exp(n xi(1) beta^2 / 2) is deterministic, so
    only the numerator is sampled."""
    if spec.domain is not Domain.HYPERCUBE:
        raise ValueError("second-moment check enumerates the hypercube")
    if num_seeds < 1000:
        raise ValueError("need at least 10^3 seeds")
    _check_cap(n, cap)
    log_denom = n * spec.xi(1.0) * beta * beta
    ratios = np.empty(num_seeds)
    for i in range(num_seeds):
        G = build_disorder(spec, n, seed_base + i)
        ev = ZEvaluator(spec, G, cap=cap)
        # Z^2 / E[Z]^2 in log space to dodge overflow at larger beta
        ratios[i] = math.exp(2.0 * ev.log_z_real(beta) - log_denom)
    mc = float(ratios.mean())
    stderr = float(ratios.std(ddof=1) / math.sqrt(num_seeds))
    cw = math.exp(curie_weiss_Z(spec, n, beta * beta))
    return SecondMomentCheck(mc_ratio=mc, cw_value=cw, stderr=stderr)


def z_raster(
    ev: ZEvaluator,
    re_range: tuple[float, float],
    im_range: tuple[float, float],
    resolution: int,
) -> list[tuple[float, float, float, float]]:
    """Rows (re, im, |Z|, arg Z) over a resolution x resolution grid."""
    res = []
    for im in np.linspace(im_range[0], im_range[1], resolution):
        betas = np.linspace(re_range[0], re_range[1], resolution) + 1j * im
        vals = ev.z_batch(betas)
        for b, v in zip(betas, vals):
            res.append((float(b.real), float(b.imag), float(abs(v)), float(cmath.phase(v))))
    return res
