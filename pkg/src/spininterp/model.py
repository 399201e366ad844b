"""Mixture specifications, spin domains, disorder generation, and exact
Hamiltonian evaluation.

A model is specified by a mixture function xi(s) = sum_p gamma_p^2 s^p
(p = 2..p_max), a spin domain (hypercube {-1,+1}^n or the sphere
|sigma|^2 = n), and a Gaussian coupling array G of shape [n]^p for every
active order p.  The Hamiltonian is

    H_G(sigma) = sum_p gamma_p / n^((p-1)/2)
                  * sum_{i_1..i_p} G_{i_1..i_p} * sigma_{i_1} ... sigma_{i_p}

with the sum running over all ordered index tuples (G is stored dense and
unsymmetrized).
"""

from __future__ import annotations

import enum
import hashlib
import io
import json
import math
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

__all__ = [
    "Domain",
    "MixtureSpec",
    "DisorderTensor",
    "Configuration",
    "CovarianceCheck",
    "CapacityError",
    "sk_spec",
    "pure_p_spec",
    "build_disorder",
    "hamiltonian",
    "hamiltonian_by_order",
    "empirical_covariance_check",
]

# Dense storage cap for a single order-p coupling array (number of entries).
MAX_TENSOR_ENTRIES = 1 << 28


class CapacityError(ValueError):
    """Requested coupling array exceeds the flat-index capacity."""


class Domain(enum.Enum):
    HYPERCUBE = "hypercube"
    SPHERE = "sphere"

    @classmethod
    def parse(cls, value: "Domain | str") -> "Domain":
        if isinstance(value, Domain):
            return value
        try:
            return cls(value.lower())
        except (ValueError, AttributeError):
            raise ValueError(f"unknown domain {value!r}; expected 'hypercube' or 'sphere'")


@dataclass(frozen=True)
class MixtureSpec:
    """Mixture function xi(s) = sum_{p=2}^{p_max} gamma_p^2 s^p plus domain tag.

    ``gammas[i]`` is the coefficient gamma_{i+2}; all entries are
    nonnegative and at least one must be positive.
    """

    gammas: tuple[float, ...]
    domain: Domain = Domain.HYPERCUBE

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "domain", Domain.parse(self.domain))
        if not self.gammas:
            raise ValueError("need at least one coupling coefficient (p_max >= 2)")
        if any(g < 0 for g in self.gammas):
            raise ValueError("all gamma_p must be nonnegative")
        if all(g == 0 for g in self.gammas):
            raise ValueError("at least one gamma_p must be positive")

    @property
    def p_max(self) -> int:
        return len(self.gammas) + 1

    def gamma(self, p: int) -> float:
        if not 2 <= p <= self.p_max:
            return 0.0
        return self.gammas[p - 2]

    @property
    def active_orders(self) -> tuple[int, ...]:
        """Orders p with gamma_p > 0, ascending."""
        return tuple(p for p in range(2, self.p_max + 1) if self.gamma(p) > 0)

    # xi and its derivatives; s may be a scalar or ndarray (real or complex).
    def xi(self, s):
        return sum(self.gamma(p) ** 2 * s**p for p in self.active_orders)

    def xi_d1(self, s):
        return sum(self.gamma(p) ** 2 * p * s ** (p - 1) for p in self.active_orders)

    def xi_d2(self, s):
        return sum(self.gamma(p) ** 2 * p * (p - 1) * s ** (p - 2) for p in self.active_orders)

    def xi_d3(self, s):
        return sum(
            self.gamma(p) ** 2 * p * (p - 1) * (p - 2) * s ** (p - 3)
            for p in self.active_orders
            if p >= 3
        )

    def xi_abs_d1(self, s: float) -> float:
        """Upper bound on |xi'| valid on [-|s|, |s|]."""
        a = abs(s)
        return sum(self.gamma(p) ** 2 * p * a ** (p - 1) for p in self.active_orders)

    def xi_abs_d2(self, s: float) -> float:
        a = abs(s)
        return sum(self.gamma(p) ** 2 * p * (p - 1) * a ** (p - 2) for p in self.active_orders)

    def xi_abs_d3(self, s: float) -> float:
        a = abs(s)
        return sum(
            self.gamma(p) ** 2 * p * (p - 1) * (p - 2) * a ** (p - 3)
            for p in self.active_orders
            if p >= 3
        )

    def canonical_json(self) -> str:
        return json.dumps(
            {"domain": self.domain.value, "gammas": list(self.gammas)},
            separators=(",", ":"),
        )

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "MixtureSpec":
        try:
            gammas = data["gammas"]
            domain = data.get("domain", "hypercube")
        except KeyError as exc:
            raise ValueError(f"spec file missing key: {exc}")
        return cls(gammas=tuple(gammas), domain=Domain.parse(domain))

    @classmethod
    def from_toml(cls, path) -> "MixtureSpec":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))


def sk_spec() -> MixtureSpec:
    """Sherrington-Kirkpatrick: hypercube, xi(s) = s^2/2."""
    return MixtureSpec(gammas=(1.0 / math.sqrt(2.0),), domain=Domain.HYPERCUBE)


def pure_p_spec(p: int, domain: Domain | str = Domain.HYPERCUBE, gamma: float = 1.0) -> MixtureSpec:
    """Pure p-spin: xi(s) = gamma^2 s^p."""
    if p < 2:
        raise ValueError("p must be >= 2")
    gammas = [0.0] * (p - 1)
    gammas[-1] = gamma
    return MixtureSpec(gammas=tuple(gammas), domain=domain)


@dataclass(frozen=True)
class Configuration:
    """A spin configuration sigma in R^n, tagged with its domain."""

    coords: np.ndarray
    domain: Domain = Domain.HYPERCUBE

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "domain", Domain.parse(self.domain))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def validate(self) -> None:
        if self.domain is Domain.HYPERCUBE:
            if not np.all(np.abs(self.coords) == 1.0):
                raise ValueError("hypercube configuration must have +/-1 coordinates")
        else:
            n = self.n
            norm2 = float(np.dot(self.coords, self.coords))
            if abs(norm2 - n) > 1e-10 * n:
                raise ValueError(f"sphere configuration must satisfy |sigma|^2 = n (got {norm2})")


MASK64 = (1 << 64) - 1

_MAGIC = b"SPINDISR"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DisorderTensor:
    """Per-order flat arrays of standard Gaussians, one entry per ordered
    index tuple in [n]^p (row-major), for each active order p.

    Immutable after construction; two tensors built from the same
    (spec, n, seed) are bitwise identical.
    """

    n: int
    seed: int
    tensors: dict[int, np.ndarray] = field(repr=False)

    def __post_init__(self):
        for arr in self.tensors.values():
            arr.setflags(write=False)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(sorted(self.tensors))

    def order(self, p: int) -> np.ndarray:
        return self.tensors[p]

    def as_ndarray(self, p: int) -> np.ndarray:
        return self.tensors[p].reshape((self.n,) * p)

    def abs_l1(self, p: int) -> float:
        return float(np.abs(self.tensors[p]).sum())

    def dump(self, fh: BinaryIO) -> None:
        """Write the little-endian binary format: magic, version, n, seed,
        order list, then one float64 array per order."""
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQI", _FORMAT_VERSION, self.n, self.seed & MASK64, len(self.tensors)))
        for p in self.orders:
            fh.write(struct.pack("<I", p))
        for p in self.orders:
            fh.write(self.tensors[p].astype("<f8", copy=False).tobytes())

    def dumps(self) -> bytes:
        buf = io.BytesIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, fh: BinaryIO) -> "DisorderTensor":
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError("not a disorder-tensor file (bad magic)")
        version, n, seed, norders = struct.unpack("<IQQI", fh.read(24))
        if version != _FORMAT_VERSION:
            raise ValueError(f"unsupported format version {version}")
        orders = [struct.unpack("<I", fh.read(4))[0] for _ in range(norders)]
        tensors = {}
        for p in orders:
            count = n**p
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise ValueError("truncated disorder-tensor file")
            tensors[p] = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        return cls(n=int(n), seed=int(seed), tensors=tensors)

    @classmethod
    def loads(cls, data: bytes) -> "DisorderTensor":
        return cls.load(io.BytesIO(data))


def _gaussian_stream(seed: int, p: int, count: int) -> np.ndarray:
    """Deterministic standard Gaussians for (seed, p): Philox4x64 keyed by
    (seed, p), raw 64-bit words mapped to (0,1) by u = (w >> 11) * 2^-53 +
    2^-54, then transformed by the inverse normal CDF.  Stream index equals
    the row-major flat tuple index."""
    ph = Philox(key=np.array([seed & MASK64, p], dtype=np.uint64))
    raw = ph.random_raw(count)
    u = (raw >> np.uint64(11)) * (2.0**-53) + 2.0**-54
    return ndtri(u)


def build_disorder(spec: MixtureSpec, n: int, seed: int) -> DisorderTensor:
    """Generate the coupling arrays for every active order, deterministically
    in (spec, n, seed).  Orders are filled ascending in p; within an order,
    entries follow the row-major flat index."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tensors = {}
    for p in spec.active_orders:
        count = n**p
        if count > MAX_TENSOR_ENTRIES:
            raise CapacityError(
                f"order-{p} coupling array needs n^p = {count} entries "
                f"(cap {MAX_TENSOR_ENTRIES})"
            )
        tensors[p] = _gaussian_stream(seed, p, count)
    return DisorderTensor(n=n, seed=int(seed), tensors=tensors)


def _coords_of(sigma) -> np.ndarray:
    if isinstance(sigma, Configuration):
        return sigma.coords
    return np.asarray(sigma, dtype=np.float64)


def hamiltonian_by_order(spec: MixtureSpec, G: DisorderTensor, sigma) -> dict[int, float]:
    """Per-order terms gamma_p n^{-(p-1)/2} sum_alpha G_alpha sigma^alpha."""
    s = _coords_of(sigma)
    n = G.n
    if s.shape != (n,):
        raise ValueError(f"configuration has {s.shape[0]} coords; disorder has n = {n}")
    terms = {}
    for p in G.orders:
        t = G.as_ndarray(p)
        for _ in range(p):
            t = np.tensordot(t, s, axes=([t.ndim - 1], [0]))
        terms[p] = spec.gamma(p) * n ** (-(p - 1) / 2.0) * float(t)
    return terms


def hamiltonian(spec: MixtureSpec, G: DisorderTensor, sigma) -> float:
    """Evaluate H_G(sigma) in double precision."""
    return float(sum(hamiltonian_by_order(spec, G, sigma).values()))


@dataclass(frozen=True)
class CovarianceCheck:
    sample_cov: float
    predicted: float
    stderr: float


def empirical_covariance_check(
    spec: MixtureSpec,
    n: int,
    seeds: Iterable[int],
    tau,
    sigma,
) -> CovarianceCheck:
    """Monte Carlo estimate of E_G[H(tau) H(sigma)] across disorder seeds,
    alongside the closed-form n * xi(<tau,sigma>/n)."""
    seeds = list(seeds)
    if len(seeds) < 1000:
        raise ValueError("need at least 10^3 seeds for the covariance check")
    t = _coords_of(tau)
    s = _coords_of(sigma)
    if t.shape != (n,) or s.shape != (n,):
        raise ValueError("tau and sigma must both have length n")
    prods = np.empty(len(seeds))
    for i, sd in enumerate(seeds):
        G = build_disorder(spec, n, sd)
        prods[i] = hamiltonian(spec, G, t) * hamiltonian(spec, G, s)
    overlap = float(np.dot(t, s)) / n
    predicted = float(n * spec.xi(overlap))
    sample_cov = float(prods.mean())
    stderr = float(prods.std(ddof=1) / math.sqrt(len(seeds)))
    return CovarianceCheck(sample_cov=sample_cov, predicted=predicted, stderr=stderr)
