"""Weight models, realized environments, and deterministic curves.

The weights W_j scale the i.i.d. summands; conditioning on them freezes one
*environment*.  A :class:`WeightModel` supplies a sampler, moments, and the
expectation functional E[h(W)] used to build the deterministic curves

    g(t)  = E[f(W t)],    g1(t) = E[W f'(W t)],    g2(t) = E[W^2 f''(W t)],

whose mean map g1 defines the admissible threshold interval
J = (E[W] E[Z], E[W f'(theta_star W)]).  Expectations are evaluated in closed
form where the model allows it and otherwise by adaptive Gauss-Legendre
quadrature at relative tolerance 1e-10, never by sampling: downstream
fluctuation comparisons need these values far below Monte Carlo noise.

Models that cannot certify P(|W| > 0) > 0 are rejected at construction; a
weight that is almost surely zero makes the weighted sum degenerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cgf import CumulantModel
from .errors import DegenerateEnvironment, EmptyInterval
from .numerics import adaptive_gauss_legendre
from .rng import Stream

__all__ = [
    "ConstantWeight",
    "CustomWeight",
    "DeterministicCurves",
    "Environment",
    "TcellWeight",
    "TwoPointWeight",
    "UniformWeight",
    "WeightModel",
    "build_curves",
    "draw_environment",
    "expect_weighted",
]

QUAD_REL_TOL = 1e-10
QUAD_NODE_CAP = 2**14
# truncation half-width for standard-normal integrals (mass beyond < 2e-33)
_NORMAL_CUTOFF = 12.0


class WeightModel:
    """Interface for weight distributions.

    ``density_floor`` is ``((c, d), p)`` when the model certifies a density
    bounded below by p > 0 on [c, d] (needed by the diagnostics for lattice
    summands); None otherwise.
    """

    kind: str = "abstract"
    density_floor: tuple[tuple[float, float], float] | None = None

    def sample(self, n: int, stream: Stream) -> np.ndarray:
        raise NotImplementedError

    def expect(self, h: Callable[[np.ndarray], np.ndarray]) -> float:
        """E[h(W)] for h continuous on the support of W."""
        raise NotImplementedError

    def moment(self, k: int) -> float:
        return self.expect(lambda w: np.power(w, k))


@dataclass(frozen=True)
class ConstantWeight(WeightModel):
    """Point mass at c (c != 0, otherwise the sum is identically zero)."""

    c: float
    kind: str = field(default="constant", init=False)

    def __post_init__(self):
        if self.c == 0.0 or not math.isfinite(self.c):
            raise ValueError("constant weight must be finite and nonzero")

    def sample(self, n, stream):
        return np.full(n, self.c, dtype=float)

    def expect(self, h):
        return float(h(np.asarray(self.c, dtype=float)))

    def moment(self, k):
        return self.c**k


@dataclass(frozen=True)
class UniformWeight(WeightModel):
    """Uniform on [c, d]; density 1/(d-c) certifies the lower-bound floor."""

    c: float
    d: float
    kind: str = field(default="uniform", init=False)

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.d) and self.c < self.d):
            raise ValueError(f"need c < d, got [{self.c}, {self.d}]")

    @property
    def density_floor(self):  # type: ignore[override]
        return ((self.c, self.d), 1.0 / (self.d - self.c))

    def sample(self, n, stream):
        return stream.gen.uniform(self.c, self.d, n)

    def expect(self, h):
        scale = 1.0 / (self.d - self.c)
        return adaptive_gauss_legendre(
            lambda w: scale * np.asarray(h(w), dtype=float),
            self.c, self.d, QUAD_REL_TOL, QUAD_NODE_CAP,
        )

    def moment(self, k):
        return (self.d ** (k + 1) - self.c ** (k + 1)) / ((k + 1) * (self.d - self.c))


@dataclass(frozen=True)
class TwoPointWeight(WeightModel):
    """Discrete law on finitely many atoms (the name matches its main use)."""

    values: tuple[float, ...]
    probs: tuple[float, ...]
    kind: str = field(default="two_point", init=False)

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must be equal-length and nonempty")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        if not any(v != 0.0 and p > 0.0 for v, p in zip(self.values, self.probs)):
            raise ValueError("P(|W| > 0) = 0: weight is almost surely zero")

    def sample(self, n, stream):
        return stream.gen.choice(np.asarray(self.values, dtype=float), size=n,
                                 p=np.asarray(self.probs, dtype=float))

    def expect(self, h):
        v = np.asarray(self.values, dtype=float)
        return float(np.dot(self.probs, np.asarray(h(v), dtype=float)))


@dataclass(frozen=True)
class TcellWeight(WeightModel):
    """Stimulation-rate weight W = (1/tau) exp(-1/tau), bounded by 1/e.

    ``tau`` is the peptide dwell time: exponential with the given rate, or
    lognormal(mu, s).  Expectations integrate over the dwell-time law with a
    substitution that maps the half-line onto a finite interval (exponential)
    or truncates the normal core at 12 standard deviations (lognormal).
    """

    tau_kind: str
    rate: float = 1.0
    mu: float = 0.0
    s: float = 1.0
    kind: str = field(default="tcell", init=False)

    def __post_init__(self):
        if self.tau_kind not in ("exponential", "lognormal"):
            raise ValueError(f"unknown tau model {self.tau_kind!r}")
        if self.tau_kind == "exponential" and not self.rate > 0:
            raise ValueError("exponential rate must be positive")
        if self.tau_kind == "lognormal" and not self.s > 0:
            raise ValueError("lognormal shape must be positive")

    @staticmethod
    def transform(tau: np.ndarray) -> np.ndarray:
        return np.exp(-1.0 / tau) / tau

    def sample(self, n, stream):
        if self.tau_kind == "exponential":
            tau = stream.gen.exponential(scale=1.0 / self.rate, size=n)
        else:
            tau = stream.gen.lognormal(mean=self.mu, sigma=self.s, size=n)
        return self.transform(tau)

    def expect(self, h):
        if self.tau_kind == "exponential":
            # u = exp(-rate * tau) maps tau in (0, inf) to u in (0, 1)
            def integrand(u):
                tau = -np.log(u) / self.rate
                return np.asarray(h(self.transform(tau)), dtype=float)

            return adaptive_gauss_legendre(integrand, 0.0, 1.0,
                                           QUAD_REL_TOL, QUAD_NODE_CAP)

        def integrand(v):
            tau = np.exp(self.mu + self.s * v)
            phi = np.exp(-0.5 * v * v) / math.sqrt(2.0 * math.pi)
            return np.asarray(h(self.transform(tau)), dtype=float) * phi

        return adaptive_gauss_legendre(integrand, -_NORMAL_CUTOFF, _NORMAL_CUTOFF,
                                       QUAD_REL_TOL, QUAD_NODE_CAP)


@dataclass(frozen=True)
class CustomWeight(WeightModel):
    """User extension: sampler plus either a density on [lo, hi] or an
    explicit expectation functional.  ``nonzero_certified`` asserts
    P(|W| > 0) > 0 on the caller's authority."""

    kind_name: str
    sampler: Callable[[int, Stream], np.ndarray]
    nonzero_certified: bool = True
    density: Callable[[np.ndarray], np.ndarray] | None = None
    interval: tuple[float, float] | None = None
    expect_fn: Callable[[Callable], float] | None = None
    floor: tuple[tuple[float, float], float] | None = None

    def __post_init__(self):
        if not self.nonzero_certified:
            raise ValueError("weight model must certify P(|W| > 0) > 0")
        if self.expect_fn is None and (self.density is None or self.interval is None):
            raise ValueError("need expect_fn or (density, interval)")

    @property
    def kind(self) -> str:  # type: ignore[override]
        return self.kind_name

    @property
    def density_floor(self):  # type: ignore[override]
        return self.floor

    def sample(self, n, stream):
        return np.asarray(self.sampler(n, stream), dtype=float)

    def expect(self, h):
        if self.expect_fn is not None:
            return float(self.expect_fn(h))
        lo, hi = self.interval
        return adaptive_gauss_legendre(
            lambda w: np.asarray(h(w), dtype=float) * np.asarray(self.density(w), dtype=float),
            lo, hi, QUAD_REL_TOL, QUAD_NODE_CAP,
        )


@dataclass(frozen=True)
class Environment:
    """One realized weight sequence: a single draw of the conditioning."""

    weights: np.ndarray
    seed_provenance: tuple[int, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a nonempty 1-d array")

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def to_csv(self, path) -> None:
        """One weight per line, full round-trip precision."""
        with open(path, "w", encoding="ascii") as fh:
            for w in self.weights:
                fh.write(f"{float(w)!r}\n")


def draw_environment(wm: WeightModel, n: int, rng: Stream) -> Environment:
    """Draw n i.i.d. weights; deterministic given the stream's provenance.

    Raises :class:`DegenerateEnvironment` when every drawn weight is zero
    (the caller decides whether to abort or reseed; resampling here would
    bias replica studies).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    w = wm.sample(n, rng)
    if not np.any(w != 0.0):
        raise DegenerateEnvironment(f"all {n} weights are zero")
    return Environment(weights=w, seed_provenance=rng.provenance)


def expect_weighted(wm: WeightModel, h: Callable[[np.ndarray], np.ndarray]) -> float:
    """E[h(W)]: closed form where available, quadrature otherwise."""
    return wm.expect(h)


class DeterministicCurves:
    """Quadrature-backed g, g1, g2 plus the admissible interval J.

    Values are memoized per evaluation point; the curves are deterministic,
    so repeated solves across replicas hit the cache.
    """

    def __init__(self, wm: WeightModel, cm: CumulantModel, theta_star: float):
        if not theta_star > 0:
            raise ValueError(f"theta_star must be positive, got {theta_star}")
        self.wm = wm
        self.cm = cm
        self.theta_star = float(theta_star)
        self._memo: dict[tuple[int, float], float] = {}
        j_lo = wm.moment(1) * cm.mean
        j_hi = self.g1(self.theta_star)
        if not j_hi > j_lo:
            raise EmptyInterval(
                f"J = ({j_lo:.6g}, {j_hi:.6g}) is empty; increase theta_star"
            )
        self.J = (j_lo, j_hi)

    def _eval(self, order: int, theta: float) -> float:
        key = (order, theta)
        if key not in self._memo:
            cm = self.cm
            if order == 0:
                val = self.wm.expect(lambda w: cm.f(w * theta))
            elif order == 1:
                val = self.wm.expect(lambda w: w * cm.f1(w * theta))
            else:
                val = self.wm.expect(lambda w: w * w * cm.f2(w * theta))
            self._memo[key] = val
        return self._memo[key]

    def g(self, theta: float) -> float:
        return self._eval(0, float(theta))

    def g1(self, theta: float) -> float:
        return self._eval(1, float(theta))

    def g2(self, theta: float) -> float:
        return self._eval(2, float(theta))

    def contains(self, a: float) -> bool:
        """True when a lies strictly inside J."""
        return self.J[0] < a < self.J[1]

    def grid(self, count: int) -> np.ndarray:
        """``count`` equally spaced thresholds strictly inside J."""
        lo, hi = self.J
        return lo + (hi - lo) * (np.arange(1, count + 1) / (count + 1))


def build_curves(wm: WeightModel, cm: CumulantModel, theta_star: float) -> DeterministicCurves:
    """Assemble the deterministic curves for (weight model, summand model)."""
    return DeterministicCurves(wm, cm, theta_star)
