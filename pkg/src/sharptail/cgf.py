"""Cumulant generating functions of the summand distribution.

A :class:`CumulantModel` describes the i.i.d. factor Z of the weighted sum
S_n = sum_j W_j Z_j through its CGF ``f(t) = log E[exp(t Z)]`` and the first
three derivatives, plus the complex moment generating function needed for
characteristic-function diagnostics and a sampler for the exponentially
tilted law  dP_t/dP = exp(t z) / M(t).

Two built-in models cover the supported closed-form cases:

* ``GaussianModel(sigma2)``:  f(t) = sigma2 * t^2 / 2, entire, non-lattice.
* ``BinomialModel(m, p)``:    f(t) = m * log(1 - p + p e^t), lattice span 1.

Everything else goes through :class:`CustomModel`, which takes every callback
explicitly; the correctness burden (convexity, entire MGF, derivative
consistency) then travels with the caller.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import expit
from .rng import Stream

__all__ = [
    "BinomialModel",
    "CumulantModel",
    "CustomModel",
    "GaussianModel",
    "eval_cgf",
    "mgf_ratio_modulus",
    "tilted_sample",
]


class CumulantModel:
    """Interface shared by all summand models.

    Subclasses must provide vectorized ``f``, ``f1``, ``f2``, ``f3`` (float in,
    float out, broadcasting over ndarrays), the complex MGF, a stable
    ``log_abs_mgf``, tilted sampling, and the metadata attributes ``mean``,
    ``variance``, ``lattice_span`` and ``support``.
    """

    kind: str = "abstract"
    lattice_span: float | None = None
    #: (values, probabilities) for finite-support lattice models, else None
    support: tuple[np.ndarray, np.ndarray] | None = None

    def f(self, t):
        raise NotImplementedError

    def f1(self, t):
        raise NotImplementedError

    def f2(self, t):
        raise NotImplementedError

    def f3(self, t):
        raise NotImplementedError

    def mgf_complex(self, zeta: complex) -> complex:
        raise NotImplementedError

    def log_abs_mgf(self, zeta):
        """log |M(zeta)| for complex zeta, vectorized and overflow-safe."""
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return float(self.f1(0.0))

    @property
    def variance(self) -> float:
        return float(self.f2(0.0))

    def tilted_batch(self, tilts: np.ndarray, size: int, stream: Stream) -> np.ndarray:
        """Draw a (size, len(tilts)) matrix; column j tilted by tilts[j]."""
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianModel(CumulantModel):
    """Centered Gaussian summand with variance ``sigma2``."""

    sigma2: float
    kind: str = field(default="gaussian", init=False)

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")

    def f(self, t):
        return 0.5 * self.sigma2 * np.square(t)

    def f1(self, t):
        return self.sigma2 * np.asarray(t, dtype=float)

    def f2(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.sigma2)

    def f3(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def mgf_complex(self, zeta: complex) -> complex:
        return cmath.exp(0.5 * self.sigma2 * zeta * zeta)

    def log_abs_mgf(self, zeta):
        z = np.asarray(zeta, dtype=complex)
        return 0.5 * self.sigma2 * (z.real * z.real - z.imag * z.imag)

    def tilted_batch(self, tilts, size, stream):
        tilts = np.atleast_1d(np.asarray(tilts, dtype=float))
        sd = math.sqrt(self.sigma2)
        g = stream.gen.standard_normal((size, tilts.size))
        return g * sd + self.sigma2 * tilts


@dataclass(frozen=True)
class BinomialModel(CumulantModel):
    """Binomial(m, p) summand; Bernoulli for m = 1.

    The CGF and derivatives are evaluated through the logistic function of
    ``t + logit(p)``, which keeps them finite for arbitrarily large |t|:
    f1 = m * q, f2 = m * q(1-q), f3 = m * q(1-q)(1-2q) with q the tilted
    success probability.
    """

    m: int
    p: float
    kind: str = field(default="binomial", init=False)

    def __post_init__(self):
        if not (isinstance(self.m, int) and self.m >= 1):
            raise ValueError(f"m must be an integer >= 1, got {self.m!r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")

    @property
    def lattice_span(self) -> float:  # type: ignore[override]
        return 1.0

    @property
    def support(self):  # type: ignore[override]
        values = np.arange(self.m + 1, dtype=float)
        probs = np.array(
            [math.comb(self.m, k) * self.p**k * (1 - self.p) ** (self.m - k)
             for k in range(self.m + 1)]
        )
        return values, probs

    def _logit_p(self) -> float:
        return math.log(self.p) - math.log1p(-self.p)

    def f(self, t):
        t = np.asarray(t, dtype=float)
        # m * log(1 - p + p e^t) = m * logaddexp(log(1-p), log p + t)
        return self.m * np.logaddexp(math.log1p(-self.p), math.log(self.p) + t)

    def f1(self, t):
        t = np.asarray(t, dtype=float)
        return self.m * expit(t + self._logit_p())

    def f2(self, t):
        q = expit(np.asarray(t, dtype=float) + self._logit_p())
        return self.m * q * (1.0 - q)

    def f3(self, t):
        q = expit(np.asarray(t, dtype=float) + self._logit_p())
        return self.m * q * (1.0 - q) * (1.0 - 2.0 * q)

    def mgf_complex(self, zeta: complex) -> complex:
        return (1.0 - self.p + self.p * cmath.exp(zeta)) ** self.m

    def log_abs_mgf(self, zeta):
        z = np.asarray(zeta, dtype=complex)
        x, y = z.real, z.imag
        # |1-p+p e^z| = e^x |p e^{iy} + (1-p) e^{-x}| once x > 0
        big = x > 0.0
        xs = np.where(big, 0.0, x)
        direct = np.abs(1.0 - self.p + self.p * np.exp(xs + 1j * y))
        folded = np.abs(self.p * np.exp(1j * y) + (1.0 - self.p) * np.exp(-np.where(big, x, 0.0)))
        return self.m * np.where(big, x + np.log(folded), np.log(direct))

    def tilted_batch(self, tilts, size, stream):
        tilts = np.atleast_1d(np.asarray(tilts, dtype=float))
        q = expit(tilts + self._logit_p())
        if self.m == 1:
            return (stream.gen.random((size, tilts.size)) < q).astype(float)
        return stream.gen.binomial(self.m, q, size=(size, tilts.size)).astype(float)


@dataclass(frozen=True)
class CustomModel(CumulantModel):
    """User-supplied model: every callback must be provided explicitly."""

    kind_name: str
    cgf: Callable
    cgf1: Callable
    cgf2: Callable
    cgf3: Callable
    mgf: Callable[[complex], complex]
    tilted: Callable[[np.ndarray, int, Stream], np.ndarray]
    span: float | None = None
    finite_support: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def kind(self) -> str:  # type: ignore[override]
        return self.kind_name

    @property
    def lattice_span(self):  # type: ignore[override]
        return self.span

    @property
    def support(self):  # type: ignore[override]
        return self.finite_support

    def f(self, t):
        return self.cgf(t)

    def f1(self, t):
        return self.cgf1(t)

    def f2(self, t):
        return self.cgf2(t)

    def f3(self, t):
        return self.cgf3(t)

    def mgf_complex(self, zeta: complex) -> complex:
        return self.mgf(zeta)

    def log_abs_mgf(self, zeta):
        z = np.asarray(zeta, dtype=complex)
        flat = np.array([abs(self.mgf(complex(v))) for v in z.ravel()])
        return np.log(flat).reshape(z.shape)

    def tilted_batch(self, tilts, size, stream):
        return self.tilted(np.atleast_1d(np.asarray(tilts, dtype=float)), size, stream)


def eval_cgf(model: CumulantModel, theta: float) -> float:
    """Evaluate the CGF at a real point via the model's closed form."""
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta}")
    return float(model.f(theta))


def tilted_sample(model: CumulantModel, tilt: float, rng: Stream) -> float:
    """One draw from the law with density exp(tilt * z) / M(tilt)."""
    if not math.isfinite(tilt):
        raise ValueError(f"tilt must be finite, got {tilt}")
    return float(model.tilted_batch(np.array([tilt]), 1, rng)[0, 0])


def mgf_ratio_modulus(model: CumulantModel, w: float, theta: float, t: float) -> float:
    """|M(w(theta + it)) / M(w theta)|, computed in log space; always <= 1."""
    log_ratio = float(model.log_abs_mgf(complex(w * theta, w * t))) - float(
        model.log_abs_mgf(complex(w * theta, 0.0))
    )
    return math.exp(min(log_ratio, 0.0))
