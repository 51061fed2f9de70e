"""Shannon, Tsallis and Renyi entropies.

Three families of routines live here:

* exact entropies of discrete distributions (used by the tabular engine),
* closed forms for diagonal Gaussians,
* Monte-Carlo estimators driven by log-densities of sampled actions, as used
  by the actor-critic learner with tanh-squashed Gaussian policies.

Densities are handled in log space; a power ``p ** (q - 1)`` is always
evaluated as ``exp((q - 1) * log p)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)
DEFAULT_K = 9
JACOBIAN_FLOOR = 1e-12
RENYI_SUM_FLOOR = 1e-300

SHANNON = "shannon"
TSALLIS = "tsallis"
RENYI = "renyi"
KINDS = (SHANNON, TSALLIS, RENYI)


@dataclass(frozen=True)
class EntropyMeasure:
    """Which entropy the agent maximizes.

    ``index`` is the entropic index (q for Tsallis, eta for Renyi) and is
    ignored for Shannon.  An index of exactly 1 is the Shannon limit, so it is
    rejected for the other two kinds; use `EntropyMeasure.make` to get the
    normalization instead of an error.
    """

    kind: str = SHANNON
    index: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown entropy kind {self.kind!r}")
        if self.kind == SHANNON:
            object.__setattr__(self, "index", 1.0)
            return
        if not np.isfinite(self.index) or self.index < 1.0:
            raise ValueError(f"entropic index must be >= 1, got {self.index}")
        if self.index == 1.0:
            raise ValueError(f"{self.kind} with index 1 is the Shannon limit; use kind='shannon'")

    @classmethod
    def make(cls, kind: str, index: float = 1.0) -> "EntropyMeasure":
        kind = kind.lower()
        if kind != SHANNON and index == 1.0:
            return cls(SHANNON)
        return cls(kind, float(index))

    @classmethod
    def shannon(cls):
        return cls(SHANNON)

    @classmethod
    def tsallis(cls, q):
        return cls.make(TSALLIS, q)

    @classmethod
    def renyi(cls, eta):
        return cls.make(RENYI, eta)

    def label(self):
        return self.kind if self.kind == SHANNON else f"{self.kind}({self.index:g})"


# ---------------------------------------------------------------------------
# discrete distributions

def q_log(x, q):
    """q-logarithm ``(x**(q-1) - 1) / (q - 1)``; the natural log at q == 1."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("q_log needs strictly positive arguments")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if q == 1.0:
        return np.log(x)
    return np.expm1((q - 1.0) * np.log(x)) / (q - 1.0)


def _check_simplex(p, atol=1e-9):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim < 1 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be finite and non-negative")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > atol):
        raise ValueError("probabilities must sum to 1")
    return p


def shannon_discrete(p):
    p = _check_simplex(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def tsallis_discrete(p, q):
    p = _check_simplex(p)
    if q == 1.0:
        return shannon_discrete(p)
    safe = np.where(p > 0, p, 1.0)
    terms = np.where(p > 0, -p * np.expm1((q - 1.0) * np.log(safe)) / (q - 1.0), 0.0)
    return terms.sum(axis=-1)


def renyi_discrete(p, eta):
    p = _check_simplex(p)
    if eta == 1.0:
        return shannon_discrete(p)
    s = np.maximum((p ** eta).sum(axis=-1), RENYI_SUM_FLOOR)
    return np.log(s) / (1.0 - eta)


def discrete_entropy(p, measure: EntropyMeasure):
    """Exact entropy of each row of ``p`` under ``measure``."""
    if measure.kind == SHANNON:
        return shannon_discrete(p)
    if measure.kind == TSALLIS:
        return tsallis_discrete(p, measure.index)
    return renyi_discrete(p, measure.index)


def discrete_entropy_grad(p, measure: EntropyMeasure):
    """Gradient of `discrete_entropy` w.r.t. ``p`` (rows must be strictly positive)."""
    p = np.asarray(p, dtype=np.float64)
    if measure.kind == SHANNON:
        return -np.log(p) - 1.0
    if measure.kind == TSALLIS:
        q = measure.index
        return (1.0 - q * p ** (q - 1.0)) / (q - 1.0)
    eta = measure.index
    s = np.maximum((p ** eta).sum(axis=-1, keepdims=True), RENYI_SUM_FLOOR)
    return eta * p ** (eta - 1.0) / ((1.0 - eta) * s)


# ---------------------------------------------------------------------------
# sample-based estimators

def shannon_estimate(log_probs):
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.shape[-1] < 1:
        raise ValueError("need at least one sample")
    return -log_probs.mean(axis=-1)


def tsallis_estimate(log_probs, q):
    """Tsallis entropy estimate from log-densities of k sampled actions.

    Works along the last axis, so a ``(B, k)`` array gives B estimates.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.shape[-1] < 1:
        raise ValueError("need at least one sample")
    if q == 1.0:
        return shannon_estimate(log_probs)
    return -(np.expm1((q - 1.0) * log_probs) / (q - 1.0)).mean(axis=-1)


# ---------------------------------------------------------------------------
# Gaussians

@dataclass
class DiagonalGaussian:
    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.log_std = np.asarray(self.log_std, dtype=np.float64)
        if self.mean.shape != self.log_std.shape:
            raise ValueError("mean and log_std shapes differ")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.log_std))):
            raise ValueError("Gaussian parameters must be finite")

    @property
    def dim(self):
        return self.mean.shape[-1]

    @property
    def std(self):
        return np.exp(self.log_std)

    def log_density(self, u):
        z = (np.asarray(u, dtype=np.float64) - self.mean) * np.exp(-self.log_std)
        return (-0.5 * z * z - self.log_std - 0.5 * LOG_2PI).sum(axis=-1)

    def sample(self, rng, size=None):
        shape = self.mean.shape if size is None else (size,) + self.mean.shape
        return self.mean + self.std * rng.standard_normal(shape)


def _check_eta(eta):
    if not eta > 1.0:
        raise ValueError(f"Renyi index must be > 1 here, got {eta}")


def renyi_gaussian_integral(g: DiagonalGaussian, eta):
    """Closed form of the integral of ``density ** eta`` for a diagonal Gaussian."""
    _check_eta(eta)
    return math.exp(log_renyi_gaussian_integral(g, eta))


def log_renyi_gaussian_integral(g: DiagonalGaussian, eta):
    _check_eta(eta)
    m = g.dim
    return float(0.5 * m * (1.0 - eta) * LOG_2PI - 0.5 * m * math.log(eta)
                 + (1.0 - eta) * np.sum(g.log_std))


def renyi_gaussian_entropy(g: DiagonalGaussian, eta):
    _check_eta(eta)
    m = g.dim
    return float(0.5 * m * LOG_2PI - m * math.log(eta) / (2.0 * (1.0 - eta))
                 + np.sum(g.log_std))


def gaussian_shannon_entropy(g: DiagonalGaussian):
    return float(0.5 * g.dim * (LOG_2PI + 1.0) + np.sum(g.log_std))


def log_tanh_jacobian(u):
    """``sum_j log(1 - tanh(u_j)**2)`` in a form that stays finite for large |u|."""
    u = np.abs(np.asarray(u, dtype=np.float64))
    return (2.0 * (math.log(2.0) - u - np.log1p(np.exp(-2.0 * u)))).sum(axis=-1)


def renyi_squashed_terms(log_mu, u, eta):
    """Per-sample terms ``mu(u)**(eta-1) * J(u)**(1-eta)`` of the squashed estimator.

    ``log_mu`` holds Gaussian log-densities of the internal actions ``u`` (last
    axis of ``u`` is the action dimension).  The Jacobian product is floored
    at ``JACOBIAN_FLOOR`` before it is raised to ``1 - eta``.
    """
    _check_eta(eta)
    log_jac = np.maximum(log_tanh_jacobian(u), math.log(JACOBIAN_FLOOR))
    return np.exp((eta - 1.0) * (np.asarray(log_mu) - log_jac))


def renyi_squashed_integral_estimate(mu: DiagonalGaussian, u_samples, eta):
    """Estimate of the integral of ``pi ** eta`` for the policy ``a = tanh(u), u ~ mu``."""
    _check_eta(eta)
    u_samples = np.asarray(u_samples, dtype=np.float64)
    if u_samples.ndim == 1:
        u_samples = u_samples[:, None] if mu.dim == 1 else u_samples[None, :]
    if u_samples.shape[0] < 1:
        raise ValueError("need at least one internal-action sample")
    return float(renyi_squashed_terms(mu.log_density(u_samples), u_samples, eta).mean())


def renyi_from_integral(integral, eta):
    return np.log(integral) / (1.0 - eta)


def estimate_entropy(log_probs, measure: EntropyMeasure, renyi_integral=None):
    """Per-state entropy estimate for ``measure`` from ``(B, k)`` log-densities.

    Renyi needs the integral estimate of ``pi ** eta`` per state, supplied by
    the caller because it depends on the Gaussian and Jacobian separately.
    """
    if measure.kind == SHANNON:
        return shannon_estimate(log_probs)
    if measure.kind == TSALLIS:
        return tsallis_estimate(log_probs, measure.index)
    if renyi_integral is None:
        raise ValueError("Renyi estimate needs the integral of pi**eta")
    return renyi_from_integral(renyi_integral, measure.index)
