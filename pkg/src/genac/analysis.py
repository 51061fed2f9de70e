"""Performance-bound numerics for entropy-regularized greedy policies.

The setting is one-dimensional: in every state the Q-function is the bell
``Q(a) = zeta * exp(-(a - abar)^2 / (2 xi^2))`` and the policy is a Gaussian
with standard deviation at most ``sigma_star``.  The routines below evaluate
the resulting value-loss bounds for Tsallis and Renyi regularization, the
optimal-sigma stationarity equation, the extreme-value description of the
best of L Gaussian draws, and a Monte-Carlo check that picking the best of L
sampled actions closes the gap to ``max Q`` as L grows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.5772156649015329
SIGMA_BRACKET = (1e-12, 1e12)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundParams:
    """Constants of the bell-shaped-Q model.

    ``xi_lo``/``xi_hi`` bound the bell widths, ``zeta_lo``/``zeta_hi`` the bell
    heights, ``sigma_star`` the policy standard deviation; ``index`` is q or
    eta and ``gamma`` the discount used by `lower_bound`.
    """

    xi_lo: float = 1.0
    xi_hi: float = 1.0
    zeta_lo: float = 1.0
    zeta_hi: float = 1.0
    sigma_star: float = 1.0
    alpha: float = 1.0
    index: float = 2.0
    gamma: float = 0.99

    def __post_init__(self):
        for name in ("xi_lo", "xi_hi", "zeta_lo", "zeta_hi", "sigma_star"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.xi_lo > self.xi_hi:
            raise ValueError("need xi_lo <= xi_hi")
        if self.zeta_lo > self.zeta_hi:
            raise ValueError("need zeta_lo <= zeta_hi")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be >= 0")
        if not (math.isfinite(self.index) and self.index >= 1):
            raise ValueError("entropic index must be >= 1")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")

    def with_(self, **kw) -> "BoundParams":
        d = dict(self.__dict__)
        d.update(kw)
        return BoundParams(**d)


# ---------------------------------------------------------------------------
# optimal policy width under Tsallis regularization

def sigma_equation(params: BoundParams, xi, zeta, sigma):
    """Derivative (in sigma) of ``E[Q] + alpha * H_q`` for a Gaussian policy."""
    q, a = params.index, params.alpha
    entropy_term = a * (2.0 * math.pi) ** ((1.0 - q) / 2.0) * sigma ** (-q) / math.sqrt(q)
    return entropy_term - xi * zeta * sigma / (xi * xi + sigma * sigma) ** 1.5


def optimal_sigma_tsallis(params: BoundParams, xi, zeta):
    """Smallest positive root of `sigma_equation` where it turns from + to -.

    That crossing is the local maximizer of the regularized objective.  The
    left-hand side is not monotone for every q (for q < 2 it turns positive
    again for large sigma), so the bracket is located by a log-spaced scan of
    ``[1e-12, 1e12]`` before bisecting in log-space to full precision.
    """
    if params.index <= 1:
        raise ValueError("optimal_sigma_tsallis needs q > 1")
    lo, hi = SIGMA_BRACKET
    grid = np.logspace(math.log10(lo), math.log10(hi), 1201)
    vals = np.array([sigma_equation(params, xi, zeta, s) for s in grid])
    cross = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
    if len(cross) == 0:
        raise ValueError(f"no root of the sigma equation in [{lo:g}, {hi:g}]")
    a, b = math.log(grid[cross[0]]), math.log(grid[cross[0] + 1])
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if sigma_equation(params, xi, zeta, math.exp(mid)) > 0:
            a = mid
        else:
            b = mid
    ra, rb = (abs(sigma_equation(params, xi, zeta, math.exp(x))) for x in (a, b))
    return math.exp(a if ra <= rb else b)


# ---------------------------------------------------------------------------
# value-loss bounds

def _golden_max(f, lo, hi, tol=1e-12, max_iter=200):
    if hi - lo <= tol:
        return f(lo)
    a, b = lo, hi
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * (1.0 + abs(a)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return max(fc, fd, f(lo), f(hi))


def _loss_fraction(xi, width_sq):
    return 1.0 - xi / math.sqrt(xi * xi + width_sq)


def zeta_tsallis(params: BoundParams):
    """Upper bound on ``max Q - E[Q]`` for the Tsallis-regularized greedy policy.

    ``index == 1`` evaluates the same expression in the Shannon limit.
    """
    q, a, s2 = params.index, params.alpha, params.sigma_star ** 2
    if a == 0:
        return 0.0

    def frac(xi):
        base = (a * (2.0 * math.pi) ** ((1.0 - q) / 2.0) * (s2 + xi * xi) ** 1.5
                / (math.sqrt(q) * xi * params.zeta_lo))
        return _loss_fraction(xi, min(base ** (2.0 / (1.0 + q)), s2))

    return params.zeta_hi * _golden_max(frac, params.xi_lo, params.xi_hi)


def zeta_renyi(params: BoundParams):
    """Upper bound on ``max Q - E[Q]`` for the Renyi-regularized greedy policy.

    The bound does not involve eta.
    """
    a, s2 = params.alpha, params.sigma_star ** 2
    if a == 0:
        return 0.0

    def frac(xi):
        return _loss_fraction(xi, min(a * (s2 + xi * xi) ** 1.5 / (xi * params.zeta_lo), s2))

    return params.zeta_hi * _golden_max(frac, params.xi_lo, params.xi_hi)


def zeta(params: BoundParams, kind="tsallis"):
    if kind == "tsallis":
        return zeta_tsallis(params)
    if kind == "renyi":
        return zeta_renyi(params)
    raise ValueError(f"unknown bound kind {kind!r}")


def lower_bound(params: BoundParams, q_standard, kind="tsallis", zeta_value=None):
    """``q_standard - gamma / (1 - gamma) * zeta``."""
    z = zeta(params, kind) if zeta_value is None else zeta_value
    return q_standard - params.gamma / (1.0 - params.gamma) * z


# ---------------------------------------------------------------------------
# normal quantile

# Acklam's rational approximation (relative error below 1.2e-9)
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549671010229297e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p):
    if p < _P_LOW:
        t = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
                / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    t = p - 0.5
    r = t * t
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * t
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def normal_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p, tol=1e-10):
    """Inverse standard-normal CDF: rational approximation, then bisection to ``tol``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    x0 = _acklam(p)
    h = 1e-6 * (1.0 + abs(x0))
    lo, hi = x0 - h, x0 + h
    while normal_cdf(lo) > p:
        lo -= h
        h *= 2.0
    while normal_cdf(hi) < p:
        hi += h
        h *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# best of L draws

def neg_half_normal_quantile(p, sigma_star):
    """Quantile of ``-|X|``, ``X ~ N(0, sigma_star^2)`` (CDF ``2 Phi(a / sigma_star)``, a <= 0)."""
    return sigma_star * normal_quantile(p / 2.0)


def extreme_value_params(L, sigma_star):
    """Location ``rho_L`` and scale ``phi_L`` of the Gumbel approximation to the
    maximum of L negative-half-normal draws."""
    if int(L) != L or L < 2:
        raise ValueError("L must be an integer >= 2")
    if sigma_star <= 0:
        raise ValueError("sigma_star must be positive")
    rho = neg_half_normal_quantile(1.0 - 1.0 / L, sigma_star)
    phi = neg_half_normal_quantile(1.0 - 1.0 / (math.e * L), sigma_star) - rho
    return rho, phi


def extreme_value_mean(rho, phi):
    """Mean of the Gumbel law with location ``rho`` and scale ``phi``."""
    return rho + EULER_GAMMA * phi


def bell_q(a, zeta_s, xi_s, abar):
    return zeta_s * np.exp(-((a - abar) ** 2) / (2.0 * xi_s ** 2))


def ensemble_dominance_mc(L_values, sigma_star, q_shape=(1.0, 1.0, 0.0), trials=1_000_000,
                          rng=None, chunk=50_000):
    """Expected Q of the best of L actions drawn from ``N(abar, sigma_star^2)``.

    Every trial draws ``max(L_values)`` actions and each L uses the first L
    of them, so the per-trial values are nondecreasing in L by construction.
    Returns rows ``{"L", "expected_Q", "std_err", "gap"}`` with
    ``gap = zeta_s - expected_Q``.
    """
    L_values = sorted(int(L) for L in L_values)
    if not L_values or L_values[0] < 1:
        raise ValueError("L values must be positive integers")
    zeta_s, xi_s, abar = q_shape
    rng = np.random.default_rng() if rng is None else rng
    top = L_values[-1]
    sums = np.zeros(len(L_values))
    sq = np.zeros(len(L_values))
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        q = bell_q(abar + sigma_star * rng.standard_normal((n, top)), zeta_s, xi_s, abar)
        best = np.maximum.accumulate(q, axis=1)[:, np.array(L_values) - 1]
        sums += best.sum(axis=0)
        sq += (best * best).sum(axis=0)
        done += n
    mean = sums / trials
    var = np.maximum(sq / trials - mean * mean, 0.0)
    se = np.sqrt(var / trials)
    return [{"L": L, "expected_Q": float(m), "std_err": float(s), "gap": float(zeta_s - m)}
            for L, m, s in zip(L_values, mean, se)]


def gaussian_expected_bell(zeta_s, xi_s, sigma):
    """``E[Q(a)]`` for ``a ~ N(abar, sigma^2)``: ``zeta xi / sqrt(xi^2 + sigma^2)``."""
    return zeta_s * xi_s / math.sqrt(xi_s ** 2 + sigma ** 2)
