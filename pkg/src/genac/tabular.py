"""Exact entropy-regularized policy iteration on finite MDPs.

Used to check the theory behind the learners: the entropy-augmented Bellman
backup is a gamma-contraction, the maximization-form policy improvement never
decreases Q, and policy iteration converges.  Everything is vectorized over
states; the improvement step solves one small simplex-constrained concave
(or, for Renyi with eta > 1, quasi-concave) problem per state with
exponentiated-gradient ascent.

JSON schema for MDP files::

    {"n_states": S, "n_actions": A,
     "P": [S*A*S floats, row-major over (s, a, s')],
     "r": [S*A floats, row-major over (s, a)],
     "gamma": g}
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .entropy import RENYI, SHANNON, TSALLIS, EntropyMeasure, discrete_entropy

SIMPLEX_ATOL = 1e-12
IMPROVE_TOL = 1e-8
IMPROVE_MAX_ITER = 10_000
LOG_FLOOR = 1e-300
WARM_MIX = 1e-9
MAX_SCALE = 1e12
MIN_STEP = 1e-20
MIN_IMPROVE_TOL = 1e-13


class ImprovementError(RuntimeError):
    def __init__(self, residual, iterations):
        super().__init__(f"policy improvement did not reach stationarity after "
                         f"{iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class MonotonicityViolation(RuntimeError):
    pass


@dataclass
class TabularMdp:
    P: np.ndarray
    r: np.ndarray
    gamma: float

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        self.r = np.asarray(self.r, dtype=np.float64)
        self.gamma = float(self.gamma)
        if self.P.ndim != 3 or self.P.shape[0] != self.P.shape[2]:
            raise ValueError(f"P must have shape (S, A, S), got {self.P.shape}")
        if self.r.shape != self.P.shape[:2]:
            raise ValueError(f"r must have shape {self.P.shape[:2]}, got {self.r.shape}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if np.any(self.P < 0) or np.any(np.abs(self.P.sum(axis=2) - 1.0) > 1e-12):
            raise ValueError("each P(s, a, .) must be a distribution (within 1e-12)")
        if not np.all(np.isfinite(self.r)):
            raise ValueError("rewards must be finite")

    @property
    def n_states(self):
        return self.P.shape[0]

    @property
    def n_actions(self):
        return self.P.shape[1]

    def to_dict(self):
        return {"n_states": self.n_states, "n_actions": self.n_actions,
                "P": self.P.ravel().tolist(), "r": self.r.ravel().tolist(),
                "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d):
        S, A = int(d["n_states"]), int(d["n_actions"])
        return cls(np.asarray(d["P"], dtype=np.float64).reshape(S, A, S),
                   np.asarray(d["r"], dtype=np.float64).reshape(S, A), d["gamma"])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def random_mdp(n_states, n_actions, gamma, rng, reward_range=1.0):
    """Dirichlet(1) transitions and uniform rewards in ``[-reward_range, reward_range]``."""
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    P /= P.sum(axis=2, keepdims=True)
    r = rng.uniform(-reward_range, reward_range, (n_states, n_actions))
    return TabularMdp(P, r, gamma)


@dataclass
class TabularPolicy:
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise ValueError("policy must be an (S, A) matrix")
        if (np.any(self.probs < 0) or not np.all(np.isfinite(self.probs))
                or np.any(np.abs(self.probs.sum(axis=1) - 1.0) > SIMPLEX_ATOL)):
            raise ValueError("policy rows must lie on the simplex (within 1e-12)")

    @classmethod
    def uniform(cls, n_states, n_actions):
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def greedy(cls, Q):
        """Uniform over the argmax set of each row."""
        Q = np.asarray(Q, dtype=np.float64)
        best = Q >= Q.max(axis=1, keepdims=True)
        return cls(best / best.sum(axis=1, keepdims=True))


def _normalize(p):
    return p / p.sum(axis=-1, keepdims=True)


def soft_values(policy: TabularPolicy, Q, measure: EntropyMeasure, alpha):
    """``V(s) = sum_a pi(s,a) Q(s,a) + alpha * H(pi(s,.))``."""
    v = (policy.probs * Q).sum(axis=1)
    if alpha:
        v = v + alpha * discrete_entropy(policy.probs, measure)
    return v


def bellman_backup(mdp: TabularMdp, policy: TabularPolicy, Q, measure: EntropyMeasure, alpha):
    Q = np.asarray(Q, dtype=np.float64)
    if Q.shape != mdp.r.shape or policy.probs.shape != mdp.r.shape:
        raise ValueError("Q, policy and MDP shapes disagree")
    return mdp.r + mdp.gamma * mdp.P @ soft_values(policy, Q, measure, alpha)


def corrupted_backup(mdp, policy, Q, measure, alpha):
    """Deliberately broken backup (expansive); used to check that audits catch faults."""
    return bellman_backup(mdp, policy, Q, measure, alpha) + 0.5 * np.asarray(Q)


@dataclass
class Evaluation:
    Q: np.ndarray
    iterations: int
    deltas: list = field(default_factory=list)


def evaluate(mdp: TabularMdp, policy: TabularPolicy, measure: EntropyMeasure, alpha,
             tol=1e-10, max_iter=1_000_000, backup=bellman_backup, Q0=None) -> Evaluation:
    """Iterate the backup from ``Q0`` (zeros) to a sup-norm error of ``tol``.

    Stops once successive iterates differ by at most ``tol (1 - gamma) / gamma``,
    which bounds the distance to the fixed point by ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    Q = np.zeros_like(mdp.r) if Q0 is None else np.array(Q0, dtype=np.float64)
    g = mdp.gamma
    stop = tol * (1.0 - g) / g if g > 0 else np.inf
    deltas = []
    for it in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            Q_new = backup(mdp, policy, Q, measure, alpha)
            delta = float(np.max(np.abs(Q_new - Q)))
        deltas.append(delta)
        Q = Q_new
        if delta <= stop:
            return Evaluation(Q, it, deltas)
        if not np.isfinite(delta):
            break
    raise RuntimeError(f"policy evaluation did not converge (last change {deltas[-1]:.3e})")


def _objective_and_grad(p, Q, measure, alpha):
    """Per-row objective ``p.Q + alpha H(p)`` and its gradient in ``p``."""
    f = (p * Q).sum(axis=1)
    if alpha == 0:
        return f, Q.copy()
    kind, k = measure.kind, measure.index
    safe = np.maximum(p, LOG_FLOOR)
    if kind == SHANNON:
        logp = np.log(safe)
        H = -(np.where(p > 0, p * logp, 0.0)).sum(axis=1)
        dH = -logp - 1.0
    elif kind == TSALLIS:
        pk = p ** k
        H = (p - pk).sum(axis=1) / (k - 1.0)
        dH = (1.0 - k * p ** (k - 1.0)) / (k - 1.0)
    else:
        s = np.maximum((p ** k).sum(axis=1, keepdims=True), LOG_FLOOR)
        H = np.log(s[:, 0]) / (1.0 - k)
        dH = k * p ** (k - 1.0) / ((1.0 - k) * s)
    return f + alpha * H, Q + alpha * dH


def _precondition(p, measure, alpha):
    """Per-coordinate step scale: inverse of ``p_i * |d^2 f / dp_i^2|`` (diagonal part).

    This is the exponentiated-gradient analogue of a diagonal Newton step.
    It equals ``1 / alpha`` for Shannon entropy and grows without bound for
    vanishing coordinates under Tsallis/Renyi, which is what lets those
    coordinates reach zero quickly.
    """
    k = measure.index
    if measure.kind == SHANNON:
        return np.full_like(p, 1.0 / alpha)
    log_scale = -(k - 1.0) * np.log(np.maximum(p, LOG_FLOOR)) - math.log(alpha * k)
    if measure.kind == RENYI:
        log_scale = log_scale + np.log((p ** k).sum(axis=1, keepdims=True))
    return np.exp(np.minimum(log_scale, math.log(MAX_SCALE / alpha)))


def _eg_step(p, g, step, scale):
    """Preconditioned exponentiated-gradient candidate and ``log(c / p)``.

    With ``mu`` the ``p * scale``-weighted mean of ``g`` the direction is an
    ascent direction; everything is written so that tiny steps stay accurate.
    """
    w = p * scale
    mu = (w * g).sum(axis=1, keepdims=True) / w.sum(axis=1, keepdims=True)
    d = g - mu
    e = step[:, None] * scale * d
    e_max = e.max(axis=1, keepdims=True)
    big = e_max > 1.0
    # log sum p exp(e): log1p form is exact for small exponents
    with np.errstate(over="ignore"):
        log_z_small = np.log1p((p * np.expm1(np.minimum(e, 1.0))).sum(axis=1, keepdims=True))
    log_z_big = e_max + np.log((p * np.exp(e - e_max)).sum(axis=1, keepdims=True))
    log_ratio = e - np.where(big, log_z_big, log_z_small)
    # keep every coordinate representable so none is lost for good
    log_ratio = np.maximum(log_ratio, math.log(LOG_FLOOR) - np.log(p))
    c = p * np.exp(log_ratio)
    return c / c.sum(axis=1, keepdims=True), log_ratio, d


def _pow_diff(p, log_ratio, k):
    """``c**k - p**k`` for ``c = p * exp(log_ratio)``."""
    lr = np.minimum(log_ratio, 1.0)
    small = np.where(p > 0, p ** k * np.expm1(k * lr), 0.0)
    large = (p * np.exp(log_ratio)) ** k - p ** k
    return np.where(log_ratio > 1.0, large, small)


def _gain(p, log_ratio, Q, measure, alpha):
    """``f(c) - f(p)`` for ``c = p * exp(log_ratio)``, free of cancellation."""
    dp = np.where(p > 0, p * np.expm1(log_ratio), 0.0)
    gain = (dp * Q).sum(axis=1)
    if alpha == 0:
        return gain
    kind, k = measure.kind, measure.index
    if kind == SHANNON:
        # -sum (c log c - p log p) = -sum [dp log p + c log(c/p)]
        logp = np.log(np.maximum(p, LOG_FLOOR))
        dH = -(dp * logp + np.where(p > 0, (p + dp) * log_ratio, 0.0)).sum(axis=1)
    elif kind == TSALLIS:
        dH = (dp - _pow_diff(p, log_ratio, k)).sum(axis=1) / (k - 1.0)
    else:
        sp = np.maximum((p ** k).sum(axis=1), LOG_FLOOR)
        dpk = _pow_diff(p, log_ratio, k).sum(axis=1)
        dH = np.log1p(dpk / sp) / (1.0 - k)
    return gain + alpha * dH


def _fw_step(p, g, Q, measure, alpha, max_halvings=60):
    """Frank-Wolfe move toward the best vertex, for rows stuck at a face.

    Multiplicative updates cannot revive a coordinate sitting at the float
    floor, so a row whose exponentiated-gradient step collapses (typically at
    a vertex of the simplex under Renyi entropy, which is not concave) takes
    ``p + t (e_j - p)`` with ``j = argmax g`` instead, halving ``t`` until the
    objective strictly increases.  Returns the new rows and an accept mask.
    """
    f0 = _objective_and_grad(p, Q, measure, alpha)[0]
    vertex = np.zeros_like(p)
    vertex[np.arange(len(p)), np.argmax(g, axis=1)] = 1.0
    out, ok = p.copy(), np.zeros(len(p), dtype=bool)
    t = 1.0
    for _ in range(max_halvings):
        todo = ~ok
        if not todo.any():
            break
        cand = p[todo] + t * (vertex[todo] - p[todo])
        gain = _objective_and_grad(cand, Q[todo], measure, alpha)[0] - f0[todo]
        good = gain > 0
        idx = np.flatnonzero(todo)[good]
        out[idx], ok[idx] = cand[good], True
        t *= 0.5
    return out, ok


def stationarity(p, g):
    """KKT residual on the simplex: ``max_i p_i |g_i - gbar| + max(0, max_i g_i - gbar)``."""
    gbar = (p * g).sum(axis=1, keepdims=True)
    return (np.max(p * np.abs(g - gbar), axis=1)
            + np.maximum(0.0, np.max(g - gbar, axis=1)))


@dataclass
class Improvement:
    policy: TabularPolicy
    iterations: int
    residual: float


def improve(mdp: TabularMdp, Q, measure: EntropyMeasure, alpha, tol=IMPROVE_TOL,
            init=None, max_iter=IMPROVE_MAX_ITER, return_info=False):
    """Per-state maximizer of ``sum_a pi(a) Q(s,a) + alpha H(pi)`` over the simplex.

    Exponentiated-gradient ascent with per-state backtracking, started from
    ``init`` (uniform if omitted).
    Every accepted step increases each state's objective, so a warm start
    from the current policy can only improve on it.  For Shannon entropy the
    first full step lands exactly on ``softmax(Q / alpha)``.

    Raises `ImprovementError` when the stationarity residual is still above
    ``tol`` after ``max_iter`` iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    Q = np.asarray(Q, dtype=np.float64)
    S, A = Q.shape
    if alpha == 0:
        pol = TabularPolicy.greedy(Q)
        return Improvement(pol, 0, 0.0) if return_info else pol
    p = (np.full((S, A), 1.0 / A) if init is None
         else np.array(getattr(init, "probs", init), dtype=np.float64))
    # a warm start may carry (near-)zero entries that multiplicative updates
    # could never revive; mixing in a sliver of uniform costs at most
    # WARM_MIX * (max Q - min Q + alpha * entropy range) in objective
    p = (1.0 - WARM_MIX) * p + WARM_MIX / A
    step = np.ones(S)
    _, g = _objective_and_grad(p, Q, measure, alpha)
    res = stationarity(p, g)
    it = 0
    while np.any(res > tol) and it < max_iter:
        it += 1
        active = np.flatnonzero(res > tol)
        pa, ga, sa, Qa = p[active], g[active], step[active], Q[active]
        accepted = np.zeros(len(active), dtype=bool)
        for _ in range(100):
            todo = np.flatnonzero(~accepted)
            if len(todo) == 0:
                break
            scale = _precondition(pa[todo], measure, alpha)
            cand, log_ratio, d = _eg_step(pa[todo], ga[todo], sa[todo], scale)
            gain = _gain(pa[todo], log_ratio, Qa[todo], measure, alpha)
            slope = ((cand - pa[todo]) * d).sum(axis=1)
            ok = gain >= 1e-4 * slope
            hit = todo[ok]
            pa[hit] = cand[ok]
            ga[hit] = _objective_and_grad(cand[ok], Qa[hit], measure, alpha)[1]
            accepted[hit] = True
            sa[todo[~ok]] *= 0.5
        sa[accepted] *= 1.5
        stuck = np.flatnonzero(sa < MIN_STEP)
        if len(stuck):
            moved, ok = _fw_step(pa[stuck], ga[stuck], Qa[stuck], measure, alpha)
            hit = stuck[ok]
            pa[hit] = moved[ok]
            ga[hit] = _objective_and_grad(moved[ok], Qa[hit], measure, alpha)[1]
            sa[stuck] = 1.0
        p[active], g[active], step[active] = pa, ga, sa
        res[active] = stationarity(pa, ga)
    residual = float(res.max())
    if residual > tol:
        raise ImprovementError(residual, it)
    pol = TabularPolicy(_normalize(p))
    return Improvement(pol, it, residual) if return_info else pol


def softmax_policy(Q, alpha):
    """Boltzmann policy ``softmax(Q / alpha)``: the KL-projection route for Shannon entropy."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    z = np.asarray(Q, dtype=np.float64) / alpha
    z = np.exp(z - z.max(axis=1, keepdims=True))
    return TabularPolicy(z / z.sum(axis=1, keepdims=True))


@dataclass
class AuditEntry:
    iteration: int
    q_change: float
    min_gain: float
    eval_iterations: int
    improve_iterations: int


@dataclass
class PolicyIterationResult:
    policy: TabularPolicy
    Q: np.ndarray
    audit: list


def policy_iteration(mdp: TabularMdp, measure: EntropyMeasure, alpha, tol=1e-8,
                     max_iter=500, monotone_tol=1e-6, backup=bellman_backup,
                     improve_tol=None, eval_tol=None) -> PolicyIterationResult:
    """Alternate evaluation and improvement until successive Q's differ by < ``tol``.

    Each iteration records the smallest per-entry gain ``min(Q_new - Q_old)``;
    a gain below ``-monotone_tol`` raises `MonotonicityViolation`.  An inexact
    improvement step perturbs Q by about ``gamma / (1 - gamma)`` times its
    residual, so the default ``improve_tol`` shrinks with ``tol (1 - gamma)``.
    """
    eval_tol = tol * 1e-2 if eval_tol is None else eval_tol
    if improve_tol is None:
        improve_tol = min(IMPROVE_TOL, max(MIN_IMPROVE_TOL, 0.1 * tol * (1.0 - mdp.gamma)))
    S, A = mdp.r.shape
    pi = TabularPolicy.uniform(S, A)
    Q = evaluate(mdp, pi, measure, alpha, tol=eval_tol, backup=backup).Q
    audit = []
    for it in range(1, max_iter + 1):
        imp = improve(mdp, Q, measure, alpha, tol=improve_tol, init=pi, return_info=True)
        ev = evaluate(mdp, imp.policy, measure, alpha, tol=eval_tol, backup=backup, Q0=Q)
        diff = ev.Q - Q
        entry = AuditEntry(it, float(np.max(np.abs(diff))), float(diff.min()),
                           ev.iterations, imp.iterations)
        audit.append(entry)
        if entry.min_gain < -monotone_tol:
            raise MonotonicityViolation(
                f"Q decreased by {-entry.min_gain:.3e} at iteration {it}")
        pi, Q = imp.policy, ev.Q
        if entry.q_change < tol:
            return PolicyIterationResult(pi, Q, audit)
    raise RuntimeError(f"policy iteration did not converge in {max_iter} iterations")


def contraction_ratio(mdp, policy, Q1, Q2, measure, alpha, backup=bellman_backup):
    """``|T Q1 - T Q2|_inf / |Q1 - Q2|_inf`` for the backup under ``policy``."""
    num = np.max(np.abs(backup(mdp, policy, Q1, measure, alpha)
                        - backup(mdp, policy, Q2, measure, alpha)))
    den = np.max(np.abs(np.asarray(Q1) - np.asarray(Q2)))
    return float(num / den)


# ---------------------------------------------------------------------------
# property suite shared by the CLI

SUITE_MEASURES = (EntropyMeasure.shannon(), EntropyMeasure(TSALLIS, 1.5),
                  EntropyMeasure(TSALLIS, 2.0), EntropyMeasure(RENYI, 1.5),
                  EntropyMeasure(RENYI, 2.0))


@dataclass
class PropertyResult:
    name: str
    passed: bool
    checked: int
    detail: str = ""


def run_property_suite(seeds=range(100), max_states=8, max_actions=4, measures=SUITE_MEASURES,
                       alpha=0.5, backup=bellman_backup, contraction_pairs=10):
    """Contraction, monotone improvement, convergence and softmax/maximization agreement.

    Sizes and discount factors are drawn per seed; every fifth seed uses
    ``gamma = 0`` so the edge case is always exercised.
    """
    stats = {k: [0, 0, ""] for k in ("contraction", "monotone_improvement", "convergence",
                                     "softmax_equivalence")}

    def record(name, ok, why=""):
        stats[name][1] += 1
        if not ok:
            stats[name][0] += 1
            stats[name][2] = stats[name][2] or why

    for seed in seeds:
        rng = np.random.default_rng(seed)
        S = int(rng.integers(1, max_states + 1))
        A = int(rng.integers(2, max_actions + 1))
        gamma = 0.0 if seed % 5 == 0 else float(rng.uniform(0.5, 0.95))
        mdp = random_mdp(S, A, gamma, rng)
        for m in measures:
            pi = TabularPolicy(rng.dirichlet(np.ones(A), size=S))
            worst = 0.0
            for _ in range(contraction_pairs):
                Q1, Q2 = rng.normal(0, 5, (2, S, A))
                worst = max(worst, contraction_ratio(mdp, pi, Q1, Q2, m, alpha, backup))
            record("contraction", worst <= gamma + 1e-12,
                   f"seed {seed} {m.label()}: ratio {worst:.4f} > gamma {gamma:.4f}")
            try:
                res = policy_iteration(mdp, m, alpha, backup=backup)
                record("monotone_improvement", True)
                record("convergence", res.audit[-1].q_change < 1e-8)
            except MonotonicityViolation as exc:
                record("monotone_improvement", False, f"seed {seed} {m.label()}: {exc}")
            except (RuntimeError, FloatingPointError) as exc:
                record("convergence", False, f"seed {seed} {m.label()}: {exc}")
            if m.kind == SHANNON:
                try:
                    Q = evaluate(mdp, pi, m, alpha, backup=backup).Q
                    a = evaluate(mdp, softmax_policy(Q, alpha), m, alpha, backup=backup).Q
                    b = evaluate(mdp, improve(mdp, Q, m, alpha), m, alpha, backup=backup).Q
                    gap = float(np.max(np.abs(a - b)))
                    record("softmax_equivalence", gap <= 1e-6, f"seed {seed}: gap {gap:.3e}")
                except RuntimeError as exc:
                    record("softmax_equivalence", False, f"seed {seed}: {exc}")
    return [PropertyResult(k, v[0] == 0, v[1], v[2]) for k, v in stats.items()]
