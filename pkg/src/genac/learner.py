"""Off-policy actor-critic with a general entropy bonus (SAC / TAC / RAC).

The critic is a state-value net ``V_theta`` with a Polyak-averaged target copy
and a state-action net ``Q_omega``; the actor is a tanh-squashed Gaussian
policy trained with score-function gradients.  The only thing that changes
between SAC, TAC and RAC is the entropy measure: it enters the value target
through a k-sample entropy estimate and the actor through the per-sample
weight multiplying ``grad log pi``.

Within one gradient step every gradient is evaluated at the pre-update
parameters, and the k policy samples per state (with their Q values) are
shared by the value loss and the actor gradient.
"""
from __future__ import annotations

import csv
import io
import math
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .entropy import (
    RENYI,
    SHANNON,
    TSALLIS,
    EntropyMeasure,
    estimate_entropy,
    renyi_squashed_terms,
)
from .nnet import AdamState, Mlp, adam_step, save_mlp, soft_update
from .policy import SquashedGaussianPolicy

CURVE_COLUMNS = ["step", "eval_return_mean", "eval_return_std", "v_loss", "q_loss",
                 "entropy_estimate"]

# per-algorithm defaults: (entropy kind, alpha)
ALGO_DEFAULTS = {
    "sac": (SHANNON, 1.0),
    "tac": (TSALLIS, 0.8),
    "rac": (RENYI, 0.8),
    "eac-tac": (TSALLIS, 0.6),
    "eac-rac": (RENYI, 0.6),
}
INDEX_GRID = (1.5, 2.0, 2.5)
FAST_HIDDEN = (64, 64)


class TrainingDiverged(RuntimeError):
    def __init__(self, message, step, snapshot_dir=None):
        super().__init__(f"{message} at step {step}; snapshot: {snapshot_dir}")
        self.step = step
        self.snapshot_dir = snapshot_dir


# ---------------------------------------------------------------------------
# random streams

_STREAM_IDS = {"init": 1, "env": 2, "behavior": 3, "batch": 4, "update": 5,
               "eval": 6, "select": 7, "psi": 8, "diag": 9}


def stream(seed, name, *ids):
    """Independent generator for one named consumer of randomness.

    Consumers never share a generator, so adding one (say, an ensemble's
    action-selection network) leaves every other stream untouched.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_STREAM_IDS[name], *ids))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# replay

@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    r: float
    done: bool


@dataclass(frozen=True)
class Batch:
    s: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    r: np.ndarray
    done: np.ndarray

    def __len__(self):
        return self.s.shape[0]

    def __iter__(self):
        return iter((self.s, self.a, self.s_next, self.r, self.done))

    def take(self, idx):
        return Batch(*(x[idx] for x in self))

    def replace(self, **changes):
        return replace(self, **changes)

    @classmethod
    def from_transitions(cls, transitions):
        return cls(np.array([t.s for t in transitions], dtype=np.float64),
                   np.array([t.a for t in transitions], dtype=np.float64),
                   np.array([t.s_next for t in transitions], dtype=np.float64),
                   np.array([t.r for t in transitions], dtype=np.float64),
                   np.array([t.done for t in transitions], dtype=np.float64))


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions."""

    def __init__(self, capacity, state_dim, action_dim):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, state_dim))
        self.a = np.zeros((self.capacity, action_dim))
        self.s_next = np.zeros((self.capacity, state_dim))
        self.r = np.zeros(self.capacity)
        self.done = np.zeros(self.capacity)
        self.ptr = 0
        self.size = 0
        self.n_added = 0

    def __len__(self):
        return self.size

    def add(self, s, a, s_next, r, done):
        i = self.ptr
        self.s[i], self.a[i], self.s_next[i] = s, a, s_next
        self.r[i] = r
        self.done[i] = float(done)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.n_added += 1

    def add_transition(self, t: Transition):
        self.add(t.s, t.a, t.s_next, t.r, t.done)

    def sample(self, batch_size, rng) -> Batch:
        """Uniform draw with replacement of exactly ``batch_size`` transitions."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.s[idx], self.a[idx], self.s_next[idx], self.r[idx], self.done[idx])


# ---------------------------------------------------------------------------
# configuration and agent

@dataclass
class TrainerConfig:
    entropy: EntropyMeasure = field(default_factory=EntropyMeasure.shannon)
    alpha: float = 1.0
    reward_scale: float = 3.0
    gamma: float = 0.99
    tau: float = 0.01
    k_samples: int = 9
    batch_size: int = 256
    gradient_steps: int = 1
    lr_v: float = 3e-4
    lr_q: float = 3e-4
    lr_pi: float = 3e-4
    hidden: tuple = (128, 128)
    buffer_capacity: int = 1_000_000
    warmup_steps: int = 1000
    total_steps: int = 30_000
    eval_interval: int = 1000
    eval_episodes: int = 10
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.entropy, dict):
            self.entropy = EntropyMeasure.make(self.entropy["kind"], self.entropy.get("index", 1.0))
        self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self):
        checks = [
            (self.alpha >= 0, "alpha must be >= 0"),
            (self.reward_scale > 0, "reward_scale must be > 0"),
            (0 <= self.gamma < 1, "gamma must lie in [0, 1)"),
            (0 < self.tau <= 1, "tau must lie in (0, 1]"),
            (self.k_samples >= 1, "k_samples must be >= 1"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.gradient_steps >= 1, "gradient_steps must be >= 1"),
            (min(self.lr_v, self.lr_q, self.lr_pi) > 0, "learning rates must be > 0"),
            (len(self.hidden) >= 1 and min(self.hidden) >= 1, "hidden sizes must be positive"),
            (self.buffer_capacity >= 1, "buffer_capacity must be >= 1"),
            (self.warmup_steps >= 0 and self.total_steps >= 0, "step counts must be >= 0"),
            (self.eval_interval >= 1 and self.eval_episodes >= 1, "eval settings must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @classmethod
    def for_algo(cls, algo, index=None, **overrides):
        """Per-algorithm defaults (entropy kind and alpha), then ``overrides``."""
        kind, alpha = ALGO_DEFAULTS[algo]
        if kind == SHANNON:
            entropy = EntropyMeasure.shannon()
        else:
            entropy = EntropyMeasure(kind, 2.0 if index is None else float(index))
        overrides.setdefault("alpha", alpha)
        return cls(entropy=entropy, **overrides)

    def to_dict(self):
        d = asdict(self)
        d["entropy"] = {"kind": self.entropy.kind, "index": self.entropy.index}
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class AgentState:
    policy: SquashedGaussianPolicy
    v_net: Mlp
    v_target: Mlp
    q_net: Mlp
    opt_v: AdamState
    opt_q: AdamState
    opt_pi: AdamState

    @classmethod
    def create(cls, state_dim, action_dim, cfg: TrainerConfig, rng):
        policy = SquashedGaussianPolicy.create(state_dim, action_dim, cfg.hidden, rng=rng)
        v_net = Mlp([state_dim, *cfg.hidden, 1], rng=rng)
        q_net = Mlp([state_dim + action_dim, *cfg.hidden, 1], rng=rng)
        return cls(policy, v_net, v_net.copy(), q_net,
                   AdamState.for_params(v_net.params, lr=cfg.lr_v),
                   AdamState.for_params(q_net.params, lr=cfg.lr_q),
                   AdamState.for_params(policy.net.params, lr=cfg.lr_pi))

    def nets(self):
        return {"policy": self.policy.net, "v": self.v_net, "v_target": self.v_target,
                "q": self.q_net}

    def is_finite(self):
        return all(np.all(np.isfinite(p)) for net in self.nets().values() for p in net.params)

    def save(self, directory, prefix=""):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.policy.save(directory / f"{prefix}policy.json")
        save_mlp(self.v_net, directory / f"{prefix}v.json")
        save_mlp(self.v_target, directory / f"{prefix}v_target.json")
        save_mlp(self.q_net, directory / f"{prefix}q.json")


# ---------------------------------------------------------------------------
# losses and gradients

class PolicySamples(NamedTuple):
    """k policy draws at each batch state, plus the quantities derived from them."""
    a: np.ndarray          # (B, k, m)
    u: np.ndarray          # (B, k, m)
    log_prob: np.ndarray   # (B, k)
    log_mu: np.ndarray     # (B, k) Gaussian part of log_prob


def draw_samples(policy: SquashedGaussianPolicy, states, k, rng) -> PolicySamples:
    a, u, log_prob, log_mu, _ = policy.sample_many(states, k, rng)
    return PolicySamples(a, u, log_prob, log_mu)


def q_values(q_net: Mlp, states, actions):
    """``Q(s_b, a_{b,i})`` for actions of shape ``(B, k, m)``; returns ``(B, k)``."""
    B, k, m = actions.shape
    s_rep = np.repeat(states, k, axis=0)
    x = np.concatenate([s_rep, actions.reshape(B * k, m)], axis=1)
    return q_net.forward(x).reshape(B, k)


def _renyi_integral(samples: PolicySamples, eta):
    terms = renyi_squashed_terms(samples.log_mu, samples.u, eta)
    return terms, terms.mean(axis=1)


def entropy_estimates(samples: PolicySamples, measure: EntropyMeasure):
    """Per-state entropy estimate from the shared k samples."""
    if measure.kind == RENYI:
        _, integral = _renyi_integral(samples, measure.index)
        with np.errstate(divide="ignore"):
            return estimate_entropy(samples.log_prob, measure, renyi_integral=integral)
    return estimate_entropy(samples.log_prob, measure)


def _need_samples(batch, agent, cfg, rng, samples):
    if len(batch) == 0:
        raise ValueError("empty batch")
    if samples is None:
        if rng is None:
            raise ValueError("need either rng or pre-drawn samples")
        samples = draw_samples(agent.policy, batch.s, cfg.k_samples, rng)
    return samples


def v_loss(batch: Batch, agent: AgentState, cfg: TrainerConfig, rng=None, samples=None,
           qvals=None, info=None):
    """Squared error of ``V(s)`` against ``mean_i Q(s, a_i) + alpha * H_hat``.

    Returns ``(loss, grads)`` with grads w.r.t. the value-net parameters.
    """
    samples = _need_samples(batch, agent, cfg, rng, samples)
    if qvals is None:
        qvals = q_values(agent.q_net, batch.s, samples.a)
    ent = entropy_estimates(samples, cfg.entropy)
    target = qvals.mean(axis=1) + cfg.alpha * ent
    v, cache = agent.v_net.forward_cached(batch.s)
    diff = v[:, 0] - target
    n = len(batch)
    loss = 0.5 * float(diff @ diff) / n
    grads, _ = agent.v_net.backward_cached(cache, (diff / n)[:, None], need_input_grad=False)
    if info is not None:
        info["entropy"] = float(np.mean(ent))
        info["v"] = v[:, 0]
    return loss, grads


def q_loss(batch: Batch, agent: AgentState, cfg: TrainerConfig):
    """Bellman residual of ``Q(s, a)`` against ``r + gamma (1 - done) V_target(s')``."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    target = batch.r + cfg.gamma * (1.0 - batch.done) * agent.v_target.forward(batch.s_next)[:, 0]
    q, cache = agent.q_net.forward_cached(np.concatenate([batch.s, batch.a], axis=1))
    diff = q[:, 0] - target
    n = len(batch)
    loss = 0.5 * float(diff @ diff) / n
    grads, _ = agent.q_net.backward_cached(cache, (diff / n)[:, None], need_input_grad=False)
    return loss, grads


def actor_weights(batch, agent, cfg, samples, qvals=None, v=None, measure=None):
    """Per-sample weights multiplying ``grad log pi`` in the actor estimator.

    Returns ``(weights, n_skipped)``; for Renyi, states whose integral estimate
    is not positive and finite get zero weight and are counted as skipped.
    """
    measure = cfg.entropy if measure is None else measure
    if qvals is None:
        qvals = q_values(agent.q_net, batch.s, samples.a)
    if v is None:
        v = agent.v_net.forward(batch.s)[:, 0]
    adv = qvals - v[:, None]
    alpha = cfg.alpha
    if measure.kind == SHANNON:
        return adv - alpha * samples.log_prob, 0
    if measure.kind == TSALLIS:
        q = measure.index
        q_log_pi = np.expm1((q - 1.0) * samples.log_prob) / (q - 1.0)
        return adv - alpha * q * q_log_pi, 0
    eta = measure.index
    terms, integral = _renyi_integral(samples, eta)
    ok = np.isfinite(integral) & (integral > 0)
    safe = np.where(ok, integral, 1.0)
    w = adv + alpha * eta * terms / ((1.0 - eta) * safe[:, None])
    w[~ok] = 0.0
    return w, int((~ok).sum())


def _actor_grad(batch, agent, cfg, rng, samples, kind, qvals=None, v=None, info=None):
    if cfg.entropy.kind != kind:
        raise ValueError(f"entropy kind {cfg.entropy.kind!r} does not match {kind!r} estimator")
    samples = _need_samples(batch, agent, cfg, rng, samples)
    w, skipped = actor_weights(batch, agent, cfg, samples, qvals, v)
    if info is not None:
        info["renyi_skipped"] = skipped
    w = w / (len(batch) * samples.u.shape[1])
    return agent.policy.score_backward(batch.s, samples.u, w)


def actor_grad_tsallis(batch, agent, cfg, rng=None, samples=None, **kw):
    """Ascent direction for the Tsallis objective (score-function estimate)."""
    return _actor_grad(batch, agent, cfg, rng, samples, TSALLIS, **kw)


def actor_grad_renyi(batch, agent, cfg, rng=None, samples=None, **kw):
    return _actor_grad(batch, agent, cfg, rng, samples, RENYI, **kw)


def actor_grad_shannon(batch, agent, cfg, rng=None, samples=None, **kw):
    return _actor_grad(batch, agent, cfg, rng, samples, SHANNON, **kw)


def actor_grad(batch, agent, cfg, rng=None, samples=None, **kw):
    fn = {SHANNON: actor_grad_shannon, TSALLIS: actor_grad_tsallis,
          RENYI: actor_grad_renyi}[cfg.entropy.kind]
    return fn(batch, agent, cfg, rng, samples, **kw)


def update_agent(agent: AgentState, batch: Batch, cfg: TrainerConfig, rng):
    """One gradient step: descend on both critic losses, ascend on the actor."""
    samples = draw_samples(agent.policy, batch.s, cfg.k_samples, rng)
    qvals = q_values(agent.q_net, batch.s, samples.a)
    info = {}
    lv, gv = v_loss(batch, agent, cfg, samples=samples, qvals=qvals, info=info)
    lq, gq = q_loss(batch, agent, cfg)
    g_pi = actor_grad(batch, agent, cfg, samples=samples, qvals=qvals, v=info["v"], info=info)
    if not (math.isfinite(lv) and math.isfinite(lq)):
        raise FloatingPointError(f"non-finite loss (v={lv}, q={lq})")
    adam_step(agent.v_net.params, gv, agent.opt_v, agent.v_net.param_names())
    adam_step(agent.q_net.params, gq, agent.opt_q, agent.q_net.param_names())
    adam_step(agent.policy.net.params, g_pi, agent.opt_pi, agent.policy.net.param_names(),
              maximize=True)
    soft_update(agent.v_target, agent.v_net, cfg.tau)
    return {"v_loss": lv, "q_loss": lq, "entropy": info["entropy"],
            "renyi_skipped": info["renyi_skipped"]}


# ---------------------------------------------------------------------------
# rollouts

def run_episodes(env, act, episodes, rng):
    """Returns of ``episodes`` rollouts with the deterministic map ``act(state)``."""
    returns = []
    for _ in range(episodes):
        s = env.reset(rng)
        total, done = 0.0, False
        while not done:
            s, r, done = env.step(act(s))
            total += r
        returns.append(total)
    return np.array(returns)


def random_policy_returns(env, episodes, rng):
    m = env.action_dim
    returns = []
    for _ in range(episodes):
        env.reset(rng)
        total, done = 0.0, False
        while not done:
            _, r, done = env.step(rng.uniform(-1.0, 1.0, m))
            total += r
        returns.append(total)
    return np.array(returns)


# ---------------------------------------------------------------------------
# learning curves

@dataclass
class LearningCurve:
    columns: list = field(default_factory=lambda: list(CURVE_COLUMNS))
    rows: list = field(default_factory=list)

    def append(self, row):
        self.rows.append({c: row.get(c, float("nan")) for c in self.columns})

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=np.float64)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def write_csv(self, path):
        Path(path).write_text(self.to_csv(), newline="")

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            cols = next(reader)
            curve = cls(columns=cols)
            for rec in reader:
                curve.rows.append({c: _parse(v) for c, v in zip(cols, rec)})
        return curve


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _parse(text):
    return int(text) if text.lstrip("-").isdigit() else float(text)


class _Meter:
    def __init__(self):
        self.sums = {}
        self.n = 0

    def add(self, stats):
        for k, v in stats.items():
            self.sums[k] = self.sums.get(k, 0.0) + float(v)
        self.n += 1

    def mean(self, key):
        return self.sums[key] / self.n if self.n else float("nan")

    def reset(self):
        self.sums, self.n = {}, 0


@dataclass
class TrainResult:
    curve: LearningCurve
    agent: object
    renyi_skipped: int = 0


def _diagnose(agent, step, exc, snapshot_dir):
    snap = Path(snapshot_dir) if snapshot_dir else Path(tempfile.mkdtemp(prefix="genac-diverged-"))
    try:
        agent.save(snap)
    except Exception:  # snapshot is best effort; the original failure matters more
        pass
    raise TrainingDiverged(str(exc), step, snap) from exc


def train(env, cfg: TrainerConfig, eval_env=None, snapshot_dir=None, progress=None) -> TrainResult:
    """Concurrent actor/critic training on ``env``.

    Every ``cfg.eval_interval`` environment steps the deterministic (mean
    action) policy is rolled out ``cfg.eval_episodes`` times on a separate
    environment instance, with unscaled rewards, and a curve row is appended.
    """
    cfg.validate()
    eval_env = type(env)() if eval_env is None else eval_env
    seed = cfg.seed
    agent = AgentState.create(env.state_dim, env.action_dim, cfg, stream(seed, "init", 0))
    curve = LearningCurve()
    if cfg.total_steps == 0:
        return TrainResult(curve, agent)
    buffer = ReplayBuffer(min(cfg.buffer_capacity, cfg.total_steps), env.state_dim, env.action_dim)
    env_rng, act_rng = stream(seed, "env"), stream(seed, "behavior")
    batch_rng, upd_rng = stream(seed, "batch"), stream(seed, "update", 0)
    eval_rng = stream(seed, "eval")
    meter = _Meter()
    skipped = 0
    s = env.reset(env_rng)
    for t in range(1, cfg.total_steps + 1):
        if t <= cfg.warmup_steps:
            a = act_rng.uniform(-1.0, 1.0, env.action_dim)
        else:
            a, _, _ = agent.policy.sample(s, act_rng)
        s2, r, done = env.step(a)
        buffer.add(s, a, s2, r * cfg.reward_scale, done and not env.truncated)
        s = env.reset(env_rng) if done else s2
        if t > cfg.warmup_steps and len(buffer) >= cfg.batch_size:
            for _ in range(cfg.gradient_steps):
                batch = buffer.sample(cfg.batch_size, batch_rng)
                try:
                    stats = update_agent(agent, batch, cfg, upd_rng)
                except FloatingPointError as exc:
                    _diagnose(agent, t, exc, snapshot_dir)
                skipped += stats.pop("renyi_skipped")
                meter.add(stats)
        if t % cfg.eval_interval == 0:
            returns = run_episodes(eval_env, agent.policy.mean_action, cfg.eval_episodes, eval_rng)
            curve.append({"step": t, "eval_return_mean": float(returns.mean()),
                          "eval_return_std": float(returns.std()),
                          "v_loss": meter.mean("v_loss"), "q_loss": meter.mean("q_loss"),
                          "entropy_estimate": meter.mean("entropy")})
            meter.reset()
            if progress is not None:
                progress(curve.rows[-1])
    return TrainResult(curve, agent, skipped)
