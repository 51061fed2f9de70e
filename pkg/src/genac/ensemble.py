"""Ensemble actor-critic: L TAC/RAC agents sharing one replay buffer.

Behaviour follows one member per episode, drawn uniformly (bootstrap-style
deep exploration).  All members learn from the same batch at every step.  An
entropy-free action-selection network ``Q_psi`` is trained alongside with the
bootstrap target ``r + gamma * max_i Q_psi_target(s', b_i)``, where ``b_i`` is
one action drawn from member i at ``s'``; at test time each member proposes
its mean action and the proposal with the highest ``Q_psi`` is executed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .entropy import RENYI, TSALLIS, EntropyMeasure
from .learner import (
    CURVE_COLUMNS,
    INDEX_GRID,
    AgentState,
    Batch,
    LearningCurve,
    ReplayBuffer,
    TrainerConfig,
    TrainResult,
    _Meter,
    _diagnose,
    q_values,
    run_episodes,
    stream,
    update_agent,
)
from .nnet import AdamState, Mlp, adam_step, save_mlp, soft_update


@dataclass
class EnsembleConfig:
    trainer: TrainerConfig = field(
        default_factory=lambda: TrainerConfig.for_algo("eac-tac", index=1.5))
    size: int = 6
    indices: tuple = ()

    def __post_init__(self):
        if isinstance(self.trainer, dict):
            self.trainer = TrainerConfig.from_dict(self.trainer)
        if self.size < 1:
            raise ValueError("ensemble size must be >= 1")
        if self.trainer.entropy.kind not in (TSALLIS, RENYI):
            raise ValueError("ensemble members are trained with Tsallis or Renyi entropy")
        if not self.indices:
            self.indices = tuple(INDEX_GRID[i % len(INDEX_GRID)] for i in range(self.size))
        self.indices = tuple(float(x) for x in self.indices)
        if len(self.indices) != self.size:
            raise ValueError("need one entropic index per member")

    def member_config(self, i) -> TrainerConfig:
        kind = self.trainer.entropy.kind
        return replace(self.trainer, entropy=EntropyMeasure(kind, self.indices[i]))

    def to_dict(self):
        return {"trainer": self.trainer.to_dict(), "size": self.size,
                "indices": list(self.indices)}

    @classmethod
    def from_dict(cls, d):
        return cls(trainer=TrainerConfig.from_dict(d["trainer"]), size=d["size"],
                   indices=tuple(d["indices"]))


@dataclass
class EnsembleAgent:
    members: list
    configs: list
    q_psi: Mlp
    q_psi_target: Mlp
    opt_psi: AdamState
    active_member: int = 0

    @property
    def size(self):
        return len(self.members)

    @classmethod
    def create(cls, state_dim, action_dim, ecfg: EnsembleConfig, seed):
        cfgs = [ecfg.member_config(i) for i in range(ecfg.size)]
        members = [AgentState.create(state_dim, action_dim, c, stream(seed, "init", i))
                   for i, c in enumerate(cfgs)]
        q_psi = Mlp([state_dim + action_dim, *ecfg.trainer.hidden, 1],
                    rng=stream(seed, "psi", 0))
        return cls(members, cfgs, q_psi, q_psi.copy(),
                   AdamState.for_params(q_psi.params, lr=ecfg.trainer.lr_q))

    def save(self, directory):
        for i, m in enumerate(self.members):
            m.save(directory, prefix=f"member{i}_")
        save_mlp(self.q_psi, f"{directory}/q_psi.json")
        save_mlp(self.q_psi_target, f"{directory}/q_psi_target.json")


def select_member(rng, size):
    """Uniform choice of the member that acts for a whole episode."""
    if size < 1:
        raise ValueError("empty ensemble")
    return int(rng.integers(size))


def sample_member_actions(ens: EnsembleAgent, states, rng):
    """One action per member at each state: shape ``(B, L, m)``."""
    acts = [m.policy.sample_many(states, 1, rng)[0][:, 0, :] for m in ens.members]
    return np.stack(acts, axis=1)


def q_psi_loss(batch: Batch, ens: EnsembleAgent, gamma, rng=None, next_actions=None):
    """Entropy-free Bellman residual for the action-selection network.

    ``next_actions`` (shape ``(B, L, m)``) may be given to freeze the member
    draws at ``s'``; otherwise one draw per member is taken from ``rng``.
    Returns ``(loss, grads)``.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    if next_actions is None:
        next_actions = sample_member_actions(ens, batch.s_next, rng)
    boot = q_values(ens.q_psi_target, batch.s_next, next_actions).max(axis=1)
    target = batch.r + gamma * (1.0 - batch.done) * boot
    q, cache = ens.q_psi.forward_cached(np.concatenate([batch.s, batch.a], axis=1))
    diff = q[:, 0] - target
    n = len(batch)
    loss = 0.5 * float(diff @ diff) / n
    grads, _ = ens.q_psi.backward_cached(cache, (diff / n)[:, None], need_input_grad=False)
    return loss, grads


def recommendations(ens: EnsembleAgent, s):
    return np.stack([m.policy.mean_action(s) for m in ens.members])


def test_action(ens: EnsembleAgent, s):
    """Member mean action with the highest ``Q_psi``; ties go to the lowest index."""
    s = np.asarray(s, dtype=np.float64)
    props = recommendations(ens, s)
    x = np.concatenate([np.broadcast_to(s, (len(props), s.size)), props], axis=1)
    return props[int(np.argmax(ens.q_psi.forward(x)[:, 0]))]


def update_q_psi(ens: EnsembleAgent, batch, cfg: TrainerConfig, rng):
    loss, grads = q_psi_loss(batch, ens, cfg.gamma, rng)
    if not math.isfinite(loss):
        raise FloatingPointError(f"non-finite Q_psi loss {loss}")
    adam_step(ens.q_psi.params, grads, ens.opt_psi, ens.q_psi.param_names())
    soft_update(ens.q_psi_target, ens.q_psi, cfg.tau)
    return loss


def ensemble_columns(size):
    return list(CURVE_COLUMNS) + [f"member_{i}_q_loss" for i in range(size)] + ["q_psi_loss"]


def train_ensemble(env, ecfg: EnsembleConfig, eval_env=None, snapshot_dir=None,
                   progress=None) -> TrainResult:
    cfg = ecfg.trainer
    cfg.validate()
    eval_env = type(env)() if eval_env is None else eval_env
    seed, L = cfg.seed, ecfg.size
    ens = EnsembleAgent.create(env.state_dim, env.action_dim, ecfg, seed)
    curve = LearningCurve(columns=ensemble_columns(L))
    if cfg.total_steps == 0:
        return TrainResult(curve, ens)
    buffer = ReplayBuffer(min(cfg.buffer_capacity, cfg.total_steps), env.state_dim, env.action_dim)
    env_rng, act_rng = stream(seed, "env"), stream(seed, "behavior")
    batch_rng, eval_rng = stream(seed, "batch"), stream(seed, "eval")
    select_rng, psi_rng = stream(seed, "select"), stream(seed, "psi", 1)
    upd_rngs = [stream(seed, "update", i) for i in range(L)]
    meter = _Meter()
    skipped = 0
    s = env.reset(env_rng)
    ens.active_member = select_member(select_rng, L)
    for t in range(1, cfg.total_steps + 1):
        if t <= cfg.warmup_steps:
            a = act_rng.uniform(-1.0, 1.0, env.action_dim)
        else:
            a, _, _ = ens.members[ens.active_member].policy.sample(s, act_rng)
        s2, r, done = env.step(a)
        buffer.add(s, a, s2, r * cfg.reward_scale, done and not env.truncated)
        if done:
            s = env.reset(env_rng)
            ens.active_member = select_member(select_rng, L)
        else:
            s = s2
        if t > cfg.warmup_steps and len(buffer) >= cfg.batch_size:
            for _ in range(cfg.gradient_steps):
                batch = buffer.sample(cfg.batch_size, batch_rng)
                row = {}
                try:
                    member_stats = [update_agent(m, batch, c, rng) for m, c, rng
                                    in zip(ens.members, ens.configs, upd_rngs)]
                    row["q_psi_loss"] = update_q_psi(ens, batch, cfg, psi_rng)
                except FloatingPointError as exc:
                    _diagnose(ens, t, exc, snapshot_dir)
                for i, st in enumerate(member_stats):
                    skipped += st["renyi_skipped"]
                    row[f"member_{i}_q_loss"] = st["q_loss"]
                row["v_loss"] = np.mean([st["v_loss"] for st in member_stats])
                row["q_loss"] = np.mean([st["q_loss"] for st in member_stats])
                row["entropy"] = np.mean([st["entropy"] for st in member_stats])
                meter.add(row)
        if t % cfg.eval_interval == 0:
            returns = run_episodes(eval_env, lambda x: test_action(ens, x),
                                   cfg.eval_episodes, eval_rng)
            rec = {"step": t, "eval_return_mean": float(returns.mean()),
                   "eval_return_std": float(returns.std()),
                   "v_loss": meter.mean("v_loss"), "q_loss": meter.mean("q_loss"),
                   "entropy_estimate": meter.mean("entropy"),
                   "q_psi_loss": meter.mean("q_psi_loss")}
            for i in range(L):
                rec[f"member_{i}_q_loss"] = meter.mean(f"member_{i}_q_loss")
            curve.append(rec)
            meter.reset()
            if progress is not None:
                progress(curve.rows[-1])
    return TrainResult(curve, ens, skipped)


def evaluate_members(ens: EnsembleAgent, env, episodes, seed):
    """Paired evaluation: each member's mean-action policy and the ``Q_psi``
    selector, all on the same sequence of initial states."""
    out = {}
    for i, m in enumerate(ens.members):
        out[f"member_{i}"] = run_episodes(env, m.policy.mean_action, episodes,
                                          np.random.default_rng(seed))
    out["ensemble"] = run_episodes(env, lambda x: test_action(ens, x), episodes,
                                   np.random.default_rng(seed))
    return out
