"""Small deterministic continuous-control tasks.

All environments take actions in ``[-1, 1]^m`` (out-of-box actions are clipped
and counted) and integrate with explicit Euler at ``dt = 0.05``.

PointMass2D
    state ``(x, y, vx, vy)``, action = force.  Starts at rest on the circle of
    radius 1.5 around the goal (origin) at a uniformly random angle.  Arena is
    the box ``[-2, 2]^2``; hitting a wall stops motion along that axis.
    ``reward = -|p| - 0.01 |a|^2``, evaluated after the move.  100 steps.
Pendulum1D
    swing-up, state ``(cos th, sin th, th_dot)``, torque ``2 a``.  Starts at
    ``th ~ U(-pi, pi)``, ``th_dot ~ U(-1, 1)``.
    ``reward = -(th^2 + 0.1 th_dot^2 + 0.001 torque^2)`` with th wrapped to
    ``[-pi, pi)``, evaluated before the move.  200 steps.
ContinuousBandit
    constant state ``(1,)``; one pull per episode, then terminal.
    ``r(a) = 0.8 exp(-(a + 0.6)^2 / 0.08) + exp(-(a - 0.7)^2 / 0.002)``: a wide
    local optimum at -0.6 and a narrow global one at 0.7.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DT = 0.05


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_dim: int
    max_episode_steps: int
    reward_bound: float
    description: str = ""


class Env:
    spec: EnvSpec

    def __init__(self):
        self.t = 0
        self.truncated = False
        self.n_clipped = 0
        self.rng = None

    @property
    def state_dim(self):
        return self.spec.state_dim

    @property
    def action_dim(self):
        return self.spec.action_dim

    def reset(self, rng):
        self.rng = rng
        self.t = 0
        self.truncated = False
        return self._reset(rng)

    def step(self, a):
        """Advance one step; returns ``(state, reward, done)``.

        After the call ``self.truncated`` tells whether ``done`` came only
        from the step limit (a time-out rather than a true terminal state).
        """
        a = np.asarray(a, dtype=np.float64).reshape(self.action_dim)
        if not np.all(np.isfinite(a)):
            raise ValueError(f"non-finite action {a}")
        if np.any(np.abs(a) > 1.0):
            self.n_clipped += 1
            a = np.clip(a, -1.0, 1.0)
        state, reward, terminal = self._step(a)
        self.t += 1
        timeout = self.t >= self.spec.max_episode_steps
        self.truncated = timeout and not terminal
        return state, float(reward), bool(terminal or timeout)

    def _reset(self, rng):
        raise NotImplementedError

    def _step(self, a):
        raise NotImplementedError


class PointMass2D(Env):
    spec = EnvSpec("pointmass2d", 4, 2, 100, 2.0 * math.sqrt(2.0) + 0.02,
                   "reach the origin; reward -distance - 0.01|a|^2")
    start_radius = 1.5
    half_width = 2.0
    force_gain = 3.0
    damping = 2.0

    def _reset(self, rng):
        angle = rng.uniform(0.0, 2.0 * math.pi)
        self.pos = self.start_radius * np.array([math.cos(angle), math.sin(angle)])
        self.vel = np.zeros(2)
        return self._obs()

    def _obs(self):
        return np.concatenate([self.pos, self.vel])

    def _step(self, a):
        pos = self.pos + DT * self.vel
        vel = self.vel + DT * (self.force_gain * a - self.damping * self.vel)
        hit = np.abs(pos) > self.half_width
        vel[hit] = 0.0
        self.pos = np.clip(pos, -self.half_width, self.half_width)
        self.vel = vel
        reward = -math.sqrt(self.pos @ self.pos) - 0.01 * float(a @ a)
        return self._obs(), reward, False


def wrap_angle(th):
    return ((th + math.pi) % (2.0 * math.pi)) - math.pi


class Pendulum1D(Env):
    spec = EnvSpec("pendulum1d", 3, 1, 200, math.pi ** 2 + 0.1 * 64.0 + 0.001 * 4.0,
                   "swing up and balance; quadratic angle/velocity/torque cost")
    g = 10.0
    mass = 1.0
    length = 1.0
    max_torque = 2.0
    max_speed = 8.0

    def _reset(self, rng):
        self.th = rng.uniform(-math.pi, math.pi)
        self.th_dot = rng.uniform(-1.0, 1.0)
        return self._obs()

    def _obs(self):
        return np.array([math.cos(self.th), math.sin(self.th), self.th_dot])

    def _step(self, a):
        torque = self.max_torque * float(a[0])
        th, th_dot = self.th, self.th_dot
        cost = wrap_angle(th) ** 2 + 0.1 * th_dot ** 2 + 0.001 * torque ** 2
        acc = (3.0 * self.g / (2.0 * self.length) * math.sin(th)
               + 3.0 / (self.mass * self.length ** 2) * torque)
        self.th = th + DT * th_dot
        self.th_dot = min(max(th_dot + DT * acc, -self.max_speed), self.max_speed)
        return self._obs(), -cost, False


def bandit_reward(a):
    a = np.asarray(a, dtype=np.float64)
    return 0.8 * np.exp(-(a + 0.6) ** 2 / 0.08) + 1.0 * np.exp(-(a - 0.7) ** 2 / 0.002)


class ContinuousBandit(Env):
    spec = EnvSpec("bandit", 1, 1, 1, 1.8,
                   "one-shot bandit; wide local optimum at -0.6, narrow global at 0.7")
    global_optimum = 0.7
    local_optimum = -0.6

    def _reset(self, rng):
        return np.ones(1)

    def _step(self, a):
        return np.ones(1), float(bandit_reward(a[0])), True


REGISTRY = {
    "pointmass2d": PointMass2D,
    "pendulum1d": Pendulum1D,
    "bandit": ContinuousBandit,
}


def make_env(name: str) -> Env:
    try:
        return REGISTRY[name.lower()]()
    except KeyError:
        raise KeyError(f"unknown environment {name!r}; known: {sorted(REGISTRY)}") from None


def list_envs():
    return [REGISTRY[k].spec for k in sorted(REGISTRY)]
