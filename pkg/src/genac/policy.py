"""Tanh-squashed diagonal Gaussian policy on top of an `Mlp`.

The network maps a state to ``2m`` numbers: the mean of the internal action
``u`` followed by its (clamped) log standard deviation.  Actions are
``a = tanh(u)`` and the density of ``a`` picks up the inverse tanh Jacobian.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .entropy import LOG_2PI, DiagonalGaussian, log_tanh_jacobian
from .nnet import Mlp, ShapeError, mlp_from_dict, save_mlp

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
ACTION_EPS = 1e-9


class SquashedGaussianPolicy:
    def __init__(self, net: Mlp, action_dim: int, log_std_min=LOG_STD_MIN,
                 log_std_max=LOG_STD_MAX):
        if net.n_out != 2 * action_dim:
            raise ShapeError(f"policy net must emit {2 * action_dim} outputs, has {net.n_out}")
        self.net = net
        self.action_dim = int(action_dim)
        self.log_std_min = float(log_std_min)
        self.log_std_max = float(log_std_max)

    @classmethod
    def create(cls, state_dim, action_dim, hidden=(128, 128), rng=None):
        net = Mlp([state_dim, *hidden, 2 * action_dim], rng=rng)
        return cls(net, action_dim)

    @property
    def state_dim(self):
        return self.net.n_in

    def copy(self):
        return SquashedGaussianPolicy(self.net.copy(), self.action_dim,
                                      self.log_std_min, self.log_std_max)

    def _split(self, out):
        m = self.action_dim
        mean = out[..., :m]
        raw = out[..., m:]
        log_std = np.clip(raw, self.log_std_min, self.log_std_max)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(raw))):
            raise FloatingPointError("policy network produced non-finite output")
        return mean, log_std, raw

    def heads(self, s):
        """Mean and clamped log-std of the internal action at state(s) ``s``."""
        mean, log_std, _ = self._split(self.net.forward(s))
        return mean, log_std

    def gaussian(self, s) -> DiagonalGaussian:
        mean, log_std = self.heads(s)
        return DiagonalGaussian(mean, log_std)

    @staticmethod
    def squash(u):
        return np.clip(np.tanh(u), -1.0 + ACTION_EPS, 1.0 - ACTION_EPS)

    @staticmethod
    def _log_prob_from_heads(mean, log_std, u):
        z = (u - mean) * np.exp(-log_std)
        log_mu = (-0.5 * z * z - log_std - 0.5 * LOG_2PI).sum(axis=-1)
        return log_mu - log_tanh_jacobian(u), log_mu

    def sample(self, s, rng):
        """Draw one action at a single state; returns ``(a, u, log_prob)``."""
        s = np.asarray(s, dtype=np.float64)
        if s.ndim != 1:
            raise ShapeError("sample expects a single state vector")
        mean, log_std = self.heads(s)
        u = mean + np.exp(log_std) * rng.standard_normal(self.action_dim)
        log_prob, _ = self._log_prob_from_heads(mean, log_std, u)
        return self.squash(u), u, float(log_prob)

    def sample_many(self, states, k, rng):
        """``k`` draws at each of ``B`` states.

        Returns ``a`` and ``u`` of shape ``(B, k, m)``, ``log_prob`` and the
        Gaussian part ``log_mu`` of shape ``(B, k)``, and the heads.
        """
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        mean, log_std = self.heads(states)
        eps = rng.standard_normal((states.shape[0], k, self.action_dim))
        u = mean[:, None, :] + np.exp(log_std)[:, None, :] * eps
        log_prob, log_mu = self._log_prob_from_heads(mean[:, None, :], log_std[:, None, :], u)
        return self.squash(u), u, log_prob, log_mu, (mean, log_std)

    def log_prob(self, s, u):
        """Exact log-density of ``a = tanh(u)`` under the policy at ``s``."""
        mean, log_std = self.heads(s)
        u = np.asarray(u, dtype=np.float64)
        if mean.ndim == 2 and u.ndim == 3:
            mean, log_std = mean[:, None, :], log_std[:, None, :]
        lp, _ = self._log_prob_from_heads(mean, log_std, u)
        return lp

    def mean_action(self, s):
        mean, _ = self.heads(s)
        return self.squash(mean)

    def score_backward(self, states, u, weights):
        """``sum_{b,i} weights[b,i] * grad_phi log pi(states[b], tanh(u[b,i]))``.

        ``u`` has shape ``(B, k, m)`` and ``weights`` ``(B, k)``.  One backward
        pass through the network covers the whole batch.
        """
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        u = np.asarray(u, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        if u.ndim == 2:
            u = u[:, None, :]
        if weights.ndim == 1:
            weights = weights[:, None]
        if u.shape[:2] != weights.shape or u.shape[0] != states.shape[0]:
            raise ShapeError("states, u and weights disagree on batch/sample counts")
        out, cache = self.net.forward_cached(states)
        mean, log_std, raw = self._split(out)
        inv_var = np.exp(-2.0 * log_std)[:, None, :]
        diff = u - mean[:, None, :]
        w = weights[:, :, None]
        d_mean = (w * diff * inv_var).sum(axis=1)
        d_log_std = (w * (diff * diff * inv_var - 1.0)).sum(axis=1)
        inside = (raw >= self.log_std_min) & (raw <= self.log_std_max)
        upstream = np.concatenate([d_mean, d_log_std * inside], axis=-1)
        grads, _ = self.net.backward_cached(cache, upstream, need_input_grad=False)
        return grads

    def score_grad(self, s, u):
        """Gradient of ``log_prob(s, u)`` w.r.t. every network parameter."""
        s = np.asarray(s, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        if s.ndim != 1 or u.shape != (self.action_dim,):
            raise ShapeError("score_grad expects one state and one internal action")
        return self.score_backward(s[None, :], u[None, None, :], np.ones((1, 1)))

    def save(self, path):
        save_mlp(self.net, path, extra={
            "action_dim": self.action_dim,
            "log_std_range": [self.log_std_min, self.log_std_max],
        })

    @classmethod
    def load(cls, path):
        doc = json.loads(Path(path).read_text())
        lo, hi = doc["log_std_range"]
        return cls(mlp_from_dict(doc), doc["action_dim"], lo, hi)
