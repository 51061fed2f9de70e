"""Dense ReLU multilayer perceptrons with hand-written backprop and Adam.

Networks work in float64 and accept either a single input vector of shape
``(n_in,)`` or a batch of shape ``(B, n_in)``.  Parameters are kept as a flat
list ``[W0, b0, W1, b1, ...]`` where ``W_l`` has shape ``(n_l, n_{l+1})`` so a
batch forward pass is ``x @ W + b``.

Snapshot file format (JSON)::

    {"format": "genac-mlp/1",
     "layer_sizes": [n0, n1, ..., nL],
     "params": [[...W0 row-major...], [...b0...], [...W1...], ...]}

Floats are written with ``repr`` so a save/load round trip is exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SNAPSHOT_FORMAT = "genac-mlp/1"


class ShapeError(ValueError):
    """Raised on input/parameter dimension mismatches."""


class Mlp:
    """Fully connected network, ReLU on hidden layers, identity output."""

    def __init__(self, layer_sizes, params=None, rng=None):
        sizes = [int(n) for n in layer_sizes]
        if len(sizes) < 2 or any(n < 1 for n in sizes):
            raise ShapeError(f"need >= 2 positive layer sizes, got {layer_sizes}")
        self.layer_sizes = sizes
        if params is None:
            rng = np.random.default_rng() if rng is None else rng
            params = []
            for n_in, n_out in zip(sizes[:-1], sizes[1:]):
                bound = 1.0 / np.sqrt(n_in)
                params.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
                params.append(rng.uniform(-bound, bound, size=n_out))
        else:
            params = [np.array(p, dtype=np.float64) for p in params]
            expected = self.param_shapes()
            if [p.shape for p in params] != expected:
                raise ShapeError(
                    f"parameter shapes {[p.shape for p in params]} do not match {expected}"
                )
        self.params = params

    @classmethod
    def zeros(cls, layer_sizes):
        net = cls(layer_sizes, rng=np.random.default_rng(0))
        for p in net.params:
            p[...] = 0.0
        return net

    @property
    def n_in(self):
        return self.layer_sizes[0]

    @property
    def n_out(self):
        return self.layer_sizes[-1]

    @property
    def n_layers(self):
        return len(self.layer_sizes) - 1

    def param_shapes(self):
        shapes = []
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            shapes += [(n_in, n_out), (n_out,)]
        return shapes

    def param_names(self):
        names = []
        for l in range(self.n_layers):
            names += [f"layer{l}.weight", f"layer{l}.bias"]
        return names

    def copy(self):
        return Mlp(self.layer_sizes, [p.copy() for p in self.params])

    def get_flat(self):
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != sum(p.size for p in self.params):
            raise ShapeError("flat parameter vector has the wrong length")
        offset = 0
        for p in self.params:
            p[...] = flat[offset:offset + p.size].reshape(p.shape)
            offset += p.size

    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x2 = x[None, :] if single else x
        if x2.ndim != 2 or x2.shape[1] != self.n_in:
            raise ShapeError(f"expected input with {self.n_in} features, got shape {x.shape}")
        return x2, single

    def forward(self, x):
        x2, single = self._as_batch(x)
        h = x2
        for l in range(self.n_layers):
            h = h @ self.params[2 * l] + self.params[2 * l + 1]
            if l < self.n_layers - 1:
                h = np.maximum(h, 0.0)
        return h[0] if single else h

    __call__ = forward

    def forward_cached(self, x):
        """Forward pass that also returns the activations needed by `backward_cached`."""
        x2, single = self._as_batch(x)
        acts = [x2]
        h = x2
        for l in range(self.n_layers):
            h = h @ self.params[2 * l] + self.params[2 * l + 1]
            if l < self.n_layers - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return (h[0] if single else h), (acts, single)

    def backward_cached(self, cache, upstream, need_input_grad=True):
        acts, single = cache
        g = np.asarray(upstream, dtype=np.float64)
        g = g[None, :] if single and g.ndim == 1 else g
        if g.shape != acts[-1].shape:
            raise ShapeError(f"upstream shape {g.shape} does not match output {acts[-1].shape}")
        grads = [None] * len(self.params)
        for l in reversed(range(self.n_layers)):
            if l < self.n_layers - 1:
                g = g * (acts[l + 1] > 0.0)
            grads[2 * l] = acts[l].T @ g
            grads[2 * l + 1] = g.sum(axis=0)
            if l > 0 or need_input_grad:
                g = g @ self.params[2 * l].T
        dx = None
        if need_input_grad:
            dx = g[0] if single else g
        return grads, dx

    def backward(self, x, upstream):
        """Gradients of ``sum(upstream * forward(x))`` w.r.t. parameters and input."""
        _, cache = self.forward_cached(x)
        return self.backward_cached(cache, upstream)


def forward(net: Mlp, x):
    return net.forward(x)


def backward(net: Mlp, x, upstream):
    return net.backward(x, upstream)


def soft_update(target: Mlp, source: Mlp, tau: float) -> Mlp:
    """Polyak averaging in place: ``target <- (1 - tau) * target + tau * source``."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    if target.layer_sizes != source.layer_sizes:
        raise ShapeError(
            f"architecture mismatch: {target.layer_sizes} vs {source.layer_sizes}"
        )
    for t, s in zip(target.params, source.params):
        t *= 1.0 - tau
        t += tau * s
    return target


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, lr=3e-4, **kw):
        return cls(lr=lr, m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], **kw)


def adam_step(params, grads, state: AdamState, names=None, maximize=False):
    """One bias-corrected Adam update, applied to ``params`` in place.

    With ``maximize=True`` the step ascends the gradient instead.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and Adam moments have different lengths")
    for i, g in enumerate(grads):
        if g.shape != params[i].shape or state.m[i].shape != params[i].shape:
            raise ShapeError(f"shape mismatch for tensor {i}")
        if not np.all(np.isfinite(g)):
            name = names[i] if names is not None else f"tensor {i}"
            raise FloatingPointError(f"non-finite gradient in {name}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    sign = 1.0 if maximize else -1.0
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p += sign * state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def save_mlp(net: Mlp, path, extra=None):
    doc = {
        "format": SNAPSHOT_FORMAT,
        "layer_sizes": net.layer_sizes,
        "params": [[float(v) for v in p.ravel()] for p in net.params],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc))


def mlp_from_dict(doc) -> Mlp:
    if doc.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"unknown snapshot format {doc.get('format')!r}")
    sizes = doc["layer_sizes"]
    shapes = Mlp(sizes, rng=np.random.default_rng(0)).param_shapes()
    if len(doc["params"]) != len(shapes):
        raise ShapeError("snapshot holds the wrong number of tensors")
    params = [np.asarray(flat, dtype=np.float64).reshape(shape)
              for flat, shape in zip(doc["params"], shapes)]
    return Mlp(sizes, params)


def load_mlp(path) -> Mlp:
    return mlp_from_dict(json.loads(Path(path).read_text()))
