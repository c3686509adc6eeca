"""Minimal dense feedforward networks on numpy.

Hidden layers use ELU activations, the output layer is linear. Everything
runs in float64 and is written functionally: parameters are immutable
snapshots, training updates go through :func:`optimizer_step`.

Besides plain forward evaluation the module provides reverse-mode
derivatives with respect to parameters (for cross-entropy training) and
with respect to inputs (needed by the pathwise gradient estimators).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ConfigurationError, NumericError
from .validation import as_generator

OUTPUT_KINDS = ("logit_scalar", "mean_and_logstd")

CHECKPOINT_MAGIC = "infoflow-densenet"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class DenseNetParams:
    """Weights and biases of a fully connected network.

    ``weights[i]`` has shape ``(layer_sizes[i], layer_sizes[i+1])`` and
    ``biases[i]`` has shape ``(layer_sizes[i+1],)``.
    """

    layer_sizes: tuple
    weights: tuple
    biases: tuple
    output_kind: str = "logit_scalar"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise ConfigurationError(f"layer_sizes needs >= 2 positive entries, got {sizes}")
        if self.output_kind not in OUTPUT_KINDS:
            raise ConfigurationError(f"unknown output_kind {self.output_kind!r}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ConfigurationError("weights/biases count inconsistent with layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ConfigurationError(
                    f"layer {i}: weight {w.shape} / bias {b.shape} inconsistent with {sizes}"
                )
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    def n_parameters(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class NetGrads:
    """Parameter gradients, shaped exactly like the network it came from."""

    weights: tuple
    biases: tuple

    def scaled(self, factor):
        return NetGrads(
            weights=tuple(factor * w for w in self.weights),
            biases=tuple(factor * b for b in self.biases),
        )

    def added(self, other):
        return NetGrads(
            weights=tuple(a + b for a, b in zip(self.weights, other.weights)),
            biases=tuple(a + b for a, b in zip(self.biases, other.biases)),
        )


def init_network(layer_sizes, output_kind="logit_scalar", rng_seed=0):
    """Create a network with Glorot-uniform weights and zero biases.

    Deterministic for a given ``rng_seed`` (an int, None, or Generator).
    """
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ConfigurationError(f"layer_sizes needs >= 2 positive entries, got {sizes}")
    rng = as_generator(rng_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenseNetParams(sizes, tuple(weights), tuple(biases), output_kind)


def _elu(z):
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_grad(z):
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


def sigmoid(z):
    """Numerically stable logistic function."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_batch(x, n_inputs):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != n_inputs:
        raise ValueError(f"input shape {x.shape} incompatible with {n_inputs} input units")
    return x, single


def _forward_cached(params, X):
    """Forward pass keeping pre-activations for the backward sweep."""
    h = X
    pre = []
    acts = [X]
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = h @ w + b
        pre.append(z)
        h = _elu(z)
        acts.append(h)
    out = h @ params.weights[-1] + params.biases[-1]
    return out, acts, pre


def forward(params, x):
    """Evaluate the network. Accepts a single vector or a batch matrix."""
    X, single = _as_batch(x, params.n_inputs)
    out, _, _ = _forward_cached(params, X)
    if not np.all(np.isfinite(out)):
        raise NumericError("network produced non-finite output")
    return out[0] if single else out


def vjp(params, X, out_cotangent, want_input_grad=False):
    """Reverse-mode sweep: pull an output cotangent back to the parameters.

    ``out_cotangent`` has shape (batch, n_outputs). Returns ``NetGrads``
    summed over the batch, and optionally the per-row input gradients.
    """
    out, acts, pre = _forward_cached(params, X)
    d = np.asarray(out_cotangent, dtype=np.float64)
    if d.shape != out.shape:
        raise ValueError(f"cotangent shape {d.shape} does not match output {out.shape}")
    n_layers = len(params.weights)
    g_w = [None] * n_layers
    g_b = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        g_w[i] = acts[i].T @ d
        g_b[i] = d.sum(axis=0)
        if i > 0:
            d = (d @ params.weights[i].T) * _elu_grad(pre[i - 1])
        elif want_input_grad:
            d = d @ params.weights[0].T
    grads = NetGrads(tuple(g_w), tuple(g_b))
    return (grads, d) if want_input_grad else grads


def grad_params_crossentropy(params, inputs, labels):
    """Mean binary cross-entropy loss and its parameter gradient.

    The scalar network output is read as a logit; labels are 0/1.
    Returns ``(loss, NetGrads)``.
    """
    if params.n_outputs != 1:
        raise ConfigurationError("cross-entropy gradient needs a scalar-output network")
    X, _ = _as_batch(inputs, params.n_inputs)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(y) != len(X) or len(y) == 0:
        raise ValueError("labels must match a nonempty batch")
    out, acts, pre = _forward_cached(params, X)
    z = out[:, 0]
    # softplus(z) - y*z is the stable form of -log p(y|z)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    if not np.isfinite(loss):
        raise NumericError("cross-entropy loss is non-finite")
    d = ((sigmoid(z) - y) / len(y))[:, None]
    n_layers = len(params.weights)
    g_w = [None] * n_layers
    g_b = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        g_w[i] = acts[i].T @ d
        g_b[i] = d.sum(axis=0)
        if i > 0:
            d = (d @ params.weights[i].T) * _elu_grad(pre[i - 1])
    return loss, NetGrads(tuple(g_w), tuple(g_b))


def grad_input(params, x):
    """Derivative of the outputs with respect to the input coordinates.

    For a scalar-output network: a gradient vector per input row (same
    leading shape as ``x``). For a vector-output network and a single
    input vector: the full Jacobian of shape (n_outputs, n_inputs).
    """
    X, single = _as_batch(x, params.n_inputs)
    if params.n_outputs == 1:
        cot = np.ones((len(X), 1))
        _, gin = vjp(params, X, cot, want_input_grad=True)
        return gin[0] if single else gin
    if not single:
        raise ValueError("Jacobian of a vector-output network needs a single input vector")
    rows = []
    for j in range(params.n_outputs):
        cot = np.zeros((1, params.n_outputs))
        cot[0, j] = 1.0
        _, gin = vjp(params, X, cot, want_input_grad=True)
        rows.append(gin[0])
    return np.vstack(rows)


def forward_and_input_grad(params, X):
    """Batched logits plus d(logit)/d(input) rows for a scalar-output net.

    Cheaper than :func:`vjp` when parameter gradients are not needed.
    """
    if params.n_outputs != 1:
        raise ConfigurationError("forward_and_input_grad needs a scalar-output network")
    X, _ = _as_batch(X, params.n_inputs)
    out, _, pre = _forward_cached(params, X)
    d = np.ones((len(X), 1))
    for i in range(len(params.weights) - 1, 0, -1):
        d = (d @ params.weights[i].T) * _elu_grad(pre[i - 1])
    return out[:, 0], d @ params.weights[0].T


@dataclass(frozen=True)
class OptimizerState:
    """State of a first-order update rule; accumulators mirror the net."""

    rule: str
    learning_rate: float
    step_count: int = 0
    m_weights: tuple = field(default=())
    v_weights: tuple = field(default=())
    m_biases: tuple = field(default=())
    v_biases: tuple = field(default=())
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(params, rule="adam", learning_rate=1e-3):
    if rule not in ("sgd", "adam"):
        raise ConfigurationError(f"unknown optimizer rule {rule!r}")
    if learning_rate <= 0:
        raise ConfigurationError("learning_rate must be positive")
    zeros_w = tuple(np.zeros_like(w) for w in params.weights)
    zeros_b = tuple(np.zeros_like(b) for b in params.biases)
    return OptimizerState(
        rule=rule,
        learning_rate=learning_rate,
        m_weights=zeros_w,
        v_weights=zeros_w,
        m_biases=zeros_b,
        v_biases=zeros_b,
    )


def optimizer_step(params, grads, state):
    """One descent step; returns ``(new_params, new_state)``.

    sgd: p <- p - lr * g, exactly. adam: bias-corrected moment update
    with the standard defaults.
    """
    for w, gw in zip(params.weights, grads.weights):
        if w.shape != gw.shape:
            raise ValueError(f"gradient shape {gw.shape} does not match weight {w.shape}")
    lr = state.learning_rate
    if state.rule == "sgd":
        new_w = tuple(w - lr * g for w, g in zip(params.weights, grads.weights))
        new_b = tuple(b - lr * g for b, g in zip(params.biases, grads.biases))
        new_state = replace(state, step_count=state.step_count + 1)
    else:
        t = state.step_count + 1
        b1, b2, eps = state.beta1, state.beta2, state.eps
        c1 = 1.0 - b1**t
        c2 = 1.0 - b2**t

        def upd(p, g, m, v):
            m2 = b1 * m + (1 - b1) * g
            v2 = b2 * v + (1 - b2) * g * g
            p2 = p - lr * (m2 / c1) / (np.sqrt(v2 / c2) + eps)
            return p2, m2, v2

        ws, mws, vws = [], [], []
        for p, g, m, v in zip(params.weights, grads.weights, state.m_weights, state.v_weights):
            p2, m2, v2 = upd(p, g, m, v)
            ws.append(p2), mws.append(m2), vws.append(v2)
        bs, mbs, vbs = [], [], []
        for p, g, m, v in zip(params.biases, grads.biases, state.m_biases, state.v_biases):
            p2, m2, v2 = upd(p, g, m, v)
            bs.append(p2), mbs.append(m2), vbs.append(v2)
        new_w, new_b = tuple(ws), tuple(bs)
        new_state = replace(
            state,
            step_count=t,
            m_weights=tuple(mws),
            v_weights=tuple(vws),
            m_biases=tuple(mbs),
            v_biases=tuple(vbs),
        )
    new_params = DenseNetParams(params.layer_sizes, new_w, new_b, params.output_kind)
    return new_params, new_state


def save_params(params, path):
    """Write a checkpoint: header lines, then one row-major dump per tensor."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n")
        fh.write(f"output_kind {params.output_kind}\n")
        fh.write("layer_sizes " + " ".join(str(s) for s in params.layer_sizes) + "\n")
        for w, b in zip(params.weights, params.biases):
            fh.write(" ".join(format(v, ".17g") for v in w.ravel()) + "\n")
            fh.write(" ".join(format(v, ".17g") for v in b.ravel()) + "\n")


def load_params(path):
    """Read a checkpoint written by :func:`save_params`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split() != [CHECKPOINT_MAGIC, str(CHECKPOINT_VERSION)]:
        raise ValueError(f"{path}: not a recognized checkpoint (expected {CHECKPOINT_MAGIC!r} v{CHECKPOINT_VERSION})")
    kind = lines[1].split()[1]
    sizes = tuple(int(s) for s in lines[2].split()[1:])
    weights, biases = [], []
    row = 3
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.array([float(v) for v in lines[row].split()]).reshape(fan_in, fan_out)
        b = np.array([float(v) for v in lines[row + 1].split()])
        weights.append(w)
        biases.append(b)
        row += 2
    return DenseNetParams(sizes, tuple(weights), tuple(biases), kind)
