"""Hand-written feedforward policy network: ReLU hidden layers, softmax head.

Everything is float64 numpy with explicit backpropagation — no autograd.
Parameter containers are frozen dataclasses treated as immutable values;
apply_update returns fresh arrays, so old references stay valid snapshots.

Persistence format (little-endian):

    bytes 0..7    magic b"FLOWNN01"
    uint32        format version (1)
    uint32        number of layer sizes L
    uint32 * L    layer sizes, input first
    float64 ...   parameter payload: W0, b0, W1, b1, ... row-major

The payload length must match the header exactly; anything else raises
NetworkFormatError.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import struct

import numpy as np

INPUT_SIZE = 80
OUTPUT_SIZE = 4

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_LEARNING_RATE = 1e-3

_MAGIC = b"FLOWNN01"
_FORMAT_VERSION = 1


class NetworkFormatError(ValueError):
    """A persisted network file is corrupt or has an unsupported layout."""


@dataclass(frozen=True)
class PolicyNetwork:
    """Weight/bias stacks for a fully connected net; W[i] has shape (out, in)."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass(frozen=True)
class GradientSet:
    """Per-layer gradients aligned with PolicyNetwork.weights/biases."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class OptimizerState:
    """Adaptive moment estimates (first/second) plus the step counter."""

    m_weights: tuple[np.ndarray, ...]
    v_weights: tuple[np.ndarray, ...]
    m_biases: tuple[np.ndarray, ...]
    v_biases: tuple[np.ndarray, ...]
    step: int
    learning_rate: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2


def _he_layer(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))


def init_network(hidden_width: int, hidden_count: int, seed: int = 0,
                 input_size: int = INPUT_SIZE,
                 output_size: int = OUTPUT_SIZE) -> PolicyNetwork:
    """He-initialized network: input -> hidden_width x hidden_count -> output."""
    if hidden_width < 1 or hidden_count < 1:
        raise ValueError("hidden_width and hidden_count must be >= 1")
    sizes = [input_size] + [hidden_width] * hidden_count + [output_size]
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(_he_layer(rng, n_out, n_in))
        biases.append(np.zeros(n_out))
    return PolicyNetwork(weights=tuple(weights), biases=tuple(biases))


def init_optimizer(net: PolicyNetwork,
                   learning_rate: float = DEFAULT_LEARNING_RATE) -> OptimizerState:
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    return OptimizerState(
        m_weights=tuple(np.zeros_like(w) for w in net.weights),
        v_weights=tuple(np.zeros_like(w) for w in net.weights),
        m_biases=tuple(np.zeros_like(b) for b in net.biases),
        v_biases=tuple(np.zeros_like(b) for b in net.biases),
        step=0,
        learning_rate=learning_rate,
    )


def _check_input(net: PolicyNetwork, state) -> np.ndarray:
    x = np.asarray(state, dtype=np.float64)
    expected = net.weights[0].shape[1]
    if x.shape != (expected,):
        raise ValueError(f"state must have shape ({expected},), got {x.shape}")
    return x


def _trace(net: PolicyNetwork, x: np.ndarray) -> list[np.ndarray]:
    """Activations per layer: [input, hidden..., logits]."""
    acts = [x]
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b
        if i != last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return acts


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def forward(net: PolicyNetwork, state) -> np.ndarray:
    """Action probabilities for one state (softmax over the final layer)."""
    x = _check_input(net, state)
    return _softmax(_trace(net, x)[-1])


def logp_gradient(net: PolicyNetwork, state, action: int) -> GradientSet:
    """Gradient of log pi(action | state) w.r.t. every parameter.

    The logit-level gradient of log-softmax is onehot(action) - probs;
    the rest is plain backprop through the ReLU stack.
    """
    x = _check_input(net, state)
    n_actions = net.weights[-1].shape[0]
    if not 0 <= action < n_actions:
        raise ValueError(f"action must be in 0..{n_actions - 1}, got {action}")
    acts = _trace(net, x)
    delta = -_softmax(acts[-1])
    delta[action] += 1.0
    grads_w: list[np.ndarray] = []
    grads_b: list[np.ndarray] = []
    for i in range(len(net.weights) - 1, -1, -1):
        grads_w.append(np.outer(delta, acts[i]))
        grads_b.append(delta.copy())
        if i > 0:
            delta = (net.weights[i].T @ delta) * (acts[i] > 0)
    return GradientSet(weights=tuple(reversed(grads_w)), biases=tuple(reversed(grads_b)))


def accumulate_logp_gradients(net: PolicyNetwork, states: np.ndarray,
                              actions: np.ndarray, coefficients: np.ndarray) -> GradientSet:
    """Sum_i coefficients[i] * grad log pi(actions[i] | states[i]), batched.

    Mathematically identical to summing logp_gradient calls; implemented with
    matrix products so policy updates stay cheap.
    """
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.int64)
    coefficients = np.asarray(coefficients, dtype=np.float64)
    n = states.shape[0]
    if states.ndim != 2 or states.shape[1] != net.weights[0].shape[1]:
        raise ValueError("states must be a (batch, input) array")
    if actions.shape != (n,) or coefficients.shape != (n,):
        raise ValueError("actions/coefficients must match the batch length")

    acts = [states]
    h = states
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i != last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    logits = acts[-1]
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)

    delta = -probs
    delta[np.arange(n), actions] += 1.0
    delta *= coefficients[:, None]
    grads_w: list[np.ndarray] = []
    grads_b: list[np.ndarray] = []
    for i in range(last, -1, -1):
        grads_w.append(delta.T @ acts[i])
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ net.weights[i]) * (acts[i] > 0)
    return GradientSet(weights=tuple(reversed(grads_w)), biases=tuple(reversed(grads_b)))


def apply_update(net: PolicyNetwork, grads: GradientSet, scale: float,
                 opt: OptimizerState) -> tuple[PolicyNetwork, OptimizerState]:
    """Ascend scale*grads via adaptive moment estimation; returns new values."""
    if not np.isfinite(scale):
        raise ValueError("scale must be finite")
    for g in (*grads.weights, *grads.biases):
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient contains non-finite values")
    t = opt.step + 1
    corr1 = 1.0 - opt.beta1 ** t
    corr2 = 1.0 - opt.beta2 ** t

    def adam(param, g, m, v):
        g = scale * g
        m2 = opt.beta1 * m + (1.0 - opt.beta1) * g
        v2 = opt.beta2 * v + (1.0 - opt.beta2) * (g * g)
        step = opt.learning_rate * (m2 / corr1) / (np.sqrt(v2 / corr2) + ADAM_EPS)
        return param + step, m2, v2

    new_w, new_mw, new_vw = [], [], []
    for p, g, m, v in zip(net.weights, grads.weights, opt.m_weights, opt.v_weights):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match weights {p.shape}")
        p2, m2, v2 = adam(p, g, m, v)
        new_w.append(p2)
        new_mw.append(m2)
        new_vw.append(v2)
    new_b, new_mb, new_vb = [], [], []
    for p, g, m, v in zip(net.biases, grads.biases, opt.m_biases, opt.v_biases):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match biases {p.shape}")
        p2, m2, v2 = adam(p, g, m, v)
        new_b.append(p2)
        new_mb.append(m2)
        new_vb.append(v2)
    net2 = PolicyNetwork(weights=tuple(new_w), biases=tuple(new_b))
    opt2 = replace(opt, m_weights=tuple(new_mw), v_weights=tuple(new_vw),
                   m_biases=tuple(new_mb), v_biases=tuple(new_vb), step=t)
    return net2, opt2


# ------------------------------------------------------------- persistence

def save_network(net: PolicyNetwork, path) -> None:
    sizes = net.layer_sizes
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<II", _FORMAT_VERSION, len(sizes))
    blob += struct.pack(f"<{len(sizes)}I", *sizes)
    for w, b in zip(net.weights, net.biases):
        blob += np.ascontiguousarray(w, dtype="<f8").tobytes()
        blob += np.ascontiguousarray(b, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_network(path) -> PolicyNetwork:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 8 or blob[:len(_MAGIC)] != _MAGIC:
        raise NetworkFormatError("bad magic: not a policy network file")
    off = len(_MAGIC)
    version, n_sizes = struct.unpack_from("<II", blob, off)
    off += 8
    if version != _FORMAT_VERSION:
        raise NetworkFormatError(f"unsupported format version {version}")
    if n_sizes < 2 or n_sizes > 64:
        raise NetworkFormatError(f"implausible layer count {n_sizes}")
    if len(blob) < off + 4 * n_sizes:
        raise NetworkFormatError("truncated header")
    sizes = struct.unpack_from(f"<{n_sizes}I", blob, off)
    off += 4 * n_sizes
    if any(s < 1 for s in sizes):
        raise NetworkFormatError(f"invalid layer sizes {sizes}")
    expected = sum(8 * (a * b + b) for a, b in zip(sizes[:-1], sizes[1:]))
    if len(blob) - off != expected:
        raise NetworkFormatError(
            f"payload is {len(blob) - off} bytes but layer sizes {tuple(sizes)} "
            f"require {expected}")
    weights = []
    biases = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(blob, dtype="<f8", count=n_out * n_in, offset=off)
        off += 8 * n_out * n_in
        b = np.frombuffer(blob, dtype="<f8", count=n_out, offset=off)
        off += 8 * n_out
        weights.append(w.reshape(n_out, n_in).copy())
        biases.append(b.copy())
    return PolicyNetwork(weights=tuple(weights), biases=tuple(biases))


# ------------------------------------------------- optional value baseline

def init_value_network(hidden_width: int = 64, seed: int = 0,
                       input_size: int = INPUT_SIZE) -> PolicyNetwork:
    """Small scalar-output net used as a learned baseline when enabled."""
    return init_network(hidden_width, 1, seed=seed,
                        input_size=input_size, output_size=1)


def value_forward(net: PolicyNetwork, states: np.ndarray) -> np.ndarray:
    """Raw linear head outputs, shape (batch,)."""
    states = np.asarray(states, dtype=np.float64)
    single = states.ndim == 1
    if single:
        states = states[None, :]
    h = states
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i != last:
            h = np.maximum(h, 0.0)
    out = h[:, 0]
    return out[0] if single else out


def value_fit_step(net: PolicyNetwork, opt: OptimizerState, states: np.ndarray,
                   targets: np.ndarray) -> tuple[PolicyNetwork, OptimizerState]:
    """One mean-squared-error descent step toward the targets."""
    states = np.asarray(states, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = states.shape[0]

    acts = [states]
    h = states
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i != last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    # d(MSE)/d(pred) = 2 (pred - target) / n
    delta = 2.0 * (acts[-1][:, 0] - targets)[:, None] / n
    grads_w, grads_b = [], []
    for i in range(last, -1, -1):
        grads_w.append(delta.T @ acts[i])
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ net.weights[i]) * (acts[i] > 0)
    grads = GradientSet(weights=tuple(reversed(grads_w)), biases=tuple(reversed(grads_b)))
    return apply_update(net, grads, -1.0, opt)  # ascend the negative = descend MSE
