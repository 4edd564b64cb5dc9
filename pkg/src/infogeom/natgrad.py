"""Dense feedforward networks with SGD and natural-gradient optimizers.

Layers store ``weight`` as (out, in); a batch X of shape (n, in) maps to
Z = X W^T + b. Flattened parameter vectors concatenate, layer by layer, the
row-major weight followed by the bias.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .datasets import blobs
from .errors import ArgumentError, DivergenceError, SingularFisher
from .rng import make_rng

ACTIVATIONS = ("relu", "identity", "softmax", "sigmoid")
PROB_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class DenseLayer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.weight, dtype=float))
        b = np.atleast_1d(np.asarray(self.bias, dtype=float))
        object.__setattr__(self, "weight", W)
        object.__setattr__(self, "bias", b)
        if self.activation not in ACTIVATIONS:
            raise ArgumentError(f"unknown activation {self.activation!r}")
        if b.shape != (W.shape[0],):
            raise ArgumentError(f"bias shape {b.shape} does not match weight {W.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ArgumentError("layer parameters must be finite")

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ArgumentError("network needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if b.in_dim != a.out_dim:
                raise ArgumentError(f"layer input {b.in_dim} does not match previous output {a.out_dim}")
        for layer in self.layers[:-1]:
            if layer.activation in ("softmax", "sigmoid"):
                raise ArgumentError("softmax and sigmoid are only allowed on the final layer")

    @classmethod
    def initialize(cls, sizes, seed, hidden="relu", final="softmax"):
        """He-normal weights (stream (l,) for layer l), zero biases."""
        layers = []
        for l, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            W = make_rng(seed, l).standard_normal((n_out, n_in)) * math.sqrt(2.0 / n_in)
            act = final if l == len(sizes) - 2 else hidden
            layers.append(DenseLayer(W, np.zeros(n_out), act))
        return cls(tuple(layers))

    @property
    def n_params(self):
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def weight_slices(self):
        """Slices of the flat parameter vector holding each layer's weight."""
        out, start = [], 0
        for l in self.layers:
            out.append(slice(start, start + l.weight.size))
            start += l.weight.size + l.bias.size
        return out


# ---------------------------------------------------------------------------
# forward and loss


def _activate(z, act):
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "identity":
        return z
    if act == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Trace:
    inputs: np.ndarray
    pre: tuple  # Z_l
    post: tuple  # A_l

    @property
    def output(self):
        return self.post[-1]


def forward(net: Network, x) -> Trace:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != net.layers[0].in_dim:
        raise ArgumentError(f"input width {X.shape[1]} does not match network input {net.layers[0].in_dim}")
    A = X
    pre, post = [], []
    for layer in net.layers:
        Z = A @ layer.weight.T + layer.bias
        A = _activate(Z, layer.activation)
        pre.append(Z)
        post.append(A)
    return Trace(X, tuple(pre), tuple(post))


def _onehot(labels, k):
    y = np.asarray(labels)
    if y.ndim == 2:
        return y.astype(float)
    Y = np.zeros((y.size, k))
    Y[np.arange(y.size), y.astype(int)] = 1.0
    return Y


def cross_entropy_loss(probs, labels):
    """Mean negative log-likelihood.

    A 1-D array (or one column) of probabilities uses the binary form
    -(y log a + (1 - y) log(1 - a)); wider arrays use the multiclass form with
    integer or one-hot labels. Probabilities are clamped to [1e-12, 1].
    """
    P = np.asarray(probs, dtype=float)
    if P.ndim == 1 or P.shape[1] == 1:
        a = P.reshape(-1)
        y = np.asarray(labels, dtype=float).reshape(-1)
        la = np.log(np.clip(a, PROB_CLAMP, 1.0))
        l1a = np.log(np.clip(1.0 - a, PROB_CLAMP, 1.0))
        return float(-np.mean(y * la + (1 - y) * l1a))
    Y = _onehot(labels, P.shape[1])
    return float(-np.mean(np.sum(Y * np.log(np.clip(P, PROB_CLAMP, 1.0)), axis=1)))


# ---------------------------------------------------------------------------
# reverse mode


@dataclass(frozen=True, eq=False)
class GradientBundle:
    weights: tuple
    biases: tuple

    def flatten(self):
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def norm(self):
        return float(np.linalg.norm(self.flatten()))

    def scaled(self, c):
        return GradientBundle(tuple(c * w for w in self.weights), tuple(c * b for b in self.biases))

    @classmethod
    def from_flat(cls, net, vec):
        ws, bs, start = [], [], 0
        for l in net.layers:
            ws.append(vec[start : start + l.weight.size].reshape(l.weight.shape))
            start += l.weight.size
            bs.append(vec[start : start + l.bias.size].copy())
            start += l.bias.size
        return cls(tuple(ws), tuple(bs))


def _deltas(net, trace, labels):
    """Per-sample dL_i/dZ_l for each layer (unaveraged)."""
    out = trace.output
    final = net.layers[-1].activation
    if final == "softmax":
        delta = out - _onehot(labels, out.shape[1])
    elif final == "sigmoid":
        delta = out - np.asarray(labels, dtype=float).reshape(out.shape)
    else:
        raise ArgumentError("backward needs a softmax or sigmoid final layer")
    deltas = [delta]
    for l in range(len(net.layers) - 1, 0, -1):
        dA = deltas[0] @ net.layers[l].weight
        act = net.layers[l - 1].activation
        if act == "relu":
            dA = dA * (trace.pre[l - 1] > 0)  # relu'(0) = 0
        deltas.insert(0, dA)
    return deltas


def backward(net: Network, trace: Trace, labels) -> GradientBundle:
    """Exact gradient of the mean cross-entropy loss."""
    deltas = _deltas(net, trace, labels)
    n = trace.inputs.shape[0]
    ins = (trace.inputs,) + trace.post[:-1]
    ws = tuple(d.T @ a / n for d, a in zip(deltas, ins))
    bs = tuple(d.mean(axis=0) for d in deltas)
    return GradientBundle(ws, bs)


def per_sample_gradients(net: Network, x, labels):
    """(n, P) matrix whose rows are flattened single-sample loss gradients."""
    trace = forward(net, x)
    deltas = _deltas(net, trace, labels)
    ins = (trace.inputs,) + trace.post[:-1]
    n = trace.inputs.shape[0]
    parts = []
    for d, a in zip(deltas, ins):
        parts.append(np.einsum("no,ni->noi", d, a).reshape(n, -1))
        parts.append(d)
    return np.concatenate(parts, axis=1)


def flatten_params(net: Network):
    return GradientBundle(tuple(l.weight for l in net.layers), tuple(l.bias for l in net.layers)).flatten()


def unflatten(net: Network, vec) -> Network:
    g = GradientBundle.from_flat(net, np.asarray(vec, dtype=float))
    return Network(tuple(DenseLayer(w, b, l.activation) for w, b, l in zip(g.weights, g.biases, net.layers)))


def clip_gradients(grads: GradientBundle, max_norm):
    """Rescale so the global norm is at most ``max_norm``."""
    if max_norm is None:
        return grads
    nrm = grads.norm()
    if nrm <= max_norm or nrm == 0:
        return grads
    return grads.scaled(max_norm / nrm)


# ---------------------------------------------------------------------------
# optimizers


@dataclass(frozen=True)
class NGDConfig:
    lr: float = 0.01
    damping: float = 0.1
    mode: str = "full"

    def __post_init__(self):
        if not self.lr >= 0:
            raise ArgumentError("lr must be >= 0")
        if not self.damping >= 0:
            raise ArgumentError("damping must be >= 0")
        if self.mode not in ("full", "blockwise"):
            raise ArgumentError(f"unknown mode {self.mode!r}")


def sgd_step(net: Network, grads: GradientBundle, lr) -> Network:
    """W <- W - lr * grad on every parameter."""
    return unflatten(net, flatten_params(net) - lr * grads.flatten())


def _spd_solve(A, b, what):
    try:
        c = cho_factor(A)
    except np.linalg.LinAlgError as exc:
        raise SingularFisher(f"{what} is not positive definite; set damping > 0") from exc
    d = np.abs(np.diag(c[0]))
    if d.min() <= 1e-14 * max(d.max(), 1.0):
        raise SingularFisher(f"{what} is numerically singular; set damping > 0")
    return cho_solve(c, b)


def empirical_fisher(scores):
    S = np.atleast_2d(np.asarray(scores, dtype=float))
    return S.T @ S / S.shape[0]


def natural_gradient_step(net: Network, grads: GradientBundle, scores=None, cfg: NGDConfig = NGDConfig(), fisher=None) -> Network:
    """W <- W - lr (G + damping I)^{-1} grad.

    G is the empirical Fisher of the per-sample ``scores`` unless an explicit
    ``fisher`` matrix is given. Uses a Cholesky solve.
    """
    g = grads.flatten()
    G = empirical_fisher(scores) if fisher is None else np.asarray(fisher, dtype=float)
    if G.shape != (g.size, g.size):
        raise ArgumentError(f"fisher shape {G.shape} does not match {g.size} parameters")
    A = G + cfg.damping * np.eye(g.size) if cfg.damping else G
    step = _spd_solve(A, g, "Fisher matrix")
    return unflatten(net, flatten_params(net) - cfg.lr * step)


def layer_fisher(weight_grad):
    """Per-layer block F_l = D_w^T D_w with D_w = weight_grad^T (in x out)."""
    Dw = np.asarray(weight_grad, dtype=float).T
    return Dw.T @ Dw


def componentwise_ngd_step(net: Network, grads: GradientBundle, cfg: NGDConfig = NGDConfig(mode="blockwise")) -> Network:
    """Block-diagonal damped natural gradient, one block per layer.

    Per layer: D_w is the batch gradient as an (in, out) matrix,
    F = D_w^T D_w, U = D_w (F + damping I)^{-1} and W <- W - lr U^T.
    Biases take a plain SGD step.
    """
    layers = []
    for l, (layer, gw, gb) in enumerate(zip(net.layers, grads.weights, grads.biases)):
        Dw = np.asarray(gw, dtype=float).T
        F = Dw.T @ Dw
        A = F + cfg.damping * np.eye(F.shape[0]) if cfg.damping else F
        # U^T = (F + damping I)^{-1} D_w^T since the system matrix is symmetric
        Ut = _spd_solve(A, Dw.T, f"layer {l} Fisher block")
        layers.append(DenseLayer(layer.weight - cfg.lr * Ut, layer.bias - cfg.lr * gb, layer.activation))
    return Network(tuple(layers))


def blockwise_fisher(net: Network, grads: GradientBundle):
    """Full-size matrix equivalent to the component-wise weight update.

    Each weight block is kron(F_l, I_in); bias blocks and all cross-layer
    blocks are zero.
    """
    P = net.n_params
    M = np.zeros((P, P))
    for sl, layer, gw in zip(net.weight_slices(), net.layers, grads.weights):
        M[sl, sl] = np.kron(layer_fisher(gw), np.eye(layer.in_dim))
    return M


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "sgd"
    lr: float = 0.01
    gamma: float = 0.1
    epochs: int = 10
    batch: int = 32
    clip: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in ("sgd", "ngd", "cw-ngd"):
            raise ArgumentError(f"unknown optimizer {self.optimizer!r}")
        if self.batch < 1 or self.epochs < 0:
            raise ArgumentError("batch must be >= 1 and epochs >= 0")
        if not self.lr >= 0 or not self.gamma >= 0:
            raise ArgumentError("lr and gamma must be >= 0")
        if self.clip is not None and not self.clip > 0:
            raise ArgumentError("clip must be positive")


@dataclass(frozen=True, eq=False)
class TrainResult:
    network: Network
    losses: np.ndarray  # full-data loss before step 0 and after every step
    grad_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))  # post-clip


def _full_loss(net, X, y):
    return cross_entropy_loss(forward(net, X).output, y)


def train(net: Network, X, y, cfg: TrainConfig) -> TrainResult:
    """Mini-batch training; the batch order of epoch e uses stream (e,) of ``cfg.seed``.

    Losses are evaluated on the whole dataset so a zero learning rate gives a
    flat trace. Raises DivergenceError (with the trace) on loss > 1e6 or NaN.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    losses = [_full_loss(net, X, y)]
    norms = []
    for epoch in range(cfg.epochs):
        order = make_rng(cfg.seed, epoch).permutation(X.shape[0])
        for start in range(0, X.shape[0], cfg.batch):
            idx = order[start : start + cfg.batch]
            xb, yb = X[idx], y[idx]
            grads = clip_gradients(backward(net, forward(net, xb), yb), cfg.clip)
            norms.append(grads.norm())
            if cfg.optimizer == "sgd":
                net = sgd_step(net, grads, cfg.lr)
            elif cfg.optimizer == "ngd":
                scores = per_sample_gradients(net, xb, yb)
                net = natural_gradient_step(net, grads, scores, NGDConfig(cfg.lr, cfg.gamma, "full"))
            else:
                net = componentwise_ngd_step(net, grads, NGDConfig(cfg.lr, cfg.gamma, "blockwise"))
            loss = _full_loss(net, X, y)
            losses.append(loss)
            if not np.isfinite(loss) or loss > 1e6:
                raise DivergenceError(f"loss diverged at step {len(losses) - 1}", np.array(losses))
    return TrainResult(net, np.array(losses), np.array(norms))


def blob_task(n_per_class=100, seed=0, hidden=8, separation=3.0):
    """Two-class blobs and a 2-hidden-1 softmax network, both seeded."""
    X, y = blobs(n_per_class, seed, separation=separation)
    net = Network.initialize([2, hidden, 2], seed)
    return net, X, y


# ---------------------------------------------------------------------------
# Cramer-Rao check


@dataclass(frozen=True)
class CRLBReport:
    sigma: float
    n: int
    trials: int
    variance: float
    bound: float
    ratio: float
    mc_error: float


def crlb_check(sigma, n, trials, seed):
    """Monte-Carlo variance of the sample mean against sigma^2 / n.

    ``mc_error`` is the standard error of the ratio, ratio * sqrt(2 / (trials - 1)).
    """
    if trials < 1000:
        raise ArgumentError("crlb_check needs at least 1000 trials")
    if not sigma > 0 or n < 1:
        raise ArgumentError("sigma must be positive and n >= 1")
    means = (sigma * make_rng(seed).standard_normal((int(trials), int(n)))).mean(axis=1)
    var = float(np.var(means, ddof=1))
    bound = sigma**2 / n
    ratio = var / bound
    return CRLBReport(float(sigma), int(n), int(trials), var, bound, ratio, ratio * math.sqrt(2.0 / (trials - 1)))
