"""Probability models: Gaussians, mixtures, finite distributions, exponential families.

Densities are evaluated in log space throughout; mixtures combine components
with log-sum-exp so well separated components never underflow.
"""

import inspect
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import ArgumentError, DegenerateVariance, UnsupportedModel
from .rng import make_rng

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def _lse(values):
    """log sum exp of a short 1-D sequence (cheaper than scipy for a handful of terms)."""
    v = np.asarray(values, dtype=float)
    m = v.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.exp(v - m).sum()))


@dataclass(frozen=True)
class UnivariateGaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ArgumentError(f"sigma must be positive, got {self.sigma}")

    def log_pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - LOG_SQRT_2PI

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def bracket(self, width=12.0):
        return (self.mu - width * self.sigma, self.mu + width * self.sigma)

    def sample(self, n, seed, clip=None):
        x = self.mu + self.sigma * make_rng(seed).standard_normal(int(n))
        return _clip(x, clip)


@dataclass(frozen=True)
class GaussianMixture:
    weights: tuple
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) < 1 or len(self.components) != len(w):
            raise ArgumentError("need one weight per component and at least one component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ArgumentError(f"weights must be nonnegative and sum to 1, got {self.weights}")

    @classmethod
    def from_params(cls, weights, mus, sigmas):
        return cls(tuple(weights), tuple(UnivariateGaussian(float(m), float(s)) for m, s in zip(mus, sigmas)))

    @property
    def k(self):
        return len(self.components)

    @property
    def mus(self):
        return np.array([c.mu for c in self.components])

    @property
    def sigmas(self):
        return np.array([c.sigma for c in self.components])

    def params(self):
        """Flat parameter vector (weights, means, sigmas)."""
        return np.concatenate([np.asarray(self.weights), self.mus, self.sigmas])

    def log_joint(self, x):
        """log(w_c N(x; mu_c, sigma_c)) with shape (n, K)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            logw = np.log(np.asarray(self.weights))
        return np.stack([lw + c.log_pdf(x) for lw, c in zip(logw, self.components)], axis=-1)

    def log_pdf(self, x):
        out = logsumexp(self.log_joint(x), axis=-1)
        return out if np.ndim(x) else float(out[0])

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def bracket(self, width=12.0):
        lo = min(c.mu - width * c.sigma for c in self.components)
        hi = max(c.mu + width * c.sigma for c in self.components)
        return (lo, hi)

    def sample(self, n, seed, clip=None):
        # stream (0,) picks components, stream (1,) draws the noise
        n = int(n)
        labels = make_rng(seed, 0).choice(self.k, size=n, p=np.asarray(self.weights))
        noise = make_rng(seed, 1).standard_normal(n)
        x = self.mus[labels] + self.sigmas[labels] * noise
        return _clip(x, clip)


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    support: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "support", tuple(self.support))
        if p.ndim != 1 or len(p) != len(self.support) or len(p) == 0:
            raise ArgumentError("support and probs must be equal-length, non-empty")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ArgumentError("probs must be nonnegative and sum to 1")
        if len(set(self.support)) != len(self.support):
            raise ArgumentError("support points must be distinct")

    @classmethod
    def uniform(cls, support):
        n = len(support)
        return cls(tuple(support), np.full(n, 1.0 / n))

    @classmethod
    def empirical(cls, samples):
        """Equal-weight distribution over the distinct sample values."""
        vals, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        return cls(tuple(vals.tolist()), counts / counts.sum())

    def index(self, x):
        return self.support.index(x)

    def log_pdf(self, x):
        try:
            p = self.probs[self.support.index(x)]
        except ValueError:
            return -math.inf
        return math.log(p) if p > 0 else -math.inf

    def mean(self, f=lambda x: x):
        return float(sum(pi * f(x) for x, pi in zip(self.support, self.probs)))

    def sample(self, n, seed, clip=None):
        idx = make_rng(seed).choice(len(self.probs), size=int(n), p=self.probs)
        return [self.support[i] for i in idx]


def _clip(x, clip):
    if clip is None:
        return x
    lo, hi = clip
    return np.clip(x, lo, hi)


@dataclass(frozen=True, eq=False)
class ExponentialFamilyModel:
    """Density ``h(x) exp(eta . T(x) - A(eta))``.

    Give ``support`` for a finite sample space or ``bracket`` for a
    continuous one on the real line; ``log_partition`` falls back to a sum or
    quadrature of ``h exp(eta . T)`` over them.
    """

    base_measure: Callable
    sufficient_stat: Callable
    natural_param: np.ndarray
    log_partition: Optional[Callable] = None
    support: Optional[Sequence] = None
    bracket: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "natural_param", np.atleast_1d(np.asarray(self.natural_param, dtype=float)))

    def _unnormalized_log(self, x):
        h = self.base_measure(x)
        if h <= 0:
            return -math.inf
        return math.log(h) + float(self.natural_param @ np.atleast_1d(self.sufficient_stat(x)))

    def log_partition_value(self):
        if self.log_partition is not None:
            return float(self.log_partition(self.natural_param))
        if self.support is not None:
            return _lse([self._unnormalized_log(x) for x in self.support])
        if self.bracket is not None:
            # shift by the value at the midpoint to keep exp() in range
            lo, hi = self.bracket
            ref = self._unnormalized_log(0.5 * (lo + hi))
            val, _ = integrate.quad(lambda x: math.exp(self._unnormalized_log(x) - ref), lo, hi, limit=200)
            return ref + math.log(val)
        raise UnsupportedModel("log partition needs log_partition, support or bracket")

    def log_pdf(self, x):
        return self._unnormalized_log(x) - self.log_partition_value()

    def probs(self):
        """Probability vector over ``support`` (finite models only)."""
        if self.support is None:
            raise UnsupportedModel("probs() needs a finite support")
        logs = np.array([self._unnormalized_log(x) for x in self.support])
        return np.exp(logs - _lse(logs))

    def total_mass(self):
        if self.support is not None:
            return math.fsum(math.exp(self.log_pdf(x)) for x in self.support)
        lo, hi = self.bracket
        A = self.log_partition_value()
        val, _ = integrate.quad(lambda x: math.exp(self._unnormalized_log(x) - A), lo, hi, limit=200)
        return val


def gaussian_exponential_family(g: UnivariateGaussian):
    """The Gaussian as h = 1/sqrt(2 pi), T = (x, x^2), eta = (mu/s^2, -1/(2 s^2))."""
    eta = np.array([g.mu / g.sigma**2, -0.5 / g.sigma**2])

    def A(e):
        return -e[0] ** 2 / (4 * e[1]) - 0.5 * math.log(-2 * e[1])

    return ExponentialFamilyModel(
        base_measure=lambda x: 1.0 / math.sqrt(2 * math.pi),
        sufficient_stat=lambda x: np.array([x, x * x]),
        natural_param=eta,
        log_partition=A,
        bracket=g.bracket(),
    )


# ---------------------------------------------------------------------------
# joint models over (visible x, hidden z)


@dataclass(frozen=True, eq=False)
class JointExponentialFamily:
    """Joint density over (x, z) with z on a finite hidden alphabet.

        p(x, z) = h(x, z) exp(theta_v . T_v(x) + theta_h . T_h(x, z) - psi)

    ``base_measure`` may take ``(x)`` or ``(x, z)``; the conditional of z
    given x is an exponential family only when h does not vary with z.
    ``visible_support`` makes the visible space finite (enumerable psi).
    """

    base_measure: Callable
    visible_stat: Callable
    hidden_stat: Callable
    theta_visible: np.ndarray
    theta_hidden: np.ndarray
    hidden_support: tuple
    visible_support: Optional[tuple] = None
    log_partition: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "theta_visible", np.atleast_1d(np.asarray(self.theta_visible, dtype=float)))
        object.__setattr__(self, "theta_hidden", np.atleast_1d(np.asarray(self.theta_hidden, dtype=float)))
        object.__setattr__(self, "hidden_support", tuple(self.hidden_support))
        if self.visible_support is not None:
            object.__setattr__(self, "visible_support", tuple(self.visible_support))
        try:
            arity = len(inspect.signature(self.base_measure).parameters)
        except (TypeError, ValueError):
            arity = 1
        object.__setattr__(self, "_h_arity", arity)

    def _h(self, x, z):
        return self.base_measure(x, z) if self._h_arity >= 2 else self.base_measure(x)

    def hidden_energy(self, x, z):
        return float(self.theta_hidden @ np.atleast_1d(self.hidden_stat(x, z)))

    def visible_energy(self, x):
        t = np.atleast_1d(self.visible_stat(x))
        return float(self.theta_visible @ t) if t.size else 0.0

    def _unnormalized_log(self, x, z):
        h = self._h(x, z)
        if h <= 0:
            return -math.inf
        return math.log(h) + self.visible_energy(x) + self.hidden_energy(x, z)

    def psi(self):
        if self.log_partition is not None:
            return float(self.log_partition)
        if self.visible_support is None:
            raise UnsupportedModel("psi needs log_partition or a finite visible_support")
        return _lse([self._unnormalized_log(x, z) for x in self.visible_support for z in self.hidden_support])

    def log_joint(self, x, z):
        return self._unnormalized_log(x, z) - self.psi()

    def joint_table(self):
        """p(x, z) as a (len(visible_support), len(hidden_support)) array."""
        psi = self.psi()
        return np.array([[math.exp(self._unnormalized_log(x, z) - psi) for z in self.hidden_support] for x in self.visible_support])

    def marginal_visible(self):
        return DiscreteDistribution(self.visible_support, self.joint_table().sum(axis=1))


def conditional_of_exponential_family(model: JointExponentialFamily, x):
    """p(z | x) as an exponential family over the hidden alphabet.

    The visible block cancels in Bayes' rule; the result keeps ``theta_h``
    as its natural parameter with ``T(z) = T_h(x, z)`` and the adjusted log
    partition ``log sum_z exp(theta_h . T_h(x, z))``.
    """
    hs = np.array([model._h(x, z) for z in model.hidden_support], dtype=float)
    if np.any(hs <= 0) or np.max(np.abs(hs - hs[0])) > 1e-12 * abs(hs[0]):
        raise UnsupportedModel("base measure depends on the hidden variable; conditional is not in exponential-family form")
    support = model.hidden_support
    energies = np.array([model.hidden_energy(x, z) for z in support])
    psi_tilde = _lse(energies)
    return ExponentialFamilyModel(
        base_measure=lambda z: 1.0,
        sufficient_stat=lambda z, _x=x: np.atleast_1d(model.hidden_stat(_x, z)),
        natural_param=model.theta_hidden.copy(),
        log_partition=lambda eta, _psi=psi_tilde: _psi,
        support=support,
    )


def gmm_joint_family(mix: GaussianMixture):
    """GMM as a joint exponential family with z the component label.

    T_h(x, z) = (onehot(z), onehot(z) x, onehot(z) x^2) and
    theta_h = (log w_k - log s_k - mu_k^2 / 2 s_k^2, mu_k / s_k^2, -1 / 2 s_k^2),
    with h(x) = 1/sqrt(2 pi) and psi = 0.
    """
    K = mix.k
    mu, s = mix.mus, mix.sigmas
    with np.errstate(divide="ignore"):
        a = np.log(np.asarray(mix.weights)) - np.log(s) - mu**2 / (2 * s**2)
    theta_h = np.concatenate([a, mu / s**2, -0.5 / s**2])

    def hidden_stat(x, z):
        e = np.zeros(K)
        e[z] = 1.0
        return np.concatenate([e, e * x, e * x * x])

    return JointExponentialFamily(
        base_measure=lambda x: 1.0 / math.sqrt(2 * math.pi),
        visible_stat=lambda x: np.zeros(0),
        hidden_stat=hidden_stat,
        theta_visible=np.zeros(0),
        theta_hidden=theta_h,
        hidden_support=tuple(range(K)),
        log_partition=0.0,
    )


# ---------------------------------------------------------------------------
# generic front doors


def log_pdf(model, x):
    return model.log_pdf(x)


def sample(model, n, seed, clip=None):
    if int(n) < 0:
        raise ArgumentError("n must be >= 0")
    return model.sample(n, seed, clip=clip)


def mle_gaussian(data) -> UnivariateGaussian:
    """Sample mean and biased (1/n) standard deviation."""
    x = np.asarray(data, dtype=float)
    if x.size < 2:
        raise DegenerateVariance("need at least two observations")
    mu = float(np.mean(x))
    var = float(np.mean((x - mu) ** 2))
    if var <= 0:
        raise DegenerateVariance("all observations are equal")
    return UnivariateGaussian(mu, math.sqrt(var))


def responsibilities(mix: GaussianMixture, x):
    """Posterior component probabilities; shape (K,) for scalar x, (n, K) otherwise."""
    lj = mix.log_joint(x)
    r = np.exp(lj - logsumexp(lj, axis=-1, keepdims=True))
    r = r / r.sum(axis=-1, keepdims=True)
    return r if np.ndim(x) else r[0]
