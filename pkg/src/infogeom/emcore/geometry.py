"""e- and m-projections and the alternating em algorithm.

The data manifold holds joints q(x, z) = q_obs(x) q(z | x) with the observed
marginal fixed; the model manifold is an exponential family p(x, z; theta).
The e-projection of a model point onto the data manifold keeps the model's
conditional p(z | x; theta); the m-projection of a data point onto the model
manifold matches expected sufficient statistics. Both steps minimize
KL(q || p), one over q and one over theta.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ..errors import ComponentCollapse, DegenerateVariance, SupportError, UnsupportedModel
from ..infogeo import GaussianFamily, kl_divergence
from ..models import (
    DiscreteDistribution,
    GaussianMixture,
    JointExponentialFamily,
    UnivariateGaussian,
    gmm_joint_family,
)
from .em import moments_to_mixture
from .maxent import MaxEntProblem, maxent_solve


# ---------------------------------------------------------------------------
# m-projection


class SaturatedFamily:
    """Every distribution on the support of the target."""


@dataclass(frozen=True)
class BoltzmannFamily:
    """Members proportional to exp(-sum_k lambda_k f_k(x)) on a finite support."""

    constraint_fns: Sequence[Callable]


@dataclass(frozen=True, eq=False)
class MProjection:
    member: object
    params: np.ndarray
    kl: Optional[float]  # KL(p_hat || member) when both are discrete


def m_projection(p_hat: DiscreteDistribution, family) -> MProjection:
    """Member of ``family`` minimizing KL(p_hat || q), by moment matching."""
    if isinstance(family, SaturatedFamily):
        return MProjection(p_hat, p_hat.probs.copy(), 0.0)
    if isinstance(family, BoltzmannFamily):
        targets = [p_hat.mean(f) for f in family.constraint_fns]
        sol = maxent_solve(MaxEntProblem(p_hat.support, family.constraint_fns, targets))
        return MProjection(sol.distribution, sol.lambdas, kl_divergence(p_hat, sol.distribution))
    if isinstance(family, GaussianFamily):
        m = p_hat.mean()
        v = p_hat.mean(lambda x: (x - m) ** 2)
        if v <= 0:
            raise DegenerateVariance("empirical distribution is a point mass")
        g = UnivariateGaussian(m, float(np.sqrt(v)))
        return MProjection(g, np.array([g.mu, g.sigma]), None)
    raise UnsupportedModel(f"no m-projection for {type(family).__name__}")


# ---------------------------------------------------------------------------
# e-projection


@dataclass(frozen=True, eq=False)
class EProjection:
    model: JointExponentialFamily
    support: tuple  # visible points
    marginal: np.ndarray  # q_obs(x)
    conditionals: np.ndarray  # (n_x, K) rows p(z | x; theta)
    log_normalizers: np.ndarray  # log sum_z exp(theta_h . T_h(x, z)) per x
    theta_hidden: np.ndarray
    stats: np.ndarray  # (n_x, K, d) table of T_h(x, z)
    log_base: np.ndarray  # log h(x) + theta_v . T_v(x) per x

    @property
    def joint(self):
        return self.marginal[:, None] * self.conditionals

    def expected_hidden_stats(self):
        """Dual coordinates E_q[T_h(x, z)]."""
        return np.einsum("ij,ijd->d", self.joint, self.stats)

    def as_model(self):
        """The projected joint as an exponential family on the observed support.

        Visible statistics are one-hot indicators with
        theta_v(x) = log q_obs(x) - log_normalizer(x) - log h(x).
        """
        if np.any(self.marginal <= 0):
            raise SupportError("observed marginal must be strictly positive")
        m = self.model
        n = len(self.support)
        logh = np.array([np.log(m._h(x, m.hidden_support[0])) for x in self.support])
        theta_v = np.log(self.marginal) - self.log_normalizers - logh
        index = {x: i for i, x in enumerate(self.support)}

        def visible_stat(x):
            e = np.zeros(n)
            e[index[x]] = 1.0
            return e

        return JointExponentialFamily(
            base_measure=m.base_measure,
            visible_stat=visible_stat,
            hidden_stat=m.hidden_stat,
            theta_visible=theta_v,
            theta_hidden=self.theta_hidden.copy(),
            hidden_support=m.hidden_support,
            visible_support=self.support,
            log_partition=0.0,
        )


def hidden_stat_table(model: JointExponentialFamily, support):
    """(n_x, K, d) array of T_h(x, z).

    Raises UnsupportedModel when the base measure depends on z, since the
    conditional then leaves the exponential family.
    """
    zs = model.hidden_support
    for x in support:
        hs = np.array([model._h(x, z) for z in zs], dtype=float)
        if np.any(hs <= 0) or np.max(np.abs(hs - hs[0])) > 1e-12 * abs(hs[0]):
            raise UnsupportedModel("base measure depends on the hidden variable; conditional is not in exponential-family form")
    return np.array([[np.atleast_1d(model.hidden_stat(x, z)) for z in zs] for x in support], dtype=float)


def e_projection(model: JointExponentialFamily, observed_marginal: DiscreteDistribution, stats=None) -> EProjection:
    """q(x, z) = q_obs(x) p(z | x; theta).

    The conditional p(z | x) is proportional to exp(theta_h . T_h(x, z)), an
    exponential family over z whose natural parameter is the model's hidden
    block unchanged. ``stats`` may pass a precomputed ``hidden_stat_table``.
    """
    support = observed_marginal.support
    T = hidden_stat_table(model, support) if stats is None else np.asarray(stats, dtype=float)
    theta_h = model.theta_hidden.copy()
    energies = T @ theta_h
    logs = logsumexp(energies, axis=1)
    cond = np.exp(energies - logs[:, None])
    z0 = model.hidden_support[0]
    log_base = np.array([np.log(model._h(x, z0)) + model.visible_energy(x) for x in support])
    return EProjection(model, support, observed_marginal.probs.copy(), cond, logs, theta_h, T, log_base)


def recover_hidden_parameter(ep: EProjection):
    """Least-squares hidden parameter from the projected conditionals.

    Only differences theta_h . (T_h(x, z) - T_h(x, z0)) are identified, so the
    minimum-norm solution is returned with the design matrix of those
    differences; compare via ``design @ (theta - reference)``.
    """
    D = (ep.stats[:, 1:, :] - ep.stats[:, :1, :]).reshape(-1, ep.stats.shape[2])
    rhs = (np.log(ep.conditionals[:, 1:]) - np.log(ep.conditionals[:, :1])).ravel()
    theta, *_ = np.linalg.lstsq(D, rhs, rcond=None)
    return theta, D


def kl_data_to_model(ep: EProjection):
    """KL(q || p_theta) with q discrete in x and p a density in x."""
    q = ep.joint
    log_p = ep.log_base[:, None] + ep.stats @ ep.theta_hidden - ep.model.psi()
    pos = q > 0
    return float(np.sum(q[pos] * (np.log(q[pos]) - log_p[pos])))


# ---------------------------------------------------------------------------
# alternating em for Gaussian mixtures


@dataclass(frozen=True, eq=False)
class GeometricStep:
    eta: np.ndarray  # expected hidden statistics of the e-projection
    theta: np.ndarray  # mixture parameters (weights, means, sigmas)
    kl: float  # KL(q(eta) || p(theta))


@dataclass(frozen=True, eq=False)
class GeometricEMResult:
    mixture: GaussianMixture
    iterations: int
    converged: bool
    trajectory: tuple

    @property
    def kl_trace(self):
        return np.array([s.kl for s in self.trajectory])


def m_projection_gmm(eta, weights, weights_update=False):
    """Mixture whose expected (onehot, onehot x, onehot x^2) equals ``eta``."""
    eta = np.asarray(eta, dtype=float)
    K = eta.size // 3
    counts, sums, squares = eta[:K], eta[K : 2 * K], eta[2 * K :]
    if weights_update:
        w = counts / counts.sum()
        w = w / w.sum()
    else:
        w = np.asarray(weights, dtype=float)
    return moments_to_mixture(counts, sums, squares, w)


def run_em_geometric(data, init: GaussianMixture, tol=1e-4, max_iter=1000, weights_update=False):
    """Alternate e-projections onto the data manifold and m-projections onto the GMM family.

    Uses the same per-parameter stopping rule as ``run_em``; one trajectory
    entry per visited mixture.
    """
    p_hat = DiscreteDistribution.empirical(data)
    mix = init
    # T_h(x, z) does not depend on the mixture parameters
    stats = hidden_stat_table(gmm_joint_family(init), p_hat.support)

    def visit(mix_):
        ep = e_projection(gmm_joint_family(mix_), p_hat, stats)
        return GeometricStep(ep.expected_hidden_stats(), mix_.params(), kl_data_to_model(ep))

    steps = [visit(mix)]
    it = 0
    converged = False
    while it < max_iter:
        try:
            new = m_projection_gmm(steps[-1].eta, mix.weights, weights_update)
        except ComponentCollapse as exc:
            exc.state = GeometricEMResult(mix, it, False, tuple(steps))
            raise
        it += 1
        moved = float(np.max(np.abs(new.params() - mix.params())))
        mix = new
        steps.append(visit(mix))
        if moved < tol:
            converged = True
            break
    return GeometricEMResult(mix, it, converged, tuple(steps))


# ---------------------------------------------------------------------------
# linearity of the conditional expectation


@dataclass(frozen=True)
class LinearityReport:
    gap: float  # |E[s(r)] - s(E[r])|
    mc_error: float
    equivalent: bool


def linearity_equivalence_check(s_Q, samples):
    """Jensen gap of ``s_Q`` over ``samples``; zero exactly when s_Q acts affinely on them."""
    r = np.asarray(samples, dtype=float)
    vals = np.array([np.atleast_1d(s_Q(ri)) for ri in r], dtype=float)
    gap = float(np.linalg.norm(vals.mean(axis=0) - np.atleast_1d(s_Q(r.mean(axis=0)))))
    mc = float(np.linalg.norm(vals.std(axis=0, ddof=1)) / np.sqrt(len(r))) if len(r) > 1 else 0.0
    return LinearityReport(gap, mc, gap < 1e-10 + mc)


def binary_linearization(f):
    """Affine s(y) = (f(1) - f(0)) y + f(0) agreeing with f on {0, 1}."""
    f0 = np.asarray(f(0), dtype=float)
    f1 = np.asarray(f(1), dtype=float)
    return lambda y: (f1 - f0) * y + f0
