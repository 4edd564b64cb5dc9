"""Classic EM for univariate Gaussian mixtures."""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import ArgumentError, ComponentCollapse
from ..models import GaussianMixture, UnivariateGaussian, responsibilities
from ..rng import make_rng

VARIANCE_FLOOR = 1e-8
MASS_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EMState:
    mixture: GaussianMixture
    responsibilities: np.ndarray
    loglik: float
    iteration: int
    loglik_trace: tuple = ()
    trajectory: tuple = ()  # parameter vectors, one per visited mixture
    converged: bool = False


def _data(data):
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 1:
        raise ArgumentError("need at least one observation")
    return x


def loglik(data, mix):
    """Observed-data log-likelihood (pairwise summation in np.sum)."""
    return float(np.sum(mix.log_pdf(_data(data))))


def e_step(data, mix):
    """Responsibilities (n, K) and the observed-data log-likelihood at ``mix``."""
    x = _data(data)
    return responsibilities(mix, x), loglik(x, mix)


def moments_to_mixture(counts, sums, squares, weights):
    """Mixture from per-component responsibility moments.

    ``counts``, ``sums`` and ``squares`` are sum_i r_ik, sum_i r_ik x_i and
    sum_i r_ik x_i^2 (any common scale). Raises ComponentCollapse below the
    mass or variance floors.
    """
    comps = []
    total = float(np.sum(counts))
    for j, (n, s1, s2) in enumerate(zip(counts, sums, squares)):
        if n < MASS_FLOOR * max(total, 1.0):
            raise ComponentCollapse(f"component {j} has no responsibility mass", j)
        mu = s1 / n
        var = s2 / n - mu * mu
        if var < VARIANCE_FLOOR:
            raise ComponentCollapse(f"component {j} variance collapsed ({var:.3g})", j)
        comps.append(UnivariateGaussian(float(mu), float(np.sqrt(var))))
    return GaussianMixture(tuple(weights), tuple(comps))


def m_step(data, resp, weights_update=False, weights=None, center=None):
    """Responsibility-weighted means and biased variances.

    Weights become the column means of ``resp`` when ``weights_update`` is
    set; otherwise ``weights`` are kept (uniform when not given). Variances
    are taken about the updated means unless ``center`` supplies other
    per-component centres (e.g. the previous means); both variants share
    their fixed points.
    """
    x = _data(data)
    r = np.asarray(resp, dtype=float).reshape(x.size, -1)
    K = r.shape[1]
    nk = r.sum(axis=0)
    for j in range(K):
        if nk[j] < MASS_FLOOR:
            raise ComponentCollapse(f"component {j} has no responsibility mass", j)
    mu = (r * x[:, None]).sum(axis=0) / nk
    c = mu if center is None else np.asarray(center, dtype=float)
    var = (r * (x[:, None] - c) ** 2).sum(axis=0) / nk
    for j in range(K):
        if var[j] < VARIANCE_FLOOR:
            raise ComponentCollapse(f"component {j} variance collapsed ({var[j]:.3g})", j)
    if weights_update:
        w = nk / nk.sum()
        w = w / w.sum()
    elif weights is None:
        w = np.full(K, 1.0 / K)
    else:
        w = np.asarray(weights, dtype=float)
    return GaussianMixture(tuple(w), tuple(UnivariateGaussian(float(m), float(np.sqrt(v))) for m, v in zip(mu, var)))


def run_em(data, init, tol=1e-4, max_iter=1000, weights_update=False, variance_center="updated"):
    """Alternate E and M steps until every parameter moves less than ``tol``.

    ``variance_center="previous"`` centres the variance update on the means
    of the previous iterate instead of the fresh ones. On collapse the raised
    ComponentCollapse carries the last good state.
    """
    if variance_center not in ("updated", "previous"):
        raise ArgumentError(f"unknown variance_center {variance_center!r}")
    x = _data(data)
    mix = init
    resp, ll = e_step(x, mix)
    trace = [ll]
    traj = [mix.params()]
    it = 0
    converged = False
    while it < max_iter:
        try:
            center = mix.mus if variance_center == "previous" else None
            new = m_step(x, resp, weights_update, mix.weights, center)
        except ComponentCollapse as exc:
            exc.state = EMState(mix, resp, ll, it, tuple(trace), tuple(traj), False)
            raise
        it += 1
        moved = float(np.max(np.abs(new.params() - mix.params())))
        mix = new
        resp, ll = e_step(x, mix)
        trace.append(ll)
        traj.append(mix.params())
        if moved < tol:
            converged = True
            break
    return EMState(mix, resp, ll, it, tuple(trace), tuple(traj), converged)


def evidence_decomposition(data, mix, q):
    """(loglik, elbo, kl) with loglik = elbo + kl.

    ``kl`` is the summed KL from each row of ``q`` to the exact posterior,
    computed directly rather than as a difference.
    """
    x = _data(data)
    q = np.asarray(q, dtype=float).reshape(x.size, -1)
    lj = mix.log_joint(x)
    lp = logsumexp(lj, axis=1)
    post_log = lj - lp[:, None]
    pos = q > 0
    safe_q = np.where(pos, q, 1.0)
    elbo = float(np.sum(np.where(pos, q * (lj - np.log(safe_q)), 0.0)))
    kl = float(np.sum(np.where(pos, q * (np.log(safe_q) - post_log), 0.0)))
    return float(np.sum(lp)), elbo, kl


def random_init(data, k, seed, weights=None):
    """Means drawn from the distinct data values, sigmas at the data spread, weights uniform."""
    x = _data(data)
    vals = np.unique(x)
    mus = np.sort(make_rng(seed).choice(vals, size=k, replace=vals.size < k))
    s = float(np.std(x)) or 1.0
    w = np.full(k, 1.0 / k) if weights is None else weights
    return GaussianMixture.from_params(w, mus, np.full(k, s))
