"""Information-geometric quantities.

Natural logarithms everywhere. Parameter families expose
``log_pdf(theta, x)``; the Gaussian family uses ``theta = (mu, sigma)``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from . import numdiff
from .errors import ArgumentError, IntegrationError, SupportError
from .models import DiscreteDistribution, GaussianMixture, UnivariateGaussian
from .rng import make_rng

QUAD_EPSABS = 1e-10


# ---------------------------------------------------------------------------
# parametric families


class GaussianFamily:
    """Univariate normal family in (mu, sigma) coordinates."""

    name = "gaussian"
    dim = 2

    def distribution(self, theta):
        return UnivariateGaussian(float(theta[0]), float(theta[1]))

    def log_pdf(self, theta, x):
        return self.distribution(theta).log_pdf(x)

    def score(self, theta, x):
        mu, s = float(theta[0]), float(theta[1])
        d = np.asarray(x, dtype=float) - mu
        return np.stack([d / s**2, d**2 / s**3 - 1.0 / s], axis=-1)

    def bracket(self, theta, width=12.0):
        return self.distribution(theta).bracket(width)

    def sample(self, theta, n, seed):
        return self.distribution(theta).sample(n, seed)


@dataclass(frozen=True)
class ParametricFamily:
    """Generic family; ``score`` falls back to central differences (step 1e-5)."""

    log_pdf: Callable
    dim: int
    bracket: Optional[Callable] = None
    sampler: Optional[Callable] = None
    score: Optional[Callable] = None
    name: str = "custom"

    def sample(self, theta, n, seed):
        return self.sampler(theta, n, seed)


def score(family, theta, x):
    """Gradient of log f(x; theta) in theta; shape (d,) or (n, d)."""
    theta = np.asarray(theta, dtype=float)
    fn = getattr(family, "score", None)
    if fn is not None:
        return np.asarray(fn(theta, x), dtype=float)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    h = 1e-5
    cols = []
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        cols.append((np.asarray(family.log_pdf(theta + e, xs)) - np.asarray(family.log_pdf(theta - e, xs))) / (2 * h))
    out = np.stack(cols, axis=-1)
    return out if np.ndim(x) else out[0]


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """Metric estimate with a positive-definiteness flag (never an exception)."""

    entries: np.ndarray
    positive_definite: bool = True
    asymmetry: float = 0.0

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    @classmethod
    def from_matrix(cls, M, asymmetry=0.0):
        M = np.asarray(M, dtype=float)
        ev = np.linalg.eigvalsh(M)
        pd = bool(ev.min() > 1e-12 * max(1.0, abs(ev.max())))
        return cls(M, pd, float(asymmetry))


def fim_analytic_gaussian(sigma):
    """(1 / sigma^2) diag(1, 2) in (mu, sigma) coordinates."""
    if not sigma > 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    return FisherMatrix(np.diag([1.0, 2.0]) / sigma**2)


def fim_empirical(family, theta, samples):
    """Mean outer product of the score over ``samples``."""
    x = np.asarray(samples, dtype=float)
    d = len(np.atleast_1d(theta))
    if x.size < d + 1:
        raise ArgumentError(f"need at least {d + 1} samples")
    S = score(family, theta, x)
    return FisherMatrix.from_matrix(S.T @ S / x.size)


def family_kl(family, theta, theta2):
    """KL(p_theta || p_theta2) by quadrature over the union of both brackets."""
    lo1, hi1 = family.bracket(theta)
    lo2, hi2 = family.bracket(theta2)
    lo, hi = min(lo1, lo2), max(hi1, hi2)

    def integrand(x):
        lp = family.log_pdf(theta, x)
        return math.exp(lp) * (lp - family.log_pdf(theta2, x))

    return _quad(integrand, lo, hi)


def _quad(fn, lo, hi, points=None):
    pts = None
    if points is not None:
        pts = sorted(p for p in points if lo < p < hi) or None
    val, err = integrate.quad(fn, lo, hi, points=pts, epsabs=QUAD_EPSABS, epsrel=1e-10, limit=500)
    if not np.isfinite(val) or err > 1e3 * QUAD_EPSABS + 1e-8 * abs(val):
        raise IntegrationError(f"quadrature did not converge (estimate {val}, error {err})")
    return val


def fim_from_kl_hessian(family, theta, h=1e-3):
    """Hessian of theta' -> KL(p_theta || p_theta') at theta' = theta."""
    theta = np.asarray(theta, dtype=float)
    H = numdiff.hessian(lambda t: family_kl(family, theta, t), theta, h=h)
    asym = float(np.max(np.abs(H - H.T)))
    return FisherMatrix.from_matrix(0.5 * (H + H.T), asym)


# ---------------------------------------------------------------------------
# divergences and entropy


def _as_probs(p):
    if isinstance(p, DiscreteDistribution):
        return p.support, p.probs
    arr = np.asarray(p, dtype=float)
    return tuple(range(arr.size)), arr


def _aligned(p, q):
    sp, pp = _as_probs(p)
    sq, qq = _as_probs(q)
    if sp == sq:
        return pp, qq
    index = {x: i for i, x in enumerate(sq)}
    qa = np.zeros(len(sp))
    for i, x in enumerate(sp):
        if x in index:
            qa[i] = qq[index[x]]
    return pp, qa


def _is_continuous(p):
    return isinstance(p, (UnivariateGaussian, GaussianMixture)) or (hasattr(p, "log_pdf") and hasattr(p, "bracket") and not isinstance(p, DiscreteDistribution))


def kl_divergence(p, q):
    """D_KL(p || q) for finite distributions or one-dimensional densities."""
    if _is_continuous(p) or _is_continuous(q):
        return _kl_continuous(p, q)
    pp, qq = _aligned(p, q)
    mask = pp > 0
    if np.any(qq[mask] <= 0):
        raise SupportError("p puts mass where q has none")
    val = float(np.sum(pp[mask] * (np.log(pp[mask]) - np.log(qq[mask]))))
    return max(val, 0.0)


def _centers(d):
    if isinstance(d, GaussianMixture):
        return list(d.mus)
    if isinstance(d, UnivariateGaussian):
        return [d.mu]
    return []


def _kl_continuous(p, q):
    lo1, hi1 = p.bracket()
    lo2, hi2 = q.bracket()
    lo, hi = min(lo1, lo2), max(hi1, hi2)

    def integrand(x):
        lp = float(p.log_pdf(x))
        if lp == -math.inf:
            return 0.0
        return math.exp(lp) * (lp - float(q.log_pdf(x)))

    val = _quad(integrand, lo, hi, points=_centers(p) + _centers(q))
    return max(val, 0.0)


def kl_monte_carlo(p, q, n, seed):
    """Monte-Carlo KL estimate and its standard error, for densities without a bracket."""
    x = np.asarray(p.sample(n, seed), dtype=float)
    terms = np.asarray(p.log_pdf(x)) - np.asarray(q.log_pdf(x))
    return float(terms.mean()), float(terms.std(ddof=1) / math.sqrt(len(terms)))


def entropy(p):
    """Shannon entropy in nats; 0 log 0 = 0. Densities give differential entropy."""
    if _is_continuous(p):
        lo, hi = p.bracket()

        def integrand(x):
            lp = float(p.log_pdf(x))
            return 0.0 if lp == -math.inf else -math.exp(lp) * lp

        return _quad(integrand, lo, hi, points=_centers(p))
    _, pp = _as_probs(p)
    nz = pp[pp > 0]
    return float(-np.sum(nz * np.log(nz)))


@dataclass(frozen=True)
class BregmanGenerator:
    F: Callable
    gradF: Optional[Callable] = None
    domain: str = "R^n"

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.gradF is not None:
            return np.asarray(self.gradF(x), dtype=float)
        return numdiff.gradient(self.F, x)


def squared_euclidean_generator():
    return BregmanGenerator(lambda x: 0.5 * float(np.dot(x, x)), lambda x: np.asarray(x, dtype=float))


def negative_entropy_generator():
    """F(x) = sum x log x on the positive orthant; B_F is generalized KL."""
    return BregmanGenerator(
        lambda x: float(np.sum(x * np.log(x))),
        lambda x: np.log(x) + 1.0,
        domain="positive orthant",
    )


def bregman_divergence(gen, theta, theta0):
    """F(theta) - F(theta0) - (theta - theta0) . grad F(theta0)."""
    theta = np.asarray(theta, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    return float(gen.F(theta) - gen.F(theta0) - (theta - theta0) @ gen.grad(theta0))


def divergence_induced_metric(D, theta0, h=1e-3):
    """g_ij = -d^2 D(theta : theta') / d theta_i d theta'_j at theta = theta' = theta0.

    Symmetrized; the raw asymmetry is kept as a diagnostic and a non-PD
    result is flagged rather than raised.
    """
    theta0 = np.asarray(theta0, dtype=float)
    M = -numdiff.mixed_partials(D, theta0, theta0, h=h)
    asym = float(np.max(np.abs(M - M.T)))
    return FisherMatrix.from_matrix(0.5 * (M + M.T), asym)


def kl_gaussian_divergence(theta, theta2):
    """D(theta : theta') = KL(N(theta) || N(theta')) by quadrature."""
    return family_kl(GaussianFamily(), theta, theta2)


# ---------------------------------------------------------------------------
# e- and m-geodesics


def _check_t(t):
    if not 0.0 <= t <= 1.0:
        raise ArgumentError(f"t must lie in [0, 1], got {t}")


def _wrap(p, probs):
    if isinstance(p, DiscreteDistribution):
        return DiscreteDistribution(p.support, probs)
    return probs


def m_geodesic(p, q, t):
    """(1 - t) p + t q."""
    _check_t(t)
    if isinstance(p, (UnivariateGaussian, GaussianMixture)) and isinstance(q, (UnivariateGaussian, GaussianMixture)):
        pc = p.components if isinstance(p, GaussianMixture) else (p,)
        pw = p.weights if isinstance(p, GaussianMixture) else (1.0,)
        qc = q.components if isinstance(q, GaussianMixture) else (q,)
        qw = q.weights if isinstance(q, GaussianMixture) else (1.0,)
        w = [(1 - t) * a for a in pw] + [t * b for b in qw]
        return GaussianMixture(tuple(np.asarray(w) / sum(w)), tuple(pc) + tuple(qc))
    pp, qq = _aligned(p, q)
    r = (1 - t) * pp + t * qq
    return _wrap(p, r / r.sum())


@dataclass(frozen=True)
class GeometricInterpolant:
    """Density proportional to p^(1-t) q^t; ``a`` is the log normalizer a(t)."""

    p: object
    q: object
    t: float
    a: float

    def log_pdf(self, x):
        return (1 - self.t) * np.asarray(self.p.log_pdf(x)) + self.t * np.asarray(self.q.log_pdf(x)) - self.a

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def bracket(self):
        lo1, hi1 = self.p.bracket()
        lo2, hi2 = self.q.bracket()
        return (min(lo1, lo2), max(hi1, hi2))


def e_geodesic(p, q, t):
    """Normalized geometric interpolation exp((1-t) log p + t log q - a(t))."""
    _check_t(t)
    if _is_continuous(p) and _is_continuous(q):
        lo1, hi1 = p.bracket()
        lo2, hi2 = q.bracket()

        def integrand(x):
            return math.exp((1 - t) * float(p.log_pdf(x)) + t * float(q.log_pdf(x)))

        a = math.log(_quad(integrand, min(lo1, lo2), max(hi1, hi2), points=_centers(p) + _centers(q)))
        return GeometricInterpolant(p, q, float(t), a)
    pp, qq = _aligned(p, q)
    if np.any(pp <= 0) or np.any(qq <= 0):
        raise SupportError("e-geodesic needs strictly positive endpoints")
    logs = (1 - t) * np.log(pp) + t * np.log(qq)
    a = logsumexp(logs)
    r = np.exp(logs - a)
    return _wrap(p, r / r.sum())


def total_variation(p, q):
    pp, qq = _aligned(p, q)
    return 0.5 * float(np.sum(np.abs(pp - qq)))


# ---------------------------------------------------------------------------
# dually flat structures


@dataclass(frozen=True)
class DuallyFlatStructure:
    """Dual affine charts theta/eta with Legendre-conjugate potentials psi/phi.

    ``from_eta`` inverts the dual chart (raising ValueError off the domain)
    and ``sampler(rng)`` draws a random point; both are used to build test
    triples.
    """

    name: str
    theta_of: Callable
    eta_of: Callable
    psi: Callable
    phi: Callable
    from_eta: Optional[Callable] = None
    from_theta: Optional[Callable] = None
    sampler: Optional[Callable] = None

    def theta(self, P):
        return np.asarray(self.theta_of(P), dtype=float)

    def eta(self, P):
        return np.asarray(self.eta_of(P), dtype=float)


def quadratic_structure(A=None, dim=2):
    """psi = 1/2 theta'A theta, eta = A theta, phi = 1/2 eta'A^-1 eta; self-dual at A = I."""
    A = np.eye(dim) if A is None else np.asarray(A, dtype=float)
    Ainv = np.linalg.inv(A)
    d = A.shape[0]
    return DuallyFlatStructure(
        name="quadratic",
        theta_of=lambda P: np.asarray(P, dtype=float),
        eta_of=lambda P: A @ np.asarray(P, dtype=float),
        psi=lambda th: 0.5 * float(th @ A @ th),
        phi=lambda et: 0.5 * float(et @ Ainv @ et),
        from_eta=lambda et: Ainv @ np.asarray(et, dtype=float),
        from_theta=lambda th: np.asarray(th, dtype=float),
        sampler=lambda rng: rng.normal(size=d),
    )


def _simplex_from_eta(et):
    et = np.asarray(et, dtype=float)
    last = 1.0 - et.sum()
    p = np.append(et, last)
    if np.any(p <= 0):
        raise ValueError("eta outside the open simplex")
    return p


def _neg_entropy_eta(et):
    p = _simplex_from_eta(et)
    return float(np.sum(p * np.log(p)))


def simplex_structure(n=3):
    """Categorical distributions on n points.

    theta_i = log(p_i / p_n), eta_i = p_i (i < n), psi = log-partition,
    phi = negative entropy. The canonical divergence D(P, Q) is KL(Q || P).
    """

    def theta_of(P):
        P = np.asarray(P, dtype=float)
        return np.log(P[:-1]) - math.log(P[-1])

    def from_theta(th):
        z = np.append(th, 0.0)
        return np.exp(z - logsumexp(z))

    return DuallyFlatStructure(
        name="simplex",
        theta_of=theta_of,
        eta_of=lambda P: np.asarray(P, dtype=float)[:-1],
        psi=lambda th: float(logsumexp(np.append(th, 0.0))),
        phi=_neg_entropy_eta,
        from_eta=_simplex_from_eta,
        from_theta=from_theta,
        sampler=lambda rng: rng.dirichlet(np.full(n, 2.0)),
    )


def _gaussian_from_eta(et):
    m, s2 = float(et[0]), float(et[1]) - float(et[0]) ** 2
    if s2 <= 0:
        raise ValueError("eta outside the Gaussian domain")
    return np.array([m, math.sqrt(s2)])


def gaussian_structure():
    """Univariate Gaussians; points are (mu, sigma).

    theta = (mu / s^2, -1 / 2 s^2), eta = (mu, mu^2 + s^2), psi is the log
    partition (h = 1), phi the negative differential entropy. D(P, Q) = KL(Q || P).
    """

    def theta_of(P):
        m, s = float(P[0]), float(P[1])
        return np.array([m / s**2, -0.5 / s**2])

    def eta_of(P):
        m, s = float(P[0]), float(P[1])
        return np.array([m, m * m + s * s])

    def psi(th):
        return -th[0] ** 2 / (4 * th[1]) + 0.5 * math.log(-math.pi / th[1])

    def phi(et):
        s2 = et[1] - et[0] ** 2
        return -0.5 * (1.0 + math.log(2 * math.pi * s2))

    def from_theta(th):
        s2 = -0.5 / th[1]
        return np.array([th[0] * s2, math.sqrt(s2)])

    return DuallyFlatStructure(
        name="gaussian",
        theta_of=theta_of,
        eta_of=eta_of,
        psi=psi,
        phi=phi,
        from_eta=_gaussian_from_eta,
        from_theta=from_theta,
        sampler=lambda rng: np.array([rng.uniform(-2, 2), rng.uniform(0.5, 2.0)]),
    )


STRUCTURES = {
    "quadratic": quadratic_structure,
    "simplex": simplex_structure,
    "gaussian": gaussian_structure,
}


def dual(structure):
    """Swap the roles of (theta, psi) and (eta, phi)."""
    return DuallyFlatStructure(
        name=structure.name + "*",
        theta_of=structure.eta_of,
        eta_of=structure.theta_of,
        psi=structure.phi,
        phi=structure.psi,
        from_eta=structure.from_theta,
        from_theta=structure.from_eta,
        sampler=structure.sampler,
    )


def legendre_residuals(structure, P, h=1e-5):
    """(|grad psi(theta) - eta|, |grad phi(eta) - theta|, |psi + phi - theta.eta|) at P."""
    th, et = structure.theta(P), structure.eta(P)
    r1 = float(np.max(np.abs(numdiff.gradient(structure.psi, th, h) - et)))
    r2 = float(np.max(np.abs(numdiff.gradient(structure.phi, et, h) - th)))
    r3 = abs(structure.psi(th) + structure.phi(et) - th @ et)
    return r1, r2, r3


def canonical_divergence(structure, P, Q):
    """psi(theta(P)) + phi(eta(Q)) - theta(P) . eta(Q)."""
    th = structure.theta(P)
    et = structure.eta(Q)
    return float(structure.psi(th) + structure.phi(et) - th @ et)


@dataclass(frozen=True)
class PythagorasResidual:
    gap: float
    inner: float
    D_PQ: float
    D_QR: float
    D_PR: float


def pythagoras_residual(structure, P, Q, R):
    """gap = D(P,Q) + D(Q,R) - D(P,R) and inner = (theta(Q) - theta(P)) . (eta(Q) - eta(R)).

    The two agree for every triple; the Pythagorean relation is the case
    inner = 0.
    """
    dpq = canonical_divergence(structure, P, Q)
    dqr = canonical_divergence(structure, Q, R)
    dpr = canonical_divergence(structure, P, R)
    inner = float((structure.theta(Q) - structure.theta(P)) @ (structure.eta(Q) - structure.eta(R)))
    return PythagorasResidual(dpq + dqr - dpr, inner, dpq, dqr, dpr)


@dataclass(frozen=True)
class OrthogonalityReport:
    orthogonal: bool
    which: Optional[str]
    primal_dual: float  # (theta(P) - theta(Q)) . (eta(Q) - eta(R))
    dual_primal: float  # (eta(P) - eta(Q)) . (theta(Q) - theta(R))

    @property
    def residual(self):
        return min(abs(self.primal_dual), abs(self.dual_primal))


def orthogonality_check(structure, P, Q, R, tol=1e-9):
    """Evaluate both orthogonality inner products at the corner Q.

    ``which`` is "primal-dual" when the theta-geodesic PQ meets the
    eta-geodesic QR at a right angle, "dual-primal" for the reverse pairing.
    """
    thP, thQ, thR = structure.theta(P), structure.theta(Q), structure.theta(R)
    etP, etQ, etR = structure.eta(P), structure.eta(Q), structure.eta(R)
    pd = float((thP - thQ) @ (etQ - etR))
    dp = float((etP - etQ) @ (thQ - thR))
    which = None
    if abs(pd) < tol:
        which = "primal-dual"
    elif abs(dp) < tol:
        which = "dual-primal"
    return OrthogonalityReport(which is not None, which, pd, dp)


def orthogonal_point(structure, P, Q, rng, scale=0.5, max_halvings=60):
    """A point R with (theta(Q) - theta(P)) . (eta(Q) - eta(R)) = 0.

    R moves away from Q along a random eta-direction orthogonal to
    theta(Q) - theta(P); the step is halved until R is a valid point.
    """
    d = structure.theta(Q) - structure.theta(P)
    etQ = structure.eta(Q)
    w = rng.normal(size=etQ.size)
    nd = d @ d
    if nd > 0:
        w = w - (w @ d) / nd * d
    nw = np.linalg.norm(w)
    if nw == 0:
        raise ArgumentError("cannot build an orthogonal direction")
    w = w / nw
    step = scale
    for _ in range(max_halvings):
        try:
            return structure.from_eta(etQ + step * w)
        except ValueError:
            step *= 0.5
    raise ArgumentError("no valid orthogonal point found")


def random_triple(structure, seed):
    rng = make_rng(seed)
    return structure.sampler(rng), structure.sampler(rng), structure.sampler(rng)


# ---------------------------------------------------------------------------
# Poincare half-plane comparison


@dataclass(frozen=True, eq=False)
class PoincareEntry:
    sigma: float
    pulled_back: np.ndarray
    poincare: np.ndarray
    ratio: float


def poincare_comparison(sigma_grid):
    """Gaussian FIM in (u, sigma) with u = mu / sqrt(2), against ds^2 = (du^2 + dsigma^2) / sigma^2.

    The pull-back is (2 / sigma^2) I, so the two metrics differ by the
    constant factor 2 rather than coinciding.
    """
    J = np.diag([math.sqrt(2.0), 1.0])  # d(mu, sigma) / d(u, sigma)
    out = []
    for s in sigma_grid:
        s = float(s)
        if not s > 0:
            raise ArgumentError("sigma grid must be positive")
        G = J.T @ fim_analytic_gaussian(s).entries @ J
        P = np.eye(2) / s**2
        ratios = np.diag(G) / np.diag(P)
        out.append(PoincareEntry(s, G, P, float(ratios.mean())))
    return out
