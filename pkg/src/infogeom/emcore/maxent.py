"""Maximum-entropy distributions on a finite support via the convex dual.

The solution has the Boltzmann form p_i = exp(-sum_k lambda_k f_k(x_i)) / Z.
The dual objective L(lambda) = log Z(lambda) + lambda . g is smooth and
convex with gradient g - E_p[f] and Hessian Cov_p(f).
"""

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from ..errors import ArgumentError, ConvergenceError, InfeasibleError
from ..models import DiscreteDistribution

LAMBDA_BLOWUP = 1e12


def power_moment(k):
    """f(x) = x^k."""

    def f(x):
        return float(x) ** k

    f.__name__ = f"x^{k}"
    return f


@dataclass(frozen=True, eq=False)
class MaxEntProblem:
    support: Sequence
    constraint_fns: Sequence[Callable]
    targets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "constraint_fns", tuple(self.constraint_fns))
        g = np.atleast_1d(np.asarray(self.targets, dtype=float))
        object.__setattr__(self, "targets", g)
        n, m = len(self.support), len(self.constraint_fns)
        if n < 1:
            raise ArgumentError("support must be non-empty")
        if g.size != m:
            raise ArgumentError(f"{m} constraints but {g.size} targets")
        if m >= n:
            raise ArgumentError("need fewer constraints than support points")

    @property
    def features(self):
        """(n, m) matrix f_k(x_i)."""
        n, m = len(self.support), len(self.constraint_fns)
        F = np.empty((n, m))
        for i, x in enumerate(self.support):
            for k, f in enumerate(self.constraint_fns):
                F[i, k] = f(x)
        return F

    def with_targets(self, g):
        return MaxEntProblem(self.support, self.constraint_fns, g)


@dataclass(frozen=True, eq=False)
class MaxEntSolution:
    distribution: DiscreteDistribution
    lambdas: np.ndarray
    log_partition: float
    entropy: float
    iterations: int = 0


def _log_partition(F, lam):
    return float(logsumexp(-F @ lam))


def boltzmann(F, lam):
    """Normalized exp(-F lam) and log Z."""
    e = -F @ lam
    logZ = float(logsumexp(e))
    p = np.exp(e - logZ)
    return p / p.sum(), logZ


def check_feasible(problem):
    """LP test that the targets lie in the convex hull of the feature rows."""
    F = problem.features
    n, m = F.shape
    if m == 0:
        return True
    A_eq = np.vstack([F.T, np.ones((1, n))])
    b_eq = np.append(problem.targets, 1.0)
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    return res.status == 0


def maxent_solve(problem: MaxEntProblem, tol=1e-10, max_iter=500):
    """Damped Newton on the dual, starting from lambda = 0.

    Damping starts at 1e-3, grows tenfold whenever a step fails to improve
    the dual and shrinks after a successful one.
    """
    F = problem.features
    g = problem.targets
    m = F.shape[1]
    if not check_feasible(problem):
        raise InfeasibleError(f"targets {g.tolist()} are outside the convex hull of the constraint features")
    lam = np.zeros(m)
    if m == 0:
        n = len(problem.support)
        return MaxEntSolution(DiscreteDistribution.uniform(problem.support), lam, math.log(n), math.log(n), 0)
    p, logZ = boltzmann(F, lam)

    def dual(lam_):
        return _log_partition(F, lam_) + lam_ @ g

    mu = 1e-3
    val = dual(lam)
    it = 0
    for it in range(1, max_iter + 1):
        mean = p @ F
        grad = g - mean
        if np.max(np.abs(grad)) < tol:
            break
        C = F - mean
        H = (C * p[:, None]).T @ C
        while True:
            step = np.linalg.solve(H + mu * np.eye(m), grad)
            trial = lam - step
            tval = dual(trial)
            p_t, _ = boltzmann(F, trial)
            tgrad = g - p_t @ F
            if tval < val or np.max(np.abs(tgrad)) < np.max(np.abs(grad)):
                lam, val = trial, tval
                mu = max(mu / 10, 1e-15)
                break
            mu *= 10
            if mu > 1e20:
                raise ConvergenceError("damping grew without bound; Hessian is numerically singular")
        if np.max(np.abs(lam)) > LAMBDA_BLOWUP:
            raise InfeasibleError("dual diverged; targets lie on the boundary of the feasible set")
        p, logZ = boltzmann(F, lam)
    else:
        raise ConvergenceError(f"maxent dual did not converge in {max_iter} iterations")
    entropy = logZ + float(lam @ (p @ F))
    return MaxEntSolution(DiscreteDistribution(problem.support, p), lam, logZ, entropy, it)


@dataclass(frozen=True, eq=False)
class GradientIdentityReport:
    dS_dg: np.ndarray
    dlogZ_dlambda: np.ndarray
    lambda_deviation: float  # max |dS/dg_k - lambda_k|
    target_deviation: float  # max |dlogZ/dlambda_l + g_l|

    @property
    def max_deviation(self):
        return max(self.lambda_deviation, self.target_deviation)


def maxent_gradient_identities(solution: MaxEntSolution, problem: MaxEntProblem, h=1e-4):
    """Check dS/dg_k = lambda_k and dlogZ/dlambda_l = -g_l by central differences."""
    F = problem.features
    g = problem.targets
    m = g.size
    dS = np.empty(m)
    dZ = np.empty(m)
    for k in range(m):
        e = np.zeros(m)
        e[k] = h
        up = maxent_solve(problem.with_targets(g + e)).entropy
        dn = maxent_solve(problem.with_targets(g - e)).entropy
        dS[k] = (up - dn) / (2 * h)
        dZ[k] = (_log_partition(F, solution.lambdas + e) - _log_partition(F, solution.lambdas - e)) / (2 * h)
    lam_dev = float(np.max(np.abs(dS - solution.lambdas))) if m else 0.0
    tgt_dev = float(np.max(np.abs(dZ + g))) if m else 0.0
    return GradientIdentityReport(dS, dZ, lam_dev, tgt_dev)

