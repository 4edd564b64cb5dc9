"""Differential geometry of parameterized surfaces in R^3.

Coordinates are ``(u, v)``; index 0 is ``u`` and index 1 is ``v`` in every
array below. For the torus the ordering is ``(u, v) = (phi, theta)``: phi is
the angle around the central axis and theta the angle around the tube, so
the metric is ``diag((R + r cos theta)^2, r^2)``.

All quantities are computed from the embedding's partial derivatives up to
third order. Analytic partials are used when the patch supplies them,
otherwise central differences (``fd_step`` for first partials, ``fd_step2``
for second; third partials difference the second-order map).

Curvature conventions::

    Gamma^k_ij    christoffel(...).gamma[k, i, j]
    R^i_jkl       riemann_tensor(...).r[i, j, k, l]
                  = d_k Gamma^i_lj - d_l Gamma^i_kj
                    + Gamma^i_kp Gamma^p_lj - Gamma^i_lp Gamma^p_kj
    sectional K   = g_0p R^p_101 / det g
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, DegeneracyError, DomainError, TrajectoryEscape

INF = float("inf")


@dataclass(frozen=True)
class SurfacePatch:
    """A parameterized surface ``(u, v) -> R^3``.

    ``first_partials`` returns ``(x_u, x_v)``, ``second_partials`` returns
    ``(x_uu, x_uv, x_vv)`` and ``third_partials`` returns
    ``(x_uuu, x_uuv, x_uvv, x_vvv)``. Any of them may be omitted.
    """

    embedding: Callable
    first_partials: Optional[Callable] = None
    second_partials: Optional[Callable] = None
    third_partials: Optional[Callable] = None
    domain: tuple = ((-INF, INF), (-INF, INF))
    fd_step: float = 1e-5
    fd_step2: float = 1e-4
    name: str = "surface"
    params: dict = field(default_factory=dict)

    def contains(self, u, v):
        (u0, u1), (v0, v1) = self.domain
        return u0 <= u <= u1 and v0 <= v <= v1

    def point(self, u, v):
        return np.asarray(self.embedding(u, v), dtype=float)


@dataclass(frozen=True)
class FundamentalForm:
    e: float
    f: float
    g: float
    kind: str = "first"

    @property
    def matrix(self):
        return np.array([[self.e, self.f], [self.f, self.g]])


@dataclass(frozen=True)
class ChristoffelSymbols:
    gamma: np.ndarray  # [k, i, j]

    def __getitem__(self, idx):
        return self.gamma[idx]


@dataclass(frozen=True)
class RiemannTensor:
    r: np.ndarray  # [i, j, k, l]

    def __getitem__(self, idx):
        return self.r[idx]


# ---------------------------------------------------------------------------
# derivative jets


def _first(s, u, v):
    if s.first_partials is not None:
        xu, xv = s.first_partials(u, v)
        return np.array([xu, xv], dtype=float)
    h = s.fd_step
    xu = (s.point(u + h, v) - s.point(u - h, v)) / (2 * h)
    xv = (s.point(u, v + h) - s.point(u, v - h)) / (2 * h)
    return np.array([xu, xv])


def _pack2(xuu, xuv, xvv):
    return np.array([[xuu, xuv], [xuv, xvv]], dtype=float)


def _second(s, u, v):
    if s.second_partials is not None:
        return _pack2(*s.second_partials(u, v))
    h = s.fd_step2
    if s.first_partials is not None:
        du = (_first(s, u + h, v) - _first(s, u - h, v)) / (2 * h)
        dv = (_first(s, u, v + h) - _first(s, u, v - h)) / (2 * h)
        xuv = 0.5 * (du[1] + dv[0])
        return _pack2(du[0], xuv, dv[1])
    x0 = s.point(u, v)
    xuu = (s.point(u + h, v) - 2 * x0 + s.point(u - h, v)) / h**2
    xvv = (s.point(u, v + h) - 2 * x0 + s.point(u, v - h)) / h**2
    xuv = (s.point(u + h, v + h) - s.point(u + h, v - h) - s.point(u - h, v + h) + s.point(u - h, v - h)) / (4 * h**2)
    return _pack2(xuu, xuv, xvv)


def _third(s, u, v):
    if s.third_partials is not None:
        a, b, c, d = (np.asarray(t, dtype=float) for t in s.third_partials(u, v))
        X3 = np.empty((2, 2, 2, 3))
        # number of v-indices selects the entry
        table = {0: a, 1: b, 2: c, 3: d}
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    X3[i, j, k] = table[i + j + k]
        return X3
    # coarser step when the second partials are themselves numeric
    h = s.fd_step2 if s.second_partials is not None else 10 * s.fd_step2
    du = (_second(s, u + h, v) - _second(s, u - h, v)) / (2 * h)
    dv = (_second(s, u, v + h) - _second(s, u, v - h)) / (2 * h)
    X3 = np.stack([du, dv])
    # symmetrize over all index orders so mixed entries agree
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    return sum(np.transpose(X3, p + (3,)) for p in perms) / 6


def _check_domain(s, u, v):
    if not (np.isfinite(u) and np.isfinite(v)) or not s.contains(u, v):
        raise DomainError(f"({u}, {v}) outside domain {s.domain} of {s.name}")


def _metric_jet(s, u, v, order=1):
    """Metric, its first derivatives and (order 2) second derivatives.

    dg[k, i, j] = d_k g_ij and ddg[l, k, i, j] = d_l d_k g_ij.
    """
    X1 = _first(s, u, v)
    g = X1 @ X1.T
    if order == 0:
        return g, None, None
    X2 = _second(s, u, v)
    A = np.einsum("kia,ja->kij", X2, X1)
    dg = A + A.transpose(0, 2, 1)
    if order == 1:
        return g, dg, None
    X3 = _third(s, u, v)
    B = np.einsum("lkia,ja->lkij", X3, X1)
    C = np.einsum("kia,lja->lkij", X2, X2)
    ddg = B + B.transpose(0, 1, 3, 2) + C + C.transpose(0, 1, 3, 2)
    return g, dg, ddg


def _inverse_metric(g):
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    if not det > 1e-14 * max(1.0, abs(g[0, 0] * g[1, 1])):
        raise DegeneracyError(f"singular metric (det = {det})")
    return np.array([[g[1, 1], -g[0, 1]], [-g[0, 1], g[0, 0]]]) / det, det


def _first_kind(dg):
    # Gamma_lij = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    return 0.5 * (dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg)


def _gamma_and_derivative(s, u, v, with_derivative):
    g, dg, ddg = _metric_jet(s, u, v, order=2 if with_derivative else 1)
    ginv, _ = _inverse_metric(g)
    G1 = _first_kind(dg)
    gamma = np.einsum("kl,lij->kij", ginv, G1)
    gamma = 0.5 * (gamma + gamma.transpose(0, 2, 1))
    if not with_derivative:
        return gamma, None
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dG1 = 0.5 * (ddg.transpose(0, 3, 1, 2) + ddg.transpose(0, 3, 2, 1) - ddg)
    dgamma = np.einsum("mkl,lij->mkij", dginv, G1) + np.einsum("kl,mlij->mkij", ginv, dG1)
    dgamma = 0.5 * (dgamma + dgamma.transpose(0, 1, 3, 2))
    return gamma, dgamma


# ---------------------------------------------------------------------------
# public operations


def first_fundamental_form(s, u, v):
    _check_domain(s, u, v)
    g, _, _ = _metric_jet(s, u, v, order=0)
    _inverse_metric(g)
    return FundamentalForm(g[0, 0], g[0, 1], g[1, 1], "first")


def unit_normal(s, u, v):
    X1 = _first(s, u, v)
    n = np.cross(X1[0], X1[1])
    norm = np.linalg.norm(n)
    if norm < 1e-12 * max(1.0, np.linalg.norm(X1[0]) * np.linalg.norm(X1[1])):
        raise DegeneracyError(f"zero normal at ({u}, {v})")
    return n / norm


def second_fundamental_form(s, u, v):
    """Raw second fundamental form L = x_uu.n, M = x_uv.n, N = x_vv.n."""
    _check_domain(s, u, v)
    n = unit_normal(s, u, v)
    X2 = _second(s, u, v)
    return FundamentalForm(X2[0, 0] @ n, X2[0, 1] @ n, X2[1, 1] @ n, "second")


def shape_operator(s, u, v):
    """Weingarten map ``I^-1 II``; its eigenvalues are the principal curvatures.

    Signs follow the normal ``x_u x x_v / |x_u x x_v|``.
    """
    I = first_fundamental_form(s, u, v).matrix
    II = second_fundamental_form(s, u, v).matrix
    return np.linalg.solve(I, II)


def principal_curvatures(s, u, v):
    return np.sort(np.linalg.eigvals(shape_operator(s, u, v)).real)


def gaussian_curvature(s, u, v):
    I = first_fundamental_form(s, u, v)
    II = second_fundamental_form(s, u, v)
    return (II.e * II.g - II.f**2) / (I.e * I.g - I.f**2)


def mean_curvature(s, u, v):
    return 0.5 * np.trace(shape_operator(s, u, v))


def christoffel(s, u, v):
    _check_domain(s, u, v)
    gamma, _ = _gamma_and_derivative(s, u, v, with_derivative=False)
    return ChristoffelSymbols(gamma)


def riemann_tensor(s, u, v):
    _check_domain(s, u, v)
    G, dG = _gamma_and_derivative(s, u, v, with_derivative=True)
    R = (
        np.einsum("kilj->ijkl", dG)
        - np.einsum("likj->ijkl", dG)
        + np.einsum("ikp,plj->ijkl", G, G)
        - np.einsum("ilp,pkj->ijkl", G, G)
    )
    R = 0.5 * (R - R.transpose(0, 1, 3, 2))
    return RiemannTensor(R)


def sectional_curvature(s, u, v):
    g = first_fundamental_form(s, u, v).matrix
    R = riemann_tensor(s, u, v).r
    num = g[0, 0] * R[0, 1, 0, 1] + g[0, 1] * R[1, 1, 0, 1]
    return num / (g[0, 0] * g[1, 1] - g[0, 1] ** 2)


def _det3(M):
    # cofactor expansion; LAPACK's LU warns on exactly singular input
    return (
        M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
        - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
        + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
    )


def intrinsic_curvature(s, u, v):
    """Gaussian curvature from the first fundamental form alone (Brioschi)."""
    _check_domain(s, u, v)
    g, dg, ddg = _metric_jet(s, u, v, order=2)
    E, F, G = g[0, 0], g[0, 1], g[1, 1]
    det = E * G - F**2
    if det <= 0:
        raise DegeneracyError(f"singular metric (det = {det})")
    E_u, E_v = dg[0, 0, 0], dg[1, 0, 0]
    F_u, F_v = dg[0, 0, 1], dg[1, 0, 1]
    G_u, G_v = dg[0, 1, 1], dg[1, 1, 1]
    E_vv, F_uv, G_uu = ddg[1, 1, 0, 0], ddg[0, 1, 0, 1], ddg[0, 0, 1, 1]
    A = np.array(
        [
            [-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v],
            [F_v - 0.5 * G_u, E, F],
            [0.5 * G_v, F, G],
        ]
    )
    B = np.array(
        [
            [0.0, 0.5 * E_v, 0.5 * G_u],
            [0.5 * E_v, E, F],
            [0.5 * G_u, F, G],
        ]
    )
    return (_det3(A) - _det3(B)) / det**2


def metric_compatibility_residual(s, u, v, h=1e-5):
    """max |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|.

    The metric derivative is taken by central differences of the first
    fundamental form, independently of the jet used for the symbols.
    """
    g = first_fundamental_form(s, u, v).matrix
    G = christoffel(s, u, v).gamma
    dg = np.stack(
        [
            (first_fundamental_form(s, u + h, v).matrix - first_fundamental_form(s, u - h, v).matrix) / (2 * h),
            (first_fundamental_form(s, u, v + h).matrix - first_fundamental_form(s, u, v - h).matrix) / (2 * h),
        ]
    )
    rhs = np.einsum("lki,lj->kij", G, g) + np.einsum("lkj,il->kij", G, g)
    return float(np.max(np.abs(dg - rhs)))


@dataclass(frozen=True)
class GeodesicPath:
    """Geodesic samples; ``points[i]`` and ``velocities[i]`` at ``times[i]``."""

    points: np.ndarray
    velocities: np.ndarray
    times: np.ndarray

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(map(tuple, self.points))

    def speeds_squared(self, s):
        out = []
        for (u, v), w in zip(self.points, self.velocities):
            g = first_fundamental_form(s, u, v).matrix
            out.append(w @ g @ w)
        return np.array(out)


def _geodesic_rhs(s, y):
    u, v, du, dv = y
    if not (np.isfinite(u) and np.isfinite(v) and s.contains(u, v)):
        raise DomainError("stage left domain")
    G, _ = _gamma_and_derivative(s, u, v, with_derivative=False)
    w = np.array([du, dv])
    acc = -np.einsum("kij,i,j->k", G, w, w)
    return np.array([du, dv, acc[0], acc[1]])


def geodesic_shoot(s, start, velocity, t_max, steps):
    """Integrate u''^k + Gamma^k_ij u'^i u'^j = 0 with fixed-step RK4."""
    if steps < 2:
        raise ArgumentError("steps must be >= 2")
    u0, v0 = map(float, start)
    _check_domain(s, u0, v0)
    dt = float(t_max) / steps
    y = np.array([u0, v0, *map(float, velocity)])
    pts, vels, ts = [y[:2].copy()], [y[2:].copy()], [0.0]
    for n in range(steps):
        try:
            k1 = _geodesic_rhs(s, y)
            k2 = _geodesic_rhs(s, y + 0.5 * dt * k1)
            k3 = _geodesic_rhs(s, y + 0.5 * dt * k2)
            k4 = _geodesic_rhs(s, y + dt * k3)
        except (DomainError, DegeneracyError) as exc:
            raise TrajectoryEscape(f"geodesic left the domain after {n} steps: {exc}", np.array(pts)) from exc
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not s.contains(y[0], y[1]):
            raise TrajectoryEscape(f"geodesic left the domain after {n + 1} steps", np.array(pts))
        pts.append(y[:2].copy())
        vels.append(y[2:].copy())
        ts.append((n + 1) * dt)
    return GeodesicPath(np.array(pts), np.array(vels), np.array(ts))


# ---------------------------------------------------------------------------
# standard surfaces


def plane():
    zero = np.zeros(3)
    return SurfacePatch(
        embedding=lambda u, v: np.array([u, v, 0.0]),
        first_partials=lambda u, v: (np.array([1.0, 0, 0]), np.array([0, 1.0, 0])),
        second_partials=lambda u, v: (zero, zero, zero),
        third_partials=lambda u, v: (zero, zero, zero, zero),
        name="plane",
    )


def cylinder(radius=1.0):
    a = float(radius)
    zero = np.zeros(3)
    return SurfacePatch(
        embedding=lambda u, v: np.array([a * np.cos(u), a * np.sin(u), v]),
        first_partials=lambda u, v: (np.array([-a * np.sin(u), a * np.cos(u), 0.0]), np.array([0, 0, 1.0])),
        second_partials=lambda u, v: (np.array([-a * np.cos(u), -a * np.sin(u), 0.0]), zero, zero),
        third_partials=lambda u, v: (np.array([a * np.sin(u), -a * np.cos(u), 0.0]), zero, zero, zero),
        name="cylinder",
        params={"radius": a},
    )


def torus(R=2.0, r=1.0):
    """Torus with ``(u, v) = (phi, theta)``; R is the outer, r the tube radius."""
    R, r = float(R), float(r)
    if not (R > r > 0):
        raise ArgumentError("torus needs R > r > 0")

    def emb(p, t):
        rho = R + r * np.cos(t)
        return np.array([rho * np.cos(p), rho * np.sin(p), r * np.sin(t)])

    def d1(p, t):
        rho = R + r * np.cos(t)
        cp, sp, ct, st = np.cos(p), np.sin(p), np.cos(t), np.sin(t)
        return (np.array([-rho * sp, rho * cp, 0.0]), np.array([-r * st * cp, -r * st * sp, r * ct]))

    def d2(p, t):
        rho = R + r * np.cos(t)
        cp, sp, ct, st = np.cos(p), np.sin(p), np.cos(t), np.sin(t)
        return (
            np.array([-rho * cp, -rho * sp, 0.0]),
            np.array([r * st * sp, -r * st * cp, 0.0]),
            np.array([-r * ct * cp, -r * ct * sp, -r * st]),
        )

    def d3(p, t):
        rho = R + r * np.cos(t)
        cp, sp, ct, st = np.cos(p), np.sin(p), np.cos(t), np.sin(t)
        return (
            np.array([rho * sp, -rho * cp, 0.0]),
            np.array([r * st * cp, r * st * sp, 0.0]),
            np.array([r * ct * sp, -r * ct * cp, 0.0]),
            np.array([r * st * cp, r * st * sp, -r * ct]),
        )

    return SurfacePatch(emb, d1, d2, d3, name="torus", params={"R": R, "r": r})


def sphere(radius=1.0):
    """Longitude/latitude chart; latitude restricted to the open band."""
    a = float(radius)

    def emb(u, v):
        return a * np.array([np.cos(v) * np.cos(u), np.cos(v) * np.sin(u), np.sin(v)])

    def d1(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        return (a * np.array([-cv * su, cv * cu, 0.0]), a * np.array([-sv * cu, -sv * su, cv]))

    def d2(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        return (
            a * np.array([-cv * cu, -cv * su, 0.0]),
            a * np.array([sv * su, -sv * cu, 0.0]),
            a * np.array([-cv * cu, -cv * su, -sv]),
        )

    def d3(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        return (
            a * np.array([cv * su, -cv * cu, 0.0]),
            a * np.array([sv * cu, sv * su, 0.0]),
            a * np.array([cv * su, -cv * cu, 0.0]),
            a * np.array([sv * cu, sv * su, -cv]),
        )

    half = np.pi / 2
    return SurfacePatch(emb, d1, d2, d3, domain=((-INF, INF), (-half, half)), name="sphere", params={"radius": a})


def numeric(patch):
    """Copy of ``patch`` with analytic partials dropped (finite differences only)."""
    return SurfacePatch(
        embedding=patch.embedding,
        domain=patch.domain,
        fd_step=patch.fd_step,
        fd_step2=patch.fd_step2,
        name=patch.name,
        params=dict(patch.params),
    )


def torus_gaussian_curvature(R, r, theta):
    """Closed form cos(theta) / (r (R + r cos(theta)))."""
    return np.cos(theta) / (r * (R + r * np.cos(theta)))
