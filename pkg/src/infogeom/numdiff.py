"""Central finite differences used where analytic derivatives are absent."""

import numpy as np


def gradient(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def jacobian(f, x, h=1e-5):
    """Jacobian of a vector map, shape (len(f(x)), len(x))."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def _hessian_once(f, x, h):
    d = x.size
    H = np.empty((d, d))
    f0 = f(x)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h**2)
            H[j, i] = H[i, j]
    return H


def hessian(f, x, h=1e-3, richardson=True):
    """Hessian by central second differences.

    With ``richardson`` the step-h and step-h/2 estimates are combined to
    cancel the O(h^2) truncation term.
    """
    x = np.asarray(x, dtype=float)
    H1 = _hessian_once(f, x, h)
    if not richardson:
        return H1
    H2 = _hessian_once(f, x, h / 2)
    return (4 * H2 - H1) / 3


def _mixed_once(f, x, y, h):
    d = x.size
    M = np.empty((d, d))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        for j in range(d):
            ej = np.zeros(d)
            ej[j] = h
            M[i, j] = (f(x + ei, y + ej) - f(x + ei, y - ej) - f(x - ei, y + ej) + f(x - ei, y - ej)) / (4 * h**2)
    return M


def mixed_partials(f, x, y, h=1e-3, richardson=True):
    """Matrix of d^2 f / dx_i dy_j for a two-argument scalar function."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    M1 = _mixed_once(f, x, y, h)
    if not richardson:
        return M1
    M2 = _mixed_once(f, x, y, h / 2)
    return (4 * M2 - M1) / 3
