"""Independent reference computations used to freeze expected values.

These deliberately share no code with the package: plain loops, textbook
formulas, LAPACK through numpy.linalg.svd.
"""
import math

import numpy as np


def inner_loop(A, B):
    total = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            total += A[i, j] * B[i, j]
    return total


def top_singular(M):
    U, s, Vt = np.linalg.svd(M)
    return U[:, 0], s[0], Vt[0]


def sensing_loss_loop(A, y, X):
    total = 0.0
    for Ai, yi in zip(A, y):
        total += (inner_loop(Ai, X) - yi) ** 2
    return total / len(y)


def sensing_grad_loop(A, y, X, idx):
    g = np.zeros_like(X)
    for i in idx:
        g += 2.0 * (inner_loop(A[i], X) - y[i]) * A[i]
    return g / len(idx)


def s_hinge_scalar(y, t):
    z = y * t
    if z <= 0:
        return 0.5 - z
    if z <= 1:
        return (0.5 * (1 - z)) ** 2
    return 0.0


def pnn_loss_loop(a, y, X):
    return sum(s_hinge_scalar(yi, float(ai @ X @ ai)) for ai, yi in zip(a, y)) / len(y)


def central_difference(f, X, h=1e-6):
    g = np.zeros_like(X)
    for i in range(X.shape[0]):
        for j in range(X.shape[1]):
            E = np.zeros_like(X)
            E[i, j] = h
            g[i, j] = (f(X + E) - f(X - E)) / (2 * h)
    return g


def nuclear_ball_lmo(G, theta):
    u, _, v = top_singular(G)
    return -theta * np.outer(u, v)


def fw_reference(grad_fn, X0, theta, T):
    """Plain Frank-Wolfe with eta_k = 2/(k+1) and an SVD oracle."""
    X = X0.copy()
    out = []
    for k in range(1, T + 1):
        S = nuclear_ball_lmo(grad_fn(X), theta)
        eta = 2.0 / (k + 1)
        X = (1 - eta) * X + eta * S
        out.append(X.copy())
    return out


def geometric_mean(p, C):
    return C / p


def ols_slope(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xm, ym = x.mean(), y.mean()
    return float(((x - xm) * (y - ym)).sum() / ((x - xm) ** 2).sum())


def batch_formula(G, L, D, k, tau=1, cap=None):
    m = max(1, math.ceil(round(G * G * (k + 1) ** 2 / (tau * tau * L * L * D * D), 9)))
    return m if cap is None else min(m, cap)
