"""Closed-form test bodies: radial functions, support functions and their curvatures.

Each body is described by an ambient extension F on R^{n+1} together with DF
and D^2F, so exact spherical jets are available through
``geometry.ambient_jet``.  Points are arrays of shape (..., n+1).
"""
from dataclasses import dataclass
from math import gamma, pi
from typing import Callable

import numpy as np


@dataclass
class AmbientFunction:
    value: Callable
    gradient: Callable
    hessian: Callable

    def __call__(self, x):
        return self.value(x)


def constant(c):
    return AmbientFunction(
        lambda x: np.full(x.shape[:-1], float(c)),
        lambda x: np.zeros(x.shape),
        lambda x: np.zeros(x.shape + (x.shape[-1],)),
    )


def linear(v, c0=0.0):
    """c0 + <v, x>."""
    v = np.asarray(v, dtype=float)
    return AmbientFunction(
        lambda x: c0 + x @ v,
        lambda x: np.broadcast_to(v, x.shape).copy(),
        lambda x: np.zeros(x.shape + (x.shape[-1],)),
    )


def quadratic(A, b=None, c0=0.0):
    """c0 + <b, x> + x^T A x."""
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    b = np.zeros(len(A)) if b is None else np.asarray(b, dtype=float)
    return AmbientFunction(
        lambda x: c0 + x @ b + np.einsum("...i,ij,...j->...", x, A, x),
        lambda x: b + 2.0 * x @ A,
        lambda x: np.broadcast_to(2.0 * A, x.shape[:-1] + A.shape).copy(),
    )


def zonal_quadratic(dim):
    """x_{n+1}^2 - 1/(n+1): the degree-2 zonal harmonic."""
    A = np.zeros((dim, dim))
    A[-1, -1] = 1.0
    return quadratic(A, c0=-1.0 / dim)


def offcenter_sphere_radial(center, radius=1.0):
    """Radial function of the sphere |X - c| = r seen from the origin (|c| < r)."""
    c = np.asarray(center, dtype=float)
    r2 = radius ** 2 - c @ c

    def S(x):
        return np.sqrt(r2 + (x @ c) ** 2)

    def value(x):
        return x @ c + S(x)

    def gradient(x):
        t = x @ c
        return c * (1.0 + t / S(x))[..., None]

    def hessian(x):
        return np.multiply.outer(r2 / S(x) ** 3, np.outer(c, c))

    return AmbientFunction(value, gradient, hessian)


def spheroid_radial(a, c, dim):
    """Radial function of sum_{i<=n} x_i^2/a^2 + x_{n+1}^2/c^2 = 1."""
    diag = np.full(dim, 1.0 / a ** 2)
    diag[-1] = 1.0 / c ** 2

    def value(x):
        return (x ** 2 @ diag) ** -0.5

    def gradient(x):
        Q = x ** 2 @ diag
        return -(Q ** -1.5)[..., None] * (x * diag)

    def hessian(x):
        Q = x ** 2 @ diag
        Ax = x * diag
        return (3.0 * Q ** -2.5)[..., None, None] * Ax[..., :, None] * Ax[..., None, :] \
            - (Q ** -1.5)[..., None, None] * np.diag(diag)

    return AmbientFunction(value, gradient, hessian)


def spheroid_support(a, c, dim):
    """Support function sqrt(a^2 |x'|^2 + c^2 x_{n+1}^2) of the same spheroid."""
    diag = np.full(dim, a ** 2)
    diag[-1] = c ** 2

    def value(x):
        return np.sqrt(x ** 2 @ diag)

    def gradient(x):
        return (x * diag) / value(x)[..., None]

    def hessian(x):
        u = value(x)
        Bx = x * diag
        return np.diag(diag) / u[..., None, None] - Bx[..., :, None] * Bx[..., None, :] / (u ** 3)[..., None, None]

    return AmbientFunction(value, gradient, hessian)


def spheroid_curvatures(X, a, c):
    """Principal curvatures at boundary points X of the spheroid, sorted descending.

    With s = r^2/a^4 + z^2/c^4 (r the distance to the axis) the n-1 parallel
    curvatures are 1/(a^2 sqrt s) and the meridian curvature is 1/(a^2 c^2 s^{3/2}).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[-1] - 1
    r2 = np.sum(X[..., :-1] ** 2, axis=-1)
    s = r2 / a ** 4 + X[..., -1] ** 2 / c ** 4
    par = 1.0 / (a ** 2 * np.sqrt(s))
    mer = 1.0 / (a ** 2 * c ** 2 * s ** 1.5)
    k = np.concatenate([np.repeat(par[..., None], n - 1, axis=-1), mer[..., None]], axis=-1)
    return np.sort(k, axis=-1)[..., ::-1]


def spheroid_volume(a, c, dim):
    n = dim - 1
    return pi ** (dim / 2.0) / gamma(dim / 2.0 + 1.0) * a ** n * c


def spheroid_kappa_range(a, c):
    """(max, min) principal curvature over the whole spheroid."""
    cands = [c / a ** 2, 1.0 / a, a / c ** 2, 1.0 / a]
    # pole: both curvatures c/a^2; equator: 1/a (parallel) and a/c^2 (meridian)
    return max(cands), min(cands)
