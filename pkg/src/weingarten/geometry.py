"""Discrete geometry of radial graphs and convex bodies over S^n.

Two grids are supported:

* ``full2d``: pole-offset latitude/longitude grid on S^2, theta_j = (j+1/2)pi/N_theta,
  phi_m = 2 pi m / N_phi.  Values are stored with shape (N_theta, N_phi).
* ``axisym``: a single meridian profile theta_j = (j+1/2)pi/N_theta for zonal
  fields on S^n, any n >= 2.  Values have shape (N_theta,).

Derivatives use fourth-order centered stencils.  Near the poles the stencil
reaches across through the reflection f(-theta, phi) = f(theta, phi + pi), which
is how the double-Fourier-sphere extension keeps the field smooth.  All
tangential quantities live in the orthonormal frame (e_theta, e_phi) (or
e_theta plus n-1 parallel directions in axisymmetric mode).
"""
from dataclasses import dataclass, field
from math import comb, gamma, pi
import csv

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DegenerateBodyError, DomainError
from .symfunc import elementary

MIN_RESOLUTION = 8

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFSETS = np.arange(-2, 3)


def sphere_area(n):
    """Area of the unit sphere S^n."""
    return 2.0 * pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


def fejer_weights(N):
    """Fejer's first rule on the nodes x_j = cos((j+1/2)pi/N) for integrals over [-1, 1]."""
    theta = (np.arange(N) + 0.5) * pi / N
    m = np.arange(1, N // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, m)) / (4.0 * m ** 2 - 1.0)
    return (2.0 / N) * (1.0 - 2.0 * s.sum(axis=1))


@dataclass(eq=False)
class SphereGrid:
    mode: str
    n: int
    n_theta: int
    n_phi: int = 1
    theta: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("full2d", "axisym"):
            raise ConfigurationError(f"unknown grid mode {self.mode!r}")
        if self.mode == "full2d":
            if self.n != 2:
                raise ConfigurationError("full2d grids exist only for n = 2")
            if self.n_phi < MIN_RESOLUTION or self.n_phi % 2:
                raise ConfigurationError("N_phi must be even and at least 8")
        else:
            if self.n < 2:
                raise ConfigurationError("axisymmetric grids need n >= 2")
            self.n_phi = 1
        if self.n_theta < MIN_RESOLUTION:
            raise ConfigurationError("N_theta must be at least 8")
        self.theta = (np.arange(self.n_theta) + 0.5) * pi / self.n_theta
        self.phi = 2.0 * pi * np.arange(self.n_phi) / self.n_phi
        self.weights = self._weights()

    @classmethod
    def full2d(cls, n_theta, n_phi=None):
        return cls("full2d", 2, int(n_theta), int(n_phi if n_phi is not None else 2 * n_theta))

    @classmethod
    def axisym(cls, n, n_theta):
        return cls("axisym", int(n), int(n_theta))

    @property
    def shape(self):
        return (self.n_theta, self.n_phi) if self.mode == "full2d" else (self.n_theta,)

    @property
    def size(self):
        return self.n_theta * self.n_phi

    @property
    def h(self):
        return pi / self.n_theta

    @property
    def dim(self):
        """Ambient dimension n + 1."""
        return self.n + 1

    def _weights(self):
        n = self.n
        if self.mode == "full2d":
            return np.outer(fejer_weights(self.n_theta), np.full(self.n_phi, 2.0 * pi / self.n_phi))
        shell = sphere_area(n - 1)
        s = np.sin(self.theta)
        if n % 2 == 0:
            return fejer_weights(self.n_theta) * s ** (n - 2) * shell
        # odd n: theta -> f sin^{n-1} theta extends to a smooth even periodic function
        return self.h * s ** (n - 1) * shell

    def angles(self):
        """Per-node (theta, phi) arrays with the grid's value shape."""
        if self.mode == "full2d":
            return np.meshgrid(self.theta, self.phi, indexing="ij")
        return self.theta.copy(), np.zeros(self.n_theta)

    def points(self):
        """Unit vectors x in R^{n+1}, shape grid.shape + (n+1,).

        Axisymmetric grids place the meridian in the (x_1, x_{n+1}) plane.
        """
        th, ph = self.angles()
        if self.mode == "full2d":
            return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        x = np.zeros(self.shape + (self.dim,))
        x[..., 0] = np.sin(th)
        x[..., -1] = np.cos(th)
        return x

    def frame(self):
        """Orthonormal tangent frame, shape grid.shape + (n, n+1)."""
        th, ph = self.angles()
        if self.mode == "full2d":
            e_t = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1)
            e_p = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=-1)
            return np.stack([e_t, e_p], axis=-2)
        E = np.zeros(self.shape + (self.n, self.dim))
        E[..., 0, 0] = np.cos(th)
        E[..., 0, -1] = -np.sin(th)
        for a in range(1, self.n):
            E[..., a, a] = 1.0
        return E

    def integrate(self, values):
        values = np.asarray(values, dtype=float)
        return float(np.sum(self.weights * values))

    def refine(self, factor=2):
        if self.mode == "full2d":
            return SphereGrid.full2d(self.n_theta * factor, self.n_phi * factor)
        return SphereGrid.axisym(self.n, self.n_theta * factor)

    def key(self):
        return (self.mode, self.n, self.n_theta, self.n_phi)


@dataclass(eq=False)
class SphereScalarField:
    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            v = np.broadcast_to(v, self.grid.shape).copy() if v.ndim == 0 else v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise DomainError("field has non-finite values")
        self.values = v

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(x) where x has shape grid.shape + (n+1,)."""
        return cls(grid, fn(grid.points()))

    def __add__(self, other):
        o = other.values if isinstance(other, SphereScalarField) else other
        return SphereScalarField(self.grid, self.values + o)

    def __mul__(self, other):
        o = other.values if isinstance(other, SphereScalarField) else other
        return SphereScalarField(self.grid, self.values * o)

    __radd__ = __add__
    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# differentiation

def _theta_operator(grid, stencil, parity):
    """Sparse theta-stencil on flattened nodes, reflecting across the poles."""
    Nt, Np = grid.n_theta, grid.n_phi
    half = Np // 2
    rows, cols, vals = [], [], []
    jj, mm = np.meshgrid(np.arange(Nt), np.arange(Np), indexing="ij")
    jj = jj.ravel()
    mm = mm.ravel()
    row = jj * Np + mm
    for off, c in zip(_OFFSETS, stencil):
        if c == 0.0:
            continue
        j = jj + off
        m = mm.copy()
        low = j < 0
        high = j >= Nt
        j = np.where(low, -1 - j, j)
        j = np.where(high, 2 * Nt - 1 - j, j)
        flip = low | high
        if grid.mode == "full2d":
            m = np.where(flip, (m + half) % Np, m)
        sign = np.where(flip, parity, 1.0)
        rows.append(row)
        cols.append(j * Np + m)
        vals.append(c * sign)
    n = Nt * Np
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _phi_operator(grid, stencil):
    Nt, Np = grid.n_theta, grid.n_phi
    jj, mm = np.meshgrid(np.arange(Nt), np.arange(Np), indexing="ij")
    jj = jj.ravel()
    mm = mm.ravel()
    row = jj * Np + mm
    rows, cols, vals = [], [], []
    for off, c in zip(_OFFSETS, stencil):
        if c == 0.0:
            continue
        rows.append(row)
        cols.append(jj * Np + (mm + off) % Np)
        vals.append(np.full(len(row), c))
    n = Nt * Np
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


_OPERATOR_CACHE = {}


def derivative_operators(grid, parity=1.0):
    """Sparse matrices mapping nodal values to coordinate derivatives.

    Keys: 't', 'tt' and for full2d also 'p', 'pp', 'tp'.  ``parity`` is the
    sign picked up by the field under the pole reflection (+1 for scalars on
    the sphere; -1 for e.g. the x_1 component along an axisymmetric meridian).
    """
    key = grid.key() + (float(parity),)
    ops = _OPERATOR_CACHE.get(key)
    if ops is not None:
        return ops
    h = grid.h
    ops = {"t": _theta_operator(grid, _D1, parity) / h, "tt": _theta_operator(grid, _D2, parity) / h ** 2}
    if grid.mode == "full2d":
        dp = 2.0 * pi / grid.n_phi
        ops["p"] = _phi_operator(grid, _D1) / dp
        ops["pp"] = _phi_operator(grid, _D2) / dp ** 2
        ops["tp"] = (ops["t"] @ ops["p"]).tocsr()
    _OPERATOR_CACHE[key] = ops
    return ops


def _jet_operators(grid):
    """Linear maps from nodal values to (grad, hess) entries in the orthonormal frame.

    Returns (G, H) where G[a] and H[a][b] are sparse matrices; the Christoffel
    corrections of the round metric are folded in as diagonal scalings.
    """
    key = ("jet",) + grid.key()
    cached = _OPERATOR_CACHE.get(key)
    if cached is not None:
        return cached
    ops = derivative_operators(grid)
    th, _ = grid.angles()
    s = np.sin(th).ravel()
    cot = (np.cos(th) / np.sin(th)).ravel()
    S = sp.diags(1.0 / s)
    C = sp.diags(cot)
    n = grid.n
    if grid.mode == "full2d":
        G = [ops["t"], (S @ ops["p"]).tocsr()]
        H12 = (S @ (ops["tp"] - C @ ops["p"])).tocsr()
        H = [[ops["tt"], H12], [H12, (S @ S @ ops["pp"] + C @ ops["t"]).tocsr()]]
    else:
        Z = sp.csr_matrix((grid.size, grid.size))
        par = (C @ ops["t"]).tocsr()
        G = [ops["t"]] + [Z] * (n - 1)
        H = [[Z] * n for _ in range(n)]
        H[0][0] = ops["tt"]
        for a in range(1, n):
            H[a][a] = par
    _OPERATOR_CACHE[key] = (G, H)
    return G, H


def differentiate(fld):
    """Gradient (shape + (n,)) and covariant Hessian (shape + (n, n)) of a scalar field."""
    grid = fld.grid
    # derivatives ignore constants; removing one makes constant fields exact
    v = fld.values.ravel() - fld.values.flat[0]
    G, H = _jet_operators(grid)
    n = grid.n
    grad = np.stack([Ga @ v for Ga in G], axis=-1)
    hess = np.empty((grid.size, n, n))
    for a in range(n):
        for b in range(a, n):
            hess[:, a, b] = H[a][b] @ v
            hess[:, b, a] = hess[:, a, b]
    return {"grad": grad.reshape(grid.shape + (n,)), "hess": hess.reshape(grid.shape + (n, n))}


def lift(grid, tangent):
    """Map frame components (shape + (n,)) to vectors in R^{n+1}."""
    return np.einsum("...a,...ai->...i", tangent, grid.frame())


def ambient_jet(grid, value, gradient, hessian):
    """Exact spherical gradient/Hessian of F restricted to the sphere.

    ``value``, ``gradient``, ``hessian`` are callables of x (shape (..., n+1))
    returning F, DF and D^2F of an ambient extension.  Uses
    grad = P DF and Hess = P D^2F P - <x, DF> P.
    """
    x = grid.points()
    E = grid.frame()
    F = value(x)
    dF = gradient(x)
    d2F = hessian(x)
    grad = np.einsum("...ai,...i->...a", E, dF)
    radial = np.einsum("...i,...i->...", x, dF)
    hess = np.einsum("...ai,...ij,...bj->...ab", E, d2F, E) - radial[..., None, None] * np.eye(grid.n)
    return F, grad, hess


# ---------------------------------------------------------------------------
# surface geometry

@dataclass(eq=False)
class SurfaceGeometry:
    grid: SphereGrid
    X: np.ndarray
    nu: np.ndarray
    u_support: np.ndarray
    g: np.ndarray
    h: np.ndarray
    kappa: np.ndarray
    grad_rho: np.ndarray = None
    source: np.ndarray = None

    @property
    def rho(self):
        return np.linalg.norm(self.X, axis=-1)


def generalized_eigvals(h, g):
    """Eigenvalues of h v = kappa g v for batches of symmetric pairs, sorted descending."""
    L = np.linalg.cholesky(g)
    Li = np.linalg.inv(L)
    M = Li @ h @ np.swapaxes(Li, -1, -2)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    return np.linalg.eigvalsh(M)[..., ::-1]


def radial_pointwise(rho, grad, hess):
    """Metric, second fundamental form and curvatures of X = rho x from the local jet.

    g = rho^2 I + grad grad^T, h = (rho^2 I + 2 grad grad^T - rho Hess)/w with
    w = sqrt(rho^2 + |grad|^2).
    """
    rho = np.asarray(rho, dtype=float)
    n = grad.shape[-1]
    I = np.eye(n)
    outer = grad[..., :, None] * grad[..., None, :]
    w = np.sqrt(rho ** 2 + np.sum(grad ** 2, axis=-1))
    r2 = (rho ** 2)[..., None, None]
    g = r2 * I + outer
    h = (r2 * I + 2.0 * outer - rho[..., None, None] * hess) / w[..., None, None]
    return g, h, w


def radial_geometry(rho):
    """Geometry of the radial graph {rho(x) x}."""
    vals = rho.values
    if np.any(vals <= 0):
        j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise DomainError(f"radial function not positive at node {j}")
    grid = rho.grid
    d = differentiate(rho)
    g, h, w = radial_pointwise(vals, d["grad"], d["hess"])
    kappa = generalized_eigvals(h, g)
    x = grid.points()
    X = vals[..., None] * x
    nu = (vals[..., None] * x - lift(grid, d["grad"])) / w[..., None]
    u = vals ** 2 / w
    return SurfaceGeometry(grid, X, nu, u, g, h, kappa, grad_rho=d["grad"], source=vals)


# ---------------------------------------------------------------------------
# convex bodies

@dataclass(eq=False)
class ConvexBody:
    u: SphereScalarField
    W: np.ndarray = field(init=False, repr=False)
    mu: np.ndarray = field(init=False, repr=False)
    grad_u: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = differentiate(self.u)
        n = self.u.grid.n
        W = d["hess"] + self.u.values[..., None, None] * np.eye(n)
        if np.max(np.abs(W - np.swapaxes(W, -1, -2)), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(W))):
            raise DomainError("spherical Hessian lost symmetry")
        self.W = W
        self.mu = np.linalg.eigvalsh(W)
        self.grad_u = d["grad"]

    @property
    def grid(self):
        return self.u.grid

    @property
    def mu_min(self):
        return float(self.mu[..., 0].min())


def support_geometry(body):
    """Boundary geometry of a strictly convex body from its support function.

    Parametrized by the normal x: X = u x + grad u, nu = x, dX = W, so in the
    sphere frame g = W^2 and h = W; curvatures are 1/mu.
    """
    grid = body.grid
    if body.mu_min <= 0:
        j = np.unravel_index(int(np.argmin(body.mu[..., 0])), grid.shape)
        raise DomainError(f"body not strictly convex: W has eigenvalue {body.mu_min:.3g} at node {j}")
    x = grid.points()
    u = body.u.values
    X = u[..., None] * x + lift(grid, body.grad_u)
    W = body.W
    kappa = np.sort(1.0 / body.mu, axis=-1)[..., ::-1]
    # radial gradient magnitude from |grad rho|^2 = rho^2 (rho^2 - u^2) / u^2
    rho2 = np.sum(X ** 2, axis=-1)
    grad_mag = np.sqrt(np.maximum(rho2 * (rho2 - u ** 2), 0.0)) / u
    return SurfaceGeometry(grid, X, x, u.copy(), W @ W, W.copy(), kappa,
                           grad_rho=grad_mag[..., None], source=u.copy())


def curvature_quotient_identity(mu, k, l):
    """(sigma_k/sigma_l of 1/mu, sigma_{n-k}/sigma_{n-l} of mu); the two agree."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise DomainError("curvature radii must be positive")
    n = mu.shape[-1]
    if not (0 <= l < k <= n):
        raise DomainError("need 0 <= l < k <= n")
    ek = elementary(1.0 / mu)
    em = elementary(mu)
    return ek[..., k] / ek[..., l], em[..., n - k] / em[..., n - l]


def _sigma_W(body):
    return elementary(body.mu)


def minkowski_identity_residual(body, k=None):
    """Relative defect of int sigma_k(W) = c int u sigma_{k-1}(W), c = (n-k+1)/k (k = n by default)."""
    grid = body.grid
    n = grid.n
    k = n if k is None else k
    e = _sigma_W(body)
    lhs = grid.integrate(e[..., k])
    if lhs == 0.0:
        raise DegenerateBodyError("integral of sigma_k(W) vanishes")
    c = comb(n, k) / comb(n, k - 1)
    rhs = c * grid.integrate(body.u.values * e[..., k - 1])
    return abs(lhs - rhs) / abs(lhs)


@dataclass
class MixedVolumes:
    V: list
    volume: float


def mixed_volumes(body):
    grid = body.grid
    n = grid.n
    e = _sigma_W(body)
    V = [grid.integrate(e[..., k]) for k in range(n + 1)]
    vol = grid.integrate(body.u.values * e[..., n]) / (n + 1)
    return MixedVolumes(V, vol)


# ---------------------------------------------------------------------------
# diagnostics

def embedded_normal(geom):
    """Unit normal from finite differences of the embedding's Cartesian components.

    Independent of the grad-rho formula for nu, so <X, nu> computed this way
    carries its own discretization error.
    """
    grid = geom.grid
    X = geom.X.reshape(grid.size, grid.dim)
    if grid.mode == "full2d":
        ops = derivative_operators(grid, 1.0)
        Xt = ops["t"] @ X
        Xp = ops["p"] @ X
        N = np.cross(Xt, Xp)
    else:
        odd = derivative_operators(grid, -1.0)["t"]
        even = derivative_operators(grid, 1.0)["t"]
        r_t = odd @ X[:, 0]
        z_t = even @ X[:, -1]
        N = np.zeros_like(X)
        N[:, 0] = z_t
        N[:, -1] = -r_t
    N /= np.linalg.norm(N, axis=-1, keepdims=True)
    N *= np.sign(np.sum(N * X, axis=-1))[:, None]
    return N.reshape(grid.shape + (grid.dim,))


def gradient_bound_identity(geom, rho):
    """max | |grad rho|^2 - rho^2 (rho^2 - u^2)/u^2 | with u from the embedded normal."""
    nu = embedded_normal(geom)
    u = np.sum(geom.X * nu, axis=-1)
    if np.any(u <= 0):
        raise DomainError("support function not positive: surface is not starshaped here")
    r = rho.values
    grad2 = np.sum(differentiate(rho)["grad"] ** 2, axis=-1)
    return float(np.max(np.abs(grad2 - r ** 2 * (r ** 2 - u ** 2) / u ** 2)))


def estimate_monitor(geom):
    kappa = geom.kappa
    e = elementary(kappa)
    n = kappa.shape[-1]
    flags = {m: bool(np.all(e[..., 1:m + 1] > 0)) for m in range(1, n + 1)}
    grad = geom.grad_rho
    max_grad = float(np.max(np.linalg.norm(grad, axis=-1))) if grad is not None else float("nan")
    return {
        "kappa_max": float(kappa[..., 0].max()),
        "kappa_min": float(kappa[..., -1].min()),
        "min_u": float(geom.u_support.min()),
        "max_grad_rho": max_grad,
        "gamma_k_flags": flags,
    }


def fmt(x):
    return "%.17g" % x


def write_field_csv(path, geom, values=None):
    """theta, phi, rho_or_u, kappa_1..kappa_n, u_support; one row per node.

    ``path`` may also be an open text stream.
    """
    vals = geom.source if values is None else np.asarray(values)
    if hasattr(path, "write"):
        _field_rows(csv.writer(path), geom, vals)
    else:
        with open(path, "w", newline="") as fh:
            _field_rows(csv.writer(fh), geom, vals)


def _field_rows(w, geom, vals):
    grid = geom.grid
    th, ph = grid.angles()
    n = grid.n
    w.writerow(["theta", "phi", "rho_or_u"] + [f"kappa_{i + 1}" for i in range(n)] + ["u_support"])
    K = geom.kappa.reshape(-1, n)
    for t, p, v, kk, uu in zip(th.ravel(), ph.ravel(), vals.ravel(), K, geom.u_support.ravel()):
        w.writerow([fmt(t), fmt(p), fmt(v)] + [fmt(c) for c in kk] + [fmt(uu)])


# ---------------------------------------------------------------------------
# convergence studies

STUDY_CASES = ("sphere", "offcenter", "spheroid", "minkowski", "gradient")


def observed_orders(errors, factor=2.0, floor=1e-13):
    """log_factor(e_i / e_{i+1}); nan where either error is at roundoff level."""
    out = []
    for a, b in zip(errors[:-1], errors[1:]):
        if a <= floor or b <= floor:
            out.append(float("nan"))
        else:
            out.append(float(np.log(a / b) / np.log(factor)))
    return out


def _case_errors(case, grid, radius, center, semi_axes):
    from . import shapes

    dim = grid.dim
    a, c = semi_axes
    if case == "sphere":
        geo = radial_geometry(SphereScalarField(grid, radius))
        return {"kappa_error": float(np.max(np.abs(geo.kappa - 1.0 / radius))),
                "u_error": float(np.max(np.abs(geo.u_support - radius)))}
    if case in ("offcenter", "gradient"):
        rho = SphereScalarField.from_function(grid, shapes.offcenter_sphere_radial(center, radius))
        geo = radial_geometry(rho)
        if case == "gradient":
            return {"gradient_identity_residual": gradient_bound_identity(geo, rho)}
        return {"kappa_error": float(np.max(np.abs(geo.kappa - 1.0 / radius)))}
    if case == "spheroid":
        geo = radial_geometry(SphereScalarField.from_function(grid, shapes.spheroid_radial(a, c, dim)))
        body = ConvexBody(SphereScalarField.from_function(grid, shapes.spheroid_support(a, c, dim)))
        sg = support_geometry(body)
        return {"radial_kappa_error": float(np.max(np.abs(geo.kappa - shapes.spheroid_curvatures(geo.X, a, c)))),
                "support_kappa_error": float(np.max(np.abs(sg.kappa - shapes.spheroid_curvatures(sg.X, a, c))))}
    if case == "minkowski":
        body = ConvexBody(SphereScalarField.from_function(grid, shapes.spheroid_support(a, c, dim)))
        return {"minkowski_residual": minkowski_identity_residual(body),
                "volume_error": abs(mixed_volumes(body).volume - shapes.spheroid_volume(a, c, dim))}
    raise ConfigurationError(f"unknown convergence case {case!r}; expected one of {STUDY_CASES}")


def convergence_study(case, grid, refinements=4, radius=1.0, center=(0.0, 0.2, 0.3), semi_axes=(1.0, 2.0)):
    """Errors of one closed-form case on ``grid`` and its successive 2x refinements.

    Returns rows (dicts) with the grid size, each error and, from the second
    row on, the observed order of each error column.
    """
    center = np.asarray(center, dtype=float)
    if case not in ("offcenter", "gradient"):
        center = np.zeros(grid.dim)
    elif center.shape != (grid.dim,):
        raise ConfigurationError(f"center must have {grid.dim} components")
    if grid.mode == "axisym" and np.any(center[:-1] != 0):
        raise ConfigurationError("axisymmetric grids need a center on the polar axis")
    if np.linalg.norm(center) >= radius:
        raise ConfigurationError("the origin must lie inside the sphere")
    rows = []
    g = grid
    for r in range(int(refinements)):
        if r:
            g = g.refine(2)
        row = {"n_theta": g.n_theta, "n_phi": g.n_phi}
        row.update(_case_errors(case, g, radius, center, semi_axes))
        rows.append(row)
    names = [k for k in rows[0] if k not in ("n_theta", "n_phi")]
    for name in names:
        orders = observed_orders([row[name] for row in rows])
        rows[0][name + "_order"] = float("nan")
        for row, o in zip(rows[1:], orders):
            row[name + "_order"] = o
    return rows
