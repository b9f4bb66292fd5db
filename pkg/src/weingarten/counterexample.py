"""Curvature blow-up for quotient equations with bounded data.

A zonal support function u = 1 + a Y with W_u in Gamma_{n-1} but sigma_n(W_u) < 0
somewhere is deformed along u_t = (1 - t) + t u.  Since W_{u_t} = t W_u + (1 - t) I,
the smallest curvature radius (1 - t) + t mu_min reaches zero at
t_0 = 1/(1 - mu_min), so the largest principal curvature of the boundary
diverges while f_t = sigma_{n-1}(W_{u_t}) stays pinched between positive
constants.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import linprog
from scipy.special import eval_gegenbauer

from .errors import DegenerateBodyError, DomainError, SearchFailure
from .geometry import ConvexBody, SphereGrid, SphereScalarField, differentiate, radial_geometry, support_geometry
from .symfunc import elementary


def zonal_harmonic(grid, degree):
    """Zonal harmonic of the given degree in x_{n+1}, scaled so Y(pole) = n/(n+1).

    For degree 2 this is x_{n+1}^2 - 1/(n+1).
    """
    if degree < 1:
        raise DomainError("harmonic degree must be positive")
    n = grid.n
    z = grid.points()[..., -1]
    alpha = (n - 1) / 2.0
    if alpha == 0:
        vals = np.cos(degree * np.arccos(np.clip(z, -1, 1)))
        top = 1.0
    else:
        vals = eval_gegenbauer(degree, alpha, z)
        top = eval_gegenbauer(degree, alpha, 1.0)
    return SphereScalarField(grid, vals / top * n / (n + 1.0))


@dataclass
class Certificate:
    sigma_min: list
    mu_min: float
    y0: tuple
    y0_point: list
    valid: bool

    @property
    def score(self):
        """Negative iff the certificate holds; used to pick the closest failure."""
        lower = self.sigma_min[:-1]
        return max(self.sigma_min[-1], -min(lower) if lower else -np.inf)

    def to_dict(self):
        return {"sigma_min": list(self.sigma_min), "mu_min": self.mu_min, "y0": list(self.y0),
                "y0_point": list(self.y0_point), "valid": self.valid}


def certificate(u):
    body = ConvexBody(u)
    e = elementary(body.mu)
    n = u.grid.n
    mins = [float(e[..., m].min()) for m in range(1, n + 1)]
    idx = np.unravel_index(int(np.argmin(e[..., n])), u.grid.shape)
    point = u.grid.points()[idx]
    valid = all(s > 0 for s in mins[:-1]) and mins[-1] < 0
    return Certificate(mins, body.mu_min, tuple(int(i) for i in idx), [float(c) for c in point], valid)


@dataclass
class SeedFunction:
    u: SphereScalarField
    amplitude: float
    degree: int
    certificate: Certificate

    @property
    def grid(self):
        return self.u.grid


def default_amplitudes(step=0.05, top=2.0):
    k = np.arange(1, int(round(top / step)) + 1)
    mags = np.round(k * step, 12)
    return [float(s * m) for m in mags for s in (1.0, -1.0)]


def seed_search(n, degree=2, amplitudes=None, grid=None, threads=1):
    """Scan u = 1 + a Y by increasing |a|; the first valid certificate wins."""
    if degree < 2:
        raise DomainError("harmonic degree must be at least 2")
    grid = grid or SphereGrid.axisym(n, 256)
    if grid.n != n:
        raise DomainError("grid dimension does not match n")
    amps = default_amplitudes() if amplitudes is None else [float(a) for a in amplitudes]
    if not amps:
        raise DomainError("empty amplitude grid")
    order = sorted(range(len(amps)), key=lambda i: (abs(amps[i]), i))
    Y = zonal_harmonic(grid, degree)

    def evaluate(i):
        return certificate(SphereScalarField(grid, 1.0 + amps[i] * Y.values))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            certs = list(pool.map(evaluate, order))
    else:
        certs = []
        for i in order:
            certs.append(evaluate(i))
            if certs[-1].valid:
                break
    for i, c in zip(order, certs):
        if c.valid:
            return SeedFunction(SphereScalarField(grid, 1.0 + amps[i] * Y.values), amps[i], degree, c)
    best = min(range(len(certs)), key=lambda j: certs[j].score)
    closest = dict(certs[best].to_dict(), amplitude=amps[order[best]])
    raise SearchFailure("no amplitude gives W in Gamma_{n-1} with sigma_n(W) < 0", closest=closest)


def family_u(seed, t):
    return SphereScalarField(seed.grid, (1.0 - t) + t * seed.u.values)


def closed_form_t0(mu_min):
    if mu_min >= 0:
        raise DomainError("W_u has no negative eigenvalue: the family never degenerates")
    return 1.0 / (1.0 - mu_min)


@dataclass
class DegeneracyTime:
    t0: float
    closed_form: float
    iterations: int


def degeneracy_time(seed, tol=1e-13, max_iter=200):
    """Bisection on t -> min nodal eigenvalue of W_{u_t}, checked against 1/(1 - mu_min)."""
    body = ConvexBody(seed.u)
    t_cf = closed_form_t0(body.mu_min)
    lo, hi = 0.0, 1.0
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if ConvexBody(family_u(seed, mid)).mu_min > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return DegeneracyTime(0.5 * (lo + hi), t_cf, it)


@dataclass
class FamilyState:
    t: float
    u: SphereScalarField
    mu: np.ndarray
    mu_min: float
    kappa: np.ndarray
    kappa_max: float
    f_tilde: np.ndarray
    linearity_defect: float
    affinity_defect: float
    quotient_residual: float
    geometry: object = field(repr=False, default=None)


def family_state(seed, t, t0=None):
    """Assemble W_{u_t}, curvatures through the support pipeline and f_t = sigma_{n-1}(W)."""
    n = seed.grid.n
    base = ConvexBody(seed.u)
    t0 = closed_form_t0(base.mu_min) if t0 is None else t0
    if t < 0 or t >= t0:
        raise DegenerateBodyError(f"t = {t} outside [0, t0 = {t0})")
    body = ConvexBody(family_u(seed, t))
    I = np.eye(n)
    lin = float(np.max(np.abs(body.W - (t * base.W + (1.0 - t) * I))))
    aff = float(np.max(np.abs(body.mu - ((1.0 - t) + t * base.mu))))
    geom = support_geometry(body)
    e_mu = elementary(body.mu)
    f_tilde = e_mu[..., n - 1]
    e_k = elementary(geom.kappa)
    q = e_k[..., n] / e_k[..., 1]
    resid = float(np.max(np.abs(q - 1.0 / f_tilde)))
    return FamilyState(float(t), body.u, body.mu, body.mu_min, geom.kappa, float(geom.kappa[..., 0].max()),
                       f_tilde, lin, aff, resid, geom)


def quotient_identity_radial(seed, t):
    """sigma_n/sigma_1(kappa) - 1/f_t through the radial pipeline (axisymmetric grids).

    The boundary meridian X = u x + u_theta e_theta is resampled as a radial
    function on the grid directions, its curvatures are recomputed by
    radial_geometry, and f_t is evaluated at the recovered normal angle.
    Returns the max nodal residual.
    """
    grid = seed.grid
    if grid.mode != "axisym":
        raise DomainError("the radial cross-check needs an axisymmetric grid")
    st = family_state(seed, t)
    X = st.geometry.X
    r, z = X[:, 0], X[:, -1]
    psi = np.arctan2(r, z)
    rad = np.hypot(r, z)
    th = grid.theta
    # even reflection about both poles for a smooth periodic spline
    P = np.concatenate([-psi[::-1], psi, 2 * np.pi - psi[::-1]])
    R = np.concatenate([rad[::-1], rad, rad[::-1]])
    rho = SphereScalarField(grid, CubicSpline(P, R)(th))
    geo = radial_geometry(rho)
    nu = geo.nu
    nu_angle = np.arctan2(nu[:, 0], nu[:, -1])
    T = np.concatenate([-th[::-1], th, 2 * np.pi - th[::-1]])
    F = np.concatenate([st.f_tilde[::-1], st.f_tilde, st.f_tilde[::-1]])
    f_at = CubicSpline(T, F)(nu_angle)
    n = grid.n
    e = elementary(geo.kappa)
    return float(np.max(np.abs(e[:, n] / e[:, 1] - 1.0 / f_at)))


@dataclass
class Recentering:
    v: np.ndarray
    u_recentered: SphereScalarField
    c0: float


def recenter(u):
    """Translation v maximizing min_x (u(x) - <v, x>), solved as a linear program."""
    body = ConvexBody(u)
    if body.mu_min <= 0:
        raise DomainError("recentering needs a strictly convex body")
    grid = u.grid
    x = grid.points().reshape(-1, grid.dim)
    if grid.mode == "axisym":
        cols = [grid.dim - 1]  # by symmetry only the axis component can move
    else:
        cols = list(range(grid.dim))
    A = np.hstack([x[:, cols], np.ones((len(x), 1))])
    c = np.zeros(len(cols) + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A, b_ub=u.values.ravel(), bounds=[(None, None)] * len(c), method="highs")
    if res.status != 0:
        raise DomainError(f"recentering LP failed: {res.message}")
    v = np.zeros(grid.dim)
    v[cols] = res.x[:-1]
    v[np.abs(v) < 1e-12] = 0.0
    ur = SphereScalarField(grid, u.values - (grid.points() @ v))
    return Recentering(v, ur, float(ur.values.min()))


def default_t_grid(t0, depth=4.0, per_decade=2):
    s = np.linspace(1.0, depth, int(round((depth - 1.0) * per_decade)) + 1)
    return [0.0, 0.5 * t0] + [float(t0 * (1.0 - 10.0 ** -si)) for si in s]


def _derivative_norms(grid, values):
    d = differentiate(SphereScalarField(grid, values))
    g1 = float(np.max(np.linalg.norm(d["grad"], axis=-1)))
    g2 = float(np.max(np.abs(d["hess"])))
    third = 0.0
    n = grid.n
    for a in range(n):
        for b in range(a, n):
            dd = differentiate(SphereScalarField(grid, d["hess"][..., a, b]))
            third = max(third, float(np.max(np.abs(dd["grad"]))))
    return g1, g2, third


def blowup_curve(seed, t_grid, pairs=((2, 1),), threads=1):
    """One row per t: mu_min, kappa_max, f_t range, quotient ranges and derivative sizes of f_t."""
    n = seed.grid.n
    t0 = closed_form_t0(ConvexBody(seed.u).mu_min)
    for k, l in pairs:
        if not (1 <= l < k <= n):
            raise DomainError(f"quotient pair ({k}, {l}) needs 1 <= l < k <= n")

    def row(t):
        st = family_state(seed, t, t0)
        e = elementary(st.kappa)
        rc = recenter(st.u)
        g1, g2, g3 = _derivative_norms(seed.grid, st.f_tilde)
        out = {"t": st.t, "mu_min": st.mu_min, "kappa_max": st.kappa_max,
               "kappa_mu_product": st.kappa_max * st.mu_min,
               "f_min": float(st.f_tilde.min()), "f_max": float(st.f_tilde.max()),
               "inv_f_max": float((1.0 / st.f_tilde).max()),
               "quotient_residual": st.quotient_residual, "c0": rc.c0,
               "f_grad_max": g1, "f_hess_max": g2, "f_third_est": g3,
               "linearity_defect": st.linearity_defect}
        for k, l in pairs:
            q = e[..., k] / e[..., l]
            out[f"q{k}{l}_min"] = float(q.min())
            out[f"q{k}{l}_max"] = float(q.max())
        return out

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(row, list(t_grid)))
    return [row(t) for t in t_grid]
