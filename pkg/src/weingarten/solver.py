"""Damped Newton with homotopy continuation for sigma_k(kappa(rho)) = f(X, nu).

The unknown is the nodal radial function rho on a SphereGrid.  The residual
at a node depends only on the local jet (rho, grad rho, Hess rho), and the
jet is a fixed sparse linear map of the nodal values, so Jacobians are
sparse.  Two Jacobian modes are provided: colored finite differences of the
full residual (default) and the chain rule through sigma_k^{ii}.
"""
from dataclasses import dataclass, field
from math import comb
import time
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AdmissibilityError, ConfigurationError, DomainError
from .geometry import (SphereScalarField, _jet_operators, differentiate, estimate_monitor,
                       generalized_eigvals, lift, radial_geometry, radial_pointwise, ambient_jet)
from .symfunc import elementary, sigma_partials


# ---------------------------------------------------------------------------
# prescribed data

@dataclass
class PrescribedCurvature:
    """f(X, nu) > 0 with optional d/drho (rho^k f(rho x, nu)) evaluator.

    ``evaluate(X, nu)`` receives arrays of shape (..., n+1).  ``spec`` is the
    key-value description used in run manifests.
    """
    evaluate: Callable
    depends_on_X: bool = True
    depends_on_nu: bool = False
    dradial: Optional[Callable] = None
    spec: dict = field(default_factory=dict)
    node_aligned: bool = False

    def __call__(self, X, nu):
        return self.evaluate(X, nu)


def constant_f(c):
    c = float(c)
    return PrescribedCurvature(lambda X, nu: np.full(X.shape[:-1], c), depends_on_X=False,
                               dradial=lambda X, nu, k: k * c * np.linalg.norm(X, axis=-1) ** (k - 1),
                               spec={"name": "constant", "c": c})


def power_f(c, p):
    """c |X|^p."""
    c, p = float(c), float(p)

    def ev(X, nu):
        return c * np.linalg.norm(X, axis=-1) ** p

    def dr(X, nu, k):
        r = np.linalg.norm(X, axis=-1)
        return c * (k + p) * r ** (k + p - 1)

    return PrescribedCurvature(ev, dradial=dr, spec={"name": "power", "c": c, "p": p})


def anisotropic_f(c, p, alpha=0.2, beta=0.1):
    """c |X|^p (1 + alpha <e_last, X/|X|>) (1 + beta <e_1, nu>).

    For fixed nu, rho^k f = c rho^{k+p} A(x) B(nu), so the radial monotonicity
    condition holds iff k + p <= 0.
    """
    c, p, alpha, beta = float(c), float(p), float(alpha), float(beta)

    def shape(X, nu):
        r = np.linalg.norm(X, axis=-1)
        return r, (1.0 + alpha * X[..., -1] / r) * (1.0 + beta * nu[..., 0])

    def ev(X, nu):
        r, s = shape(X, nu)
        return c * r ** p * s

    def dr(X, nu, k):
        r, s = shape(X, nu)
        return c * (k + p) * r ** (k + p - 1) * s

    return PrescribedCurvature(ev, depends_on_nu=beta != 0.0, dradial=dr,
                               spec={"name": "anisotropic", "c": c, "p": p, "alpha": alpha, "beta": beta})


def tabulated_f(grid, values, p=0.0, rho_ref=None):
    """Node-aligned samples v of a function of X/|X|, optionally weighted by (|X|/rho_ref)^p.

    The solver only ever queries f at the node directions, so no interpolation
    is needed; shapes must match the grid.  The weight leaves f unchanged on
    the surface |X| = rho_ref and, for p <= -k, makes rho^k f decreasing.
    """
    vals = np.asarray(values, dtype=float).reshape(grid.shape)
    if np.any(vals <= 0):
        raise DomainError("tabulated f must be positive")
    p = float(p)
    ref = np.ones(grid.shape) if rho_ref is None else np.asarray(rho_ref, dtype=float).reshape(grid.shape)

    def check(X):
        if X.shape[:-1] != vals.shape:
            raise DomainError("tabulated f queried off the grid")

    def ev(X, nu):
        check(X)
        if p == 0.0:
            return vals.copy()
        return vals * (np.linalg.norm(X, axis=-1) / ref) ** p

    def dr(X, nu, k):
        check(X)
        r = np.linalg.norm(X, axis=-1)
        return vals * (k + p) * r ** (k + p - 1) / ref ** p

    return PrescribedCurvature(ev, depends_on_X=p != 0.0, dradial=dr, node_aligned=True,
                               spec={"name": "tabulated", "nodes": int(vals.size), "p": p})


def exact_curvatures(grid, F):
    """Curvatures of the radial graph of an ambient function from its exact jet."""
    rho, grad, hess = ambient_jet(grid, F.value, F.gradient, F.hessian)
    g, h, _ = radial_pointwise(rho, grad, hess)
    return rho, generalized_eigvals(h, g)


def manufactured_f(grid, F, k, p=0.0):
    """f := sigma_k(kappa(rho*)) sampled from the exact jet of rho* = F on the sphere.

    With p != 0 the samples are weighted by (|X|/rho*)^p, which keeps rho* an
    exact solution.
    """
    rho, kappa = exact_curvatures(grid, F)
    e = elementary(kappa)
    if np.any(e[..., 1:k + 1] <= 0):
        raise DomainError("manufactured radial function is not k-admissible")
    f = tabulated_f(grid, e[..., k], p=p, rho_ref=rho)
    f.spec = {"name": "manufactured", "k": k, "p": float(p)}
    return f, rho


# ---------------------------------------------------------------------------
# homotopy

def _round_term(X, k, epsilon):
    r = np.linalg.norm(X, axis=-1) ** (-k)
    return r + epsilon * (r - 1.0)


def epsilon_policy(k, r1, r2, start=0.5, floor=1e-8):
    """Largest epsilon in 0.5, 0.25, 0.1, 0.05, ... with min_{[r1,r2]} (rho^-k + eps(rho^-k - 1)) > 0.

    The minimum sits at rho = r2 because the expression decreases in rho.
    Returns (epsilon, f0).
    """
    mantissas = (5.0, 2.5, 1.0)
    scale = 0.1
    while scale * 5.0 >= floor:
        for m in mantissas:
            eps = m * scale
            if eps > start:
                continue
            f0 = min(r ** (-k) + eps * (r ** (-k) - 1.0) for r in (r1, r2))
            if f0 > 0:
                return eps, f0
        scale /= 10.0
    raise ConfigurationError("no admissible epsilon for the given annulus")


@dataclass
class HomotopySchedule:
    t_values: list
    epsilon: float
    k: int
    n: int
    variant: str = "kth_root"
    f0: float = None

    def __post_init__(self):
        t = np.asarray(self.t_values, dtype=float)
        if t.ndim != 1 or len(t) == 0 or np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > 1:
            raise ConfigurationError("t_values must be increasing in [0, 1]")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")
        if self.variant not in ("scalar_k2", "kth_root"):
            raise ConfigurationError(f"unknown homotopy variant {self.variant!r}")
        if self.variant == "scalar_k2" and self.k != 2:
            raise ConfigurationError("the scalar_k2 homotopy is defined for k = 2")
        self.t_values = [float(x) for x in t]

    def blend(self, f, t):
        """The prescribed data f^t."""
        n, k, eps = self.n, self.k, self.epsilon
        C = comb(n, k)
        t = float(t)
        if self.variant == "scalar_k2":
            def ev(X, nu):
                return t * f(X, nu) + (1.0 - t) * C * _round_term(X, k, eps)
        else:
            def ev(X, nu):
                a = f(X, nu) ** (1.0 / k)
                b = (C * _round_term(X, k, eps)) ** (1.0 / k)
                return (t * a + (1.0 - t) * b) ** k
        return PrescribedCurvature(ev, depends_on_X=True, depends_on_nu=f.depends_on_nu,
                                   spec={"name": "homotopy", "t": t, "variant": self.variant,
                                         "epsilon": eps, "target": f.spec},
                                   node_aligned=f.node_aligned)


def uniform_schedule(n, k, steps, r1, r2, variant="kth_root"):
    eps, f0 = epsilon_policy(k, r1, r2)
    return HomotopySchedule(list(np.linspace(0.0, 1.0, steps + 1)), eps, k, n, variant, f0)


# ---------------------------------------------------------------------------
# residual and Jacobians

@dataclass
class NewtonConfig:
    rtol: float = 1e-8
    max_iter: int = 50
    backtrack: float = 0.5
    min_step: float = 2.0 ** -20
    margin: float = 1e-10
    jacobian: str = "fd"

    def __post_init__(self):
        if self.rtol <= 0 or self.margin <= 0 or self.max_iter < 1:
            raise ConfigurationError("tolerances, margins and iteration caps must be positive")
        if not (0 < self.backtrack < 1) or not (0 < self.min_step < 1):
            raise ConfigurationError("backtracking factor and minimum step must lie in (0, 1)")
        if self.jacobian not in ("fd", "chain"):
            raise ConfigurationError(f"unknown Jacobian mode {self.jacobian!r}")


def _state(rho_vals, grid):
    """Pointwise data of the radial graph: jet, g, h, kappa, X, nu."""
    fld = SphereScalarField(grid, rho_vals)
    d = differentiate(fld)
    r = fld.values
    g, h, w = radial_pointwise(r, d["grad"], d["hess"])
    kappa = generalized_eigvals(h, g)
    x = grid.points()
    X = r[..., None] * x
    nu = (r[..., None] * x - lift(grid, d["grad"])) / w[..., None]
    return {"rho": r, "grad": d["grad"], "hess": d["hess"], "g": g, "h": h, "w": w,
            "kappa": kappa, "X": X, "nu": nu}


def _raw_residual(rho_vals, grid, f, k):
    st = _state(rho_vals, grid)
    e = elementary(st["kappa"])
    return e[..., k] - f(st["X"], st["nu"]), e, st


def _first_bad_node(e, k, margin, shape):
    bad = np.any(e[..., 1:k + 1] < margin, axis=-1) if margin > 0 else np.any(e[..., 1:k + 1] <= 0, axis=-1)
    if np.any(bad):
        return np.unravel_index(int(np.flatnonzero(bad.ravel())[0]), shape)
    return None


def residual(rho, f, k):
    """sigma_k(kappa) - f(X, nu) at every node; raises if kappa leaves Gamma_k."""
    if np.any(rho.values <= 0):
        raise DomainError("radial function must be positive")
    R, e, _ = _raw_residual(rho.values, rho.grid, f, k)
    node = _first_bad_node(e, k, 0.0, rho.grid.shape)
    if node is not None:
        raise AdmissibilityError(f"kappa not in Gamma_{k} at node {node}", node=node)
    return SphereScalarField(rho.grid, R)


_COLOR_CACHE = {}


def _sparsity(grid):
    G, H = _jet_operators(grid)
    S = sp.identity(grid.size, format="csr")
    for M in G + [m for row in H for m in row]:
        S = S + abs(M)
    S = S.tocsr()
    S.data[:] = 1.0
    return S


def jacobian_coloring(grid):
    """Greedy coloring of columns so that no two columns of a color share a row."""
    key = grid.key()
    hit = _COLOR_CACHE.get(key)
    if hit is not None:
        return hit
    S = _sparsity(grid)
    conflict = (S.T @ S).tocsr()
    ncol = grid.size
    colors = -np.ones(ncol, dtype=int)
    for j in range(ncol):
        nb = conflict.indices[conflict.indptr[j]:conflict.indptr[j + 1]]
        used = set(colors[nb][colors[nb] >= 0].tolist())
        c = 0
        while c in used:
            c += 1
        colors[j] = c
    _COLOR_CACHE[key] = (S, colors)
    return S, colors


def jacobian_fd(rho_vals, grid, f, k):
    """Centered differences, column j perturbed by max(1e-6, 1e-6 |rho_j|), grouped by color."""
    S, colors = jacobian_coloring(grid)
    v = np.asarray(rho_vals, dtype=float).ravel()
    delta = np.maximum(1e-6, 1e-6 * np.abs(v))
    Sc = S.tocsc()
    rows_all, cols_all, vals_all = [], [], []
    for c in range(colors.max() + 1):
        cols = np.flatnonzero(colors == c)
        pert = np.zeros_like(v)
        pert[cols] = delta[cols]
        Rp = _raw_residual((v + pert).reshape(grid.shape), grid, f, k)[0].ravel()
        Rm = _raw_residual((v - pert).reshape(grid.shape), grid, f, k)[0].ravel()
        diff = Rp - Rm
        for j in cols:
            rows = Sc.indices[Sc.indptr[j]:Sc.indptr[j + 1]]
            rows_all.append(rows)
            cols_all.append(np.full(len(rows), j))
            vals_all.append(diff[rows] / (2.0 * delta[j]))
    n = grid.size
    return sp.csr_matrix((np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
                         shape=(n, n))


def _f_jet_sensitivities(st, grid, f):
    """d f(X(jet), nu(jet)) / d rho and / d grad_a, by pointwise centered differences."""
    r, p = st["rho"], st["grad"]
    x = grid.points()

    def fv(r_, p_):
        w = np.sqrt(r_ ** 2 + np.sum(p_ ** 2, axis=-1))
        X = r_[..., None] * x
        nu = (r_[..., None] * x - lift(grid, p_)) / w[..., None]
        return f(X, nu)

    if f.node_aligned and not f.depends_on_X and not f.depends_on_nu:
        return np.zeros_like(r), np.zeros_like(p)
    dr = 1e-6 * np.maximum(1.0, np.abs(r))
    df_r = (fv(r + dr, p) - fv(r - dr, p)) / (2.0 * dr)
    df_p = np.zeros_like(p)
    if f.depends_on_nu:
        for a in range(p.shape[-1]):
            e = np.zeros_like(p)
            e[..., a] = 1e-6
            df_p[..., a] = (fv(r, p + e) - fv(r, p - e)) / 2e-6
    return df_r, df_p


def jacobian_chain(rho_vals, grid, f, k):
    """Chain rule: d sigma_k = tr(T dh) - tr(U dg) with T = sum sigma_k^{ii} v_i v_i^T,
    U = sum sigma_k^{ii} kappa_i v_i v_i^T over g-orthonormal eigenvectors v_i."""
    st = _state(np.asarray(rho_vals, dtype=float).reshape(grid.shape), grid)
    n = grid.n
    g, h, w = st["g"], st["h"], st["w"]
    r, p, H = st["rho"], st["grad"], st["hess"]
    L = np.linalg.cholesky(g)
    Li = np.linalg.inv(L)
    M = Li @ h @ np.swapaxes(Li, -1, -2)
    lam, Q = np.linalg.eigh(0.5 * (M + np.swapaxes(M, -1, -2)))
    V = np.swapaxes(Li, -1, -2) @ Q
    s_ii = sigma_partials(lam, k)
    T = np.einsum("...ai,...i,...bi->...ab", V, s_ii, V)
    U = np.einsum("...ai,...i,...bi->...ab", V, s_ii * lam, V)
    I = np.eye(n)
    wq = w[..., None, None]
    # rho
    dg = 2.0 * r[..., None, None] * I
    dh = (2.0 * r[..., None, None] * I - H) / wq - h * (r / w ** 2)[..., None, None]
    c_rho = np.sum(T * dh, axis=(-2, -1)) - np.sum(U * dg, axis=(-2, -1))
    # gradient components
    c_grad = np.empty(p.shape)
    for a in range(n):
        E = np.zeros(p.shape + (n,))
        E[..., a, :] = p
        E[..., :, a] += p
        dgr = E
        dhr = 2.0 * E / wq - h * (p[..., a] / w ** 2)[..., None, None]
        c_grad[..., a] = np.sum(T * dhr, axis=(-2, -1)) - np.sum(U * dgr, axis=(-2, -1))
    df_r, df_p = _f_jet_sensitivities(st, grid, f)
    c_rho = c_rho - df_r
    c_grad = c_grad - df_p
    G, Hop = _jet_operators(grid)
    J = sp.diags(c_rho.ravel())
    for a in range(n):
        J = J + sp.diags(c_grad[..., a].ravel()) @ G[a]
    for a in range(n):
        for b in range(a, n):
            if Hop[a][b].nnz == 0:
                continue
            coef = -r * (T[..., a, b] + (T[..., b, a] if a != b else 0.0)) / w
            J = J + sp.diags(coef.ravel()) @ Hop[a][b]
    return J.tocsr()


def jacobian(rho, f, k, cfg=None):
    cfg = cfg or NewtonConfig()
    if np.any(rho.values <= 0):
        raise DomainError("radial function must be positive")
    residual(rho, f, k)
    fn = jacobian_fd if cfg.jacobian == "fd" else jacobian_chain
    return fn(rho.values, rho.grid, f, k)


# ---------------------------------------------------------------------------
# Newton and continuation

@dataclass
class NewtonResult:
    rho: SphereScalarField
    iterations: int
    history: list
    converged: bool
    message: str = ""
    admissibility_violations: int = 0


def newton_solve(rho0, f, k, cfg=None):
    """Damped Newton on the nodal residual with admissibility-preserving backtracking."""
    cfg = cfg or NewtonConfig()
    grid = rho0.grid
    if np.any(rho0.values <= 0):
        raise DomainError("initial radial function must be positive")
    v = rho0.values.copy()
    R, e, st = _raw_residual(v, grid, f, k)
    node = _first_bad_node(e, k, cfg.margin, grid.shape)
    if node is not None:
        raise AdmissibilityError(f"initial iterate not in Gamma_{k} with margin at node {node}", node=node)
    norm = float(np.max(np.abs(R)))
    history = [norm]
    jac = jacobian_fd if cfg.jacobian == "fd" else jacobian_chain
    for it in range(cfg.max_iter + 1):
        tol = cfg.rtol * float(np.max(np.abs(f(st["X"], st["nu"]))))
        if norm <= tol:
            return NewtonResult(SphereScalarField(grid, v), it, history, True, "converged")
        if it == cfg.max_iter:
            break
        J = jac(v, grid, f, k)
        try:
            with np.errstate(all="ignore"):
                step = spla.splu(J.tocsc()).solve(-R.ravel())
        except RuntimeError as exc:
            return NewtonResult(SphereScalarField(grid, v), it, history, False, f"singular Jacobian: {exc}")
        if not np.all(np.isfinite(step)):
            return NewtonResult(SphereScalarField(grid, v), it, history, False, "singular Jacobian")
        step = step.reshape(grid.shape)
        s = 1.0
        accepted = False
        while s >= cfg.min_step:
            trial = v + s * step
            if np.all(trial > 0):
                Rt, et, stt = _raw_residual(trial, grid, f, k)
                ok = _first_bad_node(et, k, cfg.margin, grid.shape) is None
                nt = float(np.max(np.abs(Rt)))
                if ok and nt < norm:
                    v, R, st, norm = trial, Rt, stt, nt
                    accepted = True
                    break
            s *= cfg.backtrack
        if not accepted:
            return NewtonResult(SphereScalarField(grid, v), it, history, False, "backtracking floor reached")
        history.append(norm)
    return NewtonResult(SphereScalarField(grid, v), cfg.max_iter, history, False, "iteration cap reached")


@dataclass
class StepRecord:
    t: float
    iterations: int
    residual: float
    kappa_max: float
    kappa_min: float
    min_u: float
    rho_min: float
    rho_max: float


@dataclass
class ContinuationRun:
    schedule: HomotopySchedule
    steps: list
    rho: SphereScalarField
    status: str
    halvings: int = 0
    message: str = ""
    wall_time: float = 0.0


def _record(t, res):
    geom = radial_geometry(res.rho)
    mon = estimate_monitor(geom)
    return StepRecord(float(t), res.iterations, res.history[-1], mon["kappa_max"], mon["kappa_min"],
                      mon["min_u"], float(res.rho.values.min()), float(res.rho.values.max()))


def continuation_solve(f, schedule, grid, cfg=None, max_halvings=10, rho_start=None):
    """Follow f^t from the unit sphere at t = 0 through the schedule's t values."""
    cfg = cfg or NewtonConfig()
    start = time.perf_counter()
    rho = rho_start if rho_start is not None else SphereScalarField(grid, 1.0)
    steps = []
    t_prev = None
    halvings = 0
    for t_target in schedule.t_values:
        t_try = t_target
        local = 0
        while True:
            res = newton_solve(rho, schedule.blend(f, t_try), schedule.k, cfg)
            if res.converged:
                rho = res.rho
                steps.append(_record(t_try, res))
                t_prev = t_try
                if t_try == t_target:
                    break
                t_try = t_target
                continue
            if t_prev is None or local >= max_halvings:
                return ContinuationRun(schedule, steps, rho, "failed", halvings,
                                       f"no convergence near t={t_try}: {res.message}",
                                       time.perf_counter() - start)
            t_try = t_prev + 0.5 * (t_try - t_prev)
            local += 1
            halvings += 1
    status = "converged" if halvings == 0 else "step_halved"
    return ContinuationRun(schedule, steps, rho, status, halvings, "", time.perf_counter() - start)


# ---------------------------------------------------------------------------
# barrier conditions and test functions

def barrier_check(f, k, r1, r2, grid, n_rho=17):
    """Slack of the sphere barriers at r1 and r2 and the max of d/drho (rho^k f).

    Samples are taken at the grid directions so node-aligned data works; for
    nu-dependent f the monotonicity is checked with nu = x and nu = +-e_i.
    """
    if not (r1 < 1.0 < r2):
        raise ConfigurationError("need r1 < 1 < r2")
    n = grid.n
    C = comb(n, k)
    x = grid.points()
    inner = f(r1 * x, x) - C / r1 ** k
    outer = C / r2 ** k - f(r2 * x, x)
    margin = float(min(inner.min(), outer.min()))
    nus = [x]
    if f.depends_on_nu:
        for i in range(grid.dim):
            for s in (1.0, -1.0):
                e = np.zeros(grid.dim)
                e[i] = s
                nus.append(np.broadcast_to(e, x.shape))
    worst = -np.inf
    for r in np.linspace(r1, r2, n_rho):
        for nu in nus:
            if f.dradial is not None:
                d = f.dradial(r * x, nu, k)
            else:
                dr = 1e-5 * r
                d = ((r + dr) ** k * f((r + dr) * x, nu) - (r - dr) ** k * f((r - dr) * x, nu)) / (2 * dr)
            worst = max(worst, float(np.max(d)))
    return {"cond1_margin": margin, "cond2_max": worst}


def test_function_diagnostics(geom, epsilon=0.0, a=0.0, N=0.0):
    """phi_scalar = log log P - (1+eps) log u + a|X|^2/2 and phi_convex = log sum kappa^2 - 2N log u."""
    u = geom.u_support
    if np.any(u <= 0):
        raise DomainError("support function must be positive")
    kappa = geom.kappa
    kmax = kappa.max(axis=-1)
    logP = kmax + np.log(np.sum(np.exp(kappa - kmax[..., None]), axis=-1))
    if np.any(logP <= 0):
        raise DomainError("P = sum exp(kappa) must exceed 1")
    X2 = np.sum(geom.X ** 2, axis=-1)
    phi_s = np.log(logP) - (1.0 + epsilon) * np.log(u) + 0.5 * a * X2
    phi_c = np.log(np.sum(kappa ** 2, axis=-1)) - 2.0 * N * np.log(u)
    out = {"phi_scalar": phi_s, "phi_convex": phi_c}
    for name in ("phi_scalar", "phi_convex"):
        idx = np.unravel_index(int(np.argmax(out[name])), out[name].shape)
        out[name + "_max"] = float(out[name][idx])
        out[name + "_argmax"] = tuple(int(i) for i in idx)
    return out


test_function_diagnostics.__test__ = False  # not a pytest test


def uniqueness_probe(f, k, rho_ref, cfg=None, amplitudes=(0.02, -0.02), seed=0):
    """Restart Newton from smooth perturbations of a converged solution; max nodal disagreement."""
    cfg = cfg or NewtonConfig()
    grid = rho_ref.grid
    x = grid.points()
    rng = np.random.default_rng(seed)
    out = []
    for amp in amplitudes:
        v = rng.standard_normal(grid.dim)
        A = rng.standard_normal((grid.dim, grid.dim))
        bump = x @ v / np.linalg.norm(v) + np.einsum("...i,ij,...j->...", x, A + A.T, x) / np.linalg.norm(A + A.T)
        start = SphereScalarField(grid, rho_ref.values * (1.0 + amp * bump))
        res = newton_solve(start, f, k, cfg)
        diff = float(np.max(np.abs(res.rho.values - rho_ref.values))) if res.converged else float("inf")
        out.append({"amplitude": amp, "converged": res.converged, "max_diff": diff,
                    "iterations": res.iterations})
    return out
