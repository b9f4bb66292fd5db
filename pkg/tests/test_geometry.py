import csv
import io
from math import comb, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weingarten import shapes
from weingarten.errors import ConfigurationError, DomainError
from weingarten.geometry import (
    ConvexBody, SphereGrid, SphereScalarField, ambient_jet, convergence_study, curvature_quotient_identity,
    differentiate, estimate_monitor, gradient_bound_identity, minkowski_identity_residual, mixed_volumes,
    observed_orders, radial_geometry, sphere_area, support_geometry, write_field_csv,
)
from weingarten.symfunc import elementary

GRIDS = [SphereGrid.full2d(16), SphereGrid.axisym(2, 32), SphereGrid.axisym(3, 32), SphereGrid.axisym(4, 32)]


def field(grid, fn):
    return SphereScalarField.from_function(grid, fn)


def err_sequence(fn, grids):
    return [fn(g) for g in grids]


def refinements(grid, count=4):
    out = [grid]
    for _ in range(count - 1):
        out.append(out[-1].refine())
    return out


# --- grids ---------------------------------------------------------------------------

@pytest.mark.parametrize("grid", GRIDS, ids=lambda g: f"{g.mode}-n{g.n}")
def test_weights_reproduce_area(grid):
    assert grid.weights.sum() == pytest.approx(sphere_area(grid.n), rel=1e-12)


def test_sphere_area_values():
    assert sphere_area(2) == pytest.approx(4 * pi)
    assert sphere_area(3) == pytest.approx(2 * pi ** 2)


def test_weights_kill_low_harmonics():
    g = SphereGrid.full2d(16)
    x = g.points()
    for vals in (x[..., 0], x[..., 2], x[..., 0] * x[..., 1], x[..., 2] ** 2 - 1 / 3, x[..., 0] ** 2 - x[..., 1] ** 2):
        assert abs(g.integrate(vals)) <= 1e-10


def test_grid_nodes_avoid_poles():
    g = SphereGrid.full2d(8)
    assert g.theta[0] == pytest.approx(pi / 16) and g.theta[-1] == pytest.approx(pi - pi / 16)
    assert g.phi[1] == pytest.approx(2 * pi / 16)


def test_grid_configuration_errors():
    with pytest.raises(ConfigurationError):
        SphereGrid.full2d(4)
    with pytest.raises(ConfigurationError):
        SphereGrid.axisym(3, 6)
    with pytest.raises(ConfigurationError):
        SphereGrid("full2d", 3, 16, 32)
    with pytest.raises(ConfigurationError):
        SphereGrid("mesh", 2, 16)


def test_frame_is_orthonormal_and_tangent():
    for g in GRIDS:
        E = g.frame()
        x = g.points()
        assert np.allclose(np.einsum("...ai,...bi->...ab", E, E), np.eye(g.n), atol=1e-14)
        assert np.allclose(np.einsum("...ai,...i->...a", E, x), 0, atol=1e-14)


# --- differentiation -------------------------------------------------------------------

@pytest.mark.parametrize("grid", GRIDS, ids=lambda g: f"{g.mode}-n{g.n}")
def test_constant_field_is_exact(grid):
    d = differentiate(SphereScalarField(grid, 3.7))
    assert np.all(d["grad"] == 0) and np.all(d["hess"] == 0)


def test_first_harmonic_identity():
    g = SphereGrid.full2d(32)
    v = np.array([0.3, -0.5, 0.8])
    f = field(g, lambda x: x @ v)
    W = differentiate(f)["hess"] + f.values[..., None, None] * np.eye(2)
    assert np.max(np.abs(W)) < 1e-4


@pytest.mark.parametrize("grid", [SphereGrid.full2d(16), SphereGrid.axisym(2, 16), SphereGrid.axisym(4, 16)],
                         ids=lambda g: f"{g.mode}-n{g.n}")
def test_zonal_hessian_converges(grid):
    zq = shapes.zonal_quadratic(grid.dim)

    def err(g):
        _, grad, hess = ambient_jet(g, zq.value, zq.gradient, zq.hessian)
        d = differentiate(field(g, zq))
        return max(np.max(np.abs(d["grad"] - grad)), np.max(np.abs(d["hess"] - hess)))

    errs = err_sequence(err, refinements(grid))
    orders = observed_orders(errs)
    assert all(o >= 1.9 for o in orders), (errs, orders)


def test_nonzonal_hessian_converges():
    q = shapes.quadratic(np.array([[0.2, 0.1, 0.0], [0.1, -0.3, 0.4], [0.0, 0.4, 0.5]]), b=[0.1, 0.2, -0.3])

    def err(g):
        _, grad, hess = ambient_jet(g, q.value, q.gradient, q.hessian)
        d = differentiate(field(g, q))
        return np.max(np.abs(d["hess"] - hess))

    orders = observed_orders(err_sequence(err, refinements(SphereGrid.full2d(16))))
    assert min(orders) >= 1.9


# --- radial pipeline -----------------------------------------------------------------

def test_round_sphere_exact():
    g = SphereGrid.full2d(16)
    geo = radial_geometry(SphereScalarField(g, 2.0))
    assert np.all(geo.kappa == 0.5)
    assert np.all(geo.u_support == 2.0)
    assert np.allclose(np.linalg.norm(geo.nu, axis=-1), 1, atol=1e-12)


def test_radial_invariants_offcenter():
    g = SphereGrid.full2d(32)
    geo = radial_geometry(field(g, shapes.offcenter_sphere_radial([0.0, 0.0, 0.3])))
    assert np.allclose(np.linalg.norm(geo.nu, axis=-1), 1, atol=1e-12)
    assert np.allclose(np.sum(geo.X * geo.nu, axis=-1), geo.u_support, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(geo.g) > 0)
    assert np.all(np.diff(geo.kappa, axis=-1) <= 0)
    assert np.max(np.abs(geo.kappa - 1)) < 1e-4


def test_offcenter_sphere_order():
    rows = convergence_study("offcenter", SphereGrid.full2d(16), center=(0.0, 0.0, 0.3))
    assert all(r["kappa_error_order"] >= 1.9 for r in rows[1:])


def test_spheroid_radial_axisym_n3():
    g = SphereGrid.axisym(3, 128)
    geo = radial_geometry(field(g, shapes.spheroid_radial(1.0, 2.0, 4)))
    assert np.max(np.abs(geo.kappa - shapes.spheroid_curvatures(geo.X, 1.0, 2.0))) < 1e-4


def test_radial_rejects_nonpositive():
    g = SphereGrid.full2d(8)
    vals = np.ones(g.shape)
    vals[3, 3] = 0.0
    with pytest.raises(DomainError):
        radial_geometry(SphereScalarField(g, vals))


def test_scaling_law():
    g = SphereGrid.full2d(32)
    rho = field(g, shapes.offcenter_sphere_radial([0.1, 0.0, 0.2]))
    a = radial_geometry(rho)
    b = radial_geometry(rho * 3.0)
    assert np.allclose(b.kappa, a.kappa / 3.0, rtol=1e-10)
    assert np.allclose(b.u_support, 3.0 * a.u_support, rtol=1e-10)


# --- support pipeline ----------------------------------------------------------------

def test_unit_ball_support():
    g = SphereGrid.full2d(16)
    body = ConvexBody(SphereScalarField(g, 1.0))
    assert np.all(body.W == np.eye(2))
    geo = support_geometry(body)
    assert np.all(geo.kappa == 1.0)


def test_translated_ball():
    g = SphereGrid.full2d(32)
    body = ConvexBody(field(g, shapes.linear([0.0, 0.0, 0.3], 1.0)))
    geo = support_geometry(body)
    assert np.max(np.abs(geo.kappa - 1)) < 1e-5
    assert np.max(np.abs(geo.X - (g.points() + [0, 0, 0.3]))) < 1e-5


def test_translation_kernel():
    g = SphereGrid.full2d(32)
    sup = shapes.spheroid_support(1.0, 2.0, 3)
    a = ConvexBody(field(g, sup))
    b = ConvexBody(field(g, lambda x: sup(x) + x @ np.array([0.2, -0.1, 0.3])))
    assert np.max(np.abs(a.W - b.W)) < 1e-4
    assert np.max(np.abs(a.W - np.swapaxes(a.W, -1, -2))) <= 1e-10


def test_pipelines_agree_on_spheroid():
    rows = convergence_study("spheroid", SphereGrid.full2d(16), semi_axes=(1.0, 2.0))
    for r in rows:
        assert r["support_kappa_error"] <= 2 * max(r["radial_kappa_error"], 1e-12) or r["support_kappa_error"] < 1e-8
    assert all(r["radial_kappa_error_order"] >= 1.9 for r in rows[1:])


def test_support_rejects_nonconvex():
    g = SphereGrid.full2d(16)
    u = field(g, lambda x: 1.0 + 0.9 * (x[..., 2] ** 2 - 1 / 3) * 3)
    with pytest.raises(DomainError):
        support_geometry(ConvexBody(u))


# --- identities --------------------------------------------------------------------------

def test_quotient_identity_examples():
    a, b = curvature_quotient_identity([1.0, 1.0, 1.0], 2, 1)
    assert a == pytest.approx(1.0) and b == pytest.approx(1.0)
    a, b = curvature_quotient_identity([1.0, 2.0], 2, 1)
    assert a == pytest.approx(1 / 3, rel=1e-15) and b == pytest.approx(1 / 3, rel=1e-15)
    with pytest.raises(DomainError):
        curvature_quotient_identity([1.0, -1.0], 2, 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 31))
def test_quotient_identity_campaign(n, seed):
    mu = np.exp(np.random.default_rng(seed).uniform(-2, 2, (100, n)))
    for k in range(1, n + 1):
        for l in range(k):
            a, b = curvature_quotient_identity(mu, k, l)
            assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_minkowski_unit_ball_and_translate():
    g = SphereGrid.full2d(64)
    r0 = minkowski_identity_residual(ConvexBody(SphereScalarField(g, 1.0)))
    assert r0 <= 1e-13
    r1 = minkowski_identity_residual(ConvexBody(field(g, shapes.linear([0, 0, 0.3], 1.0))))
    assert abs(r1 - r0) <= 1e-8


def test_minkowski_spheroid_order():
    rows = convergence_study("minkowski", SphereGrid.full2d(16))
    assert all(r["minkowski_residual_order"] >= 1.9 for r in rows[1:] if np.isfinite(r["minkowski_residual_order"]))
    assert rows[-1]["minkowski_residual"] < 1e-6


@pytest.mark.parametrize("n", [2, 3, 4])
def test_mixed_volumes_unit_ball(n):
    g = SphereGrid.full2d(16) if n == 2 else SphereGrid.axisym(n, 32)
    mv = mixed_volumes(ConvexBody(SphereScalarField(g, 1.0)))
    A = sphere_area(n)
    assert np.allclose(mv.V, [comb(n, k) * A for k in range(n + 1)], rtol=1e-12)
    assert mv.volume == pytest.approx(A / (n + 1), rel=1e-12)
    mr = mixed_volumes(ConvexBody(SphereScalarField(g, 1.7)))
    assert np.allclose(mr.V, [v * 1.7 ** k for k, v in enumerate(mv.V)], rtol=1e-12)
    assert mr.volume == pytest.approx(mv.volume * 1.7 ** (n + 1), rel=1e-12)


def test_spheroid_volume():
    g = SphereGrid.full2d(64)
    mv = mixed_volumes(ConvexBody(field(g, shapes.spheroid_support(1.0, 2.0, 3))))
    assert mv.volume == pytest.approx(4 * pi / 3 * 2.0, rel=1e-5)
    assert mv.V[0] == pytest.approx(4 * pi, rel=1e-12)


def test_gradient_identity():
    g = SphereGrid.full2d(16)
    rho = SphereScalarField(g, 1.3)
    assert gradient_bound_identity(radial_geometry(rho), rho) <= 1e-14
    rows = convergence_study("gradient", g, center=(0.0, 0.0, 0.3))
    assert all(r["gradient_identity_residual_order"] >= 1.9 for r in rows[1:])


# --- monitors and export -------------------------------------------------------------------

def test_estimate_monitor_sphere():
    g = SphereGrid.full2d(16)
    m = estimate_monitor(radial_geometry(SphereScalarField(g, 2.0)))
    assert m["kappa_max"] == m["kappa_min"] == 0.5
    assert m["min_u"] == 2.0 and m["max_grad_rho"] == 0.0
    assert all(m["gamma_k_flags"].values())


def test_estimate_monitor_spheroid():
    g = SphereGrid.full2d(64)
    m = estimate_monitor(radial_geometry(field(g, shapes.spheroid_radial(1.0, 2.0, 3))))
    # nodes are pole-offset, so compare with the curvature at the nearest sampled point
    kmax, kmin = shapes.spheroid_kappa_range(1.0, 2.0)
    assert m["kappa_max"] == pytest.approx(kmax, rel=1e-2)
    assert m["kappa_min"] == pytest.approx(kmin, rel=1e-2)


def test_field_csv_export():
    g = SphereGrid.axisym(3, 8)
    geo = radial_geometry(SphereScalarField(g, 2.0))
    buf = io.StringIO()
    write_field_csv(buf, geo)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["theta", "phi", "rho_or_u", "kappa_1", "kappa_2", "kappa_3", "u_support"]
    assert len(rows) == 9
    assert float(rows[1][0]) == g.theta[0]
    assert rows[1][2:] == ["2", "0.5", "0.5", "0.5", "2"]


def test_observed_orders_floor():
    assert observed_orders([4e-2, 1e-2, 2.5e-3]) == pytest.approx([2.0, 2.0])
    assert np.isnan(observed_orders([1e-14, 1e-15])[0])


def test_convergence_study_sphere_is_exact():
    rows = convergence_study("sphere", SphereGrid.axisym(3, 8), refinements=3)
    assert [r["n_theta"] for r in rows] == [8, 16, 32]
    assert all(r["kappa_error"] <= 1e-12 for r in rows)


def test_convergence_study_errors():
    with pytest.raises(ConfigurationError):
        convergence_study("torus", SphereGrid.full2d(8))
    with pytest.raises(ConfigurationError):
        convergence_study("offcenter", SphereGrid.axisym(2, 8), center=(0.2, 0.0, 0.0))
    with pytest.raises(ConfigurationError):
        convergence_study("offcenter", SphereGrid.full2d(8), center=(0.0, 0.0, 1.5))


def test_elementary_of_kappa_on_sphere():
    geo = radial_geometry(SphereScalarField(SphereGrid.axisym(4, 8), 1.0))
    e = elementary(geo.kappa)
    assert np.allclose(e[0], [comb(4, m) for m in range(5)])
