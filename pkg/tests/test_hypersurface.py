import math

import numpy as np
import pytest

from grwkit import hypersurface as hs
from grwkit.ambient import make_fiber, make_spacetime, make_warping
from grwkit.errors import ContractError, DegenerateMetricError

import oracles


def spacetime(warp, wparams, fiber, dim, fparams=None, slab=None):
    return make_spacetime(make_warping(warp, wparams), make_fiber(fiber, dim, fparams), slab)


@pytest.fixture(scope="module")
def ds2():
    return spacetime("cosh", {}, "sphere", 2)


@pytest.fixture(scope="module")
def flat_t2():
    return spacetime("const", {"c": 1.0}, "torus", 2)


def sine_graph(st, eps):
    return hs.graph_surface(st, 0.0, [("sin", (1, 0))], [eps])


def test_slice_metric_is_scaled_fiber_metric(ds2):
    s = hs.slice_surface(ds2, 0.8)
    x = np.array([[1.0, 0.3], [2.0, 5.0]])
    g = s.induced_metric(x, "polar")
    G = ds2.fiber.metric_jet(x, "polar")[0]
    assert np.allclose(g, math.cosh(0.8) ** 2 * G)


def test_sine_graph_metric(flat_t2):
    eps = 0.3
    s = sine_graph(flat_t2, eps)
    x = np.array([[0.4, 1.0], [2.5, 3.0]])
    g = s.induced_metric(x)
    assert np.allclose(g[:, 0, 0], 1 - eps ** 2 * np.cos(x[:, 0]) ** 2)
    assert np.allclose(g[:, 1, 1], 1.0) and np.allclose(g[:, 0, 1], 0.0)


def test_non_spacelike_graph_is_rejected(flat_t2):
    s = sine_graph(flat_t2, 1.2)
    with pytest.raises(DegenerateMetricError):
        s.induced_metric(np.array([[0.0, 0.0]]))
    with pytest.raises(DegenerateMetricError):
        hs.pointwise_geometry(s, np.array([[0.0, 0.0]]))


@pytest.mark.parametrize("t0", [-1.0, 0.3, 1.0])
def test_slice_geometry_closed_form(ds2, t0):
    s = hs.slice_surface(ds2, t0)
    geo = hs.pointwise_geometry(s, np.array([[1.0, 0.2], [2.2, 4.0]]), "polar")
    L = math.tanh(t0)
    assert np.allclose(geo.A, -L * np.eye(2), atol=1e-14)
    for k in range(3):
        assert np.allclose(geo.Hk(k), L ** k, atol=1e-14)
    assert np.allclose(geo.grad_h, 0) and np.allclose(geo.N_dt, -1)
    assert np.allclose(geo.N_K, -math.cosh(t0))
    assert np.allclose(geo.umbilicity(), 0)


def test_einstein_static_slice_is_totally_geodesic():
    st = spacetime("const", {"c": 1.0}, "sphere", 3)
    geo = hs.pointwise_geometry(hs.slice_surface(st, 0.0), np.array([[0.5, 1.0, 2.0]]))
    assert np.allclose(geo.A, 0.0)


def test_sine_graph_at_critical_point(flat_t2):
    eps = 0.1
    s = sine_graph(flat_t2, eps)
    x = np.array([[math.pi / 2, 1.0]])
    geo = hs.pointwise_geometry(s, x)
    assert np.allclose(geo.grad_h, 0, atol=1e-15)
    # Minkowski graph with du = 0: A = -Hess u
    assert np.allclose(geo.kappa[0], [0.0, eps], atol=1e-14)
    ref, _ = oracles.fd_shape_operator(s, x[0], "angles")
    assert np.allclose(ref, geo.kappa[0], atol=1e-7)


@pytest.mark.parametrize("seed,orientation", [(3, "future"), (4, "past"), (5, "future")])
def test_shape_operator_against_finite_differences(ds2, seed, orientation):
    s = hs.random_graph(ds2, 1.0, 0.1, 2, seed)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        x = np.array([rng.uniform(0.3, 2.8), rng.uniform(0, 6.2)])
        geo = hs.pointwise_geometry(s, x[None], "polar", orientation)
        ref, g = oracles.fd_shape_operator(s, x, "polar", orientation)
        assert np.allclose(ref, geo.kappa[0], atol=1e-6)
        assert np.allclose(g, geo.g[0], atol=1e-10)


def test_shape_operator_torus_and_s3():
    for st in (spacetime("exp", {"c": 1.0, "lam": 0.5}, "torus", 2),
               spacetime("tanh", {"eps": 0.5}, "torus", 3),
               spacetime("cosh", {}, "sphere", 3),
               spacetime("cosh", {}, "perturbed-sphere", 2, {"eps": 0.1})):
        s = hs.random_graph(st, 0.2, 0.05, 2, 11)
        grid = st.fiber.quadrature(1)
        x = grid.nodes[len(grid.nodes) // 3]
        geo = hs.pointwise_geometry(s, x[None], grid.chart)
        ref, _ = oracles.fd_shape_operator(s, x, grid.chart)
        assert np.allclose(ref, geo.kappa[0], atol=1e-6)


def test_chart_independence(ds2):
    s = hs.random_graph(ds2, 1.0, 0.05, 2, 7)
    x = np.array([[1.1, 2.3]])
    a = hs.pointwise_geometry(s, x, "polar")
    y = ds2.fiber.transfer(x, "polar", "stereo-north")
    b = hs.pointwise_geometry(s, y, "stereo-north")
    assert np.allclose(a.kappa, b.kappa, atol=1e-12)
    assert np.allclose(a.Hk(2), b.Hk(2), atol=1e-12)


def test_random_graph_amplitude_bound(ds2):
    s = hs.random_graph(ds2, 1.0, 0.05, 3, 1)
    lo, hi = s.height_range(4)
    assert 0.95 - 1e-12 <= lo <= hi <= 1.05 + 1e-12
    assert not s.is_slice and hs.slice_surface(ds2, 1.0).is_slice


def test_bad_terms(ds2, flat_t2):
    with pytest.raises(ContractError):
        hs.graph_surface(flat_t2, 0.0, [("tan", (1, 0))], [0.1])
    with pytest.raises(ContractError):
        hs.graph_surface(flat_t2, 0.0, [("cos", (1, 0, 0))], [0.1])
    with pytest.raises(ContractError):
        hs.graph_surface(ds2, 0.0, [(1, 0)], [0.1])
    with pytest.raises(ContractError):
        hs.pointwise_geometry(hs.slice_surface(ds2, 0.0), np.array([[1.0, 1.0]]), "polar",
                              "sideways")


def test_elliptic_scan(ds2):
    grid = ds2.fiber.quadrature(3)
    scan = hs.elliptic_point_scan(hs.slice_surface(ds2, 1.0), grid)
    assert scan.status == "ok" and scan.orientation == "future"
    assert np.allclose(scan.principal, -math.tanh(1.0))
    assert scan.margin == pytest.approx(0.0, abs=1e-12)
    grid = ds2.fiber.quadrature(4)
    for seed in range(5):
        s = hs.random_graph(ds2, 1.0, 0.05, 2, seed)
        scan = hs.elliptic_point_scan(s, grid)
        assert scan.holds and scan.elliptic_found
        assert scan.refined_margin >= -1e-9
    static = spacetime("const", {"c": 1.0}, "sphere", 2)
    scan = hs.elliptic_point_scan(hs.slice_surface(static, 0.0), static.fiber.quadrature(2))
    assert scan.status == "hypothesis-violated"


def test_elliptic_scan_past_branch():
    # f' < 0 on the height range: maximum of h with the past normal
    st = spacetime("cosh", {}, "sphere", 2)
    s = hs.random_graph(st, -1.0, 0.05, 2, 2)
    scan = hs.elliptic_point_scan(s, st.fiber.quadrature(4))
    assert scan.sign == -1 and scan.orientation == "past"
    assert scan.holds and scan.refined_margin >= -1e-9


def test_umbilicity_deficit(ds2, flat_t2):
    for t0 in (-0.5, 0.0, 1.3):
        d = hs.umbilicity_deficit(hs.slice_surface(ds2, t0), ds2.fiber.quadrature(2))
        assert d.deficit <= 1e-9
    d = hs.umbilicity_deficit(sine_graph(flat_t2, 0.1), flat_t2.fiber.quadrature(3))
    assert d.deficit > 1e-3


def test_evaluation_counter(ds2):
    hs.evaluations.reset()
    hs.pointwise_geometry(hs.slice_surface(ds2, 0.0), np.zeros((7, 2)) + 1.0, "polar")
    assert hs.evaluations.points == 7
