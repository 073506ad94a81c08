import math

import numpy as np
import pytest

from grwkit import hypersurface as hs
from grwkit import operators as ops
from grwkit.ambient import make_fiber, make_spacetime, make_warping
from grwkit.errors import ContractError, IndexRangeError, UnsupportedError


def spacetime(warp, wparams, fiber, dim, fparams=None):
    return make_spacetime(make_warping(warp, wparams), make_fiber(fiber, dim, fparams))


@pytest.fixture(scope="module")
def ds2():
    return spacetime("cosh", {}, "sphere", 2)


@pytest.fixture(scope="module")
def ds3():
    return spacetime("cosh", {}, "sphere", 3)


@pytest.fixture(scope="module")
def static3():
    return spacetime("const", {"c": 1.0}, "sphere", 3)


def nodes(st, level=1, stride=5):
    grid = st.fiber.quadrature(level)
    return grid.nodes[::stride], grid.chart


def geometry(surface, level=1, stride=5, orientation="future"):
    x, chart = nodes(surface.spacetime, level, stride)
    return hs.pointwise_geometry(surface, x, chart, orientation)


def test_slice_hessians_vanish(ds2):
    geo = geometry(hs.slice_surface(ds2, 0.7))
    for field in ("height", "g-of-height"):
        assert np.allclose(ops.hessian_on_surface(geo, field).hessian, 0, atol=1e-14)
        for k in range(2):
            assert np.allclose(ops.Lk_direct(geo, field, k).value, 0, atol=1e-14)
    assert np.allclose(ops.hessian_height_formula(geo), 0, atol=1e-14)


@pytest.mark.parametrize("seed", [1, 2])
def test_hessian_closed_forms(ds2, seed):
    geo = geometry(hs.random_graph(ds2, 1.0, 0.1, 2, seed))
    direct = ops.hessian_on_surface(geo, "g-of-height").hessian
    assert np.allclose(direct, ops.hessian_g_formula(geo), atol=1e-7)
    direct = ops.hessian_on_surface(geo, "height").hessian
    assert np.allclose(direct, ops.hessian_height_formula(geo), atol=1e-7)


def test_hessian_against_finite_differences(ds2):
    s = hs.random_graph(ds2, 1.0, 0.1, 2, 4)
    geo = geometry(s)
    exact = ops.hessian_on_surface(geo, "height").hessian
    fd = ops.hessian_on_surface(geo, "user",
                                fn=lambda X: s.height(X, geo.chart)[0], delta=1e-4).hessian
    assert np.allclose(exact, fd, atol=1e-6)


def test_flat_ambient_hessian_of_height():
    st = spacetime("const", {"c": 1.0}, "torus", 2)
    geo = geometry(hs.random_graph(st, 0.0, 0.2, 2, 3), level=2)
    direct = ops.hessian_on_surface(geo, "height").hessian
    assert np.allclose(direct, geo.N_dt[:, None, None] * geo.A, atol=1e-10)
    for k in range(2):
        val = ops.Lk_height_formula(geo, k).value
        assert np.allclose(val, -geo.N_dt * geo.newton.c[k] * geo.Hk(k + 1), atol=1e-12)


@pytest.mark.parametrize("t0", [-0.8, 0.0, 1.0])
def test_slice_closed_forms_vanish(ds3, t0):
    geo = geometry(hs.slice_surface(ds3, t0))
    for k in range(3):
        assert np.allclose(ops.Lk_height_formula(geo, k).value, 0, atol=1e-13)
        assert np.allclose(ops.Lk_g_formula(geo, k).value, 0, atol=1e-13)
        assert np.allclose(ops.divPk_pairing_general(geo, k), 0, atol=1e-14)
        if k >= 1:
            assert np.allclose(ops.divPk_pairing_rw(geo, k), 0, atol=1e-14)


def test_totally_geodesic_slice(static3):
    geo = geometry(hs.slice_surface(static3, 0.0))
    for k in range(3):
        assert np.allclose(ops.Lk_g_formula(geo, k).value, 0)


@pytest.mark.parametrize("st_name", ["ds2", "ds3", "static3"])
def test_Lk_direct_vs_formulas(request, st_name):
    st = request.getfixturevalue(st_name)
    geo = geometry(hs.random_graph(st, 0.7, 0.08, 2, 9))
    for k in range(st.n):
        d = ops.Lk_direct(geo, "height", k).value
        assert np.allclose(d, ops.Lk_height_formula(geo, k).value, atol=1e-6)
        d = ops.Lk_direct(geo, "g-of-height", k).value
        assert np.allclose(d, ops.Lk_g_formula(geo, k).value, atol=1e-6)


def test_divPk_vanishes_in_de_sitter(ds3):
    geo = geometry(hs.random_graph(ds3, 0.5, 0.1, 2, 2))
    for k in range(3):
        assert np.max(np.abs(ops.divPk_pairing_general(geo, k))) <= 1e-8
        if k:
            assert np.max(np.abs(ops.divPk_pairing_rw(geo, k))) <= 1e-8


def test_divPk_general_vs_rw_einstein_static(static3):
    geo = geometry(hs.random_graph(static3, 0.0, 0.1, 2, 5))
    for k in (1, 2):
        g = ops.divPk_pairing_general(geo, k)
        r = ops.divPk_pairing_rw(geo, k)
        assert np.allclose(g, r, atol=1e-7)
        # factor kappa/f^2 - (log f)'' = 1 here
        ref = (3 - k) * geo.N_dt * np.einsum("...i,...ij,...j->...", geo.grad_h, geo.Pk(k - 1),
                                             geo.grad_h)
        assert np.allclose(r, ref, atol=1e-14)
    assert np.max(np.abs(g)) > 1e-6


def test_div_P1_is_minus_ricci():
    st = spacetime("cosh", {}, "perturbed-sphere", 2, {"eps": 0.1})
    geo = geometry(hs.random_graph(st, 0.5, 0.1, 2, 1))
    div = ops.divPk_pairing_general(geo, 1)
    assert np.max(np.abs(div)) > 1e-7
    assert np.allclose(div, -ops.ricci_normal_gradient(geo), atol=1e-12)


def test_divergence_decomposition(static3):
    s = hs.random_graph(static3, 0.0, 0.1, 2, 8)
    x, chart = nodes(static3, 1, 17)
    for k in range(3):
        div, rhs = ops.divergence_decomposition_fd(s, x, k, chart)
        assert np.allclose(div, rhs, atol=1e-6)


def test_rw_pairing_needs_constant_curvature_fiber():
    st = spacetime("cosh", {}, "perturbed-sphere", 2, {"eps": 0.1})
    geo = geometry(hs.random_graph(st, 0.5, 0.05, 2, 1))
    with pytest.raises(UnsupportedError):
        ops.divPk_pairing_rw(geo, 1)


def test_support_operator_on_slices(ds3):
    geo = geometry(hs.slice_surface(ds3, 1.0))
    for k in range(3):
        for variant in ops.SUPPORT_VARIANTS:
            val = ops.Lk_support_formula(geo, k, variant).value
            assert np.allclose(val, 0, atol=1e-12)
    # the individual pieces at the de Sitter slice: tr(P_k R_N) = -c_k H_k
    for k in range(3):
        assert np.allclose(ops.tr_Pk_RN(geo, k), -geo.newton.c[k] * geo.Hk(k), atol=1e-12)


def test_support_operator_flat_k0():
    st = spacetime("const", {"c": 1.0}, "torus", 2)
    s = hs.random_graph(st, 0.0, 0.2, 2, 6)
    geo = geometry(s, level=2)
    lap = ops.laplacian_support_formula(geo)
    val = ops.Lk_support_formula(geo, 0).value
    assert np.allclose(lap, val, atol=1e-9)
    fd = ops.Lk_support_fd(geo, 0).value
    assert np.allclose(val, fd, atol=1e-5)


@pytest.mark.parametrize("seed", [3, 4])
def test_support_variants_agree(static3, seed):
    geo = geometry(hs.random_graph(static3, 0.0, 0.1, 2, seed))
    for k in range(3):
        a = ops.Lk_support_formula(geo, k, "general-RN")
        b = ops.Lk_support_formula(geo, k, "space-form-fiber")
        c = ops.Lk_support_formula(geo, k, "sectional-sum")
        assert np.allclose(a.value, b.value, atol=1e-7)
        ok = ~np.asarray(c.low_confidence, bool)
        assert np.allclose(a.value[ok], c.value[ok], atol=1e-7)
        fd = ops.Lk_support_fd(geo, k).value
        assert np.allclose(a.value, fd, atol=1e-4)


def test_codazzi(ds2):
    for st in (ds2, spacetime("tanh", {"eps": 0.5}, "torus", 3)):
        s = hs.random_graph(st, 0.3, 0.1, 2, 2)
        x, chart = nodes(st, 1, 11)
        assert np.max(ops.codazzi_residual(s, x, chart)) <= 1e-6


def test_index_contracts(ds2):
    geo = geometry(hs.slice_surface(ds2, 0.0))
    with pytest.raises(IndexRangeError):
        ops.Lk_height_formula(geo, 2)
    with pytest.raises(IndexRangeError):
        ops.divPk_pairing_rw(geo, 0)
    with pytest.raises(ContractError):
        ops.Lk_support_formula(geo, 0, "magic")
    with pytest.raises(ContractError):
        ops.hessian_on_surface(geo, "user")
    assert math.isfinite(float(np.max(ops.ricci_term(geo))))
