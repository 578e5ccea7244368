import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gausscurv.closedforms import (CurvatureSpec, FamilyInstance, HarmonicSpec, conformal_maxima,
                                   eval_family, grid_local_maxima, level_invariance)
from gausscurv.exceptions import InvalidParameterError
from gausscurv.fields import PlanarField


def textbook_chakie(x, n, y, zeta):
    """Real-variable form with polar angle and |y| written out."""
    r = np.hypot(x[..., 0], x[..., 1])
    th = np.arctan2(x[..., 1], x[..., 0])
    ry = np.hypot(*y)
    th0 = np.arctan2(y[1], y[0])
    q = (r / ry) ** n
    return -np.log(1 - 2 * q * np.cos(n * (th - th0)) * np.tanh(zeta) + q * q) - np.log(ry ** n * np.cosh(zeta))


def _sym_residual(u, K):
    x1, x2 = sp.symbols("x1 x2", real=True)
    expr = sp.diff(u(x1, x2), x1, 2) + sp.diff(u(x1, x2), x2, 2) + K(x1, x2) * sp.exp(2 * u(x1, x2))
    return sp.lambdify((x1, x2), expr, "numpy")


PTS = np.array([[0.3, -0.7], [1.4, 0.2], [-2.1, 1.3], [0.05, 0.02], [2.5, -2.5]])


@pytest.mark.parametrize("n,zeta,y", [(1, 0.0, (1.0, 0.0)), (1, 1.0, (1.0, 0.0)), (2, 1.0, (1.0, 0.0)),
                                      (3, 0.4, (0.5, 1.2))])
def test_chakie_matches_textbook_form(n, zeta, y):
    inst = FamilyInstance.chakie(n, y, zeta)
    np.testing.assert_allclose(inst.u(PTS), textbook_chakie(PTS, n, y, zeta), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n,zeta", [(1, 0.0), (1, 1.0), (2, 1.0), (3, 0.5)])
def test_chakie_solves_pde_symbolically(n, zeta):
    t = sp.tanh(sp.Float(zeta))

    def u(a, b):
        r2 = a ** 2 + b ** 2
        re = sp.re(sp.expand((a + sp.I * b) ** n))
        return -sp.log(1 - 2 * re * t + r2 ** n) - sp.log(sp.cosh(sp.Float(zeta)))

    res = _sym_residual(u, lambda a, b: 4 * n ** 2 * (a ** 2 + b ** 2) ** (n - 1))
    assert np.max(np.abs(res(PTS[:, 0], PTS[:, 1]))) < 1e-9


def test_stuart_solves_pde_symbolically():
    K0, zeta = 2.0, 0.8
    inst = FamilyInstance.stuart(K0, (0.3, -0.4), zeta, phi=0.7)
    v, vp = inst.frame

    def u(a, b):
        d1, d2 = a - 0.3, b + 0.4
        return -sp.log(sp.cosh(zeta) * sp.cosh(v[0] * d1 + v[1] * d2)
                       - sp.sinh(zeta) * sp.sin(vp[0] * d1 + vp[1] * d2))

    res = _sym_residual(u, lambda a, b: K0)
    assert np.max(np.abs(res(PTS[:, 0], PTS[:, 1]))) < 1e-9
    x1, x2 = sp.symbols("x1 x2", real=True)
    f = sp.lambdify((x1, x2), u(x1, x2), "numpy")
    np.testing.assert_allclose(inst.u(PTS), f(PTS[:, 0], PTS[:, 1]), rtol=1e-12)


def test_stuart_far_field_is_stable():
    inst = FamilyInstance.stuart(1.0, (0.0, 0.0), 1.0)
    far = np.array([[800.0, 3.0], [-900.0, 1.0]])
    u = inst.u(far)
    assert np.all(np.isfinite(u))
    # e^{2u} ~ 4 e^{-2|<v,x>|} / cosh^2(zeta) far out
    np.testing.assert_allclose(u, -np.abs(far[:, 0]) + np.log(2 / np.cosh(1.0)), atol=1e-8)


def test_special_family_is_gamma_times_base():
    g = 0.6
    inst = FamilyInstance.special(g)
    r2 = np.sum(PTS ** 2, axis=-1)
    np.testing.assert_allclose(inst.u(PTS), -g * np.log1p(r2), rtol=1e-13)
    np.testing.assert_allclose(inst.K(PTS), 4 * g * (1 + r2) ** (-2 * (1 - g)), rtol=1e-13)


def test_flat_and_eval_family():
    u, K = eval_family(FamilyInstance.flat(0.25), PTS)
    assert np.all(u == 0.25) and np.all(K == 0)


@pytest.mark.parametrize("bad", [dict(n=0), dict(zeta=np.nan)])
def test_invalid_family_parameters(bad):
    with pytest.raises(InvalidParameterError):
        FamilyInstance.chakie(**{"n": 1, "zeta": 0.0, **bad})


def test_chakie_rejects_y_zero():
    with pytest.raises(InvalidParameterError):
        FamilyInstance.chakie(1, (0.0, 0.0), 0.0)


def test_x_star():
    inst = FamilyInstance.chakie(1, (-1.0, 0.0), 1.0)
    np.testing.assert_allclose(inst.x_star, [-np.tanh(1.0), 0.0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=4), st.lists(st.floats(-2, 2), min_size=0, max_size=3))
def test_harmonic_spec_is_harmonic(re, im):
    H = HarmonicSpec(tuple(re), (0.0,) + tuple(im))
    f = PlanarField.sample(H, 1.0, h=0.05)
    from gausscurv.fields import laplacian
    lap = laplacian(f)
    assert np.max(np.abs(lap.values)) < 1e-8 * max(1.0, np.max(np.abs(f.values)))


def test_harmonic_spec_rejects_im0():
    with pytest.raises(InvalidParameterError):
        HarmonicSpec((0.0,), (1.0,))


def test_harmonic_re_z():
    H = HarmonicSpec((1.0, 2.0), (0.0, 3.0))
    np.testing.assert_allclose(H(PTS), 1 + 2 * PTS[:, 0] + 3 * PTS[:, 1])


@pytest.mark.parametrize("name,kw", [("disk", {"radius": 1.0}), ("bump", {"radius": 2.0}),
                                     ("exp", {}), ("gaussian", {}), ("power", {"m": 3.0})])
def test_curvature_specs_radial(name, kw):
    K = CurvatureSpec.from_name(name, **kw)
    P = np.array([[0.3, 0.4], [0.5, 0.0], [0.0, -0.5]])
    v = K(P)
    assert np.allclose(v, v[0]) and v[0] > 0


def test_curvature_unknown_name():
    with pytest.raises(InvalidParameterError):
        CurvatureSpec.from_name("nope")


def test_grid_local_maxima_counts_plateau_once():
    v = np.zeros((7, 7))
    v[3, 2] = v[3, 3] = 1.0
    v[1, 5] = 0.5
    assert len(grid_local_maxima(v)) == 2


def test_two_island_maxima():
    inst = FamilyInstance.chakie(2, (1.0, 0.0), 1.0)
    f = PlanarField.sample(inst.conformal_factor, 2.0, h=0.01)
    m = conformal_maxima(inst, f)
    assert len(m) == 2
    for x, v in m:
        assert abs(v - np.cosh(1.0) ** 2) < 1e-9
    np.testing.assert_allclose(m[0][0], -m[1][0], atol=1e-7)


def test_strip_level_invariance_decays():
    inst = FamilyInstance.stuart(1.0, (0.0, -1.0), 1.0)
    vals = [level_invariance(inst, a) for a in (2.0, 4.0, 6.0, 8.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # e^{2u} ~ mean (1 + 4 tanh(zeta) e^{-a} sin b) far out
    assert abs(vals[-1] / (4 * np.tanh(1.0) * np.exp(-8.0)) - 1) < 0.05
