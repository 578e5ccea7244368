import numpy as np
import pytest
from scipy import integrate

from gausscurv.exceptions import DivergentIntegralError, GridError, InvalidParameterError
from gausscurv.fields import (PlanarField, RadialProfile, angular_average, deviation_bound,
                              integral_curvature, laplacian, polar_integral, radial_weights,
                              shell_integrals, tail_converges)
from gausscurv.meanfield import cell_log_integral


def test_planar_field_rejects_odd_and_bad_shape():
    with pytest.raises(GridError):
        PlanarField(1.0, 5, np.zeros((5, 5)))
    with pytest.raises(GridError):
        PlanarField(1.0, 4, np.zeros((4, 3)))


def test_planar_field_rejects_nan_on_valid_cells():
    v = np.zeros((4, 4))
    v[0, 0] = np.nan
    with pytest.raises(InvalidParameterError):
        PlanarField(1.0, 4, v)
    valid = np.ones((4, 4), bool)
    valid[0, 0] = False
    PlanarField(1.0, 4, v, valid)


def test_sample_rounds_to_even_cells():
    f = PlanarField.sample(lambda X: X[..., 0], 1.0, h=0.3)
    assert f.n_cells % 2 == 0
    assert f.coords[0] == pytest.approx(-f.coords[-1])


def test_laplacian_of_quadratic_is_exact():
    f = PlanarField.sample(lambda X: X[..., 0] ** 2 + 3 * X[..., 1] ** 2, 1.0, n_cells=20)
    lap = laplacian(f)
    np.testing.assert_allclose(lap.values[lap.valid], 8.0, rtol=1e-9)
    assert not lap.valid[0].any() and not lap.valid[:, -1].any()


def test_laplacian_second_order():
    u = lambda X: np.sin(X[..., 0]) * np.exp(X[..., 1])  # harmonic
    errs = [laplacian(PlanarField.sample(u, 1.0, h=h)).max_abs() for h in (0.1, 0.05)]
    # cell centers move with h, so the ratio is only roughly 4
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_planar_csv_round_trip(tmp_path):
    f = PlanarField.sample(lambda X: np.exp(-np.sum(X ** 2, -1)) / 3, 1.5, n_cells=8)
    f.to_csv(tmp_path / "f.csv")
    g = PlanarField.from_csv(tmp_path / "f.csv")
    assert g.n_cells == 8 and g.halfwidth == pytest.approx(1.5)
    np.testing.assert_array_equal(g.values, f.values)


def test_radial_csv_round_trip(tmp_path):
    p = RadialProfile.sample(lambda r: 1 / (1 + r) ** 3, 1e-2, 10.0, 17)
    p.to_csv(tmp_path / "p.csv")
    q = RadialProfile.from_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(q.values, p.values)
    np.testing.assert_array_equal(q.weights, p.weights)


def test_radial_profile_validation():
    with pytest.raises(GridError):
        RadialProfile([1.0, 0.5], [0.0, 0.0])
    with pytest.raises(GridError):
        RadialProfile([0.0, 1.0], [0.0, 0.0])


def test_radial_weights_integrate_gaussian():
    r = np.geomspace(1e-4, 12.0, 3000)
    w = radial_weights(r)
    assert np.dot(w, np.exp(-r ** 2)) == pytest.approx(np.pi, rel=1e-5)
    assert w.sum() == pytest.approx(np.pi * 12.0 ** 2, rel=1e-5)


def test_polar_integral_off_center():
    f = lambda X: np.exp(-np.sum((X - np.array([0.5, -0.2])) ** 2, -1))
    val = polar_integral(f, 8.0, center=(0.5, -0.2))
    assert val == pytest.approx(np.pi * (1 - np.exp(-64)), rel=1e-9)


def test_polar_integral_annulus():
    val = polar_integral(lambda X: np.ones(X.shape[:-1]), 2.0, r_min=1.0)
    assert val == pytest.approx(3 * np.pi, rel=1e-12)


def test_shells_sum_to_integral():
    f = lambda X: (1 + np.sum(X ** 2, -1)) ** -2
    sh = shell_integrals(f)
    assert np.sum(sh.values) + sh.inner == pytest.approx(np.pi, rel=1e-8)
    finite, ratio = tail_converges(sh)
    assert finite and ratio == pytest.approx(0.25, rel=1e-3)


@pytest.mark.parametrize("p,finite", [(1.5, True), (1.0, False), (0.5, False)])
def test_tail_converges_power_laws(p, finite):
    f = lambda X: (1 + np.sum(X ** 2, -1)) ** -p
    assert tail_converges(shell_integrals(f))[0] is finite


def test_tail_converges_underflow_is_finite():
    f = lambda X: np.exp(-np.sum(X ** 2, -1))
    assert tail_converges(shell_integrals(f)) == (True, 0.0)


def test_tail_converges_overflow_is_divergent():
    f = lambda X: np.exp(np.hypot(X[..., 0], X[..., 1]))
    assert tail_converges(shell_integrals(f))[0] is False


def test_integral_curvature_with_tail():
    K = lambda X: 4.0 * np.ones(X.shape[:-1])
    u = lambda X: -np.log1p(np.sum(X ** 2, -1))
    res = integral_curvature(K, u, 500.0, tail_exponent=4.0)
    assert res.value == pytest.approx(4 * np.pi, rel=1e-8)
    assert 0 < res.tail_share < 1e-3


def test_integral_curvature_rejects_slow_tail():
    K = lambda X: np.ones(X.shape[:-1])
    with pytest.raises(DivergentIntegralError):
        integral_curvature(K, lambda X: np.zeros(X.shape[:-1]), 5.0, tail_exponent=2.0)


def test_integral_curvature_on_fields_matches():
    u = lambda X: -np.log1p(np.sum(X ** 2, -1))
    K = lambda X: 4.0 * np.ones(X.shape[:-1])
    uf = PlanarField.sample(u, 2.0, h=0.01)
    Kf = PlanarField.sample(K, 2.0, h=0.01)
    res = integral_curvature(Kf, uf, 2.0)
    assert res.value == pytest.approx(4 * np.pi * 4 / 5, rel=1e-3)


def test_angular_average_and_deviation():
    u = lambda X: X[..., 0] + np.sum(X ** 2, -1)
    radii = np.array([0.5, 1.0, 2.0])
    avg = angular_average(u, radii)
    np.testing.assert_allclose(avg.values, radii ** 2, atol=1e-12)
    assert deviation_bound(u, avg) == pytest.approx(2.0, rel=1e-12)


def test_cell_log_integral_matches_quadrature():
    h = 0.3
    for dx, dy in [(0.3, 0.0), (0.3, 0.3), (0.45, -0.6), (1.2, 0.9)]:
        ref, _ = integrate.dblquad(lambda y, x: 0.5 * np.log(x * x + y * y),
                                   dx - h / 2, dx + h / 2, dy - h / 2, dy + h / 2,
                                   epsabs=1e-13, epsrel=1e-12)
        assert cell_log_integral(dx, dy, h) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_cell_log_integral_self_cell_closed_form():
    # mean of ln|y| over [-a, a]^2
    a = 0.7
    mean = cell_log_integral(0.0, 0.0, 2 * a) / (2 * a) ** 2
    assert mean == pytest.approx(np.log(a) + 0.5 * np.log(2) - 1.5 + np.pi / 4, rel=1e-13)
