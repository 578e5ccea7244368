import numpy as np
import pytest
from sklearn.base import clone

from gausscurv.closedforms import CurvatureSpec, HarmonicSpec
from gausscurv.exceptions import (DivergentIntegralError, InadmissibleBetaError, InvalidParameterError,
                                  NotFittedError, SignMismatchError)
from gausscurv.fields import RadialProfile
from gausscurv.meanfield import (MeanFieldSolver, PlanarGeometry, RadialGeometry, SolverConfig,
                                 beta_star, build_apriori, fixed_point_step, free_energy,
                                 log_potential, reconstruct_u, solve_minimizer, solve_multistart)


def rho_special(r):
    return (1.0 + r ** 2) ** -2 / np.pi


@pytest.fixture(scope="module")
def special_run():
    cs = CurvatureSpec.special(0.5)
    tau = build_apriori(cs, radius=1e3)
    res = solve_minimizer(SolverConfig(beta=2.0, r_max=1e3, n_radii=1200), tau)
    reconstruct_u(res, cs, HarmonicSpec())
    return cs, tau, res


def test_apriori_mass_gaussian():
    tau = build_apriori(CurvatureSpec.gaussian(1.0))
    # Upsilon = e^{-r^2}
    assert tau.mass == pytest.approx(np.pi, rel=1e-8)


def test_apriori_mass_with_harmonic():
    tau = build_apriori(CurvatureSpec.gaussian(1.0), HarmonicSpec((0.0, 0.5)))
    # int e^{-r^2 + x1} dx = pi e^{1/4}
    assert tau.mass == pytest.approx(np.pi * np.exp(0.25), rel=1e-7)


def test_apriori_divergent_mass():
    with pytest.raises(DivergentIntegralError):
        build_apriori(CurvatureSpec.constant(1.0))


def test_apriori_flat():
    tau = build_apriori(CurvatureSpec.zero())
    assert tau.is_flat and tau.mass == 0.0


def test_log_potential_of_analytic_density():
    g = RadialGeometry.log_grid(1e-4, 1e4, 4000)
    rho = rho_special(g.r)
    rho = rho / g.integrate(rho)
    prof = g.as_profile(rho)
    r = np.array([0.1, 1.0, 3.0, 30.0])
    np.testing.assert_allclose(log_potential(prof, r), 0.5 * np.log1p(r ** 2), atol=2e-5)


def test_log_potential_rejects_unnormalized():
    prof = RadialProfile.sample(lambda r: np.exp(-r), 1e-3, 10, 50)
    with pytest.raises(InvalidParameterError):
        log_potential(prof, [1.0])


def test_planar_potential_matches_radial():
    # uniform disk: Phi = ln r outside, ln 1 + (r^2 - 1)/2 inside
    geo = PlanarGeometry(2.0, 96)
    rr = np.hypot(geo.points[..., 0], geo.points[..., 1])
    rho = (rr <= 1.0).astype(float)
    rho /= geo.integrate(rho)
    X = np.array([[1.5, 0.3], [0.2, 0.1], [-1.8, -1.7]])
    r = np.hypot(X[:, 0], X[:, 1])
    exact = np.where(r >= 1, np.log(r), 0.5 * (r ** 2 - 1))
    np.testing.assert_allclose(geo.potential_at(rho, X), exact, atol=3e-2)


def test_analytic_case_is_a_fixed_point(special_run):
    cs, tau, res = special_run
    g = res.geometry
    exact = rho_special(g.r)
    exact /= g.integrate(exact)
    step = fixed_point_step(g.as_profile(exact), 2.0, tau)
    assert g.integrate(np.abs(step.values - exact)) < 5e-3


def test_solver_converges_to_analytic(special_run):
    cs, tau, res = special_run
    g = res.geometry
    assert res.converged
    assert g.integrate(res.density.values) == pytest.approx(1.0, abs=1e-12)
    assert g.integrate(np.abs(res.density.values - rho_special(g.r))) < 1e-2
    assert res.free_energy <= res.initial_free_energy
    F = [f for _, f in res.trace]
    assert all(b <= a + 1e-12 * max(1, abs(a)) for a, b in zip(F, F[1:]))


def test_reconstructed_metric(special_run):
    cs, tau, res = special_run
    X = np.array([[0.5, 0.0], [0.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(res.U(X), -0.5 * np.log1p(np.sum(X ** 2, -1)), atol=1e-3)
    assert res.kappa == pytest.approx(2 * np.pi)
    assert set(res.summary()) >= {"beta", "kappa", "E", "S1", "F", "U0", "iterations", "converged"}


def test_free_energy_shift_invariant_under_harmonic_constant():
    # adding a constant to H rescales tau, which mu1 absorbs
    cs = CurvatureSpec.gaussian(1.0)
    geo = RadialGeometry.log_grid(1e-3, 20.0, 300)
    rho = np.exp(-geo.r ** 2)
    prof = geo.as_profile(rho / geo.integrate(rho))
    a = free_energy(prof, 1.0, build_apriori(cs))
    b = free_energy(prof, 1.0, build_apriori(cs, HarmonicSpec((3.0,))))
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_entropy_is_minus_inf_off_support():
    tau = build_apriori(CurvatureSpec.disk(1.0))
    geo = RadialGeometry.log_grid(1e-3, 3.0, 200)
    rho = np.ones_like(geo.r)
    prof = geo.as_profile(rho / geo.integrate(rho))
    assert free_energy(prof, 1.0, tau)[1] == -np.inf


@pytest.mark.parametrize("beta", [4.0, 4.5])
def test_beta_above_four_rejected(beta):
    tau = build_apriori(CurvatureSpec.gaussian())
    with pytest.raises(InadmissibleBetaError):
        solve_minimizer(SolverConfig(beta=beta), tau)


def test_beta_star_power_law():
    tau = build_apriori(CurvatureSpec.power(5.0, sign=-1))
    assert beta_star(tau) == pytest.approx(-6.0)
    with pytest.raises(InadmissibleBetaError):
        solve_minimizer(SolverConfig(beta=-6.5), tau)


def test_beta_star_bounded_support():
    assert beta_star(build_apriori(CurvatureSpec.disk(1.0, sign=-1))) == -np.inf


def test_sign_mismatch():
    cs = CurvatureSpec.gaussian(1.0, sign=1)
    res = solve_minimizer(SolverConfig(beta=-1.0, r_max=50.0, n_radii=300), build_apriori(cs))
    with pytest.raises(SignMismatchError):
        reconstruct_u(res, cs, HarmonicSpec())


def test_radial_geometry_needs_radial_tau():
    tau = build_apriori(CurvatureSpec.gaussian(), HarmonicSpec((0.0, 1.0)))
    with pytest.raises(InvalidParameterError):
        solve_minimizer(SolverConfig(beta=1.0), tau)


def test_planar_agrees_with_radial_negative_beta():
    cs = CurvatureSpec.gaussian(1.0, sign=-1)
    tau = build_apriori(cs)
    rad = solve_minimizer(SolverConfig(beta=-1.0, r_max=50.0, n_radii=800), tau)
    pla = solve_minimizer(SolverConfig(beta=-1.0, geometry="planar", halfwidth=5.0, n_cells=96), tau)
    reconstruct_u(rad, cs, HarmonicSpec())
    reconstruct_u(pla, cs, HarmonicSpec())
    X = np.array([[0.3, 0.1], [1.0, -0.5], [0.0, 2.0]])
    np.testing.assert_allclose(pla.U(X), rad.U(X), atol=2e-2)


def test_multistart_agrees():
    cs = CurvatureSpec.exp_decay(1.0, sign=-1)
    tau = build_apriori(cs)
    runs = solve_multistart(SolverConfig(beta=-1.5, r_max=100.0, n_radii=600, init_radius=3.0),
                            tau, ["apriori", "uniform-disk", "gaussian"])
    d = [r.density.values for r in runs]
    assert max(np.max(np.abs(a - d[0])) for a in d) < 1e-8


def test_non_convergence_is_reported():
    tau = build_apriori(CurvatureSpec.gaussian())
    res = solve_minimizer(SolverConfig(beta=2.0, r_max=30.0, n_radii=200, max_iter=2), tau)
    assert not res.converged and res.n_iter == 2


def test_estimator_protocol(special_run):
    _, tau, _ = special_run
    est = MeanFieldSolver(kappa=2 * np.pi, r_max=1e3, n_radii=600)
    assert clone(est).get_params()["kappa"] == pytest.approx(2 * np.pi)
    with pytest.raises(NotFittedError):
        est.predict([[0.0, 1.0]])
    est.fit(tau)
    assert est.converged_
    assert est.predict([[1.0, 0.0]])[0] == pytest.approx(-0.5 * np.log(2), abs=2e-3)
    assert est.score() == pytest.approx(-est.free_energy_)
    assert np.isfinite(est.transform([[1.0, 0.0]])).all()


def test_estimator_flat_case():
    est = MeanFieldSolver(beta=0.0).fit(build_apriori(CurvatureSpec.zero(), HarmonicSpec((0.5, 1.0))))
    assert est.predict([[1.0, 0.0]])[0] == pytest.approx(1.5)
    with pytest.raises(SignMismatchError):
        MeanFieldSolver(beta=1.0).fit(build_apriori(CurvatureSpec.zero()))


def test_estimator_beta_kappa_conflict():
    with pytest.raises(InvalidParameterError):
        MeanFieldSolver(beta=1.0, kappa=1.0).config()
