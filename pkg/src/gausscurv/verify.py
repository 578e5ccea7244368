"""Invariant suites behind ``gausscurv verify``.

Each suite returns a list of ``Check`` rows; a suite passes when every row does.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ._validation import polar_points
from .closedforms import (CurvatureSpec, FamilyInstance, HarmonicSpec, conformal_maxima,
                          level_invariance)
from .diagnostics import (asymptotic_slope, barrier_check, comparison_g, kappa_lower_bound,
                          radial_asymmetry, reflection_min)
from .exceptions import InvalidParameterError
from .fields import PlanarField, deviation_bound, integral_curvature, pde_residual
from .loggas import LogGasSampler, mu1_pair_log_moment, two_particle_disk_moments
from .meanfield import SolverConfig, build_apriori, reconstruct_u, solve_minimizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    bound: str

    def row(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.suite:<18} {self.name:<48} {self.value:<14.6g} {self.bound}"


def _c(suite, name, value, ok, bound):
    return Check(suite, name, bool(ok), float(value), bound)


PDE_CASES = [
    ("chakie n=1 zeta=0", FamilyInstance.chakie(1, (1.0, 0.0), 0.0)),
    ("chakie n=1 zeta=1", FamilyInstance.chakie(1, (1.0, 0.0), 1.0)),
    ("chakie n=2 zeta=0", FamilyInstance.chakie(2, (1.0, 0.0), 0.0)),
    ("chakie n=2 zeta=1", FamilyInstance.chakie(2, (1.0, 0.0), 1.0)),
    ("stuart K0=1 zeta=1", FamilyInstance.stuart(1.0, (0.0, -1.0), 1.0)),
    ("special gamma=0.6", FamilyInstance.special(0.6)),
    ("special gamma=1", FamilyInstance.special(1.0)),
]


def suite_pde_residual(halfwidth=3.0, h=0.01):
    out = []
    for name, inst in PDE_CASES:
        r1 = pde_residual(inst.u, inst.K, halfwidth, h)
        r2 = pde_residual(inst.u, inst.K, halfwidth, h / 2)
        out.append(_c("pde-residual", f"{name} residual", r1, r1 < 1e-3, "< 1e-3"))
        ratio = r1 / r2
        out.append(_c("pde-residual", f"{name} h-halving ratio", ratio, 3.2 <= ratio <= 4.8, "4 +- 20%"))
    return out


def suite_curvature_integrals(r_max=100.0):
    out = []
    cases = [FamilyInstance.chakie(n, (1.0, 0.0), z) for n in (1, 2, 3) for z in (0.0, 1.0)]
    cases += [FamilyInstance.special(g) for g in (0.3, 0.6, 1.0)]
    for inst in cases:
        res = integral_curvature(inst.K, inst.u, r_max, inst.tail_exponent)
        exact = inst.integral_curvature_exact
        rel = abs(res.value - exact) / exact
        out.append(_c("curvature-integrals", f"{inst.family} {inst.to_dict()}", rel, rel < 0.01,
                      "rel < 1%"))
    st = FamilyInstance.stuart(1.0, (0.0, -1.0), 1.0)
    from .fields import polar_integral
    f = lambda X: st.K(X) * st.conformal_factor(X)
    radii = np.array([25.0, 50.0, 100.0, 200.0])
    vals = np.array([polar_integral(f, R, 512, 16) for R in radii])
    slope = np.polyfit(radii, vals, 1)[0]
    lin = np.max(np.abs(np.polyval(np.polyfit(radii, vals, 1), radii) - vals)) / vals[-1]
    out.append(_c("curvature-integrals", "stuart truncated integral grows linearly",
                  lin, slope > 0 and lin < 0.05 and vals[-1] > 1.9 * vals[1], "linear, no limit"))
    return out


def special_solver_case(gamma=0.6, beta=2.4, radius=1e4, n_radii=2000):
    cs = CurvatureSpec.special(gamma)
    tau = build_apriori(cs, radius=radius)
    res = solve_minimizer(SolverConfig(beta=beta, r_min=1e-3, r_max=radius, n_radii=n_radii,
                                       tol=1e-10), tau)
    reconstruct_u(res, cs, HarmonicSpec())
    return cs, tau, res


def suite_solver_oracle():
    cs, tau, res = special_solver_case()
    g = res.geometry
    exact = (1.0 / np.pi) * (1.0 + g.r ** 2) ** -2
    l1 = g.integrate(np.abs(res.density.values - exact))
    pde = pde_residual(res.U, cs, 3.0, 0.01)
    fit = asymptotic_slope(res.U, None, (1e2, 1e3))
    rel = abs(fit.kappa_hat - 2.4 * np.pi) / (2.4 * np.pi)
    return [
        _c("solver-oracle", "fixed-point residual", res.residual, res.converged and res.residual < 1e-10, "< 1e-10"),
        _c("solver-oracle", "L1 to (1/pi)(1+r^2)^-2", l1, l1 < 1e-2, "< 1e-2"),
        _c("solver-oracle", "U PDE residual", pde, pde < 1e-3, "< 1e-3"),
        _c("solver-oracle", "kappa_hat / 2.4 pi - 1", rel, rel < 0.02, "< 2%"),
        _c("solver-oracle", "F(rho) <= F(init)", res.free_energy - res.initial_free_energy,
           res.free_energy <= res.initial_free_energy, "<= 0"),
    ]


def negative_beta_runs(tol=1e-12):
    cs = CurvatureSpec.exp_decay(1.0, sign=-1)
    tau = build_apriori(cs)
    runs = []
    for init in ("apriori", "uniform-disk", "gaussian"):
        cfg = SolverConfig(beta=-2.0, r_min=1e-3, r_max=200.0, n_radii=2000, tol=tol, init=init,
                           init_radius=3.0)
        res = solve_minimizer(cfg, tau)
        reconstruct_u(res, cs, HarmonicSpec())
        runs.append(res)
    return cs, tau, runs


def suite_uniqueness():
    _, _, runs = negative_beta_runs()
    dens = [r.density.values for r in runs]
    dist = max(np.max(np.abs(a - b)) for a in dens for b in dens)
    rho = dens[0]
    mono = np.max(np.diff(rho))
    U = runs[0].U.profile().values
    return [
        _c("uniqueness", "all runs converged", sum(r.converged for r in runs), all(r.converged for r in runs), "3/3"),
        _c("uniqueness", "pairwise sup distance of rho", dist, dist < 1e-8, "< 1e-8"),
        _c("uniqueness", "rho non-increasing (max diff)", mono, mono <= 1e-10, "<= 1e-10"),
        _c("uniqueness", "U non-decreasing (min diff)", np.min(np.diff(U)), np.min(np.diff(U)) >= -1e-10, ">= -1e-10"),
    ]


def planar_compact_case(H, beta=2.0, halfwidth=1.0, n_cells=128):
    cs = CurvatureSpec.bump(1.0)
    tau = build_apriori(cs, H)
    res = solve_minimizer(SolverConfig(beta=beta, geometry="planar", halfwidth=halfwidth,
                                       n_cells=n_cells, tol=1e-10), tau)
    reconstruct_u(res, cs, H)
    return res


def suite_symmetry():
    out = []
    radii = np.geomspace(1e-2, 2.0, 40)
    flat = planar_compact_case(HarmonicSpec())
    tilted = planar_compact_case(HarmonicSpec((0.0, 1.0), (0.0, 0.0)))
    floor = radial_asymmetry(flat.U, centers=[np.zeros(2)], radii=radii).radial_asymmetry
    rep = radial_asymmetry(tilted.U, radii=radii, halfwidth=1.0, h=1.0 / 64)
    ratio = rep.radial_asymmetry / floor
    out.append(_c("symmetry", "asymmetry(H=Re z) / radial floor", ratio, ratio > 1e3, "> 1e3"))
    H = HarmonicSpec((0.0, 1.0), (0.0, 0.0))
    P = polar_points(np.geomspace(1e2, 1e4, 20), 64)
    q = tilted.U(P) - H(P) + tilted.kappa / (2 * np.pi) * np.log(np.hypot(P[..., 0], P[..., 1]))
    var = float(np.max(q) - np.min(q))
    out.append(_c("symmetry", "variation of U - H + (kappa/2pi) ln r", var, var < 0.05, "< 0.05"))

    _, _, runs = negative_beta_runs()
    rho = runs[0].U.density
    worst = max(abs(reflection_min(rho, lam)) for lam in np.linspace(-3.0, -0.01, 30))
    out.append(_c("symmetry", "reflection_min(rho_beta), lambda < 0", worst, worst <= 1e-10, "= 0 +- 1e-10"))
    c2 = FamilyInstance.chakie(2, (1.0, 0.0), 1.0)
    neg = min(reflection_min(c2.u, lam) for lam in np.linspace(-2.0, -0.05, 40))
    out.append(_c("symmetry", "reflection_min chakie n=2 zeta=1", neg, neg < 0, "< 0 somewhere"))
    c1 = FamilyInstance.chakie(1, (1.0, 0.0), 1.0)
    rep1 = radial_asymmetry(c1.u, family=c1, halfwidth=3.0, h=0.01)
    err = float(np.hypot(*(np.asarray(rep1.center) - c1.x_star)))
    out.append(_c("symmetry", "best center vs tanh(zeta) y", err, err <= 0.01, "<= one cell (0.01)"))
    return out


def suite_kappa_bounds():
    out = []
    for g in (0.4, 0.75, 1.0):
        k = kappa_lower_bound(CurvatureSpec.special(g)).value
        target = 2 * np.pi * max(2 * g - 1, 0.0)
        ok = abs(k - target) <= 0.05 * target if target > 0 else k == 0.0
        out.append(_c("kappa-bounds", f"kappa_*(K_gamma), gamma={g}", k, ok,
                      f"{target:.6g} +- 5%"))
    surfaces = [(f"special gamma={g}", FamilyInstance.special(g).curvature_spec(), 4 * np.pi * g)
                for g in (0.4, 0.6, 0.75, 1.0)]
    surfaces.append(("chakie n=1", CurvatureSpec.chakie(1), 4 * np.pi))
    _, _, res = special_solver_case()
    surfaces.append(("solver special gamma=0.6", CurvatureSpec.special(0.6), res.kappa))
    for name, K, kappa in surfaces:
        ks = kappa_lower_bound(K).value
        out.append(_c("kappa-bounds", f"{name}: integral curvature >= kappa_*", kappa - ks,
                      kappa >= ks - 0.05 * max(ks, 1e-300), ">= -5% slack"))
    return out


def special_comparison(gamma=0.6):
    w = lambda s: 4 * gamma * (1.0 + np.asarray(s, dtype=float) ** 2) ** -2.0
    return comparison_g(w, r_max=1e4, tail_exponent=4.0)


def suite_barrier():
    out = []
    w5 = lambda s: np.where(np.asarray(s) >= 1.0, np.asarray(s, dtype=float) ** -5.0, 0.0)
    g5 = comparison_g(w5, r_max=1e4, tail_exponent=5.0, breakpoints=[1.0])
    err = abs(float(g5(np.array([np.e]))[0]) - 5.0 / 27.0 * np.exp(-2.0))
    out.append(_c("barrier", "g(e) vs (5/27) e^-2", err, err <= 1e-6, "<= 1e-6"))
    g = special_comparison()
    _, rel = g.ode_residual(np.geomspace(1.0, 1e3, 4000))
    out.append(_c("barrier", "Euler ODE relative residual", rel.max(), rel.max() < 1e-6, "< 1e-6"))
    r = np.geomspace(1.0 + 1e-9, 1e4, 2000)
    gmin = float(np.min(g(r)))
    out.append(_c("barrier", "min g on r > 1", gmin, gmin >= 0, ">= 0"))
    ratio = float(g(np.array([1e3]))[0] / 1e3)
    out.append(_c("barrier", "g(1e3)/1e3", ratio, ratio < 1e-4, "< 1e-4"))
    inst = FamilyInstance.special(0.6)
    c_u = deviation_bound(inst.u, radii=np.geomspace(1e-2, 1e3, 200), n_angles=64)
    a_star = 2.0 * np.exp(2.0 * c_u)
    rep = barrier_check(g, inst.u, inst.K, 2.0 * a_star, c_u=c_u)
    out.append(_c("barrier", "barrier margin, alpha = 2 alpha*", rep.margin, rep.margin < 0, "< 0"))
    return out


def suite_mc_consistency(n_sweeps=1_000_000, seed=0, n2_sweeps=400_000):
    out = []
    cs = CurvatureSpec.special(0.5)
    tau = build_apriori(cs, radius=1e4)
    res = solve_minimizer(SolverConfig(beta=2.0, r_min=1e-3, r_max=1e4, n_radii=2000), tau)
    s = LogGasSampler(n_particles=100, beta=2.0, n_sweeps=n_sweeps, seed=seed).fit(tau)
    l1 = s.l1_distance(res.density)
    out.append(_c("mc-consistency", "L1(empirical marginal, rho_beta)", l1, l1 < 0.1, "< 0.1"))
    m1 = mu1_pair_log_moment(tau)
    gap = 2.0 * s.pair_log_mean_ - 2.0 * m1
    out.append(_c("mc-consistency", "beta<ln d>_N - beta<ln d>_mu1 (upper sandwich)", gap,
                  gap <= 3 * 2.0 * s.pair_log_se_, "<= 3 SE"))
    disk = build_apriori(CurvatureSpec.disk(1.0))
    m_log, m_r2 = two_particle_disk_moments(2.0)
    s2 = LogGasSampler(n_particles=2, beta=2.0, n_sweeps=n2_sweeps, seed=seed + 1, thin=1,
                       record_every=1, chunk=1000).fit(disk)
    z = (s2.pair_log_mean_ - m_log) / s2.pair_log_se_
    out.append(_c("mc-consistency", "N=2 <ln|x1-x2|> z-score", z, abs(z) <= 3, "|z| <= 3"))
    from .loggas import batch_means
    r2 = np.array([np.mean(np.sum(X ** 2, axis=1)) for _, X in s2.snapshots_])
    mean, se = batch_means(r2)
    z2 = (mean - m_r2) / se
    out.append(_c("mc-consistency", "N=2 <|x|^2> z-score", z2, abs(z2) <= 3, "|z| <= 3"))
    return out


def suite_figures():
    out = []
    inst = FamilyInstance.chakie(2, (1.0, 0.0), 1.0)
    f = PlanarField.sample(inst.conformal_factor, 2.0, h=0.01)
    maxima = conformal_maxima(inst, f)
    out.append(_c("figures", "two-island grid: number of local maxima", len(maxima), len(maxima) == 2, "== 2"))
    if len(maxima) == 2:
        (x1, v1), (x2, v2) = maxima
        err = max(abs(v1 - np.cosh(1.0) ** 2), abs(v2 - np.cosh(1.0) ** 2))
        out.append(_c("figures", "two-island grid: max e^{2u} vs cosh^2(1)", err, err <= 1e-6, "<= 1e-6"))
        mirror = float(np.hypot(*(x1 + x2)))
        out.append(_c("figures", "two-island grid: maxima mirror symmetric", mirror, mirror <= 1e-6, "|x1 + x2| <= 1e-6"))
    st = FamilyInstance.stuart(1.0, (0.0, -1.0), 1.0)
    worst = max(level_invariance(st, a) for a in (-10.0, -8.0, -6.0, 6.0, 8.0, 10.0))
    out.append(_c("figures", "strip grid: invariance along v' at |<v,x>| >= 6", worst, worst < 0.01, "< 1%"))
    return out


SUITES = {
    "pde-residual": suite_pde_residual,
    "curvature-integrals": suite_curvature_integrals,
    "solver-oracle": suite_solver_oracle,
    "uniqueness": suite_uniqueness,
    "symmetry": suite_symmetry,
    "kappa-bounds": suite_kappa_bounds,
    "barrier": suite_barrier,
    "mc-consistency": suite_mc_consistency,
    "figures": suite_figures,
}


def run_suites(names, **kw):
    if "all" in names:
        names = list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InvalidParameterError(f"unknown suite(s): {', '.join(unknown)}; known: {', '.join(SUITES)}")
    rows = []
    for n in names:
        rows.extend(SUITES[n](**kw.get(n, {})))
    return rows
