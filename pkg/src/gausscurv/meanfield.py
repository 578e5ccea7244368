"""Mean-field free energy, its Euler-Lagrange fixed point, and metric reconstruction.

The a-priori measure ``tau = Upsilon e^{2H} dx`` and the inverse temperature
``beta`` determine the free energy ``F(rho) = beta E(rho) - S(rho)`` with the
logarithmic energy ``E = 1/2 <ln|x - y|>_{rho x rho}`` and the entropy of
``rho`` relative to ``tau / M``. Its minimizers satisfy

    rho = Upsilon exp(-beta Phi_rho + 2H) / Z,   Phi_rho(x) = int ln|x - y| rho(y) dy,

and ``U = H - (beta/2) Phi_rho + U0`` then solves ``Delta U + K e^{2U} = 0``
with ``K = sign(beta) Upsilon`` and integral curvature ``kappa = beta pi``.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicSpline, PchipInterpolator
from sklearn.base import BaseEstimator

from ._validation import check_is_fitted, check_points, check_scalar
from .closedforms import CurvatureSpec, HarmonicSpec
from .exceptions import (DivergentIntegralError, InadmissibleBetaError, InvalidParameterError,
                         SignMismatchError)
from .fields import PlanarField, RadialProfile, pde_residual, polar_integral, shell_integrals, tail_converges

logger = logging.getLogger(__name__)

BETA_MAX = 4.0
MIN_DAMPING = 1.0 / 64.0


# -- a-priori measure ---------------------------------------------------------

@dataclass(frozen=True)
class AprioriMeasure:
    """``tau(dx) = Upsilon(x) e^{2H(x)} dx``, optionally restricted to ``|x| <= radius``."""

    curvature: CurvatureSpec
    harmonic: HarmonicSpec
    mass: float
    radius: Optional[float] = None
    tail_share: float = 0.0

    @property
    def is_flat(self):
        return self.curvature.is_zero

    @property
    def is_radial(self):
        return self.curvature.radial and self.harmonic.is_constant

    @property
    def effective_radius(self):
        """Radius outside which ``tau`` vanishes (inf when unbounded)."""
        rs = [r for r in (self.radius, self.curvature.support_radius) if r is not None]
        return min(rs) if rs else np.inf

    def log_density(self, X):
        X = check_points(X)
        ups = self.curvature.upsilon(X)
        with np.errstate(divide="ignore"):
            out = np.log(ups) + 2.0 * self.harmonic(X)
        if self.radius is not None:
            out = np.where(np.hypot(X[..., 0], X[..., 1]) <= self.radius, out, -np.inf)
        return out

    def density(self, X):
        return np.exp(self.log_density(X))

    def mu1(self, X):
        return self.density(X) / self.mass


def build_apriori(curvature, harmonic=None, radius=None, *, n_angles=256, rtol=1e-8):
    """Compute the mass of ``tau`` and return the a-priori measure.

    With ``radius=None`` the mass is over the whole plane and its tail is
    checked by dyadic shells; a divergent tail raises ``DivergentIntegralError``.
    ``Upsilon == 0`` returns a flat measure of mass 0 (nothing to solve).
    """
    harmonic = HarmonicSpec() if harmonic is None else harmonic
    if radius is not None:
        check_scalar(radius, "radius", min_val=0, include_min=False)
    if curvature.is_zero:
        return AprioriMeasure(curvature, harmonic, 0.0, radius, 0.0)
    proto = AprioriMeasure(curvature, harmonic, 1.0, radius)
    f = proto.density
    n_ang = 64 if proto.is_radial else n_angles
    R = proto.effective_radius
    if np.isfinite(R):
        coarse = polar_integral(f, R, n_ang, 16)
        mass = polar_integral(f, R, 2 * n_ang, 32)
        if abs(mass - coarse) > 1e-6 * abs(mass):
            logger.warning("a-priori mass refinement gap %.3g", abs(mass - coarse) / mass)
        share = 0.0
    else:
        shells = shell_integrals(f, n_angles=n_ang)
        ok, ratio = tail_converges(shells)
        if not ok:
            raise DivergentIntegralError(
                f"a-priori mass diverges (dyadic shell ratio {ratio:.4g} >= 1)")
        vals = shells.values
        head = float(np.sum(vals)) + shells.inner
        tail = vals[-1] * ratio / (1.0 - ratio) if 0 < ratio < 1 else 0.0
        mass = head + tail
        share = tail / mass
    if not (mass > 0 and np.isfinite(mass)):
        raise DivergentIntegralError(f"a-priori mass is not positive and finite: {mass!r}")
    return AprioriMeasure(curvature, harmonic, float(mass), radius, float(share))


# -- geometries ---------------------------------------------------------------

def _rect_log_antiderivative(x, y):
    """``F`` with ``d^2 F / dx dy = ln(x^2 + y^2)``."""
    r2 = x * x + y * y
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(r2 > 0, x * y * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        t3 = np.where(x != 0, x * x * np.arctan(y / np.where(x != 0, x, 1.0)), 0.0)
        t4 = np.where(y != 0, y * y * np.arctan(x / np.where(y != 0, y, 1.0)), 0.0)
    return t1 - 3.0 * x * y + t3 + t4


def cell_log_integral(dx, dy, h):
    """``int ln|y| dy`` over the square cell of side ``h`` centered at ``(dx, dy)``."""
    a = h / 2.0
    F = _rect_log_antiderivative
    return 0.5 * (F(dx + a, dy + a) - F(dx - a, dy + a) - F(dx + a, dy - a) + F(dx - a, dy - a))


NEAR_CELLS = 4


def _cell_kernel(dx, dy, h):
    """Cell-integrated log kernel: exact close to the cell, midpoint rule further out."""
    near = (np.abs(dx) <= NEAR_CELLS * h) & (np.abs(dy) <= NEAR_CELLS * h)
    out = np.empty(np.broadcast(dx, dy).shape)
    dxb, dyb = np.broadcast_arrays(dx, dy)
    out[near] = cell_log_integral(dxb[near], dyb[near], h)
    far = ~near
    out[far] = 0.5 * h * h * np.log(dxb[far] ** 2 + dyb[far] ** 2)
    return out


class RadialGeometry:
    """Log-spaced radial nodes with the ``ln max(r, s)`` ring kernel."""

    kind = "radial"

    def __init__(self, radii, weights=None):
        prof = RadialProfile(radii, np.zeros(len(radii)), weights)
        self.r = prof.radii
        self.w = prof.weights
        self.log_r = np.log(self.r)
        self.points = np.stack([self.r, np.zeros_like(self.r)], axis=-1)

    @classmethod
    def log_grid(cls, r_min, r_max, n):
        return cls(np.geomspace(r_min, r_max, n))

    def integrate(self, v):
        return float(np.dot(self.w, v))

    def potential(self, rho):
        m = self.w * rho
        inner = np.cumsum(m)
        outer = np.cumsum((m * self.log_r)[::-1])[::-1]
        outer = np.append(outer[1:], 0.0)
        return self.log_r * inner + outer

    def potential_at(self, rho, r):
        r = np.asarray(r, dtype=float)
        m = self.w * rho
        inner = np.concatenate([[0.0], np.cumsum(m)])
        outer = np.concatenate([np.cumsum((m * self.log_r)[::-1])[::-1], [0.0]])
        k = np.searchsorted(self.r, r, side="right")
        with np.errstate(divide="ignore"):
            lr = np.log(r)
        return np.where(inner[k] > 0, lr * inner[k], 0.0) + outer[k]

    def as_profile(self, values):
        return RadialProfile(self.r, values, self.w)


class PlanarGeometry:
    """Cell-centered square grid; potentials by FFT convolution with a cell-integrated kernel."""

    kind = "planar"

    def __init__(self, halfwidth, n_cells):
        self.field = PlanarField(halfwidth, n_cells, np.zeros((n_cells, n_cells)))
        self.L = float(halfwidth)
        self.n = int(n_cells)
        self.h = self.field.h
        self.points = self.field.points
        self.area = self.h ** 2
        n = self.n
        off = self.h * np.arange(-(n - 1), n)
        DX, DY = np.meshgrid(off, off, indexing="ij")
        G = _cell_kernel(DX, DY, self.h) / self.area
        self._shape = sfft.next_fast_len(3 * n - 2, real=True)
        self._G_hat = sfft.rfft2(G, s=(self._shape, self._shape))

    def integrate(self, v):
        return float(np.sum(v) * self.area)

    def potential(self, rho):
        n = self.n
        conv = sfft.irfft2(sfft.rfft2(rho * self.area, s=(self._shape, self._shape)) * self._G_hat,
                           s=(self._shape, self._shape))
        return conv[n - 1:2 * n - 1, n - 1:2 * n - 1]

    def potential_at(self, rho, X, chunk=256):
        X = check_points(X)
        flat = X.reshape(-1, 2)
        c = self.points.reshape(-1, 2)
        m = (rho * self.area).ravel()
        keep = m != 0
        c, m = c[keep], m[keep]
        out = np.empty(flat.shape[0])
        for s in range(0, flat.shape[0], chunk):
            P = flat[s:s + chunk]
            dx = P[:, None, 0] - c[None, :, 0]
            dy = P[:, None, 1] - c[None, :, 1]
            out[s:s + chunk] = _cell_kernel(dx, dy, self.h) @ (m / self.area)
        return out.reshape(X.shape[:-1])

    def as_field(self, values):
        return self.field.with_values(values)


def _geometry_of(rho):
    if isinstance(rho, RadialProfile):
        return RadialGeometry(rho.radii, rho.weights), rho.values
    if isinstance(rho, PlanarField):
        return PlanarGeometry(rho.halfwidth, rho.n_cells), rho.values
    raise InvalidParameterError("density must be a RadialProfile or a PlanarField")


def _check_normalized(geom, rho, tol=1e-8):
    mass = geom.integrate(rho)
    if not abs(mass - 1.0) <= tol:
        raise InvalidParameterError(f"density is not normalized (mass {mass!r})")


def log_potential(rho, x):
    """``int ln|x - y| rho(y) dy`` for a normalized density.

    For a radial profile ``x`` may be radii or points; for a planar field it
    must be points.
    """
    geom, vals = _geometry_of(rho)
    _check_normalized(geom, vals)
    if geom.kind == "radial":
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1]) if (x.ndim and x.shape[-1] == 2 and x.ndim > 1) else x
        return geom.potential_at(vals, r)
    return geom.potential_at(vals, x)


# -- fixed point and free energy ----------------------------------------------

def _log_tau(geom, tau):
    return tau.log_density(geom.points)


def _pushforward(geom, logtau, phi, beta):
    """``Upsilon exp(-beta Phi + 2H)`` normalized; returns (density, log Z)."""
    expo = logtau - beta * phi
    finite = np.isfinite(expo)
    shift = np.max(expo[finite])
    unnorm = np.where(finite, np.exp(np.where(finite, expo - shift, 0.0)), 0.0)
    Z = geom.integrate(unnorm)
    return unnorm / Z, np.log(Z) + shift


def fixed_point_step(rho, beta, tau):
    """One application of the Euler-Lagrange map; the result has unit mass."""
    geom, vals = _geometry_of(rho)
    _check_normalized(geom, vals)
    new, _ = _pushforward(geom, _log_tau(geom, tau), geom.potential(vals), beta)
    return rho.with_values(new)


def _free_energy(geom, rho, phi, logtau, beta):
    E = 0.5 * geom.integrate(rho * phi)
    log_mass = np.log(geom.integrate(np.exp(logtau)))
    pos = rho > 0
    if np.any(pos & ~np.isfinite(logtau)):
        S = -np.inf
    else:
        integrand = np.zeros_like(rho)
        integrand[pos] = rho[pos] * (np.log(rho[pos]) - logtau[pos] + log_mass)
        S = -geom.integrate(integrand)
    return E, S, beta * E - S


def free_energy(rho, beta, tau):
    """``(E, S1, F_beta)``; the reference ``mu1`` is ``tau`` normalized on the same grid.

    ``S1 = -inf`` when ``rho`` charges a set where ``tau`` vanishes.
    """
    geom, vals = _geometry_of(rho)
    _check_normalized(geom, vals)
    return _free_energy(geom, vals, geom.potential(vals), _log_tau(geom, tau), beta)


# -- solver -------------------------------------------------------------------

@dataclass
class SolverConfig:
    beta: float
    geometry: str = "radial"
    r_min: float = 1e-3
    r_max: float = 1e4
    n_radii: int = 2000
    halfwidth: float = 2.0
    n_cells: int = 128
    damping: float = 1.0
    tol: float = 1e-10
    max_iter: int = 5000
    init: object = "apriori"
    init_radius: float = 1.0
    beta_margin: float = 1e-6

    def validate(self, tau):
        check_scalar(self.beta, "beta")
        check_scalar(self.damping, "damping", min_val=0, max_val=1, include_min=False)
        check_scalar(self.tol, "tol", min_val=0, include_min=False)
        check_scalar(self.max_iter, "max_iter", min_val=1, integer=True)
        if self.geometry not in ("radial", "planar"):
            raise InvalidParameterError(f"geometry must be 'radial' or 'planar', got {self.geometry!r}")
        if self.geometry == "radial" and not tau.is_radial:
            raise InvalidParameterError("radial geometry needs a radial Upsilon and a constant H")
        if self.beta >= BETA_MAX:
            raise InadmissibleBetaError(
                f"beta = {self.beta} outside the admissible range (beta*, 4): "
                "the free energy is unbounded below for beta >= 4")
        if self.beta < 0:
            bstar = beta_star(tau)
            if self.beta <= bstar + self.beta_margin:
                raise InadmissibleBetaError(
                    f"beta = {self.beta} outside the admissible range ({bstar:.6g}, 4): "
                    "the free energy is unbounded below for beta <= beta*")


def beta_star(tau):
    """``-2 q*`` for the moment threshold ``q*`` of ``tau``; ``-inf`` when all moments are finite."""
    if np.isfinite(tau.effective_radius):
        return -np.inf
    m = tau.curvature.tail_exponent
    if tau.harmonic.is_constant and m is not None:
        return -np.inf if np.isinf(m) else -2.0 * (m - 2.0)
    from .diagnostics import kappa_sup_star
    res = kappa_sup_star(tau.curvature, tau.harmonic)
    return res.beta_star


@dataclass
class MinimizerResult:
    """Converged (or last) density with its free energy and the reconstructed metric."""

    beta: float
    density: object
    energy: float
    entropy: float
    free_energy: float
    residual: float
    converged: bool
    n_iter: int
    trace: list
    initial_free_energy: float
    tail_share: float
    geometry: object = field(repr=False, default=None)
    potential: Optional[np.ndarray] = field(repr=False, default=None)
    log_Z: float = 0.0
    U: object = field(repr=False, default=None)
    U0: float = 0.0

    @property
    def kappa(self):
        return self.beta * np.pi

    def summary(self):
        return {
            "beta": self.beta, "kappa": self.kappa, "E": self.energy, "S1": self.entropy,
            "F": self.free_energy, "U0": self.U0, "iterations": self.n_iter,
            "converged": self.converged, "residual": self.residual,
            "tail_share": self.tail_share,
        }


def _make_geometry(cfg, tau):
    if cfg.geometry == "radial":
        r_max = min(cfg.r_max, tau.effective_radius)
        return RadialGeometry.log_grid(cfg.r_min, r_max, cfg.n_radii)
    return PlanarGeometry(cfg.halfwidth, cfg.n_cells)


def _initial_density(cfg, geom, logtau):
    init = cfg.init
    support = np.isfinite(logtau)
    if isinstance(init, str):
        if init == "apriori":
            vals = np.where(support, np.exp(np.where(support, logtau - np.max(logtau[support]), 0)), 0.0)
        elif init == "uniform-disk":
            rr = np.hypot(geom.points[..., 0], geom.points[..., 1])
            vals = ((rr <= cfg.init_radius) & support).astype(float)
        elif init == "gaussian":
            rr = np.hypot(geom.points[..., 0], geom.points[..., 1])
            vals = np.where(support, np.exp(-0.5 * (rr / cfg.init_radius) ** 2), 0.0)
        else:
            raise InvalidParameterError(f"unknown init {init!r}")
    elif callable(init):
        vals = np.asarray(init(geom.points), dtype=float)
    else:
        vals = np.asarray(getattr(init, "values", init), dtype=float)
        if vals.shape != logtau.shape:
            raise InvalidParameterError("user-supplied initial density does not match the grid")
    vals = np.where(support, np.clip(vals, 0.0, None), 0.0)
    mass = geom.integrate(vals)
    if not mass > 0:
        raise InvalidParameterError("initial density has no mass on the support of tau")
    return vals / mass


def _tail_share(geom, rho):
    if geom.kind == "radial":
        outer = geom.r > geom.r[-1] / 10.0
        return float(np.dot(geom.w[outer], rho[outer]))
    ring = np.zeros(rho.shape, bool)
    ring[[0, -1], :] = True
    ring[:, [0, -1]] = True
    return float(np.sum(rho[ring]) * geom.area)


def solve_minimizer(config, tau):
    """Damped self-consistent iteration ``rho <- (1 - d) rho + d P(rho)``.

    Stops when ``sup |rho - P(rho)| < tol``. A step that raises the free
    energy is retried with the damping halved (down to 1/64).
    """
    if tau.is_flat:
        raise InvalidParameterError("Upsilon == 0: the flat case has no density to solve for")
    config.validate(tau)
    beta = float(config.beta)
    geom = _make_geometry(config, tau)
    logtau = _log_tau(geom, tau)
    rho = _initial_density(config, geom, logtau)
    phi = geom.potential(rho)
    E, S, F = _free_energy(geom, rho, phi, logtau, beta)
    F_init = F
    damping = float(config.damping)
    trace = []
    converged = False
    resid = np.inf
    log_Z = 0.0
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        new, log_Z = _pushforward(geom, logtau, phi, beta)
        resid = float(np.max(np.abs(new - rho)))
        trace.append((resid, F))
        if resid < config.tol:
            converged = True
            break
        while True:
            cand = (1.0 - damping) * rho + damping * new
            cand /= geom.integrate(cand)
            cphi = geom.potential(cand)
            cE, cS, cF = _free_energy(geom, cand, cphi, logtau, beta)
            if cF <= F + 1e-12 * max(1.0, abs(F)) or damping <= MIN_DAMPING:
                break
            damping = max(damping / 2.0, MIN_DAMPING)
            logger.debug("free energy rose; damping -> %g", damping)
        rho, phi, E, S, F = cand, cphi, cE, cS, cF
    if not converged:
        logger.warning("fixed-point iteration stopped after %d steps, residual %.3g", n_iter, resid)
    density = geom.as_profile(rho) if geom.kind == "radial" else geom.as_field(rho)
    return MinimizerResult(beta, density, E, S, F, resid, converged, n_iter, trace, F_init,
                           _tail_share(geom, rho), geom, phi, log_Z)


# -- reconstruction -----------------------------------------------------------

class ReconstructedMetric:
    """``U(x) = H(x) - (beta/2) Phi(x) + U0`` as a vectorized evaluator."""

    def __init__(self, result, harmonic, U0):
        self.beta = result.beta
        self.harmonic = harmonic
        self.U0 = float(U0)
        self._geom = result.geometry
        self._rho = result.density.values
        if self._geom.kind == "radial":
            g = self._geom
            self._spline = CubicSpline(g.log_r, result.potential)
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                # flat stretches (underflowed tails) give 0/0 slopes that PCHIP maps to 0
                self._rho_interp = PchipInterpolator(g.log_r, self._rho, extrapolate=False)

    def potential(self, X):
        X = check_points(X)
        if self._geom.kind == "planar":
            return self._geom.potential_at(self._rho, X)
        g = self._geom
        r = np.hypot(X[..., 0], X[..., 1])
        t = np.log(np.clip(r, g.r[0], None))
        inside = np.clip(t, g.log_r[0], g.log_r[-1])
        return np.where(r > g.r[-1], np.log(np.where(r > 0, r, 1.0)), self._spline(inside))

    def __call__(self, X):
        X = check_points(X)
        return self.harmonic(X) - 0.5 * self.beta * self.potential(X) + self.U0

    def density(self, X):
        """Solver density extended off-grid (shape preserving in ``ln r`` for radial runs)."""
        X = check_points(X)
        if self._geom.kind == "planar":
            f = self._geom.as_field(self._rho).interpolator(method="linear")
            return f(X)
        g = self._geom
        r = np.hypot(X[..., 0], X[..., 1])
        t = np.log(np.clip(r, g.r[0], None))
        out = self._rho_interp(np.clip(t, g.log_r[0], g.log_r[-1]))
        return np.where(r > g.r[-1], 0.0, out)

    def profile(self):
        if self._geom.kind != "radial":
            raise InvalidParameterError("profile() is only available for radial runs")
        g = self._geom
        return g.as_profile(self.harmonic.a0 - 0.5 * self.beta * self._spline(g.log_r) + self.U0)

    def field(self):
        if self._geom.kind != "planar":
            raise InvalidParameterError("field() is only available for planar runs")
        g = self._geom
        phi = g.potential(self._rho)
        return g.as_field(self.harmonic(g.points) - 0.5 * self.beta * phi + self.U0)


def reconstruct_u(result, curvature, harmonic, tau=None):
    """Attach ``U`` and ``U0`` to a converged result; returns ``(U, U0)``.

    ``U0`` makes ``int K e^{2U} = kappa``: with ``Z = int Upsilon e^{2H - beta Phi}``,
    ``U0 = (1/2) ln(kappa / (sign(K) Z))``.
    """
    beta = result.beta
    sigma = curvature.sign
    if beta > 0 and sigma != 1:
        raise SignMismatchError("beta > 0 requires K >= 0 (sign +1)")
    if beta < 0 and sigma != -1:
        raise SignMismatchError("beta < 0 requires K <= 0 (sign -1)")
    if beta == 0:
        raise SignMismatchError("kappa = 0 is only attained by K == 0")
    kappa = beta * np.pi
    U0 = 0.5 * (np.log(kappa / sigma) - result.log_Z)
    U = ReconstructedMetric(result, harmonic, U0)
    result.U = U
    result.U0 = float(U0)
    return U, float(U0)


def flat_metric(harmonic):
    """``K == 0``: the metric potential is ``H`` itself."""
    return harmonic


def reconstruction_residual(U, curvature, halfwidth=3.0, h=0.01):
    """Max interior ``|Delta_h U + K e^{2U}|`` on a verification grid."""
    return pde_residual(U, curvature, halfwidth, h)


# -- estimator ----------------------------------------------------------------

class MeanFieldSolver(BaseEstimator):
    """Minimize the mean-field free energy for an a-priori measure.

    Parameters
    ----------
    beta : float, optional
        Inverse temperature in ``(beta*, 4)``. Give ``beta`` or ``kappa``.
    kappa : float, optional
        Target integral curvature; converted by ``beta = kappa / pi``.
    geometry : {'radial', 'planar'}
    r_min, r_max, n_radii : radial grid
    halfwidth, n_cells : planar grid
    damping, tol, max_iter : iteration control
    init : {'apriori', 'uniform-disk', 'gaussian'} or array or callable

    Attributes
    ----------
    result_ : MinimizerResult
    density_ : RadialProfile or PlanarField
    metric_ : ReconstructedMetric or HarmonicSpec (flat case)
    free_energy_, energy_, entropy_, n_iter_, converged_
    """

    def __init__(self, beta=None, kappa=None, geometry="radial", r_min=1e-3, r_max=1e4,
                 n_radii=2000, halfwidth=2.0, n_cells=128, damping=1.0, tol=1e-10,
                 max_iter=5000, init="apriori", init_radius=1.0):
        self.beta = beta
        self.kappa = kappa
        self.geometry = geometry
        self.r_min = r_min
        self.r_max = r_max
        self.n_radii = n_radii
        self.halfwidth = halfwidth
        self.n_cells = n_cells
        self.damping = damping
        self.tol = tol
        self.max_iter = max_iter
        self.init = init
        self.init_radius = init_radius

    def _resolved_beta(self):
        if self.beta is None and self.kappa is None:
            raise InvalidParameterError("give beta or kappa")
        if self.kappa is not None:
            b = self.kappa / np.pi
            if self.beta is not None and not np.isclose(b, self.beta, rtol=1e-12, atol=1e-15):
                raise InvalidParameterError(f"kappa = {self.kappa} and beta = {self.beta} conflict")
            return float(b)
        return float(self.beta)

    def config(self):
        return SolverConfig(
            beta=self._resolved_beta(), geometry=self.geometry, r_min=self.r_min,
            r_max=self.r_max, n_radii=self.n_radii, halfwidth=self.halfwidth,
            n_cells=self.n_cells, damping=self.damping, tol=self.tol,
            max_iter=self.max_iter, init=self.init, init_radius=self.init_radius)

    def fit(self, tau, y=None):
        if not isinstance(tau, AprioriMeasure):
            raise InvalidParameterError("fit expects an AprioriMeasure")
        beta = self._resolved_beta()
        if tau.is_flat:
            if beta != 0:
                raise SignMismatchError("K == 0 admits only kappa = 0")
            self.result_ = None
            self.density_ = None
            self.metric_ = flat_metric(tau.harmonic)
            self.converged_ = True
            self.n_iter_ = 0
            return self
        res = solve_minimizer(self.config(), tau)
        if beta != 0:
            reconstruct_u(res, tau.curvature, tau.harmonic)
        self.result_ = res
        self.density_ = res.density
        self.metric_ = res.U
        self.energy_ = res.energy
        self.entropy_ = res.entropy
        self.free_energy_ = res.free_energy
        self.n_iter_ = res.n_iter
        self.converged_ = res.converged
        return self

    def predict(self, X):
        """Reconstructed metric potential ``U`` at points ``X``."""
        check_is_fitted(self, "metric_")
        if self.metric_ is None:
            raise InvalidParameterError("beta = 0 has no reconstructed metric")
        return self.metric_(check_points(X))

    def transform(self, X):
        """Logarithmic potential of the fitted density at points ``X``."""
        check_is_fitted(self, "result_")
        return self.metric_.potential(check_points(X))

    def score(self, tau=None, y=None):
        """Negative free energy of the fitted density."""
        check_is_fitted(self, "result_")
        return -self.free_energy_


def solve_multistart(config, tau, inits):
    """Run the solver from several initial densities; limits are reported, not reconciled."""
    results = []
    for init in inits:
        cfg = SolverConfig(**{**config.__dict__, "init": init})
        results.append(solve_minimizer(cfg, tau))
    return results
