"""Curvature bounds, asymptotic slope, the comparison function and its barrier, symmetry probes."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize

from . import _io
from ._validation import check_point, check_points, check_scalar, polar_points
from .closedforms import CurvatureSpec, FamilyInstance, HarmonicSpec
from .exceptions import (DivergentIntegralError, InvalidParameterError, QuadratureError)
from .fields import RadialProfile, angular_average, deviation_bound, shell_integrals, tail_converges

logger = logging.getLogger(__name__)

Q_MIN = 1e-3
Q_MAX = 8.0
Q_TOL = 1e-3


# -- improper-integral thresholds ---------------------------------------------

def _magnitude(K):
    if isinstance(K, CurvatureSpec):
        return K.upsilon
    if isinstance(K, FamilyInstance):
        return lambda X: np.abs(K.K(X))
    if callable(K):
        return lambda X: np.abs(K(X))
    raise InvalidParameterError("expected a CurvatureSpec, FamilyInstance or callable")


def is_finite_integral(f, **kw):
    """Dyadic-shell decision on ``int_{R^2} f dx < inf``."""
    return tail_converges(shell_integrals(f, **kw))


def _bisect_threshold(finite_at, lo, hi, tol):
    """Boundary between ``finite_at(lo) != finite_at(hi)``."""
    f_lo = finite_at(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if finite_at(mid) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class KappaLowerBound:
    value: float
    q: float
    inconclusive: bool = False


def kappa_lower_bound(K, q_min=Q_MIN, q_max=Q_MAX, tol=Q_TOL, n_angles=64):
    """``kappa_*(K) = pi inf{q > 0 : int |K| (1 + |x|)^{-q} < inf}``.

    Returns 0 when the integral is already finite at ``q_min``; flags the
    result inconclusive when it is still infinite at ``q_max``.
    """
    mag = _magnitude(K)

    def finite_at(q):
        f = lambda X: mag(X) * (1.0 + np.hypot(X[..., 0], X[..., 1])) ** (-q)
        return is_finite_integral(f, n_angles=n_angles)[0]

    if finite_at(q_min):
        return KappaLowerBound(0.0, 0.0)
    if not finite_at(q_max):
        logger.warning("kappa_*: integral still infinite at q = %g", q_max)
        return KappaLowerBound(np.pi * q_max, q_max, inconclusive=True)
    q = _bisect_threshold(finite_at, q_min, q_max, tol)
    return KappaLowerBound(float(np.pi * q), float(q))


@dataclass(frozen=True)
class KappaSupStar:
    q_star: float
    kappa_star: float
    beta_star: float
    unbounded: bool


def kappa_sup_star(K, H=None, q_max=64.0, tol=Q_TOL, n_angles=128):
    """``q* = sup{q : int |K| e^{2H} |x|^q < inf}`` with ``kappa* = -2 pi q*``, ``beta* = -2 q*``."""
    H = HarmonicSpec() if H is None else H
    mag = _magnitude(K)

    def finite_at(q):
        def f(X):
            with np.errstate(divide="ignore", over="ignore"):
                logf = np.log(mag(X)) + 2.0 * H(X)
                if q:
                    logf = logf + q * np.log(np.hypot(X[..., 0], X[..., 1]))
                return np.exp(logf)
        return is_finite_integral(f, n_angles=n_angles)[0]

    if not finite_at(0.0):
        raise DivergentIntegralError("int |K| e^{2H} diverges: no admissible negative kappa")
    if finite_at(q_max):
        return KappaSupStar(q_max, -np.inf, -np.inf, True)
    q = _bisect_threshold(finite_at, 0.0, q_max, tol)
    return KappaSupStar(float(q), float(-2 * np.pi * q), float(-2 * q), False)


def is_radially_nonincreasing(K, r_max=1e3, n=400, n_angles=32):
    """Sampled check that ``K`` is radial and ``K(x) <= K(y)`` for ``|x| >= |y|``."""
    f = K if callable(K) else None
    if f is None:
        raise InvalidParameterError("K must be callable")
    r = np.concatenate([[0.0], np.geomspace(1e-3, r_max, n)])
    P = polar_points(r, n_angles)
    vals = f(P)
    spread = np.max(np.abs(vals - vals[:, :1]))
    prof = vals[:, 0]
    scale = max(1.0, np.max(np.abs(prof)))
    return bool(spread <= 1e-10 * scale and np.all(np.diff(prof) <= 1e-12 * scale))


# -- asymptotic slope ---------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    kappa_hat: float
    slope: float
    intercept: float
    residual: float
    inconclusive: bool


def asymptotic_slope(u, H=None, r_window=(1e2, 1e3), n_radii=40, n_angles=64,
                     max_residual=1e-2):
    """``kappa_hat = -2 pi`` times the least-squares slope of ``avg(u - H)`` against ``ln r``."""
    r1, r2 = r_window
    if not r2 >= 10 * r1:
        raise InvalidParameterError("the window needs r2 >= 10 r1")
    check_scalar(n_radii, "n_radii", min_val=20, integer=True)
    H = HarmonicSpec() if H is None else H
    radii = np.geomspace(r1, r2, n_radii)
    diff = lambda X: u(X) - H(X)
    prof = angular_average(diff, radii, n_angles)
    t = np.log(radii)
    A = np.stack([t, np.ones_like(t)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, prof.values, rcond=None)
    resid = float(np.max(np.abs(A @ np.array([slope, icpt]) - prof.values)))
    return SlopeFit(float(-2 * np.pi * slope), float(slope), float(icpt), resid,
                    bool(resid > max_residual))


# -- comparison function -------------------------------------------------------

class ComparisonFunction:
    """``g(r) = r A(r) - r ln r B(r)`` with ``A = int_r^inf w s ln^2 s``, ``B = int_r^inf w s ln s``.

    ``w`` is a radial weight: a vectorized callable of ``s`` or a
    ``RadialProfile``. Beyond ``r_max`` it is continued as ``C s^{-p}`` with
    ``p = tail_exponent`` and ``C`` matched at ``r_max``.
    """

    def __init__(self, w, r_max=1e4, tail_exponent=None, breakpoints=(), r_min=1e-8,
                 panels_per_unit=4, nodes=16):
        self.r_max = float(r_max)
        self.r_min = float(r_min)
        if isinstance(w, RadialProfile):
            self._w = self._spline_weight(w)
            self.r_max = min(self.r_max, float(w.radii[-1]))
            self.r_min = max(self.r_min, float(w.radii[0]))
        elif callable(w):
            self._w = w
        else:
            raise InvalidParameterError("w must be callable or a RadialProfile")
        self.p = tail_exponent
        w_end = float(self._w(np.array([self.r_max]))[0])
        if w_end == 0:
            self.C = 0.0
        else:
            if tail_exponent is None or tail_exponent <= 2:
                raise DivergentIntegralError(
                    "w s (ln s)^2 is not integrable without a declared tail exponent > 2")
            self.C = w_end * self.r_max ** tail_exponent
        edges = self._panel_edges(breakpoints, panels_per_unit)
        x, wt = np.polynomial.legendre.leggauss(nodes)
        self._gl = (x, wt)
        self._edges = edges
        pa, pb = self._panel_moments(edges[:-1], edges[1:])
        tail_a, tail_b = self._tail(self.r_max)
        # cumulative from the right: value at edge k = int_{edge_k}^{inf}
        self._A_edge = np.append(np.cumsum(pa[::-1])[::-1], 0.0) + tail_a
        self._B_edge = np.append(np.cumsum(pb[::-1])[::-1], 0.0) + tail_b

    @staticmethod
    def _spline_weight(prof):
        t = np.log(prof.radii)
        v = prof.values
        pos = np.all(v > 0)
        spl = CubicSpline(t, np.log(v) if pos else v)

        def w(s):
            s = np.asarray(s, dtype=float)
            tt = np.log(np.clip(s, prof.radii[0], prof.radii[-1]))
            out = np.exp(spl(tt)) if pos else spl(tt)
            return np.where(s > prof.radii[-1], 0.0, out)
        return w

    def _panel_edges(self, breakpoints, ppu):
        t0, t1 = np.log(self.r_min), np.log(self.r_max)
        n = max(1, int(np.ceil((t1 - t0) * ppu)))
        t = np.linspace(t0, t1, n + 1)
        bps = [np.log(b) for b in breakpoints if self.r_min < b < self.r_max]
        return np.exp(np.unique(np.concatenate([t, bps])))

    def _panel_moments(self, a, b):
        """``int_a^b w s ln^k s ds`` for k = 2, 1 by Gauss-Legendre in ``ln s``."""
        x, wt = self._gl
        ta, tb = np.log(a), np.log(b)
        mid, half = 0.5 * (ta + tb), 0.5 * (tb - ta)
        t = mid[:, None] + half[:, None] * x[None, :]
        s = np.exp(t)
        base = self._w(s) * s * s * half[:, None] * wt[None, :]
        return np.sum(base * t * t, axis=1), np.sum(base * t, axis=1)

    def _tail(self, R):
        """Analytic ``int_R^inf C s^{1-p} ln^k s ds`` for k = 2, 1."""
        if self.C == 0.0:
            return 0.0, 0.0
        a = self.p - 1.0
        lr = np.log(R)
        pref = self.C * R ** (1.0 - a)
        tb = pref * (lr / (a - 1) + 1 / (a - 1) ** 2)
        ta = pref * (lr ** 2 / (a - 1) + 2 * lr / (a - 1) ** 2 + 2 / (a - 1) ** 3)
        return ta, tb

    def moments(self, r):
        """``(A(r), B(r))``."""
        r = np.asarray(r, dtype=float)
        rr = np.clip(r, self.r_min, None)
        A = np.empty(rr.shape)
        B = np.empty(rr.shape)
        beyond = rr >= self.r_max
        if np.any(beyond):
            ta, tb = self._tail(rr[beyond])
            A[beyond], B[beyond] = ta, tb
        inside = ~beyond
        if np.any(inside):
            ri = rr[inside]
            k = np.searchsorted(self._edges, ri, side="right")
            right = self._edges[k]
            pa, pb = self._panel_moments(ri, right)
            A[inside] = pa + self._A_edge[k]
            B[inside] = pb + self._B_edge[k]
        return A, B

    def w(self, r):
        r = np.asarray(r, dtype=float)
        out = np.asarray(self._w(np.clip(r, self.r_min, None)), dtype=float)
        if self.C:
            out = np.where(r > self.r_max, self.C * np.where(r > 0, r, 1.0) ** (-self.p), out)
        return out

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        A, B = self.moments(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(r)
            out = r * A - r * lr * B
        return np.where(r > 0, out, 0.0)

    def derivatives(self, r):
        """``(g, g', g'')`` from the integral representation."""
        r = np.asarray(r, dtype=float)
        A, B = self.moments(r)
        lr = np.log(r)
        g = r * A - r * lr * B
        g1 = A - (lr + 1.0) * B
        g2 = -B / r + self.w(r) * r * lr
        return g, g1, g2

    def ode_residual(self, radii):
        """Pointwise relative residual of ``r^2 g'' - r g' + g = w r^3 ln r`` by second differences.

        ``radii`` must be log-uniform; the equation is used in ``t = ln r``
        form ``g_tt - 2 g_t + g = w e^{3t} t``. Each residual is divided by the
        sum of the magnitudes of the terms at that radius.
        """
        radii = np.asarray(radii, dtype=float)
        t = np.log(radii)
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-8):
            raise InvalidParameterError("ode_residual needs log-uniform radii")
        dt = dt[0]
        g = self(radii)
        gt = (g[2:] - g[:-2]) / (2 * dt)
        gtt = (g[2:] - 2 * g[1:-1] + g[:-2]) / dt ** 2
        rr, tt = radii[1:-1], t[1:-1]
        rhs = self.w(rr) * rr ** 3 * tt
        res = gtt - 2 * gt + g[1:-1] - rhs
        scale = np.abs(gtt) + 2 * np.abs(gt) + np.abs(g[1:-1]) + np.abs(rhs)
        rel = np.where(scale > 0, np.abs(res) / np.where(scale > 0, scale, 1.0), 0.0)
        return rr, rel

    def profile(self, radii):
        radii = np.asarray(radii, dtype=float)
        return RadialProfile(radii, self(radii))


def comparison_g(w, **kw):
    """Build the comparison function for the radial weight ``w = |Kbar| e^{2 ubar}``."""
    return ComparisonFunction(w, **kw)


# -- barrier ------------------------------------------------------------------

def barrier_laplacian(g, r, alpha):
    """``Delta f_alpha`` for ``f_alpha = ln(r - alpha g)`` from the quotient form."""
    gg, g1, g2 = g.derivatives(r)
    phi = r - alpha * gg
    f = np.log(phi)
    num = alpha * (-r * r * g2 + r * g1 - gg) + alpha ** 2 * (r * gg * g2 - r * g1 ** 2 + gg * g1)
    return num / (r * phi ** 2 * f) * f


def barrier_laplacian_direct(g, r, alpha):
    """Same quantity from ``phi''/phi - phi'^2/phi^2 + phi'/(r phi)`` with ``phi = r - alpha g``."""
    gg, g1, g2 = g.derivatives(r)
    phi = r - alpha * gg
    d1 = 1.0 - alpha * g1
    d2 = -alpha * g2
    return d2 / phi - d1 ** 2 / phi ** 2 + d1 / (r * phi)


def barrier_radius(g, alpha, r_hi=1e6, n=4000):
    """``R(alpha)``: the smallest ``R`` with ``r - alpha g(r) > e`` for every ``r > R``."""
    r = np.geomspace(1e-6, r_hi, n)
    h = r - alpha * g(r) - np.e
    if not h[-1] > 0:
        raise QuadratureError("R(alpha) not bracketed: r - alpha g(r) <= e at the top of the grid")
    bad = np.nonzero(h <= 0)[0]
    if bad.size == 0:
        return 0.0
    k = bad[-1]
    fn = lambda s: s - alpha * float(g(np.array([s]))[0]) - np.e
    return float(brentq(fn, r[k], r[k + 1], xtol=1e-14, rtol=1e-14))


@dataclass
class BarrierReport:
    g_profile: RadialProfile
    ode_residual: float
    alpha: float
    alpha_star: float
    R_alpha: float
    margin: float
    worst_radius: float = np.nan
    c_u: float = 0.0

    def to_dict(self):
        return {"ode_residual": self.ode_residual, "alpha": self.alpha,
                "alpha_star": self.alpha_star, "R_alpha": self.R_alpha,
                "margin": self.margin, "worst_radius": self.worst_radius, "c_u": self.c_u}

    def to_json(self, path=None):
        return _io.write_json(path, self.to_dict()) if path else _io.dumps_json(self.to_dict())


def barrier_check(g, u, K, alpha, *, c_u=None, r_hi=1e3, n_radii=400, n_angles=32,
                  ode_radii=None):
    """Evaluate ``Delta f_alpha + 2 K e^{2u} f_alpha`` on ``max(1, R(alpha)) < |x| <= r_hi``.

    The margin is the largest sampled value; the barrier inequality holds
    when it is negative. ``alpha <= alpha* = 2 e^{2 c(u)}`` is rejected.
    """
    if c_u is None:
        c_u = deviation_bound(u, radii=np.geomspace(1e-2, r_hi, 200), n_angles=n_angles)
    alpha_star = 2.0 * np.exp(2.0 * c_u)
    if not alpha > alpha_star:
        raise InvalidParameterError(f"alpha = {alpha} must exceed alpha* = {alpha_star}")
    R = barrier_radius(g, alpha)
    r0 = max(1.0, R)
    if not r0 < r_hi:
        raise InvalidParameterError(f"no sample radii above max(1, R(alpha)) = {r0}")
    radii = np.geomspace(r0, r_hi, n_radii + 1)[1:]
    lap = barrier_laplacian(g, radii, alpha)
    f = np.log(radii - alpha * g(radii))
    P = polar_points(radii, n_angles)
    term = 2.0 * K(P) * np.exp(2.0 * u(P)) * f[:, None]
    total = lap[:, None] + term
    i = np.unravel_index(np.argmax(total), total.shape)
    if ode_radii is None:
        ode_radii = np.geomspace(1.0, r_hi, 4000)
    _, rel = g.ode_residual(ode_radii)
    return BarrierReport(g.profile(ode_radii), float(np.max(rel)), float(alpha),
                         float(alpha_star), float(R), float(total[i]), float(radii[i[0]]),
                         float(c_u))


# -- symmetry -----------------------------------------------------------------

def reflect(X, lam, angle):
    """Mirror image across the line ``<x, e> = lam`` with ``e = (cos angle, sin angle)``."""
    e = np.array([np.cos(angle), np.sin(angle)])
    s = X @ e
    return X + 2.0 * (lam - s)[..., None] * e


def reflection_samples(lam, angle, depth=5.0, width=5.0, n=101):
    """Grid on ``Sigma_lam = {<x, e> < lam}`` including the line itself."""
    e = np.array([np.cos(angle), np.sin(angle)])
    e_perp = np.array([-e[1], e[0]])
    s = lam - np.linspace(0.0, depth, n)
    t = np.linspace(-width, width, n)
    S, T = np.meshgrid(s, t, indexing="ij")
    return S[..., None] * e + T[..., None] * e_perp


def reflection_min(u, lam, angle=0.0, samples=None, **kw):
    """``min v_lam`` over samples of ``Sigma_lam``, ``v_lam(x) = u(x^lam) - u(x)``."""
    X = reflection_samples(lam, angle, **kw) if samples is None else check_points(samples)
    return float(np.min(u(reflect(X, lam, angle)) - u(X)))


def lambda_zero_interval(u, lambdas, angle=0.0, tol=1e-10, **kw):
    """Bracket ``lambda_0 = sup{lam : v_mu >= 0 for all mu <= lam}`` on an increasing grid.

    Returns ``(lo, hi)``: ``hi`` is the first grid value whose sampled minimum
    is below ``-tol`` and ``lo`` the one before it (``-inf`` / ``inf`` at the
    ends). The crossing is only resolved to the grid.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size < 2 or np.any(np.diff(lam) <= 0):
        raise InvalidParameterError("lambdas must be a strictly increasing grid of length >= 2")
    ok = np.array([reflection_min(u, l, angle, **kw) >= -tol for l in lam])
    if ok.all():
        return float(lam[-1]), np.inf
    bad = int(np.argmin(ok))
    if bad == 0:
        return -np.inf, float(lam[0])
    return float(lam[bad - 1]), float(lam[bad])


@dataclass
class SymmetryReport:
    radial_asymmetry: float
    center: tuple
    reflection_minima: list = field(default_factory=list)
    verdict: str = "inconclusive"
    dynamic_range: float = 0.0
    scores: dict = field(default_factory=dict)

    def to_dict(self):
        return {"radial_asymmetry": self.radial_asymmetry, "center": list(self.center),
                "reflection_minima": [list(m) for m in self.reflection_minima],
                "verdict": self.verdict, "dynamic_range": self.dynamic_range}

    def to_json(self, path=None):
        return _io.write_json(path, self.to_dict()) if path else _io.dumps_json(self.to_dict())


def asymmetry_score(u, center, radii, n_angles=64):
    P = polar_points(radii, n_angles, center)
    v = u(P)
    return float(np.max(np.abs(v - v.mean(axis=-1, keepdims=True)))), v


def locate_max(u, halfwidth=3.0, h=0.01, refine=True):
    """Grid argmax of ``u`` on the square window, optionally polished by Nelder-Mead."""
    ax = np.arange(-halfwidth, halfwidth + h / 2, h)
    X = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)
    v = u(X)
    i, j = np.unravel_index(np.nanargmax(v), v.shape)
    x0 = X[i, j]
    if not refine:
        return x0
    res = minimize(lambda p: -float(u(p[None, :])[0]), x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
    return res.x if np.all(np.abs(res.x - x0) <= 2 * h) else x0


def radial_asymmetry(u, centers=None, radii=None, n_angles=64, family=None,
                     halfwidth=3.0, h=0.01, lambdas=(), angle=0.0):
    """Score ``max |u(c + r e^{i theta}) - avg_theta|`` over candidate centers.

    Default centers: the origin, the grid argmax of ``u``, and ``tanh(zeta) y``
    when a one-bump family instance is supplied. The verdict is radial when
    the best score is below ``1e-8`` of the dynamic range of ``u`` on the samples.
    """
    radii = np.geomspace(1e-2, 2.0, 40) if radii is None else np.asarray(radii, dtype=float)
    if centers is None:
        centers = [np.zeros(2), locate_max(u, halfwidth, h)]
        if family is not None and family.x_star is not None:
            centers.append(np.asarray(family.x_star, dtype=float))
    centers = [check_point(c) for c in centers]
    scores = {}
    best = None
    vmin, vmax = np.inf, -np.inf
    for c in centers:
        s, v = asymmetry_score(u, c, radii, n_angles)
        vmin, vmax = min(vmin, np.min(v)), max(vmax, np.max(v))
        scores[tuple(float(a) for a in c)] = s
        if best is None or s < best[0]:
            best = (s, c)
    rng = float(vmax - vmin)
    score, c = best
    if score <= 1e-8 * max(rng, 1e-300):
        verdict = "radial"
    elif score > 1e-4 * rng:
        verdict = "non-radial"
    else:
        verdict = "inconclusive"
    refl = [(float(l), float(angle), reflection_min(u, l, angle)) for l in lambdas]
    return SymmetryReport(float(score), tuple(float(a) for a in c), refl, verdict, rng, scores)
