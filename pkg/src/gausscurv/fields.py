"""Grid representations, discrete calculus and quadrature for planar fields.

Planar fields live on cell-centered square grids; radial profiles live on
log-spaced radii with weights for ``int f(s) 2 pi s ds``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import _io
from ._validation import check_points, check_scalar, polar_points
from .exceptions import DivergentIntegralError, GridError, InvalidParameterError, QuadratureError


@dataclass(frozen=True)
class PlanarField:
    """Samples on the cell centers of ``[-L, L]^2`` with ``n_cells`` cells per axis.

    ``values[i, j]`` is the sample at ``(x1_i, x2_j)``. Cells with
    ``valid == False`` carry no information and are excluded from norms.
    """

    halfwidth: float
    n_cells: int
    values: np.ndarray
    valid: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        check_scalar(self.halfwidth, "halfwidth", min_val=0, include_min=False)
        check_scalar(self.n_cells, "n_cells", min_val=2, integer=True)
        if self.n_cells % 2:
            raise GridError(f"n_cells must be even, got {self.n_cells}")
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.n_cells, self.n_cells):
            raise GridError(f"values must have shape {(self.n_cells,) * 2}, got {values.shape}")
        valid = np.ones(values.shape, bool) if self.valid is None else np.asarray(self.valid, bool)
        if not np.all(np.isfinite(values[valid])):
            raise InvalidParameterError("field values must be finite on valid cells")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def h(self):
        return 2.0 * self.halfwidth / self.n_cells

    @staticmethod
    def axis(halfwidth, n_cells):
        h = 2.0 * halfwidth / n_cells
        return -halfwidth + h * (np.arange(n_cells) + 0.5)

    @property
    def coords(self):
        return self.axis(self.halfwidth, self.n_cells)

    @property
    def points(self):
        c = self.coords
        X1, X2 = np.meshgrid(c, c, indexing="ij")
        return np.stack([X1, X2], axis=-1)

    @classmethod
    def sample(cls, f, halfwidth, h=None, n_cells=None):
        """Sample a vectorized evaluator ``f(X)`` on the grid.

        Give either the spacing ``h`` (rounded to the nearest even cell count)
        or ``n_cells`` directly.
        """
        if n_cells is None:
            if h is None:
                raise InvalidParameterError("give h or n_cells")
            check_scalar(h, "h", min_val=0, include_min=False)
            n_cells = int(round(2.0 * halfwidth / h))
            n_cells += n_cells % 2
        c = cls.axis(halfwidth, n_cells)
        X1, X2 = np.meshgrid(c, c, indexing="ij")
        vals = np.asarray(f(np.stack([X1, X2], axis=-1)), dtype=float)
        return cls(float(halfwidth), int(n_cells), vals)

    def with_values(self, values, valid=None):
        return PlanarField(self.halfwidth, self.n_cells, values,
                           self.valid if valid is None else valid)

    def max_abs(self):
        """Sup norm over valid cells."""
        return float(np.max(np.abs(self.values[self.valid])))

    def integrate(self, mask=None):
        m = self.valid if mask is None else (self.valid & mask)
        return float(np.sum(self.values[m]) * self.h ** 2)

    def interpolator(self, method="cubic"):
        c = self.coords
        interp = RegularGridInterpolator((c, c), self.values, method=method)
        lo, hi = c[0], c[-1]

        def f(X):
            X = check_points(X)
            if np.any((X < lo) | (X > hi)):
                raise InvalidParameterError("point outside the evaluable window of the field")
            return interp(X.reshape(-1, 2)).reshape(X.shape[:-1])
        return f

    def to_csv(self, path):
        P = self.points[self.valid]
        _io.write_csv(path, ["x1", "x2", "value"], [P[:, 0], P[:, 1], self.values[self.valid]])

    @classmethod
    def from_csv(cls, path):
        header, data = _io.read_csv(path)
        if header != ["x1", "x2", "value"]:
            raise InvalidParameterError(f"unexpected planar CSV header {header}")
        x1 = np.unique(data[:, 0])
        n = x1.size
        h = x1[1] - x1[0]
        L = n * h / 2.0
        vals = np.zeros((n, n))
        valid = np.zeros((n, n), bool)
        i = np.rint((data[:, 0] - x1[0]) / h).astype(int)
        j = np.rint((data[:, 1] - x1[0]) / h).astype(int)
        vals[i, j] = data[:, 2]
        valid[i, j] = True
        return cls(L, n, vals, valid)


def radial_weights(radii):
    """Weights ``w_i`` with ``sum w_i f(r_i) ~ int_0^{r_max} f(s) 2 pi s ds``.

    Trapezoid rule in ``ln s`` on ``f(s) 2 pi s^2``; the disk inside the
    first radius is lumped onto the first node.
    """
    r = np.asarray(radii, dtype=float)
    t = np.log(r)
    dt = np.diff(t)
    w = np.zeros_like(r)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    w *= 2.0 * np.pi * r ** 2
    w[0] += np.pi * r[0] ** 2
    return w


@dataclass(frozen=True)
class RadialProfile:
    """Values on strictly increasing positive radii, with quadrature weights."""

    radii: np.ndarray
    values: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise GridError("a radial profile needs at least two radii")
        if r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise GridError("radii must be positive and strictly increasing")
        if v.shape != r.shape:
            raise GridError("values and radii must have the same shape")
        w = radial_weights(r) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != r.shape or np.any(w <= 0):
            raise GridError("weights must be positive and match the radii")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def log_grid(cls, r_min, r_max, n, values=None):
        check_scalar(r_min, "r_min", min_val=0, include_min=False)
        check_scalar(r_max, "r_max", min_val=r_min, include_min=False)
        check_scalar(n, "n", min_val=2, integer=True)
        r = np.geomspace(r_min, r_max, n)
        return cls(r, np.zeros(n) if values is None else values)

    @classmethod
    def sample(cls, f, r_min, r_max, n):
        """Sample a radial callable ``f(r)`` on a log grid."""
        r = np.geomspace(r_min, r_max, n)
        return cls(r, np.asarray(f(r), dtype=float))

    def with_values(self, values):
        return RadialProfile(self.radii, values, self.weights)

    def integrate(self, values=None):
        v = self.values if values is None else values
        return float(np.dot(self.weights, v))

    def normalized(self):
        return self.with_values(self.values / self.integrate())

    def to_csv(self, path):
        _io.write_csv(path, ["r", "value", "weight"], [self.radii, self.values, self.weights])

    @classmethod
    def from_csv(cls, path):
        header, data = _io.read_csv(path)
        if header != ["r", "value", "weight"]:
            raise InvalidParameterError(f"unexpected radial CSV header {header}")
        return cls(data[:, 0], data[:, 1], data[:, 2])


# -- discrete calculus --------------------------------------------------------

def laplacian(u):
    """Five-point Laplacian; the one-cell boundary ring is masked invalid."""
    if u.n_cells < 4:
        raise GridError(f"laplacian needs n_cells >= 4, got {u.n_cells}")
    v = u.values
    out = np.zeros_like(v)
    out[1:-1, 1:-1] = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2]
                       - 4.0 * v[1:-1, 1:-1]) / u.h ** 2
    valid = np.zeros(v.shape, bool)
    valid[1:-1, 1:-1] = True
    valid &= u.valid
    valid[1:-1, 1:-1] &= (u.valid[2:, 1:-1] & u.valid[:-2, 1:-1]
                          & u.valid[1:-1, 2:] & u.valid[1:-1, :-2])
    out[~valid] = 0.0
    return PlanarField(u.halfwidth, u.n_cells, out, valid)


def gauss_curvature_of(u):
    """``K = -e^{-2u} Delta u`` on interior cells."""
    lap = laplacian(u)
    K = np.where(lap.valid, -np.exp(-2.0 * u.values) * lap.values, 0.0)
    return lap.with_values(K)


def pde_residual(u_eval, K_eval, halfwidth, h):
    """Max interior ``|Delta_h u + K e^{2u}|`` of evaluators sampled on a grid."""
    u = PlanarField.sample(u_eval, halfwidth, h=h)
    lap = laplacian(u)
    K = np.asarray(K_eval(u.points), dtype=float)
    res = lap.values + K * np.exp(2.0 * u.values)
    return float(np.max(np.abs(res[lap.valid])))


# -- quadrature ---------------------------------------------------------------

def _log_panels(r_lo, r_hi, panels_per_unit, nodes):
    """Gauss-Legendre nodes/weights in ``t = ln r`` on ``[ln r_lo, ln r_hi]``."""
    t0, t1 = np.log(r_lo), np.log(r_hi)
    n_pan = max(1, int(np.ceil((t1 - t0) * panels_per_unit)))
    edges = np.linspace(t0, t1, n_pan + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return np.exp(t), wt


def polar_integral(f, r_max, n_angles=256, nodes=16, panels_per_unit=2,
                   r_inner=1e-6, center=(0.0, 0.0), r_min=None):
    """``int_{|x - c| <= r_max} f(x) dx`` by log-radial Gauss-Legendre x trapezoid in angle.

    With ``r_min`` given, the annulus ``r_min <= |x - c| <= r_max`` is integrated instead.
    """
    lo = r_inner if r_min is None else r_min
    if r_max <= lo:
        return 0.0
    r, wt = _log_panels(lo, r_max, panels_per_unit, nodes)
    total = 0.0
    chunk = max(1, 2_000_000 // n_angles)
    for s in range(0, r.size, chunk):
        P = polar_points(r[s:s + chunk], n_angles, center)
        ring = np.mean(f(P), axis=-1)
        total += 2.0 * np.pi * np.sum(wt[s:s + chunk] * r[s:s + chunk] ** 2 * ring)
    if r_min is None:
        total += float(f(np.asarray(center, dtype=float))) * np.pi * r_inner ** 2
    return float(total)


@dataclass(frozen=True)
class ShellIntegrals:
    """Integrals over dyadic annuli ``2^k <= r < 2^{k+1}`` plus the inner disk."""

    edges: np.ndarray
    values: np.ndarray
    inner: float


def shell_integrals(f, k_lo=-20, k_hi=50, n_angles=128, nodes=24, center=(0.0, 0.0)):
    """Dyadic shell decomposition of ``int f dx`` out to ``r = 2^k_hi``."""
    edges = 2.0 ** np.arange(k_lo, k_hi + 1, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    t0 = np.log(edges[:-1])
    half = 0.5 * np.log(2.0)
    t = (t0[:, None] + half * (1.0 + x[None, :]))
    r = np.exp(t)
    vals = np.empty(len(t0))
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(len(t0)):
            ring = np.mean(f(polar_points(r[i], n_angles, center)), axis=-1)
            vals[i] = 2.0 * np.pi * half * np.sum(w * r[i] ** 2 * ring)
    inner = polar_integral(f, edges[0], n_angles, nodes, center=center, r_inner=edges[0] * 1e-6)
    return ShellIntegrals(edges, vals, inner)


UNDERFLOW = 1e-280


def tail_converges(shells):
    """Decide finiteness of the full-plane integral from the outermost shells.

    Returns ``(finite, ratio)`` where ``ratio`` is the last shell-to-shell
    ratio. Non-finite shells mean divergence; shells that vanish or underflow
    before the last one mean a decaying (finite) tail.
    """
    v = shells.values
    if not np.all(np.isfinite(v)) or not np.isfinite(shells.inner):
        return False, np.inf
    a = np.abs(v)
    if a[-1] < UNDERFLOW or a[-2] < UNDERFLOW:
        return True, 0.0
    ratio = float(a[-1] / a[-2])
    return ratio < 1.0, ratio


@dataclass(frozen=True)
class CurvatureIntegral:
    value: float
    truncated: float
    tail: float
    tail_share: float
    r_max: float
    refinement_gap: float


def _as_evaluator(obj):
    if isinstance(obj, PlanarField):
        return obj.interpolator()
    if callable(obj):
        return obj
    raise InvalidParameterError("expected a PlanarField or a vectorized callable")


def integral_curvature(K_eval, u_eval, r_max, tail_exponent=0.0, *,
                       n_angles=256, nodes=16, rtol=1e-7, center=(0.0, 0.0)):
    """``int K e^{2u} dx`` over ``|x| <= r_max`` plus an analytic power-law tail.

    ``tail_exponent`` is the declared decay ``p`` of ``|K| e^{2u} ~ C r^{-p}``
    (``p > 2``), or 0 to skip the tail. The coefficient ``C`` is fitted on the
    circle ``|x| = r_max``. Two refinement levels must agree to ``rtol``
    relative to the integral of ``|K| e^{2u}``.
    """
    check_scalar(r_max, "r_max", min_val=0, include_min=False)
    check_scalar(tail_exponent, "tail_exponent")
    if isinstance(K_eval, PlanarField) and isinstance(u_eval, PlanarField):
        P = K_eval.points
        inside = np.hypot(P[..., 0], P[..., 1]) <= r_max
        dens = K_eval.values * np.exp(2.0 * u_eval.values)
        mask = inside & K_eval.valid & u_eval.valid
        trunc = float(np.sum(dens[mask]) * K_eval.h ** 2)
        gap = 0.0
        abs_total = float(np.sum(np.abs(dens[mask])) * K_eval.h ** 2)
    else:
        K_f, u_f = _as_evaluator(K_eval), _as_evaluator(u_eval)

        def dens(X):
            return K_f(X) * np.exp(2.0 * u_f(X))

        trunc = polar_integral(dens, r_max, n_angles, nodes, center=center)
        fine = polar_integral(dens, r_max, 2 * n_angles, 2 * nodes, center=center)
        abs_total = polar_integral(lambda X: np.abs(dens(X)), r_max, n_angles, nodes, center=center)
        gap = abs(fine - trunc)
        if gap > rtol * max(abs_total, np.finfo(float).tiny):
            raise QuadratureError(
                f"quadrature levels disagree: {trunc!r} vs {fine!r} (rtol {rtol})")
        trunc = fine
    tail = 0.0
    if tail_exponent != 0.0:
        p = float(tail_exponent)
        if p <= 2.0:
            raise DivergentIntegralError(f"tail exponent p = {p} <= 2 is not integrable")
        f = _as_evaluator(K_eval) if not isinstance(K_eval, PlanarField) else None
        if f is None:
            raise InvalidParameterError("tail extrapolation needs closed-form evaluators")
        u_f = _as_evaluator(u_eval)
        ring = polar_points(np.array([r_max]), 4 * n_angles, center)[0]
        C = float(np.mean(f(ring) * np.exp(2.0 * u_f(ring)))) * r_max ** p
        tail = 2.0 * np.pi * C * r_max ** (2.0 - p) / (p - 2.0)
    value = trunc + tail
    share = abs(tail) / max(abs(value), np.finfo(float).tiny)
    return CurvatureIntegral(value, trunc, tail, share, float(r_max), gap)


def angular_average(u, radii, n_angles=256, center=(0.0, 0.0)):
    """Mean of ``u`` over circles about ``center``, trapezoidal in angle."""
    check_scalar(n_angles, "n_angles", min_val=16, integer=True)
    radii = np.asarray(radii, dtype=float)
    f = _as_evaluator(u)
    vals = np.mean(f(polar_points(radii, n_angles, center)), axis=-1)
    return RadialProfile(radii, vals)


def deviation_bound(u, ubar=None, radii=None, n_angles=256, center=(0.0, 0.0)):
    """Max over sampled ``(r_i, theta_j)`` of ``|u - ubar(r_i)|``."""
    f = _as_evaluator(u)
    if ubar is None:
        if radii is None:
            raise InvalidParameterError("give radii or a precomputed angular average")
        ubar = angular_average(f, radii, n_angles, center)
    radii = ubar.radii
    vals = f(polar_points(radii, n_angles, center))
    return float(np.max(np.abs(vals - ubar.values[:, None])))
