"""Metropolis sampling of the canonical log-gas ensemble and mean-field estimators.

The N-particle measure is

    mu^(N)(dx_1 ... dx_N)  ∝  prod_{i<j} |x_i - x_j|^{-beta/N}  prod_l tau(dx_l),

with ``tau = Upsilon e^{2H} dx``. As ``N -> inf`` its 1-marginal approaches
a minimizer of the mean-field free energy, which is what the estimators here
compare against.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from sklearn.base import BaseEstimator

from . import _io
from ._validation import check_is_fitted, check_points, check_scalar
from .exceptions import InadmissibleBetaError, InvalidParameterError
from .fields import RadialProfile
from .meanfield import BETA_MAX, AprioriMeasure, RadialGeometry, beta_star

logger = logging.getLogger(__name__)

LOG_FLOOR = -745.0
TABLE_SIZE = 1 << 16
TABLE_R_MIN = 1e-8
TABLE_R_MAX = 1e8


# -- weights ------------------------------------------------------------------

def log_weight(positions, beta, tau):
    """``-(beta/N) sum_{i<j} ln|x_i - x_j| + sum_l ln(Upsilon e^{2H})(x_l)`` (unnormalized).

    Returns ``-inf`` when a particle sits where ``tau`` vanishes; coincident
    particles give ``+inf`` (beta > 0) or ``-inf`` (beta < 0), which the
    sampler treats as a rejected move.
    """
    X = check_points(positions)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InvalidParameterError("positions must have shape (N, 2) with N >= 2")
    N = X.shape[0]
    field_term = float(np.sum(tau.log_density(X)))
    if beta == 0:
        return field_term
    i, j = np.triu_indices(N, 1)
    d = np.hypot(*(X[i] - X[j]).T)
    with np.errstate(divide="ignore"):
        pair = float(np.sum(np.log(d)))
    if np.isinf(pair):
        return field_term + (np.inf if beta > 0 else -np.inf)
    return field_term - beta / N * pair


@dataclass
class _RadialTable:
    t0: float
    inv_dt: float
    values: np.ndarray
    r_cut: float

    def __call__(self, r):
        r2 = np.atleast_1d(np.asarray(r, dtype=float) ** 2)
        out = _table_eval(np.ascontiguousarray(r2), self.t0, self.inv_dt, self.values,
                          self.r_cut ** 2 if np.isfinite(self.r_cut) else np.inf)
        return out.reshape(np.shape(r))


def _build_table(tau, size=TABLE_SIZE):
    """``ln tau`` tabulated on a uniform grid in ``ln r`` (linear interpolation)."""
    if not tau.is_radial:
        raise InvalidParameterError("the sampler needs a radial Upsilon and a constant H")
    r_cut = tau.effective_radius
    r_hi = r_cut if np.isfinite(r_cut) else TABLE_R_MAX
    t = np.linspace(np.log(TABLE_R_MIN), np.log(r_hi), size)
    r = np.exp(t)
    P = np.stack([r, np.zeros_like(r)], axis=-1)
    with np.errstate(divide="ignore"):
        vals = tau.log_density(P)
    vals = np.where(np.isfinite(vals), vals, LOG_FLOOR)
    vals = np.maximum(vals, LOG_FLOOR)
    return _RadialTable(float(t[0]), float(1.0 / (t[1] - t[0])), vals, float(r_hi))


@njit(cache=True)
def _log_tau_scalar(r2, t0, inv_dt, table, r_cut2):
    if r2 > r_cut2:
        return -np.inf
    if r2 <= 0.0:
        return table[0]
    s = (0.5 * np.log(r2) - t0) * inv_dt
    if s <= 0.0:
        return table[0]
    n = table.shape[0]
    k = int(s)
    if k >= n - 1:
        return table[n - 1]
    f = s - k
    return table[k] * (1.0 - f) + table[k + 1] * f


@njit(cache=True)
def _table_eval(r2, t0, inv_dt, table, r_cut2):
    out = np.empty(r2.shape)
    flat_in = r2.ravel()
    flat_out = out.ravel()
    for k in range(flat_in.shape[0]):
        flat_out[k] = _log_tau_scalar(flat_in[k], t0, inv_dt, table, r_cut2)
    return out


@njit(cache=True)
def _pair_log_mean(X):
    N = X.shape[0]
    acc = 0.0
    for i in range(N):
        for j in range(i + 1, N):
            dx = X[i, 0] - X[j, 0]
            dy = X[i, 1] - X[j, 1]
            acc += 0.5 * np.log(dx * dx + dy * dy)
    return acc / (N * (N - 1) / 2)


@njit(cache=True)
def _run_chunk(X, LT, coef, t0, inv_dt, table, r_cut2, sigma, Z, Uu,
               measure, hist, lt_lo, inv_bw, thin, sweep0, pair_out, pair_count):
    """Sequential single-particle Metropolis sweeps over pre-drawn normals ``Z`` and uniforms ``Uu``.

    Returns the number of accepted moves and the updated count of pair
    measurements written to ``pair_out``.
    """
    N = X.shape[0]
    n_sw = Z.shape[0]
    nb = hist.shape[0] - 2
    accepted = 0
    for s in range(n_sw):
        for i in range(N):
            xi = X[i, 0]
            yi = X[i, 1]
            nx = xi + sigma * Z[s, i, 0]
            ny = yi + sigma * Z[s, i, 1]
            lt_new = _log_tau_scalar(nx * nx + ny * ny, t0, inv_dt, table, r_cut2)
            if lt_new == -np.inf:
                continue
            dlog = lt_new - LT[i]
            if coef != 0.0:
                acc_log = 0.0
                prod = 1.0
                cnt = 0
                for j in range(N):
                    if j == i:
                        continue
                    ax = X[j, 0] - nx
                    ay = X[j, 1] - ny
                    bx = X[j, 0] - xi
                    by = X[j, 1] - yi
                    prod *= (ax * ax + ay * ay) / (bx * bx + by * by)
                    cnt += 1
                    if cnt == 4:
                        acc_log += np.log(prod)
                        prod = 1.0
                        cnt = 0
                acc_log += np.log(prod)
                dlog -= coef * 0.5 * acc_log
            if not np.isfinite(dlog):
                continue
            if dlog >= 0.0 or Uu[s, i] < np.exp(dlog):
                X[i, 0] = nx
                X[i, 1] = ny
                LT[i] = lt_new
                accepted += 1
        if measure:
            for i in range(N):
                r2 = X[i, 0] * X[i, 0] + X[i, 1] * X[i, 1]
                if r2 <= 0.0:
                    hist[0] += 1
                    continue
                b = (0.5 * np.log(r2) - lt_lo) * inv_bw
                if b < 0.0:
                    hist[0] += 1
                elif b >= nb:
                    hist[nb + 1] += 1
                else:
                    hist[int(b) + 1] += 1
            if (sweep0 + s) % thin == 0:
                pair_out[pair_count] = _pair_log_mean(X)
                pair_count += 1
    return accepted, pair_count


# -- chain state --------------------------------------------------------------

@dataclass
class ChainState:
    """Positions and bookkeeping for one Metropolis chain."""

    positions: np.ndarray
    beta: float
    tau: AprioriMeasure
    seed: int
    sigma: float
    rng: np.random.Generator = field(repr=False, default=None)
    accepted: int = 0
    proposed: int = 0
    _table: Optional[_RadialTable] = field(repr=False, default=None)
    _lt: Optional[np.ndarray] = field(repr=False, default=None)

    def __post_init__(self):
        self.positions = np.array(check_points(self.positions), dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[0] < 2:
            raise InvalidParameterError("positions must have shape (N, 2) with N >= 2")
        check_scalar(self.sigma, "sigma", min_val=0, include_min=False)
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)
        if self._table is None:
            self._table = _build_table(self.tau)
        self._lt = self._table(np.hypot(self.positions[:, 0], self.positions[:, 1]))
        if not np.all(np.isfinite(self._lt)):
            raise InvalidParameterError("initial positions outside the support of tau")

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def acceptance_rate(self):
        return self.accepted / self.proposed if self.proposed else np.nan

    def log_weight(self):
        return log_weight(self.positions, self.beta, self.tau)


_EMPTY_HIST = np.zeros(2, dtype=np.int64)
_EMPTY_PAIR = np.zeros(1)


def _advance(state, n_sweeps, measure=False, hist=None, lt_lo=0.0, inv_bw=1.0, thin=1,
             sweep0=0, pair_out=None, pair_count=0):
    N = state.N
    Z = state.rng.standard_normal((n_sweeps, N, 2))
    Uu = state.rng.random((n_sweeps, N))
    tb = state._table
    r_cut2 = tb.r_cut ** 2 if np.isfinite(tb.r_cut) else np.inf
    acc, pc = _run_chunk(state.positions, state._lt, state.beta / N, tb.t0, tb.inv_dt, tb.values,
                         r_cut2, state.sigma, Z, Uu, measure,
                         _EMPTY_HIST.copy() if hist is None else hist, lt_lo, inv_bw, thin, sweep0,
                         _EMPTY_PAIR if pair_out is None else pair_out, pair_count)
    state.accepted += acc
    state.proposed += n_sweeps * N
    return acc, pc


def mc_sweep(state):
    """One sweep of N single-particle Gaussian proposals (in place; returns the state)."""
    _advance(state, 1)
    return state


def initial_positions(N, tau, rng, scale=1.0):
    """Gaussian draws of the given scale, redrawn until every point lies where ``tau > 0``."""
    tb = _build_table(tau)
    X = np.empty((N, 2))
    for k in range(N):
        for _ in range(10_000):
            p = scale * rng.standard_normal(2)
            if tb(np.hypot(*p)) > LOG_FLOOR:
                X[k] = p
                break
        else:
            raise InvalidParameterError("could not place particles inside the support of tau")
    return X


# -- histograms and estimators ------------------------------------------------

@dataclass
class MarginalHistogram:
    """Radial histogram of the 1-marginal; ``edges[0] = 0`` and ``edges[-1]`` is the support radius."""

    edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.edges.size - 1,):
            raise InvalidParameterError("counts must have one entry per bin")
        if np.any(self.counts < 0):
            raise InvalidParameterError("counts must be non-negative")

    @property
    def masses(self):
        return self.counts / self.total

    @property
    def areas(self):
        return np.pi * np.diff(self.edges ** 2)

    @property
    def centers(self):
        e = self.edges
        lo = np.where(e[:-1] > 0, e[:-1], e[1] / 2)
        hi = np.where(np.isfinite(e[1:]), e[1:], 2 * lo)
        return np.sqrt(lo * hi)

    @property
    def density(self):
        """Per-area density; zero on an unbounded outermost bin."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.isfinite(self.areas), self.masses / self.areas, 0.0)

    def merge(self, other):
        if not np.array_equal(self.edges, other.edges):
            raise InvalidParameterError("histograms have different bins")
        return MarginalHistogram(self.edges, self.counts + other.counts, self.total + other.total)

    def l1_distance(self, cdf):
        """``sum_k |empirical mass - model mass|`` for a radial cumulative mass function."""
        M = cdf(self.edges)
        return float(np.sum(np.abs(self.masses - np.diff(M))))

    def to_csv(self, path):
        keep = np.isfinite(self.areas)
        _io.write_csv(path, ["r", "value", "weight"],
                      [self.centers[keep], self.density[keep], self.areas[keep]])

    def to_dict(self):
        return {"edges": self.edges, "counts": self.counts, "total": self.total}


def radial_edges(r_lo, r_hi, n_bins, r_top):
    inner = np.geomspace(r_lo, r_hi, n_bins + 1)
    return np.concatenate([[0.0], inner, [r_top]])


def empirical_marginal(samples, edges=None, n_bins=60, r_lo=1e-2, r_hi=1e2, r_top=np.inf):
    """Radial histogram of all positions in ``samples`` (any shape ending in 2)."""
    X = check_points(samples).reshape(-1, 2)
    if X.shape[0] == 0:
        raise InvalidParameterError("no samples")
    edges = radial_edges(r_lo, r_hi, n_bins, r_top) if edges is None else np.asarray(edges, float)
    r = np.hypot(X[:, 0], X[:, 1])
    idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, edges.size - 2)
    counts = np.bincount(idx, minlength=edges.size - 1)
    return MarginalHistogram(edges, counts, X.shape[0])


def radial_cdf(profile):
    """Cumulative mass ``M(r) = int_{|x| < r} rho`` of a radial density profile."""
    r = profile.radii
    v = profile.values
    t = np.log(r)
    f = 2 * np.pi * r ** 2 * v
    cum = np.pi * r[0] ** 2 * v[0] + np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))])
    total = cum[-1]
    interp = PchipInterpolator(t, cum)

    def M(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        small = x <= r[0]
        big = x >= r[-1]
        mid = ~(small | big)
        out[small] = np.pi * x[small] ** 2 * v[0]
        out[big] = total
        out[mid] = interp(np.log(x[mid]))
        return out / total
    return M


def batch_means(series, n_batches=50):
    """Mean and batch-means standard error of a correlated series."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        return float(x.mean()) if n else np.nan, np.nan
    nb = min(n_batches, n)
    m = n // nb
    b = x[:nb * m].reshape(nb, m).mean(axis=1)
    return float(x.mean()), float(b.std(ddof=1) / np.sqrt(nb))


def pair_log_moment(samples, n_batches=50):
    """``<ln|x - y|>`` over all pairs of each configuration; returns ``(mean, standard error)``.

    ``samples`` has shape ``(n_configs, N, 2)``.
    """
    S = check_points(samples)
    if S.ndim != 3 or S.shape[1] < 2:
        raise InvalidParameterError("samples must have shape (n_configs, N, 2) with N >= 2")
    series = np.array([_pair_log_mean(np.ascontiguousarray(c)) for c in S])
    return batch_means(series, n_batches)


def mu1_pair_log_moment(tau, r_min=1e-6, r_max=1e8, n=20000):
    """``<ln|x - y|>`` under ``mu1 x mu1`` for radial ``tau`` via ``ln max(|x|, |y|)``."""
    if not tau.is_radial:
        raise InvalidParameterError("needs a radial a-priori measure")
    R = min(r_max, tau.effective_radius)
    geom = RadialGeometry.log_grid(r_min, R, n)
    P = np.stack([geom.r, np.zeros_like(geom.r)], axis=-1)
    with np.errstate(divide="ignore"):
        rho = np.exp(tau.log_density(P))
    rho = rho / geom.integrate(rho)
    return float(geom.integrate(rho * geom.potential(rho)))


# -- two-particle oracle ------------------------------------------------------

def _disk_overlap(d):
    return 2.0 * np.arccos(d / 2.0) - 0.5 * d * np.sqrt(4.0 - d * d)


def _lens_second_moment(d):
    a = 1.0 - d / 2.0
    if a <= 0:
        return 0.0

    def integrand(c):
        h = np.sqrt(max(0.0, 1.0 - (c + d / 2.0) ** 2))
        return 2.0 * h * c * c + 2.0 * h ** 3 / 3.0
    return 2.0 * integrate.quad(integrand, 0.0, a, epsabs=1e-14, epsrel=1e-12)[0]


def two_particle_disk_moments(beta):
    """Exact ``<ln|x1 - x2|>`` and ``<|x1|^2>`` for N = 2 on the unit disk.

    Uses the reduction of the 4D integral to the distance ``d = |x1 - x2|``,
    whose density under ``tau x tau`` is proportional to the overlap area of
    two unit disks at distance ``d`` times ``d``.
    """
    p = 1.0 - beta / 2.0
    if p <= -1:
        raise InadmissibleBetaError("pair weight not integrable at N = 2")
    q = lambda f: integrate.quad(f, 0.0, 2.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    Z = q(lambda d: d ** p * _disk_overlap(d))
    m_log = q(lambda d: d ** p * np.log(d) * _disk_overlap(d)) / Z
    m_r2 = q(lambda d: d ** p * (_lens_second_moment(d) + d * d / 4.0 * _disk_overlap(d))) / Z
    return m_log, m_r2


# -- estimator ----------------------------------------------------------------

class LogGasSampler(BaseEstimator):
    """Metropolis sampler for the canonical ensemble ``mu^(N)``.

    Parameters
    ----------
    n_particles : int
    beta : float
    n_sweeps : int
    burn_in : float
        Fraction of sweeps discarded; the proposal scale is tuned during it.
    thin : int
        Sweeps between pair-moment measurements.
    step : float
        Initial proposal scale.
    seed : int
    n_bins, r_lo, r_hi : radial histogram layout
    record_every : int or None
        Store a snapshot of all positions every so many post-burn-in sweeps.
    """

    def __init__(self, n_particles=100, beta=2.0, n_sweeps=10_000, burn_in=0.1, thin=10,
                 step=0.5, seed=0, n_bins=60, r_lo=1e-2, r_hi=1e2, init_scale=1.0,
                 tune=True, n_batches=50, record_every=None, chunk=1000):
        self.n_particles = n_particles
        self.beta = beta
        self.n_sweeps = n_sweeps
        self.burn_in = burn_in
        self.thin = thin
        self.step = step
        self.seed = seed
        self.n_bins = n_bins
        self.r_lo = r_lo
        self.r_hi = r_hi
        self.init_scale = init_scale
        self.tune = tune
        self.n_batches = n_batches
        self.record_every = record_every
        self.chunk = chunk

    def _validate(self, tau):
        check_scalar(self.n_particles, "n_particles", min_val=2, integer=True)
        check_scalar(self.n_sweeps, "n_sweeps", min_val=1, integer=True)
        check_scalar(self.burn_in, "burn_in", min_val=0, max_val=1, include_max=False)
        check_scalar(self.thin, "thin", min_val=1, integer=True)
        check_scalar(self.beta, "beta")
        if not isinstance(tau, AprioriMeasure):
            raise InvalidParameterError("fit expects an AprioriMeasure")
        if self.beta >= BETA_MAX:
            raise InadmissibleBetaError(f"beta = {self.beta} outside the admissible range (beta*, 4)")
        if self.beta < 0 and self.beta <= beta_star(tau):
            raise InadmissibleBetaError(f"beta = {self.beta} outside the admissible range (beta*, 4)")

    def fit(self, tau, y=None):
        self._validate(tau)
        rng = np.random.default_rng(self.seed)
        X0 = initial_positions(self.n_particles, tau, rng, self.init_scale)
        state = ChainState(X0, float(self.beta), tau, self.seed, float(self.step), rng=rng)
        n_burn = int(round(self.burn_in * self.n_sweeps))
        n_meas = self.n_sweeps - n_burn
        tune_block = 100
        done = 0
        while done < n_burn:
            k = min(tune_block, n_burn - done)
            acc, _ = _advance(state, k)
            if self.tune:
                rate = acc / (k * state.N)
                if rate < 0.3:
                    state.sigma *= 0.8
                elif rate > 0.5:
                    state.sigma *= 1.25
            done += k
        state.accepted = state.proposed = 0
        r_top = tau.effective_radius
        edges = radial_edges(self.r_lo, min(self.r_hi, r_top), self.n_bins, r_top)
        hist = np.zeros(edges.size - 1, dtype=np.int64)
        lt_lo = np.log(edges[1])
        inv_bw = self.n_bins / (np.log(edges[-2]) - lt_lo)
        pair = np.empty(n_meas // self.thin + 2)
        pc = 0
        snaps = []
        chunk = self.chunk if self.record_every is None else min(self.chunk, self.record_every)
        s = 0
        while s < n_meas:
            k = min(chunk, n_meas - s)
            _, pc = _advance(state, k, True, hist, lt_lo, inv_bw, self.thin, s, pair, pc)
            s += k
            if self.record_every is not None and s % self.record_every == 0:
                snaps.append((n_burn + s, state.positions.copy()))
        self.state_ = state
        self.histogram_ = MarginalHistogram(edges, hist, n_meas * state.N)
        self.pair_series_ = pair[:pc]
        self.pair_log_mean_, self.pair_log_se_ = batch_means(self.pair_series_, self.n_batches)
        self.acceptance_rate_ = state.acceptance_rate
        self.step_ = state.sigma
        self.snapshots_ = snaps
        self.n_burn_ = n_burn
        return self

    def l1_distance(self, rho):
        """L1 distance of the radial 1-marginal to a radial density profile."""
        check_is_fitted(self, "histogram_")
        return self.histogram_.l1_distance(radial_cdf(rho))

    def score(self, rho, y=None):
        return -self.l1_distance(rho)

    def summary(self):
        check_is_fitted(self, "histogram_")
        return {"seed": self.seed, "N": self.n_particles, "beta": self.beta,
                "sweeps": self.n_sweeps, "burn_in_sweeps": self.n_burn_,
                "acceptance_rate": self.acceptance_rate_, "step": self.step_,
                "pair_log_moment": self.pair_log_mean_,
                "pair_log_moment_se": self.pair_log_se_,
                "n_pair_measurements": int(self.pair_series_.size)}

    def write_samples(self, path):
        """CSV ``sweep,particle,x1,x2`` of the recorded snapshots."""
        check_is_fitted(self, "snapshots_")
        rows = [(sw, p, x[0], x[1]) for sw, X in self.snapshots_ for p, x in enumerate(X)]
        cols = np.array(rows, dtype=float).T if rows else np.zeros((4, 0))
        _io.write_csv(path, ["sweep", "particle", "x1", "x2"],
                      [cols[0].astype(np.int64), cols[1].astype(np.int64), cols[2], cols[3]])
