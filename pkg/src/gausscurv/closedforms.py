"""Exact solution families of ``Delta u + K e^{2u} = 0`` and curvature/harmonic evaluators.

All evaluators are vectorized over arrays of points with a trailing axis of
length 2 and return arrays of the leading shape.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._validation import check_point, check_points, check_scalar
from .exceptions import InvalidParameterError

FAMILIES = ("flat", "chakie", "stuart", "special")


def _log_cosh(z):
    z = np.abs(z)
    return z + np.log1p(np.exp(-2.0 * z)) - np.log(2.0)


def _as_complex(X):
    X = check_points(X)
    return X[..., 0] + 1j * X[..., 1]


@dataclass(frozen=True)
class HarmonicSpec:
    """Polynomial entire harmonic ``H = a_0 + sum_m a_m Re z^m + b_m Im z^m``.

    ``re[m]`` holds ``a_m`` and ``im[m]`` holds ``b_m``; ``im[0]`` must be 0.
    """

    re: tuple = (0.0,)
    im: tuple = ()

    def __post_init__(self):
        re = tuple(float(a) for a in self.re) or (0.0,)
        im = tuple(float(b) for b in self.im)
        m = max(len(re), len(im))
        re = re + (0.0,) * (m - len(re))
        im = im + (0.0,) * (m - len(im))
        if im[0] != 0.0:
            raise InvalidParameterError("im[0] multiplies Im(z^0) = 0 and must be zero")
        if not all(np.isfinite(re + im)):
            raise InvalidParameterError("harmonic coefficients must be finite")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def constant(cls, c=0.0):
        return cls(re=(c,))

    @property
    def degree(self):
        nz = [m for m in range(len(self.re)) if self.re[m] or self.im[m]]
        return max(nz) if nz else 0

    @property
    def is_constant(self):
        return self.degree == 0

    @property
    def a0(self):
        return self.re[0]

    def __call__(self, X):
        z = _as_complex(X)
        out = np.full(z.shape, self.re[0])
        zm = np.ones_like(z)
        for m in range(1, len(self.re)):
            zm = zm * z
            if self.re[m]:
                out = out + self.re[m] * zm.real
            if self.im[m]:
                out = out + self.im[m] * zm.imag
        return out

    def shifted(self, c):
        return HarmonicSpec(re=(self.re[0] + c,) + self.re[1:], im=self.im)

    def to_dict(self):
        return {"re": list(self.re), "im": list(self.im)}


def eval_harmonic(spec, x):
    return spec(x)


@dataclass(frozen=True)
class CurvatureSpec:
    """Sign and magnitude ``Upsilon = |K|`` of a prescribed Gauss curvature.

    ``tail_exponent`` declares ``Upsilon ~ C r^{-m}``: a real ``m``, ``np.inf`` for
    faster than any power (or compact support), or ``None`` when unknown.
    """

    sign: int
    magnitude: Callable = field(compare=False)
    radial: bool = True
    tail_exponent: Optional[float] = None
    support_radius: Optional[float] = None
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise InvalidParameterError(f"sign must be -1, 0 or +1, got {self.sign!r}")

    def __call__(self, X):
        """Signed curvature ``K(X) = sign * Upsilon(X)``."""
        return self.sign * self.magnitude(X)

    def upsilon(self, X):
        if self.sign == 0:
            return np.zeros(np.shape(X)[:-1])
        return np.asarray(self.magnitude(X), dtype=float)

    def radial_upsilon(self, r):
        r = np.asarray(r, dtype=float)
        return self.upsilon(np.stack([r, np.zeros_like(r)], axis=-1))

    @property
    def is_zero(self):
        return self.sign == 0

    # -- factories ---------------------------------------------------------
    @classmethod
    def zero(cls):
        return cls(0, lambda X: np.zeros(np.shape(X)[:-1]), True, np.inf, 0.0, "zero")

    @classmethod
    def constant(cls, K0=1.0, sign=1):
        check_scalar(K0, "K0", min_val=0, include_min=False)
        return cls(sign, lambda X: np.full(np.shape(X)[:-1], float(K0)), True, 0.0,
                   None, "constant", {"K0": K0})

    @classmethod
    def chakie(cls, n=1):
        check_scalar(n, "n", min_val=1, integer=True)
        def mag(X):
            X = check_points(X)
            r2 = X[..., 0] ** 2 + X[..., 1] ** 2
            return 4.0 * n * n * r2 ** (n - 1)
        return cls(1, mag, True, -2.0 * (n - 1), None, "chakie", {"n": n})

    @classmethod
    def special(cls, gamma=0.6, y=(1.0, 0.0)):
        inst = FamilyInstance.special(gamma, y)
        return cls(1, inst.K, True, 4.0 * (1.0 - inst.gamma), None, "special",
                   {"gamma": inst.gamma, "y": list(inst.y)})

    @classmethod
    def disk(cls, radius=1.0, sign=1):
        """Indicator of the closed disk of the given radius."""
        check_scalar(radius, "radius", min_val=0, include_min=False)
        def mag(X):
            X = check_points(X)
            return (np.hypot(X[..., 0], X[..., 1]) <= radius).astype(float)
        return cls(sign, mag, True, np.inf, float(radius), "disk", {"radius": radius})

    @classmethod
    def bump(cls, radius=1.0, sign=1):
        """``(1 - r^2/R^2)^2`` on the disk of radius ``R``; C^1 with compact support."""
        check_scalar(radius, "radius", min_val=0, include_min=False)
        def mag(X):
            X = check_points(X)
            s = 1.0 - (X[..., 0] ** 2 + X[..., 1] ** 2) / radius ** 2
            return np.where(s > 0, s * s, 0.0)
        return cls(sign, mag, True, np.inf, float(radius), "bump", {"radius": radius})

    @classmethod
    def exp_decay(cls, scale=1.0, sign=1):
        """``exp(-|x|/scale)``."""
        check_scalar(scale, "scale", min_val=0, include_min=False)
        def mag(X):
            X = check_points(X)
            return np.exp(-np.hypot(X[..., 0], X[..., 1]) / scale)
        return cls(sign, mag, True, np.inf, None, "exp", {"scale": scale})

    @classmethod
    def gaussian(cls, scale=1.0, sign=1):
        check_scalar(scale, "scale", min_val=0, include_min=False)
        def mag(X):
            X = check_points(X)
            return np.exp(-(X[..., 0] ** 2 + X[..., 1] ** 2) / scale ** 2)
        return cls(sign, mag, True, np.inf, None, "gaussian", {"scale": scale})

    @classmethod
    def power(cls, m=3.0, sign=1):
        """``(1 + |x|)^{-m}``."""
        check_scalar(m, "m")
        def mag(X):
            X = check_points(X)
            return (1.0 + np.hypot(X[..., 0], X[..., 1])) ** (-m)
        return cls(sign, mag, True, float(m), None, "power", {"m": m})

    @classmethod
    def log_growth(cls, sign=-1):
        """``ln(e + |x|)``: unbounded, logarithmic growth."""
        def mag(X):
            X = check_points(X)
            return np.log(np.e + np.hypot(X[..., 0], X[..., 1]))
        return cls(sign, mag, True, None, None, "log", {})

    @classmethod
    def from_name(cls, name, **params):
        makers = {
            "zero": cls.zero, "constant": cls.constant, "chakie": cls.chakie,
            "special": cls.special, "disk": cls.disk, "bump": cls.bump,
            "exp": cls.exp_decay, "gaussian": cls.gaussian, "power": cls.power,
            "log": cls.log_growth,
        }
        if name not in makers:
            raise InvalidParameterError(f"unknown curvature {name!r}; choose from {sorted(makers)}")
        return makers[name](**params)

    def to_dict(self):
        return {"name": self.name, "sign": self.sign, **self.params}


@dataclass(frozen=True)
class FamilyInstance:
    """One member of an explicit solution family.

    Use the classmethod constructors; they validate the parameter domains.
    """

    family: str
    n: int = 1
    y: tuple = (1.0, 0.0)
    zeta: float = 0.0
    K0: float = 1.0
    phi: float = 0.0
    gamma: float = 1.0
    u0: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"family must be one of {FAMILIES}, got {self.family!r}")
        y = tuple(float(c) for c in check_point(self.y, "y", nonzero=self.family in ("chakie", "special")))
        object.__setattr__(self, "y", y)
        check_scalar(self.zeta, "zeta")
        check_scalar(self.phi, "phi")
        check_scalar(self.u0, "u0")
        check_scalar(self.n, "n", min_val=1, integer=True)
        check_scalar(self.K0, "K0", min_val=0, include_min=False)
        check_scalar(self.gamma, "gamma", min_val=0, max_val=1, include_min=False)

    @classmethod
    def flat(cls, u0=0.0):
        return cls("flat", u0=u0)

    @classmethod
    def chakie(cls, n=1, y=(1.0, 0.0), zeta=0.0):
        return cls("chakie", n=n, y=tuple(y), zeta=zeta)

    @classmethod
    def stuart(cls, K0=1.0, y=(0.0, 0.0), zeta=0.0, phi=0.0):
        return cls("stuart", K0=K0, y=tuple(y), zeta=zeta, phi=phi)

    @classmethod
    def special(cls, gamma=1.0, y=(1.0, 0.0)):
        return cls("special", gamma=gamma, y=tuple(y))

    # -- geometry of the stuart frame --------------------------------------
    @property
    def frame(self):
        """The orthogonal pair ``(v, v')``, ``|v| = |v'| = sqrt(K0)``; v' is v turned by +90 degrees."""
        s = np.sqrt(self.K0)
        v = s * np.array([np.cos(self.phi), np.sin(self.phi)])
        vp = s * np.array([-np.sin(self.phi), np.cos(self.phi)])
        return v, vp

    @property
    def x_star(self):
        """Center of radial symmetry for ``chakie`` with ``n = 1``."""
        if self.family == "chakie" and self.n == 1:
            return np.tanh(self.zeta) * np.asarray(self.y)
        if self.family in ("special",) or (self.family == "chakie" and self.zeta == 0):
            return np.zeros(2)
        return None

    @property
    def tail_exponent(self):
        """Decay rate ``p`` of ``|K| e^{2u} ~ C r^{-p}``, or None when not integrable."""
        if self.family == "chakie":
            return 2.0 * self.n + 2.0
        if self.family == "special":
            return 4.0
        return None

    @property
    def integral_curvature_exact(self):
        if self.family == "chakie":
            return 4.0 * np.pi * self.n
        if self.family == "special":
            return 4.0 * np.pi * self.gamma
        if self.family == "flat":
            return 0.0
        return np.inf

    # -- evaluators ---------------------------------------------------------
    def _chakie_u(self, z, n, zeta):
        yc = self.y[0] + 1j * self.y[1]
        W = (z / yc) ** n
        t = np.tanh(zeta)
        D = np.abs(W - t) ** 2 + 1.0 - t * t
        return -np.log(D) - n * np.log(abs(yc)) - _log_cosh(zeta)

    def u(self, X):
        z = _as_complex(X)
        if self.family == "flat":
            return np.full(z.shape, float(self.u0))
        if self.family == "chakie":
            return self._chakie_u(z, self.n, self.zeta)
        if self.family == "special":
            return self.gamma * self._chakie_u(z, 1, 0.0)
        v, vp = self.frame
        d = np.stack([z.real - self.y[0], z.imag - self.y[1]], axis=-1)
        a = d @ v
        b = d @ vp
        aa = np.abs(a)
        # cosh(zeta) cosh(a) - sinh(zeta) sin(b), factored by e^{|a|}/2
        inner = np.cosh(self.zeta) * (1.0 + np.exp(-2.0 * aa)) - 2.0 * np.sinh(self.zeta) * np.sin(b) * np.exp(-aa)
        return -(aa + np.log(inner) - np.log(2.0))

    def K(self, X):
        X = check_points(X)
        r2 = X[..., 0] ** 2 + X[..., 1] ** 2
        if self.family == "flat":
            return np.zeros(X.shape[:-1])
        if self.family == "chakie":
            return 4.0 * self.n ** 2 * r2 ** (self.n - 1)
        if self.family == "stuart":
            return np.full(X.shape[:-1], float(self.K0))
        z = X[..., 0] + 1j * X[..., 1]
        return 4.0 * self.gamma * np.exp(2.0 * (1.0 - self.gamma) * self._chakie_u(z, 1, 0.0))

    def __call__(self, X):
        return self.u(X)

    def conformal_factor(self, X):
        return np.exp(2.0 * self.u(X))

    def curvature_spec(self):
        if self.family == "flat":
            return CurvatureSpec.zero()
        if self.family == "chakie":
            return CurvatureSpec.chakie(self.n)
        if self.family == "stuart":
            return CurvatureSpec.constant(self.K0)
        return CurvatureSpec.special(self.gamma, self.y)

    def to_dict(self):
        base = {"family": self.family}
        keys = {"flat": ("u0",), "chakie": ("n", "y", "zeta"),
                "stuart": ("K0", "y", "zeta", "phi"), "special": ("gamma", "y")}[self.family]
        for k in keys:
            v = getattr(self, k)
            base[k] = list(v) if isinstance(v, tuple) else v
        return base


def eval_family(inst, x):
    """Return the closed-form pair ``(u(x), K(x))``."""
    return inst.u(x), inst.K(x)


# -- figure data --------------------------------------------------------------

def grid_local_maxima(values):
    """Interior local maxima over the 8-neighbourhood; tied plateaus count once.

    Returns one index pair per connected plateau of cells that are not
    exceeded by any neighbour.
    """
    from scipy import ndimage

    v = np.asarray(values, dtype=float)
    peak = v >= ndimage.maximum_filter(v, size=3, mode="nearest")
    peak[[0, -1], :] = False
    peak[:, [0, -1]] = False
    labels, n = ndimage.label(peak, structure=np.ones((3, 3)))
    out = []
    for k in range(1, n + 1):
        idx = np.argwhere(labels == k)
        ring = ndimage.binary_dilation(labels == k, structure=np.ones((3, 3))) & (labels != k)
        if np.any(v[ring] >= v[tuple(idx[0])]):
            continue
        out.append(tuple(int(a) for a in idx[0]))
    return out


def conformal_maxima(inst, field, polish=True):
    """Local maxima of ``e^{2u}`` found on a sampled ``PlanarField`` and polished on the closed form.

    Returns a list of ``(location, value)`` sorted by angle of the location.
    """
    from scipy.optimize import minimize

    out = []
    for i, j in grid_local_maxima(field.values):
        x0 = np.array([field.axis(field.halfwidth, field.n_cells)[i],
                       field.axis(field.halfwidth, field.n_cells)[j]])
        if polish:
            res = minimize(lambda p: -float(inst.u(p[None, :])[0]), x0, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            x = res.x if np.all(np.abs(res.x - x0) <= 2 * field.h) else x0
        else:
            x = x0
        out.append((x, float(np.exp(2.0 * inst.u(x[None, :])[0]))))
    out.sort(key=lambda m: np.arctan2(m[0][1], m[0][0]))
    return out


def level_invariance(inst, a, n=512):
    """Relative spread of ``e^{2u}`` over one period along ``v'`` on the line ``<v, x - y> = a``.

    For the stuart family ``e^{2u}`` is ``2 pi / sqrt(K0)``-periodic along
    ``v'`` and the spread decays like ``e^{-|a|}``: far from the core the
    level curves become straight lines parallel to ``v'``.
    """
    if inst.family != "stuart":
        raise InvalidParameterError("level_invariance applies to the stuart family")
    v, vp = inst.frame
    K0 = inst.K0
    b = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    X = np.asarray(inst.y) + (a / K0) * v + (b[:, None] / K0) * vp
    f = inst.conformal_factor(X)
    m = f.mean()
    return float(np.max(np.abs(f - m)) / m)
