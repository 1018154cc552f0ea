"""Rational filters approximating the indicator function of ``[-1, 1]``.

Three families are provided, all in partial-fraction form

    r(z) = constant + sum_j w_j / (z_j - z),   j = 1 .. 2m

* ``gauss``: Gauss-Legendre quadrature of the Cauchy integral over an
  ellipse through ``+-1`` (shape ``S``; ``S = inf`` is the unit circle),
* ``trapezoid``: the trapezoid rule on the same ellipses, equal to a
  type-1 Chebyshev filter (Butterworth for ``S = inf``),
* ``zolotarev``: the best uniform approximant of the indicator of
  ``[-G, G]`` on the real line, with ``G = (sqrt(R)-1)/(sqrt(R)+1)``.

Poles are stored upper-half-plane first, each followed by its conjugate,
ordered by increasing argument.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import (agm, complete_elliptic_K, jacobi_sd_inverse,
                       sncndn_at_fraction)
from .errors import DomainError, FilterConstructionError, PoleProximityError

KINDS = ("gauss", "trapezoid", "zolotarev")

POLE_TOL = 1e-14
_CHUNK = 8192


@dataclass(frozen=True)
class FilterSpec:
    """Family, half degree ``m`` and shape parameter of a filter.

    ``shape`` is the ellipse parameter ``S`` (``> 1`` or ``math.inf``) for the
    quadrature families and ``R > 1`` for Zolotarev.
    """

    kind: str
    m: int
    shape: float

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise DomainError(f"unknown filter kind {self.kind!r}")
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise DomainError(f"half degree m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        shape = float(self.shape)
        object.__setattr__(self, "shape", shape)
        if math.isnan(shape) or shape <= 1.0:
            raise DomainError(f"shape parameter must exceed 1, got {self.shape!r}")
        if kind == "zolotarev" and math.isinf(shape):
            raise DomainError("Zolotarev filters need a finite R")


@dataclass(frozen=True)
class ZolotarevFactors:
    """Zero-pole-gain data of a Zolotarev filter.

    With ``t = sqrt(R)(1+z)/(1-z)`` the filter is

        r(z) = prod_k (t + xi_k) / (2 prod_j (t^2 + c_j))

    where ``xi_k`` (``2m`` values in ``[1, R]``) are the points where the
    underlying sign approximant equals one and ``c_j`` are its ``m`` pole
    coefficients.  Evaluating this product never subtracts nearly equal
    numbers, so tiny filter values keep full relative accuracy.
    """

    sqrt_R: float
    xi: np.ndarray
    c: np.ndarray
    sign_error: float

    def evaluate(self, z, reciprocal=False):
        z = np.asarray(z, dtype=complex)
        sr = self.sqrt_R
        R = sr * sr
        a = sr - self.xi
        b = sr + self.xi
        out = np.full(z.shape, 0.5, dtype=complex)
        for j, cj in enumerate(self.c):
            k1, k2 = 2 * j, 2 * j + 1
            if reciprocal:
                num = (a[k1] + b[k1] * z) * (a[k2] + b[k2] * z)
                den = R * (1 + z) ** 2 + cj * (z - 1) ** 2
            else:
                num = (a[k1] * z + b[k1]) * (a[k2] * z + b[k2])
                den = R * (1 + z) ** 2 + cj * (1 - z) ** 2
            out *= num / den
        return out

    @property
    def zeros(self):
        return -(self.sqrt_R + self.xi) / (self.sqrt_R - self.xi)


@dataclass(frozen=True, eq=False)
class RationalFilter:
    """Partial-fraction rational filter ``r(z) = c + sum w_j/(z_j - z)``."""

    poles: np.ndarray
    weights: np.ndarray
    constant: complex
    spec: FilterSpec
    factors: ZolotarevFactors = field(default=None, repr=False)

    def __post_init__(self):
        poles = np.array(self.poles, dtype=complex)
        weights = np.array(self.weights, dtype=complex)
        if poles.shape != weights.shape or poles.ndim != 1:
            raise DomainError("poles and weights must be 1-d arrays of equal length")
        poles.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "constant", complex(self.constant))

    @property
    def m(self):
        return self.spec.m

    @property
    def kind(self):
        return self.spec.kind

    @property
    def conjugate_pairs_reducible(self):
        """True when poles and weights come in adjacent conjugate pairs.

        Then for a real pencil and real block only the upper-half-plane
        poles need a linear solve.
        """
        p, w = self.poles, self.weights
        if len(p) % 2:
            return False
        scale = max(1.0, np.max(np.abs(p)))
        return bool(
            np.all(p[0::2].imag > 0)
            and np.allclose(p[1::2], np.conj(p[0::2]), rtol=0, atol=1e-14 * scale)
            and np.allclose(w[1::2], np.conj(w[0::2]), rtol=0,
                            atol=1e-14 * max(1.0, np.max(np.abs(w))))
            and abs(self.constant.imag) <= 1e-14)

    def __call__(self, z):
        return eval_filter(self, z)

    def evaluate(self, z):
        """Evaluate using the most accurate representation available."""
        if self.factors is not None:
            return _maybe_scalar(z, self.factors.evaluate(z))
        return eval_filter(self, z)

    def evaluate_reciprocal(self, u):
        """Evaluate ``r(1/u)``; finite and accurate near ``u = 0``."""
        if self.factors is not None:
            return _maybe_scalar(u, self.factors.evaluate(u, reciprocal=True))
        u_arr = np.atleast_1d(np.asarray(u, dtype=complex))
        flat = u_arr.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        for lo in range(0, len(flat), _CHUNK):
            uc = flat[lo:lo + _CHUNK, None]
            out[lo:lo + _CHUNK] = self.constant + np.sum(
                self.weights * uc / (self.poles * uc - 1.0), axis=1)
        return _maybe_scalar(u, out.reshape(u_arr.shape))

    # -- serialization -------------------------------------------------
    def to_dict(self):
        shape = "inf" if math.isinf(self.spec.shape) else self.spec.shape
        return {
            "kind": self.spec.kind,
            "m": self.spec.m,
            "shape": shape,
            "poles": [[float(p.real), float(p.imag)] for p in self.poles],
            "weights": [[float(w.real), float(w.imag)] for w in self.weights],
            "constant": [float(self.constant.real), float(self.constant.imag)],
        }

    def to_json(self, **kwargs):
        # repr of a Python float is the shortest string that round-trips
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        shape = data["shape"]
        shape = math.inf if shape == "inf" else float(shape)
        spec = FilterSpec(data["kind"], int(data["m"]), shape)
        poles = [complex(re, im) for re, im in data["poles"]]
        weights = [complex(re, im) for re, im in data["weights"]]
        if len(poles) != 2 * spec.m or len(weights) != 2 * spec.m:
            raise DomainError("filter JSON must carry 2m poles and weights")
        return cls(poles, weights, complex(*data["constant"]), spec)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _maybe_scalar(z, values):
    return values if np.ndim(z) else complex(values.reshape(-1)[0])


def eval_filter(filt, z):
    """Evaluate the partial-fraction form at ``z`` (scalar or array).

    Each point sums its terms in pole-storage order.  Raises
    :class:`PoleProximityError` within ``1e-14`` of a pole.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    flat = z_arr.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for lo in range(0, len(flat), _CHUNK):
        d = filt.poles[None, :] - flat[lo:lo + _CHUNK, None]
        if np.any(np.abs(d) <= POLE_TOL):
            bad = filt.poles[np.argmin(np.min(np.abs(d), axis=0))]
            raise PoleProximityError(f"evaluation point within {POLE_TOL} of pole {bad!r}")
        out[lo:lo + _CHUNK] = filt.constant + np.sum(filt.weights / d, axis=1)
    return _maybe_scalar(z, out.reshape(z_arr.shape))


def _pair_order(poles, weights):
    """Sort upper-half-plane poles by argument and interleave conjugates."""
    poles = np.asarray(poles, dtype=complex)
    weights = np.asarray(weights, dtype=complex)
    upper = poles.imag > 0
    if 2 * np.count_nonzero(upper) != len(poles):
        raise FilterConstructionError("poles are not in conjugate pairs off the real axis")
    pu, wu = poles[upper], weights[upper]
    order = np.argsort(np.angle(pu), kind="stable")
    pu, wu = pu[order], wu[order]
    p = np.empty(len(poles), dtype=complex)
    w = np.empty(len(poles), dtype=complex)
    p[0::2], p[1::2] = pu, np.conj(pu)
    w[0::2], w[1::2] = wu, np.conj(wu)
    return p, w


# -- quadrature families ------------------------------------------------

def gauss_legendre_nodes(m):
    """Gauss-Legendre nodes (ascending) and weights on ``[-1, 1]``."""
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"number of nodes must be a positive integer, got {m!r}")
    x, w = np.polynomial.legendre.leggauss(int(m))
    # exact reflection symmetry of the rule
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def _ellipse_eccentricity(S):
    # (S - 1/S) / (S + 1/S); equal to 1 on the unit circle
    if math.isinf(S):
        return 1.0
    return (S - 1.0) * (S + 1.0) / (S * S + 1.0)


def _contour_rule(thetas, omegas, S):
    """Map quadrature on ``theta`` to poles/weights on the ellipse ``Gamma_S``."""
    eps = _ellipse_eccentricity(S)
    c, s = np.cos(thetas), np.sin(thetas)
    poles = c + 1j * eps * s
    weights = omegas / (2 * np.pi) * (eps * c + 1j * s)
    return poles, weights


def build_gauss_filter(m, S=math.inf):
    """Mapped Gauss rule: ``m`` nodes on ``[0, pi]`` mirrored to ``[pi, 2pi]``."""
    spec = FilterSpec("gauss", m, S)
    x, w = gauss_legendre_nodes(spec.m)
    theta = 0.5 * np.pi * (x + 1.0)
    omega = 0.5 * np.pi * w
    thetas = np.concatenate([theta, 2 * np.pi - theta])
    omegas = np.concatenate([omega, omega])
    poles, weights = _contour_rule(thetas, omegas, spec.shape)
    poles, weights = _pair_order(poles, weights)
    return RationalFilter(poles, weights, 0.0, spec)


def build_trapezoid_filter(m, S=math.inf):
    """Trapezoid rule with nodes ``theta_j = pi (j - 1/2)/m``, ``j = 1..2m``."""
    spec = FilterSpec("trapezoid", m, S)
    j = np.arange(1, 2 * spec.m + 1)
    thetas = np.pi * (j - 0.5) / spec.m
    omegas = np.full(2 * spec.m, np.pi / spec.m)
    poles, weights = _contour_rule(thetas, omegas, spec.shape)
    poles, weights = _pair_order(poles, weights)
    return RationalFilter(poles, weights, 0.0, spec)


def chebyshev_T(n, x):
    """First-kind Chebyshev polynomial ``T_n`` at real ``x``, via cos/cosh."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inside = ax <= 1.0
    out = np.empty_like(ax)
    out[inside] = np.cos(n * np.arccos(x[inside]))
    with np.errstate(over="ignore"):
        out[~inside] = np.cosh(n * np.arccosh(ax[~inside]))
    neg = (~inside) & (x < 0) & (n % 2 == 1)
    out[neg] = -out[neg]
    return out


def trapezoid_closed_form(z, m, S):
    """Type-1 Chebyshev form ``1/(alpha + beta T_2m((S+1/S) z/2))``.

    ``alpha`` and ``beta`` are formed from ``exp(-4m log S)`` so that very
    large ``S**(2m)`` does not overflow.
    """
    S = float(S)
    if math.isinf(S) or not S > 1.0:
        raise DomainError("closed form requires a finite S > 1")
    if m < 1:
        raise DomainError("m must be positive")
    L = 2 * m * math.log(S)
    q = math.exp(-2.0 * L)
    alpha = (1.0 + q) / (1.0 - q)
    log_beta = math.log(2.0) - L - math.log1p(-q)
    y = 0.5 * (S + 1.0 / S) * np.asarray(z, dtype=float)
    ay = np.abs(y)
    with np.errstate(divide="ignore"):
        arg = np.where(ay > 1.0, 2 * m * np.arccosh(np.maximum(ay, 1.0)), 0.0)
    T = chebyshev_T(2 * m, y)
    # for huge T use log space: beta*T = exp(log_beta + arg - log 2)
    big = arg > 600.0
    bt = np.where(big, 0.0, np.exp(log_beta) * np.where(big, 0.0, T))
    res = np.where(big, 0.0, 1.0 / (alpha + bt))
    if np.any(big):
        lbt = log_beta + arg[big] - math.log(2.0)
        res = np.asarray(res, dtype=float)
        res[big] = np.exp(-lbt) / (1.0 + alpha * np.exp(-lbt))
    return float(res) if np.ndim(z) == 0 else res


# -- Zolotarev ----------------------------------------------------------

def zolotarev_G_from_R(R):
    sr = math.sqrt(R)
    return (sr - 1.0) / (sr + 1.0)


def zolotarev_rho(G):
    """``rho = exp(-pi K(mu')/(2 K(mu)))`` with ``mu = G^2``."""
    if not 0.0 < G < 1.0:
        raise DomainError(f"gap parameter must lie in (0, 1), got {G!r}")
    mu = G * G
    mu_c = math.sqrt((1.0 - mu) * (1.0 + mu))
    # K(mu') / K(mu) = agm(1, mu') / agm(1, mu)
    return math.exp(-0.5 * math.pi * agm(1.0, mu_c) / agm(1.0, mu))


def _log_rho(G):
    mu = G * G
    mu_c = math.sqrt((1.0 - mu) * (1.0 + mu))
    return -0.5 * math.pi * agm(1.0, mu_c) / agm(1.0, mu)


def zolotarev_sign_error(m, R):
    """Exact maximal error of the degree-``m`` sign approximant on ``[1, R]``.

    Uses the theta-function form ``(t3^2 - t4^2)/(t3^2 + t4^2)`` at nome
    ``q = rho^m``; the filter error ``E'`` is half of this.
    """
    G = zolotarev_G_from_R(R)
    q = math.exp(m * _log_rho(G))
    # d = t3 - t4 = 4 sum_{n odd} q^{n^2},  s = t3 + t4 = 2(1 + 2 sum_{n even} q^{n^2})
    d = 0.0
    s_tail = 0.0
    n = 1
    while n < 10_000:
        term = q ** (n * n)
        if n % 2:
            d += term
        else:
            s_tail += term
        if term <= 1e-18 * max(d, 1e-300) and n > 2:
            break
        n += 1
    d *= 4.0
    s = 2.0 * (1.0 + 2.0 * s_tail)
    return 2.0 * d * s / (s * s + d * d)


def _zolotarev_coefficients(m, R):
    """``c_j = sn^2/cn^2`` at ``jK/(2m)``, ``j = 1..2m-1``, indexed from 1."""
    kp = 1.0 / R
    c = np.empty(2 * m)
    c[0] = np.nan
    for j in range(1, m):
        sn, cn, _ = sncndn_at_fraction(j / (2 * m), kp, complement=(2 * m - j) / (2 * m))
        c[j] = (sn / cn) ** 2
    c[m] = R
    for j in range(m + 1, 2 * m):
        # c_j c_{2m-j} = R^2
        c[j] = R / c[2 * m - j] * R
    return c


def _sign_approximant_unnormalized(x, c, m):
    """``x prod(x^2+c_2j) / prod(x^2+c_2j-1)`` as a product of ratios."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    out = x / (x2 + c[1])
    for i in range(1, m):
        out = out * (x2 + c[2 * i]) / (x2 + c[2 * i + 1])
    return out


def golden_refine(f, lo, hi, maximize=False, tol=1e-10):
    """Vectorized golden-section search on the brackets ``[lo, hi]``.

    ``f`` maps an array of abscissae to an array of values.  Returns the
    located abscissae and their values.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    sgn = -1.0 if maximize else 1.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = sgn * f(x1), sgn * f(x2)
    for _ in range(200):
        if np.max(hi - lo) <= tol:
            break
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = np.where(left, hi - invphi * (hi - lo), x2)
        nx2 = np.where(left, x1, lo + invphi * (hi - lo))
        fn = sgn * f(np.where(left, nx1, nx2))
        f1, f2 = np.where(left, fn, f2), np.where(left, f1, fn)
        x1, x2 = nx1, nx2
    cand = np.stack([x1, x2, lo, hi])
    vals = np.stack([f1, f2, sgn * f(lo), sgn * f(hi)])
    best = np.argmin(vals, axis=0)
    cols = np.arange(cand.shape[1])
    return cand[best, cols], sgn * vals[best, cols]


def _normalization_constant(c, m, R, n_grid=4096):
    """``D = 2/(min + max)`` of the unnormalized approximant over ``[1, R]``."""
    logs = np.linspace(0.0, math.log(R), n_grid)
    vals = _sign_approximant_unnormalized(np.exp(logs), c, m)
    f = lambda t: _sign_approximant_unnormalized(np.exp(t), c, m)
    extremes = [vals[0], vals[-1]]
    inner = np.arange(1, n_grid - 1)
    is_max = (vals[inner] >= vals[inner - 1]) & (vals[inner] >= vals[inner + 1])
    is_min = (vals[inner] <= vals[inner - 1]) & (vals[inner] <= vals[inner + 1])
    tol = 1e-10 * max(1.0, logs[-1])
    for mask, maximize in ((is_max, True), (is_min, False)):
        idx = inner[mask]
        if len(idx):
            _, fv = golden_refine(f, logs[idx - 1], logs[idx + 1], maximize, tol)
            extremes.extend(fv.tolist())
    return 2.0 / (min(extremes) + max(extremes))


def _zolotarev_crossings(m, R, E):
    """Points ``xi_k`` in ``[1, R]`` where the sign approximant equals one.

    With ``x = 1/dn(u; kappa)`` the approximant is ``(1-E)/dn(v; lam)`` where
    ``v = 2m K(lam) u / K(kappa)`` and ``lam' = (1-E)/(1+E)``; it equals one
    at ``v = (2j+1 -+ tau) K(lam)`` with ``sd(tau K(lam); lam)`` known.
    """
    lam_c = (1.0 - E) / (1.0 + E)
    target = 0.5 * (1.0 + E) * math.sqrt(2.0 + E)
    K_lam = complete_elliptic_K(kappa_prime=lam_c)
    tau = jacobi_sd_inverse(target, kappa_prime=lam_c) / K_lam
    kp = 1.0 / R
    xi = np.empty(2 * m)
    for j in range(m):
        for k, sgn in enumerate((-1.0, 1.0)):
            num = 2 * j + 1 + sgn * tau
            f, g = num / (2 * m), (2 * m - num) / (2 * m)
            if f <= 0.5:
                xi[2 * j + k] = 1.0 / sncndn_at_fraction(f, kp, complement=g)[2]
            else:
                xi[2 * j + k] = R * sncndn_at_fraction(g, kp, complement=f)[2]
    return xi


def build_zolotarev_filter(m, R):
    """Zolotarev filter: best approximant to the indicator of ``[-G, G]``.

    The type ``(2m-1, 2m)`` sign approximant on ``[-R,-1] u [1,R]`` is
    composed with ``t(z) = sqrt(R)(1+z)/(1-z)`` and shifted to ``(s+1)/2``.
    The normalization ``D`` is found by refined dense sampling; residues are
    those of ``s`` at ``+-i sqrt(c)`` carried through the Moebius map.
    """
    spec = FilterSpec("zolotarev", m, R)
    m, R = spec.m, spec.shape
    sr = math.sqrt(R)
    c = _zolotarev_coefficients(m, R)
    D = _normalization_constant(c, m, R)
    c_odd = c[1::2]
    c_even = c[2::2]

    poles, weights = [], []
    for j, cj in enumerate(c_odd):
        # residue of D x P/Q at x = +-i sqrt(cj); paired ratios avoid overflow
        others = np.delete(c_odd, j)
        ratio = np.prod((c_even - cj) / (others - cj)) if m > 1 else 1.0
        a = 0.5 * D * ratio
        sig = math.sqrt(cj)
        pole = complex((cj - R) / (cj + R), 2.0 * sig * sr / (cj + R))
        w = -a * sr / complex(R - cj, 2.0 * sig * sr)
        poles += [pole, pole.conjugate()]
        weights += [w, w.conjugate()]

    E = zolotarev_sign_error(m, R)
    xi = _zolotarev_crossings(m, R, E)
    factors = ZolotarevFactors(sr, xi, c_odd.copy(), E)
    constant = factors.evaluate(np.array([0.0]), reciprocal=True)[0].real

    poles, weights = _pair_order(poles, weights)
    if np.max(np.abs(np.abs(poles) - 1.0)) > 1e-10:
        raise FilterConstructionError("Zolotarev poles left the unit circle; "
                                      "elliptic functions lost precision")
    return RationalFilter(poles, weights, constant, spec, factors=factors)


def build_filter(kind, m, shape):
    """Dispatch on ``kind`` to the matching constructor."""
    spec = FilterSpec(kind, m, shape)
    if spec.kind == "gauss":
        return build_gauss_filter(spec.m, spec.shape)
    if spec.kind == "trapezoid":
        return build_trapezoid_filter(spec.m, spec.shape)
    return build_zolotarev_filter(spec.m, spec.shape)
