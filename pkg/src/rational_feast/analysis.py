"""Convergence-factor analytics for rational filters.

The worst-case factor of a filter ``r`` for gap parameter ``G`` is

    max_{|z| >= 1/G} |r(z)|  /  min_{|z| <= G} |r(z)|

over real ``z``.  It bounds the per-iteration contraction of subspace
iteration with ``r(M)`` when the wanted eigenvalues lie in ``[-G, G]`` and
the first uncaptured one lies outside ``(-1/G, 1/G)``.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .elliptic import complete_elliptic_K
from .errors import DomainError
from .filters import (build_filter, build_gauss_filter, build_trapezoid_filter,
                      build_zolotarev_filter, golden_refine, zolotarev_G_from_R,
                      zolotarev_rho)

N_SAMPLES = 4096
REFINE_TOL = 1e-10
S_MIN = 1.01
S_MAX = 100.0
N_STARTS = 8

TABLE_G = (0.98, 0.998, 0.9998, 0.99998)
TABLE_M = (3, 6, 9, 12, 15, 30, 40)
TABLE_COLUMNS = ("G", "m", "trap_inf", "trap_nat", "trap_opt", "trap_opt_S",
                 "gauss_inf", "gauss_opt", "gauss_opt_S", "zolotarev")


@dataclass(frozen=True)
class GapParameters:
    G: float
    G_eff: float = None

    def __post_init__(self):
        _check_gap(self.G)
        if self.G_eff is not None and self.G_eff < 1.0 / self.G * (1 - 1e-15):
            raise DomainError("G_eff must be at least 1/G")


@dataclass(frozen=True)
class FactorReport:
    factor_worst: float
    shape_used: float
    E_prime_bounds: tuple = None


def _check_gap(G):
    if not 0.0 < G < 1.0:
        raise DomainError(f"gap parameter must lie in (0, 1), got {G!r}")


def _extremum(fun, lo, hi, maximize, n=N_SAMPLES, n_refine=6):
    """Extremum of a real function on ``[lo, hi]``: dense samples + golden."""
    x = np.linspace(lo, hi, n)
    v = fun(x)
    if maximize:
        best = np.max(v)
        cand = np.flatnonzero((v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:])) + 1
    else:
        best = np.min(v)
        cand = np.flatnonzero((v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:])) + 1
    if len(cand):
        order = np.argsort(v[cand])
        cand = cand[order[::-1]] if maximize else cand[order]
        cand = cand[:n_refine]
        _, fv = golden_refine(fun, x[cand - 1], x[cand + 1], maximize,
                              REFINE_TOL * max(1.0, hi - lo))
        best = max(best, np.max(fv)) if maximize else min(best, np.min(fv))
    return float(best)


def _real_axis_abs(filt, reciprocal):
    """Vectorized ``|r(x)|`` (or ``|r(1/u)|``) for real arguments.

    A filter with conjugate pole pairs and real constant is real on the
    real axis, so only the upper poles are summed, in real arithmetic.
    """
    if filt.factors is not None:
        ev = filt.evaluate_reciprocal if reciprocal else filt.evaluate
        return lambda x: np.abs(ev(x))
    if not filt.conjugate_pairs_reducible:
        ev = filt.evaluate_reciprocal if reciprocal else filt.evaluate
        return lambda x: np.abs(ev(x))
    pr, pi = filt.poles[0::2].real, filt.poles[0::2].imag
    wr, wi = filt.weights[0::2].real, filt.weights[0::2].imag
    c = filt.constant.real

    def direct(x):
        d = pr - x[:, None]
        return np.abs(c + 2.0 * np.sum((wr * d + wi * pi) / (d * d + pi * pi), axis=1))

    def recip(u):
        u = u[:, None]
        d = pr * u - 1.0
        e = pi * u
        return np.abs(c + 2.0 * np.sum(u * (wr * d + wi * e) / (d * d + e * e), axis=1))

    return recip if reciprocal else direct


def _interior_min(filt, G):
    return _extremum(_real_axis_abs(filt, False), -G, G, maximize=False)


def _exterior_max(filt, bound):
    # z in (-inf, -1/bound] u [1/bound, inf) is u = 1/z in [-bound, bound]
    return _extremum(_real_axis_abs(filt, True), -bound, bound, maximize=True)


def _local_maxima(fun, lo, hi, n):
    x = np.linspace(lo, hi, n)
    v = fun(x)
    found = []
    if v[0] >= v[1]:
        found.append(v[0])
    if v[-1] >= v[-2]:
        found.append(v[-1])
    idx = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
    if len(idx):
        _, fv = golden_refine(fun, x[idx - 1], x[idx + 1], True, REFINE_TOL)
        found.extend(fv.tolist())
    return np.array(found)


def equioscillation_extrema(filt, G, n=20001):
    """Local maxima of the indicator error ``|1_[-G,G] - r|``.

    The interior ``[-G, G]`` is scanned in ``z``, the exterior
    ``|z| >= 1/G`` in ``u = 1/z`` so that ``z = +-inf`` is included.
    Interval endpoints count when they are maxima.  Returns
    ``(interior, exterior)`` arrays of extremal magnitudes; for a
    Zolotarev filter both hold ``2m + 1`` equal values.
    """
    _check_gap(G)
    if filt.factors is not None:
        inner = lambda x: np.abs(1.0 - filt.evaluate(x).real)
    else:
        inner = lambda x: np.abs(1.0 - filt.evaluate(x))
    outer = _real_axis_abs(filt, True)
    return _local_maxima(inner, -G, G, n), _local_maxima(outer, -G, G, n)


def worst_case_factor(filt, G):
    """Exterior maximum of ``|r|`` over interior minimum, for gap ``G``."""
    _check_gap(G)
    lower = _interior_min(filt, G)
    if lower < 1e-300:
        raise DomainError("filter vanishes on [-G, G]; factor undefined")
    return _exterior_max(filt, G) / lower


def effective_factor(filt, G, G_eff):
    """As :func:`worst_case_factor` with the exterior region ``|z| >= G_eff``."""
    _check_gap(G)
    if G_eff < (1.0 / G) * (1 - 1e-15):
        raise DomainError("G_eff must be at least 1/G")
    lower = _interior_min(filt, G)
    if lower < 1e-300:
        raise DomainError("filter vanishes on [-G, G]; factor undefined")
    return _exterior_max(filt, 1.0 / G_eff) / lower


def natural_S(G):
    """Root ``S > 1`` of ``2/(S + 1/S) = G``."""
    _check_gap(G)
    return (1.0 + math.sqrt((1.0 - G) * (1.0 + G))) / G


def zolotarev_R_from_G(G):
    _check_gap(G)
    return ((1.0 + G) / (1.0 - G)) ** 2


def zolotarev_error_bounds(m, G):
    """Lower and upper bounds ``2 rho^m/(1+rho^m)`` and ``2 rho^m`` on ``E'``."""
    _check_gap(G)
    rm = zolotarev_rho(G) ** m
    return 2 * rm / (1 + rm), 2 * rm


def zolotarev_asymptotic_error(m, G):
    """Elementary estimate ``exp(-m pi^2 / (2 log(16/(1-G^4))))`` of ``E'``."""
    one_minus_g4 = (1 - G) * (1 + G) * (1 + G * G)
    return math.exp(-m * math.pi ** 2 / (2 * math.log(16.0 / one_minus_g4)))


def _shape_builder(kind):
    if kind == "gauss":
        return build_gauss_filter
    if kind == "trapezoid":
        return build_trapezoid_filter
    raise DomainError(f"shape optimization applies to gauss/trapezoid, not {kind!r}")


def optimize_S(kind, m, G, S_min=S_MIN, S_max=S_MAX, n_starts=N_STARTS, tol=1e-3):
    """Minimize the worst-case factor over ``S`` in ``[S_min, S_max]`` and ``S = inf``.

    Golden-section search in ``log(S - 1)`` on ``n_starts`` equal
    sub-brackets; the best bracket minimum, bracket endpoint, the natural
    shape :func:`natural_S` (when in range) or ``inf`` wins.  Returns
    ``(S, factor)``.
    """
    _check_gap(G)
    build = _shape_builder(kind)
    cache = {}

    def factor_at(t):
        key = float(t)
        if key not in cache:
            cache[key] = worst_case_factor(build(m, 1.0 + math.exp(key)), G)
        return cache[key]

    fvec = lambda ts: np.array([factor_at(t) for t in ts])
    edges = np.linspace(math.log(S_min - 1.0), math.log(S_max - 1.0), n_starts + 1)
    candidates = [(factor_at(t), 1.0 + math.exp(t)) for t in edges]
    for lo, hi in zip(edges[:-1], edges[1:]):
        t, f = golden_refine(fvec, [lo], [hi], maximize=False, tol=tol)
        candidates.append((float(f[0]), 1.0 + math.exp(float(t[0]))))
    S_nat = natural_S(G)
    if S_min <= S_nat <= S_max:
        candidates.append((factor_at(math.log(S_nat - 1.0)), S_nat))
    candidates.append((worst_case_factor(build(m, math.inf), G), math.inf))
    f, S = min(candidates)
    return S, f


def factor_report(filt, G):
    """Worst-case factor with, for Zolotarev filters, the error bounds."""
    bounds = None
    if filt.kind == "zolotarev":
        bounds = zolotarev_error_bounds(filt.m, G)
    return FactorReport(worst_case_factor(filt, G), filt.spec.shape, bounds)


def round_sig(x, digits=3):
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits - 1}e}")


def table_row(G, m):
    """One row of the factor table, columns as :data:`TABLE_COLUMNS`."""
    S_nat = natural_S(G)
    trap_opt_S, trap_opt = optimize_S("trapezoid", m, G)
    gauss_opt_S, gauss_opt = optimize_S("gauss", m, G)
    return {
        "G": G,
        "m": m,
        "trap_inf": worst_case_factor(build_trapezoid_filter(m, math.inf), G),
        "trap_nat": worst_case_factor(build_trapezoid_filter(m, S_nat), G),
        "trap_opt": trap_opt,
        "trap_opt_S": trap_opt_S,
        "gauss_inf": worst_case_factor(build_gauss_filter(m, math.inf), G),
        "gauss_opt": gauss_opt,
        "gauss_opt_S": gauss_opt_S,
        "zolotarev": worst_case_factor(build_zolotarev_filter(m, zolotarev_R_from_G(G)), G),
    }


def table_one(G_list=TABLE_G, m_list=TABLE_M, workers=None):
    """Rows for every ``(G, m)`` pair, ``G`` outermost, in input order."""
    cells = [(G, m) for G in G_list for m in m_list]
    if not cells:
        raise DomainError("factor table needs at least one G and one m")
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda gm: table_row(*gm), cells))
    return [table_row(G, m) for G, m in cells]


def _fmt(value, key):
    if key == "m":
        return str(value)
    if key == "G":
        return repr(value)
    if math.isinf(value):
        return "inf"
    if key.endswith("_S"):
        return f"{value:.3g}"
    return f"{value:.2e}"


def table_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[k], k) for k in TABLE_COLUMNS])
    return buf.getvalue()


def table_to_json(rows):
    def enc(v):
        return "inf" if isinstance(v, float) and math.isinf(v) else v
    return json.dumps([{k: enc(row[k]) for k in TABLE_COLUMNS} for row in rows], indent=1)


__all__ = [
    "GapParameters", "FactorReport", "worst_case_factor", "effective_factor",
    "natural_S", "optimize_S", "zolotarev_R_from_G", "zolotarev_G_from_R",
    "zolotarev_error_bounds", "zolotarev_asymptotic_error", "factor_report",
    "table_row", "table_one", "table_to_csv", "table_to_json", "complete_elliptic_K",
    "build_filter", "equioscillation_extrema",
]
