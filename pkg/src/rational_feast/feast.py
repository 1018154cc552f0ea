"""FEAST subspace iteration with a rational filter.

Each iteration applies the filter to the current block,

    Z_k = c Y_{k-1} + sum_j w_j (z_j B - A)^{-1} B Y_{k-1},

then performs Rayleigh-Ritz on ``span(Z_k)``.  The Ritz vectors
``Y_k = Z_k W_k`` are B-orthonormal by construction, so no explicit
orthogonalization step is needed.
"""

import csv
import datetime
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, InsufficientDataError, RankDeficiencyWarning
from .filters import RationalFilter
from .linalg import HermitianPencil, ShiftedFactor, reduced_eig

RESIDUAL_FLOOR = 1e-13
THREADS_ENV = "RATIONAL_FEAST_THREADS"


@dataclass(frozen=True)
class SpectralInterval:
    """Search interval ``[lambda_min, lambda_max]`` and its affine map to ``[-1, 1]``."""

    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        lo, hi = float(self.lambda_min), float(self.lambda_max)
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise DomainError(f"interval needs finite lambda_min < lambda_max, got [{lo}, {hi}]")
        object.__setattr__(self, "lambda_min", lo)
        object.__setattr__(self, "lambda_max", hi)

    @property
    def center(self):
        return 0.5 * (self.lambda_max + self.lambda_min)

    @property
    def half_width(self):
        return 0.5 * (self.lambda_max - self.lambda_min)

    def to_reference(self, lam):
        return (np.asarray(lam) - self.center) / self.half_width

    def to_physical(self, z):
        return self.center + self.half_width * np.asarray(z)

    def contains(self, lam):
        lam = np.asarray(lam)
        return (lam > self.lambda_min) & (lam < self.lambda_max)

    def to_list(self):
        return [self.lambda_min, self.lambda_max]


class PhysicalFilter(NamedTuple):
    """A filter expressed in physical (eigenvalue) coordinates."""

    poles: np.ndarray
    weights: np.ndarray
    constant: complex
    conjugate_pairs: bool

    def __call__(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        out = self.constant + np.sum(self.weights / (self.poles - lam[..., None]), axis=-1)
        return out


def map_filter_to_interval(filt, interval):
    """Map a reference-domain filter onto ``interval``.

    With ``c`` the center and ``h`` the half-width, poles become
    ``c + h z_j`` and weights ``h w_j``, so ``r_phys(lam) = r((lam - c)/h)``.
    """
    c, h = interval.center, interval.half_width
    return PhysicalFilter(c + h * filt.poles, h * filt.weights, filt.constant,
                          filt.conjugate_pairs_reducible)


def resolve_threads(threads=None):
    """Thread count: the environment override, else ``threads``, else all cores."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            threads = int(env)
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise DomainError(f"thread count must be positive, got {threads}")
    return threads


class FactorCache:
    """LU factorizations of ``z B - A`` keyed by shift, reused across iterations."""

    def __init__(self, pencil):
        self.pencil = pencil
        self._factors = {}

    def get(self, z):
        z = complex(z)
        if z not in self._factors:
            self._factors[z] = ShiftedFactor(self.pencil, z)
        return self._factors[z]


def apply_filter(pencil, filt_phys, Y, threads=None, cache=None):
    """``Z = r(M) Y`` with ``M = B^{-1} A``.

    The shifted solves run concurrently; their contributions are summed in
    pole-storage order, so the result does not depend on scheduling.  For a
    real pencil, a real block and conjugate-paired poles only the upper
    poles are solved and ``2 Re`` of their contributions is taken.
    """
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[0] != pencil.N:
        raise DomainError(f"block must be N x n with N = {pencil.N}, got {Y.shape}")
    cache = cache if cache is not None else FactorCache(pencil)
    BY = pencil.matvec_B(Y)
    economy = (pencil.real_symmetric and np.isrealobj(Y) and filt_phys.conjugate_pairs
               and abs(complex(filt_phys.constant).imag) == 0.0)
    if economy:
        poles, weights = filt_phys.poles[0::2], filt_phys.weights[0::2]
    else:
        poles, weights = filt_phys.poles, filt_phys.weights

    def solve(z):
        return cache.get(z).solve(BY)

    nthreads = min(resolve_threads(threads), len(poles))
    if nthreads > 1:
        # factor sequentially so the cache is never written concurrently
        for z in poles:
            cache.get(z)
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(solve, poles))
    else:
        parts = [solve(z) for z in poles]

    if economy:
        Z = complex(filt_phys.constant).real * Y.astype(float)
        for w, X in zip(weights, parts):
            Z = Z + 2.0 * (w * X).real
        return Z
    Z = filt_phys.constant * Y.astype(complex)
    for w, X in zip(weights, parts):
        Z = Z + w * X
    return Z


@dataclass(frozen=True)
class FeastConfig:
    filter: RationalFilter
    n: int
    tol: float = 1e-12
    max_iter: int = 50
    seed: int = 0
    threads: int = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"subspace size n must be a positive integer, got {self.n!r}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise DomainError(f"max_iter must be a positive integer, got {self.max_iter!r}")


@dataclass
class IterationRecord:
    k: int
    ritz_values: np.ndarray
    residuals: np.ndarray
    count_inside: int
    max_residual_inside: float


@dataclass
class FeastReport:
    """Outcome of :func:`feast_solve`.

    ``eigenvalues``/``eigenvectors``/``residuals`` hold the Ritz pairs
    inside the interval at the last iteration.  ``converged`` is False
    when ``max_iter`` was reached first.
    """

    interval: SpectralInterval
    records: list
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    converged: bool
    rank_deficient: bool = False
    subspaces: list = field(default=None, repr=False)

    @property
    def iterations(self):
        return len(self.records)

    @property
    def observed_factor(self):
        try:
            return observed_contraction(self)
        except InsufficientDataError:
            return None

    def to_dict(self):
        return {
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "interval": self.interval.to_list(),
            "converged": self.converged,
            "iterations": self.iterations,
            "rank_deficient": self.rank_deficient,
            "observed_factor": self.observed_factor,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "records": [
                {
                    "k": r.k,
                    "count_inside": r.count_inside,
                    "max_residual_inside": _json_float(r.max_residual_inside),
                    "ritz_values": [float(x) for x in r.ritz_values],
                    "residuals": [float(x) for x in r.residuals],
                }
                for r in self.records
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "count_inside", "max_residual"])
        for r in self.records:
            writer.writerow([r.k, r.count_inside, _json_float(r.max_residual_inside)])
        return buf.getvalue()


def _json_float(x):
    return None if x is None or not math.isfinite(x) else float(x)


def feast_solve(pencil, interval, config, Y0=None, keep_subspaces=False):
    """Run FEAST on ``pencil`` for eigenvalues in ``interval``.

    Parameters
    ----------
    pencil : HermitianPencil
    interval : SpectralInterval
    config : FeastConfig
        The filter is given in reference coordinates and mapped onto
        ``interval``.
    Y0 : ndarray, optional
        Starting block; seeded standard-normal entries by default.
    keep_subspaces : bool
        Store every ``Y_k`` in ``report.subspaces``.

    Notes
    -----
    Residuals are ``||A y - theta B y|| / max(|lambda_min|, |lambda_max|)``
    for ``B``-normalized ``y``.  Iteration stops once at least one Ritz value
    lies strictly inside the interval and all of those have residual below
    ``tol``, or after two consecutive iterations with none inside.
    """
    if not isinstance(pencil, HermitianPencil):
        pencil = HermitianPencil(pencil)
    N, n = pencil.N, config.n
    if n >= N:
        raise DomainError(f"subspace size n = {n} must be less than N = {N}")
    if Y0 is None:
        Y = np.random.default_rng(config.seed).standard_normal((N, n))
    else:
        Y = np.asarray(Y0)
        if Y.shape != (N, n):
            raise DomainError(f"Y0 must have shape {(N, n)}, got {Y.shape}")
    pf = map_filter_to_interval(config.filter, interval)
    scale = max(abs(interval.lambda_min), abs(interval.lambda_max))
    cache = FactorCache(pencil)
    records, subspaces = [], [] if keep_subspaces else None
    rank_deficient = False
    converged = False
    theta = res = inside = None
    for k in range(1, config.max_iter + 1):
        Z = apply_filter(pencil, pf, Y, threads=config.threads, cache=cache)
        AZ = pencil.matvec_A(Z)
        BZ = pencil.matvec_B(Z)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RankDeficiencyWarning)
            theta, W = reduced_eig(Z.conj().T @ AZ, Z.conj().T @ BZ)
        for w in caught:
            rank_deficient = True
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
        Y = Z @ W
        R = AZ @ W - (BZ @ W) * theta
        res = np.linalg.norm(R, axis=0) / scale
        inside = interval.contains(theta)
        count = int(inside.sum())
        max_in = float(np.max(res[inside])) if count else math.nan
        records.append(IterationRecord(k, theta.copy(), res.copy(), count, max_in))
        if keep_subspaces:
            subspaces.append(Y.copy())
        if count and max_in < config.tol:
            converged = True
            break
        if count == 0 and k > 1 and records[-2].count_inside == 0:
            converged = True
            break
    return FeastReport(interval, records, theta[inside], Y[:, inside], res[inside],
                       converged, rank_deficient, subspaces)


def contraction_from_residuals(residuals, counts=None, floor=RESIDUAL_FLOOR):
    """Geometric mean of successive residual ratios after the count stabilizes.

    The window starts at the first iteration from which ``counts`` stays at
    its final value.  A ratio is skipped when its earlier residual is
    already below ``floor``, i.e. the iteration had hit the solver floor.
    """
    residuals = [float(r) for r in residuals]
    start = 0
    if counts is not None:
        counts = list(counts)
        if len(counts) != len(residuals):
            raise DomainError("counts and residuals must have equal length")
        start = len(counts) - 1
        while start > 0 and counts[start - 1] == counts[-1]:
            start -= 1
    window = residuals[start:]
    logs = [math.log(b / a) for a, b in zip(window[:-1], window[1:])
            if a >= floor and a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)]
    if not logs:
        raise InsufficientDataError(
            "need at least two iterations above the residual floor after the count stabilizes")
    return math.exp(sum(logs) / len(logs))


def observed_contraction(report, floor=RESIDUAL_FLOOR):
    """Observed per-iteration residual contraction of a :class:`FeastReport`."""
    return contraction_from_residuals([r.max_residual_inside for r in report.records],
                                      [r.count_inside for r in report.records], floor)


@dataclass
class Theorem22Result:
    holds: bool
    alpha: np.ndarray
    errors: np.ndarray
    bounds: np.ndarray
    order: np.ndarray


def b_projector_error(pencil, Y, X):
    """``||(I - P) x_j||_B`` for the B-orthogonal projector ``P`` onto ``span(Y)``."""
    A, B = pencil.dense()
    Q = _b_orthonormal(B, Y)
    E = X - Q @ (Q.conj().T @ (B @ X))
    return np.sqrt(np.maximum(np.real(np.sum(E.conj() * (B @ E), axis=0)), 0.0))


def _b_orthonormal(B, Y):
    G = Y.conj().T @ B @ Y
    L = sla.cholesky(0.5 * (G + G.conj().T), lower=True)
    return sla.solve_triangular(L, Y.conj().T, lower=True).conj().T


def theorem22_check(pencil, filt, interval, n, iterations=5, Y0=None, seed=0, slack=1e-10):
    """Check the subspace-iteration error bound on a small dense pencil.

    With eigenpairs ordered by decreasing ``|r(lambda)|``, ``X_n`` the first
    ``n`` eigenvectors and ``X'`` the rest, ``alpha_j`` is the 2-norm of
    column ``j`` of ``(X'^H B Y0)(X_n^H B Y0)^{-1}``, and for ``k <= iterations``

        ||(I - P_k) x_j||_B <= alpha_j |r(lambda_{n+1}) / r(lambda_j)|^k

    must hold for every ``j <= n``, up to an absolute ``slack`` for
    rounding.  Returns a :class:`Theorem22Result` with ``errors`` and
    ``bounds`` of shape ``(iterations, n)``.
    """
    if not isinstance(pencil, HermitianPencil):
        pencil = HermitianPencil(pencil)
    A, B = pencil.dense()
    lam, X = sla.eigh(A, B)
    pf = map_filter_to_interval(filt, interval)
    rabs = np.abs(pf(lam))
    order = np.argsort(-rabs, kind="stable")
    lam, X, rabs = lam[order], X[:, order], rabs[order]
    if Y0 is None:
        Y0 = np.random.default_rng(seed).standard_normal((pencil.N, n))
    C = X[:, :n].conj().T @ B @ Y0
    if np.linalg.cond(C) > 1e12:
        raise DomainError("X_n^H B Y0 is numerically singular; choose another seed")
    Wm = (X[:, n:].conj().T @ B @ Y0) @ np.linalg.inv(C)
    alpha = np.linalg.norm(Wm, axis=0)
    config = FeastConfig(filt, n, tol=1e-300, max_iter=iterations, threads=1)
    report = feast_solve(pencil, interval, config, Y0=Y0, keep_subspaces=True)
    ratio = rabs[n] / rabs[:n]
    errors = np.array([b_projector_error(pencil, Yk, X[:, :n]) for Yk in report.subspaces])
    ks = np.arange(1, len(report.subspaces) + 1)[:, None]
    bounds = alpha * ratio ** ks
    holds = bool(np.all(errors <= bounds + slack))
    return Theorem22Result(holds, alpha, errors, bounds, order)


def lemma21_angles(pencil, filt, interval, n, iterations=3, Y0=None, seed=0):
    """Largest principal angle between ``span(Y_k)`` and ``span(r(M)^k Y0)``, per ``k``.

    ``r(M)^k Y0`` is formed from the full eigendecomposition.
    """
    if not isinstance(pencil, HermitianPencil):
        pencil = HermitianPencil(pencil)
    A, B = pencil.dense()
    lam, X = sla.eigh(A, B)
    pf = map_filter_to_interval(filt, interval)
    r = pf(lam)
    if Y0 is None:
        Y0 = np.random.default_rng(seed).standard_normal((pencil.N, n))
    config = FeastConfig(filt, n, tol=1e-300, max_iter=iterations, threads=1)
    report = feast_solve(pencil, interval, config, Y0=Y0, keep_subspaces=True)
    coeff = X.conj().T @ B @ Y0
    angles = []
    for k, Yk in enumerate(report.subspaces, start=1):
        Pk = X @ (r[:, None] ** k * coeff)
        angles.append(float(np.max(sla.subspace_angles(Yk, Pk))))
    return np.array(angles)
