"""Partitioning a search region among FEAST instances.

Every part receives the same Zolotarev prototype mapped onto its own
subinterval.  Because the worst-case factor only depends on the
reference-domain filter, all parts share one predicted convergence factor,
and with enough subspace room they need similar iteration counts no matter
how eigenvalues cluster near part boundaries.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .analysis import worst_case_factor
from .errors import DomainError
from .feast import FeastConfig, SpectralInterval, feast_solve, resolve_threads
from .filters import build_zolotarev_filter, zolotarev_G_from_R

IMPRACTICAL_ITERATIONS = 1000


def suggested_subspace_size(count):
    """Heuristic subspace size ``max(count + 2, ceil(1.1 count))``."""
    if count < 0:
        raise DomainError(f"eigenvalue count must be non-negative, got {count}")
    return max(count + 2, -(-11 * count // 10))


@dataclass(frozen=True)
class PartPlan:
    interval: SpectralInterval
    m: int
    R: float
    predicted_factor: float
    estimated_count: int
    suggested_n: int

    def to_dict(self):
        return {
            "interval": self.interval.to_list(),
            "m": self.m,
            "R": self.R,
            "predicted_factor": self.predicted_factor,
            "estimated_count": self.estimated_count,
            "suggested_n": self.suggested_n,
        }


@dataclass(frozen=True)
class IntervalPlan:
    global_interval: SpectralInterval
    parts: tuple
    overlap: float = 0.0

    @property
    def filter(self):
        p = self.parts[0]
        return build_zolotarev_filter(p.m, p.R)

    def to_dict(self):
        return {
            "global": self.global_interval.to_list(),
            "overlap": self.overlap,
            "parts": [p.to_dict() for p in self.parts],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        parts = tuple(
            PartPlan(SpectralInterval(*p["interval"]), int(p["m"]), float(p["R"]),
                     float(p["predicted_factor"]), int(p["estimated_count"]),
                     int(p["suggested_n"]))
            for p in data["parts"])
        return cls(SpectralInterval(*data["global"]), parts, float(data.get("overlap", 0.0)))


def _breakpoints(global_interval, k_parts, breakpoints):
    lo, hi = global_interval.lambda_min, global_interval.lambda_max
    if breakpoints is None:
        return np.linspace(lo, hi, k_parts + 1)
    inner = np.asarray(breakpoints, dtype=float)
    if inner.shape != (k_parts - 1,):
        raise DomainError(f"need {k_parts - 1} interior breakpoints, got {inner.size}")
    edges = np.concatenate([[lo], inner, [hi]])
    if np.any(np.diff(edges) <= 0):
        raise DomainError("breakpoints must increase strictly inside the global interval")
    return edges


def plan_partition(global_interval, k_parts, m, R, counts, breakpoints=None, overlap=0.0):
    """Split ``global_interval`` into ``k_parts`` subintervals with one Zolotarev filter.

    Parameters
    ----------
    global_interval : SpectralInterval
    k_parts : int
    m, R : int, float
        Zolotarev degree and shape; the gap parameter is ``G(R)``.
    counts : sequence of int
        User estimates of the eigenvalue count in each part.
    breakpoints : sequence of float, optional
        ``k_parts - 1`` interior edges; equal widths by default.
    overlap : float
        Each interior edge is pushed outward by this fraction of the
        adjacent part's width, so neighbouring parts overlap.
    """
    if int(k_parts) != k_parts or k_parts < 1:
        raise DomainError(f"k_parts must be a positive integer, got {k_parts!r}")
    counts = list(counts)
    if len(counts) != k_parts:
        raise DomainError(f"expected {k_parts} counts, got {len(counts)}")
    if any(int(c) != c or c < 0 for c in counts):
        raise DomainError("counts must be non-negative integers")
    if not 0.0 <= overlap < 0.5:
        raise DomainError(f"overlap fraction must lie in [0, 0.5), got {overlap!r}")
    filt = build_zolotarev_filter(m, R)
    factor = worst_case_factor(filt, zolotarev_G_from_R(R))
    edges = _breakpoints(global_interval, k_parts, breakpoints)
    parts = []
    for i in range(k_parts):
        lo, hi = edges[i], edges[i + 1]
        width = hi - lo
        if i > 0:
            lo -= overlap * width
        if i < k_parts - 1:
            hi += overlap * width
        parts.append(PartPlan(SpectralInterval(lo, hi), m, float(R), factor,
                              int(counts[i]), suggested_subspace_size(int(counts[i]))))
    return IntervalPlan(global_interval, tuple(parts), float(overlap))


class IterationPrediction(NamedTuple):
    iterations: int
    convergent: bool
    practical: bool


def predicted_iterations(predicted_factor, start_residual, tol):
    """Iterations to reduce ``start_residual`` below ``tol`` at a fixed contraction.

    ``ceil(log(tol/start)/log(factor))``.  A factor of one or more never
    converges (``iterations`` is None); more than
    :data:`IMPRACTICAL_ITERATIONS` is flagged impractical.
    """
    if not (start_residual > 0 and tol > 0):
        raise DomainError("start_residual and tol must be positive")
    if predicted_factor <= 0:
        raise DomainError("predicted_factor must be positive")
    if predicted_factor >= 1:
        return IterationPrediction(None, False, False)
    if start_residual <= tol:
        return IterationPrediction(0, True, True)
    x = math.log(tol / start_residual) / math.log(predicted_factor)
    k = math.ceil(x - 1e-9 * x)
    return IterationPrediction(k, True, k <= IMPRACTICAL_ITERATIONS)


@dataclass
class PlanSolution:
    reports: list
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    owner: np.ndarray

    @property
    def iterations(self):
        return [r.iterations for r in self.reports]


def solve_plan(pencil, plan, filt=None, tol=1e-12, max_iter=100, seed=0, threads=None,
               n_policy=None):
    """Run one FEAST instance per part and merge the eigenpairs.

    ``filt`` overrides the plan's Zolotarev filter (for comparisons).
    ``n_policy`` maps a part to its subspace size; the plan's
    ``suggested_n`` by default.  An eigenvalue found by several
    overlapping parts is kept from the part whose center is nearest.
    """
    filt = filt if filt is not None else plan.filter
    n_policy = n_policy or (lambda part: part.suggested_n)

    def run(part):
        cfg = FeastConfig(filt, n_policy(part), tol=tol, max_iter=max_iter, seed=seed,
                          threads=1)
        return feast_solve(pencil, part.interval, cfg)

    nthreads = min(resolve_threads(threads), len(plan.parts))
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            reports = list(pool.map(run, plan.parts))
    else:
        reports = [run(p) for p in plan.parts]

    centers = np.array([p.interval.center for p in plan.parts])
    vals, vecs, owner = [], [], []
    for i, rep in enumerate(reports):
        for lam, vec in zip(rep.eigenvalues, rep.eigenvectors.T):
            if int(np.argmin(np.abs(centers - lam))) == i:
                vals.append(lam)
                vecs.append(vec)
                owner.append(i)
    order = np.argsort(vals)
    N = pencil.N
    V = np.array(vecs).T[:, order] if vecs else np.zeros((N, 0))
    return PlanSolution(reports, np.array(vals)[order], V, np.array(owner, dtype=int)[order])
