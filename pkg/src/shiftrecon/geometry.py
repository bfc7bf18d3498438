"""Geometry of finite sampling sets on ``[0, R]``.

Covering numbers, the zero-count bound ``M(N, lam, R) = N^2 - 1 + floor(lam R / pi)``,
the metric span ``omega_{N,lam}(S)``, central density, the sample gap ``rho``, and a
grid search for a rescaling step ``s0`` that keeps the Prony nodes apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError

# differences closer than this (times max(1, R)) are treated as equal
DIFF_MERGE_RTOL = 1e-11
# values of lam*R/pi within this relative distance of an integer round up to it
FLOOR_RTOL = 1e-9


@dataclass(frozen=True)
class SamplingSet:
    points: NDArray[np.float64]

    def __post_init__(self) -> None:
        pts = np.atleast_1d(np.asarray(self.points, dtype=np.float64)).copy()
        if pts.ndim != 1 or pts.size == 0:
            raise InvalidArgumentError("a sampling set needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("sampling points must be finite")
        if pts[0] < 0:
            raise InvalidArgumentError("sampling points must lie in [0, R]")
        if np.any(np.diff(pts) <= 0):
            raise InvalidArgumentError("sampling points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def R(self) -> float:
        return float(self.points[-1])

    @property
    def n(self) -> int:
        return int(self.points.size)

    def __len__(self) -> int:
        return self.n

    @classmethod
    def equidistant(cls, R: float, m: int) -> "SamplingSet":
        """``m + 1`` points ``k R / m`` for ``k = 0..m``."""
        if m < 1:
            raise InvalidArgumentError("need m >= 1")
        return cls(np.arange(m + 1) * (R / m))

    @classmethod
    def read(cls, path) -> "SamplingSet":
        values = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    values.append(float(line))
        return cls(np.array(values))


def _as_set(S) -> SamplingSet:
    return S if isinstance(S, SamplingSet) else SamplingSet(S)


@dataclass(frozen=True)
class SpanReport:
    omega: float
    M_bound: int
    argmax_epsilon: float
    covering_at_argmax: int


def covering_number(S, epsilon: float, *, left_limit: bool = False, atol: float = 0.0) -> int:
    """Minimal number of closed length-``epsilon`` intervals covering ``S``.

    Greedy sweep: each interval starts at the leftmost uncovered point. With
    ``left_limit=True`` the count for lengths just below ``epsilon`` is returned,
    i.e. a point at distance exactly ``epsilon`` (up to ``atol``) is not covered.
    """
    if not epsilon > 0:
        raise InvalidArgumentError("epsilon must be positive")
    pts = _as_set(S).points
    side = "left" if left_limit else "right"
    reach = epsilon - atol if left_limit else epsilon
    count, i, n = 0, 0, pts.size
    while i < n:
        count += 1
        i = int(np.searchsorted(pts, pts[i] + reach, side=side))
    return count


def langer_bound(N: int, lam: float, R: float) -> int:
    """``N^2 - 1 + floor(lam R / pi)``; near-integers round up before the floor."""
    if N < 1 or lam < 0 or R < 0:
        raise InvalidArgumentError("need N >= 1, lam >= 0, R >= 0")
    x = lam * R / math.pi
    k = math.floor(x)
    if (k + 1) - x <= FLOOR_RTOL * max(1.0, x):
        k += 1
    return N * N - 1 + int(k)


def pairwise_differences(points: ArrayLike, merge_tol: float = 0.0) -> NDArray[np.float64]:
    """Sorted distinct positive differences, merging values within ``merge_tol``."""
    pts = np.asarray(points, dtype=np.float64)
    i, j = np.triu_indices(pts.size, k=1)
    d = np.sort(pts[j] - pts[i])
    if d.size == 0:
        return d
    keep = np.ones(d.size, dtype=bool)
    # smallest member represents each cluster
    keep[1:] = np.diff(d) > merge_tol
    return d[keep]


def metric_span(S, N: int, lam: float) -> SpanReport:
    """The ``(N, lam)``-metric span ``max(0, sup_eps eps [M(eps, S) - M(N, lam, R)])``.

    ``M(eps, S)`` is a nonincreasing step function that is constant on
    ``[d_i, d_{i+1})`` where ``d_i`` are the sorted pairwise differences, so the
    supremum is attained as ``eps`` tends to some ``d_i`` from the left.  If the
    zero-count bound is ``0`` the span is infinite (``eps -> inf`` with one interval).
    """
    S = _as_set(S)
    R = S.R
    M0 = langer_bound(N, lam, R)
    if M0 == 0:
        return SpanReport(math.inf, 0, math.inf, 1)
    n = S.n
    if n <= M0:
        return SpanReport(0.0, M0, 0.0, n)
    tol = DIFF_MERGE_RTOL * max(1.0, R)
    cands = pairwise_differences(S.points, tol)

    def count(d: float) -> int:
        return covering_number(S, d, left_limit=True, atol=tol)

    # largest candidate index whose left-limit count still exceeds M0
    lo, hi = 0, cands.size - 1
    if count(cands[0]) <= M0:  # pragma: no cover - first candidate always gives n
        return SpanReport(0.0, M0, 0.0, n)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if count(cands[mid]) > M0:
            lo = mid
        else:
            hi = mid - 1

    best, best_eps, best_cov = 0.0, 0.0, n
    for idx in range(lo, -1, -1):
        d = float(cands[idx])
        if d * (n - M0) <= best:
            break
        c = count(d)
        val = d * (c - M0)
        if val > best:
            best, best_eps, best_cov = val, d, c
    return SpanReport(best, M0, best_eps, best_cov)


def equidistant_span(m: int, R: float, N: int, lam: float) -> float:
    """Closed form of the span for ``m + 1`` equidistant points on ``[0, R]``."""
    if m < 1:
        raise InvalidArgumentError("need at least two points (m >= 1)")
    M0 = langer_bound(N, lam, R)
    if M0 == 0:
        return math.inf
    if m + 1 <= M0:
        return 0.0
    return (R / m) * (m + 1 - M0)


def recommend_points(N: int, lam: float, R: float, factors: Sequence[int] = (1, 2, 3, 4, 5)) -> list[tuple[int, int, float]]:
    """Span of equidistant sets with ``m = K * M`` intervals for each factor ``K``.

    Returns ``(K, m, omega)`` triples. The span grows from ``R / M`` at ``K = 1`` to
    about ``R / 2`` at ``K = 2`` and saturates near ``R``, which makes ``K`` between
    2 and 5 the useful range.
    """
    M0 = langer_bound(N, lam, R)
    if M0 == 0:
        raise InvalidArgumentError("zero-count bound is 0; any single point certifies")
    return [(k, k * M0, equidistant_span(k * M0, R, N, lam)) for k in factors]


def central_density(S, R_grid: ArrayLike) -> NDArray[np.float64]:
    """``|S ∩ [0, R]| / R`` for each ``R`` in ``R_grid``."""
    pts = _as_set(S).points
    Rs = np.atleast_1d(np.asarray(R_grid, dtype=np.float64))
    if np.any(Rs <= 0) or np.any(np.diff(Rs) < 0):
        raise InvalidArgumentError("R_grid must be positive and ascending")
    return np.searchsorted(pts, Rs, side="right") / Rs


def sample_gap(N: int, lam: float, R: float, delta_freq: float) -> float:
    """Guaranteed node separation ``rho`` on the unit circle after rescaling."""
    if lam * R <= math.pi * N:
        return 3.0 * R * delta_freq / (2.0 * math.pi * N * N * (N + 1))
    return 2.0 * delta_freq / (lam * N * (N + 1))


def separation_floor(N: int, lam: float, R: float, delta_freq: float) -> float:
    """Angle separation ``h_bar`` that some ``s0`` in ``(0, R/(2N)]`` achieves."""
    if lam * R <= math.pi * N:
        return R * delta_freq / (2.0 * N * N * (N + 1))
    return 2.0 * math.pi * delta_freq / (3.0 * lam * N * (N + 1))


def frequency_pair_gaps(frequencies: ArrayLike) -> NDArray[np.float64]:
    phi = np.asarray(frequencies, dtype=np.float64)
    i, j = np.triu_indices(phi.size, k=1)
    return np.abs(phi[j] - phi[i])


def angle_separation(theta: ArrayLike) -> NDArray[np.float64]:
    """Distance from ``theta`` to the nearest integer multiple of ``2 pi``."""
    t = np.mod(np.asarray(theta, dtype=np.float64), 2.0 * np.pi)
    return np.minimum(t, 2.0 * np.pi - t)


def choose_s0(pair_gaps: ArrayLike, R: float, N: int, grid_size: int = 100_000) -> tuple[float, float]:
    """Grid search for ``s0`` in ``(0, R/(2N)]`` maximizing the worst angle separation.

    Candidates are ``k R / (2N grid_size)``, ``k = 1..grid_size``; ties go to the
    smallest ``s0``. Returns ``(s0, separation)``.
    """
    gaps = np.atleast_1d(np.asarray(pair_gaps, dtype=np.float64))
    if gaps.size == 0:
        raise InvalidArgumentError("need at least one pair gap")
    if np.any(gaps <= 0) or not R > 0 or grid_size < 1:
        raise InvalidArgumentError("pair gaps and R must be positive")
    r_bar = R / (2 * N)
    best_s, best_sep = 0.0, -1.0
    chunk = 20_000
    for start in range(1, grid_size + 1, chunk):
        k = np.arange(start, min(start + chunk, grid_size + 1), dtype=np.float64)
        s0 = r_bar * k / grid_size
        sep = angle_separation(np.multiply.outer(s0, gaps)).min(axis=1)
        i = int(np.argmax(sep))
        if sep[i] > best_sep:
            best_s, best_sep = float(s0[i]), float(sep[i])
    return best_s, best_sep
