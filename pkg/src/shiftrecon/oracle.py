"""Brute-force reference computations used to validate the fast paths.

Nothing here imports the geometry, prony or lsqfit algorithms; only the plain
data containers are shared. Costs are deliberately unbounded, so keep the
instances small.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exppoly import ExpPoly, FitConstraints, NoisySamples


def _points(S) -> NDArray[np.float64]:
    return np.asarray(getattr(S, "points", S), dtype=np.float64)


def _zero_count_bound(N: int, lam: float, R: float) -> int:
    # duplicated on purpose: the oracle must not borrow geometry.langer_bound
    x = lam * R / math.pi
    k = math.floor(x)
    if (k + 1) - x <= 1e-9 * max(1.0, x):
        k += 1
    return N * N - 1 + k


def brute_covering(S, epsilon: float) -> int:
    """Minimum cover size by dynamic programming over contiguous runs.

    Points hit by a single interval form a contiguous run of the sorted set, so
    minimal covers are minimal partitions into runs of spread at most ``epsilon``.
    """
    return int(brute_covering_many(S, np.array([epsilon]))[0])


def brute_covering_many(S, eps: ArrayLike) -> NDArray[np.int64]:
    pts = _points(S)
    eps = np.asarray(eps, dtype=np.float64)
    n = pts.size
    big = n + 1
    best = [np.zeros(eps.shape, dtype=np.int64)]
    for j in range(1, n + 1):
        cur = np.full(eps.shape, big, dtype=np.int64)
        for i in range(j):
            ok = pts[j - 1] - pts[i] <= eps
            cand = np.where(ok, best[i] + 1, big)
            np.minimum(cur, cand, out=cur)
        best.append(cur)
    return best[n]


def exhaustive_covering(S, epsilon: float) -> int:
    """Try every family of intervals ``[p, p+eps]`` / ``[p-eps, p]``, smallest first."""
    pts = _points(S)
    cands = [(p, p + epsilon) for p in pts] + [(p - epsilon, p) for p in pts]
    for k in range(1, pts.size + 1):
        for combo in itertools.combinations(cands, k):
            if all(any(a <= p <= b for a, b in combo) for p in pts):
                return k
    return pts.size  # pragma: no cover


def brute_span(S, N: int, lam: float, grid: int = 100_000) -> float:
    """Span by a dense ``eps`` scan plus left-limits at every pairwise difference."""
    pts = _points(S)
    R = float(pts[-1])
    M0 = _zero_count_bound(N, lam, R)
    if M0 == 0:
        return math.inf
    if pts.size <= M0:
        return 0.0
    i, j = np.triu_indices(pts.size, 1)
    diffs = np.unique(pts[j] - pts[i])
    eps = np.concatenate([np.linspace(R / grid, R, grid), diffs * (1 - 1e-12)])
    vals = eps * (brute_covering_many(pts, eps) - M0)
    return max(0.0, float(vals.max()))


def dense_sup(poly: ExpPoly, R: float, grid: int = 100_000) -> float:
    """``sup_{[0, R]} |H|`` on a uniform grid of at least ``1e5 * ceil(lam R / pi)`` points."""
    lam = float(np.max(np.abs(poly.frequencies)))
    n = max(int(grid), 100_000 * max(1, math.ceil(lam * R / math.pi)), 2)
    best = 0.0
    chunk = 200_000
    for start in range(0, n, chunk):
        s = np.arange(start, min(start + chunk, n)) * (R / (n - 1))
        vals = np.exp(1j * np.multiply.outer(s, poly.frequencies)) @ poly.amplitudes
        best = max(best, float(np.max(np.abs(vals))))
    return best


def grid_objectives(samples: NoisySamples, N: int, constraints: FitConstraints,
                    grid: int = 400) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.complex128]]:
    """Reduced least-squares objective on every feasible grid cell (``N <= 2``).

    Returns ``(frequency_rows, objectives, amplitude_rows)``.
    """
    if N not in (1, 2):
        raise ValueError("grid search is only implemented for N <= 2")
    s = samples.points
    h = samples.values
    freqs = np.linspace(-constraints.lam, constraints.lam, grid)
    E = np.exp(1j * np.multiply.outer(freqs, s))  # (grid, n)
    hh = float(np.vdot(h, h).real)
    proj = E.conj() @ h  # <e_a, h>
    n = s.size
    if N == 1:
        amps = proj / n
        obj = hh - np.abs(proj) ** 2 / n
        return freqs[:, None], np.maximum(obj, 0.0), amps[:, None]

    ia, ib = np.triu_indices(grid, k=1)
    keep = freqs[ib] - freqs[ia] >= constraints.delta - 1e-12
    ia, ib = ia[keep], ib[keep]
    gram = E.conj() @ E.T
    g_ab = gram[ia, ib]
    det = n * n - np.abs(g_ab) ** 2
    pa, pb = proj[ia], proj[ib]
    singular = det <= 1e-10 * n * n
    safe = np.where(singular, 1.0, det)
    # solve [[n, g_ab], [conj(g_ab), n]] c = [pa, pb]
    ca = (n * pa - g_ab * pb) / safe
    cb = (n * pb - np.conj(g_ab) * pa) / safe
    ca = np.where(singular, pa / n, ca)
    cb = np.where(singular, 0.0, cb)
    obj = hh - (np.conj(ca) * pa + np.conj(cb) * pb).real
    rows = np.stack([freqs[ia], freqs[ib]], axis=1)
    return rows, np.maximum(obj, 0.0), np.stack([ca, cb], axis=1)


def grid_fit(samples: NoisySamples, N: int, constraints: FitConstraints, grid: int = 400):
    """Global minimizer of the reduced objective over the frequency grid."""
    from .lsqfit import FitResult  # container only

    rows, obj, amps = grid_objectives(samples, N, constraints, grid)
    k = int(np.argmin(obj))
    return FitResult(amplitudes=amps[k], frequencies=rows[k], objective=float(obj[k]),
                     converged=True, starts_used=int(obj.size))


def prony_solve_direct(moments: ArrayLike, N: int):
    """Solve a tiny Prony system by Newton iteration on all ``2N`` equations.

    Starts from every combination of ``N`` nodes on a coarse unit-circle grid and
    returns the ``(nodes, amplitudes)`` with the smallest residual.
    """
    m = np.asarray(moments, dtype=np.complex128)
    k = np.arange(2 * N)

    def residual_and_jac(x, a):
        V = x[None, :] ** k[:, None]
        r = V @ a - m
        dV = np.zeros_like(V)
        dV[1:] = k[1:, None] * x[None, :] ** (k[1:, None] - 1)
        J = np.concatenate([dV * a[None, :], V], axis=1)
        return r, J

    best = None
    starts = np.exp(2j * np.pi * np.arange(8) / 8)
    for combo in itertools.combinations(starts, N):
        x = np.array(combo)
        V = x[None, :] ** k[:, None]
        a = np.linalg.lstsq(V, m, rcond=None)[0]
        for _ in range(100):
            r, J = residual_and_jac(x, a)
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
            x = x + step[:N]
            a = a + step[N:]
            if np.linalg.norm(step) < 1e-15:
                break
        r, _ = residual_and_jac(x, a)
        err = float(np.linalg.norm(r))
        if np.all(np.isfinite(x)) and (best is None or err < best[0]):
            best = (err, x, a)
    return best[1], best[2]
