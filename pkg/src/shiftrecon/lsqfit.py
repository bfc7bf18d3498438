"""Constrained least-squares fitting of exponential polynomials on arbitrary sample sets.

The amplitudes enter linearly and are eliminated (variable projection); the
remaining problem over frequencies is solved by a projected Levenberg-Marquardt
iteration under ``|phi_j| <= lam`` and ``|phi_i - phi_j| >= delta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError, RankDeficientError
from .exppoly import ExpPoly, FitConstraints, NoisySamples, evaluate
from .prony import min_max_matching

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 500
    gtol: float = 1e-12
    xtol: float = 1e-15
    mu0: float = 1e-3


@dataclass
class FitResult:
    amplitudes: NDArray[np.complex128]
    frequencies: NDArray[np.float64]
    objective: float
    converged: bool
    starts_used: int
    local_objectives: list[float] = field(default_factory=list)

    @property
    def poly(self) -> ExpPoly:
        return ExpPoly(self.amplitudes, self.frequencies)


def _design(frequencies: NDArray[np.float64], points: NDArray[np.float64]) -> NDArray[np.complex128]:
    return np.exp(1j * np.multiply.outer(points, frequencies))


def residual(poly: ExpPoly, samples: NoisySamples) -> float:
    """Quadratic deviation ``sum_k |poly(s_k) - h_k|^2``."""
    d = np.asarray(evaluate(poly, samples.points)) - samples.values
    return float(np.vdot(d, d).real)


def varpro_amplitudes(frequencies: ArrayLike, samples: NoisySamples) -> NDArray[np.complex128]:
    """Amplitudes minimizing the residual for fixed frequencies.

    Raises :class:`RankDeficientError` if the columns ``exp(i phi_j s_k)`` are
    linearly dependent on the sample set (aliased frequencies).
    """
    phi = np.atleast_1d(np.asarray(frequencies, dtype=np.float64))
    if samples.n < phi.size:
        raise RankDeficientError("fewer samples than terms")
    A = _design(phi, samples.points)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficientError(f"design matrix is rank deficient (sigma_min/sigma_max={sv[-1] / sv[0]:.2e})")
    return np.linalg.lstsq(A, samples.values, rcond=None)[0]


def _reduced(phi, s, h):
    A = _design(phi, s)
    a = np.linalg.lstsq(A, h, rcond=None)[0]
    r = h - A @ a
    return float(np.vdot(r, r).real), a, r, A


def reduced_objective(frequencies: ArrayLike, samples: NoisySamples) -> float:
    phi = np.atleast_1d(np.asarray(frequencies, dtype=np.float64))
    return _reduced(phi, samples.points, samples.values)[0]


def reduced_gradient(frequencies: ArrayLike, samples: NoisySamples) -> NDArray[np.float64]:
    """Exact gradient of :func:`reduced_objective` in the frequencies."""
    phi = np.atleast_1d(np.asarray(frequencies, dtype=np.float64))
    s = samples.points
    _, a, r, A = _reduced(phi, s, samples.values)
    dA = 1j * s[:, None] * A * a[None, :]
    return -2.0 * np.real(dA.conj().T @ r)


def project_frequencies(frequencies: ArrayLike, constraints: FitConstraints) -> NDArray[np.float64]:
    """Euclidean projection onto the constraint set (returned in ascending order).

    After sorting, ``psi_j = phi_(j) - j delta`` must be nondecreasing and lie in
    ``[-lam, lam - (N-1) delta]``; that projection is an isotonic regression
    (pool-adjacent-violators) followed by clipping.
    """
    phi = np.sort(np.atleast_1d(np.asarray(frequencies, dtype=np.float64)))
    N = phi.size
    constraints.check(N)
    offs = constraints.delta * np.arange(N)
    psi = phi - offs
    # pool adjacent violators
    vals: list[float] = []
    wts: list[int] = []
    for v in psi:
        vals.append(float(v))
        wts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            w = wts[-2] + wts[-1]
            vals[-2] = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / w
            wts[-2] = w
            vals.pop()
            wts.pop()
    iso = np.repeat(vals, wts)
    iso = np.clip(iso, -constraints.lam, constraints.lam - (N - 1) * constraints.delta)
    return iso + offs


def _local_descent(phi0, s, h, constraints, opts: FitOptions):
    phi = project_frequencies(phi0, constraints)
    f, a, r, A = _reduced(phi, s, h)
    mu = opts.mu0
    converged = False
    for _ in range(opts.max_iter):
        dA = 1j * s[:, None] * A * a[None, :]
        # Kaufman Jacobian of the projected residual
        J = -(dA - A @ np.linalg.lstsq(A, dA, rcond=None)[0])
        Jr = np.vstack([J.real, J.imag])
        rr = np.concatenate([r.real, r.imag])
        g = 2.0 * Jr.T @ rr
        pg = project_frequencies(phi - g, constraints) - phi
        if np.linalg.norm(pg) < opts.gtol * (1.0 + f) or f == 0.0:
            converged = True
            break
        scale = np.maximum(np.linalg.norm(Jr, axis=0), 1e-300)
        improved = False
        while mu < 1e20:
            aug = np.vstack([Jr, np.sqrt(mu) * np.diag(scale)])
            step = np.linalg.lstsq(aug, np.concatenate([-rr, np.zeros(phi.size)]), rcond=None)[0]
            cand = project_frequencies(phi + step, constraints)
            actual = cand - phi
            if np.linalg.norm(actual) <= opts.xtol * (1.0 + np.linalg.norm(phi)):
                break
            f_new, a_new, r_new, A_new = _reduced(cand, s, h)
            if f_new < f:
                predicted = f - float(np.sum((rr + Jr @ actual) ** 2))
                rho = (f - f_new) / predicted if predicted > 0 else 0.0
                phi, f, a, r, A = cand, f_new, a_new, r_new, A_new
                mu = mu * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3) if rho > 0 else mu
                improved = True
                break
            mu *= 4.0
        if not improved:
            # no descent possible at working precision
            converged = True
            break
    return phi, a, f, converged


def random_feasible(N: int, constraints: FitConstraints, rng: np.random.Generator) -> NDArray[np.float64]:
    return project_frequencies(rng.uniform(-constraints.lam, constraints.lam, N), constraints)


def fit_least_squares(samples: NoisySamples, N: int, constraints: FitConstraints,
                      init: ArrayLike | None = None, starts: int = 20, seed: int = 0,
                      options: FitOptions | None = None) -> FitResult:
    """Best local least-squares fit of an ``N``-term exponential polynomial.

    Descends from ``init`` (if given) and from ``starts`` random feasible
    frequency vectors drawn with ``seed``; the lowest objective wins, ties going
    to the earlier start.
    """
    opts = options or FitOptions()
    constraints.check(N)
    if N < 1:
        raise InvalidArgumentError("N must be >= 1")
    rng = np.random.default_rng(seed)
    inits = []
    if init is not None:
        init = np.atleast_1d(np.asarray(init, dtype=np.float64))
        if init.size != N:
            raise InvalidArgumentError("init has the wrong number of frequencies")
        inits.append(init)
    inits.extend(random_feasible(N, constraints, rng) for _ in range(starts))
    if not inits:
        raise InvalidArgumentError("need init or starts >= 1")
    s, h = samples.points, samples.values
    best = None
    local = []
    for phi0 in inits:
        phi, a, f, conv = _local_descent(phi0, s, h, constraints, opts)
        local.append(f)
        if best is None or f < best[2]:
            best = (phi, a, f, conv)
    phi, a, f, conv = best
    return FitResult(amplitudes=a, frequencies=phi, objective=f, converged=conv,
                     starts_used=len(inits), local_objectives=local)


def fit_error_vs_truth(result: FitResult | ExpPoly, truth: ExpPoly) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per-term amplitude and frequency errors after optimal matching, in ``truth`` order."""
    amps = np.asarray(result.amplitudes)
    freqs = np.asarray(result.frequencies)
    if freqs.size != truth.degree:
        raise InvalidArgumentError("different numbers of terms")
    fcost = np.abs(truth.frequencies[:, None] - freqs[None, :])
    acost = np.abs(truth.amplitudes[:, None] - amps[None, :])
    perm = np.array(min_max_matching(fcost, acost))
    idx = np.arange(truth.degree)
    return acost[idx, perm], fcost[idx, perm]
