"""Fourier decoupling of shift mixtures ``F(x) = sum_j sum_q a_jq f_j(x - x_jq)``.

On the common zeros ``W_j`` of the other components' Fourier transforms the
samples of ``F(F)`` divided by ``F(f_j)`` are exactly samples of the exponential
polynomial ``H_j(s) = sum_q a_jq exp(-i beta x_jq s)``; each component is
therefore recovered by an independent least-squares fit.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

from .bounds import BoundReport, bound_report
from .errors import (DivisionHazardError, InvalidArgumentError, NoCertificateError,
                     UnsamplableComponentError)
from .exppoly import ExpPoly, FitConstraints, NoisySamples
from .lsqfit import FitOptions, fit_least_squares

log = logging.getLogger(__name__)

BETA = 2.0 * math.pi
DIVISOR_FLOOR = 1e-14
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class ArithmeticZeros:
    """The set ``{unit * (offset + step * n) : n in Z}`` minus ``unit * e`` for ``e`` in ``excluded``."""

    offset: Fraction
    step: Fraction
    unit: float = math.pi
    excluded: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise InvalidArgumentError("progression step must be positive")
        object.__setattr__(self, "offset", self.offset % self.step)

    def members(self, lo: float, hi: float, rtol: float = 1e-12) -> list[Fraction]:
        """Exact members (in units of ``unit``) lying in ``[lo, hi]`` up to ``rtol``."""
        slack = rtol * max(1.0, abs(lo), abs(hi)) / self.unit
        a = lo / self.unit - slack
        b = hi / self.unit + slack
        n0 = math.ceil((a - float(self.offset)) / float(self.step))
        n1 = math.floor((b - float(self.offset)) / float(self.step))
        out = [self.offset + self.step * n for n in range(n0, n1 + 1)]
        return [v for v in out if v not in self.excluded]

    def contains(self, value: Fraction) -> bool:
        return (value - self.offset) % self.step == 0 and value not in self.excluded

    def intersect(self, other: "ArithmeticZeros") -> "ArithmeticZeros | None":
        """Exact intersection of two progressions with the same unit (``None`` if empty)."""
        if other.unit != self.unit:
            raise InvalidArgumentError("progressions use different units")
        den = math.lcm(self.offset.denominator, self.step.denominator,
                       other.offset.denominator, other.step.denominator)
        o1, s1 = int(self.offset * den), int(self.step * den)
        o2, s2 = int(other.offset * den), int(other.step * den)
        g = math.gcd(s1, s2)
        if (o2 - o1) % g:
            return None
        # o1 + s1 n = o2 (mod s2)
        t = ((o2 - o1) // g) * pow(s1 // g, -1, s2 // g) % (s2 // g) if s2 // g > 1 else 0
        x0 = o1 + s1 * t
        step = s1 // g * s2
        return ArithmeticZeros(Fraction(x0, den), Fraction(step, den), self.unit,
                               frozenset(self.excluded) | frozenset(other.excluded))


@dataclass(frozen=True)
class SignalModel:
    """A known signal through its Fourier transform and zero set."""

    name: str
    fourier: Callable[[NDArray[np.float64]], NDArray[np.complex128]]
    zeros: ArithmeticZeros | None = None
    domain: tuple[float, float] = (-math.inf, math.inf)
    grid_step: float = 1e-2

    def __call__(self, s: ArrayLike) -> NDArray[np.complex128]:
        return np.asarray(self.fourier(np.asarray(s, dtype=np.float64)), dtype=np.complex128)

    def zero_set(self, interval: tuple[float, float], tol: float = 1e-9) -> NDArray[np.float64]:
        lo, hi = interval
        if self.zeros is not None:
            return np.array([float(v) * self.zeros.unit for v in self.zeros.members(lo, hi)])
        return numeric_zeros(self, lo, hi, tol)


def _box_fourier(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.full(s.shape, SQRT_2_OVER_PI, dtype=np.complex128)
    nz = s != 0
    out[nz] = SQRT_2_OVER_PI * np.sin(s[nz]) / s[nz]
    return out


def _deltapair_fourier(s):
    return (SQRT_2_OVER_PI * np.cos(np.asarray(s, dtype=np.float64))).astype(np.complex128)


BOX = SignalModel("BOX", _box_fourier, ArithmeticZeros(Fraction(0), Fraction(1), math.pi, frozenset({Fraction(0)})))
DELTAPAIR = SignalModel("DELTAPAIR", _deltapair_fourier, ArithmeticZeros(Fraction(1, 2), Fraction(1), math.pi))
BUILTIN_SIGNALS = {"BOX": BOX, "DELTAPAIR": DELTAPAIR}


def tabulated_signal(name: str, table: ArrayLike, grid_step: float | None = None) -> SignalModel:
    """Model from sampled ``(s, re, im)`` rows, linearly interpolated inside the table."""
    t = np.asarray(table, dtype=np.float64)
    if t.ndim != 2 or t.shape[1] != 3 or t.shape[0] < 2 or np.any(np.diff(t[:, 0]) <= 0):
        raise InvalidArgumentError("table must have >= 2 rows of (s, re, im) with increasing s")
    s_tab, re, im = t[:, 0], t[:, 1], t[:, 2]

    def fourier(s):
        s = np.asarray(s, dtype=np.float64)
        if np.any(s < s_tab[0]) or np.any(s > s_tab[-1]):
            raise InvalidArgumentError(f"{name}: evaluation outside the tabulated range")
        return np.interp(s, s_tab, re) + 1j * np.interp(s, s_tab, im)

    step = grid_step if grid_step is not None else float(np.min(np.diff(s_tab))) / 2
    return SignalModel(name, fourier, None, (float(s_tab[0]), float(s_tab[-1])), step)


def numeric_zeros(model: SignalModel, lo: float, hi: float, tol: float = 1e-9) -> NDArray[np.float64]:
    """Zeros of ``model.fourier`` on ``[lo, hi]``: sign changes of the real (or imaginary)
    part on a grid, refined by bisection, kept if ``|F| <= tol`` at the root."""
    lo = max(lo, model.domain[0])
    hi = min(hi, model.domain[1])
    if hi <= lo:
        return np.empty(0)
    n = max(2, int(math.ceil((hi - lo) / model.grid_step)) + 1)
    grid = np.linspace(lo, hi, n)
    vals = model(grid)
    roots = [float(g) for g, v in zip(grid, vals) if abs(v) <= tol]
    for part in (np.real, np.imag):
        f = part(vals)
        if not np.any(f):
            continue
        idx = np.nonzero(f[:-1] * f[1:] < 0)[0]
        for i in idx:
            r = brentq(lambda x: float(part(model(np.array([x]))[0])), grid[i], grid[i + 1], xtol=1e-15)
            if abs(model(np.array([r]))[0]) <= tol:
                roots.append(r)
    if not roots:
        return np.empty(0)
    roots = np.sort(np.array(roots))
    keep = np.ones(roots.size, dtype=bool)
    keep[1:] = np.diff(roots) > 1e-12 * max(1.0, hi)
    return roots[keep]


def common_zero_set(models: Sequence[SignalModel], j: int, R: float, tol: float = 1e-9,
                    thin: int = 1) -> NDArray[np.float64]:
    """``W_j ∩ [0, R]``: common zeros of every ``F(f_l)``, ``l != j``, where ``F(f_j) != 0``.

    Arithmetic-progression zero sets are intersected exactly; otherwise numeric
    zeros are matched within ``1e-9 R``. ``thin=p`` keeps every ``p``-th point.
    """
    if len(models) < 2:
        raise InvalidArgumentError("decoupling needs at least two signals")
    if not 0 <= j < len(models):
        raise InvalidArgumentError("component index out of range")
    others = [m for i, m in enumerate(models) if i != j]
    target = models[j]
    units = {m.zeros.unit for m in others if m.zeros is not None}
    if all(m.zeros is not None for m in others) and len(units) == 1:
        prog = others[0].zeros
        for m in others[1:]:
            prog = prog.intersect(m.zeros) if prog is not None else None
        pts: list[float] = []
        if prog is not None:
            for v in prog.members(0.0, R):
                if target.zeros is not None and target.zeros.unit == prog.unit and target.zeros.contains(v):
                    continue
                pts.append(float(v) * prog.unit)
        pts_arr = np.array(pts)
    else:
        match = 1e-9 * max(1.0, R)
        pts_arr = others[0].zero_set((0.0, R), tol)
        for m in others[1:]:
            z = m.zero_set((0.0, R), tol)
            if z.size == 0 or pts_arr.size == 0:
                pts_arr = np.empty(0)
                break
            k = np.clip(np.searchsorted(z, pts_arr), 1, z.size - 1) if z.size > 1 else np.zeros(pts_arr.size, dtype=int)
            near = np.minimum(np.abs(z[k] - pts_arr), np.abs(z[np.maximum(k - 1, 0)] - pts_arr))
            pts_arr = pts_arr[near <= match]
    if pts_arr.size:
        pts_arr = pts_arr[(pts_arr >= 0) & (np.abs(target(pts_arr)) > tol)]
    pts_arr = pts_arr[::thin]
    if pts_arr.size == 0:
        log.warning("common zero set of component %d on [0, %g] is empty", j, R)
    return pts_arr


@dataclass(frozen=True)
class Component:
    signal: SignalModel
    shifts: NDArray[np.float64]
    amplitudes: NDArray[np.complex128]

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.shifts, dtype=np.float64)).copy()
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=np.complex128)).copy()
        if x.ndim != 1 or x.shape != a.shape or x.size == 0:
            raise InvalidArgumentError("shifts and amplitudes must be nonempty and of equal length")
        if np.unique(x).size != x.size:
            raise InvalidArgumentError("shifts within a component must be distinct")
        if np.any(a == 0):
            raise InvalidArgumentError("zero amplitudes are not allowed")
        object.__setattr__(self, "shifts", x)
        object.__setattr__(self, "amplitudes", a)

    @property
    def q(self) -> int:
        return int(self.shifts.size)

    def max_frequency(self, beta: float = BETA) -> float:
        """``eta_j = max beta |x_jq|``."""
        return float(beta * np.max(np.abs(self.shifts)))

    def min_gap(self, beta: float = BETA) -> float:
        """``sigma_j = min beta |x_jq - x_jp|`` (``inf`` for one shift)."""
        if self.q < 2:
            return math.inf
        return float(beta * np.min(np.diff(np.sort(self.shifts))))

    def exp_poly(self, beta: float = BETA) -> ExpPoly:
        return ExpPoly(self.amplitudes, -beta * self.shifts)


@dataclass(frozen=True)
class ShiftMixture:
    components: tuple[Component, ...]
    beta: float = BETA

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise InvalidArgumentError("a mixture needs at least one component")

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def models(self) -> list[SignalModel]:
        return [c.signal for c in self.components]


def fourier_of_mixture(F: ShiftMixture, s: ArrayLike) -> NDArray[np.complex128] | complex:
    s_arr = np.asarray(s, dtype=np.float64)
    flat = np.atleast_1d(s_arr)
    total = np.zeros(flat.shape, dtype=np.complex128)
    for c in F.components:
        phase = np.exp(-1j * F.beta * np.multiply.outer(flat, c.shifts)) @ c.amplitudes
        total += phase * c.signal(flat)
    return complex(total[0]) if s_arr.ndim == 0 else total


def min_divisor(model: SignalModel, S: ArrayLike) -> float:
    """``kappa = min_S |F(f)(s)|``; raises if ``S`` meets the zero set of ``F(f)``."""
    pts = np.atleast_1d(np.asarray(S, dtype=np.float64))
    if pts.size == 0:
        raise InvalidArgumentError("empty sampling set")
    kappa = float(np.min(np.abs(model(pts))))
    if kappa < DIVISOR_FLOOR:
        raise DivisionHazardError(f"{model.name}: Fourier transform vanishes on the sampling set")
    return kappa


@dataclass(frozen=True)
class DecoupledSystem:
    j: int
    sample_points: NDArray[np.float64]
    rhs: NDArray[np.complex128]
    kappa: float
    beta: float = BETA

    @property
    def noise_amplification(self) -> float:
        return 1.0 / self.kappa

    def shifts_from_frequencies(self, frequencies: ArrayLike) -> NDArray[np.float64]:
        return -np.asarray(frequencies, dtype=np.float64) / self.beta

    def frequencies_from_shifts(self, shifts: ArrayLike) -> NDArray[np.float64]:
        return -self.beta * np.asarray(shifts, dtype=np.float64)


def assemble_decoupled(F_samples: ArrayLike, model_j: SignalModel, S_j: ArrayLike, j: int = 0,
                       beta: float = BETA) -> DecoupledSystem:
    """``c_l = F(F)(s_l) / F(f_j)(s_l)`` on ``S_j``."""
    pts = np.atleast_1d(np.asarray(S_j, dtype=np.float64))
    vals = np.atleast_1d(np.asarray(F_samples, dtype=np.complex128))
    if pts.shape != vals.shape:
        raise InvalidArgumentError("one sample per point is required")
    kappa = min_divisor(model_j, pts)
    return DecoupledSystem(j, pts, vals / model_j(pts), kappa, beta)


@dataclass
class ComponentFit:
    j: int
    system: DecoupledSystem
    shifts: NDArray[np.float64]
    amplitudes: NDArray[np.complex128]
    objective: float
    converged: bool
    bounds: BoundReport

    @property
    def certified(self) -> bool:
        return self.bounds.certified


@dataclass
class Reconstruction:
    fits: list[ComponentFit] = field(default_factory=list)
    beta: float = BETA

    @property
    def certified(self) -> bool:
        return all(f.certified for f in self.fits)

    def mixture(self, models: Sequence[SignalModel]) -> ShiftMixture:
        return ShiftMixture(tuple(Component(m, f.shifts, f.amplitudes) for m, f in zip(models, self.fits)), self.beta)


def reconstruct(measured: Sequence[ArrayLike], sample_sets: Sequence[ArrayLike], models: Sequence[SignalModel],
                orders: Sequence[int], eta_bounds: Sequence[float], sigma_bounds: Sequence[float | None],
                noise_bounds: Sequence[float] | None = None, init_shifts: Sequence[ArrayLike | None] | None = None,
                starts: int = 20, seed: int = 0, beta: float = BETA, require_certificate: bool = False,
                threads: int = 1, options: FitOptions | None = None) -> Reconstruction:
    """Recover all shifts and amplitudes, one independent fit per component.

    Component ``j`` is fitted with ``q_j`` terms under ``|phi| <= eta_j`` and gap
    ``sigma_j`` (frequencies ``phi = -beta x``). A zero metric span leaves the fit in
    place but marks it uncertified; with ``require_certificate`` a
    :class:`NoCertificateError` is raised after all components are fitted.
    """
    k = len(models)
    if not (len(measured) == len(sample_sets) == len(orders) == len(eta_bounds) == len(sigma_bounds) == k):
        raise InvalidArgumentError("one entry per component is required")
    noise = list(noise_bounds) if noise_bounds is not None else [0.0] * k
    inits = list(init_shifts) if init_shifts is not None else [None] * k

    def one(j: int) -> ComponentFit:
        pts = np.atleast_1d(np.asarray(sample_sets[j], dtype=np.float64))
        if pts.size == 0:
            raise UnsamplableComponentError(f"component {j} has no sampling points")
        system = assemble_decoupled(measured[j], models[j], pts, j, beta)
        q, eta = int(orders[j]), float(eta_bounds[j])
        sigma = sigma_bounds[j]
        gap = sigma if (sigma is not None and math.isfinite(sigma)) else max(eta, 1.0)
        constraints = FitConstraints(eta, gap)
        samples = NoisySamples(pts, system.rhs, noise[j] / system.kappa)
        init = None if inits[j] is None else system.frequencies_from_shifts(inits[j])
        res = fit_least_squares(samples, q, constraints, init=init, starts=starts, seed=seed + j, options=options)
        report = bound_report(pts, q, eta, sigma if q > 1 else None, noise[j], res.amplitudes, kappa=system.kappa)
        if not report.certified:
            log.warning("component %d: metric span is zero, reconstruction is not certified unique", j)
        return ComponentFit(j, system, system.shifts_from_frequencies(res.frequencies), res.amplitudes,
                            res.objective, res.converged, report)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(one, range(k)))
    else:
        fits = [one(j) for j in range(k)]
    out = Reconstruction(fits, beta)
    if require_certificate and not out.certified:
        raise NoCertificateError("at least one component has zero metric span")
    return out


def example_mixture(eta: float, seed: int = 0, N: int = 2, gap_fraction: float = 0.05) -> ShiftMixture:
    """BOX + DELTAPAIR mixture with ``N`` shifts each and maximal frequency ``<= eta``.

    ``eta == 1`` returns the degenerate pair whose decoupled polynomials vanish
    on both sampling sets; otherwise shifts are random with frequency gap at
    least ``gap_fraction * eta`` and amplitude moduli in ``[0.5, 2]``.
    """
    if eta == 1.0:
        return degenerate_witness()
    from .lsqfit import random_feasible

    rng = np.random.default_rng(seed)
    constraints = FitConstraints(eta, gap_fraction * eta)
    comps = []
    for model in (BOX, DELTAPAIR):
        phi = random_feasible(N, constraints, rng)
        amps = rng.uniform(0.5, 2.0, N) * np.exp(2j * np.pi * rng.random(N))
        comps.append(Component(model, -phi / BETA, amps))
    return ShiftMixture(tuple(comps))


def degenerate_witness() -> ShiftMixture:
    """Shifts ``-+1/(2 pi)`` for both signals, with amplitudes chosen so that
    ``H_1(s) = -cos s`` and ``H_2(s) = -i sin s``; both vanish on their sampling sets."""
    x = np.array([-1.0, 1.0]) / (2.0 * math.pi)
    box = Component(BOX, x, np.array([-0.5, -0.5], dtype=complex))
    pair = Component(DELTAPAIR, x, np.array([-0.5, 0.5], dtype=complex))
    return ShiftMixture((box, pair))


def example_sampling_sets(m: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``S_1 = {(1/2 + n) pi : n = 0..m}`` and ``S_2 = {n pi : n = 1..m}``."""
    return (np.arange(m + 1) + 0.5) * math.pi, np.arange(1, m + 1) * math.pi
