"""Exponential polynomials with purely imaginary exponents.

An :class:`ExpPoly` represents ``H(s) = sum_j a_j exp(i phi_j s)`` with complex
amplitudes ``a_j`` and real, pairwise distinct frequencies ``phi_j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgumentError

# relative separation below which two frequencies are treated as identical
FREQ_COLLISION_RTOL = 1e-12


@dataclass(frozen=True)
class ExpPoly:
    amplitudes: NDArray[np.complex128]
    frequencies: NDArray[np.float64]

    def __post_init__(self) -> None:
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=np.complex128)).copy()
        phi = np.atleast_1d(np.asarray(self.frequencies, dtype=np.float64)).copy()
        if a.ndim != 1 or phi.ndim != 1 or a.size != phi.size:
            raise InvalidArgumentError("amplitudes and frequencies must be 1-d of equal length")
        if a.size == 0:
            raise InvalidArgumentError("an exponential polynomial needs at least one term")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(phi)):
            raise InvalidArgumentError("non-finite amplitude or frequency")
        if np.any(a == 0):
            raise InvalidArgumentError("zero amplitudes are not allowed; reduce the degree instead")
        if phi.size > 1:
            gap = np.min(np.diff(np.sort(phi)))
            if gap < FREQ_COLLISION_RTOL * max(1.0, float(np.max(np.abs(phi)))):
                raise InvalidArgumentError(f"frequencies collide (min gap {gap:g})")
        a.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "frequencies", phi)

    @property
    def degree(self) -> int:
        return int(self.amplitudes.size)

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self.frequencies)))

    @property
    def min_gap(self) -> float:
        """Smallest pairwise frequency distance (``inf`` for a single term)."""
        if self.degree < 2:
            return float("inf")
        return float(np.min(np.diff(np.sort(self.frequencies))))

    def __call__(self, s: ArrayLike) -> NDArray[np.complex128] | complex:
        return evaluate(self, s)

    def sorted(self) -> "ExpPoly":
        order = np.argsort(self.frequencies, kind="stable")
        return ExpPoly(self.amplitudes[order], self.frequencies[order])

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        return merge(self, other)

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return merge(self, ExpPoly(-other.amplitudes, other.frequencies))

    def to_records(self) -> list[tuple[float, float, float]]:
        """``(re a_j, im a_j, phi_j)`` rows ordered by ascending frequency."""
        p = self.sorted()
        return [(float(a.real), float(a.imag), float(f)) for a, f in zip(p.amplitudes, p.frequencies)]

    @classmethod
    def from_records(cls, rows: Iterable[Sequence[float]]) -> "ExpPoly":
        rows = [tuple(map(float, r)) for r in rows]
        if any(len(r) != 3 for r in rows):
            raise InvalidArgumentError("each record must be (re, im, frequency)")
        return cls(np.array([complex(r[0], r[1]) for r in rows]), np.array([r[2] for r in rows]))


def merge(first: ExpPoly, second: ExpPoly) -> ExpPoly:
    """Sum of two exponential polynomials, combining equal frequencies.

    Terms whose combined amplitude cancels exactly are dropped; if everything
    cancels an :class:`InvalidArgumentError` is raised since the zero polynomial
    has no representation.
    """
    acc: dict[float, complex] = {}
    for a, f in zip(np.concatenate([first.amplitudes, second.amplitudes]),
                    np.concatenate([first.frequencies, second.frequencies])):
        acc[float(f)] = acc.get(float(f), 0j) + complex(a)
    items = [(f, a) for f, a in sorted(acc.items()) if a != 0]
    if not items:
        raise InvalidArgumentError("the sum is identically zero")
    return ExpPoly(np.array([a for _, a in items]), np.array([f for f, _ in items]))


def evaluate(poly: ExpPoly, s: ArrayLike) -> NDArray[np.complex128] | complex:
    """Evaluate ``sum_j a_j exp(i phi_j s)`` at scalar or array ``s``."""
    s_arr = np.asarray(s, dtype=np.float64)
    out = np.exp(1j * np.multiply.outer(s_arr, poly.frequencies)) @ poly.amplitudes
    if s_arr.ndim == 0:
        return complex(out)
    return out


def sample(poly: ExpPoly, points: ArrayLike) -> NDArray[np.complex128]:
    pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        raise InvalidArgumentError("sampling set must be nonempty")
    return np.asarray(evaluate(poly, pts))


def add_noise(values: ArrayLike, delta: float, seed: int | np.random.Generator) -> NDArray[np.complex128]:
    """Add noise drawn uniformly from the closed complex disc of radius ``delta``.

    ``seed`` may be an integer or an existing ``numpy`` generator; the same
    integer always yields the same perturbation.
    """
    if delta < 0:
        raise InvalidArgumentError("noise bound must be nonnegative")
    v = np.asarray(values, dtype=np.complex128)
    if delta == 0:
        return v.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    radius = delta * np.sqrt(rng.random(v.shape))
    angle = 2.0 * np.pi * rng.random(v.shape)
    return v + radius * np.exp(1j * angle)


@dataclass(frozen=True)
class NoisySamples:
    """Samples ``h_k = H(s_k) + noise`` together with the declared noise bound."""

    points: NDArray[np.float64]
    values: NDArray[np.complex128]
    noise_bound: float = 0.0

    def __post_init__(self) -> None:
        pts = np.atleast_1d(np.asarray(self.points, dtype=np.float64)).copy()
        vals = np.atleast_1d(np.asarray(self.values, dtype=np.complex128)).copy()
        if pts.shape != vals.shape or pts.ndim != 1:
            raise InvalidArgumentError("points and values must be 1-d of equal length")
        if pts.size == 0:
            raise InvalidArgumentError("no samples")
        if np.any(np.diff(pts) <= 0):
            raise InvalidArgumentError("sample points must be strictly increasing")
        if self.noise_bound < 0:
            raise InvalidArgumentError("noise bound must be nonnegative")
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.points.size)

    @classmethod
    def from_poly(cls, poly: ExpPoly, points: ArrayLike, delta: float = 0.0,
                  seed: int | np.random.Generator = 0) -> "NoisySamples":
        pts = np.asarray(points, dtype=np.float64)
        return cls(pts, add_noise(sample(poly, pts), delta, seed), delta)


@dataclass(frozen=True)
class FitConstraints:
    """Frequency constraints ``|phi_j| <= lam`` and ``|phi_i - phi_j| >= delta``.

    If ``order`` is given the constraints are checked for feasibility at
    construction; otherwise call :meth:`check` once the degree is known.
    """

    lam: float
    delta: float
    order: int | None = field(default=None)

    def __post_init__(self) -> None:
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise InvalidArgumentError("lambda must be finite and >= 0")
        if not self.delta > 0:
            raise InvalidArgumentError("delta must be > 0")
        if self.order is not None:
            self.check(self.order)

    def feasible(self, n_terms: int) -> bool:
        if n_terms < 1:
            return False
        # small slack so that delta == 2*lam/(N-1) computed in floats is accepted
        return (n_terms - 1) * self.delta <= 2.0 * self.lam * (1 + 1e-12)

    def check(self, n_terms: int) -> None:
        if not self.feasible(n_terms):
            raise InvalidArgumentError(
                f"no {n_terms} frequencies in [-{self.lam}, {self.lam}] can be {self.delta} apart")

    def satisfied_by(self, frequencies: ArrayLike, slack: float = 1e-9) -> bool:
        phi = np.sort(np.asarray(frequencies, dtype=np.float64))
        if np.any(np.abs(phi) > self.lam + slack):
            return False
        return bool(phi.size < 2 or np.min(np.diff(phi)) >= self.delta - slack)
