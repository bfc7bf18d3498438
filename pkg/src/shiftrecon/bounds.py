"""Closed-form a-priori error bounds for least-squares recovery on a sampling set.

Constants 316 and 632 and the ``2 sqrt(2n)`` (plain fitting) versus ``2 / kappa``
(decoupled systems) prefactors are reproduced as stated, not improved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InvalidArgumentError, NoCertificateError
from .geometry import (SamplingSet, equidistant_span, langer_bound, metric_span, sample_gap,
                       separation_floor)

TN_CONSTANT = 316.0
RECOVERY_CONSTANT = 632.0


def _power(base: float, exponent: int) -> float:
    if exponent == 0:
        return 1.0
    try:
        return math.pow(base, exponent)
    except OverflowError:
        return math.inf


def turan_nazarov_factor(N_eff: int, R: float, omega: float) -> float:
    """``(316 R / omega)^(N_eff - 1)``, the factor from ``sup_S |H|`` to ``sup_[0,R] |H|``."""
    if N_eff == 1:
        return 1.0
    if not omega > 0:
        raise NoCertificateError("metric span is zero")
    return _power(TN_CONSTANT * R / omega, N_eff - 1)


def amplification(N: int, R: float, omega: float, rho: float) -> float:
    """``(632 R / (rho omega))^(2N)``."""
    if not (omega > 0 and rho > 0):
        raise NoCertificateError("metric span or sample gap is zero")
    return _power(RECOVERY_CONSTANT * R / (rho * omega), 2 * N)


def recovery_bounds(N: int, n: int, R: float, omega: float, rho: float, delta: float,
                    amplitudes: Sequence[float]) -> tuple[float, list[float]]:
    """Amplitude bound ``2 sqrt(2n) A delta`` and frequency bounds ``amp_bound / |a_j|``."""
    amp = 2.0 * math.sqrt(2.0 * n) * amplification(N, R, omega, rho) * delta if delta else 0.0
    return amp, [amp / abs(a) for a in amplitudes]


def decoupled_bounds(q: int, R: float, omega: float, rho: float, kappa: float, delta: float,
                     amplitudes: Sequence[float]) -> tuple[float, list[float]]:
    """Bounds for one decoupled component: prefactor ``2 / kappa`` instead of ``2 sqrt(2n)``."""
    if not kappa > 0:
        raise NoCertificateError("minimal divisor is zero")
    amp = (2.0 / kappa) * amplification(q, R, omega, rho) * delta if delta else 0.0
    return amp, [amp / abs(a) for a in amplitudes]


@dataclass
class BoundReport:
    omega: float
    M_bound: int
    rho: float
    h_bar: float
    kappa: float
    tn_factor: float
    amplification: float
    amp_bound: float
    freq_bound: list[float] = field(default_factory=list)
    # the other prefactor convention, kept for comparison
    amp_bound_alt: float = math.nan
    certified: bool = False

    @property
    def freq_bound_min(self) -> float:
        return min(self.freq_bound) if self.freq_bound else math.nan

    def row(self) -> dict[str, float]:
        return {
            "omega": self.omega, "M": self.M_bound, "rho": self.rho, "h_bar": self.h_bar,
            "kappa": self.kappa, "tn_factor": self.tn_factor, "amplification": self.amplification,
            "amp_bound": self.amp_bound, "freq_bound_min": self.freq_bound_min,
        }


def bound_report(S, N: int, lam: float, delta_freq: float | None, noise: float,
                 amplitudes: Sequence[complex], kappa: float | None = None) -> BoundReport:
    """All bound quantities for fitting ``N`` terms on ``S``.

    With ``kappa=None`` the plain-fitting form (``2 sqrt(2n)``) is primary and the
    decoupled form is reported as ``amp_bound_alt``; with a ``kappa`` the roles
    swap. For ``N = 1`` (no frequency pairs) the node gap is taken as 2.
    """
    S = S if isinstance(S, SamplingSet) else SamplingSet(S)
    R, n = S.R, S.n
    span = metric_span(S, 2 * N, lam)
    if N == 1 or delta_freq is None or not math.isfinite(delta_freq):
        rho, h_bar = 2.0, math.pi
    else:
        rho = sample_gap(N, lam, R, delta_freq)
        h_bar = separation_floor(N, lam, R, delta_freq)
    mods = [abs(complex(a)) for a in amplitudes]
    k = 1.0 if kappa is None else float(kappa)
    certified = span.omega > 0 and rho > 0 and k > 0
    if not certified:
        inf = math.inf
        return BoundReport(span.omega, span.M_bound, rho, h_bar, k, inf, inf, inf, [inf] * len(mods), inf, False)
    tn = turan_nazarov_factor(2 * N, R, span.omega)
    amp_factor = amplification(N, R, span.omega, rho)
    plain, plain_f = recovery_bounds(N, n, R, span.omega, rho, noise, mods)
    dec, dec_f = decoupled_bounds(N, R, span.omega, rho, k, noise, mods)
    if kappa is None:
        primary, freq, alt = plain, plain_f, dec
    else:
        # sqrt(2n)/kappa variant of the decoupled bound
        primary, freq, alt = dec, dec_f, plain / k
    return BoundReport(span.omega, span.M_bound, rho, h_bar, k, tn, amp_factor, primary, freq, alt, True)


def doubling_improvement_ratio(N: int, lam: float, R: float) -> tuple[int, float]:
    """Span ratio between ``m = 2M`` and ``m = M`` equidistant intervals; returns ``(M, ratio)``."""
    M0 = langer_bound(N, lam, R)
    if M0 == 0:
        raise InvalidArgumentError("no zeros are possible, the span is unbounded")
    return M0, equidistant_span(2 * M0, R, N, lam) / equidistant_span(M0, R, N, lam)
