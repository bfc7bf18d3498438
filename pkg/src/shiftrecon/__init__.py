"""Recovery of exponential polynomials and shift mixtures from non-uniform samples."""
from .bounds import BoundReport, bound_report, doubling_improvement_ratio, turan_nazarov_factor
from .decouple import (BOX, DELTAPAIR, Component, DecoupledSystem, ShiftMixture, SignalModel,
                       assemble_decoupled, common_zero_set, fourier_of_mixture, min_divisor, reconstruct)
from .errors import (DegenerateSystemError, DivisionHazardError, InvalidArgumentError, NoCertificateError,
                     RankDeficientError, RankDeficiencyWarning, ShiftReconError, UnsamplableComponentError)
from .exppoly import ExpPoly, FitConstraints, NoisySamples, add_noise, evaluate, merge, sample
from .geometry import (SamplingSet, SpanReport, choose_s0, covering_number, equidistant_span, langer_bound,
                       metric_span, recommend_points, sample_gap, separation_floor)
from .lsqfit import FitOptions, FitResult, fit_least_squares, varpro_amplitudes
from .prony import PronyInstance, perturbation_constant, prony_inverse, prony_map

__version__ = "0.1.0"
