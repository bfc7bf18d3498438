"""The Prony map ``(x, a) -> (m_0..m_{2N-1})``, ``m_k = sum_j a_j x_j^k``, and its inverse."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateSystemError, InvalidArgumentError, RankDeficiencyWarning

HANKEL_COND_MAX = 1e12
UNIT_CIRCLE_TOL = 1e-10


@dataclass(frozen=True)
class PronyInstance:
    nodes: NDArray[np.complex128]
    amplitudes: NDArray[np.complex128]

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.nodes, dtype=np.complex128)).copy()
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=np.complex128)).copy()
        if x.ndim != 1 or x.shape != a.shape or x.size == 0:
            raise InvalidArgumentError("nodes and amplitudes must be nonempty 1-d of equal length")
        if np.any(a == 0):
            raise InvalidArgumentError("amplitudes must be nonzero")
        if x.size > 1 and min_node_distance(x) == 0:
            raise InvalidArgumentError("nodes must be pairwise distinct")
        x.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "amplitudes", a)

    @property
    def N(self) -> int:
        return int(self.nodes.size)

    @property
    def on_unit_circle(self) -> bool:
        return bool(np.all(np.abs(np.abs(self.nodes) - 1) <= UNIT_CIRCLE_TOL))

    @classmethod
    def from_frequencies(cls, amplitudes: ArrayLike, frequencies: ArrayLike, s0: float) -> "PronyInstance":
        """Nodes ``exp(i phi_j s0)`` for the samples ``H(k s0)``."""
        phi = np.asarray(frequencies, dtype=np.float64)
        return cls(np.exp(1j * phi * s0), amplitudes)


def min_node_distance(nodes: ArrayLike) -> float:
    x = np.asarray(nodes, dtype=np.complex128)
    i, j = np.triu_indices(x.size, k=1)
    return float(np.min(np.abs(x[i] - x[j]))) if i.size else float("inf")


def prony_map(inst: PronyInstance) -> NDArray[np.complex128]:
    k = np.arange(2 * inst.N)
    return (inst.nodes[None, :] ** k[:, None]) @ inst.amplitudes


def prony_inverse(moments: ArrayLike) -> PronyInstance:
    """Recover nodes and amplitudes from ``2N`` moments.

    The monic Prony polynomial's coefficients solve the ``N x N`` Hankel system
    ``[m_{i+j}] c = -[m_{i+N}]``; its roots (companion eigenvalues) are the nodes,
    and the amplitudes are the least-squares Vandermonde fit to all moments.

    Raises
    ------
    DegenerateSystemError
        If the Hankel matrix has condition number above ``1e12``.
    """
    m = np.atleast_1d(np.asarray(moments, dtype=np.complex128))
    if m.ndim != 1 or m.size == 0 or m.size % 2:
        raise InvalidArgumentError("need an even, nonzero number of moments")
    N = m.size // 2
    H = np.array([[m[i + j] for j in range(N)] for i in range(N)])
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > HANKEL_COND_MAX:
        raise DegenerateSystemError(f"Hankel matrix is singular to working precision (cond={cond:.3g})")
    c = np.linalg.solve(H, -m[N:2 * N])
    companion = np.zeros((N, N), dtype=np.complex128)
    companion[1:, :-1] = np.eye(N - 1)
    companion[:, -1] = -c
    nodes = np.linalg.eigvals(companion)
    V = nodes[None, :] ** np.arange(2 * N)[:, None]
    amps = np.linalg.lstsq(V, m, rcond=None)[0]
    scale = float(np.max(np.abs(m)))
    if np.any(np.abs(amps) < 1e-12 * scale):
        warnings.warn("a recovered amplitude is numerically zero", RankDeficiencyWarning, stacklevel=2)
    if np.any(amps == 0):
        raise DegenerateSystemError("a recovered amplitude is exactly zero")
    return PronyInstance(nodes, amps)


def perturbation_constant(nodes: ArrayLike) -> float:
    """Upper bound ``2 (2 / Lambda)^{2N}`` on the inverse Prony Lipschitz constant.

    ``Lambda`` is the minimal node distance; for a single node it is taken as the
    unit-circle diameter 2.
    """
    x = np.atleast_1d(np.asarray(nodes, dtype=np.complex128))
    if np.any(np.abs(np.abs(x) - 1) > UNIT_CIRCLE_TOL):
        raise InvalidArgumentError("nodes must lie on the unit circle")
    lam = 2.0 if x.size == 1 else min_node_distance(x)
    if lam == 0:
        raise InvalidArgumentError("nodes coincide")
    return 2.0 * (2.0 / lam) ** (2 * x.size)


def min_max_matching(primary: NDArray[np.float64], secondary: NDArray[np.float64] | None = None) -> tuple[int, ...]:
    """Permutation ``p`` minimizing ``max_j primary[j, p[j]]``, ties by ``secondary``.

    Exhaustive for up to 7 items; above that a min-sum assignment is used.
    """
    n = primary.shape[0]
    if n > 7:
        rows, cols = linear_sum_assignment(primary)
        return tuple(int(c) for c in cols[np.argsort(rows)])
    best_key, best = None, None
    rows = np.arange(n)
    for perm in itertools.permutations(range(n)):
        p = np.array(perm)
        key = (float(primary[rows, p].max()), 0.0 if secondary is None else float(secondary[rows, p].max()))
        if best_key is None or key < best_key:
            best_key, best = key, perm
    return tuple(best)


def match_solutions(ref: PronyInstance, cand: PronyInstance) -> tuple[tuple[int, ...], float, float]:
    """Align ``cand`` to ``ref``: returns ``(perm, max node error, max amplitude error)``.

    ``cand.nodes[perm[j]]`` is paired with ``ref.nodes[j]``.
    """
    if ref.N != cand.N:
        raise InvalidArgumentError("instances have different sizes")
    node_cost = np.abs(ref.nodes[:, None] - cand.nodes[None, :])
    amp_cost = np.abs(ref.amplitudes[:, None] - cand.amplitudes[None, :])
    perm = min_max_matching(node_cost, amp_cost)
    idx = np.arange(ref.N)
    p = np.array(perm)
    return perm, float(node_cost[idx, p].max()), float(amp_cost[idx, p].max())
