import numpy as np
import pytest

from shiftrecon import oracle
from shiftrecon.errors import DegenerateSystemError, InvalidArgumentError, RankDeficiencyWarning
from shiftrecon.prony import (PronyInstance, match_solutions, min_max_matching, perturbation_constant,
                              prony_inverse, prony_map)


@pytest.mark.parametrize("a,x,m", [
    ([2], [1], [2, 2]),
    ([1, 1], [1, -1], [2, 0, 2, 0]),
    ([1, 2], [1j, -1j], [3, -1j, -3, 1j]),
])
def test_prony_map_examples(a, x, m):
    np.testing.assert_allclose(prony_map(PronyInstance(x, a)), m, atol=1e-14)


@pytest.mark.parametrize("m,a,x", [
    ([2, 2], [2], [1]),
    ([2, 0, 2, 0], [1, 1], [1, -1]),
    ([3, -1j, -3, 1j], [1, 2], [1j, -1j]),
])
def test_prony_inverse_examples(m, a, x):
    inst = prony_inverse(m)
    ref = PronyInstance(x, a)
    _, node_err, amp_err = match_solutions(ref, inst)
    assert node_err < 1e-12 and amp_err < 1e-12
    # independent Newton solve agrees
    if len(a) > 1:
        xs, amps = oracle.prony_solve_direct(m, len(a))
        _, e1, e2 = match_solutions(ref, PronyInstance(xs, amps))
        assert e1 < 1e-9 and e2 < 1e-9


def test_prony_instance_validation():
    with pytest.raises(InvalidArgumentError):
        PronyInstance([1, 1], [1, 2])
    with pytest.raises(InvalidArgumentError):
        PronyInstance([1, -1], [1, 0])
    with pytest.raises(InvalidArgumentError):
        PronyInstance([1], [1, 2])


def test_from_frequencies_and_unit_circle():
    inst = PronyInstance.from_frequencies([1, 2], [0.5, -1.0], 2.0)
    np.testing.assert_allclose(inst.nodes, np.exp(1j * np.array([1.0, -2.0])))
    assert inst.on_unit_circle
    assert not PronyInstance([2.0], [1.0]).on_unit_circle


def test_colliding_nodes_are_degenerate():
    m = prony_map(PronyInstance(np.exp(1j * np.array([0.0, 1e-9])), [1.0, 1.0]))
    with pytest.raises(DegenerateSystemError):
        prony_inverse(m)


def test_tiny_amplitude_warns():
    # node 1e13 with amplitude 1e-13: well-conditioned Hankel, relatively negligible amplitude
    with pytest.warns(RankDeficiencyWarning):
        inst = prony_inverse([1e-13, 1.0])
    assert inst.nodes[0] == pytest.approx(1e13)


def test_prony_inverse_rejects_odd_length():
    with pytest.raises(InvalidArgumentError):
        prony_inverse([1, 2, 3])


@pytest.mark.parametrize("nodes,expected", [
    ([1, -1], 2.0),
    (np.exp(1j * np.array([0.0, np.pi / 3])), 32.0),
    ([1j], 2.0),
])
def test_perturbation_constant(nodes, expected):
    assert perturbation_constant(nodes) == pytest.approx(expected)


def test_perturbation_constant_rejects():
    with pytest.raises(InvalidArgumentError):
        perturbation_constant([1, 1])
    with pytest.raises(InvalidArgumentError):
        perturbation_constant([2.0, 1.0])


def test_match_solutions_examples():
    ref = PronyInstance(np.exp(1j * np.array([0.1, 1.2, 2.5])), [1, 2j, -1])
    perm, e1, e2 = match_solutions(ref, ref)
    assert perm == (0, 1, 2) and e1 == 0 and e2 == 0
    swapped = PronyInstance(ref.nodes[[2, 0, 1]], ref.amplitudes[[2, 0, 1]])
    perm, e1, e2 = match_solutions(ref, swapped)
    assert perm == (1, 2, 0) and e1 == 0 and e2 == 0
    rot = PronyInstance(ref.nodes * np.exp(1e-6j), ref.amplitudes)
    _, e1, _ = match_solutions(ref, rot)
    assert e1 == pytest.approx(1e-6, rel=1e-6)


def test_min_max_matching_large_uses_assignment():
    rng = np.random.default_rng(0)
    p = rng.permutation(9)
    cost = np.abs(np.arange(9)[:, None] - p[None, :]).astype(float)
    assert tuple(p[list(min_max_matching(cost))]) == tuple(range(9))
