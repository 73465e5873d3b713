import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.errors import PreconditionError, RefusalError, ValidationError
from app.model.autodiff import backward, constant, variable
from app.model.semicrf import (
    Segment,
    SegmentLattice,
    count_segmentations,
    enumerate_segmentations,
    log_partition,
    nll,
    validate_segmentation,
    viterbi,
)


def lattice_keys(n, max_len, num_labels):
    return [
        (u, v, y)
        for v in range(1, n + 1)
        for u in range(max(1, v - max_len + 1), v + 1)
        for y in range(num_labels)
    ]


def random_lattice(rng, n, max_len, labels, make=constant):
    keys = lattice_keys(n, max_len, len(labels))
    draws = rng.normal(scale=2.0, size=len(keys))
    scores = {key: make(float(s)) for key, s in zip(keys, draws)}
    return SegmentLattice(n, max_len, tuple(labels), scores), draws


def indicator_matrix(segmentations, keys, labels):
    """Row k marks the lattice cells used by segmentation k."""
    column = {key: j for j, key in enumerate(keys)}
    label_index = {y: k for k, y in enumerate(labels)}
    M = np.zeros((len(segmentations), len(keys)))
    for k, seg in enumerate(segmentations):
        for s in seg:
            M[k, column[(s.u, s.v, label_index[s.y])]] = 1.0
    return M


def test_viterbi_example_two_units_one_label():
    # the pair (1,2) scores 2.0, singletons 0.5 each
    scores = {(1, 1, 0): 0.5, (2, 2, 0): 0.5, (1, 2, 0): 2.0}
    lattice = SegmentLattice.build(2, 2, ["Y"], lambda u, v, y: scores[(u, v, y)])
    best, score = viterbi(lattice)
    assert best == (Segment(1, 2, "Y"),)
    assert score == 2.0
    assert float(log_partition(lattice).value) == pytest.approx(math.log(math.exp(2.0) + math.exp(1.0)), abs=1e-12)


def test_viterbi_prefers_the_shorter_segment_on_ties():
    lattice = SegmentLattice.build(2, 2, ["Y"], lambda u, v, y: 1.0 if u == v else 2.0)
    best, score = viterbi(lattice)
    assert score == 2.0
    assert best == (Segment(1, 1, "Y"), Segment(2, 2, "Y"))


def test_viterbi_prefers_the_lower_label_on_ties():
    lattice = SegmentLattice.build(1, 1, ["A", "B"], lambda u, v, y: 0.0)
    assert viterbi(lattice)[0] == (Segment(1, 1, "A"),)


def test_single_unit_single_label():
    lattice = SegmentLattice.build(1, 1, ["Y"], lambda u, v, y: 3.0)
    assert viterbi(lattice) == ((Segment(1, 1, "Y"),), 3.0)
    assert float(log_partition(lattice).value) == 3.0
    assert float(nll(lattice, [Segment(1, 1, "Y")]).value) == 0.0


def test_l1_forces_singletons():
    lattice = SegmentLattice.build(4, 1, ["A", "B"], lambda u, v, y: float(y))
    best, _ = viterbi(lattice)
    assert [s.length for s in best] == [1, 1, 1, 1]


def test_empty_sequence_is_refused():
    lattice = SegmentLattice(0, 2, ("Y",), {})
    with pytest.raises(PreconditionError):
        viterbi(lattice)
    with pytest.raises(PreconditionError):
        log_partition(lattice)


def test_lattice_rejects_missing_or_non_finite_scores():
    with pytest.raises(PreconditionError):
        SegmentLattice(2, 2, ("Y",), {(1, 1, 0): constant(0.0)})
    with pytest.raises(PreconditionError):
        SegmentLattice.build(1, 1, ["Y"], lambda u, v, y: float("nan"))


def test_nll_rejects_invalid_gold():
    lattice = SegmentLattice.build(3, 2, ["Y"], lambda u, v, y: 0.0)
    with pytest.raises(ValidationError, match="cover"):
        nll(lattice, [Segment(1, 1, "Y"), Segment(3, 3, "Y")])
    with pytest.raises(ValidationError, match="longer"):
        nll(lattice, [Segment(1, 3, "Y")])
    with pytest.raises(ValidationError, match="unknown label"):
        nll(lattice, [Segment(1, 1, "Y"), Segment(2, 3, "Z")])


def test_validate_segmentation_requires_full_cover():
    validate_segmentation([Segment(1, 2, "A"), Segment(3, 3, "B")], 3)
    with pytest.raises(ValidationError):
        validate_segmentation([Segment(1, 2, "A")], 3)
    with pytest.raises(ValidationError):
        validate_segmentation([Segment(1, 2, "A"), Segment(2, 3, "B")], 3)


def test_count_matches_enumeration():
    for n, L, Y in itertools.product(range(1, 6), range(1, 4), range(1, 3)):
        labels = [str(k) for k in range(Y)]
        assert len(enumerate_segmentations(n, L, labels)) == count_segmentations(n, L, Y)


def test_enumeration_refuses_above_the_cap():
    with pytest.raises(RefusalError):
        enumerate_segmentations(30, 4, ["A", "B", "C"])


def test_oracle_equivalence():
    """log Z and Viterbi against brute force for every n <= 8, L <= 4, |Y| <= 3."""
    rng = np.random.default_rng(2016)
    for n, L, Y in itertools.product(range(1, 9), range(1, 5), range(1, 4)):
        labels = [chr(ord("A") + k) for k in range(Y)]
        segmentations = enumerate_segmentations(n, L, labels)
        M = indicator_matrix(segmentations, lattice_keys(n, L, Y), labels)
        for _ in range(100):
            lattice, draws = random_lattice(rng, n, L, labels)
            totals = M @ draws
            m = totals.max()
            log_z = m + math.log(np.exp(totals - m).sum())
            assert float(log_partition(lattice).value) == pytest.approx(log_z, rel=1e-9)

            best, score = viterbi(lattice)
            assert score == pytest.approx(m, rel=1e-10, abs=1e-10)
            assert best == segmentations[int(np.argmax(totals))]


def test_gold_probabilities_sum_to_one():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n, L, Y = int(rng.integers(1, 5)), int(rng.integers(1, 4)), int(rng.integers(1, 3))
        labels = [chr(ord("A") + k) for k in range(Y)]
        lattice, _ = random_lattice(rng, n, L, labels)
        total = sum(math.exp(-float(nll(lattice, gold).value))
                    for gold in enumerate_segmentations(n, L, labels))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_nll_gradient_is_marginal_minus_gold():
    rng = np.random.default_rng(11)
    for n, L, Y in [(3, 2, 2), (4, 3, 1), (5, 2, 3), (4, 4, 2)]:
        labels = [chr(ord("A") + k) for k in range(Y)]
        keys = lattice_keys(n, L, Y)
        segmentations = enumerate_segmentations(n, L, labels)
        M = indicator_matrix(segmentations, keys, labels)

        lattice, draws = random_lattice(rng, n, L, labels, make=variable)
        gold = segmentations[int(rng.integers(len(segmentations)))]
        backward(nll(lattice, gold))

        totals = M @ draws
        p = np.exp(totals - totals.max())
        p /= p.sum()
        marginals = p @ M
        gold_row = indicator_matrix([gold], keys, labels)[0]
        grads = np.array([float(lattice.scores[key].gradient) for key in keys])
        assert_allclose(grads, marginals - gold_row, atol=1e-8)


@pytest.mark.parametrize("labels, expected", [(["Y"], 4), (["Y", "Z"], 18)])
def test_log_partition_counts_zero_score_segmentations(labels, expected):
    lattice = SegmentLattice.build(3, 3, labels, lambda u, v, y: 0.0)
    assert float(log_partition(lattice).value) == pytest.approx(math.log(expected), abs=1e-12)


def test_uniform_scores_give_a_uniform_nll():
    lattice = SegmentLattice.build(3, 3, ["Y"], lambda u, v, y: 0.0)
    for gold in enumerate_segmentations(3, 3, ["Y"]):
        assert float(nll(lattice, gold).value) == pytest.approx(math.log(4), abs=1e-12)
    flat = SegmentLattice.build(3, 1, ["Y"], lambda u, v, y: 1.5)
    assert float(nll(flat, (Segment(1, 1, "Y"), Segment(2, 2, "Y"), Segment(3, 3, "Y"))).value) == 0.0


def test_shifting_every_score_keeps_the_singleton_argmax():
    rng = np.random.default_rng(21)
    labels = ("A", "B", "C")
    for _ in range(50):
        n = int(rng.integers(1, 7))
        lattice, draws = random_lattice(rng, n, 1, labels)
        c = float(rng.uniform(-5.0, 5.0))
        shifted = SegmentLattice(n, 1, labels, {k: constant(float(s.value) + c) for k, s in lattice.scores.items()})
        best, score = viterbi(lattice)
        best_shifted, score_shifted = viterbi(shifted)
        assert best_shifted == best
        assert score_shifted == pytest.approx(score + n * c, abs=1e-9)
