import math
import random
from types import SimpleNamespace

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tpm_reconcile.metrics import FIELDS, aggregate, entropy_loss, frame_error_rate


def report(success, iterations, rounds=1, L=8):
    return SimpleNamespace(success=success, total_iterations=iterations, rounds=rounds, entropy_loss=entropy_loss(iterations, L))


def test_entropy_loss_zero():
    assert entropy_loss(0, 8) == 0.0
    assert entropy_loss(0, 512) == 0.0


def test_entropy_loss_matches_printed_form():
    mpmath.mp.dps = 40
    expected = mpmath.log(mpmath.mpf(2) ** 100, 17)
    assert float(expected) == pytest.approx(24.4650542118226, rel=1e-12)
    assert entropy_loss(100, 8) == pytest.approx(float(expected), rel=1e-12)


def test_entropy_loss_shrinks_with_range():
    assert entropy_loss(100, 512) < entropy_loss(100, 8)


@given(a=st.integers(0, 10**6), b=st.integers(0, 10**6), L=st.integers(1, 2**20))
def test_entropy_loss_linear_in_iterations(a, b, L):
    assert entropy_loss(a + b, L) == pytest.approx(entropy_loss(a, L) + entropy_loss(b, L), rel=1e-9, abs=1e-12)


@given(i=st.integers(1, 10**6), L=st.integers(1, 2**19))
def test_entropy_loss_strictly_decreasing_in_range(i, L):
    assert entropy_loss(i, L + 1) < entropy_loss(i, L)


def test_entropy_loss_validation():
    with pytest.raises(ValueError):
        entropy_loss(-1, 8)
    with pytest.raises(ValueError):
        entropy_loss(1, 0)


@pytest.mark.parametrize("failed, total, fer", [(0, 1000, 0.0), (1000, 1000, 1.0), (37, 1000, 0.037)])
def test_frame_error_rate(failed, total, fer):
    assert frame_error_rate(failed, total) == fer


def test_frame_error_rate_validation():
    with pytest.raises(ValueError):
        frame_error_rate(0, 0)
    with pytest.raises(ValueError):
        frame_error_rate(5, 4)


def test_aggregate_single():
    p = aggregate([report(True, 12)], 0.01)
    assert p.mean_iterations == 12 and p.fer == 0 and p.trials == 1 and p.std_iterations == 0


def test_aggregate_pair():
    p = aggregate([report(True, 10), report(False, 300)], 0.15)
    assert p.fer == 0.5
    assert p.mean_iterations == 155
    assert p.std_iterations == 145
    assert p.mean_entropy_loss == pytest.approx(155 / math.log2(17), rel=1e-12)


def test_aggregate_is_order_independent_and_duplicate_stable():
    rng = random.Random(4)
    reports = [report(rng.random() < 0.6, rng.randint(0, 300), rng.randint(0, 200)) for _ in range(257)]
    base = aggregate(reports, 0.05)
    shuffled = reports[:]
    rng.shuffle(shuffled)
    assert aggregate(shuffled, 0.05) == base
    doubled = aggregate(reports + reports, 0.05)
    assert doubled.trials == 2 * base.trials
    for f in FIELDS:
        if f != "trials":
            assert getattr(doubled, f) == getattr(base, f), f


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate([], 0.1)
