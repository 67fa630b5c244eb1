import inspect

import numpy as np
import pytest

import tpm_reconcile.adversary as adversary
from tpm_reconcile.adversary import passive_attack, random_weights
from tpm_reconcile.channel import SeededRng, make_frame
from tpm_reconcile.codec import encode
from tpm_reconcile.reconciliation import SessionConfig, reconcile
from tpm_reconcile.tpm import Rule, TpmParams, train

PARAMS = TpmParams(10, 15, 8)


def recorded(qber, seed, rule=Rule.HEBBIAN):
    config = SessionConfig(TpmParams(10, 15, 8, rule), 4, record_transcript=True)
    rng = SeededRng(seed)
    alice, bob = make_frame(600, qber, rng)
    report = reconcile(alice, bob, config, rng)
    return report, encode(report.alice_bits, 4, 10, 15), encode(alice, 4, 10, 15)


def test_empty_transcript_leaves_eve_at_random_draw():
    report, target, _ = recorded(0.0, 1)
    assert report.transcript == ()
    eve = passive_attack(report.transcript, PARAMS, 5, target)
    start = random_weights(PARAMS, SeededRng(5))
    assert eve.overlap == np.mean(start == target)
    assert not eve.synchronized
    assert eve.iterations_observed == 0
    # about 1/16 of entries agree by chance for L=8
    assert eve.overlap < 0.25


@pytest.mark.parametrize("rule", list(Rule))
def test_eve_with_alices_start_stays_synchronized(rule):
    report, target, alice_start = recorded(0.01, 3, rule)
    assert report.total_iterations > 0
    eve = passive_attack(report.transcript, TpmParams(10, 15, 8, rule), 0, target, initial=alice_start)
    assert eve.synchronized and eve.overlap == 1.0


def test_naive_eve_does_not_synchronize_at_paper_scale():
    report, target, _ = recorded(0.01, 0)
    eve = passive_attack(report.transcript, PARAMS, 11, target)
    assert not eve.synchronized
    assert 0.0 <= eve.overlap < 1.0
    assert eve.iterations_observed == report.total_iterations


def test_deterministic_under_seed():
    report, target, _ = recorded(0.01, 2)
    assert passive_attack(report.transcript, PARAMS, 4, target) == passive_attack(report.transcript, PARAMS, 4, target)


def test_mismatched_entries_are_ignored():
    report, target, _ = recorded(0.03, 6)
    matched_only = [e for e in report.transcript if e.matched]
    assert len(matched_only) < len(report.transcript)
    full = passive_attack(report.transcript, PARAMS, 8, target)
    trimmed = passive_attack(matched_only, PARAMS, 8, target)
    assert full.overlap == trimmed.overlap and full.synchronized == trimmed.synchronized


def test_eve_uses_the_shared_update():
    assert adversary.train is train
    assert "train(" in inspect.getsource(passive_attack)


def test_validation():
    with pytest.raises(ValueError):
        passive_attack(None, PARAMS, 0, np.zeros((10, 15), dtype=int))
    with pytest.raises(ValueError):
        passive_attack([], PARAMS, 0, np.zeros((3, 3), dtype=int))
    with pytest.raises(ValueError):
        passive_attack([], PARAMS, 0, np.zeros((10, 15), dtype=int), initial=np.zeros((2, 2)))


def test_random_weights_cover_codec_range():
    w = random_weights(TpmParams(50, 50, 8), SeededRng(1))
    assert w.min() == -8 and w.max() == 7
