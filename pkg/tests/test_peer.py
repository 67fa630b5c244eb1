import numpy as np
import pytest

from tpm_reconcile.channel import SeededRng, make_frame
from tpm_reconcile.peer import TransportError, connect, parse_endpoint, run_peer
from tpm_reconcile.reconciliation import SessionConfig, reconcile
from tpm_reconcile.tpm import TpmParams
from tpm_reconcile.wire import ProtocolError

CONFIG = SessionConfig(TpmParams(10, 15, 8), 4, record_transcript=True)


def frame_and_reference(config, qber, seed):
    rng = SeededRng(seed)
    alice, bob = make_frame(config.key_length, qber, rng)
    reference = reconcile(alice, bob, config, rng)
    rng = SeededRng(seed)
    make_frame(config.key_length, qber, rng)  # advance to the same stream position
    return alice, bob, rng, reference


def assert_equivalent(alice_report, bob_report, ref):
    for rep in (alice_report, bob_report):
        assert (rep.success, rep.rounds, rep.total_iterations, rep.entropy_loss) == (
            ref.success, ref.rounds, ref.total_iterations, ref.entropy_loss,
        )
        assert rep.transcript == ref.transcript
    assert alice_report.alice_bits == ref.alice_bits
    assert bob_report.bob_bits == ref.bob_bits
    if ref.success:
        assert alice_report.bob_bits == bob_report.alice_bits == ref.alice_bits
    else:
        assert alice_report.bob_bits is None and bob_report.alice_bits is None


def test_zero_qber_closes_after_identity_probe(loopback_session):
    alice, bob, rng, ref = frame_and_reference(CONFIG, 0.0, 1)
    a, b = loopback_session(CONFIG, alice, bob, rng)
    assert a.success and b.success
    assert a.total_iterations == 0 and a.rounds == 0
    assert_equivalent(a, b, ref)


@pytest.mark.parametrize("qber, seed", [(0.005, 3), (0.01, 0), (0.05, 2), (0.15, 4)])
def test_matches_in_process_reconcile(loopback_session, qber, seed):
    alice, bob, rng, ref = frame_and_reference(CONFIG, qber, seed)
    a, b = loopback_session(CONFIG, alice, bob, rng)
    assert_equivalent(a, b, ref)


def test_small_network_success_path(loopback_session):
    from tpm_reconcile.codec import derive_halfwidth

    config = SessionConfig(TpmParams(3, 4, derive_halfwidth(2)), 2, 300, record_transcript=True)
    successes = 0
    for seed in range(5):
        alice, bob, rng, ref = frame_and_reference(config, 0.1, seed)
        a, b = loopback_session(config, alice, bob, rng)
        assert_equivalent(a, b, ref)
        successes += ref.success
    assert successes > 0


def test_parameter_mismatch_aborts_both(loopback_session):
    other = SessionConfig(TpmParams(9, 15, 8), 4)
    rng = SeededRng(0)
    a_key, _ = make_frame(other.key_length, 0.0, rng)
    b_key = make_frame(CONFIG.key_length, 0.0, SeededRng(0))[1]
    a, b = loopback_session(CONFIG, a_key, b_key, rng, alice_config=other)
    assert isinstance(a, ProtocolError)
    assert isinstance(b, ProtocolError)


def test_connect_failure_is_transport_error():
    with pytest.raises(TransportError):
        connect("127.0.0.1:1", timeout=0.2)


def test_peer_validation():
    key = np.zeros(600, dtype=np.uint8)
    with pytest.raises(ValueError):
        run_peer("carol", "127.0.0.1:1", CONFIG, key)
    with pytest.raises(ValueError):
        run_peer("alice", "127.0.0.1:1", CONFIG, key)  # no rng
    with pytest.raises(ValueError):
        run_peer("bob", "127.0.0.1:1", CONFIG, key[:10])


@pytest.mark.parametrize("text, expected", [("127.0.0.1:80", ("127.0.0.1", 80)), (":9000", ("127.0.0.1", 9000)), ("[::1]:5", ("::1", 5))])
def test_parse_endpoint(text, expected):
    assert parse_endpoint(text) == expected


@pytest.mark.parametrize("text", ["localhost", "host:", "host:abc", "host:70000"])
def test_parse_endpoint_rejects(text):
    with pytest.raises(ValueError):
        parse_endpoint(text)
