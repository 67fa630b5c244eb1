import queue
import threading

import pytest

from tpm_reconcile.peer import run_peer


def loopback(config, alice_key, bob_key, rng, *, alice_config=None, session_id=0, timeout=10.0):
    """Run Bob (listening, in a thread) and Alice (connecting) over 127.0.0.1.

    Returns ``(alice_result, bob_result)``; a result is either a report or the
    exception that side raised.
    """
    bound = queue.Queue()
    out = {}

    def bob():
        try:
            out["bob"] = run_peer(
                "bob", "127.0.0.1:0", config, bob_key, listen=True,
                session_id=session_id, timeout=timeout, on_listening=bound.put,
            )
        except Exception as exc:  # surfaced to the test
            out["bob"] = exc

    t = threading.Thread(target=bob, daemon=True)
    t.start()
    host, port = bound.get(timeout=timeout)
    try:
        out["alice"] = run_peer(
            "alice", f"{host}:{port}", alice_config or config, alice_key, rng,
            session_id=session_id, timeout=timeout,
        )
    except Exception as exc:
        out["alice"] = exc
    t.join(timeout)
    return out["alice"], out["bob"]


@pytest.fixture
def loopback_session():
    return loopback


_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label, title): exit criterion, summarised after the run")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        _criteria.append((marker.args[0], marker.args[1], rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, title, passed, detail in sorted(_criteria, key=lambda c: int(c[0][1:])):
        line = f"{'PASS' if passed else 'FAIL'}  {label}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
