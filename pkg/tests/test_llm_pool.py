import threading
import time

import pytest

from puppeteer.llm_pool import (Delay, LlmEndpoint, LlmPool, LlmUnavailable,
                                PoolExhausted, StubLlmServer)


def test_round_robin_order():
    pool = LlmPool([LlmEndpoint("http://a"), LlmEndpoint("http://b")])
    picks = [pool.next_instance().base_url for _ in range(3)]
    assert picks == ["http://a", "http://b", "http://a"]


def test_unhealthy_endpoint_skipped_without_consuming_turn():
    a, b = LlmEndpoint("http://a"), LlmEndpoint("http://b")
    b.consecutive_failures = 3
    b.last_failure_at = time.monotonic()
    pool = LlmPool([a, b])
    assert [pool.next_instance().base_url for _ in range(3)] == ["http://a"] * 3


def test_all_unhealthy_pool_exhausted():
    a = LlmEndpoint("http://a", consecutive_failures=3)
    a.last_failure_at = time.monotonic()
    pool = LlmPool([a])
    with pytest.raises(PoolExhausted):
        pool.next_instance()


def test_probe_after_interval():
    a = LlmEndpoint("http://a", consecutive_failures=3)
    a.last_failure_at = time.monotonic() - 31
    b = LlmEndpoint("http://b")
    pool = LlmPool([a, b], probe_interval_s=30)
    # a's probe interval elapsed: it gets exactly its round-robin turn back
    assert pool.next_instance() is a


def test_complete_against_stub():
    with StubLlmServer(['{"command":"move","color":"red"}']) as server:
        pool = LlmPool([LlmEndpoint(server.base_url)])
        assert pool.complete("hello") == '{"command":"move","color":"red"}'
        assert len(server.request_log) == 1
        assert server.request_log[0]["n_predict"] == 128
        assert server.request_log[0]["temperature"] == 0
        pool.close()


def test_complete_rejects_empty_prompt():
    pool = LlmPool([LlmEndpoint("http://a")])
    with pytest.raises(ValueError):
        pool.complete("")


def test_timeout_fails_over_to_second_endpoint():
    slow = StubLlmServer([Delay(5.0)]).start()
    fast = StubLlmServer(["ok"]).start()
    try:
        a = LlmEndpoint(slow.base_url)
        b = LlmEndpoint(fast.base_url)
        pool = LlmPool([a, b])
        reply = pool.complete("ping", timeout_ms=400)
        assert reply == "ok"
        assert a.consecutive_failures == 1
        assert b.consecutive_failures == 0
        pool.close()
    finally:
        slow.stop()
        fast.stop()


def test_both_down_bounded_latency():
    pool = LlmPool([LlmEndpoint("http://127.0.0.1:1"),
                    LlmEndpoint("http://127.0.0.1:1")])
    t0 = time.monotonic()
    with pytest.raises(LlmUnavailable):
        pool.complete("ping", timeout_ms=500)
    elapsed = time.monotonic() - t0
    assert elapsed < 2 * 0.5 + 1.0  # 2 x timeout + scheduling slack
    pool.close()


def test_fairness_sequential():
    s1 = StubLlmServer(["a"]).start()
    s2 = StubLlmServer(["b"]).start()
    try:
        pool = LlmPool([LlmEndpoint(s1.base_url), LlmEndpoint(s2.base_url)])
        for _ in range(20):
            pool.complete("x")
        assert len(s1.request_log) == 10
        assert len(s2.request_log) == 10
        pool.close()
    finally:
        s1.stop()
        s2.stop()


def test_fairness_under_concurrency():
    """Cursor advancement is atomic: K*N calls -> K per endpoint."""
    servers = [StubLlmServer(["r"]).start() for _ in range(2)]
    try:
        pool = LlmPool([LlmEndpoint(s.base_url) for s in servers])
        threads = [threading.Thread(target=lambda: [pool.complete("x") for _ in range(10)])
                   for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        counts = [len(s.request_log) for s in servers]
        assert counts == [20, 20]
        pool.close()
    finally:
        for s in servers:
            s.stop()


def test_stub_cycles_script():
    with StubLlmServer(["one", "two"]) as server:
        pool = LlmPool([LlmEndpoint(server.base_url)])
        assert [pool.complete("x") for _ in range(4)] == ["one", "two", "one", "two"]
        assert len(server.request_log) == 4
        pool.close()
