from cvm.runtime import ComponentRuntime
from cvm.demo import deploy_demo, latency_probe


def test_baseline_delivery_is_ordered_and_complete():
    rt = ComponentRuntime()
    topo = deploy_demo(rt, interval_ms=0, count=100)
    assert topo.wait(10)
    assert topo.received() == [(seq, f"msg-{seq}") for seq in range(1, 101)]
    assert topo.failures == []


def test_zero_interval_means_back_to_back_emission():
    rt = ComponentRuntime()
    topo = deploy_demo(rt, interval_ms=0, count=500)
    assert topo.wait(10)
    assert len(topo.received()) == 500


def test_two_deployments_are_independent():
    rt = ComponentRuntime()
    t1 = deploy_demo(rt, interval_ms=0, count=10)
    t2 = deploy_demo(rt, interval_ms=0, count=20)
    assert t1.wait(10) and t2.wait(10)
    assert len({t1.container_a, t1.container_b, t2.container_a, t2.container_b}) == 4
    assert t1.emitter != t2.emitter
    assert len(t1.received()) == 10
    assert len(t2.received()) == 20


def test_emission_rate_honors_interval():
    rt = ComponentRuntime()
    import time

    start = time.monotonic()
    topo = deploy_demo(rt, interval_ms=5, count=40)
    assert topo.wait(10)
    elapsed = time.monotonic() - start
    assert elapsed >= 0.2  # 40 messages at 5 ms spacing


def test_latency_probe_returns_positive_stats():
    rt = ComponentRuntime()
    mean_us, std_us = latency_probe(rt, requests=200, warmup=50, runs=1)
    assert mean_us > 0
    assert std_us >= 0
