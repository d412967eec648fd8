import threading
import time
from contextlib import contextmanager

import requests

from cvm.core import NodeRuntime, bootstrap
from cvm.gateway import GatewayServer
from cvm.monitoring import CountMethod


@contextmanager
def running_gateway(tmp_path, ui_dir=None):
    node = NodeRuntime(journal_path=tmp_path / "journal.log", scan_interval=0.05)
    bootstrap(node)
    node.start_control_loop()
    server = GatewayServer(node, ui_dir=ui_dir)
    host, port = server.start()
    try:
        yield node, f"http://{host}:{port}"
    finally:
        server.stop()
        node.shutdown()


def test_symbols_endpoint_lists_bootstrap_keywords(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        symbols = requests.get(f"{base}/api/symbols", timeout=5).json()
        assert isinstance(symbols, list)
        assert "connect" in symbols
        assert "runCCM" in symbols


def test_topology_endpoint_reflects_demo(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        requests.post(f"{base}/api/script", data="(deploy_demo 0 1)", timeout=5)
        node.demos[-1].wait(5)
        topo = requests.get(f"{base}/api/topology", timeout=5).json()
        assert len(topo["containers"]) == 2
        impls = {
            c["impl"]: c["id"]
            for container in topo["containers"]
            for c in container["components"]
        }
        assert set(impls) == {"SeqEmitter", "SeqSink"}
        (conn,) = topo["connections"]
        assert conn["source"] == {"component": impls["SeqEmitter"], "receptacle": "out"}
        assert conn["target"] == {"component": impls["SeqSink"], "facet": "in"}


def test_script_post_returns_per_form_results(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        resp = requests.post(f"{base}/api/script", data="(define x 1)", timeout=5)
        assert resp.status_code == 200
        assert resp.json() == {"results": [{"index": 0, "ok": "unit"}]}


def test_script_post_parse_error_is_400_with_location(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        resp = requests.post(f"{base}/api/script", data="(((", timeout=5)
        assert resp.status_code == 400
        body = resp.json()
        assert body["line"] == 1
        assert body["column"] in (1, 2, 3)
        assert "unbalanced" in body["error"]


def test_script_post_eval_error_is_200_with_error_entry(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        resp = requests.post(f"{base}/api/script", data="(define a 5) (boom) (define b 6)", timeout=5)
        assert resp.status_code == 200
        results = resp.json()["results"]
        assert results[0] == {"index": 0, "ok": "unit"}
        assert results[1]["index"] == 1
        assert "boom" in results[1]["error"]
        assert len(results) == 2  # the failing form stopped the remainder


def test_metrics_endpoint_before_and_after_install(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        assert requests.get(f"{base}/api/metrics", timeout=5).json() == {
            "installed": False,
            "metrics": [],
        }
        service = node.install_monitoring()
        service.register_metric(CountMethod("Echo", "echo"))
        container = node.create_container()
        caller = node.deploy_component(container, "Caller")
        echo = node.deploy_component(container, "Echo")
        node.connect(caller, "out", echo, "in")
        for _ in range(3):
            node.send_request(caller, "out", "echo", [])
        service.scan_once()
        body = requests.get(f"{base}/api/metrics", timeout=5).json()
        assert body["installed"] is True
        (metric,) = body["metrics"]
        assert metric["kind"] == "count_method"
        assert metric["impl"] == "Echo"
        assert metric["operation"] == "echo"
        assert metric["count"] == 3


def test_event_stream_pushes_topology_changes(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        events = []
        ready = threading.Event()

        def listen():
            with requests.get(f"{base}/api/events", stream=True, timeout=10) as resp:
                ready.set()
                for line in resp.iter_lines():
                    if line.startswith(b"event: "):
                        events.append(line[7:].decode())
                        if "topology-changed" in events:
                            return

        t = threading.Thread(target=listen, daemon=True)
        t.start()
        assert ready.wait(5)
        time.sleep(0.2)  # subscription races the first mutation otherwise
        node.create_container()
        t.join(5)
        assert "topology-changed" in events


def test_event_stream_pushes_metrics_updates(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        service = node.install_monitoring()
        service.register_metric(CountMethod("Echo", "echo"))
        container = node.create_container()
        caller = node.deploy_component(container, "Caller")
        echo = node.deploy_component(container, "Echo")
        node.connect(caller, "out", echo, "in")

        events = []
        ready = threading.Event()

        def listen():
            with requests.get(f"{base}/api/events", stream=True, timeout=10) as resp:
                ready.set()
                for line in resp.iter_lines():
                    if line.startswith(b"event: "):
                        events.append(line[7:].decode())
                        if "metrics-updated" in events:
                            return

        t = threading.Thread(target=listen, daemon=True)
        t.start()
        assert ready.wait(5)
        time.sleep(0.2)
        node.send_request(caller, "out", "echo", [])
        service.scan_once()
        t.join(5)
        assert "metrics-updated" in events


def test_static_ui_serving_and_traversal_guard(tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<html>console</html>")
    with running_gateway(tmp_path, ui_dir=ui) as (node, base):
        resp = requests.get(f"{base}/", timeout=5)
        assert resp.status_code == 200
        assert "console" in resp.text
        assert requests.get(f"{base}/../secrets", timeout=5).status_code == 404
        assert requests.get(f"{base}/nope.js", timeout=5).status_code == 404


def test_unknown_api_path_is_404(tmp_path):
    with running_gateway(tmp_path) as (node, base):
        assert requests.get(f"{base}/api/nope", timeout=5).status_code == 404
        assert requests.post(f"{base}/api/nope", data="x", timeout=5).status_code == 404
