import re
import subprocess
import sys
import time
from pathlib import Path

import pytest
import requests

from cvm.lang import parse
from cvm.protocol import submit


@pytest.fixture
def spawned_node(tmp_path):
    bootstrap_script = tmp_path / "site.mvv"
    bootstrap_script.write_text('(define site "lab-7")\n(add_url_classloader "file:/opt/plugins")\n')
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "cvm.node",
            "--bind",
            "127.0.0.1:0",
            "--gateway",
            "127.0.0.1:0",
            "--bootstrap",
            str(bootstrap_script),
            "--journal",
            str(tmp_path / "journal.log"),
            "--demo",
            "0:25",
            "--ui",
            str(Path(__file__).resolve().parents[1] / "frontend"),
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    admin = gateway = None
    deadline = time.time() + 20
    while time.time() < deadline and (admin is None or gateway is None):
        line = proc.stdout.readline()
        if not line:
            break
        if m := re.match(r"admin protocol on ([\d.]+:\d+)", line):
            admin = m.group(1)
        if m := re.match(r"http gateway on (http://[\d.]+:\d+)", line):
            gateway = m.group(1)
    if admin is None or gateway is None:
        proc.kill()
        pytest.fail(f"node did not come up: {proc.stderr.read()}")
    yield admin, gateway
    proc.terminate()
    proc.wait(10)


def test_node_cli_serves_admin_and_gateway(spawned_node, tmp_path):
    admin, gateway = spawned_node

    # bootstrap script ran before listening
    results = submit(admin, parse("site"))
    assert results[0].ok
    assert results[0].value == "lab-7"

    # demo deployed and bound to the script names
    results = submit(admin, parse("demo_a demo_b"))
    assert all(r.ok for r in results)

    topo = requests.get(f"{gateway}/api/topology", timeout=5).json()
    impls = {c["impl"] for container in topo["containers"] for c in container["components"]}
    assert {"SeqEmitter", "SeqSink"} <= impls

    # static console served from --ui
    page = requests.get(f"{gateway}/", timeout=5)
    assert page.status_code == 200
    assert "cvm console" in page.text


def test_node_cli_refuses_broken_bootstrap(tmp_path):
    bad = tmp_path / "bad.mvv"
    bad.write_text("(boom)\n")
    proc = subprocess.run(
        [sys.executable, "-m", "cvm.node", "--bind", "127.0.0.1:0", "--bootstrap", str(bad)],
        capture_output=True,
        text=True,
        timeout=30,
    )
    assert proc.returncode != 0
    assert "boom" in proc.stderr
