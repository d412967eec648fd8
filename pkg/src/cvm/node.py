"""Node process entry point: bootstrap, admin listener, gateway, control loop."""

from __future__ import annotations

import argparse
import os
import sys

from .core import NodeRuntime, bootstrap
from .gateway import DEFAULT_PORT as GATEWAY_PORT, GatewayServer
from .lang.reader import parse
from .lang.values import Handle, HandleKind
from .protocol import DEFAULT_PORT as ADMIN_PORT, AdminServer, parse_address
from . import demo


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cvm-node", description="Run one cvm node.")
    parser.add_argument("--bind", default=f"127.0.0.1:{ADMIN_PORT}", help="admin protocol address")
    parser.add_argument(
        "--gateway", default=f"127.0.0.1:{GATEWAY_PORT}", help="HTTP gateway address"
    )
    parser.add_argument("--no-gateway", action="store_true", help="disable the HTTP gateway")
    parser.add_argument(
        "--bootstrap",
        metavar="FILE",
        default=os.environ.get("CVM_BOOTSTRAP"),
        help="initial-deployment script, run before listening (env CVM_BOOTSTRAP)",
    )
    parser.add_argument("--journal", metavar="FILE", help="monitoring journal path")
    parser.add_argument("--scan-interval", type=float, default=None, help="scanner period (s)")
    parser.add_argument(
        "--demo",
        metavar="INTERVAL_MS:COUNT",
        help="deploy the demo traffic generator, e.g. --demo 1:10000",
    )
    parser.add_argument("--ui", metavar="DIR", help="serve a static console from DIR")
    args = parser.parse_args(argv)

    node = NodeRuntime(journal_path=args.journal, scan_interval=args.scan_interval)
    bootstrap(node)

    if args.bootstrap:
        with open(args.bootstrap, "r", encoding="utf-8") as f:
            source = f.read()
        for form in parse(source).forms:
            node.eval_form(form)  # refuse to start on a broken bootstrap script

    if args.demo:
        interval_ms, _, count = args.demo.partition(":")
        topo = demo.deploy_demo(node, float(interval_ms), int(count or "0"))
        node.demos.append(topo)
        for name, value in (
            ("demo_ca", Handle(HandleKind.CONTAINER, topo.container_a)),
            ("demo_cb", Handle(HandleKind.CONTAINER, topo.container_b)),
            ("demo_a", Handle(HandleKind.COMPONENT, topo.emitter)),
            ("demo_b", Handle(HandleKind.COMPONENT, topo.sink)),
        ):
            node.env.define_value(name, value)

    admin = AdminServer(node, *parse_address(args.bind))
    admin_addr = admin.start()
    print(f"admin protocol on {admin_addr[0]}:{admin_addr[1]}", flush=True)

    gateway = None
    if not args.no_gateway:
        gateway = GatewayServer(node, *parse_address(args.gateway), ui_dir=args.ui)
        gw_addr = gateway.start()
        print(f"http gateway on http://{gw_addr[0]}:{gw_addr[1]}", flush=True)

    try:
        node.control_loop()
    except KeyboardInterrupt:
        pass
    finally:
        admin.stop()
        if gateway is not None:
            gateway.stop()
        node.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
