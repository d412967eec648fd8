import queue
import threading
import time

import pytest

from cvm.core import CONTROL_QUEUE_DEPTH, NodeRuntime, bootstrap
from cvm.lang import parse_form


def test_control_queue_depth_is_64():
    assert CONTROL_QUEUE_DEPTH == 64


def test_submitters_block_once_the_queue_is_full(tmp_path):
    node = NodeRuntime(journal_path=tmp_path / "journal.log")
    bootstrap(node)
    form = parse_form("(define x 1)")
    # no control loop: fill the queue to capacity
    for _ in range(CONTROL_QUEUE_DEPTH):
        node.control_queue.put_nowait(("filler", None))
    with pytest.raises(queue.Full):
        node.control_queue.put_nowait(("one too many", None))

    blocked = threading.Event()
    unblocked = threading.Event()

    def submitter():
        blocked.set()
        node.submit_form(form, timeout=10)  # put() blocks on the full queue
        unblocked.set()

    t = threading.Thread(target=submitter, daemon=True)
    t.start()
    assert blocked.wait(5)
    time.sleep(0.1)
    assert not unblocked.is_set()  # still blocked while the queue is full

    # drain one slot and run the control loop so the submission completes
    node.control_queue.get_nowait()
    for _ in range(CONTROL_QUEUE_DEPTH - 1):
        node.control_queue.get_nowait()
    node.start_control_loop()
    assert unblocked.wait(5)
    node.shutdown()
