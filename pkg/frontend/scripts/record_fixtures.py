"""Record a real gateway session into JSON fixtures for the client tests.

Connects to an in-process gateway over the actual websocket protocol,
drives a short run (agent creation, building placement, a mayor chat),
and saves the snapshot plus every pushed event exactly as received.

    python3 frontend/scripts/record_fixtures.py
"""

import json
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO / "tests"))

from starlette.testclient import TestClient  # noqa: E402

from townsim.gateway import GatewayServer  # noqa: E402

from helpers import build_town_state, make_runtime  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> int:
    runtime = make_runtime()
    state = build_town_state(runtime, seed=404)
    server = GatewayServer(state, runtime, ticks_per_sec=100.0, start_paused=True)
    pushes = []
    counter = 0

    with TestClient(server.app) as client:
        with client.websocket_connect("/ws") as ws:

            def send(kind, payload=None):
                nonlocal counter
                counter += 1
                msg_id = f"rec{counter}"
                ws.send_text(json.dumps({"msg_id": msg_id, "kind": kind, "payload": payload or {}}))
                while True:
                    message = json.loads(ws.receive_text())
                    if message.get("msg_id") == msg_id:
                        return message
                    pushes.append(message)

            send("hello", {"role": "mayor"})
            send("subscribe", {"streams": ["events"], "resume_from": {"tick": -1, "seq": -1}})
            snapshot = send("snapshot")["payload"]
            send(
                "create_agent",
                {
                    "profile": {"name": "Dana", "bio": "New in town.", "goal": "", "backend": "scripted-v1", "cash": 5},
                    "spawn": [8, 1],
                },
            )
            send("create_building", {"building_id": 2, "origin": [6, 5]})
            mayor_ack = send("mayor_say", {"target_agent": "Ada", "text": "How is the town treating you?"})
            send("resume")
            deadline = time.monotonic() + 10.0
            while time.monotonic() < deadline:
                if state.tick >= mayor_ack["payload"]["applies_at_tick"] + 5:
                    break
                time.sleep(0.02)
            send("pause")
            # the reply to this snapshot drains the push queue ahead of it
            final_snapshot = send("snapshot")["payload"]

    OUT.mkdir(parents=True, exist_ok=True)
    stream = {"snapshot": snapshot, "pushes": pushes, "final_snapshot": final_snapshot}
    OUT.joinpath("stream.json").write_text(json.dumps(stream, indent=1) + "\n")
    kinds = {}
    for push in pushes:
        kind = push["payload"]["kind"]
        kinds[kind] = kinds.get(kind, 0) + 1
    print(f"recorded {len(pushes)} pushes up to tick {final_snapshot['tick']}: {kinds}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
