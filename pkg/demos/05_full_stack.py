"""The whole stack on loopback: gateway (with a stub LLM), a simulated robot
listening for OSC waypoints, and voice-style commands over HTTP and TCP.

Run:  python demos/05_full_stack.py
"""

import json
import socket
import time

import httpx

from puppeteer.gateway import GatewayConfig, GatewayRunner
from puppeteer.sim_robot import SimRobot

sim = SimRobot(udp_port=0, http_port=0).start()
config = GatewayConfig(stub_llm=True, http_port=0, ingest_port=0,
                       osc_dest=("127.0.0.1", sim.udp_port))

with GatewayRunner(config) as runner:
    base = runner.http_base
    print(f"gateway http {base}   sim robot udp :{sim.udp_port}")

    # spawn a robot for this session; the sim mirrors it
    httpx.post(base + "/spawn", json={"base": [0, 0, 0], "session": "demo"})

    # a quick-path command over HTTP
    httpx.post(base + "/command",
               json={"text": "Blueberry, move to orange", "session": "demo"})
    while httpx.get(base + "/state",
                    params={"session": "demo"}).json()["state"] != "ready":
        time.sleep(0.05)
    print(f"after 'move to orange': sim mirrored "
          f"{sim.status()['received_count']} waypoints")

    # a paraphrase over the newline-delimited-JSON TCP ingest (the LLM path)
    host, port = runner.ingest_addr
    with socket.create_connection((host, port)) as sock:
        fh = sock.makefile("rwb")
        line = {"session": "demo", "text": "blueberry head toward the green area"}
        fh.write(json.dumps(line).encode() + b"\n")
        fh.flush()
        print(f"tcp ingest ack: {fh.readline().decode().strip()}")
    while httpx.get(base + "/state",
                    params={"session": "demo"}).json()["state"] != "ready":
        time.sleep(0.05)

    status = sim.status()
    print(f"after the paraphrase:   sim mirrored "
          f"{status['received_count']} waypoints total")
    print(f"sim joint state now     {[round(v, 3) for v in status['q']]}")

    print("\nrecent gateway events:")
    for event in httpx.get(base + "/events/recent").json()[-8:]:
        print(f"  {event}")

sim.stop()
