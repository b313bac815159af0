"""OSC 1.0 wire format: encode, inspect the bytes, decode, loop back over UDP.

Run:  python demos/03_osc_codec.py
"""

import time

from puppeteer import osc

# -- encoding is bit-exact --------------------------------------------------

msg = osc.OscMessage(osc.ADDR_MOVE, ("orange",))
data = osc.encode(msg)
print(f"{msg.address} {msg.args} -> {len(data)} bytes")
for i in range(0, len(data), 4):
    word = data[i:i + 4]
    text = "".join(chr(b) if 32 <= b < 127 else "." for b in word)
    print(f"  {i:3d}  {word.hex()}  |{text}|")

assert osc.decode(data) == msg

# waypoint messages carry seven joint angles + a timestamp as float32
wp = osc.OscMessage(osc.ADDR_WAYPOINT,
                    (0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785, 0.01))
print(f"\nwaypoint datagram: {len(osc.encode(wp))} bytes "
      f"(MTU budget {osc.MAX_DATAGRAM})")

# -- loopback over a real UDP socket -----------------------------------------

received = []
with osc.OscListener(0, received.append) as listener:
    osc.send(wp, ("127.0.0.1", listener.port))
    osc.send(msg, ("127.0.0.1", listener.port))
    # malformed datagrams are logged and dropped, never fatal
    import socket
    junk = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    junk.sendto(b"\x01\x02\x03", ("127.0.0.1", listener.port))
    junk.close()
    deadline = time.monotonic() + 2
    while len(received) < 2 and time.monotonic() < deadline:
        time.sleep(0.01)

print(f"\nloopback received {len(received)} well-formed messages:")
for m in received:
    print(f"  {m.address} {m.args}")
