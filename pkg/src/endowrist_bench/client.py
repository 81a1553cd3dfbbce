"""Client side of the line protocol, over a socket or an in-process emulator."""

from __future__ import annotations

import socket

from .errors import ProtocolError

# verbs whose OK is followed by one deferred line
_DEFERRED = {"INIT", "INSERTED", "MOVE"}


class LoopbackTransport:
    def __init__(self, emulator):
        self.emulator = emulator

    def request(self, line: str) -> list:
        return self.emulator.handle_line((line + "\n").encode("ascii"))

    def close(self):
        pass


class SocketTransport:
    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.rfile = self.sock.makefile("rb")

    def _readline(self) -> str:
        line = self.rfile.readline()
        if not line:
            raise ProtocolError("connection closed by emulator")
        return line.decode("ascii").rstrip("\n")

    def request(self, line: str) -> list:
        self.sock.sendall((line + "\n").encode("ascii"))
        first = self._readline()
        out = [first]
        parts = first.split()
        if parts[:1] == ["OK"] and parts[1:2] and parts[1] in _DEFERRED:
            out.append(self._readline())
        return out

    def close(self):
        self.rfile.close()
        self.sock.close()


class ProtocolClient:
    def __init__(self, transport):
        self.transport = transport
        self.log = []

    def _call(self, line: str) -> list:
        resp = self.transport.request(line)
        self.log.append((line, resp))
        if not resp or resp[0].startswith("ERR"):
            raise ProtocolError(f"{line!r} -> {resp}")
        return resp

    def init(self) -> str:
        return self._call("INIT")[-1]

    def inserted(self) -> str:
        last = self._call("INSERTED")[-1]
        if last != "STATE READY":
            raise ProtocolError(f"insertion sequence ended with {last!r}")
        return last

    def move(self, usteps) -> tuple:
        resp = self._call("MOVE " + " ".join(str(int(n)) for n in usteps))
        if len(resp) != 2 or not resp[1].startswith("DONE"):
            raise ProtocolError(f"MOVE expected DONE, got {resp}")
        return tuple(int(v) for v in resp[1].split()[1:])

    def position(self) -> tuple:
        return tuple(int(v) for v in self._call("POS?")[0].split()[1:])

    def phase(self) -> str:
        return self._call("STATE?")[0].split()[1]

    def start(self) -> None:
        """INIT + INSERTED: home, sweep, center."""
        self.init()
        self.inserted()
