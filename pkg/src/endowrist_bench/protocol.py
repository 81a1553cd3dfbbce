"""Line protocol of the controller twin.

Grammar (ASCII, tokens separated by single or repeated spaces, LF-terminated,
an optional CR before the LF is tolerated)::

    INIT | INSERTED | RESET | POS? | STATE? | MOVE <int> <int> <int> <int>

Keywords are case-sensitive. MOVE targets are absolute microsteps for the
z, x, y1, y2 motors. Responses::

    OK <verb> | DONE z x y1 y2 | POS z x y1 y2 | STATE <phase> | ERR <code> <message>
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import BenchError

VERBS = ("INIT", "INSERTED", "MOVE", "POS?", "STATE?", "RESET")
_INT = re.compile(r"^[+-]?[0-9]{1,9}$")
MAX_LINE = 256


class ParseError(BenchError):
    def __init__(self, position: int, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"at {position}: {reason}")


@dataclass(frozen=True)
class Command:
    verb: str
    args: tuple = ()


def parse_command(line) -> Command:
    """Parse one line (bytes or str). Never raises anything but ParseError."""
    if isinstance(line, str):
        try:
            line = line.encode("ascii")
        except UnicodeEncodeError as exc:
            raise ParseError(exc.start, "non-ASCII input") from None
    if not line.endswith(b"\n"):
        raise ParseError(len(line), "missing line terminator")
    body = line[:-1]
    if body.endswith(b"\r"):
        body = body[:-1]
    if len(body) > MAX_LINE:
        raise ParseError(MAX_LINE, "line too long")
    for i, byte in enumerate(body):
        if not 0x20 <= byte < 0x7F:
            raise ParseError(i, "non-printable or non-ASCII byte")
    text = body.decode("ascii")
    tokens = text.split()
    if not tokens:
        raise ParseError(0, "empty command")
    verb = tokens[0]
    if verb not in VERBS:
        raise ParseError(text.index(verb), f"unknown keyword {verb!r}")
    args = tokens[1:]
    if verb == "MOVE":
        if len(args) != 4:
            raise ParseError(len(text), f"MOVE takes 4 integers, got {len(args)}")
        for a in args:
            if not _INT.match(a):
                raise ParseError(text.index(a), f"not an integer: {a!r}")
        return Command("MOVE", tuple(int(a) for a in args))
    if args:
        raise ParseError(text.index(args[0]), f"{verb} takes no arguments")
    return Command(verb)


def format_positions(tag: str, positions) -> str:
    return tag + " " + " ".join(str(int(p)) for p in positions)


def ok(verb: str) -> str:
    return f"OK {verb}"


def err(code: int, message: str) -> str:
    return f"ERR {code} {message}"


_RESPONSE = re.compile(
    r"^(OK (INIT|INSERTED|MOVE|RESET)"
    r"|(DONE|POS) -?\d+ -?\d+ -?\d+ -?\d+"
    r"|STATE (BOOT|HOMING|WAIT_INSTRUMENT|SWEEP|CENTERING|READY|FAULT)"
    r"|ERR \d{3} \S.*)$"
)


def is_well_formed_response(line: str) -> bool:
    return bool(_RESPONSE.match(line))
