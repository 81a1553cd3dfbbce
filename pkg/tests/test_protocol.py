import pytest
from hypothesis import given
from hypothesis import strategies as st

from endowrist_bench.protocol import Command, ParseError, err, format_positions, is_well_formed_response, ok, parse_command


@pytest.mark.parametrize("line,cmd", [
    ("MOVE 0 0 0 0\n", Command("MOVE", (0, 0, 0, 0))),
    ("MOVE -5 +6 7 -8\r\n", Command("MOVE", (-5, 6, 7, -8))),
    ("INIT\n", Command("INIT")),
    ("POS?\n", Command("POS?")),
    (b"STATE?\n", Command("STATE?")),
    ("  RESET  \n", Command("RESET")),
])
def test_parse_valid(line, cmd):
    assert parse_command(line) == cmd


@pytest.mark.parametrize("line", [
    "MOVE 10 -20 5\n",  # arity
    "move 1 2 3 4\n",  # case-sensitive
    "MOVE 1 2 3 x\n",
    "MOVE 1.5 2 3 4\n",
    "INIT now\n",
    "INIT",  # no terminator
    "\n",
    "FOO\n",
    b"INIT\x00\n",
    "MOVE " + "1 " * 200 + "\n",
    "INITé\n",
])
def test_parse_errors(line):
    with pytest.raises(ParseError):
        parse_command(line)


def test_error_position():
    with pytest.raises(ParseError) as e:
        parse_command("MOVE 1 2 x 4\n")
    assert e.value.position == 9


@given(st.binary(max_size=80))
def test_parser_total(data):
    try:
        parse_command(data + b"\n")
    except ParseError:
        pass


def test_response_grammar():
    for line in (ok("MOVE"), err(409, "READY"), format_positions("DONE", (1, -2, 3, 4)), "STATE READY"):
        assert is_well_formed_response(line)
    for line in ("OK", "DONE 1 2", "STATE NOPE", "ERR 4 x", ""):
        assert not is_well_formed_response(line)
