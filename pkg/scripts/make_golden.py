"""Regenerate the golden files under tests/golden/. Review the diff before committing."""

import csv
import sys
from pathlib import Path

from endowrist_bench.controller import TABLE_COLUMNS, Emulator, EmulatorConfig, transition_table
from endowrist_bench.fixtures import fixture_calibration

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
SESSION = ["INIT", "STATE?", "INSERTED", "POS?", "MOVE 0 0 0 0", "MOVE 16 -32 48 -64", "POS?", "STATE?"]
SESSION_SEED = 7


def session_transcript(calib) -> str:
    em = Emulator(EmulatorConfig.for_instrument(calib, seed=SESSION_SEED), calib)
    out = []
    for line in SESSION:
        out.append("> " + line)
        out.extend("< " + r for r in em.handle_line(line + "\n"))
    return "\n".join(out) + "\n"


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    calib, _ = fixture_calibration()
    (GOLDEN / "large_needle_driver.json").write_text(calib.dumps())
    with open(GOLDEN / "transition_table.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        w.writerows(transition_table(calib, EmulatorConfig.for_instrument(calib)))
    (GOLDEN / "session_transcript.txt").write_text(session_transcript(calib))
    print("wrote", *sorted(p.name for p in GOLDEN.iterdir()), file=sys.stderr)


if __name__ == "__main__":
    main()
