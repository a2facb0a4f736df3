"""Print the packaged demos: the instrument family at a few eps values, LATE and Verma."""

import sys

from rcmscm.cli import run

RUNS = [
    ["demo", "instrument", "--eps", "0"],
    ["demo", "instrument", "--eps", "1/8"],
    ["demo", "instrument", "--eps", "1/4"],
    ["demo", "late"],
    ["demo", "verma"],
]

if __name__ == "__main__":
    worst = 0
    for argv in RUNS:
        print("$ rcmscm " + " ".join(argv))
        worst = max(worst, run(argv))
        print()
    sys.exit(worst)
