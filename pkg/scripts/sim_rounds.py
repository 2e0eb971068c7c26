"""Rounds to reach the target validation loss for each policy, over several seeds.

Thin wrapper over ``fedcarbon simulate``; extra arguments are passed through,
e.g. ``python3 scripts/sim_rounds.py --seeds 5 --partition label_skew --classes-per-device 2``.
"""

import sys

from fedcarbon.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not any(a == "--policy" for a in argv):
        argv = ["--policy", "fa", "--policy", "fad", "--policy", "cfa", *argv]
    raise SystemExit(main(["simulate", *argv]))
