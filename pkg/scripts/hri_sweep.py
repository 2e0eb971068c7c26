"""Footprint of the HRI continual-learning stages as the active-device count grows.

Writes a CSV to stdout (or --out) with one row per (k_active, policy).
"""

import argparse
import sys

from fedcarbon.scenarios import case_study_preset, stage_scenario
from fedcarbon.cli import SweepSpec, cmd_sweep, default_policies


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--stage", type=int, default=0, help="stage whose round count is used")
    ap.add_argument("--out")
    args = ap.parse_args()

    sc, plan = case_study_preset("HRI_CONTINUAL")
    stage = plan.stages[args.stage]
    sc = stage_scenario(stage, sc)
    sweep = SweepSpec("k_active", tuple(float(k) for k in range(1, sc.k + 1)), sc,
                     tuple(default_policies(sc, True)), rounds=stage.rounds, sid="HRI_CONTINUAL")
    text = cmd_sweep(sweep, compose_sidelink=True).to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
