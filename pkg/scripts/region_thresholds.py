"""Print the sustainability thresholds of the MNIST-like and HRI settings.

Usage: python3 scripts/region_thresholds.py [--rounds 29]
"""

import argparse

from fedcarbon.energy import Policy
from fedcarbon.regions import active_rounds_budget, evaluate_regions, required_dl_ul_ratio
from fedcarbon.scenarios import case_study_preset, mnist_scenario, stage_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=29)
    ap.add_argument("--pue", type=float, default=1.5)
    args = ap.parse_args()

    sc = mnist_scenario(pue=args.pue)
    print(f"MNIST-like setting, K={sc.k}, K_a={sc.k_active}, n={args.rounds}")
    for policy in (Policy.FA, Policy.FAD):
        ratio = required_dl_ul_ratio(policy, sc, args.rounds)
        print(f"  {policy.value:5s} needs EE_D/EE_U > {ratio:.3f}")
    for v in evaluate_regions(sc, args.rounds):
        state = "holds" if v.holds else "fails"
        print(f"  {v.region_id:8s} {v.lhs:12.6g} {v.orientation} {v.rhs:<12.6g} {state}")

    hri, plan = case_study_preset("HRI_CONTINUAL")
    print("HRI continual learning, K_a * n budget per stage")
    for i, stage in enumerate(plan.stages):
        budget = active_rounds_budget(stage_scenario(stage, hri))
        print(f"  stage {i} ({stage.policy}, {stage.rounds} rounds): {budget:.2f}")


if __name__ == "__main__":
    main()
