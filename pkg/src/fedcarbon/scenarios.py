"""Built-in communication profiles, case-study presets and multi-stage accounting."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .carbon import CarbonBreakdown, carbon_ego, carbon_footprint
from .energy import Policy
from .errors import ConfigurationError, ContractError, UnknownNameError
from .quantities import (
    BITS_PER_MB,
    J_PER_WH,
    CenterProfile,
    CommProfile,
    DeviceProfile,
    ModelSpec,
    Scenario,
    ci_to_grams_per_joule,
    round_energy,
)

KBIT = 1e3

COMM_PROFILES: dict[str, CommProfile] = {
    "LTE": CommProfile(ee_ul_bits_per_j=15 * KBIT, ee_dl_bits_per_j=25 * KBIT),
    "NBIOT": CommProfile(ee_ul_bits_per_j=25 * KBIT, ee_dl_bits_per_j=50 * KBIT),
    "TISCH": CommProfile(ee_sl_bits_per_j=20 * KBIT),
    "WIFI_NAN": CommProfile(ee_sl_bits_per_j=100 * KBIT),
    # WWAN used for the MNIST/CIFAR examples
    "NBIOT_WWAN": CommProfile(ee_ul_bits_per_j=10 * KBIT, ee_dl_bits_per_j=50 * KBIT),
}

# NB-IoT deep sleep, about 10 uW
NBIOT_SLEEP_J = 0.036 * J_PER_WH


def builtin_comm_profile(name: str) -> CommProfile:
    key = name.strip().upper().replace("-", "_")
    try:
        return COMM_PROFILES[key]
    except KeyError:
        raise UnknownNameError(f"unknown communication profile {name!r}; known: {sorted(COMM_PROFILES)}") from None


@dataclass(frozen=True)
class Stage:
    """One training stage of a continual process.

    ``stage_sleep_j`` and ``stage_peripheral_j`` are per-device Joules
    for the whole stage; when given they are spread evenly over the
    stage's rounds, overriding the scenario's per-round values.
    """

    data_bits: float
    rounds: int
    policy: str = Policy.FAD.value
    stage_sleep_j: Optional[float] = None
    stage_peripheral_j: Optional[float] = None

    def __post_init__(self):
        if self.rounds < 0 or self.data_bits < 0:
            raise ContractError("stage rounds and data size must be >= 0")
        object.__setattr__(self, "policy", Policy.parse(self.policy).value)


@dataclass(frozen=True)
class StagePlan:
    stages: tuple[Stage, ...]
    retrainings_per_day: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ContractError("a stage plan needs at least one stage")


def stage_scenario(stage: Stage, scenario: Scenario) -> Scenario:
    """The scenario as seen by one stage: its data size and prorated energies."""
    devices = []
    for d in scenario.devices:
        sleep = d.sleep_energy_j
        if stage.stage_sleep_j is not None:
            sleep = stage.stage_sleep_j / stage.rounds if stage.rounds else 0.0
            # a sleeping device never costs more than a working one
            sleep = min(sleep, round_energy(d))
        devices.append(replace(d, data_bits=stage.data_bits, sleep_energy_j=sleep))
    peripheral = scenario.peripheral_energy_j
    if stage.stage_peripheral_j is not None:
        peripheral = stage.stage_peripheral_j / stage.rounds if stage.rounds else 0.0
    return replace(scenario, devices=tuple(devices), peripheral_energy_j=peripheral)


def stage_footprint(stage: Stage, scenario: Scenario, compose_sidelink: bool = False) -> CarbonBreakdown:
    return carbon_footprint(stage.policy, stage_scenario(stage, scenario), stage.rounds,
                            compose_sidelink=compose_sidelink)


def annualize(per_stage_g: float, retrainings_per_day: float = 1.0) -> float:
    return per_stage_g * retrainings_per_day * 365.0


@dataclass(frozen=True)
class ContinualSummary:
    stages: tuple[CarbonBreakdown, ...]
    total: CarbonBreakdown
    per_retraining_g: float
    annual_g: float


def continual_total(plan: StagePlan, scenario: Scenario, compose_sidelink: bool = False) -> ContinualSummary:
    """Footprint of every stage, their sum, and the yearly retraining cost.

    The yearly figure uses the mean footprint of the retraining stages
    (all but the first), or of the only stage for a single-stage plan.
    """
    fps = tuple(stage_footprint(s, scenario, compose_sidelink) for s in plan.stages)
    policies = {fp.policy for fp in fps}
    total = CarbonBreakdown(
        fps[0].policy if len(policies) == 1 else "MIXED",
        sum(fp.compute_g for fp in fps),
        sum(fp.comm_g for fp in fps),
        sum(fp.rounds for fp in fps),
    )
    retrain = fps[1:] or fps
    per_stage = sum(fp.total_g for fp in retrain) / len(retrain)
    return ContinualSummary(fps, total, per_stage, annualize(per_stage, plan.retrainings_per_day))


def rl_accounting(scenario: Scenario, n: int, include_ego: bool = False,
                  compose_sidelink: bool = False) -> dict[str, CarbonBreakdown]:
    """Footprints when fresh observations are produced every round.

    CL uploads the data again each round (alpha = n); federated policies
    move models only. Peripheral energy is charged identically to all.
    """
    rl = replace(scenario, alpha_per_round=True)
    out = {}
    for p in Policy:
        try:
            out[p.value] = carbon_footprint(p, rl, n, compose_sidelink=compose_sidelink)
        except ConfigurationError:
            # e.g. CFA without a sidelink profile
            if p is Policy.CL:
                raise
    if include_ego:
        out["EGO"] = carbon_ego(rl, n)
    return out


# -- case-study presets --------------------------------------------------------

EU_CI_KG_PER_KWH = 0.9
RTX3090_PUE = 1.67


def _hri_continual() -> tuple[Scenario, StagePlan]:
    ci = ci_to_grams_per_joule(EU_CI_KG_PER_KWH)
    initial = Stage(31 * BITS_PER_MB, 40, Policy.FAD.value, 0.05 * J_PER_WH, 3 * J_PER_WH)
    retrain = Stage(19 * BITS_PER_MB, 12, Policy.FAD.value, 0.05 * J_PER_WH, 3 * J_PER_WH)
    device = DeviceProfile(
        power_w=15.0,
        batch_time_s=0.140,
        batches_per_round=3,
        sleep_energy_j=initial.stage_sleep_j / initial.rounds,
        carbon_intensity_g_per_j=ci,
        data_bits=initial.data_bits,
        examples_count=1,
    )
    center = CenterProfile(power_w=590.0, batch_time_s=0.010, batches_per_round=3,
                           pue=RTX3090_PUE, agg_fraction=0.05, carbon_intensity_g_per_j=ci)
    scenario = Scenario.uniform(
        device, 9,
        center=center,
        comm=COMM_PROFILES["LTE"],
        model=ModelSpec(param_count=28_000, bits=1.08 * BITS_PER_MB),
        k_active=4,
        neighbors=2,
        alpha=1.0,
        peripheral_energy_j=initial.stage_peripheral_j / initial.rounds,
    )
    return scenario, StagePlan((initial, retrain, retrain), retrainings_per_day=1.0)


def _rl_robots() -> tuple[Scenario, StagePlan]:
    ci = ci_to_grams_per_joule(EU_CI_KG_PER_KWH)
    stage = Stage(24.6 * BITS_PER_MB, 500, Policy.FA.value, 0.05 * J_PER_WH, 6.6 * J_PER_WH)
    device = DeviceProfile(
        power_w=5.1,
        batch_time_s=0.400,
        batches_per_round=3,
        sleep_energy_j=stage.stage_sleep_j / stage.rounds,
        carbon_intensity_g_per_j=ci,
        data_bits=stage.data_bits,
        examples_count=1,
    )
    center = CenterProfile(power_w=590.0, batch_time_s=0.020, batches_per_round=3,
                           pue=RTX3090_PUE, agg_fraction=0.05, carbon_intensity_g_per_j=ci)
    scenario = Scenario.uniform(
        device, 5,
        center=center,
        comm=COMM_PROFILES["LTE"],
        model=ModelSpec(param_count=1_300_000, bits=5.6 * BITS_PER_MB),
        k_active=5,
        neighbors=2,
        alpha=1.0,
        alpha_per_round=True,
        peripheral_energy_j=stage.stage_peripheral_j / stage.rounds,
    )
    return scenario, StagePlan((stage,), retrainings_per_day=1.0)


PRESETS = {
    "HRI_CONTINUAL": _hri_continual,
    "RL_ROBOTS": _rl_robots,
}


def case_study_preset(name: str) -> tuple[Scenario, StagePlan]:
    key = name.strip().upper().replace("-", "_")
    try:
        return PRESETS[key]()
    except KeyError:
        raise UnknownNameError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def mnist_scenario(k: int = 30, k_active: int = 20, pue: float = 1.5) -> Scenario:
    """Image-classification setup: 6.2 Mbit per device, 180 kbit model, EE_U=10k / EE_D=50k.

    Device power and batch time are illustrative, chosen so that phi = 0.14.
    """
    ci = ci_to_grams_per_joule(EU_CI_KG_PER_KWH)
    device = DeviceProfile(power_w=3.5, batch_time_s=0.14, batches_per_round=1,
                           carbon_intensity_g_per_j=ci, data_bits=6.2e6, examples_count=1000)
    center = CenterProfile(power_w=350.0, batch_time_s=0.01, batches_per_round=1,
                           pue=pue, agg_fraction=0.05, carbon_intensity_g_per_j=ci)
    return Scenario.uniform(device, k, center=center, comm=COMM_PROFILES["NBIOT_WWAN"],
                            model=ModelSpec(param_count=5_625), k_active=k_active,
                            neighbors=2, alpha=1.0)
