"""Carbon-equivalent footprints of each training policy.

Each Joule is weighted by the carbon intensity of the site where it is
spent: device computing, uplink and sidelink transmissions at the
device's intensity; data-center, parameter-server and downlink energy at
the center's intensity. The formulas here are written per policy from
the footprint table, not by post-multiplying :mod:`fedcarbon.energy`
results, so the two modules cross-check each other under uniform
intensity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .energy import ActiveSchedule, NeighborSets, Policy, resolve_schedule, cfa_fanout
from .errors import ContractError
from .quantities import Scenario, round_energy, sidelink_efficiency


@dataclass(frozen=True)
class CarbonBreakdown:
    policy: str
    compute_g: float
    comm_g: float
    rounds: int

    @property
    def total_g(self) -> float:
        return self.compute_g + self.comm_g


def _peripheral_g(scenario: Scenario, n: int) -> float:
    if scenario.peripheral_energy_j == 0:
        return 0.0
    return n * scenario.peripheral_energy_j * sum(d.carbon_intensity_g_per_j for d in scenario.devices)


def _ps_compute_g(scenario: Scenario, n: int) -> float:
    c = scenario.center
    return n * c.agg_fraction * c.pue * round_energy(c) * c.carbon_intensity_g_per_j


def _duty_cycled_compute_g(scenario: Scenario, sched: ActiveSchedule) -> float:
    total = 0.0
    for active in sched:
        for i, d in enumerate(scenario.devices):
            e = round_energy(d) if i in active else d.sleep_energy_j
            total += e * d.carbon_intensity_g_per_j
    return total


def _uplink_ci_sum(scenario: Scenario, sched: ActiveSchedule) -> float:
    return sum(scenario.devices[i].carbon_intensity_g_per_j for active in sched for i in active)


def carbon_cl(scenario: Scenario, n: int) -> CarbonBreakdown:
    if n < 0:
        raise ContractError(f"round count must be >= 0, got {n}")
    c = scenario.center
    compute = n * c.pue * round_energy(c) * c.carbon_intensity_g_per_j + _peripheral_g(scenario, n)
    alpha = scenario.effective_alpha(n)
    weighted_bits = sum(d.data_bits * d.carbon_intensity_g_per_j for d in scenario.devices)
    comm = 0.0
    if alpha and scenario.data_bits_total:
        comm = alpha * weighted_bits / scenario.comm.ee_ul
    return CarbonBreakdown(Policy.CL.value, compute, comm, n)


def carbon_fa(scenario: Scenario, n: int, schedule: Optional[ActiveSchedule] = None) -> CarbonBreakdown:
    sched = resolve_schedule(scenario, n, schedule)
    c = scenario.center
    device_g = sum(round_energy(d) * d.carbon_intensity_g_per_j for d in scenario.devices)
    compute = n * device_g + _ps_compute_g(scenario, n) + _peripheral_g(scenario, n)
    comm = 0.0
    if n > 0:
        bw = scenario.model_bits
        comm = bw * (
            _uplink_ci_sum(scenario, sched) / scenario.comm.ee_ul
            + n * c.pue * scenario.k * c.carbon_intensity_g_per_j / scenario.comm.ee_dl
        )
    return CarbonBreakdown(Policy.FA.value, compute, comm, n)


def carbon_fad(scenario: Scenario, n: int, schedule: Optional[ActiveSchedule] = None) -> CarbonBreakdown:
    sched = resolve_schedule(scenario, n, schedule)
    c = scenario.center
    compute = _duty_cycled_compute_g(scenario, sched) + _ps_compute_g(scenario, n) + _peripheral_g(scenario, n)
    uploads = sum(len(a) for a in sched)
    comm = 0.0
    if uploads:
        bw = scenario.model_bits
        comm = bw * (
            _uplink_ci_sum(scenario, sched) / scenario.comm.ee_ul
            + uploads * c.pue * c.carbon_intensity_g_per_j / scenario.comm.ee_dl
        )
    return CarbonBreakdown(Policy.FAD.value, compute, comm, n)


def carbon_cfa(
    scenario: Scenario,
    n: int,
    schedule: Optional[ActiveSchedule] = None,
    neighbor_sets: Optional[NeighborSets] = None,
    compose_sidelink: bool = False,
) -> CarbonBreakdown:
    sched = resolve_schedule(scenario, n, schedule)
    compute = _duty_cycled_compute_g(scenario, sched) + _peripheral_g(scenario, n)
    fanout = cfa_fanout(scenario, sched, neighbor_sets)
    weighted_copies = sum(
        copies * scenario.devices[k].carbon_intensity_g_per_j for row in fanout for k, copies in row.items()
    )
    comm = 0.0
    if any(any(row.values()) for row in fanout):
        ee_sl = sidelink_efficiency(scenario.comm, scenario.center.pue, compose_sidelink)
        comm = scenario.model_bits * weighted_copies / ee_sl
    return CarbonBreakdown(Policy.CFA.value, compute, comm, n)


def carbon_ego(scenario: Scenario, n: int) -> CarbonBreakdown:
    """Isolated on-device learning: local compute and peripherals only."""
    device_g = sum(round_energy(d) * d.carbon_intensity_g_per_j for d in scenario.devices)
    return CarbonBreakdown("EGO", n * device_g + _peripheral_g(scenario, n), 0.0, n)


def carbon_footprint(
    policy: "Policy | str",
    scenario: Scenario,
    n: int,
    schedule: Optional[ActiveSchedule] = None,
    *,
    neighbor_sets: Optional[NeighborSets] = None,
    compose_sidelink: bool = False,
) -> CarbonBreakdown:
    policy = Policy.parse(policy)
    if policy is Policy.CL:
        return carbon_cl(scenario, n)
    if policy is Policy.FA:
        return carbon_fa(scenario, n, schedule)
    if policy is Policy.FAD:
        return carbon_fad(scenario, n, schedule)
    return carbon_cfa(scenario, n, schedule, neighbor_sets, compose_sidelink)


@dataclass(frozen=True)
class PolicyComparison:
    footprints: dict[str, CarbonBreakdown]
    deltas_g: dict[str, float]

    def greener_than_cl(self) -> list[str]:
        return [p for p, d in self.deltas_g.items() if d < 0]


def compare_policies(
    scenario: Scenario,
    rounds: Mapping["Policy | str", int],
    schedules: Optional[Mapping["Policy | str", ActiveSchedule]] = None,
    compose_sidelink: bool = False,
) -> PolicyComparison:
    """Footprints per policy and their signed difference to CL (negative = greener)."""
    rounds = {Policy.parse(p): n for p, n in rounds.items()}
    schedules = {Policy.parse(p): s for p, s in (schedules or {}).items()}
    if Policy.CL not in rounds:
        raise ContractError("compare_policies needs a CL baseline round count")
    footprints = {
        p.value: carbon_footprint(p, scenario, n, schedules.get(p), compose_sidelink=compose_sidelink)
        for p, n in rounds.items()
    }
    base = footprints[Policy.CL.value].total_g
    deltas = {p: fp.total_g - base for p, fp in footprints.items()}
    return PolicyComparison(footprints, deltas)
