"""End-to-end energy of centralized and federated training policies.

Every function returns computing and communication Joules separately.
Active-device schedules are explicit inputs so that the energy, carbon
and simulator layers all consume the same participation history.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ContractError
from .quantities import Scenario, round_energy, sidelink_efficiency


class Policy(str, enum.Enum):
    CL = "CL"
    FA = "FA"
    FAD = "FA-D"
    CFA = "CFA"

    @classmethod
    def parse(cls, value: "str | Policy") -> "Policy":
        if isinstance(value, Policy):
            return value
        key = str(value).strip().upper().replace("_", "-")
        aliases = {"FAD": "FA-D"}
        key = aliases.get(key, key)
        for p in cls:
            if p.value == key:
                return p
        raise ContractError(f"unknown policy {value!r}; expected one of cl, fa, fad, cfa")

    @property
    def slug(self) -> str:
        return self.value.lower().replace("-", "")


@dataclass(frozen=True)
class EnergyBreakdown:
    compute_j: float
    comm_j: float
    rounds: int

    @property
    def total_j(self) -> float:
        return self.compute_j + self.comm_j


def schedule_active(t: int, k: int, k_active: int) -> frozenset[int]:
    """Round-robin window of ``k_active`` devices for round ``t``."""
    if not 1 <= k_active <= k:
        raise ContractError(f"need 1 <= k_active <= K, got k_active={k_active}, K={k}")
    return frozenset((t * k_active + i) % k for i in range(k_active))


@dataclass(frozen=True)
class ActiveSchedule:
    """Per-round sets of active devices, all of size ``k_active``."""

    rounds: tuple[frozenset[int], ...]
    k: int
    k_active: int

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(frozenset(r) for r in self.rounds))
        for t, active in enumerate(self.rounds):
            if len(active) != self.k_active:
                raise ContractError(f"round {t} has {len(active)} active devices, expected {self.k_active}")
            if any(not 0 <= i < self.k for i in active):
                raise ContractError(f"round {t} names a device outside 0..{self.k - 1}")

    @classmethod
    def round_robin(cls, n: int, k: int, k_active: int) -> "ActiveSchedule":
        return cls(tuple(schedule_active(t, k, k_active) for t in range(n)), k, k_active)

    @classmethod
    def stationary(cls, n: int, k: int, active: Iterable[int]) -> "ActiveSchedule":
        active = frozenset(active)
        return cls((active,) * n, k, len(active))

    @classmethod
    def for_scenario(cls, scenario: Scenario, n: int) -> "ActiveSchedule":
        return cls.round_robin(n, scenario.k, scenario.k_active)

    def __len__(self) -> int:
        return len(self.rounds)

    def __iter__(self):
        return iter(self.rounds)

    def activations(self) -> list[int]:
        """How many rounds each device was active."""
        counts = [0] * self.k
        for active in self.rounds:
            for i in active:
                counts[i] += 1
        return counts


# per-round, per-active-device neighbor sets for CFA traffic
NeighborSets = Sequence[Mapping[int, Iterable[int]]]


def resolve_schedule(scenario: Scenario, n: int, schedule: Optional[ActiveSchedule]) -> ActiveSchedule:
    if n < 0:
        raise ContractError(f"round count must be >= 0, got {n}")
    if schedule is None:
        return ActiveSchedule.for_scenario(scenario, n)
    if len(schedule) != n:
        raise ContractError(f"schedule covers {len(schedule)} rounds but n={n}")
    if schedule.k != scenario.k:
        raise ContractError(f"schedule is for K={schedule.k} devices, scenario has K={scenario.k}")
    return schedule


def _peripheral_j(scenario: Scenario, n: int) -> float:
    return n * scenario.k * scenario.peripheral_energy_j


def _device_compute_j(scenario: Scenario, sched: ActiveSchedule) -> float:
    """Active devices train, the rest sleep."""
    e_active = [round_energy(d) for d in scenario.devices]
    e_sleep = [d.sleep_energy_j for d in scenario.devices]
    total = 0.0
    for active in sched:
        total += sum(e_active[i] if i in active else e_sleep[i] for i in range(scenario.k))
    return total


def energy_cl(scenario: Scenario, n: int) -> EnergyBreakdown:
    if n < 0:
        raise ContractError(f"round count must be >= 0, got {n}")
    center = scenario.center
    compute = center.pue * n * round_energy(center) + _peripheral_j(scenario, n)
    alpha = scenario.effective_alpha(n)
    data_bits = scenario.data_bits_total
    comm = alpha * data_bits / scenario.comm.ee_ul if alpha * data_bits > 0 else 0.0
    return EnergyBreakdown(compute, comm, n)


def energy_fa(scenario: Scenario, n: int, schedule: Optional[ActiveSchedule] = None) -> EnergyBreakdown:
    sched = resolve_schedule(scenario, n, schedule)
    center = scenario.center
    compute = (
        center.pue * n * center.agg_fraction * round_energy(center)
        + n * sum(round_energy(d) for d in scenario.devices)
        + _peripheral_j(scenario, n)
    )
    uploads = sum(len(a) for a in sched)
    comm = 0.0
    if n > 0:
        dl = center.pue / scenario.comm.ee_dl
        ul = 1.0 / scenario.comm.ee_ul
        comm = scenario.model_bits * (n * scenario.k * dl + uploads * ul)
    return EnergyBreakdown(compute, comm, n)


def energy_fad(scenario: Scenario, n: int, schedule: Optional[ActiveSchedule] = None) -> EnergyBreakdown:
    sched = resolve_schedule(scenario, n, schedule)
    center = scenario.center
    compute = (
        center.pue * n * center.agg_fraction * round_energy(center)
        + _device_compute_j(scenario, sched)
        + _peripheral_j(scenario, n)
    )
    uploads = sum(len(a) for a in sched)
    comm = 0.0
    if uploads:
        # same operation order as energy_fa so full participation matches exactly
        dl = center.pue / scenario.comm.ee_dl
        ul = 1.0 / scenario.comm.ee_ul
        comm = scenario.model_bits * (uploads * dl + uploads * ul)
    return EnergyBreakdown(compute, comm, n)


def cfa_fanout(scenario: Scenario, sched: ActiveSchedule,
               neighbor_sets: Optional[NeighborSets] = None) -> list[dict[int, int]]:
    """Number of model copies each active device sends, per round."""
    if neighbor_sets is None:
        return [{k: scenario.neighbors for k in active} for active in sched]
    if len(neighbor_sets) != len(sched):
        raise ContractError(f"neighbor sets cover {len(neighbor_sets)} rounds, schedule has {len(sched)}")
    fanout = []
    for t, (active, sets) in enumerate(zip(sched, neighbor_sets)):
        row = {}
        for k in active:
            nbrs = set(sets.get(k, ()))
            if k in nbrs:
                raise ContractError(f"device {k} lists itself as a neighbor at round {t}")
            if len(nbrs) != scenario.neighbors:
                raise ContractError(
                    f"device {k} has {len(nbrs)} neighbors at round {t}, expected N={scenario.neighbors}"
                )
            row[k] = len(nbrs)
        fanout.append(row)
    return fanout


def energy_cfa(
    scenario: Scenario,
    n: int,
    schedule: Optional[ActiveSchedule] = None,
    neighbor_sets: Optional[NeighborSets] = None,
    compose_sidelink: bool = False,
) -> EnergyBreakdown:
    sched = resolve_schedule(scenario, n, schedule)
    compute = _device_compute_j(scenario, sched) + _peripheral_j(scenario, n)
    copies = sum(sum(row.values()) for row in cfa_fanout(scenario, sched, neighbor_sets))
    comm = 0.0
    if copies:
        ee_sl = sidelink_efficiency(scenario.comm, scenario.center.pue, compose_sidelink)
        comm = copies * scenario.model_bits / ee_sl
    return EnergyBreakdown(compute, comm, n)


def energy_ego(scenario: Scenario, n: int) -> EnergyBreakdown:
    """Every device trains alone on its own data; radios stay off."""
    compute = n * sum(round_energy(d) for d in scenario.devices) + _peripheral_j(scenario, n)
    return EnergyBreakdown(compute, 0.0, n)


def energy(policy: "Policy | str", scenario: Scenario, n: int,
           schedule: Optional[ActiveSchedule] = None, *,
           neighbor_sets: Optional[NeighborSets] = None,
           compose_sidelink: bool = False) -> EnergyBreakdown:
    policy = Policy.parse(policy)
    if policy is Policy.CL:
        return energy_cl(scenario, n)
    if policy is Policy.FA:
        return energy_fa(scenario, n, schedule)
    if policy is Policy.FAD:
        return energy_fad(scenario, n, schedule)
    return energy_cfa(scenario, n, schedule, neighbor_sets, compose_sidelink)
