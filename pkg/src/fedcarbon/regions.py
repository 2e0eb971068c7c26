"""Sustainability regions: when does a federated policy emit less than CL?

Each predicate returns a :class:`RegionVerdict` carrying both sides of
its inequality so sweeps can trace region boundaries. All inequalities
are strict; a tie has ``margin == 0`` and does not hold.

The ``*_general`` forms accept per-device carbon intensities. Their two
sides are divided by a positive normalizer (the mean intensity of the
active devices, times ``b(E)/b(W)`` for the sidelink forms) so that with
uniform intensity they coincide numerically with the simplified forms.
Scaling both sides by a positive constant never changes a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .energy import ActiveSchedule, Policy
from .errors import ContractError, DomainError
from .quantities import Scenario, phi_ratio, sidelink_efficiency

ActiveSpec = Union[None, Iterable[int], ActiveSchedule]


@dataclass(frozen=True)
class RegionVerdict:
    region_id: str
    lhs: float
    rhs: float
    orientation: str = ">"

    def __post_init__(self):
        if self.orientation not in (">", "<"):
            raise ContractError(f"orientation must be '>' or '<', got {self.orientation!r}")

    @property
    def holds(self) -> bool:
        return self.lhs > self.rhs if self.orientation == ">" else self.lhs < self.rhs

    @property
    def margin(self) -> float:
        if math.isinf(self.lhs) and math.isinf(self.rhs) and self.lhs == self.rhs:
            return 0.0
        return self.lhs - self.rhs

    def as_dict(self) -> dict:
        return {
            "region": self.region_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "orientation": self.orientation,
            "holds": self.holds,
            "margin": self.margin,
        }


def _check_sizes(scenario: Scenario, n: float) -> None:
    if not n > 0:
        raise DomainError(f"round count must be > 0, got {n}")
    if scenario.model_bits <= 0:
        raise DomainError("model size b(W) must be > 0")


def _data_to_model(scenario: Scenario, n: float) -> float:
    """alpha * b(E) / (n * K_a * b(W)): data bits moved by CL per model upload."""
    alpha = scenario.effective_alpha(n)
    return alpha * scenario.data_bits_total / (n * scenario.k_active * scenario.model_bits)


def active_ci_sum(scenario: Scenario, active: ActiveSpec = None) -> float:
    """Sum of carbon intensities over the active devices of one round.

    ``active`` is an explicit index set, a schedule (averaged over its
    rounds), or ``None`` for the first ``k_active`` devices.
    """
    ci = [d.carbon_intensity_g_per_j for d in scenario.devices]
    if active is None:
        return sum(ci[: scenario.k_active])
    if isinstance(active, ActiveSchedule):
        if len(active) == 0:
            raise ContractError("cannot average intensities over an empty schedule")
        return sum(sum(ci[i] for i in r) for r in active) / len(active)
    idx = list(active)
    if len(idx) != scenario.k_active:
        raise ContractError(f"active set has {len(idx)} devices, scenario has k_active={scenario.k_active}")
    return sum(ci[i] for i in idx)


def _active_indices(scenario: Scenario, active: ActiveSpec) -> list[int]:
    if active is None:
        return list(range(scenario.k_active))
    if isinstance(active, ActiveSchedule):
        raise ContractError("per-device sums need an explicit active set, not a schedule")
    return list(active)


# -- uniform-intensity forms -------------------------------------------------

def region_du(policy: "Policy | str", scenario: Scenario, n: float) -> RegionVerdict:
    """Uplink/downlink efficiency requirement for FA or FA-D."""
    policy = Policy.parse(policy)
    if policy not in (Policy.FA, Policy.FAD):
        raise ContractError(f"DU region is defined for FA and FA-D, not {policy.value}")
    _check_sizes(scenario, n)
    ee_ratio = scenario.comm.ee_dl / scenario.comm.ee_ul
    lhs = ee_ratio * (_data_to_model(scenario, n) - 1.0)
    gamma = scenario.center.pue
    if policy is Policy.FA:
        return RegionVerdict("DU-FA", lhs, gamma * scenario.k / scenario.k_active)
    return RegionVerdict("DU-FAD", lhs, gamma)


def required_dl_ul_ratio(policy: "Policy | str", scenario: Scenario, n: float) -> float:
    """Smallest EE_D/EE_U placing the scenario inside the DU region (inf if none)."""
    policy = Policy.parse(policy)
    _check_sizes(scenario, n)
    excess = _data_to_model(scenario, n) - 1.0
    if excess <= 0:
        return math.inf
    gamma = scenario.center.pue
    rhs = gamma * scenario.k / scenario.k_active if policy is Policy.FA else gamma
    return rhs / excess


def region_su(scenario: Scenario, n: float, compose_sidelink: bool = False) -> RegionVerdict:
    """Sidelink efficiency requirement for CFA."""
    _check_sizes(scenario, n)
    ee_sl = sidelink_efficiency(scenario.comm, scenario.center.pue, compose_sidelink)
    alpha = scenario.effective_alpha(n)
    lhs = (ee_sl / scenario.comm.ee_ul) * alpha / (n * scenario.k_active)
    rhs = scenario.neighbors * scenario.model_bits / scenario.data_bits_total
    return RegionVerdict("SU", lhs, rhs)


def _gamma_factor(scenario: Scenario, gamma_mode: "int | str") -> int:
    if gamma_mode in (1, "1"):
        return 1
    if gamma_mode in ("N", "n") or gamma_mode == scenario.neighbors:
        return scenario.neighbors
    raise ContractError(f"gamma_mode must be 1 or 'N', got {gamma_mode!r}")


def active_rounds_budget(scenario: Scenario, gamma_mode: "int | str" = 1) -> float:
    """Bound on K_a * n from the model/data size requirement.

    Assumes equal per-device data, b(E_k) = b(E)/K. Meaningless when
    ``alpha`` follows ``n`` (see :func:`region_bw`).
    """
    if scenario.model_bits <= 0:
        raise DomainError("model size b(W) must be > 0")
    g = _gamma_factor(scenario, gamma_mode)
    if g == 0:
        return math.inf
    bek = scenario.data_bits_total / scenario.k
    return scenario.alpha * scenario.k * bek / (g * scenario.model_bits)


def max_sustainable_rounds(scenario: Scenario, gamma_mode: "int | str" = 1) -> float:
    """Largest n (exclusive) for which the size requirement can hold."""
    if scenario.alpha_per_round:
        # alpha = n cancels n: the requirement is all-or-nothing
        holds = region_bw(scenario, 1.0, gamma_mode).holds
        return math.inf if holds else 0.0
    return active_rounds_budget(scenario, gamma_mode) / scenario.k_active


def region_bw(scenario: Scenario, n: float, gamma_mode: "int | str" = 1) -> RegionVerdict:
    """Model-to-data size requirement, FA/FA-D (gamma_mode=1) or all policies ('N')."""
    if not n > 0:
        raise DomainError(f"round count must be > 0, got {n}")
    g = _gamma_factor(scenario, gamma_mode)
    bek = scenario.data_bits_total / scenario.k
    if bek <= 0:
        raise DomainError("per-device data size must be > 0")
    lhs = scenario.model_bits / bek
    alpha = scenario.effective_alpha(n)
    rhs = math.inf if g == 0 else alpha / n * scenario.k / (g * scenario.k_active)
    return RegionVerdict("BW" if g == 1 else "BW-CFA", lhs, rhs, "<")


def region_ci(policy: "Policy | str", scenario: Scenario, active: ActiveSpec = None) -> RegionVerdict:
    """Per-round computing requirement on carbon intensities.

    FA sums over the whole fleet (every device trains), FA-D and CFA over
    the active set. Both sides are divided by the center intensity.
    """
    policy = Policy.parse(policy)
    c = scenario.center
    beta = c.agg_fraction
    if beta >= 1:
        raise DomainError("aggregation fraction must be < 1")
    if policy is Policy.FA:
        idx = range(scenario.k)
    elif policy in (Policy.FAD, Policy.CFA):
        idx = _active_indices(scenario, active)
    else:
        raise ContractError("CI region is defined for FA, FA-D and CFA")
    weighted = sum(phi_ratio(scenario.devices[i], c) * scenario.devices[i].carbon_intensity_g_per_j for i in idx)
    if policy is not Policy.CFA:
        weighted /= 1.0 - beta
    ci0 = c.carbon_intensity_g_per_j
    scale = ci0 if ci0 > 0 else 1.0
    region = {Policy.FA: "CI-FA", Policy.FAD: "CI-FAD", Policy.CFA: "CI-CFA"}[policy]
    return RegionVerdict(region, weighted / scale, c.pue * ci0 / scale, "<")


# -- per-device intensity forms ----------------------------------------------

def _sigma(scenario: Scenario) -> list[float]:
    q = [d.examples_count for d in scenario.devices]
    total = sum(q)
    if total <= 0:
        raise DomainError("total example count Q must be > 0")
    return [qk / total for qk in q]


def _weighted_ci(scenario: Scenario) -> float:
    q = [d.examples_count for d in scenario.devices]
    total = sum(q)
    if total <= 0:
        raise DomainError("total example count Q must be > 0")
    return sum(qk * d.carbon_intensity_g_per_j for qk, d in zip(q, scenario.devices)) / total


def h_factor(scenario: Scenario, n: float) -> float:
    """Example-weighted carbon intensity scaled by the data/model traffic ratio."""
    _check_sizes(scenario, n)
    return _data_to_model(scenario, n) * sum(
        s * d.carbon_intensity_g_per_j for s, d in zip(_sigma(scenario), scenario.devices)
    )


def _ci_ratio(scenario: Scenario, active: ActiveSpec) -> tuple[float, float]:
    """(mean active intensity or 1 if zero, weighted intensity / that mean)."""
    mean_active = active_ci_sum(scenario, active) / scenario.k_active
    scale = mean_active if mean_active > 0 else 1.0
    return scale, _weighted_ci(scenario) / scale


def region_du_general(policy: "Policy | str", scenario: Scenario, n: float,
                      active: ActiveSpec = None) -> RegionVerdict:
    """DU requirement with per-device intensities (sides divided by mean active CI)."""
    policy = Policy.parse(policy)
    if policy not in (Policy.FA, Policy.FAD):
        raise ContractError(f"DU region is defined for FA and FA-D, not {policy.value}")
    _check_sizes(scenario, n)
    scale, w = _ci_ratio(scenario, active)
    mean_active = active_ci_sum(scenario, active) / scenario.k_active / scale
    ee_ratio = scenario.comm.ee_dl / scenario.comm.ee_ul
    lhs = ee_ratio * (_data_to_model(scenario, n) * w - mean_active)
    ci0 = scenario.center.carbon_intensity_g_per_j / scale
    gamma = scenario.center.pue
    if policy is Policy.FA:
        return RegionVerdict("DU-FA", lhs, gamma * scenario.k / scenario.k_active * ci0)
    return RegionVerdict("DU-FAD", lhs, gamma * ci0)


def region_su_general(scenario: Scenario, n: float, form: str = "sidelink",
                      active: ActiveSpec = None, compose_sidelink: bool = False) -> RegionVerdict:
    """CFA-vs-CL requirement with per-device intensities.

    ``form``: ``"sidelink"`` uses EE_S (given or composed); ``"wwan"`` is
    the exact UL+DL relay at unit PUE; ``"wwan_limit"`` is its large
    EE_D/EE_U limit, equivalent to the size bound with Gamma = N.
    Sides are divided by mean active CI times b(E)/b(W).
    """
    _check_sizes(scenario, n)
    if scenario.data_bits_total <= 0:
        raise DomainError("total data size b(E) must be > 0")
    scale, w = _ci_ratio(scenario, active)
    mean_active = active_ci_sum(scenario, active) / scenario.k_active / scale
    alpha = scenario.effective_alpha(n)
    traffic = alpha * w / (n * scenario.k_active)  # H normalized
    size = scenario.model_bits / scenario.data_bits_total
    nbr = scenario.neighbors * mean_active * size
    if form == "sidelink":
        ee_sl = sidelink_efficiency(scenario.comm, scenario.center.pue, compose_sidelink)
        return RegionVerdict("SU", ee_sl / scenario.comm.ee_ul * traffic, nbr)
    if form == "wwan":
        ee_ratio = scenario.comm.ee_dl / scenario.comm.ee_ul
        return RegionVerdict("SU-WWAN", ee_ratio * (traffic - nbr), nbr)
    if form == "wwan_limit":
        return RegionVerdict("SU-WWAN-LIMIT", traffic, nbr)
    raise ContractError(f"unknown SU form {form!r}")


def cfa_beats_fa_per_round(scenario: Scenario, versus: "Policy | str" = Policy.FA,
                           active: ActiveSpec = None, compose_sidelink: bool = False) -> RegionVerdict:
    """Does one CFA round emit less communication carbon than one FA (or FA-D) round?"""
    versus = Policy.parse(versus)
    if versus not in (Policy.FA, Policy.FAD):
        raise ContractError("CFA per-round comparison is against FA or FA-D")
    comm = scenario.comm
    ee_sl = sidelink_efficiency(comm, scenario.center.pue, compose_sidelink)
    population = scenario.k if versus is Policy.FA else scenario.k_active
    s = active_ci_sum(scenario, active)
    dl_weight = scenario.center.pue * population * scenario.center.carbon_intensity_g_per_j
    if s > 0:
        lhs = ee_sl / comm.ee_ul + dl_weight / s * ee_sl / comm.ee_dl
    else:
        lhs = math.inf if dl_weight > 0 else ee_sl / comm.ee_ul
    region = "CFA-vs-FA" if versus is Policy.FA else "CFA-vs-FAD"
    return RegionVerdict(region, lhs, float(scenario.neighbors))


def evaluate_regions(scenario: Scenario, n: float, policy: "Policy | str | None" = None,
                     compose_sidelink: bool = False) -> list[RegionVerdict]:
    """All verdicts applicable to ``policy`` (or to every FL policy when None).

    Verdicts needing a quantity the scenario lacks are skipped.
    """
    from .errors import ConfigurationError

    policies = [Policy.parse(policy)] if policy is not None else [Policy.FA, Policy.FAD, Policy.CFA]
    out: list[RegionVerdict] = []

    def attempt(fn, *args, **kwargs):
        try:
            out.append(fn(*args, **kwargs))
        except (ConfigurationError, DomainError):
            pass

    for p in policies:
        if p in (Policy.FA, Policy.FAD):
            attempt(region_du, p, scenario, n)
            attempt(region_bw, scenario, n, 1)
            attempt(region_ci, p, scenario)
        elif p is Policy.CFA:
            attempt(region_su, scenario, n, compose_sidelink)
            attempt(region_bw, scenario, n, "N")
            attempt(region_ci, p, scenario)
            attempt(cfa_beats_fa_per_round, scenario, Policy.FA, None, compose_sidelink)
    seen, unique = set(), []
    for v in out:
        if v.region_id not in seen:
            seen.add(v.region_id)
            unique.append(v)
    return unique
