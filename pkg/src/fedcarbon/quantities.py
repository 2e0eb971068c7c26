"""Units, hardware/network profiles and the scenario type.

All stored quantities are SI: Joules, seconds, bits, grams CO2-eq.
Conversions from kWh, Wh, MB, Mbit etc. happen at the boundary
(see :mod:`fedcarbon.cli`) using the constants below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import ConfigurationError, DomainError

J_PER_WH = 3600.0
J_PER_KWH = 3.6e6
BITS_PER_BYTE = 8
BITS_PER_KB = 8e3
BITS_PER_MB = 8e6
BITS_PER_KBIT = 1e3
BITS_PER_MBIT = 1e6
DEFAULT_BITS_PER_PARAM = 32


def ci_to_grams_per_joule(ci_kg_per_kwh: float) -> float:
    """Convert a grid carbon intensity from kgCO2-eq/kWh to g/J."""
    if ci_kg_per_kwh < 0:
        raise DomainError(f"carbon intensity must be >= 0, got {ci_kg_per_kwh}")
    return ci_kg_per_kwh * 1000.0 / J_PER_KWH


def grams_per_joule_to_ci(g_per_j: float) -> float:
    if g_per_j < 0:
        raise DomainError(f"carbon intensity must be >= 0, got {g_per_j}")
    return g_per_j * J_PER_KWH / 1000.0


def _check_nonneg(obj, *names: str) -> None:
    for name in names:
        value = getattr(obj, name)
        if not (value >= 0) or math.isinf(value):
            raise DomainError(f"{type(obj).__name__}.{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class DeviceProfile:
    """One learner: its compute draw, sleep cost, grid and local data."""

    power_w: float
    batch_time_s: float
    batches_per_round: int = 1
    sleep_energy_j: float = 0.0
    carbon_intensity_g_per_j: float = 0.0
    data_bits: float = 0.0
    examples_count: int = 0

    def __post_init__(self):
        _check_nonneg(self, "power_w", "batch_time_s", "sleep_energy_j",
                      "carbon_intensity_g_per_j", "data_bits", "examples_count")
        if self.batches_per_round < 1:
            raise DomainError("DeviceProfile.batches_per_round must be >= 1")
        active = round_energy(self)
        # tolerance: sleep == active must survive float round-trips
        if self.sleep_energy_j > active * (1 + 1e-12):
            raise DomainError(
                f"DeviceProfile.sleep_energy_j={self.sleep_energy_j} exceeds the "
                f"active round energy {active}"
            )

    @property
    def round_energy_j(self) -> float:
        return round_energy(self)


@dataclass(frozen=True)
class CenterProfile:
    """Data center (CL) or parameter server co-located with the base station."""

    power_w: float
    batch_time_s: float
    batches_per_round: int = 1
    pue: float = 1.0
    agg_fraction: float = 0.0
    carbon_intensity_g_per_j: float = 0.0

    def __post_init__(self):
        _check_nonneg(self, "power_w", "batch_time_s", "carbon_intensity_g_per_j")
        if self.batches_per_round < 0:
            raise DomainError("CenterProfile.batches_per_round must be >= 0")
        if not self.pue >= 1:
            raise DomainError(f"CenterProfile.pue must be >= 1, got {self.pue}")
        if not 0 <= self.agg_fraction < 1:
            raise DomainError(f"CenterProfile.agg_fraction must be in [0, 1), got {self.agg_fraction}")

    @property
    def round_energy_j(self) -> float:
        return round_energy(self)

    @property
    def compute_efficiency(self) -> float:
        """Rounds per Joule; infinite for a free center."""
        e = round_energy(self)
        return math.inf if e == 0 else 1.0 / e


@dataclass(frozen=True)
class CommProfile:
    """Uplink, downlink and sidelink efficiencies in bits per Joule.

    Any of the three may be absent (``None``); evaluations that need a
    missing one raise :class:`ConfigurationError`.
    """

    ee_ul_bits_per_j: Optional[float] = None
    ee_dl_bits_per_j: Optional[float] = None
    ee_sl_bits_per_j: Optional[float] = None

    def __post_init__(self):
        for name in ("ee_ul_bits_per_j", "ee_dl_bits_per_j", "ee_sl_bits_per_j"):
            value = getattr(self, name)
            if value is not None and not (value > 0 and math.isfinite(value)):
                raise DomainError(f"CommProfile.{name} must be > 0, got {value}")

    @property
    def ee_ul(self) -> float:
        if self.ee_ul_bits_per_j is None:
            raise ConfigurationError("communication profile has no uplink efficiency")
        return self.ee_ul_bits_per_j

    @property
    def ee_dl(self) -> float:
        if self.ee_dl_bits_per_j is None:
            raise ConfigurationError("communication profile has no downlink efficiency")
        return self.ee_dl_bits_per_j

    def merged(self, other: "CommProfile") -> "CommProfile":
        """Fill this profile's missing efficiencies from ``other``."""
        return CommProfile(
            self.ee_ul_bits_per_j if self.ee_ul_bits_per_j is not None else other.ee_ul_bits_per_j,
            self.ee_dl_bits_per_j if self.ee_dl_bits_per_j is not None else other.ee_dl_bits_per_j,
            self.ee_sl_bits_per_j if self.ee_sl_bits_per_j is not None else other.ee_sl_bits_per_j,
        )


@dataclass(frozen=True)
class ModelSpec:
    """Size of the exchanged model.

    ``model_bits`` is ``param_count * bits_per_param * payload_overhead``
    unless ``bits`` overrides it (e.g. a measured MQTT payload).
    """

    param_count: int
    bits_per_param: int = DEFAULT_BITS_PER_PARAM
    payload_overhead: float = 1.0
    bits: Optional[float] = None

    def __post_init__(self):
        if self.param_count < 0 or self.bits_per_param < 1:
            raise DomainError("ModelSpec needs param_count >= 0 and bits_per_param >= 1")
        if not self.payload_overhead >= 1:
            raise DomainError("ModelSpec.payload_overhead must be >= 1")
        if self.bits is not None and not self.bits >= self.param_count:
            raise DomainError(
                f"ModelSpec.bits={self.bits} is below one bit per parameter ({self.param_count})"
            )

    @property
    def model_bits(self) -> float:
        if self.bits is not None:
            return float(self.bits)
        return float(self.param_count * self.bits_per_param * self.payload_overhead)


@dataclass(frozen=True)
class Scenario:
    """A complete deployment: fleet, center, network, model, populations.

    ``alpha`` is the number of dataset uploads under CL; with
    ``alpha_per_round`` set it is taken equal to the round count at
    evaluation time (reinforcement learning moves fresh data every round).
    ``peripheral_energy_j`` is charged per device per round, whatever the policy.
    """

    devices: tuple[DeviceProfile, ...]
    center: CenterProfile
    comm: CommProfile
    model: ModelSpec
    k_active: int
    neighbors: int = 1
    alpha: float = 1.0
    alpha_per_round: bool = False
    peripheral_energy_j: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        k = len(self.devices)
        if k < 1:
            raise DomainError("Scenario needs at least one device")
        if not 1 <= self.k_active <= k:
            raise DomainError(f"Scenario.k_active must be in [1, {k}], got {self.k_active}")
        if not 0 <= self.neighbors <= k - 1:
            raise DomainError(f"Scenario.neighbors must be in [0, {k - 1}], got {self.neighbors}")
        if not self.alpha >= 0:
            raise DomainError(f"Scenario.alpha must be >= 0, got {self.alpha}")
        _check_nonneg(self, "peripheral_energy_j")

    @classmethod
    def uniform(cls, device: DeviceProfile, count: int, **kwargs) -> "Scenario":
        return cls(devices=(device,) * count, **kwargs)

    @property
    def k(self) -> int:
        return len(self.devices)

    @property
    def data_bits_total(self) -> float:
        return float(sum(d.data_bits for d in self.devices))

    @property
    def model_bits(self) -> float:
        return self.model.model_bits

    def effective_alpha(self, n: float) -> float:
        return float(n) if self.alpha_per_round else float(self.alpha)

    def with_data_bits(self, bits: float | Sequence[float]) -> "Scenario":
        if isinstance(bits, (int, float)):
            bits = [bits] * self.k
        devices = tuple(replace(d, data_bits=float(b)) for d, b in zip(self.devices, bits))
        return replace(self, devices=devices)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


def round_energy(profile: DeviceProfile | CenterProfile) -> float:
    """Energy of one training round: power x batch time x batches."""
    return profile.power_w * profile.batch_time_s * profile.batches_per_round


def phi_ratio(device: DeviceProfile, center: CenterProfile) -> float:
    """Per-round compute energy of a device relative to the center."""
    if center.power_w <= 0 or center.batch_time_s <= 0:
        raise DomainError("phi_ratio needs positive center power and batch time")
    return (device.power_w / center.power_w) * (device.batch_time_s / center.batch_time_s)


def sidelink_via_wwan(comm: CommProfile, pue: float) -> float:
    """Effective device-to-device efficiency when relayed as UL then DL.

    The downlink leg is scaled by the relay's PUE.
    """
    if pue < 1:
        raise DomainError(f"pue must be >= 1, got {pue}")
    return 1.0 / (1.0 / comm.ee_ul + pue / comm.ee_dl)


def sidelink_efficiency(comm: CommProfile, pue: float, compose: bool = False) -> float:
    """EE_S from the profile, or composed over the WWAN when ``compose`` is set."""
    if comm.ee_sl_bits_per_j is not None:
        return comm.ee_sl_bits_per_j
    if not compose:
        raise ConfigurationError(
            "no sidelink efficiency in the communication profile; "
            "enable WWAN composition to relay over UL+DL"
        )
    return sidelink_via_wwan(comm, pue)
