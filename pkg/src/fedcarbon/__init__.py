"""Energy and carbon accounting for centralized and federated learning policies."""

__version__ = "0.1.0"

from .carbon import CarbonBreakdown, PolicyComparison, carbon_footprint, compare_policies
from .energy import ActiveSchedule, EnergyBreakdown, Policy, energy, schedule_active
from .errors import ConfigurationError, ContractError, DivergedError, DomainError, UnknownNameError
from .quantities import (
    CenterProfile,
    CommProfile,
    DeviceProfile,
    ModelSpec,
    Scenario,
    ci_to_grams_per_joule,
    phi_ratio,
    sidelink_efficiency,
)
from .regions import (
    RegionVerdict,
    cfa_beats_fa_per_round,
    evaluate_regions,
    max_sustainable_rounds,
    region_bw,
    region_ci,
    region_du,
    region_du_general,
    region_su,
    region_su_general,
)
from .scenarios import StagePlan, Stage, case_study_preset, continual_total, mnist_scenario
