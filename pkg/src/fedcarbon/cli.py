"""Command-line front end: scenario files, footprints, regions, sweeps and simulations.

Scenario files are JSON. Every physical field carries its unit as a
suffix of the key (``power_w``, ``batch_time_ms``, ``data_mb``,
``ee_ul_kbit_per_j``, ``carbon_intensity_kg_per_kwh``...) and is
converted to SI when parsed. A file may start from a named preset and
override any field.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

from . import __version__
from .carbon import carbon_footprint
from .energy import Policy
from .errors import ConfigurationError, ContractError, DivergedError, DomainError, UnknownNameError
from .quantities import (
    BITS_PER_KB,
    BITS_PER_KBIT,
    BITS_PER_MB,
    BITS_PER_MBIT,
    J_PER_KWH,
    J_PER_WH,
    CenterProfile,
    CommProfile,
    DeviceProfile,
    ModelSpec,
    Scenario,
)
from .regions import evaluate_regions
from .scenarios import Stage, StagePlan, builtin_comm_profile, case_study_preset, mnist_scenario, stage_scenario

# -- units ---------------------------------------------------------------------

UNITS: dict[str, dict[str, float]] = {
    "energy": {"j": 1.0, "wh": J_PER_WH, "kwh": J_PER_KWH},
    "time": {"s": 1.0, "ms": 1e-3},
    "power": {"w": 1.0, "kw": 1e3},
    "bits": {"bits": 1.0, "kbit": BITS_PER_KBIT, "mbit": BITS_PER_MBIT, "kb": BITS_PER_KB, "mb": BITS_PER_MB},
    "efficiency": {"bits_per_j": 1.0, "kbit_per_j": BITS_PER_KBIT, "mbit_per_j": BITS_PER_MBIT},
    "ci": {"g_per_j": 1.0, "kg_per_kwh": 1e3 / J_PER_KWH},
}

# section -> field base -> (canonical key, unit family or None for plain numbers)
FIELDS: dict[str, dict[str, tuple[str, Optional[str]]]] = {
    "device": {
        "power": ("power_w", "power"),
        "batch_time": ("batch_time_s", "time"),
        "batches_per_round": ("batches_per_round", None),
        "sleep_energy": ("sleep_energy_j", "energy"),
        "carbon_intensity": ("carbon_intensity_g_per_j", "ci"),
        "data": ("data_bits", "bits"),
        "examples_count": ("examples_count", None),
    },
    "center": {
        "power": ("power_w", "power"),
        "batch_time": ("batch_time_s", "time"),
        "batches_per_round": ("batches_per_round", None),
        "pue": ("pue", None),
        "agg_fraction": ("agg_fraction", None),
        "carbon_intensity": ("carbon_intensity_g_per_j", "ci"),
    },
    "comm": {
        "ee_ul": ("ee_ul_bits_per_j", "efficiency"),
        "ee_dl": ("ee_dl_bits_per_j", "efficiency"),
        "ee_sl": ("ee_sl_bits_per_j", "efficiency"),
    },
    "model": {
        "param_count": ("param_count", None),
        "bits_per_param": ("bits_per_param", None),
        "payload_overhead": ("payload_overhead", None),
        "size": ("bits", "bits"),
    },
    "scenario": {
        "k_active": ("k_active", None),
        "neighbors": ("neighbors", None),
        "alpha": ("alpha", None),
        "alpha_per_round": ("alpha_per_round", None),
        "peripheral_energy": ("peripheral_energy_j", "energy"),
    },
    "stage": {
        "data": ("data_bits", "bits"),
        "rounds": ("rounds", None),
        "policy": ("policy", None),
        "stage_sleep_energy": ("stage_sleep_j", "energy"),
        "stage_peripheral_energy": ("stage_peripheral_j", "energy"),
    },
}
INT_FIELDS = {"batches_per_round", "examples_count", "param_count", "bits_per_param", "k_active",
              "neighbors", "rounds"}
REQUIRED = {"device": ("power_w", "batch_time_s"), "center": ("power_w", "batch_time_s"),
            "model": ("param_count",), "stage": ("data_bits", "rounds")}


def _normalize_field(section: str, key: str, value: Any, where: str) -> tuple[str, Any]:
    table = FIELDS[section]
    best = None
    for base in table:
        if key == base or key.startswith(base + "_"):
            if best is None or len(base) > len(best):
                best = base
    if best is None:
        raise ConfigurationError(f"{where}.{key}: unknown field (known: {sorted(table)})")
    canonical, family = table[best]
    suffix = key[len(best) + 1:]
    if family is None:
        if suffix:
            raise ConfigurationError(f"{where}.{key}: field {best!r} takes no unit suffix")
        if canonical == "policy":
            return canonical, Policy.parse(value).value
        if canonical == "alpha_per_round":
            if not isinstance(value, bool):
                raise ConfigurationError(f"{where}.{key}: expected true or false")
            return canonical, value
    else:
        if not suffix:
            raise ConfigurationError(
                f"{where}.{key}: missing unit suffix (one of {sorted(UNITS[family])})")
        if suffix not in UNITS[family]:
            raise ConfigurationError(
                f"{where}.{key}: unknown unit suffix {suffix!r} (one of {sorted(UNITS[family])})")
    if value is None and canonical in ("ee_ul_bits_per_j", "ee_dl_bits_per_j", "ee_sl_bits_per_j", "bits"):
        return canonical, None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where}.{key}: expected a number, got {value!r}")
    if canonical in INT_FIELDS:
        if float(value) != int(value):
            raise ConfigurationError(f"{where}.{key}: expected an integer, got {value!r}")
        return canonical, int(value)
    scale = UNITS[family][suffix] if family else 1.0
    return canonical, float(value) * scale


def _normalize_section(section: str, raw: Any, where: str) -> dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{where}: expected an object")
    out: dict[str, Any] = {}
    for key, value in raw.items():
        canonical, v = _normalize_field(section, key, value, where)
        if canonical in out:
            raise ConfigurationError(f"{where}.{key}: field given twice")
        out[canonical] = v
    return out


def _check_required(section: str, values: dict, where: str) -> None:
    for name in REQUIRED.get(section, ()):
        if name not in values:
            raise ConfigurationError(f"{where}: missing required field {name!r}")


# -- normalized (SI) dictionaries ---------------------------------------------

def _profile_dict(obj) -> dict[str, Any]:
    return {k: v for k, v in obj.__dict__.items() if v is not None}


def _normalized_from_objects(scenario: Scenario, plan: Optional[StagePlan], name: str) -> dict[str, Any]:
    top = {
        "k_active": scenario.k_active,
        "neighbors": scenario.neighbors,
        "alpha": scenario.alpha,
        "alpha_per_round": scenario.alpha_per_round,
        "peripheral_energy_j": scenario.peripheral_energy_j,
    }
    out = {
        "name": name,
        "devices": [_profile_dict(d) for d in scenario.devices],
        "center": _profile_dict(scenario.center),
        "comm": _profile_dict(scenario.comm),
        "model": _profile_dict(scenario.model),
        "scenario": top,
    }
    if plan is not None:
        out["stages"] = [_profile_dict(s) for s in plan.stages]
        out["retrainings_per_day"] = plan.retrainings_per_day
    return out


def _named_scenario(name: str) -> tuple[Scenario, Optional[StagePlan]]:
    if name.strip().upper() == "MNIST":
        return mnist_scenario(), None
    return case_study_preset(name)


def _normalize_file(raw: dict[str, Any]) -> dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigurationError("scenario file must hold a JSON object")
    if "preset" in raw:
        base = _normalized_from_objects(*_named_scenario(str(raw["preset"])), name=str(raw["preset"]))
    else:
        base = {"name": "scenario", "devices": [], "center": {}, "comm": {}, "model": {}, "scenario": {}}
    out = json.loads(json.dumps(base))
    for key, value in raw.items():
        if key == "preset":
            continue
        if key == "name":
            out["name"] = str(value)
        elif key == "devices":
            out["devices"] = _merge_devices(out["devices"], value)
        elif key in ("center", "model"):
            out[key].update(_normalize_section(key, value, key))
        elif key == "comm":
            if not isinstance(value, dict):
                raise ConfigurationError("comm: expected an object")
            value = dict(value)
            patch: dict[str, Any] = {}
            if "profile" in value:
                patch.update(_profile_dict(builtin_comm_profile(str(value.pop("profile")))))
                out["comm"] = {}
            patch.update(_normalize_section("comm", value, "comm"))
            out["comm"].update(patch)
        elif key == "stages":
            if not isinstance(value, list) or not value:
                raise ConfigurationError("stages: expected a nonempty list")
            out["stages"] = [_normalize_section("stage", s, f"stages[{i}]") for i, s in enumerate(value)]
        elif key == "retrainings_per_day":
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
                raise ConfigurationError("retrainings_per_day: expected a number >= 0")
            out["retrainings_per_day"] = float(value)
        else:
            canonical, v = _normalize_field("scenario", key, value, "scenario")
            out["scenario"][canonical] = v
    return out


def _merge_devices(base: list[dict], raw: Any) -> list[dict]:
    if isinstance(raw, list):
        if not raw:
            raise ConfigurationError("devices: expected at least one device")
        return [_normalize_section("device", d, f"devices[{i}]") for i, d in enumerate(raw)]
    if not isinstance(raw, dict):
        raise ConfigurationError("devices: expected a list or an object with 'count'")
    raw = dict(raw)
    count = raw.pop("count", len(base))
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ConfigurationError(f"devices.count: expected an integer >= 1, got {count!r}")
    patch = _normalize_section("device", raw, "devices")
    template = base[0] if base else {}
    return [{**(base[i] if i < len(base) else template), **patch} for i in range(count)]


def _build(norm: dict[str, Any]) -> tuple[Scenario, Optional[StagePlan], str]:
    def make(cls, section, values, where):
        _check_required(section, values, where)
        try:
            return cls(**values)
        except (DomainError, ContractError) as err:
            raise ConfigurationError(f"{where}: {err}") from None

    if not norm["devices"]:
        raise ConfigurationError("devices: missing")
    devices = tuple(make(DeviceProfile, "device", d, f"devices[{i}]") for i, d in enumerate(norm["devices"]))
    center = make(CenterProfile, "center", norm["center"], "center")
    comm = make(CommProfile, "comm", norm["comm"], "comm")
    model = make(ModelSpec, "model", norm["model"], "model")
    top = dict(norm["scenario"])
    if "k_active" not in top:
        raise ConfigurationError("scenario: missing required field 'k_active'")
    try:
        scenario = Scenario(devices=devices, center=center, comm=comm, model=model, **top)
    except DomainError as err:
        raise ConfigurationError(f"scenario: {err}") from None
    plan = None
    if norm.get("stages"):
        stages = tuple(make(Stage, "stage", s, f"stages[{i}]") for i, s in enumerate(norm["stages"]))
        plan = StagePlan(stages, norm.get("retrainings_per_day", 1.0))
    return scenario, plan, norm.get("name", "scenario")


def parse_scenario_dict(raw: dict[str, Any]) -> tuple[Scenario, Optional[StagePlan], str]:
    """Scenario, optional stage plan and scenario id from a decoded JSON object."""
    return _build(_normalize_file(raw))


def parse_scenario(path: str) -> tuple[Scenario, Optional[StagePlan], str]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"{path}: invalid JSON ({err})") from None
    return parse_scenario_dict(raw)


def serialize_scenario(scenario: Scenario, plan: Optional[StagePlan] = None, name: str = "scenario") -> dict[str, Any]:
    """SI-unit JSON object that :func:`parse_scenario_dict` maps back to an equal scenario."""
    norm = _normalized_from_objects(scenario, plan, name)
    devices: Any = norm["devices"]
    if all(d == devices[0] for d in devices):
        devices = {"count": len(devices), **devices[0]}
    model = dict(norm["model"])
    if "bits" in model:
        model["size_bits"] = model.pop("bits")
    out = {"name": name, "devices": devices, "center": norm["center"], "comm": norm["comm"], "model": model,
           **norm["scenario"]}
    if plan is not None:
        out["stages"] = [
            {"data_bits": s["data_bits"], "rounds": s["rounds"], "policy": s["policy"],
             **({"stage_sleep_energy_j": s["stage_sleep_j"]} if "stage_sleep_j" in s else {}),
             **({"stage_peripheral_energy_j": s["stage_peripheral_j"]} if "stage_peripheral_j" in s else {})}
            for s in norm["stages"]
        ]
        out["retrainings_per_day"] = plan.retrainings_per_day
    return out


# -- reports -------------------------------------------------------------------

def fmt(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.6g}"
    return str(x)


@dataclass
class Report:
    command: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# fedcarbon {__version__}\n")
        buf.write(f"# command: {self.command}\n")
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {fmt(self.metadata[key])}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        def conv(v):
            if isinstance(v, float):
                return fmt(v) if not math.isfinite(v) else float(fmt(v))
            return v

        doc = {
            "version": __version__,
            "command": self.command,
            "metadata": {k: conv(v) for k, v in sorted(self.metadata.items())},
            "columns": list(self.columns),
            "rows": [[conv(v) for v in row] for row in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    def render(self, form: str = "csv") -> str:
        if form == "csv":
            return self.to_csv()
        if form == "json":
            return self.to_json()
        raise ConfigurationError(f"unknown report format {form!r}")


def config_hash(payload: Any) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _verdicts_text(scenario: Scenario, n: float, policy: Policy, compose_sidelink: bool) -> str:
    if policy is Policy.CL:
        return ""
    parts = [f"{v.region_id}:{'holds' if v.holds else 'fails'}:{fmt(v.margin)}"
             for v in evaluate_regions(scenario, n, policy, compose_sidelink)]
    return ";".join(parts)


FOOTPRINT_COLUMNS = ("scenario", "policy", "rounds", "compute_g", "comm_g", "total_g", "regions")


def _footprint_row(sid: str, scenario: Scenario, policy: Policy, n: int, compose_sidelink: bool) -> tuple:
    fp = carbon_footprint(policy, scenario, n, compose_sidelink=compose_sidelink)
    return (sid, policy.value, n, fp.compute_g, fp.comm_g, fp.total_g,
            _verdicts_text(scenario, n, policy, compose_sidelink))


def default_policies(scenario: Scenario, compose_sidelink: bool) -> list[Policy]:
    """Every policy the scenario can price; CFA only with a sidelink available."""
    out = [Policy.CL, Policy.FA, Policy.FAD]
    if scenario.comm.ee_sl_bits_per_j is not None or compose_sidelink:
        out.append(Policy.CFA)
    return out


def cmd_footprint(scenario: Scenario, policies: Sequence[Policy], rounds: Optional[int],
                  plan: Optional[StagePlan] = None, sid: str = "scenario",
                  compose_sidelink: bool = False) -> Report:
    """One row per policy, or per stage and policy when no round count is given."""
    report = Report("footprint", FOOTPRINT_COLUMNS)
    if rounds is not None:
        for p in policies:
            report.rows.append(_footprint_row(sid, scenario, p, rounds, compose_sidelink))
    elif plan is not None:
        for i, stage in enumerate(plan.stages):
            staged = stage_scenario(stage, scenario)
            for p in policies:
                report.rows.append(_footprint_row(f"{sid}/stage{i}", staged, p, stage.rounds, compose_sidelink))
    else:
        raise ConfigurationError("footprint needs --rounds when the scenario has no stages")
    return report


REGION_COLUMNS = ("scenario", "rounds", "region", "lhs", "rhs", "orientation", "holds", "margin")


def cmd_regions(scenario: Scenario, rounds: float, sid: str = "scenario",
                policy: Optional[Policy] = None, compose_sidelink: bool = False) -> Report:
    report = Report("regions", REGION_COLUMNS)
    for v in evaluate_regions(scenario, rounds, policy, compose_sidelink):
        report.rows.append((sid, rounds, v.region_id, v.lhs, v.rhs, v.orientation, v.holds, v.margin))
    return report


SWEEP_PARAMS = ("k_active", "ee_dl", "ee_ul", "ee_sl", "rounds", "model_bits")


@dataclass(frozen=True)
class SweepSpec:
    param: str
    grid: tuple[float, ...]
    scenario: Scenario
    policies: tuple[Policy, ...]
    rounds: int = 1
    sid: str = "scenario"

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigurationError(f"cannot sweep {self.param!r}; choose one of {SWEEP_PARAMS}")
        if not self.grid:
            raise ConfigurationError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigurationError("sweep grid must be strictly increasing")
        if not self.policies:
            raise ConfigurationError("sweep needs at least one policy")


def _apply(scenario: Scenario, rounds: int, param: str, value: float) -> tuple[Scenario, int]:
    if param == "rounds":
        return scenario, int(value)
    if param == "k_active":
        return replace(scenario, k_active=int(value)), rounds
    if param == "model_bits":
        return replace(scenario, model=replace(scenario.model, bits=float(value))), rounds
    key = {"ee_dl": "ee_dl_bits_per_j", "ee_ul": "ee_ul_bits_per_j", "ee_sl": "ee_sl_bits_per_j"}[param]
    return replace(scenario, comm=replace(scenario.comm, **{key: float(value)})), rounds


def cmd_sweep(sweep: SweepSpec, compose_sidelink: bool = False) -> Report:
    report = Report("sweep", ("param", "value") + FOOTPRINT_COLUMNS)
    for value in sweep.grid:
        try:
            scenario, n = _apply(sweep.scenario, sweep.rounds, sweep.param, value)
        except DomainError as err:
            raise ConfigurationError(f"sweep {sweep.param}={fmt(value)}: {err}") from None
        sid = f"{sweep.sid}[{sweep.param}={fmt(value)}]"
        for p in sweep.policies:
            report.rows.append((sweep.param, value) + _footprint_row(sid, scenario, p, n, compose_sidelink))
    return report


SIM_COLUMNS = ("policy", "seeds", "hits", "median_rounds", "min_rounds", "max_rounds", "rounds_by_seed")


def cmd_simulate(scenario: Scenario, policies: Sequence[Policy], hyper, seeds: Sequence[int],
                 data_args: dict[str, Any]) -> Report:
    """Seed sweep of the simulator; the median round count feeds ``footprint --rounds``."""
    from .flsim import make_synthetic_dataset, run_training, summarize

    if not seeds:
        raise ConfigurationError("simulate needs at least one seed")
    report = Report("simulate", SIM_COLUMNS)
    for p in policies:
        outcomes = [run_training(p, scenario, make_synthetic_dataset(seed=s, **data_args), hyper, s)
                    for s in seeds]
        summary = summarize(outcomes)
        report.rows.append((p.value, summary.seeds, summary.hits, summary.median_rounds, summary.min_rounds,
                            summary.max_rounds, ";".join(str(o.rounds_used) for o in outcomes)))
    return report


# -- argument handling ---------------------------------------------------------

def _parse_grid(text: str) -> tuple[float, ...]:
    """``"1,2,4"`` or an inclusive integer range ``"1:9"`` (optionally ``"1:9:2"``)."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise ConfigurationError(f"bad grid range {text!r}")
        step = parts[2] if len(parts) == 3 else 1
        if step < 1:
            raise ConfigurationError("grid step must be >= 1")
        return tuple(float(v) for v in range(parts[0], parts[1] + 1, step))
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"bad grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedcarbon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fedcarbon {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, policy_many=True):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--scenario", metavar="PATH", help="JSON scenario file")
        src.add_argument("--preset", metavar="NAME", help="HRI_CONTINUAL, RL_ROBOTS or MNIST")
        p.add_argument("--policy", choices=["cl", "fa", "fad", "cfa"], action="append" if policy_many else "store",
                       help="policy to evaluate (repeatable; default: every applicable one)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        p.add_argument("--compose-sidelink", action="store_true",
                       help="build a missing sidelink efficiency from uplink plus downlink")

    p = sub.add_parser("footprint", help="carbon footprint of each policy")
    common(p)
    p.add_argument("--rounds", type=int, help="learning rounds n (default: the scenario's stages)")

    p = sub.add_parser("regions", help="sustainability-region verdicts")
    common(p, policy_many=False)
    p.add_argument("--rounds", type=float, required=True)

    p = sub.add_parser("sweep", help="footprints over a grid of one parameter")
    common(p)
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--grid", required=True, help="comma list or inclusive range a:b[:step]")
    p.add_argument("--rounds", type=int, help="learning rounds (default: first stage)")

    p = sub.add_parser("simulate", help="rounds to target loss over seeds")
    common(p)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--devices", type=int, default=10, help="K when no scenario is given")
    p.add_argument("--k-active", type=int, default=5, help="K_a when no scenario is given")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--step-size", type=float, default=0.05)
    p.add_argument("--proximal-weight", type=float, default=0.0)
    p.add_argument("--target-loss", type=float, default=0.3)
    p.add_argument("--max-rounds", type=int, default=200)
    p.add_argument("--local-epochs", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--hidden", type=int, default=0)
    p.add_argument("--partition", choices=["iid", "label_skew"], default="iid")
    p.add_argument("--classes-per-device", type=int)
    p.add_argument("--optimize-then-mix", action="store_true", help="CFA: local step before consensus")
    return parser


def _load(args) -> tuple[Optional[Scenario], Optional[StagePlan], str, Any]:
    if args.scenario:
        with open(args.scenario, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigurationError(f"{args.scenario}: invalid JSON ({err})") from None
        scenario, plan, sid = parse_scenario_dict(raw)
    elif args.preset:
        scenario, plan = _named_scenario(args.preset)
        sid = args.preset.strip().upper()
    else:
        return None, None, "default", None
    return scenario, plan, sid, serialize_scenario(scenario, plan, sid)


def run(argv: Optional[Sequence[str]] = None) -> str:
    """Execute one command and return the rendered report."""
    return _execute(build_parser().parse_args(argv))


def _execute(args: argparse.Namespace) -> str:
    scenario, plan, sid, canonical = _load(args)
    compose = args.compose_sidelink

    if args.command == "simulate":
        from .flsim import TrainingHyper

        if scenario is None:
            scenario = mnist_scenario(k=args.devices, k_active=args.k_active)
        hyper = TrainingHyper(
            step_size=args.step_size, proximal_weight=args.proximal_weight, target_loss=args.target_loss,
            max_rounds=args.max_rounds, local_epochs=args.local_epochs, batch_size=args.batch_size,
            hidden=args.hidden, partition=args.partition, classes_per_device=args.classes_per_device,
            mix_then_optimize=not args.optimize_then_mix,
        )
        if args.seeds < 1:
            raise ConfigurationError("--seeds must be >= 1")
        policies = [Policy.parse(p) for p in args.policy] if args.policy else [Policy.FA, Policy.FAD, Policy.CFA]
        seeds = list(range(args.seed_base, args.seed_base + args.seeds))
        data_args = dict(n_classes=args.classes, dim=args.dim, per_class=args.per_class,
                         separation=args.separation)
        report = cmd_simulate(scenario, policies, hyper, seeds, data_args)
        payload = {"scenario": canonical or serialize_scenario(scenario, None, sid),
                   "hyper": hyper.__dict__, "data": data_args, "seeds": seeds,
                   "policies": [p.value for p in policies]}
        report.metadata.update(seeds=f"{seeds[0]}..{seeds[-1]}", config_hash=config_hash(payload))
        return report.render(args.format)

    if scenario is None:
        raise ConfigurationError("give --scenario PATH or --preset NAME")

    if args.command == "regions":
        policy = Policy.parse(args.policy) if args.policy else None
        report = cmd_regions(scenario, args.rounds, sid, policy, compose)
        payload = {"scenario": canonical, "rounds": args.rounds, "policy": args.policy}
    else:
        policies = [Policy.parse(p) for p in args.policy] if args.policy else default_policies(scenario, compose)
        if args.command == "footprint":
            report = cmd_footprint(scenario, policies, args.rounds, plan, sid, compose)
        else:
            rounds = args.rounds
            if rounds is None:
                if plan is None:
                    raise ConfigurationError("sweep needs --rounds when the scenario has no stages")
                scenario, rounds = stage_scenario(plan.stages[0], scenario), plan.stages[0].rounds
            sweep = SweepSpec(args.param, _parse_grid(args.grid), scenario, tuple(policies), rounds, sid)
            report = cmd_sweep(sweep, compose)
        payload = {"scenario": canonical, "rounds": args.rounds, "policies": [p.value for p in policies],
                   "param": getattr(args, "param", None), "grid": getattr(args, "grid", None)}
    report.metadata["config_hash"] = config_hash(payload)
    return report.render(args.format)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _execute(args)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except (ConfigurationError, DomainError, ContractError, UnknownNameError, DivergedError, OSError) as err:
        print(f"error: {args.command}: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
