"""Round-by-round simulation of CL, FA, FA-D and CFA training.

Runs are fully determined by their seed: every device draws its
mini-batch order from a generator keyed on ``(seed, round, device)``, so
two policies sharing a schedule see identical local randomness.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..energy import ActiveSchedule, Policy, schedule_active
from ..errors import ContractError, DivergedError, DomainError
from ..quantities import Scenario
from .data import Dataset, partition, train_validation_split
from .model import build_model, proximal_objective


@dataclass(frozen=True)
class TrainingHyper:
    step_size: float = 0.1
    proximal_weight: float = 0.0
    target_loss: float = 0.3
    max_rounds: int = 200
    local_epochs: int = 1
    batch_size: int = 16
    hidden: int = 0
    partition: str = "iid"
    classes_per_device: Optional[int] = None
    validation_fraction: float = 0.2
    mix_then_optimize: bool = True

    def __post_init__(self):
        if not self.step_size > 0:
            raise DomainError("step_size must be > 0")
        if self.max_rounds < 1 or self.local_epochs < 1 or self.batch_size < 1:
            raise DomainError("max_rounds, local_epochs and batch_size must be >= 1")
        if self.proximal_weight < 0:
            raise DomainError("proximal_weight must be >= 0")


@dataclass(frozen=True, eq=False)
class TrainingOutcome:
    policy: str
    seed: int
    rounds_used: int
    hit_target: bool
    loss_trace: tuple[float, ...]
    schedule: ActiveSchedule
    neighbor_history: tuple[dict[int, frozenset[int]], ...] = ()
    params: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TrainingOutcome)
            and (self.policy, self.seed, self.rounds_used, self.hit_target, self.loss_trace)
            == (other.policy, other.seed, other.rounds_used, other.hit_target, other.loss_trace)
            and self.schedule == other.schedule
            and self.neighbor_history == other.neighbor_history
            and np.array_equal(self.params, other.params)
        )


def local_optimize(start: np.ndarray, anchor: np.ndarray, shard: Dataset, hyper: TrainingHyper,
                   model, rng: np.random.Generator, round_index: int = 0) -> np.ndarray:
    """Mini-batch SGD on the shard loss plus the proximal pull towards ``anchor``."""
    if start.shape != anchor.shape:
        raise ContractError("local and anchor parameters differ in shape")
    w = start.copy()
    m = len(shard)
    if m == 0:
        return w
    x, y = shard.features, shard.labels
    for _ in range(hyper.local_epochs):
        order = rng.permutation(m)
        for lo in range(0, m, hyper.batch_size):
            batch = order[lo: lo + hyper.batch_size]
            _, grad = proximal_objective(model, w, anchor, x[batch], y[batch], hyper.proximal_weight)
            if not np.all(np.isfinite(grad)):
                raise DivergedError(round_index)
            w -= hyper.step_size * grad
    return w


def _canonical_order(models: Sequence[np.ndarray], counts: Sequence[float]) -> list[int]:
    return sorted(range(len(models)), key=lambda i: (counts[i], models[i].tobytes()))


def fa_aggregate(models: Sequence[np.ndarray], counts: Sequence[float]) -> np.ndarray:
    """Example-weighted average of local models.

    Summation runs in a canonical order, so the result does not depend on
    the order of the inputs, and identical inputs are returned unchanged.
    """
    if not models or len(models) != len(counts):
        raise ContractError("need a nonempty list of models with one count each")
    if any(m.shape != models[0].shape for m in models):
        raise ContractError("models differ in shape")
    total = float(sum(counts))
    if total <= 0:
        raise DomainError("total example count must be > 0")
    order = _canonical_order(models, counts)
    base = models[order[0]]
    out = base.copy()
    for i in order:
        out += (counts[i] / total) * (models[i] - base)
    return out


def consensus_step(own: np.ndarray, neighbor_models: Sequence[np.ndarray],
                   neighbor_counts: Sequence[float]) -> np.ndarray:
    """Move ``own`` towards its neighbors' example-weighted average."""
    if not neighbor_models:
        raise ContractError("consensus needs at least one neighbor")
    if len(neighbor_models) != len(neighbor_counts):
        raise ContractError("one count per neighbor model required")
    total = float(sum(neighbor_counts))
    if total <= 0:
        raise DomainError("neighbor example counts must sum to > 0")
    out = own.copy()
    for w, q in zip(neighbor_models, neighbor_counts):
        out += (q / total) * (w - own)
    return out


def _device_rng(seed: int, t: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, t, k])


def run_training(policy: "Policy | str", scenario: Scenario, dataset: Dataset, hyper: TrainingHyper,
                 seed: int) -> TrainingOutcome:
    """Train until the held-out mean cross-entropy reaches ``hyper.target_loss``."""
    policy = Policy.parse(policy)
    k, k_active = scenario.k, scenario.k_active
    if policy is Policy.CFA and k_active < 2:
        raise ContractError("CFA needs a publisher and at least one subscriber (k_active >= 2)")
    train, val = train_validation_split(dataset, hyper.validation_fraction, seed)
    shards = partition(train, k, hyper.partition, hyper.classes_per_device, seed)
    counts = [s.size for s in shards]
    model = build_model(dataset.dim, dataset.n_classes, hyper.hidden)
    w0 = model.init(np.random.default_rng([seed, 2**31 - 1]))

    pooled_hyper = replace(hyper, proximal_weight=0.0)
    global_w = w0.copy()
    local = [w0.copy() for _ in range(k)]
    trace: list[float] = []
    active_history: list[frozenset[int]] = []
    neighbors: list[dict[int, frozenset[int]]] = []

    for t in range(hyper.max_rounds):
        if policy is Policy.CL:
            # the pooled learner has no anchor to stay close to
            global_w = local_optimize(global_w, global_w, train, pooled_hyper, model,
                                      _device_rng(seed, t, k), t)
            evaluated = global_w
        elif policy is Policy.CFA:
            # stride-1 window: this round's first subscriber publishes next round,
            # so models travel around the whole fleet
            publisher = t % k
            subscribers = [(t + i) % k for i in range(1, k_active)]
            active_history.append(frozenset([publisher, *subscribers]))
            sent = local[publisher].copy()
            for dev in subscribers:
                rng = _device_rng(seed, t, dev)
                if hyper.mix_then_optimize:
                    mixed = consensus_step(local[dev], [sent], [counts[publisher]])
                    local[dev] = local_optimize(mixed, mixed, shards[dev].data, hyper, model, rng, t)
                else:
                    trained = local_optimize(local[dev], local[dev], shards[dev].data, hyper, model, rng, t)
                    local[dev] = consensus_step(trained, [sent], [counts[publisher]])
            neighbors.append({dev: frozenset({publisher}) for dev in subscribers})
            ids = sorted(active_history[-1])
            evaluated = fa_aggregate([local[i] for i in ids], [counts[i] for i in ids])
        else:
            active = schedule_active(t, k, k_active)
            active_history.append(active)
            ids = sorted(active)
            # FA trains the whole fleet but only the active devices upload
            trainers = range(k) if policy is Policy.FA else ids
            for dev in trainers:
                local[dev] = local_optimize(global_w, global_w, shards[dev].data, hyper, model,
                                            _device_rng(seed, t, dev), t)
            global_w = fa_aggregate([local[i] for i in ids], [counts[i] for i in ids])
            evaluated = global_w
        loss = model.loss(evaluated, val.features, val.labels)
        if not math.isfinite(loss):
            raise DivergedError(t, "validation loss")
        trace.append(loss)
        if loss <= hyper.target_loss:
            break

    schedule = ActiveSchedule(tuple(active_history), k, k_active)
    return TrainingOutcome(
        policy=policy.value,
        seed=seed,
        rounds_used=len(trace),
        hit_target=trace[-1] <= hyper.target_loss,
        loss_trace=tuple(trace),
        schedule=schedule,
        neighbor_history=tuple(neighbors),
        params=evaluated.copy(),
    )


@dataclass(frozen=True)
class SeedSummary:
    policy: str
    seeds: int
    hits: int
    median_rounds: float
    min_rounds: int
    max_rounds: int

    @property
    def hit_rate(self) -> float:
        return self.hits / self.seeds


def summarize(outcomes: Sequence[TrainingOutcome]) -> SeedSummary:
    if not outcomes:
        raise ContractError("no outcomes to summarize")
    rounds = [o.rounds_used for o in outcomes]
    return SeedSummary(
        policy=outcomes[0].policy,
        seeds=len(outcomes),
        hits=sum(o.hit_target for o in outcomes),
        median_rounds=float(statistics.median(rounds)),
        min_rounds=min(rounds),
        max_rounds=max(rounds),
    )
