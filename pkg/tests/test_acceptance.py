"""Acceptance gate: one test per criterion, each logging a PASS/FAIL line."""

import math
import statistics
import time
from dataclasses import replace

import numpy as np
import pytest

from fedcarbon import cli
from fedcarbon.carbon import carbon_cfa, carbon_cl, carbon_fa, carbon_fad
from fedcarbon.energy import ActiveSchedule, Policy, energy_fa, energy_fad
from fedcarbon.flsim import (
    build_model,
    consensus_step,
    fa_aggregate,
    make_synthetic_dataset,
    partition,
    proximal_objective,
    run_training,
    summarize,
    TrainingHyper,
)
from fedcarbon.quantities import (
    BITS_PER_MB,
    CenterProfile,
    CommProfile,
    DeviceProfile,
    ModelSpec,
    Scenario,
    phi_ratio,
)
from fedcarbon.regions import (
    active_rounds_budget,
    cfa_beats_fa_per_round,
    max_sustainable_rounds,
    region_ci,
    region_du,
    region_du_general,
    region_su,
    region_su_general,
    required_dl_ul_ratio,
)
from fedcarbon.scenarios import annualize, case_study_preset, mnist_scenario, stage_scenario

from scenario_gen import random_scenario


def _size_scenario(ratio: float, k: int, k_active: int) -> Scenario:
    """Equal shards with b(W)/b(E_k) = ratio."""
    device = DeviceProfile(power_w=1.0, batch_time_s=1.0, data_bits=1e6, examples_count=1)
    return Scenario.uniform(
        device, k,
        center=CenterProfile(power_w=1.0, batch_time_s=1.0),
        comm=CommProfile(1e4, 1e4),
        model=ModelSpec(param_count=1, bits=ratio * 1e6),
        k_active=k_active,
    )


def test_criterion_01_size_bounds(acceptance):
    cases = [((0.03, 30, 20), 50.0, 1e-9), ((0.03, 60, 40), 50.0, 1e-9),
             ((0.03, 100, 50), 66.67, 0.1), ((0.08, 100, 50), 25.0, 1e-9)]
    got = [max_sustainable_rounds(_size_scenario(*args)) for args, _, _ in cases]
    ok = all(abs(g - want) <= tol for g, (_, want, tol) in zip(got, cases))
    acceptance("criterion 1 (round bounds)", ok, "n_max = " + ", ".join(f"{g:.4g}" for g in got))
    assert ok


def test_criterion_02_continual_thresholds(acceptance):
    scenario, plan = case_study_preset("HRI_CONTINUAL")
    initial = active_rounds_budget(stage_scenario(plan.stages[0], scenario))
    retrain = active_rounds_budget(stage_scenario(plan.stages[1], scenario))
    ok = abs(initial - 257) <= 2 and abs(retrain - 158) <= 2
    acceptance("criterion 2 (continual K_a*n thresholds)", ok,
               f"initial {initial:.2f} (reference 257), retraining {retrain:.2f} (reference 158)")
    assert initial == pytest.approx(9 * 31 / 1.08, rel=1e-12)
    assert ok


def test_criterion_03_du_thresholds(acceptance):
    sc = mnist_scenario(pue=1.5)
    assert sc.comm.ee_dl / sc.comm.ee_ul == pytest.approx(5.0)
    fa = required_dl_ul_ratio(Policy.FA, sc, 29)
    fad = required_dl_ul_ratio(Policy.FAD, sc, 29)
    holds = region_du(Policy.FA, sc, 29).holds and region_du(Policy.FAD, sc, 29).holds
    ok = abs(fa - 2.88) <= 0.15 and abs(fad - 1.92) <= 0.15 and holds
    acceptance("criterion 3 (DU thresholds)", ok,
               f"required EE_D/EE_U FA {fa:.3f}, FA-D {fad:.3f}; both hold at ratio 5: {holds}")
    assert ok


def _phi_scenario(phi: float, k: int, k_active: int) -> Scenario:
    center = CenterProfile(power_w=590.0, batch_time_s=0.01, batches_per_round=3, pue=1.67,
                           agg_fraction=0.05, carbon_intensity_g_per_j=2.5e-4)
    device = DeviceProfile(power_w=phi * 590.0 * 0.01 / 0.14, batch_time_s=0.14, batches_per_round=3,
                           carbon_intensity_g_per_j=2.5e-4)
    return Scenario.uniform(device, k, center=center, comm=CommProfile(15e3, 25e3),
                            model=ModelSpec(28_000), k_active=k_active)


def test_criterion_04_computing_condition(acceptance):
    small = region_ci(Policy.FAD, _phi_scenario(0.36, 9, 4))
    large = region_ci(Policy.FAD, _phi_scenario(0.14, 30, 20))
    hri, _ = case_study_preset("HRI_CONTINUAL")
    rl, _ = case_study_preset("RL_ROBOTS")
    phi_hri = phi_ratio(hri.devices[0], hri.center)
    phi_rl = phi_ratio(rl.devices[0], rl.center)
    ok = (
        abs(small.lhs - 1.516) < 1e-3 and small.holds
        and abs(large.lhs - 2.95) < 5e-3 and not large.holds
        and abs(phi_hri - 0.356) <= 0.005 and abs(phi_rl - 0.173) <= 0.005
    )
    acceptance("criterion 4 (computing condition)", ok,
               f"K_a=4: {small.lhs:.4f} vs {small.rhs:.2f} holds={small.holds}; "
               f"K_a=20: {large.lhs:.4f} holds={large.holds}; phi {phi_hri:.4f}, {phi_rl:.4f}")
    assert ok


def test_criterion_05_annualization(acceptance):
    fad = annualize(1.1, 1.0)
    cl = annualize(5.4, 1.0)
    ok = (fad == pytest.approx(401.5) and cl == pytest.approx(1971.0)
          and abs(fad - 400) / 400 <= 0.02 and abs(cl - 2000) / 2000 <= 0.02)
    acceptance("criterion 5 (annualization)", ok, f"{fad:.1f} g/year and {cl:.1f} g/year")
    assert ok


def test_criterion_06_oracle_equivalence(acceptance):
    rng = np.random.default_rng(20240601)
    disagreements = {"DU-FA": 0, "DU-FAD": 0, "SU": 0, "CFA-vs-FA": 0}
    start = time.perf_counter()
    for _ in range(1000):
        sc = random_scenario(rng, zero_compute=True)
        n = int(rng.integers(1, 200))
        sched = ActiveSchedule.stationary(n, sc.k, range(sc.k_active))
        cl = carbon_cl(sc, n).total_g
        fa = carbon_fa(sc, n, sched).total_g
        fad = carbon_fad(sc, n, sched).total_g
        cfa = carbon_cfa(sc, n, sched).total_g
        disagreements["DU-FA"] += region_du_general(Policy.FA, sc, n).holds != (fa < cl)
        disagreements["DU-FAD"] += region_du_general(Policy.FAD, sc, n).holds != (fad < cl)
        disagreements["SU"] += region_su_general(sc, n).holds != (cfa < cl)
        disagreements["CFA-vs-FA"] += cfa_beats_fa_per_round(sc, Policy.FA).holds != (cfa < fa)
    elapsed = time.perf_counter() - start
    ok = sum(disagreements.values()) == 0 and elapsed < 5
    acceptance("criterion 6 (oracle equivalence)", ok, f"disagreements {disagreements}, {elapsed:.2f} s")
    assert ok


def _close(a: float, b: float, rel: float = 1e-9) -> bool:
    return a == b or abs(a - b) <= rel * max(abs(a), abs(b))


def test_criterion_07_uniform_ci_reduction(acceptance):
    rng = np.random.default_rng(777)
    worst = 0
    start = time.perf_counter()
    for _ in range(1000):
        sc = random_scenario(rng, uniform_ci=True)
        n = int(rng.integers(1, 200))
        pairs = [
            (region_du_general(Policy.FA, sc, n), region_du(Policy.FA, sc, n)),
            (region_du_general(Policy.FAD, sc, n), region_du(Policy.FAD, sc, n)),
            (region_su_general(sc, n), region_su(sc, n)),
        ]
        for general, simple in pairs:
            if not (_close(general.lhs, simple.lhs) and _close(general.rhs, simple.rhs)):
                worst += 1
        # CFA-vs-FA against its closed uniform form
        c = sc.comm
        simple_lhs = c.ee_sl_bits_per_j / c.ee_ul + sc.center.pue * sc.k / sc.k_active * c.ee_sl_bits_per_j / c.ee_dl
        if not _close(cfa_beats_fa_per_round(sc).lhs, simple_lhs):
            worst += 1
    elapsed = time.perf_counter() - start
    ok = worst == 0 and elapsed < 5
    acceptance("criterion 7 (uniform-CI reduction)", ok, f"mismatches {worst}, {elapsed:.2f} s")
    assert ok


def test_criterion_08_energy_dominance(acceptance):
    rng = np.random.default_rng(31337)
    violations = equal_mismatch = 0
    start = time.perf_counter()
    for i in range(1000):
        sc = random_scenario(rng)
        if i % 4 == 0:
            sc = replace(sc, k_active=sc.k)
        if i % 8 == 1:
            sc = replace(sc, devices=tuple(replace(d, sleep_energy_j=d.round_energy_j) for d in sc.devices))
        fa = energy_fa(sc, 1).total_j
        fad = energy_fad(sc, 1).total_j
        if fad > fa:
            violations += 1
        full = sc.k_active == sc.k
        if full != (fad == fa):
            equal_mismatch += 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and equal_mismatch == 0 and elapsed < 5
    acceptance("criterion 8 (FA-D energy dominance)", ok,
               f"violations {violations}, equality mismatches {equal_mismatch}, {elapsed:.2f} s")
    assert ok


SIM_SEEDS = range(20)


def _sim_rounds(policy, hyper):
    sc = mnist_scenario(k=10, k_active=5)
    outcomes = [run_training(policy, sc, make_synthetic_dataset(3, 3, 100, 3.0, s), hyper, s) for s in SIM_SEEDS]
    return summarize(outcomes)


def test_criterion_09_simulator_convergence(acceptance):
    start = time.perf_counter()
    iid = TrainingHyper(step_size=0.05, target_loss=0.3, max_rounds=200)
    skew = replace(iid, partition="label_skew", classes_per_device=2)
    fa = _sim_rounds(Policy.FA, iid)
    fad = _sim_rounds(Policy.FAD, iid)
    fa_skew = _sim_rounds(Policy.FA, skew)
    elapsed = time.perf_counter() - start
    ok = (fa.hit_rate >= 0.95 and fad.median_rounds >= fa.median_rounds
          and fa_skew.median_rounds >= fa.median_rounds and elapsed < 120)
    acceptance("criterion 9 (simulator convergence)", ok,
               f"FA hits {fa.hits}/{fa.seeds}; median n FA {fa.median_rounds}, FA-D {fad.median_rounds}, "
               f"label-skew FA {fa_skew.median_rounds}; {elapsed:.1f} s")
    assert ok


def _fd_rel_error(model, w, anchor, x, y, upsilon, h=1e-6):
    _, grad = proximal_objective(model, w, anchor, x, y, upsilon)
    fd = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        fd[i] = (proximal_objective(model, w + e, anchor, x, y, upsilon)[0]
                 - proximal_objective(model, w - e, anchor, x, y, upsilon)[0]) / (2 * h)
    return float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12))


def test_criterion_10_numerical_suite(acceptance):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    grad_err = 0.0
    for hidden in (0, 6):
        model = build_model(4, 3, hidden)
        for _ in range(5):
            w = rng.standard_normal(model.param_count)
            anchor = rng.standard_normal(model.param_count)
            x = rng.standard_normal((12, 4))
            y = rng.integers(0, 3, 12)
            grad_err = max(grad_err, _fd_rel_error(model, w, anchor, x, y, float(rng.uniform(0, 1))))

    cons_err = 0.0
    for _ in range(50):
        k = int(rng.integers(2, 9))
        fleet = [rng.standard_normal(7) * 10 for _ in range(k)]
        after = [consensus_step(fleet[i], [fleet[j] for j in range(k) if j != i], [1] * (k - 1))
                 for i in range(k)]
        before_sum, after_sum = np.sum(fleet, axis=0), np.sum(after, axis=0)
        cons_err = max(cons_err, float(np.max(np.abs(after_sum - before_sum)) / np.max(np.abs(before_sum))))

    perm_exact = True
    for _ in range(50):
        m = int(rng.integers(1, 8))
        models = [rng.standard_normal(9) for _ in range(m)]
        counts = [int(c) for c in rng.integers(1, 100, m)]
        order = rng.permutation(m)
        perm_exact &= bool(np.array_equal(fa_aggregate(models, counts),
                                          fa_aggregate([models[i] for i in order], [counts[i] for i in order])))

    add_err = 0.0
    data = make_synthetic_dataset(3, 4, 60, 1.5, 9)
    model = build_model(4, 3, 0)
    for seed in range(5):
        shards = partition(data, 6, "label_skew", 2, seed)
        w = rng.standard_normal(model.param_count)
        pooled = model.loss(w, data.features, data.labels)
        split = sum(s.size / len(data) * model.loss(w, s.data.features, s.data.labels) for s in shards)
        add_err = max(add_err, abs(pooled - split) / abs(pooled))
    elapsed = time.perf_counter() - start

    ok = grad_err < 1e-4 and cons_err < 1e-9 and perm_exact and add_err < 1e-9 and elapsed < 30
    acceptance("criterion 10 (numerical suite)", ok,
               f"grad rel err {grad_err:.2e}, consensus sum err {cons_err:.2e}, "
               f"permutation exact {perm_exact}, additivity err {add_err:.2e}")
    assert ok


def test_criterion_11_determinism(acceptance):
    sweep = ["sweep", "--preset", "HRI_CONTINUAL", "--param", "k_active", "--grid", "1:9",
             "--compose-sidelink"]
    simulate = ["simulate", "--seeds", "3", "--max-rounds", "60"]
    runs = {name: (cli.run(argv), cli.run(argv)) for name, argv in (("sweep", sweep), ("simulate", simulate))}
    json_runs = cli.run(sweep + ["--format", "json"]), cli.run(sweep + ["--format", "json"])
    ok = all(a == b for a, b in runs.values()) and json_runs[0] == json_runs[1]
    acceptance("criterion 11 (determinism)", ok,
               f"sweep {len(runs['sweep'][0])} bytes, simulate {len(runs['simulate'][0])} bytes, byte-identical")
    assert ok
