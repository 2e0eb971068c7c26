from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedcarbon.energy import (
    ActiveSchedule,
    Policy,
    energy,
    energy_cfa,
    energy_cl,
    energy_ego,
    energy_fa,
    energy_fad,
    schedule_active,
)
from fedcarbon.errors import ConfigurationError, ContractError
from fedcarbon.quantities import CenterProfile, CommProfile, DeviceProfile, ModelSpec, Scenario

from scenario_gen import random_scenario


def toy(k=2, k_active=1, neighbors=1, comm=CommProfile(1e4, 5e4), sleep=0.0, pue=1.0, **kw):
    device = DeviceProfile(power_w=1.0, batch_time_s=1.0, sleep_energy_j=sleep, data_bits=1e6)
    center = CenterProfile(power_w=590, batch_time_s=0.01, batches_per_round=3, pue=pue)
    return Scenario.uniform(device, k, center=center, comm=comm, model=ModelSpec(1, bits=1e5),
                            k_active=k_active, neighbors=neighbors, **kw)


def test_policy_parse():
    assert Policy.parse("fad") is Policy.FAD
    assert Policy.parse("FA-D") is Policy.FAD
    assert Policy.parse("fa_d") is Policy.FAD
    assert Policy.parse(" cfa ") is Policy.CFA
    assert Policy.FAD.slug == "fad"
    with pytest.raises(ContractError):
        Policy.parse("gossip")


def test_schedule_examples():
    assert [schedule_active(t, 4, 2) for t in range(3)] == [{0, 1}, {2, 3}, {0, 1}]
    assert schedule_active(5, 6, 6) == frozenset(range(6))
    with pytest.raises(ContractError):
        schedule_active(0, 3, 4)


@given(st.integers(1, 30).flatmap(lambda k: st.tuples(st.just(k), st.integers(1, k))), st.integers(0, 50))
def test_round_robin_fairness(kk, offset):
    k, k_active = kk
    sched = ActiveSchedule(tuple(schedule_active(offset + t, k, k_active) for t in range(k)), k, k_active)
    assert sched.activations() == [k_active] * k


def test_schedule_validation():
    with pytest.raises(ContractError):
        ActiveSchedule(({0, 1}, {0}), 3, 2)
    with pytest.raises(ContractError):
        ActiveSchedule(({0, 3},), 3, 2)


def test_energy_cl_example():
    sc = toy(pue=1.5)
    e = energy_cl(sc, 10)
    assert e.compute_j == pytest.approx(265.5)
    assert e.comm_j == pytest.approx(200.0)
    assert e.total_j == e.compute_j + e.comm_j
    assert energy_cl(replace(sc, alpha=0.0), 0).total_j == 0
    doubled = energy_cl(replace(sc, alpha=2.0), 10)
    assert doubled.comm_j == 2 * e.comm_j and doubled.compute_j == e.compute_j


def test_energy_fa_fad_examples():
    sc = replace(toy(), center=CenterProfile(power_w=590, batch_time_s=0.01, agg_fraction=0.0))
    fa = energy_fa(sc, 1)
    assert (fa.compute_j, fa.comm_j) == (pytest.approx(2.0), pytest.approx(14.0))
    fad = energy_fad(sc, 1)
    assert (fad.compute_j, fad.comm_j) == (pytest.approx(1.0), pytest.approx(12.0))
    fa2 = energy_fa(sc, 2)
    assert fa2.compute_j == pytest.approx(2 * fa.compute_j) and fa2.comm_j == pytest.approx(2 * fa.comm_j)


def test_full_participation_collapses_fad_to_fa():
    sc = toy(k=3, k_active=3, sleep=0.2)
    assert energy_fad(sc, 7) == energy_fa(sc, 7)


def test_sleep_as_expensive_as_work():
    sc = toy(k=4, k_active=1, sleep=1.0)
    assert energy_fad(sc, 3).compute_j == pytest.approx(energy_fa(sc, 3).compute_j)


def test_schedule_length_mismatch():
    sc = toy()
    with pytest.raises(ContractError):
        energy_fa(sc, 3, ActiveSchedule.round_robin(2, 2, 1))
    with pytest.raises(ContractError):
        energy_fad(sc, 2, ActiveSchedule.round_robin(2, 3, 1))


def test_energy_cfa_examples():
    sc = toy(k=3, k_active=1, neighbors=2, comm=CommProfile(1e4, 5e4, 2e4))
    assert energy_cfa(sc, 1).comm_j == pytest.approx(10.0)
    assert energy_cfa(replace(sc, neighbors=0), 1).comm_j == 0
    wwan = replace(sc, comm=CommProfile(10e3, 50e3))
    with pytest.raises(ConfigurationError):
        energy_cfa(wwan, 1)
    per_bit = energy_cfa(wwan, 1, compose_sidelink=True).comm_j / (2 * 1e5)
    assert per_bit == pytest.approx(1.2e-4)


def test_cfa_neighbor_sets():
    sc = toy(k=3, k_active=1, neighbors=2, comm=CommProfile(1e4, 5e4, 2e4))
    sched = ActiveSchedule.round_robin(1, 3, 1)
    assert energy_cfa(sc, 1, sched, [{0: {1, 2}}]).comm_j == pytest.approx(10.0)
    with pytest.raises(ContractError):
        energy_cfa(sc, 1, sched, [{0: {0, 1}}])
    with pytest.raises(ContractError):
        energy_cfa(sc, 1, sched, [{0: {1}}])


def test_cfa_over_wwan_closed_form():
    sc = toy(k=5, k_active=2, neighbors=3, comm=CommProfile(10e3, 50e3), pue=1.0)
    n = 4
    want = 1e5 * 3 * (2 * n) * (1 / 10e3 + 1 / 50e3)
    assert energy_cfa(sc, n, compose_sidelink=True).comm_j == pytest.approx(want, rel=1e-12)


def test_ego_has_no_traffic():
    e = energy_ego(toy(k=3, peripheral_energy_j=2.0), 5)
    assert e.comm_j == 0 and e.compute_j == pytest.approx(5 * 3 * (1.0 + 2.0))


def test_peripheral_charged_to_every_policy():
    base = toy(k=3, k_active=2, neighbors=1, comm=CommProfile(1e4, 5e4, 2e4))
    extra = replace(base, peripheral_energy_j=4.0)
    for p in Policy:
        diff = energy(p, extra, 6).compute_j - energy(p, base, 6).compute_j
        assert diff == pytest.approx(6 * 3 * 4.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_linear_in_rounds_with_stationary_schedule(seed, n):
    sc = random_scenario(np.random.default_rng(seed))
    active = range(sc.k_active)
    one, many = ActiveSchedule.stationary(n, sc.k, active), ActiveSchedule.stationary(2 * n, sc.k, active)
    for p in Policy:
        a = energy(p, sc, n, None if p is Policy.CL else one)
        b = energy(p, sc, 2 * n, None if p is Policy.CL else many)
        assert b.compute_j == pytest.approx(2 * a.compute_j, rel=1e-12)
        if p is not Policy.CL:
            assert b.comm_j == pytest.approx(2 * a.comm_j, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
def test_traffic_separation(seed, c):
    sc = random_scenario(np.random.default_rng(seed))
    bigger_model = replace(sc, model=replace(sc.model, bits=sc.model_bits * c))
    bigger_data = sc.with_data_bits([d.data_bits * c for d in sc.devices])
    assert energy_cl(bigger_model, 5).comm_j == energy_cl(sc, 5).comm_j
    for p in (Policy.FA, Policy.FAD, Policy.CFA):
        assert energy(p, bigger_data, 5).comm_j == energy(p, sc, 5).comm_j
