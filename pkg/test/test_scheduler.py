# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

import math

from flux_ising.circuit import FluxQubitSpec
from flux_ising.coupling import chain_graph
from flux_ising.coupling import EffectiveIsingModel
from flux_ising.coupling import geometric_model
from flux_ising.coupling import grid_graph
from flux_ising.error_budget import echo_bound_1d
from flux_ising.scheduler import build_1d_schedule
from flux_ising.scheduler import build_2d_schedule
from flux_ising.scheduler import dominant_partners
from flux_ising.scheduler import echo_demo_schedule
from flux_ising.scheduler import echo_step_count
from flux_ising.scheduler import GraphStateTarget
from flux_ising.scheduler import grid_lines
from flux_ising.scheduler import Pulse
from flux_ising.scheduler import residual_zz_angles
from flux_ising.scheduler import Schedule
from flux_ising.scheduler import Step
from flux_ising.scheduler import UnsupportedPatternError
import networkx as nx
import pytest


def _chain_model(size, g1=0.1, ratio=0.1):
    return geometric_model(
        chain_graph(size, 0.077, FluxQubitSpec()), g1, ratio)


def test_echo_step_count():
    assert echo_step_count(2) == 3
    assert echo_step_count(5) == 3
    assert echo_step_count(7) == 4
    with pytest.raises(ValueError):
        echo_step_count(1)


def test_1d_schedule():
    schedule = build_1d_schedule(9, 1000.0, 5, gate_time=1.25)
    assert len(schedule.steps) == 3
    assert schedule.gate_counts() == [3, 3, 2]
    assert sorted(schedule.gates()) == [(i, i + 1) for i in range(8)]
    assert schedule.duration == pytest.approx(3.75)
    assert schedule.metadata == {'kind': 'chain', 'p': 5, 'echo': True}

    first = schedule.steps[0]
    assert first.powered == {0, 1, 3, 4, 6, 7}
    assert first.pulses == (Pulse(0.625, frozenset({3, 4})),)

    initialized = [site for step in schedule.steps for site in step.init]
    assert sorted(initialized) == list(range(9))

    target = schedule.target()
    assert nx.is_isomorphic(target.to_graph(), nx.path_graph(9))


def test_1d_schedule_without_echo():
    schedule = build_1d_schedule(12, 1000.0, 4, echo=False)
    assert len(schedule.steps) == 5
    assert all(not step.pulses for step in schedule.steps)
    for step in schedule.steps:
        starts = sorted(i for i, _ in step.gates)
        assert all(b - a >= 5 for a, b in zip(starts, starts[1:]))

    with pytest.raises(ValueError):
        build_1d_schedule(1, 1000.0)


def test_grid_lines():
    lines = grid_lines(4)
    assert lines['rows_a'] == [[0, 1, 2, 3]]
    assert lines['rows_b'] == [[8, 9, 10, 11]]
    assert lines['columns_a'] == [[0, 4, 8, 12]]
    assert lines['columns_b'] == [[2, 6, 10, 14]]

    lines = grid_lines(8)
    assert len(lines['rows_a']) == 2
    assert len(lines['rows_b']) == 2


def test_2d_schedule():
    schedule = build_2d_schedule(4, 1000.0, 5)
    assert len(schedule.steps) == 12
    gates = schedule.gates()
    assert len(gates) == len(set(gates)) == 12
    assert sum(schedule.gate_counts()[:3]) == 3
    assert schedule.size == 16

    with pytest.raises(ValueError):
        build_2d_schedule(3, 1000.0)


def test_echo_demo_angles():
    model = _chain_model(3, 0.1, 0.2)
    schedule = echo_demo_schedule(1.25)
    phases = residual_zz_angles(model, schedule)
    assert phases.angle(0, 1) == pytest.approx(math.pi)
    assert phases.angle(1, 2) == pytest.approx(0.0, abs=1e-12)
    assert phases.angle(0, 2) == pytest.approx(0.0, abs=1e-12)
    assert phases.flips == {0, 1}


def test_1d_phases():
    model = _chain_model(9)
    schedule = build_1d_schedule(9, 1000.0, 5, gate_time=1.25)
    phases = residual_zz_angles(model, schedule)
    for i in range(8):
        assert abs(phases.angle(i, i + 1)) == pytest.approx(math.pi)

    stray = [
        abs(theta) for (i, j), theta in phases.pairs.items() if j - i > 1]
    assert max(stray) < math.pi * 0.1 ** 2
    assert max(stray) > 0

    local = residual_zz_angles(model, schedule, include_nonlocal=False)
    assert set(local.pairs) == {(i, i + 1) for i in range(8)}


def test_residual_echo_bound():
    # uncancelled same-parity pairs sit at least five sites apart
    ratio = 0.1
    model = _chain_model(9, 0.1, ratio)
    schedule = build_1d_schedule(9, 1000.0, 5, gate_time=1.25)
    phases = residual_zz_angles(model, schedule)
    target = schedule.target()
    worst = max(
        sum(abs(theta) / 4 for other, theta in dominant_partners(
            phases, site, target.edges))
        for site in range(9))
    assert worst <= 2 * echo_bound_1d(ratio) + 1e-12


def test_dominant_partners():
    model = _chain_model(3, 0.1, 0.2)
    phases = residual_zz_angles(
        model, Schedule(3, (Step(1.25, frozenset({0, 1, 2})),)))
    partners = dominant_partners(phases, 0)
    assert [other for other, _ in partners] == [1, 2]
    assert dominant_partners(phases, 0, [(0, 1)])[0][0] == 2


def test_unsupported_pulse():
    model = _chain_model(2)
    schedule = Schedule(2, (
        Step(1.0, frozenset({0, 1}), (Pulse(0.3, frozenset({0})),)),))
    with pytest.raises(UnsupportedPatternError):
        residual_zz_angles(model, schedule)

    with pytest.raises(ValueError):
        residual_zz_angles(_chain_model(3), schedule)


def test_step_validation():
    with pytest.raises(ValueError):
        Step(-1.0)
    with pytest.raises(ValueError):
        Step(1.0, pulses=(Pulse(2.0, frozenset({0})),))
    with pytest.raises(ValueError):
        GraphStateTarget(2, frozenset({(0, 2)}))


def test_schedule_document():
    schedule = build_1d_schedule(5, 1000.0, 5, gate_time=1.25)
    document = schedule.to_dict()
    assert document['sites'] == 5
    assert document['voltage_uV'] == 1000.0
    assert document['steps'][0]['pulses'] == [
        {'at_ns': 0.625, 'sites': [3, 4]}]

    loaded = Schedule.from_dict(document)
    assert loaded.steps == schedule.steps
    assert loaded.gate_time == schedule.gate_time


def test_model_without_pairs():
    model = EffectiveIsingModel((0.0, 0.0), {})
    schedule = build_1d_schedule(2, 1000.0)
    phases = residual_zz_angles(model, schedule)
    assert phases.pairs == {}
    assert geometric_model(
        grid_graph(4, 0.077, FluxQubitSpec()), 0.1, 0.1).size == 16
