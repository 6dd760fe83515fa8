# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

import math
from types import SimpleNamespace

from flux_ising import error_budget
from flux_ising.circuit import FluxQubitSpec
from flux_ising.coupling import PairCoupling
from flux_ising.error_budget import chain_multiplicity
from flux_ising.error_budget import correlated_error
from flux_ising.error_budget import correlated_error_curve
from flux_ising.error_budget import dephasing_error
from flux_ising.error_budget import echo_bound_1d
from flux_ising.error_budget import echo_bound_2d
from flux_ising.error_budget import ErrorBreakdown
from flux_ising.error_budget import gate_time
from flux_ising.error_budget import grid_multiplicity
from flux_ising.error_budget import local_error
from flux_ising.error_budget import local_error_curve
from flux_ising.error_budget import LocalErrorCurve
from flux_ising.error_budget import LocalErrorRow
from flux_ising.error_budget import minimum_spacing
from flux_ising.error_budget import noise_budget
from flux_ising.error_budget import NoiseParams
from flux_ising.error_budget import threshold_crossing
from flux_ising.error_budget import timing_error
from flux_ising.error_budget import timing_error_from_unitaries
from flux_ising.error_budget import tolerable_jitter
from flux_ising.error_budget import tolerable_voltage_noise
from flux_ising.error_budget import total_error_curve
from flux_ising.units import DomainError
import numpy as np
import pytest


def test_gate_time():
    assert gate_time(0.1) == pytest.approx(1.25)
    assert gate_time(0.05) == pytest.approx(2.5)
    with pytest.raises(DomainError):
        gate_time(0.0)
    with pytest.raises(DomainError):
        gate_time(-0.1)


def test_timing_error_matches_unitaries():
    for g in np.linspace(0.01, 0.2, 10):
        for dt in np.linspace(-0.5, 0.5, 10):
            assert timing_error(g, dt) == pytest.approx(
                timing_error_from_unitaries(g, gate_time(g), dt), abs=1e-12)


def test_timing_error_expansion():
    g, dt = 0.1, 1e-4
    leading = 12 * math.pi ** 2 * g ** 2 * dt ** 2
    assert timing_error(g, dt) == pytest.approx(leading, rel=1e-5)
    assert timing_error(g, dt) == timing_error(g, -dt)
    assert timing_error(g, 0.0) == 0.0
    # a full period of the |ee> phase returns the state
    assert timing_error(g, 1 / (4 * g)) == pytest.approx(0.0, abs=1e-12)
    assert timing_error(g, 1 / (8 * g)) == pytest.approx(0.75)


def test_dephasing_error():
    dephasing = dephasing_error(0.1, 1e-4, 0.21)
    assert dephasing.gate_time == pytest.approx(1.25)
    assert dephasing.t2 == pytest.approx(1 / (2 * math.pi * 1e-4 * 0.21))
    assert dephasing.epsilon == pytest.approx(1.25 / dephasing.t2)
    assert dephasing_error(0.1, 1e-4, 0.42).epsilon == pytest.approx(
        2 * dephasing.epsilon)
    assert dephasing_error(0.1, -1e-4, 0.21).epsilon == pytest.approx(
        dephasing.epsilon)

    quiet = dephasing_error(0.1, 1e-4, 0.0)
    assert quiet.epsilon == 0.0
    assert math.isinf(quiet.t2)

    with pytest.raises(DomainError):
        dephasing_error(0.1, 1e-4, -0.1)


def test_local_error():
    noise = NoiseParams(dv=0.21, dt=0.05)
    budget = local_error(0.1, 1e-4, noise)
    assert budget.eps_tim == pytest.approx(timing_error(0.1, 0.05))
    assert budget.eps_loc == pytest.approx(budget.eps_d + budget.eps_tim)
    assert budget.in_regime

    flipped = local_error(-0.1, 1e-4, noise)
    assert flipped.eps_loc == pytest.approx(budget.eps_loc)
    with pytest.raises(DomainError):
        local_error(0.0, 1e-4, noise)

    assert not ErrorBreakdown(0.5, 0.6, 1.0, math.inf).in_regime
    assert not ErrorBreakdown(0.0, 0.0, 1.0, 5.0).in_regime

    with pytest.raises(DomainError):
        NoiseParams(dv=-1.0)


def _fake_pair(monkeypatch, coupling, slope=1e-3):
    def _pair_coupling_g(spec1, spec2, capacitance, voltage1, voltage2, *,
                         cutoff):
        return PairCoupling(coupling(voltage1), 1.0, 1.0, None)

    def _slope(spec, step, cutoff, *, charging_energies):
        return SimpleNamespace(value=slope)

    monkeypatch.setattr(error_budget, 'pair_coupling_g', _pair_coupling_g)
    monkeypatch.setattr(error_budget, 'dE01_dVe', _slope)


def _linear_coupling(voltage):
    # symmetric pairs leave round-off at zero voltage
    return 2e-4 * voltage if voltage else 7.3e-27


def test_local_error_curve(monkeypatch):
    _fake_pair(monkeypatch, _linear_coupling)
    noise = NoiseParams()
    voltages = (0.0, 5.0, 100.0, 200.0, 300.0, 400.0, 1000.0)
    curve = local_error_curve(0.077, voltages, noise, FluxQubitSpec())
    assert [row.voltage for row in curve.rows] == list(voltages)

    off = curve.rows[0]
    assert 'switched off' in off.error
    assert off.g == 7.3e-27
    assert math.isnan(off.eps_loc)
    assert not off.in_regime

    slow = curve.rows[1]
    assert slow.error is None
    assert not slow.in_regime

    assert curve.argmin == 300.0
    assert curve.minimum == pytest.approx(
        local_error(0.06, 1e-3, noise).eps_loc)
    assert curve.rows[4].in_regime
    assert curve.interior
    assert not curve.below_threshold

    relaxed = local_error_curve(
        0.077, voltages, noise, FluxQubitSpec(), threshold=0.01)
    assert relaxed.below_threshold


def test_local_error_curve_minimum_at_the_edge(monkeypatch):
    _fake_pair(monkeypatch, _linear_coupling)
    curve = local_error_curve(
        0.077, (300.0, 400.0, 1000.0), NoiseParams(), FluxQubitSpec())
    assert curve.argmin == 300.0
    assert not curve.interior


def test_local_error_curve_failures(monkeypatch):
    def _coupling(voltage):
        if voltage > 500:
            raise ValueError('no convergence')
        return 0.0

    _fake_pair(monkeypatch, _coupling)
    curve = local_error_curve(
        0.077, (100.0, 1000.0), NoiseParams(), FluxQubitSpec())
    assert curve.argmin is None
    assert curve.minimum is None
    assert 'switched off' in curve.rows[0].error
    assert curve.rows[1].error == 'no convergence'
    assert math.isnan(curve.rows[1].g)


@pytest.mark.slow
def test_local_error_curve_of_the_pair():
    curve = local_error_curve(
        0.077, np.arange(0.0, 2001.0, 100.0), NoiseParams(),
        FluxQubitSpec(), cutoff=6)
    assert curve.rows[0].error is not None
    assert not curve.rows[0].in_regime
    assert curve.interior
    assert 100.0 <= curve.argmin <= 1000.0
    assert not curve.below_threshold
    best = [row for row in curve.rows if row.voltage == curve.argmin][0]
    assert best.in_regime


def test_tolerable_jitter():
    g, eps_d = 0.2, 2e-4
    dt = tolerable_jitter(g, eps_d)
    assert eps_d + timing_error(g, dt) == pytest.approx(1e-3)
    assert tolerable_jitter(-g, eps_d) == pytest.approx(dt)
    assert tolerable_jitter(g, 2e-3) is None
    assert math.isinf(tolerable_jitter(g, 0.0, threshold=1.0))

    with pytest.raises(DomainError):
        tolerable_jitter(0.0, eps_d)


def test_tolerable_voltage_noise():
    noise = NoiseParams()
    budget = local_error(0.02, 1e-3, noise)
    dv = tolerable_voltage_noise(budget.eps_d, noise.dv, budget.eps_tim)
    quieter = local_error(0.02, 1e-3, NoiseParams(dv=dv, dt=noise.dt))
    assert quieter.eps_loc == pytest.approx(1e-3)

    assert tolerable_voltage_noise(budget.eps_d, noise.dv, 2e-3) is None
    assert math.isinf(tolerable_voltage_noise(0.0, noise.dv, 1e-4))


def test_noise_budget(monkeypatch):
    _fake_pair(monkeypatch, _linear_coupling)
    noise = NoiseParams()
    voltages = (0.0, 5.0, 100.0, 200.0, 300.0, 400.0, 1000.0)
    curve = local_error_curve(0.077, voltages, noise, FluxQubitSpec())
    budget = noise_budget(curve, noise)

    # only the strongest coupling leaves room for the timing error
    assert budget.dt_voltage == 1000.0
    best = curve.rows[-1]
    assert best.eps_d + timing_error(best.g, budget.dt) == pytest.approx(
        1e-3)

    assert budget.dv_voltage == 200.0
    quieter = local_error(0.04, 1e-3, NoiseParams(dv=budget.dv))
    assert quieter.eps_loc == pytest.approx(1e-3)

    strict = noise_budget(curve, noise, threshold=1e-9)
    assert strict.dt is None
    assert strict.dv is None


def test_multiplicities():
    chain = chain_multiplicity(9)
    assert [chain(n) for n in range(1, 6)] == [2, 2, 2, 2, 0]
    edge = chain_multiplicity(9, site=0)
    assert [edge(n) for n in range(1, 10)] == [1] * 8 + [0]

    grid = grid_multiplicity(5)
    assert [grid(n) for n in range(1, 4)] == [4, 4, 0]
    corner = grid_multiplicity(5, site=0)
    assert corner(1) == 2


def test_correlated_error_geometric_sum():
    ratio, p, last = 0.3, 4, 10
    expected = math.pi / 2 * ratio ** (p - 1) * \
        (1 - ratio ** (last - p + 1)) / (1 - ratio)
    assert correlated_error(
        ratio, p, 2 * last, multiplicity=lambda n: 2) == \
        pytest.approx(expected, rel=1e-12)
    assert correlated_error(ratio, p, 2 * last + 1) == pytest.approx(
        expected, rel=1e-12)

    table = {4: 1, 5: 3}
    assert correlated_error(ratio, 4, 12, multiplicity=table) == \
        pytest.approx(math.pi / 4 * (ratio ** 3 + 3 * ratio ** 4))

    assert correlated_error(0.0, 2, 12) == 0.0
    assert correlated_error(0.3, 7, 12) == 0.0


def test_correlated_error_domain():
    with pytest.raises(DomainError):
        correlated_error(1.0, 4, 12)
    with pytest.raises(DomainError):
        correlated_error(-0.1, 4, 12)
    with pytest.raises(DomainError):
        correlated_error(0.1, 1, 12)


def test_echo_bounds():
    ratio = 0.1
    assert echo_bound_1d(ratio) == pytest.approx(
        math.pi / 4 * (1e-4 + 2e-5))
    assert echo_bound_2d(ratio) == pytest.approx(
        math.pi / 4 * (1e-4 + 4e-5))
    assert echo_bound_1d(0.0) == 0.0


def test_threshold_crossing():
    assert threshold_crossing([1.0, 2.0], [1e-5, 1e-3], 1e-4) == \
        pytest.approx(1.5)
    assert threshold_crossing([1.0, 2.0, 3.0], [1e-6, 1e-5, 1e-3], 1e-4) == \
        pytest.approx(2.5)
    assert threshold_crossing([1.0, 2.0], [1e-6, 1e-5], 1e-4) is None
    assert threshold_crossing(
        [1.0, 2.0, 3.0], [1e-6, math.nan, 1e-2], 1e-4) == pytest.approx(2.0)


def test_minimum_spacing():
    assert minimum_spacing(0.01, 12, 1e-4) == 4
    for ratio in (0.1, 0.2, 0.3):
        p = minimum_spacing(ratio, 40, 1e-4)
        assert correlated_error(ratio, p, 40) <= 1e-4
        assert correlated_error(ratio, p - 1, 40) > 1e-4


def test_total_error_curve():
    rows = [
        LocalErrorRow(0.0, 0.1, 0.0, 0.0, 1e-3, 1e-3, True, None),
        LocalErrorRow(100.0, 0.1, 0.0, 0.0, 2e-3, 2e-3, True, None),
    ]
    curve = LocalErrorCurve(rows, 0.0, 1e-3, False, False)
    total = total_error_curve(curve, 1e-4)
    assert [row.total for row in total] == pytest.approx([1.1e-3, 2.1e-3])
    assert all(row.eps_non == 1e-4 for row in total)


def test_correlated_error_curve_records_failures():
    rows = correlated_error_curve(
        (0.077,), 0.0, FluxQubitSpec(), 6, (4, 5), cutoff=3)
    assert len(rows) == 1
    assert rows[0].error is not None
    assert math.isnan(rows[0].ratio)
    assert math.isnan(rows[0].eps_non[4])

    with pytest.raises(ValueError):
        correlated_error_curve((), 1000.0, FluxQubitSpec(), 6, (4,))
