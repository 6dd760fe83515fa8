# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""
Voltage and pi-pulse schedules for building cluster states.

A schedule is a list of steps. During a step the powered sites sit at the
operating voltage, so every pair of powered sites interacts. Pulses are
instantaneous X flips; a pulse on exactly one site of a pair at mid-step
reverses the sign of that pair's phase for the second half and cancels
it.
"""

from collections import namedtuple
from dataclasses import dataclass
from dataclasses import field
import math
from typing import Any
from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Set
from typing import Tuple

from colcon_core.logging import colcon_logger
from flux_ising.coupling import EffectiveIsingModel
import networkx as nx

logger = colcon_logger.getChild(__name__)

"""Default minimum site distance of unsuppressed simultaneous pairs"""
DEFAULT_SPACING = 5

"""Relative tolerance when matching a pulse to the step midpoint"""
MIDPOINT_TOLERANCE = 1e-9

Pulse = namedtuple('Pulse', ('at', 'sites'))

Edge = Tuple[int, int]


class UnsupportedPatternError(RuntimeError):
    """The schedule uses a pulse pattern the angle map cannot represent."""


def _edge(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Step:
    """One voltage-on interval with its pulses and initializations."""

    duration: float
    powered: FrozenSet[int] = frozenset()
    pulses: Tuple[Pulse, ...] = ()
    init: FrozenSet[int] = frozenset()
    gates: Tuple[Edge, ...] = ()

    def __post_init__(self):  # noqa: D105
        if self.duration < 0:
            raise ValueError(
                f'Step duration must be non-negative, got {self.duration!r}')
        for pulse in self.pulses:
            if not 0 <= pulse.at <= self.duration:
                raise ValueError(
                    f'Pulse at {pulse.at} ns lies outside a step of '
                    f'{self.duration} ns')

    def to_dict(self) -> Dict[str, Any]:
        """Export the step as a JSON-ready document."""
        return {
            'duration_ns': self.duration,
            'powered': sorted(self.powered),
            'pulses': [
                {'at_ns': p.at, 'sites': sorted(p.sites)}
                for p in self.pulses],
            'init': sorted(self.init),
            'gates': [list(g) for g in self.gates],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Step':
        """Load a step exported by :meth:`to_dict`."""
        return cls(
            float(data['duration_ns']),
            frozenset(data.get('powered', ())),
            tuple(
                Pulse(float(p['at_ns']), frozenset(p['sites']))
                for p in data.get('pulses', ())),
            frozenset(data.get('init', ())),
            tuple(_edge(*g) for g in data.get('gates', ())))


@dataclass(frozen=True)
class GraphStateTarget:
    """The graph whose graph state a schedule should produce."""

    vertices: int
    edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self):  # noqa: D105
        for i, j in self.edges:
            if i == j or not (0 <= i < self.vertices and
                              0 <= j < self.vertices):
                raise ValueError(f'Invalid graph state edge ({i}, {j})')

    def to_graph(self) -> nx.Graph:
        """Get the target as a networkx graph."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.vertices))
        graph.add_edges_from(self.edges)
        return graph

    def neighbors(self, vertex: int) -> List[int]:
        """Get the sorted neighbours of a vertex."""
        return sorted(self.to_graph().neighbors(vertex))

    @classmethod
    def from_graph(cls, graph: nx.Graph) -> 'GraphStateTarget':
        """Build a target from a graph with integer vertices."""
        return cls(
            graph.number_of_nodes(),
            frozenset(_edge(i, j) for i, j in graph.edges()))


@dataclass(frozen=True)
class Schedule:
    """An ordered sequence of steps acting on ``size`` sites."""

    size: int
    steps: Tuple[Step, ...] = ()
    voltage: Optional[float] = None
    gate_time: Optional[float] = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def duration(self) -> float:
        """Get the total duration in ns."""
        return math.fsum(step.duration for step in self.steps)

    def gates(self) -> List[Edge]:
        """Get the intended CZ pairs of all steps, in step order."""
        return [g for step in self.steps for g in step.gates]

    def target(self) -> GraphStateTarget:
        """Get the graph built by the intended gates."""
        return GraphStateTarget(self.size, frozenset(self.gates()))

    def gate_counts(self) -> List[int]:
        """Get the number of parallel gates in each step."""
        return [len(step.gates) for step in self.steps]

    def to_dict(self) -> Dict[str, Any]:
        """Export the schedule as a JSON-ready document."""
        data: Dict[str, Any] = {'sites': self.size}
        if self.voltage is not None:
            data['voltage_uV'] = self.voltage
        if self.gate_time is not None:
            data['gate_time_ns'] = self.gate_time
        data['steps'] = [step.to_dict() for step in self.steps]
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Schedule':
        """Load a schedule exported by :meth:`to_dict`."""
        return cls(
            int(data['sites']),
            tuple(Step.from_dict(s) for s in data['steps']),
            data.get('voltage_uV'),
            data.get('gate_time_ns'))


def echo_step_count(p: int) -> int:
    """
    Get the number of steps of an echoed line sweep for spacing p.

    Pairs of the same pulse parity in one step are 2L - 1 sites apart.
    """
    if p < 2:
        raise ValueError(f'Spacing p must be at least 2, got {p!r}')
    return max(3, math.ceil((p + 1) / 2))


def _line_steps(
    lines: Sequence[Sequence[int]],
    period: int,
    gate_time: float,
    echo: bool,
) -> List[Tuple[FrozenSet[int], Tuple[Pulse, ...], Tuple[Edge, ...]]]:
    # Step j powers the edges at positions j, j + period, ... along
    # every line. Line i (1-based) pulses its k-th pair when k + i is odd.
    steps = []
    for offset in range(period):
        powered: Set[int] = set()
        pulsed: Set[int] = set()
        gates: List[Edge] = []
        for line_index, line in enumerate(lines, start=1):
            positions = range(offset, len(line) - 1, period)
            for pair_index, position in enumerate(positions, start=1):
                a, b = line[position], line[position + 1]
                powered.update((a, b))
                gates.append(_edge(a, b))
                if echo and (pair_index + line_index) % 2:
                    pulsed.update((a, b))
        pulses: Tuple[Pulse, ...] = ()
        if pulsed:
            pulses = (Pulse(gate_time / 2, frozenset(pulsed)),)
        steps.append((frozenset(powered), pulses, tuple(gates)))
    return steps


def _assemble(
    size: int,
    raw_steps: Iterable[
        Tuple[FrozenSet[int], Tuple[Pulse, ...], Tuple[Edge, ...]]],
    gate_time: float,
    voltage: float,
    metadata: Mapping[str, Any],
) -> Schedule:
    # Sites are initialized the first time they are powered; sites that
    # are never powered start in the first step.
    raw_steps = list(raw_steps)
    ever_powered: Set[int] = set()
    for powered, _, _ in raw_steps:
        ever_powered |= powered
    initialized: Set[int] = set()
    steps = []
    for idx, (powered, pulses, gates) in enumerate(raw_steps):
        init = set(powered) - initialized
        if idx == 0:
            init |= set(range(size)) - ever_powered
        initialized |= init
        steps.append(Step(
            gate_time, powered, pulses, frozenset(init), gates))
    return Schedule(size, tuple(steps), voltage, gate_time, metadata)


def build_1d_schedule(
    size: int,
    voltage: float,
    p: int = DEFAULT_SPACING,
    *,
    gate_time: float = 1.0,
    echo: bool = True,
) -> Schedule:
    """
    Build the procedure producing a linear cluster state on a chain.

    With ``echo`` every step powers every L-th edge (L = 3 for p <= 5)
    and pulses both sites of every second pair at mid-step, so
    neighbouring pairs cancel and same-parity pairs are at least p sites
    apart. Without ``echo`` the powered pairs are p sites apart and no
    pulses are used.

    :param size: Number of sites N >= 2
    :param voltage: Operating voltage in uV
    :param p: Minimum spacing of uncancelled simultaneous pairs
    :param gate_time: Step duration, the CZ gate time in ns
    :param echo: Whether to use pi pulses
    """
    if size < 2:
        raise ValueError(f'A chain schedule needs N >= 2, got {size}')
    period = echo_step_count(p) if echo else p + 1
    line = list(range(size))
    raw = _line_steps([line], period, gate_time, echo)
    return _assemble(
        size, raw, gate_time, voltage,
        {'kind': 'chain', 'p': p, 'echo': echo})


def grid_lines(size: int) -> Dict[str, List[List[int]]]:
    """
    Select the rows and columns of the four line groups.

    1-based rows 4m - 3 (m <= N/4) form the first group and rows 4m - 1
    (m <= (N+1)/4) the second; columns follow the same rule.
    """
    first = [4 * m - 4 for m in range(1, size // 4 + 1)]
    second = [4 * m - 2 for m in range(1, (size + 1) // 4 + 1)]
    return {
        'rows_a': [[r * size + c for c in range(size)] for r in first],
        'rows_b': [[r * size + c for c in range(size)] for r in second],
        'columns_a': [[r * size + c for r in range(size)] for c in first],
        'columns_b': [[r * size + c for r in range(size)] for c in second],
    }


def build_2d_schedule(
    size: int,
    voltage: float,
    p: int = DEFAULT_SPACING,
    *,
    gate_time: float = 1.0,
) -> Schedule:
    """
    Build the 12-step procedure producing a two dimensional graph state.

    Each line group is swept like a chain in three steps. Neighbouring
    lines of a group use opposite pulse patterns. Site (r, c) of the
    N x N grid has index r * N + c.

    :param size: Grid side length N >= 4
    :param voltage: Operating voltage in uV
    :param p: Minimum spacing of uncancelled simultaneous pairs
    :param gate_time: Step duration, the CZ gate time in ns
    """
    if size < 4:
        raise ValueError(f'A grid schedule needs N >= 4, got {size}')
    period = echo_step_count(p)
    raw = []
    for lines in grid_lines(size).values():
        raw.extend(_line_steps(lines, period, gate_time, True))
    return _assemble(
        size * size, raw, gate_time, voltage,
        {'kind': 'grid', 'side': size, 'p': p, 'echo': True})


def echo_demo_schedule(gate_time: float = 1.0) -> Schedule:
    """
    Build the three-site echo demonstration.

    All three sites are powered and sites 0 and 1 are pulsed at
    mid-step, so only the pair (0, 1) keeps its phase.
    """
    step = Step(
        gate_time, frozenset({0, 1, 2}),
        (Pulse(gate_time / 2, frozenset({0, 1})),),
        frozenset({0, 1, 2}), ((0, 1),))
    return Schedule(3, (step,), None, gate_time, {'kind': 'echo-demo'})


@dataclass(frozen=True)
class PhaseMap:
    """
    Accumulated phases of a schedule in the toggling frame.

    The final state is X^flips exp(-i sum_l singles_l Z_l / 2
    - i sum_pairs theta Z Z' / 4) |+...+>, so a CZ pair accumulates
    |theta| = pi.
    """

    size: int
    pairs: Mapping[Edge, float]
    singles: Mapping[int, float]
    flips: FrozenSet[int] = frozenset()

    def angle(self, i: int, j: int) -> float:
        """Get the accumulated angle of a pair, 0 if absent."""
        return self.pairs.get(_edge(i, j), 0.0)

    def to_dict(self) -> Dict[str, Any]:
        """Export the map as a JSON-ready document."""
        return {
            'pairs': [
                {'i': i, 'j': j, 'theta_rad': theta}
                for (i, j), theta in sorted(self.pairs.items())],
            'singles': [
                {'site': s, 'phi_rad': phi}
                for s, phi in sorted(self.singles.items())],
            'flips': sorted(self.flips),
        }


def _is_midpoint(pulse: Pulse, duration: float) -> bool:
    return abs(pulse.at - duration / 2) <= \
        MIDPOINT_TOLERANCE * max(duration, 1.0)


def residual_zz_angles(
    model: EffectiveIsingModel,
    schedule: Schedule, include_nonlocal: bool = True,
) -> PhaseMap:
    """
    Integrate the signed phases of every pair over a schedule.

    A pair accumulates theta = 8 pi integral s s' g dt while both sites
    are powered, where s flips with every pulse on its site.

    :param model: The effective Ising model
    :param schedule: The schedule, with pulses at step midpoints only
    :param include_nonlocal: Whether couplings beyond nearest neighbours
      act
    :raises UnsupportedPatternError: If a pulse is not at a midpoint
    """
    check_model_size(model, schedule)
    signs = [1] * schedule.size
    singles = {site: 0.0 for site in range(schedule.size)}
    pairs: Dict[Edge, float] = {}
    couplings = active_couplings(model, include_nonlocal)

    for number, step in enumerate(schedule.steps, start=1):
        for site in step.init:
            signs[site] = 1
            singles[site] = 0.0
            for pair in pairs:
                if site in pair and pairs[pair] != 0.0:
                    raise UnsupportedPatternError(
                        f'Site {site} is initialized after interacting')

        pulsed: Set[int] = set()
        for pulse in step.pulses:
            if not _is_midpoint(pulse, step.duration):
                raise UnsupportedPatternError(
                    f'Step {number} has a pulse at {pulse.at} ns, not at '
                    f'the midpoint {step.duration / 2} ns')
            pulsed ^= set(pulse.sites)
        after = list(signs)
        for site in pulsed:
            after[site] = -after[site]
        half = step.duration / 2

        for site in range(schedule.size):
            delta = model.deltas[site]
            singles[site] += 2 * math.pi * delta * half * (
                signs[site] + after[site])

        for (i, j), g in couplings:
            if i not in step.powered or j not in step.powered:
                continue
            pairs[(i, j)] = pairs.get((i, j), 0.0) + 8 * math.pi * g * \
                half * (signs[i] * signs[j] + after[i] * after[j])
        signs = after

    flips = frozenset(s for s in range(schedule.size) if signs[s] < 0)
    return PhaseMap(schedule.size, pairs, singles, flips)


def check_model_size(
    model: EffectiveIsingModel, schedule: Schedule,
) -> None:
    """
    Check that a model and a schedule act on the same sites.

    :raises ValueError: If the site counts differ
    """
    if len(model.deltas) != schedule.size:
        raise ValueError(
            f'The model has {len(model.deltas)} sites but the schedule '
            f'acts on {schedule.size}')


def active_couplings(
    model: EffectiveIsingModel, include_nonlocal: bool,
) -> List[Tuple[Edge, float]]:
    """Get the couplings that act, nearest neighbours only unless asked."""
    return [
        ((i, j), g) for i, j, g in model.pairs()
        if include_nonlocal or model.distance(i, j) <= 1]


def dominant_partners(
    phase_map: PhaseMap,
    site: int,
    exclude: Iterable[Edge] = (),
    floor: float = 1e-14,
) -> List[Tuple[int, float]]:
    """
    List the partners of a site whose phase was not cancelled.

    :param phase_map: The accumulated phases
    :param site: The site
    :param exclude: Pairs to leave out, usually the intended gates
    :param floor: Angles below this are treated as cancelled
    :returns: (partner, theta) pairs, strongest first
    """
    skipped = {_edge(*e) for e in exclude}
    partners = [
        (j if i == site else i, theta)
        for (i, j), theta in phase_map.pairs.items()
        if site in (i, j) and (i, j) not in skipped and abs(theta) > floor]
    return sorted(partners, key=lambda item: (-abs(item[1]), item[0]))
