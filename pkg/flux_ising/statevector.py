# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""
Exact statevector evolution of schedules under the effective Ising model.

Bit l of a basis index is site l, and z_l = 1 - 2 * bit_l is the Z
eigenvalue of that site.
"""

from collections import namedtuple
import math
from typing import Dict
from typing import List
from typing import Sequence

from colcon_core.logging import colcon_logger
from flux_ising.coupling import EffectiveIsingModel
from flux_ising.scheduler import active_couplings
from flux_ising.scheduler import check_model_size
from flux_ising.scheduler import GraphStateTarget
from flux_ising.scheduler import PhaseMap
from flux_ising.scheduler import Schedule
import numpy as np
from scipy import optimize

logger = colcon_logger.getChild(__name__)

"""Largest number of sites held as a statevector"""
MAX_SITES = 20

"""Purity below which a site counts as entangled"""
PRODUCT_TOLERANCE = 1e-9

ClusterFidelity = namedtuple(
    'ClusterFidelity', ('raw', 'corrected', 'stabilizers', 'frame'))


class SimulationError(RuntimeError):
    """The requested simulation cannot be carried out."""


class QuantumStateVector:
    """Amplitudes of N sites over the 2^N computational basis."""

    def __init__(self, amplitudes: np.ndarray):
        """
        Initialize a new instance of a QuantumStateVector.

        :param amplitudes: The 2^N amplitudes
        """
        amplitudes = np.asarray(amplitudes, dtype=complex)
        size = int(round(math.log2(len(amplitudes)))) if len(amplitudes) \
            else -1
        if size < 0 or 2 ** size != len(amplitudes):
            raise SimulationError(
                f'{len(amplitudes)} amplitudes do not describe qubits')
        self.amplitudes = amplitudes
        self.size = size

    @classmethod
    def zeros(cls, size: int) -> 'QuantumStateVector':
        """Get |0...0> on ``size`` sites."""
        _check_size(size)
        amplitudes = np.zeros(2 ** size, dtype=complex)
        amplitudes[0] = 1
        return cls(amplitudes)

    @classmethod
    def plus(cls, size: int) -> 'QuantumStateVector':
        """Get |+...+> on ``size`` sites."""
        _check_size(size)
        return cls(np.full(2 ** size, 2 ** (-size / 2), dtype=complex))

    @property
    def norm(self) -> float:
        """Get the 2-norm of the amplitudes."""
        return float(np.linalg.norm(self.amplitudes))

    def z_values(self, site: int) -> np.ndarray:
        """Get z_site = +/-1 for every basis index."""
        return 1 - 2 * ((np.arange(len(self.amplitudes)) >> site) & 1)

    def flip(self, sites) -> None:
        """Apply X to every site in ``sites``."""
        mask = sum(1 << s for s in sites)
        if mask:
            index = np.arange(len(self.amplitudes))
            self.amplitudes = self.amplitudes[index ^ mask]

    def apply_phases(self, energies: np.ndarray, time: float) -> None:
        """Evolve under a diagonal Hamiltonian (GHz) for ``time`` ns."""
        if time:
            self.amplitudes = self.amplitudes * np.exp(
                -2j * math.pi * energies * time)

    def reset(self, site: int) -> None:
        """
        Prepare a site in |+>.

        :raises SimulationError: If the site is entangled with the others
        """
        tensor: np.ndarray = np.moveaxis(
            self.amplitudes.reshape((2,) * self.size),
            self.size - 1 - site, 0).reshape(2, -1)
        reduced = tensor @ tensor.conj().T
        purity = float(np.real(np.trace(reduced @ reduced)))
        trace = float(np.real(np.trace(reduced)))
        if abs(purity - trace ** 2) > PRODUCT_TOLERANCE:
            raise SimulationError(
                f'Cannot initialize site {site}: it is entangled')
        _, vectors = np.linalg.eigh(reduced)
        local = vectors[:, -1]
        rest = local.conj() @ tensor
        plus = np.array([1, 1]) / math.sqrt(2)
        tensor = np.outer(plus, rest).reshape(
            (2,) + (2,) * (self.size - 1))
        self.amplitudes = np.moveaxis(
            tensor, 0, self.size - 1 - site).reshape(-1)

    def overlap(self, other: 'QuantumStateVector') -> complex:
        """Get <other|self>."""
        return complex(np.vdot(other.amplitudes, self.amplitudes))


def _check_size(size: int) -> None:
    if not 0 < size <= MAX_SITES:
        raise SimulationError(
            f'Cannot hold a statevector of {size} sites (limit {MAX_SITES})')


def ising_energies(
    model: EffectiveIsingModel,
    powered,
    include_nonlocal: bool,
    z: Sequence[np.ndarray],
) -> np.ndarray:
    """
    Get the diagonal of sum Delta/2 Z + sum g Z Z' for the active pairs.

    A pair is active when both of its sites are powered.
    """
    energies = np.zeros(len(z[0]))
    for site, delta in enumerate(model.deltas):
        if delta:
            energies += delta / 2 * z[site]
    for (i, j), g in active_couplings(model, include_nonlocal):
        if i in powered and j in powered:
            energies += g * z[i] * z[j]
    return energies


def simulate(
    model: EffectiveIsingModel,
    schedule: Schedule,
    include_nonlocal: bool = True,
) -> QuantumStateVector:
    """
    Evolve |0...0> exactly through a schedule.

    :param model: The effective Ising model
    :param schedule: The schedule
    :param include_nonlocal: Whether couplings beyond nearest neighbours
      act
    :raises SimulationError: If the schedule has too many sites
    """
    check_model_size(model, schedule)
    state = QuantumStateVector.zeros(schedule.size)
    z = [state.z_values(site) for site in range(schedule.size)]

    for step in schedule.steps:
        for site in sorted(step.init):
            state.reset(site)
        energies = ising_energies(
            model, step.powered, include_nonlocal, z)
        elapsed = 0.0
        for pulse in sorted(step.pulses, key=lambda p: p.at):
            state.apply_phases(energies, pulse.at - elapsed)
            state.flip(pulse.sites)
            elapsed = pulse.at
        state.apply_phases(energies, step.duration - elapsed)

    if abs(state.norm - 1) > 1e-10:
        raise SimulationError(f'Norm drifted to {state.norm}')
    return state


def apply_phase_map(phase_map: PhaseMap) -> QuantumStateVector:
    """Build X^flips exp(-i phases) |+...+> from an accumulated map."""
    state = QuantumStateVector.plus(phase_map.size)
    z = [state.z_values(site) for site in range(phase_map.size)]
    exponent = np.zeros(len(state.amplitudes))
    for site, phi in phase_map.singles.items():
        exponent += phi / 2 * z[site]
    for (i, j), theta in phase_map.pairs.items():
        exponent += theta / 4 * z[i] * z[j]
    state.amplitudes = state.amplitudes * np.exp(-1j * exponent)
    state.flip(phase_map.flips)
    return state


def graph_state(target: GraphStateTarget) -> QuantumStateVector:
    """Get prod CZ |+...+> over the target edges."""
    state = QuantumStateVector.plus(target.vertices)
    index = np.arange(len(state.amplitudes))
    parity = np.zeros(len(index), dtype=np.int64)
    for i, j in target.edges:
        parity ^= ((index >> i) & (index >> j)) & 1
    state.amplitudes = state.amplitudes * (1 - 2 * parity)
    return state


def stabilizer_expectations(
    state: QuantumStateVector, target: GraphStateTarget,
) -> Dict[int, float]:
    """Get <X_v prod_{u in N(v)} Z_u> for every vertex v."""
    _check_dimension(state, target)
    index = np.arange(len(state.amplitudes))
    graph = target.to_graph()
    result = {}
    for vertex in range(target.vertices):
        signs = np.ones(len(index))
        for u in graph.neighbors(vertex):
            signs = signs * state.z_values(u)
        flipped = state.amplitudes[index ^ (1 << vertex)]
        result[vertex] = float(np.real(
            np.vdot(state.amplitudes, signs * flipped)))
    return result


def _check_dimension(
    state: QuantumStateVector, target: GraphStateTarget,
) -> None:
    if state.size != target.vertices:
        raise SimulationError(
            f'A state of {state.size} sites cannot be compared to a graph '
            f'of {target.vertices} vertices')


def _rotated(state: QuantumStateVector, frame: np.ndarray) -> np.ndarray:
    exponent = np.zeros(len(state.amplitudes))
    for site, phi in enumerate(frame):
        exponent += phi / 2 * state.z_values(site)
    return state.amplitudes * np.exp(-1j * exponent)


def estimate_local_frame(
    state: QuantumStateVector, ideal: QuantumStateVector,
) -> np.ndarray:
    """
    Estimate the local Z rotation angle of every site.

    With r = psi / ideal, flipping site l from z = +1 to z = -1 multiplies
    r by exp(-i phi_l) when psi differs from ideal by local Z rotations.
    """
    ratio = state.amplitudes / ideal.amplitudes
    index = np.arange(len(ratio))
    frame = np.zeros(state.size)
    for site in range(state.size):
        lower = index[((index >> site) & 1) == 0]
        correlation = np.vdot(ratio[lower], ratio[lower | (1 << site)])
        frame[site] = -np.angle(correlation)
    return frame


def cluster_fidelity(
    state: QuantumStateVector, target: GraphStateTarget,
) -> ClusterFidelity:
    """
    Compare a state with the graph state of a target.

    The raw fidelity is |<G|psi>|^2. The corrected fidelity first removes
    the local Z rotations that maximize the overlap; stabilizers are
    evaluated on the corrected state.

    :returns: The raw and corrected fidelities, the stabilizer
      expectations and the removed rotation angles
    """
    _check_dimension(state, target)
    ideal = graph_state(target)
    raw = abs(state.overlap(ideal)) ** 2

    def _infidelity(frame: np.ndarray) -> float:
        return 1 - abs(np.vdot(ideal.amplitudes, _rotated(state, frame))) \
            ** 2

    frame = estimate_local_frame(state, ideal)
    if _infidelity(frame) > 1e-12:
        result = optimize.minimize(
            _infidelity, frame, method='BFGS', options={'gtol': 1e-12})
        if result.fun < _infidelity(frame):
            frame = result.x
    corrected = 1 - _infidelity(frame)
    if raw >= corrected:
        frame = np.zeros(state.size)
        corrected = raw

    rotated = QuantumStateVector(_rotated(state, frame))
    stabilizers = stabilizer_expectations(rotated, target)
    logger.debug(
        f'Cluster fidelity {raw:.12f} raw, {corrected:.12f} corrected')
    return ClusterFidelity(raw, corrected, stabilizers, frame.tolist())


def site_infidelities(fidelity: ClusterFidelity) -> List[float]:
    """Get (1 - <K_v>) / 2 per vertex after the local frame correction."""
    return [
        (1 - fidelity.stabilizers[v]) / 2
        for v in sorted(fidelity.stabilizers)]
