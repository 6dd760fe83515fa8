# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""Qubit-level quantities derived from the charge-basis spectrum."""

from collections import namedtuple
from dataclasses import dataclass
from dataclasses import replace
import math
from typing import Callable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

from colcon_core.logging import colcon_logger
from flux_ising.circuit import build_hamiltonian
from flux_ising.circuit import ChargeBasis
from flux_ising.circuit import DEFAULT_CUTOFF
from flux_ising.circuit import eigensystem
from flux_ising.circuit import flux_derivative
from flux_ising.circuit import FluxQubitSpec
from flux_ising.output import parallel_map
from flux_ising.units import DomainError
import numpy as np

logger = colcon_logger.getChild(__name__)

"""Flux optimal point"""
OPTIMAL_FLUX = 0.5

"""Largest |f - 0.5| for which the two-level reduction is claimed"""
TWO_LEVEL_WINDOW = 0.02

"""Relative disagreement tolerated between the step and step/2 slopes"""
RICHARDSON_TOLERANCE = 0.05

SWEEP_AXES = ('alpha', 'flux', 'voltage')

TwoLevelParams = namedtuple('TwoLevelParams', ('delta', 'epsilon', 'e01'))

SlopeEstimate = namedtuple(
    'SlopeEstimate', ('value', 'extrapolated', 'step', 'warning'))

SweepRow = namedtuple(
    'SweepRow', ('value', 'e01', 'e12', 'delta', 'epsilon', 'error'))


@dataclass(frozen=True)
class QubitSpectrum:
    """The lowest levels of one qubit."""

    spec: FluxQubitSpec
    cutoff: int
    energies: np.ndarray
    states: np.ndarray

    @property
    def e01(self) -> float:
        """Get the qubit transition energy E1 - E0."""
        return float(self.energies[1] - self.energies[0])

    @property
    def e12(self) -> float:
        """Get the next transition energy E2 - E1."""
        return float(self.energies[2] - self.energies[1])


def solve_spectrum(
    spec: FluxQubitSpec,
    cutoff: int = DEFAULT_CUTOFF,
    levels: int = 3,
    *,
    charging_energies: Optional[np.ndarray] = None,
) -> QubitSpectrum:
    """
    Solve for the lowest ``levels`` states of a qubit.

    :raises ValueError: If fewer than three levels are requested
    """
    if levels < 3:
        raise ValueError(f'A spectrum needs at least 3 levels, got {levels}')
    pairs = eigensystem(
        spec, cutoff, levels, charging_energies=charging_energies)
    return QubitSpectrum(spec, cutoff, pairs.energies, pairs.vectors)


def energy_gaps(
    spec: FluxQubitSpec,
    cutoff: int = DEFAULT_CUTOFF,
    *,
    charging_energies: Optional[np.ndarray] = None,
) -> Tuple[float, float]:
    """Get (E01, E12) in GHz."""
    spectrum = solve_spectrum(
        spec, cutoff, charging_energies=charging_energies)
    return spectrum.e01, spectrum.e12


def persistent_current_frame(
    spec: FluxQubitSpec,
    cutoff: int = DEFAULT_CUTOFF,
    *,
    charging_energies: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Get the |L>, |R> states fixed at the optimal point.

    The ground and first excited states at f = 0.5 (same gate charge)
    are phased so that <g|dH/df|e> is real and positive, then
    |L> = (|g> + |e>)/sqrt(2) and |R> = (|e> - |g>)/sqrt(2).
    """
    reference = replace(spec, flux=OPTIMAL_FLUX)
    pairs = eigensystem(
        reference, cutoff, 2, charging_energies=charging_energies)
    ground = pairs.vectors[:, 0]
    excited = pairs.vectors[:, 1]

    derivative = flux_derivative(reference, ChargeBasis(cutoff))
    element = np.vdot(ground, derivative @ excited)
    if abs(element) > 0:
        excited = excited * (np.conj(element) / abs(element))
    else:
        logger.warning(
            'The flux derivative does not connect the two lowest states; '
            'the |L>, |R> phase is left unfixed')

    left = (ground + excited) / math.sqrt(2)
    right = (excited - ground) / math.sqrt(2)
    return left, right


def two_level_params(
    spec: FluxQubitSpec,
    cutoff: int = DEFAULT_CUTOFF,
    *,
    charging_energies: Optional[np.ndarray] = None,
) -> TwoLevelParams:
    """
    Reduce the qubit at flux f to a two-level system.

    epsilon = <R|H(f)|R> - <L|H(f)|L> and Delta = 2 |<L|H(f)|R>| in the
    frame of :func:`persistent_current_frame`.

    :raises DomainError: If |f - 0.5| exceeds the validity window
    """
    offset = spec.reduced_flux - OPTIMAL_FLUX
    if abs(offset) > TWO_LEVEL_WINDOW + 1e-12:
        raise DomainError(
            f'Flux {spec.flux} is outside the two-level window '
            f'|f - 0.5| <= {TWO_LEVEL_WINDOW}')

    left, right = persistent_current_frame(
        spec, cutoff, charging_energies=charging_energies)
    hamiltonian = build_hamiltonian(
        spec, ChargeBasis(cutoff), charging_energies=charging_energies)
    h_left = hamiltonian @ left
    h_right = hamiltonian @ right
    epsilon = float(np.vdot(right, h_right).real - np.vdot(left, h_left).real)
    delta = float(2 * abs(np.vdot(left, h_right)))

    e01, _ = energy_gaps(spec, cutoff, charging_energies=charging_energies)
    return TwoLevelParams(delta, epsilon, e01)


def central_difference(
    func: Callable[[float], float], x: float, step: float,
) -> float:
    """Get the central difference (f(x+h) - f(x-h)) / 2h."""
    if not step > 0:
        raise DomainError(f'Step must be positive, got {step!r}')
    return (func(x + step) - func(x - step)) / (2 * step)


def dE01_dVe(  # noqa: N802
    spec: FluxQubitSpec,
    step: float,
    cutoff: int = DEFAULT_CUTOFF,
    *,
    charging_energies: Optional[np.ndarray] = None,
) -> SlopeEstimate:
    """
    Estimate dE01/dVe in GHz/uV by central differences.

    The slope is also taken with half the step. When the two disagree by
    more than 5% the estimate carries a warning. ``extrapolated`` is the
    Richardson combination of both.
    """
    def _e01(voltage: float) -> float:
        return energy_gaps(
            replace(spec, voltage=voltage), cutoff,
            charging_energies=charging_energies)[0]

    coarse = central_difference(_e01, spec.voltage, step)
    fine = central_difference(_e01, spec.voltage, step / 2)
    extrapolated = (4 * fine - coarse) / 3

    warning = None
    if abs(coarse - fine) > RICHARDSON_TOLERANCE * abs(fine):
        warning = (
            f'dE01/dVe at Ve={spec.voltage} uV changes from {coarse:.4g} '
            f'to {fine:.4g} GHz/uV when halving the step')
        logger.warning(warning)
    return SlopeEstimate(coarse, extrapolated, step, warning)


def _with_axis(template: FluxQubitSpec, axis: str, value: float):
    if axis not in SWEEP_AXES:
        raise ValueError(
            f"Unknown sweep axis '{axis}', expected one of {SWEEP_AXES}")
    return replace(template, **{axis: value})


def _sweep_point(
    template: FluxQubitSpec, axis: str, value: float, cutoff: int,
) -> SweepRow:
    try:
        spec = _with_axis(template, axis, value)
        e01, e12 = energy_gaps(spec, cutoff)
        delta = epsilon = math.nan
        if abs(spec.reduced_flux - OPTIMAL_FLUX) <= TWO_LEVEL_WINDOW + 1e-12:
            params = two_level_params(spec, cutoff)
            delta, epsilon = params.delta, params.epsilon
        else:
            logger.debug(
                f'Skipping the two-level reduction at f={spec.flux}')
    except (RuntimeError, ValueError) as e:
        logger.error(f'Sweep point {axis}={value} failed: {e}')
        return SweepRow(
            value, math.nan, math.nan, math.nan, math.nan, str(e))
    logger.debug(
        f'{axis}={value}: E01={e01:.6g} GHz, E12={e12:.6g} GHz')
    return SweepRow(value, e01, e12, delta, epsilon, None)


def sweep(
    template: FluxQubitSpec,
    axis: str,
    grid: Sequence[float],
    *,
    cutoff: int = DEFAULT_CUTOFF,
    threads: int = 1,
) -> List[SweepRow]:
    """
    Evaluate the spectrum along one parameter axis.

    :param template: The qubit whose ``axis`` field is varied
    :param axis: One of 'alpha', 'flux' or 'voltage'
    :param grid: The axis values
    :param cutoff: The charge cutoff
    :param threads: Number of points evaluated concurrently
    :returns: One row per grid point, in grid order. A failed point has
      NaN values and its error message.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(
            f"Unknown sweep axis '{axis}', expected one of {SWEEP_AXES}")
    if not len(grid):
        raise ValueError('empty grid')
    logger.info(f'Solving {len(grid)} spectra along {axis}')
    return parallel_map(
        lambda value: _sweep_point(template, axis, value, cutoff),
        grid, threads)
