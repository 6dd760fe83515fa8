# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""
Physical constants and the unit conventions shared by every module.

Energies are frequencies in GHz (h = 1), times are in ns, capacitances in
fF, voltages in uV and magnetic flux in units of the flux quantum. With
these units a state of energy E (GHz) accumulates 2*pi*E*t radians of
phase over t ns.
"""

from collections import namedtuple
import math

import numpy as np
from scipy import constants

# CODATA 2018, as shipped by scipy
ELEMENTARY_CHARGE = constants.e
PLANCK = constants.h
FLUX_QUANTUM = PLANCK / (2 * ELEMENTARY_CHARGE)

FEMTO = 1e-15
MICRO = 1e-6
GIGA = 1e9


UnitConventions = namedtuple(
    'UnitConventions', (
        'energy_unit', 'time_unit', 'capacitance_unit', 'voltage_unit',
        'flux_unit'))

CONVENTIONS = UnitConventions(
    energy_unit='GHz',
    time_unit='ns',
    capacitance_unit='fF',
    voltage_unit='uV',
    flux_unit='Phi0')


class DomainError(ValueError):
    """A physical quantity is outside the domain of a conversion."""


def phase(energy: float, time: float) -> float:
    """Phase in radians accumulated by ``energy`` (GHz) over ``time`` (ns)."""
    return 2 * math.pi * energy * time


def ghz_to_joules(energy: float) -> float:
    """Convert a frequency-unit energy (GHz) to joules."""
    return energy * GIGA * PLANCK


def joules_to_ghz(energy: float) -> float:
    """Convert an energy in joules to GHz."""
    return energy / (GIGA * PLANCK)


def charging_energy(capacitance: float) -> float:
    """
    Get the charging energy e^2/2C of a capacitance.

    :param capacitance: Capacitance in fF
    :returns: The charging energy in GHz
    """
    if not capacitance > 0:
        raise DomainError(
            f'Capacitance must be positive, got {capacitance!r} fF')
    return joules_to_ghz(
        ELEMENTARY_CHARGE ** 2 / (2 * capacitance * FEMTO))


def capacitance_from_charging_energy(energy: float) -> float:
    """
    Invert :func:`charging_energy`.

    :param energy: Charging energy in GHz
    :returns: The capacitance in fF
    """
    if not energy > 0:
        raise DomainError(
            f'Charging energy must be positive, got {energy!r} GHz')
    return ELEMENTARY_CHARGE ** 2 / (2 * ghz_to_joules(energy)) / FEMTO


def charging_energy_matrix(capacitance: np.ndarray) -> np.ndarray:
    """
    Get the charging energy matrix (e^2/2) C^-1 of a capacitance matrix.

    The inverse is a direct dense solve. Off-diagonal entries are the
    cross charging energies coupling two node charges.

    :param capacitance: Symmetric capacitance matrix in fF
    :returns: The charging energy matrix in GHz
    """
    capacitance = np.asarray(capacitance, dtype=float)
    identity = np.eye(capacitance.shape[0])
    inverse = np.linalg.solve(capacitance, identity)
    inverse = (inverse + inverse.T) / 2
    return joules_to_ghz(ELEMENTARY_CHARGE ** 2 / 2 / FEMTO) * inverse


def offset_charge(gate_capacitance: float, voltage: float) -> float:
    """
    Get the offset charge n_g = Cg Ve / 2e in units of Cooper pairs.

    :param gate_capacitance: Gate capacitance in fF
    :param voltage: Gate voltage in uV
    """
    return (gate_capacitance * FEMTO) * (voltage * MICRO) / \
        (2 * ELEMENTARY_CHARGE)


def voltage_from_offset_charge(
    gate_capacitance: float, charge: float,
) -> float:
    """
    Invert :func:`offset_charge` for the gate voltage in uV.

    :param gate_capacitance: Gate capacitance in fF
    :param charge: Offset charge in units of Cooper pairs
    """
    if not gate_capacitance > 0:
        raise DomainError(
            'Gate capacitance must be positive to invert the offset charge')
    return charge * 2 * ELEMENTARY_CHARGE / (gate_capacitance * FEMTO) / MICRO
