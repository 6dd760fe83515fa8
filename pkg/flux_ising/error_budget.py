# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""
Local and correlated error estimates of the controlled-phase gate.

With energies in GHz and times in ns, a coupling g completes a CZ in
t_cp = 1/(8g) and a voltage slope s with fluctuation dv dephases in
T2 = 1/(2 pi s dv).
"""

from collections import namedtuple
from dataclasses import dataclass
from dataclasses import replace
import math
from typing import Callable
from typing import Dict
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Union

from colcon_core.logging import colcon_logger
from flux_ising.circuit import DEFAULT_CUTOFF
from flux_ising.circuit import FluxQubitSpec
from flux_ising.coupling import chain_couplings
from flux_ising.coupling import CouplerGraph
from flux_ising.coupling import full_inverse_capacitance
from flux_ising.coupling import pair_coupling_g
from flux_ising.coupling import PRUNE_THRESHOLD
from flux_ising.coupling import site_charging_energies
from flux_ising.output import parallel_map
from flux_ising.spectrum import dE01_dVe
from flux_ising.units import DomainError
import numpy as np

logger = colcon_logger.getChild(__name__)

"""Local error threshold of the surface code"""
LOCAL_THRESHOLD = 1e-3

"""Correlated error budget"""
CORRELATED_THRESHOLD = 1e-4

"""Ratio t_cp / T2 above which the dephasing estimate is flagged"""
DEPHASING_REGIME = 0.1

"""Finite-difference step for dE01/dVe in uV"""
DEFAULT_SLOPE_STEP = 10.0

"""Fraction of the strongest coupling below which a curve point is off"""
VANISHING_COUPLING = 1e-6

"""Largest timing error, reached at a half period of the |ee> phase"""
MAX_TIMING_ERROR = 0.75

Multiplicity = Union[Callable[[int], float], Mapping[int, float]]

Dephasing = namedtuple('Dephasing', ('epsilon', 'gate_time', 't2'))

LocalErrorRow = namedtuple(
    'LocalErrorRow', (
        'voltage', 'g', 'slope', 'eps_d', 'eps_tim', 'eps_loc', 'in_regime',
        'error'))

CorrelatedErrorRow = namedtuple(
    'CorrelatedErrorRow', ('capacitance', 'ratio', 'eps_non', 'error'))

TotalErrorRow = namedtuple(
    'TotalErrorRow', ('voltage', 'eps_loc', 'eps_non', 'total'))

NoiseBudget = namedtuple(
    'NoiseBudget', ('dt', 'dt_voltage', 'dv', 'dv_voltage'))


@dataclass(frozen=True)
class NoiseParams:
    """Voltage fluctuation width dv (uV) and timing jitter dt (ns)."""

    dv: float = 0.21
    dt: float = 0.05

    def __post_init__(self):  # noqa: D105
        if self.dv < 0 or self.dt < 0:
            raise DomainError(
                f'Noise parameters must be non-negative, got dv={self.dv!r}, '
                f'dt={self.dt!r}')


@dataclass(frozen=True)
class ErrorBreakdown:
    """The error contributions at one operating point."""

    eps_d: float
    eps_tim: float
    gate_time: float
    t2: float
    eps_non: float = 0.0

    @property
    def eps_loc(self) -> float:
        """Get the local error eps_d + eps_tim."""
        return self.eps_d + self.eps_tim

    @property
    def in_regime(self) -> bool:
        """Check the small-error assumptions behind the estimate."""
        values = (self.eps_d, self.eps_tim, self.eps_loc, self.eps_non)
        if not all(0 <= v <= 1 for v in values):
            return False
        return self.gate_time <= DEPHASING_REGIME * self.t2


def gate_time(g: float) -> float:
    """Get the CZ gate time 1/(8g) in ns of a coupling g in GHz."""
    if not g > 0:
        raise DomainError(f'Coupling must be positive, got {g!r} GHz')
    return 1 / (8 * g)


def dephasing_error(g: float, slope: float, dv: float) -> Dephasing:
    """
    Get the dephasing error t_cp / T2.

    :param g: Coupling in GHz
    :param slope: dE01/dVe in GHz/uV
    :param dv: Voltage fluctuation width in uV
    :returns: The error, the gate time and T2 (ns, infinite without noise)
    """
    t_cp = gate_time(g)
    if dv < 0:
        raise DomainError(f'dv must be non-negative, got {dv!r}')
    rate = 2 * math.pi * abs(slope) * dv
    if rate == 0:
        return Dephasing(0.0, t_cp, math.inf)
    t2 = 1 / rate
    if t_cp > DEPHASING_REGIME * t2:
        logger.warning(
            f'Gate time {t_cp:.4g} ns is not small against T2 = '
            f'{t2:.4g} ns')
    return Dephasing(t_cp / t2, t_cp, t2)


def timing_error(g: float, dt: float) -> float:
    """
    Get 1 - |<++|U(t)^+ U(t + dt)|++>|^2 for the CZ evolution.

    The evolution only phases |ee>, by 8 pi g t, so the result is
    (3/8)(1 - cos(8 pi g dt)), even in dt.
    """
    if g < 0:
        raise DomainError(f'Coupling must be non-negative, got {g!r} GHz')
    return 0.375 * (1 - math.cos(8 * math.pi * g * dt))


def cz_evolution(g: float, time: float) -> np.ndarray:
    """Get the two-qubit unitary diag(1, 1, 1, exp(-i 8 pi g t))."""
    return np.diag([1, 1, 1, np.exp(-8j * math.pi * g * time)])


def timing_error_from_unitaries(g: float, time: float, dt: float) -> float:
    """Evaluate the timing error by overlapping the 4x4 evolutions."""
    plus = np.full(4, 0.5)
    overlap = plus @ cz_evolution(g, time).conj().T @ \
        cz_evolution(g, time + dt) @ plus
    return float(1 - abs(overlap) ** 2)


def local_error(g: float, slope: float, noise: NoiseParams) -> ErrorBreakdown:
    """
    Get the local error budget of one gate.

    The sign of g only fixes the sign of the gate phase, so the budget
    is evaluated on |g|. A vanishing coupling has no gate time.
    """
    dephasing = dephasing_error(abs(g), slope, noise.dv)
    return ErrorBreakdown(
        dephasing.epsilon, timing_error(abs(g), noise.dt),
        dephasing.gate_time, dephasing.t2)


LocalErrorCurve = namedtuple(
    'LocalErrorCurve',
    ('rows', 'argmin', 'minimum', 'interior', 'below_threshold'))


def local_error_curve(
    capacitance: float,
    voltages: Sequence[float],
    noise: NoiseParams,
    template: FluxQubitSpec,
    *,
    cutoff: int = DEFAULT_CUTOFF,
    step: float = DEFAULT_SLOPE_STEP,
    threshold: float = LOCAL_THRESHOLD,
    threads: int = 1,
) -> LocalErrorCurve:
    """
    Evaluate the local error of a powered pair along a voltage grid.

    Both qubits sit at the same voltage. A failed point keeps its row
    with NaN errors and the message. A point whose |g| is below
    :data:`VANISHING_COUPLING` of the strongest coupling on the grid, or
    below the absolute pruning floor, has no gate and fails.

    :returns: The rows, and the location and value of the minimum
    """
    if not len(voltages):
        raise ValueError('empty grid')
    graph = CouplerGraph([template, template], [(0, 1, capacitance)])
    dressed = site_charging_energies(full_inverse_capacitance(graph), 0)

    def _coupling(voltage: float):
        try:
            g = pair_coupling_g(
                template, template, capacitance, voltage, voltage,
                cutoff=cutoff).g
            slope = dE01_dVe(
                replace(template, voltage=voltage), step, cutoff,
                charging_energies=dressed).value
        except (RuntimeError, ValueError) as e:
            return e
        return g, slope

    logger.info(
        f'Evaluating the local error at {len(voltages)} voltages '
        f'(Cc={capacitance} fF)')
    results = parallel_map(_coupling, voltages, threads)
    strongest = max(
        (abs(r[0]) for r in results if not isinstance(r, Exception)),
        default=0.0)
    floor = max(PRUNE_THRESHOLD, VANISHING_COUPLING * strongest)

    rows: List[LocalErrorRow] = []
    for voltage, result in zip(voltages, results):
        if isinstance(result, Exception):
            rows.append(_failed_row(voltage, str(result)))
            continue
        g, slope = result
        if abs(g) < floor:
            rows.append(_failed_row(
                voltage,
                f'The coupling is switched off (|g| = {abs(g):.3g} GHz)',
                g, slope))
            continue
        try:
            budget = local_error(g, slope, noise)
        except (RuntimeError, ValueError) as e:
            rows.append(_failed_row(voltage, str(e), g, slope))
            continue
        if not budget.in_regime:
            logger.warning(
                f'Local error at Ve={voltage} uV is outside the small-error '
                'regime')
        rows.append(LocalErrorRow(
            voltage, g, slope, budget.eps_d, budget.eps_tim, budget.eps_loc,
            budget.in_regime, None))

    valid = [idx for idx, row in enumerate(rows) if row.error is None]
    if not valid:
        return LocalErrorCurve(rows, None, None, False, False)
    best = min(valid, key=lambda idx: rows[idx].eps_loc)
    minimum = rows[best].eps_loc
    return LocalErrorCurve(
        rows, rows[best].voltage, minimum,
        valid[0] < best < valid[-1], minimum < threshold)


def _failed_row(
    voltage: float, message: str, g: float = math.nan,
    slope: float = math.nan,
) -> LocalErrorRow:
    logger.error(f'Local error at Ve={voltage} uV failed: {message}')
    nan = math.nan
    return LocalErrorRow(voltage, g, slope, nan, nan, nan, False, message)


def tolerable_jitter(
    g: float, eps_d: float, threshold: float = LOCAL_THRESHOLD,
) -> Optional[float]:
    """
    Get the timing jitter at which eps_d + eps_tim reaches a threshold.

    :param g: Coupling in GHz
    :param eps_d: The dephasing error, which does not depend on the jitter
    :param threshold: The local error budget
    :returns: dt in ns, infinite when no jitter exhausts the budget, or
      None when dephasing alone exceeds it
    :raises DomainError: If g vanishes
    """
    gate_time(abs(g))
    remaining = threshold - eps_d
    if remaining <= 0:
        return None
    if remaining >= MAX_TIMING_ERROR:
        return math.inf
    return math.acos(1 - remaining / 0.375) / (8 * math.pi * abs(g))


def tolerable_voltage_noise(
    eps_d: float, dv: float, eps_tim: float,
    threshold: float = LOCAL_THRESHOLD,
) -> Optional[float]:
    """
    Get the voltage fluctuation at which eps_d + eps_tim reaches a threshold.

    eps_d is linear in dv, so it rescales from the value at ``dv``.

    :returns: dv in uV, infinite without dephasing, or None when the
      timing error alone exceeds the budget
    """
    remaining = threshold - eps_tim
    if remaining <= 0:
        return None
    if eps_d == 0:
        return math.inf
    return dv * remaining / eps_d


def noise_budget(
    curve: LocalErrorCurve,
    noise: NoiseParams,
    threshold: float = LOCAL_THRESHOLD,
) -> NoiseBudget:
    """
    Find the noise at which a local error curve minimum meets a threshold.

    eps_d does not depend on dt and eps_tim does not depend on dv, so the
    largest tolerable jitter over the valid points is the jitter at which
    the curve minimum crosses the threshold, and likewise for dv with the
    jitter held.

    :returns: Each limit with the voltage it is reached at, None where no
      point of the curve can reach the threshold
    """
    dt: Optional[float] = None
    dv: Optional[float] = None
    dt_voltage = dv_voltage = None
    for row in curve.rows:
        if row.error is not None:
            continue
        jitter = tolerable_jitter(row.g, row.eps_d, threshold)
        if jitter is not None and (dt is None or jitter > dt):
            dt, dt_voltage = jitter, row.voltage
        voltage_noise = tolerable_voltage_noise(
            row.eps_d, noise.dv, row.eps_tim, threshold)
        if voltage_noise is not None and (
                dv is None or voltage_noise > dv):
            dv, dv_voltage = voltage_noise, row.voltage
    return NoiseBudget(dt, dt_voltage, dv, dv_voltage)


def chain_multiplicity(size: int, site: Optional[int] = None):
    """
    Count the chain sites at each distance from ``site``.

    :param size: Number of sites
    :param site: The reference site (default: the middle of the chain)
    :returns: A function of the distance n
    """
    if site is None:
        site = (size - 1) // 2

    def _count(n: int) -> int:
        return sum(
            1 for other in (site - n, site + n) if 0 <= other < size)
    return _count


def grid_multiplicity(size: int, site: Optional[int] = None):
    """
    Count the axis-aligned grid sites at each distance from ``site``.

    Site (r, c) has index r * size + c.

    :param size: Grid side length
    :param site: The reference site (default: the grid centre)
    :returns: A function of the distance n
    """
    if site is None:
        centre = (size - 1) // 2
        site = centre * size + centre
    row, column = divmod(site, size)

    def _count(n: int) -> int:
        return sum(
            1 for r, c in (
                (row - n, column), (row + n, column),
                (row, column - n), (row, column + n))
            if 0 <= r < size and 0 <= c < size)
    return _count


def _multiplicity_function(
    multiplicity: Optional[Multiplicity], size: int,
) -> Callable[[int], float]:
    if multiplicity is None:
        return chain_multiplicity(size)
    if callable(multiplicity):
        return multiplicity
    table = dict(multiplicity)
    return lambda n: table.get(n, 0)


def correlated_error(
    ratio: float,
    p: int,
    size: int,
    multiplicity: Optional[Multiplicity] = None,
) -> float:
    """
    Get the error from couplings to sites at distance p or more.

    eps_non = sum_{n=p}^{floor(N/2)} (pi/4) R^(n-1) m(n)

    :param ratio: The coupling ratio R, 0 <= R < 1
    :param p: Site distance between simultaneously powered pairs, p >= 2
    :param size: Number of sites N
    :param multiplicity: m(n) as a function or a table (default: sites at
      distance n from the middle of an N site chain)
    """
    if not 0 <= ratio < 1:
        raise DomainError(
            f'The correlated error diverges for a coupling ratio of '
            f'{ratio!r}')
    if p < 2:
        raise DomainError(f'Site distance p must be at least 2, got {p!r}')
    count = _multiplicity_function(multiplicity, size)
    return math.fsum(
        math.pi / 4 * ratio ** (n - 1) * count(n)
        for n in range(p, size // 2 + 1))


def echo_bound_1d(ratio: float) -> float:
    """Get (pi/4)(R^4 + 2 R^5), the residual of the echoed 1D procedure."""
    return math.pi / 4 * (ratio ** 4 + 2 * ratio ** 5)


def echo_bound_2d(ratio: float) -> float:
    """Get (pi/4)(R^4 + 4 R^5), the residual of the echoed 2D procedure."""
    return math.pi / 4 * (ratio ** 4 + 4 * ratio ** 5)


def correlated_error_curve(
    capacitances: Sequence[float],
    voltage: float,
    template: FluxQubitSpec,
    size: int,
    ps: Iterable[int],
    *,
    cutoff: int = DEFAULT_CUTOFF,
    threads: int = 1,
) -> List[CorrelatedErrorRow]:
    """
    Evaluate eps_non along a coupling capacitance grid.

    :returns: One row per capacitance holding R and eps_non per p
    """
    if not len(capacitances):
        raise ValueError('empty grid')
    ps = list(ps)

    def _point(capacitance: float) -> CorrelatedErrorRow:
        try:
            ratio = chain_couplings(
                size, capacitance, voltage, template, cutoff=cutoff).ratio
            errors: Dict[int, float] = {
                p: correlated_error(ratio, p, size) for p in ps}
        except (RuntimeError, ValueError) as e:
            logger.error(
                f'Correlated error at Cc={capacitance} fF failed: {e}')
            return CorrelatedErrorRow(
                capacitance, math.nan, {p: math.nan for p in ps}, str(e))
        return CorrelatedErrorRow(capacitance, ratio, errors, None)

    logger.info(
        f'Evaluating the correlated error at {len(capacitances)} '
        'capacitances')
    return parallel_map(_point, capacitances, threads)


def total_error_curve(
    curve: LocalErrorCurve, eps_non: float,
) -> List[TotalErrorRow]:
    """Add a correlated error to every point of a local error curve."""
    return [
        TotalErrorRow(row.voltage, row.eps_loc, eps_non,
                      row.eps_loc + eps_non)
        for row in curve.rows]


def threshold_crossing(
    capacitances: Sequence[float],
    errors: Sequence[float],
    threshold: float = CORRELATED_THRESHOLD,
) -> Optional[float]:
    """
    Find where an increasing error curve first exceeds a threshold.

    The crossing is interpolated linearly in log(error) between the two
    bracketing grid points.

    :returns: The capacitance at the crossing, or None
    """
    points = [
        (c, e) for c, e in zip(capacitances, errors)
        if e is not None and not math.isnan(e)]
    for (c0, e0), (c1, e1) in zip(points, points[1:]):
        if e0 <= threshold < e1:
            if e0 <= 0:
                return c0
            fraction = math.log(threshold / e0) / math.log(e1 / e0)
            return c0 + fraction * (c1 - c0)
    return None


def minimum_spacing(
    ratio: float,
    size: int,
    threshold: float = CORRELATED_THRESHOLD,
    multiplicity: Optional[Multiplicity] = None,
) -> int:
    """Get the smallest p >= 2 whose correlated error meets a threshold."""
    p = 2
    while correlated_error(ratio, p, size, multiplicity) > threshold:
        p += 1
    return p
