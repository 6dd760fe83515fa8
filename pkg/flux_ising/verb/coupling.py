# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

import math
from typing import List
from typing import Optional
from typing import Sequence

from colcon_core.logging import colcon_logger
from colcon_core.plugin_system import satisfies_version
from colcon_core.verb import VerbExtensionPoint
from flux_ising.circuit import FluxQubitSpec
from flux_ising.config import ConfigError
from flux_ising.config import DeviceConfig
from flux_ising.coupling import chain_couplings
from flux_ising.coupling import ChainCouplings
from flux_ising.coupling import decay_deviation
from flux_ising.coupling import effective_model
from flux_ising.coupling import exact_pair_coupling
from flux_ising.coupling import pair_coupling_g
from flux_ising.output import parallel_map
from flux_ising.output import RunManifest
from flux_ising.output import write_csv
from flux_ising.output import write_json
from flux_ising.report import Report
from flux_ising.report import Verdict
from flux_ising.units import offset_charge
from flux_ising.verb import add_common_arguments
from flux_ising.verb import finish
from flux_ising.verb import new_manifest
from flux_ising.verb import OPERATING_VOLTAGE
from flux_ising.verb import prepare
from flux_ising.verb import select_grid

logger = colcon_logger.getChild(__name__)

"""Coupling capacitance in fF when the device does not set one"""
DEFAULT_COUPLING_CAPACITANCE = 0.077

"""Largest tolerated relative gap between projected and exact g"""
ORACLE_TOLERANCE = 0.1

"""Largest tolerated |g(Ve=0)| relative to the strongest coupling"""
SWITCH_OFF_RATIO = 1e-4

"""Lowest gate voltage in uV at which projected and exact g are compared"""
ORACLE_MIN_VOLTAGE = 500.0

"""Island gate charge from which projected and exact g are not compared"""
ORACLE_MAX_GATE_CHARGE = 0.5


def coupling_capacitance(args, config: DeviceConfig) -> float:
    """Pick the coupling capacitance from the command line or device."""
    if args.cc is not None:
        return args.cc
    if config.couplers:
        return config.couplers[0].capacitance
    if config.topology.coupling_capacitance is not None:
        return config.topology.coupling_capacitance
    return DEFAULT_COUPLING_CAPACITANCE


def _pair_mode(args, config, cutoff, manifest, report) -> None:
    capacitance = coupling_capacitance(args, config)
    voltages = select_grid(args.grid, config, 'voltage')
    manifest.grid.update(
        mode='pair', Cc_fF=capacitance, Ve_uV=list(voltages))
    first = config.qubits[0]
    second = config.qubits[1] if len(config.qubits) > 1 else first

    def _point(voltage: float):
        try:
            pair = pair_coupling_g(
                first, second, capacitance, voltage, voltage, cutoff=cutoff)
            exact = exact_pair_coupling(
                first, second, capacitance, voltage, voltage, cutoff=cutoff,
                levels=config.solver.oracle_levels)
        except (RuntimeError, ValueError) as e:
            logger.error(f'Pair coupling at Ve={voltage} uV failed: {e}')
            nan = math.nan
            return [voltage, nan, nan, nan, nan, str(e)]
        return [voltage, pair.g, exact, pair.delta1, pair.delta2, '']

    rows = parallel_map(_point, voltages, args.threads)
    manifest.add_output(write_csv(
        args.out / 'coupling_pair.csv',
        ('Ve_uV', 'g_GHz', 'g_exact_GHz', 'Delta1_GHz', 'Delta2_GHz',
         'error'),
        rows))
    for row in rows:
        manifest.add_status({'Ve_uV': row[0]}, row[5] or None)
        if row[5]:
            report.add_note({'Ve_uV': row[0]}, row[5])

    valid = [row for row in rows if not row[5]]
    strongest = max((abs(row[1]) for row in valid), default=0.0)
    strongest_exact = max((abs(row[2]) for row in valid), default=0.0)
    for row in valid:
        if row[0] != 0 or strongest == 0:
            continue
        ratio = abs(row[1]) / strongest
        report.add_check(
            'Switchability',
            Verdict.from_bound(ratio, SWITCH_OFF_RATIO),
            f'|g(Ve=0)| is {ratio:.3g} of the strongest coupling')
        manifest.grid['residual_zz_GHz'] = row[2]
        if strongest_exact > 0:
            report.add_note(
                {'Ve_uV': row[0]},
                f'Exact diagonalization leaves a residual ZZ of '
                f'{row[2]:.3g} GHz ({100 * abs(row[2]) / strongest_exact:.3g}'
                '% of the strongest exact coupling) from virtual '
                'transitions through higher levels, which the projected g '
                'omits')

    window = [
        row for row in valid
        if in_oracle_window(row[0], (first, second)) and row[2] != 0]
    manifest.grid['oracle_window_Ve_uV'] = [row[0] for row in window]
    if not window:
        report.add_check(
            'Projection against exact diagonalization', Verdict.WARN,
            f'No voltage at or above {ORACLE_MIN_VOLTAGE:g} uV with a gate '
            f'charge below {ORACLE_MAX_GATE_CHARGE:g} to compare')
        return
    worst = max(abs(row[1] - row[2]) / abs(row[2]) for row in window)
    report.add_check(
        'Projection against exact diagonalization',
        Verdict.from_bound(worst, ORACLE_TOLERANCE, warn_factor=2),
        f'g agrees with the {config.solver.oracle_levels}-level oracle '
        f'within {100 * worst:.3g}% at {len(window)} voltages from '
        f'{ORACLE_MIN_VOLTAGE:g} uV up to a gate charge of '
        f'{ORACLE_MAX_GATE_CHARGE:g}')


def in_oracle_window(
    voltage: float, specs: Sequence[FluxQubitSpec],
) -> bool:
    """
    Check whether the projected g is expected to match the exact one.

    Below :data:`ORACLE_MIN_VOLTAGE` the projected g vanishes while the
    residual ZZ does not, and from a gate charge of
    :data:`ORACLE_MAX_GATE_CHARGE` on the island charge states fold back.
    """
    if voltage < ORACLE_MIN_VOLTAGE:
        return False
    return all(
        offset_charge(spec.cg, voltage) < ORACLE_MAX_GATE_CHARGE
        for spec in specs)


def _model_mode(args, config, cutoff, manifest, report) -> None:
    if len(config.qubits) < 2 or not config.couplers:
        raise ConfigError(
            'an effective model needs at least two coupled qubits',
            field='couplers')
    graph = config.to_graph()
    if args.powered is not None:
        for site in args.powered:
            if not 0 <= site < len(graph):
                raise ConfigError(
                    f'qubit {site} does not exist ({len(graph)} qubits)',
                    field='powered')
        voltages = {
            site: args.ve if site in args.powered else 0.0
            for site in range(len(graph))}
        graph = graph.with_voltages(voltages)
    pattern = [spec.voltage for spec in graph.specs]
    manifest.grid.update(mode='model', sites=len(graph), Ve_uV=pattern)

    model = effective_model(graph, cutoff=cutoff, threads=args.threads)
    manifest.add_output(write_json(
        args.out / 'effective_model.json', model.to_dict()))
    manifest.add_status({'sites': len(graph)})

    powered = [
        abs(g) for i, j, g in model.pairs() if pattern[i] and pattern[j]]
    idle = [
        abs(model.coupling(i, j))
        for i in range(len(graph)) for j in range(i + 1, len(graph))
        if not (pattern[i] and pattern[j])]
    if not powered:
        report.add_check(
            'Switchability', Verdict.WARN, 'No pair of powered qubits')
        return
    ratio = max(idle, default=0.0) / max(powered)
    report.add_check(
        'Switchability', Verdict.from_bound(ratio, SWITCH_OFF_RATIO),
        f'Pairs with an unpowered qubit keep at most {ratio:.3g} of the '
        f'strongest powered coupling ({len(model.pairs())} pairs kept)')


def _chain_row(couplings: ChainCouplings) -> List[Optional[float]]:
    try:
        ratio: Optional[float] = couplings.ratio
    except RuntimeError:
        ratio = None
    return [couplings.capacitance, *couplings.g, ratio]


def _chain_mode(args, config, cutoff, manifest, report) -> None:
    size = args.n
    voltage = args.ve
    capacitances = select_grid(args.grid, config, 'coupling')
    manifest.grid.update(
        mode='chain', sites=size, Ve_uV=voltage, Cc_fF=list(capacitances))

    def _point(capacitance: float):
        try:
            return chain_couplings(
                size, capacitance, voltage, config.template, cutoff=cutoff)
        except (RuntimeError, ValueError) as e:
            logger.error(
                f'Chain couplings at Cc={capacitance} fF failed: {e}')
            return e

    results = parallel_map(_point, capacitances, args.threads)
    rows: List[List[Optional[float]]] = []
    for capacitance, result in zip(capacitances, results):
        error = str(result) if isinstance(result, Exception) else None
        manifest.add_status({'Cc_fF': capacitance}, error)
        if error is not None:
            report.add_note({'Cc_fF': capacitance}, error)
            rows.append([capacitance, *([math.nan] * size)])
        else:
            rows.append(_chain_row(result))
    manifest.add_output(write_csv(
        args.out / 'coupling_chain.csv',
        ('Cc_fF', *(f'g{n}' for n in range(1, size)), 'R'),
        rows))

    ratios = [
        (row[0], r) for row in rows for r in row[-1:]
        if r is not None and not math.isnan(r)]
    if len(ratios) > 1:
        increasing = all(b[1] > a[1] for a, b in zip(ratios, ratios[1:]))
        report.add_check(
            'Coupling ratio',
            Verdict.PASS if increasing else Verdict.WARN,
            'R increases with Cc' if increasing
            else 'R does not increase monotonically with Cc')

    for capacitance, result in zip(capacitances, results):
        if isinstance(result, Exception) or size < 5:
            continue
        if abs(capacitance - DEFAULT_COUPLING_CAPACITANCE) > 1e-9:
            continue
        try:
            deviation = decay_deviation(result)
        except RuntimeError as e:
            report.add_note({'Cc_fF': capacitance}, str(e))
            continue
        report.add_check(
            'Exponential decay',
            Verdict.from_bound(deviation, 0.25, warn_factor=2),
            f'|g(n)| follows g(1) R^(n-1) within {100 * deviation:.3g}% '
            f'for n <= 4 at Cc={capacitance} fF')


class CouplingVerb(VerbExtensionPoint):
    """Compute Ising couplings of a powered pair or along a chain."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(VerbExtensionPoint.EXTENSION_POINT_VERSION, '^1.0')

    def add_arguments(self, *, parser):  # noqa: D102
        add_common_arguments(parser)
        parser.add_argument(
            '--mode', choices=('pair', 'chain', 'model'), default='pair',
            help='Sweep the gate voltage of a pair, sweep the coupling '
                 'capacitance of a chain, or export the effective Ising '
                 'model of the configured device (default: pair)')
        parser.add_argument(
            '--grid', type=float, nargs='*', default=None, metavar='VALUE',
            help='Gate voltages in uV (pair) or coupling capacitances in '
                 'fF (chain)')
        parser.add_argument(
            '--cc', type=float, default=None, metavar='FF',
            help='Coupling capacitance of the pair in fF (default: from '
                 f'the configuration, else {DEFAULT_COUPLING_CAPACITANCE})')
        parser.add_argument(
            '--ve', type=float, default=OPERATING_VOLTAGE, metavar='UV',
            help='Gate voltage of every chain site, or of the --powered '
                 f'sites, in uV (default: {OPERATING_VOLTAGE:g})')
        parser.add_argument(
            '--n', type=int, default=6, metavar='N',
            help='Number of chain sites (default: 6)')
        parser.add_argument(
            '--powered', type=int, action='append', default=None,
            metavar='SITE',
            help='With --mode model, hold this qubit at --ve and every '
                 'other one at 0, may repeat (default: the voltages of the '
                 'configuration)')

    def main(self, *, context):  # noqa: D102
        args = context.args
        config, cutoff = prepare(args)
        manifest: RunManifest = new_manifest(
            'coupling', mode=args.mode, cutoff=cutoff)
        report = Report(f'Couplings ({args.mode})')
        if args.mode == 'pair':
            _pair_mode(args, config, cutoff, manifest, report)
        elif args.mode == 'model':
            _model_mode(args, config, cutoff, manifest, report)
        else:
            if args.n < 3:
                raise ConfigError(
                    f'a chain needs at least 3 sites, got {args.n}',
                    field='n')
            _chain_mode(args, config, cutoff, manifest, report)
        return finish(manifest, report, args.out, config)
