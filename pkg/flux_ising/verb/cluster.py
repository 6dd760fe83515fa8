# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from collections import Counter
import json
import math
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Tuple

from colcon_core.logging import colcon_logger
from colcon_core.plugin_system import satisfies_version
from colcon_core.verb import VerbExtensionPoint
from flux_ising.config import ConfigError
from flux_ising.coupling import chain_couplings
from flux_ising.coupling import chain_graph
from flux_ising.coupling import EffectiveIsingModel
from flux_ising.coupling import geometric_model
from flux_ising.coupling import grid_graph
from flux_ising.error_budget import echo_bound_1d
from flux_ising.error_budget import echo_bound_2d
from flux_ising.error_budget import gate_time
from flux_ising.output import write_json
from flux_ising.report import Report
from flux_ising.report import Verdict
from flux_ising.scheduler import build_1d_schedule
from flux_ising.scheduler import build_2d_schedule
from flux_ising.scheduler import dominant_partners
from flux_ising.scheduler import echo_demo_schedule
from flux_ising.scheduler import residual_zz_angles
from flux_ising.statevector import apply_phase_map
from flux_ising.statevector import cluster_fidelity
from flux_ising.statevector import simulate
from flux_ising.statevector import site_infidelities
from flux_ising.verb import add_common_arguments
from flux_ising.verb import finish
from flux_ising.verb import new_manifest
from flux_ising.verb import OPERATING_VOLTAGE
from flux_ising.verb import prepare
from flux_ising.verb.coupling import coupling_capacitance

logger = colcon_logger.getChild(__name__)

"""Distance to an ideal cluster state treated as exact"""
EXACT_TOLERANCE = 1e-9

"""Allowed factor between simulated infidelity and the echo bound"""
BOUND_FACTOR = 5.0

"""Number of chain sites used to measure g and R"""
MEASURED_CHAIN_SITES = 6


def load_model(path: Path) -> EffectiveIsingModel:
    """
    Load an effective model exported by ``coupling --mode model``.

    :raises ConfigError: If the document cannot be read or is malformed
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(
            f'cannot read the model: {e.strerror}', source=str(path)) from e
    try:
        return EffectiveIsingModel.from_dict(json.loads(text))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(
            f'not an effective model document: {e!r}', source=str(path)
        ) from e


def model_couplings(model: EffectiveIsingModel) -> Tuple[float, float]:
    """
    Get the nearest neighbour coupling and the coupling ratio of a model.

    g is the strongest nearest neighbour coupling and R relates the
    strongest coupling two sites apart to it.

    :raises ConfigError: If the model has no nearest neighbour coupling
    """
    nearest = [g for i, j, g in model.pairs() if model.distance(i, j) == 1]
    if not nearest:
        raise ConfigError(
            'the model has no nearest neighbour coupling', field='model')
    g1 = max(nearest, key=abs)
    second = [
        abs(g) for i, j, g in model.pairs() if model.distance(i, j) == 2]
    return g1, max(second, default=0.0) / abs(g1)


def _couplings(args, config, cutoff, model) -> Tuple[float, float]:
    if args.g is not None and args.ratio is not None:
        return args.g, args.ratio
    if model is not None:
        g1, ratio = model_couplings(model)
        return (
            args.g if args.g is not None else g1,
            args.ratio if args.ratio is not None else ratio)
    couplings = chain_couplings(
        MEASURED_CHAIN_SITES, coupling_capacitance(args, config), args.ve,
        config.template, cutoff=cutoff)
    g1 = args.g if args.g is not None else couplings.g[0]
    ratio = args.ratio if args.ratio is not None else couplings.ratio
    return g1, ratio


def _check_schedule(report, schedule, dim, n) -> None:
    gates = schedule.gates()
    repeated = [e for e, count in Counter(gates).items() if count > 1]
    report.add_check(
        'Schedule', Verdict.FAIL if repeated else Verdict.PASS,
        f'Edges {repeated} are powered more than once' if repeated
        else f'{len(gates)} target edges, each powered in exactly one step')
    counts = schedule.gate_counts()
    if dim == '1d':
        if not schedule.metadata.get('echo', True):
            return
        expected = (n - 1) // 3
        verdict = Verdict.PASS if min(counts) >= expected else Verdict.FAIL
        report.add_check(
            'Schedule', verdict,
            f'Parallel gates per step {counts}, at least {expected} '
            'expected')
    else:
        expected = (n - 1) * (n // 4)
        first = sum(counts[:3])
        report.add_check(
            'Schedule', Verdict.PASS if first == expected else Verdict.FAIL,
            f'The first line group holds {first} gates, {expected} '
            'expected')


def _check_phases(report, phase_map, target, nonlocal_: bool, bound: float):
    target_error = max(
        (abs(abs(phase_map.angle(i, j)) - math.pi) for i, j in target.edges),
        default=0.0)
    report.add_check(
        'Phases', Verdict.from_bound(target_error, EXACT_TOLERANCE),
        f'Target pairs accumulate pi within {target_error:.3g} rad')
    stray = max(
        (abs(theta) for edge, theta in phase_map.pairs.items()
         if edge not in target.edges), default=0.0)
    if nonlocal_:
        report.add_check(
            'Phases', Verdict.PASS,
            f'Largest uncancelled non-target angle {stray:.3g} rad; echo '
            f'bound {bound:.3g}')
    else:
        report.add_check(
            'Phases', Verdict.from_bound(stray, EXACT_TOLERANCE),
            f'Non-target pairs cancel within {stray:.3g} rad')


class ClusterVerb(VerbExtensionPoint):
    """Schedule and verify cluster state generation."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(VerbExtensionPoint.EXTENSION_POINT_VERSION, '^1.0')

    def add_arguments(self, *, parser):  # noqa: D102
        add_common_arguments(parser)
        parser.add_argument(
            '--dim', choices=('1d', '2d'), default='1d',
            help='Linear chain or square grid (default: 1d)')
        parser.add_argument(
            '--n', type=int, default=9, metavar='N',
            help='Chain length or grid side (default: 9)')
        parser.add_argument(
            '--p', type=int, default=5, metavar='P',
            help='Minimum spacing of simultaneously powered pairs '
                 '(default: 5)')
        parser.add_argument(
            '--no-echo', action='store_true',
            help='Space the powered pairs p sites apart without pi pulses '
                 '(1d only)')
        parser.add_argument(
            '--echo-demo', action='store_true',
            help='Run the three-site echo demonstration instead')
        parser.add_argument(
            '--simulate', action='store_true',
            help='Evolve the full statevector and compare it with the '
                 'target graph state')
        parser.add_argument(
            '--nonlocal', dest='include_nonlocal', action='store_true',
            help='Keep couplings beyond nearest neighbours')
        parser.add_argument(
            '--cc', type=float, default=None, metavar='FF',
            help='Coupling capacitance used to measure g and R in fF')
        parser.add_argument(
            '--ve', type=float, default=OPERATING_VOLTAGE, metavar='UV',
            help='Operating gate voltage in uV (default: '
                 f'{OPERATING_VOLTAGE:g})')
        parser.add_argument(
            '--g', type=float, default=None, metavar='GHZ',
            help='Nearest neighbour coupling instead of the measured one')
        parser.add_argument(
            '--ratio', type=float, default=None, metavar='R',
            help='Coupling ratio instead of the measured one')
        parser.add_argument(
            '--model', type=Path, default=None, metavar='PATH',
            help='Effective model written by "coupling --mode model" '
                 'instead of g(n) = g R^(n-1) on the lattice')
        parser.add_argument(
            '--report', type=Path, default=None, metavar='PATH',
            help='Where to write the JSON report (default: '
                 'cluster_report.json in --out)')

    def main(self, *, context):  # noqa: D102
        args = context.args
        config, cutoff = prepare(args)
        if args.echo_demo:
            dim, n = '1d', 3
        else:
            dim, n = args.dim, args.n
            minimum = 2 if dim == '1d' else 4
            if n < minimum:
                raise ConfigError(
                    f'a {dim} schedule needs at least {minimum} sites per '
                    f'line, got {n}', field='n')

        loaded = None if args.model is None else load_model(args.model)
        g1, ratio = _couplings(args, config, cutoff, loaded)
        if not g1:
            raise ConfigError(
                'the nearest neighbour coupling vanishes, no gate can be '
                'scheduled', field='g')
        duration = gate_time(abs(g1))
        if loaded is None:
            build = chain_graph if dim == '1d' else grid_graph
            graph = build(
                n, coupling_capacitance(args, config), config.template)
            model = geometric_model(graph, g1, ratio)
        else:
            model = loaded

        if args.echo_demo:
            schedule = echo_demo_schedule(duration)
        elif dim == '1d':
            schedule = build_1d_schedule(
                n, args.ve, args.p, gate_time=duration,
                echo=not args.no_echo)
        else:
            schedule = build_2d_schedule(
                n, args.ve, args.p, gate_time=duration)
        if model.size != schedule.size:
            raise ConfigError(
                f'the model has {model.size} sites but the schedule acts on '
                f'{schedule.size}', field='model')
        target = schedule.target()
        include_nonlocal = args.include_nonlocal or args.echo_demo
        bound = echo_bound_1d(ratio) if dim == '1d' else \
            echo_bound_2d(ratio)

        manifest = new_manifest(
            'cluster', dim=dim, n=n, p=args.p, echo_demo=args.echo_demo,
            nonlocal_couplings=include_nonlocal, simulate=args.simulate,
            g_GHz=g1, R=ratio, cutoff=cutoff,
            model=None if args.model is None else str(args.model))
        report = Report(
            'Echo demonstration' if args.echo_demo
            else f'{dim} cluster state on {schedule.size} sites')

        phase_map = residual_zz_angles(model, schedule, include_nonlocal)
        _check_schedule(report, schedule, dim, n)
        _check_phases(report, phase_map, target, include_nonlocal, bound)

        document: Dict[str, Any] = {
            'target': {
                'vertices': target.vertices, 'edges': sorted(target.edges)},
            'gate_counts': schedule.gate_counts(),
            'g_GHz': g1,
            'R': ratio,
            'echo_bound': bound,
            'phases': phase_map.to_dict(),
            'partners': {
                site: [
                    {'site': other, 'theta_rad': theta}
                    for other, theta in dominant_partners(
                        phase_map, site, target.edges)[:3]]
                for site in range(schedule.size)},
        }

        if args.simulate or args.echo_demo:
            state = simulate(model, schedule, include_nonlocal)
            fidelity = cluster_fidelity(state, target)
            mapped = abs(state.overlap(apply_phase_map(phase_map))) ** 2
            infidelities = site_infidelities(fidelity)
            document['simulation'] = {
                'fidelity': fidelity.raw,
                'corrected_fidelity': fidelity.corrected,
                'phase_map_overlap': mapped,
                'stabilizers': fidelity.stabilizers,
                'site_infidelity': infidelities,
                'local_frame_rad': fidelity.frame,
            }
            report.add_check(
                'Simulation',
                Verdict.from_bound(1 - mapped, EXACT_TOLERANCE),
                f'The accumulated phases reproduce the evolved state to '
                f'{1 - mapped:.3g}')
            worst = max(infidelities)
            if args.include_nonlocal and not args.echo_demo:
                report.add_check(
                    'Simulation',
                    Verdict.from_bound(worst, BOUND_FACTOR * bound),
                    f'Largest site infidelity {worst:.3g} against the echo '
                    f'bound {bound:.3g}')
            else:
                report.add_check(
                    'Simulation',
                    Verdict.from_bound(
                        1 - fidelity.corrected, EXACT_TOLERANCE),
                    f'Fidelity {fidelity.corrected:.12f} after local '
                    f'corrections, stabilizers within {worst:.3g} of +1')

        report_path = args.report or args.out / 'cluster_report.json'
        document['report'] = report.to_dict()
        manifest.add_output(write_json(
            args.out / 'schedule.json', schedule.to_dict()))
        manifest.add_output(write_json(report_path, document))
        manifest.add_status({'dim': dim, 'n': n})
        return finish(manifest, report, args.out, config)
