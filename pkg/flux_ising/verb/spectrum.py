# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from dataclasses import replace
import math
from typing import List
from typing import Optional
from typing import Tuple

from colcon_core.plugin_system import satisfies_version
from colcon_core.verb import VerbExtensionPoint
from flux_ising.circuit import converge_cutoff
from flux_ising.circuit import FluxQubitSpec
from flux_ising.output import write_csv
from flux_ising.report import Report
from flux_ising.report import Verdict
from flux_ising.spectrum import OPTIMAL_FLUX
from flux_ising.spectrum import sweep
from flux_ising.spectrum import SWEEP_AXES
from flux_ising.spectrum import SweepRow
from flux_ising.spectrum import TWO_LEVEL_WINDOW
from flux_ising.verb import add_common_arguments
from flux_ising.verb import finish
from flux_ising.verb import new_manifest
from flux_ising.verb import prepare
from flux_ising.verb import select_grid

"""CSV column of each sweep axis"""
AXIS_COLUMNS = {
    'alpha': 'alpha',
    'flux': 'f',
    'voltage': 'Ve_uV',
}

"""Accepted range of E01 / E12 at the default working point"""
ANHARMONICITY_RANGE = (2.5, 3.5)


def _series(args) -> List[Tuple[Optional[str], Optional[float]]]:
    if args.alphas:
        return [('alpha', a) for a in args.alphas]
    if args.voltages:
        return [('voltage', v) for v in args.voltages]
    return [(None, None)]


def _check_anharmonicity(report: Report, rows: List[SweepRow]) -> None:
    low, high = ANHARMONICITY_RANGE
    for row in rows:
        if row.error is not None or abs(row.value - 0.2) > 1e-12:
            continue
        ratio = row.e01 / row.e12
        verdict = Verdict.PASS if low <= ratio <= high else Verdict.WARN
        report.add_check(
            'Anharmonicity', verdict,
            f'E01/E12 = {ratio:.4g} at alpha=0.2 (expected {low} to {high})')


def _check_two_level(report: Report, rows: List[SweepRow]) -> None:
    worst = 0.0
    count = 0
    for row in rows:
        if row.error is not None or math.isnan(row.delta):
            continue
        if abs(row.value - OPTIMAL_FLUX) > TWO_LEVEL_WINDOW / 10:
            continue
        count += 1
        worst = max(
            worst, abs(math.hypot(row.delta, row.epsilon) - row.e01) /
            row.e01)
    if count:
        report.add_check(
            'Two-level description',
            Verdict.from_bound(worst, 0.01, warn_factor=5),
            f'sqrt(eps^2 + Delta^2) matches E01 within {100 * worst:.3g}% '
            f'over {count} flux points near f=0.5')


class SpectrumVerb(VerbExtensionPoint):
    """Sweep the spectrum of a single flux qubit."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(VerbExtensionPoint.EXTENSION_POINT_VERSION, '^1.0')

    def add_arguments(self, *, parser):  # noqa: D102
        add_common_arguments(parser)
        parser.add_argument(
            '--axis', choices=SWEEP_AXES, default='alpha',
            help='Parameter that is swept (default: alpha)')
        parser.add_argument(
            '--grid', type=float, nargs='*', default=None, metavar='VALUE',
            help='Values of the swept parameter (default: from the '
                 'configuration, then a built-in grid)')
        series = parser.add_mutually_exclusive_group()
        series.add_argument(
            '--alphas', type=float, nargs='+', default=None, metavar='A',
            help='Repeat the sweep for each of these alpha values')
        series.add_argument(
            '--voltages', type=float, nargs='+', default=None, metavar='UV',
            help='Repeat the sweep for each of these gate voltages')
        parser.add_argument(
            '--certify', action='store_true',
            help='Also certify the charge cutoff of the first qubit')

    def main(self, *, context):  # noqa: D102
        args = context.args
        config, cutoff = prepare(args)
        grid = select_grid(args.grid, config, args.axis)
        template = config.template

        manifest = new_manifest(
            'spectrum', axis=args.axis, values=list(grid),
            alphas=args.alphas, voltages=args.voltages, cutoff=cutoff)
        report = Report(f'Spectrum along {args.axis}')
        header = (
            AXIS_COLUMNS[args.axis], 'E01_GHz', 'E12_GHz', 'Delta_GHz',
            'epsilon_GHz', 'error')

        for name, value in _series(args):
            spec: FluxQubitSpec = template
            filename = f'spectrum_{args.axis}.csv'
            if name is not None:
                spec = replace(template, **{name: value})
                filename = f'spectrum_{args.axis}_{name}{value:g}.csv'
            rows = sweep(
                spec, args.axis, grid, cutoff=cutoff, threads=args.threads)
            manifest.add_output(write_csv(
                args.out / filename, header,
                ([r.value, r.e01, r.e12, r.delta, r.epsilon, r.error or '']
                 for r in rows)))
            for row in rows:
                point = {args.axis: row.value}
                if name is not None:
                    point[name] = value
                manifest.add_status(point, row.error)
                if row.error is not None:
                    report.add_note(point, row.error)

            if args.axis == 'alpha':
                _check_anharmonicity(report, rows)
            elif args.axis == 'flux':
                _check_two_level(report, rows)

        if args.certify:
            certificate = converge_cutoff(
                template, config.solver.levels, 1e-3)
            manifest.grid['certificate'] = certificate._asdict()
            report.add_check(
                'Cutoff', Verdict.PASS,
                f'E01 and E12 move by {certificate.shift:.3g} GHz from '
                f'nc={certificate.cutoff} to nc={certificate.cutoff + 2}')

        return finish(manifest, report, args.out, config)
