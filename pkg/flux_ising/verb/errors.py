# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

import math
from typing import Optional

from colcon_core.plugin_system import satisfies_version
from colcon_core.verb import VerbExtensionPoint
from flux_ising.coupling import chain_couplings
from flux_ising.error_budget import correlated_error
from flux_ising.error_budget import correlated_error_curve
from flux_ising.error_budget import DEPHASING_REGIME
from flux_ising.error_budget import echo_bound_1d
from flux_ising.error_budget import local_error_curve
from flux_ising.error_budget import minimum_spacing
from flux_ising.error_budget import noise_budget
from flux_ising.error_budget import threshold_crossing
from flux_ising.error_budget import total_error_curve
from flux_ising.output import finite_or_none
from flux_ising.output import write_csv
from flux_ising.report import Report
from flux_ising.report import Verdict
from flux_ising.verb import add_common_arguments
from flux_ising.verb import finish
from flux_ising.verb import new_manifest
from flux_ising.verb import OPERATING_VOLTAGE
from flux_ising.verb import prepare
from flux_ising.verb import select_grid
from flux_ising.verb.coupling import coupling_capacitance
from flux_ising.verb.coupling import DEFAULT_COUPLING_CAPACITANCE

"""Number of chain sites used for the correlated error"""
DEFAULT_CHAIN_SITES = 12

"""Slack on the local threshold before a check fails outright"""
LOCAL_SLACK = 3.0


def _local(args, config, cutoff, manifest, report) -> None:
    capacitance = coupling_capacitance(args, config)
    voltages = select_grid(args.grid, config, 'voltage')
    threshold = config.thresholds.local
    manifest.grid.update(
        mode='local', Cc_fF=capacitance, Ve_uV=list(voltages),
        noise={'dv_uV': config.noise.dv, 'dt_ns': config.noise.dt})

    curve = local_error_curve(
        capacitance, voltages, config.noise, config.template,
        cutoff=cutoff, threshold=threshold, threads=args.threads)
    manifest.add_output(write_csv(
        args.out / 'errors_local.csv',
        ('Ve_uV', 'g_GHz', 'eps_d', 'eps_tim', 'eps_loc', 'in_regime',
         'error'),
        ([r.voltage, r.g, r.eps_d, r.eps_tim, r.eps_loc, int(r.in_regime),
          r.error or ''] for r in curve.rows)))
    for row in curve.rows:
        manifest.add_status({'Ve_uV': row.voltage}, row.error)
        if row.error is not None:
            report.add_note({'Ve_uV': row.voltage}, row.error)
        elif not row.in_regime:
            report.add_note(
                {'Ve_uV': row.voltage},
                'Outside the small-error regime (an error above 1 or a gate '
                f'longer than {DEPHASING_REGIME:g} T2)')
    manifest.grid['out_of_regime_Ve_uV'] = [
        r.voltage for r in curve.rows if r.error is None and not r.in_regime]

    if curve.minimum is None:
        return
    manifest.grid['argmin_Ve_uV'] = curve.argmin
    manifest.grid['min_eps_loc'] = curve.minimum
    if curve.minimum == 0:
        report.add_check(
            'Local error', Verdict.PASS, 'The local error vanishes')
    else:
        report.add_check(
            'Local error',
            Verdict.from_bound(
                curve.minimum, threshold, warn_factor=LOCAL_SLACK),
            f'Minimum {100 * curve.minimum:.3g}% at Ve={curve.argmin:g} uV '
            f'(threshold {100 * threshold:g}%)')
        report.add_check(
            'Local error', Verdict.PASS if curve.interior else Verdict.WARN,
            'The minimum lies inside the voltage grid' if curve.interior
            else 'The minimum lies on the edge of the voltage grid')
    if not curve.below_threshold:
        _explain_minimum(curve, config.noise, threshold, manifest, report)

    if args.total_p is not None:
        ratio = chain_couplings(
            args.n, capacitance, curve.argmin, config.template,
            cutoff=cutoff).ratio
        eps_non = correlated_error(ratio, args.total_p, args.n)
        manifest.grid['total'] = {'p': args.total_p, 'R': ratio}
        manifest.add_output(write_csv(
            args.out / 'errors_total.csv',
            ('Ve_uV', 'eps_loc', 'eps_non', 'total'),
            total_error_curve(curve, eps_non)))


def _limit(value: Optional[float]) -> Optional[float]:
    return None if value is None else finite_or_none(value)


def _explain_minimum(curve, noise, threshold, manifest, report) -> None:
    best = next(r for r in curve.rows if r.voltage == curve.argmin)
    budget = noise_budget(curve, noise, threshold)
    manifest.grid['budget'] = {
        'dt_ns': _limit(budget.dt), 'dt_Ve_uV': budget.dt_voltage,
        'dv_uV': _limit(budget.dv), 'dv_Ve_uV': budget.dv_voltage,
    }
    message = (
        f'g = {best.g:.3g} GHz at the minimum gives eps_tim = '
        f'{100 * best.eps_tim:.3g}% at dt = {noise.dt:g} ns and eps_d = '
        f'{100 * best.eps_d:.3g}% at dv = {noise.dv:g} uV.')
    limits = []
    if budget.dt is not None:
        limits.append(
            f'dt <= {budget.dt:.3g} ns (at Ve={budget.dt_voltage:g} uV)')
    if budget.dv is not None:
        limits.append(
            f'dv <= {budget.dv:.3g} uV (at Ve={budget.dv_voltage:g} uV)')
    if limits:
        joined = ', or for '.join(limits)
        message += (
            f' The minimum falls below {100 * threshold:g}% for {joined}.')
    else:
        message += (
            ' Neither a smaller jitter nor a smaller voltage noise alone '
            f'brings the minimum below {100 * threshold:g}%.')
    report.add_note({'Ve_uV': best.voltage}, message)


def _correlated(args, config, cutoff, manifest, report) -> None:
    capacitances = select_grid(args.grid, config, 'coupling')
    ps = sorted(set(args.p or (4, 5)))
    threshold = config.thresholds.correlated
    manifest.grid.update(
        mode='correlated', sites=args.n, Ve_uV=args.ve,
        Cc_fF=list(capacitances), p=ps)

    rows = correlated_error_curve(
        capacitances, args.ve, config.template, args.n, ps,
        cutoff=cutoff, threads=args.threads)
    manifest.add_output(write_csv(
        args.out / 'errors_correlated.csv',
        ('Cc_fF', 'R', *(f'eps_non_p{p}' for p in ps), 'error'),
        ([r.capacitance, r.ratio, *(r.eps_non[p] for p in ps),
          r.error or ''] for r in rows)))
    for row in rows:
        manifest.add_status({'Cc_fF': row.capacitance}, row.error)
        if row.error is not None:
            report.add_note({'Cc_fF': row.capacitance}, row.error)

    crossings = {}
    for p in ps:
        crossing = threshold_crossing(
            capacitances, [r.eps_non[p] for r in rows], threshold)
        crossings[p] = crossing
        report.add_check(
            f'Correlated error (p={p})', Verdict.PASS,
            f'Exceeds {100 * threshold:g}% above Cc={crossing:.3g} fF'
            if crossing is not None
            else f'Does not cross {100 * threshold:g}% on the grid')
    manifest.grid['crossings_fF'] = crossings

    for row in rows:
        if row.error is not None or math.isnan(row.ratio):
            continue
        if row.capacitance > DEFAULT_COUPLING_CAPACITANCE + 1e-12:
            continue
        bound = echo_bound_1d(row.ratio)
        spacing = minimum_spacing(row.ratio, args.n, threshold)
        report.add_check(
            'Echo residual', Verdict.from_bound(bound, threshold),
            f'(pi/4)(R^4 + 2R^5) = {bound:.3g} at Cc={row.capacitance:g} '
            f'fF, smallest spacing without echo {spacing}')
        manifest.grid.setdefault('echo_bound', []).append({
            'Cc_fF': row.capacitance, 'bound': finite_or_none(bound)})


class ErrorsVerb(VerbExtensionPoint):
    """Evaluate the local and correlated error budgets."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(VerbExtensionPoint.EXTENSION_POINT_VERSION, '^1.0')

    def add_arguments(self, *, parser):  # noqa: D102
        add_common_arguments(parser)
        mode = parser.add_mutually_exclusive_group(required=True)
        mode.add_argument(
            '--local', action='store_true',
            help='Local error of a powered pair against the gate voltage')
        mode.add_argument(
            '--correlated', action='store_true',
            help='Error from distant couplings against the coupling '
                 'capacitance')
        parser.add_argument(
            '--grid', type=float, nargs='*', default=None, metavar='VALUE',
            help='Gate voltages in uV (local) or coupling capacitances in '
                 'fF (correlated)')
        parser.add_argument(
            '--cc', type=float, default=None, metavar='FF',
            help='Coupling capacitance for the local error in fF')
        parser.add_argument(
            '--ve', type=float, default=OPERATING_VOLTAGE, metavar='UV',
            help='Gate voltage for the correlated error in uV (default: '
                 f'{OPERATING_VOLTAGE:g})')
        parser.add_argument(
            '--p', type=int, action='append', default=None, metavar='P',
            help='Site distance of powered pairs, may repeat (default: 4 '
                 'and 5)')
        parser.add_argument(
            '--n', type=int, default=DEFAULT_CHAIN_SITES, metavar='N',
            help='Number of chain sites (default: '
                 f'{DEFAULT_CHAIN_SITES})')
        parser.add_argument(
            '--total-p', type=int, default=None, metavar='P',
            help='With --local, also add the correlated error for this '
                 'spacing at the optimal voltage')

    def main(self, *, context):  # noqa: D102
        args = context.args
        config, cutoff = prepare(args)
        manifest = new_manifest('errors', cutoff=cutoff)
        if args.local:
            report = Report('Local error budget')
            _local(args, config, cutoff, manifest, report)
        else:
            report = Report('Correlated error budget')
            _correlated(args, config, cutoff, manifest, report)
        return finish(manifest, report, args.out, config)
