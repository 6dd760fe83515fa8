# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""Helpers shared by the flux-ising verbs."""

import os
from pathlib import Path
from typing import Optional
from typing import Sequence
from typing import Tuple

from colcon_core.logging import colcon_logger
from flux_ising.cache import cache_from_environment
from flux_ising.cache import EigenCache
from flux_ising.circuit import configure_cache
from flux_ising.config import ConfigError
from flux_ising.config import DeviceConfig
from flux_ising.config import load_device_config
from flux_ising.output import config_hash
from flux_ising.output import RunManifest
from flux_ising.report import Report

logger = colcon_logger.getChild(__name__)

"""Gate voltage in uV used when a command needs one powered point"""
OPERATING_VOLTAGE = 1000.0

DEFAULT_GRIDS = {
    'alpha': tuple(round(0.1 + 0.05 * i, 10) for i in range(19)),
    'flux': tuple(round(0.48 + 0.002 * i, 10) for i in range(21)),
    'voltage': tuple(100.0 * i for i in range(21)),
    'coupling': tuple(round(0.02 + 0.01 * i, 10) for i in range(14)),
}


def add_common_arguments(parser) -> None:
    """Add the arguments every verb accepts."""
    parser.add_argument(
        '--config', type=Path, default=None, metavar='PATH',
        help='Device document in YAML or JSON (default: a single qubit '
             'with default parameters)')
    parser.add_argument(
        '--out', type=Path, default=Path('.'), metavar='DIR',
        help='Directory that receives the datasets and manifest.json '
             '(default: current directory)')
    parser.add_argument(
        '--threads', type=int, default=os.cpu_count() or 1, metavar='K',
        help='Number of grid points evaluated concurrently (default: '
             'number of cores)')
    parser.add_argument(
        '--cutoff', type=int, default=None, metavar='NC',
        help='Charge cutoff of the eigensolves (default: from the '
             'configuration)')
    parser.add_argument(
        '--cache', type=Path, default=None, metavar='DIR',
        help='Directory of cached eigensolves (default: '
             '$FLUX_ISING_CACHE, unset disables caching)')


def prepare(args) -> Tuple[DeviceConfig, int]:
    """
    Load the device and set up the eigensolve cache.

    :returns: The device and the charge cutoff to use
    """
    config = load_device_config(args.config)
    cache: Optional[EigenCache]
    if args.cache is not None:
        cache = EigenCache(args.cache)
    else:
        cache = cache_from_environment()
    configure_cache(cache)
    cutoff = args.cutoff if args.cutoff is not None else \
        config.solver.cutoff
    if cutoff < 1:
        raise ConfigError(f'invalid cutoff {cutoff}', field='cutoff')
    return config, cutoff


def select_grid(
    explicit: Optional[Sequence[float]],
    config: DeviceConfig,
    name: str,
) -> Tuple[float, ...]:
    """
    Pick a sweep grid from the command line, the device or the defaults.

    :raises ConfigError: If the chosen grid is empty
    """
    if explicit is not None:
        grid = tuple(explicit)
    elif name in config.sweeps:
        grid = config.sweeps[name]
    else:
        grid = DEFAULT_GRIDS[name]
    if not grid:
        raise ConfigError('empty grid', field=f'sweeps.{name}')
    return grid


def new_manifest(command: str, **grid) -> RunManifest:
    """Start the manifest of a run."""
    return RunManifest(command=command, config_hash='', grid=grid)


def finish(
    manifest: RunManifest, report: Report, out: Path, config: DeviceConfig,
) -> int:
    """
    Write the manifest, print the report and pick the exit code.

    The configuration hash covers the device and the final grid.

    :returns: 0 on full success, 2 when some grid points failed
    """
    if manifest.failures:
        report.add_note(
            'grid', f'{manifest.failures} of {len(manifest.status)} points '
                    'failed')
    manifest.config_hash = config_hash(
        {'config': config.to_dict(), 'grid': manifest.grid})
    manifest.report = report.to_dict()
    manifest.add_output(out / 'manifest.json')
    manifest.write(out)
    print('\n' + report.to_text() + '\n')
    return manifest.exit_code()
