# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
import hashlib
import json
import math
from pathlib import Path
import time
from typing import Any
from typing import Callable
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import TypeVar

from colcon_core.logging import colcon_logger

logger = colcon_logger.getChild(__name__)

T = TypeVar('T')
R = TypeVar('R')

MANIFEST_NAME = 'manifest.json'


def parallel_map(
    func: Callable[[T], R], items: Iterable[T], threads: int = 1,
) -> List[R]:
    """
    Apply ``func`` to every item, preserving input order.

    :param func: The function to apply
    :param items: The inputs
    :param threads: Number of worker threads, 1 runs inline
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def format_float(value: Optional[float]) -> str:
    """Format a number for CSV output, empty for a missing value."""
    if value is None:
        return ''
    if isinstance(value, float) and math.isnan(value):
        return ''
    return format(value, '.12g')


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]],
) -> Path:
    """
    Write a table of numbers as CSV.

    Floats use 12 significant digits. Strings are written as-is and None
    becomes an empty cell.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                cell if isinstance(cell, str) else format_float(cell)
                for cell in row])
    logger.info(f"Wrote '{path}'")
    return path


def write_json(path: Path, data: Any) -> Path:
    """Write a JSON document with stable formatting."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w') as f:
        json.dump(data, f, indent=2, allow_nan=False, default=_jsonable)
        f.write('\n')
    logger.info(f"Wrote '{path}'")
    return path


def _jsonable(value: Any) -> Any:
    if hasattr(value, 'tolist'):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def finite_or_none(value: float) -> Optional[float]:
    """Map NaN and infinities to None so they serialize as null."""
    return value if math.isfinite(value) else None


def config_hash(document: Any) -> str:
    """Get the sha256 of a configuration tree in canonical JSON form."""
    canonical = json.dumps(
        document, sort_keys=True, separators=(',', ':'), default=_jsonable)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass
class RunManifest:
    """Record of one command invocation and everything it emitted."""

    command: str
    config_hash: str
    grid: Dict[str, Any] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    status: List[Dict[str, Any]] = field(default_factory=list)
    report: Optional[Dict[str, Any]] = None
    wall_clock: float = 0.0
    _started: float = field(default_factory=time.monotonic, repr=False)

    def add_output(self, path: Path) -> None:
        """List an emitted file."""
        self.outputs.append(str(path))

    def add_status(self, point: Any, error: Optional[str] = None) -> None:
        """Record the outcome of one grid point."""
        self.status.append({
            'point': point,
            'ok': error is None,
            'error': error,
        })

    @property
    def failures(self) -> int:
        """Get the number of failed grid points."""
        return sum(1 for s in self.status if not s['ok'])

    def exit_code(self) -> int:
        """Get 0 on full success and 2 when some grid points failed."""
        return 2 if self.failures else 0

    def write(self, directory: Path) -> Path:
        """Stop the clock and write the manifest into ``directory``."""
        self.wall_clock = time.monotonic() - self._started
        data = asdict(self)
        del data['_started']
        return write_json(directory / MANIFEST_NAME, data)
