# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""Device configuration documents."""

from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from dataclasses import replace
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional
from typing import Tuple

from colcon_core.logging import colcon_logger
from flux_ising.circuit import DEFAULT_CUTOFF
from flux_ising.circuit import FluxQubitSpec
from flux_ising.coupling import chain_graph
from flux_ising.coupling import CouplerGraph
from flux_ising.coupling import grid_graph
from flux_ising.coupling import ORACLE_LEVELS
from flux_ising.error_budget import CORRELATED_THRESHOLD
from flux_ising.error_budget import LOCAL_THRESHOLD
from flux_ising.error_budget import NoiseParams
from flux_ising.yaml_lines import key_lines
from flux_ising.yaml_lines import lines_of
from flux_ising.yaml_lines import load_annotated
import yaml

logger = colcon_logger.getChild(__name__)

"""Document keys of a qubit and the FluxQubitSpec fields they set"""
QUBIT_KEYS = {
    'Ej1': 'ej1',
    'alpha': 'alpha',
    'ratio': 'ratio',
    'Cg': 'cg',
    'f': 'flux',
    'Ve': 'voltage',
    'island_load': 'island_load',
}

TOPOLOGY_KINDS = ('single', 'chain', 'grid')

SWEEP_KEYS = ('alpha', 'flux', 'voltage', 'coupling')

TOP_LEVEL_KEYS = (
    'qubit', 'qubits', 'topology', 'couplers', 'noise', 'solver', 'sweeps',
    'thresholds')


class ConfigError(RuntimeError):
    """A device document could not be parsed or violates an invariant."""

    def __init__(
        self,
        message: str,
        *,
        field: Optional[str] = None,
        lines: Optional[range] = None,
        source: Optional[str] = None,
    ):
        """
        Initialize a new instance of a ConfigError.

        :param message: What is wrong
        :param field: Dotted path of the offending field
        :param lines: 1-based source lines of the offending field
        :param source: Name of the document
        """
        self.field = field
        self.lines = lines
        self.source = source
        location = source or '<config>'
        if lines is not None:
            location += f':{lines.start}'
        if field:
            message = f"'{field}': {message}"
        super().__init__(f'{location}: {message}')


@dataclass(frozen=True)
class Topology:
    """How the qubits are arranged."""

    kind: str = 'single'
    size: int = 1
    coupling_capacitance: Optional[float] = None

    @property
    def sites(self) -> int:
        """Get the number of qubits."""
        return self.size * self.size if self.kind == 'grid' else self.size


@dataclass(frozen=True)
class CouplerSpec:
    """A coupling capacitor between two qubit islands."""

    pair: Tuple[int, int]
    capacitance: float


@dataclass(frozen=True)
class SolverSettings:
    """Charge cutoff and retained levels of the eigensolves."""

    cutoff: int = DEFAULT_CUTOFF
    levels: int = 3
    oracle_levels: int = ORACLE_LEVELS


@dataclass(frozen=True)
class Thresholds:
    """Error thresholds for the local and correlated budgets."""

    local: float = LOCAL_THRESHOLD
    correlated: float = CORRELATED_THRESHOLD


@dataclass(frozen=True)
class DeviceConfig:
    """A validated device document."""

    qubits: Tuple[FluxQubitSpec, ...] = (FluxQubitSpec(),)
    couplers: Tuple[CouplerSpec, ...] = ()
    topology: Topology = Topology()
    noise: NoiseParams = NoiseParams()
    solver: SolverSettings = SolverSettings()
    sweeps: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    thresholds: Thresholds = Thresholds()

    @property
    def template(self) -> FluxQubitSpec:
        """Get the parameters of the first qubit."""
        return self.qubits[0]

    def to_graph(self) -> CouplerGraph:
        """Build the coupler network of this device."""
        positions: Optional[Dict[int, Tuple[int, ...]]] = None
        if self.topology.kind == 'chain':
            positions = {s: (s,) for s in range(len(self.qubits))}
        elif self.topology.kind == 'grid':
            size = self.topology.size
            positions = {
                s: (s // size, s % size) for s in range(len(self.qubits))}
        return CouplerGraph(
            self.qubits,
            ((c.pair[0], c.pair[1], c.capacitance) for c in self.couplers),
            kind='custom' if self.topology.kind == 'single'
            else self.topology.kind,
            positions=positions)

    def to_dict(self) -> Dict[str, Any]:
        """Get the normalized document of this device."""
        names = {value: key for key, value in QUBIT_KEYS.items()}
        return {
            'qubits': [
                {names[k]: v for k, v in asdict(q).items()}
                for q in self.qubits],
            'topology': asdict(self.topology),
            'couplers': [
                {'pair': list(c.pair), 'Cc': c.capacitance}
                for c in self.couplers],
            'noise': asdict(self.noise),
            'solver': asdict(self.solver),
            'sweeps': {k: list(v) for k, v in self.sweeps.items()},
            'thresholds': asdict(self.thresholds),
        }


class _Parser:

    def __init__(self, source: Optional[str]):
        self.source = source

    def error(self, message, *, field=None, parent=None, value=None):
        lines = None
        if parent is not None and field is not None:
            lines = key_lines(parent, field.rsplit('.', 1)[-1])
        if lines is None:
            lines = lines_of(value)
        return ConfigError(
            message, field=field, lines=lines, source=self.source)

    def mapping(self, data, path, *, allowed) -> Mapping:
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise self.error(
                'expected a mapping', field=path or None, value=data)
        for key in data:
            if key not in allowed:
                name = f'{path}.{key}' if path else str(key)
                raise self.error(
                    f'unknown key (expected one of {", ".join(allowed)})',
                    field=name, parent=data)
        return data

    def number(self, parent, key, path, *, integer=False):
        value = parent[key]
        if isinstance(value, bool) or not isinstance(
            value, int if integer else (int, float),
        ):
            kind = 'an integer' if integer else 'a number'
            raise self.error(
                f'expected {kind}, got {value!r}', field=path, parent=parent)
        return int(value) if integer else float(value)

    def numbers(self, parent, key, path) -> Tuple[float, ...]:
        values = parent[key]
        if not isinstance(values, list):
            raise self.error(
                'expected a list of numbers', field=path, parent=parent)
        result = []
        for index, value in enumerate(values):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise self.error(
                    f'expected a number, got {value!r}',
                    field=f'{path}[{index}]', parent=parent)
            result.append(float(value))
        return tuple(result)

    def build(self, factory, parent, path, message_field=None):
        try:
            return factory()
        except ValueError as e:
            raise self.error(
                str(e), field=message_field or path,
                parent=parent if message_field else None,
                value=parent) from e

    def qubit(self, data, path, base: FluxQubitSpec) -> FluxQubitSpec:
        data = self.mapping(data, path, allowed=tuple(QUBIT_KEYS))
        values = {
            QUBIT_KEYS[key]: self.number(data, key, f'{path}.{key}')
            for key in data}
        return self.build(lambda: replace(base, **values), data, path)

    def topology(self, data) -> Topology:
        data = self.mapping(
            data, 'topology', allowed=('kind', 'size', 'coupling_capacitance'))
        kind = data.get('kind', 'chain' if 'size' in data else 'single')
        if kind not in TOPOLOGY_KINDS:
            raise self.error(
                f'expected one of {", ".join(TOPOLOGY_KINDS)}, got {kind!r}',
                field='topology.kind', parent=data)
        size = 1
        if 'size' in data:
            size = self.number(data, 'size', 'topology.size', integer=True)
        if size < 1 or (kind == 'single' and size != 1):
            raise self.error(
                f'invalid size {size} for a {kind} topology',
                field='topology.size', parent=data)
        capacitance = None
        if 'coupling_capacitance' in data:
            capacitance = self.number(
                data, 'coupling_capacitance',
                'topology.coupling_capacitance')
            if capacitance < 0:
                raise self.error(
                    'coupling capacitance must be non-negative',
                    field='topology.coupling_capacitance', parent=data)
        return Topology(kind, size, capacitance)

    def couplers(self, data, sites: int) -> Tuple[CouplerSpec, ...]:
        if not isinstance(data, list):
            raise self.error('expected a list', field='couplers', value=data)
        result: List[CouplerSpec] = []
        seen = set()
        for index, item in enumerate(data):
            path = f'couplers[{index}]'
            item = self.mapping(item, path, allowed=('pair', 'Cc'))
            for key in ('pair', 'Cc'):
                if key not in item:
                    raise self.error(
                        'missing key', field=f'{path}.{key}', value=item)
            pair = item['pair']
            if not isinstance(pair, list) or len(pair) != 2 or any(
                isinstance(s, bool) or not isinstance(s, int) for s in pair
            ):
                raise self.error(
                    'expected two qubit indices', field=f'{path}.pair',
                    parent=item)
            i, j = pair
            for site in (i, j):
                if not 0 <= site < sites:
                    raise self.error(
                        f'qubit {site} does not exist ({sites} qubits)',
                        field=f'{path}.pair', parent=item)
            if i == j:
                raise self.error(
                    f'qubit {i} cannot couple to itself',
                    field=f'{path}.pair', parent=item)
            edge = (min(i, j), max(i, j))
            if edge in seen:
                raise self.error(
                    f'duplicate coupler between {edge[0]} and {edge[1]}',
                    field=f'{path}.pair', parent=item)
            seen.add(edge)
            capacitance = self.number(item, 'Cc', f'{path}.Cc')
            if capacitance < 0:
                raise self.error(
                    'coupling capacitance must be non-negative',
                    field=f'{path}.Cc', parent=item)
            result.append(CouplerSpec(edge, capacitance))
        return tuple(result)

    def settings(self, data, path, factory):
        names = tuple(f.name for f in fields(factory))
        data = self.mapping(data, path, allowed=names)
        integer = {
            f.name for f in fields(factory) if f.type in (int, 'int')}
        values = {
            key: self.number(
                data, key, f'{path}.{key}', integer=key in integer)
            for key in data}
        return self.build(lambda: factory(**values), data, path)

    def sweeps(self, data) -> Dict[str, Tuple[float, ...]]:
        data = self.mapping(data, 'sweeps', allowed=SWEEP_KEYS)
        return {
            key: self.numbers(data, key, f'sweeps.{key}') for key in data}


def _auto_couplers(topology: Topology) -> Tuple[CouplerSpec, ...]:
    if topology.coupling_capacitance is None or topology.kind == 'single':
        return ()
    build = chain_graph if topology.kind == 'chain' else grid_graph
    graph = build(
        topology.size, topology.coupling_capacitance, FluxQubitSpec())
    return tuple(
        CouplerSpec((i, j), capacitance)
        for i, j, capacitance in graph.couplers)


def parse_device_config(
    text: str, source: Optional[str] = None,
) -> DeviceConfig:
    """
    Parse and validate a device document.

    A single ``qubit`` entry is replicated over every site of the topology,
    and ``qubits`` entries override it per site. Without ``couplers``, a
    ``coupling_capacitance`` on the topology couples nearest neighbours.

    :param text: The YAML or JSON document
    :param source: Name of the document for diagnostics
    :returns: The validated device
    :raises ConfigError: If the document is malformed or inconsistent
    """
    try:
        data = load_annotated(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        lines = None if mark is None else range(mark.line + 1, mark.line + 2)
        raise ConfigError(
            f'not a valid document: {getattr(e, "problem", e)}',
            lines=lines, source=source) from e

    parser = _Parser(source)
    data = parser.mapping(data, '', allowed=TOP_LEVEL_KEYS)

    topology = parser.topology(data.get('topology'))
    base = parser.qubit(data.get('qubit'), 'qubit', FluxQubitSpec())
    overrides = data.get('qubits')
    if overrides is None:
        overrides = []
    if not isinstance(overrides, list):
        raise parser.error('expected a list', field='qubits', value=overrides)
    if 'topology' not in data and overrides:
        topology = Topology('chain', len(overrides))
    if len(overrides) > topology.sites:
        raise parser.error(
            f'{len(overrides)} qubits given for a topology of '
            f'{topology.sites}', field='qubits', parent=data)
    qubits = tuple(
        parser.qubit(overrides[site], f'qubits[{site}]', base)
        if site < len(overrides) else base
        for site in range(topology.sites))

    if 'couplers' in data:
        couplers = parser.couplers(data['couplers'], len(qubits))
    else:
        couplers = _auto_couplers(topology)

    config = DeviceConfig(
        qubits=qubits,
        couplers=couplers,
        topology=topology,
        noise=parser.settings(data.get('noise'), 'noise', NoiseParams),
        solver=parser.settings(
            data.get('solver'), 'solver', SolverSettings),
        sweeps=parser.sweeps(data.get('sweeps')),
        thresholds=parser.settings(
            data.get('thresholds'), 'thresholds', Thresholds),
    )
    if config.solver.cutoff < 1 or config.solver.levels < 3 or \
            config.solver.oracle_levels < 2:
        raise parser.error(
            'cutoff must be at least 1, levels at least 3 and '
            'oracle_levels at least 2', field='solver',
            parent=data, value=data.get('solver'))
    logger.debug(
        f'Parsed {len(config.qubits)} qubits and {len(config.couplers)} '
        f'couplers from {source or "<config>"}')
    return config


def load_device_config(path: Optional[Path]) -> DeviceConfig:
    """
    Load a device document from a file.

    :param path: The document, or None for the default device
    :raises ConfigError: If the file cannot be read or is invalid
    """
    if path is None:
        return DeviceConfig()
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(
            f'cannot read the document: {e.strerror}', source=str(path)
        ) from e
    return parse_device_config(text, source=str(path))
