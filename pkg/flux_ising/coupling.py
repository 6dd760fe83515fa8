# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""
Effective Ising model of capacitively coupled flux qubits.

Couplers join the islands of two qubits. The full network of 3N charge
nodes is inverted once; the diagonal 3x3 blocks of the inverse dress the
single-qubit Hamiltonians and the off-diagonal blocks carry the
charge-charge interaction 8 Ec_uw (n_u - ng_u)(n_w - ng_w) between nodes
of different qubits.
"""

from collections import namedtuple
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
import math
from typing import Any
from typing import Dict
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Tuple

from colcon_core.logging import colcon_logger
from flux_ising.circuit import charge_operator
from flux_ising.circuit import ChargeBasis
from flux_ising.circuit import DEFAULT_CUTOFF
from flux_ising.circuit import eigensystem
from flux_ising.circuit import FluxQubitSpec
from flux_ising.circuit import gate_offsets
from flux_ising.circuit import ModelError
from flux_ising.circuit import node_capacitance_matrix
from flux_ising.output import parallel_map
from flux_ising.units import charging_energy_matrix
import networkx as nx
import numpy as np

logger = colcon_logger.getChild(__name__)

"""Couplings weaker than this (GHz) are dropped from a model"""
PRUNE_THRESHOLD = 1e-12

"""Number of states kept per qubit by the exact two-qubit oracle"""
ORACLE_LEVELS = 8

NODES_PER_QUBIT = 3

PairCoupling = namedtuple(
    'PairCoupling', ('g', 'delta1', 'delta2', 'projected'))

SiteLevels = namedtuple('SiteLevels', ('energies', 'charges'))


class CouplingRatioError(RuntimeError):
    """The nearest neighbour coupling is too weak to define a ratio."""


class CouplerGraph:
    """Qubit sites joined by island-to-island coupling capacitors."""

    def __init__(
        self,
        specs: Sequence[FluxQubitSpec],
        couplers: Iterable[Tuple[int, int, float]],
        *,
        kind: str = 'custom',
        positions: Optional[Mapping[int, Tuple[int, ...]]] = None,
    ):
        """
        Initialize a new instance of a CouplerGraph.

        :param specs: The qubit parameters, one per site
        :param couplers: (i, j, Cc fF) triples
        :param kind: 'chain', 'grid' or 'custom', selecting the site metric
        :param positions: Lattice coordinates of each site for the chain
          and grid metrics
        :raises ValueError: If a coupler is invalid
        """
        self._graph = nx.Graph(kind=kind)
        for site, spec in enumerate(specs):
            position = None if positions is None else positions[site]
            self._graph.add_node(site, spec=spec, position=position)

        for i, j, capacitance in couplers:
            if i == j:
                raise ValueError(f'Coupler joins site {i} to itself')
            for site in (i, j):
                if site not in self._graph:
                    raise ValueError(
                        f'Coupler references missing site {site}')
            if self._graph.has_edge(i, j):
                raise ValueError(f'Duplicate coupler between {i} and {j}')
            if capacitance < 0:
                raise ValueError(
                    f'Coupling capacitance must be non-negative, got '
                    f'{capacitance!r}')
            self._graph.add_edge(i, j, capacitance=capacitance)

    @property
    def graph(self) -> nx.Graph:
        """Get the underlying graph."""
        return self._graph

    @property
    def kind(self) -> str:
        """Get the topology kind."""
        return self._graph.graph['kind']

    def __len__(self) -> int:  # noqa: D105
        return self._graph.number_of_nodes()

    @property
    def specs(self) -> List[FluxQubitSpec]:
        """Get the qubit parameters in site order."""
        return [self._graph.nodes[n]['spec'] for n in sorted(self._graph)]

    @property
    def couplers(self) -> List[Tuple[int, int, float]]:
        """Get the (i, j, Cc) triples with i < j, sorted."""
        return sorted(
            (min(i, j), max(i, j), data['capacitance'])
            for i, j, data in self._graph.edges(data=True))

    def distance(self, i: int, j: int) -> int:
        """
        Get the site distance between two sites.

        Chains and grids use the lattice metric of their positions, other
        graphs the number of couplers on a shortest path.
        """
        first = self._graph.nodes[i]['position']
        second = self._graph.nodes[j]['position']
        if first is not None and second is not None:
            return sum(abs(a - b) for a, b in zip(first, second))
        return nx.shortest_path_length(self._graph, i, j)

    def with_voltages(self, voltages: Mapping[int, float]) -> 'CouplerGraph':
        """Get a copy whose sites sit at the given gate voltages."""
        specs = [
            replace(spec, voltage=voltages.get(site, spec.voltage))
            for site, spec in enumerate(self.specs)]
        positions = {
            n: self._graph.nodes[n]['position'] for n in self._graph}
        if any(p is None for p in positions.values()):
            positions = None  # type: ignore[assignment]
        return CouplerGraph(
            specs, self.couplers, kind=self.kind, positions=positions)


def chain_graph(
    size: int, capacitance: float, template: FluxQubitSpec,
) -> CouplerGraph:
    """Build a chain of identical qubits with nearest neighbour couplers."""
    if size < 1:
        raise ValueError(f'A chain needs at least one site, got {size}')
    path = nx.path_graph(size)
    return CouplerGraph(
        [template] * size,
        ((i, j, capacitance) for i, j in path.edges()),
        kind='chain',
        positions={site: (site,) for site in range(size)})


def grid_graph(
    size: int, capacitance: float, template: FluxQubitSpec,
) -> CouplerGraph:
    """
    Build a size x size grid of identical qubits.

    Site (r, c) has index r * size + c.
    """
    if size < 1:
        raise ValueError(f'A grid needs at least one site, got {size}')
    lattice = nx.grid_2d_graph(size, size)
    return CouplerGraph(
        [template] * (size * size),
        ((r1 * size + c1, r2 * size + c2, capacitance)
         for (r1, c1), (r2, c2) in lattice.edges()),
        kind='grid',
        positions={r * size + c: (r, c) for r, c in lattice.nodes()})


def network_capacitance_matrix(graph: CouplerGraph) -> np.ndarray:
    """Assemble the (3N)x(3N) capacitance matrix of all nodes in fF."""
    size = len(graph)
    matrix = np.zeros((NODES_PER_QUBIT * size,) * 2)
    for site, spec in enumerate(graph.specs):
        block = slice(NODES_PER_QUBIT * site, NODES_PER_QUBIT * (site + 1))
        matrix[block, block] = node_capacitance_matrix(spec)
    for i, j, capacitance in graph.couplers:
        a, b = _island(i), _island(j)
        matrix[a, a] += capacitance
        matrix[b, b] += capacitance
        matrix[a, b] -= capacitance
        matrix[b, a] -= capacitance
    return matrix


def _island(site: int) -> int:
    return NODES_PER_QUBIT * site + 1


def _block(site: int) -> slice:
    return slice(NODES_PER_QUBIT * site, NODES_PER_QUBIT * (site + 1))


def full_inverse_capacitance(graph: CouplerGraph) -> np.ndarray:
    """
    Get the charging energy matrix (e^2/2) C^-1 of the whole network.

    :returns: A (3N)x(3N) matrix in GHz
    :raises ModelError: If the assembled capacitance matrix is not
      positive definite
    """
    matrix = network_capacitance_matrix(graph)
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise ModelError(
            'Network capacitance matrix is not positive definite') from e
    return charging_energy_matrix(matrix)


def site_charging_energies(
    charging_energies: np.ndarray, site: int,
) -> np.ndarray:
    """Get the dressed 3x3 charging energies of one site."""
    return charging_energies[_block(site), _block(site)]


def cross_charging_energies(
    charging_energies: np.ndarray, i: int, j: int,
) -> np.ndarray:
    """Get the 3x3 block of charging energies between two sites."""
    return charging_energies[_block(i), _block(j)]


def site_levels(
    spec: FluxQubitSpec,
    charging_energies: np.ndarray,
    levels: int = 2,
    cutoff: int = DEFAULT_CUTOFF,
) -> SiteLevels:
    """
    Solve one dressed site and project its node charges.

    :returns: The lowest energies and a (3, levels, levels) array of
      <m| n_u - ng_u |m'> for the nodes u = a, b, c
    """
    pairs = eigensystem(
        spec, cutoff, levels, charging_energies=charging_energies)
    basis = ChargeBasis(cutoff)
    offsets = gate_offsets(spec)
    vectors = pairs.vectors
    charges = np.stack([
        vectors.conj().T @ (charge_operator(basis, node, offsets[node]) @
                            vectors)
        for node in range(NODES_PER_QUBIT)])
    return SiteLevels(pairs.energies, charges)


def _dipole(levels: SiteLevels) -> np.ndarray:
    # <g|n|g> - <e|n|e> for every node
    return (levels.charges[:, 0, 0] - levels.charges[:, 1, 1]).real


def coupling_strength(
    first: SiteLevels, second: SiteLevels, cross: np.ndarray,
) -> float:
    """
    Get g = (H_gg - H_ge - H_eg + H_ee) / 4 of the projected interaction.

    :param first: Levels of the first site
    :param second: Levels of the second site
    :param cross: The 3x3 charging energies between the two sites
    """
    return float(2 * _dipole(first) @ cross @ _dipole(second))


def projected_block(
    first: SiteLevels, second: SiteLevels, cross: np.ndarray,
) -> np.ndarray:
    """
    Get the full 4x4 projection of the pair Hamiltonian.

    The basis is |gg>, |ge>, |eg>, |ee>. Off-diagonal flip-flop terms are
    kept.
    """
    first2 = _truncate(first, 2)
    second2 = _truncate(second, 2)
    return _low_energy_hamiltonian(first2, second2, cross)


def _truncate(levels: SiteLevels, count: int) -> SiteLevels:
    return SiteLevels(
        levels.energies[:count], levels.charges[:, :count, :count])


def _low_energy_hamiltonian(
    first: SiteLevels, second: SiteLevels, cross: np.ndarray,
) -> np.ndarray:
    m1, m2 = len(first.energies), len(second.energies)
    hamiltonian = np.kron(np.diag(first.energies), np.eye(m2)) + \
        np.kron(np.eye(m1), np.diag(second.energies))
    hamiltonian = hamiltonian.astype(complex)
    for u in range(NODES_PER_QUBIT):
        for w in range(NODES_PER_QUBIT):
            if cross[u, w] == 0:
                continue
            hamiltonian += 8 * cross[u, w] * np.kron(
                first.charges[u], second.charges[w])
    return (hamiltonian + hamiltonian.conj().T) / 2


def exact_coupling_strength(
    first: SiteLevels, second: SiteLevels, cross: np.ndarray,
) -> float:
    """
    Get g from the eigenvalues of the coupled low-energy Hamiltonian.

    E_gg and E_ee belong to the eigenstates overlapping most with |gg>
    and |ee>. E_ge + E_eg is the sum of the two eigenvalues with the most
    weight in span{|ge>, |eg>}.
    """
    m2 = len(second.energies)
    hamiltonian = _low_energy_hamiltonian(first, second, cross)
    energies, vectors = np.linalg.eigh(hamiltonian)
    weights = np.abs(vectors) ** 2

    gg, ge, eg, ee = 0, 1, m2, m2 + 1
    e_gg = energies[np.argmax(weights[gg])]
    e_ee = energies[np.argmax(weights[ee])]
    single = np.argsort(weights[ge] + weights[eg])[-2:]
    return float((e_gg + e_ee - energies[single].sum()) / 4)


def _pair_network(
    spec1: FluxQubitSpec, spec2: FluxQubitSpec, capacitance: float,
) -> Tuple[CouplerGraph, np.ndarray]:
    graph = CouplerGraph([spec1, spec2], [(0, 1, capacitance)])
    return graph, full_inverse_capacitance(graph)


def pair_coupling_g(
    spec1: FluxQubitSpec,
    spec2: FluxQubitSpec,
    capacitance: float,
    voltage1: Optional[float] = None,
    voltage2: Optional[float] = None,
    *,
    cutoff: int = DEFAULT_CUTOFF,
) -> PairCoupling:
    """
    Get the Ising coupling of two qubits joined by one coupler.

    Each qubit is solved with the dressed charging energies of the pair
    network. The pair Hamiltonian is projected onto the four product
    states and g keeps only the diagonal of that projection.

    :param spec1: The first qubit
    :param spec2: The second qubit
    :param capacitance: Coupling capacitance in fF
    :param voltage1: Gate voltage of the first qubit (default: its own)
    :param voltage2: Gate voltage of the second qubit (default: its own)
    :param cutoff: The charge cutoff
    :returns: g, the two tunneling energies and the full projected 4x4
    """
    if voltage1 is not None:
        spec1 = replace(spec1, voltage=voltage1)
    if voltage2 is not None:
        spec2 = replace(spec2, voltage=voltage2)
    _, energies = _pair_network(spec1, spec2, capacitance)
    first = site_levels(
        spec1, site_charging_energies(energies, 0), cutoff=cutoff)
    second = site_levels(
        spec2, site_charging_energies(energies, 1), cutoff=cutoff)
    cross = cross_charging_energies(energies, 0, 1)

    g = coupling_strength(first, second, cross)
    delta1 = float(first.energies[1] - first.energies[0])
    delta2 = float(second.energies[1] - second.energies[0])
    logger.debug(
        f'Pair coupling at Ve=({spec1.voltage}, {spec2.voltage}) uV: '
        f'g={g:.6g} GHz')
    return PairCoupling(
        g, delta1, delta2, projected_block(first, second, cross))


def exact_pair_coupling(
    spec1: FluxQubitSpec,
    spec2: FluxQubitSpec,
    capacitance: float,
    voltage1: Optional[float] = None,
    voltage2: Optional[float] = None,
    *,
    cutoff: int = DEFAULT_CUTOFF,
    levels: int = ORACLE_LEVELS,
) -> float:
    """
    Get g from a diagonalization of the coupled low-energy problem.

    ``levels`` states are kept on each qubit.
    """
    if voltage1 is not None:
        spec1 = replace(spec1, voltage=voltage1)
    if voltage2 is not None:
        spec2 = replace(spec2, voltage=voltage2)
    _, energies = _pair_network(spec1, spec2, capacitance)
    first = site_levels(
        spec1, site_charging_energies(energies, 0), levels, cutoff)
    second = site_levels(
        spec2, site_charging_energies(energies, 1), levels, cutoff)
    return exact_coupling_strength(
        first, second, cross_charging_energies(energies, 0, 1))


@dataclass(frozen=True)
class ChainCouplings:
    """Couplings g(n) between chain sites n apart."""

    capacitance: float
    voltage: float
    g: Tuple[float, ...]

    @property
    def ratio(self) -> float:
        """
        Get the coupling ratio R = g(2) / g(1).

        :raises CouplingRatioError: If |g(1)| is below the numeric floor
        """
        if len(self.g) < 2:
            raise CouplingRatioError(
                'A coupling ratio needs at least three sites')
        if abs(self.g[0]) < PRUNE_THRESHOLD:
            raise CouplingRatioError(
                f'Nearest neighbour coupling {self.g[0]:.3g} GHz is too '
                'weak to define a coupling ratio')
        return self.g[1] / self.g[0]


def chain_couplings(
    size: int,
    capacitance: float,
    voltage: float,
    template: FluxQubitSpec,
    *,
    cutoff: int = DEFAULT_CUTOFF,
) -> ChainCouplings:
    """
    Get g(n) for n = 1..N-1 on a uniformly powered chain.

    Each g(n) is evaluated between the pair of sites n apart that sits
    closest to the middle of the chain.
    """
    if size < 3:
        raise ValueError(f'A chain needs at least 3 sites, got {size}')
    spec = replace(template, voltage=voltage)
    graph = chain_graph(size, capacitance, spec)
    energies = full_inverse_capacitance(graph)

    levels: Dict[int, SiteLevels] = {}

    def _levels(site: int) -> SiteLevels:
        if site not in levels:
            levels[site] = site_levels(
                spec, site_charging_energies(energies, site),
                cutoff=cutoff)
        return levels[site]

    g = []
    for distance in range(1, size):
        i = (size - 1 - distance) // 2
        j = i + distance
        g.append(coupling_strength(
            _levels(i), _levels(j), cross_charging_energies(energies, i, j)))
    return ChainCouplings(capacitance, voltage, tuple(g))


@dataclass(frozen=True)
class EffectiveIsingModel:
    """
    H = sum_l Delta_l / 2 Z_l + sum_{l<l'} g_ll' Z_l Z_l'.

    Pairs are unordered and counted once.
    """

    deltas: Tuple[float, ...]
    couplings: Mapping[Tuple[int, int], float]
    distances: Mapping[Tuple[int, int], int] = field(default_factory=dict)
    voltages: Tuple[float, ...] = ()

    @property
    def size(self) -> int:
        """Get the number of sites."""
        return len(self.deltas)

    def coupling(self, i: int, j: int) -> float:
        """Get g between two sites, 0 when the pair is absent."""
        return self.couplings.get((min(i, j), max(i, j)), 0.0)

    def distance(self, i: int, j: int) -> int:
        """Get the site distance of a pair, |i - j| if not recorded."""
        return self.distances.get((min(i, j), max(i, j)), abs(i - j))

    def pairs(self) -> List[Tuple[int, int, float]]:
        """Get the (i, j, g) triples in sorted order."""
        return [(i, j, g) for (i, j), g in sorted(self.couplings.items())]

    def restricted(self, max_distance: int) -> 'EffectiveIsingModel':
        """Get a copy keeping only pairs at most ``max_distance`` apart."""
        return replace(self, couplings={
            pair: g for pair, g in self.couplings.items()
            if self.distance(*pair) <= max_distance})

    def to_dict(self) -> Dict[str, Any]:
        """Export the model as a JSON-ready document."""
        return {
            'sites': [float(d) for d in self.deltas],
            'voltages': [float(v) for v in self.voltages],
            'pairs': [
                {'i': i, 'j': j, 'distance': self.distance(i, j),
                 'g_GHz': float(g)}
                for i, j, g in self.pairs()],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'EffectiveIsingModel':
        """Load a model exported by :meth:`to_dict`."""
        couplings = {}
        distances = {}
        for pair in data.get('pairs', ()):
            key = (min(pair['i'], pair['j']), max(pair['i'], pair['j']))
            couplings[key] = float(pair['g_GHz'])
            distances[key] = int(pair['distance'])
        return cls(
            tuple(float(d) for d in data['sites']), couplings, distances,
            tuple(float(v) for v in data.get('voltages', ())))


def _prune(couplings: Mapping[Tuple[int, int], float]):
    return {
        pair: g for pair, g in couplings.items()
        if abs(g) >= PRUNE_THRESHOLD}


def effective_model(
    graph: CouplerGraph,
    voltages: Optional[Mapping[int, float]] = None,
    *,
    cutoff: int = DEFAULT_CUTOFF,
    threads: int = 1,
) -> EffectiveIsingModel:
    """
    Derive the effective Ising model of a powered network.

    :param graph: The network
    :param voltages: Gate voltage per site in uV; missing sites keep
      their own voltage
    :param cutoff: The charge cutoff
    :param threads: Number of sites solved concurrently
    """
    if voltages is not None:
        graph = graph.with_voltages(voltages)
    energies = full_inverse_capacitance(graph)
    specs = graph.specs
    for site, spec in enumerate(specs):
        if abs(spec.reduced_flux - 0.5) > 1e-12:
            logger.warning(
                f'Site {site} is at f={spec.flux}, not the optimal point')

    logger.info(f'Solving {len(specs)} dressed sites')
    levels = parallel_map(
        lambda site: site_levels(
            specs[site], site_charging_energies(energies, site),
            cutoff=cutoff),
        range(len(specs)), threads)

    couplings = {}
    distances = {}
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            couplings[(i, j)] = coupling_strength(
                levels[i], levels[j], cross_charging_energies(energies, i, j))
            distances[(i, j)] = graph.distance(i, j)
    couplings = _prune(couplings)
    return EffectiveIsingModel(
        tuple(float(lv.energies[1] - lv.energies[0]) for lv in levels),
        couplings,
        {pair: distances[pair] for pair in couplings},
        tuple(spec.voltage for spec in specs))


def geometric_model(
    graph: CouplerGraph,
    g1: float,
    ratio: float,
    *,
    delta: float = 0.0,
    powered: Optional[Iterable[int]] = None,
    max_distance: Optional[int] = None,
) -> EffectiveIsingModel:
    """
    Build a model with g(n) = g1 * R^(n-1) between sites n apart.

    :param graph: The network, supplying the site metric
    :param g1: Nearest neighbour coupling in GHz
    :param ratio: The coupling ratio R
    :param delta: Tunneling energy of every site
    :param powered: Sites that may couple (default: all)
    :param max_distance: Longest coupled distance (default: unbounded)
    """
    sites = range(len(graph))
    allowed = set(sites if powered is None else powered)
    couplings = {}
    distances = {}
    for i in sites:
        for j in range(i + 1, len(graph)):
            if i not in allowed or j not in allowed:
                continue
            distance = graph.distance(i, j)
            if max_distance is not None and distance > max_distance:
                continue
            couplings[(i, j)] = g1 * ratio ** (distance - 1)
            distances[(i, j)] = distance
    couplings = _prune(couplings)
    return EffectiveIsingModel(
        (delta,) * len(graph), couplings,
        {pair: distances[pair] for pair in couplings},
        ())


def decay_deviation(couplings: ChainCouplings, max_distance: int = 4):
    """
    Get the largest relative deviation of |g(n)| from |g(1)| R^(n-1).

    :param couplings: The chain couplings
    :param max_distance: Largest n compared
    """
    ratio = couplings.ratio
    g1 = couplings.g[0]
    worst = 0.0
    for n, g in enumerate(couplings.g[:max_distance], start=1):
        expected = g1 * ratio ** (n - 1)
        if expected == 0:
            continue
        worst = max(worst, abs(abs(g) - abs(expected)) / abs(expected))
    return worst if not math.isnan(worst) else math.inf
