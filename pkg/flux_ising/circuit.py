# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""
Charge-basis model of one four-junction flux qubit.

The loop runs ground - JJ1 - a - JJ2 - b - JJ3 - c - JJ4 - ground, where
node b is the superconducting island. The external flux is gauged
entirely into JJ4, so the fluxoid constraint holds identically and the
three node charges (n_a, n_b, n_c) are independent quantum numbers.
"""

from collections import namedtuple
from dataclasses import dataclass
import math
from typing import Dict
from typing import Optional
from typing import Tuple

from colcon_core.logging import colcon_logger
from flux_ising.cache import EigenCache
from flux_ising.units import capacitance_from_charging_energy
from flux_ising.units import charging_energy_matrix
from flux_ising.units import DomainError
from flux_ising.units import offset_charge
import numpy as np
from scipy import linalg
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

logger = colcon_logger.getChild(__name__)

"""Smallest cutoff considered converged by :func:`converge_cutoff`"""
MIN_CUTOFF = 3

"""Cutoff used when nothing else is requested"""
DEFAULT_CUTOFF = 10

"""Largest cutoff :func:`converge_cutoff` will diagonalize"""
MAX_CUTOFF = 15

"""Largest dimension diagonalized densely when method is 'auto'"""
DENSE_LIMIT = 4000

"""Eigenvalues closer than this (GHz) are treated as degenerate"""
DEGENERACY_GAP = 1e-9

"""Node index of the island within a qubit's three charge nodes"""
ISLAND = 1

SparseHermitianOperator = sparse.csr_matrix

Junction = namedtuple('Junction', ('ej', 'cj'))

Eigenpairs = namedtuple('Eigenpairs', ('energies', 'vectors'))

CutoffCertificate = namedtuple(
    'CutoffCertificate', ('cutoff', 'tolerance', 'shift', 'levels'))


class ModelError(RuntimeError):
    """The circuit parameters describe a degenerate network."""


class BasisError(RuntimeError):
    """The charge basis cannot represent the requested operator."""


class SolverError(RuntimeError):
    """The eigensolver failed to reach the requested accuracy."""

    def __init__(self, message: str, residual: float = math.nan):
        """
        Initialize a new instance of a SolverError.

        :param message: Description of the failure
        :param residual: Largest eigenpair residual that was achieved
        """
        super().__init__(message)
        self.residual = residual


class ConvergenceError(RuntimeError):
    """No cutoff below the cap satisfies the convergence tolerance."""


@dataclass(frozen=True)
class FluxQubitSpec:
    """Physical parameters of one four-junction flux qubit."""

    ej1: float = 200.0
    alpha: float = 0.2
    ratio: float = 80.0
    cg: float = 0.077
    flux: float = 0.5
    voltage: float = 0.0
    island_load: float = 0.0

    def __post_init__(self):  # noqa: D105
        if not self.ej1 > 0:
            raise DomainError(f'Ej1 must be positive, got {self.ej1!r}')
        if not 0 < self.alpha <= 1:
            raise DomainError(
                f'alpha must be in (0, 1], got {self.alpha!r}')
        if not self.ratio > 0:
            raise DomainError(
                f'Ej/Ec ratio must be positive, got {self.ratio!r}')
        if self.cg < 0:
            raise DomainError(f'Cg must be non-negative, got {self.cg!r}')
        if self.island_load < 0:
            raise DomainError(
                f'island_load must be non-negative, got {self.island_load!r}')

    @property
    def reduced_flux(self) -> float:
        """Get the flux folded into [0, 1)."""
        return self.flux % 1.0

    @property
    def gate_charge(self) -> float:
        """Get the island offset charge Cg Ve / 2e."""
        return offset_charge(self.cg, self.voltage)


def junction_set_from_spec(
    ej1: float, alpha: float, ratio: float,
) -> Tuple[Junction, Junction, Junction, Junction]:
    """
    Derive the four junctions of the loop.

    JJ1 and JJ4 share Ej1 and the capacitance whose charging energy is
    Ej1 / ratio. JJ2 and JJ3 are alpha times both.

    :returns: A tuple of (Ej GHz, Cj fF) pairs for JJ1..JJ4
    """
    if not ej1 > 0 or not 0 < alpha <= 1 or not ratio > 0:
        raise DomainError(
            f'Invalid junction parameters: Ej1={ej1!r}, alpha={alpha!r}, '
            f'ratio={ratio!r}')
    c1 = capacitance_from_charging_energy(ej1 / ratio)
    large = Junction(ej1, c1)
    small = Junction(alpha * ej1, alpha * c1)
    return large, small, small, large


def node_capacitance_matrix(spec: FluxQubitSpec) -> np.ndarray:
    """
    Build the 3x3 capacitance matrix of nodes (a, b, c) in fF.

    :raises ModelError: If the matrix is not positive definite
    """
    jj1, jj2, jj3, jj4 = junction_set_from_spec(
        spec.ej1, spec.alpha, spec.ratio)
    island = jj2.cj + jj3.cj + spec.cg + spec.island_load
    matrix = np.array([
        [jj1.cj + jj2.cj, -jj2.cj, 0.0],
        [-jj2.cj, island, -jj3.cj],
        [0.0, -jj3.cj, jj3.cj + jj4.cj],
    ])
    _require_positive_definite(matrix)
    return matrix


def _require_positive_definite(matrix: np.ndarray) -> None:
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise ModelError(
            'Capacitance matrix is not positive definite') from e


class ChargeBasis:
    """Product basis of integer node charges, each in [-nc, nc]."""

    LABELS = ('a', 'b', 'c')

    def __init__(self, cutoff: int):
        """
        Initialize a new instance of a ChargeBasis.

        :param cutoff: The charge cutoff nc
        """
        if cutoff < 1:
            raise BasisError(
                f'A cutoff of {cutoff} cannot host charge shift operators')
        if cutoff < MIN_CUTOFF:
            logger.warning(
                f'Charge cutoff {cutoff} is below the smallest converged '
                f'cutoff {MIN_CUTOFF}')
        self.cutoff = cutoff

    @property
    def width(self) -> int:
        """Get the number of charge states per node."""
        return 2 * self.cutoff + 1

    @property
    def dimension(self) -> int:
        """Get the dimension of the product basis."""
        return self.width ** 3

    def index(self, na: int, nb: int, nc: int) -> int:
        """Get the basis index of the charge triple (na, nb, nc)."""
        for n in (na, nb, nc):
            if abs(n) > self.cutoff:
                raise BasisError(
                    f'Charge {n} is outside the cutoff {self.cutoff}')
        w, c = self.width, self.cutoff
        return ((na + c) * w + (nb + c)) * w + (nc + c)

    def charges(self) -> np.ndarray:
        """Get a (3, dimension) array of node charges for every state."""
        values = np.arange(-self.cutoff, self.cutoff + 1)
        grid = np.meshgrid(values, values, values, indexing='ij')
        return np.stack([g.ravel() for g in grid])

    def _raising(self) -> sparse.csr_matrix:
        # exp(i theta) |n> = |n + 1>
        return sparse.diags(
            np.ones(self.width - 1), -1, format='csr', dtype=complex)

    def node_operator(self, node: int, op) -> sparse.csr_matrix:
        """Embed a single-node operator at ``node`` into the product space."""
        parts = [sparse.identity(self.width, format='csr', dtype=complex)
                 for _ in self.LABELS]
        parts[node] = op
        return sparse.kron(
            parts[0], sparse.kron(parts[1], parts[2]), format='csr')

    def raising(self, node: int) -> sparse.csr_matrix:
        """Get exp(i theta) acting on ``node``."""
        return self.node_operator(node, self._raising())


def gate_offsets(spec: FluxQubitSpec) -> np.ndarray:
    """Get the offset charges of nodes (a, b, c); only the island has one."""
    return np.array([0.0, spec.gate_charge, 0.0])


def kinetic_diagonal(
    basis: ChargeBasis,
    charging_energies: np.ndarray,
    offsets: np.ndarray,
) -> np.ndarray:
    """Get the diagonal 4 sum_ij Ec_ij (n_i - ng_i)(n_j - ng_j) in GHz."""
    shifted = basis.charges() - offsets[:, np.newaxis]
    return 4 * np.einsum(
        'id,ij,jd->d', shifted, charging_energies, shifted)


def build_hamiltonian(
    spec: FluxQubitSpec,
    basis: ChargeBasis,
    *,
    charging_energies: Optional[np.ndarray] = None,
) -> SparseHermitianOperator:  # type: ignore[valid-type]
    """
    Build the charge-basis Hamiltonian of one qubit.

    :param spec: The qubit parameters
    :param basis: The truncated charge basis
    :param charging_energies: Optional 3x3 charging energy matrix (GHz)
      replacing the one derived from the qubit's own capacitances, used
      for qubits dressed by a coupling network
    :returns: A sparse Hermitian matrix in GHz
    """
    if charging_energies is None:
        charging_energies = charging_energy_matrix(
            node_capacitance_matrix(spec))
    jj1, jj2, jj3, jj4 = junction_set_from_spec(
        spec.ej1, spec.alpha, spec.ratio)

    raise_a = basis.raising(0)
    raise_b = basis.raising(1)
    raise_c = basis.raising(2)
    flux_phase = np.exp(2j * np.pi * spec.reduced_flux)

    # Each term is the exp(+i phi) half of a cosine; the Hermitian
    # conjugate supplies the other half.
    tunneling = (
        jj1.ej * raise_a +
        jj2.ej * (raise_b @ raise_a.conj().T) +
        jj3.ej * (raise_c @ raise_b.conj().T) +
        jj4.ej * flux_phase * raise_c)
    tunneling = tunneling + tunneling.conj().T

    diagonal = kinetic_diagonal(
        basis, charging_energies, gate_offsets(spec))
    diagonal = diagonal + sum(j.ej for j in (jj1, jj2, jj3, jj4))

    hamiltonian = sparse.diags(diagonal, 0, format='csr', dtype=complex)
    hamiltonian = hamiltonian - 0.5 * tunneling
    hamiltonian = hamiltonian.tocsr()
    hamiltonian.sum_duplicates()
    return hamiltonian


def flux_derivative(
    spec: FluxQubitSpec, basis: ChargeBasis,
) -> SparseHermitianOperator:  # type: ignore[valid-type]
    """Get dH/df, the flux derivative of :func:`build_hamiltonian`."""
    jj4 = junction_set_from_spec(spec.ej1, spec.alpha, spec.ratio)[3]
    term = np.exp(2j * np.pi * spec.reduced_flux) * basis.raising(2)
    return (-1j * np.pi * jj4.ej * (term - term.conj().T)).tocsr()


def charge_operator(
    basis: ChargeBasis, node: int = ISLAND, offset: float = 0.0,
) -> SparseHermitianOperator:  # type: ignore[valid-type]
    """Get the diagonal operator n - n_g of one node's charge."""
    return sparse.diags(
        basis.charges()[node] - offset, 0, format='csr', dtype=complex)


def hermiticity_defect(operator) -> float:
    """Get the largest |H_ij - conj(H_ji)| of an operator."""
    difference = operator - operator.conj().T
    if difference.nnz == 0:
        return 0.0
    return float(abs(difference).max())


def _gershgorin_lower_bound(operator) -> float:
    diagonal = operator.diagonal().real
    off_diagonal = np.asarray(abs(operator).sum(axis=1)).ravel() - \
        np.abs(diagonal)
    return float(np.min(diagonal - off_diagonal))


def _operator_scale(operator) -> float:
    return max(1.0, float(np.max(np.asarray(abs(operator).sum(axis=1)))))


def _canonicalize(
    energies: np.ndarray, vectors: np.ndarray,
) -> np.ndarray:
    vectors = np.array(vectors, dtype=complex)
    start = 0
    while start < len(energies):
        stop = start + 1
        while stop < len(energies) and \
                energies[stop] - energies[stop - 1] < DEGENERACY_GAP:
            stop += 1
        if stop - start > 1:
            q, _ = np.linalg.qr(vectors[:, start:stop])
            vectors[:, start:stop] = q
        start = stop

    for idx in range(vectors.shape[1]):
        column = vectors[:, idx]
        pivot = column[np.argmax(np.abs(column))]
        vectors[:, idx] = column * (abs(pivot) / pivot)
        vectors[:, idx] /= np.linalg.norm(vectors[:, idx])
    return vectors


def _residuals(operator, energies, vectors) -> np.ndarray:
    applied = operator @ vectors
    return np.linalg.norm(applied - vectors * energies, axis=0)


def lowest_eigenpairs(
    operator, k: int, *, method: str = 'auto',
) -> Eigenpairs:
    """
    Find the ``k`` lowest eigenpairs of a sparse Hermitian operator.

    Operators up to :data:`DENSE_LIMIT` are diagonalized densely when
    ``method`` is 'auto'. Larger ones use ARPACK Lanczos iterations in
    shift-invert mode about a Gershgorin lower bound of the spectrum.
    Eigenvectors inside degenerate clusters are re-orthonormalized and
    every eigenvector's largest component is made real and positive.

    :param operator: The sparse Hermitian operator
    :param k: Number of eigenpairs, 1 <= k < dimension
    :param method: One of 'auto', 'dense' or 'sparse'
    :returns: Ascending energies and unit-norm eigenvectors as columns
    :raises SolverError: If the solver does not converge or the achieved
      residual is above 1e-8 times the operator scale
    """
    dimension = operator.shape[0]
    if not 1 <= k < dimension:
        raise ValueError(
            f'Cannot find {k} eigenpairs of a {dimension}-dimensional '
            'operator')
    if method not in ('auto', 'dense', 'sparse'):
        raise ValueError(f"Unknown eigensolver method '{method}'")
    if method == 'auto':
        method = 'dense' if dimension <= DENSE_LIMIT else 'sparse'

    if method == 'dense':
        energies, vectors = linalg.eigh(
            operator.toarray(), subset_by_index=[0, k - 1])
    else:
        sigma = _gershgorin_lower_bound(operator) - 1.0
        rng = np.random.default_rng(dimension)
        start = rng.standard_normal(dimension).astype(operator.dtype)
        try:
            energies, vectors = sparse_linalg.eigsh(
                operator, k=k, sigma=sigma, which='LM', v0=start, tol=0)
        except sparse_linalg.ArpackNoConvergence as e:
            residual = math.nan
            if len(e.eigenvalues):
                residual = float(np.max(_residuals(
                    operator, e.eigenvalues, e.eigenvectors)))
            raise SolverError(
                f'Eigensolver did not converge for {k} eigenpairs of a '
                f'{dimension}-dimensional operator (residual {residual})',
                residual) from e

    order = np.argsort(energies)
    energies = np.asarray(energies, dtype=float)[order]
    vectors = _canonicalize(energies, np.asarray(vectors)[:, order])

    residual = float(np.max(_residuals(operator, energies, vectors)))
    threshold = 1e-8 * _operator_scale(operator)
    if residual > threshold:
        raise SolverError(
            f'Eigenpair residual {residual:.3e} exceeds {threshold:.3e}',
            residual)
    logger.debug(
        f'Found {k} eigenpairs of a {dimension}-dimensional operator '
        f'({method}, residual {residual:.2e})')
    return Eigenpairs(energies, vectors)


_cache: Optional[EigenCache] = None


def configure_cache(cache: Optional[EigenCache]) -> None:
    """
    Set the eigensolve cache used by :func:`eigensystem`.

    :param cache: An eigensolve cache, or None to
      disable caching
    """
    global _cache
    _cache = cache


def eigensystem(
    spec: FluxQubitSpec,
    cutoff: int = DEFAULT_CUTOFF,
    levels: int = 3,
    *,
    charging_energies: Optional[np.ndarray] = None,
    method: str = 'auto',
) -> Eigenpairs:
    """
    Diagonalize one qubit, going through the eigensolve cache if set.

    :param spec: The qubit parameters
    :param cutoff: The charge cutoff nc
    :param levels: Number of lowest eigenpairs
    :param charging_energies: Optional dressed 3x3 charging energies
    :param method: The eigensolver method, see :func:`lowest_eigenpairs`
    """
    key = None
    if _cache is not None:
        key = _cache.key(
            spec, cutoff, levels, charging_energies, method=method)
        cached = _cache.load(key)
        if cached is not None:
            return Eigenpairs(*cached)

    basis = ChargeBasis(cutoff)
    hamiltonian = build_hamiltonian(
        spec, basis, charging_energies=charging_energies)
    pairs = lowest_eigenpairs(hamiltonian, levels, method=method)

    if _cache is not None and key is not None:
        _cache.store(key, pairs)
    return pairs


def converge_cutoff(
    spec: FluxQubitSpec,
    k: int,
    tol: float,
    *,
    max_cutoff: int = MAX_CUTOFF,
    charging_energies: Optional[np.ndarray] = None,
) -> CutoffCertificate:
    """
    Find the smallest cutoff whose k lowest energies are stable.

    A cutoff nc is accepted when none of the k lowest energies moves by
    ``tol`` or more between nc and nc + 2. Candidates double from
    :data:`MIN_CUTOFF` until one is accepted, then the gap to the last
    rejected candidate is bisected. No eigensolve runs above
    ``max_cutoff``, so the largest certifiable cutoff is max_cutoff - 2.

    :param spec: The qubit parameters
    :param k: Number of energies that must be stable
    :param tol: Tolerance in GHz
    :param max_cutoff: Largest cutoff that may be diagonalized
    :returns: The certificate with the chosen cutoff and its shift
    :raises ConvergenceError: If no cutoff up to ``max_cutoff`` is accepted
    """
    if not tol > 0:
        raise DomainError(f'Tolerance must be positive, got {tol!r}')
    if math.isinf(tol):
        return CutoffCertificate(MIN_CUTOFF, tol, 0.0, k)

    energies: Dict[int, np.ndarray] = {}

    def _energies(cutoff: int) -> np.ndarray:
        if cutoff not in energies:
            energies[cutoff] = eigensystem(
                spec, cutoff, k,
                charging_energies=charging_energies).energies
        return energies[cutoff]

    def _shift(cutoff: int) -> float:
        return float(np.max(np.abs(
            _energies(cutoff + 2) - _energies(cutoff))))

    # nc is confirmed against nc + 2, which must not exceed the cap
    top = max_cutoff - 2
    if top < MIN_CUTOFF:
        raise ConvergenceError(
            f'A cap of {max_cutoff} leaves no cutoff from {MIN_CUTOFF} to '
            'confirm')

    rejected = None
    candidate = MIN_CUTOFF
    while True:
        shift = _shift(candidate)
        logger.debug(
            f'Cutoff {candidate}: energies shift by {shift:.3e} GHz')
        if shift < tol:
            break
        rejected = candidate
        if candidate >= top:
            raise ConvergenceError(
                f'Energies still shift by {shift:.3e} GHz between cutoffs '
                f'{top} and {max_cutoff}')
        candidate = min(2 * candidate, top)

    if rejected is not None:
        low, high = rejected, candidate
        while high - low > 1:
            middle = (low + high) // 2
            if _shift(middle) < tol:
                high = middle
            else:
                low = middle
        candidate = high

    shift = _shift(candidate)
    logger.info(
        f'Certified cutoff {candidate} (shift {shift:.3e} GHz < {tol} GHz)')
    return CutoffCertificate(candidate, tol, shift, k)
