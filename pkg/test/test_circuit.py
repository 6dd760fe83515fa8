# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from dataclasses import replace
import math

from flux_ising import circuit
from flux_ising.circuit import BasisError
from flux_ising.circuit import build_hamiltonian
from flux_ising.circuit import ChargeBasis
from flux_ising.circuit import converge_cutoff
from flux_ising.circuit import ConvergenceError
from flux_ising.circuit import Eigenpairs
from flux_ising.circuit import eigensystem
from flux_ising.circuit import flux_derivative
from flux_ising.circuit import FluxQubitSpec
from flux_ising.circuit import gate_offsets
from flux_ising.circuit import hermiticity_defect
from flux_ising.circuit import junction_set_from_spec
from flux_ising.circuit import lowest_eigenpairs
from flux_ising.circuit import MAX_CUTOFF
from flux_ising.circuit import MIN_CUTOFF
from flux_ising.circuit import node_capacitance_matrix
from flux_ising.units import charging_energy
from flux_ising.units import DomainError
from flux_ising.units import offset_charge
import numpy as np
import pytest
from scipy import sparse


def test_junction_set():
    jj1, jj2, jj3, jj4 = junction_set_from_spec(200.0, 0.2, 80.0)
    assert jj1 == jj4
    assert jj2 == jj3
    assert jj2.ej == pytest.approx(40.0)
    assert jj2.cj == pytest.approx(0.2 * jj1.cj)
    assert charging_energy(jj1.cj) == pytest.approx(2.5)

    identical = junction_set_from_spec(200.0, 1.0, 80.0)
    assert len(set(identical)) == 1

    with pytest.raises(DomainError):
        junction_set_from_spec(200.0, 0.0, 80.0)


def test_spec_validation():
    with pytest.raises(DomainError):
        FluxQubitSpec(alpha=1.5)
    with pytest.raises(DomainError):
        FluxQubitSpec(ej1=-1.0)
    with pytest.raises(DomainError):
        FluxQubitSpec(cg=-0.1)

    spec = FluxQubitSpec(flux=1.49, voltage=1000.0)
    assert spec.reduced_flux == pytest.approx(0.49)
    assert spec.gate_charge == pytest.approx(offset_charge(0.077, 1000.0))
    assert list(gate_offsets(spec)) == [0.0, spec.gate_charge, 0.0]


def test_node_capacitance_matrix():
    spec = FluxQubitSpec(island_load=0.5)
    matrix = node_capacitance_matrix(spec)
    assert np.allclose(matrix, matrix.T)
    assert np.all(np.linalg.eigvalsh(matrix) > 0)

    jj1, jj2, jj3, _ = junction_set_from_spec(
        spec.ej1, spec.alpha, spec.ratio)
    assert matrix[1, 1] == pytest.approx(jj2.cj + jj3.cj + 0.077 + 0.5)
    assert matrix[0, 2] == 0.0


def test_charge_basis():
    basis = ChargeBasis(3)
    assert basis.width == 7
    assert basis.dimension == 343
    assert basis.index(-3, -3, -3) == 0
    assert basis.index(3, 3, 3) == 342
    assert list(basis.charges()[:, basis.index(1, -2, 0)]) == [1, -2, 0]

    with pytest.raises(BasisError):
        basis.index(4, 0, 0)
    with pytest.raises(BasisError):
        ChargeBasis(0)


def test_hamiltonian_is_hermitian():
    basis = ChargeBasis(3)
    for spec in (
        FluxQubitSpec(),
        FluxQubitSpec(flux=0.37, voltage=500.0),
        FluxQubitSpec(alpha=0.7, voltage=-250.0, island_load=0.1),
    ):
        hamiltonian = build_hamiltonian(spec, basis)
        assert hamiltonian.shape == (343, 343)
        assert hermiticity_defect(hamiltonian) <= 1e-12


def test_flux_derivative():
    basis = ChargeBasis(3)
    spec = FluxQubitSpec(flux=0.47)
    step = 1e-6
    difference = (
        build_hamiltonian(replace(spec, flux=0.47 + step), basis) -
        build_hamiltonian(replace(spec, flux=0.47 - step), basis)
    ) / (2 * step)
    derivative = flux_derivative(spec, basis)
    assert hermiticity_defect(derivative) <= 1e-12
    assert abs(difference - derivative).max() < 1e-5


def test_flux_symmetry():
    # Charge conjugation maps f to -f at zero gate charge
    below = eigensystem(FluxQubitSpec(flux=0.49), 3, 3).energies
    above = eigensystem(FluxQubitSpec(flux=0.51), 3, 3).energies
    assert np.allclose(below, above, rtol=0, atol=1e-9)

    folded = eigensystem(FluxQubitSpec(flux=1.51), 3, 3).energies
    assert np.allclose(above, folded, rtol=0, atol=1e-9)


def test_dense_and_sparse_agree():
    spec = FluxQubitSpec(flux=0.49, voltage=500.0)
    dense = eigensystem(spec, 4, 3, method='dense')
    lanczos = eigensystem(spec, 4, 3, method='sparse')
    assert np.allclose(dense.energies, lanczos.energies, rtol=0, atol=1e-7)
    overlaps = np.abs(dense.vectors.conj().T @ lanczos.vectors)
    assert np.allclose(np.diag(overlaps), 1.0, atol=1e-6)


@pytest.mark.parametrize('method', ('dense', 'sparse'))
def test_lowest_eigenpairs(method):
    values = np.random.default_rng(7).permutation(50).astype(float)
    operator = sparse.diags(values, 0, format='csr', dtype=complex)
    pairs = lowest_eigenpairs(operator, 3, method=method)
    assert np.allclose(pairs.energies, [0.0, 1.0, 2.0], atol=1e-9)
    for level in range(3):
        position = int(np.argmin(np.abs(values - level)))
        assert pairs.vectors[position, level] == pytest.approx(1.0)


def test_lowest_eigenpairs_degenerate():
    values = np.array([1.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    operator = sparse.diags(values, 0, format='csr', dtype=complex)
    pairs = lowest_eigenpairs(operator, 2, method='dense')
    assert np.allclose(pairs.energies, [1.0, 1.0])
    gram = pairs.vectors.conj().T @ pairs.vectors
    assert np.allclose(gram, np.eye(2), atol=1e-12)


def test_lowest_eigenpairs_arguments():
    operator = sparse.identity(4, format='csr', dtype=complex)
    with pytest.raises(ValueError):
        lowest_eigenpairs(operator, 0)
    with pytest.raises(ValueError):
        lowest_eigenpairs(operator, 4)
    with pytest.raises(ValueError):
        lowest_eigenpairs(operator, 2, method='magic')


def test_converge_cutoff():
    spec = FluxQubitSpec()
    certificate = converge_cutoff(spec, 3, math.inf)
    assert certificate.cutoff == MIN_CUTOFF

    with pytest.raises(DomainError):
        converge_cutoff(spec, 3, 0.0)
    with pytest.raises(ConvergenceError):
        converge_cutoff(spec, 3, 1e-15, max_cutoff=MIN_CUTOFF)


def _fake_eigensystem(monkeypatch, energy):
    solved = []

    def _eigensystem(spec, cutoff, levels, *, charging_energies=None):
        solved.append(cutoff)
        return Eigenpairs(np.full(levels, energy(cutoff)), None)

    monkeypatch.setattr(circuit, 'eigensystem', _eigensystem)
    return solved


def test_converge_cutoff_bisects(monkeypatch):
    solved = _fake_eigensystem(monkeypatch, lambda cutoff: 2.0 ** -cutoff)
    certificate = converge_cutoff(FluxQubitSpec(), 2, 0.01)
    assert certificate.cutoff == 7
    assert certificate.shift == pytest.approx(2.0 ** -7 - 2.0 ** -9)
    assert max(solved) <= MAX_CUTOFF


def test_converge_cutoff_stays_below_cap(monkeypatch):
    solved = _fake_eigensystem(monkeypatch, float)
    with pytest.raises(ConvergenceError):
        converge_cutoff(FluxQubitSpec(), 2, 1.0)
    assert max(solved) == MAX_CUTOFF

    solved.clear()
    with pytest.raises(ConvergenceError):
        converge_cutoff(FluxQubitSpec(), 2, 1.0, max_cutoff=9)
    assert max(solved) == 9
