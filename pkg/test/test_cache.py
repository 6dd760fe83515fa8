# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from flux_ising.cache import CACHE_ENVIRONMENT_VARIABLE
from flux_ising.cache import cache_from_environment
from flux_ising.cache import EigenCache
from flux_ising.circuit import configure_cache
from flux_ising.circuit import eigensystem
from flux_ising.circuit import FluxQubitSpec
import numpy as np


def test_store_and_load(tmp_path):
    cache = EigenCache(tmp_path / 'eig')
    key = cache.key(FluxQubitSpec(), 3, 3)
    assert cache.load(key) is None
    assert cache.misses == 1

    energies = np.array([-1.0, 0.5, 2.0])
    vectors = np.arange(12).reshape(4, 3) * (1 + 2j)
    cache.store(key, (energies, vectors))
    loaded = cache.load(key)
    assert loaded is not None
    assert np.array_equal(loaded[0], energies)
    assert np.array_equal(loaded[1], vectors)
    assert cache.hits == 1
    assert not list((tmp_path / 'eig').glob('*.tmp'))


def test_keys():
    spec = FluxQubitSpec()
    key = EigenCache.key(spec, 3, 3)
    assert key == EigenCache.key(FluxQubitSpec(), 3, 3)
    assert key != EigenCache.key(spec, 4, 3)
    assert key != EigenCache.key(spec, 3, 4)
    assert key != EigenCache.key(FluxQubitSpec(voltage=100.0), 3, 3)
    assert key != EigenCache.key(spec, 3, 3, np.eye(3))
    assert key != EigenCache.key(spec, 3, 3, method='sparse')


def test_corrupt_entry(tmp_path):
    cache = EigenCache(tmp_path)
    key = cache.key(FluxQubitSpec(), 3, 3)
    cache.store(key, (np.zeros(3), np.zeros((5, 3))))
    path = tmp_path / f'{key}.eig'
    path.write_bytes(path.read_bytes()[:9])

    assert cache.load(key) is None
    assert cache.misses == 1
    assert cache.hits == 0


def test_eigensystem_uses_cache(tmp_path):
    cache = EigenCache(tmp_path)
    configure_cache(cache)
    spec = FluxQubitSpec(flux=0.49)
    first = eigensystem(spec, 3, 3)
    assert (cache.hits, cache.misses) == (0, 1)

    second = eigensystem(spec, 3, 3)
    assert (cache.hits, cache.misses) == (1, 1)
    assert np.array_equal(first.energies, second.energies)
    assert np.array_equal(first.vectors, second.vectors)


def test_cache_from_environment(tmp_path, monkeypatch):
    assert cache_from_environment() is None

    monkeypatch.setenv(CACHE_ENVIRONMENT_VARIABLE.name, str(tmp_path / 'c'))
    cache = cache_from_environment()
    assert cache is not None
    assert cache.directory == tmp_path / 'c'
    assert cache.directory.is_dir()
