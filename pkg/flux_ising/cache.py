# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

"""
Content-addressed on-disk cache of qubit eigensolves.

Each entry is one file named by the sha256 of its inputs. The file holds
an 8-byte little-endian header length, a JSON header and then the
energies, the real parts and the imaginary parts of the eigenvectors as
little-endian float64 arrays.
"""

import dataclasses
import hashlib
import json
import os
from pathlib import Path
import struct
import tempfile
from typing import Any
from typing import Optional
from typing import Tuple

from colcon_core.environment_variable import EnvironmentVariable
from colcon_core.logging import colcon_logger
import numpy as np

logger = colcon_logger.getChild(__name__)

"""Environment variable to set the eigensolve cache directory"""
CACHE_ENVIRONMENT_VARIABLE = EnvironmentVariable(
    'FLUX_ISING_CACHE',
    'Set the directory used to cache qubit eigensolves')

FORMAT_VERSION = 1

_LENGTH = struct.Struct('<Q')
_DTYPE = np.dtype('<f8')


class EigenCache:
    """Directory of cached (energies, eigenvectors) pairs."""

    def __init__(self, directory: Path):
        """
        Initialize a new instance of an EigenCache.

        :param directory: The cache directory, created if missing
        """
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(
        spec: Any,
        cutoff: int,
        levels: int,
        charging_energies: Optional[np.ndarray] = None,
        method: str = 'auto',
    ) -> str:
        """
        Derive the cache key of an eigensolve.

        :param spec: A dataclass holding the qubit parameters
        :param cutoff: The charge cutoff
        :param levels: Number of eigenpairs
        :param charging_energies: Optional dressed charging energies
        :param method: The eigensolver method
        """
        digest = hashlib.sha256()
        fields = {
            'format': FORMAT_VERSION,
            'spec': {
                k: repr(v) for k, v in dataclasses.asdict(spec).items()},
            'cutoff': cutoff,
            'levels': levels,
            'method': method,
        }
        digest.update(json.dumps(fields, sort_keys=True).encode('utf-8'))
        if charging_energies is not None:
            digest.update(np.ascontiguousarray(
                charging_energies, dtype=_DTYPE).tobytes())
        return digest.hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f'{key}.eig'

    def load(self, key: str) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """
        Load a cached eigensolve.

        :returns: The (energies, vectors) pair, or None on a miss or an
          unreadable entry
        """
        path = self._path(key)
        try:
            payload = path.read_bytes()
        except FileNotFoundError:
            self.misses += 1
            return None

        try:
            (length,) = _LENGTH.unpack_from(payload)
            offset = _LENGTH.size
            header = json.loads(payload[offset:offset + length])
            offset += length
            levels, dimension = header['levels'], header['dimension']
            data = np.frombuffer(payload, dtype=_DTYPE, offset=offset)
            energies = data[:levels].copy()
            size = levels * dimension
            real = data[levels:levels + size].reshape(dimension, levels)
            imag = data[levels + size:levels + 2 * size].reshape(
                dimension, levels)
        except (KeyError, ValueError, struct.error) as e:
            logger.warning(f"Ignoring corrupt cache entry '{path}': {e}")
            self.misses += 1
            return None

        self.hits += 1
        logger.debug(f"Loaded eigensolve from cache entry '{path}'")
        return energies, real + 1j * imag

    def store(self, key: str, pairs: Tuple[np.ndarray, np.ndarray]) -> None:
        """Write an eigensolve atomically into the cache."""
        energies, vectors = pairs
        energies = np.asarray(energies, dtype=_DTYPE)
        vectors = np.asarray(vectors, dtype=complex)
        header = json.dumps({
            'format': FORMAT_VERSION,
            'levels': int(energies.shape[0]),
            'dimension': int(vectors.shape[0]),
        }).encode('utf-8')

        fd, temp_name = tempfile.mkstemp(dir=self.directory, suffix='.tmp')
        try:
            with os.fdopen(fd, 'wb') as f:
                f.write(_LENGTH.pack(len(header)))
                f.write(header)
                f.write(energies.tobytes())
                f.write(np.ascontiguousarray(
                    vectors.real, dtype=_DTYPE).tobytes())
                f.write(np.ascontiguousarray(
                    vectors.imag, dtype=_DTYPE).tobytes())
            os.replace(temp_name, self._path(key))
        except BaseException:
            os.unlink(temp_name)
            raise


def cache_from_environment() -> Optional[EigenCache]:
    """Create a cache from FLUX_ISING_CACHE, if it is set."""
    directory = os.environ.get(CACHE_ENVIRONMENT_VARIABLE.name)
    if not directory:
        return None
    return EigenCache(Path(directory))
