# Copyright 2026 flux-ising contributors
# Licensed under the Apache License, Version 2.0

from flux_ising.cache import CACHE_ENVIRONMENT_VARIABLE
from flux_ising.circuit import configure_cache
import pytest


@pytest.fixture(autouse=True)
def no_eigen_cache(monkeypatch):
    monkeypatch.delenv(CACHE_ENVIRONMENT_VARIABLE.name, raising=False)
    configure_cache(None)
    yield
    configure_cache(None)
