from __future__ import annotations

import pytest

from helpers import make_toy_registry

from sv6d.taxonomy import TaxonomyRegistry, load_registry


@pytest.fixture(scope="session")
def registry() -> TaxonomyRegistry:
    return load_registry()


@pytest.fixture(scope="session")
def toy_registry() -> TaxonomyRegistry:
    return make_toy_registry()
