from __future__ import annotations

import numpy as np
import pytest

from mddial.harness import build_domain


@pytest.fixture(scope="session")
def domain():
    return build_domain()


@pytest.fixture(scope="session")
def ontology(domain):
    return domain.ontology


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
