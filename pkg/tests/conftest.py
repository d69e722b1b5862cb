import json

import numpy as np
import pytest

from gtinfluence.coupling import build_counterexample
from gtinfluence.generators import and_function
from gtinfluence.network import chain_network


@pytest.fixture
def chain():
    return chain_network()


@pytest.fixture
def and_net():
    labels, values = and_function()
    return build_counterexample(values, labels, 0b01, 0b10).network


@pytest.fixture
def chain_file(tmp_path, chain):
    path = tmp_path / "chain.json"
    path.write_text(json.dumps(chain.to_document()))
    return path


@pytest.fixture
def and_file(tmp_path, and_net):
    path = tmp_path / "and.json"
    path.write_text(json.dumps(and_net.to_document()))
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
