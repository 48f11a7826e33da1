from __future__ import annotations

import numpy as np
import pytest

from hybridsim.data import load_dataset, load_split
from hybridsim.synthetic import SyntheticConfig, generate_to_disk
from hybridsim.trainer import TrainConfig, train

SMALL = SyntheticConfig(users=60, posts=80, communities=3, p_in=0.2, p_out=0.01, seed=3)
SMALL_TRAIN = TrainConfig(dim=8, heads=2, max_len=16, epochs=4, patience=3, batch_size=32, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("small") / "data"
    generate_to_disk(SMALL, d)
    return d


@pytest.fixture(scope="session")
def small_data(small_dir):
    return load_dataset(small_dir), load_split(small_dir)


@pytest.fixture(scope="session")
def small_model(small_data):
    ds, split = small_data
    params, history = train(ds, split, SMALL_TRAIN)
    return params, history
