import numpy as np
import pytest


@pytest.fixture(scope="session")
def dataset_csv(tmp_path_factory):
    """2,000-record configuration dataset CSV shared across training tests."""
    from morphkit.configdb import generate_dataset, save_dataset_csv
    from morphkit.surrogate import MaterialParams

    path = tmp_path_factory.mktemp("data") / "db2k.csv"
    save_dataset_csv(generate_dataset(2000, 11, MaterialParams()), path)
    return path


@pytest.fixture(scope="session")
def quick_model(dataset_csv):
    """Small, briefly trained model for sampling-contract tests."""
    from cdm import DiffusionConfig, train

    config = DiffusionConfig(epochs=30, hidden=64, n_layers=2, seed=3)
    model, result = train(dataset_csv, config)
    return model, result


@pytest.fixture
def rng():
    return np.random.default_rng(5)
