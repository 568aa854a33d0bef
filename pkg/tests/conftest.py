import numpy as np
import pytest

import recourse_lab as rl


@pytest.fixture(scope="session")
def synth10k():
    return rl.synth_base(10000, 7)


@pytest.fixture(scope="session")
def logistic10k(synth10k):
    return rl.train(rl.ModelSpec.logistic(), synth10k)


@pytest.fixture(scope="session")
def ordinal_setup():
    """Unit-grid feature with the boundary halfway between grid points."""
    schema = rl.FeatureSchema((rl.FeatureSpec("level", kind="ordinal", lower=0, upper=80),))
    model = rl.linear_model([1.0], -30.5, schema)
    rng = np.random.default_rng(5)
    values = rng.integers(0, 31, size=6000)[:, None].astype(float)
    data = rl.Dataset(schema, values, np.full(6000, -1))
    return model, data


@pytest.fixture(scope="session")
def curved_mlp_setup():
    """Quadratic label rule plus an MLP fit to it: a moderately curved boundary."""
    rng = np.random.default_rng(42)
    X = rng.standard_normal((6000, 2))
    y = np.where(X[:, 1] - 0.5 * (X[:, 0] ** 2 - 1.0) >= 0.0, 1, -1)
    data = rl.Dataset(rl.synth_base(2, 0).schema, X, y)
    spec = rl.ModelSpec.mlp(hidden_layers=(16, 16), learning_rate=3e-3, epochs=80, seed=0)
    model = rl.train(spec, data)
    return model, data
