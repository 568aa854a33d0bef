import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import recourse_lab as rl
from recourse_lab.errors import (
    SchemaMismatchError,
    TrainingError,
    UnsupportedModelError,
)
from recourse_lab.models import numeric_gradient_batch, schema_digest


def schema2():
    return rl.synth_base(2, 0).schema


def backprop_input_gradient(model, x):
    """Analytic input gradient of the decision value (independent oracle)."""
    z = np.asarray(x, dtype=float)
    preacts = []
    for W, b in model.layers[:-1]:
        a = z @ W + b
        preacts.append(a)
        z = np.maximum(a, 0.0)
    W, _ = model.layers[-1]
    g = W[:, 0]
    for (Wl, _), a in zip(reversed(model.layers[:-1]), reversed(preacts)):
        g = Wl @ (g * (a > 0.0))
    return g


class TestModelSpec:
    def test_mlp_needs_hidden_layers(self):
        with pytest.raises(ValueError):
            rl.ModelSpec("mlp")

    def test_linear_takes_no_hidden_layers(self):
        with pytest.raises(ValueError):
            rl.ModelSpec("logistic_regression", hidden_layers=(4,))

    def test_rate_and_epochs(self):
        with pytest.raises(ValueError):
            rl.ModelSpec("logistic_regression", learning_rate=0.0)
        with pytest.raises(ValueError):
            rl.ModelSpec("logistic_regression", epochs=0)
        with pytest.raises(ValueError):
            rl.ModelSpec("logistic_regression", l2_penalty=-1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            rl.ModelSpec("random_forest")


class TestTraining:
    def test_logistic_fits_noise_free_rule(self, synth10k, logistic10k):
        # oracle: labels come from an exact linear rule, so near-perfect
        # training accuracy is attainable
        assert rl.accuracy(logistic10k, synth10k) >= 99.0

    def test_svm_fits_noise_free_rule(self):
        data = rl.synth_base(4000, 3)
        model = rl.train(rl.ModelSpec.svm(), data)
        assert rl.accuracy(model, data) >= 99.0

    def test_mlp_fits_noise_free_rule(self):
        data = rl.synth_base(4000, 3)
        model = rl.train(rl.ModelSpec.mlp(epochs=40, seed=1), data)
        assert rl.accuracy(model, data) >= 98.0

    def test_deterministic_parameters(self):
        data = rl.synth_base(500, 2)
        for spec in (rl.ModelSpec.logistic(epochs=50),
                     rl.ModelSpec.svm(epochs=50),
                     rl.ModelSpec.mlp(epochs=5, seed=3)):
            a, b = rl.train(spec, data), rl.train(spec, data)
            for (Wa, ba), (Wb, bb) in zip(a.layers, b.layers):
                assert np.array_equal(Wa, Wb) and np.array_equal(ba, bb)

    def test_single_class_rejected(self):
        schema = schema2()
        X = np.random.default_rng(0).standard_normal((10, 2))
        data = rl.Dataset(schema, X, np.ones(10, dtype=int))
        with pytest.raises(TrainingError):
            rl.train(rl.ModelSpec.logistic(), data)

    def test_divergence_names_epoch(self):
        from recourse_lab.errors import DivergenceError

        data = rl.synth_base(300, 1)
        # a step this large overflows the penalty term on the first update
        spec = rl.ModelSpec.logistic(learning_rate=1e160, epochs=3)
        with pytest.raises(DivergenceError, match="epoch"):
            rl.train(spec, data)


class TestDecisionGeometry:
    def test_linear_closed_form(self):
        m = rl.linear_model([2.0, 0.0], -1.0, schema2())
        assert m.decision_value(np.array([1.0, 1.0])) == pytest.approx(1.0)

    def test_boundary_point(self):
        m = rl.linear_model([1.0, 1.0], 0.0, schema2())
        assert m.decision_value(np.array([0.0, 0.0])) == 0.0
        assert m.predict(np.array([0.0, 0.0])) == 1  # ties go positive

    def test_zero_mlp_scores_zero(self):
        spec = rl.ModelSpec.mlp(hidden_layers=(4,), seed=0)
        layers = ((np.zeros((2, 4)), np.zeros(4)), (np.zeros((4, 1)), np.zeros(1)))
        m = rl.TrainedModel(spec, schema2(), layers)
        pts = np.random.default_rng(1).standard_normal((20, 2))
        assert np.all(m.decision_values(pts) == 0.0)

    def test_sign_rule(self):
        m = rl.linear_model([1.0, 1.0], 0.0, schema2())
        assert m.predict(np.array([1.0, 1.0])) == 1
        assert m.predict(np.array([-1.0, -1.0])) == -1

    def test_proba_sigmoid(self):
        m = rl.linear_model([2.0, 0.0], -1.0, schema2())
        assert m.predict_proba(np.array([1.0, 1.0])) == pytest.approx(0.7311, abs=1e-4)

    def test_proba_increasing_in_score(self, logistic10k):
        pts = np.random.default_rng(0).standard_normal((50, 2))
        f = logistic10k.decision_values(pts)
        p = logistic10k.predict_proba(pts)
        order = np.argsort(f)
        assert np.all(np.diff(p[order]) >= 0)

    def test_sign_consistency_property(self, logistic10k):
        pts = np.random.default_rng(3).standard_normal((200, 2)) * 2
        f = logistic10k.decision_values(pts)
        preds = logistic10k.predict(pts)
        assert np.array_equal(preds == 1, f >= 0.0)

    def test_wrong_dimension(self):
        m = rl.linear_model([1.0, 1.0], 0.0, schema2())
        with pytest.raises(SchemaMismatchError):
            m.decision_value(np.array([1.0]))


class TestNumericGradient:
    def test_linear_exact_across_step_sizes(self):
        m = rl.linear_model([3.0, -2.0], 0.5, schema2())
        # keep |f(x)| moderate: float cancellation scales with |f| / h
        x = np.array([0.1, 0.2])
        for h in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2):
            g = rl.numeric_gradient(m, x, h)
            assert np.max(np.abs(g - np.array([3.0, -2.0]))) <= 1e-10

    def test_proba_gradient_quarter_rule(self):
        # central difference of predict_proba at the boundary: sigma'(0) = 1/4
        m = rl.linear_model([1.0, 1.0], 0.0, schema2())
        h = 1e-4
        g = []
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            g.append(
                (m.predict_proba(np.zeros(2) + e) - m.predict_proba(np.zeros(2) - e))
                / (2 * h)
            )
        assert np.allclose(g, [0.25, 0.25], atol=1e-6)

    def test_mlp_matches_backprop_oracle(self):
        data = rl.synth_base(3000, 1)
        model = rl.train(rl.ModelSpec.mlp(hidden_layers=(10, 10, 5), epochs=30, seed=2), data)
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.standard_normal(2) * 2
            num = rl.numeric_gradient(model, x, 1e-4)
            ana = backprop_input_gradient(model, x)
            rel = np.linalg.norm(num - ana) / max(np.linalg.norm(ana), 1e-12)
            assert rel <= 1e-4

    def test_step_must_be_positive(self):
        m = rl.linear_model([1.0, 0.0], 0.0, schema2())
        with pytest.raises(ValueError):
            rl.numeric_gradient(m, np.zeros(2), h=0.0)


class TestParallelPerturb:
    def test_zero_magnitude_is_identity(self, logistic10k):
        pts = np.random.default_rng(5).standard_normal((100, 2))
        m2 = rl.parallel_perturb(logistic10k, 0.0)
        assert np.array_equal(m2.predict(pts), logistic10k.predict(pts))

    def test_flip_geometry(self):
        m = rl.linear_model([1.0, 0.0], 0.0, schema2())
        m2 = rl.parallel_perturb(m, 0.25)
        assert m.predict(np.array([0.1, 0.0])) == 1
        assert m2.predict(np.array([0.1, 0.0])) == -1
        assert m2.predict(np.array([0.3, 0.0])) == 1

    def test_distance_shift_exact(self, logistic10k):
        w = logistic10k.weight_vector
        norm = np.linalg.norm(w)
        m2 = rl.parallel_perturb(logistic10k, 0.25)
        pts = np.random.default_rng(6).standard_normal((100, 2))
        d1 = (pts @ w + logistic10k.bias) / norm
        d2 = (pts @ m2.weight_vector + m2.bias) / norm
        assert np.max(np.abs(d2 - (d1 - 0.25))) <= 1e-12

    @given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
    @settings(max_examples=30, deadline=None)
    def test_composition(self, a, b):
        m = rl.linear_model([1.5, -0.5], 0.3, schema2())
        two_step = rl.parallel_perturb(rl.parallel_perturb(m, a), b)
        one_step = rl.parallel_perturb(m, a + b)
        assert np.allclose(two_step.bias, one_step.bias, atol=1e-12)
        assert np.array_equal(two_step.weight_vector, one_step.weight_vector)

    def test_zero_weights_rejected(self):
        m = rl.linear_model([0.0, 0.0], -1.0, schema2())
        with pytest.raises(ValueError):
            rl.parallel_perturb(m, 0.1)

    def test_mlp_rejected(self):
        data = rl.synth_base(300, 0)
        m = rl.train(rl.ModelSpec.mlp(hidden_layers=(4,), epochs=2), data)
        with pytest.raises(UnsupportedModelError):
            rl.parallel_perturb(m, 0.1)


class TestCrossVal:
    def test_logistic_high_cv(self, synth10k):
        assert rl.cross_val_accuracy(rl.ModelSpec.logistic(), synth10k, 10) >= 99.0

    def test_constant_predictor_base_rate(self):
        data = rl.synth_base(4000, 8)
        constant = rl.linear_model([0.0, 0.0], -1.0, data.schema)
        assert np.all(constant.predict(data.X) == -1)
        assert rl.accuracy(constant, data) == pytest.approx(50.0, abs=2.0)

    def test_k_validation(self, synth10k):
        with pytest.raises(ValueError):
            rl.cross_val_accuracy(rl.ModelSpec.logistic(), synth10k, 1)

    def test_range(self):
        data = rl.synth_base(300, 2)
        acc = rl.cross_val_accuracy(rl.ModelSpec.logistic(epochs=50), data, 3)
        assert 0.0 <= acc <= 100.0


class TestSerialization:
    def test_round_trip_bit_exact(self):
        data = rl.synth_base(500, 4)
        for spec in (rl.ModelSpec.logistic(epochs=40),
                     rl.ModelSpec.mlp(hidden_layers=(6, 3), epochs=3)):
            model = rl.train(spec, data)
            again = rl.TrainedModel.from_json(model.to_json())
            assert again.spec == model.spec
            for (Wa, ba), (Wb, bb) in zip(model.layers, again.layers):
                assert np.array_equal(Wa, Wb) and np.array_equal(ba, bb)

    def test_digest_guard(self):
        model = rl.train(rl.ModelSpec.logistic(epochs=5), rl.synth_base(200, 1))
        doc = model.to_json().replace('"x0"', '"z0"')
        with pytest.raises(SchemaMismatchError):
            rl.TrainedModel.from_json(doc)

    def test_digest_stable(self):
        assert schema_digest(schema2()) == schema_digest(rl.synth_base(3, 9).schema)


class TestGradientBatch:
    def test_matches_single(self, logistic10k):
        pts = np.random.default_rng(2).standard_normal((10, 2))
        batch = numeric_gradient_batch(logistic10k, pts, 1e-4)
        for i, x in enumerate(pts):
            assert np.allclose(batch[i], rl.numeric_gradient(logistic10k, x, 1e-4))
