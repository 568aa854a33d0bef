"""From-scratch binary classifiers: logistic regression, linear SVM, and a ReLU MLP.

Every model exposes a signed decision value whose sign is the predicted class
(ties go to +1), a sigmoid probability, numeric input gradients, and, for the
linear kinds, an exact parallel translation of the decision boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, FeatureSchema
from .errors import (
    DivergenceError,
    SchemaMismatchError,
    TrainingError,
    UnsupportedModelError,
)
from .util import canonical_json, derive_seed, sigmoid

MODEL_KINDS = ("logistic_regression", "linear_svm", "mlp")

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8
_MLP_BATCH = 128


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hidden_layers: tuple[int, ...] = ()
    learning_rate: float = 0.1
    epochs: int = 300
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "mlp":
            if not self.hidden_layers:
                raise ValueError("mlp needs at least one hidden layer")
        elif self.hidden_layers:
            raise ValueError(f"{self.kind} takes no hidden layers")
        if any(w < 1 for w in self.hidden_layers):
            raise ValueError("hidden layer widths must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be nonnegative")

    @classmethod
    def logistic(cls, learning_rate=0.5, epochs=300, l2_penalty=1e-4, seed=0):
        return cls("logistic_regression", (), learning_rate, epochs, l2_penalty, seed)

    @classmethod
    def svm(cls, learning_rate=0.1, epochs=300, l2_penalty=1e-3, seed=0):
        return cls("linear_svm", (), learning_rate, epochs, l2_penalty, seed)

    @classmethod
    def mlp(cls, hidden_layers=(16, 16), learning_rate=1e-3, epochs=60, l2_penalty=1e-4, seed=0):
        return cls("mlp", tuple(hidden_layers), learning_rate, epochs, l2_penalty, seed)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "hidden_layers": list(self.hidden_layers),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "l2_penalty": self.l2_penalty,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        return cls(
            kind=doc["kind"],
            hidden_layers=tuple(doc.get("hidden_layers", ())),
            learning_rate=float(doc["learning_rate"]),
            epochs=int(doc["epochs"]),
            l2_penalty=float(doc["l2_penalty"]),
            seed=int(doc["seed"]),
        )


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """Layered weights; a single (d, 1) layer for the linear kinds."""

    spec: ModelSpec
    schema: FeatureSchema
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        frozen = []
        in_dim = self.schema.n_features
        for W, b in self.layers:
            W = np.asarray(W, dtype=float)
            b = np.asarray(b, dtype=float)
            if W.ndim != 2 or b.ndim != 1 or W.shape[1] != b.shape[0] or W.shape[0] != in_dim:
                raise ValueError(f"inconsistent layer shapes W{W.shape} b{b.shape} (in={in_dim})")
            in_dim = W.shape[1]
            W.flags.writeable = False
            b.flags.writeable = False
            frozen.append((W, b))
        if in_dim != 1:
            raise ValueError("final layer must produce a single score")
        expected = len(self.spec.hidden_layers) + 1
        if len(frozen) != expected:
            raise ValueError(f"expected {expected} layers for spec, got {len(frozen)}")
        object.__setattr__(self, "layers", tuple(frozen))

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def is_linear(self) -> bool:
        return self.spec.kind != "mlp"

    @property
    def weight_vector(self) -> np.ndarray:
        if not self.is_linear:
            raise UnsupportedModelError("weight_vector is defined for linear kinds only")
        return self.layers[0][0][:, 0]

    @property
    def bias(self) -> float:
        if not self.is_linear:
            raise UnsupportedModelError("bias is defined for linear kinds only")
        return float(self.layers[0][1][0])

    def decision_values(self, X) -> np.ndarray:
        """Signed scores for a batch; pre-sigmoid logit for the MLP."""
        Z = np.asarray(X, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != self.schema.n_features:
            raise SchemaMismatchError(
                f"expected shape (n, {self.schema.n_features}), got {Z.shape}"
            )
        for W, b in self.layers[:-1]:
            Z = np.maximum(Z @ W + b, 0.0)
        W, b = self.layers[-1]
        return (Z @ W + b)[:, 0]

    def decision_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.schema.n_features:
            raise SchemaMismatchError(
                f"expected a length-{self.schema.n_features} vector, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("input vector must be finite")
        return float(self.decision_values(x[None, :])[0])

    def predict(self, x):
        """+1 iff the decision value is >= 0; handles single vectors and batches."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return 1 if self.decision_value(x) >= 0.0 else -1
        return np.where(self.decision_values(x) >= 0.0, 1, -1)

    def predict_proba(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(sigmoid(self.decision_value(x)))
        return sigmoid(self.decision_values(x))

    def to_json(self) -> str:
        doc = {
            "format": "recourse-lab-model",
            "version": 1,
            "kind": self.spec.kind,
            "spec": self.spec.to_dict(),
            "schema": self.schema.to_dict(),
            "schema_digest": schema_digest(self.schema),
            "layers": [
                {"shape": list(W.shape), "weights": W.ravel().tolist(), "bias": b.tolist()}
                for W, b in self.layers
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        doc = json.loads(text)
        if doc.get("format") != "recourse-lab-model":
            raise ValueError("not a recourse-lab model document")
        schema = FeatureSchema.from_dict(doc["schema"])
        if doc.get("schema_digest") != schema_digest(schema):
            raise SchemaMismatchError("schema digest mismatch in model document")
        spec = ModelSpec.from_dict(doc["spec"])
        layers = tuple(
            (np.array(l["weights"], dtype=float).reshape(l["shape"]),
             np.array(l["bias"], dtype=float))
            for l in doc["layers"]
        )
        return cls(spec, schema, layers)


def schema_digest(schema: FeatureSchema) -> str:
    import hashlib

    return hashlib.sha256(canonical_json(schema.to_dict()).encode()).hexdigest()[:16]


def linear_model(weights, bias: float, schema: FeatureSchema, kind: str = "logistic_regression") -> TrainedModel:
    """Hand-built linear classifier (surrogates, perturbation targets, test fixtures)."""
    w = np.asarray(weights, dtype=float)
    if kind == "mlp":
        raise ValueError("linear_model builds linear kinds only")
    spec = ModelSpec(kind=kind, seed=0)
    return TrainedModel(spec, schema, ((w[:, None], np.array([float(bias)])),))


def _check_trainable(data: Dataset) -> None:
    if data.n == 0:
        raise TrainingError("cannot train on an empty dataset")
    classes = np.unique(data.y)
    if classes.size < 2:
        raise TrainingError(f"training data holds a single class ({int(classes[0]):+d})")


def _train_linear(spec: ModelSpec, data: Dataset, hinge: bool) -> TrainedModel:
    X = data.X
    y = data.y.astype(float)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    lr = spec.learning_rate
    for epoch in range(spec.epochs):
        # overflow to inf is exactly what the divergence check looks for
        with np.errstate(over="ignore", invalid="ignore"):
            f = X @ w + b
            margin = y * f
            if hinge:
                loss = np.mean(np.maximum(0.0, 1.0 - margin)) + spec.l2_penalty * (w @ w)
                active = (1.0 - margin) > 0.0
                coeff = y * active
            else:
                loss = np.mean(np.logaddexp(0.0, -margin)) + spec.l2_penalty * (w @ w)
                coeff = y * sigmoid(-margin)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
        gw = -(X * coeff[:, None]).mean(axis=0) + 2.0 * spec.l2_penalty * w
        gb = -coeff.mean()
        w = w - lr * gw
        b = b - lr * gb
    return TrainedModel(spec, data.schema, ((w[:, None], np.array([b])),))


def _init_mlp(spec: ModelSpec, d: int) -> list[list[np.ndarray]]:
    rng = np.random.default_rng(spec.seed)
    dims = [d, *spec.hidden_layers, 1]
    params = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params.append([W, np.zeros(fan_out)])
    return params


def _mlp_forward(params, X):
    acts = [X]
    Z = X
    for W, b in params[:-1]:
        Z = np.maximum(Z @ W + b, 0.0)
        acts.append(Z)
    W, b = params[-1]
    return acts, (Z @ W + b)[:, 0]


def _train_mlp(spec: ModelSpec, data: Dataset) -> TrainedModel:
    X = data.X
    y = data.y.astype(float)
    n = X.shape[0]
    params = _init_mlp(spec, X.shape[1])
    m_state = [[np.zeros_like(W), np.zeros_like(b)] for W, b in params]
    v_state = [[np.zeros_like(W), np.zeros_like(b)] for W, b in params]
    rng = np.random.default_rng(derive_seed(spec.seed, "mlp-batches"))
    step = 0
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, _MLP_BATCH):
            idx = order[start:start + _MLP_BATCH]
            xb, yb = X[idx], y[idx]
            acts, logits = _mlp_forward(params, xb)
            # d/dlogit of mean softplus(-y * logit)
            dlogit = (-yb * sigmoid(-yb * logits)) / len(idx)
            grads = [None] * len(params)
            delta = dlogit[:, None]
            for li in range(len(params) - 1, -1, -1):
                W, _ = params[li]
                gW = acts[li].T @ delta + 2.0 * spec.l2_penalty * W
                gb = delta.sum(axis=0)
                grads[li] = (gW, gb)
                if li > 0:
                    delta = (delta @ W.T) * (acts[li] > 0.0)
            step += 1
            c1 = 1.0 - _ADAM_BETA1 ** step
            c2 = 1.0 - _ADAM_BETA2 ** step
            for li, (gW, gb) in enumerate(grads):
                for slot, g in ((0, gW), (1, gb)):
                    m_state[li][slot] = _ADAM_BETA1 * m_state[li][slot] + (1 - _ADAM_BETA1) * g
                    v_state[li][slot] = _ADAM_BETA2 * v_state[li][slot] + (1 - _ADAM_BETA2) * g * g
                    upd = (m_state[li][slot] / c1) / (np.sqrt(v_state[li][slot] / c2) + _ADAM_EPS)
                    params[li][slot] = params[li][slot] - spec.learning_rate * upd
        _, logits = _mlp_forward(params, X)
        loss = np.mean(np.logaddexp(0.0, -y * logits))
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
    layers = tuple((W.copy(), b.copy()) for W, b in params)
    return TrainedModel(spec, data.schema, layers)


def train(spec: ModelSpec, data: Dataset) -> TrainedModel:
    """Fit a model; deterministic given (spec, data)."""
    _check_trainable(data)
    if spec.kind == "logistic_regression":
        return _train_linear(spec, data, hinge=False)
    if spec.kind == "linear_svm":
        return _train_linear(spec, data, hinge=True)
    return _train_mlp(spec, data)


def numeric_gradient(model: TrainedModel, x, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of the decision value at x."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("numeric_gradient expects a single point")
    g = numeric_gradient_batch(model, x[None, :], h)[0]
    return g


def numeric_gradient_batch(model: TrainedModel, X, h: float = 1e-4) -> np.ndarray:
    """Central differences for a batch of points, one dimension at a time."""
    if not h > 0:
        raise ValueError("step size h must be positive")
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("points must be finite")
    n, d = X.shape
    grad = np.empty((n, d))
    for j in range(d):
        bumped = X.copy()
        bumped[:, j] += h
        hi = model.decision_values(bumped)
        bumped[:, j] = X[:, j] - h
        lo = model.decision_values(bumped)
        grad[:, j] = (hi - lo) / (2.0 * h)
    if not np.all(np.isfinite(grad)):
        raise ValueError("numeric gradient is not finite")
    return grad


def parallel_perturb(model: TrainedModel, delta_m: float) -> TrainedModel:
    """Translate a linear boundary by delta_m along its unit normal.

    Positive delta_m shrinks the +1 halfspace: every point's signed boundary
    distance drops by exactly delta_m (bias becomes b - delta_m * ||w||).
    """
    if not model.is_linear:
        raise UnsupportedModelError("parallel_perturb requires a linear model kind")
    w = model.weight_vector
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ValueError("cannot perturb a zero weight vector")
    W, b = model.layers[0]
    return TrainedModel(model.spec, model.schema, ((W, b - delta_m * norm),))


def accuracy(model: TrainedModel, data: Dataset) -> float:
    """Percent agreement between predictions and labels."""
    if data.n == 0:
        raise ValueError("accuracy of an empty dataset is undefined")
    return 100.0 * float(np.mean(model.predict(data.X) == data.y))


def cross_val_accuracy(spec: ModelSpec, data: Dataset, k: int) -> float:
    """Mean held-out accuracy over k seeded, disjoint, near-equal folds, in [0, 100]."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if data.n < k:
        raise ValueError(f"need at least k={k} rows, got {data.n}")
    rng = np.random.default_rng(derive_seed(spec.seed, "cv-folds", data.n, k))
    folds = np.array_split(rng.permutation(data.n), k)
    scores = []
    for fold in folds:
        mask = np.ones(data.n, dtype=bool)
        mask[fold] = False
        model = train(spec, data.subset(np.flatnonzero(mask)))
        scores.append(accuracy(model, data.subset(fold)))
    return float(np.mean(scores))
