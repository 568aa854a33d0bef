"""Dataset containers, CSV ingestion, splitting, scaling, and synthetic generators.

Labels are always in {-1, +1}. Feature kinds:
  continuous - any real value within the declared bounds
  ordinal    - integer grid (unit spacing) within the declared bounds
  binary     - {0, 1}
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CsvParseError, DataValidationError, SchemaMismatchError

FEATURE_KINDS = ("continuous", "ordinal", "binary")
SHIFT_SCENARIOS = ("target_shift", "predictor_shift")


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str = "continuous"
    actionable: bool = True
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.name:
            raise DataValidationError("feature name must be nonempty")
        if self.kind not in FEATURE_KINDS:
            raise DataValidationError(f"unknown feature kind {self.kind!r}")
        if self.lower > self.upper:
            raise DataValidationError(
                f"feature {self.name!r}: lower bound {self.lower} exceeds upper bound {self.upper}"
            )


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]
    label_name: str = "label"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if not names:
            raise DataValidationError("schema needs at least one feature")
        if len(set(names)) != len(names):
            raise DataValidationError("feature names must be unique")
        if self.label_name in names:
            raise DataValidationError(f"label column {self.label_name!r} collides with a feature name")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(f.kind for f in self.features)

    def continuous_mask(self) -> np.ndarray:
        return np.array([f.kind == "continuous" for f in self.features])

    def grid_mask(self) -> np.ndarray:
        """Features living on a discrete grid (ordinal or binary)."""
        return np.array([f.kind in ("ordinal", "binary") for f in self.features])

    def actionable_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.features) if f.actionable)

    def lower_bounds(self) -> np.ndarray:
        return np.array([f.lower for f in self.features])

    def upper_bounds(self) -> np.ndarray:
        return np.array([f.upper for f in self.features])

    def compatible_with(self, other: "FeatureSchema") -> bool:
        return self.names == other.names and self.kinds == other.kinds

    def validate_matrix(self, X: np.ndarray) -> None:
        """Raise DataValidationError naming the first offending feature/row."""
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatchError(
                f"expected {self.n_features} feature columns, got shape {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            i, j = np.argwhere(~np.isfinite(X))[0]
            raise DataValidationError(f"non-finite value at row {i}, feature {self.features[j].name!r}")
        for j, f in enumerate(self.features):
            col = X[:, j]
            if f.kind == "binary":
                bad = ~np.isin(col, (0.0, 1.0))
                if bad.any():
                    i = int(np.argmax(bad))
                    raise DataValidationError(
                        f"binary feature {f.name!r}: value {col[i]} at row {i} not in {{0, 1}}"
                    )
            elif f.kind == "ordinal":
                bad = col != np.round(col)
                if bad.any():
                    i = int(np.argmax(bad))
                    raise DataValidationError(
                        f"ordinal feature {f.name!r}: value {col[i]} at row {i} is off the integer grid"
                    )
            low, up = f.lower, f.upper
            out = (col < low) | (col > up)
            if out.any():
                i = int(np.argmax(out))
                raise DataValidationError(
                    f"feature {f.name!r}: value {col[i]} at row {i} outside bounds [{low}, {up}]"
                )

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": f.name, "kind": f.kind, "actionable": f.actionable,
                 "lower": f.lower, "upper": f.upper}
                for f in self.features
            ],
            "label": self.label_name,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSchema":
        feats = tuple(
            FeatureSpec(
                name=f["name"],
                kind=f.get("kind", "continuous"),
                actionable=bool(f.get("actionable", True)),
                lower=float(f.get("lower", -math.inf)),
                upper=float(f.get("upper", math.inf)),
            )
            for f in doc["features"]
        )
        return cls(feats, doc.get("label", "label"))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix plus {-1,+1} labels, validated against a schema."""

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2:
            raise DataValidationError(f"feature matrix must be 2-D, got ndim={X.ndim}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataValidationError(
                f"label count {y.shape} does not match row count {X.shape[0]}"
            )
        if y.size and not np.isin(y, (-1, 1)).all():
            raise DataValidationError("labels must be -1 or +1")
        self.schema.validate_matrix(X)
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def positive_fraction(self) -> float:
        return float(np.mean(self.y == 1)) if self.n else float("nan")

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.schema, self.X[idx].copy(), self.y[idx].copy())

    def equals(self, other: "Dataset") -> bool:
        return (
            self.schema == other.schema
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True)
class ShiftSpec:
    """Synthetic shift scenario: which moment moves and by how much."""

    scenario: str
    alpha: float
    n: int
    seed: int

    def __post_init__(self):
        if self.scenario not in SHIFT_SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SHIFT_SCENARIOS}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if self.scenario == "target_shift" and not -0.6 <= self.alpha <= 0.6:
            raise ValueError(f"target_shift alpha must lie in [-0.6, 0.6], got {self.alpha}")
        if self.n < 1:
            raise ValueError("n must be at least 1")


def load_csv(path, schema: FeatureSchema) -> Dataset:
    """Read a comma-separated file whose header holds the schema columns plus the label.

    Labels may be given as {-1,+1} or {0,1}; 0 maps to -1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        expected = set(schema.names) | {schema.label_name}
        missing = expected - set(header)
        extra = set(header) - expected
        if missing:
            raise SchemaMismatchError(f"missing column {sorted(missing)[0]!r}")
        if extra:
            raise SchemaMismatchError(f"unexpected column {sorted(extra)[0]!r}")
        col_of = {name: header.index(name) for name in header}
        feat_cols = [col_of[name] for name in schema.names]
        label_col = col_of[schema.label_name]

        rows, labels = [], []
        for i, rec in enumerate(reader):
            if len(rec) != len(header):
                raise CsvParseError(f"row {i}: expected {len(header)} cells, got {len(rec)}")
            try:
                values = [float(rec[c]) for c in feat_cols]
                raw_label = float(rec[label_col])
            except ValueError as exc:
                raise CsvParseError(f"row {i}: non-numeric cell ({exc})") from None
            if raw_label not in (-1.0, 0.0, 1.0):
                raise DataValidationError(f"row {i}: label {raw_label} not in {{-1, 0, 1}}")
            rows.append(values)
            labels.append(-1 if raw_label <= 0.0 else 1)

    X = np.array(rows, dtype=float).reshape(len(rows), schema.n_features)
    y = np.array(labels, dtype=int)
    return Dataset(schema, X, y)


def save_csv(data: Dataset, path) -> None:
    """Serialize back to the same dialect load_csv reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.schema.names) + [data.schema.label_name])
        for row, label in zip(data.X, data.y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def split(data: Dataset, holdout_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint (train, holdout) partition; holdout size = round-half-up(fraction * n)."""
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction must lie in (0, 1), got {holdout_fraction}")
    if data.n < 2:
        raise ValueError("need at least 2 rows to split")
    h = int(math.floor(holdout_fraction * data.n + 0.5))
    perm = np.random.default_rng(seed).permutation(data.n)
    return data.subset(perm[h:]), data.subset(perm[:h])


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine transform fit on training data; identity off continuous features."""

    offset: np.ndarray
    scale: np.ndarray
    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]

    def __post_init__(self):
        offset = np.asarray(self.offset, dtype=float)
        scale = np.asarray(self.scale, dtype=float)
        offset.flags.writeable = False
        scale.flags.writeable = False
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "scale", scale)


def standardize(train: Dataset) -> tuple[Scaler, Dataset]:
    """Fit a scaler so continuous train columns get mean 0, population std 1.

    Zero-variance columns keep scale 1 with offset equal to the constant.
    """
    cont = train.schema.continuous_mask()
    offset = np.zeros(train.n_features)
    scale = np.ones(train.n_features)
    if train.n:
        mean = train.X.mean(axis=0)
        std = train.X.std(axis=0)
        offset[cont] = mean[cont]
        nonzero = cont & (std > 1e-12)
        scale[nonzero] = std[nonzero]
    scaler = Scaler(offset, scale, train.schema.names, train.schema.kinds)
    return scaler, apply_scaler(scaler, train)


def apply_scaler(scaler: Scaler, data: Dataset) -> Dataset:
    """Apply a fitted scaler; bounds on continuous features move with the transform."""
    if scaler.feature_names != data.schema.names or scaler.feature_kinds != data.schema.kinds:
        raise SchemaMismatchError(
            f"scaler was fit on columns {scaler.feature_names}, got {data.schema.names}"
        )
    X = (data.X - scaler.offset) / scaler.scale
    feats = []
    for j, f in enumerate(data.schema.features):
        if f.kind == "continuous" and (math.isfinite(f.lower) or math.isfinite(f.upper)):
            feats.append(replace(
                f,
                lower=(f.lower - scaler.offset[j]) / scaler.scale[j],
                upper=(f.upper - scaler.offset[j]) / scaler.scale[j],
            ))
        else:
            feats.append(f)
    schema = FeatureSchema(tuple(feats), data.schema.label_name)
    return Dataset(schema, X, data.y.copy())


def synth_schema() -> FeatureSchema:
    """Two unbounded continuous predictors, both actionable."""
    return FeatureSchema((FeatureSpec("x0"), FeatureSpec("x1")), "label")


def synth_base(n: int, seed: int) -> Dataset:
    """Standard-normal predictors labeled +1 exactly when x0 + x1 >= 0."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 2))
    y = np.where(X[:, 0] + X[:, 1] >= 0.0, 1, -1)
    return Dataset(synth_schema(), X, y)


def synth_shift(spec: ShiftSpec, raw_coefficient: bool = False) -> Dataset:
    """Shifted companion sample.

    target_shift: same predictor law as synth_base, labels from x0 + c*x1 >= 0 with
    c = 1 + alpha (alpha = 0 reproduces synth_base bit for bit). Set raw_coefficient
    to interpret alpha as c directly.

    predictor_shift: label rule unchanged, predictor mean moved to (alpha, alpha).
    """
    rng = np.random.default_rng(spec.seed)
    X = rng.standard_normal((spec.n, 2))
    if spec.scenario == "target_shift":
        c = spec.alpha if raw_coefficient else 1.0 + spec.alpha
        y = np.where(X[:, 0] + c * X[:, 1] >= 0.0, 1, -1)
    else:
        X = X + spec.alpha
        y = np.where(X[:, 0] + X[:, 1] >= 0.0, 1, -1)
    return Dataset(synth_schema(), X, y)
