"""Paired-model experiment pipeline and invalidation metrics.

A run materializes two data samples, trains one model on each with identical
hyperparameters, generates recourses against the first model's negatives, and
measures how many of those recourses the second model rejects.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as _scipy_stats

from .dataset import Dataset, FeatureSchema, ShiftSpec, load_csv, split, synth_shift
from .errors import (
    DegenerateMetricError,
    SchemaMismatchError,
    UndefinedMetricError,
)
from .models import ModelSpec, TrainedModel, cross_val_accuracy, train
from .recourse import CostFn, RecourseSet, Scm, batch_recourse
from .util import derive_seed

ALGORITHM_LABELS = {"cfe": "CFE", "ar": "AR", "causal": "Causal", "markov": "Markov"}
MODEL_LABELS = {"logistic_regression": "LR", "linear_svm": "SVM", "mlp": "DNN"}

REPORT_COLUMNS = ("Algorithm", "Model", "M1 acc", "M2 acc", "CF1 Size", "Invalidation %")


@dataclass(frozen=True)
class Seeds:
    data: int
    model: int
    recourse: int


@dataclass(frozen=True)
class CsvSource:
    path: str
    schema: FeatureSchema


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    d1_source: ShiftSpec | CsvSource
    d2_source: ShiftSpec | CsvSource
    model_spec: ModelSpec
    method: str
    cost: CostFn = CostFn("L2")
    method_params: dict = field(default_factory=dict)
    holdout_fraction: float = 0.1
    seeds: Seeds = Seeds(0, 1, 2)
    cv_folds: int = 10
    scm: Scm | None = None

    def __post_init__(self):
        if not 0.0 <= self.holdout_fraction <= 0.5:
            raise ValueError(
                f"holdout_fraction must lie in [0, 0.5], got {self.holdout_fraction}"
            )
        if self.method not in ALGORITHM_LABELS:
            raise ValueError(f"unknown recourse method {self.method!r}")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")
        s1, s2 = _source_schema(self.d1_source), _source_schema(self.d2_source)
        if not s1.compatible_with(s2):
            raise SchemaMismatchError("d1 and d2 sources have incompatible schemas")


def _source_schema(source) -> FeatureSchema:
    if isinstance(source, CsvSource):
        return source.schema
    from .dataset import synth_schema

    return synth_schema()


def _materialize(source) -> Dataset:
    if isinstance(source, CsvSource):
        return load_csv(source.path, source.schema)
    return synth_shift(source)


@dataclass(frozen=True, eq=False)
class InvalidationReport:
    algorithm: str
    model_kind: str
    m1_cv_acc: float
    m2_cv_acc: float
    cf1_size: int
    invalidation_pct: float | None
    per_record: tuple[tuple[float, bool], ...]

    def __post_init__(self):
        object.__setattr__(self, "per_record", tuple(self.per_record))
        if (self.invalidation_pct is None) != (self.cf1_size == 0):
            raise ValueError("invalidation_pct must be NAN exactly when CF1 is empty")
        if self.cf1_size:
            expected = 100.0 * sum(flag for _, flag in self.per_record) / self.cf1_size
            if abs(expected - self.invalidation_pct) > 1e-9:
                raise ValueError("invalidation_pct disagrees with per_record flags")

    def csv_row(self) -> list[str]:
        inv = "NAN" if self.invalidation_pct is None else f"{self.invalidation_pct:.2f}"
        return [
            self.algorithm,
            self.model_kind,
            f"{self.m1_cv_acc:.2f}",
            f"{self.m2_cv_acc:.2f}",
            str(self.cf1_size),
            inv,
        ]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerow(self.csv_row())
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "model_kind": self.model_kind,
            "m1_cv_acc": self.m1_cv_acc,
            "m2_cv_acc": self.m2_cv_acc,
            "cf1_size": self.cf1_size,
            "invalidation_pct": "NAN" if self.invalidation_pct is None else self.invalidation_pct,
            "per_record": [
                {"cost": cost, "invalidated": bool(flag)} for cost, flag in self.per_record
            ],
        }


def invalidation_fraction(cf1: RecourseSet, m2: TrainedModel) -> float:
    """Fraction of recourses the updated model classifies -1."""
    if cf1.size == 0:
        raise UndefinedMetricError("invalidation of an empty recourse set is undefined")
    preds = m2.predict(cf1.recourse_matrix())
    return float(np.mean(preds == -1))


@dataclass(frozen=True, eq=False)
class _Prepared:
    """First half of a run: everything that does not depend on the d2 sample."""

    config: ExperimentConfig
    model_spec: ModelSpec
    d1_train: Dataset
    m1: TrainedModel
    m1_acc: float
    cf1: RecourseSet


def _prepare(cfg: ExperimentConfig) -> _Prepared:
    d1 = _materialize(cfg.d1_source)
    if cfg.holdout_fraction > 0.0:
        d1_train, _ = split(d1, cfg.holdout_fraction, derive_seed(cfg.seeds.data, "d1-split"))
    else:
        d1_train = d1
    spec = replace(cfg.model_spec, seed=cfg.seeds.model)
    m1 = train(spec, d1_train)
    m1_acc = cross_val_accuracy(spec, d1_train, cfg.cv_folds)
    cf1 = batch_recourse(
        m1, d1_train, cfg.method, cfg.cost,
        params=cfg.method_params, seed=cfg.seeds.recourse, scm=cfg.scm,
    )
    return _Prepared(cfg, spec, d1_train, m1, m1_acc, cf1)


def _evaluate_m2(prepared: _Prepared, m2: TrainedModel, m2_acc: float) -> InvalidationReport:
    cfg = prepared.config
    cf1 = prepared.cf1
    if cf1.size:
        flags = m2.predict(cf1.recourse_matrix()) == -1
        per_record = tuple(
            (rec.cost, bool(flag)) for rec, flag in zip(cf1.records, flags)
        )
        pct = 100.0 * float(np.mean(flags))
    else:
        per_record = ()
        pct = None
    return InvalidationReport(
        algorithm=ALGORITHM_LABELS[cfg.method],
        model_kind=MODEL_LABELS[cfg.model_spec.kind],
        m1_cv_acc=prepared.m1_acc,
        m2_cv_acc=m2_acc,
        cf1_size=cf1.size,
        invalidation_pct=pct,
        per_record=per_record,
    )


def _run_d2(prepared: _Prepared, d2_source) -> InvalidationReport:
    cfg = prepared.config
    d2 = _materialize(d2_source)
    if not prepared.d1_train.schema.compatible_with(d2.schema):
        raise SchemaMismatchError("d2 schema incompatible with d1")
    if cfg.holdout_fraction > 0.0:
        d2_train, _ = split(d2, cfg.holdout_fraction, derive_seed(cfg.seeds.data, "d2-split"))
    else:
        d2_train = d2
    m2 = train(prepared.model_spec, d2_train)
    m2_acc = cross_val_accuracy(prepared.model_spec, d2_train, cfg.cv_folds)
    return _evaluate_m2(prepared, m2, m2_acc)


def run_pipeline(cfg: ExperimentConfig) -> InvalidationReport:
    """Full paired-model run; deterministic given the config (seeds included)."""
    prepared = _prepare(cfg)
    return _run_d2(prepared, cfg.d2_source)


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    invalidation_pct: float | None
    cf1_size: int


def sensitivity_sweep(scenario: str, alphas, base: ExperimentConfig) -> list[SweepPoint]:
    """One pipeline run per shift magnitude, with the d1 sample and model fixed.

    Results match per-alpha run_pipeline calls exactly (all stages are pure),
    the d1 side is just not recomputed.
    """
    alphas = list(alphas)
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if not isinstance(base.d1_source, ShiftSpec) or not isinstance(base.d2_source, ShiftSpec):
        raise ValueError("sensitivity_sweep needs synthetic d1 and d2 sources")
    prepared = _prepare(base)
    points = []
    for alpha in alphas:
        spec2 = ShiftSpec(scenario, float(alpha), base.d2_source.n, base.d2_source.seed)
        report = _run_d2(prepared, spec2)
        points.append(SweepPoint(float(alpha), report.invalidation_pct, report.cf1_size))
    return points


def sweep_csv_text(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha", "invalidation_pct", "cf1_size"])
    for p in points:
        inv = "NAN" if p.invalidation_pct is None else f"{p.invalidation_pct:.2f}"
        writer.writerow([repr(p.alpha), inv, p.cf1_size])
    return buf.getvalue()


@dataclass(frozen=True)
class TradeoffStats:
    quartile_rates: tuple[float, float, float, float]
    spearman: float


def cost_invalidation_check(cf1: RecourseSet, m2_draws) -> TradeoffStats:
    """Invalidation rate per cost quartile plus cost/invalidation rank correlation.

    (cost, invalidated) pairs are pooled across all updated-model draws; quartiles
    are formed over the recourse costs with ties broken by input order. The rank
    correlation is NaN when every recourse shares one invalidation rate.
    """
    m2_draws = list(m2_draws)
    if not m2_draws:
        raise ValueError("need at least one updated-model draw")
    if cf1.size < 4:
        raise DegenerateMetricError("cost quartiles need at least 4 recourses")
    costs = cf1.costs()
    if np.allclose(costs, costs[0]):
        raise DegenerateMetricError("all recourse costs identical; quartiles undefined")
    points = cf1.recourse_matrix()
    invalid = np.stack([m2.predict(points) == -1 for m2 in m2_draws], axis=1)

    order = np.argsort(costs, kind="stable")
    groups = np.array_split(order, 4)
    rates = tuple(float(invalid[g].mean()) for g in groups)

    mean_invalid = invalid.mean(axis=1)
    if np.all(mean_invalid == mean_invalid[0]):
        return TradeoffStats(rates, float("nan"))
    rho = _scipy_stats.spearmanr(costs, mean_invalid).statistic
    return TradeoffStats(rates, float(rho))
