"""Dataset ingestion, synthetic benchmark generation, splitting, scaling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import IngestionError, ParameterError
from .subgroup import Dataset


@dataclass(frozen=True)
class CsvSchema:
    """How to read a CSV file into a dataset.

    The file needs a header row.  Labels map to +1 when the cell equals
    ``positive_label_token`` and -1 otherwise.  ``sensitive_column`` may
    be a tuple of column names, combined into one categorical product key.
    ``feature_columns`` defaults to every remaining column; text columns
    are one-hot encoded in first-appearance order.  The sensitive value is
    also appended to the features unless ``include_sensitive`` is False
    (dropping it does not remove its correlations with other columns).
    """

    label_column: str
    sensitive_column: Union[str, tuple]
    positive_label_token: str
    sensitive_kind: str = "categorical"
    feature_columns: Optional[Sequence[str]] = None
    include_sensitive: bool = True

    def __post_init__(self):
        if self.sensitive_kind not in ("categorical", "real"):
            raise ParameterError(
                f"sensitive_kind must be categorical or real, got "
                f"{self.sensitive_kind!r}")
        sens = self.sensitive_column
        names = sens if isinstance(sens, tuple) else (sens,)
        if self.label_column in names:
            raise ParameterError("label and sensitive columns must be distinct")
        if isinstance(sens, tuple) and self.sensitive_kind == "real":
            raise ParameterError("a combined sensitive key must be categorical")


@dataclass(frozen=True)
class SynthSpec:
    """Two-group Gaussian benchmark with group-dependent label noise.

    Group 0 is easy (class means far apart, little noise) and group 1 is
    hard (close means along an orthogonal direction, frequent label
    flips), so plain risk minimisation leaves a visible gap between the
    subgroup risks.  ``class_means[g]`` holds the 2-d means for the
    negative and positive class of group g.
    """

    m: int = 400
    group_fractions: tuple = (0.5, 0.5)
    class_means: tuple = (((-2.0, 0.0), (2.0, 0.0)),
                          ((0.0, -0.5), (0.0, 0.5)))
    noise_rates: tuple = (0.05, 0.25)
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("m must be positive")
        f0, f1 = self.group_fractions
        if not (0.0 < f0 < 1.0 and 0.0 < f1 < 1.0) or abs(f0 + f1 - 1.0) > 1e-12:
            raise ParameterError("group fractions must lie in (0,1) and sum to 1")
        if len(self.class_means) != 2 or any(len(g) != 2 for g in self.class_means):
            raise ParameterError("class_means needs two 2-d points per group")
        if any(not 0.0 <= r < 0.5 for r in self.noise_rates):
            raise ParameterError("noise rates must lie in [0, 0.5)")


def generate_synth(spec: SynthSpec) -> Dataset:
    """Draw the benchmark dataset; a pure function of the spec fields."""
    rng = np.random.default_rng(spec.seed)
    groups = (rng.random(spec.m) < spec.group_fractions[1]).astype(int)
    clean = rng.integers(0, 2, spec.m) * 2 - 1
    means = np.array(spec.class_means, dtype=float)  # shape (2, 2, 2)
    centers = means[groups, (clean + 1) // 2]
    feats = centers + rng.standard_normal((spec.m, 2))
    flips = rng.random(spec.m) < np.asarray(spec.noise_rates)[groups]
    labels = clean * np.where(flips, -1, 1)
    return Dataset(feats, labels, groups)


class SplitResult(NamedTuple):
    train: Dataset
    test: Dataset
    stratified: bool


def split(dataset: Dataset, train_fraction: float, seed: int = 0) -> SplitResult:
    """Shuffle rows into train and test, stratified by (label, group).

    Falls back to a plain shuffle (flagged in the result) when some
    (label, group) cell has fewer than two rows.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError("train fraction must lie strictly in (0, 1)")
    rng = np.random.default_rng(seed)
    m = dataset.m
    target = int(round(train_fraction * m))
    target = min(max(target, 1), m - 1)

    keys = [(float(y), s) for y, s in zip(dataset.labels, dataset.sensitive.tolist())]
    strata: dict = {}
    for i, k in enumerate(keys):
        strata.setdefault(k, []).append(i)
    stratified = all(len(v) >= 2 for v in strata.values())

    if not stratified:
        perm = rng.permutation(m)
        return SplitResult(dataset.take(perm[:target]), dataset.take(perm[target:]),
                           False)

    quotas = []
    for k in sorted(strata, key=repr):
        idx = np.array(strata[k])
        share = train_fraction * idx.size
        quotas.append([k, idx, int(np.floor(share)), share - np.floor(share)])
    remainder = target - sum(q[2] for q in quotas)
    # hand leftover slots to the largest fractional remainders, stable order
    for q in sorted(quotas, key=lambda q: -q[3])[:max(remainder, 0)]:
        q[2] += 1
    train_idx, test_idx = [], []
    for _, idx, take, _ in quotas:
        perm = idx[rng.permutation(idx.size)]
        train_idx.extend(perm[:take].tolist())
        test_idx.extend(perm[take:].tolist())
    return SplitResult(dataset.take(np.array(sorted(train_idx), dtype=int)),
                       dataset.take(np.array(sorted(test_idx), dtype=int)),
                       True)


@dataclass(frozen=True, eq=False)
class Scaler:
    """Column-wise affine transform fitted on a training set."""

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, float) - self.mean) / self.scale


def standardize(train: Dataset, test: Optional[Dataset] = None):
    """Zero-mean unit-variance columns, fitted on train and applied to both.

    Zero-variance columns pass through untouched.  Returns the transformed
    datasets plus the fitted scaler.
    """
    mu = train.features.mean(axis=0)
    sd = train.features.std(axis=0)
    constant = sd == 0.0
    mu = np.where(constant, 0.0, mu)
    sd = np.where(constant, 1.0, sd)
    scaler = Scaler(mu, sd)

    def apply(ds: Optional[Dataset]):
        if ds is None or ds.m == 0:
            return ds
        return Dataset(scaler.transform(ds.features), ds.labels, ds.sensitive,
                       ds.group_weighting)

    return apply(train), apply(test), scaler


def _parse_float(token: str, row: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise IngestionError(
            f"row {row}, column {column!r}: cannot parse {token!r} as a number"
        ) from None


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Read a CSV file into a dataset according to the schema."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        rows = list(reader)
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise IngestionError(f"{path}: duplicate header names {dupes}")
    if not rows:
        raise IngestionError(f"{path}: no data rows")

    col_index = {name: i for i, name in enumerate(header)}
    sens_names = (schema.sensitive_column
                  if isinstance(schema.sensitive_column, tuple)
                  else (schema.sensitive_column,))
    for name in (schema.label_column, *sens_names):
        if name not in col_index:
            raise IngestionError(f"{path}: missing column {name!r}")

    if schema.feature_columns is None:
        reserved = {schema.label_column, *sens_names}
        feature_names = [h for h in header if h not in reserved]
    else:
        feature_names = list(schema.feature_columns)
        for name in feature_names:
            if name not in col_index:
                raise IngestionError(f"{path}: missing column {name!r}")
            if name == schema.label_column or name in sens_names:
                raise ParameterError(
                    f"feature column {name!r} clashes with the label or "
                    f"sensitive column; it is handled separately")

    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise IngestionError(
                f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        for name in (schema.label_column, *sens_names, *feature_names):
            if row[col_index[name]].strip() == "":
                raise IngestionError(
                    f"{path}: row {r}, column {name!r}: missing value")

    labels = np.array([1.0 if row[col_index[schema.label_column]] ==
                       schema.positive_label_token else -1.0 for row in rows])

    if schema.sensitive_kind == "real":
        sensitive = np.array([_parse_float(row[col_index[sens_names[0]]], r,
                                           sens_names[0])
                              for r, row in enumerate(rows, start=2)])
    else:
        keys = [tuple(row[col_index[n]] for n in sens_names) for row in rows]
        codes: dict = {}
        for k in keys:
            if k not in codes:
                codes[k] = len(codes)
        sensitive = np.array([codes[k] for k in keys], dtype=int)

    columns = []
    for name in feature_names:
        tokens = [row[col_index[name]] for row in rows]
        try:
            columns.append(np.array([float(t) for t in tokens]))
        except ValueError:
            # text column: one-hot in first-appearance order
            values: dict = {}
            for t in tokens:
                if t not in values:
                    values[t] = len(values)
            hot = np.zeros((len(rows), len(values)))
            for i, t in enumerate(tokens):
                hot[i, values[t]] = 1.0
            columns.extend(hot.T)

    if schema.include_sensitive:
        if schema.sensitive_kind == "real":
            columns.append(sensitive.astype(float))
        else:
            n_groups = int(sensitive.max()) + 1
            hot = np.zeros((len(rows), n_groups))
            hot[np.arange(len(rows)), sensitive] = 1.0
            columns.extend(hot.T)

    if not columns:
        raise IngestionError(f"{path}: no feature columns")
    return Dataset(np.column_stack(columns), labels, sensitive)
