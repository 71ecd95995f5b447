"""Datasets, linear models, base losses, and empirical subgroup risks.

The sensitive feature partitions the rows into groups; the per-group mean
loss of a linear model becomes a discrete random variable (one atom per
group, weighted by the group probabilities) that the risk measures in
``riskvar`` aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, ParameterError
from .riskvar import PROB_TOL, DiscreteRandomVariable

LOSS_KINDS = ("zero_one", "hinge", "squared_hinge", "logistic", "linear")

PARTITION_MODES = ("categorical", "per_instance")


def _hinge(y, s):
    return np.maximum(0.0, 1.0 - y * s)


def _hinge_grad(y, s):
    # subgradient 0 at the kink y*s == 1
    return np.where(1.0 - y * s > 0.0, -y, 0.0)


def _squared_hinge(y, s):
    return _hinge(y, s) ** 2


def _squared_hinge_grad(y, s):
    return -2.0 * y * _hinge(y, s)


def _logistic(y, s):
    # log(1 + exp(-y*s)) without overflow
    return np.logaddexp(0.0, -y * s)


def _logistic_grad(y, s):
    # -y * sigmoid(-y*s), tanh form is stable for large |s|
    return -y * 0.5 * (1.0 + np.tanh(-0.5 * y * s))


def _zero_one(y, s):
    # sign(0) counts as +1
    pred = np.where(s >= 0.0, 1.0, -1.0)
    return (pred != y).astype(float)


def _linear(y, s):
    return -y * s


def _linear_grad(y, s):
    return -y * np.ones_like(s)


_LOSS_TABLE = {
    "zero_one": (_zero_one, None),
    "hinge": (_hinge, _hinge_grad),
    "squared_hinge": (_squared_hinge, _squared_hinge_grad),
    "logistic": (_logistic, _logistic_grad),
    "linear": (_linear, _linear_grad),
}


@dataclass(frozen=True)
class LossSpec:
    """Tagged base loss with value and score-subgradient.

    zero_one is evaluation only (no subgradient); the other kinds are
    convex in the score.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ParameterError(f"unknown loss kind {self.kind!r}")

    @property
    def convex(self) -> bool:
        return self.kind != "zero_one"

    def values(self, labels: np.ndarray, scores: np.ndarray) -> np.ndarray:
        fn, _ = _LOSS_TABLE[self.kind]
        return fn(np.asarray(labels, float), np.asarray(scores, float))

    def grads(self, labels: np.ndarray, scores: np.ndarray) -> np.ndarray:
        """Subgradient of the loss with respect to the score, elementwise."""
        _, gn = _LOSS_TABLE[self.kind]
        if gn is None:
            raise ParameterError(f"loss {self.kind!r} has no subgradient")
        return gn(np.asarray(labels, float), np.asarray(scores, float))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense features, labels in {-1, +1}, one sensitive value per row.

    ``sensitive`` holds either integer group codes or raw reals.  An
    optional ``group_weighting`` maps each observed sensitive value to a
    nonnegative weight; weights must sum to one and the keys must cover
    exactly the observed values.
    """

    features: np.ndarray
    labels: np.ndarray
    sensitive: np.ndarray
    group_weighting: Optional[dict] = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float).reshape(-1)
        s = np.asarray(self.sensitive).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InputError("features must be a nonempty 2-d matrix")
        if y.shape[0] != X.shape[0] or s.shape[0] != X.shape[0]:
            raise InputError("labels and sensitive values must match the row count")
        if not np.all(np.isfinite(X)):
            raise InputError("features must be finite")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InputError("labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "sensitive", s)
        if self.group_weighting is not None:
            w = self.group_weighting
            keys = set(w.keys())
            seen = set(np.unique(s).tolist())
            if keys != seen:
                raise InputError(
                    f"group weighting keys {sorted(map(repr, keys))} do not cover "
                    f"observed sensitive values {sorted(map(repr, seen))}")
            vals = np.array([float(w[k]) for k in w], dtype=float)
            if np.any(vals < 0.0):
                raise InputError("group weights must be nonnegative")
            if abs(vals.sum() - 1.0) > PROB_TOL:
                raise InputError("group weights must sum to 1")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def take(self, idx: np.ndarray) -> "Dataset":
        """Row subset, preserving the group weighting when it still covers."""
        sub_sensitive = self.sensitive[idx]
        weighting = self.group_weighting
        if weighting is not None:
            seen = set(np.unique(sub_sensitive).tolist())
            if set(weighting.keys()) != seen:
                weighting = None
        return Dataset(self.features[idx], self.labels[idx], sub_sensitive,
                       weighting)


@dataclass(frozen=True, eq=False)
class GroupPartition:
    """Row-to-group assignment plus per-group sizes and probabilities."""

    group_ids: np.ndarray
    sizes: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        gid = np.asarray(self.group_ids, dtype=int).reshape(-1)
        sizes = np.asarray(self.sizes, dtype=int).reshape(-1)
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if sizes.size != probs.size:
            raise InputError("sizes and probabilities must have equal length")
        if np.any(sizes < 1):
            raise InputError("every group needs at least one row")
        if int(sizes.sum()) != gid.size:
            raise InputError("group sizes must sum to the row count")
        if np.any(probs < 0.0) or abs(float(probs.sum()) - 1.0) > PROB_TOL:
            raise InputError("group probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "group_ids", gid)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.sizes.size


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Weight vector plus intercept; scores are x . w + b."""

    weights: np.ndarray
    intercept: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.intercept):
            raise ParameterError("model parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))

    @classmethod
    def zeros(cls, d: int) -> "LinearModel":
        return cls(np.zeros(d), 0.0)

    def scores(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, float) @ self.weights + self.intercept


def _first_appearance_codes(values: np.ndarray):
    """Codes 0..n-1 in order of first appearance, plus the distinct values."""
    seen: dict = {}
    codes = np.empty(values.shape[0], dtype=int)
    order = []
    for i, v in enumerate(values.tolist()):
        if v not in seen:
            seen[v] = len(seen)
            order.append(v)
        codes[i] = seen[v]
    return codes, order


def partition(dataset: Dataset, mode: str = "categorical") -> GroupPartition:
    """Group the rows by sensitive value, or one singleton group per row.

    Categorical mode requires integer-coded sensitive values and yields
    one group per distinct value in first-appearance order, with
    probabilities from ``dataset.group_weighting`` when present and the
    empirical frequencies otherwise.  Per-instance mode gives every row
    its own group with probability 1/m (the route for real-valued
    sensitive features).
    """
    if mode not in PARTITION_MODES:
        raise ParameterError(f"unknown partition mode {mode!r}")
    m = dataset.m
    if mode == "per_instance":
        return GroupPartition(np.arange(m), np.ones(m, dtype=int),
                              np.full(m, 1.0 / m))
    s = dataset.sensitive
    if s.dtype.kind == "f" and not np.all(s == np.rint(s)):
        raise ParameterError(
            "categorical partition requires integer-coded sensitive values; "
            "use per_instance mode for real-valued sensitive features")
    codes, order = _first_appearance_codes(s)
    sizes = np.bincount(codes, minlength=len(order))
    if dataset.group_weighting is not None:
        probs = np.array([float(dataset.group_weighting[v]) for v in order])
    else:
        probs = sizes / m
    return GroupPartition(codes, sizes, probs)


def group_risk_vector(model: LinearModel, dataset: Dataset,
                      part: GroupPartition, loss: LossSpec) -> np.ndarray:
    """Per-group mean losses, in group order, via a fixed reduction order."""
    if model.weights.shape[0] != dataset.d:
        raise ParameterError("model dimension does not match the dataset")
    if part.group_ids.shape[0] != dataset.m:
        raise ParameterError("partition does not match the dataset")
    losses = loss.values(dataset.labels, model.scores(dataset.features))
    sums = np.bincount(part.group_ids, weights=losses, minlength=part.n)
    return sums / part.sizes


def subgroup_risks(model: LinearModel, dataset: Dataset, part: GroupPartition,
                   loss: LossSpec) -> DiscreteRandomVariable:
    """The subgroup-risk variable: one atom per group at its mean loss."""
    return DiscreteRandomVariable(group_risk_vector(model, dataset, part, loss),
                                  part.probs)


def weighted_risk(model: LinearModel, dataset: Dataset, part: GroupPartition,
                  loss: LossSpec) -> float:
    """Expectation of the subgroup risks under the group probabilities.

    With empirical probabilities this equals the plain sample mean loss.
    """
    return float(np.dot(part.probs, group_risk_vector(model, dataset, part, loss)))


def margins(model: LinearModel, dataset: Dataset) -> DiscreteRandomVariable:
    """Per-instance margin variable with atoms (-y*score, 1/m).

    Identical to the subgroup risks under the linear loss with the
    per-instance partition; exposed so the soft-margin connection can be
    inspected directly.
    """
    if model.weights.shape[0] != dataset.d:
        raise ParameterError("model dimension does not match the dataset")
    vals = -dataset.labels * model.scores(dataset.features)
    return DiscreteRandomVariable(vals, np.full(dataset.m, 1.0 / dataset.m))
