"""Subgradient training of linear models under subgroup-risk aggregators.

The trainer minimises aggregate(subgroup risks of f) over (weights,
intercept) by plain subgradient descent from zero initialisation, with an
L2 term on the weights.  For the cvar aggregator the scalar threshold rho
of the variational form is not descended: it is reset each epoch to the
exact minimiser for the current model, the lower alpha-quantile of the
subgroup risks.  The top-k aggregator is trained as cvar over the
per-instance partition at alpha = 1 - k/m, which makes the two objectives
and their optimisation traces coincide.

At the exact rho the quantile atom itself is active with the fractional
tail weight ((1 - alpha) - P[risk > rho]) / P[risk = rho], so the descent
direction stays informative when several groups tie (in particular at the
zero model, where every group has the same risk).  The standalone
``subgradient`` function instead keeps the documented convention of a
strict tail and zero weight on ties, which is what finite-difference
checks at smooth points exercise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalError, ParameterError
from .riskvar import (AggregatorSpec, DiscreteRandomVariable, _cvar_value,
                      _quantile_value, expectation, sd_deviation)
from .subgroup import (Dataset, GroupPartition, LinearModel, LossSpec,
                       group_risk_vector, partition)

STEP_DECAYS = ("constant", "inv_sqrt")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    The loss must be convex (zero_one is evaluation only).  step_decay
    ``inv_sqrt`` divides the base step by sqrt(epoch index), the usual
    safe schedule for nonsmooth objectives.
    """

    aggregator: AggregatorSpec
    loss: LossSpec
    l2_reg: float = 1e-4
    epochs: int = 200
    step_size: float = 0.5
    step_decay: str = "inv_sqrt"
    seed: int = 0
    partition_mode: str = "categorical"

    def __post_init__(self):
        if not self.loss.convex:
            raise ParameterError("training requires a convex loss")
        if self.epochs < 1:
            raise ParameterError("epochs must be at least 1")
        if self.step_size <= 0.0:
            raise ParameterError("step_size must be positive")
        if self.l2_reg < 0.0:
            raise ParameterError("l2_reg must be nonnegative")
        if self.step_decay not in STEP_DECAYS:
            raise ParameterError(f"unknown step decay {self.step_decay!r}")


@dataclass(frozen=True, eq=False)
class TrainReport:
    """Best iterate found, with the objective trace and summary metrics."""

    model: LinearModel
    rho: Optional[float]
    objective_trace: np.ndarray
    final_subgroup_risks: DiscreteRandomVariable
    metrics: dict


def _l2_term(weights: np.ndarray, l2_reg: float) -> float:
    return 0.5 * l2_reg * float(np.dot(weights, weights))


def cvar_objective(model: LinearModel, rho: float, dataset: Dataset,
                   part: GroupPartition, loss: LossSpec, alpha: float,
                   l2_reg: float = 0.0) -> float:
    """Variational objective rho + E[(risks - rho)+]/(1 - alpha) (+ L2).

    With uniform group probabilities this is the empirical tail-average
    objective over the subgroup risks.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie strictly in (0, 1), got {alpha!r}")
    risks = group_risk_vector(model, dataset, part, loss)
    excess = np.maximum(risks - rho, 0.0)
    return (rho + float(np.dot(part.probs, excess)) / (1.0 - alpha)
            + _l2_term(model.weights, l2_reg))


def subgradient(model: LinearModel, rho: float, dataset: Dataset,
                part: GroupPartition, loss: LossSpec, alpha: float,
                l2_reg: float = 0.0):
    """Subgradient of ``cvar_objective`` at (model, rho).

    Returns (weight gradient, intercept gradient, rho gradient).  Groups
    whose risk exactly equals rho take subgradient zero, so only the
    strict tail contributes; at smooth points this matches central finite
    differences.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie strictly in (0, 1), got {alpha!r}")
    risks = group_risk_vector(model, dataset, part, loss)
    inv = 1.0 / (1.0 - alpha)
    active = risks > rho
    g_rho = 1.0 - inv * float(part.probs[active].sum())
    coef_group = np.where(active, part.probs, 0.0) * inv / part.sizes
    coef = coef_group[part.group_ids] * loss.grads(
        dataset.labels, model.scores(dataset.features))
    g_w = dataset.features.T @ coef + l2_reg * model.weights
    g_b = float(coef.sum())
    return g_w, g_b, g_rho


def _trainer_aggregator(config: TrainConfig, m: int):
    """Normalise the aggregator for the descent loop.

    top_k becomes the cvar path over the per-instance partition at
    alpha = 1 - k/m.  The degenerate k = m (the full tail, alpha = 0) is
    the plain per-instance expectation and is routed there so the two
    share every arithmetic step.
    """
    agg = config.aggregator
    mode = config.partition_mode
    if agg.kind == "top_k":
        if agg.k > m:
            raise ParameterError(f"top_k with k={agg.k} exceeds m={m} rows")
        if agg.k == m:
            return "expectation", None, None, "per_instance"
        return "cvar", 1.0 - agg.k / m, None, "per_instance"
    if agg.kind == "cvar":
        return "cvar", agg.alpha, None, mode
    if agg.kind == "sd_penalty":
        return "sd_penalty", None, agg.lam, mode
    return agg.kind, None, None, mode


def _objective_value(kind: str, risks: np.ndarray, probs: np.ndarray,
                     alpha, lam) -> float:
    if kind == "cvar":
        return _cvar_value(risks, probs, alpha)
    if kind == "expectation":
        return float(np.dot(probs, risks))
    if kind == "max":
        # groups assigned zero weight do not count
        return float(risks[probs > 0.0].max())
    # sd_penalty, computed exactly as the aggregate() definition
    Z = DiscreteRandomVariable(risks, probs)
    return expectation(Z) + lam * sd_deviation(Z)


def _group_coefficients(kind: str, risks: np.ndarray, probs: np.ndarray,
                        alpha, lam):
    """Per-group weights c_s so the descent direction is sum_s c_s grad L_s.

    Returns (coefficients, rho or None).
    """
    if kind == "expectation":
        return probs, None
    if kind == "max":
        mask = probs > 0.0
        top = mask & (risks >= risks[mask].max() - 1e-12)
        return top / float(top.sum()), None
    if kind == "sd_penalty":
        mean = float(np.dot(probs, risks))
        centred = risks - mean
        sigma = float(np.sqrt(np.dot(probs, centred * centred)))
        if sigma > 0.0:
            return probs * (1.0 + lam * centred / sigma), None
        return probs.copy(), None
    # cvar: exact rho update, fractional weight on the quantile atoms so the
    # tail mass is exactly 1 - alpha
    rho = _quantile_value(risks, probs, alpha)
    above = risks > rho
    at = risks == rho
    p_above = float(probs[above].sum())
    p_at = float(probs[at].sum())
    theta = min(max(((1.0 - alpha) - p_above) / p_at, 0.0), 1.0)
    weights = np.where(above, 1.0, 0.0) + np.where(at, theta, 0.0)
    return probs * weights / (1.0 - alpha), rho


def train(config: TrainConfig, dataset: Dataset) -> TrainReport:
    """Run subgradient descent and return the best iterate by objective.

    Deterministic: zero initialisation, exact rho updates, fixed reduction
    orders; identical config, dataset, and seed reproduce the report
    bit for bit.
    """
    kind, alpha, lam, mode = _trainer_aggregator(config, dataset.m)
    part = partition(dataset, mode)
    X, y = dataset.features, dataset.labels
    w = np.zeros(dataset.d)
    b = 0.0

    def objective(w_, b_):
        risks = group_risk_vector(LinearModel(w_, b_), dataset, part, config.loss)
        return (_objective_value(kind, risks, part.probs, alpha, lam)
                + _l2_term(w_, config.l2_reg))

    best_obj = objective(w, b)
    initial_obj = best_obj
    best_w, best_b, best_epoch = w.copy(), b, 0
    trace = np.empty(config.epochs)
    for epoch in range(config.epochs):
        scores = X @ w + b
        losses = config.loss.values(y, scores)
        risks = np.bincount(part.group_ids, weights=losses,
                            minlength=part.n) / part.sizes
        coef_group, _ = _group_coefficients(kind, risks, part.probs, alpha, lam)
        coef = (coef_group / part.sizes)[part.group_ids] * config.loss.grads(y,
                                                                             scores)
        g_w = X.T @ coef + config.l2_reg * w
        g_b = float(coef.sum())
        step = config.step_size
        if config.step_decay == "inv_sqrt":
            step /= np.sqrt(epoch + 1.0)
        w = w - step * g_w
        b = b - step * g_b
        obj = objective(w, b)
        if not np.isfinite(obj):
            raise NumericalError(
                f"objective became non-finite at epoch {epoch + 1}",
                trace=trace[:epoch].copy())
        trace[epoch] = obj
        if obj < best_obj:
            best_obj, best_w, best_b, best_epoch = obj, w.copy(), b, epoch + 1

    model = LinearModel(best_w, best_b)
    final_risks = group_risk_vector(model, dataset, part, config.loss)
    rho = _quantile_value(final_risks, part.probs, alpha) if kind == "cvar" else None
    metrics = {
        "initial_objective": initial_obj,
        "best_objective": best_obj,
        "best_epoch": float(best_epoch),
        "final_objective": float(trace[-1]),
        "objective_convex": 0.0 if kind == "sd_penalty" else 1.0,
    }
    return TrainReport(model=model, rho=rho, objective_trace=trace,
                       final_subgroup_risks=DiscreteRandomVariable(final_risks,
                                                                   part.probs),
                       metrics=metrics)


def alpha_sweep(config_template: TrainConfig, dataset: Dataset,
                alphas: Sequence[float]) -> list[TrainReport]:
    """Independent cvar training runs, one per alpha, ordered by alpha."""
    alphas = sorted(float(a) for a in alphas)
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise ParameterError(f"sweep alpha must lie in (0, 1), got {a!r}")
    return [train(replace(config_template, aggregator=AggregatorSpec.cvar(a)),
                  dataset)
            for a in alphas]
