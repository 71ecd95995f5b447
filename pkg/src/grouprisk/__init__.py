"""Fairness-aware learning through risk-measure aggregation of subgroup risks.

The library splits a classification dataset into subgroups along a
sensitive feature, summarises a model's per-group mean losses as a
discrete random variable, and trains linear models that minimise a risk
measure of that variable, most importantly the conditional value at risk
through its variational form, which keeps the objective convex.  It also
ships falsification harnesses for the axioms such risk measures and their
inequality-index counterparts are expected to satisfy.
"""

__version__ = "0.1.0"

from .errors import (GroupRiskError, IngestionError, InputError,
                     NumericalError, ParameterError, UndefinedMetricError,
                     UnsupportedAxiomError)
from .riskvar import (AggregatorSpec, DiscreteRandomVariable,
                      FalsificationReport, aggregate, check_axiom, cvar,
                      cvar_deviation, expectation, quantile, sd_deviation)
from .subgroup import (Dataset, GroupPartition, LinearModel, LossSpec,
                       margins, partition, subgroup_risks, weighted_risk)
from .optim import (TrainConfig, TrainReport, alpha_sweep, cvar_objective,
                    subgradient, train)
from .metrics import (EvaluationReport, covariance_metric, dp_violation,
                      evaluate, mean_difference_01, mutual_information_metric,
                      pairwise_disagreement, predictions_from_scores,
                      subgroup_loss_gap)
from .inequality import (InequalityMeasure, LorenzCurve,
                         check_inequality_axiom, coefficient_of_variation,
                         cvar_inequality, deviation_from_inequality,
                         from_deviation, inequality_from_deviation,
                         lorenz_curve, lorenz_dominates, majorized_by,
                         pigou_dalton_pair, risk_from_inequality,
                         spread_over_mean)
from .data import (CsvSchema, Scaler, SplitResult, SynthSpec, generate_synth,
                   load_csv, split, standardize)

__all__ = [
    "__version__",
    "GroupRiskError", "IngestionError", "InputError", "NumericalError",
    "ParameterError", "UndefinedMetricError", "UnsupportedAxiomError",
    "AggregatorSpec", "DiscreteRandomVariable", "FalsificationReport",
    "aggregate", "check_axiom", "cvar", "cvar_deviation", "expectation",
    "quantile", "sd_deviation",
    "Dataset", "GroupPartition", "LinearModel", "LossSpec", "margins",
    "partition", "subgroup_risks", "weighted_risk",
    "TrainConfig", "TrainReport", "alpha_sweep", "cvar_objective",
    "subgradient", "train",
    "EvaluationReport", "covariance_metric", "dp_violation", "evaluate",
    "mean_difference_01", "mutual_information_metric",
    "pairwise_disagreement", "predictions_from_scores", "subgroup_loss_gap",
    "InequalityMeasure", "LorenzCurve", "check_inequality_axiom",
    "coefficient_of_variation", "cvar_inequality",
    "deviation_from_inequality", "from_deviation",
    "inequality_from_deviation", "lorenz_curve", "lorenz_dominates",
    "majorized_by", "pigou_dalton_pair", "risk_from_inequality",
    "spread_over_mean",
    "CsvSchema", "Scaler", "SplitResult", "SynthSpec", "generate_synth",
    "load_csv", "split", "standardize",
]
