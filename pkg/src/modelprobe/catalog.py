"""Built-in property catalog, loaded into the store at first start.

Everything a tester needs to be orchestrated and rendered lives in this data:
metrics with verdict rules and recommendation texts, parameters with defaults
and ranges, and the columns a failing case exposes. New properties plug in by
registering further definitions; no code changes needed downstream.
"""

from __future__ import annotations

from .entities import MetricDef, ParameterDef, PropertyDefinition
from .store import Store

FLIP_RATE_RECOMMENDATIONS = {
    "informational": "Inspect the failing pairs; retraining with them appended usually reduces the flip rate.",
    "fail": "Retrain with the failing pairs appended to the training data.",
}


def builtin_definitions() -> list[PropertyDefinition]:
    return [
        PropertyDefinition(
            id="correctness",
            modality="tabular",
            display_name="Correctness",
            description="Predicted labels against a gold-labeled evaluation set.",
            metric_defs=[
                MetricDef("accuracy", direction="higher",
                          recommendations={"informational": "Compare against the baseline accuracy for this task."}),
                MetricDef("precision", direction="higher",
                          description="Macro-averaged over labels."),
                MetricDef("recall", direction="higher",
                          description="Macro-averaged over labels."),
                MetricDef("f_score", direction="higher",
                          description="Macro-averaged over labels."),
            ],
            result_schema=["sample", "gold_label", "predicted_label"],
        ),
        PropertyDefinition(
            id="group-discrimination",
            modality="tabular",
            display_name="Group Discrimination",
            description="Favorable-rate comparison between minority and majority groups.",
            metric_defs=[
                MetricDef(
                    "disparate_impact",
                    direction="none",
                    verdict_rule={"kind": "fail_if_outside", "low_param": "di_low", "high_param": "di_high"},
                    recommendations={
                        "fail": "Rebalance the training data or apply bias mitigation before deployment.",
                        "pass": "Favorable rates are within the configured fairness band.",
                    },
                    description="Minority favorable rate over majority favorable rate.",
                ),
                MetricDef("demographic_parity", direction="none",
                          description="Minority favorable rate minus majority favorable rate."),
            ],
            parameter_defs=[
                ParameterDef("di_low", "float", default=0.8, minimum=0.0, maximum=100.0,
                             help="Lower bound of the acceptable disparate-impact band."),
                ParameterDef("di_high", "float", default=1.25, minimum=0.0, maximum=100.0,
                             help="Upper bound of the acceptable disparate-impact band."),
            ],
            result_schema=["group", "sample", "predicted_label"],
        ),
        PropertyDefinition(
            id="individual-discrimination",
            modality="tabular",
            display_name="Individual Discrimination",
            description="Pairs differing only in a protected attribute must keep their label.",
            metric_defs=[
                MetricDef("flip_rate", direction="lower",
                          recommendations=FLIP_RATE_RECOMMENDATIONS),
            ],
            result_schema=["role", "protected_attribute", "sample", "predicted_label"],
        ),
        PropertyDefinition(
            id="robustness",
            modality="tabular",
            display_name="Adversarial Robustness",
            description="Small numeric perturbations must keep the label.",
            metric_defs=[
                MetricDef("flip_rate", direction="lower",
                          recommendations=FLIP_RATE_RECOMMENDATIONS),
            ],
            parameter_defs=[
                ParameterDef("epsilon", "float", default=0.05, minimum=1e-9, maximum=0.5,
                             help="Perturbation magnitude as a fraction of each numeric column's range."),
                ParameterDef("neighbors_per_sample", "int", default=4, minimum=1, maximum=100),
            ],
            result_schema=["role", "sample", "predicted_label"],
        ),
        PropertyDefinition(
            id="typo-sensitivity",
            modality="text",
            display_name="Typo Sensitivity",
            description="Keyboard-realistic edits inside words must keep the label.",
            metric_defs=[
                MetricDef("flip_rate", direction="lower",
                          recommendations=FLIP_RATE_RECOMMENDATIONS),
            ],
            parameter_defs=[
                ParameterDef("level", "int", default=2, minimum=1, maximum=1000,
                             help="Number of edit operations per sentence (absolute count)."),
            ],
            result_schema=["role", "text", "predicted_label"],
        ),
        PropertyDefinition(
            id="noise-sensitivity",
            modality="text",
            display_name="Noise Sensitivity",
            description="Stray characters at word boundaries must keep the label.",
            metric_defs=[
                MetricDef("flip_rate", direction="lower",
                          recommendations=FLIP_RATE_RECOMMENDATIONS),
            ],
            parameter_defs=[
                ParameterDef("level", "int", default=2, minimum=1, maximum=1000,
                             help="Number of inserted characters per sentence (absolute count)."),
            ],
            result_schema=["role", "text", "predicted_label"],
        ),
        PropertyDefinition(
            id="ts-small-linear-change",
            modality="timeseries",
            display_name="Small Linear Change",
            description="A tiny constant shift of the series must not degrade forecasts.",
            metric_defs=[
                MetricDef(
                    "delta_r", direction="lower",
                    verdict_rule={"kind": "fail_if_greater", "param": "alpha"},
                    recommendations={
                        "fail": "Forecast error is unstable under tiny shifts; train with stronger regularization.",
                    },
                    description="Relative RMSE gain after the transform.",
                ),
            ],
            parameter_defs=[
                ParameterDef("alpha", "float", default=0.10, minimum=1e-9, maximum=100.0),
                ParameterDef("history_len", "int", default=48, minimum=2, maximum=100000),
                ParameterDef("horizon_len", "int", default=12, minimum=1, maximum=100000),
                ParameterDef("stride", "int", default=12, minimum=1, maximum=100000),
            ],
            result_schema=["role", "delta_r", "rmse_original", "rmse_transformed"],
        ),
        PropertyDefinition(
            id="ts-unordered-data",
            modality="timeseries",
            display_name="Un-ordered Data",
            description="Record order must not matter when timestamps are present.",
            metric_defs=[
                MetricDef(
                    "delta_r", direction="lower",
                    verdict_rule={"kind": "fail_if_greater", "param": "alpha"},
                    recommendations={
                        "fail": "Sort incoming records by timestamp before forecasting.",
                    },
                ),
            ],
            parameter_defs=[
                ParameterDef("alpha", "float", default=0.10, minimum=1e-9, maximum=100.0),
                ParameterDef("history_len", "int", default=48, minimum=2, maximum=100000),
                ParameterDef("horizon_len", "int", default=12, minimum=1, maximum=100000),
                ParameterDef("stride", "int", default=12, minimum=1, maximum=100000),
            ],
            result_schema=["role", "delta_r", "rmse_original", "rmse_transformed"],
        ),
        PropertyDefinition(
            id="ts-large-linear-change",
            modality="timeseries",
            display_name="Large Linear Change",
            description="Far outside the training range the error must grow; a flat error "
                        "betrays rescaling with the test window.",
            metric_defs=[
                MetricDef(
                    "delta_r", direction="higher",
                    verdict_rule={"kind": "fail_if_less", "param": "beta"},
                    recommendations={
                        "fail": "Do not rescale inputs with the incoming window's own min/max.",
                    },
                ),
            ],
            parameter_defs=[
                ParameterDef("beta", "float", default=0.10, minimum=1e-9, maximum=100.0),
                ParameterDef("training_min", "float", default=None, mandatory=False,
                             help="Defaults to the training data minimum."),
                ParameterDef("training_max", "float", default=None, mandatory=False,
                             help="Defaults to the training data maximum."),
                ParameterDef("history_len", "int", default=48, minimum=2, maximum=100000),
                ParameterDef("horizon_len", "int", default=12, minimum=1, maximum=100000),
                ParameterDef("stride", "int", default=12, minimum=1, maximum=100000),
            ],
            result_schema=["role", "delta_r", "rmse_original", "rmse_transformed"],
        ),
    ]


def install_builtin_catalog(store: Store) -> list[str]:
    """Idempotent: registers any built-in definition that is not stored yet."""
    existing = {d.id for d in store.list_property_definitions()}
    installed = []
    for definition in builtin_definitions():
        if definition.id not in existing:
            store.register_property_definition(definition)
            installed.append(definition.id)
    return installed
