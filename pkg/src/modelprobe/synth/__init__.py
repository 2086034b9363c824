from .schema import TableSchema, Column, load_table, read_csv_rows, infer_schema, parse_rows
from .distribution import (
    JointDistributionModel,
    ColumnDistribution,
    fit_distribution_model,
    apply_udc,
    sample_joint,
)
from .surrogate import (
    SurrogateTree,
    DecisionPath,
    Predicate,
    fit_surrogate,
    extract_paths,
    generate_for_paths,
    path_coverage,
)

__all__ = [
    "TableSchema",
    "Column",
    "load_table",
    "read_csv_rows",
    "infer_schema",
    "parse_rows",
    "JointDistributionModel",
    "ColumnDistribution",
    "fit_distribution_model",
    "apply_udc",
    "sample_joint",
    "SurrogateTree",
    "DecisionPath",
    "Predicate",
    "fit_surrogate",
    "extract_paths",
    "generate_for_paths",
    "path_coverage",
]
