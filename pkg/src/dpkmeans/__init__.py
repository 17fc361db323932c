"""Differentially private k-means clustering with explicit budget planning.

The package is organized around a small pipeline:

- :mod:`dpkmeans.ingestion` loads CSV data and min-max normalizes features,
- :mod:`dpkmeans.planner` turns a total privacy budget into a per-iteration
  allocation with a closed-form iteration count,
- :mod:`dpkmeans.canopy` picks initial centroids from noisy canopy
  pre-clusters,
- :mod:`dpkmeans.engine` runs partitioned Lloyd iterations with Laplace
  noise injected at the reduce step,
- :mod:`dpkmeans.evaluation` scores runs (NICV) and drives multi-variant
  comparisons.
"""

from dpkmeans.core import (
    Assignment,
    CentroidSet,
    ClusterAggregate,
    Dataset,
    InvalidInputError,
)
from dpkmeans.engine import EngineConfig, Variant, run_baseline, run_edpdcs
from dpkmeans.evaluation import RunReport, compare_variants, nicv
from dpkmeans.mechanism import BudgetExhaustedError, BudgetLedger, LaplaceSampler
from dpkmeans.planner import BudgetPlan, PlannerInputs, make_plan

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "BudgetExhaustedError",
    "BudgetLedger",
    "BudgetPlan",
    "CentroidSet",
    "ClusterAggregate",
    "Dataset",
    "EngineConfig",
    "InvalidInputError",
    "LaplaceSampler",
    "PlannerInputs",
    "RunReport",
    "Variant",
    "compare_variants",
    "make_plan",
    "nicv",
    "run_baseline",
    "run_edpdcs",
    "__version__",
]
