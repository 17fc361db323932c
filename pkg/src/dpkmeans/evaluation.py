"""Run reports, clustering quality (NICV), and multi-variant comparisons.

NICV -- normalized intra-cluster variance -- is the mean squared distance
of every point to its assigned centroid.  Lower is better; it is the one
number used throughout to compare private runs against each other and
against the exact baseline.
"""

from __future__ import annotations

import csv
import json
import logging
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from dpkmeans.core import Assignment, CentroidSet, Dataset, InvalidInputError

logger = logging.getLogger(__name__)


def nicv(data: Dataset, centroid_set: CentroidSet, assignment: Assignment) -> float:
    """Normalized intra-cluster variance of an assignment.

    Mean, over all N rows, of the squared Euclidean distance from each row
    to the centroid its label points at.
    """
    if assignment.n_rows != data.n_rows:
        raise InvalidInputError(
            f"assignment covers {assignment.n_rows} rows, data has {data.n_rows}"
        )
    labels = assignment.labels
    if labels.size and labels.max() >= centroid_set.k:
        raise InvalidInputError(
            f"label {labels.max()} out of range for k={centroid_set.k}"
        )
    diffs = data.points - centroid_set.centroids[labels]
    return float((diffs * diffs).sum() / data.n_rows)


@dataclass
class RunReport:
    """Everything needed to understand and replay one clustering run.

    ``timings_ms`` holds wall-clock measurements only; it is excluded from
    :meth:`comparable_json` because timing is the one part of a run that is
    not reproducible.  ``n_partitions`` and the resolved thread count are
    excluded there too: they affect scheduling, never results.
    """

    variant: str
    epsilon: float | None
    master_seed: int
    n_rows: int
    n_dims: int
    k: int
    n_partitions: int
    iterations_run: int
    nicv: float
    budget_spent: float
    budget_remaining: float
    plan: dict | None
    iterations: list[dict]
    config: dict
    notes: list[str]
    timings_ms: dict

    def to_dict(self, include_timings: bool = True) -> dict:
        out = asdict(self)
        if not include_timings:
            out.pop("timings_ms", None)
        return out

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(
            self.to_dict(include_timings=include_timings), indent=2, sort_keys=True
        )

    def comparable_json(self) -> str:
        """Canonical JSON of the result-bearing fields only.

        Two runs that differ only in partitioning or wall clock serialize to
        byte-identical strings here.
        """
        out = self.to_dict(include_timings=False)
        out.pop("n_partitions", None)
        config = dict(out.get("config") or {})
        config.pop("n_partitions", None)
        config.pop("threads", None)
        out["config"] = config
        return json.dumps(out, indent=2, sort_keys=True)


@dataclass(frozen=True)
class ComparisonCell:
    """Mean and spread of NICV for one (variant, epsilon) pair."""

    variant: str
    epsilon: float | None
    n_seeds: int
    mean_nicv: float
    sd_nicv: float
    mean_iterations: float


@dataclass
class ComparisonSummary:
    """Grid of comparison cells plus the per-run reports behind them."""

    cells: list[ComparisonCell]
    runs: list[RunReport] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def cell(self, variant: str, epsilon: float | None) -> ComparisonCell:
        for cell in self.cells:
            if cell.variant == variant and cell.epsilon == epsilon:
                return cell
        raise KeyError(f"no cell for variant={variant!r} epsilon={epsilon!r}")

    def to_json(self, include_runs: bool = True, include_timings: bool = True) -> str:
        out = {
            "config": self.config,
            "cells": [asdict(c) for c in self.cells],
            "notes": self.notes,
        }
        if include_runs:
            out["runs"] = [
                r.to_dict(include_timings=include_timings) for r in self.runs
            ]
        return json.dumps(out, indent=2, sort_keys=True)


def write_comparison_csv(summary: ComparisonSummary, path: str) -> None:
    """One CSV row per comparison cell."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["variant", "epsilon", "n_seeds", "mean_nicv", "sd_nicv", "mean_iterations"]
        )
        for cell in summary.cells:
            writer.writerow(
                [
                    cell.variant,
                    "" if cell.epsilon is None else repr(cell.epsilon),
                    cell.n_seeds,
                    repr(cell.mean_nicv),
                    repr(cell.sd_nicv),
                    repr(cell.mean_iterations),
                ]
            )


def _summarize(variant: str, epsilon: float | None, reports: list[RunReport]) -> ComparisonCell:
    values = [r.nicv for r in reports]
    return ComparisonCell(
        variant=variant,
        epsilon=epsilon,
        n_seeds=len(values),
        mean_nicv=statistics.fmean(values),
        sd_nicv=statistics.pstdev(values) if len(values) > 1 else 0.0,
        mean_iterations=statistics.fmean(r.iterations_run for r in reports),
    )


def compare_variants(
    data: Dataset,
    k: int,
    epsilons: Sequence[float],
    n_seeds: int,
    *,
    base_seed: int = 0,
    rho: float | None = None,
    mse_threshold: float | None = None,
    t_cap: int | None = None,
    epsilon_m_override: float | None = None,
    canopy_params=None,
    n_partitions: int = 1,
    threads: int | None = None,
    variants: Sequence[str] | None = None,
) -> ComparisonSummary:
    """Run every variant over an epsilon grid with paired seeds.

    Each (variant, epsilon) cell aggregates ``n_seeds`` runs at master
    seeds ``base_seed .. base_seed + n_seeds - 1``; the same seed list is
    used for every cell so the comparison is paired.  NONPRIVATE ignores
    epsilon and runs once (at ``base_seed``) as the exact floor reference.
    A run that raises is recorded in the summary notes and skipped rather
    than aborting the whole sweep.
    """
    from dpkmeans.canopy import CanopyParams
    from dpkmeans.engine import EngineConfig, Variant, run_baseline, run_edpdcs
    from dpkmeans.planner import (
        DEFAULT_MSE_THRESHOLD,
        DEFAULT_RHO,
        DEFAULT_T_CAP,
        PlannerInputs,
    )

    if n_seeds < 1:
        raise InvalidInputError(f"n_seeds must be >= 1, got {n_seeds}")
    if not epsilons:
        raise InvalidInputError("need at least one epsilon")
    rho = DEFAULT_RHO if rho is None else rho
    mse_threshold = DEFAULT_MSE_THRESHOLD if mse_threshold is None else mse_threshold
    t_cap = DEFAULT_T_CAP if t_cap is None else t_cap
    canopy_params = canopy_params or CanopyParams()
    wanted = [Variant(v) for v in variants] if variants else list(Variant)

    seeds = [base_seed + i for i in range(n_seeds)]
    cells: list[ComparisonCell] = []
    all_runs: list[RunReport] = []
    notes: list[str] = []

    def config_for(variant: Variant, seed: int) -> EngineConfig:
        return EngineConfig(
            variant=variant,
            n_partitions=n_partitions,
            master_seed=seed,
            threads=threads,
        )

    for variant in (v for v in wanted if v is not Variant.NONPRIVATE):
        for eps in epsilons:
            inputs = PlannerInputs(
                n_rows=data.n_rows,
                n_dims=data.n_dims,
                k=k,
                epsilon_total=eps,
                rho=rho,
                mse_threshold=mse_threshold,
                t_cap=t_cap,
                epsilon_m_override=epsilon_m_override,
            )
            reports = []
            for seed in seeds:
                try:
                    if variant is Variant.EDPDCS:
                        _, _, report = run_edpdcs(
                            data, k, inputs, canopy_params, config_for(variant, seed)
                        )
                    else:
                        _, _, report = run_baseline(
                            data,
                            k,
                            eps,
                            config_for(variant, seed),
                            planner_inputs=inputs
                            if variant is Variant.RF_DPKM
                            else None,
                            canopy_params=canopy_params,
                        )
                except Exception as exc:
                    msg = f"{variant.value} eps={eps} seed={seed} failed: {exc}"
                    notes.append(msg)
                    logger.warning("%s", msg)
                    continue
                reports.append(report)
            if reports:
                all_runs.extend(reports)
                cells.append(_summarize(variant.value, eps, reports))
            else:
                notes.append(f"{variant.value} eps={eps}: no successful runs")

    if Variant.NONPRIVATE in wanted:
        try:
            _, _, report = run_baseline(
                data,
                k,
                None,
                config_for(Variant.NONPRIVATE, base_seed),
                canopy_params=canopy_params,
            )
            all_runs.append(report)
            cells.append(_summarize(Variant.NONPRIVATE.value, None, [report]))
        except Exception as exc:
            msg = f"NONPRIVATE seed={base_seed} failed: {exc}"
            notes.append(msg)
            logger.warning("%s", msg)

    return ComparisonSummary(
        cells=cells,
        runs=all_runs,
        notes=notes,
        config={
            "k": k,
            "epsilons": list(epsilons),
            "seeds": seeds,
            "rho": rho,
            "mse_threshold": mse_threshold,
            "t_cap": t_cap,
            "epsilon_m_override": epsilon_m_override,
            "n_rows": data.n_rows,
            "n_dims": data.n_dims,
            "source_label": data.source_label,
        },
    )


@dataclass(frozen=True)
class TimingCell:
    """Median wall clock for one (dataset size, partition count) pair.

    Wall-clock numbers are machine- and load-dependent; they are recorded
    for trend inspection, never for reproducibility checks.
    """

    n_rows: int
    n_partitions: int
    median_ms: float
    reps: int


def timing_sweep(
    dataset_factory: Callable[[int], Dataset],
    sizes: Sequence[int],
    partition_counts: Sequence[int],
    k: int,
    epsilon: float,
    *,
    reps: int = 3,
    master_seed: int = 0,
    threads: int | None = None,
) -> list[TimingCell]:
    """Measure run wall clock over a (size x partitions) grid.

    ``dataset_factory`` maps a row count to a dataset; each grid cell times
    ``reps`` full private runs and keeps the median.
    """
    from dpkmeans.engine import EngineConfig, Variant, run_edpdcs
    from dpkmeans.planner import PlannerInputs

    if reps < 1:
        raise InvalidInputError(f"reps must be >= 1, got {reps}")
    cells: list[TimingCell] = []
    for n_rows in sizes:
        data = dataset_factory(n_rows)
        inputs = PlannerInputs(
            n_rows=data.n_rows, n_dims=data.n_dims, k=k, epsilon_total=epsilon
        )
        for parts in partition_counts:
            config = EngineConfig(
                variant=Variant.EDPDCS,
                n_partitions=parts,
                master_seed=master_seed,
                threads=threads,
            )
            samples = []
            for _ in range(reps):
                t0 = time.perf_counter()
                run_edpdcs(data, k, inputs, None, config)
                samples.append(1e3 * (time.perf_counter() - t0))
            cells.append(
                TimingCell(
                    n_rows=data.n_rows,
                    n_partitions=parts,
                    median_ms=statistics.median(samples),
                    reps=reps,
                )
            )
            logger.info(
                "timing n_rows=%d partitions=%d median=%.1f ms",
                data.n_rows,
                parts,
                cells[-1].median_ms,
            )
    return cells


def write_timing_csv(cells: Sequence[TimingCell], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_rows", "n_partitions", "median_ms", "reps"])
        for cell in cells:
            writer.writerow([cell.n_rows, cell.n_partitions, repr(cell.median_ms), cell.reps])
