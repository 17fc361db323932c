"""Partitioned Lloyd iterations with noise injected at the reduce step.

The dataset is decomposed into fixed-size row blocks; map tasks compute
per-block cluster statistics (counts and coordinate sums) and the reduce
step merges them in ascending block order before adding noise.  Because the
block boundaries and the merge order never depend on how many workers are
used, results are bit-for-bit identical across partition counts -- the
partition count only controls how blocks are grouped onto threads.

Four run variants share this machinery:

- ``EDPDCS``: canopy initialization (charged as the first iteration) plus
  planner-scheduled noisy Lloyd steps at a uniform per-iteration budget.
- ``RF_DPKM``: random-row initialization, planner-scheduled noisy steps.
- ``RU_DPKM``: random-row initialization, budget-halving schedule with a
  convergence stop and a reported residual.
- ``NONPRIVATE``: exact Lloyd from noise-free canopy initialization.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from dpkmeans.canopy import CanopyParams, select_initial_centroids, with_resolved_seed
from dpkmeans.core import (
    Assignment,
    CentroidSet,
    ClusterAggregate,
    Dataset,
    InvalidInputError,
    assign_labels,
    label_points,
)
from dpkmeans.evaluation import RunReport, nicv
from dpkmeans.mechanism import (
    BudgetLedger,
    LaplaceSampler,
    derive_stream_seed,
    perturb_aggregate,
)
from dpkmeans.planner import BudgetPlan, PlannerInputs, make_plan

logger = logging.getLogger(__name__)

#: Rows per map block.  Fixed so the floating-point merge tree of the
#: reduce step is independent of the partition count.
MAP_BLOCK_ROWS = 4096


class Variant(str, Enum):
    """Selectable clustering strategies."""

    EDPDCS = "EDPDCS"
    RF_DPKM = "RF_DPKM"
    RU_DPKM = "RU_DPKM"
    NONPRIVATE = "NONPRIVATE"


@dataclass(frozen=True)
class EngineConfig:
    """Execution knobs shared by all variants.

    Attributes:
        variant: Which strategy to run.
        n_partitions: How many groups of map blocks run concurrently.
            Affects scheduling and wall clock only, never results.
        master_seed: Root of every random stream in the run.
        threads: Worker threads; defaults to
            ``min(n_partitions, os.cpu_count())``.
        clamp_centroids: Clip noisy centroids back into the unit cube.
        min_count: Floor applied to noisy counts before dividing, so a
            cluster emptied by noise cannot blow up the mean.
        ru_shift_tol: RU_DPKM stops once the largest centroid movement
            drops below this.
        ru_max_iters: RU_DPKM iteration cap.
        nonprivate_shift_tol: Convergence threshold for exact Lloyd.
        nonprivate_max_iters: Iteration cap for exact Lloyd.
        diagnostics: Retain per-iteration exact and noisy aggregates in the
            run report (bulky; off by default).
    """

    variant: Variant = Variant.EDPDCS
    n_partitions: int = 1
    master_seed: int = 0
    threads: int | None = None
    clamp_centroids: bool = True
    min_count: float = 1.0
    ru_shift_tol: float = 1e-4
    ru_max_iters: int = 10
    nonprivate_shift_tol: float = 1e-9
    nonprivate_max_iters: int = 100
    diagnostics: bool = False

    def __post_init__(self) -> None:
        if self.n_partitions < 1:
            raise InvalidInputError(
                f"n_partitions must be >= 1, got {self.n_partitions}"
            )
        if self.master_seed < 0:
            raise InvalidInputError("master_seed must be >= 0")
        if self.threads is not None and self.threads < 1:
            raise InvalidInputError(f"threads must be >= 1, got {self.threads}")
        if self.min_count <= 0.0:
            raise InvalidInputError(f"min_count must be positive, got {self.min_count}")
        if self.ru_max_iters < 1 or self.nonprivate_max_iters < 1:
            raise InvalidInputError("iteration caps must be >= 1")

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, min(self.threads, self.n_partitions))
        return max(1, min(self.n_partitions, os.cpu_count() or 1))


def block_spans(n_rows: int, block_rows: int = MAP_BLOCK_ROWS) -> list[tuple[int, int]]:
    """Fixed [start, stop) row spans covering the dataset."""
    return [(s, min(s + block_rows, n_rows)) for s in range(0, n_rows, block_rows)]


def map_assign(
    points: np.ndarray, centroid_set: CentroidSet
) -> dict[int, ClusterAggregate]:
    """Map task: per-cluster count and coordinate sums for one partition.

    Clusters with no local members are omitted, so an empty partition
    yields an empty map.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return {}
    counts, sums = _block_partials(points, centroid_set.centroids, centroid_set.k)
    return {
        j: ClusterAggregate(cluster_index=j, count=float(counts[j]), sums=sums[j])
        for j in range(centroid_set.k)
        if counts[j] > 0
    }


def _block_partials(
    points: np.ndarray, centroids: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    labels = label_points(points, centroids)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    sums = np.zeros((k, centroids.shape[1]), dtype=np.float64)
    # Unbuffered in-order accumulation: each row is added exactly once, in
    # dataset order within the block.
    np.add.at(sums, labels, points)
    return counts, sums


def _reduce_cluster_full(
    partials: Sequence[ClusterAggregate],
    epsilon_dim: float,
    epsilon_count: float,
    sampler: LaplaceSampler | None,
    dp_enabled: bool,
    *,
    prev_centroid: np.ndarray,
    min_count: float = 1.0,
    clamp: bool = True,
) -> tuple[np.ndarray, ClusterAggregate, ClusterAggregate | None]:
    """Reduce one cluster; returns (centroid, exact merged, noisy or None)."""
    if not partials:
        raise InvalidInputError("reduce needs at least one partial aggregate")
    merged = partials[0]
    for part in partials[1:]:
        merged = merged.merge(part)
    if dp_enabled:
        if sampler is None:
            raise InvalidInputError("dp-enabled reduce needs a sampler")
        noisy = perturb_aggregate(merged, epsilon_count, epsilon_dim, sampler)
        denom = max(noisy.count, min_count)
        centroid = noisy.sums / denom
        if clamp:
            centroid = np.clip(centroid, 0.0, 1.0)
        return centroid, merged, noisy
    if merged.count == 0.0:
        return np.array(prev_centroid, dtype=np.float64, copy=True), merged, None
    return merged.sums / merged.count, merged, None


def reduce_cluster(
    partials: Sequence[ClusterAggregate],
    epsilon_dim: float,
    epsilon_count: float,
    sampler: LaplaceSampler | None,
    dp_enabled: bool,
    *,
    prev_centroid: np.ndarray,
    min_count: float = 1.0,
    clamp: bool = True,
) -> np.ndarray:
    """Reduce step for one cluster: merge partials, perturb, recompute mean.

    Partials are merged strictly in the order given (callers pass ascending
    block order).  Under privacy the merged count and sums receive Laplace
    noise before the division, the denominator is floored at ``min_count``,
    and the centroid is clamped back into the unit cube when ``clamp`` is
    set.  Without privacy an empty cluster keeps its previous centroid.
    """
    centroid, _, _ = _reduce_cluster_full(
        partials,
        epsilon_dim,
        epsilon_count,
        sampler,
        dp_enabled,
        prev_centroid=prev_centroid,
        min_count=min_count,
        clamp=clamp,
    )
    return centroid


@dataclass
class IterationTrace:
    """Diagnostic record of one engine iteration (JSON-ready via to_dict)."""

    iteration: int
    phase: str
    budget_charged: float | None
    noise_draws: int
    centroid_shift: float | None
    nicv_after: float
    centroids_before: np.ndarray | None
    centroids_after: np.ndarray
    exact_aggregates: list[ClusterAggregate] | None = None
    noisy_aggregates: list[ClusterAggregate] | None = None

    def to_dict(self) -> dict:
        def agg_list(aggs: list[ClusterAggregate] | None):
            if aggs is None:
                return None
            return [
                {
                    "cluster_index": a.cluster_index,
                    "count": a.count,
                    "sums": a.sums.tolist(),
                }
                for a in aggs
            ]

        return {
            "iteration": self.iteration,
            "phase": self.phase,
            "budget_charged": self.budget_charged,
            "noise_draws": self.noise_draws,
            "centroid_shift": self.centroid_shift,
            "nicv_after": self.nicv_after,
            "centroids_before": None
            if self.centroids_before is None
            else self.centroids_before.tolist(),
            "centroids_after": self.centroids_after.tolist(),
            "exact_aggregates": agg_list(self.exact_aggregates),
            "noisy_aggregates": agg_list(self.noisy_aggregates),
        }


class _BlockAggregator:
    """Runs the map phase over fixed blocks, optionally on a thread pool."""

    def __init__(self, data: Dataset, config: EngineConfig):
        self._points = data.points
        self._spans = block_spans(data.n_rows)
        self._executor: ThreadPoolExecutor | None = None
        self._groups: list[np.ndarray] = []
        workers = config.resolved_threads()
        if workers > 1 and config.n_partitions > 1 and len(self._spans) > 1:
            self._groups = [
                g
                for g in np.array_split(
                    np.arange(len(self._spans)), config.n_partitions
                )
                if g.size
            ]
            self._executor = ThreadPoolExecutor(max_workers=workers)

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def aggregate(self, centroids: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Exact per-cluster counts and sums, merged in ascending block order."""
        if self._executor is None:
            per_block = [
                _block_partials(self._points[s:e], centroids, k)
                for s, e in self._spans
            ]
        else:

            def work(group: np.ndarray) -> list[tuple[int, tuple[np.ndarray, np.ndarray]]]:
                return [
                    (
                        int(b),
                        _block_partials(
                            self._points[self._spans[b][0] : self._spans[b][1]],
                            centroids,
                            k,
                        ),
                    )
                    for b in group
                ]

            indexed: list[tuple[int, tuple[np.ndarray, np.ndarray]]] = []
            for chunk in self._executor.map(work, self._groups):
                indexed.extend(chunk)
            indexed.sort(key=lambda item: item[0])
            per_block = [partial for _, partial in indexed]

        counts = np.zeros(k, dtype=np.float64)
        sums = np.zeros((k, centroids.shape[1]), dtype=np.float64)
        for block_counts, block_sums in per_block:
            counts += block_counts
            sums += block_sums
        return counts, sums


class _Run:
    """Shared state and helpers for one engine run."""

    def __init__(self, data: Dataset, k: int, config: EngineConfig):
        self.data = data
        self.k = k
        self.config = config
        self.trace: list[IterationTrace] = []
        self.iter_ms: list[float] = []
        self._agg = _BlockAggregator(data, config)

    def close(self) -> None:
        self._agg.close()

    def record(
        self,
        iteration: int,
        phase: str,
        budget: float | None,
        draws: int,
        shift: float | None,
        before: np.ndarray | None,
        after: np.ndarray,
        exact: list[ClusterAggregate] | None = None,
        noisy: list[ClusterAggregate] | None = None,
    ) -> None:
        cs = CentroidSet(centroids=after, noisy=False)
        self.trace.append(
            IterationTrace(
                iteration=iteration,
                phase=phase,
                budget_charged=budget,
                noise_draws=draws,
                centroid_shift=shift,
                nicv_after=nicv(self.data, cs, assign_labels(self.data, cs)),
                centroids_before=None if before is None else before.copy(),
                centroids_after=after.copy(),
                exact_aggregates=exact,
                noisy_aggregates=noisy,
            )
        )

    def lloyd_step(
        self,
        centroids: np.ndarray,
        iteration: int,
        epsilon_dim: float | None,
        epsilon_count: float | None,
        dp_enabled: bool,
    ) -> tuple[np.ndarray, int, list[ClusterAggregate], list[ClusterAggregate] | None]:
        """One assign/reduce pass; returns (new centroids, draws, exact, noisy)."""
        config = self.config
        counts, sums = self._agg.aggregate(centroids, self.k)
        new = np.empty_like(centroids)
        draws = 0
        exact_aggs: list[ClusterAggregate] = []
        noisy_aggs: list[ClusterAggregate] = []
        for j in range(self.k):
            sampler = (
                LaplaceSampler(derive_stream_seed(config.master_seed, iteration, j))
                if dp_enabled
                else None
            )
            partial = ClusterAggregate(
                cluster_index=j, count=float(counts[j]), sums=sums[j]
            )
            new[j], exact_j, noisy_j = _reduce_cluster_full(
                [partial],
                epsilon_dim if dp_enabled else 1.0,
                epsilon_count if dp_enabled else 1.0,
                sampler,
                dp_enabled,
                prev_centroid=centroids[j],
                min_count=config.min_count,
                clamp=config.clamp_centroids,
            )
            exact_aggs.append(exact_j)
            if noisy_j is not None:
                noisy_aggs.append(noisy_j)
            if sampler is not None:
                draws += sampler.draw_count
        return new, draws, exact_aggs, (noisy_aggs if dp_enabled else None)


def _max_shift(old: np.ndarray, new: np.ndarray) -> float:
    """Largest Euclidean movement of any single centroid."""
    return float(np.sqrt(((new - old) ** 2).sum(axis=1)).max())


def _random_row_centroids(data: Dataset, k: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.choice(data.n_rows, size=k, replace=False)
    return data.points[np.sort(idx)].copy()


def _validate_run(data: Dataset, k: int, config: EngineConfig) -> None:
    if not data.normalized:
        raise InvalidInputError("engine requires min-max normalized data")
    if k < 1 or k > data.n_rows:
        raise InvalidInputError(f"k={k} out of range for {data.n_rows} rows")
    if config.n_partitions > data.n_rows:
        raise InvalidInputError(
            f"n_partitions={config.n_partitions} exceeds {data.n_rows} rows"
        )


def _finish(
    data: Dataset,
    centroids: np.ndarray,
    noisy: bool,
    report: RunReport,
) -> tuple[CentroidSet, Assignment, RunReport]:
    final = CentroidSet(centroids=centroids, noisy=noisy)
    assignment = assign_labels(data, final)
    report.nicv = nicv(data, final, assignment)
    return final, assignment, report


def run_edpdcs(
    data: Dataset,
    k: int,
    planner_inputs: PlannerInputs,
    canopy_params: CanopyParams | None = None,
    config: EngineConfig | None = None,
) -> tuple[CentroidSet, Assignment, RunReport]:
    """Full budget-planned private run: plan, canopy init, noisy Lloyd steps.

    The initialization pass is charged as the first of the plan's T
    iterations; the remaining T - 1 are noisy Lloyd steps, each charged
    epsilon / T.  The ledger must be exactly exhausted at the end.

    Returns the final (noisy) centroids, the assignment of every row to its
    nearest final centroid, and a replayable run report.
    """
    config = config or EngineConfig(variant=Variant.EDPDCS)
    if config.variant is not Variant.EDPDCS:
        raise InvalidInputError(f"run_edpdcs cannot run variant {config.variant}")
    _validate_run(data, k, config)
    if (
        planner_inputs.n_rows != data.n_rows
        or planner_inputs.n_dims != data.n_dims
        or planner_inputs.k != k
    ):
        raise InvalidInputError(
            "planner inputs (N, d, k) do not match the dataset and k supplied"
        )
    canopy_params = with_resolved_seed(
        canopy_params or CanopyParams(),
        derive_stream_seed(config.master_seed, 0, 0),
    )

    t_start = time.perf_counter()
    plan = make_plan(planner_inputs)
    ledger = BudgetLedger(total=plan.epsilon_total)

    init_sampler = LaplaceSampler(derive_stream_seed(config.master_seed, 1, 0))
    init = select_initial_centroids(
        data,
        k,
        canopy_params,
        plan,
        init_sampler,
        dp_enabled=True,
        fill_seed=derive_stream_seed(config.master_seed, 0, 1),
    )
    ledger.charge("init", plan.epsilon_per_iter)
    init_ms = 1e3 * (time.perf_counter() - t_start)

    centroids = np.array(init.centroids.centroids, copy=True)
    run = _Run(data, k, config)
    run.record(
        1, "init", plan.epsilon_per_iter, init.noise_draws, None, None, centroids
    )
    try:
        for t in range(2, plan.iterations + 1):
            t0 = time.perf_counter()
            ledger.charge(f"iteration-{t}", plan.epsilon_per_iter)
            new, draws, exact, noisy = run.lloyd_step(
                centroids, t, plan.epsilon_dim, plan.epsilon_count, True
            )
            shift = _max_shift(centroids, new)
            run.iter_ms.append(1e3 * (time.perf_counter() - t0))
            run.record(
                t,
                "lloyd",
                plan.epsilon_per_iter,
                draws,
                shift,
                centroids,
                new,
                exact if config.diagnostics else None,
                noisy if config.diagnostics else None,
            )
            centroids = new
    finally:
        run.close()

    ledger.assert_fully_spent()
    report = RunReport(
        variant=Variant.EDPDCS.value,
        epsilon=plan.epsilon_total,
        master_seed=config.master_seed,
        n_rows=data.n_rows,
        n_dims=data.n_dims,
        k=k,
        n_partitions=config.n_partitions,
        iterations_run=plan.iterations,
        nicv=float("nan"),
        budget_spent=ledger.spent,
        budget_remaining=ledger.remaining,
        plan=plan.to_dict(),
        iterations=[t.to_dict() for t in run.trace],
        config=_replay_config(config, planner_inputs, canopy_params),
        notes=list(init.notes),
        timings_ms=_timings(init_ms, run.iter_ms, t_start),
    )
    return _finish(data, centroids, True, report)


def run_baseline(
    data: Dataset,
    k: int,
    epsilon: float | None,
    config: EngineConfig,
    *,
    planner_inputs: PlannerInputs | None = None,
    canopy_params: CanopyParams | None = None,
    initial_centroids: CentroidSet | None = None,
) -> tuple[CentroidSet, Assignment, RunReport]:
    """Run one of the reference variants (RF_DPKM, RU_DPKM, NONPRIVATE).

    RF_DPKM starts from random data rows and runs the planner's iteration
    count at a uniform budget split.  RU_DPKM starts the same way but
    charges iteration t (1-based) epsilon / 2^(t+1) and stops early once
    the largest centroid movement drops below ``ru_shift_tol``; whatever
    the halving schedule leaves unspent is reported as residual.
    NONPRIVATE runs exact Lloyd to convergence from noise-free canopy
    initialization.

    ``initial_centroids`` overrides the variant's own initialization, which
    is how like-for-like comparisons pin both runs to the same start.
    """
    variant = config.variant
    if variant is Variant.EDPDCS:
        raise InvalidInputError("use run_edpdcs for the EDPDCS variant")
    _validate_run(data, k, config)
    if variant is not Variant.NONPRIVATE:
        if epsilon is None or epsilon <= 0.0:
            raise InvalidInputError(f"variant {variant.value} needs a positive epsilon")
        if planner_inputs is not None and planner_inputs.epsilon_total != epsilon:
            raise InvalidInputError(
                "planner_inputs.epsilon_total disagrees with the epsilon argument"
            )

    t_start = time.perf_counter()
    notes: list[str] = []
    plan: BudgetPlan | None = None
    ledger: BudgetLedger | None = None
    canopy_resolved: CanopyParams | None = None

    if variant is Variant.NONPRIVATE:
        if initial_centroids is None:
            canopy_resolved = with_resolved_seed(
                canopy_params or CanopyParams(),
                derive_stream_seed(config.master_seed, 0, 0),
            )
            init = select_initial_centroids(
                data,
                k,
                canopy_resolved,
                None,
                None,
                dp_enabled=False,
                fill_seed=derive_stream_seed(config.master_seed, 0, 1),
            )
            centroids = np.array(init.centroids.centroids, copy=True)
            notes.extend(init.notes)
        else:
            centroids = np.array(initial_centroids.centroids, copy=True)
            notes.append("started from supplied centroids")
    else:
        ledger = BudgetLedger(total=epsilon)
        if variant is Variant.RF_DPKM:
            inputs = planner_inputs or PlannerInputs(
                n_rows=data.n_rows, n_dims=data.n_dims, k=k, epsilon_total=epsilon
            )
            planner_inputs = inputs
            plan = make_plan(inputs)
        if initial_centroids is None:
            centroids = _random_row_centroids(
                data, k, derive_stream_seed(config.master_seed, 0, 1)
            )
        else:
            centroids = np.array(initial_centroids.centroids, copy=True)
            notes.append("started from supplied centroids")

    init_ms = 1e3 * (time.perf_counter() - t_start)
    run = _Run(data, k, config)
    run.record(0, "init", None, 0, None, None, centroids)
    iterations_run = 0

    try:
        if variant is Variant.RF_DPKM:
            per_iter = epsilon / plan.iterations
            share = per_iter / (data.n_dims + 1)
            for t in range(1, plan.iterations + 1):
                t0 = time.perf_counter()
                ledger.charge(f"iteration-{t}", per_iter)
                new, draws, exact, noisy = run.lloyd_step(
                    centroids, t, share, share, True
                )
                shift = _max_shift(centroids, new)
                iterations_run = t
                run.iter_ms.append(1e3 * (time.perf_counter() - t0))
                run.record(
                    t,
                    "lloyd",
                    per_iter,
                    draws,
                    shift,
                    centroids,
                    new,
                    exact if config.diagnostics else None,
                    noisy if config.diagnostics else None,
                )
                centroids = new
            ledger.assert_fully_spent()
        elif variant is Variant.RU_DPKM:
            for t in range(1, config.ru_max_iters + 1):
                t0 = time.perf_counter()
                per_iter = epsilon / (2.0 ** (t + 1))
                ledger.charge(f"iteration-{t}", per_iter)
                share = per_iter / (data.n_dims + 1)
                new, draws, exact, noisy = run.lloyd_step(
                    centroids, t, share, share, True
                )
                shift = _max_shift(centroids, new)
                iterations_run = t
                run.iter_ms.append(1e3 * (time.perf_counter() - t0))
                run.record(
                    t,
                    "lloyd",
                    per_iter,
                    draws,
                    shift,
                    centroids,
                    new,
                    exact if config.diagnostics else None,
                    noisy if config.diagnostics else None,
                )
                centroids = new
                if shift < config.ru_shift_tol:
                    notes.append(f"converged at iteration {t} (shift {shift:.3g})")
                    break
            notes.append(
                f"residual budget {ledger.remaining:.6g} left by halving schedule"
            )
        else:  # NONPRIVATE
            for t in range(1, config.nonprivate_max_iters + 1):
                t0 = time.perf_counter()
                new, _, exact, _ = run.lloyd_step(centroids, t, None, None, False)
                shift = _max_shift(centroids, new)
                iterations_run = t
                run.iter_ms.append(1e3 * (time.perf_counter() - t0))
                run.record(
                    t,
                    "lloyd",
                    None,
                    0,
                    shift,
                    centroids,
                    new,
                    exact if config.diagnostics else None,
                    None,
                )
                centroids = new
                if shift < config.nonprivate_shift_tol:
                    notes.append(f"converged at iteration {t}")
                    break
    finally:
        run.close()

    report = RunReport(
        variant=variant.value,
        epsilon=epsilon,
        master_seed=config.master_seed,
        n_rows=data.n_rows,
        n_dims=data.n_dims,
        k=k,
        n_partitions=config.n_partitions,
        iterations_run=iterations_run,
        nicv=float("nan"),
        budget_spent=ledger.spent if ledger is not None else 0.0,
        budget_remaining=ledger.remaining if ledger is not None else 0.0,
        plan=plan.to_dict() if plan is not None else None,
        iterations=[t.to_dict() for t in run.trace],
        config=_replay_config(config, planner_inputs, canopy_resolved),
        notes=notes,
        timings_ms=_timings(init_ms, run.iter_ms, t_start),
    )
    return _finish(data, centroids, variant is not Variant.NONPRIVATE, report)


def _replay_config(
    config: EngineConfig,
    planner_inputs: PlannerInputs | None,
    canopy_params: CanopyParams | None,
) -> dict:
    out = {
        "variant": config.variant.value,
        "master_seed": config.master_seed,
        "n_partitions": config.n_partitions,
        "threads": config.resolved_threads(),
        "clamp_centroids": config.clamp_centroids,
        "min_count": config.min_count,
        "ru_shift_tol": config.ru_shift_tol,
        "ru_max_iters": config.ru_max_iters,
        "nonprivate_shift_tol": config.nonprivate_shift_tol,
        "nonprivate_max_iters": config.nonprivate_max_iters,
        "map_block_rows": MAP_BLOCK_ROWS,
    }
    if planner_inputs is not None:
        out["planner_inputs"] = {
            "n_rows": planner_inputs.n_rows,
            "n_dims": planner_inputs.n_dims,
            "k": planner_inputs.k,
            "epsilon_total": planner_inputs.epsilon_total,
            "rho": planner_inputs.rho,
            "mse_threshold": planner_inputs.mse_threshold,
            "t_cap": planner_inputs.t_cap,
            "epsilon_m_override": planner_inputs.epsilon_m_override,
        }
    if canopy_params is not None:
        out["canopy"] = {
            "t1": canopy_params.t1,
            "t2": canopy_params.t2,
            "subsample_size": canopy_params.subsample_size,
            "seed": canopy_params.seed,
        }
    return out


def _timings(init_ms: float, iter_ms: list[float], t_start: float) -> dict:
    return {
        "note": "wall clock; excluded from reproducibility comparisons",
        "init_ms": init_ms,
        "iterations_ms": iter_ms,
        "total_ms": 1e3 * (time.perf_counter() - t_start),
    }
