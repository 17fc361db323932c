"""Laplace mechanism, reproducible noise streams, and budget accounting.

Noise is generated by inverse-CDF transform of uniforms from a seeded
``numpy.random.Generator`` (PCG64).  Every (iteration, cluster) pair gets
its own child seed derived from the master seed, so the stream consumed by
one cluster never depends on how many partitions produced its aggregate or
on the order other clusters were processed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from dpkmeans.core import ClusterAggregate, InvalidInputError

logger = logging.getLogger(__name__)

#: Global sensitivity of one per-cluster count under add/remove of a row.
COUNT_SENSITIVITY = 1.0
#: Global sensitivity of one per-cluster coordinate sum; valid only when
#: every coordinate lies in [0, 1].
SUM_SENSITIVITY = 1.0

# Smallest positive double.  Clamping the inverse-CDF argument here keeps the
# log finite at the u = 0 endpoint without disturbing any other draw.
_LOG_FLOOR = 5e-324


class BudgetExhaustedError(RuntimeError):
    """A phase tried to charge more privacy budget than remains."""


def derive_stream_seed(master_seed: int, iteration: int, cluster_index: int) -> int:
    """Deterministic child seed for one (iteration, cluster) noise stream.

    Uses numpy's ``SeedSequence`` spawning arithmetic so distinct key tuples
    give statistically independent streams while identical tuples always
    reproduce the same one.
    """
    if iteration < 0 or cluster_index < 0:
        raise InvalidInputError("iteration and cluster_index must be >= 0")
    seq = np.random.SeedSequence([int(master_seed), int(iteration), int(cluster_index)])
    return int(seq.generate_state(1, np.uint64)[0])


def laplace_inverse_cdf(u: np.ndarray, scale: float) -> np.ndarray:
    """Map uniforms in [0, 1) to Laplace(0, scale) via the inverse CDF."""
    u = np.asarray(u, dtype=np.float64)
    w = 1.0 - 2.0 * np.abs(u - 0.5)
    return -scale * np.sign(u - 0.5) * np.log(np.maximum(w, _LOG_FLOOR))


@dataclass
class LaplaceSampler:
    """Seeded Laplace noise source that counts its own draws.

    Attributes:
        rng_seed: Seed of the underlying PCG64 generator.
        draw_count: Total variates produced so far (audit aid).
    """

    rng_seed: int
    draw_count: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._rng = np.random.Generator(np.random.PCG64(self.rng_seed))

    def draw_many(self, n: int, scale: float) -> np.ndarray:
        """Draw ``n`` independent Laplace(0, scale) variates."""
        if scale <= 0.0:
            raise InvalidInputError(f"scale must be positive, got {scale}")
        if n < 0:
            raise InvalidInputError(f"n must be >= 0, got {n}")
        u = self._rng.random(n)
        self.draw_count += n
        return laplace_inverse_cdf(u, scale)

    def draw(self, scale: float) -> float:
        """Draw a single Laplace(0, scale) variate.

        Delegates to :meth:`draw_many` so scalar and vector callers consume
        the uniform stream identically.
        """
        return float(self.draw_many(1, scale)[0])


def sample_laplace(sampler: LaplaceSampler, scale: float) -> float:
    """Functional wrapper around :meth:`LaplaceSampler.draw`."""
    return sampler.draw(scale)


def perturb_aggregate(
    aggregate: ClusterAggregate,
    epsilon_count: float,
    epsilon_dim: float,
    sampler: LaplaceSampler,
    *,
    normalized: bool = True,
) -> ClusterAggregate:
    """Add calibrated Laplace noise to a cluster's count and coordinate sums.

    The count is perturbed first with one draw at scale
    ``COUNT_SENSITIVITY / epsilon_count``, then each coordinate sum with one
    draw at ``SUM_SENSITIVITY / epsilon_dim``, in dimension order.  The draw
    order is part of the reproducibility contract.

    Args:
        aggregate: Exact per-cluster statistics.
        epsilon_count: Budget share protecting the count.
        epsilon_dim: Budget share protecting each coordinate sum.
        sampler: Noise stream dedicated to this (iteration, cluster) pair.
        normalized: Must be True; the sum sensitivity constant assumes
            coordinates in [0, 1].

    Returns:
        A new noisy aggregate; the input is not modified.
    """
    if not normalized:
        raise InvalidInputError(
            "noise calibration requires min-max normalized data (sensitivity 1)"
        )
    if epsilon_count <= 0.0 or epsilon_dim <= 0.0:
        raise InvalidInputError("epsilon shares must be positive")
    noisy_count = aggregate.count + sampler.draw(COUNT_SENSITIVITY / epsilon_count)
    noise = sampler.draw_many(aggregate.sums.shape[0], SUM_SENSITIVITY / epsilon_dim)
    return ClusterAggregate(
        cluster_index=aggregate.cluster_index,
        count=noisy_count,
        sums=aggregate.sums + noise,
    )


@dataclass
class BudgetLedger:
    """Append-only record of privacy-budget charges for one run.

    Charges are validated against the total with a small floating-point
    slack so that T charges of epsilon/T, accumulated left to right, are
    accepted as spending exactly the total.
    """

    total: float
    entries: list[tuple[str, float]] = field(default_factory=list)

    #: Relative slack allowed on the "spent <= total" check (scaled by the
    #: total, floored at 1, so huge budgets tolerate their rounding).
    SLACK = 1e-9

    def __post_init__(self) -> None:
        if self.total <= 0.0:
            raise InvalidInputError(f"total budget must be positive, got {self.total}")

    @property
    def spent(self) -> float:
        acc = 0.0
        for _, amount in self.entries:
            acc += amount
        return acc

    @property
    def remaining(self) -> float:
        return self.total - self.spent

    def _slack(self, rel: float) -> float:
        return rel * max(1.0, self.total)

    def charge(self, phase: str, amount: float) -> "BudgetLedger":
        """Record a charge; raises :class:`BudgetExhaustedError` on overdraft."""
        if amount <= 0.0:
            raise InvalidInputError(f"charge must be positive, got {amount}")
        projected = self.spent + amount
        if projected > self.total + self._slack(self.SLACK):
            raise BudgetExhaustedError(
                f"charging {amount:.6g} for {phase!r} would spend "
                f"{projected:.6g} of total {self.total:.6g}"
            )
        self.entries.append((phase, amount))
        return self

    def assert_fully_spent(self, tol: float = 1e-9) -> None:
        """Verify the run consumed its whole budget (within relative ``tol``)."""
        if abs(self.remaining) > self._slack(tol):
            raise BudgetExhaustedError(
                f"budget not fully spent: remaining {self.remaining:.6g} "
                f"of {self.total:.6g}"
            )


def ledger_charge(ledger: BudgetLedger, phase: str, amount: float) -> BudgetLedger:
    """Functional wrapper around :meth:`BudgetLedger.charge`."""
    return ledger.charge(phase, amount)
