"""CSV loading, min-max normalization, and synthetic data generation.

Everything downstream assumes features normalized into [0, 1], because the
noise mechanism's sensitivity constants are only valid on the unit cube.
``load_csv`` produces raw feature matrices; ``normalize`` rescales them and
remembers the per-column ranges so centroids can be mapped back.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace

import numpy as np

from dpkmeans.core import Dataset, InvalidInputError

logger = logging.getLogger(__name__)


class CsvFormatError(InvalidInputError):
    """A CSV row could not be parsed against the declared column layout."""


@dataclass(frozen=True)
class ColumnSpec:
    """How to treat one CSV column.

    Attributes:
        index: 0-based column position in the file.
        name: Human-readable column name.
        role: "feature" columns become coordinates; "ignore" columns are
            skipped entirely.
        lo, hi: Normalization range.  Filled from observed data by
            :func:`normalize` when not preset.
    """

    index: int
    name: str
    role: str = "feature"
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self) -> None:
        if self.role not in ("feature", "ignore"):
            raise InvalidInputError(f"unknown column role {self.role!r}")
        if self.index < 0:
            raise InvalidInputError(f"column index must be >= 0, got {self.index}")
        if (self.lo is None) != (self.hi is None):
            raise InvalidInputError("lo and hi must be set together")
        if self.lo is not None and self.hi < self.lo:
            raise InvalidInputError(f"empty range [{self.lo}, {self.hi}]")


@dataclass
class LoadResult:
    """Raw feature matrix plus bookkeeping from one CSV load."""

    data: Dataset
    columns: list[ColumnSpec]
    rows_read: int
    rows_dropped: int


def load_csv(
    path: str,
    columns: list[ColumnSpec],
    *,
    has_header: bool = False,
    missing_token: str = "?",
    drop_missing: bool = True,
) -> LoadResult:
    """Load the feature columns of a CSV file into a raw dataset.

    Rows containing ``missing_token`` in any feature column are dropped
    (counted in the result) when ``drop_missing`` is set, and rejected with
    :class:`CsvFormatError` otherwise.  Any other non-numeric feature value
    is always an error, reported with its line number.
    """
    feature_cols = [c for c in columns if c.role == "feature"]
    if not feature_cols:
        raise InvalidInputError("need at least one feature column")
    max_index = max(c.index for c in feature_cols)

    rows: list[list[float]] = []
    rows_read = 0
    rows_dropped = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader, start=1):
            if has_header and line_no == 1:
                continue
            if not record or (len(record) == 1 and not record[0].strip()):
                continue  # blank line
            rows_read += 1
            if len(record) <= max_index:
                raise CsvFormatError(
                    f"{path}:{line_no}: expected at least {max_index + 1} "
                    f"columns, got {len(record)}"
                )
            values = []
            missing = False
            for col in feature_cols:
                token = record[col.index].strip()
                if token == missing_token:
                    missing = True
                    break
                try:
                    values.append(float(token))
                except ValueError as exc:
                    raise CsvFormatError(
                        f"{path}:{line_no}: column {col.name!r} has "
                        f"non-numeric value {token!r}"
                    ) from exc
            if missing:
                if not drop_missing:
                    raise CsvFormatError(
                        f"{path}:{line_no}: missing value in feature column"
                    )
                rows_dropped += 1
                continue
            rows.append(values)

    if not rows:
        raise CsvFormatError(f"{path}: no usable data rows")
    if rows_dropped:
        logger.info("%s: dropped %d row(s) with missing values", path, rows_dropped)
    data = Dataset(
        points=np.asarray(rows, dtype=np.float64),
        normalized=False,
        source_label=path,
    )
    return LoadResult(
        data=data, columns=feature_cols, rows_read=rows_read, rows_dropped=rows_dropped
    )


def normalize(
    data: Dataset, columns: list[ColumnSpec] | None = None
) -> tuple[Dataset, list[ColumnSpec]]:
    """Min-max rescale every column into [0, 1].

    Ranges come from the column specs when preset and from the observed
    data otherwise; the returned specs always carry the ranges used, which
    is what :func:`denormalize` needs to invert the mapping.  A constant
    column maps to 0.5.
    """
    pts = data.points
    if columns is not None and len(columns) != data.n_dims:
        raise InvalidInputError(
            f"{len(columns)} column specs for {data.n_dims} feature columns"
        )
    los = np.empty(data.n_dims)
    his = np.empty(data.n_dims)
    out_cols: list[ColumnSpec] = []
    for j in range(data.n_dims):
        spec = columns[j] if columns is not None else ColumnSpec(index=j, name=f"f{j}")
        lo = spec.lo if spec.lo is not None else float(pts[:, j].min())
        hi = spec.hi if spec.hi is not None else float(pts[:, j].max())
        if pts[:, j].min() < lo or pts[:, j].max() > hi:
            raise InvalidInputError(
                f"column {spec.name!r} has values outside its preset "
                f"range [{lo}, {hi}]"
            )
        los[j], his[j] = lo, hi
        out_cols.append(replace(spec, lo=lo, hi=hi))

    span = his - los
    safe = np.where(span > 0.0, span, 1.0)
    scaled = (pts - los) / safe
    # Degenerate (constant) columns carry no information; park them at the
    # middle of the range so sensitivity bounds stay valid.
    scaled = np.where(span > 0.0, scaled, 0.5)
    scaled = np.clip(scaled, 0.0, 1.0)  # guard the exact endpoints
    return (
        Dataset(points=scaled, normalized=True, source_label=data.source_label),
        out_cols,
    )


def denormalize(points: np.ndarray, columns: list[ColumnSpec]) -> np.ndarray:
    """Map normalized coordinates (e.g. centroids) back to raw units."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != len(columns):
        raise InvalidInputError(
            f"points shape {points.shape} does not match {len(columns)} columns"
        )
    if any(c.lo is None or c.hi is None for c in columns):
        raise InvalidInputError("column specs are missing normalization ranges")
    los = np.array([c.lo for c in columns], dtype=np.float64)
    his = np.array([c.hi for c in columns], dtype=np.float64)
    return points * (his - los) + los


# ---------------------------------------------------------------------------
# Reference dataset presets
# ---------------------------------------------------------------------------

#: Blood transfusion donor records: 4 numeric features, label in column 4.
BLOOD_COLUMNS = [
    ColumnSpec(index=0, name="recency_months"),
    ColumnSpec(index=1, name="frequency_times"),
    ColumnSpec(index=2, name="monetary_cc"),
    ColumnSpec(index=3, name="time_months"),
]
BLOOD_DEFAULT_K = 2

#: Census income records: the 6 numeric columns of the usual 15-column layout.
ADULT_COLUMNS = [
    ColumnSpec(index=0, name="age"),
    ColumnSpec(index=2, name="fnlwgt"),
    ColumnSpec(index=4, name="education_num"),
    ColumnSpec(index=10, name="capital_gain"),
    ColumnSpec(index=11, name="capital_loss"),
    ColumnSpec(index=12, name="hours_per_week"),
]
ADULT_DEFAULT_K = 5

PRESETS: dict[str, tuple[list[ColumnSpec], int, bool]] = {
    # name -> (columns, default k, has_header)
    "blood": (BLOOD_COLUMNS, BLOOD_DEFAULT_K, True),
    "adult": (ADULT_COLUMNS, ADULT_DEFAULT_K, False),
}


def synthetic_blobs(
    n_rows: int,
    n_dims: int,
    n_centers: int,
    seed: int,
    *,
    spread: float = 0.06,
    weights: list[float] | None = None,
) -> Dataset:
    """Gaussian blobs in the unit cube, already normalized.

    Centers are drawn uniformly from [0.15, 0.85]^d so that points, after
    adding isotropic Gaussian jitter of the given spread and clipping to
    [0, 1], rarely pile up on the cube boundary.  ``weights`` skews how
    many rows each blob receives (default: even split).
    """
    if n_rows < 1 or n_dims < 1 or n_centers < 1:
        raise InvalidInputError("n_rows, n_dims, n_centers must all be >= 1")
    if weights is not None and (
        len(weights) != n_centers or any(w <= 0 for w in weights)
    ):
        raise InvalidInputError("weights must be positive, one per center")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = 0.15 + 0.7 * rng.random((n_centers, n_dims))
    if weights is None:
        probs = np.full(n_centers, 1.0 / n_centers)
    else:
        probs = np.asarray(weights, dtype=np.float64)
        probs = probs / probs.sum()
    owner = rng.choice(n_centers, size=n_rows, p=probs)
    points = centers[owner] + spread * rng.standard_normal((n_rows, n_dims))
    points = np.clip(points, 0.0, 1.0)
    return Dataset(
        points=points,
        normalized=True,
        source_label=f"blobs(n={n_rows},d={n_dims},c={n_centers},seed={seed})",
    )
