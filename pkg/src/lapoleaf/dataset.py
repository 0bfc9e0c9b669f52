"""Dataset loading, validation, duplicate merging, and time-series folding.

Feature values are used as-is; callers are expected to pre-scale their data.
Groups of identical rows must be merged (see :func:`merge_duplicates`) before
any distance-based processing so that every remaining pairwise distance is
strictly positive.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ValidationError

CLASSIFICATION = "classification"
REGRESSION = "regression"


@dataclass
class Dataset:
    """In-memory dataset: features, per-point populations, optional labels.

    ``known_label`` is a float array with NaN marking unlabeled points; in
    classification mode the non-NaN entries are integral class ids in
    ``0..n_classes-1``.  ``pop`` counts how many raw points were merged into
    each row (all ones when nothing was merged).
    """

    features: np.ndarray
    pop: np.ndarray
    known_label: np.ndarray
    mode: str = CLASSIFICATION
    n_classes: int = 0
    class_names: list[str] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValidationError("features must be a 2-D array")
        n = self.features.shape[0]
        self.pop = np.asarray(self.pop, dtype=np.int64)
        self.known_label = np.asarray(self.known_label, dtype=np.float64)
        if self.pop.shape != (n,) or self.known_label.shape != (n,):
            raise ValidationError("pop and known_label must have one entry per row")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        return ~np.isnan(self.known_label)

    def validate(self) -> "Dataset":
        """Check the structural invariants, raising ValidationError on failure."""
        if self.n < 1 or self.dim < 1:
            raise ValidationError("dataset needs at least one row and one feature")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("non-finite feature value in dataset")
        if np.any(self.pop < 1):
            raise ValidationError("populations must be >= 1")
        if self.mode == CLASSIFICATION:
            lab = self.known_label[self.labeled_mask]
            if lab.size and (np.any(lab != np.floor(lab)) or np.any(lab < 0) or np.any(lab >= self.n_classes)):
                raise ValidationError("class labels must be integers in 0..n_classes-1")
        elif self.mode == REGRESSION:
            lab = self.known_label[self.labeled_mask]
            if lab.size and not np.all(np.isfinite(lab)):
                raise ValidationError("non-finite regression target")
        else:
            raise ValidationError(f"unknown mode {self.mode!r}")
        return self

    def unlabel(self, mask: np.ndarray) -> "Dataset":
        """Return a copy with the labels of the masked rows removed."""
        lab = self.known_label.copy()
        lab[np.asarray(mask)] = np.nan
        return replace(self, known_label=lab, features=self.features.copy(), pop=self.pop.copy())


@dataclass
class CsvSchema:
    """Column roles for :func:`load_csv`.

    ``label_column`` may be None (fully unlabeled file).  When ``class_names``
    is given, any label outside it is rejected; otherwise class ids are
    assigned from the distinct labels found (numeric labels sorted by value,
    other labels lexicographically).
    """

    mode: str = CLASSIFICATION
    label_column: str | None = "label"
    feature_columns: list[str] | None = None
    class_names: list[str] | None = None
    ignore_columns: list[str] = field(default_factory=list)


def _class_order(names: set[str]) -> list[str]:
    try:
        return sorted(names, key=float)
    except ValueError:
        return sorted(names)


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Parse a headered CSV into a validated Dataset; row order is preserved.

    Empty label cells mark unlabeled rows.  Errors carry the 1-based physical
    line number of the offending row.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if schema.feature_columns is not None:
            feat_cols = list(schema.feature_columns)
        else:
            skip = set(schema.ignore_columns)
            if schema.label_column is not None:
                skip.add(schema.label_column)
            feat_cols = [h for h in header if h not in skip]
        missing = [c for c in feat_cols if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing feature columns {missing}")
        if schema.label_column is not None and schema.label_column not in header:
            raise ValidationError(f"{path}: missing label column {schema.label_column!r}")
        feat_idx = [header.index(c) for c in feat_cols]
        lab_idx = header.index(schema.label_column) if schema.label_column is not None else None

        rows, raw_labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(f"{path}: malformed row at line {lineno}")
            try:
                vals = [float(row[i]) for i in feat_idx]
            except ValueError:
                raise ValidationError(f"{path}: malformed row at line {lineno}") from None
            if not all(np.isfinite(vals)):
                raise ValidationError(f"{path}: non-finite value at line {lineno}")
            rows.append(vals)
            raw_labels.append(row[lab_idx].strip() if lab_idx is not None else "")

    if not rows:
        raise ValidationError(f"{path}: no data rows")
    features = np.array(rows, dtype=np.float64)
    labels = np.full(len(rows), np.nan)

    if schema.mode == REGRESSION:
        for i, cell in enumerate(raw_labels):
            if cell:
                try:
                    labels[i] = float(cell)
                except ValueError:
                    raise ValidationError(f"{path}: malformed row at line {i + 2}") from None
                if not np.isfinite(labels[i]):
                    raise ValidationError(f"{path}: non-finite value at line {i + 2}")
        ds = Dataset(features, np.ones(len(rows), dtype=np.int64), labels,
                     mode=REGRESSION, n_classes=1)
    else:
        seen = {c for c in raw_labels if c}
        if schema.class_names is not None:
            names = list(schema.class_names)
            unknown = seen - set(names)
            if unknown:
                raise ValidationError(f"{path}: unknown class string {sorted(unknown)[0]!r}")
        else:
            names = _class_order(seen)
        ids = {c: k for k, c in enumerate(names)}
        for i, cell in enumerate(raw_labels):
            if cell:
                labels[i] = ids[cell]
        ds = Dataset(features, np.ones(len(rows), dtype=np.int64), labels,
                     mode=CLASSIFICATION, n_classes=len(names), class_names=names)
    return ds.validate()


def save_csv(ds: Dataset, path, feature_names: list[str] | None = None,
             label_column: str = "label") -> None:
    """Write a Dataset back out in the same CSV format load_csv reads."""
    names = feature_names or [f"f{i}" for i in range(ds.dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + [label_column])
        for i in range(ds.n):
            if np.isnan(ds.known_label[i]):
                lab = ""
            elif ds.mode == CLASSIFICATION:
                k = int(ds.known_label[i])
                lab = ds.class_names[k] if ds.class_names else str(k)
            else:
                lab = repr(float(ds.known_label[i]))
            w.writerow([repr(float(v)) for v in ds.features[i]] + [lab])


def merge_duplicates(ds: Dataset) -> Dataset:
    """Collapse groups of identical feature rows into single fat nodes.

    The merged row keeps the first occurrence's position, its pop is the sum
    of the group's pops, and a conflicting-label group keeps the
    population-weighted majority label (ties go to the smallest label value),
    with a warning.  Guarantees all pairwise distances downstream are > 0.
    """
    _, first_idx, inverse = np.unique(ds.features, axis=0, return_index=True, return_inverse=True)
    if first_idx.size == ds.n:
        return ds
    # reorder groups by first occurrence so surviving rows keep their input order
    rank = np.argsort(np.argsort(first_idx, kind="stable"), kind="stable")
    group = rank[inverse]
    n_groups = first_idx.size
    order = np.sort(first_idx)

    features = ds.features[order]
    pop = np.zeros(n_groups, dtype=np.int64)
    np.add.at(pop, group, ds.pop)
    labels = np.full(n_groups, np.nan)
    for g in range(n_groups):
        members = np.where(group == g)[0]
        lab_members = members[~np.isnan(ds.known_label[members])]
        if lab_members.size == 0:
            continue
        vals = ds.known_label[lab_members]
        uniq = np.unique(vals)
        if uniq.size == 1:
            labels[g] = uniq[0]
            continue
        weight = {v: int(ds.pop[lab_members[vals == v]].sum()) for v in uniq}
        best = min(uniq, key=lambda v: (-weight[v], v))
        labels[g] = best
        warnings.warn(
            f"conflicting labels {sorted(weight)} among identical rows; kept {best}",
            stacklevel=2,
        )
    return Dataset(features, pop, labels, mode=ds.mode,
                   n_classes=ds.n_classes, class_names=ds.class_names)


def fold_time_series(series, lag: int) -> Dataset:
    """Fold a 1-D series into a lag-window regression dataset.

    Row t has features ``series[t:t+lag]`` and target ``series[t+lag]``,
    giving ``len(series) - lag`` rows, all labeled.  Callers strip the labels
    of whichever rows they want predicted.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ValidationError("series must be 1-D")
    if lag < 1:
        raise ValidationError("lag must be a positive integer")
    if series.size <= lag:
        raise ValidationError(f"series too short: need more than {lag} observations")
    if not np.all(np.isfinite(series)):
        raise ValidationError("non-finite value in series")
    n = series.size - lag
    idx = np.arange(lag)[None, :] + np.arange(n)[:, None]
    return Dataset(series[idx], np.ones(n, dtype=np.int64), series[lag:].copy(),
                   mode=REGRESSION, n_classes=1).validate()
