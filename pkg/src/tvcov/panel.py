"""CSV ingestion and validation for observation and characteristic panels.

On-disk format: UTF-8 CSV, comma separated, '.' decimal point, one mandatory
header row and one leading label column. A panel file is either
entities-as-rows (N rows of T periods) or entities-as-columns (transposed).
Missing or non-numeric cells are rejected, never imputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AlignmentError, PanelFormatError, ParameterError

LAYOUTS = ("entities-as-rows", "entities-as-columns")


def _check_unique(labels: Sequence[str], kind: str, source: str) -> None:
    seen: set[str] = set()
    dups = sorted({x for x in labels if x in seen or seen.add(x)})
    if dups:
        raise PanelFormatError(f"duplicate {kind} labels in {source}: {dups}")


@dataclass(frozen=True)
class PanelData:
    """Immutable N x T observation panel with entity and period labels."""

    values: np.ndarray
    entity_ids: tuple[str, ...]
    period_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "entity_ids", tuple(self.entity_ids))
        object.__setattr__(self, "period_ids", tuple(self.period_ids))
        if values.ndim != 2:
            raise PanelFormatError("panel values must be a 2-D array")
        n, t = values.shape
        if n < 2 or t < 2:
            raise PanelFormatError(f"panel needs N >= 2 and T >= 2, got {n} x {t}")
        if len(self.entity_ids) != n or len(self.period_ids) != t:
            raise PanelFormatError("label lengths do not match panel shape")
        _check_unique(self.entity_ids, "entity", "panel")
        _check_unique(self.period_ids, "period", "panel")
        if not np.isfinite(values).all():
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise PanelFormatError(
                f"non-finite value at entity '{self.entity_ids[i]}', "
                f"period '{self.period_ids[j]}'"
            )
        values.flags.writeable = False

    @property
    def n_entities(self) -> int:
        return self.values.shape[0]

    @property
    def n_periods(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CharacteristicsPanel:
    """Immutable N x d x T array of slowly varying covariates.

    Labels must match the paired PanelData exactly; d is small and fixed.
    """

    values: np.ndarray
    characteristic_names: tuple[str, ...]
    entity_ids: tuple[str, ...]
    period_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "characteristic_names", tuple(self.characteristic_names))
        object.__setattr__(self, "entity_ids", tuple(self.entity_ids))
        object.__setattr__(self, "period_ids", tuple(self.period_ids))
        if values.ndim != 3:
            raise PanelFormatError("characteristics must be an N x d x T array")
        n, d, t = values.shape
        if d < 1:
            raise PanelFormatError("characteristics need d >= 1")
        if len(self.characteristic_names) != d:
            raise PanelFormatError("characteristic_names length does not match d")
        if len(self.entity_ids) != n or len(self.period_ids) != t:
            raise PanelFormatError("label lengths do not match characteristics shape")
        _check_unique(self.characteristic_names, "characteristic", "characteristics")
        if not np.isfinite(values).all():
            raise PanelFormatError("characteristics contain non-finite values")
        values.flags.writeable = False

    @property
    def n_characteristics(self) -> int:
        return self.values.shape[1]

    def at_period(self, period: int) -> np.ndarray:
        """N x d slice at a 1-based period index."""
        if not 1 <= period <= self.values.shape[2]:
            raise ParameterError(f"period {period} outside 1..{self.values.shape[2]}")
        return self.values[:, :, period - 1]


def _read_labeled_csv(path: str | Path) -> tuple[np.ndarray, list[str], list[str]]:
    """Read a labeled CSV into (values, row_labels, col_labels)."""
    path = Path(path)
    if not path.exists():
        raise PanelFormatError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if len(rows) < 2:
        raise PanelFormatError(f"{path}: need a header row and at least one data row")
    header = rows[0]
    if len(header) < 2:
        raise PanelFormatError(f"{path}: header must contain at least one column label")
    col_labels = [c.strip() for c in header[1:]]
    _check_unique(col_labels, "column", str(path))
    row_labels: list[str] = []
    data: list[list[float]] = []
    width = len(col_labels)
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue  # tolerate trailing blank lines
        if len(row) != width + 1:
            raise PanelFormatError(
                f"{path}: line {line_no} has {len(row)} cells, expected {width + 1}"
            )
        label = row[0].strip()
        row_labels.append(label)
        parsed = []
        for j, cell in enumerate(row[1:]):
            text = cell.strip()
            try:
                value = float(text) if text else float("nan")
            except ValueError:
                value = float("nan")
            if not np.isfinite(value):
                raise PanelFormatError(
                    f"{path}: missing or non-numeric value at row '{label}', "
                    f"column '{col_labels[j]}'"
                )
            parsed.append(value)
        data.append(parsed)
    if not data:
        raise PanelFormatError(f"{path}: no data rows")
    _check_unique(row_labels, "row", str(path))
    return np.array(data, dtype=float), row_labels, col_labels


def load_panel(path: str | Path, layout: str = "entities-as-rows") -> PanelData:
    """Load and validate an observation panel, normalized to N x T."""
    if layout not in LAYOUTS:
        raise ParameterError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    values, row_labels, col_labels = _read_labeled_csv(path)
    if layout == "entities-as-rows":
        return PanelData(values, row_labels, col_labels)
    return PanelData(values.T, col_labels, row_labels)


def save_panel(panel: PanelData, path: str | Path, layout: str = "entities-as-rows",
               label_header: str = "entity") -> None:
    """Write a panel as labeled CSV using 17 significant digits.

    17 digits round-trip IEEE doubles bit-identically through load_panel.
    """
    if layout not in LAYOUTS:
        raise ParameterError(f"layout must be one of {LAYOUTS}, got {layout!r}")
    if layout == "entities-as-rows":
        values = panel.values
        row_labels, col_labels = panel.entity_ids, panel.period_ids
    else:
        values = panel.values.T
        row_labels, col_labels = panel.period_ids, panel.entity_ids
        label_header = "period"
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([label_header, *col_labels])
        for label, row in zip(row_labels, values):
            writer.writerow([label, *(format(v, ".17g") for v in row)])


def load_characteristics(paths: Sequence[str | Path], panel: PanelData,
                         names: Sequence[str] | None = None) -> CharacteristicsPanel:
    """Load d characteristic files aligned to a panel by label, not position.

    Each file must be an N x T labeled CSV covering exactly the panel's
    entities and periods, in any order.
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise ParameterError("need at least one characteristic file")
    if names is None:
        names = [p.stem for p in paths]
    if len(names) != len(paths):
        raise ParameterError("names must match the number of characteristic files")
    want_entities = list(panel.entity_ids)
    want_periods = list(panel.period_ids)
    stacked = np.empty((panel.n_entities, len(paths), panel.n_periods), dtype=float)
    for k, path in enumerate(paths):
        values, row_labels, col_labels = _read_labeled_csv(path)
        missing_e = sorted(set(want_entities) - set(row_labels))
        extra_e = sorted(set(row_labels) - set(want_entities))
        missing_p = sorted(set(want_periods) - set(col_labels))
        extra_p = sorted(set(col_labels) - set(want_periods))
        if missing_e or extra_e or missing_p or extra_p:
            parts = []
            if missing_e:
                parts.append(f"missing entities {missing_e}")
            if extra_e:
                parts.append(f"unknown entities {extra_e}")
            if missing_p:
                parts.append(f"missing periods {missing_p}")
            if extra_p:
                parts.append(f"unknown periods {extra_p}")
            raise AlignmentError(f"{path}: {'; '.join(parts)}")
        row_index = {label: i for i, label in enumerate(row_labels)}
        col_index = {label: j for j, label in enumerate(col_labels)}
        rows = [row_index[e] for e in want_entities]
        cols = [col_index[p] for p in want_periods]
        stacked[:, k, :] = values[np.ix_(rows, cols)]
    return CharacteristicsPanel(stacked, names, panel.entity_ids, panel.period_ids)


def save_characteristics(chars: CharacteristicsPanel, directory: str | Path) -> list[Path]:
    """Write one labeled N x T CSV per characteristic; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for k, name in enumerate(chars.characteristic_names):
        path = directory / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["entity", *chars.period_ids])
            for label, row in zip(chars.entity_ids, chars.values[:, k, :]):
                writer.writerow([label, *(format(v, ".17g") for v in row)])
        out.append(path)
    return out
