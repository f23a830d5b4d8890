"""CSV and JSON plumbing: price tables, returns, labels, ROC files, reports.

All files are UTF-8 with a header row and '.' decimals. Floats are written
with repr(), which round-trips exactly through float(), so a file written
from an array parses back bit-identical and rewriting it reproduces the same
bytes. Dated tables put the date in the first column, ISO 8601.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass

import numpy as np

from .linalg_stats import DataMatrix, _readonly
from .distributions import LabeledDataset

__all__ = [
    "PriceTable",
    "read_price_csv",
    "compute_returns",
    "label_by_crisis",
    "write_data_csv",
    "read_data_csv",
    "write_labels_csv",
    "read_labels_csv",
    "write_roc_csv",
    "write_json",
    "jsonify",
]

RETURN_KINDS = ("linear", "log")


def _parse_iso(text: str, where: str) -> _dt.date:
    try:
        return _dt.date.fromisoformat(text)
    except ValueError as err:
        raise ValueError(f"{where}: bad ISO date {text!r}") from err


@dataclass(frozen=True, eq=False)
class PriceTable:
    """Daily price panel: strictly increasing dates, positive prices."""

    dates: tuple[str, ...]
    prices: np.ndarray
    tickers: tuple[str, ...]

    def __post_init__(self) -> None:
        dates = tuple(str(d) for d in self.dates)
        tickers = tuple(str(t) for t in self.tickers)
        prices = np.array(self.prices, dtype=float, copy=True)
        if prices.ndim != 2:
            raise ValueError("prices must be a 2-D array")
        if prices.shape != (len(dates), len(tickers)):
            raise ValueError("prices shape must be (len(dates), len(tickers))")
        if len(tickers) == 0 or len(dates) == 0:
            raise ValueError("need at least one date and one ticker")
        parsed = [_parse_iso(d, f"date row {i + 1}") for i, d in enumerate(dates)]
        for earlier, later in zip(parsed, parsed[1:]):
            if later <= earlier:
                raise ValueError(f"dates must be strictly increasing, saw {earlier} then {later}")
        if not np.all(np.isfinite(prices)):
            raise ValueError("prices must be finite")
        if np.any(prices <= 0):
            t, j = map(int, np.argwhere(prices <= 0)[0])
            raise ValueError(
                f"nonpositive price at row {t + 1}, column {tickers[j]!r}: {prices[t, j]}"
            )
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "tickers", tickers)
        object.__setattr__(self, "prices", _readonly(prices))


def read_price_csv(path) -> PriceTable:
    """Parse a prices CSV: header ``date,TICK1,...``; errors carry row/column."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0].strip().lower() != "date":
        raise ValueError(f"{path}: header must be 'date,<ticker>,...', got {header!r}")
    tickers = tuple(h.strip() for h in header[1:])
    dates: list[str] = []
    prices: list[list[float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue  # trailing blank line
        if len(row) != len(header):
            raise ValueError(
                f"{path} row {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        dates.append(row[0].strip())
        parsed_row = []
        for ticker, cell in zip(tickers, row[1:]):
            cell = cell.strip()
            if not cell:
                raise ValueError(f"{path} row {lineno}, column {ticker!r}: missing value")
            try:
                value = float(cell)
            except ValueError as err:
                raise ValueError(
                    f"{path} row {lineno}, column {ticker!r}: bad number {cell!r}"
                ) from err
            if not math.isfinite(value) or value <= 0:
                raise ValueError(
                    f"{path} row {lineno}, column {ticker!r}: nonpositive price {cell}"
                )
            parsed_row.append(value)
        prices.append(parsed_row)
    if not dates:
        raise ValueError(f"{path}: no data rows")
    return PriceTable(tuple(dates), np.asarray(prices, dtype=float), tickers)


def compute_returns(prices: PriceTable, kind: str = "linear") -> DataMatrix:
    """Per-period returns, one row fewer than prices, dated by the later day.

    linear: P_t / P_{t-1} - 1; log: ln(P_t / P_{t-1}).
    """
    if kind not in RETURN_KINDS:
        raise ValueError(f"kind must be one of {RETURN_KINDS}, got {kind!r}")
    if len(prices.dates) < 2:
        raise ValueError("need at least two price rows to form returns")
    ratio = prices.prices[1:] / prices.prices[:-1]
    values = np.log(ratio) if kind == "log" else ratio - 1.0
    return DataMatrix(values, row_labels=prices.dates[1:])


def label_by_crisis(returns: DataMatrix, crisis_date: str) -> LabeledDataset:
    """Mark every row dated on or after crisis_date as a true outlier.

    The boundary day itself counts as crisis. crisis_date must lie within
    the table's date range.
    """
    if returns.row_labels is None:
        raise ValueError("returns must carry date labels")
    dates = [_parse_iso(d, f"row {i + 1}") for i, d in enumerate(returns.row_labels)]
    boundary = _parse_iso(str(crisis_date), "crisis_date")
    if boundary < dates[0] or boundary > dates[-1]:
        raise ValueError(
            f"crisis_date {boundary} outside the data range [{dates[0]}, {dates[-1]}]"
        )
    truth = np.array([d >= boundary for d in dates], dtype=bool)
    return LabeledDataset(returns, truth)


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_data_csv(path, data: DataMatrix) -> None:
    """Columns x1..xn, preceded by a date column when the matrix is dated."""
    n = data.n_var
    var_names = [f"x{j + 1}" for j in range(n)]
    lines = []
    if data.row_labels is None:
        lines.append(",".join(var_names))
        for row in data.values:
            lines.append(_format_row(row))
    else:
        lines.append(",".join(["date"] + var_names))
        for label, row in zip(data.row_labels, data.values):
            lines.append(f"{label}," + _format_row(row))
    _write_text(path, "\n".join(lines) + "\n")


def read_data_csv(path) -> DataMatrix:
    """Inverse of write_data_csv; bit-exact round-trip via repr floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    dated = bool(header) and header[0].strip().lower() == "date"
    first_var = 1 if dated else 0
    n = len(header) - first_var
    if n < 1:
        raise ValueError(f"{path}: no variable columns in header {header!r}")
    labels: list[str] = []
    values: list[list[float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ValueError(
                f"{path} row {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        if dated:
            labels.append(row[0].strip())
        parsed_row = []
        for name, cell in zip(header[first_var:], row[first_var:]):
            try:
                parsed_row.append(float(cell))
            except ValueError as err:
                raise ValueError(
                    f"{path} row {lineno}, column {name.strip()!r}: bad number {cell!r}"
                ) from err
        values.append(parsed_row)
    if not values:
        raise ValueError(f"{path}: no data rows")
    return DataMatrix(
        np.asarray(values, dtype=float),
        row_labels=tuple(labels) if dated else None,
    )


def write_labels_csv(path, truth) -> None:
    truth = np.asarray(truth, dtype=bool).ravel()
    lines = ["is_outlier"] + [str(int(t)) for t in truth]
    _write_text(path, "\n".join(lines) + "\n")


def read_labels_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if not rows or rows[0] != "is_outlier":
        raise ValueError(f"{path}: expected a single 'is_outlier' column")
    flags = []
    for lineno, cell in enumerate(rows[1:], start=2):
        if cell not in ("0", "1"):
            raise ValueError(f"{path} row {lineno}: labels must be 0 or 1, got {cell!r}")
        flags.append(cell == "1")
    if not flags:
        raise ValueError(f"{path}: no label rows")
    return np.asarray(flags, dtype=bool)


def write_roc_csv(path, curve) -> None:
    lines = ["beta,fpr,tpr,youden_j"]
    for p in curve.points:
        lines.append(_format_row((p.beta, p.fpr, p.tpr, p.youden_j)))
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def jsonify(obj):
    """Recursively coerce numpy scalars/arrays for json.dumps; NaN/inf -> null."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def write_json(path, payload: dict) -> None:
    """Deterministic JSON: insertion order preserved, 2-space indent."""
    text = json.dumps(jsonify(payload), indent=2, allow_nan=False)
    _write_text(path, text + "\n")
