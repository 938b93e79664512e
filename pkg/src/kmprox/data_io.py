"""Loading monthly return files and writing deterministic reports.

The loader targets the layout of the public monthly research files: a
free-form preamble, an optional header naming the columns, then rows of
``YYYYMM, r1, ..., rN`` with returns in percent.  Values are converted to
gross price relatives x = 1 + r/100 unless the file already holds gross
relatives.  All writers format reals with 17 significant digits and sort
keys, so identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import json

import numpy as np

from .backtest import MetricsReport

__all__ = [
    "PriceRelativeMatrix",
    "DataFormatError",
    "MissingValueError",
    "load_returns_csv",
    "export_wealth_csv",
    "load_wealth_csv",
    "export_portfolios_csv",
    "export_report",
    "format_real",
]

# Conventional placeholders for missing observations in the public files.
_SENTINELS = (-99.99, -999.0)


class DataFormatError(ValueError):
    """The input file violates the expected layout."""


class MissingValueError(DataFormatError):
    """A row carries a missing-value sentinel."""


@dataclass
class PriceRelativeMatrix:
    """Gross price relatives (periods by assets) with their labels."""

    data: np.ndarray
    asset_names: list[str]
    period_labels: list[int]

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if not np.all(np.isfinite(data)) or np.any(data <= 0):
            raise ValueError("price relatives must be positive and finite")
        if len(self.asset_names) != data.shape[1]:
            raise ValueError("asset name count does not match the columns")
        if len(self.period_labels) != data.shape[0]:
            raise ValueError("period label count does not match the rows")
        if len(set(self.period_labels)) != len(self.period_labels):
            raise ValueError("period labels must be unique")
        self.data = data


def _split(line: str, comma: bool) -> list[str]:
    if comma:
        return [tok.strip() for tok in line.split(",")]
    return line.split()


def _is_yyyymm(period: int) -> bool:
    return 100001 <= period <= 999912 and 1 <= period % 100 <= 12


def load_returns_csv(
    path,
    date_from: int | None = None,
    date_to: int | None = None,
    gross_relatives: bool = False,
) -> PriceRelativeMatrix:
    """Parse a delimited monthly return file into price relatives.

    Lines whose first character is not a digit are treated as preamble or
    header and skipped; the last such line before the data is mined for
    column names.  Rows are filtered to [date_from, date_to] (inclusive,
    open-ended when None) before any validation, so trailing blocks keyed
    by bare years drop out of a range-limited load instead of failing it.
    Selected rows must carry a well-formed YYYYMM label, a consistent
    column count, and no missing-value sentinel.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc

    comma: bool | None = None
    header: str | None = None
    seen_data = False
    rows: list[tuple[int, int, list[float]]] = []  # (line number, period, values)
    n_cols: int | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not line[0].isdigit():
            if not seen_data:
                header = line
            continue
        seen_data = True
        if comma is None:
            comma = "," in line
        tokens = _split(line, comma)
        try:
            period = int(tokens[0])
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: bad period label {tokens[0]!r}") from exc
        if date_from is not None and period < date_from:
            continue
        if date_to is not None and period > date_to:
            continue
        if not _is_yyyymm(period):
            raise DataFormatError(
                f"line {lineno}: period {period} is not of the form YYYYMM"
            )
        try:
            values = [float(tok) for tok in tokens[1:] if tok]
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: non-numeric entry") from exc
        if n_cols is None:
            n_cols = len(values)
            if n_cols == 0:
                raise DataFormatError(f"line {lineno}: no return columns found")
        elif len(values) != n_cols:
            raise DataFormatError(
                f"line {lineno}: expected {n_cols} columns, found {len(values)}"
            )
        for sentinel in _SENTINELS:
            if sentinel in values:
                raise MissingValueError(
                    f"line {lineno}: period {period} carries the missing-value "
                    f"sentinel {sentinel}"
                )
        rows.append((lineno, period, values))

    if not rows:
        raise DataFormatError("no rows selected; check the file and the date range")

    periods = [period for _, period, _ in rows]
    if len(set(periods)) != len(periods):
        raise DataFormatError("duplicate period labels in the selection")

    raw_matrix = np.array([values for _, _, values in rows], dtype=float)
    if gross_relatives:
        data = raw_matrix
    else:
        data = 1.0 + raw_matrix / 100.0
    bad = np.argwhere(data <= 0)
    if bad.size:
        i, j = bad[0]
        raise DataFormatError(
            f"line {rows[i][0]}: column {j + 1} gives a nonpositive price relative"
        )

    names = _header_names(header, comma if comma is not None else True, n_cols)
    return PriceRelativeMatrix(data=data, asset_names=names, period_labels=periods)


def _header_names(header: str | None, comma: bool, n_cols: int) -> list[str]:
    """Column names from the header line when it splits cleanly, else
    synthesized asset_1..asset_N."""
    if header is not None:
        tokens = [tok.strip().strip('"') for tok in _split(header, comma)]
        if len(tokens) == n_cols + 1:
            tokens = tokens[1:]
        if len(tokens) == n_cols and all(tokens):
            return tokens
    return [f"asset_{j + 1}" for j in range(n_cols)]


def format_real(x: float) -> str:
    """17 significant digits: parses back to the identical float."""
    return f"{float(x):.17g}"


def export_wealth_csv(values, period_labels, path) -> None:
    """Write ``period,label,wealth`` rows; row 0 is the unit start value."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(period_labels) + 1:
        raise ValueError("need one label per period after the start value")
    lines = ["period,label,wealth", f"0,,{format_real(values[0])}"]
    for t, label in enumerate(period_labels, start=1):
        lines.append(f"{t},{label},{format_real(values[t])}")
    _write_text(path, "\n".join(lines) + "\n")


def load_wealth_csv(path) -> tuple[np.ndarray, list[str]]:
    """Inverse of export_wealth_csv: (values, labels); bit-exact round trip."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "period,label,wealth":
        raise DataFormatError(f"{path} is not a wealth series file")
    values = []
    labels = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"line {lineno}: expected period,label,wealth")
        try:
            values.append(float(parts[2]))
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: bad wealth value") from exc
        if parts[0] != "0":
            labels.append(parts[1])
    return np.array(values), labels


def export_portfolios_csv(portfolios, period_labels, asset_names, path) -> None:
    """One row of weights per traded period; empty history writes only the
    header."""
    W = np.atleast_2d(np.asarray(portfolios, dtype=float))
    if W.size == 0:
        W = W.reshape(0, len(asset_names))
    if W.shape[0] != len(period_labels):
        raise ValueError("need one label per portfolio row")
    if W.shape[1] != len(asset_names):
        raise ValueError("need one asset name per weight column")
    header = "period,label," + ",".join(asset_names)
    lines = [header]
    for t, label in enumerate(period_labels, start=1):
        weights = ",".join(format_real(w) for w in W[t - 1])
        lines.append(f"{t},{label},{weights}")
    _write_text(path, "\n".join(lines) + "\n")


def export_report(report: MetricsReport, path, fmt: str = "json") -> None:
    """Serialize a metrics report as flat key-value JSON or two-column CSV.

    Non-finite values become JSON null (empty in CSV) and their keys are
    listed under ``non_finite_keys`` so they cannot pass silently.
    """
    flat: dict[str, float] = {
        "final_cw": report.final_cw,
        "sharpe": report.sharpe,
        "alpha": report.alpha,
        "beta_capm": report.beta_capm,
        "alpha_pvalue": report.alpha_pvalue,
        "mdd": report.mdd,
    }
    for nu in sorted(report.tc_curve):
        flat[f"tc_cw_{format_real(nu)}"] = report.tc_curve[nu]

    non_finite = sorted(k for k, v in flat.items() if not np.isfinite(v))
    if fmt == "json":
        payload: dict[str, object] = {
            k: (None if k in non_finite else float(v)) for k, v in flat.items()
        }
        payload["non_finite_keys"] = non_finite
        _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    elif fmt == "csv":
        lines = ["key,value"]
        for k in sorted(flat):
            lines.append(f"{k}," + ("" if k in non_finite else format_real(flat[k])))
        lines.append("non_finite_keys," + ";".join(non_finite))
        _write_text(path, "\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _write_text(path, content: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)
