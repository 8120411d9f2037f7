# This file is part of ts_snapfaas.
#
# Developed for the Vera Rubin Observatory Systems.
# This product includes software developed by the LSST Project
# (https://www.lsst.org).
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

__all__ = [
    "ReportRecord",
    "ReportFormat",
    "write_records",
    "read_records",
    "summarize",
    "emit_report",
]

import enum
import json
import math
import pathlib
import typing
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import pandas as pd

from .constants import BYTES_PER_MB
from .enums import StrategyId
from .errors import CorruptFile, InvariantViolation, MissingArtifact
from .utils import format_deci, format_ms, round_half_up_deci, write_json_file

# Latency fields kept as exact rationals
_LATENCY_FIELDS = ("boot_us", "exec_us", "e2e_us", "warm_exec_us", "A_us", "B_us", "C_us", "D_us")

_STRATEGY_ORDER = {strategy.value: index for index, strategy in enumerate(StrategyId)}


class ReportFormat(enum.Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class ReportRecord:
    """One measurement of a (function, strategy, round) bench cell."""

    function: str
    language_tag: str
    strategy: str
    round: int
    boot_us: Fraction
    exec_us: Fraction
    e2e_us: Fraction
    warm_exec_us: Fraction
    A_us: Fraction
    B_us: Fraction
    C_us: Fraction
    D_us: Fraction
    eager_bytes: int
    demand_pages: int
    cow_faults: int
    full_bytes: int

    def __post_init__(self) -> None:
        if self.e2e_us != self.boot_us + self.exec_us:
            raise InvariantViolation(f"Record of {self.function}/{self.strategy}: e2e is not boot + exec.")

        if max(self.A_us, self.B_us) + self.C_us + self.D_us != self.e2e_us - self.warm_exec_us:
            raise InvariantViolation(
                f"Record of {self.function}/{self.strategy}: breakdown does not recompose to the overhead."
            )

    def same_measurement(self, other: "ReportRecord") -> bool:
        """Equal apart from the round number."""

        return all(
            getattr(self, item.name) == getattr(other, item.name) for item in fields(self) if item.name != "round"
        )

    def to_document(self) -> dict:
        document = asdict(self)
        for name in _LATENCY_FIELDS:
            document[name] = str(document[name])
        return document

    @classmethod
    def from_document(cls, document: dict) -> "ReportRecord":
        values = dict(document)
        for name in _LATENCY_FIELDS:
            values[name] = Fraction(values[name])
        return cls(**values)


def write_records(records: list[ReportRecord], filepath: pathlib.Path | str) -> pathlib.Path:
    """Write the records with exact latencies.

    Parameters
    ----------
    records : `list` [`ReportRecord`]
        Records.
    filepath : `pathlib.Path` or `str`
        JSON file.

    Returns
    -------
    `pathlib.Path`
        JSON file.
    """
    return write_json_file(filepath, {"records": [record.to_document() for record in records]})


def read_records(filepath: pathlib.Path | str) -> list[ReportRecord]:
    """Read the records written by `write_records`.

    Parameters
    ----------
    filepath : `pathlib.Path` or `str`
        JSON file.

    Returns
    -------
    `list` [`ReportRecord`]
        Records.

    Raises
    ------
    MissingArtifact
        If the file is absent.
    CorruptFile
        If the file can not be decoded.
    """

    filepath = pathlib.Path(filepath)
    if not filepath.is_file():
        raise MissingArtifact(f"Records file does not exist: {filepath}.")

    try:
        document = json.loads(filepath.read_text(encoding="utf-8"))
        return [ReportRecord.from_document(record) for record in document["records"]]
    except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError) as error:
        raise CorruptFile(f"Can not decode {filepath}: {error!r}.")


def _mean(values: pd.Series) -> Fraction:
    return sum(values, Fraction(0)) / len(values)


def _format_ratio(value: Fraction) -> str:
    # Half up to 0.001
    thousandths = math.floor(value * 1000 + Fraction(1, 2))
    integer, fraction = divmod(thousandths, 1000)
    return f"{integer}.{fraction:03d}"


def _format_quotient(numerator: Fraction, denominator: Fraction) -> str:
    # A zero reference gives "1.000" over zero and "inf" otherwise
    if denominator == 0:
        return "1.000" if numerator == 0 else "inf"
    return _format_ratio(Fraction(numerator) / Fraction(denominator))


def _format_mb(value: Fraction) -> str:
    return format_deci(round_half_up_deci(value / BYTES_PER_MB))


def summarize(records: list[ReportRecord]) -> pd.DataFrame:
    """Mean of every (function, strategy) cell over the rounds.

    Parameters
    ----------
    records : `list` [`ReportRecord`]
        Records.

    Returns
    -------
    summary : `pandas.DataFrame`
        One row per cell, functions in order of appearance and strategies
        in declaration order. The means are exact rationals.
    """

    columns = list(_LATENCY_FIELDS) + ["eager_bytes", "demand_pages", "cow_faults", "full_bytes"]

    table = pd.DataFrame([asdict(record) for record in records])
    table[columns] = table[columns].astype(object)
    table["function_order"] = table.groupby("function", sort=False).ngroup()
    table["strategy_order"] = table["strategy"].map(_STRATEGY_ORDER)

    summary = (
        table.groupby(["function_order", "strategy_order", "function", "language_tag", "strategy"], sort=True)[
            columns
        ]
        .agg(_mean)
        .reset_index()
    )

    return summary.drop(columns=["function_order", "strategy_order"])


def _latency_table(summary: pd.DataFrame) -> pd.DataFrame:
    reference = summary[summary["strategy"] == StrategyId.SnapFaas.value].set_index("function")

    def normalize(row: pd.Series, column: str) -> str:
        if row["function"] not in reference.index:
            return ""
        return _format_quotient(row[column], reference.loc[row["function"], column])

    table = summary[["function", "language_tag", "strategy"]].copy()
    for column in ("boot", "exec", "e2e"):
        table[f"{column}_ms"] = summary[f"{column}_us"].map(format_ms)
    for column in ("boot", "exec", "e2e"):
        table[f"{column}_norm"] = summary.apply(normalize, axis=1, args=(f"{column}_us",))

    return table


def _breakdown_table(summary: pd.DataFrame) -> pd.DataFrame:
    table = summary[["function", "language_tag", "strategy"]].copy()
    for clause in ("A", "B", "C", "D"):
        table[f"{clause}_ms"] = summary[f"{clause}_us"].map(format_ms)
    return table


def _eager_size_table(summary: pd.DataFrame) -> pd.DataFrame:
    table = summary[["function", "language_tag", "strategy"]].copy()
    table["eager_bytes"] = summary["eager_bytes"].map(lambda value: str(int(value)))
    table["eager_mb"] = summary["eager_bytes"].map(_format_mb)
    table["full_bytes"] = summary["full_bytes"].map(lambda value: str(int(value)))
    table["full_mb"] = summary["full_bytes"].map(_format_mb)
    return table


def _speedup_table(summary: pd.DataFrame) -> pd.DataFrame:
    # Functions by increasing execution time of the regular boot
    trend = list()
    for function, cells in summary.groupby("function", sort=False):
        regular = cells[cells["strategy"] == StrategyId.Regular.value]
        if not regular.empty:
            trend.append((regular["exec_us"].iloc[0], function, cells, regular))
    trend.sort(key=lambda item: item[0])

    rows = list()
    for regular_exec, function, cells, regular in trend:
        regular_e2e = regular["e2e_us"].iloc[0]
        warm_exec = regular["warm_exec_us"].iloc[0]
        latencies = [(strategy, e2e) for strategy, e2e in zip(cells["strategy"], cells["e2e_us"])]
        latencies.append(("optimal", warm_exec))

        for strategy, latency in latencies:
            rows.append(
                {
                    "function": function,
                    "language_tag": regular["language_tag"].iloc[0],
                    "regular_exec_ms": format_ms(regular_exec),
                    "strategy": strategy,
                    "speedup": _format_quotient(regular_e2e, latency),
                }
            )

    return pd.DataFrame(rows, columns=["function", "language_tag", "regular_exec_ms", "strategy", "speedup"])


def emit_report(
    records: list[ReportRecord],
    report_format: ReportFormat | str,
    directory: pathlib.Path | str,
) -> list[pathlib.Path]:
    """Write the latency, breakdown, eager size and speed-up tables.

    Parameters
    ----------
    records : `list` [`ReportRecord`]
        Records.
    report_format : enum `ReportFormat` or `str`
        Output format.
    directory : `pathlib.Path` or `str`
        Output directory. It is created if needed.

    Returns
    -------
    `list` [`pathlib.Path`]
        Written files.

    Raises
    ------
    ValueError
        If there is no record.
    """

    if not records:
        raise ValueError("No record to report.")

    report_format = ReportFormat(report_format)
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    summary = summarize(records)
    tables: dict[str, pd.DataFrame] = {
        "latency": _latency_table(summary),
        "breakdown": _breakdown_table(summary),
        "eager_sizes": _eager_size_table(summary),
        "speedup_trend": _speedup_table(summary),
    }

    filepaths = list()
    for name, table in tables.items():
        filepath = directory / f"{name}.{report_format.value}"
        _write_table(table, filepath, report_format)
        filepaths.append(filepath)

    return filepaths


def _write_table(table: pd.DataFrame, filepath: pathlib.Path, report_format: ReportFormat) -> None:
    match report_format:
        case ReportFormat.CSV:
            table.to_csv(filepath, index=False, lineterminator="\r\n", encoding="utf-8")
        case ReportFormat.JSON:
            write_json_file(filepath, typing.cast(list, table.to_dict(orient="records")))
