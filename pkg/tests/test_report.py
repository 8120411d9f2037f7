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

import dataclasses
import json
import logging
import pathlib
import typing
from fractions import Fraction

import pytest

from lsst.ts.snapfaas import (
    CorruptFile,
    CostParams,
    Harness,
    InvariantViolation,
    MissingArtifact,
    ReportFormat,
    ReportRecord,
    StrategyId,
    emit_report,
    read_records,
    summarize,
    write_json_file,
    write_records,
)

SNAPFAAS_RECORD = ReportRecord(
    function="lorem",
    language_tag="go",
    strategy="snapfaas",
    round=0,
    boot_us=Fraction(11000),
    exec_us=Fraction(1590),
    e2e_us=Fraction(12590),
    warm_exec_us=Fraction(1500),
    A_us=Fraction(6000),
    B_us=Fraction(160 * 4096, 500) + 50,
    C_us=Fraction(5000),
    D_us=Fraction(90),
    eager_bytes=160 * 4096,
    demand_pages=0,
    cow_faults=90,
    full_bytes=9816 * 4096,
)

REGULAR_RECORD = ReportRecord(
    function="lorem",
    language_tag="go",
    strategy="regular",
    round=0,
    boot_us=Fraction(656000),
    exec_us=Fraction(1500),
    e2e_us=Fraction(657500),
    warm_exec_us=Fraction(1500),
    A_us=Fraction(6000),
    B_us=Fraction(0),
    C_us=Fraction(650000),
    D_us=Fraction(0),
    eager_bytes=0,
    demand_pages=0,
    cow_faults=0,
    full_bytes=9816 * 4096,
)


@pytest.fixture
def records() -> list[ReportRecord]:
    return [
        SNAPFAAS_RECORD,
        dataclasses.replace(SNAPFAAS_RECORD, round=1),
        REGULAR_RECORD,
        dataclasses.replace(REGULAR_RECORD, round=1),
    ]


def test_record_invariants() -> None:
    with pytest.raises(InvariantViolation):
        dataclasses.replace(SNAPFAAS_RECORD, e2e_us=Fraction(12591))

    with pytest.raises(InvariantViolation):
        dataclasses.replace(SNAPFAAS_RECORD, C_us=Fraction(5001))


def test_same_measurement() -> None:
    assert SNAPFAAS_RECORD.same_measurement(dataclasses.replace(SNAPFAAS_RECORD, round=7))
    assert not SNAPFAAS_RECORD.same_measurement(dataclasses.replace(SNAPFAAS_RECORD, cow_faults=91))


def test_records_file(tmp_path: pathlib.Path, records: list[ReportRecord]) -> None:
    filepath = write_records(records, tmp_path / "records.json")

    assert read_records(filepath) == records

    document = json.loads(filepath.read_text())
    assert document["records"][0]["B_us"] == "34018/25"

    with pytest.raises(MissingArtifact):
        read_records(tmp_path / "absent.json")

    filepath.write_text('{"records": [{"function": "lorem"}]}')
    with pytest.raises(CorruptFile):
        read_records(filepath)


def test_summarize(records: list[ReportRecord]) -> None:
    summary = summarize(records)

    # Strategies in declaration order
    assert summary["strategy"].tolist() == ["regular", "snapfaas"]
    assert summary["e2e_us"].tolist() == [Fraction(657500), Fraction(12590)]
    assert summary["cow_faults"].tolist() == [0, 90]


def test_emit_report_csv(tmp_path: pathlib.Path, records: list[ReportRecord]) -> None:
    filepaths = emit_report(records, ReportFormat.CSV, tmp_path)

    assert [filepath.name for filepath in filepaths] == [
        "latency.csv",
        "breakdown.csv",
        "eager_sizes.csv",
        "speedup_trend.csv",
    ]

    latency = (tmp_path / "latency.csv").open(newline="").read().split("\r\n")
    assert latency[0] == "function,language_tag,strategy,boot_ms,exec_ms,e2e_ms,boot_norm,exec_norm,e2e_norm"
    assert latency[1] == "lorem,go,regular,656.0,1.5,657.5,59.636,0.943,52.224"
    assert latency[2] == "lorem,go,snapfaas,11.0,1.6,12.6,1.000,1.000,1.000"

    breakdown = (tmp_path / "breakdown.csv").open(newline="").read().split("\r\n")
    assert breakdown[0] == "function,language_tag,strategy,A_ms,B_ms,C_ms,D_ms"
    assert breakdown[2] == "lorem,go,snapfaas,6.0,1.4,5.0,0.1"

    eager_sizes = (tmp_path / "eager_sizes.csv").open(newline="").read().split("\r\n")
    assert eager_sizes[0] == "function,language_tag,strategy,eager_bytes,eager_mb,full_bytes,full_mb"
    assert eager_sizes[2] == "lorem,go,snapfaas,655360,0.6,40206336,38.3"

    speedup = (tmp_path / "speedup_trend.csv").open(newline="").read().split("\r\n")
    assert speedup[1:4] == [
        "lorem,go,1.5,regular,1.000",
        "lorem,go,1.5,snapfaas,52.224",
        "lorem,go,1.5,optimal,438.333",
    ]


def test_emit_report_deterministic(tmp_path: pathlib.Path, records: list[ReportRecord]) -> None:
    for report_format in ReportFormat:
        first = emit_report(records, report_format, tmp_path / "first")
        second = emit_report(records, report_format, tmp_path / "second")

        for filepath_first, filepath_second in zip(first, second):
            assert filepath_first.read_bytes() == filepath_second.read_bytes()


def test_emit_report_json(tmp_path: pathlib.Path, records: list[ReportRecord]) -> None:
    emit_report(records, "json", tmp_path)

    rows = json.loads((tmp_path / "breakdown.json").read_text())
    assert rows[1] == {
        "function": "lorem",
        "language_tag": "go",
        "strategy": "snapfaas",
        "A_ms": "6.0",
        "B_ms": "1.4",
        "C_ms": "5.0",
        "D_ms": "0.1",
    }


def test_emit_report_empty(tmp_path: pathlib.Path) -> None:
    with pytest.raises(ValueError):
        emit_report([], ReportFormat.CSV, tmp_path)


def test_emit_report_read_only_execution(
    tmp_path: pathlib.Path, small_document: dict[str, typing.Any], small_params: CostParams
) -> None:
    # The execution only reads pages that every strategy restores
    small_document["phases"][4]["steps"] = [{"type": "read", "start_page": 32, "page_count": 4}]
    spec_path = write_json_file(tmp_path / "small.json", small_document)

    harness = Harness(logging.getLogger(), params=small_params)
    artifacts = harness.register_function(spec_path, tmp_path / "out", gen_base=True)
    loaded = harness.load_function(artifacts.manifest_path)

    records = [
        harness.measure(loaded, strategy, artifacts.generation_request_seed)
        for strategy in (StrategyId.Regular, StrategyId.SnapFaas)
    ]
    assert [record.exec_us for record in records] == [Fraction(0), Fraction(0)]
    assert records[1].warm_exec_us == Fraction(0)

    emit_report(records, ReportFormat.CSV, tmp_path / "report")

    latency = (tmp_path / "report" / "latency.csv").open(newline="").read().split("\r\n")
    assert latency[1].split(",")[7] == "1.000"
    assert latency[2].endswith(",1.000,1.000,1.000")

    speedup = (tmp_path / "report" / "speedup_trend.csv").open(newline="").read().split("\r\n")
    assert speedup[1].endswith(",regular,1.000")
    assert speedup[3].endswith(",optimal,inf")
