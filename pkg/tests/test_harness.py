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

import logging
import pathlib
import statistics
import typing
from fractions import Fraction

import pytest
import yaml

from lsst.ts.snapfaas import (
    BaseMismatch,
    BenchConfig,
    CostParams,
    DeterminismViolation,
    FunctionArtifacts,
    Harness,
    InvariantViolation,
    LoadedFunction,
    MalformedDocument,
    MissingArtifact,
    ReportFormat,
    ReportRecord,
    StrategyId,
    boot,
    breakdown,
    emit_report,
    get_data_dir,
    invoke,
    read_bench_config,
    read_scenario,
    state_digest,
    validate_model_vs_sim,
    write_cow_ratio,
    write_json_file,
)

# Functions whose execution dominates the cold start
LONG_FUNCTIONS = ("tpcc", "ocr")


@pytest.fixture(scope="module")
def harness() -> Harness:
    return Harness(logging.getLogger())


@pytest.fixture(scope="module")
def loaded_corpus(harness: Harness, registered_corpus: dict[str, FunctionArtifacts]) -> dict[str, LoadedFunction]:
    return {name: harness.load_function(artifacts.manifest_path) for name, artifacts in registered_corpus.items()}


@pytest.fixture(scope="module")
def corpus_records(harness: Harness, loaded_corpus: dict[str, LoadedFunction]) -> dict[str, dict[StrategyId, ReportRecord]]:
    return {
        name: {
            strategy: harness.measure(loaded, strategy, loaded.artifacts.generation_request_seed)
            for strategy in StrategyId
        }
        for name, loaded in loaded_corpus.items()
    }


def write_spec(directory: pathlib.Path, document: dict[str, typing.Any]) -> pathlib.Path:
    return write_json_file(directory / f"{document['name']}.json", document)


def test_register_corpus(registered_corpus: dict[str, FunctionArtifacts]) -> None:
    output_dir = registered_corpus["lorem"].manifest_path.parent.parent

    assert len(list(output_dir.glob("*/manifest.json"))) == 10

    # One base per language
    assert len(list((output_dir / "bases").iterdir())) == 4
    assert len({artifacts.base_id for artifacts in registered_corpus.values()}) == 4

    artifacts = registered_corpus["lorem"]
    manifest = FunctionArtifacts.read(artifacts.manifest_path.parent)

    assert manifest.diff_id == artifacts.diff_id
    assert manifest.base_path.resolve() == artifacts.base_path.resolve()
    assert manifest.generation_request_seed == artifacts.generation_request_seed


def test_register_function_again(
    tmp_path: pathlib.Path, harness: Harness, corpus_dir: pathlib.Path
) -> None:
    first = harness.register_function(corpus_dir / "lorem.json", tmp_path, gen_base=True)
    second = harness.register_function(corpus_dir / "lorem.json", tmp_path)

    assert first == second
    assert len(list((tmp_path / "bases").iterdir())) == 1
    assert harness.reporter.status.registered_functions[-1] == "lorem"


def test_register_function_missing_base(
    tmp_path: pathlib.Path, harness: Harness, corpus_dir: pathlib.Path
) -> None:
    with pytest.raises(MissingArtifact):
        harness.register_function(corpus_dir / "lorem.json", tmp_path)


def test_register_function_base_mismatch(
    tmp_path: pathlib.Path, small_document: dict[str, typing.Any]
) -> None:
    harness = Harness(logging.getLogger())
    harness.register_function(write_spec(tmp_path, small_document), tmp_path / "out", gen_base=True)

    # Same language with another runtime initialization
    small_document["name"] = "other"
    small_document["phases"][2]["steps"][0]["step_seed"] = 4

    with pytest.raises(BaseMismatch):
        harness.register_function(write_spec(tmp_path, small_document), tmp_path / "out", gen_base=True)


def test_register_function_empty_diff(
    tmp_path: pathlib.Path, small_document: dict[str, typing.Any]
) -> None:
    small_document["phases"][3]["steps"] = [{"type": "mount_appfs"}, {"type": "compute", "duration_us": 300}]

    harness = Harness(logging.getLogger())
    warnings: list[str] = list()
    harness.reporter.signals["message"].warning.connect(warnings.append)

    harness.register_function(write_spec(tmp_path, small_document), tmp_path / "out", gen_base=True)

    assert warnings == [
        "Function small has an empty diff snapshot.",
        "Function small has an empty working set.",
    ]


def test_load_function_mismatch(
    tmp_path: pathlib.Path, harness: Harness, corpus_dir: pathlib.Path
) -> None:
    artifacts = harness.register_function(corpus_dir / "lorem.json", tmp_path, gen_base=True)

    document = artifacts.to_document()
    document["diff_id"] = "0" * 16
    write_json_file(artifacts.manifest_path, document)

    with pytest.raises(InvariantViolation):
        harness.load_function(artifacts.manifest_path)

    with pytest.raises(MissingArtifact):
        harness.load_function(tmp_path / "absent")


def test_shared_base_network(loaded_corpus: dict[str, LoadedFunction]) -> None:
    functions_by_base: dict[str, list[LoadedFunction]] = dict()
    for loaded in loaded_corpus.values():
        functions_by_base.setdefault(loaded.base.id, list()).append(loaded)

    # Several functions are registered against one base
    assert max(len(functions) for functions in functions_by_base.values()) >= 2

    for functions in functions_by_base.values():
        nets = {loaded.diff.meta.device.net for loaded in functions}
        assert nets == {functions[0].base.meta.device.net}
        assert functions[0].base.meta.device.net.is_set


def test_corpus_base_total(loaded_corpus: dict[str, LoadedFunction]) -> None:
    bases = {loaded.base.id: loaded.base for loaded in loaded_corpus.values()}
    total = sum(base.pages.nbytes for base in bases.values())

    # One base per language kept in memory by the throughput scenario
    assert total == 196 * 1024 * 1024
    assert total == read_scenario().machine_snapfaas.resident_base_bytes


def test_memoization(harness: Harness, loaded_corpus: dict[str, LoadedFunction]) -> None:
    params = harness.params

    for name, loaded in loaded_corpus.items():
        seed = loaded.artifacts.generation_request_seed
        digests = set()
        responses = set()
        for strategy in StrategyId:
            state, ledger, _ = boot(loaded.plan(strategy), loaded.spec, params)
            response, _, _ = invoke(state, loaded.spec, seed, params, ledger=ledger)

            digests.add(state_digest(state))
            responses.add(response)

        assert len(digests) == 1, name
        assert len(responses) == 1, name


def test_model_vs_simulation(harness: Harness, loaded_corpus: dict[str, LoadedFunction]) -> None:
    params = harness.params

    for name, loaded in loaded_corpus.items():
        seed = loaded.artifacts.generation_request_seed
        for strategy in (StrategyId.SnapFaasMinus, StrategyId.SnapFaas):
            state, ledger, boot_us = boot(loaded.plan(strategy), loaded.spec, params)
            _, ledger, exec_us = invoke(state, loaded.spec, seed, params, ledger=ledger)

            state.memory.make_resident()
            _, _, warm_exec_us = invoke(state, loaded.spec, seed, params)

            latency_breakdown = breakdown(ledger, warm_exec_us, boot_us, exec_us, params)

            assert validate_model_vs_sim(ledger, latency_breakdown, params) == 0, (name, strategy)


def test_working_set_exactness(corpus_records: dict[str, dict[StrategyId, ReportRecord]]) -> None:
    for name, records in corpus_records.items():
        assert records[StrategyId.SnapFaas].demand_pages == 0, name


def test_speedup(corpus_records: dict[str, dict[StrategyId, ReportRecord]]) -> None:
    for name, records in corpus_records.items():
        e2e = {strategy: record.e2e_us for strategy, record in records.items()}

        if name in LONG_FUNCTIONS:
            assert max(e2e.values()) <= Fraction(11, 10) * min(e2e.values()), name
        else:
            speedup = e2e[StrategyId.Reap] / e2e[StrategyId.SnapFaas]
            assert 2 <= speedup <= 10, name


def test_strategy_order(corpus_records: dict[str, dict[StrategyId, ReportRecord]]) -> None:
    for name, records in corpus_records.items():
        e2e = {strategy: record.e2e_us for strategy, record in records.items()}

        assert e2e[StrategyId.SnapFaas] <= e2e[StrategyId.SnapFaasMinus], name
        for strategy in (StrategyId.Reap, StrategyId.Seuss):
            assert e2e[StrategyId.SnapFaasMinus] <= e2e[strategy] <= e2e[StrategyId.FullDemand], name
        assert e2e[StrategyId.FullDemand] <= e2e[StrategyId.Regular], name


def test_eager_dominance(corpus_records: dict[str, dict[StrategyId, ReportRecord]]) -> None:
    for name, records in corpus_records.items():
        eager_bytes = [
            records[strategy].eager_bytes
            for strategy in (StrategyId.SnapFaas, StrategyId.SnapFaasMinus, StrategyId.Reap)
        ]

        assert eager_bytes == sorted(eager_bytes), name
        assert eager_bytes[-1] <= records[StrategyId.Reap].full_bytes, name


def test_cow_ratio(
    tmp_path: pathlib.Path, harness: Harness, registered_corpus: dict[str, FunctionArtifacts]
) -> None:
    table = harness.cow_ratio_report([artifacts.manifest_path for artifacts in registered_corpus.values()])

    assert len(table) == 10
    assert table["cow_faults"].tolist() == table["trace_cow_faults"].tolist()

    # The snapshots read for the report are released
    assert harness._snapshots == dict()

    ratios = table["ratio"].tolist()
    assert max(ratios) <= Fraction(15, 100)
    assert statistics.median(ratios) < Fraction(5, 100)

    filepath = write_cow_ratio(table, tmp_path)
    lines = filepath.open(newline="").read().split("\r\n")

    assert lines[0] == "function,language_tag,base_pages,cow_faults,trace_cow_faults,ratio"
    assert lines[1].startswith("lorem,go,")


@pytest.mark.asyncio
async def test_run_bench(
    tmp_path: pathlib.Path, harness: Harness, registered_corpus: dict[str, FunctionArtifacts]
) -> None:
    config = BenchConfig(
        functions=[registered_corpus[name].manifest_path for name in ("lorem", "tpcc")],
        rounds=2,
    )

    first = await harness.run_bench(config)
    assert harness._snapshots == dict()

    second = await harness.run_bench(config)

    assert len(first) == 2 * len(StrategyId) * 2
    assert [(record.function, record.strategy, record.round) for record in first[:3]] == [
        ("lorem", "regular", 0),
        ("lorem", "regular", 1),
        ("lorem", "full-demand", 0),
    ]
    assert harness.reporter.status.bench == {"cellsTotal": 12, "cellsCompleted": 12, "records": 24}

    for report_format in ReportFormat:
        filepaths_first = emit_report(first, report_format, tmp_path / "first")
        filepaths_second = emit_report(second, report_format, tmp_path / "second")

        for filepath_first, filepath_second in zip(filepaths_first, filepaths_second):
            assert filepath_first.read_bytes() == filepath_second.read_bytes()


@pytest.mark.asyncio
async def test_run_bench_concurrency(harness: Harness, registered_corpus: dict[str, FunctionArtifacts]) -> None:
    functions = [registered_corpus[name].manifest_path for name in ("lorem", "matmul")]
    strategies = [StrategyId.Reap, StrategyId.SnapFaas]

    sequential = await harness.run_bench(BenchConfig(functions=functions, strategies=strategies, rounds=1))
    parallel = await harness.run_bench(
        BenchConfig(functions=functions, strategies=strategies, rounds=1, max_concurrency=4)
    )

    assert parallel == sequential


@pytest.mark.asyncio
async def test_run_bench_jitter(
    harness: Harness,
    registered_corpus: dict[str, FunctionArtifacts],
    corpus_records: dict[str, dict[StrategyId, ReportRecord]],
) -> None:
    config = BenchConfig(
        functions=[registered_corpus["lorem"].manifest_path],
        strategies=[StrategyId.SnapFaas],
        rounds=2,
        jitter=True,
        jitter_seed=5,
    )

    records = await harness.run_bench(config)

    # Extra reads can only add latency
    assert len(records) == 2
    assert all(record.e2e_us >= corpus_records["lorem"][StrategyId.SnapFaas].e2e_us for record in records)


def test_run_cell_determinism(
    monkeypatch: pytest.MonkeyPatch, harness: Harness, loaded_corpus: dict[str, LoadedFunction]
) -> None:
    loaded = loaded_corpus["lorem"]
    config = BenchConfig(functions=[loaded.artifacts.manifest_path], rounds=2)

    measure = harness.measure

    def measure_drifting(*args: typing.Any, **kwargs: typing.Any) -> ReportRecord:
        record = measure(*args, **kwargs)
        if kwargs["round_index"] == 0:
            return record
        return ReportRecord.from_document(
            record.to_document() | {"cow_faults": record.cow_faults + 1}
        )

    monkeypatch.setattr(harness, "measure", measure_drifting)

    with pytest.raises(DeterminismViolation):
        harness.run_cell(loaded, StrategyId.SnapFaas, config)


def test_bench_config() -> None:
    with pytest.raises(InvariantViolation):
        BenchConfig(functions=[pathlib.Path("lorem")], rounds=0)

    with pytest.raises(InvariantViolation):
        BenchConfig(functions=[])

    config = BenchConfig(functions=[pathlib.Path("lorem")], jitter=True, jitter_seed=3)

    assert config.jitter_for(2) is not None
    assert config.jitter_for(2).seed == 5  # type: ignore[union-attr]


def test_read_bench_config(tmp_path: pathlib.Path) -> None:
    config = read_bench_config(get_data_dir() / "config" / "bench.yaml")

    assert len(config.functions) == 10
    assert config.functions[0].name == "lorem"
    assert config.strategies == list(StrategyId)
    assert config.rounds == 100
    assert config.request_seed is None
    assert config.params == CostParams()

    filepath = tmp_path / "bench.yaml"
    filepath.write_text(
        yaml.safe_dump(
            {
                "functions": ["lorem"],
                "strategies": ["reap", "snapfaas"],
                "rounds": 3,
                "params": {"c_us": 7000},
                "request_seed": 9,
                "format": "json",
            }
        )
    )
    config = read_bench_config(filepath)

    assert config.functions == [tmp_path / "lorem"]
    assert config.strategies == [StrategyId.Reap, StrategyId.SnapFaas]
    assert config.params.c_us == 7000
    assert config.request_seed == 9
    assert config.report_format == ReportFormat.JSON

    filepath.write_text(yaml.safe_dump({"rounds": 3}))
    with pytest.raises(MalformedDocument):
        read_bench_config(filepath)

    filepath.write_text(yaml.safe_dump({"functions": ["lorem"], "strategies": ["unknown"]}))
    with pytest.raises(MalformedDocument):
        read_bench_config(filepath)
