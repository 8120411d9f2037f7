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
    "FunctionArtifacts",
    "LoadedFunction",
    "BenchConfig",
    "read_bench_config",
    "write_cow_ratio",
    "Harness",
]

import asyncio
import json
import logging
import os
import pathlib
import typing
from dataclasses import dataclass, field
from fractions import Fraction

import pandas as pd

from .constants import (
    DEFAULT_JITTER_READS,
    DEFAULT_REQUEST_SEED,
    DEFAULT_ROUNDS,
    FULL_WORKING_SET_FILE_NAME,
    MANIFEST_FILE_NAME,
    METADATA_FILE_NAME,
    WORKING_SET_FILE_NAME,
)
from .cost_model import CostParams, breakdown, read_cost_params
from .enums import PagePolicy, SnapshotKind, StrategyId
from .errors import (
    BaseMismatch,
    CorruptFile,
    DeterminismViolation,
    InvariantViolation,
    MalformedDocument,
    MissingArtifact,
)
from .guest import JitterConfig, TrackingFlags
from .report import ReportFormat, ReportRecord
from .reporter import Reporter
from .restore import RestorePlan, boot, invoke, plan_restore
from .snapshot import (
    check_base,
    check_network,
    compose_full,
    generate_base,
    generate_diff,
    generate_full_ws,
    generate_ws,
)
from .sparse_file import (
    BaseSnapshot,
    DiffSnapshot,
    FullSnapshot,
    Snapshot,
    WorkingSetFile,
    read_snapshot,
    read_working_set,
    write_snapshot,
    write_working_set,
)
from .utils import read_yaml_file, write_json_file
from .workload import WorkloadSpec, prefix_digest, read_workload

SPEC_FILE_NAME = "spec.json"
DIFF_DIR_NAME = "diff"
BASE_STORE_DIR_NAME = "bases"
COW_RATIO_FILE_NAME = "cow_ratio.csv"


@dataclass(frozen=True)
class FunctionArtifacts:
    """Manifest of a registered function.

    Parameters
    ----------
    function : `str`
        Function name.
    language_tag : `str`
        Language of the function.
    manifest_path : `pathlib.Path`
        Manifest file.
    spec_path : `pathlib.Path`
        Workload description.
    base_id : `str`
        Base snapshot id.
    base_path : `pathlib.Path`
        Base snapshot directory.
    diff_id : `str`
        Diff snapshot id.
    diff_path : `pathlib.Path`
        Diff snapshot directory.
    ws_path : `pathlib.Path`
        Working set of the diff snapshot.
    full_ws_path : `pathlib.Path`
        Working set of the full snapshot.
    generation_request_seed : `int`
        Request seed of the working set generation.
    """

    function: str
    language_tag: str
    manifest_path: pathlib.Path
    spec_path: pathlib.Path
    base_id: str
    base_path: pathlib.Path
    diff_id: str
    diff_path: pathlib.Path
    ws_path: pathlib.Path
    full_ws_path: pathlib.Path
    generation_request_seed: int

    def to_document(self) -> dict:
        directory = self.manifest_path.parent

        def relative(path: pathlib.Path) -> str:
            return pathlib.PurePath(os.path.relpath(path, directory)).as_posix()

        return {
            "function": self.function,
            "language_tag": self.language_tag,
            "spec": relative(self.spec_path),
            "base_id": self.base_id,
            "base": relative(self.base_path),
            "diff_id": self.diff_id,
            "diff": relative(self.diff_path),
            "ws": relative(self.ws_path),
            "full_ws": relative(self.full_ws_path),
            "generation": {"request_seed": self.generation_request_seed},
        }

    @classmethod
    def read(cls, filepath: pathlib.Path | str) -> "FunctionArtifacts":
        """Read the manifest.

        Parameters
        ----------
        filepath : `pathlib.Path` or `str`
            Manifest file, or the directory that holds it.

        Returns
        -------
        `FunctionArtifacts`
            Manifest.

        Raises
        ------
        MissingArtifact
            If the manifest is absent.
        CorruptFile
            If the manifest can not be decoded.
        """

        filepath = pathlib.Path(filepath)
        if filepath.is_dir():
            filepath = filepath / MANIFEST_FILE_NAME
        if not filepath.is_file():
            raise MissingArtifact(f"Manifest does not exist: {filepath}.")

        directory = filepath.parent
        try:
            document = json.loads(filepath.read_text(encoding="utf-8"))
            return cls(
                function=str(document["function"]),
                language_tag=str(document["language_tag"]),
                manifest_path=filepath,
                spec_path=directory / document["spec"],
                base_id=str(document["base_id"]),
                base_path=directory / document["base"],
                diff_id=str(document["diff_id"]),
                diff_path=directory / document["diff"],
                ws_path=directory / document["ws"],
                full_ws_path=directory / document["full_ws"],
                generation_request_seed=int(document["generation"]["request_seed"]),
            )
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError) as error:
            raise CorruptFile(f"Can not decode {filepath}: {error!r}.")


@dataclass(frozen=True)
class LoadedFunction:
    """Cross-validated artifacts of a registered function."""

    artifacts: FunctionArtifacts
    spec: WorkloadSpec
    base: BaseSnapshot
    diff: DiffSnapshot
    full: FullSnapshot
    ws: WorkingSetFile
    full_ws: WorkingSetFile

    def plan(self, strategy: StrategyId) -> RestorePlan:
        """Restore plan of the strategy."""

        working_set = self.full_ws if strategy == StrategyId.Reap else self.ws
        return plan_restore(strategy, base=self.base, diff=self.diff, ws=working_set, full=self.full)


@dataclass(frozen=True)
class BenchConfig:
    """Bench configuration.

    Parameters
    ----------
    functions : `list` [`pathlib.Path`]
        Manifests of the registered functions.
    strategies : `list` [`StrategyId`]
        Strategies to compare.
    rounds : `int`, optional
        Rounds per (function, strategy) cell. (the default is
        DEFAULT_ROUNDS)
    params : `CostParams`, optional
        Cost parameters. (the default is the shipped defaults)
    request_seed : `int` or None, optional
        Request seed. If None, the working set generation seed of each
        function. (the default is None)
    jitter : `bool`, optional
        Add seeded extra reads to every execution. (the default is False)
    jitter_seed : `int`, optional
        Seed of the extra reads of the first round. (the default is 0)
    jitter_reads : `int`, optional
        Extra reads per execution phase. (the default is
        DEFAULT_JITTER_READS)
    report_format : enum `ReportFormat`, optional
        Format of the report tables. (the default is CSV)
    max_concurrency : `int`, optional
        Cells run in parallel. (the default is 1)
    """

    functions: list[pathlib.Path]
    strategies: list[StrategyId] = field(default_factory=lambda: list(StrategyId))
    rounds: int = DEFAULT_ROUNDS
    params: CostParams = field(default_factory=CostParams)
    request_seed: int | None = None
    jitter: bool = False
    jitter_seed: int = 0
    jitter_reads: int = DEFAULT_JITTER_READS
    report_format: ReportFormat = ReportFormat.CSV
    max_concurrency: int = 1

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise InvariantViolation(f"Bench needs at least one round, not {self.rounds}.")
        if self.max_concurrency < 1:
            raise InvariantViolation(f"Bench concurrency must be at least 1, not {self.max_concurrency}.")
        if not self.functions:
            raise InvariantViolation("Bench has no function.")
        if not self.strategies:
            raise InvariantViolation("Bench has no strategy.")

    def jitter_for(self, round_index: int) -> JitterConfig | None:
        """Jitter of the round, or None if the jitter is disabled."""

        if not self.jitter:
            return None
        return JitterConfig(seed=self.jitter_seed + round_index, reads=self.jitter_reads)


def read_bench_config(filepath: pathlib.Path | str) -> BenchConfig:
    """Read the bench configuration.

    Relative paths are relative to the configuration file.

    Parameters
    ----------
    filepath : `pathlib.Path` or `str`
        YAML or JSON configuration.

    Returns
    -------
    `BenchConfig`
        Bench configuration.

    Raises
    ------
    MalformedDocument
        If a field is missing or wrong.
    """

    filepath = pathlib.Path(filepath)
    document = read_yaml_file(filepath)
    directory = filepath.parent

    try:
        functions = [directory / str(function) for function in document["functions"]]

        params_document = document.get("params")
        match params_document:
            case None:
                params = read_cost_params()
            case str():
                params = read_cost_params(directory / params_document)
            case dict():
                params = CostParams.from_dict(params_document)
            case _:
                raise MalformedDocument(f"{filepath}: params must be a path or a mapping.")

        request_seed = document.get("request_seed", "ws")
        strategies = document.get("strategies")

        return BenchConfig(
            functions=functions,
            strategies=(list(StrategyId) if strategies is None else [StrategyId(value) for value in strategies]),
            rounds=int(document.get("rounds", DEFAULT_ROUNDS)),
            params=params,
            request_seed=None if request_seed == "ws" else int(request_seed),
            jitter=bool(document.get("jitter", False)),
            jitter_seed=int(document.get("jitter_seed", 0)),
            jitter_reads=int(document.get("jitter_reads", DEFAULT_JITTER_READS)),
            report_format=ReportFormat(document.get("format", ReportFormat.CSV.value)),
            max_concurrency=int(document.get("max_concurrency", 1)),
        )
    except (KeyError, TypeError, ValueError) as error:
        raise MalformedDocument(f"Bench configuration {filepath} is malformed: {error!r}.")


class Harness:
    """Register functions and benchmark the cold-start strategies.

    Parameters
    ----------
    log : `logging.Logger`
        A logger.
    params : `CostParams` or None, optional
        Cost parameters of the single invokes and the copy-on-write
        report. If None, the shipped defaults. (the default is None)
    reporter : `Reporter` or None, optional
        Reporter. If None, a new one is created. (the default is None)

    Attributes
    ----------
    log : `logging.Logger`
        A logger.
    params : `CostParams`
        Cost parameters.
    reporter : `Reporter`
        Reporter to report the pipeline status.
    """

    def __init__(
        self,
        log: logging.Logger,
        params: CostParams | None = None,
        reporter: Reporter | None = None,
    ) -> None:
        self.log = log.getChild(type(self).__name__)
        self.params = read_cost_params() if params is None else params
        self.reporter = Reporter(self.log) if reporter is None else reporter

        # Snapshots read in this session, by resolved directory
        self._snapshots: dict[pathlib.Path, Snapshot] = dict()

    def _read_snapshot(self, directory: pathlib.Path) -> Snapshot:
        key = directory.resolve()
        if key not in self._snapshots:
            self._snapshots[key] = read_snapshot(directory)
        return self._snapshots[key]

    def find_base(self, spec: WorkloadSpec, base_store: pathlib.Path | str) -> tuple[BaseSnapshot, pathlib.Path] | None:
        """Find the base snapshot of the workload in the store.

        Parameters
        ----------
        spec : `WorkloadSpec`
            Workload.
        base_store : `pathlib.Path` or `str`
            Directory of the base snapshots.

        Returns
        -------
        `tuple` or None
            Base snapshot and its directory. None if the store has no base
            for the language of the workload.

        Raises
        ------
        BaseMismatch
            If the store only has bases of the language generated from other
            initialization phases.
        """

        base_store = pathlib.Path(base_store)
        if not base_store.is_dir():
            return None

        digest = prefix_digest(spec)
        mismatched = list()
        for filepath_meta in sorted(base_store.glob(f"*/{METADATA_FILE_NAME}")):
            try:
                document = json.loads(filepath_meta.read_text(encoding="utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                self.log.warning(f"Skip the unreadable base metadata {filepath_meta}.")
                continue

            if not isinstance(document, dict) or document.get("snapshot_kind") != SnapshotKind.Base.value:
                continue
            if document.get("language_tag") != spec.language_tag:
                continue

            if document.get("provenance_digest") != digest:
                mismatched.append(filepath_meta.parent.name)
                continue

            snapshot = self._read_snapshot(filepath_meta.parent)
            return typing.cast(BaseSnapshot, snapshot), filepath_meta.parent

        if mismatched:
            raise BaseMismatch(
                f"Bases {mismatched} of {spec.language_tag} were not generated from the "
                f"initialization phases of {spec.name}."
            )

        return None

    def gen_base(self, spec_path: pathlib.Path | str, base_store: pathlib.Path | str) -> tuple[BaseSnapshot, pathlib.Path]:
        """Generate the base snapshot of the workload into the store.

        Parameters
        ----------
        spec_path : `pathlib.Path` or `str`
            Workload description.
        base_store : `pathlib.Path` or `str`
            Directory of the base snapshots.

        Returns
        -------
        base : `BaseSnapshot`
            Base snapshot.
        directory : `pathlib.Path`
            Directory of the base snapshot.
        """

        spec = read_workload(spec_path)
        base = generate_base(spec, log=self.log)
        directory = write_snapshot(base, pathlib.Path(base_store) / base.id)
        self._snapshots[directory.resolve()] = base

        return base, directory

    def register_function(
        self,
        spec_path: pathlib.Path | str,
        output_dir: pathlib.Path | str,
        base_store: pathlib.Path | str | None = None,
        gen_base: bool = False,
        request_seed: int = DEFAULT_REQUEST_SEED,
    ) -> FunctionArtifacts:
        """Register the function and write its artifacts.

        The artifacts go to ``<output_dir>/<function>/``. The base snapshot
        of the language is reused from the store when it exists.

        Parameters
        ----------
        spec_path : `pathlib.Path` or `str`
            Workload description.
        output_dir : `pathlib.Path` or `str`
            Output directory.
        base_store : `pathlib.Path`, `str` or None, optional
            Directory of the base snapshots. If None,
            ``<output_dir>/bases``. (the default is None)
        gen_base : `bool`, optional
            Generate the base snapshot if the store has none. (the default
            is False)
        request_seed : `int`, optional
            Request seed of the working set generation. (the default is
            DEFAULT_REQUEST_SEED)

        Returns
        -------
        `FunctionArtifacts`
            Manifest.

        Raises
        ------
        MissingArtifact
            If there is no base snapshot and ``gen_base`` is False.
        BaseMismatch
            If the base snapshot of the language does not fit the workload.
        """

        output_dir = pathlib.Path(output_dir)
        base_store = output_dir / BASE_STORE_DIR_NAME if base_store is None else pathlib.Path(base_store)

        spec = read_workload(spec_path)

        found = self.find_base(spec, base_store)
        if found is None:
            if not gen_base:
                raise MissingArtifact(f"No base snapshot of {spec.language_tag} in {base_store}.")
            base = generate_base(spec, log=self.log)
            base_path = write_snapshot(base, base_store / base.id)
            self._snapshots[base_path.resolve()] = base
        else:
            base, base_path = found
            self.log.info(f"Reuse the base snapshot {base.id} for {spec.name}.")

        check_base(spec, base)

        diff = generate_diff(spec, base, log=self.log)
        if len(diff.pages) == 0:
            self.reporter.report_warning(f"Function {spec.name} has an empty diff snapshot.")

        working_set = generate_ws(spec, base, diff, request_seed, log=self.log)
        if len(working_set.ws_page_ids) == 0:
            self.reporter.report_warning(f"Function {spec.name} has an empty working set.")

        full = compose_full(base, diff)
        full_working_set = generate_full_ws(spec, full, request_seed)

        function_dir = output_dir / spec.name
        function_dir.mkdir(parents=True, exist_ok=True)

        spec_file = write_json_file(function_dir / SPEC_FILE_NAME, spec.to_document())
        diff_path = write_snapshot(diff, function_dir / DIFF_DIR_NAME)
        self._snapshots[diff_path.resolve()] = diff
        ws_path = write_working_set(working_set, function_dir / WORKING_SET_FILE_NAME)
        full_ws_path = write_working_set(full_working_set, function_dir / FULL_WORKING_SET_FILE_NAME)

        artifacts = FunctionArtifacts(
            function=spec.name,
            language_tag=spec.language_tag,
            manifest_path=function_dir / MANIFEST_FILE_NAME,
            spec_path=spec_file,
            base_id=base.id,
            base_path=base_path,
            diff_id=diff.id,
            diff_path=diff_path,
            ws_path=ws_path,
            full_ws_path=full_ws_path,
            generation_request_seed=request_seed,
        )
        write_json_file(artifacts.manifest_path, artifacts.to_document())

        self.log.info(f"Registered {spec.name} in {function_dir}.")
        self.reporter.report_artifact(spec.name, artifacts)

        return artifacts

    def load_function(self, manifest_path: pathlib.Path | str) -> LoadedFunction:
        """Load and cross-validate the artifacts of a registered function.

        Parameters
        ----------
        manifest_path : `pathlib.Path` or `str`
            Manifest file, or the directory that holds it.

        Returns
        -------
        `LoadedFunction`
            Artifacts.

        Raises
        ------
        MissingArtifact
            If an artifact is absent.
        InvariantViolation
            If the artifacts do not reference each other or the diff snapshot
            does not carry the network of its base snapshot.
        """

        artifacts = FunctionArtifacts.read(manifest_path)
        spec = read_workload(artifacts.spec_path)

        base = self._read_snapshot(artifacts.base_path)
        diff = self._read_snapshot(artifacts.diff_path)
        if not isinstance(base, BaseSnapshot) or not isinstance(diff, DiffSnapshot):
            raise InvariantViolation(f"Manifest {artifacts.manifest_path} references snapshots of wrong kinds.")

        working_set = read_working_set(artifacts.ws_path)
        full_working_set = read_working_set(artifacts.full_ws_path)
        full = compose_full(base, diff)

        if base.id != artifacts.base_id or diff.id != artifacts.diff_id:
            raise InvariantViolation(f"Manifest {artifacts.manifest_path} does not match its snapshots.")
        if diff.meta.parent_base_id != base.id:
            raise InvariantViolation(f"Diff {diff.id} does not layer over {base.id}.")
        check_network(base, diff)
        if working_set.diff_id != diff.id or full_working_set.diff_id != full.id:
            raise InvariantViolation(f"Working sets of {artifacts.function} belong to other snapshots.")

        check_base(spec, base)

        return LoadedFunction(artifacts, spec, base, diff, full, working_set, full_working_set)

    def measure(
        self,
        loaded: LoadedFunction,
        strategy: StrategyId,
        request_seed: int,
        round_index: int = 0,
        params: CostParams | None = None,
        jitter: JitterConfig | None = None,
        plan: RestorePlan | None = None,
    ) -> ReportRecord:
        """Cold start, then a warm-baseline invoke on the same instance.

        Parameters
        ----------
        loaded : `LoadedFunction`
            Artifacts.
        strategy : enum `StrategyId`
            Strategy.
        request_seed : `int`
            Request seed.
        round_index : `int`, optional
            Round number. (the default is 0)
        params : `CostParams` or None, optional
            Cost parameters. If None, those of the harness. (the default is
            None)
        jitter : `JitterConfig` or None, optional
            Extra reads of the executions. (the default is None)
        plan : `RestorePlan` or None, optional
            Plan of the strategy, if already built. (the default is None)

        Returns
        -------
        `ReportRecord`
            Measurement.
        """

        params = self.params if params is None else params
        plan = loaded.plan(strategy) if plan is None else plan
        spec = loaded.spec

        state, ledger, boot_us = boot(plan, spec, params)
        _, ledger, exec_us = invoke(state, spec, request_seed, params, ledger=ledger, jitter=jitter)

        state.memory.make_resident()
        _, _, warm_exec_us = invoke(state, spec, request_seed, params, jitter=jitter)

        latency_breakdown = breakdown(ledger, warm_exec_us, boot_us, exec_us, params)

        return ReportRecord(
            function=spec.name,
            language_tag=spec.language_tag,
            strategy=strategy.value,
            round=round_index,
            boot_us=boot_us,
            exec_us=exec_us,
            e2e_us=boot_us + exec_us,
            warm_exec_us=warm_exec_us,
            A_us=latency_breakdown.A_us,
            B_us=latency_breakdown.B_us,
            C_us=latency_breakdown.C_us,
            D_us=latency_breakdown.D_us,
            eager_bytes=ledger.eager_bytes(params),
            demand_pages=ledger.demand_pages_disk + ledger.boot_demand_pages_disk,
            cow_faults=ledger.cow_faults,
            full_bytes=loaded.full.pages.nbytes,
        )

    def run_cell(self, loaded: LoadedFunction, strategy: StrategyId, config: BenchConfig) -> list[ReportRecord]:
        """Run all rounds of a (function, strategy) cell.

        Parameters
        ----------
        loaded : `LoadedFunction`
            Artifacts.
        strategy : enum `StrategyId`
            Strategy.
        config : `BenchConfig`
            Bench configuration.

        Returns
        -------
        `list` [`ReportRecord`]
            One record per round.

        Raises
        ------
        DeterminismViolation
            If the jitter is disabled and two rounds disagree.
        """

        request_seed = (
            loaded.artifacts.generation_request_seed if config.request_seed is None else config.request_seed
        )
        plan = loaded.plan(strategy)

        records = [
            self.measure(
                loaded,
                strategy,
                request_seed,
                round_index=round_index,
                params=config.params,
                jitter=config.jitter_for(round_index),
                plan=plan,
            )
            for round_index in range(config.rounds)
        ]

        if not config.jitter:
            for record in records[1:]:
                if not record.same_measurement(records[0]):
                    raise DeterminismViolation(
                        f"Round {record.round} of {loaded.spec.name}/{strategy.value} differs from round 0."
                    )

        return records

    async def run_bench(self, config: BenchConfig) -> list[ReportRecord]:
        """Run every (function, strategy) cell of the bench.

        Parameters
        ----------
        config : `BenchConfig`
            Bench configuration.

        Returns
        -------
        `list` [`ReportRecord`]
            Records in (function, strategy, round) order.

        Raises
        ------
        MissingArtifact
            If an artifact of a function is absent.
        DeterminismViolation
            If the jitter is disabled and two rounds of a cell disagree.
        """

        functions = [self.load_function(manifest) for manifest in config.functions]
        cells = [(loaded, strategy) for loaded in functions for strategy in config.strategies]

        self.reporter.report_bench_total(len(cells))
        semaphore = asyncio.Semaphore(config.max_concurrency)

        async def run(loaded: LoadedFunction, strategy: StrategyId) -> list[ReportRecord]:
            async with semaphore:
                self.reporter.report_cell_started(loaded.spec.name, strategy.value)
                records = await asyncio.to_thread(self.run_cell, loaded, strategy, config)

                self.reporter.report_cell_finished(loaded.spec.name, strategy.value, records)
                self.log.info(f"Finished {loaded.spec.name}/{strategy.value} with {len(records)} rounds.")

                return records

        try:
            results = await asyncio.gather(*[run(loaded, strategy) for loaded, strategy in cells])
        except DeterminismViolation as error:
            self.reporter.report_violation(str(error))
            raise
        finally:
            # The snapshots of a bench are not kept for the next one
            self._snapshots.clear()

        return [record for records in results for record in records]

    def invoke_function(
        self,
        manifest_path: pathlib.Path | str,
        strategy: StrategyId,
        request_seed: int | None = None,
        jitter: JitterConfig | None = None,
    ) -> dict[str, typing.Any]:
        """Cold start the function once and serve one request.

        Parameters
        ----------
        manifest_path : `pathlib.Path` or `str`
            Manifest file, or the directory that holds it.
        strategy : enum `StrategyId`
            Strategy.
        request_seed : `int` or None, optional
            Request seed. If None, the working set generation seed. (the
            default is None)
        jitter : `JitterConfig` or None, optional
            Extra reads of the execution. (the default is None)

        Returns
        -------
        `dict`
            Response digest, latencies in microseconds and page events.
        """

        loaded = self.load_function(manifest_path)
        spec = loaded.spec
        seed = loaded.artifacts.generation_request_seed if request_seed is None else request_seed

        state, ledger, boot_us = boot(loaded.plan(strategy), spec, self.params)
        digest, ledger, exec_us = invoke(state, spec, seed, self.params, ledger=ledger, jitter=jitter)

        return {
            "function": spec.name,
            "strategy": strategy.value,
            "request_seed": seed,
            "response_digest": f"0x{digest:016x}",
            "boot_us": str(boot_us),
            "exec_us": str(exec_us),
            "e2e_us": str(boot_us + exec_us),
            "eager_pages_disk": ledger.eager_pages_disk,
            "demand_pages_disk": ledger.demand_pages_disk + ledger.boot_demand_pages_disk,
            "cow_faults": ledger.cow_faults,
        }

    def cow_ratio_report(self, manifests: list[pathlib.Path]) -> pd.DataFrame:
        """Share of the base pages copied on write during the execution.

        Every function is booted with SnapFaas and the ledger count is
        checked against the write trace of the execution.

        Parameters
        ----------
        manifests : `list` [`pathlib.Path`]
            Manifests of the registered functions.

        Returns
        -------
        `pandas.DataFrame`
            One row per function.

        Raises
        ------
        InvariantViolation
            If the ledger and the trace disagree.
        """

        rows = list()
        try:
            for manifest in manifests:
                rows.append(self._cow_ratio_row(self.load_function(manifest)))
        finally:
            self._snapshots.clear()

        return pd.DataFrame(
            rows, columns=["function", "language_tag", "base_pages", "cow_faults", "trace_cow_faults", "ratio"]
        )

    def _cow_ratio_row(self, loaded: LoadedFunction) -> dict[str, typing.Any]:
        spec = loaded.spec
        plan = loaded.plan(StrategyId.SnapFaas)

        state, ledger, _ = boot(plan, spec, self.params)
        tracking = TrackingFlags(dirty_tracking=True)
        _, ledger, _ = invoke(
            state,
            spec,
            loaded.artifacts.generation_request_seed,
            self.params,
            ledger=ledger,
            tracking=tracking,
        )

        shared = {page_id for page_id, policy in plan.policy_map.items() if policy == PagePolicy.SharedCow}
        trace_cow_faults = len(tracking.dirty_set & shared)
        if trace_cow_faults != ledger.cow_faults:
            raise InvariantViolation(
                f"{spec.name}: {ledger.cow_faults} copy-on-write faults in the ledger, "
                f"{trace_cow_faults} in the trace."
            )

        base_pages = len(loaded.base.pages)
        return {
            "function": spec.name,
            "language_tag": spec.language_tag,
            "base_pages": base_pages,
            "cow_faults": ledger.cow_faults,
            "trace_cow_faults": trace_cow_faults,
            "ratio": Fraction(ledger.cow_faults, base_pages) if base_pages else Fraction(0),
        }


def write_cow_ratio(table: pd.DataFrame, directory: pathlib.Path | str) -> pathlib.Path:
    """Write the copy-on-write report.

    Parameters
    ----------
    table : `pandas.DataFrame`
        Report of `Harness.cow_ratio_report`.
    directory : `pathlib.Path` or `str`
        Output directory. It is created if needed.

    Returns
    -------
    `pathlib.Path`
        Written file.
    """

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    output = table.copy()
    output["ratio"] = [f"{float(ratio):.4f}" for ratio in output["ratio"]]

    filepath = directory / COW_RATIO_FILE_NAME
    output.to_csv(filepath, index=False, lineterminator="\r\n", encoding="utf-8")

    return filepath
