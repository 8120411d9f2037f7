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

__all__ = ["RestorePlan", "plan_restore", "boot", "invoke", "materialize_memory"]

import dataclasses
import typing
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .constants import FNV_OFFSET_BASIS
from .cost_model import CostParams, EventLedger
from .enums import PagePolicy, Provenance, SnapshotKind, StrategyId
from .errors import BaseMismatch, ForeignWorkingSet, MissingArtifact, NotRequestReady, PlanSpecMismatch
from .guest import DeviceState, GuestState, JitterConfig, TrackingFlags, run_phases
from .memory import LayeredMemory, Page
from .sparse_file import BaseSnapshot, DiffSnapshot, FullSnapshot, SnapshotMetadata, WorkingSetFile
from .workload import WorkloadSpec, prefix_digest

# Stages a plan runs at boot, by strategy
_PHASES_TO_EXECUTE = {
    StrategyId.Regular: (
        Provenance.Kernel,
        Provenance.OsInit,
        Provenance.Runtime,
        Provenance.FunctionInit,
    ),
    StrategyId.FullDemand: (),
    StrategyId.Reap: (),
    StrategyId.Seuss: (Provenance.FunctionInit,),
    StrategyId.SnapFaasMinus: (),
    StrategyId.SnapFaas: (),
}


@dataclass(frozen=True)
class RestorePlan:
    """Per-page restore policy of a strategy.

    Parameters
    ----------
    strategy : enum `StrategyId`
        Strategy.
    policy_map : `dict` [`int`, `PagePolicy`]
        Policy of every snapshot page. Absent pages are zero-filled.
    eager_page_ids : `tuple` [`int`]
        Pages with the eager policy, in increasing order.
    phases_to_execute : `tuple` [`Provenance`]
        Stages whose phases run at boot.
    metadata_source : `SnapshotMetadata` or None
        Non-memory state to install. None for a fresh boot.
    shared_image : `typing.Mapping` [`int`, `Page`]
        In-memory base image.
    disk_image : `typing.Mapping` [`int`, `Page`]
        Disk-backed snapshot pages.
    """

    strategy: StrategyId
    policy_map: dict[int, PagePolicy] = field(default_factory=dict)
    eager_page_ids: tuple[int, ...] = ()
    phases_to_execute: tuple[Provenance, ...] = ()
    metadata_source: SnapshotMetadata | None = None
    shared_image: typing.Mapping[int, Page] = field(default_factory=dict, repr=False)
    disk_image: typing.Mapping[int, Page] = field(default_factory=dict, repr=False)

    def pages_with(self, policy: PagePolicy) -> list[int]:
        """Pages with the policy, in increasing order."""
        return sorted(page_id for page_id, page_policy in self.policy_map.items() if page_policy == policy)


def _require(strategy: StrategyId, **artifacts: typing.Any) -> None:
    for name, artifact in artifacts.items():
        if artifact is None:
            raise MissingArtifact(f"Strategy {strategy.value} needs the {name}.")


def _check_parent(base: BaseSnapshot, snapshot: DiffSnapshot | FullSnapshot) -> None:
    if snapshot.meta.parent_base_id != base.id:
        raise BaseMismatch(
            f"Snapshot {snapshot.id} layers over {snapshot.meta.parent_base_id}, not over {base.id}."
        )


def _check_working_set(working_set: WorkingSetFile, snapshot: DiffSnapshot | FullSnapshot) -> None:
    if working_set.diff_id != snapshot.id:
        raise ForeignWorkingSet(f"Working set of {working_set.diff_id} is used with {snapshot.id}.")

    outside = set(working_set.ws_page_ids) - snapshot.pages.as_mapping().keys()
    if outside:
        raise ForeignWorkingSet(
            f"Working set of {working_set.diff_id} has {len(outside)} pages outside the snapshot, "
            f"such as {min(outside)}."
        )


def plan_restore(
    strategy: StrategyId,
    base: BaseSnapshot | None = None,
    diff: DiffSnapshot | None = None,
    ws: WorkingSetFile | None = None,
    full: FullSnapshot | None = None,
) -> RestorePlan:
    """Build the restore plan of the strategy.

    Parameters
    ----------
    strategy : enum `StrategyId`
        Strategy.
    base : `BaseSnapshot` or None, optional
        Base snapshot. Needed by Seuss, SnapFaasMinus and SnapFaas. (the
        default is None)
    diff : `DiffSnapshot` or None, optional
        Diff snapshot. Needed by SnapFaasMinus and SnapFaas. (the default
        is None)
    ws : `WorkingSetFile` or None, optional
        Working set. Of the diff snapshot for SnapFaas, of the full
        snapshot for Reap. (the default is None)
    full : `FullSnapshot` or None, optional
        Full snapshot. Needed by FullDemand and Reap. (the default is None)

    Returns
    -------
    `RestorePlan`
        Restore plan.

    Raises
    ------
    MissingArtifact
        If an artifact the strategy needs is absent.
    ForeignWorkingSet
        If the working set belongs to another snapshot.
    BaseMismatch
        If the diff snapshot does not layer over the base snapshot.
    """

    phases_to_execute = _PHASES_TO_EXECUTE[strategy]

    match strategy:
        case StrategyId.Regular:
            return RestorePlan(strategy, phases_to_execute=phases_to_execute)

        case StrategyId.FullDemand:
            _require(strategy, full=full)
            full = typing.cast(FullSnapshot, full)
            return RestorePlan(
                strategy,
                policy_map=dict.fromkeys(full.pages.page_ids, PagePolicy.DemandDisk),
                phases_to_execute=phases_to_execute,
                metadata_source=full.meta,
                disk_image=full.pages.as_mapping(),
            )

        case StrategyId.Reap:
            _require(strategy, full=full, ws=ws)
            full = typing.cast(FullSnapshot, full)
            ws = typing.cast(WorkingSetFile, ws)
            _check_working_set(ws, full)

            policy_map = dict.fromkeys(full.pages.page_ids, PagePolicy.DemandDisk)
            policy_map.update(dict.fromkeys(ws.ws_page_ids, PagePolicy.EagerDisk))
            return RestorePlan(
                strategy,
                policy_map=policy_map,
                eager_page_ids=tuple(ws.ws_page_ids),
                phases_to_execute=phases_to_execute,
                metadata_source=full.meta,
                disk_image=full.pages.as_mapping(),
            )

        case StrategyId.Seuss:
            _require(strategy, base=base)
            base = typing.cast(BaseSnapshot, base)
            return RestorePlan(
                strategy,
                policy_map=dict.fromkeys(base.pages.page_ids, PagePolicy.SharedCow),
                phases_to_execute=phases_to_execute,
                metadata_source=base.meta,
                shared_image=base.pages.as_mapping(),
            )

        case StrategyId.SnapFaasMinus | StrategyId.SnapFaas:
            if strategy == StrategyId.SnapFaas:
                _require(strategy, base=base, diff=diff, ws=ws)
            else:
                _require(strategy, base=base, diff=diff)
            base = typing.cast(BaseSnapshot, base)
            diff = typing.cast(DiffSnapshot, diff)
            _check_parent(base, diff)

            policy_map = dict.fromkeys(base.pages.page_ids, PagePolicy.SharedCow)
            if strategy == StrategyId.SnapFaasMinus:
                eager_page_ids = diff.pages.page_ids
                policy_map.update(dict.fromkeys(eager_page_ids, PagePolicy.EagerDisk))
            else:
                ws = typing.cast(WorkingSetFile, ws)
                _check_working_set(ws, diff)
                eager_page_ids = tuple(ws.ws_page_ids)
                policy_map.update(dict.fromkeys(diff.pages.page_ids, PagePolicy.DemandDisk))
                policy_map.update(dict.fromkeys(eager_page_ids, PagePolicy.EagerDisk))

            return RestorePlan(
                strategy,
                policy_map=policy_map,
                eager_page_ids=tuple(eager_page_ids),
                phases_to_execute=phases_to_execute,
                metadata_source=diff.meta,
                shared_image=base.pages.as_mapping(),
                disk_image=diff.pages.as_mapping(),
            )

    raise ValueError(f"Unknown strategy: {strategy!r}.")


def _expected_phase_index(spec: WorkloadSpec, meta: SnapshotMetadata) -> int:
    if meta.snapshot_kind == SnapshotKind.Base:
        return spec.base_range.stop
    return spec.execution_range.start


def _check_plan(plan: RestorePlan, spec: WorkloadSpec, params: CostParams) -> None:
    if params.page_size_bytes != spec.page_size:
        raise PlanSpecMismatch(
            f"Cost parameters assume {params.page_size_bytes}-byte pages, {spec.name} uses {spec.page_size}."
        )

    meta = plan.metadata_source
    if meta is None:
        if plan.policy_map:
            raise PlanSpecMismatch(f"Fresh boot plan of {plan.strategy.value} restores snapshot pages.")
        return

    if (
        meta.language_tag != spec.language_tag
        or meta.memory_pages != spec.memory_pages
        or meta.page_size != spec.page_size
    ):
        raise PlanSpecMismatch(
            f"Snapshot of {meta.language_tag} with {meta.memory_pages} pages of {meta.page_size} bytes "
            f"does not fit {spec.name}."
        )

    if meta.provenance_digest != prefix_digest(spec):
        raise PlanSpecMismatch(f"Snapshot was not generated from the initialization phases of {spec.name}.")

    expected = _expected_phase_index(spec, meta)
    if meta.registers["phase_index"] != expected:
        raise PlanSpecMismatch(
            f"Snapshot stops at phase {meta.registers['phase_index']}, {spec.name} expects phase {expected}."
        )


def boot(
    plan: RestorePlan, spec: WorkloadSpec, params: CostParams
) -> tuple[GuestState, EventLedger, Fraction]:
    """Boot a request-ready instance under the plan.

    The configuration cost overlaps the eager batch. The residual
    initialization connects the VSOCK and runs the phases of the plan, with
    their compute time and page faults.

    Parameters
    ----------
    plan : `RestorePlan`
        Restore plan.
    spec : `WorkloadSpec`
        Workload.
    params : `CostParams`
        Cost parameters.

    Returns
    -------
    state : `GuestState`
        Request-ready guest state.
    ledger : `EventLedger`
        Ledger of the boot.
    boot_latency_us : `fractions.Fraction`
        Boot latency in microseconds.

    Raises
    ------
    PlanSpecMismatch
        If the plan does not fit the workload.
    """

    _check_plan(plan, spec, params)

    memory = LayeredMemory(
        spec.memory_pages,
        spec.page_size,
        policy_map=plan.policy_map,
        shared=plan.shared_image,
        disk=plan.disk_image,
    )
    eager_pages = memory.load_eager(plan.eager_page_ids)

    meta = plan.metadata_source
    if meta is None:
        state = GuestState(memory)
    else:
        state = GuestState(
            memory,
            registers=dict(meta.registers),
            device=DeviceState(
                appfs_mounted=meta.device.appfs_mounted,
                vsock_connected=meta.device.vsock_connected,
                net=meta.device.net,
            ),
        )

    phase_range = spec.phase_range(*plan.phases_to_execute) if plan.phases_to_execute else range(0)
    _, _, compute_us = run_phases(state, spec, phase_range)

    if state.phase_index != spec.execution_range.start:
        raise PlanSpecMismatch(
            f"{plan.strategy.value} boot of {spec.name} stops at phase {state.phase_index}, "
            f"not at phase {spec.execution_range.start}."
        )

    # Residual initialization
    state.device.vsock_connected = True

    boot_demand = len(memory.disk_faults)
    boot_cow = len(memory.cow_faults)
    residual_init_us = (
        params.residual_init_us
        + compute_us
        + boot_demand * params.lat_disk_fault_us
        + boot_cow * params.lat_mem_fault_us
    )

    ledger = EventLedger(
        strategy=plan.strategy,
        eager_pages_disk=eager_pages,
        boot_demand_pages_disk=boot_demand,
        boot_cow_faults=boot_cow,
        residual_init_us=residual_init_us,
    )
    boot_latency_us = max(params.c_for(plan.strategy), params.eager_us(eager_pages)) + residual_init_us

    return state, ledger, boot_latency_us


def invoke(
    state: GuestState,
    spec: WorkloadSpec,
    request_seed: int,
    params: CostParams,
    ledger: EventLedger | None = None,
    tracking: TrackingFlags | None = None,
    jitter: JitterConfig | None = None,
) -> tuple[int, EventLedger, Fraction]:
    """Serve one request.

    Parameters
    ----------
    state : `GuestState`
        Request-ready guest state. It is updated in place.
    spec : `WorkloadSpec`
        Workload.
    request_seed : `int`
        Seed of the request payload.
    params : `CostParams`
        Cost parameters.
    ledger : `EventLedger` or None, optional
        Ledger of the boot. If None, the instance is warm. (the default is
        None)
    tracking : `TrackingFlags` or None, optional
        Access trace of the execution. (the default is None)
    jitter : `JitterConfig` or None, optional
        Extra reads of the execution. (the default is None)

    Returns
    -------
    response_digest : `int`
        Read checksum of the request.
    ledger : `EventLedger`
        Ledger with the execution events.
    exec_latency_us : `fractions.Fraction`
        Execution latency in microseconds.

    Raises
    ------
    NotRequestReady
        If the instance has not completed the initialization.
    """

    execution_range = spec.execution_range
    registers = state.registers
    if (
        (not state.device.vsock_connected)
        or registers["step_index"] != 0
        or registers["phase_index"] not in (execution_range.start, execution_range.stop)
    ):
        raise NotRequestReady(
            f"Instance of {spec.name} is at phase {registers['phase_index']}, step "
            f"{registers['step_index']}, VSOCK connected: {state.device.vsock_connected}."
        )

    registers["phase_index"] = execution_range.start
    registers["read_checksum"] = FNV_OFFSET_BASIS

    memory = state.memory
    disk_faults_before = len(memory.disk_faults)
    cow_faults_before = len(memory.cow_faults)

    _, _, compute_us = run_phases(
        state, spec, execution_range, tracking=tracking, request_seed=request_seed, jitter=jitter
    )

    demand = len(memory.disk_faults) - disk_faults_before
    cow = len(memory.cow_faults) - cow_faults_before

    if ledger is None:
        ledger = EventLedger(is_warm=True)
    ledger = dataclasses.replace(ledger, demand_pages_disk=demand, cow_faults=cow, compute_us=compute_us)

    return registers["read_checksum"], ledger, compute_us + ledger.exec_fault_us(params)


def materialize_memory(state: GuestState) -> np.ndarray:
    """Resolve every page of the guest without charging any fault.

    Parameters
    ----------
    state : `GuestState`
        Guest state.

    Returns
    -------
    `numpy.ndarray`
        Memory of shape (memory_pages, page_size) and type uint8.
    """
    return np.stack([page.data for page in state.memory.resolve_all()])
