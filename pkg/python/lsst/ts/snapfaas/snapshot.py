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
    "generate_base",
    "generate_diff",
    "compose_full",
    "generate_ws",
    "generate_full_ws",
    "check_base",
    "check_network",
]

import dataclasses
import logging
import typing

from .enums import PagePolicy, Provenance, SnapshotKind
from .errors import BaseMismatch, InvariantViolation
from .guest import DeviceState, GuestState, JitterConfig, TrackingFlags, run_phases
from .memory import LayeredMemory, Page
from .sparse_file import (
    BaseSnapshot,
    DiffSnapshot,
    FullSnapshot,
    SnapshotMetadata,
    SparsePageFile,
    WorkingSetFile,
    snapshot_id,
)
from .workload import MountAppFs, WorkloadSpec, prefix_digest


def _copy_device(device: DeviceState) -> DeviceState:
    return DeviceState(
        appfs_mounted=device.appfs_mounted,
        vsock_connected=device.vsock_connected,
        net=device.net,
    )


def _capture_metadata(
    state: GuestState,
    spec: WorkloadSpec,
    kind: SnapshotKind,
    parent_base_id: str | None = None,
    dirty_page_ids: tuple[int, ...] = (),
) -> SnapshotMetadata:
    return SnapshotMetadata(
        snapshot_kind=kind,
        registers=dict(state.registers),
        device=_copy_device(state.device),
        language_tag=spec.language_tag,
        memory_pages=spec.memory_pages,
        page_size=spec.page_size,
        provenance_digest=prefix_digest(spec),
        parent_base_id=parent_base_id,
        dirty_page_ids=dirty_page_ids,
    )


def _capture_pages(state: GuestState, spec: WorkloadSpec, dirty_set: set[int]) -> SparsePageFile:
    private = state.memory.private
    return SparsePageFile.from_mapping(spec.page_size, {page_id: private[page_id] for page_id in dirty_set})


def generate_base(spec: WorkloadSpec, log: logging.Logger | None = None) -> BaseSnapshot:
    """Boot the workload from the kernel up to the end of the language
    runtime initialization with dirty tracking, and capture the dirty pages
    and the non-memory state.

    Parameters
    ----------
    spec : `WorkloadSpec`
        Workload.
    log : `logging.Logger` or None, optional
        A logger. (the default is None)

    Returns
    -------
    `BaseSnapshot`
        Base snapshot.

    Raises
    ------
    InvariantViolation
        If the workload has no runtime phase or the captured state breaks an
        invariant of the base snapshot.
    """

    if not spec.has_provenance(Provenance.Runtime):
        raise InvariantViolation(f"Workload {spec.name} has no runtime phase to snapshot after.")

    state = GuestState.fresh(spec)
    tracking = TrackingFlags(dirty_tracking=True)
    run_phases(state, spec, spec.base_range, tracking=tracking)

    pages = _capture_pages(state, spec, tracking.dirty_set)
    meta = _capture_metadata(state, spec, SnapshotKind.Base)
    meta.validate(pages)

    snapshot = BaseSnapshot(snapshot_id(spec.language_tag, pages, meta), pages, meta)
    if log is not None:
        log.info(f"Generated the base snapshot {snapshot.id} with {len(pages)} pages.")

    return snapshot


def check_base(spec: WorkloadSpec, base: BaseSnapshot) -> None:
    """Check the base snapshot was generated from the workload's phases.

    Parameters
    ----------
    spec : `WorkloadSpec`
        Workload.
    base : `BaseSnapshot`
        Base snapshot.

    Raises
    ------
    BaseMismatch
        If the language or the initialization phases differ.
    """

    if base.meta.language_tag != spec.language_tag:
        raise BaseMismatch(f"Base {base.id} is for {base.meta.language_tag}, {spec.name} is {spec.language_tag}.")

    if base.meta.provenance_digest != prefix_digest(spec):
        raise BaseMismatch(f"Base {base.id} was not generated from the initialization phases of {spec.name}.")


def check_network(base: BaseSnapshot, diff: DiffSnapshot) -> None:
    """Check the diff snapshot carries the network of its base snapshot.

    The network is installed once by the OS init, so every snapshot layered
    over a base has the same network configuration.

    Parameters
    ----------
    base : `BaseSnapshot`
        Base snapshot.
    diff : `DiffSnapshot`
        Diff snapshot layered over the base snapshot.

    Raises
    ------
    InvariantViolation
        If the network configurations differ.
    """

    if diff.meta.device.net != base.meta.device.net:
        raise InvariantViolation(
            f"Diff {diff.id} has the network {diff.meta.device.net.to_dict()}, "
            f"its base {base.id} has {base.meta.device.net.to_dict()}."
        )


def generate_diff(spec: WorkloadSpec, base: BaseSnapshot, log: logging.Logger | None = None) -> DiffSnapshot:
    """Restore the base snapshot fully resident, run the function
    initialization with dirty tracking, and capture the dirty pages.

    Parameters
    ----------
    spec : `WorkloadSpec`
        Workload.
    base : `BaseSnapshot`
        Base snapshot of the workload's language.
    log : `logging.Logger` or None, optional
        A logger. (the default is None)

    Returns
    -------
    `DiffSnapshot`
        Diff snapshot.

    Raises
    ------
    BaseMismatch
        If the base snapshot does not belong to the workload.
    InvariantViolation
        If the function initialization does not mount the AppFS or changes
        the network.
    """

    check_base(spec, base)

    function_init_range = spec.function_init_range
    if not any(
        isinstance(step, MountAppFs) for index in function_init_range for step in spec.phases[index].steps
    ):
        raise InvariantViolation(f"Function initialization of {spec.name} does not mount the AppFS.")

    memory = LayeredMemory(spec.memory_pages, spec.page_size)
    memory.private.update(base.pages.as_mapping())
    state = GuestState(memory, registers=dict(base.meta.registers), device=_copy_device(base.meta.device))

    tracking = TrackingFlags(dirty_tracking=True)
    run_phases(state, spec, function_init_range, tracking=tracking)

    pages = _capture_pages(state, spec, tracking.dirty_set)
    meta = _capture_metadata(
        state,
        spec,
        SnapshotKind.Diff,
        parent_base_id=base.id,
        dirty_page_ids=pages.page_ids,
    )
    meta.validate(pages)

    snapshot = DiffSnapshot(snapshot_id(spec.name, pages, meta), pages, meta)
    check_network(base, snapshot)
    if log is not None:
        if len(pages) == 0:
            log.warning(f"Function initialization of {spec.name} writes no page. The diff snapshot is empty.")
        log.info(f"Generated the diff snapshot {snapshot.id} with {len(pages)} pages over {base.id}.")

    return snapshot


def compose_full(base: BaseSnapshot, diff: DiffSnapshot) -> FullSnapshot:
    """Full function snapshot: the base pages overridden by the diff pages.

    Parameters
    ----------
    base : `BaseSnapshot`
        Base snapshot.
    diff : `DiffSnapshot`
        Diff snapshot over the base snapshot.

    Returns
    -------
    `FullSnapshot`
        Full snapshot.

    Raises
    ------
    BaseMismatch
        If the diff snapshot does not layer over the base snapshot.
    """

    if diff.meta.parent_base_id != base.id:
        raise BaseMismatch(f"Diff {diff.id} layers over {diff.meta.parent_base_id}, not over {base.id}.")

    pages: dict[int, Page] = dict(base.pages.as_mapping())
    pages.update(diff.pages.as_mapping())

    meta = dataclasses.replace(diff.meta, snapshot_kind=SnapshotKind.Full, dirty_page_ids=())
    return FullSnapshot(f"{diff.id}.full", SparsePageFile.from_mapping(base.pages.page_size, pages), meta)


def _record_working_set(
    spec: WorkloadSpec,
    meta: SnapshotMetadata,
    shared: typing.Mapping[int, Page],
    disk: typing.Mapping[int, Page],
    request_seed: int,
    jitter: JitterConfig | None,
) -> list[int]:
    # Everything on demand: shared pages copy-on-write, disk pages faulted
    policy_map = dict.fromkeys(shared, PagePolicy.SharedCow)
    policy_map.update(dict.fromkeys(disk, PagePolicy.DemandDisk))

    state = GuestState(
        LayeredMemory(spec.memory_pages, spec.page_size, policy_map=policy_map, shared=shared, disk=disk),
        registers=dict(meta.registers),
        device=_copy_device(meta.device),
    )
    state.device.vsock_connected = True

    tracking = TrackingFlags(access_tracking=True)
    run_phases(state, spec, spec.execution_range, tracking=tracking, request_seed=request_seed, jitter=jitter)

    return sorted(tracking.accessed_set.intersection(disk))


def generate_ws(
    spec: WorkloadSpec,
    base: BaseSnapshot,
    diff: DiffSnapshot,
    request_seed: int,
    jitter: JitterConfig | None = None,
    log: logging.Logger | None = None,
) -> WorkingSetFile:
    """Record the diff pages accessed by one execution.

    Parameters
    ----------
    spec : `WorkloadSpec`
        Workload.
    base : `BaseSnapshot`
        Base snapshot.
    diff : `DiffSnapshot`
        Diff snapshot over the base snapshot.
    request_seed : `int`
        Request seed of the recorded execution.
    jitter : `JitterConfig` or None, optional
        Extra reads of the recorded execution. (the default is None)
    log : `logging.Logger` or None, optional
        A logger. (the default is None)

    Returns
    -------
    `WorkingSetFile`
        Working set of the diff snapshot.

    Raises
    ------
    BaseMismatch
        If the snapshots do not belong to the workload.
    """

    check_base(spec, base)
    if diff.meta.parent_base_id != base.id:
        raise BaseMismatch(f"Diff {diff.id} layers over {diff.meta.parent_base_id}, not over {base.id}.")

    page_ids = _record_working_set(
        spec, diff.meta, base.pages.as_mapping(), diff.pages.as_mapping(), request_seed, jitter
    )
    if not set(page_ids).issubset(diff.meta.dirty_page_ids):
        raise InvariantViolation(f"Working set of {diff.id} is not within its dirty pages.")

    if log is not None:
        if len(page_ids) == 0:
            log.warning(f"Execution of {spec.name} touches no diff page. The working set is empty.")
        log.info(f"Recorded {len(page_ids)} working set pages of {diff.id}.")

    return WorkingSetFile(diff.id, tuple(page_ids), request_seed)


def generate_full_ws(
    spec: WorkloadSpec,
    full: FullSnapshot,
    request_seed: int,
    jitter: JitterConfig | None = None,
) -> WorkingSetFile:
    """Record the full snapshot pages accessed by one execution.

    Parameters
    ----------
    spec : `WorkloadSpec`
        Workload.
    full : `FullSnapshot`
        Full snapshot.
    request_seed : `int`
        Request seed of the recorded execution.
    jitter : `JitterConfig` or None, optional
        Extra reads of the recorded execution. (the default is None)

    Returns
    -------
    `WorkingSetFile`
        Working set of the full snapshot.
    """

    if full.meta.provenance_digest != prefix_digest(spec):
        raise BaseMismatch(f"Snapshot {full.id} was not generated from the phases of {spec.name}.")

    page_ids = _record_working_set(spec, full.meta, dict(), full.pages.as_mapping(), request_seed, jitter)
    return WorkingSetFile(full.id, tuple(page_ids), request_seed)
