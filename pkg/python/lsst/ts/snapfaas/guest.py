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
    "NetworkConfig",
    "DeviceState",
    "GuestState",
    "TrackingFlags",
    "JitterConfig",
    "initial_registers",
    "run_phases",
    "state_digest",
]

import typing
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .constants import FNV_OFFSET_BASIS, REGISTER_NAMES, STATIC_NETWORK
from .enums import Provenance
from .errors import AppFsNotMounted, InvariantViolation
from .memory import LayeredMemory, filled_pages
from .utils import fnv1a_64, fnv1a_64_page, fnv1a_64_words, mix_request_seed
from .workload import Compute, MountAppFs, Read, WorkloadSpec, Write


@dataclass(frozen=True)
class NetworkConfig:
    """Network configuration of the guest. Empty until the OS init."""

    local_ip: str = ""
    gateway_ip: str = ""
    guest_mac: str = ""
    bridge_mac: str = ""

    @property
    def is_set(self) -> bool:
        return self.local_ip != ""

    def to_dict(self) -> dict[str, str]:
        return {
            "local_ip": self.local_ip,
            "gateway_ip": self.gateway_ip,
            "guest_mac": self.guest_mac,
            "bridge_mac": self.bridge_mac,
        }


@dataclass
class DeviceState:
    """Virtual device state of the guest."""

    appfs_mounted: bool = False
    vsock_connected: bool = False
    net: NetworkConfig = field(default_factory=NetworkConfig)

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            "appfs_mounted": self.appfs_mounted,
            "vsock_connected": self.vsock_connected,
            "net": self.net.to_dict(),
        }


@dataclass
class TrackingFlags:
    """Dirty and access tracking of the guest memory."""

    dirty_tracking: bool = False
    access_tracking: bool = False
    dirty_set: set[int] = field(default_factory=set)
    accessed_set: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class JitterConfig:
    """Extra reads added to every execution phase.

    Parameters
    ----------
    seed : `int`
        Seed of the generator of the extra reads.
    reads : `int`
        Number of distinct pages read per execution phase.
    """

    seed: int
    reads: int


def initial_registers() -> dict[str, int]:
    """Register file of a guest that has not run any phase.

    Returns
    -------
    `dict` [`str`, `int`]
        Registers in declared order.
    """
    return {"phase_index": 0, "step_index": 0, "read_checksum": FNV_OFFSET_BASIS}


@dataclass
class GuestState:
    """Execution state of a guest.

    Parameters
    ----------
    memory : `LayeredMemory`
        Guest memory.
    registers : `dict` [`str`, `int`]
        Register file.
    device : `DeviceState`
        Virtual device state.
    """

    memory: LayeredMemory
    registers: dict[str, int] = field(default_factory=initial_registers)
    device: DeviceState = field(default_factory=DeviceState)

    @classmethod
    def fresh(cls, spec: WorkloadSpec) -> "GuestState":
        """Guest with zero-filled memory that has not run any phase.

        Parameters
        ----------
        spec : `WorkloadSpec`
            Workload.

        Returns
        -------
        `GuestState`
            Guest state.
        """
        return cls(LayeredMemory(spec.memory_pages, spec.page_size))

    @property
    def phase_index(self) -> int:
        return self.registers["phase_index"]


def _touches_appfs(spec: WorkloadSpec, step: Write | Read) -> bool:
    return (spec.appfs_pages is not None) and spec.appfs_pages.intersects(step.start_page, step.page_count)


def _track(tracking: TrackingFlags | None, pages: range | typing.Iterable[int], is_write: bool) -> None:
    if tracking is None:
        return

    if is_write and tracking.dirty_tracking:
        tracking.dirty_set.update(pages)
    if tracking.access_tracking:
        tracking.accessed_set.update(pages)


def _run_jitter(
    state: GuestState,
    spec: WorkloadSpec,
    phase_index: int,
    jitter: JitterConfig,
    tracking: TrackingFlags | None,
) -> None:
    count = min(jitter.reads, spec.memory_pages)
    if count <= 0:
        return

    generator = np.random.default_rng([jitter.seed, phase_index])
    page_ids = [int(page_id) for page_id in generator.choice(spec.memory_pages, count, replace=False)]

    if spec.appfs_pages is not None and (not state.device.appfs_mounted):
        page_ids = [page_id for page_id in page_ids if page_id not in spec.appfs_pages]

    state.memory.touch(page_ids)
    _track(tracking, page_ids, is_write=False)


def run_phases(
    state: GuestState,
    spec: WorkloadSpec,
    phase_range: range,
    tracking: TrackingFlags | None = None,
    request_seed: int = 0,
    jitter: JitterConfig | None = None,
) -> tuple[GuestState, TrackingFlags | None, Fraction]:
    """Run the phases of the workload on the guest.

    Parameters
    ----------
    state : `GuestState`
        Guest state. It is updated in place.
    spec : `WorkloadSpec`
        Workload.
    phase_range : `range`
        Contiguous phase indices to run.
    tracking : `TrackingFlags` or None, optional
        Tracking to update. (the default is None)
    request_seed : `int`, optional
        Seed of the request payload, used by the execution phases. (the
        default is 0)
    jitter : `JitterConfig` or None, optional
        Extra reads of the execution phases. (the default is None)

    Returns
    -------
    state : `GuestState`
        Guest state.
    tracking : `TrackingFlags` or None
        Tracking.
    compute_us : `fractions.Fraction`
        Declared compute time of the steps in microseconds.

    Raises
    ------
    InvariantViolation
        If the phase range does not start at the current phase.
    PageOutOfRange
        If a step touches a page that is not addressable.
    AppFsNotMounted
        If a step of any phase touches an AppFS page before the AppFS is
        mounted. The phases before the mount never see AppFS content.
    """

    if len(phase_range) == 0:
        return state, tracking, Fraction(0)

    if phase_range.step != 1 or phase_range.start < 0 or phase_range.stop > len(spec.phases):
        raise InvariantViolation(f"Phase range {phase_range} is not within the phases of {spec.name}.")

    if state.registers["phase_index"] != phase_range.start:
        raise InvariantViolation(
            f"Guest of {spec.name} is at phase {state.registers['phase_index']}, "
            f"not at phase {phase_range.start}."
        )

    compute_us = Fraction(0)
    registers = state.registers
    memory = state.memory

    for phase_index in phase_range:
        phase = spec.phases[phase_index]
        is_execution = phase.provenance == Provenance.Execution

        if is_execution and (jitter is not None):
            _run_jitter(state, spec, phase_index, jitter, tracking)

        for step_index, step in enumerate(phase.steps):
            match step:
                case Write():
                    if _touches_appfs(spec, step) and (not state.device.appfs_mounted):
                        raise AppFsNotMounted(
                            f"Phase {phase_index} ({phase.name}), step {step_index} writes AppFS pages "
                            "before the AppFS is mounted."
                        )
                    step_seed = mix_request_seed(step.step_seed, request_seed) if is_execution else step.step_seed
                    memory.write_range(
                        step.start_page,
                        filled_pages(spec.workload_seed, step_seed, step.start_page, step.page_count, spec.page_size),
                    )
                    _track(tracking, step.pages, is_write=True)

                case Read():
                    if _touches_appfs(spec, step) and (not state.device.appfs_mounted):
                        raise AppFsNotMounted(
                            f"Phase {phase_index} ({phase.name}), step {step_index} reads AppFS pages "
                            "before the AppFS is mounted."
                        )
                    pages = memory.read_range(step.start_page, step.page_count)
                    checksum = registers["read_checksum"]
                    for page in pages:
                        checksum = fnv1a_64_page(page.data, page.digest, checksum)
                    registers["read_checksum"] = checksum
                    _track(tracking, step.pages, is_write=False)

                case Compute():
                    compute_us += step.duration_us

                case MountAppFs():
                    state.device.appfs_mounted = True

            registers["step_index"] = step_index + 1

        # Static network of the OS init, installed once
        if phase.provenance == Provenance.OsInit and (not state.device.net.is_set):
            state.device.net = NetworkConfig(**STATIC_NETWORK)

        registers["phase_index"] = phase_index + 1
        registers["step_index"] = 0

    return state, tracking, compute_us


def state_digest(state: GuestState) -> int:
    """FNV-1a 64 digest of the logical guest state.

    Folds the digests of all pages in index order, then the registers in
    declared order, then the device fields.

    Parameters
    ----------
    state : `GuestState`
        Guest state.

    Returns
    -------
    `int`
        64-bit digest.
    """

    digest = fnv1a_64_words(page.digest for page in state.memory.resolve_all())
    digest = fnv1a_64_words((state.registers[name] for name in REGISTER_NAMES), digest)

    device = state.device
    digest = fnv1a_64_words((int(device.appfs_mounted), int(device.vsock_connected)), digest)
    for value in device.net.to_dict().values():
        digest = fnv1a_64(value.encode("utf-8") + b"\x00", digest)

    return digest
