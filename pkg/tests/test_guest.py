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

import typing
from fractions import Fraction

import pytest

from lsst.ts.snapfaas import (
    FNV_OFFSET_BASIS,
    STATIC_NETWORK,
    AppFsNotMounted,
    GuestState,
    InvariantViolation,
    JitterConfig,
    TrackingFlags,
    WorkloadSpec,
    filled_pages,
    fnv1a_64,
    parse_workload,
    run_phases,
    state_digest,
)


def test_fresh(small_spec: WorkloadSpec) -> None:
    state = GuestState.fresh(small_spec)

    assert state.phase_index == 0
    assert state.registers["read_checksum"] == FNV_OFFSET_BASIS
    assert state.device.appfs_mounted is False
    assert state.device.net.is_set is False


def test_run_phases(small_spec: WorkloadSpec) -> None:
    state = GuestState.fresh(small_spec)
    tracking = TrackingFlags(dirty_tracking=True, access_tracking=True)

    _, _, compute_us = run_phases(state, small_spec, small_spec.base_range, tracking=tracking)

    assert compute_us == Fraction(350)
    assert state.phase_index == 3
    assert state.registers["step_index"] == 0
    assert tracking.dirty_set == set(range(32))

    # The OS init installs the static network
    assert state.device.net.to_dict() == STATIC_NETWORK

    assert state.memory.resolve(17) == filled_pages(7, 3, 16, 16, 256)[1]

    _, _, compute_us = run_phases(state, small_spec, small_spec.function_init_range)

    assert compute_us == Fraction(300)
    assert state.device.appfs_mounted is True

    # The later write of the overlap wins
    assert state.memory.resolve(31) == filled_pages(7, 12, 30, 2, 256)[1]


def test_run_phases_wrong_start(small_spec: WorkloadSpec) -> None:
    state = GuestState.fresh(small_spec)

    with pytest.raises(InvariantViolation):
        run_phases(state, small_spec, small_spec.execution_range)

    with pytest.raises(InvariantViolation):
        run_phases(state, small_spec, range(0, 9))


def test_run_phases_appfs_not_mounted(small_document: dict[str, typing.Any]) -> None:
    # Write the AppFS pages before the mount
    steps = small_document["phases"][3]["steps"]
    steps[0], steps[1] = steps[1], steps[0]
    spec = parse_workload(small_document)

    state = GuestState.fresh(spec)
    run_phases(state, spec, spec.base_range)

    with pytest.raises(AppFsNotMounted):
        run_phases(state, spec, spec.function_init_range)


def test_run_phases_appfs_before_function_init(small_document: dict[str, typing.Any]) -> None:
    # The runtime reads an AppFS page
    small_document["phases"][2]["steps"].append({"type": "read", "start_page": 33, "page_count": 1})
    spec = parse_workload(small_document)

    state = GuestState.fresh(spec)
    run_phases(state, spec, range(0, 2))

    with pytest.raises(AppFsNotMounted):
        run_phases(state, spec, range(2, 3))


def test_request_seed(small_spec: WorkloadSpec) -> None:
    digests = set()
    for request_seed in (1, 1, 2):
        state = GuestState.fresh(small_spec)
        run_phases(state, small_spec, range(0, 5), request_seed=request_seed)
        digests.add(state_digest(state))

    assert len(digests) == 2


def test_read_checksum(small_spec: WorkloadSpec) -> None:
    state = GuestState.fresh(small_spec)
    run_phases(state, small_spec, range(0, 4))

    assert state.registers["read_checksum"] == FNV_OFFSET_BASIS

    run_phases(state, small_spec, small_spec.execution_range, request_seed=1)

    assert state.registers["read_checksum"] != FNV_OFFSET_BASIS


def test_read_checksum_bytes(small_spec: WorkloadSpec) -> None:
    state = GuestState.fresh(small_spec)
    run_phases(state, small_spec, range(0, 4))

    # The execution reads pages 32 to 35, then 16 to 19
    observed = b"".join(state.memory.resolve(index).data.tobytes() for index in [*range(32, 36), *range(16, 20)])

    run_phases(state, small_spec, small_spec.execution_range, request_seed=1)

    assert state.registers["read_checksum"] == fnv1a_64(observed, FNV_OFFSET_BASIS)


def test_jitter(small_spec: WorkloadSpec) -> None:
    def run(jitter: JitterConfig | None) -> TrackingFlags:
        state = GuestState.fresh(small_spec)
        run_phases(state, small_spec, range(0, 4))

        tracking = TrackingFlags(access_tracking=True)
        run_phases(state, small_spec, small_spec.execution_range, tracking=tracking, jitter=jitter)
        return tracking

    plain = run(None)
    jitter_a = run(JitterConfig(seed=3, reads=16))
    jitter_b = run(JitterConfig(seed=3, reads=16))

    assert jitter_a.accessed_set == jitter_b.accessed_set
    assert plain.accessed_set < jitter_a.accessed_set

    # The extra reads only touch pages
    assert jitter_a.dirty_set == set()


def test_state_digest(small_spec: WorkloadSpec) -> None:
    state_a = GuestState.fresh(small_spec)
    state_b = GuestState.fresh(small_spec)

    assert state_digest(state_a) == state_digest(state_b)

    run_phases(state_a, small_spec, range(0, 1))
    assert state_digest(state_a) != state_digest(state_b)

    run_phases(state_b, small_spec, range(0, 1))
    assert state_digest(state_a) == state_digest(state_b)

    state_b.device.vsock_connected = True
    assert state_digest(state_a) != state_digest(state_b)
