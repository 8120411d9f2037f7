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

import copy
import pathlib
import typing
from fractions import Fraction

import pytest

from lsst.ts.snapfaas import (
    Compute,
    InvariantViolation,
    MalformedDocument,
    MountAppFs,
    Provenance,
    WorkloadSpec,
    parse_workload,
    prefix_digest,
    read_workload,
)


def test_parse_workload(small_spec: WorkloadSpec) -> None:
    assert small_spec.name == "small"
    assert small_spec.memory_pages == 64
    assert small_spec.page_size == 256
    assert len(small_spec.phases) == 5

    assert small_spec.base_range == range(0, 3)
    assert small_spec.function_init_range == range(3, 4)
    assert small_spec.execution_range == range(4, 5)

    assert isinstance(small_spec.phases[3].steps[0], MountAppFs)
    assert small_spec.phases[4].steps[-1] == Compute(Fraction(40))

    assert 32 in small_spec.appfs_pages
    assert 40 not in small_spec.appfs_pages


def test_parse_workload_provenance_spelling(small_document: dict[str, typing.Any]) -> None:
    small_document["phases"][1]["provenance"] = "OsInit"
    small_document["phases"][3]["provenance"] = "function-init"

    spec = parse_workload(small_document)

    assert spec.phases[1].provenance == Provenance.OsInit
    assert spec.phases[3].provenance == Provenance.FunctionInit


def test_to_document(small_document: dict[str, typing.Any], small_spec: WorkloadSpec) -> None:
    assert parse_workload(small_spec.to_document()) == small_spec
    assert small_spec.to_document() == small_document


def test_parse_workload_malformed(small_document: dict[str, typing.Any]) -> None:
    with pytest.raises(MalformedDocument):
        parse_workload([])

    document = copy.deepcopy(small_document)
    del document["language_tag"]
    with pytest.raises(MalformedDocument):
        parse_workload(document)

    document = copy.deepcopy(small_document)
    document["memory_pages"] = "64"
    with pytest.raises(MalformedDocument):
        parse_workload(document)

    document = copy.deepcopy(small_document)
    document["phases"][0]["steps"][0]["type"] = "erase"
    with pytest.raises(MalformedDocument):
        parse_workload(document)

    document = copy.deepcopy(small_document)
    document["phases"][0]["provenance"] = "bootloader"
    with pytest.raises(MalformedDocument):
        parse_workload(document)


def test_parse_workload_invariant(small_document: dict[str, typing.Any]) -> None:
    document = copy.deepcopy(small_document)
    document["page_size"] = 100
    with pytest.raises(InvariantViolation):
        parse_workload(document)

    # Phases out of order
    document = copy.deepcopy(small_document)
    document["phases"][0], document["phases"][1] = document["phases"][1], document["phases"][0]
    with pytest.raises(InvariantViolation):
        parse_workload(document)

    document = copy.deepcopy(small_document)
    document["phases"][0]["steps"][0]["page_count"] = 0
    with pytest.raises(InvariantViolation):
        parse_workload(document)

    document = copy.deepcopy(small_document)
    document["phases"][0]["steps"][0]["start_page"] = 60
    with pytest.raises(InvariantViolation):
        parse_workload(document)

    document = copy.deepcopy(small_document)
    document["phases"][0]["steps"][1]["duration_us"] = -1
    with pytest.raises(InvariantViolation):
        parse_workload(document)

    # AppFS mounted outside the function initialization
    document = copy.deepcopy(small_document)
    document["phases"][2]["steps"].append({"type": "mount_appfs"})
    with pytest.raises(InvariantViolation):
        parse_workload(document)

    document = copy.deepcopy(small_document)
    document["phases"][3]["steps"].append({"type": "mount_appfs"})
    with pytest.raises(InvariantViolation):
        parse_workload(document)


def test_prefix_digest(small_document: dict[str, typing.Any], small_spec: WorkloadSpec) -> None:
    # The function phases do not change the digest
    document = copy.deepcopy(small_document)
    document["name"] = "other"
    document["phases"][4]["steps"][-1]["duration_us"] = 80
    document["phases"][3]["steps"][1]["step_seed"] = 99

    assert prefix_digest(parse_workload(document)) == prefix_digest(small_spec)

    document = copy.deepcopy(small_document)
    document["phases"][2]["steps"][0]["step_seed"] = 99

    assert prefix_digest(parse_workload(document)) != prefix_digest(small_spec)


def test_read_workload_corpus(corpus_dir: pathlib.Path) -> None:
    specs = [read_workload(filepath) for filepath in sorted(corpus_dir.glob("*.json"))]

    assert len(specs) == 10
    assert {spec.language_tag for spec in specs} == {"go", "python3", "nodejs", "java"}

    # Functions of a language share the base
    digests = {spec.language_tag: set() for spec in specs}
    for spec in specs:
        digests[spec.language_tag].add(prefix_digest(spec))

    assert all(len(values) == 1 for values in digests.values())
