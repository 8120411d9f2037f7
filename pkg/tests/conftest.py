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
import logging
import pathlib
import typing

import pytest

from lsst.ts.snapfaas import (
    CostParams,
    FunctionArtifacts,
    Harness,
    WorkloadSpec,
    get_data_dir,
    parse_workload,
)

SMALL_PAGE_SIZE = 256

CORPUS = (
    "lorem",
    "sentiment-analysis",
    "audio-fingerprint",
    "thumbnail",
    "matmul",
    "tpcc",
    "ocr",
    "img-resize",
    "alexa-door",
    "alexa-reminder",
)

SMALL_DOCUMENT = {
    "name": "small",
    "language_tag": "tiny",
    "workload_seed": 7,
    "memory_pages": 64,
    "page_size": SMALL_PAGE_SIZE,
    "appfs_pages": {"start_page": 32, "page_count": 8},
    "phases": [
        {
            "name": "kernel",
            "provenance": "kernel",
            "steps": [
                {"type": "write", "start_page": 0, "page_count": 8, "step_seed": 1},
                {"type": "compute", "duration_us": 100},
            ],
        },
        {
            "name": "os_init",
            "provenance": "os_init",
            "steps": [
                {"type": "write", "start_page": 8, "page_count": 8, "step_seed": 2},
                {"type": "compute", "duration_us": 50},
            ],
        },
        {
            "name": "runtime",
            "provenance": "runtime",
            "steps": [
                {"type": "write", "start_page": 16, "page_count": 16, "step_seed": 3},
                {"type": "compute", "duration_us": 200},
            ],
        },
        {
            "name": "function_init",
            "provenance": "function_init",
            "steps": [
                {"type": "mount_appfs"},
                {"type": "write", "start_page": 32, "page_count": 8, "step_seed": 11},
                {"type": "write", "start_page": 30, "page_count": 2, "step_seed": 12},
                {"type": "compute", "duration_us": 300},
            ],
        },
        {
            "name": "execution",
            "provenance": "execution",
            "steps": [
                {"type": "read", "start_page": 32, "page_count": 4},
                {"type": "read", "start_page": 16, "page_count": 4},
                {"type": "write", "start_page": 20, "page_count": 2, "step_seed": 13},
                {"type": "write", "start_page": 40, "page_count": 2, "step_seed": 14},
                {"type": "compute", "duration_us": 40},
            ],
        },
    ],
}


@pytest.fixture
def small_document() -> dict[str, typing.Any]:
    return copy.deepcopy(SMALL_DOCUMENT)


@pytest.fixture
def small_spec(small_document: dict[str, typing.Any]) -> WorkloadSpec:
    return parse_workload(small_document)


@pytest.fixture
def small_params() -> CostParams:
    return CostParams(page_size_bytes=SMALL_PAGE_SIZE)


@pytest.fixture(scope="session")
def corpus_dir() -> pathlib.Path:
    return get_data_dir() / "corpus"


@pytest.fixture(scope="session")
def registered_corpus(
    tmp_path_factory: pytest.TempPathFactory, corpus_dir: pathlib.Path
) -> dict[str, FunctionArtifacts]:
    output_dir = tmp_path_factory.mktemp("registered")
    harness = Harness(logging.getLogger())

    return {
        function: harness.register_function(corpus_dir / f"{function}.json", output_dir, gen_base=True)
        for function in CORPUS
    }
