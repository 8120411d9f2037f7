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

import asyncio
import json
import pathlib
import shutil

import pytest

from lsst.ts.snapfaas import get_data_dir

APPLICATION_NAME = "run_snapfaas"


async def run_application(*arguments: str) -> tuple[int, str]:
    process = await asyncio.create_subprocess_exec(
        APPLICATION_NAME,
        *arguments,
        stdout=asyncio.subprocess.PIPE,
        stderr=asyncio.subprocess.PIPE,
    )

    stdout, _ = await process.communicate()

    assert process.returncode is not None
    return process.returncode, stdout.decode()


@pytest.mark.asyncio
async def test_run_snapfaas() -> None:
    # Make sure this application exists
    exe_path = shutil.which(APPLICATION_NAME)

    assert exe_path is not None

    # If there is the error, the result will be empty
    _, stdout = await run_application("-h")

    assert stdout != ""


@pytest.mark.asyncio
async def test_run_snapfaas_wrong_command() -> None:
    returncode, _ = await run_application("--no-logfile", "unknown")

    assert returncode == 2

    returncode, _ = await run_application("--no-logfile", "invoke")

    assert returncode == 2


@pytest.mark.asyncio
async def test_run_snapfaas_throughput(tmp_path: pathlib.Path) -> None:
    returncode, stdout = await run_application(
        "--no-logfile",
        "throughput",
        str(get_data_dir() / "scenario" / "throughput.json"),
        "-o",
        str(tmp_path),
    )

    assert returncode == 0

    result = json.loads(stdout)
    assert result["crossover"] == "0.1718"
    assert pathlib.Path(result["file"]).is_file()


@pytest.mark.asyncio
async def test_run_snapfaas_missing_manifest(tmp_path: pathlib.Path) -> None:
    returncode, _ = await run_application("--no-logfile", "invoke", str(tmp_path / "absent"))

    assert returncode == 3


@pytest.mark.asyncio
async def test_run_snapfaas_register_and_invoke(tmp_path: pathlib.Path) -> None:
    returncode, stdout = await run_application(
        "--no-logfile",
        "register",
        str(get_data_dir() / "corpus" / "lorem.json"),
        str(tmp_path),
        "--gen-base",
    )

    assert returncode == 0

    manifest = json.loads(stdout)["manifest"]
    responses = list()
    for strategy in ("regular", "snapfaas", "reap"):
        returncode, stdout = await run_application("--no-logfile", "invoke", manifest, "--strategy", strategy)

        assert returncode == 0
        responses.append(json.loads(stdout)["response_digest"])

    assert len(set(responses)) == 1
