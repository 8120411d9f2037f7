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
from fractions import Fraction

import numpy as np
import pytest

from lsst.ts.snapfaas import (
    FNV_OFFSET_BASIS,
    MalformedDocument,
    MissingArtifact,
    canonical_json,
    fill_byte,
    fill_page_array,
    fnv1a_64,
    fnv1a_64_page,
    fnv1a_64_words,
    format_ms,
    format_us,
    get_data_dir,
    mix_request_seed,
    page_digests,
    read_yaml_file,
    round_half_up_deci,
    set_log,
    splitmix64,
    to_fraction,
    write_json_file,
    zero_page_digest,
)


def test_splitmix64() -> None:
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_fill_byte() -> None:
    assert fill_byte(0, 0, 0, 0) == 0xAF

    assert fill_byte(1, 2, 3, 4) == fill_byte(1, 2, 3, 4)
    assert 0 <= fill_byte(1, 2, 3, 4) <= 255


def test_fill_page_array() -> None:
    pages = fill_page_array(7, 11, 5, 3, 16)

    assert pages.shape == (3, 16)
    assert pages.dtype == np.uint8

    for row, page_id in enumerate(range(5, 8)):
        assert pages[row].tolist() == [fill_byte(7, 11, page_id, offset) for offset in range(16)]


def test_mix_request_seed() -> None:
    assert mix_request_seed(3, 1) == splitmix64(2)
    assert mix_request_seed(3, 1) != mix_request_seed(3, 2)


def test_fnv1a_64() -> None:
    assert fnv1a_64(b"") == FNV_OFFSET_BASIS
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C

    # Continue a running digest
    assert fnv1a_64(b"b", fnv1a_64(b"a")) == fnv1a_64(b"ab")


def test_fnv1a_64_words() -> None:
    assert fnv1a_64_words([]) == FNV_OFFSET_BASIS
    assert fnv1a_64_words([1, 2]) == fnv1a_64_words([2], fnv1a_64_words([1]))
    assert fnv1a_64_words([1, 2]) != fnv1a_64_words([2, 1])


def test_fnv1a_64_page() -> None:
    pages = fill_page_array(7, 11, 0, 2, 256)
    digests = page_digests(pages)

    # Same low byte twice, so the second fold comes from the cache
    for digest in (FNV_OFFSET_BASIS, 0, 0xFF, 0x1234_5678_9ABC_DE25, 0xFEDC_BA98_7654_3225):
        for page, page_digest in zip(pages, digests):
            assert fnv1a_64_page(page, int(page_digest), digest) == fnv1a_64(page.tobytes(), digest)

    assert fnv1a_64_page(pages[0], int(digests[0])) == int(digests[0])


def test_page_digests() -> None:
    pages = fill_page_array(7, 11, 0, 4, 64)
    digests = page_digests(pages)

    assert digests.dtype == np.uint64
    assert [int(digest) for digest in digests] == [fnv1a_64(page.tobytes()) for page in pages]

    assert zero_page_digest(64) == fnv1a_64(bytes(64))


def test_canonical_json() -> None:
    assert canonical_json({"b": 1, "a": [1, 2]}) == b'{"a":[1,2],"b":1}'


def test_to_fraction() -> None:
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction(3) == Fraction(3)
    assert to_fraction(" 3/2 ") == Fraction(3, 2)

    with pytest.raises(MalformedDocument):
        to_fraction(True)

    with pytest.raises(MalformedDocument):
        to_fraction("abc")

    with pytest.raises(MalformedDocument):
        to_fraction(None)


def test_round_half_up_deci() -> None:
    assert round_half_up_deci(Fraction(105, 100)) == 11
    assert round_half_up_deci(Fraction(104, 100)) == 10
    assert round_half_up_deci(Fraction(-105, 100)) == -10

    assert format_us(Fraction(13607, 10)) == "1360.7"
    assert format_ms(Fraction(5650)) == "5.7"
    assert format_ms(Fraction(0)) == "0.0"


def test_read_yaml_file(tmp_path: pathlib.Path) -> None:
    content = read_yaml_file(get_data_dir() / "config" / "cost_params.yaml")

    assert content["c_us"] == 6000

    with pytest.raises(MissingArtifact):
        read_yaml_file(tmp_path / "absent.yaml")

    filepath = tmp_path / "list.yaml"
    filepath.write_text("- 1\n- 2\n")
    with pytest.raises(MalformedDocument):
        read_yaml_file(filepath)


def test_write_json_file(tmp_path: pathlib.Path) -> None:
    filepath = write_json_file(tmp_path / "data.json", {"b": 1, "a": 2})

    assert filepath.read_text() == '{\n  "b": 1,\n  "a": 2\n}\n'


def test_set_log() -> None:
    log = set_log("test", False, False, logging.DEBUG)

    assert log.level == logging.DEBUG
