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
    "splitmix64",
    "fill_byte",
    "mix_request_seed",
    "fill_page_array",
    "zero_page_array",
    "page_digests",
    "zero_page_digest",
    "fnv1a_64",
    "fnv1a_64_words",
    "fnv1a_64_page",
    "canonical_json",
    "sha256_hex",
    "to_fraction",
    "round_half_up_deci",
    "format_deci",
    "format_us",
    "format_ms",
    "read_yaml_file",
    "write_json_file",
    "get_data_dir",
    "set_log",
    "get_log_file_name",
]

import functools
import hashlib
import json
import logging
import math
import pathlib
import sys
import typing
from datetime import datetime
from fractions import Fraction

import numpy as np
import yaml

from .constants import (
    DEFAULT_LOG_DIR,
    FILL_MUL_OFFSET,
    FILL_MUL_PAGE,
    FILL_MUL_STEP,
    FNV_OFFSET_BASIS,
    FNV_PRIME,
    MASK_64,
    SPLITMIX_GAMMA,
    SPLITMIX_MUL_1,
    SPLITMIX_MUL_2,
)
from .errors import MalformedDocument, MissingArtifact

# Pages filled per numpy batch
_FILL_CHUNK = 256

# Pages digested per numpy batch
_DIGEST_CHUNK = 4096

_U64_GAMMA = np.uint64(SPLITMIX_GAMMA)
_U64_MUL_1 = np.uint64(SPLITMIX_MUL_1)
_U64_MUL_2 = np.uint64(SPLITMIX_MUL_2)
_U64_FILL_PAGE = np.uint64(FILL_MUL_PAGE)
_U64_FNV_PRIME = np.uint64(FNV_PRIME)
_U64_SHIFT_30 = np.uint64(30)
_U64_SHIFT_27 = np.uint64(27)
_U64_SHIFT_31 = np.uint64(31)
_U64_LOW_BYTE = np.uint64(0xFF)

# Folds of page bytes from a one-byte start, by page digest, size and start
_PAGE_FOLDS_LIMIT = 1 << 16
_page_folds: dict[tuple[int, int, int], int] = dict()


def splitmix64(value: int) -> int:
    """Standard splitmix64 finalizer.

    Parameters
    ----------
    value : `int`
        64-bit unsigned input.

    Returns
    -------
    `int`
        64-bit unsigned output.
    """

    z = (value + SPLITMIX_GAMMA) & MASK_64
    z = ((z ^ (z >> 30)) * SPLITMIX_MUL_1) & MASK_64
    z = ((z ^ (z >> 27)) * SPLITMIX_MUL_2) & MASK_64
    return z ^ (z >> 31)


def fill_byte(workload_seed: int, step_seed: int, page_id: int, offset: int) -> int:
    """Byte written by a Write step at the offset of a page.

    Parameters
    ----------
    workload_seed : `int`
        Seed of the workload.
    step_seed : `int`
        Seed of the Write step.
    page_id : `int`
        Page id.
    offset : `int`
        Offset in the page.

    Returns
    -------
    `int`
        Byte value in [0, 255].
    """

    mixed = (
        workload_seed
        ^ ((step_seed * FILL_MUL_STEP) & MASK_64)
        ^ ((page_id * FILL_MUL_PAGE) & MASK_64)
        ^ ((offset * FILL_MUL_OFFSET) & MASK_64)
    )
    return splitmix64(mixed & MASK_64) & 0xFF


def mix_request_seed(step_seed: int, request_seed: int) -> int:
    """Effective seed of a Write step that consumes the request payload.

    Parameters
    ----------
    step_seed : `int`
        Declared seed of the Write step.
    request_seed : `int`
        Seed of the request.

    Returns
    -------
    `int`
        Effective 64-bit step seed.
    """
    return splitmix64((step_seed ^ request_seed) & MASK_64)


@functools.lru_cache(maxsize=8)
def _offset_terms(page_size: int) -> np.ndarray:
    offsets = np.arange(page_size, dtype=np.uint64)
    return offsets * np.uint64(FILL_MUL_OFFSET)


def _splitmix64_array(values: np.ndarray) -> np.ndarray:
    # In-place on a uint64 array. Array arithmetic wraps modulo 2^64.
    values += _U64_GAMMA
    values ^= values >> _U64_SHIFT_30
    values *= _U64_MUL_1
    values ^= values >> _U64_SHIFT_27
    values *= _U64_MUL_2
    values ^= values >> _U64_SHIFT_31
    return values


def fill_page_array(
    workload_seed: int, step_seed: int, start_page: int, page_count: int, page_size: int
) -> np.ndarray:
    """Fill the pages of a Write step.

    The result equals calling `fill_byte` for every page and offset of the
    range.

    Parameters
    ----------
    workload_seed : `int`
        Seed of the workload.
    step_seed : `int`
        Effective seed of the Write step.
    start_page : `int`
        First page id.
    page_count : `int`
        Number of pages.
    page_size : `int`
        Page size in bytes.

    Returns
    -------
    pages : `numpy.ndarray`
        Array of shape (page_count, page_size) and type uint8.
    """

    pages = np.empty((page_count, page_size), dtype=np.uint8)
    offset_terms = _offset_terms(page_size)
    base = np.uint64((workload_seed ^ ((step_seed * FILL_MUL_STEP) & MASK_64)) & MASK_64)

    for begin in range(0, page_count, _FILL_CHUNK):
        end = min(begin + _FILL_CHUNK, page_count)
        page_ids = np.arange(start_page + begin, start_page + end, dtype=np.uint64)
        page_terms = (page_ids * _U64_FILL_PAGE) ^ base

        values = page_terms[:, np.newaxis] ^ offset_terms[np.newaxis, :]
        _splitmix64_array(values)
        pages[begin:end] = (values & _U64_LOW_BYTE).astype(np.uint8)

    return pages


@functools.lru_cache(maxsize=8)
def zero_page_array(page_size: int) -> np.ndarray:
    """Read-only zero page.

    Parameters
    ----------
    page_size : `int`
        Page size in bytes.

    Returns
    -------
    page : `numpy.ndarray`
        Zero page of type uint8.
    """

    page = np.zeros(page_size, dtype=np.uint8)
    page.flags.writeable = False
    return page


def page_digests(pages: np.ndarray) -> np.ndarray:
    """FNV-1a 64 digest of every page.

    The pages are hashed in parallel lanes, one lane per page, so the
    digest of a page equals ``fnv1a_64(page.tobytes())``.

    Parameters
    ----------
    pages : `numpy.ndarray`
        Array of shape (page_count, page_size) and type uint8.

    Returns
    -------
    digests : `numpy.ndarray`
        Digests of type uint64.
    """

    page_count = pages.shape[0]
    digests = np.empty(page_count, dtype=np.uint64)

    for begin in range(0, page_count, _DIGEST_CHUNK):
        end = min(begin + _DIGEST_CHUNK, page_count)
        columns = np.ascontiguousarray(pages[begin:end].T)

        lanes = np.full(end - begin, FNV_OFFSET_BASIS, dtype=np.uint64)
        for column in columns:
            lanes ^= column
            lanes *= _U64_FNV_PRIME

        digests[begin:end] = lanes

    return digests


@functools.lru_cache(maxsize=8)
def zero_page_digest(page_size: int) -> int:
    """FNV-1a 64 digest of a zero page.

    Parameters
    ----------
    page_size : `int`
        Page size in bytes.

    Returns
    -------
    `int`
        Digest.
    """
    return int(page_digests(zero_page_array(page_size)[np.newaxis, :])[0])


def fnv1a_64(data: bytes, digest: int = FNV_OFFSET_BASIS) -> int:
    """FNV-1a 64 over bytes.

    Parameters
    ----------
    data : `bytes`
        Data.
    digest : `int`, optional
        Running digest to continue from. (the default is the FNV offset
        basis)

    Returns
    -------
    digest : `int`
        Digest.
    """

    for byte in data:
        digest = ((digest ^ byte) * FNV_PRIME) & MASK_64

    return digest


def fnv1a_64_words(words: typing.Iterable[int], digest: int = FNV_OFFSET_BASIS) -> int:
    """FNV-1a 64 over 64-bit words, one word per round.

    Parameters
    ----------
    words : `typing.Iterable` [`int`]
        64-bit words.
    digest : `int`, optional
        Running digest to continue from. (the default is the FNV offset
        basis)

    Returns
    -------
    digest : `int`
        Digest.
    """

    for word in words:
        digest = ((digest ^ int(word)) * FNV_PRIME) & MASK_64

    return digest


@functools.lru_cache(maxsize=8)
def _fnv_prime_power(byte_count: int) -> int:
    return pow(FNV_PRIME, byte_count, MASK_64 + 1)


def fnv1a_64_page(page: np.ndarray, page_digest: int, digest: int = FNV_OFFSET_BASIS) -> int:
    """FNV-1a 64 over the bytes of a page, continuing a running digest.

    The result equals ``fnv1a_64(page.tobytes(), digest)``. A byte only
    flips the low byte of the running digest, so the fold from ``digest``
    is the fold from its low byte plus the rest of ``digest`` times the
    prime to the page size. The folds from a low byte are cached by page
    digest.

    Parameters
    ----------
    page : `numpy.ndarray`
        Page bytes, type uint8.
    page_digest : `int`
        FNV-1a 64 digest of the page bytes.
    digest : `int`, optional
        Running digest to continue from. (the default is the FNV offset
        basis)

    Returns
    -------
    `int`
        Digest.
    """

    low = digest & 0xFF
    key = (page_digest, page.shape[0], low)
    fold = _page_folds.get(key)
    if fold is None:
        if len(_page_folds) >= _PAGE_FOLDS_LIMIT:
            _page_folds.clear()
        fold = fnv1a_64(page.tobytes(), low)
        _page_folds[key] = fold

    return ((digest - low) * _fnv_prime_power(page.shape[0]) + fold) & MASK_64


def canonical_json(data: typing.Any) -> bytes:
    """Canonical JSON encoding used for content digests.

    Parameters
    ----------
    data : `typing.Any`
        JSON-serializable data.

    Returns
    -------
    `bytes`
        UTF-8 encoded JSON with sorted keys and no white space.
    """
    return json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")


def sha256_hex(*chunks: bytes) -> str:
    """Hexadecimal SHA-256 of the concatenated chunks.

    Parameters
    ----------
    *chunks : `bytes`
        Data.

    Returns
    -------
    `str`
        Hexadecimal digest.
    """

    hasher = hashlib.sha256()
    for chunk in chunks:
        hasher.update(chunk)

    return hasher.hexdigest()


def to_fraction(value: typing.Any, name: str = "value") -> Fraction:
    """Exact rational of a configuration value.

    Floats are converted through their decimal representation, so 0.1
    becomes 1/10.

    Parameters
    ----------
    value : `int`, `float`, `str` or `fractions.Fraction`
        Value.
    name : `str`, optional
        Name used in the error message. (the default is "value")

    Returns
    -------
    `fractions.Fraction`
        Exact value.

    Raises
    ------
    MalformedDocument
        If the value is not a number.
    """

    if isinstance(value, bool):
        raise MalformedDocument(f"{name} must be a number, not {value!r}.")

    try:
        match value:
            case Fraction() | int():
                return Fraction(value)
            case float():
                return Fraction(repr(value))
            case str():
                return Fraction(value.strip())
    except (ValueError, ZeroDivisionError) as error:
        raise MalformedDocument(f"{name} is not a number: {error!r}.")

    raise MalformedDocument(f"{name} must be a number, not {value!r}.")


def round_half_up_deci(value: Fraction) -> int:
    """Round half up to tenths of the unit.

    Parameters
    ----------
    value : `fractions.Fraction`
        Value.

    Returns
    -------
    `int`
        Value in tenths of the unit.
    """
    return math.floor(value * 10 + Fraction(1, 2))


def format_deci(deci: int) -> str:
    """Format a value in tenths of the unit with one decimal.

    Parameters
    ----------
    deci : `int`
        Value in tenths of the unit.

    Returns
    -------
    `str`
        Formatted value such as "-1.5".
    """

    sign = "-" if deci < 0 else ""
    integer, tenth = divmod(abs(deci), 10)
    return f"{sign}{integer}.{tenth}"


def format_us(value_us: Fraction) -> str:
    """Format microseconds rounded half up to 0.1 us.

    Parameters
    ----------
    value_us : `fractions.Fraction`
        Value in microseconds.

    Returns
    -------
    `str`
        Formatted value.
    """
    return format_deci(round_half_up_deci(value_us))


def format_ms(value_us: Fraction) -> str:
    """Format microseconds as milliseconds rounded half up to 0.1 ms.

    Parameters
    ----------
    value_us : `fractions.Fraction`
        Value in microseconds.

    Returns
    -------
    `str`
        Formatted value.
    """
    return format_deci(round_half_up_deci(value_us / 1000))


def read_yaml_file(filepath: pathlib.Path | str) -> dict:
    """Read a YAML or JSON configuration file.

    Parameters
    ----------
    filepath : `pathlib.Path` or `str`
        File path.

    Returns
    -------
    `dict`
        Content of the file.

    Raises
    ------
    MissingArtifact
        If the file does not exist.
    MalformedDocument
        If the file can not be parsed or is not a mapping.
    """

    filepath = pathlib.Path(filepath)
    if not filepath.is_file():
        raise MissingArtifact(f"File does not exist: {filepath}.")

    try:
        with open(filepath, "r", encoding="utf-8") as file:
            content = yaml.safe_load(file)
    except yaml.YAMLError as error:
        raise MalformedDocument(f"Can not parse {filepath}: {error!r}.")

    if not isinstance(content, dict):
        raise MalformedDocument(f"{filepath} does not contain a mapping.")

    return content


def write_json_file(filepath: pathlib.Path | str, data: typing.Any) -> pathlib.Path:
    """Write the JSON file with a stable layout.

    Parameters
    ----------
    filepath : `pathlib.Path` or `str`
        File path.
    data : `typing.Any`
        JSON-serializable data. The key order is kept.

    Returns
    -------
    filepath : `pathlib.Path`
        File path.
    """

    filepath = pathlib.Path(filepath)
    with open(filepath, "w", encoding="utf-8", newline="\n") as file:
        json.dump(data, file, indent=2)
        file.write("\n")

    return filepath


def get_data_dir() -> pathlib.Path:
    """Get the directory of the shipped data.

    Returns
    -------
    `pathlib.Path`
        Data directory.
    """
    return pathlib.Path(__file__).resolve().parent / "data"


def set_log(
    name: str,
    is_output_log_to_file: bool,
    is_output_log_on_screen: bool,
    level: int,
    message_format: str = "%(asctime)s, %(levelname)s, %(message)s",
    log: logging.Logger | None = None,
) -> logging.Logger:
    """Set the logger.

    Parameters
    ----------
    name : `str`
        Name of the logger.
    is_output_log_to_file : `bool`
        Is outputting the log messages to file or not.
    is_output_log_on_screen : `bool`
        Is outputting the log messages on screen or not.
    level : `int`
        Logging level.
    message_format : `str`, optional
        Format of the message. (the default is
        "%(asctime)s, %(levelname)s, %(message)s")
    log : `logging.Logger` or None, optional
        A logger. If None, a logger will be instantiated. (the default is
        None)

    Returns
    -------
    log : `logging.Logger`
        A logger.
    """

    if log is None:
        log = logging.getLogger(name)
    else:
        log = log.getChild(name)

    if is_output_log_to_file:
        logging.basicConfig(
            filename=get_log_file_name(),
            format=message_format,
        )
    else:
        logging.basicConfig(
            format=message_format,
        )

    if is_output_log_on_screen:
        log.addHandler(logging.StreamHandler(sys.stdout))

    log.setLevel(level)

    return log


def get_log_file_name(default_log_dir: str = DEFAULT_LOG_DIR) -> pathlib.Path:
    """Get the log file name.

    Parameters
    ----------
    default_log_dir : `str`, optional
        Default log directory. (the default is DEFAULT_LOG_DIR)

    Returns
    -------
    `pathlib.Path`
        Log file name.
    """

    log_dir = pathlib.Path(default_log_dir)
    if not log_dir.is_dir():
        print(
            f"Default log directory: {default_log_dir} does not exist. Use the home directory instead.",
            file=sys.stderr,
        )
        log_dir = pathlib.Path.home()

    return log_dir / datetime.now().strftime("log_%d_%m_%Y_%H_%M_%S.txt")
