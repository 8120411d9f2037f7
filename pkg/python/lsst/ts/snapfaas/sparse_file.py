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
    "SparsePageFile",
    "SnapshotMetadata",
    "BaseSnapshot",
    "DiffSnapshot",
    "FullSnapshot",
    "Snapshot",
    "WorkingSetFile",
    "snapshot_id",
    "write_snapshot",
    "read_snapshot",
    "write_working_set",
    "read_working_set",
]

import json
import pathlib
import struct
import typing
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    FORMAT_VERSION,
    METADATA_FILE_NAME,
    PAGES_FILE_NAME,
    REGISTER_NAMES,
    SPARSE_FILE_MAGIC,
    SPARSE_FILE_MAGIC_PREFIX,
)
from .enums import SnapshotKind
from .errors import CorruptFile, InvariantViolation, MissingArtifact, VersionMismatch
from .guest import DeviceState, NetworkConfig
from .memory import Page, make_pages
from .utils import canonical_json, sha256_hex, write_json_file

# Magic, page size, entry count
_HEADER = struct.Struct("<8sIQ")


def _record_dtype(page_size: int) -> np.dtype:
    return np.dtype([("id", "<u8"), ("data", "u1", (page_size,))])


@dataclass(frozen=True, eq=False)
class SparsePageFile:
    """Sparse image of the dirty pages.

    Parameters
    ----------
    page_size : `int`
        Page size in bytes.
    page_ids : `tuple` [`int`]
        Strictly increasing page ids.
    pages : `tuple` [`Page`]
        Page of each id.

    Raises
    ------
    InvariantViolation
        If the ids are not strictly increasing or a page has a wrong size.
    """

    page_size: int
    page_ids: tuple[int, ...] = ()
    pages: tuple[Page, ...] = ()
    _mapping: dict[int, Page] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.page_ids) != len(self.pages):
            raise InvariantViolation(f"{len(self.page_ids)} page ids for {len(self.pages)} pages.")

        for previous, current in zip(self.page_ids, self.page_ids[1:]):
            if current <= previous:
                raise InvariantViolation(f"Page id {current} follows page id {previous}.")

        for page_id, page in zip(self.page_ids, self.pages):
            if page.data.shape != (self.page_size,):
                raise InvariantViolation(f"Page {page_id} is not {self.page_size} bytes.")

        object.__setattr__(self, "_mapping", dict(zip(self.page_ids, self.pages)))

    @classmethod
    def from_mapping(cls, page_size: int, pages: typing.Mapping[int, Page]) -> "SparsePageFile":
        """Sparse file of the pages sorted by id.

        Parameters
        ----------
        page_size : `int`
            Page size in bytes.
        pages : `typing.Mapping` [`int`, `Page`]
            Pages.

        Returns
        -------
        `SparsePageFile`
            Sparse file.
        """

        page_ids = tuple(sorted(pages))
        return cls(page_size, page_ids, tuple(pages[page_id] for page_id in page_ids))

    def __len__(self) -> int:
        return len(self.page_ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparsePageFile):
            return NotImplemented
        return (
            (self.page_size == other.page_size)
            and (self.page_ids == other.page_ids)
            and (self.pages == other.pages)
        )

    @property
    def entries(self) -> list[tuple[int, Page]]:
        return list(zip(self.page_ids, self.pages))

    @property
    def nbytes(self) -> int:
        return len(self.page_ids) * self.page_size

    def as_mapping(self) -> typing.Mapping[int, Page]:
        """Pages by id. Do not mutate."""
        return self._mapping

    def to_bytes(self) -> bytes:
        """Encode the sparse file.

        Returns
        -------
        `bytes`
            Header followed by the (page id, payload) records.
        """

        records = np.zeros(len(self.page_ids), dtype=_record_dtype(self.page_size))
        if len(self.page_ids) > 0:
            records["id"] = np.asarray(self.page_ids, dtype=np.uint64)
            records["data"] = np.stack([page.data for page in self.pages])

        return _HEADER.pack(SPARSE_FILE_MAGIC, self.page_size, len(self.page_ids)) + records.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, source: str = "sparse page file") -> "SparsePageFile":
        """Decode the sparse file.

        Parameters
        ----------
        data : `bytes`
            Encoded sparse file.
        source : `str`, optional
            Name of the source used in the error messages. (the default is
            "sparse page file")

        Returns
        -------
        `SparsePageFile`
            Sparse file.

        Raises
        ------
        VersionMismatch
            If the format version is not supported.
        CorruptFile
            If the magic, length or ordering is wrong.
        """

        if len(data) < _HEADER.size:
            raise CorruptFile(f"{source} is truncated: {len(data)} bytes.")

        magic, page_size, entry_count = _HEADER.unpack_from(data)
        if magic != SPARSE_FILE_MAGIC:
            if magic.startswith(SPARSE_FILE_MAGIC_PREFIX):
                raise VersionMismatch(f"{source} has the unsupported format {magic!r}.")
            raise CorruptFile(f"{source} has the wrong magic {magic!r}.")

        if page_size == 0 or (page_size & (page_size - 1)) != 0:
            raise CorruptFile(f"{source} has the invalid page size {page_size}.")

        dtype = _record_dtype(page_size)
        expected = _HEADER.size + entry_count * dtype.itemsize
        if len(data) != expected:
            raise CorruptFile(f"{source} has {len(data)} bytes, expected {expected}.")

        records = np.frombuffer(data, dtype=dtype, count=entry_count, offset=_HEADER.size)
        page_ids = records["id"]
        if entry_count > 1 and (not bool(np.all(page_ids[1:] > page_ids[:-1]))):
            raise CorruptFile(f"{source} has page ids that are not strictly increasing.")

        return cls(
            page_size,
            tuple(int(page_id) for page_id in page_ids),
            make_pages(np.ascontiguousarray(records["data"])) if entry_count > 0 else (),
        )


@dataclass(frozen=True)
class SnapshotMetadata:
    """Non-memory state of a snapshot.

    Parameters
    ----------
    snapshot_kind : enum `SnapshotKind`
        Kind of the snapshot.
    registers : `dict` [`str`, `int`]
        Register file at the snapshot point.
    device : `DeviceState`
        Device state at the snapshot point.
    language_tag : `str`
        Language of the captured workload.
    memory_pages : `int`
        Number of addressable pages.
    page_size : `int`
        Page size in bytes.
    provenance_digest : `str`
        Digest of the phases the base snapshot was generated from.
    parent_base_id : `str` or None, optional
        Base snapshot the snapshot layers over. (the default is None)
    dirty_page_ids : `tuple` [`int`], optional
        Pages dirtied since the base snapshot point. (the default is ())
    format_version : `int`, optional
        Version of the layout. (the default is FORMAT_VERSION)
    """

    snapshot_kind: SnapshotKind
    registers: dict[str, int]
    device: DeviceState
    language_tag: str
    memory_pages: int
    page_size: int
    provenance_digest: str
    parent_base_id: str | None = None
    dirty_page_ids: tuple[int, ...] = ()
    format_version: int = FORMAT_VERSION

    def to_document(self) -> dict:
        return {
            "format_version": self.format_version,
            "snapshot_kind": self.snapshot_kind.value,
            "language_tag": self.language_tag,
            "memory_pages": self.memory_pages,
            "page_size": self.page_size,
            "provenance_digest": self.provenance_digest,
            "parent_base_id": self.parent_base_id,
            "registers": {name: self.registers[name] for name in REGISTER_NAMES},
            "device": self.device.to_dict(),
            "dirty_page_ids": list(self.dirty_page_ids),
        }

    @classmethod
    def from_document(cls, document: typing.Any, source: str = "metadata") -> "SnapshotMetadata":
        """Decode the metadata document.

        Parameters
        ----------
        document : `dict`
            Metadata document.
        source : `str`, optional
            Name of the source used in the error messages. (the default is
            "metadata")

        Returns
        -------
        `SnapshotMetadata`
            Metadata.

        Raises
        ------
        VersionMismatch
            If the format version is not supported.
        CorruptFile
            If a field is missing or wrong.
        """

        if not isinstance(document, dict):
            raise CorruptFile(f"{source} is not a mapping.")

        if document.get("format_version") != FORMAT_VERSION:
            raise VersionMismatch(f"{source} has the unsupported format {document.get('format_version')!r}.")

        try:
            registers = document["registers"]
            if set(registers) != set(REGISTER_NAMES):
                raise CorruptFile(f"{source} declares the registers {sorted(registers)}.")

            device = document["device"]
            return cls(
                snapshot_kind=SnapshotKind(document["snapshot_kind"]),
                registers={name: int(registers[name]) for name in REGISTER_NAMES},
                device=DeviceState(
                    appfs_mounted=bool(device["appfs_mounted"]),
                    vsock_connected=bool(device["vsock_connected"]),
                    net=NetworkConfig(**device["net"]),
                ),
                language_tag=str(document["language_tag"]),
                memory_pages=int(document["memory_pages"]),
                page_size=int(document["page_size"]),
                provenance_digest=str(document["provenance_digest"]),
                parent_base_id=document["parent_base_id"],
                dirty_page_ids=tuple(int(page_id) for page_id in document["dirty_page_ids"]),
            )
        except (KeyError, TypeError, ValueError) as error:
            raise CorruptFile(f"{source} is malformed: {error!r}.")

    def validate(self, pages: SparsePageFile) -> None:
        """Check the metadata against its kind and its pages.

        Parameters
        ----------
        pages : `SparsePageFile`
            Pages of the snapshot.

        Raises
        ------
        InvariantViolation
            If an invariant of the snapshot kind does not hold.
        """

        kind = self.snapshot_kind.value
        if self.device.vsock_connected:
            raise InvariantViolation(f"The {kind} snapshot captures a connected VSOCK.")

        if pages.page_size != self.page_size:
            raise InvariantViolation(f"The {kind} snapshot pages are not {self.page_size} bytes.")

        if pages.page_ids and pages.page_ids[-1] >= self.memory_pages:
            raise InvariantViolation(f"The {kind} snapshot holds page {pages.page_ids[-1]} out of memory.")

        match self.snapshot_kind:
            case SnapshotKind.Base:
                if self.device.appfs_mounted:
                    raise InvariantViolation("The base snapshot has the AppFS mounted.")
                if self.parent_base_id is not None:
                    raise InvariantViolation("The base snapshot has a parent base.")
            case SnapshotKind.Diff | SnapshotKind.Full:
                if not self.device.appfs_mounted:
                    raise InvariantViolation(f"The {kind} snapshot does not have the AppFS mounted.")
                if self.parent_base_id is None:
                    raise InvariantViolation(f"The {kind} snapshot has no parent base.")

        if self.snapshot_kind == SnapshotKind.Diff and self.dirty_page_ids != pages.page_ids:
            raise InvariantViolation("The dirty page ids of the diff snapshot differ from its pages.")


@dataclass(frozen=True)
class BaseSnapshot:
    """Pages and state after the language runtime initialization, resident
    in memory and shared copy-on-write."""

    id: str
    pages: SparsePageFile
    meta: SnapshotMetadata

    resident_tier: typing.ClassVar[str] = "memory"


@dataclass(frozen=True)
class DiffSnapshot:
    """Pages dirtied by the function initialization, on disk."""

    id: str
    pages: SparsePageFile
    meta: SnapshotMetadata

    resident_tier: typing.ClassVar[str] = "disk"


@dataclass(frozen=True)
class FullSnapshot:
    """Complete function snapshot on disk."""

    id: str
    pages: SparsePageFile
    meta: SnapshotMetadata

    resident_tier: typing.ClassVar[str] = "disk"


Snapshot = BaseSnapshot | DiffSnapshot | FullSnapshot

_SNAPSHOT_CLASSES: dict[SnapshotKind, type[BaseSnapshot] | type[DiffSnapshot] | type[FullSnapshot]] = {
    SnapshotKind.Base: BaseSnapshot,
    SnapshotKind.Diff: DiffSnapshot,
    SnapshotKind.Full: FullSnapshot,
}


def snapshot_id(prefix: str, pages: SparsePageFile, meta: SnapshotMetadata) -> str:
    """Content-addressed snapshot id.

    Parameters
    ----------
    prefix : `str`
        Readable prefix, such as the language tag.
    pages : `SparsePageFile`
        Pages of the snapshot.
    meta : `SnapshotMetadata`
        Metadata of the snapshot.

    Returns
    -------
    `str`
        Snapshot id.
    """
    return f"{prefix}-{sha256_hex(canonical_json(meta.to_document()), pages.to_bytes())[:16]}"


def write_snapshot(snapshot: Snapshot, directory: pathlib.Path | str) -> pathlib.Path:
    """Write the snapshot as a sparse page file and a metadata file.

    Parameters
    ----------
    snapshot : `BaseSnapshot`, `DiffSnapshot` or `FullSnapshot`
        Snapshot.
    directory : `pathlib.Path` or `str`
        Directory. It is created if needed.

    Returns
    -------
    directory : `pathlib.Path`
        Directory.
    """

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    (directory / PAGES_FILE_NAME).write_bytes(snapshot.pages.to_bytes())
    write_json_file(directory / METADATA_FILE_NAME, {"id": snapshot.id, **snapshot.meta.to_document()})

    return directory


def read_snapshot(directory: pathlib.Path | str) -> Snapshot:
    """Read the snapshot written by `write_snapshot`.

    Parameters
    ----------
    directory : `pathlib.Path` or `str`
        Directory.

    Returns
    -------
    `BaseSnapshot`, `DiffSnapshot` or `FullSnapshot`
        Snapshot.

    Raises
    ------
    MissingArtifact
        If a file is absent.
    CorruptFile
        If a file is corrupted or the id does not match the content.
    VersionMismatch
        If the format version is not supported.
    """

    directory = pathlib.Path(directory)
    filepath_pages = directory / PAGES_FILE_NAME
    filepath_meta = directory / METADATA_FILE_NAME
    for filepath in (filepath_pages, filepath_meta):
        if not filepath.is_file():
            raise MissingArtifact(f"Snapshot file does not exist: {filepath}.")

    try:
        document = json.loads(filepath_meta.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as error:
        raise CorruptFile(f"Can not decode {filepath_meta}: {error!r}.")

    meta = SnapshotMetadata.from_document(document, source=str(filepath_meta))
    pages = SparsePageFile.from_bytes(filepath_pages.read_bytes(), source=str(filepath_pages))

    try:
        meta.validate(pages)
    except InvariantViolation as error:
        raise CorruptFile(f"{directory}: {error}")

    identifier = document.get("id")
    if not isinstance(identifier, str) or "-" not in identifier:
        raise CorruptFile(f"{filepath_meta} has no snapshot id.")

    if meta.snapshot_kind != SnapshotKind.Full:
        prefix = identifier.rsplit("-", 1)[0]
        if snapshot_id(prefix, pages, meta) != identifier:
            raise CorruptFile(f"Content of {directory} does not match the snapshot id {identifier}.")

    return _SNAPSHOT_CLASSES[meta.snapshot_kind](identifier, pages, meta)


@dataclass(frozen=True)
class WorkingSetFile:
    """Snapshot pages accessed by one recorded execution.

    Parameters
    ----------
    diff_id : `str`
        Snapshot the working set belongs to.
    ws_page_ids : `tuple` [`int`]
        Accessed pages in increasing order.
    generation_request_seed : `int`
        Request seed of the recorded execution.
    """

    diff_id: str
    ws_page_ids: tuple[int, ...]
    generation_request_seed: int

    def to_document(self) -> dict:
        return {
            "diff_id": self.diff_id,
            "generation_request_seed": self.generation_request_seed,
            "ws_page_ids": list(self.ws_page_ids),
        }


def write_working_set(working_set: WorkingSetFile, filepath: pathlib.Path | str) -> pathlib.Path:
    """Write the working set file.

    Parameters
    ----------
    working_set : `WorkingSetFile`
        Working set.
    filepath : `pathlib.Path` or `str`
        File path.

    Returns
    -------
    `pathlib.Path`
        File path.
    """
    return write_json_file(filepath, working_set.to_document())


def read_working_set(filepath: pathlib.Path | str) -> WorkingSetFile:
    """Read the working set file.

    Parameters
    ----------
    filepath : `pathlib.Path` or `str`
        File path.

    Returns
    -------
    `WorkingSetFile`
        Working set.

    Raises
    ------
    MissingArtifact
        If the file is absent.
    CorruptFile
        If the file is corrupted.
    """

    filepath = pathlib.Path(filepath)
    if not filepath.is_file():
        raise MissingArtifact(f"Working set file does not exist: {filepath}.")

    try:
        document = json.loads(filepath.read_text(encoding="utf-8"))
        page_ids = tuple(int(page_id) for page_id in document["ws_page_ids"])
        working_set = WorkingSetFile(
            diff_id=str(document["diff_id"]),
            ws_page_ids=page_ids,
            generation_request_seed=int(document["generation_request_seed"]),
        )
    except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError) as error:
        raise CorruptFile(f"Can not decode {filepath}: {error!r}.")

    for previous, current in zip(page_ids, page_ids[1:]):
        if current <= previous:
            raise CorruptFile(f"{filepath} has page id {current} after page id {previous}.")

    return working_set
