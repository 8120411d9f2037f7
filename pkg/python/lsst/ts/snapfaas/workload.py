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
    "Write",
    "Read",
    "Compute",
    "MountAppFs",
    "Step",
    "Phase",
    "PageRange",
    "WorkloadSpec",
    "parse_workload",
    "read_workload",
    "prefix_digest",
    "PROVENANCE_NAMES",
]

import pathlib
import typing
from dataclasses import dataclass, field
from fractions import Fraction

from .constants import DEFAULT_PAGE_SIZE, MASK_64
from .enums import Provenance
from .errors import InvariantViolation, MalformedDocument
from .utils import canonical_json, read_yaml_file, sha256_hex, to_fraction

# Provenance names used in the workload documents
PROVENANCE_NAMES = {
    Provenance.Kernel: "kernel",
    Provenance.OsInit: "os_init",
    Provenance.Runtime: "runtime",
    Provenance.FunctionInit: "function_init",
    Provenance.Execution: "execution",
}

_PROVENANCE_BY_KEY = {
    key: provenance
    for provenance, name in PROVENANCE_NAMES.items()
    for key in (name.replace("_", ""), provenance.name.lower())
}


@dataclass(frozen=True)
class Write:
    """Fill a page range with the deterministic content of the step."""

    start_page: int
    page_count: int
    step_seed: int

    @property
    def pages(self) -> range:
        return range(self.start_page, self.start_page + self.page_count)

    def to_document(self) -> dict:
        return {
            "type": "write",
            "start_page": self.start_page,
            "page_count": self.page_count,
            "step_seed": self.step_seed,
        }


@dataclass(frozen=True)
class Read:
    """Read a page range and fold it into the read checksum."""

    start_page: int
    page_count: int

    @property
    def pages(self) -> range:
        return range(self.start_page, self.start_page + self.page_count)

    def to_document(self) -> dict:
        return {
            "type": "read",
            "start_page": self.start_page,
            "page_count": self.page_count,
        }


@dataclass(frozen=True)
class Compute:
    """Declared computation time in microseconds."""

    duration_us: Fraction

    def to_document(self) -> dict:
        duration: int | str = (
            int(self.duration_us) if self.duration_us.denominator == 1 else str(self.duration_us)
        )
        return {"type": "compute", "duration_us": duration}


@dataclass(frozen=True)
class MountAppFs:
    """Mount the application file system."""

    def to_document(self) -> dict:
        return {"type": "mount_appfs"}


Step = Write | Read | Compute | MountAppFs


@dataclass(frozen=True)
class Phase:
    """Ordered steps run by one initialization stage.

    Parameters
    ----------
    name : `str`
        Name.
    provenance : enum `Provenance`
        Stage that runs the phase.
    steps : `tuple`
        Steps.
    """

    name: str
    provenance: Provenance
    steps: tuple[Step, ...] = ()

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "provenance": PROVENANCE_NAMES[self.provenance],
            "steps": [step.to_document() for step in self.steps],
        }


@dataclass(frozen=True)
class PageRange:
    """Contiguous page range."""

    start_page: int
    page_count: int

    def __contains__(self, page_id: object) -> bool:
        return isinstance(page_id, int) and self.start_page <= page_id < (self.start_page + self.page_count)

    def intersects(self, start_page: int, page_count: int) -> bool:
        return (start_page < self.start_page + self.page_count) and (self.start_page < start_page + page_count)


@dataclass(frozen=True)
class WorkloadSpec:
    """Deterministic phase-structured program standing in for a function.

    Parameters
    ----------
    name : `str`
        Function name.
    language_tag : `str`
        Language of the function, such as "python3".
    workload_seed : `int`
        64-bit seed of the page content.
    memory_pages : `int`
        Number of addressable pages.
    phases : `tuple` [`Phase`]
        Phases in provenance order.
    page_size : `int`, optional
        Page size in bytes. (the default is DEFAULT_PAGE_SIZE)
    appfs_pages : `PageRange` or None, optional
        Pages backed by the application file system. (the default is None)
    """

    name: str
    language_tag: str
    workload_seed: int
    memory_pages: int
    phases: tuple[Phase, ...]
    page_size: int = DEFAULT_PAGE_SIZE
    appfs_pages: PageRange | None = field(default=None)

    def phase_range(self, *provenances: Provenance) -> range:
        """Indices of the phases run by the given stages.

        Parameters
        ----------
        *provenances : enum `Provenance`
            Consecutive stages.

        Returns
        -------
        `range`
            Phase indices. The range is empty but positioned if no phase
            belongs to the stages.
        """

        lowest = min(provenances)
        highest = max(provenances)
        start = sum(1 for phase in self.phases if phase.provenance < lowest)
        stop = sum(1 for phase in self.phases if phase.provenance <= highest)
        return range(start, stop)

    @property
    def base_range(self) -> range:
        """Phases captured by a base snapshot."""
        return self.phase_range(Provenance.Kernel, Provenance.OsInit, Provenance.Runtime)

    @property
    def function_init_range(self) -> range:
        return self.phase_range(Provenance.FunctionInit)

    @property
    def execution_range(self) -> range:
        return self.phase_range(Provenance.Execution)

    def has_provenance(self, provenance: Provenance) -> bool:
        return any(phase.provenance == provenance for phase in self.phases)

    def to_document(self) -> dict:
        """Canonical workload document.

        Returns
        -------
        document : `dict`
            Document accepted by `parse_workload`.
        """

        document: dict[str, typing.Any] = {
            "name": self.name,
            "language_tag": self.language_tag,
            "workload_seed": self.workload_seed,
            "memory_pages": self.memory_pages,
            "page_size": self.page_size,
        }
        if self.appfs_pages is not None:
            document["appfs_pages"] = {
                "start_page": self.appfs_pages.start_page,
                "page_count": self.appfs_pages.page_count,
            }
        document["phases"] = [phase.to_document() for phase in self.phases]

        return document


def _require(mapping: dict, key: str, where: str) -> typing.Any:
    if key not in mapping:
        raise MalformedDocument(f"{where}: missing field {key!r}.")
    return mapping[key]


def _require_int(mapping: dict, key: str, where: str, minimum: int = 0, maximum: int = MASK_64) -> int:
    value = _require(mapping, key, where)
    if isinstance(value, bool) or (not isinstance(value, int)):
        raise MalformedDocument(f"{where}: field {key!r} must be an integer, not {value!r}.")
    if not (minimum <= value <= maximum):
        raise MalformedDocument(f"{where}: field {key!r} = {value} is outside [{minimum}, {maximum}].")
    return value


def _require_str(mapping: dict, key: str, where: str) -> str:
    value = _require(mapping, key, where)
    if not isinstance(value, str) or (value == ""):
        raise MalformedDocument(f"{where}: field {key!r} must be a non-empty string.")
    return value


def _parse_step(document: typing.Any, where: str) -> Step:
    if not isinstance(document, dict):
        raise MalformedDocument(f"{where}: step must be a mapping.")

    step_type = _require(document, "type", where)
    match step_type:
        case "write":
            return Write(
                start_page=_require_int(document, "start_page", where),
                page_count=_require_int(document, "page_count", where),
                step_seed=_require_int(document, "step_seed", where),
            )
        case "read":
            return Read(
                start_page=_require_int(document, "start_page", where),
                page_count=_require_int(document, "page_count", where),
            )
        case "compute":
            return Compute(to_fraction(_require(document, "duration_us", where), name=f"{where}: duration_us"))
        case "mount_appfs":
            return MountAppFs()
        case _:
            raise MalformedDocument(f"{where}: unknown step type {step_type!r}.")


def _parse_provenance(value: typing.Any, where: str) -> Provenance:
    key = value.replace("_", "").replace("-", "").lower() if isinstance(value, str) else None
    if key not in _PROVENANCE_BY_KEY:
        raise MalformedDocument(f"{where}: unknown provenance {value!r}.")
    return _PROVENANCE_BY_KEY[key]


def _parse_page_range(document: typing.Any, where: str) -> PageRange:
    if not isinstance(document, dict):
        raise MalformedDocument(f"{where}: appfs_pages must be a mapping.")
    return PageRange(
        start_page=_require_int(document, "start_page", where),
        page_count=_require_int(document, "page_count", where),
    )


def _validate(spec: WorkloadSpec) -> None:
    if spec.page_size <= 0 or (spec.page_size & (spec.page_size - 1)) != 0:
        raise InvariantViolation(f"Page size {spec.page_size} of {spec.name} is not a power of two.")

    if spec.memory_pages < 1:
        raise InvariantViolation(f"Workload {spec.name} has no addressable page.")

    if spec.appfs_pages is not None:
        appfs = spec.appfs_pages
        if appfs.page_count < 1 or (appfs.start_page + appfs.page_count > spec.memory_pages):
            raise InvariantViolation(
                f"AppFS pages [{appfs.start_page}, {appfs.start_page + appfs.page_count}) "
                f"of {spec.name} are not within [0, {spec.memory_pages})."
            )

    previous = Provenance.Kernel
    mount_location: str | None = None
    for phase_index, phase in enumerate(spec.phases):
        where_phase = f"Phase {phase_index} ({phase.name})"
        if phase.provenance < previous:
            raise InvariantViolation(
                f"{where_phase} with provenance {phase.provenance.name} comes after a "
                f"{previous.name} phase."
            )
        previous = phase.provenance

        for step_index, step in enumerate(phase.steps):
            where = f"{where_phase}, step {step_index}"
            match step:
                case Write() | Read():
                    if step.page_count < 1:
                        raise InvariantViolation(f"{where}: page range is empty.")
                    if step.start_page + step.page_count > spec.memory_pages:
                        raise InvariantViolation(
                            f"{where}: pages [{step.start_page}, {step.start_page + step.page_count}) "
                            f"are not within [0, {spec.memory_pages})."
                        )
                case Compute():
                    if step.duration_us < 0:
                        raise InvariantViolation(f"{where}: negative compute duration.")
                case MountAppFs():
                    if phase.provenance != Provenance.FunctionInit:
                        raise InvariantViolation(
                            f"{where}: AppFS mounted in a {phase.provenance.name} phase."
                        )
                    if mount_location is not None:
                        raise InvariantViolation(
                            f"{where}: AppFS already mounted at {mount_location}."
                        )
                    mount_location = where


def parse_workload(document: typing.Any) -> WorkloadSpec:
    """Parse the workload description document.

    Parameters
    ----------
    document : `dict`
        Workload description document.

    Returns
    -------
    spec : `WorkloadSpec`
        Validated workload.

    Raises
    ------
    MalformedDocument
        If a field is missing or has a wrong type.
    InvariantViolation
        If the workload breaks a structural rule.
    """

    if not isinstance(document, dict):
        raise MalformedDocument("Workload document must be a mapping.")

    where = "Workload"
    name = _require_str(document, "name", where)
    where = f"Workload {name}"

    phases_document = _require(document, "phases", where)
    if not isinstance(phases_document, list):
        raise MalformedDocument(f"{where}: phases must be a list.")

    phases = list()
    for phase_index, phase_document in enumerate(phases_document):
        where_phase = f"{where}, phase {phase_index}"
        if not isinstance(phase_document, dict):
            raise MalformedDocument(f"{where_phase}: phase must be a mapping.")

        steps_document = phase_document.get("steps", list())
        if not isinstance(steps_document, list):
            raise MalformedDocument(f"{where_phase}: steps must be a list.")

        phases.append(
            Phase(
                name=_require_str(phase_document, "name", where_phase),
                provenance=_parse_provenance(_require(phase_document, "provenance", where_phase), where_phase),
                steps=tuple(
                    _parse_step(step_document, f"{where_phase}, step {step_index}")
                    for step_index, step_document in enumerate(steps_document)
                ),
            )
        )

    appfs_document = document.get("appfs_pages")

    spec = WorkloadSpec(
        name=name,
        language_tag=_require_str(document, "language_tag", where),
        workload_seed=_require_int(document, "workload_seed", where),
        memory_pages=_require_int(document, "memory_pages", where, minimum=1),
        phases=tuple(phases),
        page_size=(
            _require_int(document, "page_size", where, minimum=1) if "page_size" in document else DEFAULT_PAGE_SIZE
        ),
        appfs_pages=(None if appfs_document is None else _parse_page_range(appfs_document, f"{where}, appfs_pages")),
    )
    _validate(spec)

    return spec


def read_workload(filepath: pathlib.Path | str) -> WorkloadSpec:
    """Read the workload description file.

    Parameters
    ----------
    filepath : `pathlib.Path` or `str`
        JSON (or YAML) workload description.

    Returns
    -------
    `WorkloadSpec`
        Validated workload.
    """
    return parse_workload(read_yaml_file(filepath))


def prefix_digest(spec: WorkloadSpec) -> str:
    """Digest of everything a base snapshot depends on.

    Covers the language tag, the workload seed, the memory and page sizes
    and the phases before the function initialization.

    Parameters
    ----------
    spec : `WorkloadSpec`
        Workload.

    Returns
    -------
    `str`
        Hexadecimal SHA-256 digest.
    """

    record = {
        "language_tag": spec.language_tag,
        "workload_seed": spec.workload_seed,
        "memory_pages": spec.memory_pages,
        "page_size": spec.page_size,
        "phases": [spec.phases[index].to_document() for index in spec.base_range],
    }
    return sha256_hex(canonical_json(record))
