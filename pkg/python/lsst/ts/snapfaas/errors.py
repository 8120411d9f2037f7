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
    "SnapFaasError",
    "InvariantViolation",
    "MalformedDocument",
    "BaseMismatch",
    "PlanSpecMismatch",
    "ForeignWorkingSet",
    "NotRequestReady",
    "PageOutOfRange",
    "AppFsNotMounted",
    "NegativeD",
    "PreconditionViolated",
    "DeterminismViolation",
    "NoCapacity",
    "MissingArtifact",
    "CorruptFile",
    "VersionMismatch",
    "EXIT_CODE_SUCCESS",
    "EXIT_CODE_VIOLATION",
    "EXIT_CODE_MISSING_ARTIFACT",
    "EXIT_CODE_IO",
]

EXIT_CODE_SUCCESS = 0
EXIT_CODE_VIOLATION = 2
EXIT_CODE_MISSING_ARTIFACT = 3
EXIT_CODE_IO = 4


class SnapFaasError(Exception):
    """Base class of the errors in this package.

    The class attribute ``exit_code`` is the exit code of the command line
    application when the error is not handled.
    """

    exit_code = EXIT_CODE_VIOLATION


class InvariantViolation(SnapFaasError):
    """A type or state invariant does not hold."""


class MalformedDocument(SnapFaasError):
    """The workload description document is not well formed."""


class BaseMismatch(SnapFaasError):
    """The base snapshot was not generated from the workload's phases."""


class PlanSpecMismatch(SnapFaasError):
    """The restoration plan does not fit the workload."""


class ForeignWorkingSet(SnapFaasError):
    """The working set file belongs to another snapshot."""


class NotRequestReady(SnapFaasError):
    """The guest can not serve a request yet."""


class PageOutOfRange(SnapFaasError):
    """A page id is outside the guest memory."""


class AppFsNotMounted(SnapFaasError):
    """An AppFS-backed page is touched before the AppFS is mounted."""


class NegativeD(SnapFaasError):
    """The measured execution is faster than the warm execution."""


class PreconditionViolated(SnapFaasError):
    """The precondition of an operation does not hold."""


class DeterminismViolation(SnapFaasError):
    """Rounds of a deterministic bench cell disagree."""


class NoCapacity(SnapFaasError):
    """The machine can not host a single instance."""


class MissingArtifact(SnapFaasError):
    """A required artifact is absent."""

    exit_code = EXIT_CODE_MISSING_ARTIFACT


class CorruptFile(SnapFaasError):
    """A snapshot or working set file is corrupted."""

    exit_code = EXIT_CODE_IO


class VersionMismatch(SnapFaasError):
    """A snapshot file has an unsupported format version."""

    exit_code = EXIT_CODE_IO
