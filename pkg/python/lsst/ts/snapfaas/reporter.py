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

__all__ = ["Reporter"]

import logging
import typing

from .signals import SignalArtifact, SignalMessage, SignalProgress
from .status import Status


class Reporter:
    """Report class to report the pipeline status.

    All reports must be made from the thread that owns the reporter.

    Parameters
    ----------
    log : `logging.Logger`
        A logger.

    Attributes
    ----------
    log : `logging.Logger`
        A logger.
    status : `Status`
        Pipeline status.
    signals : `dict`
        Signals.
    """

    def __init__(self, log: logging.Logger) -> None:
        self.log = log

        self.status = Status()
        self.signals = {
            "artifact": SignalArtifact(),
            "progress": SignalProgress(),
            "message": SignalMessage(),
        }

    def report_artifact(self, name: str, artifacts: typing.Any) -> None:
        """Report a registered function.

        Parameters
        ----------
        name : `str`
            Function name.
        artifacts : `FunctionArtifacts`
            Artifacts of the function.
        """

        if name not in self.status.registered_functions:
            self.status.registered_functions.append(name)

        self.signals["artifact"].artifact.emit(artifacts)  # type: ignore[attr-defined]

    def report_bench_total(self, cells: int) -> None:
        """Report the number of cells of a new bench.

        Parameters
        ----------
        cells : `int`
            Number of (function, strategy) cells.
        """

        self.status.bench["cellsCompleted"] = 0
        self.status.bench["records"] = 0
        self._check_bench_and_report("cellsTotal", cells, force=True)

    def report_cell_started(self, function: str, strategy: str) -> None:
        """Report a started bench cell.

        Parameters
        ----------
        function : `str`
            Function name.
        strategy : `str`
            Strategy name.
        """
        self.signals["progress"].cell_started.emit((function, strategy))  # type: ignore[attr-defined]

    def report_cell_finished(self, function: str, strategy: str, records: list) -> None:
        """Report a finished bench cell.

        Parameters
        ----------
        function : `str`
            Function name.
        strategy : `str`
            Strategy name.
        records : `list` [`ReportRecord`]
            Records of the cell.
        """

        for record in records:
            self.signals["progress"].record.emit(record)  # type: ignore[attr-defined]

        self.status.bench["records"] += len(records)
        self.signals["progress"].cell_finished.emit((function, strategy))  # type: ignore[attr-defined]
        self._check_bench_and_report("cellsCompleted", self.status.bench["cellsCompleted"] + 1)

    def _check_bench_and_report(self, bench_field: str, value: int, force: bool = False) -> None:
        """Check the bench progress and report it if the value is changed.

        Parameters
        ----------
        bench_field : `str`
            Field of `Status.bench`.
        value : `int`
            New value.
        force : `bool`, optional
            Report even if the value is the same. (the default is False)
        """

        if force or (self.status.bench[bench_field] != value):
            self.status.bench[bench_field] = value
            self.signals["progress"].bench.emit(dict(self.status.bench))  # type: ignore[attr-defined]

    def report_warning(self, message: str) -> None:
        """Report a warning about a degenerate input.

        Parameters
        ----------
        message : `str`
            Message.
        """

        self.log.warning(message)

        if self.status.last_warning != message:
            self.status.last_warning = message
            self.signals["message"].warning.emit(message)  # type: ignore[attr-defined]

    def report_violation(self, message: str) -> None:
        """Report a violation that stops an operation.

        Parameters
        ----------
        message : `str`
            Message.
        """

        self.log.error(message)

        if self.status.last_violation != message:
            self.status.last_violation = message
            self.signals["message"].violation.emit(message)  # type: ignore[attr-defined]
