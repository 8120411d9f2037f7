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

__all__ = ["SignalArtifact", "SignalProgress", "SignalMessage"]

from PySide6 import QtCore


class SignalArtifact(QtCore.QObject):
    """Artifact signal to send the registered functions."""

    # `FunctionArtifacts` of a registered function.
    artifact = QtCore.Signal(object)


class SignalProgress(QtCore.QObject):
    """Progress signal to send the bench progress."""

    # Bench progress as the dictionary of `Status.bench`.
    bench = QtCore.Signal(object)

    # Tuple of the function name and the strategy of a started bench cell.
    cell_started = QtCore.Signal(object)

    # Tuple of the function name and the strategy of a finished bench cell.
    cell_finished = QtCore.Signal(object)

    # `ReportRecord` of a finished round.
    record = QtCore.Signal(object)


class SignalMessage(QtCore.QObject):
    """Message signal to send the warnings and violations."""

    warning = QtCore.Signal(str)
    violation = QtCore.Signal(str)
