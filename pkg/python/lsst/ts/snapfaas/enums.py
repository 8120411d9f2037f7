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

__all__ = ["Provenance", "StrategyId", "PagePolicy", "SnapshotKind"]

import enum


class Provenance(enum.IntEnum):
    """Initialization stage that runs a phase. The integer order is the
    only legal order of phases in a workload."""

    Kernel = 1
    OsInit = 2
    Runtime = 3
    FunctionInit = 4
    Execution = 5


class StrategyId(enum.Enum):
    """Cold-start strategy. The value is the stable name used on the
    command line and in the reports."""

    Regular = "regular"
    FullDemand = "full-demand"
    Reap = "reap"
    Seuss = "seuss"
    SnapFaasMinus = "snapfaas-"
    SnapFaas = "snapfaas"


class PagePolicy(enum.Enum):
    """How a page is restored."""

    ResidentPrivate = "resident-private"
    # In-memory base image, copied on the first write
    SharedCow = "shared-cow"
    # Loaded in one batch at boot
    EagerDisk = "eager-disk"
    # Synchronous fault on the first access
    DemandDisk = "demand-disk"
    ZeroFill = "zero-fill"


class SnapshotKind(enum.Enum):
    """Kind of the snapshot."""

    Base = "base"
    Diff = "diff"
    Full = "full"
