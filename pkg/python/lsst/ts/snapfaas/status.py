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

__all__ = ["Status"]

from dataclasses import dataclass, field


@dataclass
class Status:
    """Pipeline status."""

    # Names of the registered functions in registration order.
    registered_functions: list[str] = field(default_factory=list)

    # Bench progress.
    bench: dict[str, int] = field(
        default_factory=lambda: {
            "cellsTotal": 0,
            "cellsCompleted": 0,
            "records": 0,
        }
    )

    # Last warning about a degenerate input.
    last_warning: str = ""

    # Last violation that stopped an operation.
    last_violation: str = ""
