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

try:
    from .version import __version__
except ImportError:
    __version__ = "?"

from .application import *
from .constants import *
from .cost_model import *
from .enums import *
from .errors import *
from .guest import *
from .harness import *
from .memory import *
from .report import *
from .reporter import *
from .restore import *
from .signals import *
from .snapshot import *
from .sparse_file import *
from .status import *
from .throughput import *
from .utils import *
from .workload import *
