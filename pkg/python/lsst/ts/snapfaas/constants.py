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
    "DEFAULT_PAGE_SIZE",
    "MASK_64",
    "FNV_OFFSET_BASIS",
    "FNV_PRIME",
    "SPLITMIX_GAMMA",
    "SPLITMIX_MUL_1",
    "SPLITMIX_MUL_2",
    "FILL_MUL_STEP",
    "FILL_MUL_PAGE",
    "FILL_MUL_OFFSET",
    "REGISTER_NAMES",
    "STATIC_NETWORK",
    "SPARSE_FILE_MAGIC",
    "SPARSE_FILE_MAGIC_PREFIX",
    "FORMAT_VERSION",
    "PAGES_FILE_NAME",
    "METADATA_FILE_NAME",
    "MANIFEST_FILE_NAME",
    "WORKING_SET_FILE_NAME",
    "FULL_WORKING_SET_FILE_NAME",
    "DEFAULT_ROUNDS",
    "DEFAULT_LOG_DIR",
    "BYTES_PER_MB",
    "MICROSECONDS_PER_SECOND",
    "DEFAULT_REQUEST_SEED",
    "DEFAULT_JITTER_READS",
]

# Page size in bytes if the workload does not declare one
DEFAULT_PAGE_SIZE = 4096

MASK_64 = 0xFFFFFFFFFFFFFFFF

# FNV-1a 64
FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

# splitmix64 finalizer
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MUL_1 = 0xBF58476D1CE4E5B9
SPLITMIX_MUL_2 = 0x94D049BB133111EB

# Multipliers used to mix the fill coordinates before the finalizer
FILL_MUL_STEP = 0x9E3779B97F4A7C15
FILL_MUL_PAGE = 0xBF58476D1CE4E5B9
FILL_MUL_OFFSET = 0x94D049BB133111EB

# Declared register file of every guest, in digest order.
REGISTER_NAMES = ("phase_index", "step_index", "read_checksum")

# Static network configuration installed by the OS init. Every instance
# restored from the same base shares it.
STATIC_NETWORK = {
    "local_ip": "172.16.0.2",
    "gateway_ip": "172.16.0.1",
    "guest_mac": "AA:FC:00:00:00:01",
    "bridge_mac": "02:FC:00:00:00:01",
}

# Sparse page file. The last two characters of the magic are the version.
SPARSE_FILE_MAGIC = b"SNAPPG01"
SPARSE_FILE_MAGIC_PREFIX = b"SNAPPG"

# Version of the JSON metadata layout
FORMAT_VERSION = 1

PAGES_FILE_NAME = "pages.snap"
METADATA_FILE_NAME = "meta.json"
MANIFEST_FILE_NAME = "manifest.json"
WORKING_SET_FILE_NAME = "ws.json"
FULL_WORKING_SET_FILE_NAME = "full_ws.json"

# Rounds per bench cell
DEFAULT_ROUNDS = 100

DEFAULT_LOG_DIR = "/var/log/snapfaas"

BYTES_PER_MB = 1024 * 1024

MICROSECONDS_PER_SECOND = 1_000_000

# Request seed of the working set generation if none is given
DEFAULT_REQUEST_SEED = 1

# Extra reads per execution phase when the jitter is enabled
DEFAULT_JITTER_READS = 64
