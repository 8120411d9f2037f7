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
    "CostParams",
    "EventLedger",
    "LatencyBreakdown",
    "read_cost_params",
    "model_min_overhead",
    "disk_dominance_threshold",
    "breakdown",
    "validate_model_vs_sim",
]

import math
import pathlib
import typing
from dataclasses import dataclass, field
from fractions import Fraction

from .constants import DEFAULT_PAGE_SIZE, MICROSECONDS_PER_SECOND
from .enums import StrategyId
from .errors import InvariantViolation, MalformedDocument, NegativeD, PreconditionViolated
from .utils import get_data_dir, read_yaml_file, round_half_up_deci, to_fraction


@dataclass(frozen=True)
class CostParams:
    """Storage and restore cost parameters.

    Parameters
    ----------
    c_us : `fractions.Fraction`, optional
        VMM pre-configuration and non-memory state restore in microseconds.
        (the default is 6000)
    bw_disk_bytes_per_s : `fractions.Fraction`, optional
        Disk bandwidth in bytes per second. (the default is 500000000)
    lat_disk_fault_us : `fractions.Fraction`, optional
        Latency of a synchronous disk page fault in microseconds. (the
        default is 50)
    lat_mem_fault_us : `fractions.Fraction`, optional
        Latency of a copy-on-write page copy in microseconds. (the default
        is 1)
    page_size_bytes : `int`, optional
        Page size in bytes. (the default is DEFAULT_PAGE_SIZE)
    residual_init_us : `fractions.Fraction`, optional
        Residual initialization of every cold start (VSOCK connection) in
        microseconds. (the default is 5000)
    eager_seek_us : `fractions.Fraction` or None, optional
        Seek penalty of one eager batch in microseconds. If None, one disk
        fault latency. (the default is None)
    c_us_by_strategy : `dict` [`StrategyId`, `fractions.Fraction`], optional
        Strategies with their own configuration cost. (the default is an
        empty dictionary)

    Raises
    ------
    InvariantViolation
        If a parameter is not strictly positive or the page size is not a
        power of two.
    """

    c_us: Fraction = Fraction(6000)
    bw_disk_bytes_per_s: Fraction = Fraction(500_000_000)
    lat_disk_fault_us: Fraction = Fraction(50)
    lat_mem_fault_us: Fraction = Fraction(1)
    page_size_bytes: int = DEFAULT_PAGE_SIZE
    residual_init_us: Fraction = Fraction(5000)
    eager_seek_us: Fraction | None = None
    c_us_by_strategy: dict[StrategyId, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.eager_seek_us is None:
            object.__setattr__(self, "eager_seek_us", self.lat_disk_fault_us)

        for name in (
            "c_us",
            "bw_disk_bytes_per_s",
            "lat_disk_fault_us",
            "lat_mem_fault_us",
            "page_size_bytes",
            "residual_init_us",
        ):
            if getattr(self, name) <= 0:
                raise InvariantViolation(f"Cost parameter {name} must be strictly positive.")

        if typing.cast(Fraction, self.eager_seek_us) < 0:
            raise InvariantViolation("Cost parameter eager_seek_us must not be negative.")

        if self.page_size_bytes & (self.page_size_bytes - 1) != 0:
            raise InvariantViolation(f"Page size {self.page_size_bytes} is not a power of two.")

        for strategy, value in self.c_us_by_strategy.items():
            if value <= 0:
                raise InvariantViolation(f"Cost parameter c_us of {strategy.value} must be strictly positive.")

    @classmethod
    def from_dict(cls, document: dict) -> "CostParams":
        """Cost parameters of a configuration mapping.

        Parameters
        ----------
        document : `dict`
            Configuration. Absent keys take the default values.

        Returns
        -------
        `CostParams`
            Cost parameters.

        Raises
        ------
        MalformedDocument
            If a key is unknown or a value is not a number.
        """

        known = {
            "c_us",
            "bw_disk_bytes_per_s",
            "lat_disk_fault_us",
            "lat_mem_fault_us",
            "page_size_bytes",
            "residual_init_us",
            "eager_seek_us",
            "c_us_by_strategy",
        }
        unknown = set(document) - known
        if unknown:
            raise MalformedDocument(f"Unknown cost parameters: {sorted(unknown)}.")

        values: dict[str, typing.Any] = dict()
        for key, value in document.items():
            match key:
                case "page_size_bytes":
                    page_size = to_fraction(value, name=key)
                    if page_size.denominator != 1:
                        raise MalformedDocument(f"{key} must be an integer.")
                    values[key] = int(page_size)
                case "c_us_by_strategy":
                    if not isinstance(value, dict):
                        raise MalformedDocument(f"{key} must be a mapping.")
                    try:
                        values[key] = {
                            StrategyId(strategy): to_fraction(cost, name=f"{key}.{strategy}")
                            for strategy, cost in value.items()
                        }
                    except ValueError as error:
                        raise MalformedDocument(f"{key}: {error}.")
                case "eager_seek_us" if value is None:
                    values[key] = None
                case _:
                    values[key] = to_fraction(value, name=key)

        return cls(**values)

    def to_dict(self) -> dict:
        """Configuration mapping with the values as exact strings."""

        return {
            "c_us": str(self.c_us),
            "bw_disk_bytes_per_s": str(self.bw_disk_bytes_per_s),
            "lat_disk_fault_us": str(self.lat_disk_fault_us),
            "lat_mem_fault_us": str(self.lat_mem_fault_us),
            "page_size_bytes": self.page_size_bytes,
            "residual_init_us": str(self.residual_init_us),
            "eager_seek_us": str(self.eager_seek_us),
            "c_us_by_strategy": {strategy.value: str(value) for strategy, value in self.c_us_by_strategy.items()},
        }

    def c_for(self, strategy: StrategyId | None) -> Fraction:
        """Configuration cost of the strategy in microseconds.

        Parameters
        ----------
        strategy : enum `StrategyId` or None
            Strategy. If None, the common value.

        Returns
        -------
        `fractions.Fraction`
            Configuration cost.
        """

        if strategy is None:
            return self.c_us
        return self.c_us_by_strategy.get(strategy, self.c_us)

    @property
    def page_transfer_us(self) -> Fraction:
        """Disk transfer time of one page in microseconds."""
        return Fraction(self.page_size_bytes * MICROSECONDS_PER_SECOND) / self.bw_disk_bytes_per_s

    def eager_us(self, page_count: int) -> Fraction:
        """Time of one eager batch in microseconds.

        Parameters
        ----------
        page_count : `int`
            Number of pages in the batch.

        Returns
        -------
        `fractions.Fraction`
            Bandwidth-bound transfer plus the seek penalty. Zero for an
            empty batch.
        """

        if page_count <= 0:
            return Fraction(0)
        return page_count * self.page_transfer_us + typing.cast(Fraction, self.eager_seek_us)


def read_cost_params(filepath: pathlib.Path | str | None = None) -> CostParams:
    """Read the cost parameters.

    Parameters
    ----------
    filepath : `pathlib.Path`, `str` or None, optional
        YAML or JSON file. If None, the shipped defaults. (the default is
        None)

    Returns
    -------
    `CostParams`
        Cost parameters.
    """

    if filepath is None:
        filepath = get_data_dir() / "config" / "cost_params.yaml"
    return CostParams.from_dict(read_yaml_file(filepath))


@dataclass(frozen=True)
class EventLedger:
    """Page events and time charges of one instance.

    Parameters
    ----------
    strategy : enum `StrategyId` or None
        Strategy of the boot. None for a warm instance.
    is_warm : `bool`
        The invoke ran on a warm instance.
    eager_pages_disk : `int`
        Pages loaded in the eager batch at boot.
    demand_pages_disk : `int`
        Disk demand faults during the execution.
    cow_faults : `int`
        Copy-on-write faults during the execution.
    boot_demand_pages_disk : `int`
        Disk demand faults during the residual initialization.
    boot_cow_faults : `int`
        Copy-on-write faults during the residual initialization.
    compute_us : `fractions.Fraction`
        Declared compute time of the execution in microseconds.
    residual_init_us : `fractions.Fraction`
        Residual initialization in microseconds, including the compute
        time of the phases run at boot and their fault charges.
    """

    strategy: StrategyId | None = None
    is_warm: bool = False
    eager_pages_disk: int = 0
    demand_pages_disk: int = 0
    cow_faults: int = 0
    boot_demand_pages_disk: int = 0
    boot_cow_faults: int = 0
    compute_us: Fraction = Fraction(0)
    residual_init_us: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in (
            "eager_pages_disk",
            "demand_pages_disk",
            "cow_faults",
            "boot_demand_pages_disk",
            "boot_cow_faults",
            "compute_us",
            "residual_init_us",
        ):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"Ledger entry {name} is negative.")

    def eager_bytes(self, params: CostParams) -> int:
        return self.eager_pages_disk * params.page_size_bytes

    def exec_fault_us(self, params: CostParams) -> Fraction:
        """Fault charges of the execution in microseconds."""
        return self.demand_pages_disk * params.lat_disk_fault_us + self.cow_faults * params.lat_mem_fault_us


@dataclass(frozen=True)
class LatencyBreakdown:
    """Overhead of a cold start split in the four clauses of the model.

    Attributes
    ----------
    A_us : `fractions.Fraction`
        Configuration and non-memory state restore.
    B_us : `fractions.Fraction`
        Eager disk restore.
    C_us : `fractions.Fraction`
        Residual initialization.
    D_us : `fractions.Fraction`
        Execution slowdown against the warm execution.
    """

    A_us: Fraction
    B_us: Fraction
    C_us: Fraction
    D_us: Fraction

    def __post_init__(self) -> None:
        for name in ("A_us", "B_us", "C_us", "D_us"):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"Breakdown clause {name} is negative.")

    @property
    def composed_us(self) -> Fraction:
        return max(self.A_us, self.B_us) + self.C_us + self.D_us


def model_min_overhead(
    pgs_unique: int,
    pgs_shared: int,
    init_us: Fraction,
    params: CostParams,
    strategy: StrategyId | None = None,
    exact: bool = False,
) -> Fraction:
    """Minimum overhead a snapshot restore adds to the end-to-end latency.

    The overhead is max(c, pgs_unique * P / bw) + init + pgs_shared *
    lat_mem. The disk term is the bandwidth floor of the eager transfer, the
    seek penalty of the batch is charged by the simulation only.

    Parameters
    ----------
    pgs_unique : `int`
        Pages unique to the function, restored eagerly from disk.
    pgs_shared : `int`
        Shared pages written during the execution.
    init_us : `fractions.Fraction`
        Residual initialization in microseconds.
    params : `CostParams`
        Cost parameters.
    strategy : enum `StrategyId` or None, optional
        Strategy selecting the configuration cost. (the default is None)
    exact : `bool`, optional
        Return the exact value instead of the value rounded half up to
        0.1 us. (the default is False)

    Returns
    -------
    `fractions.Fraction`
        Overhead in microseconds.
    """

    overhead = (
        max(params.c_for(strategy), pgs_unique * params.page_transfer_us)
        + Fraction(init_us)
        + pgs_shared * params.lat_mem_fault_us
    )
    if exact:
        return overhead
    return Fraction(round_half_up_deci(overhead), 10)


def disk_dominance_threshold(params: CostParams, strategy: StrategyId | None = None) -> int:
    """Smallest eager page count whose bandwidth-bound transfer reaches c.

    The seek penalty is not included.

    Parameters
    ----------
    params : `CostParams`
        Cost parameters.
    strategy : enum `StrategyId` or None, optional
        Strategy selecting the configuration cost. (the default is None)

    Returns
    -------
    `int`
        Page count.
    """
    return math.ceil(params.c_for(strategy) / params.page_transfer_us)


def breakdown(
    ledger: EventLedger,
    warm_exec_us: Fraction,
    measured_boot_us: Fraction,
    measured_exec_us: Fraction,
    params: CostParams,
) -> LatencyBreakdown:
    """Split a measured cold start in the four clauses of the model.

    A warm instance has zero A, B and C.

    Parameters
    ----------
    ledger : `EventLedger`
        Ledger of the instance after the invoke.
    warm_exec_us : `fractions.Fraction`
        Execution latency of a warm instance with the same request.
    measured_boot_us : `fractions.Fraction`
        Boot latency.
    measured_exec_us : `fractions.Fraction`
        Execution latency.
    params : `CostParams`
        Cost parameters.

    Returns
    -------
    `LatencyBreakdown`
        Breakdown.

    Raises
    ------
    NegativeD
        If the execution is faster than the warm execution.
    InvariantViolation
        If the clauses do not recompose to the measured overhead.
    """

    d_us = Fraction(measured_exec_us) - Fraction(warm_exec_us)
    if d_us < 0:
        raise NegativeD(
            f"Execution of {measured_exec_us} us is faster than the warm execution of {warm_exec_us} us."
        )

    if ledger.is_warm:
        result = LatencyBreakdown(Fraction(0), Fraction(0), Fraction(0), d_us)
    else:
        result = LatencyBreakdown(
            A_us=params.c_for(ledger.strategy),
            B_us=params.eager_us(ledger.eager_pages_disk),
            C_us=ledger.residual_init_us,
            D_us=d_us,
        )

    overhead = Fraction(measured_boot_us) + Fraction(measured_exec_us) - Fraction(warm_exec_us)
    if result.composed_us != overhead:
        raise InvariantViolation(
            f"Breakdown recomposes to {result.composed_us} us, not to the overhead of {overhead} us."
        )

    return result


def validate_model_vs_sim(ledger: EventLedger, latency_breakdown: LatencyBreakdown, params: CostParams) -> Fraction:
    """Distance between the simulated overhead and the model.

    Parameters
    ----------
    ledger : `EventLedger`
        Ledger of the instance after the invoke.
    latency_breakdown : `LatencyBreakdown`
        Breakdown of the same cold start.
    params : `CostParams`
        Cost parameters.

    Returns
    -------
    `fractions.Fraction`
        Absolute difference in microseconds, after taking out the seek
        penalty the simulation charges to an eager batch above c. Zero
        unless the simulation and the model disagree.

    Raises
    ------
    PreconditionViolated
        If the instance took a disk demand fault or is warm.
    """

    if ledger.is_warm:
        raise PreconditionViolated("The model applies to cold starts only.")

    if ledger.demand_pages_disk > 0 or ledger.boot_demand_pages_disk > 0:
        raise PreconditionViolated(
            f"Strategy {ledger.strategy.value if ledger.strategy else None} took "
            f"{ledger.demand_pages_disk + ledger.boot_demand_pages_disk} disk demand faults."
        )

    eager_pages = ledger.eager_pages_disk
    model_us = model_min_overhead(
        eager_pages,
        ledger.cow_faults,
        ledger.residual_init_us,
        params,
        strategy=ledger.strategy,
        exact=True,
    )
    # The simulated eager batch also pays the seek penalty.
    c_us = params.c_for(ledger.strategy)
    seek_us = max(c_us, params.eager_us(eager_pages)) - max(c_us, eager_pages * params.page_transfer_us)
    return abs(latency_breakdown.composed_us - model_us - seek_us)
