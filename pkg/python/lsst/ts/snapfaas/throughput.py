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
    "MachineSpec",
    "WorkloadMix",
    "ThroughputResult",
    "Scenario",
    "simulate_throughput",
    "simulate_throughput_des",
    "find_crossover",
    "read_scenario",
    "sweep",
    "write_sweep",
]

import math
import pathlib
import typing
from dataclasses import dataclass, replace
from fractions import Fraction

import pandas as pd
import simpy

from .constants import MICROSECONDS_PER_SECOND
from .errors import InvariantViolation, MalformedDocument, NoCapacity
from .utils import get_data_dir, read_yaml_file, to_fraction

# Sequential requests per slot of the discrete-event oracle
DES_REQUESTS_PER_SLOT = 10_000


@dataclass(frozen=True)
class MachineSpec:
    """Memory of the machine and of each instance.

    Parameters
    ----------
    total_memory_bytes : `int`
        Memory of the machine.
    per_instance_memory_bytes : `int`
        Memory of one function instance.
    resident_base_bytes : `int`, optional
        Memory held by the resident base snapshots. (the default is 0)
    """

    total_memory_bytes: int
    per_instance_memory_bytes: int
    resident_base_bytes: int = 0

    @property
    def slots(self) -> int:
        """Number of concurrent instances. May be less than 1."""
        return (self.total_memory_bytes - self.resident_base_bytes) // self.per_instance_memory_bytes

    def check_capacity(self, mode: str) -> int:
        """Number of concurrent instances.

        Parameters
        ----------
        mode : `str`
            Name of the mode used in the error message.

        Returns
        -------
        `int`
            Number of concurrent instances.

        Raises
        ------
        NoCapacity
            If not a single instance fits.
        """

        if self.per_instance_memory_bytes <= 0:
            raise NoCapacity(f"Instances of the {mode} mode have no memory.")

        slots = self.slots
        if slots < 1:
            raise NoCapacity(
                f"{self.total_memory_bytes} bytes with {self.resident_base_bytes} resident base bytes "
                f"can not host a {self.per_instance_memory_bytes}-byte instance in the {mode} mode."
            )
        return slots


@dataclass(frozen=True)
class WorkloadMix:
    """Share of cold starts and the service times in microseconds."""

    cold_fraction: Fraction
    warm_service_us: Fraction
    regular_cold_service_us: Fraction
    snapfaas_cold_service_us: Fraction

    def __post_init__(self) -> None:
        if not (0 <= self.cold_fraction <= 1):
            raise InvariantViolation(f"Cold fraction {self.cold_fraction} is not within [0, 1].")
        if self.warm_service_us <= 0:
            raise InvariantViolation("Warm service time must be strictly positive.")
        if min(self.regular_cold_service_us, self.snapfaas_cold_service_us) < self.warm_service_us:
            raise InvariantViolation("Cold service time is shorter than the warm service time.")

    def mean_service_us(self, cold_service_us: Fraction) -> Fraction:
        return self.cold_fraction * cold_service_us + (1 - self.cold_fraction) * self.warm_service_us


@dataclass(frozen=True)
class ThroughputResult:
    """Throughput of both modes at one cold fraction.

    Attributes
    ----------
    cold_fraction : `fractions.Fraction`
        Share of cold starts.
    requests_per_second_regular : `fractions.Fraction`
        Throughput with regular boots.
    requests_per_second_snapfaas : `fractions.Fraction`
        Throughput with snapshot restores.
    """

    cold_fraction: Fraction
    requests_per_second_regular: Fraction
    requests_per_second_snapfaas: Fraction

    @property
    def relative_difference(self) -> Fraction:
        return (
            self.requests_per_second_snapfaas - self.requests_per_second_regular
        ) / self.requests_per_second_regular


@dataclass(frozen=True)
class Scenario:
    """Machines, mix template and cold fraction sweep of a throughput study."""

    machine_regular: MachineSpec
    machine_snapfaas: MachineSpec
    mix: WorkloadMix
    sweep_start: Fraction
    sweep_end: Fraction
    sweep_step: Fraction

    @property
    def cold_fractions(self) -> list[Fraction]:
        count = math.floor((self.sweep_end - self.sweep_start) / self.sweep_step)
        return [self.sweep_start + index * self.sweep_step for index in range(count + 1)]


def simulate_throughput(
    machine_regular: MachineSpec, machine_snapfaas: MachineSpec, mix: WorkloadMix
) -> ThroughputResult:
    """Saturated closed-system throughput of both modes.

    Every slot is always busy, so a mode serves its slots divided by its
    mean service time.

    Parameters
    ----------
    machine_regular : `MachineSpec`
        Machine with regular boots.
    machine_snapfaas : `MachineSpec`
        Machine with the resident base snapshots.
    mix : `WorkloadMix`
        Workload mix.

    Returns
    -------
    `ThroughputResult`
        Throughput of both modes.

    Raises
    ------
    NoCapacity
        If a machine can not host a single instance.
    """

    slots_regular = machine_regular.check_capacity("regular")
    slots_snapfaas = machine_snapfaas.check_capacity("snapfaas")

    return ThroughputResult(
        cold_fraction=mix.cold_fraction,
        requests_per_second_regular=(
            slots_regular * MICROSECONDS_PER_SECOND / mix.mean_service_us(mix.regular_cold_service_us)
        ),
        requests_per_second_snapfaas=(
            slots_snapfaas * MICROSECONDS_PER_SECOND / mix.mean_service_us(mix.snapfaas_cold_service_us)
        ),
    )


def _des_requests_per_second(
    slots: int, cold_fraction: Fraction, warm_us: Fraction, cold_us: Fraction, requests_per_slot: int
) -> float:
    environment = simpy.Environment()
    machine = simpy.Resource(environment, capacity=slots)
    total = slots * requests_per_slot

    def request(index: int) -> typing.Generator:
        # Evenly spread cold starts
        is_cold = math.floor((index + 1) * cold_fraction) > math.floor(index * cold_fraction)
        with machine.request() as slot:
            yield slot
            yield environment.timeout(float(cold_us if is_cold else warm_us))

    for index in range(total):
        environment.process(request(index))

    environment.run()

    return total * MICROSECONDS_PER_SECOND / environment.now


def simulate_throughput_des(
    machine_regular: MachineSpec,
    machine_snapfaas: MachineSpec,
    mix: WorkloadMix,
    requests_per_slot: int = DES_REQUESTS_PER_SLOT,
) -> tuple[float, float]:
    """Discrete-event simulation of the saturated closed system.

    All requests queue at time zero for the slots of the machine, served
    first come first served, with the cold starts spread evenly.

    Parameters
    ----------
    machine_regular : `MachineSpec`
        Machine with regular boots.
    machine_snapfaas : `MachineSpec`
        Machine with the resident base snapshots.
    mix : `WorkloadMix`
        Workload mix.
    requests_per_slot : `int`, optional
        Sequential requests per slot. (the default is
        DES_REQUESTS_PER_SLOT)

    Returns
    -------
    requests_per_second_regular : `float`
        Throughput with regular boots.
    requests_per_second_snapfaas : `float`
        Throughput with snapshot restores.

    Raises
    ------
    NoCapacity
        If a machine can not host a single instance.
    """

    return (
        _des_requests_per_second(
            machine_regular.check_capacity("regular"),
            mix.cold_fraction,
            mix.warm_service_us,
            mix.regular_cold_service_us,
            requests_per_slot,
        ),
        _des_requests_per_second(
            machine_snapfaas.check_capacity("snapfaas"),
            mix.cold_fraction,
            mix.warm_service_us,
            mix.snapfaas_cold_service_us,
            requests_per_slot,
        ),
    )


def find_crossover(machine_regular: MachineSpec, machine_snapfaas: MachineSpec, mix: WorkloadMix) -> Fraction:
    """Cold fraction where both modes have the same throughput.

    Parameters
    ----------
    machine_regular : `MachineSpec`
        Machine with regular boots.
    machine_snapfaas : `MachineSpec`
        Machine with the resident base snapshots.
    mix : `WorkloadMix`
        Mix template. Its cold fraction is ignored.

    Returns
    -------
    `fractions.Fraction`
        Cold fraction in [0, 1]. 0 if the snapshot restores win from the
        start, 1 if they never overtake.
    """

    slots_regular = machine_regular.check_capacity("regular")
    slots_snapfaas = machine_snapfaas.check_capacity("snapfaas")

    warm = mix.warm_service_us
    numerator = warm * (slots_regular - slots_snapfaas)
    denominator = slots_snapfaas * (mix.regular_cold_service_us - warm) - slots_regular * (
        mix.snapfaas_cold_service_us - warm
    )

    if numerator <= 0:
        return Fraction(0)
    if denominator <= 0:
        return Fraction(1)
    return min(Fraction(1), numerator / denominator)


def _parse_machine(document: typing.Any, where: str) -> MachineSpec:
    if not isinstance(document, dict):
        raise MalformedDocument(f"{where} must be a mapping.")

    try:
        return MachineSpec(
            total_memory_bytes=int(document["total_memory_bytes"]),
            per_instance_memory_bytes=int(document["per_instance_memory_bytes"]),
            resident_base_bytes=int(document.get("resident_base_bytes", 0)),
        )
    except (KeyError, TypeError, ValueError) as error:
        raise MalformedDocument(f"{where} is malformed: {error!r}.")


def read_scenario(filepath: pathlib.Path | str | None = None) -> Scenario:
    """Read the throughput scenario.

    The machine of the regular mode holds no resident base.

    Parameters
    ----------
    filepath : `pathlib.Path`, `str` or None, optional
        YAML or JSON scenario. If None, the shipped default scenario. (the
        default is None)

    Returns
    -------
    `Scenario`
        Scenario.

    Raises
    ------
    MalformedDocument
        If a field is missing or wrong.
    """

    if filepath is None:
        filepath = get_data_dir() / "scenario" / "throughput.json"
    document = read_yaml_file(filepath)

    try:
        machine = _parse_machine(document["machine"], "machine")
        mix = document["mix"]
        cold = mix["cold_service_us"]
        start, end, step = (to_fraction(value, name="sweep") for value in document["sweep"]["cold_fraction"])
        workload_mix = WorkloadMix(
            cold_fraction=start,
            warm_service_us=to_fraction(mix["warm_service_us"], name="warm_service_us"),
            regular_cold_service_us=to_fraction(cold["regular"], name="cold_service_us.regular"),
            snapfaas_cold_service_us=to_fraction(cold["snapfaas"], name="cold_service_us.snapfaas"),
        )
    except (KeyError, TypeError, ValueError) as error:
        raise MalformedDocument(f"Scenario {filepath} is malformed: {error!r}.")

    if step <= 0 or end < start:
        raise MalformedDocument(f"Scenario {filepath} has an empty sweep.")

    return Scenario(
        machine_regular=replace(machine, resident_base_bytes=0),
        machine_snapfaas=machine,
        mix=workload_mix,
        sweep_start=start,
        sweep_end=end,
        sweep_step=step,
    )


def sweep(scenario: Scenario) -> list[ThroughputResult]:
    """Throughput of both modes over the cold fractions of the scenario.

    Parameters
    ----------
    scenario : `Scenario`
        Scenario.

    Returns
    -------
    `list` [`ThroughputResult`]
        One result per cold fraction.
    """
    return [
        simulate_throughput(
            scenario.machine_regular,
            scenario.machine_snapfaas,
            replace(scenario.mix, cold_fraction=cold_fraction),
        )
        for cold_fraction in scenario.cold_fractions
    ]


def write_sweep(results: list[ThroughputResult], directory: pathlib.Path | str) -> pathlib.Path:
    """Write the sweep as CSV.

    Parameters
    ----------
    results : `list` [`ThroughputResult`]
        Sweep.
    directory : `pathlib.Path` or `str`
        Output directory. It is created if needed.

    Returns
    -------
    filepath : `pathlib.Path`
        CSV file.
    """

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    table = pd.DataFrame(
        {
            "cold_fraction": [f"{float(result.cold_fraction):.4f}" for result in results],
            "tput_regular": [f"{float(result.requests_per_second_regular):.6f}" for result in results],
            "tput_snapfaas": [f"{float(result.requests_per_second_snapfaas):.6f}" for result in results],
            "rel_diff": [f"{float(result.relative_difference):.6f}" for result in results],
        }
    )

    filepath = directory / "throughput.csv"
    table.to_csv(filepath, index=False, lineterminator="\r\n")

    return filepath
