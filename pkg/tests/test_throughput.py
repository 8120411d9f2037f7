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

import dataclasses
import pathlib
from fractions import Fraction

import pytest

from lsst.ts.snapfaas import (
    InvariantViolation,
    MachineSpec,
    MalformedDocument,
    NoCapacity,
    Scenario,
    WorkloadMix,
    find_crossover,
    get_data_dir,
    read_scenario,
    simulate_throughput,
    simulate_throughput_des,
    sweep,
    write_sweep,
)


@pytest.fixture
def scenario() -> Scenario:
    return read_scenario()


def test_read_scenario(scenario: Scenario) -> None:
    assert scenario.machine_regular.slots == 4
    assert scenario.machine_snapfaas.slots == 3
    assert scenario.machine_regular.resident_base_bytes == 0
    assert scenario.machine_snapfaas.resident_base_bytes == 196 * 1024 * 1024

    assert scenario.mix.warm_service_us == Fraction(450000)
    assert scenario.cold_fractions[0] == Fraction(0)
    assert scenario.cold_fractions[-1] == Fraction(1)
    assert len(scenario.cold_fractions) == 21


def test_read_scenario_malformed(tmp_path: pathlib.Path) -> None:
    filepath = tmp_path / "scenario.json"
    filepath.write_text('{"machine": {"total_memory_bytes": 1}}')

    with pytest.raises(MalformedDocument):
        read_scenario(filepath)


def test_simulate_throughput(scenario: Scenario) -> None:
    result = simulate_throughput(scenario.machine_regular, scenario.machine_snapfaas, scenario.mix)

    assert result.cold_fraction == Fraction(0)
    assert result.requests_per_second_regular == Fraction(4_000_000, 450000)
    assert result.relative_difference == Fraction(-1, 4)


def test_throughput_shape(scenario: Scenario) -> None:
    results = sweep(scenario)

    assert results[0].relative_difference < 0
    assert results[-1].relative_difference > Fraction(1, 2)

    # The difference grows with the cold fraction
    differences = [result.relative_difference for result in results]
    assert differences == sorted(differences)

    crossover = find_crossover(scenario.machine_regular, scenario.machine_snapfaas, scenario.mix)
    assert Fraction(15, 100) <= crossover <= Fraction(45, 100)
    assert crossover == Fraction(450000, 2620000)

    mix = dataclasses.replace(scenario.mix, cold_fraction=crossover)
    result = simulate_throughput(scenario.machine_regular, scenario.machine_snapfaas, mix)
    assert result.relative_difference == 0


def test_large_machine() -> None:
    scenario = read_scenario(get_data_dir() / "scenario" / "throughput_large.json")

    # The resident base costs less than one slot
    assert scenario.machine_regular.slots == 128
    assert scenario.machine_snapfaas.slots == 127
    assert scenario.machine_snapfaas.resident_base_bytes == 196 * 1024 * 1024

    results = sweep(scenario)
    assert results[0].relative_difference == Fraction(-1, 128)
    assert results[-1].relative_difference == Fraction(11129, 6016)

    crossover = find_crossover(scenario.machine_regular, scenario.machine_snapfaas, scenario.mix)
    assert crossover == Fraction(45, 11174)

    small = read_scenario()
    assert crossover < find_crossover(small.machine_regular, small.machine_snapfaas, small.mix)


def test_find_crossover_edges(scenario: Scenario) -> None:
    # Same slots: the snapshot restores win from the start
    assert find_crossover(scenario.machine_regular, scenario.machine_regular, scenario.mix) == Fraction(0)

    # Cold starts as slow as the regular boots never catch up
    mix = dataclasses.replace(scenario.mix, snapfaas_cold_service_us=scenario.mix.regular_cold_service_us)
    assert find_crossover(scenario.machine_regular, scenario.machine_snapfaas, mix) == Fraction(1)


@pytest.mark.parametrize("cold_fraction", [Fraction(0), Fraction(3, 10), Fraction(1)])
def test_simulate_throughput_des(scenario: Scenario, cold_fraction: Fraction) -> None:
    mix = dataclasses.replace(scenario.mix, cold_fraction=cold_fraction)

    closed_form = simulate_throughput(scenario.machine_regular, scenario.machine_snapfaas, mix)
    regular, snapfaas = simulate_throughput_des(
        scenario.machine_regular, scenario.machine_snapfaas, mix, requests_per_slot=1000
    )

    assert regular == pytest.approx(float(closed_form.requests_per_second_regular), rel=0.02)
    assert snapfaas == pytest.approx(float(closed_form.requests_per_second_snapfaas), rel=0.02)


def test_no_capacity(scenario: Scenario) -> None:
    machine = MachineSpec(total_memory_bytes=1024, per_instance_memory_bytes=2048)

    with pytest.raises(NoCapacity):
        simulate_throughput(machine, scenario.machine_snapfaas, scenario.mix)

    with pytest.raises(NoCapacity):
        MachineSpec(1024, 0).check_capacity("regular")


def test_workload_mix_invariants() -> None:
    with pytest.raises(InvariantViolation):
        WorkloadMix(Fraction(2), Fraction(1), Fraction(2), Fraction(2))

    with pytest.raises(InvariantViolation):
        WorkloadMix(Fraction(0), Fraction(3), Fraction(2), Fraction(4))


def test_write_sweep(tmp_path: pathlib.Path, scenario: Scenario) -> None:
    filepath = write_sweep(sweep(scenario), tmp_path)
    content = filepath.read_bytes()

    lines = content.decode().split("\r\n")
    assert lines[0] == "cold_fraction,tput_regular,tput_snapfaas,rel_diff"
    assert lines[1] == "0.0000,8.888889,6.666667,-0.250000"
    assert len(lines) == 23

    write_sweep(sweep(scenario), tmp_path)
    assert filepath.read_bytes() == content
