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

__all__ = ["run_snapfaas"]

import asyncio
import json
import pathlib
import sys
import typing

from PySide6.QtCore import QCommandLineOption, QCommandLineParser, QCoreApplication

from .constants import DEFAULT_JITTER_READS, DEFAULT_REQUEST_SEED, MANIFEST_FILE_NAME
from .enums import StrategyId
from .errors import EXIT_CODE_IO, EXIT_CODE_SUCCESS, EXIT_CODE_VIOLATION, SnapFaasError
from .guest import JitterConfig
from .harness import Harness, read_bench_config, write_cow_ratio
from .report import ReportFormat, emit_report, read_records, write_records
from .throughput import find_crossover, read_scenario, sweep, write_sweep
from .utils import set_log

RECORDS_FILE_NAME = "records.json"

# Command and the number of its positional arguments
COMMANDS = {
    "gen-base": 2,
    "register": 2,
    "invoke": 1,
    "bench": 1,
    "cow-ratio": 1,
    "throughput": 1,
    "report": 1,
}


def run_snapfaas() -> None:
    """Run the SnapFaaS command line application."""

    application = QCoreApplication(sys.argv)
    application.setApplicationName("run_snapfaas")

    parser, options = create_parser()
    parser.process(application)

    sys.exit(main(parser, options))


def create_parser() -> tuple[QCommandLineParser, dict[str, QCommandLineOption]]:
    """Create the command line parser.

    Returns
    -------
    parser : `PySide6.QtCore.QCommandLineParser`
        Command line parser.
    `dict` [`str`, `PySide6.QtCore.QCommandLineOption`]
        Command line options.
    """

    parser = QCommandLineParser()
    parser.setApplicationDescription(
        "Generate snapshots of functions and benchmark the cold-start strategies.\n\n"
        "Commands:\n"
        "  gen-base <spec> <dir>      Generate the base snapshot of the language.\n"
        "  register <spec> <dir>      Register the function and write its artifacts.\n"
        "  invoke <manifest>          Cold start the function and serve one request.\n"
        "  bench <config>             Run the bench and write the report.\n"
        "  cow-ratio <dir>            Report the copy-on-write share of the registered functions.\n"
        "  throughput <scenario>      Sweep the throughput of both modes.\n"
        "  report <records>           Write the report tables of the bench records."
    )
    parser.addHelpOption()
    parser.addPositionalArgument("command", "Command to run.")
    parser.addPositionalArgument("arguments", "Arguments of the command.", "[arguments...]")

    options = {
        "verbose": QCommandLineOption(["v", "verbose"], "Print log messages to terminal."),
        "debuglevel": QCommandLineOption(
            ["d", "debuglevel"],
            (
                "Debug logging level: CRITICAL (50), ERROR (40), WARNING (30), "
                "INFO (20), DEBUG (10), NOTSET (0). The default is 20."
            ),
            "level",
            "20",
        ),
        "no-logfile": QCommandLineOption(["no-logfile"], "Do not write log messages to file."),
        "gen-base": QCommandLineOption(["gen-base"], "Generate the base snapshot if there is none."),
        "base-store": QCommandLineOption(
            ["base-store"], "Directory of the base snapshots. The default is <dir>/bases.", "dir"
        ),
        "seed": QCommandLineOption(
            ["seed"],
            f"Request seed. The default is the working set seed, or {DEFAULT_REQUEST_SEED} at registration.",
            "seed",
        ),
        "strategy": QCommandLineOption(
            ["strategy"],
            f"Cold-start strategy: {', '.join(strategy.value for strategy in StrategyId)}.",
            "strategy",
            StrategyId.SnapFaas.value,
        ),
        "jitter": QCommandLineOption(["jitter"], "Add seeded extra reads to the execution."),
        "out": QCommandLineOption(["o", "out"], "Output directory.", "dir"),
        "format": QCommandLineOption(["format"], "Report format: csv or json.", "format"),
    }
    for option in options.values():
        parser.addOption(option)

    return parser, options


def main(parser: QCommandLineParser, options: dict[str, QCommandLineOption]) -> int:
    """Main application.

    Parameters
    ----------
    parser : `PySide6.QtCore.QCommandLineParser`
        Processed command line parser.
    options : `dict` [`str`, `PySide6.QtCore.QCommandLineOption`]
        Command line options.

    Returns
    -------
    `int`
        Exit code.
    """

    log = set_log(
        "snapfaas",
        not parser.isSet(options["no-logfile"]),
        parser.isSet(options["verbose"]),
        int(parser.value(options["debuglevel"])),
    )

    arguments = parser.positionalArguments()
    if (not arguments) or (arguments[0] not in COMMANDS) or (len(arguments) - 1 != COMMANDS[arguments[0]]):
        print(parser.helpText(), file=sys.stderr)
        return EXIT_CODE_VIOLATION

    command, *values = arguments
    harness = Harness(log)

    try:
        result = _run_command(harness, command, values, parser, options)
    except SnapFaasError as error:
        return _fail(harness, f"{command} failed: {error!r}.", error.exit_code)
    except OSError as error:
        return _fail(harness, f"{command} failed: {error!r}.", EXIT_CODE_IO)
    except ValueError as error:
        return _fail(harness, f"{command} has a wrong argument: {error!r}.", EXIT_CODE_VIOLATION)

    if result is not None:
        print(json.dumps(result, indent=2))

    return EXIT_CODE_SUCCESS


def _value(parser: QCommandLineParser, option: QCommandLineOption) -> str | None:
    return parser.value(option) if parser.isSet(option) else None


def _run_command(
    harness: Harness,
    command: str,
    values: list[str],
    parser: QCommandLineParser,
    options: dict[str, QCommandLineOption],
) -> dict[str, typing.Any] | None:
    """Run the command.

    Returns
    -------
    `dict` or None
        Result printed on the standard output.
    """

    seed = _value(parser, options["seed"])
    out = _value(parser, options["out"])

    match command:
        case "gen-base":
            base, directory = harness.gen_base(values[0], values[1])
            return {"base_id": base.id, "base": str(directory)}

        case "register":
            artifacts = harness.register_function(
                values[0],
                values[1],
                base_store=_value(parser, options["base-store"]),
                gen_base=parser.isSet(options["gen-base"]),
                request_seed=DEFAULT_REQUEST_SEED if seed is None else int(seed),
            )
            return {"function": artifacts.function, "manifest": str(artifacts.manifest_path)}

        case "invoke":
            jitter = (
                JitterConfig(seed=0, reads=DEFAULT_JITTER_READS) if parser.isSet(options["jitter"]) else None
            )
            return harness.invoke_function(
                values[0],
                StrategyId(parser.value(options["strategy"])),
                request_seed=None if seed is None else int(seed),
                jitter=jitter,
            )

        case "bench":
            config = read_bench_config(values[0])
            output_dir = pathlib.Path("." if out is None else out)
            report_format = _value(parser, options["format"]) or config.report_format.value

            records = asyncio.run(harness.run_bench(config))
            write_records(records, _mkdir(output_dir) / RECORDS_FILE_NAME)
            filepaths = emit_report(records, report_format, output_dir)

            return {"records": len(records), "files": [str(filepath) for filepath in filepaths]}

        case "cow-ratio":
            directory = pathlib.Path(values[0])
            manifests = sorted(directory.glob(f"*/{MANIFEST_FILE_NAME}"))
            table = harness.cow_ratio_report(manifests)
            filepath = write_cow_ratio(table, directory if out is None else out)

            return {"functions": len(manifests), "file": str(filepath)}

        case "throughput":
            scenario = read_scenario(values[0])
            filepath = write_sweep(sweep(scenario), "." if out is None else out)
            crossover = find_crossover(scenario.machine_regular, scenario.machine_snapfaas, scenario.mix)

            return {"file": str(filepath), "crossover": f"{float(crossover):.4f}"}

        case "report":
            records = read_records(values[0])
            report_format = _value(parser, options["format"]) or ReportFormat.CSV.value
            output_dir = pathlib.Path(values[0]).parent if out is None else pathlib.Path(out)
            filepaths = emit_report(records, report_format, output_dir)

            return {"files": [str(filepath) for filepath in filepaths]}

    return None


def _mkdir(directory: pathlib.Path) -> pathlib.Path:
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _fail(harness: Harness, message: str, exit_code: int) -> int:
    harness.reporter.report_violation(message)
    print(message, file=sys.stderr)

    return exit_code
