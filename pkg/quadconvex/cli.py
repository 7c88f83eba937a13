"""Command line driver for quadconvex."""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys

import colorlog
import voluptuous as vol

from .client import (
    QuadMapClient,
    QuadMapClientError,
    QuadMapClientIndeterminateError,
    QuadMapClientInputError,
    QuadMapClientNotDefiniteError,
    QuadMapClientNotFoundError,
    QuadMapClientTrivialBError,
    QuadMapClientUnboundedError,
    json_example_folders,
)
from .const import (
    EXIT_FAILURE,
    EXIT_INDETERMINATE,
    EXIT_INFEASIBLE,
    EXIT_INPUT,
    EXIT_NOT_DEFINITE,
    EXIT_OK,
    EXIT_TRIVIAL_B,
    EXIT_UNBOUNDED,
    LOGGER,
    NAME,
    VALID_RAYS,
    VALID_REAL,
    VALID_RESTARTS,
    VALID_SEED,
    VALID_TOLERANCE,
    VERSION,
)
from .report import AnalysisReport

_LOGGER = LOGGER

EXIT_CODES: dict[type[QuadMapClientError], int] = {
    QuadMapClientInputError: EXIT_INPUT,
    QuadMapClientIndeterminateError: EXIT_INDETERMINATE,
    QuadMapClientUnboundedError: EXIT_UNBOUNDED,
    QuadMapClientTrivialBError: EXIT_TRIVIAL_B,
    QuadMapClientNotDefiniteError: EXIT_NOT_DEFINITE,
    QuadMapClientNotFoundError: EXIT_NOT_DEFINITE,
}
STATUS_CODES: dict[str, int] = {
    "ok": EXIT_OK,
    "none": EXIT_OK,
    "infeasible": EXIT_INFEASIBLE,
    "certified": EXIT_FAILURE,
    "mismatch": EXIT_FAILURE,
}


class _Parser(argparse.ArgumentParser):
    """Argument parser exiting with the input error code instead of 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _validated(schema, value, name: str):
    try:
        return schema(value)
    except vol.Invalid as err:
        raise QuadMapClientInputError(f"Invalid {name} {value!r}: {err.error_message}") from err


def _vector(text: str | None, name: str) -> list[float] | None:
    if text is None:
        return None
    return [_validated(VALID_REAL, item, name) for item in text.replace(";", ",").split(",")]


def _fixed(items: list[str]) -> dict[int, float]:
    """Parse K=VALUE items with 1-based coordinate K."""
    fixed = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip().isdigit() or int(key) < 1:
            raise QuadMapClientInputError(f"Invalid section coordinate {item!r}, expected K=VALUE")
        fixed[int(key) - 1] = _validated(VALID_REAL, value, "section value")
    return fixed


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with all subcommands."""
    parser = _Parser(prog=NAME, description="Convexity analysis of images of quadratic maps.")
    parser.add_argument("--version", action="version", version=f"{NAME} {VERSION}")
    parser.add_argument("--tol-rank", help="Relative eigenvalue threshold for rank decisions")
    parser.add_argument("--tol-feas", help="Feasibility tolerance of the SDP solver")
    parser.add_argument("--seed", default="0", help="Default random seed")
    parser.add_argument("--json-out", metavar="PATH", help="Also write the report to PATH")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Explicit log level, overrides -v",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("validate", help="Check a map file")
    cmd.add_argument("map_file")

    cmd = commands.add_parser("feasible", help="Search an infeasibility certificate for y0")
    cmd.add_argument("map_file")
    cmd.add_argument("y0", nargs="?", help="Comma separated image point")
    cmd.add_argument("--self-check", type=int, default=0, metavar="N", help="Check N random images f(x)")
    cmd.add_argument("--seed", dest="cmd_seed")

    for name, text in (
        ("boundary", "Boundary point of G along d from y"),
        ("support", "Supporting normal of G along d from y"),
    ):
        cmd = commands.add_parser(name, help=text)
        cmd.add_argument("map_file")
        cmd.add_argument("y", help="Comma separated base point")
        cmd.add_argument("d", help="Comma separated direction")

    cmd = commands.add_parser("certify", help="Search a non-convexity certificate")
    cmd.add_argument("map_file")
    cmd.add_argument("--seed", dest="cmd_seed")
    cmd.add_argument("--iters", default="100")
    cmd.add_argument("--cplus", help="Comma separated definite direction")

    cmd = commands.add_parser("zmax", help="Compute z_max of the convex cut")
    cmd.add_argument("map_file")
    cmd.add_argument("--cplus", help="Comma separated definite direction")
    cmd.add_argument("--seed", dest="cmd_seed")
    cmd.add_argument("--restarts", default="100")
    cmd.add_argument("--zguess")

    cmd = commands.add_parser("sweep", help="Emit a two dimensional section of G as CSV")
    cmd.add_argument("map_file")
    cmd.add_argument("--fix", action="append", default=[], metavar="K=VALUE", help="Fix coordinate y_K")
    cmd.add_argument("--rays", default="360")
    cmd.add_argument("--csv-out", metavar="PATH", help="Write the CSV to PATH instead of stdout")

    cmd = commands.add_parser("example", help="Run a bundled example against its expected values")
    cmd.add_argument("example_id")

    commands.add_parser("examples", help="List bundled examples")
    return parser


def setup_logging(verbose: int = 0, level: str | None = None) -> None:
    """Install a colored console handler on the root logger."""
    handler = colorlog.StreamHandler()
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s",
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        )
    )
    root = logging.getLogger()
    root.handlers[:] = [handler]
    if level is None:
        level = {0: "WARNING", 1: "INFO"}.get(verbose, "DEBUG")
    root.setLevel(level)


async def _dispatch(args: argparse.Namespace, client: QuadMapClient) -> tuple[AnalysisReport | None, str]:  # noqa: C901
    """Run the selected command, returning the report and extra text output."""
    command = args.command
    if command == "examples":
        return None, "\n".join(json_example_folders()) + "\n"
    if command == "example":
        return await client.async_run_example(args.example_id), ""
    seed = client.seed
    if getattr(args, "cmd_seed", None) is not None:
        seed = _validated(VALID_SEED, args.cmd_seed, "seed")
    qmap = await client.async_load_map(args.map_file)
    if command == "validate":
        return await client.async_validate(qmap), ""
    if command == "feasible":
        if args.self_check < 0:
            raise QuadMapClientInputError("--self-check must not be negative")
        return await client.async_feasible(
            qmap, _vector(args.y0, "y0"), self_check=args.self_check, seed=seed
        ), ""
    if command == "boundary":
        return await client.async_boundary(qmap, _vector(args.y, "y"), _vector(args.d, "d")), ""
    if command == "support":
        return await client.async_support(qmap, _vector(args.y, "y"), _vector(args.d, "d")), ""
    if command == "certify":
        return await client.async_certify(
            qmap,
            seed=seed,
            iters=_validated(VALID_RESTARTS, args.iters, "iteration count"),
            c_plus=_vector(args.cplus, "c_plus"),
        ), ""
    if command == "zmax":
        return await client.async_zmax(
            qmap,
            c_plus=_vector(args.cplus, "c_plus"),
            seed=seed,
            restarts=_validated(VALID_RESTARTS, args.restarts, "restart count"),
            z_guess=None if args.zguess is None else _validated(VALID_REAL, args.zguess, "z guess"),
        ), ""
    if command == "sweep":
        rays = _validated(VALID_RAYS, args.rays, "ray count")
        report, text = await client.async_sweep(qmap, _fixed(args.fix), rays)
        if args.csv_out:
            await client.async_save(args.csv_out, text)
            text = ""
        return report, text
    raise QuadMapClientInputError(f"Unknown command {command}")


async def async_main(args: argparse.Namespace) -> int:
    """Run the parsed command and return the exit code."""
    try:
        client = QuadMapClient(
            {
                "tol_rank": None
                if args.tol_rank is None
                else _validated(VALID_TOLERANCE, args.tol_rank, "rank tolerance"),
                "tol_feas": None
                if args.tol_feas is None
                else _validated(VALID_TOLERANCE, args.tol_feas, "feasibility tolerance"),
                "seed": _validated(VALID_SEED, args.seed, "seed"),
            }
        )
        report, text = await _dispatch(args, client)
    except QuadMapClientError as err:
        code = next(
            (code for cls, code in EXIT_CODES.items() if isinstance(err, cls)), EXIT_FAILURE
        )
        _LOGGER.error("%s", err)
        print(f"{NAME}: {err}", file=sys.stderr)
        return code
    if text:
        sys.stdout.write(text)
    if report is None:
        return EXIT_OK
    if not text:
        sys.stdout.write(report.to_json() + "\n")
    if args.json_out:
        try:
            await client.async_save(args.json_out, report.to_json() + "\n")
        except QuadMapClientError as err:
            print(f"{NAME}: {err}", file=sys.stderr)
            return EXIT_INPUT
    return STATUS_CODES.get(report.status, EXIT_FAILURE)


def main(argv: list[str] | None = None) -> int:
    """Console entry point."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.log_level)
    return asyncio.run(async_main(args))


if __name__ == "__main__":
    raise SystemExit(main())
