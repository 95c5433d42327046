"""Main entry point for the influence diagram solver."""

import argparse
import asyncio
import json
import sys

from .config import DEFAULT_JOBS, DEFAULT_METHOD, JOINTREE_MAX_MEMORY_MB, METHODS, validate_config
from .errors import InfluenceDiagramError, ModelFormatError, ResourceLimitError
from .influence_diagram import apply_no_forgetting, ensure_valid
from .log import LOG_LEVEL_MAP, get_logger, set_log_level
from .maze import MazeSpec, MazeVariant, build_maze_id, load_layout
from .model_io import diagram_to_dict, dump_model, load_model
from .solver import STATS_HEADER, solve_files
from .upper_bound import build_upper_bound_id

logger = get_logger()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_RESOURCE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _exit_code(error):
    if isinstance(error, (ModelFormatError, UsageError)):
        return EXIT_USAGE
    if isinstance(error, ResourceLimitError):
        return EXIT_RESOURCE
    return EXIT_INVALID


def cmd_solve(args):
    if args.policy_out and len(args.inputs) > 1:
        raise UsageError("--policy-out takes a single input model")
    if args.policy_out and args.method == "jointree":
        logger.warning("The jointree method builds no policy tree; --policy-out is ignored")
    reports = asyncio.run(solve_files(args.inputs, args.method, args.jobs, args.max_memory))
    status = EXIT_OK
    if args.stats and args.header:
        print(STATS_HEADER)
    for path, report in zip(args.inputs, reports):
        if isinstance(report, Exception):
            print(f"{path}: {report}", file=sys.stderr)
            status = max(status, _exit_code(report))
            continue
        meu = f"{report.meu:.9g}"
        print(meu if len(args.inputs) == 1 else f"{path}\t{meu}")
        if args.stats:
            print(report.stats_line())
        if args.policy_out and report.policy is not None:
            diagram = load_model(path)
            with open(args.policy_out, "w") as f:
                json.dump(report.policy.to_json(diagram), f, indent=2)
            logger.info(f"Wrote policy tree with {report.stats.policy} nodes to {args.policy_out}")
    return status


def cmd_maze(args):
    if args.stages < 1:
        raise UsageError("--stages must be at least 1")
    spec = MazeSpec(load_layout(args.layout), args.stages, MazeVariant(args.variant))
    diagram = build_maze_id(spec)
    if args.out:
        dump_model(diagram, args.out)
    else:
        json.dump(diagram_to_dict(diagram), sys.stdout, indent=2)
        print()
    return EXIT_OK


def cmd_bounds(args):
    diagram = load_model(args.input)
    ensure_valid(diagram)
    upper, results = build_upper_bound_id(apply_no_forgetting(diagram))

    def names(ids):
        return ", ".join(diagram.names_of(ids))

    def pair(arc):
        return [diagram.variables[arc[0]].name, diagram.variables[arc[1]].name]

    def arcs(pairs):
        return ", ".join(
            f"{diagram.variables[a].name}->{diagram.variables[b].name}" for a, b in pairs
        )

    if args.json:
        document = [
            {
                "decision": diagram.variables[r.decision].name,
                "sis": diagram.names_of(r.sis),
                "added": [pair(arc) for arc in r.added_arcs],
                "removed": [pair(arc) for arc in r.removed_arcs],
            }
            for r in reversed(results)
        ]
        print(json.dumps(document, indent=2))
    else:
        for r in reversed(results):
            print(f"{diagram.variables[r.decision].name}: {{{names(r.sis)}}}")
            print(f"  added: [{arcs(r.added_arcs)}]")
            print(f"  removed: [{arcs(r.removed_arcs)}]")
    if args.out:
        dump_model(upper, args.out)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="influence-bnb", description="Exact influence diagram solver")
    parser.add_argument(
        "--log-level", choices=[level.lower() for level in LOG_LEVEL_MAP], help="Logging level"
    )
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    solve = commands.add_parser("solve", help="Compute the maximum expected utility")
    solve.add_argument("inputs", nargs="+", help="Model file(s) in JSON format")
    solve.add_argument(
        "--method",
        choices=METHODS,
        default=DEFAULT_METHOD,
        help=f"Solver (default: {DEFAULT_METHOD})",
    )
    solve.add_argument("--stats", action="store_true", help="Print a tab-separated statistics line")
    solve.add_argument("--header", action="store_true", help="Print the statistics header first")
    solve.add_argument("--policy-out", help="Write the optimal policy tree as JSON")
    solve.add_argument(
        "--max-memory",
        type=float,
        default=JOINTREE_MAX_MEMORY_MB,
        help=f"Join tree memory budget in MB (default: {JOINTREE_MAX_MEMORY_MB:g})",
    )
    solve.add_argument(
        "--jobs", type=int, default=DEFAULT_JOBS, help="Models solved concurrently"
    )
    solve.set_defaults(handler=cmd_solve)

    maze = commands.add_parser("maze", help="Generate a maze influence diagram")
    maze.add_argument("layout", help="Layout file or name under the maze directory")
    maze.add_argument("--stages", type=int, default=2, help="Number of decision stages")
    maze.add_argument(
        "--variant", choices=[v.value for v in MazeVariant], default=MazeVariant.ORIGINAL.value
    )
    maze.add_argument("--out", help="Output model path (default: standard output)")
    maze.set_defaults(handler=cmd_maze)

    bounds = commands.add_parser("bounds", help="Show sufficient information sets")
    bounds.add_argument("input", help="Model file in JSON format")
    bounds.add_argument("--json", action="store_true", help="Print the report as JSON")
    bounds.add_argument("--out", help="Write the upper-bound diagram to this path")
    bounds.set_defaults(handler=cmd_bounds)
    return parser


def main(argv=None):
    """Main entry point for the application."""
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_log_level(args.log_level)
    try:
        validate_config()
    except EnvironmentError as e:
        logger.exception(f"Error starting application: {str(e)}")
        return EXIT_USAGE

    try:
        return args.handler(args)
    except InfluenceDiagramError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return _exit_code(e)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"{args.command} could not write its output: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
