#!/usr/bin/env python3
"""
Main entry point for the collapsible pushdown toolkit.

This module provides the ``cpk`` command line interface. Results go to
stdout; logging goes to stderr and, optionally, to a log file.
Can be run as: python -m collapsible_pushdown
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config_loader import ConfigLoader
from .constants import BOTTOM, VERSION, ExitCode, LogMode
from .cps import ExplorationBounds, bfs_graph, label_key, load_cps, to_dot, to_text
from .errors import BudgetExceeded, CpkError, UnsupportedFormula
from .fo_eval import AutomataEvaluator, eval_sentence_bounded, format_assignment, parse_formula, solutions
from .logger import Logger
from .loops import LoopSummaries, format_relation, loops_check, parse_glyphs
from .reachability import (
    Presentation, domain_automaton, find_certificate, is_reachable, load_constraint, reach, reach_regular,
)
from .stack import format_config, format_stack, parse_config, parse_stack
from .tree_codec import decode, encode_config, encode_stack, format_tree, milestone_iso, parse_tree, validate_enctree
from .tree_ops import edge_automaton
from .validator import BoundsValidator


def _add_budget_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("budgets")
    group.add_argument("--radius", type=int, help="Exploration radius (BFS depth)")
    group.add_argument("--max-words", type=int, help="Maximum number of words in explored stacks")
    group.add_argument("--max-word-length", type=int, help="Maximum word length in explored stacks")
    group.add_argument("--max-visited", type=int, help="Maximum number of explored configurations")
    group.add_argument("--state-budget", type=int, help="Maximum number of automaton states")


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the command line argument parser."""
    parser = argparse.ArgumentParser(
        prog="cpk",
        description="Level-2 collapsible pushdown systems: exploration, tree encodings, reachability and FO queries",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  cpk explore sys1.json --radius 6
  cpk encode sys1.json --config "2|⊥:⊥ a^2@1"
  cpk reach sys1.json --from "0|⊥" --to "2|⊥:⊥"
  cpk fo sys1.json "(exists x (exists y (edge cl x y)))"
  CPK_BUDGET="max_radius=8" cpk -vv loops sys1.json --word "⊥ a^2" --check
        """
    )

    parser.add_argument("--config", dest="config_path", type=str,
                        help="Path to a JSON file with budgets and logging settings")
    parser.add_argument("--verbose", "-v", action="count", default=None,
                        help="Increase logging verbosity (use -v, -vv, -vvv)")
    parser.add_argument("--log-mode", choices=["console", "file", "both"], default=None,
                        help="Logging output mode")
    parser.add_argument("--log-path", type=str, default=None, help="Log file path")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")

    budgets = argparse.ArgumentParser(add_help=False)
    _add_budget_flags(budgets)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    explore = commands.add_parser("explore", parents=[budgets], help="Breadth-first exploration of the configuration graph")
    explore.add_argument("system", help="System JSON file")
    explore.add_argument("--format", choices=["dot", "text"], default="text", help="Output format")

    encode = commands.add_parser("encode", parents=[budgets], help="Print the tree encoding of a configuration")
    encode.add_argument("system", help="System JSON file")
    encode.add_argument("--config", dest="configuration", required=True, help="Configuration text 'q|stack'")

    decode_cmd = commands.add_parser("decode", parents=[budgets], help="Decode tree text to a configuration")
    decode_cmd.add_argument("tree", help="Tree text file")
    decode_cmd.add_argument("--system", help="System JSON file (for the bottom symbol and states)")

    check = commands.add_parser("check-tree", parents=[budgets], help="Report violations of the encoding conditions")
    check.add_argument("tree", help="Tree text file")
    check.add_argument("--system", help="System JSON file (for the bottom symbol and states)")

    stones = commands.add_parser("milestones", parents=[budgets], help="List the milestones of a stack")
    stones.add_argument("system", help="System JSON file")
    stones.add_argument("--stack", required=True, help="Stack text")

    loops = commands.add_parser("loops", parents=[budgets], help="Loop summary of a projected top word")
    loops.add_argument("system", help="System JSON file")
    loops.add_argument("--word", required=True, help="Projected top word, e.g. '⊥ a^2'")
    loops.add_argument("--check", action="store_true", help="Cross-check against the bounded search")
    loops.add_argument("--dump", action="store_true", help="Also print every memoised summary")

    reachable = commands.add_parser("reachable", parents=[budgets], help="Is a configuration reachable from the initial one")
    reachable.add_argument("system", help="System JSON file")
    reachable.add_argument("--config", dest="configuration", required=True, help="Configuration text 'q|stack'")
    reachable.add_argument("--certificate", action="store_true", help="Print a certificate when reachable")

    for name, text in (("reach", "Is there a run between two configurations"),
                       ("reachr", "Is there a run whose transition names the constraint accepts")):
        sub = commands.add_parser(name, parents=[budgets], help=text)
        sub.add_argument("system", help="System JSON file")
        sub.add_argument("--from", dest="source", required=True, help="Source configuration 'q|stack'")
        sub.add_argument("--to", dest="target", required=True, help="Target configuration 'q|stack'")
        if name == "reachr":
            sub.add_argument("--constraint", required=True, help="Constraint JSON file")

    fo = commands.add_parser("fo", parents=[budgets], help="Evaluate a first-order sentence or list solutions")
    fo.add_argument("system", help="System JSON file")
    fo.add_argument("formula", help="Formula in s-expression syntax")
    fo.add_argument("--solutions", action="store_true", help="List satisfying assignments of the free variables")
    fo.add_argument("--bounded", action="store_true", help="Use the bounded backend for sentences")
    fo.add_argument("--bound", type=int, help="Encoding size bound of the bounded backend")
    fo.add_argument("--constraint", action="append", default=[], metavar="NAME=FILE",
                    help="Named constraint for reachr atoms (repeatable)")

    automata = commands.add_parser("automata", parents=[budgets], help="Dump relation or domain automata")
    automata.add_argument("system", help="System JSON file")
    automata.add_argument("--kind", choices=["edge", "domain"], default="edge", help="Which automaton")
    automata.add_argument("--label", action="append", default=[], metavar="NAME",
                          help="Transition name to restrict the edge automaton to (repeatable)")

    return parser


def load_and_validate_config(config_path: Optional[str], cli_args: Dict[str, Any]) -> Dict[str, Any]:
    """
    Load configuration from file, environment and CLI arguments, then validate.

    Raises:
        ValueError: if the configuration is invalid
    """
    config = ConfigLoader().load_and_prepare_config(config_path, cli_args)
    result = BoundsValidator().validate(config)
    if not result.is_valid:
        raise ValueError("Configuration validation failed: " + "; ".join(result.errors))
    return config


def _read_text(path: str) -> str:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    return file_path.read_text(encoding='utf-8')


def _boolean(answer: bool, out: List[str]) -> int:
    out.append("true" if answer else "false")
    return ExitCode.OK.value if answer else ExitCode.FALSE.value


def _constraints(entries: List[str], spec) -> Dict[str, Any]:
    named = {}
    for entry in entries:
        name, sep, path = entry.partition('=')
        if not sep or not name:
            raise ValueError(f"constraint must be NAME=FILE, got {entry!r}")
        named[name] = load_constraint(path, spec)
    return named


def run_command(args: argparse.Namespace, config: Dict[str, Any], logger: Logger, out: List[str]) -> int:
    """Execute one command, appending output lines to ``out``; returns the exit code."""
    command = args.command

    if command in ("decode", "check-tree"):
        spec = load_cps(args.system, logger) if args.system else None
        bottom = spec.bottom if spec else BOTTOM
        t = parse_tree(_read_text(args.tree))
        if command == "decode":
            out.append(format_config(decode(t, bottom)))
            return ExitCode.OK.value
        violations = validate_enctree(t, bottom, spec.states if spec else None)
        for v in violations:
            out.append(f"condition {v.condition} at {v.address or '.'}: {v.message}")
        if not violations:
            out.append("valid")
        return ExitCode.FALSE.value if violations else ExitCode.OK.value

    spec = load_cps(args.system, logger)
    bounds = ExplorationBounds.from_config(config)
    logger.debug(f"loaded system with {len(spec.states)} states and {len(spec.rules)} rules")

    if command == "explore":
        g = bfs_graph(spec, bounds, logger=logger)
        if g.truncated:
            logger.warning("exploration hit its bounds; the graph is a fragment")
        render = to_dot if args.format == "dot" else to_text
        out.append(render(g, spec.label_names()).rstrip("\n"))
        return ExitCode.OK.value

    if command == "encode":
        out.append(format_tree(encode_config(parse_config(args.configuration, spec.bottom))).rstrip("\n"))
        return ExitCode.OK.value

    if command == "milestones":
        s = parse_stack(args.stack, spec.bottom)
        for address, m in milestone_iso(encode_stack(s)):
            out.append(f"{address or '.'}\t{format_stack(m)}")
        return ExitCode.OK.value

    if command == "loops":
        summaries = LoopSummaries(spec, config, logger)
        glyphs = parse_glyphs(args.word)
        code = ExitCode.OK.value
        if args.check:
            summary, oracle = loops_check(spec, glyphs, bounds, summaries)
            out.append(f"summary {format_relation(summary)}")
            out.append(f"oracle  {format_relation(oracle)}")
            agree = summary == oracle
            out.append("agree" if agree else "DISAGREE")
            code = ExitCode.OK.value if agree else ExitCode.FALSE.value
        else:
            out.append(format_relation(summaries.loops(glyphs)))
        if args.dump:
            out.append(summaries.dump_table().rstrip("\n"))
        return code

    if command == "reachable":
        c = parse_config(args.configuration, spec.bottom)
        pres = Presentation(spec, config, logger)
        if args.certificate:
            certificate = find_certificate(spec, c, pres)
            code = _boolean(certificate is not None, out)
            for address, state in sorted((certificate or {}).items()):
                out.append(f"{address} {state}")
            return code
        return _boolean(is_reachable(spec, c, pres), out)

    if command == "reach":
        c1 = parse_config(args.source, spec.bottom)
        c2 = parse_config(args.target, spec.bottom)
        return _boolean(reach(spec, c1, c2, config=config, logger=logger), out)

    if command == "reachr":
        c1 = parse_config(args.source, spec.bottom)
        c2 = parse_config(args.target, spec.bottom)
        constraint = load_constraint(args.constraint, spec)
        return _boolean(reach_regular(spec, c1, c2, constraint, config, logger), out)

    if command == "fo":
        constraints = _constraints(args.constraint, spec)
        phi = parse_formula(args.formula, spec, constraints)
        if args.solutions:
            found = solutions(spec, phi, config['fo_bound'], constraints, config, logger)
            out.extend(format_assignment(env) for env in found)
            return ExitCode.OK.value if found else ExitCode.FALSE.value
        if args.bounded:
            verdict = eval_sentence_bounded(spec, phi, config['fo_bound'], constraints, config, logger)
        else:
            evaluator = AutomataEvaluator(spec, constraints, config, logger)
            verdict = evaluator.evaluate(phi)
        out.append(str(verdict))
        return ExitCode.OK.value if verdict.value else ExitCode.FALSE.value

    if command == "automata":
        if args.kind == "domain":
            automaton = domain_automaton(spec, config=config, logger=logger).trim()
        else:
            labels = None
            if args.label:
                labels = sorted({rule.label for name in args.label for rule in spec.rules_named(name)},
                                key=label_key)
            automaton = edge_automaton(spec, labels, logger)
        out.append(automaton.renumber().dump().rstrip("\n"))
        return ExitCode.OK.value

    raise ValueError(f"unknown command {command!r}")


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args(argv)

    cli_args = {
        "radius": args.radius,
        "max_words": args.max_words,
        "max_word_length": args.max_word_length,
        "max_visited": args.max_visited,
        "state_budget": args.state_budget,
        "bound": getattr(args, "bound", None),
        "log_mode": args.log_mode,
        "log_path": args.log_path,
        "verbose": args.verbose,
    }
    cli_args = {k: v for k, v in cli_args.items() if v is not None}

    try:
        config = load_and_validate_config(args.config_path, cli_args)
    except (OSError, ValueError) as e:
        print(f"Error loading configuration: {e}", file=sys.stderr)
        return ExitCode.INPUT_ERROR.value

    logger = Logger(config)
    out: List[str] = []
    try:
        code = run_command(args, config, logger, out)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user", file=sys.stderr)
        code = ExitCode.INTERRUPTED.value
    except BudgetExceeded as e:
        logger.error(str(e), kind=e.kind, limit=e.limit)
        if args.command == "fo":
            print("hint: lower the formula size or try --bounded", file=sys.stderr)
        code = ExitCode.BUDGET.value
    except (CpkError, OSError, ValueError) as e:
        # json.JSONDecodeError is a ValueError
        logger.error(str(e))
        if args.command == "fo" and isinstance(e, UnsupportedFormula):
            print("hint: formulas with free variables are answered by --solutions", file=sys.stderr)
        code = ExitCode.INPUT_ERROR.value

    if out:
        print("\n".join(out))

    summary = {"command": args.command, "result": out[0] if out else "", "exit_code": code}
    logger.log_summary(summary)
    logger.print_console_summary(summary)
    if config.get('log_mode') in (LogMode.FILE.value, LogMode.BOTH.value):
        logger.save_structured_logs()
    logger.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
