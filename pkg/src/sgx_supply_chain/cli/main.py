# SGX Supply Chain Toolkit
# File: cli/main.py
# Version: v1

"""Console entry point for ``sgx-supply-chain``.

Boots the same way on every invocation: ``.env`` is loaded, the process
configuration is read from ``SGXSC_*`` variables, logging goes to stderr, and
the selected command runs through :func:`_gated.wrap_command`.

Global options (``--state-dir``, ``--format``, ``--now``) are accepted before
or after the subcommand, so ``sgx-supply-chain scheduler step --now 86400``
and ``sgx-supply-chain --now 86400 scheduler step`` are the same call.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Optional, Sequence, TextIO

from dotenv import load_dotenv

from .. import __version__
from ..audit import audit_log_for
from ..config import ToolkitConfig
from ._gated import EXIT_ERROR, wrap_command
from ._metadata import COMMAND_REGISTRY, CommandMetadata, commands_in
from .commands import HANDLERS, CommandContext

__all__ = ["build_parser", "main"]

log = logging.getLogger("sgx_supply_chain.cli")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state-dir", default=argparse.SUPPRESS, help="State directory (overrides SGXSC_STATE_DIR).")
    common.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS, help="Output format (default json).")
    common.add_argument(
        "--now", type=int, default=argparse.SUPPRESS, help="Current time in epoch seconds (default: wall clock)."
    )
    common.add_argument("--log-level", default=argparse.SUPPRESS, help="Overrides SGXSC_LOG_LEVEL.")
    return common


def _leaf(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", meta: CommandMetadata, common: argparse.ArgumentParser) -> argparse.ArgumentParser:
    name = meta.leaf or meta.group
    suffix = " [writes state]" if meta.mutating else ""
    parser = sub.add_parser(name, parents=[common], help=meta.description + suffix, description=meta.description)
    parser.set_defaults(_command=meta.name)
    return parser


def _registry_parsers(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", common: argparse.ArgumentParser) -> None:
    group = sub.add_parser("registry", help="Registry snapshots and ecosystem reports.")
    leaves = group.add_subparsers(dest="_leaf", required=True)
    meta = {m.leaf: m for m in commands_in("registry")}

    p = _leaf(leaves, meta["report"], common)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--ranked", required=True, help="JSON array of package names, most popular first.")
    p.add_argument("--top", type=int, default=None, help="How many ranked packages to cover (default: all).")

    p = _leaf(leaves, meta["histogram"], common)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--roots", default=None, help="JSON array of root packages (default: every ported package).")

    p = _leaf(leaves, meta["dependents"], common)
    p.add_argument("--manifests", required=True, help="JSON Lines manifest corpus.")
    p.add_argument("--keyword", required=True)

    p = _leaf(leaves, meta["tally"], common)
    p.add_argument("--snapshot", required=True)

    p = _leaf(leaves, meta["admit"], common)
    p.add_argument("--library", required=True)
    p.add_argument("--widely-demanded", action="store_true")
    p.add_argument("--high-quality", action="store_true")
    p.add_argument("--api-stable", action="store_true")
    p.add_argument("--irreplaceable-dependency", action="store_true")
    p.add_argument("--threshold", type=int, default=None)


def _plan_parser(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", common: argparse.ArgumentParser) -> None:
    p = _leaf(sub, COMMAND_REGISTRY["plan"], common)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("--usages", default=None, help="JSON array of resource usages, or a full plan request object.")
    p.add_argument("--strip", action="append", default=None, help="Dependency to strip before porting (repeatable).")


def _repo_parsers(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", common: argparse.ArgumentParser) -> None:
    group = sub.add_parser("repo", help="Fork repositories kept under the state directory.")
    leaves = group.add_subparsers(dest="_leaf", required=True)
    meta = {m.leaf: m for m in commands_in("repo")}

    p = _leaf(leaves, meta["init"], common)
    p.add_argument("--library", required=True)
    p.add_argument("--base", required=True, help="File tree JSON of the common ancestor.")
    p.add_argument("--upstream", default=None)
    p.add_argument("--fork", default=None)
    p.add_argument("--force", action="store_true")

    p = _leaf(leaves, meta["advance"], common)
    p.add_argument("--library", required=True)
    p.add_argument("--side", choices=("upstream", "fork"), default="upstream")
    p.add_argument("--tree", required=True)
    p.add_argument("--message", default="update")

    p = _leaf(leaves, meta["resolve"], common)
    p.add_argument("--library", required=True)
    p.add_argument("--tree", required=True, help="File tree JSON of the hand-resolved merge.")
    p.add_argument("--resolver", required=True)


def _scheduler_parsers(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", common: argparse.ArgumentParser) -> None:
    group = sub.add_parser("scheduler", help="Patch caches and merge triggers.")
    leaves = group.add_subparsers(dest="_leaf", required=True)
    meta = {m.leaf: m for m in commands_in("scheduler")}

    p = _leaf(leaves, meta["ingest"], common)
    p.add_argument("--patches", required=True, help="JSON Lines patch feed.")

    _leaf(leaves, meta["step"], common)

    p = _leaf(leaves, meta["approve"], common)
    p.add_argument("--library", required=True)
    p.add_argument("--approver", required=True)

    _leaf(leaves, meta["policy"], common)
    _leaf(leaves, meta["status"], common)


def _ci_parsers(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", common: argparse.ArgumentParser) -> None:
    group = sub.add_parser("ci", help="Pipeline matrix runs and failure history.")
    leaves = group.add_subparsers(dest="_leaf", required=True)
    meta = {m.leaf: m for m in commands_in("ci")}

    p = _leaf(leaves, meta["run"], common)
    p.add_argument("--library", required=True)
    p.add_argument("--script", default=None, help="Scripted runner outcomes (JSON) instead of SGXSC_CI_RUNNER.")

    p = _leaf(leaves, meta["sweep"], common)
    p.add_argument("--library", action="append", default=None, help="Library to sweep (repeatable; default: all repos).")
    p.add_argument("--script", default=None)

    p = _leaf(leaves, meta["report"], common)
    p.add_argument("--weeks", type=int, default=None, help="Report at least this many weeks.")
    p.add_argument("--include-merges", action="store_true", help="Count merge attempts from the decision log too.")

    p = _leaf(leaves, meta["breakdown"], common)
    p.add_argument("--window-days", type=float, default=3.0)


def _svn_parser(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", common: argparse.ArgumentParser) -> None:
    group = sub.add_parser("svn", help="Security version number soundness.")
    leaves = group.add_subparsers(dest="_leaf", required=True)
    p = _leaf(leaves, COMMAND_REGISTRY["svn check"], common)
    p.add_argument("--events", required=True, help="JSON Lines version events.")
    p.add_argument("--enforce-latest-only", action="store_true", help="Retire superseded revisions before checking.")


def _audit_parser(sub: "argparse._SubParsersAction[argparse.ArgumentParser]", common: argparse.ArgumentParser) -> None:
    p = _leaf(sub, COMMAND_REGISTRY["audit"], common)
    p.add_argument("--facts", default=None, help="Call graph facts document.")
    p.add_argument("--sources", default=None, help="Source directory to extract facts from.")
    p.add_argument("--patterns", default=None, help="Pattern table mapping API names to resource kinds.")
    p.add_argument("--suffix", default=".rs", help="Source file suffix scanned under --sources.")
    p.add_argument("--sensitivity", default=None, help="JSON object: function name -> security sensitive.")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="sgx-supply-chain",
        description="Maintenance toolkit for an SGX library supply chain.",
        parents=[common],
    )
    parser.add_argument("--version", "-V", action="version", version=f"sgx-supply-chain {__version__}")
    sub = parser.add_subparsers(dest="_group", required=True)
    _registry_parsers(sub, common)
    _plan_parser(sub, common)
    _repo_parsers(sub, common)
    _scheduler_parsers(sub, common)
    _ci_parsers(sub, common)
    _svn_parser(sub, common)
    _audit_parser(sub, common)
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s - %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None, *, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help/--version.
        return int(exc.code or 0)

    config = ToolkitConfig.from_env(state_dir=getattr(args, "state_dir", None))
    _configure_logging(getattr(args, "log_level", None) or config.log_level)

    meta = COMMAND_REGISTRY.get(getattr(args, "_command", ""))
    if meta is None:  # pragma: no cover - subparsers are required
        parser.print_usage(sys.stderr)
        return EXIT_ERROR

    now = getattr(args, "now", None)
    ctx = CommandContext(config=config, now=int(time.time()) if now is None else now, format=getattr(args, "format", "json"))
    log.debug("running %s (state dir %s)", meta.name, config.state_dir)
    runner = wrap_command(meta, HANDLERS[meta.name], audit_log=audit_log_for(config), stdout=stdout, stderr=stderr)
    return runner(ctx, args)


if __name__ == "__main__":
    raise SystemExit(main())
