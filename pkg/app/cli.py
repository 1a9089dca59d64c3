"""Command line: ``python -m app <command> ...``.

Exit codes: 0 success or verdict true, 1 verdict false (or disagreement), 2
usage error, 3 input error, 4 resource bound exceeded.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
import uuid
from pathlib import Path

from .checker import CheckConfig, Semantics, check
from .errors import VcgsError
from .formats import (
    dumps_icgs,
    dumps_vcgs,
    loads_icgs,
    loads_vcgs,
    looks_like_vcgs,
    save_icgs,
    save_vcgs,
    read_text,
)
from .generate import MAX_ACTIONS, MAX_AGENTS, MAX_STATES, LabelStyle, random_icgs
from .logic import Dialect, parse_formula
from .model import ICGS
from .observability import correlation_id_ctx
from .reduction import (
    ActionMemory,
    InitialLabelMode,
    LabelMode,
    ProtocolMode,
    ReductionConfig,
    compile_icgs,
    size_report,
)
from .vcgs import UNFOLD_STATE_BOUND, explore
from .xval import XValSettings, calibrate, xvalidate

logger = logging.getLogger(__name__)

LABEL_MODES = {"source": LabelMode.SOURCE, "target": LabelMode.TARGET}
LABEL_MODES.update({m.value: m for m in LabelMode})


def _reduction_config(args: argparse.Namespace) -> ReductionConfig:
    return ReductionConfig(
        label_mode=LABEL_MODES[args.label_mode],
        initial_label_mode=InitialLabelMode(args.initial_labels),
        protocol_mode=ProtocolMode(args.protocol),
        action_memory=ActionMemory(args.action_memory),
    )


def _add_reduction_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--label-mode", choices=sorted(LABEL_MODES), default="source")
    parser.add_argument(
        "--initial-labels", choices=[m.value for m in InitialLabelMode], default=InitialLabelMode.NONE.value
    )
    parser.add_argument("--protocol", choices=[m.value for m in ProtocolMode], default=ProtocolMode.FULL.value)
    parser.add_argument(
        "--action-memory",
        choices=[m.value for m in ActionMemory],
        default=ActionMemory.KEEP.value,
        help="reset: an agent forgets its last action when its turn comes back",
    )


def _add_instance_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--count", type=int, default=20)
    parser.add_argument("--states", type=int, default=4, help="largest model size")
    parser.add_argument("--agents", type=int, default=2)
    parser.add_argument("--actions", type=int, default=2)
    parser.add_argument("--labels", choices=[s.value for s in LabelStyle], default=LabelStyle.RANDOM.value)
    parser.add_argument("--bound", type=int, default=UNFOLD_STATE_BOUND)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--json", action="store_true", help="emit the report as JSON")


def _settings(args: argparse.Namespace, config: ReductionConfig) -> XValSettings:
    return XValSettings(
        seed=args.seed,
        count=args.count,
        config=config,
        max_states=min(args.states, 4),
        max_agents=min(args.agents, 2),
        max_actions=min(args.actions, 2),
        labels=LabelStyle(args.labels),
        bound=args.bound,
    )


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def load_model(path: str, bound: int = UNFOLD_STATE_BOUND) -> ICGS:
    """Read an ICGS file, or a vCGS file which is unfolded first."""
    text = read_text(path)
    if looks_like_vcgs(path, text):
        return explore(loads_vcgs(text), bound).icgs
    return loads_icgs(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_compile(args: argparse.Namespace) -> int:
    m = loads_icgs(read_text(args.model))
    v = compile_icgs(m, _reduction_config(args))
    if args.output:
        save_vcgs(v, args.output)
    else:
        sys.stdout.write(dumps_vcgs(v))
    report = size_report(v)
    stream = sys.stdout if args.output else sys.stderr
    print(f"atoms: {report.total_atoms} (+{report.props} props)", file=stream)
    for owner in report.atoms:
        print(
            f"  {owner}: {report.atoms[owner]} atoms, {report.inits(owner)} init, "
            f"{report.updates(owner)} update",
            file=stream,
        )
    return 0


def cmd_unfold(args: argparse.Namespace) -> int:
    v = loads_vcgs(read_text(args.vcgs))
    exploration = explore(v, args.bound)
    if args.output:
        save_icgs(exploration.icgs, args.output)
        stream = sys.stdout
    else:
        sys.stdout.write(dumps_icgs(exploration.icgs))
        stream = sys.stderr
    stats = exploration.stats
    print(f"states: {stats.states}  edges: {stats.edges}  initial: {stats.initial}", file=stream)
    for phase, count in stats.phases.items():
        print(f"  phase {phase}: {count}", file=stream)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    m = load_model(args.model, args.bound)
    if args.identity:
        m = m.with_identity_indist()
    dialect = Dialect(args.dialect)
    f = parse_formula(args.formula, dialect)
    cfg = CheckConfig(semantics=Semantics(args.semantics), dialect=dialect, workers=args.workers)
    verdict, per_state, witness = check(m, f, cfg, args.state or None)
    print("true" if verdict else "false")
    if len(per_state) > 1:
        for s, value in per_state.items():
            print(f"  {s}: {'true' if value else 'false'}")
    if witness is not None:
        print(f"witness: {witness}")
    return 0 if verdict else 1


def cmd_gen(args: argparse.Namespace) -> int:
    m = random_icgs(
        random.Random(args.seed),
        states=args.states,
        agents=args.agents,
        actions=args.actions,
        classes=args.classes,
        labels=LabelStyle(args.labels),
    )
    _emit(dumps_icgs(m), args.output)
    return 0


def cmd_xvalidate(args: argparse.Namespace) -> int:
    report = xvalidate(_settings(args, _reduction_config(args)), jobs=args.jobs, bundle_dir=args.bundle_dir)
    if args.json:
        print(report.model_dump_json(indent=2))
    else:
        print(f"config: {report.config.describe()}")
        print(
            f"evaluated: {report.evaluated}  skipped: {report.skipped}  "
            f"disagreements: {report.disagreements}"
        )
        print(f"agreement: {report.rate_text()}")
    return 1 if report.disagreements else 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    base = ReductionConfig(protocol_mode=ProtocolMode(args.protocol))
    report = calibrate(_settings(args, base), jobs=args.jobs)
    if args.json:
        print(report.model_dump_json(indent=2))
    else:
        for entry in report.entries:
            rate = "n/a" if entry.agreement_rate is None else f"{entry.agreement_rate:.3f}"
            print(f"{entry.config.describe():40} {rate}  ({entry.evaluated} evaluated, {entry.skipped} skipped)")
        best = report.best
        print("best: " + (", ".join(c.describe() for c in best) if best else "none"))
    return 0 if report.best else 1


def cmd_serve(args: argparse.Namespace) -> int:  # pragma: no cover - starts a server
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app", description="iCGS to vCGS reduction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile an ICGS into a vCGS")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    _add_reduction_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("unfold", help="unfold a vCGS into an explicit ICGS")
    p.add_argument("vcgs")
    p.add_argument("-o", "--output")
    p.add_argument("--bound", type=int, default=UNFOLD_STATE_BOUND)
    p.set_defaults(func=cmd_unfold)

    p = sub.add_parser("check", help="model check an ATL or ATL* formula")
    p.add_argument("model", help="ICGS file, or vCGS file (unfolded first)")
    p.add_argument("--formula", "-f", required=True)
    p.add_argument("--dialect", choices=[d.value for d in Dialect], default=Dialect.ATL.value)
    p.add_argument("--state", action="append", help="state to check (repeatable; default: initial states)")
    p.add_argument("--semantics", choices=[s.value for s in Semantics], default=Semantics.OBJECTIVE.value)
    p.add_argument("--identity", action="store_true", help="use perfect information for every agent")
    p.add_argument(
        "--workers", type=int, default=1, help="threads evaluating strategy profiles (the verdict does not depend on it)"
    )
    p.add_argument("--bound", type=int, default=UNFOLD_STATE_BOUND)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a random ICGS")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--states", type=int, default=3, choices=range(1, MAX_STATES + 1), metavar="N")
    p.add_argument("--agents", type=int, default=1, choices=range(0, MAX_AGENTS + 1), metavar="N")
    p.add_argument("--actions", type=int, default=2, choices=range(1, MAX_ACTIONS + 1), metavar="N")
    p.add_argument("--classes", type=int)
    p.add_argument("--labels", choices=[s.value for s in LabelStyle], default=LabelStyle.RANDOM.value)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("xvalidate", help="cross-validate the reduction on random instances")
    _add_instance_flags(p)
    _add_reduction_flags(p)
    p.add_argument("--bundle-dir", help="write a repro bundle for every disagreement")
    p.set_defaults(func=cmd_xvalidate)

    p = sub.add_parser("calibrate", help="rank label configurations by agreement")
    _add_instance_flags(p)
    p.add_argument("--protocol", choices=[m.value for m in ProtocolMode], default=ProtocolMode.FULL.value)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    correlation_id_ctx.set(f"run-{uuid.uuid4()}")
    try:
        return args.func(args)
    except VcgsError as exc:
        logger.error("command failed", extra={"command": args.command, "error": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
