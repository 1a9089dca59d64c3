"""Cross-validation of the reduction on random instances.

For each instance ``(M, f)`` the harness checks ``f`` on ``M``, compiles
``M``, unfolds the result, checks the next-duplicated formula there and
records whether the verdicts agree. Instance ``i`` of seed ``s`` is drawn
from ``random.Random(f"{s}:{i}")`` so any record can be rebuilt on its own.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
import random
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import networkx as nx
from pydantic import BaseModel

from .checker import CheckConfig, check
from .errors import ResourceError
from .formats import dumps_icgs, load_icgs, save_icgs
from .generate import SHAPES, LabelStyle, shaped_formula, random_icgs
from .logic import Dialect, Formula, duplicate_next, parse_formula, print_formula
from .model import ICGS
from .observability import inc_xval_disagreement
from .reduction import ENVIRONMENT, ActionMemory, InitialLabelMode, LabelMode, ReductionConfig, compile_icgs
from .vcgs import UNFOLD_STATE_BOUND, VCGS, Exploration, explore

logger = logging.getLogger(__name__)

XVAL_MAX_PROFILES = int(os.getenv("XVAL_MAX_PROFILES", "4096"))


class XValSettings(BaseModel):
    seed: int = 0
    count: int = 20
    config: ReductionConfig = ReductionConfig()
    max_states: int = 4
    max_agents: int = 2
    max_actions: int = 2
    labels: LabelStyle = LabelStyle.RANDOM
    bound: int = UNFOLD_STATE_BOUND
    max_profiles: int = XVAL_MAX_PROFILES


class XValRecord(BaseModel):
    index: int
    seed: int
    digest: str
    formula: str
    transformed: str
    config: ReductionConfig
    verdict_model: bool | None = None
    verdict_reduced: bool | None = None
    agreement: bool | None = None
    skipped: bool = False
    reason: str | None = None


class XValReport(BaseModel):
    seed: int
    count: int
    config: ReductionConfig
    records: list[XValRecord]
    agreement_rate: float | None
    evaluated: int
    skipped: int
    disagreements: int

    def rate_text(self) -> str:
        return "n/a" if self.agreement_rate is None else f"{self.agreement_rate:.3f}"


class CalibrationEntry(BaseModel):
    config: ReductionConfig
    agreement_rate: float | None
    evaluated: int
    skipped: int
    disagreements: int


class CalibrationReport(BaseModel):
    seed: int
    count: int
    entries: list[CalibrationEntry]

    @property
    def best(self) -> list[ReductionConfig]:
        return [e.config for e in self.entries if e.agreement_rate == 1.0]


def digest(m: ICGS) -> str:
    return hashlib.sha256(dumps_icgs(m).encode()).hexdigest()[:16]


def instance(settings: XValSettings, index: int) -> tuple[ICGS, Formula]:
    rng = random.Random(f"{settings.seed}:{index}")
    states = rng.randint(1, settings.max_states)
    m = random_icgs(
        rng,
        states=states,
        agents=rng.randint(1, settings.max_agents),
        actions=rng.randint(1, settings.max_actions),
        classes=rng.randint(1, states),
        labels=settings.labels,
    )
    f = shaped_formula(rng, SHAPES[index % len(SHAPES)], m.agents, m.props)
    return m, f


def evaluate_instance(
    m: ICGS,
    f: Formula,
    config: ReductionConfig,
    *,
    index: int = 0,
    seed: int = 0,
    bound: int = UNFOLD_STATE_BOUND,
    max_profiles: int = XVAL_MAX_PROFILES,
) -> XValRecord:
    transformed = duplicate_next(f, Dialect.ATL)
    record = XValRecord(
        index=index,
        seed=seed,
        digest=digest(m),
        formula=print_formula(f),
        transformed=print_formula(transformed),
        config=config,
    )
    cfg = CheckConfig(dialect=Dialect.ATL, max_profiles=max_profiles)
    try:
        verdict_model, _, _ = check(m, f, cfg)
        reduced = explore(compile_icgs(m, config), bound).icgs
        verdict_reduced, _, _ = check(reduced, transformed, cfg)
    except ResourceError as exc:
        return record.model_copy(update={"skipped": True, "reason": str(exc)})
    return record.model_copy(
        update={
            "verdict_model": verdict_model,
            "verdict_reduced": verdict_reduced,
            "agreement": verdict_model == verdict_reduced,
        }
    )


def _run_index(settings: XValSettings, index: int) -> XValRecord:
    m, f = instance(settings, index)
    return evaluate_instance(
        m,
        f,
        settings.config,
        index=index,
        seed=settings.seed,
        bound=settings.bound,
        max_profiles=settings.max_profiles,
    )


def write_bundle(directory: Path, m: ICGS, record: XValRecord) -> Path:
    target = directory / f"{record.seed}-{record.index:04d}"
    target.mkdir(parents=True, exist_ok=True)
    save_icgs(m, target / "model.icgs")
    (target / "record.json").write_text(record.model_dump_json(indent=2))
    return target


def replay_bundle(path: str | Path) -> XValRecord:
    """Re-run a repro bundle from its files alone."""
    path = Path(path)
    m = load_icgs(path / "model.icgs")
    stored = XValRecord.model_validate(json.loads((path / "record.json").read_text()))
    f = parse_formula(stored.formula, Dialect.ATL)
    return evaluate_instance(m, f, stored.config, index=stored.index, seed=stored.seed)


def xvalidate(settings: XValSettings, *, jobs: int = 1, bundle_dir: str | Path | None = None) -> XValReport:
    indices = range(settings.count)
    if jobs > 1 and settings.count > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_index, [settings] * settings.count, indices))
    else:
        records = [_run_index(settings, i) for i in indices]

    evaluated = [r for r in records if not r.skipped]
    disagreements = [r for r in evaluated if not r.agreement]
    for r in disagreements:
        inc_xval_disagreement()
        extra = {"index": r.index, "formula": r.formula, "config": r.config.describe()}
        if bundle_dir is not None:
            m, _ = instance(settings, r.index)
            extra["bundle"] = str(write_bundle(Path(bundle_dir), m, r))
        logger.warning("verdicts disagree", extra=extra)

    rate = (len(evaluated) - len(disagreements)) / len(evaluated) if evaluated else None
    return XValReport(
        seed=settings.seed,
        count=settings.count,
        config=settings.config,
        records=records,
        agreement_rate=rate,
        evaluated=len(evaluated),
        skipped=len(records) - len(evaluated),
        disagreements=len(disagreements),
    )


def calibrate(settings: XValSettings, *, jobs: int = 1) -> CalibrationReport:
    """Cross-validate every label, initial-label and action-memory combination on the same instances."""
    entries = []
    for label_mode, initial_mode, memory in itertools.product(LabelMode, InitialLabelMode, ActionMemory):
        config = settings.config.model_copy(
            update={"label_mode": label_mode, "initial_label_mode": initial_mode, "action_memory": memory}
        )
        report = xvalidate(settings.model_copy(update={"config": config}), jobs=jobs)
        entries.append(
            CalibrationEntry(
                config=config,
                agreement_rate=report.agreement_rate,
                evaluated=report.evaluated,
                skipped=report.skipped,
                disagreements=report.disagreements,
            )
        )
    return CalibrationReport(seed=settings.seed, count=settings.count, entries=entries)


# ---------------------------------------------------------------------------
# Structural fidelity
# ---------------------------------------------------------------------------

def model_state(g, prefix: str = "st.") -> str | None:
    """The model state a global state encodes, when exactly one state atom is true."""
    found = [atom[len(prefix):] for atom in g.valuation if atom.startswith(prefix)]
    return found[0] if len(found) == 1 else None


def macro_quotient(exploration: Exploration, environment: str = ENVIRONMENT) -> nx.DiGraph:
    """Contract the unfolded game to its environment-transition ticks."""
    icgs = exploration.icgs
    position = icgs.agents.index(environment)
    graph = nx.DiGraph()
    for g in icgs.states:
        s = model_state(exploration.globals[g])
        if s is not None:
            graph.add_node(s)
    for (g, joint), h in icgs.transition.items():
        if joint[position].startswith("tr."):
            source = model_state(exploration.globals[g])
            target = model_state(exploration.globals[h])
            if source is not None and target is not None:
                graph.add_edge(source, target)
    return graph


def is_faithful(m: ICGS, exploration: Exploration) -> bool:
    """The quotient has exactly the reachable states and edges of ``m``."""
    reference = m.transition_graph().subgraph(m.reachable_states())
    quotient = macro_quotient(exploration)
    return (
        set(quotient.nodes) == set(reference.nodes)
        and set(quotient.edges) == set(reference.edges)
        and nx.is_isomorphic(quotient, reference)
    )


def observation_partition_matches(v: VCGS, m: ICGS, exploration: Exploration, agent: str) -> bool:
    """What ``agent`` sees of the environment's atoms partitions the reachable states as its classes do."""
    owned = set(v.spec(agent).atoms)
    keys: dict[str, set] = {}
    for g in exploration.globals.values():
        s = model_state(g)
        if s is None:
            continue
        seen = {atom for atom, observer in g.visible if observer == agent} - owned
        keys.setdefault(s, set()).add(frozenset((atom, atom in g.valuation) for atom in seen))
    if any(len(k) != 1 for k in keys.values()):
        return False
    groups: dict[frozenset, set[str]] = {}
    for s, (key,) in ((s, tuple(k)) for s, k in keys.items()):
        groups.setdefault(key, set()).add(s)
    observed = {frozenset(block) for block in groups.values()}
    reachable = set(keys)
    expected = {
        frozenset(set(block) & reachable) for block in m.indist[agent] if set(block) & reachable
    }
    return observed == expected
