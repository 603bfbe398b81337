"""Desk-scale reproduction of the three-phase evaluation protocol.

Simulated subjects replace the study's human subjects: each agent walks
its task's seed queries in order, accepts the top recommendation at each
selection stage with probability ``p_accept`` (seeded RNG), clicks the
first presented hit that is a task target, and stops on that click or
after exhausting its queries. The agents are a directional proxy only;
they make no claim of reproducing human behavior or the study's
p-values.

Runs are deterministic: the service gets a stepping clock, per-subject
RNG streams derive from the master seed, and seeded store fixtures are
copied into a scratch directory so fixtures are never mutated.
"""

from __future__ import annotations

import hashlib
import json
import random
import shutil
import statistics
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import HarnessError, ValidationError
from .lexicon import load_lexicon, load_stopwords
from .recommender import load_ontology
from .search_core import load_index
from .session import PHASES, SearchService, ServiceConfig, SteppingClock
from .stats import kruskal_wallis

HYPOTHESES = {
    "H1.1": "queries",
    "H1.2": "clicks",
    "H1.3": "hits",
    "H1.4": "urls",
    "H1.5": "elapsed_ms",
}
ALPHA = 0.05


@dataclass
class TaskSpec:
    task_id: str
    target_doc_ids: frozenset[int]
    seed_queries: tuple[str, ...]

    def __post_init__(self):
        if not self.target_doc_ids:
            raise ValidationError(f"task {self.task_id!r} has no target documents")
        if not self.seed_queries:
            raise ValidationError(f"task {self.task_id!r} has no seed queries")


@dataclass
class PhaseConfig:
    phase: str
    tasks: list[TaskSpec]
    subjects: int = 10
    p_accept: float = 0.8
    max_queries: int = 3

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValidationError(f"unknown phase {self.phase!r}")
        if self.subjects < 1:
            raise ValidationError("subjects must be >= 1")
        if not self.tasks:
            raise ValidationError("at least one task is required")


@dataclass
class SimulationConfig:
    """Parsed ``simulate`` configuration with paths resolved."""

    index_path: Path
    lexicon_path: Path
    stopwords_path: Path
    ontology_path: Path
    tasks: list[TaskSpec]
    seed_profiles_dir: Path | None = None
    seed_sckb_path: Path | None = None
    subjects: int = 10
    p_accept: float = 0.8
    max_queries: int = 3
    service: ServiceConfig = field(default_factory=ServiceConfig)


def load_simulation_config(path: str | Path) -> SimulationConfig:
    """Read a simulate config file; relative paths resolve against it.

    Task targets may be given as ``target_doc_ids`` or as ``target_urls``
    (resolved through the index, which also validates their existence).
    """
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def _resolve(key: str, required: bool = True) -> Path | None:
        value = data.get(key)
        if value is None:
            if required:
                raise ValidationError(f"simulation config is missing {key!r}")
            return None
        return (base / value).resolve() if not Path(value).is_absolute() else Path(value)

    index_path = _resolve("corpus_index")
    index = load_index(index_path)
    url_to_doc = {entry.url: doc_id for doc_id, entry in index.docs.items()}
    tasks = []
    for row in data.get("tasks", ()):
        doc_ids = set(row.get("target_doc_ids", ()))
        for url in row.get("target_urls", ()):
            if url not in url_to_doc:
                raise ValidationError(f"task {row.get('task_id')!r}: unknown target url {url}")
            doc_ids.add(url_to_doc[url])
        unknown = doc_ids - set(index.docs)
        if unknown:
            raise ValidationError(
                f"task {row.get('task_id')!r}: target docs not in corpus: {sorted(unknown)}"
            )
        tasks.append(
            TaskSpec(
                task_id=str(row["task_id"]),
                target_doc_ids=frozenset(doc_ids),
                seed_queries=tuple(row["seed_queries"]),
            )
        )
    service = ServiceConfig(
        shared_weight=data.get("shared_weight", 1.0),
        meta_keyword_limit=data.get("meta_keyword_limit", 5),
        sense_k=data.get("sense_k", 5),
        concept_k=data.get("concept_k", 5),
        query_cap=data.get("query_cap", 20),
        page_size=data.get("page_size", 10),
    )
    return SimulationConfig(
        index_path=index_path,
        lexicon_path=_resolve("lexicon"),
        stopwords_path=_resolve("stopwords"),
        ontology_path=_resolve("ontology"),
        tasks=tasks,
        seed_profiles_dir=_resolve("seed_profiles_dir", required=False),
        seed_sckb_path=_resolve("seed_sckb", required=False),
        subjects=data.get("subjects", 10),
        p_accept=data.get("p_accept", 0.8),
        max_queries=data.get("max_queries", 3),
        service=service,
    )


def subject_user_id(phase: str, subject: int) -> str:
    return f"{phase.lower()}-u{subject:02d}"


def _subject_seed(master_seed: int, phase: str, subject: int) -> int:
    digest = hashlib.sha256(f"{master_seed}:{phase}:{subject}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def build_phase_client(cfg: SimulationConfig, phase: str, scratch_dir: str | Path):
    """In-process HTTP client over a freshly wired service for one phase.

    Seed stores are copied into ``scratch_dir`` so the run can append to
    them without touching the fixtures. Baseline (OS3) gets no stores;
    only OS2 gets the seeded shared knowledge base.
    """
    from fastapi.testclient import TestClient  # lazy: httpx import is slow

    from .api import create_app

    store_dir = Path(scratch_dir) / f"stores-{phase.lower()}"
    profiles_dir = store_dir / "profiles"
    profiles_dir.mkdir(parents=True, exist_ok=True)
    if phase in ("OS1", "OS2") and cfg.seed_profiles_dir is not None:
        for subject in range(cfg.subjects):
            name = f"{subject_user_id(phase, subject)}.jsonl"
            source = cfg.seed_profiles_dir / name
            if source.exists():
                shutil.copy(source, profiles_dir / name)
    if phase == "OS2" and cfg.seed_sckb_path is not None and cfg.seed_sckb_path.exists():
        shutil.copy(cfg.seed_sckb_path, store_dir / "sckb.jsonl")
    service = SearchService(
        lexicon=load_lexicon(cfg.lexicon_path),
        stopwords=load_stopwords(cfg.stopwords_path),
        ontology=load_ontology(cfg.ontology_path),
        index=load_index(cfg.index_path),
        store_dir=store_dir,
        config=cfg.service,
        clock=SteppingClock(),
    )
    return TestClient(create_app(service))


def _top_choices(payload: dict) -> list[str]:
    stage = payload.get("stage")
    if stage == "senses":
        return [rows[0]["id"] for rows in payload["senses"].values() if rows]
    if stage == "metas":
        rows = payload["meta_keywords"]
        return [rows[0]["id"]] if rows else []
    if stage == "concepts":
        rows = payload["concepts"]
        return [rows[0]["id"]] if rows else []
    return []


def _run_subject_task(client, phase, user_id, task: TaskSpec, p_accept, max_queries, rng):
    response = client.post(
        "/sessions", json={"user_id": user_id, "phase": phase, "task_id": task.task_id}
    )
    if response.status_code != 200:
        raise HarnessError(f"could not create session: {response.text}")
    session_id = response.json()["session_id"]
    found = False
    for raw_query in task.seed_queries[:max_queries]:
        response = client.post(f"/sessions/{session_id}/query", json={"query": raw_query})
        if response.status_code != 200:
            continue  # the attempt still counted server-side
        payload = response.json()
        while payload.get("stage") in ("senses", "metas", "concepts"):
            stage = payload["stage"]
            chosen = _top_choices(payload) if rng.random() < p_accept else []
            response = client.post(
                f"/sessions/{session_id}/selections", json={"stage": stage, "chosen": chosen}
            )
            if response.status_code != 200:
                raise HarnessError(f"selection failed: {response.text}")
            payload = response.json()
        target = next(
            (h for h in payload.get("hits", ()) if h["doc_id"] in task.target_doc_ids), None
        )
        if target is not None:
            client.post(f"/sessions/{session_id}/clicks", json={"url": target["url"]})
            found = True
            break
    client.post(f"/sessions/{session_id}/complete", json={"found": found})
    metrics = client.get(f"/sessions/{session_id}/metrics").json()["metrics"]
    return found, metrics


def run_phase_simulation(
    cfg: SimulationConfig,
    phase: str,
    seed: int,
    client=None,
) -> list[dict]:
    """All subject/task rows for one phase; deterministic given the seed."""
    if phase not in PHASES:
        raise ValidationError(f"unknown phase {phase!r}")
    scratch = None
    if client is None:
        scratch = tempfile.mkdtemp(prefix="ctxsearch-sim-")
        client = build_phase_client(cfg, phase, scratch)
    rows = []
    try:
        for subject in range(cfg.subjects):
            rng = random.Random(_subject_seed(seed, phase, subject))
            user_id = subject_user_id(phase, subject)
            for task in cfg.tasks:
                found, metrics = _run_subject_task(
                    client, phase, user_id, task, cfg.p_accept, cfg.max_queries, rng
                )
                rows.append(
                    {
                        "phase": phase,
                        "subject": subject,
                        "user_id": user_id,
                        "task_id": task.task_id,
                        "found": found,
                        "queries": metrics["queries"],
                        "clicks": metrics["clicks"],
                        "hits": metrics["hits"],
                        "urls": metrics["urls"],
                        "elapsed_ms": metrics["elapsed_ms"],
                    }
                )
    finally:
        if scratch is not None:
            shutil.rmtree(scratch, ignore_errors=True)
    return rows


def write_rows(rows: Sequence[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_rows(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def aggregate_report(rows: Sequence[dict]) -> dict:
    """Phase comparison across H1.1-H1.5, mirroring the study's table.

    Kruskal-Wallis runs on per-subject totals across the three phases;
    a per-task section repeats the test on per-subject single-task
    values. All three phases must be present.
    """
    by_phase: dict[str, list[dict]] = {phase: [] for phase in PHASES}
    for row in rows:
        phase = row.get("phase")
        if phase not in by_phase:
            raise ValidationError(f"row has unknown phase {phase!r}")
        by_phase[phase].append(row)
    missing = [phase for phase, phase_rows in by_phase.items() if not phase_rows]
    if missing:
        raise ValidationError(f"missing phase data for: {', '.join(missing)}")

    def _subject_totals(phase_rows: list[dict], metric: str) -> list[float]:
        totals: dict[int, float] = {}
        for row in phase_rows:
            totals[row["subject"]] = totals.get(row["subject"], 0.0) + float(row[metric])
        return [totals[subject] for subject in sorted(totals)]

    report: dict = {
        "schema_version": 1,
        "alpha": ALPHA,
        "row_counts": {phase: len(by_phase[phase]) for phase in PHASES},
        "phase_aggregates": {},
        "hypotheses": {},
        "per_task": {},
    }
    for phase in PHASES:
        aggregates = {}
        for metric in HYPOTHESES.values():
            values = [float(row[metric]) for row in by_phase[phase]]
            aggregates[metric] = {
                "mean": statistics.fmean(values),
                "median": statistics.median(values),
            }
        report["phase_aggregates"][phase] = aggregates
    for hypothesis, metric in HYPOTHESES.items():
        groups = [_subject_totals(by_phase[phase], metric) for phase in PHASES]
        result = kruskal_wallis(groups)
        report["hypotheses"][hypothesis] = {
            "metric": metric,
            "H": result.statistic,
            "df": result.df,
            "p": result.pvalue,
            "significant": result.pvalue < ALPHA,
            "per_subject_totals": {phase: group for phase, group in zip(PHASES, groups)},
        }
    task_ids = sorted({row["task_id"] for row in rows})
    for task_id in task_ids:
        entry = {}
        for hypothesis, metric in HYPOTHESES.items():
            groups = []
            for phase in PHASES:
                task_rows = [r for r in by_phase[phase] if r["task_id"] == task_id]
                if not task_rows:
                    raise ValidationError(
                        f"missing phase data for task {task_id!r} in {phase}"
                    )
                groups.append([float(r[metric]) for r in sorted(task_rows, key=lambda r: r["subject"])])
            result = kruskal_wallis(groups)
            entry[hypothesis] = {
                "metric": metric,
                "H": result.statistic,
                "df": result.df,
                "p": result.pvalue,
                "significant": result.pvalue < ALPHA,
            }
        report["per_task"][task_id] = entry
    return report


def format_report_table(report: dict) -> str:
    """Plain-text rendering of the hypothesis table."""
    lines = [
        f"{'Hypothesis':<12}{'Metric':<12}{'H':>10}{'df':>4}{'p':>10}  significant",
        "-" * 60,
    ]
    for hypothesis, data in report["hypotheses"].items():
        lines.append(
            f"{hypothesis:<12}{data['metric']:<12}{data['H']:>10.3f}{data['df']:>4}"
            f"{data['p']:>10.4f}  {'yes' if data['significant'] else 'no'}"
        )
    return "\n".join(lines)
