#!/usr/bin/env python3
"""Generate the fixture corpus, lexicon, ontology, seed stores, and sim config.

Everything is deterministic; run from the repo root:

    python3 scripts/make_fixtures.py [--out fixtures]

Each of the six tasks pairs an ambiguous keyword with a dominant "wrong"
reading (many keyword-dense distractor pages) and a sparser "right"
reading that holds the target page. Tasks 4-6 are "hard": their second
seed query still matches the distractor cluster, so the baseline engine
needs the third query. The script ends with a battery of self-checks
that re-runs the retrieval pipeline and asserts the designed behavior.
"""

from __future__ import annotations

import argparse
import json
import random
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ctxsearch.behavior import build_meta_keywords
from ctxsearch.cli import default_stopwords_path
from ctxsearch.lexicon import (
    candidate_disambiguations,
    load_lexicon,
    load_stopwords,
    normalize_text,
)
from ctxsearch.profile_store import (
    PersonalProfile,
    ProfileEntry,
    SharedKnowledgeBase,
    merge_into_sckb,
    record_entry,
    save_store,
)
from ctxsearch.query_builder import build_query
from ctxsearch.recommender import load_ontology, recommend_concepts, recommend_senses
from ctxsearch.search_core import LocalSearchAdapter, index_corpus, load_corpus, save_index
from ctxsearch.stemming import stem_fixed
from ctxsearch.vectors import TermVector

PAGE_SIZE = 10
BASE_TIMESTAMP = 1_600_000_000_000


@dataclass
class TaskPlan:
    task_id: str
    keyword: str                 # raw ambiguous keyword
    hard: bool                   # does the 2nd query still hit the distractors?
    qualifier: str               # 2nd-query refinement word
    resolver: str                # 3rd-query word that splits the clusters
    wrong_gloss: str
    right_gloss: str
    wrong_synonyms: str
    right_synonyms: str
    wrong_terms: list[str]       # distractor vocabulary (includes gloss words)
    right_terms: list[str]       # target-cluster vocabulary
    target_title: str
    target_metas: list[str]      # raw meta keyword phrases on the target page
    wrong_title: str
    wrong_concept: tuple[str, str, list[str]]
    right_concept: tuple[str, str, list[str]]

    @property
    def seed_queries(self) -> list[str]:
        return [
            self.keyword,
            f"{self.keyword} {self.qualifier}",
            f"{self.keyword} {self.qualifier} {self.resolver}",
        ]


TASKS = [
    TaskPlan(
        task_id="t1-java",
        keyword="java",
        hard=False,
        qualifier="island",
        resolver="indonesia",
        wrong_gloss="a general purpose object oriented programming language that runs on a virtual machine",
        right_gloss="a large volcanic island of indonesia with ancient temples and coffee plantations",
        wrong_synonyms="jvm,bytecode",
        right_synonyms="indonesia",
        wrong_terms=["programming", "language", "code", "compiler", "virtual", "machine",
                     "bytecode", "class", "object", "method"],
        right_terms=["island", "indonesia", "volcanic", "temples", "coffee", "plantations",
                     "travel", "beaches", "hiking", "jungle"],
        target_title="Visiting Java: An Island Travel Guide",
        target_metas=["java island travel", "indonesia volcano hiking", "temples and beaches"],
        wrong_title="Java Programming Handbook",
        wrong_concept=("software-development", "Software development",
                       ["programming", "language", "code", "compiler", "software"]),
        right_concept=("island-travel", "Island travel",
                       ["island", "travel", "beaches", "volcanic", "hiking"]),
    ),
    TaskPlan(
        task_id="t2-python",
        keyword="python",
        hard=False,
        qualifier="habitat",
        resolver="snake",
        wrong_gloss="an interpreted high level programming language known for readable scripts",
        right_gloss="a large nonvenomous constricting snake that squeezes its prey",
        wrong_synonyms="scripting",
        right_synonyms="constrictor",
        wrong_terms=["programming", "language", "scripts", "interpreter", "modules",
                     "functions", "code", "library", "syntax", "tutorial"],
        right_terms=["snake", "constrictor", "habitat", "reptile", "terrarium", "prey",
                     "care", "feeding", "enclosure", "humidity"],
        target_title="Ball Python Habitat and Care Basics",
        target_metas=["python habitat care", "reptile terrarium setup", "snake feeding guide"],
        wrong_title="Python Scripting Cookbook",
        wrong_concept=("scripting-tools", "Scripting tools",
                       ["scripts", "interpreter", "modules", "code", "library"]),
        right_concept=("reptile-care", "Reptile care",
                       ["snake", "reptile", "habitat", "terrarium", "care"]),
    ),
    TaskPlan(
        task_id="t3-jaguar",
        keyword="jaguar",
        hard=False,
        qualifier="rainforest",
        resolver="conservation",
        wrong_gloss="a british maker of luxury sports cars and sedans",
        right_gloss="a large spotted wild cat that roams rainforests of the americas",
        wrong_synonyms="car",
        right_synonyms="panthera",
        wrong_terms=["car", "luxury", "engine", "sedan", "coupe", "dealer", "horsepower",
                     "drive", "leather", "model"],
        right_terms=["rainforest", "cat", "spotted", "predator", "conservation", "americas",
                     "wildlife", "habitat", "prey", "panthera"],
        target_title="Jaguar Rainforest Conservation Projects",
        target_metas=["jaguar rainforest conservation", "wildlife habitat protection",
                      "big cat research"],
        wrong_title="Jaguar Car Buyer Review",
        wrong_concept=("automobiles", "Automobiles",
                       ["car", "engine", "sedan", "dealer", "drive"]),
        right_concept=("wildlife-conservation", "Wildlife conservation",
                       ["rainforest", "wildlife", "conservation", "habitat", "predator"]),
    ),
    TaskPlan(
        task_id="t4-mercury",
        keyword="mercury",
        hard=True,
        qualifier="surface",
        resolver="planet",
        wrong_gloss="a heavy silvery metal element that is liquid at room temperature",
        right_gloss="the smallest planet orbiting closest to the sun",
        wrong_synonyms="quicksilver",
        right_synonyms="planet",
        wrong_terms=["metal", "liquid", "element", "silvery", "thermometer", "toxic",
                     "surface", "tension", "laboratory", "vapor"],
        right_terms=["planet", "orbit", "sun", "craters", "surface", "astronomy",
                     "spacecraft", "solar", "system", "temperature"],
        target_title="Mercury: Surface Craters of the Smallest Planet",
        target_metas=["mercury planet surface", "solar system astronomy", "orbit and craters"],
        wrong_title="Mercury Metal Surface Tension Notes",
        wrong_concept=("laboratory-chemistry", "Laboratory chemistry",
                       ["metal", "element", "liquid", "laboratory", "vapor"]),
        right_concept=("planetary-astronomy", "Planetary astronomy",
                       ["planet", "orbit", "craters", "solar", "astronomy"]),
    ),
    TaskPlan(
        task_id="t5-eclipse",
        keyword="eclipse",
        hard=True,
        qualifier="viewing",
        resolver="solar",
        wrong_gloss="an integrated development environment for writing and debugging code",
        right_gloss="an event where the moon blocks the sun and casts a shadow on the earth",
        wrong_synonyms="ide",
        right_synonyms="solar",
        wrong_terms=["ide", "plugin", "workspace", "debugger", "viewing", "perspective",
                     "editor", "project", "java", "toolbar"],
        right_terms=["solar", "moon", "sun", "shadow", "viewing", "glasses", "totality",
                     "sky", "astronomy", "path"],
        target_title="Safe Solar Eclipse Viewing Guide",
        target_metas=["eclipse viewing glasses", "solar totality path", "sky watching safety"],
        wrong_title="Eclipse IDE Viewing Perspectives",
        wrong_concept=("developer-tools", "Developer tools",
                       ["ide", "plugin", "debugger", "editor", "workspace"]),
        right_concept=("sky-events", "Sky events",
                       ["solar", "moon", "shadow", "totality", "sky"]),
    ),
    TaskPlan(
        task_id="t6-ruby",
        keyword="ruby",
        hard=True,
        qualifier="quality",
        resolver="gemstone",
        wrong_gloss="a dynamic programming language focused on developer productivity",
        right_gloss="a red precious gemstone valued for its clarity and color",
        wrong_synonyms="rails",
        right_synonyms="gemstone",
        wrong_terms=["programming", "rails", "gems", "code", "quality", "developer",
                     "testing", "framework", "scripts", "productivity"],
        right_terms=["gemstone", "red", "clarity", "carat", "quality", "jewelry",
                     "color", "stone", "precious", "grading"],
        target_title="Ruby Gemstone Quality and Grading",
        target_metas=["ruby gemstone quality", "carat clarity color", "jewelry grading guide"],
        wrong_title="Ruby Code Quality Metrics",
        wrong_concept=("code-quality", "Code quality",
                       ["code", "testing", "quality", "framework", "developer"]),
        right_concept=("gemstone-jewelry", "Gemstone jewelry",
                       ["gemstone", "carat", "clarity", "jewelry", "grading"]),
    ),
]

FILLER_TOPICS = [
    ("Sourdough Bread Baking Notes", ["bread", "dough", "yeast", "flour", "baking",
                                      "crust", "starter", "oven"]),
    ("Backyard Tomato Gardening", ["tomato", "garden", "soil", "seedling", "watering",
                                   "compost", "harvest", "sunlight"]),
    ("Beginner Watercolor Painting", ["watercolor", "painting", "brush", "pigment",
                                      "paper", "washes", "palette", "drying"]),
    ("City Cycling Commute Tips", ["bicycle", "cycling", "commute", "helmet", "lane",
                                   "repair", "lights", "route"]),
]


def _sentence(words: list[str]) -> str:
    return " ".join(words).capitalize() + "."


def _page(title: str, metas: list[str], description: str, body_sentences: list[str]) -> str:
    meta_tag = ""
    if metas:
        meta_tag = f'  <meta name="keywords" content="{", ".join(metas)}">\n'
    paragraphs = "\n".join(f"    <p>{s}</p>" for s in body_sentences)
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n"
        f"  <title>{title}</title>\n"
        f"{meta_tag}"
        f'  <meta name="description" content="{description}">\n'
        "</head>\n<body>\n"
        f"    <h1>{title}</h1>\n{paragraphs}\n"
        "</body>\n</html>\n"
    )


def _wrong_doc(task: TaskPlan, i: int, rng: random.Random) -> tuple[str, str, str]:
    """Distractor page: keyword-dense, small vocabulary, no right-pool terms."""
    kw = task.keyword
    words: list[str] = []
    sentences = []
    for _ in range(6):
        chunk = [kw, kw]
        chunk += rng.sample(task.wrong_terms, 3)
        if task.hard:
            chunk.append(task.qualifier)
        rng.shuffle(chunk)
        sentences.append(_sentence(chunk))
        words += chunk
    title = f"{task.wrong_title} Part {i + 1}"
    url = f"https://distractor.example/{kw}/{i + 1}"
    return url, title, _page(title, [], f"Notes about {kw}.", sentences)


def _right_doc(task: TaskPlan, i: int, rng: random.Random) -> tuple[str, str, str]:
    """Related page in the target cluster: topical, lighter keyword use."""
    kw = task.keyword
    sentences = []
    for j in range(4):
        chunk = [kw] if j == 0 else []
        chunk += rng.sample(task.right_terms, 4)
        rng.shuffle(chunk)
        sentences.append(_sentence(chunk))
    title = f"{task.right_concept[1]} Notes {i + 1}"
    url = f"https://topic.example/{kw}/{i + 1}"
    return url, title, _page(title, [], f"More about {kw}.", sentences)


def _target_doc(task: TaskPlan) -> tuple[str, str, str]:
    kw = task.keyword
    sentences = [
        _sentence([kw, task.qualifier, task.resolver] + task.right_terms[:4]),
        _sentence(task.right_terms[2:8] + [task.qualifier]),
        _sentence([kw] + task.right_terms[4:9]),
        _sentence(task.right_terms[:3] + [task.resolver, task.qualifier]),
        _sentence([kw, task.resolver] + task.right_terms[6:10]),
    ]
    url = f"https://target.example/{kw}"
    return url, task.target_title, _page(
        task.target_title, task.target_metas, f"The definitive {kw} page.", sentences
    )


def generate_corpus(out_dir: Path, rng: random.Random) -> dict[str, str]:
    corpus_dir = out_dir / "corpus"
    if corpus_dir.exists():
        shutil.rmtree(corpus_dir)
    corpus_dir.mkdir(parents=True)
    manifest: dict[str, str] = {}
    pages: list[tuple[str, str]] = []  # (url, html)
    for task in TASKS:
        for i in range(12):
            url, _, html = _wrong_doc(task, i, rng)
            pages.append((url, html))
        for i in range(3):
            url, _, html = _right_doc(task, i, rng)
            pages.append((url, html))
        url, _, html = _target_doc(task)
        pages.append((url, html))
    for title, terms in FILLER_TOPICS:
        sentences = [_sentence(rng.sample(terms, 5)) for _ in range(4)]
        url = f"https://filler.example/{terms[0]}"
        pages.append((url, _page(title, [], title, sentences)))
    assert len(pages) == 100, len(pages)
    for i, (url, html) in enumerate(pages):
        name = f"doc_{i:03d}.html"
        (corpus_dir / name).write_text(html, encoding="utf-8")
        manifest[name] = url
    (corpus_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def generate_lexicon(out_dir: Path, stopwords) -> Path:
    lines = ["# lemma<TAB>sense_id<TAB>gloss<TAB>synonyms  (lemmas stored normalized)"]
    for task in TASKS:
        lemma = stem_fixed(task.keyword)
        lines.append(f"{lemma}\t{lemma}.a\t{task.wrong_gloss}\t{task.wrong_synonyms}")
        lines.append(f"{lemma}\t{lemma}.b\t{task.right_gloss}\t{task.right_synonyms}")
    # a few single-sense entries so not every lemma is ambiguous
    extras = [
        ("island", "a body of land surrounded by water", ""),
        ("snake", "a long legless reptile", "serpent"),
        ("planet", "a large body orbiting a star", ""),
    ]
    for raw, gloss, syn in extras:
        lemma = stem_fixed(raw)
        lines.append(f"{lemma}\t{lemma}.a\t{gloss}\t{syn}")
    path = out_dir / "lexicon.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def generate_ontology(out_dir: Path, stopwords) -> Path:
    lines = ["# concept_id<TAB>label<TAB>terms<TAB>parent  (terms stored normalized)"]
    lines.append("leisure\tLeisure and nature\tnatur,outdoor\t")
    lines.append("technology\tTechnology\ttechnolog,tool\t")
    seen = set()
    for task in TASKS:
        for concept, parent in ((task.wrong_concept, "technology"), (task.right_concept, "leisure")):
            concept_id, label, raw_terms = concept
            if concept_id in seen:
                continue
            seen.add(concept_id)
            terms = []
            for raw in raw_terms:
                terms.extend(normalize_text(raw, stopwords))
            terms = list(dict.fromkeys(terms))
            lines.append(f"{concept_id}\t{label}\t{','.join(terms)}\t{parent}")
    path = out_dir / "ontology.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def generate_stores(out_dir: Path, index, lexicon, stopwords) -> None:
    stores_dir = out_dir / "stores"
    if stores_dir.exists():
        shutil.rmtree(stores_dir)
    (stores_dir / "profiles").mkdir(parents=True)

    url_to_doc = {entry.url: doc_id for doc_id, entry in index.docs.items()}

    def seed_entry(entry_id: str, user_id: str, timestamp: int, task: TaskPlan, rich: bool):
        keyword = stem_fixed(task.keyword)
        candidates = candidate_disambiguations(lexicon, [keyword], stopwords)
        right = next(t for t in candidates[keyword] if t.sense_id.endswith(".b"))
        target_url = f"https://target.example/{task.keyword}"
        target_meta = index.docs[url_to_doc[target_url]].metadata
        extracted = build_meta_keywords(target_meta, [keyword], stopwords)
        return ProfileEntry(
            entry_id=entry_id,
            user_id=user_id,
            timestamp=timestamp,
            raw_query=task.keyword,
            query_keywords=[keyword],
            selected_terms=[right],
            selected_meta_keywords=list(extracted[:2]) if rich else [],
            selected_concepts=[task.right_concept[0]] if rich else [],
            clicked_urls=[target_url],
            extracted_meta_keywords=list(extracted),
        )

    # per-subject profiles cover tasks 1-5; task 6 knowledge lives only in the SCKB
    for phase in ("os1", "os2"):
        for subject in range(10):
            user_id = f"{phase}-u{subject:02d}"
            profile = PersonalProfile(user_id=user_id)
            for t, task in enumerate(TASKS[:5]):
                entry = seed_entry(
                    f"seed-{t + 1}", user_id, BASE_TIMESTAMP + t * 1000, task, rich=False
                )
                record_entry(profile, entry)
            save_store(profile, stores_dir / "profiles" / f"{user_id}.jsonl")

    sckb = SharedKnowledgeBase()
    for t, task in enumerate(TASKS):
        for contributor in range(2):
            entry = seed_entry(
                f"sckb-{t + 1}", f"contributor{contributor}",
                BASE_TIMESTAMP + t * 1000, task, rich=True,
            )
            merge_into_sckb(sckb, entry)
    save_store(sckb, stores_dir / "sckb.jsonl")


def generate_sim_config(out_dir: Path) -> Path:
    config = {
        "corpus_index": "corpus.idx",
        "lexicon": "lexicon.tsv",
        "ontology": "ontology.tsv",
        "stopwords": "stopwords.txt",
        "seed_profiles_dir": "stores/profiles",
        "seed_sckb": "stores/sckb.jsonl",
        "subjects": 10,
        "p_accept": 0.8,
        "max_queries": 3,
        "page_size": PAGE_SIZE,
        "query_cap": 20,
        "tasks": [
            {
                "task_id": task.task_id,
                "target_urls": [f"https://target.example/{task.keyword}"],
                "seed_queries": task.seed_queries,
            }
            for task in TASKS
        ],
    }
    path = out_dir / "sim_config.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path


def self_check(out_dir: Path) -> None:
    """Re-run the pipeline against the generated artifacts and assert the design."""
    stopwords = load_stopwords(out_dir / "stopwords.txt")
    lexicon = load_lexicon(out_dir / "lexicon.tsv")
    ontology = load_ontology(out_dir / "ontology.tsv")
    docs = load_corpus(out_dir / "corpus", stopwords)
    index = index_corpus(docs, stopwords)
    url_to_doc = {d.url: d.doc_id for d in docs}
    adapter = LocalSearchAdapter(index, page_size=PAGE_SIZE)

    from ctxsearch.profile_store import load_profile, load_sckb

    profile = load_profile(out_dir / "stores" / "profiles" / "os1-u00.jsonl", "os1-u00")
    sckb = load_sckb(out_dir / "stores" / "sckb.jsonl")

    failures = []

    def check(name: str, ok: bool):
        print(f"  {'ok' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    for task in TASKS:
        kw = stem_fixed(task.keyword)
        target_id = url_to_doc[f"https://target.example/{task.keyword}"]
        q1, q2, q3 = (normalize_text(q, stopwords) for q in task.seed_queries)

        def baseline_page(keywords):
            hits = adapter.submit(" AND ".join(keywords), page=1)
            return [h.doc_id for h in hits]

        check(f"{task.task_id}: baseline q1 misses target", target_id not in baseline_page(q1))
        q2_hit = target_id in baseline_page(q2)
        check(
            f"{task.task_id}: baseline q2 {'misses' if task.hard else 'finds'} target",
            q2_hit != task.hard,
        )
        check(f"{task.task_id}: baseline q3 finds target", target_id in baseline_page(q3))

        candidates = candidate_disambiguations(lexicon, q1, stopwords)
        cold = recommend_senses(q1, candidates, PersonalProfile(user_id="x"), None)
        check(
            f"{task.task_id}: cold start puts the wrong sense first",
            cold[kw][0].payload.sense_id.endswith(".a"),
        )
        shared = recommend_senses(q1, candidates, PersonalProfile(user_id="x"), sckb)
        check(
            f"{task.task_id}: SCKB recommends the right sense",
            shared[kw][0].payload.sense_id.endswith(".b"),
        )
        if task.task_id != "t6-ruby":
            personal = recommend_senses(q1, candidates, profile, None)
            check(
                f"{task.task_id}: profile recommends the right sense",
                personal[kw][0].payload.sense_id.endswith(".b"),
            )
            sense = personal[kw][0].payload
        else:
            sense = shared[kw][0].payload
        context = TermVector.from_terms(q1).merged(TermVector.from_terms(sense.words))
        concepts = recommend_concepts(context, ontology, k=5)
        check(
            f"{task.task_id}: right concept tops the concept list",
            bool(concepts) and concepts[0].payload.concept_id == task.right_concept[0],
        )
        expanded = build_query(q1, [sense], [], [concepts[0].payload] if concepts else [])
        from ctxsearch.search_core import rank_all

        hits = rank_all(expanded, context, index)
        ids = [h.doc_id for h in hits[:PAGE_SIZE]]
        check(f"{task.task_id}: expanded q1 finds target", target_id in ids)
        check(f"{task.task_id}: expanded q1 excludes distractors",
              all("distractor" not in index.docs[i].url for i in ids))

    if failures:
        raise SystemExit(f"fixture self-check failed: {failures}")
    print("all fixture self-checks passed")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", type=Path)
    args = parser.parse_args()
    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = random.Random(1347)
    shutil.copy(default_stopwords_path(), out_dir / "stopwords.txt")
    stopwords = load_stopwords(out_dir / "stopwords.txt")
    manifest = generate_corpus(out_dir, rng)
    print(f"corpus: {len(manifest)} documents")
    lexicon_path = generate_lexicon(out_dir, stopwords)
    ontology_path = generate_ontology(out_dir, stopwords)
    lexicon = load_lexicon(lexicon_path)
    load_ontology(ontology_path)
    docs = load_corpus(out_dir / "corpus", stopwords)
    index = index_corpus(docs, stopwords)
    save_index(index, out_dir / "corpus.idx")
    print(f"index: {index.doc_count} docs, {len(index.postings)} terms")
    generate_stores(out_dir, index, lexicon, stopwords)
    print("stores: 20 profiles + sckb")
    generate_sim_config(out_dir)
    self_check(out_dir)


if __name__ == "__main__":
    main()
