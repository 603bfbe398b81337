"""The ``ctxsearch`` command line interface."""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click

from .errors import CtxSearchError
from .harness import (
    aggregate_report,
    format_report_table,
    load_simulation_config,
    read_rows,
    run_phase_simulation,
    write_rows,
)
from .lexicon import load_lexicon, load_stopwords
from .profile_store import entry_from_json, entry_to_json, load_profile, record_entry
from .recommender import load_ontology
from .search_core import index_corpus, load_corpus, load_index, save_index
from .session import PHASES, SearchService, ServiceConfig


def default_stopwords_path() -> Path:
    return Path(resources.files("ctxsearch").joinpath("data/stopwords.txt"))


def _stopwords(path: str | None) -> frozenset[str]:
    return load_stopwords(path or default_stopwords_path())


@click.group()
def main():
    """Contextual search system and its evaluation harness."""


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(), help="Index file to write.")
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None)
def index(corpus_dir, out_path, stopwords_path, manifest_path):
    """Index a directory of .html documents."""
    stopwords = _stopwords(stopwords_path)
    manifest = None
    if manifest_path:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    docs = load_corpus(corpus_dir, stopwords, manifest)
    idx = index_corpus(docs, stopwords)
    save_index(idx, out_path)
    click.echo(f"indexed {idx.doc_count} documents, {len(idx.postings)} terms -> {out_path}")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--corpus", "index_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--ontology", "ontology_path", required=True, type=click.Path(exists=True))
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.option("--sckb", type=click.Choice(["on", "off"]), default="on", show_default=True)
@click.option("--store-dir", default="stores", show_default=True, type=click.Path())
@click.option("--page-size", default=10, show_default=True)
@click.option("--query-cap", default=20, show_default=True)
@click.option("--shared-weight", default=1.0, show_default=True)
@click.option("--meta-keyword-limit", default=5, show_default=True)
@click.option("--sense-k", default=5, show_default=True)
@click.option("--concept-k", default=5, show_default=True)
def serve(
    port, host, index_path, lexicon_path, ontology_path, stopwords_path, sckb, store_dir,
    page_size, query_cap, shared_weight, meta_keyword_limit, sense_k, concept_k,
):
    """Run the session service."""
    import uvicorn

    from .api import create_app

    config = ServiceConfig(
        sckb_enabled=(sckb == "on"),
        page_size=page_size,
        query_cap=query_cap,
        shared_weight=shared_weight,
        meta_keyword_limit=meta_keyword_limit,
        sense_k=sense_k,
        concept_k=concept_k,
    )
    service = SearchService(
        lexicon=load_lexicon(lexicon_path),
        stopwords=_stopwords(stopwords_path),
        ontology=load_ontology(ontology_path),
        index=load_index(index_path),
        store_dir=store_dir,
        config=config,
    )
    uvicorn.run(create_app(service), host=host, port=port)


@main.group()
def profile():
    """Export or import personal profile logs."""


@profile.command("export")
@click.option("--user", "user_id", required=True)
@click.option("--store-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(), default="-", show_default=True)
def profile_export(user_id, store_dir, out_path):
    """Write a user's profile entries as JSON Lines."""
    prof = load_profile(Path(store_dir) / "profiles" / f"{user_id}.jsonl", user_id)
    lines = [json.dumps(entry_to_json(e), sort_keys=True) for e in prof.entries]
    if out_path == "-":
        for line in lines:
            click.echo(line)
    else:
        Path(out_path).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        click.echo(f"exported {len(lines)} entries -> {out_path}")


@profile.command("import")
@click.option("--user", "user_id", required=True)
@click.option("--store-dir", required=True, type=click.Path(file_okay=False))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
def profile_import(user_id, store_dir, in_path):
    """Append exported entries into a user's profile log."""
    prof = load_profile(Path(store_dir) / "profiles" / f"{user_id}.jsonl", user_id)
    count = 0
    with Path(in_path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record_entry(prof, entry_from_json(json.loads(line)))
            count += 1
    click.echo(f"imported {count} entries for {user_id}")


@main.command()
@click.option("--phase", required=True, type=click.Choice(list(PHASES)))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=42, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def simulate(phase, config_path, seed, out_path):
    """Run one phase of the simulated study and write metric rows."""
    cfg = load_simulation_config(config_path)
    rows = run_phase_simulation(cfg, phase, seed)
    write_rows(rows, out_path)
    click.echo(f"wrote {len(rows)} rows -> {out_path}")


@main.command("eval")
@click.option(
    "--rows",
    "rows_paths",
    required=True,
    multiple=True,
    type=click.Path(exists=True),
    help="Row files; repeat the flag or list the rest as trailing arguments.",
)
@click.argument("extra_rows", nargs=-1, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_cmd(rows_paths, extra_rows, out_path):
    """Aggregate metric rows into the hypothesis report."""
    rows = [row for path in (*rows_paths, *extra_rows) for row in read_rows(path)]
    report = aggregate_report(rows)
    if out_path:
        Path(out_path).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        click.echo(f"report -> {out_path}")
    click.echo(format_report_table(report))


def run():  # pragma: no cover - thin wrapper
    try:
        main(standalone_mode=True)
    except CtxSearchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":  # pragma: no cover
    run()
