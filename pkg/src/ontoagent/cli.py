"""Command-line shell: induce | interview | evaluate | serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import engine as engine_mod
from . import ontology as onto_mod
from .backend import BackendError
from .config import AppConfig
from .engine import SessionConfig
from .figures import render_report_figures, write_metrics_csv
from .gym import (
    FreeformInterviewer,
    OntologyInterviewer,
    ScenarioFormatError,
    load_scenarios,
    run_benchmark,
)
from .induction import CorpusFormatError, EmptyAspectList, EmptyCorpus, induce_ontology, load_corpus, write_induction_log
from .store import DataStore, UnknownId, new_id


def _fail(message: str, code: int = 2) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _config(**overrides) -> AppConfig:
    try:
        return AppConfig.from_env(**overrides)
    except ValueError as exc:
        _fail(str(exc))


def _load_ontology_file(path: str) -> onto_mod.ExperienceOntology:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
        return onto_mod.deserialize(document)
    except FileNotFoundError:
        _fail(f"ontology file not found: {path}")
    except json.JSONDecodeError as exc:
        _fail(f"{path} is not valid JSON: {exc.msg}")
    except onto_mod.SchemaViolation as exc:
        _fail(f"{path}: {exc}")


backend_options = [
    click.option("--backend", type=click.Choice(["scripted", "http"]), default=None,
                 help="generation backend (default: ONTOAGENT_BACKEND or scripted)"),
    click.option("--script", "script_path", type=click.Path(), default=None,
                 help="replay script for the scripted backend"),
    click.option("--model", default=None, help="model name for the http backend"),
]
interview_options = [
    click.option("--max-turns", type=int, default=None, show_default="20",
                 help="slot-question budget"),
    click.option("--gate-threshold", type=int, default=None, show_default="3",
                 help="consecutive rejections before the aspect gate"),
]


def with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
@click.version_option(package_name="ontoagent")
def main() -> None:
    """Ontology-guided requirements-elicitation interviews."""


@main.command()
@click.argument("corpus", type=click.Path())
@click.argument("aspects", type=click.Path())
@click.argument("out", type=click.Path())
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="induction provenance log (default: OUT with .log.jsonl)")
@click.option("--domain-name", default="domain")
@with_options(backend_options)
def induce(corpus, aspects, out, log_path, domain_name, backend, script_path, model) -> None:
    """Build an experience ontology from a JSONL corpus of requirement texts."""
    config = _config(backend=backend, script_path=script_path, model=model)
    try:
        docs = load_corpus(corpus)
    except FileNotFoundError:
        _fail(f"corpus file not found: {corpus}")
    except CorpusFormatError as exc:
        _fail(f"{corpus}: {exc}")
    try:
        aspect_names = json.loads(Path(aspects).read_text(encoding="utf-8"))
    except FileNotFoundError:
        _fail(f"aspects file not found: {aspects}")
    except json.JSONDecodeError as exc:
        _fail(f"{aspects} is not valid JSON: {exc.msg}")
    if not isinstance(aspect_names, list) or not all(isinstance(a, str) for a in aspect_names):
        _fail(f"{aspects} must hold a JSON array of aspect names")
    try:
        tree, events = induce_ontology(
            docs, aspect_names, config.build_backend(), domain_name=domain_name
        )
    except (EmptyCorpus, EmptyAspectList) as exc:
        _fail(str(exc))
    except BackendError as exc:
        _fail(f"induction failed: {exc}", code=1)
    Path(out).write_text(onto_mod.to_json(tree), encoding="utf-8")
    log_file = Path(log_path) if log_path else Path(out).with_suffix(".log.jsonl")
    write_induction_log(events, log_file)
    dims = sum(len(a.dimensions) for a in tree.aspects)
    slots = sum(len(d.slots) for a in tree.aspects for d in a.dimensions)
    click.echo(f"ontology written to {out}: {len(tree.aspects)} aspects, {dims} dimensions, {slots} slots")
    click.echo(f"induction log written to {log_file}")


@main.command()
@click.argument("ontology", type=click.Path(), required=False)
@click.option("--description", default=None, help="initial requirement description")
@click.option("--resume", "resume_id", default=None, help="resume a persisted session by id")
@click.option("--data-dir", type=click.Path(), default=None, help="session storage directory")
@with_options(interview_options)
@with_options(backend_options)
def interview(ontology, description, resume_id, data_dir, max_turns, gate_threshold,
              backend, script_path, model) -> None:
    """Run a live interview in the terminal; Ctrl-C persists a resumable snapshot."""
    config = _config(backend=backend, script_path=script_path, model=model,
                     max_turns=max_turns, gate_threshold=gate_threshold,
                     data_dir=Path(data_dir) if data_dir else None)
    store = DataStore(config.data_dir)
    live_backend = config.build_backend()

    if resume_id:
        try:
            record = store.load_session(resume_id)
        except UnknownId:
            _fail(f"no persisted session {resume_id!r} under {config.data_dir}")
        if record["status"] == "finished":
            _fail(f"session {resume_id!r} is already finished")
        session = engine_mod.restore_session(record["snapshot"])
        question = next(
            (t.text for t in reversed(session.history) if t.speaker is engine_mod.Speaker.AGENT),
            None,
        )
        click.echo(f"resuming session {resume_id}")
    else:
        if not ontology:
            _fail("an ontology file is required unless --resume is given")
        tree = _load_ontology_file(ontology)
        u0 = description or click.prompt("initial description")
        if not u0.strip():
            _fail("the initial description must be nonempty")
        session_id = new_id()
        try:
            session, outcome = engine_mod.start_session(
                tree, u0, config.session_config(), live_backend, session_id=session_id
            )
        except engine_mod.EmptyOntology as exc:
            _fail(str(exc))
        question = outcome.question
        store.save_session(session.session_id, engine_mod.snapshot(session), "active")
        click.echo(f"session {session.session_id}")

    try:
        while not session.finished:
            click.echo(f"\n[agent] {question}")
            answer = click.prompt("[you]", prompt_suffix=" ")
            if answer.strip() in ("/quit", "/stop"):
                engine_mod.stop_session(session)
                break
            outcome = engine_mod.step(session, answer, live_backend)
            store.save_session(session.session_id, engine_mod.snapshot(session), "active")
            if outcome.finished:
                break
            question = outcome.question
    except (KeyboardInterrupt, click.exceptions.Abort):
        store.save_session(session.session_id, engine_mod.snapshot(session), "active")
        click.echo(
            f"\ninterrupted; resume with: ontoagent interview --resume {session.session_id}"
            f" --data-dir {config.data_dir}",
            err=True,
        )
        sys.exit(0)

    store.save_session(session.session_id, engine_mod.snapshot(session), "finished")
    store.write_transcript(session.session_id, engine_mod.transcript_records(session))
    requirements_path = store.root / "sessions" / f"{session.session_id}.requirements.json"
    requirements_path.write_text(
        json.dumps(
            [
                {"slot_id": r.slot_id, "key": r.key, "excerpt": r.excerpt, "turn": r.turn}
                for r in session.elicited
            ],
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    click.echo(f"\nfinished ({session.finish_reason}); elicited {len(session.elicited)} requirements")
    click.echo(f"transcript: {store.transcript_path(session.session_id)}")
    click.echo(f"requirements: {requirements_path}")


@main.command()
@click.argument("scenarios", type=click.Path())
@click.option("--ontology", "ontology_path", type=click.Path(), default=None,
              help="ontology file (required for --interviewer ontoagent)")
@click.option("--interviewer", type=click.Choice(["ontoagent", "freeform"]), default="ontoagent",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="eval-report", show_default=True,
              help="report directory")
@click.option("--matcher", type=click.Choice(["lexical", "judge"]), default=None,
              show_default="lexical", help="hit judge")
@click.option("--figures/--no-figures", "want_figures", default=True, show_default=True)
@with_options(interview_options)
@with_options(backend_options)
def evaluate(scenarios, ontology_path, interviewer, out_dir, matcher, want_figures,
             max_turns, gate_threshold, backend, script_path, model) -> None:
    """Benchmark an interviewer against a scenario pack and write the report."""
    config = _config(backend=backend, script_path=script_path, model=model,
                     max_turns=max_turns, gate_threshold=gate_threshold, matcher=matcher)
    try:
        pack = load_scenarios(scenarios)
    except FileNotFoundError:
        _fail(f"scenario file not found: {scenarios}")
    except ScenarioFormatError as exc:
        _fail(f"{scenarios}: {exc}")
    if not pack:
        _fail(f"{scenarios} holds no scenarios")

    live_backend = config.build_backend()
    session_config = config.session_config()
    if interviewer == "ontoagent":
        if not ontology_path:
            _fail("--ontology is required with --interviewer ontoagent")
        tree = _load_ontology_file(ontology_path)

        def factory(scenario):
            return OntologyInterviewer(tree, live_backend, session_config, session_id=scenario.id)

    else:

        def factory(scenario):
            return FreeformInterviewer(live_backend, max_turns=session_config.max_turns)

    result = run_benchmark(pack, factory, live_backend, config.build_matcher(live_backend))

    out = Path(out_dir)
    transcripts = out / "transcripts"
    transcripts.mkdir(parents=True, exist_ok=True)
    refs = {}
    for episode in result.episodes:
        ref = f"transcripts/{episode.scenario_id}.jsonl"
        (out / ref).write_text(
            "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in episode.transcript),
            encoding="utf-8",
        )
        episode.report.transcript_ref = ref
        refs[episode.scenario_id] = ref
    report = result.as_dict()
    report["interviewer"] = interviewer
    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    csv_path = write_metrics_csv(report, out / "metrics.csv")
    click.echo(f"report: {report_path}")
    click.echo(f"metrics table: {csv_path}")
    if want_figures:
        for path in render_report_figures(report, out / "figures"):
            click.echo(f"figure: {path}")
    agg = report["aggregate"]
    click.echo(
        f"aggregate: ire={agg['ire']:.4f} tkqr={agg['tkqr']:.4f} "
        f"by_aspect={json.dumps(agg['ire_by_aspect'], sort_keys=True)}"
    )
    if result.failures:
        click.echo(f"{len(result.failures)} scenario(s) failed; see report", err=True)


@main.command()
@click.option("--host", default=None, show_default="127.0.0.1")
@click.option("--port", type=int, default=None, show_default="8020")
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--matcher", type=click.Choice(["lexical", "judge"]), default=None,
              show_default="lexical", help="hit judge for POST /evaluations")
@with_options(interview_options)
@with_options(backend_options)
def serve(host, port, data_dir, matcher, max_turns, gate_threshold, backend, script_path, model) -> None:
    """Serve the HTTP session API (used by the chat UI)."""
    import uvicorn

    from .service import create_app

    config = _config(backend=backend, script_path=script_path, model=model,
                     max_turns=max_turns, gate_threshold=gate_threshold, matcher=matcher,
                     data_dir=Path(data_dir) if data_dir else None,
                     host=host, port=port)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
