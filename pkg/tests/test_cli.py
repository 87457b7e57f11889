"""CLI behavior: induce, evaluate, interactive interview with resume."""

from __future__ import annotations

import json
import re
from pathlib import Path

import pytest
from click.testing import CliRunner

from ontoagent import engine as eng
from ontoagent.backend import RecordingBackend
from ontoagent.cli import main
from ontoagent.demo import RuleResponder, bundled_data_dir
from ontoagent.engine import SessionConfig
from ontoagent.ontology import deserialize


@pytest.fixture
def runner():
    return CliRunner()


def bundled(name: str) -> str:
    return str(bundled_data_dir() / name)


class TestInduce:
    def test_writes_ontology_and_log(self, runner, tmp_path):
        out = tmp_path / "onto.json"
        result = runner.invoke(
            main,
            [
                "induce", bundled("corpus.jsonl"), bundled("aspects.json"), str(out),
                "--backend", "scripted", "--script", bundled("induction_script.json"),
                "--domain-name", "website",
            ],
        )
        assert result.exit_code == 0, result.output
        document = json.loads(out.read_text())
        assert document == json.loads(Path(bundled("ontology.json")).read_text())
        log = out.with_suffix(".log.jsonl")
        assert log.exists()
        assert all(json.loads(line) for line in log.read_text().splitlines())

    def test_empty_aspects_exits_2(self, runner, tmp_path):
        aspects = tmp_path / "aspects.json"
        aspects.write_text("[]")
        result = runner.invoke(
            main,
            ["induce", bundled("corpus.jsonl"), str(aspects), str(tmp_path / "o.json"),
             "--backend", "scripted", "--script", bundled("induction_script.json")],
        )
        assert result.exit_code == 2
        assert "domain experts" in result.output

    def test_malformed_corpus_line_exits_2_with_line_number(self, runner, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text('{"id": "a", "app_type": "t", "body": "x"}\n{broken\n')
        result = runner.invoke(
            main,
            ["induce", str(corpus), bundled("aspects.json"), str(tmp_path / "o.json")],
        )
        assert result.exit_code == 2
        assert "line 2" in result.output


def record_interview(answers: list[str], max_turns: int = 10) -> tuple[list, list[dict]]:
    """Drive a session with the rule responder, recording a replay script."""
    onto = deserialize(json.loads(Path(bundled("ontology.json")).read_text()))
    recorder = RecordingBackend(RuleResponder())
    session, outcome = eng.start_session(
        onto,
        "I want a website that allows users to search stocks and generate reports.",
        SessionConfig(max_turns=max_turns, gate_threshold=3),
        recorder,
        session_id="reference",
    )
    for answer in answers:
        if session.finished:
            break
        outcome = eng.step(session, answer, recorder)
    return recorder.entries, eng.transcript_records(session)


ANSWERS = [
    "Yes. Generated reports use PDF format with charts.",
    "Yes. Search results offer filtering options by sector.",
    "No, we don't need that.",
    "No, we don't need that.",
    "No, we don't need that.",
    "No, nothing else about interaction.",
    "Yes. A saved items view lists chosen stocks.",
    "No, we don't need that.",
    "Yes. The color scheme is dark.",
    "Yes. A responsive mobile layout is used.",
]


class TestInterview:
    def run_cli(self, runner, tmp_path, script_path, answers, extra=()):
        return runner.invoke(
            main,
            [
                "interview", bundled("ontology.json"),
                "--description", "I want a website that allows users to search stocks and generate reports.",
                "--backend", "scripted", "--script", str(script_path),
                "--data-dir", str(tmp_path / "data"), "--max-turns", "10",
                *extra,
            ],
            input="".join(a + "\n" for a in answers),
        )

    def test_full_interview_reaches_budget(self, runner, tmp_path):
        entries, reference = record_interview(ANSWERS)
        script = tmp_path / "script.json"
        script.write_text(json.dumps([e.__dict__ for e in entries]))
        result = self.run_cli(runner, tmp_path, script, ANSWERS)
        assert result.exit_code == 0, result.output
        assert "finished (max_turns)" in result.output
        session_id = re.search(r"session (\S+)", result.output).group(1)
        transcript = [
            json.loads(line)
            for line in (tmp_path / "data" / "sessions" / f"{session_id}.transcript.jsonl")
            .read_text().splitlines()
        ]
        assert transcript == reference

    def test_exhaustion_finish_reason(self, runner, tmp_path):
        # rejecting everything prunes the whole tree before the budget is hit
        answers = ["No, we don't need that."] * 3 + ["No, nothing else about interaction."]
        answers += ["No, we don't need that."] * 3 + ["No, nothing else about content."]
        answers += ["No, we don't need that."] * 3 + ["No, nothing else about style."]
        onto = deserialize(json.loads(Path(bundled("ontology.json")).read_text()))
        recorder = RecordingBackend(RuleResponder())
        session, _ = eng.start_session(
            onto,
            "I need a website where visitors browse recipes and save favorites.",
            SessionConfig(max_turns=20, gate_threshold=3),
            recorder,
            session_id="x",
        )
        used = []
        for answer in answers:
            if session.finished:
                break
            used.append(answer)
            eng.step(session, answer, recorder)
        assert session.finish_reason == "no_eligible_slots"
        script = tmp_path / "script.json"
        script.write_text(json.dumps([e.__dict__ for e in recorder.entries]))
        result = runner.invoke(
            main,
            [
                "interview", bundled("ontology.json"),
                "--description", "I need a website where visitors browse recipes and save favorites.",
                "--backend", "scripted", "--script", str(script),
                "--data-dir", str(tmp_path / "data"), "--max-turns", "20",
            ],
            input="".join(a + "\n" for a in used),
        )
        assert result.exit_code == 0, result.output
        assert "finished (no_eligible_slots)" in result.output

    def test_interrupt_persists_resumable_snapshot(self, runner, tmp_path):
        entries, reference = record_interview(ANSWERS)
        script = tmp_path / "script.json"
        script.write_text(json.dumps([e.__dict__ for e in entries]))

        # input runs dry after 4 answers: the prompt aborts, snapshot persists
        partial = self.run_cli(runner, tmp_path, script, ANSWERS[:4])
        assert partial.exit_code == 0
        assert "resume with" in partial.output
        session_id = re.search(r"session (\S+)", partial.output).group(1)

        resumed = runner.invoke(
            main,
            [
                "interview", "--resume", session_id,
                "--backend", "scripted", "--script", str(script),
                "--data-dir", str(tmp_path / "data"),
            ],
            input="".join(a + "\n" for a in ANSWERS[4:]),
        )
        assert resumed.exit_code == 0, resumed.output
        assert "finished (max_turns)" in resumed.output
        transcript = [
            json.loads(line)
            for line in (tmp_path / "data" / "sessions" / f"{session_id}.transcript.jsonl")
            .read_text().splitlines()
        ]
        assert transcript == reference


class TestEvaluate:
    def evaluate(self, runner, tmp_path, out_name, interviewer="ontoagent"):
        args = [
            "evaluate", bundled("scenarios.jsonl"),
            "--interviewer", interviewer,
            "--out", str(tmp_path / out_name),
            "--backend", "scripted", "--script", bundled("eval_script.json"),
            "--max-turns", "10", "--gate-threshold", "3",
        ]
        if interviewer == "ontoagent":
            args += ["--ontology", bundled("ontology.json")]
        return runner.invoke(main, args)

    def test_two_runs_byte_identical(self, runner, tmp_path):
        first = self.evaluate(runner, tmp_path, "one")
        second = self.evaluate(runner, tmp_path, "two")
        assert first.exit_code == 0, first.output
        assert second.exit_code == 0, second.output
        report_a = (tmp_path / "one" / "report.json").read_bytes()
        report_b = (tmp_path / "two" / "report.json").read_bytes()
        assert report_a == report_b
        for transcript in sorted((tmp_path / "one" / "transcripts").iterdir()):
            twin = tmp_path / "two" / "transcripts" / transcript.name
            assert transcript.read_bytes() == twin.read_bytes()

    def test_report_artifacts_written(self, runner, tmp_path):
        result = self.evaluate(runner, tmp_path, "out")
        assert result.exit_code == 0, result.output
        out = tmp_path / "out"
        report = json.loads((out / "report.json").read_text())
        assert set(report) >= {"per_scenario", "aggregate"}
        assert (out / "metrics.csv").read_text().startswith("scenario_id,")
        figures = sorted(p.name for p in (out / "figures").glob("*.png"))
        assert "metrics_by_scenario.png" in figures
        assert "aspect_ire.png" in figures
        for row in report["per_scenario"]:
            if "error" not in row:
                assert (out / row["transcript_ref"]).exists()

    def test_freeform_baseline_same_schema(self, runner, tmp_path):
        result = self.evaluate(runner, tmp_path, "ff", interviewer="freeform")
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "ff" / "report.json").read_text())
        assert report["interviewer"] == "freeform"
        assert set(report) == {"per_scenario", "aggregate", "interviewer"}
        assert report["aggregate"]["ire"] < 1.0

    def test_missing_ontology_for_ontoagent_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["evaluate", bundled("scenarios.jsonl"), "--interviewer", "ontoagent",
             "--out", str(tmp_path / "x"), "--backend", "scripted",
             "--script", bundled("eval_script.json")],
        )
        assert result.exit_code == 2
        assert "--ontology" in result.output

    def test_bad_scenario_line_exits_2(self, runner, tmp_path):
        bad = tmp_path / "scenarios.jsonl"
        bad.write_text("{not json\n")
        result = runner.invoke(
            main,
            ["evaluate", str(bad), "--interviewer", "freeform", "--out", str(tmp_path / "x")],
        )
        assert result.exit_code == 2
        assert "line 1" in result.output
