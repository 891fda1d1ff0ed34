"""The dqctx command line, run in-process."""

from __future__ import annotations

import json
import shutil
import sys

import pytest

from conftest import APPENDIX, RUNNING
from dqctx.cli import main

SYSTEM = str(RUNNING / "system.dqx")
DATA = str(RUNNING / "data")
QUERY = str(RUNNING / "query.dl")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestAssess:
    def test_running_example(self, capsys):
        code, out, _ = run(capsys, "assess", "--system", SYSTEM, "--data", DATA)
        assert code == 0
        rep = json.loads(out)
        assert rep["qm0"] == 2
        assert [rep[k]["decimal"] for k in ("qm1", "jaccard_r", "qm2")] == \
            ["0.4000", "0.6000", "0.4000"]
        assert len(rep["quality_instance"]["TempNoon"]) == 3
        assert "timings_ms" not in rep

    def test_timings_on_request(self, capsys):
        _, out, _ = run(capsys, "assess", "--system", SYSTEM, "--data", DATA, "--timings")
        assert set(json.loads(out)["timings_ms"]) == {"load", "lci", "metrics"}

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "r.json"
        code, out, _ = run(capsys, "assess", "--system", SYSTEM, "--data", DATA,
                           "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["qm0"] == 2

    def test_clean_data_scores_zero(self, capsys, tmp_path):
        data = tmp_path / "data"
        shutil.copytree(DATA, data)
        rows = (data / "TempNoon.csv").read_text().splitlines()
        # keep the header and the three rows that survive assessment
        kept = [rows[0]] + [r for r in rows[1:] if "12:10" not in r and "11:50" not in r]
        (data / "TempNoon.csv").write_text("\n".join(kept) + "\n")
        _, out, _ = run(capsys, "assess", "--system", SYSTEM, "--data", str(data))
        assert json.loads(out)["qm0"] == 0

    def test_appendix_logs_calls(self, capsys):
        code, out, _ = run(capsys, "assess", "--system", str(APPENDIX / "system.dqx"),
                           "--data", str(APPENDIX / "data"))
        assert code == 0
        assert {e["source"] for e in json.loads(out)["call_log"]} == {"#C"}

    def test_empty_data_dir(self, capsys, tmp_path):
        code, _, err = run(capsys, "assess", "--system", SYSTEM, "--data", str(tmp_path))
        assert code == 2
        assert "MissingRelation" in err

    def test_failing_source_exits_3(self, capsys, tmp_path):
        shutil.copy(APPENDIX / "system.dqx", tmp_path / "system.dqx")
        code, _, err = run(capsys, "assess", "--system", str(tmp_path / "system.dqx"),
                           "--data", str(APPENDIX / "data"))
        assert code == 3
        assert "ResolverFailure" in err


class TestAnswer:
    def test_sep5(self, capsys):
        code, out, _ = run(capsys, "answer", "--system", SYSTEM, "--data", DATA,
                           "--query", QUERY)
        assert code == 0 and out == "Tom Waits,38.5\n"

    def test_certain(self, capsys):
        _, out, _ = run(capsys, "answer", "--system", SYSTEM, "--data", DATA,
                        "--query", QUERY, "--certain")
        assert out == "Tom Waits,38.5\n"

    def test_report_alongside(self, capsys, tmp_path):
        target = tmp_path / "a.json"
        run(capsys, "answer", "--system", SYSTEM, "--data", DATA, "--query", QUERY,
            "--out", str(target))
        assert json.loads(target.read_text())["answers"] == [["Tom Waits", "38.5"]]

    def test_unknown_predicate(self, capsys, tmp_path):
        q = tmp_path / "q.dl"
        q.write_text("Ans(x) :- Nowhere(x).")
        code, _, err = run(capsys, "answer", "--system", SYSTEM, "--data", DATA,
                           "--query", str(q))
        assert code == 2 and "UnknownPredicate" in err


class TestRewrite:
    def test_default_is_view_unfold(self, capsys):
        code, out, _ = run(capsys, "rewrite", "--system", SYSTEM, "--query", QUERY)
        assert code == 0
        assert out == (RUNNING / "stage2.golden").read_text()

    def test_trace(self, capsys):
        _, out, _ = run(capsys, "rewrite", "--system", SYSTEM, "--query", QUERY, "--trace")
        assert out.startswith("% nickname-substitution\n")
        assert "% view-unfold" in out and "% cqp-unfold" not in out

    def test_unfold_cqps(self, capsys):
        _, out, _ = run(capsys, "rewrite", "--system", SYSTEM, "--query", QUERY,
                        "--unfold-cqps")
        assert "Certified" not in out and "C(" in out

    def test_magic(self, capsys):
        _, out, _ = run(capsys, "rewrite", "--system", str(APPENDIX / "system.dqx"),
                        "--query", str(APPENDIX / "query.dl"), "--magic")
        adorned, magic = out.split("% magic\n")
        assert adorned.startswith("% adorned\n")
        assert magic == (APPENDIX / "magic.golden").read_text()

    def test_bad_binding_flag(self, capsys):
        code, _, _ = run(capsys, "rewrite", "--system", str(APPENDIX / "system.dqx"),
                         "--query", str(APPENDIX / "query.dl"), "--magic",
                         "--bindings", "C=bf")
        assert code == 2

    def test_identity_system_echoes_query(self, capsys, tmp_path):
        system = tmp_path / "id.dqx"
        system.write_text("[source]\nR(a: str).\n[context]\nR'(a: str).\n"
                          "[mapping]\ncopy R -> R'.\n[quality]\nR'_P(x) :- R'(x).\n")
        q = tmp_path / "q.dl"
        q.write_text("Ans(x) :- R(x).")
        _, out, _ = run(capsys, "rewrite", "--system", str(system), "--query", str(q))
        assert out == "Ans(x) :- R'(x).\n"


class TestMetrics:
    def test_against_given_quality(self, capsys, tmp_path):
        qdir = tmp_path / "q"
        qdir.mkdir()
        shutil.copy(RUNNING / "data" / "TempNoon.csv", qdir / "TempNoon.csv")
        code, out, _ = run(capsys, "metrics", "--system", SYSTEM, "--data", DATA,
                           "--quality", str(qdir))
        assert code == 0
        rep = json.loads(out)
        assert rep["qm0"] == 0 and rep["qm1"]["num"] == 0


class TestColor:
    def test_plain_when_disabled(self, capsys, monkeypatch, tmp_path):
        monkeypatch.setattr(sys.stderr, "isatty", lambda: True, raising=False)
        monkeypatch.setenv("DQCTX_COLOR", "0")
        _, _, err = run(capsys, "assess", "--system", SYSTEM, "--data", str(tmp_path))
        assert "\033[" not in err

    def test_colored_on_a_terminal(self, capsys, monkeypatch, tmp_path):
        monkeypatch.setattr(sys.stderr, "isatty", lambda: True, raising=False)
        monkeypatch.setenv("DQCTX_COLOR", "1")
        _, _, err = run(capsys, "assess", "--system", SYSTEM, "--data", str(tmp_path))
        assert "\033[31m" in err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("dqctx ")
