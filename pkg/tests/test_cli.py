import json

import pytest

from qamlab import cli
from qamlab.cli import main
from qamlab.core.config import settings
from qamlab.models.rational import parse_rational, render_approx


@pytest.fixture(autouse=True)
def isolated(monkeypatch) -> None:
    monkeypatch.setattr(settings, "TRACE_DIR", None)
    # keep the package logger off the captured streams
    monkeypatch.setattr(cli, "configure_logging", lambda level=None: None)


def run(capsys, *argv: str) -> tuple[int, dict | None, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out else None
    return code, report, captured.err


def test_subset_sum_member(capsys) -> None:
    code, report, _ = run(capsys, "subset-sum", "11$1$10$", "--maximize")
    assert code == 0
    assert report["command"] == "subset-sum"
    assert report["result"]["overall_accept"]["exact"] == "1/1"
    assert report["result"]["selection"] == [1, 2]


def test_subset_sum_nonmember(capsys) -> None:
    code, report, _ = run(capsys, "subset-sum", "100$1$10$")
    assert code == 0
    assert report["arguments"]["maximize"] is True
    assert report["result"]["overall_accept"]["exact"] == "1/10"


def test_subset_sum_selection(capsys) -> None:
    code, report, _ = run(capsys, "subset-sum", "11$1$10$", "--selection", "2", "--trace")
    assert code == 0
    assert report["arguments"]["selection"] == [2]
    assert report["result"]["overall_accept"]["exact"] == "1/10"
    assert len(report["result"]["round"]["trace"]) == len("11$1$10$") + 1


def test_malformed_instance_exits_with_two(capsys) -> None:
    code, report, err = run(capsys, "subset-sum", "xx")
    assert code == 2
    assert report is None
    assert "malformed instance" in err


def test_output_is_deterministic(capsys) -> None:
    main(["subset-sum", "101$11$1$"])
    first = capsys.readouterr().out
    main(["subset-sum", "101$11$1$"])
    assert capsys.readouterr().out == first


def test_exact_and_display_forms_agree(capsys) -> None:
    _, report, _ = run(capsys, "subset-sum", "100$1$1$")
    pair = report["result"]["overall_accept"]
    assert pair["exact"] == "1/37"
    assert render_approx(parse_rational(pair["exact"]), settings.DISPLAY_DIGITS) == pair["approx"]


def test_dtm_protocol_with_the_honest_prover(capsys, data_dir) -> None:
    code, report, _ = run(capsys, "dtm-protocol", "--machine", str(data_dir / "ends_with_a.tm"), "--input", "a")
    assert code == 0
    outcome = report["result"]["outcome"]
    assert outcome["classification"] == "exact"
    assert outcome["overall_accept"]["exact"] == "1/1"
    assert report["result"]["rounds"] == []


def test_silent_prover_never_halts(capsys, data_dir) -> None:
    code, report, _ = run(
        capsys, "dtm-protocol", "--machine", str(data_dir / "ends_with_a.tm"), "--input", "a", "--prover", "silent"
    )
    assert code == 0
    assert report["result"]["outcome"]["classification"] == "never-halts"


def test_protocol_checks_the_machine_kind(capsys, data_dir) -> None:
    code, _, err = run(capsys, "dtm-protocol", "--machine", str(data_dir / "contains_a.tm"), "--input", "a")
    assert code == 2
    assert "needs machine type DTM" in err


def test_unknown_prover(capsys, data_dir) -> None:
    code, _, err = run(
        capsys, "dtm-protocol", "--machine", str(data_dir / "ends_with_a.tm"), "--prover", "sneaky"
    )
    assert code == 2
    assert "Unknown prover kind" in err


def test_q1afa_search_on_a_dtm(capsys, data_dir) -> None:
    code, report, _ = run(capsys, "q1afa", "--machine", str(data_dir / "ends_with_a.tm"), "--input", "a")
    assert code == 0
    assert report["arguments"]["type"] == "dtm"
    assert report["result"]["status"] == "Accepted"
    assert report["result"]["witness"]["kind"] == "existential"


def test_q1afa_file_is_evaluated_exactly(capsys, data_dir) -> None:
    code, report, _ = run(capsys, "q1afa", "--machine", str(data_dir / "coin.qm"), "--input", "ab")
    assert code == 0
    assert report["result"]["verdict"] == "Accept"
    assert report["result"]["certificate"]["method"] == "density"


def test_tree_eval(capsys, data_dir) -> None:
    code, report, _ = run(capsys, "tree-eval", "--spec", str(data_dir / "retry.ips"), "--oracle")
    assert code == 0
    result = report["result"]
    assert result["accepted"] is True and result["value"] == "true"
    assert result["trace"] == (data_dir / "retry.tree").read_text(encoding="utf-8").splitlines()
    assert result["oracle"]["probability"]["exact"] == "1/1"


def test_halting_bound(capsys, data_dir) -> None:
    code, report, _ = run(capsys, "halting-bound", "--elements", str(data_dir / "shift.mat"))
    assert code == 0
    assert report["result"]["verdict"] == "HaltsAt"
    assert report["result"]["index"] == 2
    assert report["result"]["bound"] == 4


def test_missing_file(capsys) -> None:
    code, _, err = run(capsys, "halting-bound", "--elements", "/nonexistent/shift.mat")
    assert code == 2
    assert "cannot read" in err


def test_nonpositive_transcript_horizon(capsys, data_dir) -> None:
    code, _, err = run(
        capsys, "dtm-protocol", "--machine", str(data_dir / "ends_with_a.tm"), "--max-transcript", "0"
    )
    assert code == 2
    assert "must be positive" in err


def test_trace_dir_receives_the_report(capsys, data_dir, tmp_path) -> None:
    code, report, _ = run(
        capsys, "tree-eval", "--spec", str(data_dir / "retry.ips"), "--trace-dir", str(tmp_path / "traces")
    )
    assert code == 0
    dumped = tmp_path / "traces" / "tree-eval.json"
    assert report["trace_file"] == str(dumped)
    assert json.loads(dumped.read_text(encoding="utf-8")) == report


def test_report_is_always_json(capsys) -> None:
    code, report, _ = run(capsys, "subset-sum", "11$1$10$")
    assert code == 0 and report["command"] == "subset-sum"
    with pytest.raises(SystemExit) as exc:
        main(["subset-sum", "11$1$10$", "--json"])
    assert exc.value.code == 2
    assert "unrecognized arguments: --json" in capsys.readouterr().err
