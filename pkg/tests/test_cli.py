"""End-to-end command line checks on temporary directories."""

import json
import shutil
import subprocess
import sys

import pytest

from blog.bglss import load_beta_draws
from blog.cli import main
from blog.longdata import load_long_csv

FIT_FAST = ["--iters", "400", "--burnin", "200", "--mcem-rounds", "1", "--mcem-inner", "100"]


@pytest.fixture(scope="module")
def panel_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "panel"
    assert main(["simulate", "--preset", "s30", "--seed", "3", "--out", str(out)]) == 0
    return out


def data_flags(panel_dir):
    return ["--data", str(panel_dir / "panel.csv")]


def test_simulate_writes_loadable_panel(panel_dir, capsys):
    names = sorted(p.name for p in panel_dir.iterdir())
    assert names == ["panel.csv", "scenario.json", "truth.csv"]
    ds = load_long_csv(panel_dir / "panel.csv")
    assert ds.n_features == 30
    assert ds.n_subjects == 15


def test_simulate_is_deterministic(tmp_path, panel_dir):
    again = tmp_path / "again"
    assert main(["simulate", "--preset", "s30", "--seed", "3", "--out", str(again)]) == 0
    for name in ("panel.csv", "truth.csv", "scenario.json"):
        assert (again / name).read_bytes() == (panel_dir / name).read_bytes()


def test_screen_csv_and_json(tmp_path, panel_dir, capsys):
    out_csv = tmp_path / "screen.csv"
    out_json = tmp_path / "screen.json"
    assert main(["screen", *data_flags(panel_dir), "--g", "sqrtn", "--out", str(out_csv)]) == 0
    assert "30 features ranked, 0 skipped" in capsys.readouterr().out
    assert main(["screen", *data_flags(panel_dir), "--g", "sure", "--out", str(out_json)]) == 0

    header = out_csv.read_text().splitlines()[0]
    assert header.startswith("rank,feature,")
    payload = json.loads(out_json.read_text())
    assert len(payload["reports"]) == 30
    assert payload["skipped"] == []


def test_screen_fixed_g_rerun_is_byte_identical(tmp_path, panel_dir):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["screen", *data_flags(panel_dir), "--g", "fixed:45", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gbf_outputs(tmp_path, panel_dir):
    out_csv = tmp_path / "gbf.csv"
    out_json = tmp_path / "gbf.json"
    assert main(["gbf", *data_flags(panel_dir), "--out", str(out_csv)]) == 0
    assert main(["gbf", *data_flags(panel_dir), "--out", str(out_json)]) == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "rank,feature,log_gbf"
    assert len(lines) == 31
    payload = json.loads(out_json.read_text())
    assert [r["rank"] for r in payload["reports"]] == list(range(1, 31))


def test_fit_group_json_with_draw_dump(tmp_path, panel_dir, capsys):
    out = tmp_path / "fit.json"
    dump = tmp_path / "draws.bin"
    code = main(
        ["fit-group", *data_flags(panel_dir), *FIT_FAST,
         "--dump-draws", str(dump), "--out", str(out)]
    )
    assert code == 0
    assert "groups selected" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert len(payload["groups"]) == 30
    assert payload["n_kept"] == 200
    assert len(payload["lambda_trace"]) == 2
    # 4 time points give 6 lagged-change columns per feature
    draws = load_beta_draws(dump)
    assert draws.shape == (200, 180)


def test_fit_group_csv_rerun_is_byte_identical(tmp_path, panel_dir):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["fit-group", *data_flags(panel_dir), *FIT_FAST, "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    medians = ",".join("median_%d" % j for j in range(1, 7))
    assert header == "group,feature,selected,inclusion_prop," + medians


def test_study_uni(tmp_path, capsys):
    out = tmp_path / "study.json"
    code = main(["study-uni", "--preset", "s30", "--g", "sqrtn",
                 "--reps", "3", "--seed", "1", "--out", str(out)])
    assert code == 0
    assert "s30/sqrtn: 3 replicates" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert payload["replicates"] == 3
    assert len(payload["replicate_outcomes"]) == 3


def test_study_multi(tmp_path):
    out = tmp_path / "multi.json"
    code = main(["study-multi", "--preset", "s30", "--reps", "2", "--seed", "1",
                 "--iters", "300", "--burnin", "100", "--mcem-rounds", "0",
                 "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["kind"] == "multivariate"
    assert payload["replicates"] == 2


def test_invalid_flags_exit_1(tmp_path, panel_dir, capsys):
    out = tmp_path / "x.csv"
    assert main(["screen", *data_flags(panel_dir), "--g", "cubic", "--out", str(out)]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["screen", *data_flags(panel_dir), "--g", "sqrtn", "--out", str(tmp_path / "x.txt")]) == 1
    assert main(["screen", *data_flags(panel_dir), "--g", "fixed:abc", "--out", str(out)]) == 1


def test_bad_data_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("subject,time,response,f0001\ns001,1,2.0,\n")
    assert main(["screen", "--data", str(bad), "--g", "sqrtn", "--out", str(tmp_path / "o.csv")]) == 1
    assert "error:" in capsys.readouterr().err


def test_wrong_column_name_exits_1(tmp_path, panel_dir, capsys):
    code = main(["screen", *data_flags(panel_dir), "--response", "nope",
                 "--g", "sqrtn", "--out", str(tmp_path / "o.csv")])
    assert code == 1


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit):
        main([])


def test_console_script_smoke():
    exe = shutil.which("blog")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "simulate" in proc.stdout
