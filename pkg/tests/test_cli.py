import csv
import json
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from taskshare.cli import main
from taskshare.config import ConfigError, load_config, parse_config_text


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def sample_run(tmp_path_factory):
    from taskshare.sample import sample_dir

    out = tmp_path_factory.mktemp("run")
    assert main(["all", "--config", str(sample_dir() / "sample.cfg"), "--output-dir", str(out)]) == 0
    return out


def test_sample_run_artifacts(sample_run):
    for rel in [
        "ingest/counts.csv", "ingest/postings.csv", "ingest/monthly_stats.csv", "ingest/terciles.csv",
        "shares/task_shares.csv", "trend/trend.csv", "forecast/forecasts.csv",
        "forecast/evaluation.csv", "report/summary.md", "report/mape_table.csv", "report/plot_data.csv",
    ]:
        assert (sample_run / rel).is_file(), rel


def test_sample_counts_match_generator(sample_run):
    from taskshare.sample import sample_dir

    expected = json.loads((sample_dir() / "expected.json").read_text())
    report = json.loads((sample_run / "ingest/ingest_report.json").read_text())
    assert len(read_rows(sample_run / "ingest/counts.csv")) == expected["n_cube_rows"]
    assert len(read_rows(sample_run / "ingest/postings.csv")) == expected["n_posting_rows"]
    for key, value in expected["report"].items():
        assert report[key] == value, key


def test_terciles_partition_occupations(sample_run):
    rows = read_rows(sample_run / "ingest/terciles.csv")
    socs = [r["soc"] for r in rows]
    assert len(socs) == len(set(socs)) == 6
    assert sorted(r["tercile"] for r in rows) == ["High", "High", "Low", "Low", "Mid", "Mid"]


def test_24_forecasts_per_series(sample_run):
    per_key = defaultdict(list)
    for r in read_rows(sample_run / "forecast/forecasts.csv"):
        per_key[(r["family"], r["tercile"])].append(r["month"])
    assert per_key
    for months in per_key.values():
        assert months == [f"{y}-{m:02d}" for y in (2016, 2017) for m in range(1, 13)]
    assert ("Information Technology", "Low") not in per_key


def test_forecast_interval_ordered(sample_run):
    for r in read_rows(sample_run / "forecast/forecasts.csv"):
        assert float(r["lower95"]) <= float(r["mean"]) <= float(r["upper95"])


def test_report_mape_table_shape(sample_run):
    rows = read_rows(sample_run / "report/mape_table.csv")
    assert list(rows[0]) == ["family", "High", "Mid", "Low"]
    assert [r["family"] for r in rows] == ["Administration", "Health Care", "Information Technology"]
    it = rows[-1]
    assert it["Low"] == ""
    assert all(float(r[t]) >= 0 for r in rows for t in ("High", "Mid", "Low") if r[t])


def test_summary_mentions_every_family(sample_run):
    text = (sample_run / "report/summary.md").read_text()
    for fam in ("Administration", "Health Care", "Information Technology"):
        assert fam in text


def test_pinned_random_walk_forecasts_lagged_actuals(sample_copy, tmp_path, capsys):
    out = tmp_path / "o"
    args = ["all", "--config", sample_copy / "sample.cfg", "--output-dir", out, "--order", "0,1,0", "--forecast-on", "raw"]
    code, _, err = run(args, capsys)
    assert code == 0, err
    shares = defaultdict(dict)
    for r in read_rows(out / "shares/task_shares.csv"):
        if r["level"] == "FamilyByTercile":
            shares[(r["key1"], r["key2"])][r["month"]] = float(r["value"])
    rows = read_rows(out / "forecast/forecasts.csv")
    assert rows
    for r in rows:
        y, m = map(int, r["month"].split("-"))
        prev = f"{y - (m == 1)}-{12 if m == 1 else m - 1:02d}"
        assert float(r["mean"]) == shares[(r["family"], r["tercile"])].get(prev, 0.0)


def test_missing_postings_is_input_error(sample_copy, tmp_path, capsys):
    (sample_copy / "postings.jsonl").unlink()
    code, _, err = run(["ingest", "--config", sample_copy / "sample.cfg", "--output-dir", tmp_path / "o"], capsys)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "FILE_NOT_FOUND"


def test_empty_postings_is_ok(sample_copy, tmp_path, capsys):
    (sample_copy / "postings.jsonl").write_text("")
    code, out, _ = run(["ingest", "--config", sample_copy / "sample.cfg", "--output-dir", tmp_path / "o"], capsys)
    assert code == 0
    assert json.loads(out)["postings_read"] == 0


def test_shares_without_ingest(sample_copy, tmp_path, capsys):
    code, _, err = run(["shares", "--config", sample_copy / "sample.cfg", "--output-dir", tmp_path / "o"], capsys)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "MISSING_ARTIFACT"


def test_bad_taxonomy_is_input_error(sample_copy, tmp_path, capsys):
    (sample_copy / "taxonomy.csv").write_text("task,family\nPython,IT\n")
    code, _, err = run(["ingest", "--config", sample_copy / "sample.cfg", "--output-dir", tmp_path / "o"], capsys)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "INVALID_INPUT"


def test_bad_order_is_config_error(sample_copy, tmp_path, capsys):
    code, _, err = run(["forecast", "--config", sample_copy / "sample.cfg", "--order", "1,1"], capsys)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "CONFIG_ERROR"


def test_stage_rerun_is_idempotent(sample_copy, tmp_path, capsys):
    out = tmp_path / "o"
    base = ["--config", sample_copy / "sample.cfg", "--output-dir", out]
    assert run(["ingest", *base], capsys)[0] == 0
    assert run(["shares", *base], capsys)[0] == 0
    first = (out / "shares/task_shares.csv").read_bytes()
    assert run(["shares", *base], capsys)[0] == 0
    assert (out / "shares/task_shares.csv").read_bytes() == first


def test_env_output_dir(sample_copy, tmp_path, capsys, monkeypatch):
    target = tmp_path / "from-env"
    monkeypatch.setenv("TASKSHARE_OUTPUT_DIR", str(target))
    assert run(["ingest", "--config", sample_copy / "sample.cfg"], capsys)[0] == 0
    assert (target / "ingest/counts.csv").is_file()
    flag = tmp_path / "from-flag"
    assert run(["ingest", "--config", sample_copy / "sample.cfg", "--output-dir", flag], capsys)[0] == 0
    assert (flag / "ingest/counts.csv").is_file()


def test_sample_subcommand(tmp_path, capsys):
    code, out, _ = run(["sample", tmp_path / "s", "--seed", "3"], capsys)
    assert code == 0
    assert (tmp_path / "s/postings.jsonl").is_file()
    assert json.loads(out)["postings"] > 0


def test_parse_config_text():
    parsed = parse_config_text("# comment\nmonths = 48  \n\norder=1,1,0 # trailing\n")
    assert parsed == {"months": "48", "order": "1,1,0"}


def test_load_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("postings = p.jsonl\nmonths = 84\noutput_dir = out\n")
    cfg = load_config(cfg_file, {"months": 90}, environ={"TASKSHARE_OUTPUT_DIR": "/env/out"})
    assert cfg.postings == tmp_path / "p.jsonl"
    assert cfg.months == 90
    assert cfg.output_dir == Path("/env/out")
    cfg = load_config(cfg_file, {"output_dir": Path("/flag")}, environ={"TASKSHARE_OUTPUT_DIR": "/env/out"})
    assert cfg.output_dir == Path("/flag")


@pytest.mark.parametrize("text", ["months = many\n", "nonsense = 1\n", "smoothing_window = 4\n", "train_months = 96\n"])
def test_load_config_rejects(tmp_path, text):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text(text)
    with pytest.raises(ConfigError):
        load_config(cfg_file, {}, environ={})


def test_identity_partition_in_outputs(sample_run):
    """Family-by-tercile series sum to the same monthly totals as family-by-occupation-family."""
    totals = defaultdict(lambda: defaultdict(float))
    for r in read_rows(sample_run / "shares/task_shares.csv"):
        if r["level"] in ("FamilyByTercile", "FamilyByOccFamily"):
            totals[r["level"]][(r["key1"], r["month"])] += float(r["value"])
    a, b = totals["FamilyByTercile"], totals["FamilyByOccFamily"]
    assert set(a) == set(b)
    assert max(abs(a[k] - b[k]) for k in a) <= 1e-12
    assert np.isfinite(list(a.values())).all()
