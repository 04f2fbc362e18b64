import json
import shutil
from pathlib import Path

import pytest

import fedinet.client
from fedinet import report
from fedinet.cli import main
from fedinet.config import Config, ConfigError, from_mapping, load_config
from fedinet.report import analyze, report_files, validate, write_atomic_dir
from fedinet.ties import Dataset
from conftest import mock_network

FIXTURE = Path(__file__).parent / "fixtures" / "dataset"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def dataset_copy(tmp_data):
    dst = tmp_data / "ds"
    shutil.copytree(FIXTURE, dst)
    return dst


def _dir_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(Path(root).iterdir())}


def test_validate_fixture_ok(capsys):
    assert main(["validate", str(FIXTURE)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_negative_count(dataset_copy, capsys):
    ties = dataset_copy / Dataset.TIES
    lines = ties.read_bytes().decode().split("\r\n")
    cells = lines[1].split(",")
    cells[2] = "-3"
    lines[1] = ",".join(cells)
    ties.write_text("\r\n".join(lines), newline="")
    assert main(["validate", str(dataset_copy)]) == 1
    out = capsys.readouterr().out
    assert "VIOLATION: ties.csv row 2" in out and "C=-3 violates C >= 1" in out


def test_validate_self_loop(dataset_copy, capsys):
    with open(dataset_copy / Dataset.INTERACTIONS, "a") as f:
        f.write('{"alter":"a@x","ego":"a@x","kind":"reply","timestamp":"2023-01-01T00:00:00Z","toot_id":"z"}\n')
    assert main(["validate", str(dataset_copy)]) == 1
    assert "self-interaction" in capsys.readouterr().out


def test_validate_stale_ties(dataset_copy):
    ties = dataset_copy / Dataset.TIES
    lines = ties.read_bytes().decode().split("\r\n")
    del lines[3]
    ties.write_text("\r\n".join(lines), newline="")
    assert any("rebuilt" in v for v in validate(Dataset.open(dataset_copy)))


def test_analyze_is_deterministic_and_parallel_safe(tmp_data):
    assert main(["analyze", str(FIXTURE), "--out", str(tmp_data / "r1")]) == 0
    assert main(["analyze", str(FIXTURE), "--out", str(tmp_data / "r2"), "--jobs", "2"]) == 0
    a, b = _dir_bytes(tmp_data / "r1"), _dir_bytes(tmp_data / "r2")
    sa, sb = json.loads(a.pop("summary.json")), json.loads(b.pop("summary.json"))
    assert a == b
    # the echoed config records the worker count and nothing else differs
    assert sb["config"].pop("jobs") == 2 and sa["config"].pop("jobs") == 1
    assert sa == sb


def test_report_echoes_config(tmp_data):
    cfg = tmp_data / "c.json"
    cfg.write_text(json.dumps({"bandwidth_quantile": 0.5}))
    main(["analyze", str(FIXTURE), "--out", str(tmp_data / "r"), "--config", str(cfg)])
    summary = json.loads((tmp_data / "r" / "summary.json").read_text())
    assert summary["config"]["bandwidth_quantile"] == 0.5
    assert summary["dataset_config"] == Dataset.open(FIXTURE).config


def test_rings_flag_changes_only_stat_tables(tmp_data):
    main(["analyze", str(FIXTURE), "--out", str(tmp_data / "c")])
    main(["analyze", str(FIXTURE), "--out", str(tmp_data / "r"), "--rings"])
    a, b = _dir_bytes(tmp_data / "c"), _dir_bytes(tmp_data / "r")
    changed = {k for k in a if a[k] != b[k]}
    assert changed <= {"table_VIII.csv", "table_IX.csv", "summary.json"}
    assert "table_VIII.csv" in changed


def test_unknown_config_key_is_usage_error(tmp_data, capsys):
    cfg = tmp_data / "c.toml"
    cfg.write_text("[fedinet]\nbandwith_quantile = 0.4\n")
    with pytest.raises(SystemExit) as info:
        main(["analyze", str(FIXTURE), "--config", str(cfg), "--out", str(tmp_data / "r")])
    assert info.value.code == 2
    assert "bandwith_quantile" in capsys.readouterr().err


def test_config_validation():
    with pytest.raises(ConfigError) as info:
        from_mapping({"acquisition_date": "2024-02-01"})
    assert info.value.key == "acquisition_date"
    with pytest.raises(ConfigError):
        from_mapping({"min_contacts": 1.5})
    with pytest.raises(ConfigError):
        from_mapping({"focus_categories": ["Lurkers"]})
    with pytest.raises(ConfigError):
        from_mapping({"exclude_bots": "yes"})
    assert load_config(None) == Config()


def test_focus_categories_restrict_structural_tables(tmp_data):
    ds = Dataset.open(FIXTURE)
    only_old = analyze(ds, Config(focus_categories=("Others1",)))
    assert only_old.focus_egos == ["old@fixture.example"]
    assert list(only_old.egonets) == ["old@fixture.example"]


def test_bots_excluded_unless_disabled():
    ds = Dataset.open(FIXTURE)
    assert "bot@fixture.example" not in analyze(ds).categories
    assert "bot@fixture.example" in analyze(ds, Config(exclude_bots=False)).categories


def test_atomic_dir_replaces_whole_directory(tmp_data):
    out = tmp_data / "rep"
    write_atomic_dir(out, {"a.csv": "1\r\n", "b.csv": "2\r\n"})
    write_atomic_dir(out, {"a.csv": "3\r\n"})
    assert _dir_bytes(out) == {"a.csv": b"3\r\n"}
    assert [p.name for p in tmp_data.iterdir()] == ["rep"]


def test_atomic_dir_failure_keeps_previous(tmp_data, monkeypatch):
    out = tmp_data / "rep"
    write_atomic_dir(out, {"a.csv": "old"})

    class Boom(dict):
        def items(self):
            yield "a.csv", "new"
            raise RuntimeError("disk full")

    with pytest.raises(RuntimeError):
        write_atomic_dir(out, Boom())
    assert _dir_bytes(out) == {"a.csv": b"old"}
    assert [p.name for p in tmp_data.iterdir()] == ["rep"]


def test_data_dir_env(tmp_data, monkeypatch, capsys):
    shutil.copytree(FIXTURE, tmp_data / "fx")
    monkeypatch.setenv("FEDINET_DATA_DIR", str(tmp_data))
    assert main(["analyze", "fx", "--out", "rep"]) == 0
    assert (tmp_data / "rep" / "table_V.csv").is_file()


def test_missing_dataset(tmp_data, capsys):
    assert main(["validate", str(tmp_data / "none")]) == 2


def test_synth_command(tmp_data, capsys):
    model = tmp_data / "model.json"
    model.write_text(json.dumps({
        "ring_sizes": [2, 5], "ring_frequencies": [40.0, 6.0],
        "window": ["2022-07-01T00:00:00Z", "2024-01-01T00:00:00Z"],
    }))
    assert main(["synth", "--model", str(model), "--n-egos", "3", "--seed", "1", "--out", str(tmp_data / "s")]) == 0
    assert (tmp_data / "s" / "ground_truth.csv").is_file()
    assert main(["validate", str(tmp_data / "s")]) == 0


def test_crawl_command(tmp_data, monkeypatch, capsys):
    fake, names, _ = mock_network()
    real = fedinet.client.MastodonClient
    monkeypatch.setattr(fedinet.client, "MastodonClient",
                        lambda: real(fake.transport(), clock=fake.clock, sleep=fake.sleep))
    out = tmp_data / "crawl"
    assert main(["crawl", "--seed", names[0], "--target-n", "4", "--t-end", "2023-12-31", "--out", str(out)]) == 0
    assert len(Dataset.open(out).accounts()) == 4
    assert main(["validate", str(out)]) == 0


def test_report_files_cover_every_table():
    files = report_files(analyze(Dataset.open(FIXTURE)))
    expected = {"summary.json", "table_IV_categories.csv", "fig2_daily.csv", "fig3_mix.csv", "fig4_size_activity.csv",
                "fig5_lifespan.csv", "alters_per_ego.csv", "circle_histogram.csv", "meanshift_debug.json"}
    expected |= {"table_%s.csv" % r for r in ("V", "VI", "VII", "VIII", "IX")}
    assert set(files) == expected
    assert report.fmt(None) == "" and report.fmt(0.5) == "0.500000" and report.fmt(3) == "3"
