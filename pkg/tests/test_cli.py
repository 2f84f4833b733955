import json

import pytest
from click.testing import CliRunner

from hotspot_cli import datafiles, pipeline
from hotspot_cli.cli import cli
from hotspot_cli.grid import GridSpec
from hotspot_cli.synth import Blob, PoiLayer, Scenario
from hotspot_cli.synth.scenario import GridModel

from tests.conftest import write_csv

BBOX = ["0", "0", "6400", "6400"]
FAST = ["--permutations", "99", "--seed", "42"]
MW_CSV = pipeline.mann_whitney_csv("HH", "LH")


def _json(result):
    """JSON document printed by a command run with --format json."""
    text = result.output
    return json.loads(text[text.index("{"):text.rindex("}") + 1])


def _run(*args):
    result = CliRunner().invoke(cli, list(args))
    assert result.exit_code == 0, result.output
    return result


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    for var in ("HOTSPOT_CONFIG_PATH", "HOTSPOT_SEED", "HOTSPOT_PERMUTATIONS", "DOTENV_PATH"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.setenv("HOME", str(tmp_path / "home"))
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def synth_data(workdir):
    """16x16 field with a shared crash/high-G blob, a high-G-only blob and POI layers."""
    scenario = Scenario(
        grid=GridModel(n_rows=16, n_cols=16, cell_size=400.0),
        baseline_intensity=2.0,
        blobs=[Blob(center_row=4, center_col=4, radius=2, amplitude=6.0)],
        y_blobs=[Blob(center_row=11, center_col=11, radius=2, amplitude=6.0)],
        seed=8,
        pois=[PoiLayer(kind="school", baseline=0.5, follows="x"),
              PoiLayer(kind="fuel_station", baseline=0.5, follows="y")],
    )
    scenario.dump(workdir / "scenario.json")
    _run("synth", "--scenario", "scenario.json", "--out-dir", "data")
    return workdir / "data"


def _pipeline_args(data, out, *extra):
    return ["pipeline", "--crashes", str(data / "crashes.csv"), "--highg", str(data / "highg.csv"),
            "--pois", str(data / "pois.csv"), "--bbox", *BBOX, "--out-dir", str(out), *FAST, *extra]


def test_synth_writes_files(synth_data):
    for name in ("crashes.csv", "highg.csv", "pois.csv", "counts.csv", "grid.json", "scenario.json"):
        assert (synth_data / name).exists()
    assert (synth_data / "pois.csv").read_text().startswith("kind,x,y\n")


def test_synth_json_output(workdir):
    result = _run("--format", "json", "synth", "--preset", "null", "--seed", "3", "--out-dir", "null")
    data = _json(result)
    assert data["seed"] == 3
    assert (data["n_rows"], data["n_cols"]) == (30, 30)
    assert not (workdir / "null" / "pois.csv").exists()


def test_synth_rejects_both_sources(synth_data):
    result = CliRunner().invoke(cli, ["synth", "--scenario", "scenario.json", "--preset", "null"])
    assert result.exit_code == 2


def test_pipeline_writes_bundle(synth_data, workdir):
    result = _run("--format", "json", *_pipeline_args(synth_data, workdir / "out"))
    data = _json(result)
    assert data["n_cells"] == 256
    assert [row["name"] for row in data["global_stats"]] == ["moran_crash", "moran_highg", "bivariate_crash_highg"]
    assert sum(data["lisa_groups"].values()) == 256
    assert data["lisa_groups"]["HH"] > 0
    assert data["lisa_groups"]["LH"] > 0
    assert [(c["group_a"], c["group_b"]) for c in data["mann_whitney"]] == [("HH", "LH")]
    assert len(data["mann_whitney"][0]["results"]) == 2

    out = workdir / "out"
    for name in pipeline.STAGE_ARTIFACTS + (MW_CSV, pipeline.MANIFEST_JSON):
        assert (out / name).exists(), name
    manifest = json.loads((out / pipeline.MANIFEST_JSON).read_text())
    assert manifest["parameters"]["permutations"] == 99
    assert manifest["parameters"]["bbox"] == [0.0, 0.0, 6400.0, 6400.0]
    assert manifest["grid"]["n_cells"] == 256
    assert manifest["mann_whitney"]["comparisons"] == [
        {"group_a": "HH", "group_b": "LH", "file": MW_CSV, "n_tests": 2},
    ]
    assert set(manifest["outputs"]) == set(pipeline.STAGE_ARTIFACTS) | {MW_CSV}
    assert manifest["parameters"]["group_b"] == ["LH"]
    assert "output_dir" not in manifest["parameters"]


def test_thread_count_does_not_change_outputs(synth_data, workdir):
    _run("--threads", "1", *_pipeline_args(synth_data, workdir / "one"))
    _run("--threads", "4", *_pipeline_args(synth_data, workdir / "four"))
    for name in pipeline.STAGE_ARTIFACTS + (MW_CSV, pipeline.MANIFEST_JSON):
        assert (workdir / "one" / name).read_bytes() == (workdir / "four" / name).read_bytes(), name


def test_stages_match_pipeline(synth_data, workdir):
    _run(*_pipeline_args(synth_data, workdir / "full"))

    staged = ["--out-dir", "staged"]
    _run("grid", "--crashes", str(synth_data / "crashes.csv"), "--highg", str(synth_data / "highg.csv"),
         "--bbox", *BBOX, *staged)
    _run("weights", *staged)
    _run("global", *FAST, *staged)
    _run("local", *FAST, *staged)
    _run("bivariate", *FAST, *staged)
    _run("classify", *staged)
    _run("characterize", "--pois", str(synth_data / "pois.csv"), *staged)

    for name in pipeline.STAGE_ARTIFACTS + (MW_CSV,):
        assert (workdir / "staged" / name).read_bytes() == (workdir / "full" / name).read_bytes(), name


def test_local_moran_stage(synth_data):
    _run("grid", "--crashes", str(synth_data / "crashes.csv"), "--highg", str(synth_data / "highg.csv"),
         "--out-dir", "lm")
    _run("weights", "--kind", "rook", "--out-dir", "lm")
    result = _run("--format", "json", "local", "--statistic", "moran", "--variable", "highg_count",
                  *FAST, "--out-dir", "lm")
    data = _json(result)
    assert data["statistic"] == "moran"
    assert sum(data["groups"].values()) == data["n_cells"]
    header = (synth_data.parent / "lm" / pipeline.LOCAL_MORAN_CSV).read_text().splitlines()[0]
    assert header == "cell_id,lm_moran,lm_lag,lm_focal,lm_p"


def test_pipeline_uses_config_file(synth_data, workdir):
    (workdir / "run.yaml").write_text(
        f"crashes: {synth_data / 'crashes.csv'}\n"
        f"highg: {synth_data / 'highg.csv'}\n"
        "permutations: 49\n"
        "weights: rook\n"
        "output_dir: from_config\n"
    )
    _run("--config", "run.yaml", "pipeline")
    manifest = json.loads((workdir / "from_config" / pipeline.MANIFEST_JSON).read_text())
    assert manifest["parameters"]["permutations"] == 49
    assert manifest["parameters"]["weights"] == "rook"
    assert not (workdir / "from_config" / MW_CSV).exists()


def test_missing_inputs_exit_2(workdir):
    result = CliRunner().invoke(cli, ["pipeline"])
    assert result.exit_code == 2
    result = CliRunner().invoke(cli, ["pipeline", "--crashes", "nope.csv", "--highg", "nope.csv"])
    assert result.exit_code == 2
    assert "nope.csv" in result.output


def test_bad_row_exit_2_with_line(workdir):
    write_csv(workdir / "crashes.csv", "x,y", [(1, 1), (2, "two")])
    write_csv(workdir / "highg.csv", "x,y", [(1, 1)])
    result = CliRunner().invoke(cli, ["pipeline", "--crashes", "crashes.csv", "--highg", "highg.csv"])
    assert result.exit_code == 2
    assert "crashes.csv:3:" in result.output


def test_constant_counts_exit_3(workdir):
    # One crash at the center of each of four cells.
    write_csv(workdir / "crashes.csv", "x,y", [(200, 200), (600, 200), (200, 600), (600, 600)])
    write_csv(workdir / "highg.csv", "x,y", [(200, 200), (210, 210), (600, 600)])
    result = CliRunner().invoke(cli, [
        "pipeline", "--crashes", "crashes.csv", "--highg", "highg.csv", "--bbox", "0", "0", "800", "800",
        "--permutations", "9",
    ])
    assert result.exit_code == 3


def test_invalid_flag_value_exit_2(synth_data):
    result = CliRunner().invoke(cli, _pipeline_args(synth_data, "bad", "--lisa-alpha", "2"))
    assert result.exit_code == 2


def test_config_init_and_show(workdir):
    _run("config", "init")
    assert (workdir / "hotspot.yaml").exists()
    result = CliRunner().invoke(cli, ["config", "init"])
    assert result.exit_code == 2
    data = _json(_run("--format", "json", "config", "show"))
    assert data["crashes"] == "crashes.csv"
    assert data["permutations"] == 999


def test_version():
    result = _run("--version")
    assert "hotspot-cli" in result.output


def _classified_grid(workdir):
    """3x3 grid whose cells.csv holds three HH, three HL and three LH cells."""
    out = workdir / "groups"
    out.mkdir()
    datafiles.write_grid(GridSpec(0.0, 0.0, 100.0, 3, 3), out / pipeline.GRID_JSON)
    quadrants = ["HH", "HH", "HH", "HL", "HL", "HL", "LH", "LH", "LH"]
    write_csv(out / pipeline.CELLS_CSV, "cell_id,lisa_quadrant", list(enumerate(quadrants)))
    # Two schools in each HH cell, one bench in each LH cell.
    pois = [("school", 50, 50), ("school", 60, 60), ("school", 150, 50), ("school", 160, 60),
            ("school", 250, 50), ("school", 260, 60), ("bench", 50, 250), ("bench", 150, 250),
            ("bench", 250, 250)]
    write_csv(workdir / "pois.csv", "kind,x,y", pois)
    return out


def test_characterize_writes_one_table_per_pair(workdir):
    out = _classified_grid(workdir)
    result = _run("--format", "json", "characterize", "--pois", "pois.csv", "--group-b", "HL",
                  "--group-b", "LH", "--out-dir", str(out))
    data = _json(result)
    assert data["group_b"] == ["HL", "LH"]
    assert [c["file"] for c in data["comparisons"]] == ["mann_whitney_HH_vs_HL.csv", "mann_whitney_HH_vs_LH.csv"]
    assert data["n_tests"] == 4
    for entry in data["comparisons"]:
        assert (out / entry["file"]).read_text().startswith(
            "poi_type,u_statistic,p_value,mean_group_a,mean_group_b,significant\n")
    schools = {c["group_b"]: r for c in data["comparisons"] for r in c["results"] if r["poi_type"] == "school"}
    assert schools["HL"]["mean_group_a"] == 2.0
    assert schools["LH"]["mean_group_b"] == 0.0


def test_characterize_drops_tables_of_pairs_no_longer_compared(workdir):
    out = _classified_grid(workdir)
    _run("characterize", "--pois", "pois.csv", "--group-b", "HL", "--group-b", "LH", "--out-dir", str(out))
    _run("characterize", "--pois", "pois.csv", "--group-a", "LH", "--group-b", "HH", "--out-dir", str(out))
    assert sorted(p.name for p in out.glob("mann_whitney_*.csv")) == ["mann_whitney_LH_vs_HH.csv"]


@pytest.mark.parametrize("groups", [["--group-b", "HH"], ["--group-b", "LH", "--group-b", "LH"]])
def test_characterize_rejects_bad_pairs(workdir, groups):
    out = _classified_grid(workdir)
    result = CliRunner().invoke(cli, ["characterize", "--pois", "pois.csv", *groups, "--out-dir", str(out)])
    assert result.exit_code == 2
