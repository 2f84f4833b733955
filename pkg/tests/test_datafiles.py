import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from hotspot_cli import datafiles
from hotspot_cli.errors import InputParseError, ValidationError
from hotspot_cli.grid import CellVariable, EventPoint, GridSpec
from hotspot_cli.localstats import LocalStatRow, getis_ord_gstar
from hotspot_cli.weights import include_self

from tests.conftest import write_csv


def test_read_points(tmp_path):
    path = write_csv(tmp_path / "crashes.csv", "x,y", [(1.5, 2.0), (3, 4)])
    points = datafiles.read_points(path)
    assert points == [EventPoint(1.5, 2.0), EventPoint(3.0, 4.0)]


def test_read_points_reports_line_of_bad_value(tmp_path):
    path = write_csv(tmp_path / "crashes.csv", "x,y", [(1, 2), (3, 4), ("abc", 5)])
    with pytest.raises(InputParseError) as info:
        datafiles.read_points(path)
    assert info.value.line == 4
    assert "crashes.csv:4:" in str(info.value)


def test_read_points_rejects_non_finite(tmp_path):
    path = write_csv(tmp_path / "crashes.csv", "x,y", [(1, "inf")])
    with pytest.raises(InputParseError) as info:
        datafiles.read_points(path)
    assert info.value.line == 2


def test_read_points_missing_column(tmp_path):
    path = write_csv(tmp_path / "crashes.csv", "x,z", [(1, 2)])
    with pytest.raises(InputParseError) as info:
        datafiles.read_points(path)
    assert info.value.line == 1


def test_read_points_missing_file(tmp_path):
    with pytest.raises(InputParseError, match="not found"):
        datafiles.read_points(tmp_path / "absent.csv")


def test_pois_need_a_kind(tmp_path):
    path = write_csv(tmp_path / "pois.csv", "kind,x,y", [("school", 1, 1), (" ", 2, 2)])
    with pytest.raises(InputParseError) as info:
        datafiles.read_points(path, require_kind=True)
    assert info.value.line == 3
    with pytest.raises(InputParseError):
        datafiles.read_points(write_csv(tmp_path / "p.csv", "x,y", [(1, 1)]), require_kind=True)


def test_points_keep_exact_floats(tmp_path):
    points = [EventPoint(0.1 + 0.2, 1 / 3, "park"), EventPoint(1e-300, 123456789.123456789, "school")]
    datafiles.write_points(points, tmp_path / "p.csv", with_kind=True)
    assert datafiles.read_points(tmp_path / "p.csv", require_kind=True) == points


def test_counts_file(tmp_path):
    g = GridSpec(0, 0, 10, 2, 3)
    crashes = CellVariable("crash_count", [0, 1, 2, 3, 4, 5])
    highg = CellVariable("highg_count", [5, 4, 3, 2, 1, 0])
    path = tmp_path / "counts.csv"
    datafiles.write_counts(g, crashes, highg, path)
    assert path.read_text().splitlines()[:2] == ["cell_id,row,col,crash_count,highg_count", "0,0,0,0,5"]
    x, y = datafiles.read_counts(path, g)
    assert_array_equal(x.values, crashes.values)
    assert_array_equal(y.values, highg.values)
    with pytest.raises(ValidationError):
        datafiles.read_counts(path, GridSpec(0, 0, 10, 3, 3))


def test_counts_ids_must_be_in_order(tmp_path):
    path = write_csv(tmp_path / "counts.csv", "cell_id,crash_count,highg_count", [(0, 1, 1), (2, 1, 1)])
    with pytest.raises(InputParseError) as info:
        datafiles.read_counts(path)
    assert info.value.line == 3


def test_grid_file(tmp_path):
    g = GridSpec(100.0, -50.0, 400.0, 3, 7)
    datafiles.write_grid(g, tmp_path / "grid.json", bbox=(100, -50, 2900, 1150))
    assert datafiles.read_grid(tmp_path / "grid.json") == g
    assert json.loads((tmp_path / "grid.json").read_text())["bbox"] == [100.0, -50.0, 2900.0, 1150.0]


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text('{\n  "origin_x": 0,\n  oops\n}\n')
    with pytest.raises(InputParseError) as info:
        datafiles.read_json(path)
    assert info.value.line == 3


def test_gi_star_file_keeps_values(tmp_path, queen_5x5, rng):
    rows = getis_ord_gstar(rng.poisson(3.0, 25).astype(float), include_self(queen_5x5), permutations=19)
    datafiles.write_gi_star(rows, tmp_path / "gi.csv")
    back = datafiles.read_gi_star(tmp_path / "gi.csv")
    assert [r.statistic for r in back] == [r.statistic for r in rows]
    assert [r.pseudo_p for r in back] == [r.pseudo_p for r in rows]
    assert [r.category for r in back] == [r.category for r in rows]


def test_local_moran_file_marks_isolates(tmp_path):
    rows = [
        LocalStatRow(0, 0.25, 0.5, 0.5, 0.03, "HH"),
        LocalStatRow(1, 0.0, 0.0, -1.0, None, "NotApplicable", isolate=True),
    ]
    path = tmp_path / "bv.csv"
    datafiles.write_local_moran(rows, path, "bv")
    lines = path.read_text().splitlines()
    assert lines[0] == "cell_id,bv_moran,bv_lag,bv_focal,bv_p"
    assert lines[2].endswith(",")
    back = datafiles.read_local_moran(path, "bv")
    assert back[1].isolate and back[1].pseudo_p is None
    assert back[0].statistic == 0.25 and back[0].pseudo_p == 0.03


def test_group_sizes_file(tmp_path):
    path = tmp_path / "groups.csv"
    datafiles.write_group_sizes([("HH", 3), ("LL", 0)], path, labels={"HH": "High-High"})
    assert path.read_text().splitlines() == ["class,description,cells", "HH,High-High,3", "LL,,0"]


def test_geojson_cells(tmp_path):
    import pandas as pd

    g = GridSpec(0, 0, 10, 1, 2)
    props = pd.DataFrame({"cell_id": [0, 1], "gi_p": [0.5, float("nan")], "hotspot_class": ["Hot99", "Cold90"]})
    datafiles.write_geojson(g, props, tmp_path / "cells.geojson", "hotspots")
    data = json.loads((tmp_path / "cells.geojson").read_text())
    assert data["type"] == "FeatureCollection"
    first, second = data["features"]
    ring = first["geometry"]["coordinates"][0]
    assert ring[0] == ring[-1] == [0.0, 0.0]
    assert ring[1] == [10.0, 0.0]
    assert second["id"] == 1
    assert second["properties"]["gi_p"] is None
    assert first["properties"]["hotspot_class"] == "Hot99"


def test_sha256_is_stable(tmp_path):
    path = tmp_path / "a.txt"
    path.write_text("abc")
    assert datafiles.sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test_write_frame_formats(tmp_path):
    import pandas as pd

    frame = pd.DataFrame({"a": [1, 2], "b": [0.1, np.nan], "c": [True, False]})
    datafiles._write_frame(frame, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text() == "a,b,c\n1,0.1,True\n2,,False\n"
