"""
End-to-end properties on synthetic fields: agreement with the brute-force oracles,
calibration under the null, power on a planted hotspot, and determinism and run time at city scale.
"""

import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hotspot_cli import datafiles, pipeline
from hotspot_cli.config import PipelineConfig
from hotspot_cli.globalstats import global_bivariate_moran, global_moran
from hotspot_cli.grid import GridSpec
from hotspot_cli.localstats import LisaQuadrant, bivariate_local_moran, getis_ord_gstar, local_moran
from hotspot_cli.permutation import default_threads
from hotspot_cli.synth import gen_counts, gen_points, gen_pois, oracle_stat, preset
from hotspot_cli.weights import contiguity_weights, include_self, row_standardize

HOT = {"Hot99", "Hot95"}


def _stats(rows):
    return np.array([r.statistic for r in rows])


def test_fifty_random_fields_match_oracles():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n_rows, n_cols = (int(v) for v in rng.integers(3, 11, size=2))
        kind = str(rng.choice(["queen", "rook"]))
        n = n_rows * n_cols
        x = rng.poisson(rng.uniform(0.5, 6.0), n).astype(float)
        y = rng.poisson(rng.uniform(0.5, 6.0), n).astype(float)
        if x.std() == 0 or y.std() == 0:
            continue
        binary = contiguity_weights(GridSpec(0, 0, 1, n_rows, n_cols), kind)
        W = row_standardize(binary)
        fast = dict(permutations=1)
        grid_args = (n_rows, n_cols, kind)

        assert global_moran(x, W, **fast).statistic == pytest.approx(
            oracle_stat("global_moran", list(x), *grid_args), rel=1e-12, abs=1e-12)
        assert global_bivariate_moran(x, y, W, **fast).statistic == pytest.approx(
            oracle_stat("global_bivariate", list(x), list(y), *grid_args), rel=1e-12, abs=1e-12)
        assert_allclose(_stats(getis_ord_gstar(x, include_self(binary), **fast)),
                        oracle_stat("gi_star", list(x), *grid_args), rtol=1e-12, atol=1e-12)
        assert_allclose(_stats(local_moran(x, W, **fast)),
                        oracle_stat("local_moran", list(x), *grid_args), rtol=1e-12, atol=1e-12)
        assert_allclose(_stats(bivariate_local_moran(x, y, W, **fast)),
                        oracle_stat("bivariate_local_moran", list(x), list(y), *grid_args),
                        rtol=1e-12, atol=1e-12)


@pytest.mark.slow
def test_null_fields_are_calibrated():
    threads = default_threads()
    binary = contiguity_weights(GridSpec(0, 0, 1, 30, 30), "queen")
    W = row_standardize(binary)
    star = include_self(binary)

    gi_two_sided, gi_hot = [], []
    global_two_sided = global_directional = 0
    n_global = 200
    for seed in range(n_global):
        x, _ = gen_counts(preset("null", seed=seed))
        # The two-sided p is twice the directional one from the same replicates.
        p = global_moran(x, W, permutations=999, seed=seed, threads=threads).pseudo_p
        global_directional += p < 0.05
        global_two_sided += min(1.0, 2 * p) <= 0.05
        if seed < 100:
            rows = getis_ord_gstar(x, star, permutations=999, seed=seed, threads=threads)
            gi_two_sided.append(np.mean([min(1.0, 2 * r.pseudo_p) <= 0.05 for r in rows]))
            gi_hot.append(np.mean([r.category in HOT for r in rows]))

    assert np.mean(gi_two_sided) <= 0.08
    assert 0.02 <= global_two_sided / n_global <= 0.09
    # A directional test at alpha fires in either tail: about 2 * alpha overall, alpha per tail.
    assert 0.04 <= global_directional / n_global <= 0.16
    assert np.mean(gi_hot) <= 0.08


@pytest.mark.slow
def test_city_scale_local_statistics_meet_time_budget():
    threads = default_threads()
    scenario = preset("city-scale", seed=3)
    g = scenario.grid.to_spec()
    x, y = gen_counts(scenario)
    binary = contiguity_weights(g, "queen")

    started = time.perf_counter()
    getis_ord_gstar(x, include_self(binary), permutations=999, threads=threads)
    bivariate_local_moran(x, y, row_standardize(binary), permutations=999, threads=threads)
    elapsed = time.perf_counter() - started
    # One minute on eight cores, six minutes on one.
    assert elapsed <= max(60.0, 360.0 / threads)


@pytest.mark.slow
def test_planted_hotspot_is_recovered():
    threads = default_threads()
    recall, false_flags = [], []
    for seed in range(20):
        scenario = preset("hotspot", seed=seed)
        g = scenario.grid.to_spec()
        x, _ = gen_counts(scenario)
        rows = getis_ord_gstar(x, include_self(contiguity_weights(g, "queen")), permutations=999, seed=seed,
                               threads=threads)
        blob = scenario.blobs[0]
        rr, cc = np.divmod(np.arange(g.n_cells), g.n_cols)
        distance = np.maximum(np.abs(rr - blob.center_row), np.abs(cc - blob.center_col))
        hot = np.array([r.category in HOT for r in rows])
        recall.append(hot[distance <= blob.radius].mean())
        # Beyond the blob plus the reach of a queen neighborhood.
        false_flags.append(hot[distance > blob.radius + 2].mean())
    assert np.mean(recall) >= 0.9
    assert np.mean(false_flags) <= 0.10


@pytest.mark.slow
def test_lisa_groups_partition_city_scale_grid():
    scenario = preset("city-scale")
    g = scenario.grid.to_spec()
    assert g.n_cells == 38824
    x, y = gen_counts(scenario)
    W = row_standardize(contiguity_weights(g, "queen"))
    rows = bivariate_local_moran(x, y, W, permutations=99, threads=default_threads())
    counts = {q.value: 0 for q in LisaQuadrant}
    for row in rows:
        counts[row.category] += 1
    non_isolates = int((~W.isolates).sum())
    assert counts["NotApplicable"] == g.n_cells - non_isolates
    assert sum(counts[q] for q in ("HH", "HL", "LH", "LL", "NotSignificant")) == non_isolates


@pytest.mark.slow
def test_city_scale_pipeline_is_thread_independent(tmp_path):
    scenario = preset("city-scale", seed=7)
    crashes, highg = gen_points(scenario)
    datafiles.write_points(crashes, tmp_path / "crashes.csv")
    datafiles.write_points(highg, tmp_path / "highg.csv")
    datafiles.write_points(gen_pois(scenario), tmp_path / "pois.csv", with_kind=True)
    extent = scenario.grid.to_spec().extent

    def run(threads, name):
        config = PipelineConfig(
            crashes=str(tmp_path / "crashes.csv"),
            highg=str(tmp_path / "highg.csv"),
            pois=str(tmp_path / "pois.csv"),
            bbox=extent,
            permutations=99,
            seed=7,
            output_dir=str(tmp_path / name),
        )
        return pipeline.run_pipeline(config, threads=threads)

    one = run(1, "one")
    many = run(max(2, default_threads()), "many")
    assert one.artifacts == many.artifacts
    assert (tmp_path / "one" / pipeline.MANIFEST_JSON).read_bytes() == \
        (tmp_path / "many" / pipeline.MANIFEST_JSON).read_bytes()
    assert one.grid.n_cells == 38824
