import numpy as np
import pytest

import oracles
import shiftscope.detector as det
from shiftscope import (
    ConfigError,
    DetectorConfig,
    EmbeddingSet,
    InsufficientSamples,
    PerturbConfig,
    RngSeed,
    SampleTooLarge,
    fit_score,
    gaussian_clusters,
    percentile,
    perturbation_shift_test,
    subsample_shift_test,
    welch_t_test,
)


# ---------------------------------------------------------------------------
# statistics


def test_welch_identical_samples():
    a = np.array([1.0, 2.0, 3.0])
    assert welch_t_test(a, a.copy()) == 1.0


def test_welch_reference_example():
    p = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert abs(p - 0.3466) < 1e-3


def test_welch_large_effect():
    rng = np.random.default_rng(0)
    a = rng.normal(0, 1, size=15)
    b = rng.normal(10, 1, size=15)
    assert welch_t_test(a, b) < 1e-6


def test_welch_zero_variance_edges():
    assert welch_t_test([2.0, 2.0], [2.0, 2.0]) == 1.0
    assert welch_t_test([2.0, 2.0], [3.0, 3.0]) == 0.0


def test_welch_needs_two_per_side():
    with pytest.raises(InsufficientSamples):
        welch_t_test([1.0], [1.0, 2.0])


def test_welch_matches_scipy_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.normal(size=rng.integers(2, 30))
        b = rng.normal(loc=rng.uniform(-1, 1), size=rng.integers(2, 30))
        assert abs(welch_t_test(a, b) - oracles.welch_oracle(a, b)) < 1e-12


def test_percentile_linear_interpolation():
    assert abs(percentile(np.arange(1.0, 101.0), 5) - 5.95) < 1e-12
    vals = np.array([3.0, 1.0, 2.0])
    assert percentile(vals, 0) == 1.0
    assert percentile(vals, 100) == 3.0
    assert percentile(np.array([42.0]), 37.5) == 42.0


def test_percentile_errors():
    with pytest.raises(InsufficientSamples):
        percentile(np.empty(0), 50)
    with pytest.raises(ConfigError):
        percentile(np.ones(3), 101)


def test_fit_score_examples():
    assert fit_score([True] * 20) == (1.0, 20, 0)
    assert fit_score([True] * 11 + [False] * 9) == (0.55, 11, 9)
    assert fit_score([True, False]) == (0.5, 1, 1)
    with pytest.raises(InsufficientSamples):
        fit_score([])


# ---------------------------------------------------------------------------
# configs


def test_detector_config_validation():
    with pytest.raises(ConfigError):
        DetectorConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        DetectorConfig(subsample_size=1)
    with pytest.raises(ConfigError):
        DetectorConfig(samples_per_run=1)
    with pytest.raises(ConfigError):
        DetectorConfig(runs=0)
    with pytest.raises(ConfigError):
        DetectorConfig(metric="mmd")


def test_perturb_config_validation():
    with pytest.raises(ConfigError):
        PerturbConfig(grid=())
    with pytest.raises(ConfigError):
        PerturbConfig(grid=(0.1, 0.1))
    with pytest.raises(ConfigError):
        PerturbConfig(grid=(-0.1, 0.5))
    with pytest.raises(ConfigError):
        PerturbConfig(threshold=1.5)
    with pytest.raises(ConfigError):
        PerturbConfig(aggregator="max")


def test_perturb_default_grid():
    grid = PerturbConfig().grid
    assert len(grid) == 10
    assert abs(grid[0] - 0.01) < 1e-12 and abs(grid[-1] - 1.0) < 1e-12
    ratios = np.diff(np.log(grid))
    assert np.allclose(ratios, ratios[0])  # log-scaled


# ---------------------------------------------------------------------------
# subsample shift test


def _small_cfg(metric="energy", seed=0, **kw):
    kw.setdefault("subsample_size", 60)
    kw.setdefault("samples_per_run", 6)
    kw.setdefault("runs", 6)
    return DetectorConfig(metric=metric, seed=RngSeed(seed), **kw)


def test_subsample_self_comparison_is_no():
    x = gaussian_clusters(4, 60, 8, 4.0, RngSeed(1))
    report = subsample_shift_test(x, x, _small_cfg())
    assert report.decision is False
    assert report.no_count > report.yes_count


def test_subsample_shift_detected():
    x = gaussian_clusters(4, 60, 8, 6.0, RngSeed(2))
    y = gaussian_clusters(4, 60, 8, 0.0, RngSeed(3))  # collapsed clusters
    report = subsample_shift_test(x, y, _small_cfg(seed=4))
    assert report.decision is True
    assert report.fit_score == 1.0
    assert report.p95_p < 0.01


def test_subsample_report_invariants():
    x = gaussian_clusters(3, 70, 6, 3.0, RngSeed(5))
    report = subsample_shift_test(x, x, _small_cfg(seed=6))
    assert report.fit_score == max(report.yes_count, report.no_count) / 6
    assert report.p5_p <= report.p95_p
    assert report.d_xx_p5 <= report.d_xx_p95
    assert report.d_xy_p5 <= report.d_xy_p95
    assert report.samples.d_xx.size == report.samples.d_xy.size == 36
    assert report.run_p_values.size == 6


def test_subsample_deterministic():
    x = gaussian_clusters(3, 70, 6, 3.0, RngSeed(7))
    y = gaussian_clusters(3, 70, 6, 3.0, RngSeed(8))
    r1 = subsample_shift_test(x, y, _small_cfg(seed=9))
    r2 = subsample_shift_test(x, y, _small_cfg(seed=9))
    assert np.array_equal(r1.run_p_values, r2.run_p_values)
    assert np.array_equal(r1.samples.d_xy, r2.samples.d_xy)
    d1 = r1.to_json_dict(include_timing=False)
    d2 = r2.to_json_dict(include_timing=False)
    assert d1 == d2


def test_subsample_pooled_equals_direct():
    # same index streams with and without the pooled distance cache
    x = gaussian_clusters(3, 50, 5, 2.0, RngSeed(10))
    y = gaussian_clusters(3, 50, 5, 2.0, RngSeed(11))
    cfg = _small_cfg(metric="local-energy", seed=12)
    pooled = subsample_shift_test(x, y, cfg)
    old = det.POOL_ROW_LIMIT
    det.POOL_ROW_LIMIT = 0
    try:
        direct = subsample_shift_test(x, y, cfg)
    finally:
        det.POOL_ROW_LIMIT = old
    assert np.abs(pooled.samples.d_xx - direct.samples.d_xx).max() < 1e-9
    assert np.abs(pooled.samples.d_xy - direct.samples.d_xy).max() < 1e-9
    assert np.array_equal(pooled.run_decisions, direct.run_decisions)


def test_subsample_swp_metric_runs():
    x = gaussian_clusters(2, 80, 4, 3.0, RngSeed(13))
    y = gaussian_clusters(2, 80, 4, 3.0, RngSeed(14))
    cfg = DetectorConfig(
        metric="swp",
        subsample_size=40,
        samples_per_run=3,
        runs=2,
        seed=RngSeed(15),
        slices=20,
    )
    report = subsample_shift_test(x, y, cfg)
    assert np.all(report.samples.d_xx >= 0)
    assert report.config["metric"] == "swp"


def test_subsample_size_preconditions():
    x = gaussian_clusters(2, 20, 3, 1.0, RngSeed(16))
    with pytest.raises(SampleTooLarge):
        subsample_shift_test(x, x, DetectorConfig(subsample_size=25, seed=RngSeed(0)))


def test_subsample_json_field_names():
    x = gaussian_clusters(2, 70, 4, 2.0, RngSeed(17))
    report = subsample_shift_test(x, x, _small_cfg(seed=18))
    d = report.to_json_dict()
    for key in (
        "decision",
        "fit_score",
        "yes_count",
        "no_count",
        "p5_p",
        "p95_p",
        "d_xx_p5",
        "d_xx_p95",
        "d_xy_p5",
        "d_xy_p95",
        "elapsed_seconds",
        "config",
    ):
        assert key in d
    assert d["decision"] in ("yes", "no")


def test_table_rendering():
    x = gaussian_clusters(2, 70, 4, 2.0, RngSeed(19))
    text = subsample_shift_test(x, x, _small_cfg(seed=20)).table()
    assert "Fit Score (Y:N)" in text and "Shift Dec." in text


# ---------------------------------------------------------------------------
# perturbation shift test


def _pcfg(seed=0, **kw):
    return PerturbConfig(seed=RngSeed(seed), **kw)


def test_perturbation_self_is_no():
    x = gaussian_clusters(3, 60, 8, 4.0, RngSeed(21))
    report = perturbation_shift_test(
        x, x, DetectorConfig(metric="energy", seed=RngSeed(22)), _pcfg(23)
    )
    assert report.decision is False
    assert abs(report.d_xy) < 1e-10


def test_perturbation_domain_shift_is_yes():
    x = gaussian_clusters(3, 60, 8, 6.0, RngSeed(24))
    y = EmbeddingSet(x.data + 10.0)  # gross displacement
    report = perturbation_shift_test(
        x, y, DetectorConfig(metric="energy", seed=RngSeed(25)), _pcfg(26)
    )
    assert report.decision is True
    assert report.d_xy > report.d_star


def test_perturbation_crossing_invariant():
    x = gaussian_clusters(3, 60, 8, 4.0, RngSeed(27))
    pcfg = _pcfg(28)
    report = perturbation_shift_test(
        x, x, DetectorConfig(metric="energy", seed=RngSeed(29)), pcfg
    )
    curve = report.criteria_curve
    if report.p_star_index is not None:
        assert curve[report.p_star_index] >= pcfg.threshold
        if report.p_star_index + 1 < len(curve):
            assert curve[report.p_star_index + 1] < pcfg.threshold
    assert len(curve) <= len(pcfg.grid)


def test_perturbation_all_fail_gives_zero_threshold():
    # widely spaced points: any noise at all destroys the neighborhoods
    rng = np.random.default_rng(30)
    x = EmbeddingSet(rng.normal(size=(40, 2)) * 1e-6)
    pcfg = _pcfg(31, grid=(50.0, 100.0), criterion_k=3)
    with pytest.warns(UserWarning, match="lowest noise level"):
        report = perturbation_shift_test(
            x, x, DetectorConfig(metric="energy", seed=RngSeed(32)), pcfg
        )
    assert report.p_star_index is None
    assert report.d_star == 0.0


def test_perturbation_warns_on_large_input():
    x = EmbeddingSet(np.random.default_rng(33).normal(size=(10_000, 2)))
    pcfg = _pcfg(34, grid=(1000.0,), criterion_k=2, samples_per_level=1)
    with pytest.warns(UserWarning):
        perturbation_shift_test(
            x, x, DetectorConfig(metric="energy", seed=RngSeed(35)), pcfg
        )


def test_perturbation_deterministic():
    x = gaussian_clusters(2, 50, 6, 3.0, RngSeed(36))
    y = gaussian_clusters(2, 50, 6, 3.0, RngSeed(37))
    dcfg = DetectorConfig(metric="energy", seed=RngSeed(38))
    r1 = perturbation_shift_test(x, y, dcfg, _pcfg(39))
    r2 = perturbation_shift_test(x, y, dcfg, _pcfg(39))
    assert r1.to_json_dict(include_timing=False) == r2.to_json_dict(include_timing=False)
