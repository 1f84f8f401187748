import numpy as np
import pytest

import oracles
from shiftscope import (
    ConfigError,
    EmbeddingSet,
    InfiniteBarError,
    PersistenceDiagram,
    RipsConfig,
    rips_h0,
    rips_h1,
    sliced_wasserstein,
    swp_distance,
)
from shiftscope.topology import (
    diagrams_to_csv,
    drop_essential,
    enclosing_radius,
    h1_diagram_from_matrix,
)


def _cloud(n, d, seed):
    return EmbeddingSet(np.random.default_rng(seed).normal(size=(n, d)))


# ---------------------------------------------------------------------------
# diagram type


def test_diagram_validation():
    with pytest.raises(ConfigError):
        PersistenceDiagram(0, np.array([1.0]), np.array([0.5]))
    with pytest.raises(ConfigError):
        PersistenceDiagram(0, np.array([[1.0]]), np.array([[2.0]]))
    diag = PersistenceDiagram(1, np.array([0.0, 1.0]), np.array([2.0, np.inf]))
    assert len(diag) == 2 and diag.has_essential


def test_drop_essential():
    diag = PersistenceDiagram(0, np.zeros(3), np.array([1.0, 2.0, np.inf]))
    out = drop_essential(diag)
    assert len(out) == 2 and not out.has_essential
    assert len(drop_essential(out)) == 2  # all-finite diagram unchanged


# ---------------------------------------------------------------------------
# H0


def test_h0_hand_example():
    diag = rips_h0(EmbeddingSet(np.array([[0.0], [1.0], [3.0]])))
    finite = drop_essential(diag)
    assert np.allclose(sorted(finite.deaths), [1.0, 2.0])
    assert np.all(diag.births == 0.0)
    assert diag.has_essential


def test_h0_single_point():
    diag = rips_h0(EmbeddingSet(np.array([[5.0, 5.0]])))
    assert len(diag) == 1 and diag.has_essential


def test_h0_matches_union_find_oracle():
    for t, n in enumerate([10, 50, 120, 300]):
        x = _cloud(n, 4, t)
        got = rips_h0(x)
        D = oracles.pairwise_oracle(x.data, x.data)
        _, deaths = oracles.single_linkage_h0_oracle(D)
        assert len(got) == n
        finite = np.sort(drop_essential(got).deaths)
        assert np.abs(finite - np.sort(deaths[np.isfinite(deaths)])).max() < 1e-9


def test_h0_bar_count_after_drop():
    x = _cloud(37, 3, 9)
    assert len(drop_essential(rips_h0(x))) == 36


# ---------------------------------------------------------------------------
# H1


def test_h1_unit_square():
    square = EmbeddingSet(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    diag = rips_h1(square)
    assert len(diag) == 1
    assert abs(diag.births[0] - 1.0) < 1e-9
    assert abs(diag.deaths[0] - np.sqrt(2.0)) < 1e-9


def test_h1_circle_dominant_bar():
    theta = np.linspace(0, 2 * np.pi, 20, endpoint=False)
    circle = EmbeddingSet(np.column_stack([np.cos(theta), np.sin(theta)]))
    diag = rips_h1(circle)
    persistence = diag.deaths - diag.births
    assert (persistence > 0.5 * 2.0).sum() == 1  # one bar longer than half the diameter


def test_h1_collinear_is_empty():
    line = EmbeddingSet(np.arange(10.0)[:, None] * np.array([1.0, 2.0]))
    assert len(rips_h1(line)) == 0


def test_h1_matches_boundary_reduction_oracle():
    for t in range(6):
        x = _cloud(int(np.random.default_rng(t).integers(8, 25)), 3, 400 + t)
        got = rips_h1(x)
        D = oracles.pairwise_oracle(x.data, x.data)
        births, deaths = oracles.rips_h1_oracle(D)
        assert len(got) == len(births)
        if len(births):
            assert np.abs(np.sort(got.births) - np.sort(births)).max() < 1e-9
            assert np.abs(np.sort(got.deaths) - np.sort(deaths)).max() < 1e-9


def test_h1_respects_explicit_threshold():
    x = _cloud(15, 2, 12)
    D = oracles.pairwise_oracle(x.data, x.data)
    r = 0.8 * enclosing_radius(D)
    got = h1_diagram_from_matrix(D, r)
    births, deaths = oracles.rips_h1_oracle(D, r)
    assert len(got) == len(births)
    if len(births):
        assert np.abs(np.sort(got.births) - np.sort(births)).max() < 1e-9
        assert int(np.isinf(got.deaths).sum()) == int(np.isinf(deaths).sum())
        gf, of = np.sort(got.deaths[np.isfinite(got.deaths)]), np.sort(deaths[np.isfinite(deaths)])
        assert np.abs(gf - of).max() < 1e-9 if gf.size else True


def test_h1_needs_three_points():
    with pytest.raises(ConfigError):
        rips_h1(_cloud(2, 2, 0))


def test_h1_cap_subsamples_deterministically():
    x = _cloud(500, 3, 13)
    cfg = RipsConfig(h1_point_cap=60)
    a = rips_h1(x, cfg)
    b = rips_h1(x, cfg)
    assert np.array_equal(a.births, b.births) and np.array_equal(a.deaths, b.deaths)


# ---------------------------------------------------------------------------
# sliced Wasserstein


def _random_diagram(rng, n):
    births = rng.uniform(0, 2, size=n)
    return PersistenceDiagram(1, births, births + rng.uniform(0, 2, size=n))


def test_sw_identity_and_symmetry():
    rng = np.random.default_rng(14)
    a = _random_diagram(rng, 8)
    b = _random_diagram(rng, 5)
    assert sliced_wasserstein(a, a) < 1e-12
    assert abs(sliced_wasserstein(a, b) - sliced_wasserstein(b, a)) < 1e-12


def test_sw_triangle_inequality():
    rng = np.random.default_rng(15)
    for _ in range(10):
        a, b, c = (_random_diagram(rng, int(rng.integers(1, 10))) for _ in range(3))
        ab = sliced_wasserstein(a, b)
        bc = sliced_wasserstein(b, c)
        ac = sliced_wasserstein(a, c)
        assert ac <= ab + bc + 1e-9


def test_sw_quadrature_example():
    # one bar (0,2) against an empty diagram: closed form mean |sin t - cos t|
    a = PersistenceDiagram(1, np.array([0.0]), np.array([2.0]))
    b = PersistenceDiagram(1, np.empty(0), np.empty(0))
    slices = 1000
    got = sliced_wasserstein(a, b, slices)
    thetas = -np.pi / 2 + (np.arange(slices) + 0.5) * np.pi / slices
    want = np.abs(np.sin(thetas) - np.cos(thetas)).mean()
    assert abs(got - want) < 1e-9


def test_sw_matches_literal_oracle():
    rng = np.random.default_rng(16)
    for _ in range(5):
        a = _random_diagram(rng, int(rng.integers(1, 12)))
        b = _random_diagram(rng, int(rng.integers(1, 12)))
        got = sliced_wasserstein(a, b, 37)
        want = oracles.sliced_wasserstein_oracle(a.points, b.points, 37)
        assert abs(got - want) < 1e-9


def test_sw_slice_convergence():
    rng = np.random.default_rng(17)
    for _ in range(5):
        a = _random_diagram(rng, 6)
        b = _random_diagram(rng, 9)
        s50 = sliced_wasserstein(a, b, 50)
        s200 = sliced_wasserstein(a, b, 200)
        assert abs(s200 - s50) <= 0.02 * s200


def test_sw_rejects_essential_bars():
    a = PersistenceDiagram(0, np.zeros(1), np.array([np.inf]))
    with pytest.raises(InfiniteBarError):
        sliced_wasserstein(a, a)


def test_sw_both_empty():
    e = PersistenceDiagram(1, np.empty(0), np.empty(0))
    assert sliced_wasserstein(e, e) == 0.0


# ---------------------------------------------------------------------------
# SWP distance


def test_swp_identity():
    x = _cloud(50, 4, 18)
    assert swp_distance(x, x) < 1e-12


def test_swp_rotation_invariance():
    rng = np.random.default_rng(19)
    x = _cloud(40, 3, 20)
    y = _cloud(40, 3, 21)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    xr = EmbeddingSet(x.data @ q)
    yr = EmbeddingSet(y.data @ q)
    assert abs(swp_distance(x, y) - swp_distance(xr, yr)) < 1e-9


def test_swp_separates_cluster_structure():
    # two far clusters vs one cluster: larger than the same-distribution null
    rng = np.random.default_rng(22)
    one = EmbeddingSet(rng.normal(size=(60, 3)))
    two = EmbeddingSet(
        np.vstack([rng.normal(size=(30, 3)), rng.normal(size=(30, 3)) + 8.0])
    )
    null_vals = [
        swp_distance(
            EmbeddingSet(rng.normal(size=(60, 3))), EmbeddingSet(rng.normal(size=(60, 3)))
        )
        for _ in range(20)
    ]
    assert swp_distance(one, two) > np.quantile(null_vals, 0.99)


def test_diagrams_to_csv(tmp_path):
    x = EmbeddingSet(np.array([[0.0], [1.0], [3.0]]))
    path = tmp_path / "d.csv"
    diagrams_to_csv(path, [rips_h0(x)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "dimension,birth,death"
    assert len(lines) == 4
    assert lines[-1].endswith("INF")
