"""Shift tests: statistical decision rules, fit scores and report assembly.

Two detectors are provided. The subsample test compares distances between
reference-reference subsample pairs with reference-candidate pairs through a
Welch t-test. The perturbation test walks a noise grid until a performance
criterion (kNN recall) drops below threshold and uses the distance at the
last passing level as the detection threshold.

When the combined input fits in memory, all subsample-level metric values are
computed from one pooled pairwise-distance matrix; this is bit-compatible
with the direct metric functions because both paths share the same kernels.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as _scipy_stats

from .distances import (
    MATERIALIZE_LIMIT,
    _knn_indices_points,
    energy_from_matrices,
    local_energy_from_matrices,
    pairwise_matrix,
)
from .embedio import EmbeddingSet
from .errors import ConfigError, InsufficientSamples, SampleTooLarge
from .sampling import (
    RngSeed,
    disjoint_pair_indices,
    gaussian_perturb,
    subsample_indices,
)
from .topology import (
    DEFAULT_SLICES,
    RipsConfig,
    drop_essential,
    h0_diagram_from_matrix,
    h1_diagram_from_matrix,
    sliced_wasserstein,
)

POOL_ROW_LIMIT = 12000  # 12000^2 float64 ~ 1.1 GB, the largest cache worth holding

METRIC_NAMES = ("energy", "local-energy", "swp")


def default_noise_grid() -> tuple[float, ...]:
    """Log-scaled grid of 10 noise levels from 0.01 to 1.0."""
    return tuple(float(s) for s in np.logspace(-2.0, 0.0, 10))


# ---------------------------------------------------------------------------
# metrics


class _PooledDistances:
    """Pairwise distances over the concatenated reference+candidate rows."""

    def __init__(self, points: np.ndarray):
        self.D = pairwise_matrix(points, points)

    def gather(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self.D[np.ix_(rows, cols)]


class EnergyMetric:
    name = "energy"

    def from_matrices(self, dxy, dxx, dyy, rng=None) -> float:
        return energy_from_matrices(dxy, dxx, dyy)

    def value(self, x: EmbeddingSet, y: EmbeddingSet, rng: RngSeed | None = None) -> float:
        return self.from_matrices(
            pairwise_matrix(x.data, y.data),
            pairwise_matrix(x.data, x.data),
            pairwise_matrix(y.data, y.data),
        )

    def value_pooled(self, pool, ix, iy, rng=None) -> float:
        return self.from_matrices(
            pool.gather(ix, iy), pool.gather(ix, ix), pool.gather(iy, iy)
        )

    def describe(self) -> dict:
        return {"metric": self.name}


class LocalEnergyMetric:
    name = "local-energy"

    def __init__(self, k: int = 5, all_terms_local: bool = False):
        if k < 1:
            raise ConfigError("local-energy k must be >= 1")
        self.k = k
        self.all_terms_local = all_terms_local

    def from_matrices(self, dxy, dxx, dyy, rng=None) -> float:
        return local_energy_from_matrices(dxy, dxx, dyy, self.k, self.all_terms_local)

    def value(self, x: EmbeddingSet, y: EmbeddingSet, rng: RngSeed | None = None) -> float:
        return self.from_matrices(
            pairwise_matrix(x.data, y.data),
            pairwise_matrix(x.data, x.data),
            pairwise_matrix(y.data, y.data),
        )

    def value_pooled(self, pool, ix, iy, rng=None) -> float:
        return self.from_matrices(
            pool.gather(ix, iy), pool.gather(ix, ix), pool.gather(iy, iy)
        )

    def describe(self) -> dict:
        return {"metric": self.name, "k": self.k, "all_terms_local": self.all_terms_local}


class SwpMetric:
    name = "swp"

    def __init__(self, rips: RipsConfig = RipsConfig(), slices: int = DEFAULT_SLICES):
        self.rips = rips
        self.slices = slices

    def _diagram_set(self, D: np.ndarray, rng: RngSeed | None):
        diagrams = [drop_essential(h0_diagram_from_matrix(D))]
        if self.rips.max_dimension >= 1:
            Dh1 = D
            if D.shape[0] > self.rips.h1_point_cap:
                seed = rng if rng is not None else RngSeed(self.rips.cap_seed)
                idx = np.sort(
                    subsample_indices(D.shape[0], self.rips.h1_point_cap, seed)
                )
                Dh1 = D[np.ix_(idx, idx)]
            diagrams.append(
                drop_essential(h1_diagram_from_matrix(Dh1, self.rips.max_edge_length))
            )
        return diagrams

    def _from_self_matrices(self, dx, dy, rng) -> float:
        rng_x = rng.child(0) if rng is not None else None
        rng_y = rng.child(1) if rng is not None else None
        da = self._diagram_set(dx, rng_x)
        db = self._diagram_set(dy, rng_y)
        return sum(sliced_wasserstein(a, b, self.slices) for a, b in zip(da, db))

    def value(self, x: EmbeddingSet, y: EmbeddingSet, rng: RngSeed | None = None) -> float:
        return self._from_self_matrices(
            pairwise_matrix(x.data, x.data), pairwise_matrix(y.data, y.data), rng
        )

    def value_pooled(self, pool, ix, iy, rng=None) -> float:
        return self._from_self_matrices(pool.gather(ix, ix), pool.gather(iy, iy), rng)

    def describe(self) -> dict:
        return {
            "metric": self.name,
            "slices": self.slices,
            "max_dimension": self.rips.max_dimension,
            "h1_point_cap": self.rips.h1_point_cap,
        }


def make_metric(
    name: str,
    k: int = 5,
    all_terms_local: bool = False,
    rips: RipsConfig = RipsConfig(),
    slices: int = DEFAULT_SLICES,
):
    if name == "energy":
        return EnergyMetric()
    if name == "local-energy":
        return LocalEnergyMetric(k, all_terms_local)
    if name == "swp":
        return SwpMetric(rips, slices)
    raise ConfigError(f"unknown metric {name!r}; expected one of {METRIC_NAMES}")


# ---------------------------------------------------------------------------
# configuration and report types


@dataclass(frozen=True)
class DetectorConfig:
    """Subsample shift test tunables (defaults follow the standard protocol:
    20 runs of 15 subsamples of size 1000 at significance 0.05)."""

    metric: str = "local-energy"
    subsample_size: int = 1000
    samples_per_run: int = 15
    runs: int = 20
    alpha: float = 0.05
    seed: RngSeed = RngSeed(0)
    k: int = 5
    all_terms_local: bool = False
    slices: int = DEFAULT_SLICES
    rips: RipsConfig = field(default_factory=RipsConfig)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.subsample_size < 2:
            raise ConfigError("subsample_size must be >= 2")
        if self.samples_per_run < 2:
            raise ConfigError("samples_per_run must be >= 2")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.metric not in METRIC_NAMES:
            raise ConfigError(f"metric must be one of {METRIC_NAMES}")

    def build_metric(self):
        return make_metric(self.metric, self.k, self.all_terms_local, self.rips, self.slices)

    def describe(self) -> dict:
        out = {
            "test": "subsample",
            "subsample_size": self.subsample_size,
            "samples_per_run": self.samples_per_run,
            "runs": self.runs,
            "alpha": self.alpha,
            "seed": self.seed.seed,
            "seed_stream": list(self.seed.stream),
        }
        out.update(self.build_metric().describe())
        return out


@dataclass(frozen=True)
class PerturbConfig:
    """Perturbation shift test tunables (defaults: the 10-level log grid from
    0.01 to 1.0, kNN-recall criterion at k=10, threshold 0.80, 3 samples per
    level, median aggregation)."""

    grid: tuple = field(default_factory=default_noise_grid)
    criterion: str = "knn-recall"
    criterion_k: int = 10
    threshold: float = 0.80
    samples_per_level: int = 3
    aggregator: str = "median"
    seed: RngSeed = RngSeed(0)

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        if len(grid) == 0:
            raise ConfigError("noise grid must not be empty")
        if any(g <= 0 for g in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("noise grid must be strictly ascending and positive")
        object.__setattr__(self, "grid", grid)
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError("threshold must lie in (0, 1]")
        if self.criterion != "knn-recall":
            raise ConfigError("only the knn-recall criterion is implemented")
        if self.samples_per_level < 1:
            raise ConfigError("samples_per_level must be >= 1")
        if self.aggregator not in ("median", "mean"):
            raise ConfigError("aggregator must be 'median' or 'mean'")

    def describe(self) -> dict:
        return {
            "test": "perturbation",
            "grid": list(self.grid),
            "criterion": self.criterion,
            "criterion_k": self.criterion_k,
            "threshold": self.threshold,
            "samples_per_level": self.samples_per_level,
            "aggregator": self.aggregator,
            "seed": self.seed.seed,
            "seed_stream": list(self.seed.stream),
        }


@dataclass(frozen=True)
class DistanceSamples:
    """Pooled per-subsample distances: reference-reference and reference-candidate."""

    d_xx: np.ndarray
    d_xy: np.ndarray


@dataclass(frozen=True)
class ShiftReport:
    decision: bool
    fit_score: float
    yes_count: int
    no_count: int
    p5_p: float
    p95_p: float
    d_xx_p5: float
    d_xx_p95: float
    d_xy_p5: float
    d_xy_p95: float
    elapsed_seconds: float
    elapsed_seconds_per_run: float
    config: dict
    samples: DistanceSamples
    run_p_values: np.ndarray
    run_decisions: np.ndarray

    def to_json_dict(self, include_timing: bool = True) -> dict:
        out = {
            "decision": "yes" if self.decision else "no",
            "fit_score": self.fit_score,
            "yes_count": self.yes_count,
            "no_count": self.no_count,
            "p5_p": self.p5_p,
            "p95_p": self.p95_p,
            "d_xx_p5": self.d_xx_p5,
            "d_xx_p95": self.d_xx_p95,
            "d_xy_p5": self.d_xy_p5,
            "d_xy_p95": self.d_xy_p95,
            "config": self.config,
        }
        if include_timing:
            out["elapsed_seconds"] = self.elapsed_seconds
            out["elapsed_seconds_per_run"] = self.elapsed_seconds_per_run
        return out

    def table(self) -> str:
        return _format_table(
            [
                ("Test", "S-" + _metric_abbrev(self.config.get("metric", "?"))),
                ("Time/Run (s)", f"{self.elapsed_seconds_per_run:.2f}"),
                (
                    "Metric Ranges [Dxx]:[Dxy]",
                    f"[{self.d_xx_p5:.2f} {self.d_xx_p95:.2f}] : "
                    f"[{self.d_xy_p5:.2f} {self.d_xy_p95:.2f}]",
                ),
                ("P-Val Range", f"[{self.p5_p:.2f} {self.p95_p:.2f}]"),
                ("Fit Score (Y:N)", f"{self.fit_score:.2f} ({self.yes_count}:{self.no_count})"),
                ("Shift Dec.", "Yes" if self.decision else "No"),
            ]
        )


@dataclass(frozen=True)
class PerturbationReport:
    decision: bool
    p_star_index: int | None
    p_star_level: float | None
    criteria_curve: tuple
    d_star: float
    d_xy: float
    elapsed_seconds: float
    config: dict

    def to_json_dict(self, include_timing: bool = True) -> dict:
        out = {
            "decision": "yes" if self.decision else "no",
            "p_star_index": self.p_star_index,
            "p_star_level": self.p_star_level,
            "criteria_curve": list(self.criteria_curve),
            "d_star": self.d_star,
            "d_xy": self.d_xy,
            "config": self.config,
        }
        if include_timing:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out

    def table(self) -> str:
        return _format_table(
            [
                ("Test", "P-" + _metric_abbrev(self.config.get("metric", "?"))),
                ("Time (s)", f"{self.elapsed_seconds:.2f}"),
                ("Metric Ranges [D*]:[Dxy]", f"[{self.d_star:.2f}] : [{self.d_xy:.2f}]"),
                ("P-Val Range", "-"),
                ("Fit Score (Y:N)", "-"),
                ("Shift Dec.", "Yes" if self.decision else "No"),
            ]
        )


def _metric_abbrev(name: str) -> str:
    return {"energy": "E", "local-energy": "LE", "swp": "SWP"}.get(name, name)


def _format_table(pairs) -> str:
    headers = [h for h, _ in pairs]
    values = [v for _, v in pairs]
    widths = [max(len(h), len(v)) for h, v in pairs]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    rule = "  ".join("-" * w for w in widths)
    body = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return "\n".join([head, rule, body])


# ---------------------------------------------------------------------------
# statistics


def welch_t_test(a, b) -> float:
    """Two-sided Welch unequal-variance t-test p-value.

    Degenerate zero-variance inputs: equal means give p=1, unequal give p=0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InsufficientSamples("welch_t_test needs at least 2 values per side")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    diff = a.mean() - b.mean()
    if va == 0.0 and vb == 0.0:
        return 1.0 if diff == 0.0 else 0.0
    sa = va / a.size
    sb = vb / b.size
    t = diff / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    return float(2.0 * _scipy_stats.t.sf(abs(t), df))


def percentile(values, q: float) -> float:
    """Linear-interpolation percentile of a non-empty array."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InsufficientSamples("percentile of an empty array")
    if not 0.0 <= q <= 100.0:
        raise ConfigError("q must lie in [0, 100]")
    return float(np.percentile(values, q, method="linear"))


def fit_score(decisions) -> tuple[float, int, int]:
    """(majority fraction, yes count, no count); an exact tie scores 0.5."""
    decisions = list(decisions)
    if not decisions:
        raise InsufficientSamples("fit_score of no decisions")
    yes = sum(bool(d) for d in decisions)
    no = len(decisions) - yes
    return max(yes, no) / len(decisions), yes, no


# ---------------------------------------------------------------------------
# subsample shift test


def subsample_shift_test(x: EmbeddingSet, y: EmbeddingSet, cfg: DetectorConfig) -> ShiftReport:
    """Algorithmic core: per run, compare n reference-pair distances with n
    cross-pair distances via Welch's t-test; a run detects shift when p < alpha
    and the cross distances are larger on average. The overall decision is the
    majority over runs (ties resolve to yes)."""
    m = cfg.subsample_size
    if x.n < 2 * m:
        raise SampleTooLarge(
            f"reference needs at least 2*{m} points for disjoint pairs, has {x.n}"
        )
    if y.n < m:
        raise SampleTooLarge(f"candidate needs at least {m} points, has {y.n}")
    metric = cfg.build_metric()
    t0 = time.perf_counter()

    pool = None
    if x.n + y.n <= POOL_ROW_LIMIT:
        pool = _PooledDistances(np.vstack([x.data, y.data]))
    y_off = x.n

    all_xx = []
    all_xy = []
    run_p = np.empty(cfg.runs)
    run_dec = np.zeros(cfg.runs, dtype=bool)
    for r in range(cfg.runs):
        rng_run = cfg.seed.child(r)
        d_xx = np.empty(cfg.samples_per_run)
        d_xy = np.empty(cfg.samples_per_run)
        for i in range(cfg.samples_per_run):
            ix1, ix2 = disjoint_pair_indices(x.n, m, rng_run.child(0, i))
            mrng = rng_run.child(1, i)
            if pool is not None:
                d_xx[i] = metric.value_pooled(pool, ix1, ix2, mrng)
            else:
                d_xx[i] = metric.value(x.take(ix1), x.take(ix2), mrng)
        for i in range(cfg.samples_per_run):
            ix = subsample_indices(x.n, m, rng_run.child(2, i))
            iy = subsample_indices(y.n, m, rng_run.child(3, i))
            mrng = rng_run.child(4, i)
            if pool is not None:
                d_xy[i] = metric.value_pooled(pool, ix, iy + y_off, mrng)
            else:
                d_xy[i] = metric.value(x.take(ix), y.take(iy), mrng)
        p = welch_t_test(d_xx, d_xy)
        run_p[r] = p
        run_dec[r] = (p < cfg.alpha) and (d_xy.mean() > d_xx.mean())
        all_xx.append(d_xx)
        all_xy.append(d_xy)

    elapsed = time.perf_counter() - t0
    score, yes, no = fit_score(run_dec)
    decision = yes >= no  # tie resolves to yes (flagged by score 0.5)
    d_xx_pool = np.concatenate(all_xx)
    d_xy_pool = np.concatenate(all_xy)
    return ShiftReport(
        decision=decision,
        fit_score=score,
        yes_count=yes,
        no_count=no,
        p5_p=percentile(run_p, 5),
        p95_p=percentile(run_p, 95),
        d_xx_p5=percentile(d_xx_pool, 5),
        d_xx_p95=percentile(d_xx_pool, 95),
        d_xy_p5=percentile(d_xy_pool, 5),
        d_xy_p95=percentile(d_xy_pool, 95),
        elapsed_seconds=elapsed,
        elapsed_seconds_per_run=elapsed / cfg.runs,
        config=cfg.describe(),
        samples=DistanceSamples(d_xx_pool, d_xy_pool),
        run_p_values=run_p,
        run_decisions=run_dec,
    )


# ---------------------------------------------------------------------------
# perturbation shift test


def _recall_against(ref_nn_sorted: np.ndarray, evaluation: EmbeddingSet, k: int) -> float:
    ev_nn = np.sort(_knn_indices_points(evaluation.data, k), axis=1)
    n = ev_nn.shape[0]
    overlap = 0
    for i in range(n):
        overlap += np.intersect1d(ref_nn_sorted[i], ev_nn[i], assume_unique=True).size
    return overlap / (n * k)


def perturbation_shift_test(
    x: EmbeddingSet,
    y: EmbeddingSet,
    dcfg: DetectorConfig,
    pcfg: PerturbConfig,
) -> PerturbationReport:
    """Walk the noise grid until the median criterion falls below threshold;
    the aggregated metric value at the last passing level is the detection
    threshold D*. When even the lowest level fails, the reference tolerates no
    measurable perturbation and D* = 0."""
    if x.n >= 10_000:
        warnings.warn(
            f"perturbation test on {x.n} points; subsample representativeness "
            "degrades above 10,000",
            stacklevel=2,
        )
    metric = dcfg.build_metric()
    k = pcfg.criterion_k
    t0 = time.perf_counter()
    ref_nn = np.sort(_knn_indices_points(x.data, k), axis=1)

    curve = []
    p_star_index = None
    for level, sigma in enumerate(pcfg.grid):
        vals = [
            _recall_against(
                ref_nn, gaussian_perturb(x, sigma, pcfg.seed.child(0, level, j)), k
            )
            for j in range(pcfg.samples_per_level)
        ]
        med = float(np.median(vals))
        curve.append(med)
        if med < pcfg.threshold:
            break
        p_star_index = level

    agg = np.median if pcfg.aggregator == "median" else np.mean
    if p_star_index is None:
        d_star = 0.0
        warnings.warn(
            "criterion fails at the lowest noise level; D* = 0 (zero perturbation "
            "tolerance), any positive distance reports shift",
            stacklevel=2,
        )
    else:
        sigma = pcfg.grid[p_star_index]
        d_vals = [
            metric.value(
                x,
                gaussian_perturb(x, sigma, pcfg.seed.child(1, j)),
                pcfg.seed.child(2, j),
            )
            for j in range(pcfg.samples_per_level)
        ]
        d_star = float(agg(d_vals))
    d_xy = metric.value(x, y, pcfg.seed.child(3))
    elapsed = time.perf_counter() - t0
    config = pcfg.describe()
    config.update(metric.describe())
    return PerturbationReport(
        decision=bool(d_xy > d_star),
        p_star_index=p_star_index,
        p_star_level=None if p_star_index is None else pcfg.grid[p_star_index],
        criteria_curve=tuple(curve),
        d_star=d_star,
        d_xy=d_xy,
        elapsed_seconds=elapsed,
        config=config,
    )
