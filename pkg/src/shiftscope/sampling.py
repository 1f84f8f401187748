"""Seeded subsampling, synthetic shift construction and Gaussian perturbation.

Every operation is a pure function of (inputs, RngSeed). Seeds derive
hierarchical sub-streams via numpy's SeedSequence, so parallel schedules
reproduce the serial results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embedio import EmbeddingSet
from .errors import ConfigError, InvalidSplit, LabelsRequired, SampleTooLarge


@dataclass(frozen=True)
class RngSeed:
    """A root seed plus a derived-stream path; same (seed, stream) -> same draws."""

    seed: int
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if isinstance(self.stream, int):
            object.__setattr__(self, "stream", (self.stream,))
        else:
            object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))

    def child(self, *ids: int) -> "RngSeed":
        """Derive an independent sub-stream, e.g. one per (run, subsample)."""
        return RngSeed(self.seed, self.stream + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ClassMixture:
    """Per-class sampling fractions in [0, 1], indexed by label."""

    proportions: np.ndarray

    def __post_init__(self):
        props = np.ascontiguousarray(self.proportions, dtype=np.float64)
        if props.ndim != 1 or props.size == 0:
            raise ConfigError("proportions must be a non-empty 1-D array")
        if np.any(props < 0.0) or np.any(props > 1.0):
            raise ConfigError("every fraction must lie in [0, 1]")
        if not np.any(props > 0.0):
            raise ConfigError("at least one fraction must be positive")
        props.setflags(write=False)
        object.__setattr__(self, "proportions", props)


def subsample_indices(n: int, m: int, rng: RngSeed) -> np.ndarray:
    """Index form of subsample: m distinct rows of range(n), uniform."""
    if not 1 <= m <= n:
        raise SampleTooLarge(f"cannot draw {m} rows from {n}")
    return rng.generator().choice(n, size=m, replace=False)


def disjoint_pair_indices(n: int, m: int, rng: RngSeed) -> tuple[np.ndarray, np.ndarray]:
    """Index form of disjoint_pair: two disjoint m-subsets of range(n)."""
    if 2 * m > n:
        raise SampleTooLarge(f"cannot draw two disjoint samples of {m} from {n}")
    perm = rng.generator().permutation(n)
    return perm[:m], perm[m : 2 * m]


def subsample(dataset: EmbeddingSet, m: int, rng: RngSeed) -> EmbeddingSet:
    """Draw m distinct rows uniformly without replacement, labels carried along."""
    return dataset.take(subsample_indices(dataset.n, m, rng))


def disjoint_pair(dataset: EmbeddingSet, m: int, rng: RngSeed) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Two size-m samples sharing no row index."""
    first, second = disjoint_pair_indices(dataset.n, m, rng)
    return dataset.take(first), dataset.take(second)


def apply_class_mixture(dataset: EmbeddingSet, mix: ClassMixture, rng: RngSeed) -> EmbeddingSet:
    """Keep ceil(fraction_c * count_c) uniformly chosen points of each class c."""
    if dataset.labels is None:
        raise LabelsRequired("apply_class_mixture needs a labeled dataset")
    labels = dataset.labels
    if labels.max() >= mix.proportions.shape[0]:
        raise ConfigError(
            f"label {int(labels.max())} has no fraction (mixture covers "
            f"{mix.proportions.shape[0]} classes)"
        )
    gen = rng.generator()
    keep = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        want = math.ceil(mix.proportions[c] * members.size)
        if want == 0:
            continue
        chosen = gen.choice(members, size=want, replace=False)
        keep.append(np.sort(chosen))
    if not keep:
        raise SampleTooLarge("mixture removed every point")
    return dataset.take(np.sort(np.concatenate(keep)))


def stratified_split(dataset: EmbeddingSet, rng: RngSeed) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Disjoint halves with each class split as evenly as possible.

    Preferred over a plain permutation split when the halves serve as a
    same-distribution pair: a multinomial split leaves the halves with
    genuinely different class proportions, which a shift test then detects.
    """
    if dataset.labels is None:
        raise LabelsRequired("stratified_split needs a labeled dataset")
    gen = rng.generator()
    a_parts, b_parts = [], []
    for c in np.unique(dataset.labels):
        perm = gen.permutation(np.flatnonzero(dataset.labels == c))
        half = perm.size // 2
        a_parts.append(np.sort(perm[:half]))
        b_parts.append(np.sort(perm[half:]))
    return (
        dataset.take(np.sort(np.concatenate(a_parts))),
        dataset.take(np.sort(np.concatenate(b_parts))),
    )


def domain_split(
    dataset: EmbeddingSet,
    classes_a,
    classes_b,
    rng: RngSeed | None = None,
) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Split into two sets with completely disjoint class supports.

    rng is accepted for interface symmetry; the split itself is deterministic
    (rows keep file order).
    """
    if dataset.labels is None:
        raise LabelsRequired("domain_split needs a labeled dataset")
    set_a = frozenset(int(c) for c in classes_a)
    set_b = frozenset(int(c) for c in classes_b)
    if set_a & set_b:
        raise InvalidSplit(f"class sets overlap: {sorted(set_a & set_b)}")
    if not set_a or not set_b:
        raise InvalidSplit("both class sets must be non-empty")
    mask_a = np.isin(dataset.labels, sorted(set_a))
    mask_b = np.isin(dataset.labels, sorted(set_b))
    if not mask_a.any() or not mask_b.any():
        raise InvalidSplit("one side of the split selects no points")
    return dataset.take(np.flatnonzero(mask_a)), dataset.take(np.flatnonzero(mask_b))


def dirichlet_mixture(num_classes: int, concentration: float, rng: RngSeed) -> ClassMixture:
    """Symmetric-Dirichlet class fractions rescaled so the largest equals 1.

    The result is a vector of per-class sampling fractions (the biggest class
    keeps all of its data), not a probability vector.
    """
    if num_classes < 2:
        raise ConfigError("num_classes must be >= 2")
    if not concentration > 0:
        raise ConfigError("concentration must be positive")
    draw = rng.generator().dirichlet(np.full(num_classes, float(concentration)))
    return ClassMixture(draw / draw.max())


def gaussian_clusters(
    num_classes: int,
    per_class: int,
    d: int,
    separation: float,
    rng: RngSeed,
) -> EmbeddingSet:
    """Labeled isotropic unit-variance Gaussian clusters.

    Class c is centered at separation * e_{c mod d} (standard basis direction,
    wrapping when c >= d).
    """
    if num_classes < 1 or per_class < 1 or d < 1:
        raise ConfigError("num_classes, per_class and d must all be >= 1")
    if separation < 0:
        raise ConfigError("separation must be >= 0")
    n = num_classes * per_class
    data = rng.generator().standard_normal((n, d))
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    data[np.arange(n), labels % d] += separation
    return EmbeddingSet(data, labels, name=f"clusters{num_classes}x{per_class}d{d}")


def gaussian_perturb(dataset: EmbeddingSet, sigma: float, rng: RngSeed) -> EmbeddingSet:
    """Add i.i.d. N(0, sigma^2) noise to every coordinate.

    Row i of the output is the perturbed row i of the input (kNN recall relies
    on this pairing). Rows are not re-normalized afterwards.
    """
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    if sigma == 0:
        return dataset
    noise = rng.generator().standard_normal(dataset.data.shape)
    return EmbeddingSet(dataset.data + sigma * noise, dataset.labels, dataset.name)
