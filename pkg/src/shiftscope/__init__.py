"""Distribution-shift detection for embedding datasets.

Compares a candidate embedding set against a reference set using statistical
distances between latent representations (energy statistic, a local variant,
and a sliced Wasserstein distance between persistence diagrams), wrapped in
two decision procedures: a subsample significance test and a
perturbation-threshold test.
"""

from .detector import (
    DetectorConfig,
    DistanceSamples,
    PerturbationReport,
    PerturbConfig,
    ShiftReport,
    default_noise_grid,
    fit_score,
    make_metric,
    percentile,
    perturbation_shift_test,
    subsample_shift_test,
    welch_t_test,
)
from .distances import (
    energy_statistic,
    knn_recall,
    local_energy_statistic,
    pairwise_euclidean,
)
from .embedio import (
    EmbeddingSet,
    l2_normalize,
    load_auto,
    load_csv,
    load_embv1,
    load_npy,
    save_embv1,
    save_npy,
)
from .errors import (
    ConfigError,
    DimError,
    FormatError,
    IndexPairingError,
    InfiniteBarError,
    InsufficientSamples,
    InvalidSplit,
    IoError,
    KTooLarge,
    LabelsRequired,
    ParseError,
    SampleTooLarge,
    ShiftscopeError,
    UnsupportedArray,
)
from .sampling import (
    ClassMixture,
    RngSeed,
    apply_class_mixture,
    dirichlet_mixture,
    disjoint_pair,
    domain_split,
    stratified_split,
    gaussian_clusters,
    gaussian_perturb,
    subsample,
)
from .topology import (
    PersistenceDiagram,
    RipsConfig,
    diagrams_to_csv,
    rips_h0,
    rips_h1,
    sliced_wasserstein,
    swp_distance,
)

__version__ = "0.1.0"

__all__ = [
    "ClassMixture",
    "ConfigError",
    "DetectorConfig",
    "DimError",
    "DistanceSamples",
    "EmbeddingSet",
    "FormatError",
    "IndexPairingError",
    "InfiniteBarError",
    "InsufficientSamples",
    "InvalidSplit",
    "IoError",
    "KTooLarge",
    "LabelsRequired",
    "ParseError",
    "PersistenceDiagram",
    "PerturbConfig",
    "PerturbationReport",
    "RipsConfig",
    "RngSeed",
    "SampleTooLarge",
    "ShiftReport",
    "ShiftscopeError",
    "UnsupportedArray",
    "apply_class_mixture",
    "default_noise_grid",
    "diagrams_to_csv",
    "dirichlet_mixture",
    "disjoint_pair",
    "domain_split",
    "stratified_split",
    "energy_statistic",
    "fit_score",
    "gaussian_clusters",
    "gaussian_perturb",
    "knn_recall",
    "l2_normalize",
    "load_auto",
    "load_csv",
    "load_embv1",
    "load_npy",
    "local_energy_statistic",
    "make_metric",
    "pairwise_euclidean",
    "percentile",
    "perturbation_shift_test",
    "rips_h0",
    "rips_h1",
    "save_embv1",
    "save_npy",
    "sliced_wasserstein",
    "subsample",
    "subsample_shift_test",
    "swp_distance",
    "welch_t_test",
]
