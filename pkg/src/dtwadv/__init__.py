"""Alignment-aware adversarial robustness for time-series classifiers.

The package splits into small layers:

``signal``      datasets: synthetic generator, CSV I/O, normalization, splits
``paths``       warping/alignment paths, admissibility, sampling, similarity
``dtw``         exact DTW, fixed-path distance, differentiable soft-DTW
``nn``          a from-scratch 1-D CNN/MLP with exact input gradients
``attack``      targeted alignment-guided attacks plus standard baselines
``robustness``  adversarial training, fooling/recovery rates, diversity
``analysis``    distance matrices, classical MDS, runtime benchmarks
``cli``         the ``dtwadv`` command-line front end
"""

from .signal import (
    LabeledDataset,
    as_series,
    load_csv,
    write_csv,
    synth_two_class,
    znormalize,
    split,
)
from .paths import (
    AlignmentPath,
    AdmissibleBand,
    DEFAULT_BAND,
    diagonal_path,
    validate,
    is_valid,
    random_admissible_path,
    enumerate_paths,
    path_sim,
)
from .dtw import (
    PointMetric,
    SQUARED_L2,
    L1,
    lp_metric,
    pointwise_distance,
    CostMatrix,
    cost_matrix,
    DtwResult,
    SoftDtwResult,
    dtw,
    dist_p,
    dist_p_gradient,
    soft_dtw,
    dtw_variant,
    brute_force_dtw,
)
from .nn import (
    Conv1D,
    MaxPool1D,
    Dense,
    ArchitectureSpec,
    PRESETS,
    build_preset,
    mlp_spec,
    cnn_spec,
    Classifier,
    TrainConfig,
    EpochStats,
    train,
    input_gradient,
    finite_diff_check,
    FiniteDiffReport,
    save_checkpoint,
    load_checkpoint,
)
from .attack import (
    AttackConfig,
    AdversarialResult,
    label_loss,
    dtw_loss,
    total_loss,
    dtw_ar_attack,
    cw_sdtw_attack,
    fgs_attack,
    pgd_attack,
    attack_dataset,
    calibrate_delta,
)
from .robustness import (
    alpha_eff,
    robust_accuracy,
    transfer_eval,
    AttackRanges,
    adversarial_train,
    augment_with_adversarial,
    diversity_report,
    RobustnessReport,
)
from .analysis import (
    DistanceMatrix,
    distance_matrix,
    MdsResult,
    mds_embed,
    mds_silhouette,
    BenchRecord,
    runtime_bench,
    pathsim_trace,
)

__version__ = "0.1.0"
