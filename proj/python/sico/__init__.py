"""Step-wise confidence-driven source-free domain adaptation."""

from sico._core import (  # noqa: F401
    AdaptationError,
    AdaptationState,
    ConfigError,
    DataError,
    FormatError,
    InputError,
    MetricError,
    NetworkParams,
    NetworkSpec,
    NumericError,
    SampleSet,
    StageRecord,
    accuracy_on,
    checkpoint_string,
    confusion,
    delta,
    downsample_to_1hz,
    empirical_risk,
    entropy_of,
    init_network,
    kappa,
    load_checkpoint,
    load_idx,
    load_signal_csv,
    merge_30s_labels,
    paired_t_one_tailed,
    predict,
    predict_proba,
    preset_network,
    pseudo_label,
    rebalance,
    rescale_pixels,
    resize_and_gray,
    save_checkpoint,
    save_idx,
    save_signal_csv,
    select,
    sensitivity_specificity,
    sico_adapt,
    split,
    standardize_per_signal,
    subsample,
    summarize,
    synth_apnea_like,
    synth_shifted_gaussians,
    train_source,
)

__all__ = [name for name in dir() if not name.startswith("_")]
