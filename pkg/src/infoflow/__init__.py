"""Neural estimators of transfer entropy and its intrinsic part."""

from .classifier_mi import (
    ClassifierMIEstimator,
    MineConfig,
    MiEstimate,
    PairDataset,
    clip_ratio,
    estimate_mi,
    fit_classifier_mi,
    ratio_estimate,
    resample_product,
    split_train_eval,
    train_classifier,
)
from .embedding import EmbeddedDataset, EmbeddingConfig, embed
from .exceptions import ConfigurationError, NumericError
from .intrinsic import (
    FlowEstimates,
    IntrinsicTransferEntropyEstimator,
    IteneConfig,
    NoiseBatch,
    ReparamChannel,
    fit_itene,
    init_channel,
    pathwise_grad_phi,
    sample_bar_y,
)
from .synthetic import (
    SeriesPair,
    ThresholdProcessSpec,
    closed_form_te,
    gen_gaussian_pair,
    gen_independent,
    gen_threshold_process,
    gen_xor_process,
)
from .transfer import TransferEntropyEstimator, TransferEntropyResult, estimate_te

__version__ = "0.1.0"

__all__ = [
    "ClassifierMIEstimator",
    "ConfigurationError",
    "EmbeddedDataset",
    "EmbeddingConfig",
    "FlowEstimates",
    "IntrinsicTransferEntropyEstimator",
    "IteneConfig",
    "MiEstimate",
    "MineConfig",
    "NoiseBatch",
    "NumericError",
    "PairDataset",
    "ReparamChannel",
    "SeriesPair",
    "ThresholdProcessSpec",
    "TransferEntropyEstimator",
    "TransferEntropyResult",
    "clip_ratio",
    "closed_form_te",
    "embed",
    "estimate_mi",
    "estimate_te",
    "fit_classifier_mi",
    "fit_itene",
    "gen_gaussian_pair",
    "gen_independent",
    "gen_threshold_process",
    "gen_xor_process",
    "init_channel",
    "pathwise_grad_phi",
    "ratio_estimate",
    "resample_product",
    "sample_bar_y",
    "split_train_eval",
    "train_classifier",
    "__version__",
]
