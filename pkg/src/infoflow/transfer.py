"""Transfer entropy as a difference of two classifier-based MI estimates.

By the chain rule, the conditional mutual information between the source
past and the target present given the target past equals
``I(x-; (y0, y-)) - I(x-; y-)``. Each term is estimated with the
two-sample classifier pipeline; the two runs share one train/eval index
partition (which lowers the variance of the difference) but use
independent training seeds and independent product resampling.
"""

from dataclasses import dataclass

from sklearn.base import BaseEstimator

from .classifier_mi import MineConfig, MiEstimate, draw_split_indices, fit_classifier_mi
from .embedding import EmbeddingConfig, embed
from .validation import (
    STREAM_MINE_A,
    STREAM_MINE_B,
    STREAM_SPLIT,
    check_series_pair,
    derive_seed,
    substream,
)


@dataclass(frozen=True)
class TransferEntropyResult:
    """TE estimate in nats together with both sub-estimates."""

    te_nats: float
    joint_history: MiEstimate
    target_history: MiEstimate


def estimate_te(x, y, embedding=None, mine=None, rng_seed=None, drop_padded=False, _swap_streams=False):
    """Estimate the transfer entropy from x to y in nats.

    ``embedding`` is an :class:`EmbeddingConfig` (memory orders) and
    ``mine`` a :class:`MineConfig`. The run seed controls the shared
    split, both training runs, and both product resamples. Rows with
    zero padding are kept unless ``drop_padded`` is set.
    """
    embedding = embedding or EmbeddingConfig()
    mine = mine or MineConfig()
    x, y = check_series_pair(x, y)
    data = embed(x, y, embedding)
    if drop_padded:
        data = data.drop_padded()
    split = draw_split_indices(len(data), mine.train_fraction, substream(rng_seed, STREAM_SPLIT))
    stream_a, stream_b = STREAM_MINE_A, STREAM_MINE_B
    if _swap_streams:
        stream_a, stream_b = stream_b, stream_a
    fit_a = fit_classifier_mi(
        data.x_minus, data.joint_v(), mine,
        rng_seed=derive_seed(rng_seed, stream_a), split_indices=split,
    )
    fit_b = fit_classifier_mi(
        data.x_minus, data.y_minus, mine,
        rng_seed=derive_seed(rng_seed, stream_b), split_indices=split,
    )
    te = fit_a.estimate.value_nats - fit_b.estimate.value_nats
    return TransferEntropyResult(te, fit_a.estimate, fit_b.estimate)


class TransferEntropyEstimator(BaseEstimator):
    """Sklearn-style estimator of transfer entropy between two series.

    ``fit(x, y)`` treats x as the source series and y as the target;
    the estimate in nats is stored in ``te_``.
    """

    def __init__(
        self,
        m=1,
        n=1,
        hidden_widths=(100, 100),
        clip_tau=0.9,
        learning_rate=0.001,
        train_fraction=0.75,
        epochs=200,
        batch_size=256,
        optimizer="adam",
        coupled_split=True,
        drop_padded=False,
        random_state=None,
    ):
        self.m = m
        self.n = n
        self.hidden_widths = hidden_widths
        self.clip_tau = clip_tau
        self.learning_rate = learning_rate
        self.train_fraction = train_fraction
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.coupled_split = coupled_split
        self.drop_padded = drop_padded
        self.random_state = random_state

    def _mine_config(self):
        return MineConfig(
            hidden_widths=tuple(self.hidden_widths),
            clip_tau=self.clip_tau,
            learning_rate=self.learning_rate,
            train_fraction=self.train_fraction,
            epochs=self.epochs,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            coupled_split=self.coupled_split,
            rng_seed=self.random_state,
        )

    def fit(self, X, y):
        result = estimate_te(
            X,
            y,
            embedding=EmbeddingConfig(self.m, self.n),
            mine=self._mine_config(),
            rng_seed=self.random_state,
            drop_padded=self.drop_padded,
        )
        self.result_ = result
        self.te_ = result.te_nats
        self.mi_joint_history_ = result.joint_history.value_nats
        self.mi_target_history_ = result.target_history.value_nats
        return self
