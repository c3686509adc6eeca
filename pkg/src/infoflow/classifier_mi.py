"""Mutual information estimation with a two-sample classifier.

The estimator follows the density-ratio route: samples from the joint
distribution are labeled 1, samples from an approximate product
distribution (obtained by resampling the second coordinate with
replacement) are labeled 0, and a binary classifier is trained to tell
them apart. The classifier's posterior odds ``p/(1-p)`` estimate the
likelihood ratio between joint and product densities, which plugs into
the Donsker-Varadhan representation of mutual information: the estimate
is the mean log ratio over held-out joint rows minus the log of the mean
clipped ratio over held-out product rows. Clipping the product-side
ratio to ``[e^-tau, e^tau]`` keeps the variance of that mean under
control at the price of bias.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import nn
from .exceptions import ConfigurationError, NumericError
from .validation import as_generator, check_fraction, check_matrix, substream

# Internal sub-stream labels for one estimation run.
_SUB_SPLIT = 11
_SUB_RESAMPLE = 12
_SUB_TRAIN = 13


@dataclass(frozen=True)
class PairDataset:
    """Aligned samples of (u, v) with a class label (1=joint, 0=product)."""

    u: np.ndarray
    v: np.ndarray
    label: int
    source_indices: np.ndarray | None = None

    def __post_init__(self):
        u = check_matrix(self.u, "u")
        v = check_matrix(self.v, "v")
        if len(u) != len(v):
            raise ValueError(f"u and v row counts differ: {len(u)} vs {len(v)}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __len__(self):
        return len(self.u)

    def take(self, indices):
        src = None if self.source_indices is None else self.source_indices[indices]
        return PairDataset(self.u[indices], self.v[indices], self.label, src)

    def stacked(self):
        return np.hstack([self.u, self.v])


@dataclass(frozen=True)
class MineConfig:
    """Hyperparameters of one classifier-based MI estimation."""

    hidden_widths: tuple = (100, 100)
    clip_tau: float = 0.9
    learning_rate: float = 0.001
    train_fraction: float = 0.75
    epochs: int = 200
    batch_size: int = 256
    optimizer: str = "adam"
    coupled_split: bool = True
    early_stop_delta: float = 1e-5
    early_stop_patience: int = 10
    prob_clamp: float = 1e-6
    rng_seed: int | None = None

    def __post_init__(self):
        check_fraction(self.train_fraction, "train_fraction")
        if self.clip_tau < 0:
            raise ConfigurationError(f"clip_tau must be >= 0, got {self.clip_tau}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if not (0 < self.prob_clamp < 0.5):
            raise ConfigurationError("prob_clamp must lie in (0, 0.5)")


@dataclass(frozen=True)
class MiEstimate:
    """An MI point estimate in nats plus its provenance."""

    value_nats: float
    n_train: int
    n_eval: int
    config: MineConfig
    classifier: nn.DenseNetParams

    def __post_init__(self):
        if not np.isfinite(self.value_nats):
            raise NumericError("MI estimate is non-finite")


@dataclass(frozen=True)
class MiFit:
    """Everything produced by one full estimation run."""

    estimate: MiEstimate
    classifier: nn.DenseNetParams
    train_indices: np.ndarray
    eval_indices: np.ndarray
    resample_indices: np.ndarray
    epoch_losses: np.ndarray


def resample_product(joint, rng_seed=None):
    """Build product-distribution samples {(u_n, v_pi(n))}.

    pi is drawn i.i.d. uniformly with replacement from {0..T-1}; the
    draw is recorded in ``source_indices`` of the returned dataset.
    """
    if len(joint) == 0:
        raise ValueError("joint dataset is empty")
    rng = as_generator(rng_seed)
    perm = rng.integers(0, len(joint), size=len(joint))
    return PairDataset(joint.u, joint.v[perm], label=0, source_indices=perm)


def draw_split_indices(n, train_fraction, rng_seed=None):
    """Random disjoint train/eval index partition of range(n)."""
    check_fraction(train_fraction, "train_fraction")
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n - n_train < 1:
        raise ConfigurationError(
            f"split of {n} rows at fraction {train_fraction} leaves an empty side"
        )
    order = as_generator(rng_seed).permutation(n)
    return order[:n_train], order[n_train:]


def split_train_eval(dataset, train_fraction, rng_seed=None):
    """Split one dataset into (train, eval) by a random index partition."""
    if len(dataset) < 2:
        raise ConfigurationError("need at least 2 rows to split")
    tr, ev = draw_split_indices(len(dataset), train_fraction, rng_seed)
    return dataset.take(tr), dataset.take(ev)


def train_classifier(train_joint, train_product, config, rng_seed=None, init_params=None, epochs=None):
    """Minimize empirical cross-entropy of the two-sample classifier.

    Runs minibatch training for up to ``epochs`` passes with early
    stopping once the best epoch-mean loss stops improving. Returns
    ``(params, epoch_losses)``.
    """
    if len(train_joint) == 0 or len(train_product) == 0:
        raise ValueError("both training sides must be nonempty")
    X = np.vstack([train_joint.stacked(), train_product.stacked()])
    y = np.concatenate([np.ones(len(train_joint)), np.zeros(len(train_product))])
    rng = as_generator(rng_seed if rng_seed is not None else config.rng_seed)
    if init_params is None:
        sizes = [X.shape[1], *config.hidden_widths, 1]
        params = nn.init_network(sizes, "logit_scalar", rng)
    else:
        params = init_params
    state = nn.init_optimizer(params, config.optimizer, config.learning_rate)
    max_epochs = config.epochs if epochs is None else epochs
    losses = []
    best = np.inf
    best_epoch = -1
    n = len(X)
    for epoch in range(max_epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            sel = order[start : start + config.batch_size]
            try:
                loss, grads = nn.grad_params_crossentropy(params, X[sel], y[sel])
            except NumericError as err:
                raise NumericError("classifier training diverged", epoch=epoch) from err
            total += loss * len(sel)
            params, state = nn.optimizer_step(params, grads, state)
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise NumericError("classifier training diverged", epoch=epoch)
        losses.append(epoch_loss)
        if epoch_loss < best - config.early_stop_delta:
            best = epoch_loss
            best_epoch = epoch
        elif epoch - best_epoch >= config.early_stop_patience:
            break
    return params, np.asarray(losses)


def ratio_estimate(classifier, u, v, prob_clamp=1e-6):
    """Likelihood-ratio estimate p/(1-p) from the classifier posterior.

    Probabilities are clamped away from {0, 1} so the ratio is always
    finite and strictly positive. Accepts row batches or single vectors.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    single = u.ndim == 1
    if single:
        u, v = u[None, :], v[None, :]
    z = nn.forward(classifier, np.hstack([u, v]))[:, 0]
    p = np.clip(nn.sigmoid(z), prob_clamp, 1.0 - prob_clamp)
    r = p / (1.0 - p)
    return float(r[0]) if single else r


def clip_ratio(r, tau):
    """Clamp ratio values into [e^-tau, e^tau]."""
    if tau < 0:
        raise ConfigurationError(f"tau must be >= 0, got {tau}")
    return np.clip(r, np.exp(-tau), np.exp(tau))


def estimate_mi(eval_joint, eval_product, classifier, tau, prob_clamp=1e-6, config=None, n_train=0):
    """Plug-in MI estimate on held-out rows.

    Mean log (unclipped) ratio over joint rows, minus the log of the
    mean clipped ratio over product rows; natural log, so nats.
    """
    if len(eval_joint) == 0 or len(eval_product) == 0:
        raise ValueError("evaluation sets must be nonempty")
    r_joint = ratio_estimate(classifier, eval_joint.u, eval_joint.v, prob_clamp)
    r_prod = ratio_estimate(classifier, eval_product.u, eval_product.v, prob_clamp)
    value = float(np.mean(np.log(r_joint)) - np.log(np.mean(clip_ratio(r_prod, tau))))
    return MiEstimate(
        value_nats=value,
        n_train=n_train,
        n_eval=len(eval_joint),
        config=config if config is not None else MineConfig(clip_tau=tau),
        classifier=classifier,
    )


def fit_classifier_mi(u, v, config=None, rng_seed=None, split_indices=None, init_params=None, epochs=None):
    """Run the full estimation pipeline on joint samples (u, v).

    Resample the product set, partition into train/eval, train the
    classifier, and evaluate the estimate on the held-out rows. With
    ``coupled_split`` (default) one index partition is applied to both
    labeled sets; otherwise each side is partitioned independently.

    ``split_indices``, ``init_params`` and ``epochs`` allow callers to
    share a partition across related runs and to warm-start training.
    """
    config = config or MineConfig()
    seed = rng_seed if rng_seed is not None else config.rng_seed
    joint = PairDataset(u, v, label=1)
    if len(joint) < 2:
        raise ConfigurationError("need at least 2 samples")
    product = resample_product(joint, substream(seed, _SUB_RESAMPLE))
    if split_indices is None:
        tr, ev = draw_split_indices(len(joint), config.train_fraction, substream(seed, _SUB_SPLIT))
    else:
        tr, ev = (np.asarray(s) for s in split_indices)
    if config.coupled_split:
        tr0, ev0 = tr, ev
    else:
        tr0, ev0 = draw_split_indices(
            len(joint), config.train_fraction, substream(seed, _SUB_SPLIT + 1)
        )
    classifier, losses = train_classifier(
        joint.take(tr),
        product.take(tr0),
        config,
        rng_seed=substream(seed, _SUB_TRAIN),
        init_params=init_params,
        epochs=epochs,
    )
    estimate = estimate_mi(
        joint.take(ev),
        product.take(ev0),
        classifier,
        config.clip_tau,
        prob_clamp=config.prob_clamp,
        config=config,
        n_train=len(tr),
    )
    return MiFit(
        estimate=estimate,
        classifier=classifier,
        train_indices=tr,
        eval_indices=ev,
        resample_indices=product.source_indices,
        epoch_losses=losses,
    )


class ClassifierMIEstimator(BaseEstimator):
    """Sklearn-style wrapper around the classifier-based MI estimator.

    Parameters mirror :class:`MineConfig`; after ``fit(U, V)`` the
    estimate in nats is available as ``mi_``.
    """

    def __init__(
        self,
        hidden_widths=(100, 100),
        clip_tau=0.9,
        learning_rate=0.001,
        train_fraction=0.75,
        epochs=200,
        batch_size=256,
        optimizer="adam",
        coupled_split=True,
        early_stop_delta=1e-5,
        early_stop_patience=10,
        prob_clamp=1e-6,
        random_state=None,
    ):
        self.hidden_widths = hidden_widths
        self.clip_tau = clip_tau
        self.learning_rate = learning_rate
        self.train_fraction = train_fraction
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.coupled_split = coupled_split
        self.early_stop_delta = early_stop_delta
        self.early_stop_patience = early_stop_patience
        self.prob_clamp = prob_clamp
        self.random_state = random_state

    def _config(self):
        return MineConfig(
            hidden_widths=tuple(self.hidden_widths),
            clip_tau=self.clip_tau,
            learning_rate=self.learning_rate,
            train_fraction=self.train_fraction,
            epochs=self.epochs,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            coupled_split=self.coupled_split,
            early_stop_delta=self.early_stop_delta,
            early_stop_patience=self.early_stop_patience,
            prob_clamp=self.prob_clamp,
            rng_seed=self.random_state,
        )

    def fit(self, X, y):
        """Fit on joint samples: X are the u rows, y the v rows."""
        result = fit_classifier_mi(X, y, self._config())
        self.estimate_ = result.estimate
        self.mi_ = result.estimate.value_nats
        self.classifier_ = result.classifier
        self.n_train_ = result.estimate.n_train
        self.n_eval_ = result.estimate.n_eval
        self.epoch_losses_ = result.epoch_losses
        return self

    def ratio(self, X, y):
        """Pointwise likelihood-ratio estimates for rows (u, v)."""
        if not hasattr(self, "classifier_"):
            raise NotFittedError("ClassifierMIEstimator is not fitted")
        return ratio_estimate(self.classifier_, X, y, self.prob_clamp)
