"""Intrinsic transfer entropy via an optimized stochastic channel.

The target history is passed through a learned Gaussian channel
``ybar = mu(y-) + sigma(y-) * eps`` (the reparameterization trick, so the
sample is a differentiable function of the channel weights and exogenous
noise). The intrinsic part of the transfer entropy is the infimum over
channels of the TE-style difference ``I(x-; (y0, ybar)) - I(x-; ybar)``,
which discounts information that is only available synergistically from
both histories.

The fit alternates two-sample classifier refits (on the datasets induced
by the current channel) with descent steps on the channel weights using
pathwise Monte Carlo gradients: the classifier is differentiated with
respect to its ybar inputs and chained through the channel network.
"""

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from . import nn
from .classifier_mi import MineConfig, clip_ratio, draw_split_indices, fit_classifier_mi
from .embedding import EmbeddingConfig, embed
from .exceptions import ConfigurationError, NumericError
from .transfer import estimate_te
from .validation import (
    STREAM_CHANNEL,
    STREAM_MINE_A,
    STREAM_MINE_B,
    STREAM_NOISE,
    STREAM_SPLIT,
    as_generator,
    check_series_pair,
    derive_seed,
    substream,
)


@dataclass(frozen=True)
class ReparamChannel:
    """Gaussian channel on the target history.

    The network emits means and log standard deviations as disjoint
    output blocks; log sigma is clamped into
    [log_std_floor, log_std_ceiling]. With ``identity_skip`` the mean
    block is added to the input, so small weights give a near-identity
    channel.
    """

    net: nn.DenseNetParams
    log_std_floor: float = -6.0
    log_std_ceiling: float = 2.0
    identity_skip: bool = True

    def __post_init__(self):
        if self.net.output_kind != "mean_and_logstd":
            raise ConfigurationError("channel network must have output_kind='mean_and_logstd'")
        if self.net.n_outputs != 2 * self.net.n_inputs:
            raise ConfigurationError("channel network must emit 2 outputs per input coordinate")
        if self.log_std_floor >= self.log_std_ceiling:
            raise ConfigurationError("log_std_floor must be below log_std_ceiling")

    @property
    def width(self):
        return self.net.n_inputs

    def mu_sigma(self, y_minus):
        """Means, standard deviations, and the unclamped-log-sigma mask."""
        out = nn.forward(self.net, y_minus)
        k = self.width
        mu = y_minus + out[:, :k] if self.identity_skip else out[:, :k]
        raw = out[:, k:]
        log_std = np.clip(raw, self.log_std_floor, self.log_std_ceiling)
        inside = (raw > self.log_std_floor) & (raw < self.log_std_ceiling)
        return mu, np.exp(log_std), inside


@dataclass(frozen=True)
class NoiseBatch:
    """Standard normal draws, one row per time step; fresh per iteration."""

    epsilon: np.ndarray
    seed: int | None = None


def init_channel(
    width,
    hidden=(200,),
    rng_seed=None,
    log_std_init=-3.0,
    output_scale=1e-2,
    log_std_floor=-6.0,
    log_std_ceiling=2.0,
    identity_skip=True,
):
    """Channel initialized near the identity.

    Output-layer weights are scaled down so mu(y-) starts close to y-
    (through the identity skip) and the log-sigma outputs start at
    ``log_std_init``.
    """
    net = nn.init_network([width, *hidden, 2 * width], "mean_and_logstd", rng_seed)
    weights = list(net.weights)
    biases = list(net.biases)
    weights[-1] = weights[-1] * output_scale
    last_b = biases[-1].copy()
    last_b[width:] = log_std_init
    biases[-1] = last_b
    net = nn.DenseNetParams(net.layer_sizes, tuple(weights), tuple(biases), net.output_kind)
    return ReparamChannel(net, log_std_floor, log_std_ceiling, identity_skip)


def draw_noise(n_rows, width, rng_seed=None):
    rng = as_generator(rng_seed)
    return NoiseBatch(rng.standard_normal((n_rows, width)), seed=rng_seed)


def sample_bar_y(channel, y_minus, noise):
    """Channel samples mu + sigma * eps, one row per target-history row."""
    eps = noise.epsilon if isinstance(noise, NoiseBatch) else np.asarray(noise)
    if eps.shape != y_minus.shape:
        raise ValueError(f"noise shape {eps.shape} does not match history {y_minus.shape}")
    mu, sigma, _ = channel.mu_sigma(y_minus)
    ybar = mu + sigma * eps
    if not np.all(np.isfinite(ybar)):
        raise NumericError("channel produced non-finite samples")
    return ybar


def _rows(data, ybar, eval_idx, perm, include_y0):
    """Joint and product classifier inputs on the held-out rows."""
    src = perm[eval_idx]
    if include_y0:
        joint = np.hstack([data.x_minus[eval_idx], data.y0[eval_idx, None], ybar[eval_idx]])
        prod = np.hstack([data.x_minus[eval_idx], data.y0[src, None], ybar[src]])
    else:
        joint = np.hstack([data.x_minus[eval_idx], ybar[eval_idx]])
        prod = np.hstack([data.x_minus[eval_idx], ybar[src]])
    return joint, prod, src


def _clamped_ratio(classifier, X, prob_clamp):
    z = nn.forward(classifier, X)[:, 0]
    p = nn.sigmoid(z)
    clamped = (p <= prob_clamp) | (p >= 1.0 - prob_clamp)
    p = np.clip(p, prob_clamp, 1.0 - prob_clamp)
    return p / (1.0 - p), clamped


def reparam_term_means(channel, data, noise, classifier, tau, eval_idx, perm, include_y0, prob_clamp=1e-6):
    """Evaluation-set means feeding one MI term under the channel.

    Returns (mean log ratio on joint rows, mean clipped ratio on product
    rows, mean raw ratio on product rows).
    """
    ybar = sample_bar_y(channel, data.y_minus, noise)
    joint, prod, _ = _rows(data, ybar, eval_idx, perm, include_y0)
    r_joint, _ = _clamped_ratio(classifier, joint, prob_clamp)
    r_prod, _ = _clamped_ratio(classifier, prod, prob_clamp)
    return (
        float(np.mean(np.log(r_joint))),
        float(np.mean(clip_ratio(r_prod, tau))),
        float(np.mean(r_prod)),
    )


def estimate_mi_a(channel, data, noise, classifier, tau, eval_idx, perm, prob_clamp=1e-6, clip_product=True):
    """MI estimate between the source history and (y0, ybar) rows."""
    mean_log, mean_clip, mean_raw = reparam_term_means(
        channel, data, noise, classifier, tau, eval_idx, perm, True, prob_clamp
    )
    return mean_log - np.log(mean_clip if clip_product else mean_raw)


def estimate_mi_b(channel, data, noise, classifier, tau, eval_idx, perm, prob_clamp=1e-6, clip_product=True):
    """MI estimate between the source history and ybar rows."""
    mean_log, mean_clip, mean_raw = reparam_term_means(
        channel, data, noise, classifier, tau, eval_idx, perm, False, prob_clamp
    )
    return mean_log - np.log(mean_clip if clip_product else mean_raw)


def reparam_objective(
    channel, data, noise, theta, theta_prime, tau, eval_idx, perm_a, perm_b,
    prob_clamp=1e-6, clip_product=True,
):
    """The channel-dependent objective: MI(A-term) minus MI(B-term)."""
    return estimate_mi_a(
        channel, data, noise, theta, tau, eval_idx, perm_a, prob_clamp, clip_product
    ) - estimate_mi_b(
        channel, data, noise, theta_prime, tau, eval_idx, perm_b, prob_clamp, clip_product
    )


def _term_cotangent(channel_state, data, classifier, tau, eval_idx, perm, include_y0,
                    prob_clamp, clip_num, clip_den):
    """Cotangent on the ybar rows contributed by one MI term.

    Joint rows contribute the gradient of the mean log ratio; product
    rows contribute minus the ratio-of-means gradient, where rows whose
    ratio falls outside the clip band are dropped from the numerator
    when ``clip_num`` and the denominator mean is clipped when
    ``clip_den``.
    """
    ybar, _, _ = channel_state
    joint, prod, src = _rows(data, ybar, eval_idx, perm, include_y0)
    n_eval = len(eval_idx)
    cols = slice(joint.shape[1] - ybar.shape[1], joint.shape[1])
    cot = np.zeros_like(ybar)

    z_j, gin_j = nn.forward_and_input_grad(classifier, joint)
    p_j = nn.sigmoid(z_j)
    live_j = (p_j > prob_clamp) & (p_j < 1.0 - prob_clamp)
    # d log r / d input = d logit / d input wherever the posterior is not clamped
    w_joint = gin_j[:, cols] * live_j[:, None] / n_eval
    np.add.at(cot, eval_idx, w_joint)

    z_p, gin_p = nn.forward_and_input_grad(classifier, prod)
    p_p = nn.sigmoid(z_p)
    live_p = (p_p > prob_clamp) & (p_p < 1.0 - prob_clamp)
    p_p = np.clip(p_p, prob_clamp, 1.0 - prob_clamp)
    r_p = p_p / (1.0 - p_p)
    # d r / d input = r * d logit / d input
    weight = r_p * live_p
    if clip_num:
        lo, hi = np.exp(-tau), np.exp(tau)
        weight = weight * ((r_p > lo) & (r_p < hi))
    denom = np.mean(clip_ratio(r_p, tau)) if clip_den else np.mean(r_p)
    w_prod = gin_p[:, cols] * (weight / (n_eval * denom))[:, None]
    np.add.at(cot, src, -w_prod)
    return cot


def pathwise_grad_phi(
    channel, data, noise, theta, theta_prime, tau, eval_idx, perm_a, perm_b,
    prob_clamp=1e-6, clip_grad_numerator=True, clip_grad_denominator=False,
):
    """Gradient of the objective with respect to the channel weights.

    Both MI terms are differentiated through their ybar inputs and
    chained through the channel: the mean block passes the cotangent
    straight through, the log-sigma block scales it by sigma * eps and
    is masked where the clamp is active.
    """
    eps = noise.epsilon if isinstance(noise, NoiseBatch) else np.asarray(noise)
    mu, sigma, inside = channel.mu_sigma(data.y_minus)
    ybar = mu + sigma * eps
    state = (ybar, sigma, inside)
    cot = _term_cotangent(
        state, data, theta, tau, eval_idx, perm_a, True,
        prob_clamp, clip_grad_numerator, clip_grad_denominator,
    )
    cot -= _term_cotangent(
        state, data, theta_prime, tau, eval_idx, perm_b, False,
        prob_clamp, clip_grad_numerator, clip_grad_denominator,
    )
    out_cot = np.hstack([cot, cot * sigma * eps * inside])
    grads = nn.vjp(channel.net, data.y_minus, out_cot)
    for g in (*grads.weights, *grads.biases):
        if not np.all(np.isfinite(g)):
            raise NumericError(
                "non-finite pathwise gradient",
                max_ratio=float(np.max(np.abs(cot))),
            )
    return grads


@dataclass(frozen=True)
class IteneConfig:
    """Knobs of the alternating channel/classifier optimization."""

    outer_iterations: int = 25
    phi_steps_per_iter: int = 5
    phi_learning_rate: float = 0.03
    phi_optimizer: str = "adam"
    refit_epochs: int = 20
    warm_start: bool = True
    convergence_tol: float = 0.005
    smoothing_window: int = 5
    channel_hidden: tuple = (200,)
    log_std_init: float = -3.0
    log_std_floor: float = -6.0
    log_std_ceiling: float = 2.0
    channel_output_scale: float = 1e-2
    clip_grad_numerator: bool = True
    clip_grad_denominator: bool = False
    rng_seed: int | None = None

    def __post_init__(self):
        if self.outer_iterations < 1:
            raise ConfigurationError("outer_iterations must be >= 1")
        if self.phi_steps_per_iter < 0:
            raise ConfigurationError("phi_steps_per_iter must be >= 0")
        if self.convergence_tol <= 0:
            raise ConfigurationError("convergence_tol must be positive")
        if self.refit_epochs < 1:
            raise ConfigurationError("refit_epochs must be >= 1")


@dataclass(frozen=True)
class FlowEstimates:
    """Transfer entropy, its intrinsic part, and the synergistic residual."""

    te_nats: float
    ite_nats: float
    ste_nats: float
    iterations: np.ndarray
    i_a_trace: np.ndarray
    i_b_trace: np.ndarray
    objective_trace: np.ndarray


def _moving_average(values, window):
    w = min(window, len(values))
    kernel = np.ones(w) / w
    return np.convolve(values, kernel, mode="valid")


def fit_itene(x, y, embedding=None, mine=None, itene=None, rng_seed=None):
    """Alternating optimization of the channel and its classifiers.

    Each outer iteration draws fresh channel noise, refits both
    classifiers on the induced datasets (warm-started after the first
    iteration), then takes pathwise descent steps on the channel. The
    reported intrinsic value is the minimum of the smoothed objective
    trajectory; the transfer entropy is computed on the same data with
    the same seed and the synergistic part is the exact difference.
    """
    embedding = embedding or EmbeddingConfig()
    mine = mine or MineConfig()
    itene = itene or IteneConfig()
    seed = rng_seed if rng_seed is not None else itene.rng_seed
    x, y = check_series_pair(x, y)
    data = embed(x, y, embedding)
    n_rows = len(data)
    split = draw_split_indices(n_rows, mine.train_fraction, substream(seed, STREAM_SPLIT))
    channel = init_channel(
        embedding.n,
        hidden=itene.channel_hidden,
        rng_seed=substream(seed, STREAM_CHANNEL),
        log_std_init=itene.log_std_init,
        output_scale=itene.channel_output_scale,
        log_std_floor=itene.log_std_floor,
        log_std_ceiling=itene.log_std_ceiling,
    )
    opt_state = nn.init_optimizer(channel.net, itene.phi_optimizer, itene.phi_learning_rate)
    theta = theta_prime = None
    i_a, i_b, objectives = [], [], []
    for k in range(itene.outer_iterations):
        noise = draw_noise(n_rows, embedding.n, substream(seed, STREAM_NOISE, k))
        ybar = sample_bar_y(channel, data.y_minus, noise)
        warm = itene.warm_start and k > 0
        fit_a = fit_classifier_mi(
            data.x_minus,
            np.hstack([data.y0[:, None], ybar]),
            mine,
            rng_seed=derive_seed(seed, STREAM_MINE_A, k),
            split_indices=split,
            init_params=theta if warm else None,
            epochs=itene.refit_epochs if warm else None,
        )
        fit_b = fit_classifier_mi(
            data.x_minus,
            ybar,
            mine,
            rng_seed=derive_seed(seed, STREAM_MINE_B, k),
            split_indices=split,
            init_params=theta_prime if warm else None,
            epochs=itene.refit_epochs if warm else None,
        )
        theta, theta_prime = fit_a.classifier, fit_b.classifier
        i_a.append(fit_a.estimate.value_nats)
        i_b.append(fit_b.estimate.value_nats)
        objectives.append(i_a[-1] - i_b[-1])
        recent = objectives[-5:]
        if len(recent) == 5 and max(recent) - min(recent) < itene.convergence_tol:
            break
        for _ in range(itene.phi_steps_per_iter):
            grads = pathwise_grad_phi(
                channel, data, noise, theta, theta_prime, mine.clip_tau,
                split[1], fit_a.resample_indices, fit_b.resample_indices,
                prob_clamp=mine.prob_clamp,
                clip_grad_numerator=itene.clip_grad_numerator,
                clip_grad_denominator=itene.clip_grad_denominator,
            )
            new_net, opt_state = nn.optimizer_step(channel.net, grads, opt_state)
            channel = replace(channel, net=new_net)
    ite = float(np.min(_moving_average(objectives, itene.smoothing_window)))
    te = estimate_te(x, y, embedding, mine, rng_seed=seed).te_nats
    return FlowEstimates(
        te_nats=te,
        ite_nats=ite,
        ste_nats=te - ite,
        iterations=np.arange(len(objectives)),
        i_a_trace=np.asarray(i_a),
        i_b_trace=np.asarray(i_b),
        objective_trace=np.asarray(objectives),
    )


class IntrinsicTransferEntropyEstimator(BaseEstimator):
    """Sklearn-style estimator of intrinsic transfer entropy.

    ``fit(x, y)`` exposes ``te_``, ``ite_`` and ``ste_`` (all in nats)
    plus the per-iteration objective ``trace_``.
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
        outer_iterations=25,
        phi_steps_per_iter=5,
        phi_learning_rate=0.03,
        phi_optimizer="adam",
        refit_epochs=20,
        warm_start=True,
        convergence_tol=0.005,
        smoothing_window=5,
        channel_hidden=(200,),
        log_std_init=-3.0,
        channel_output_scale=1e-2,
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
        self.outer_iterations = outer_iterations
        self.phi_steps_per_iter = phi_steps_per_iter
        self.phi_learning_rate = phi_learning_rate
        self.phi_optimizer = phi_optimizer
        self.refit_epochs = refit_epochs
        self.warm_start = warm_start
        self.convergence_tol = convergence_tol
        self.smoothing_window = smoothing_window
        self.channel_hidden = channel_hidden
        self.log_std_init = log_std_init
        self.channel_output_scale = channel_output_scale
        self.random_state = random_state

    def _configs(self):
        mine = MineConfig(
            hidden_widths=tuple(self.hidden_widths),
            clip_tau=self.clip_tau,
            learning_rate=self.learning_rate,
            train_fraction=self.train_fraction,
            epochs=self.epochs,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            rng_seed=self.random_state,
        )
        itene = IteneConfig(
            outer_iterations=self.outer_iterations,
            phi_steps_per_iter=self.phi_steps_per_iter,
            phi_learning_rate=self.phi_learning_rate,
            phi_optimizer=self.phi_optimizer,
            refit_epochs=self.refit_epochs,
            warm_start=self.warm_start,
            convergence_tol=self.convergence_tol,
            smoothing_window=self.smoothing_window,
            channel_hidden=tuple(self.channel_hidden),
            log_std_init=self.log_std_init,
            channel_output_scale=self.channel_output_scale,
            rng_seed=self.random_state,
        )
        return mine, itene

    def fit(self, X, y):
        mine, itene = self._configs()
        flows = fit_itene(
            X, y,
            embedding=EmbeddingConfig(self.m, self.n),
            mine=mine,
            itene=itene,
            rng_seed=self.random_state,
        )
        self.flows_ = flows
        self.te_ = flows.te_nats
        self.ite_ = flows.ite_nats
        self.ste_ = flows.ste_nats
        self.trace_ = np.column_stack(
            [flows.iterations, flows.i_a_trace, flows.i_b_trace, flows.objective_trace]
        )
        return self
