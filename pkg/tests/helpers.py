"""Shared test utilities: finite-difference oracles for gradient checks."""

import numpy as np

from infoflow import nn
from infoflow.embedding import EmbeddingConfig, embed
from infoflow.intrinsic import ReparamChannel, draw_noise, init_channel, reparam_objective


def flatten_grads(grads):
    return np.concatenate([a.ravel() for a in (*grads.weights, *grads.biases)])


def perturb_net(net, flat_index, step):
    arrays = [w.copy() for w in net.weights] + [b.copy() for b in net.biases]
    offset = 0
    for arr in arrays:
        if flat_index < offset + arr.size:
            arr.ravel()[flat_index - offset] += step
            break
        offset += arr.size
    n_w = len(net.weights)
    return nn.DenseNetParams(
        net.layer_sizes, tuple(arrays[:n_w]), tuple(arrays[n_w:]), net.output_kind
    )


def make_tiny_instance(seed, T=8, channel_hidden=(3,), log_std_init=-0.5):
    """A frozen tiny reparam setup: data, classifiers, channel, noise, rows."""
    rng = np.random.default_rng(seed)
    data = embed(rng.normal(size=T), rng.normal(size=T), EmbeddingConfig(1, 1))
    theta = nn.init_network([3, 4, 1], rng_seed=rng)
    theta_prime = nn.init_network([2, 3, 1], rng_seed=rng)
    channel = init_channel(
        1, hidden=channel_hidden, rng_seed=rng, log_std_init=log_std_init, output_scale=1.0
    )
    noise = draw_noise(T, 1, rng)
    n_eval = max(2, T // 2)
    eval_idx = rng.permutation(T)[:n_eval]
    perm_a = rng.integers(0, T, T)
    perm_b = rng.integers(0, T, T)
    return data, theta, theta_prime, channel, noise, eval_idx, perm_a, perm_b


def fd_objective_grad(channel, objective, h=1e-5):
    """Central finite differences of a scalar objective over channel weights."""
    net = channel.net
    n_params = net.n_parameters()
    fd = np.empty(n_params)
    for i in range(n_params):
        up = ReparamChannel(
            perturb_net(net, i, h),
            channel.log_std_floor,
            channel.log_std_ceiling,
            channel.identity_skip,
        )
        down = ReparamChannel(
            perturb_net(net, i, -h),
            channel.log_std_floor,
            channel.log_std_ceiling,
            channel.identity_skip,
        )
        fd[i] = (objective(up) - objective(down)) / (2 * h)
    return fd


def pathwise_fd_check(seed, clip_product, tau=10.0):
    """Relative error between the pathwise gradient and its FD oracle."""
    from infoflow.intrinsic import pathwise_grad_phi

    data, theta, theta_prime, channel, noise, eval_idx, perm_a, perm_b = make_tiny_instance(seed)
    grads = pathwise_grad_phi(
        channel, data, noise, theta, theta_prime, tau, eval_idx, perm_a, perm_b,
        clip_grad_numerator=clip_product, clip_grad_denominator=clip_product,
    )

    def objective(ch):
        return reparam_objective(
            ch, data, noise, theta, theta_prime, tau, eval_idx, perm_a, perm_b,
            clip_product=clip_product,
        )

    analytic = flatten_grads(grads)
    fd = fd_objective_grad(channel, objective)
    return np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12)
