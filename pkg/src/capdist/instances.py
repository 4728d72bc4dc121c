"""Small named channel instances and random generators used in tests/scripts."""
from __future__ import annotations

import numpy as np

from .channel import ChannelSpec, MacSpec
from .infotheory import Policy

HAMMING2 = np.array([[0.0, 1.0], [1.0, 0.0]])


def clean_bit_channel(u_max: int = 4) -> ChannelSpec:
    """|A|=1, Y=X noiselessly, S ~ Bern(1/2) independent of X, Hamming d."""
    w = np.zeros((2, 2, 1, 2))
    for x in range(2):
        w[x, :, 0, x] = 1.0
    return ChannelSpec(
        alpha_a=1, alpha_x=2, alpha_s=2, alpha_u_max=u_max, alpha_shat=2,
        alpha_y=2, state_given_action=np.array([[0.5, 0.5]]),
        output_given_xsa=w, distortion=HAMMING2,
    )


def additive_state_channel(state_p: float = 0.1, u_max: int = 4) -> ChannelSpec:
    """|A|=1, Y = X xor S with S ~ Bern(state_p), Hamming distortion."""
    w = np.zeros((2, 2, 1, 2))
    for x in range(2):
        for s in range(2):
            w[x, s, 0, x ^ s] = 1.0
    return ChannelSpec(
        alpha_a=1, alpha_x=2, alpha_s=2, alpha_u_max=u_max, alpha_shat=2,
        alpha_y=2, state_given_action=np.array([[1 - state_p, state_p]]),
        output_given_xsa=w, distortion=HAMMING2,
    )


def useless_output_channel(u_max: int = 4) -> ChannelSpec:
    """|A|=1, Y constant, S ~ Bern(1/2): nothing reaches the decoder."""
    w = np.zeros((2, 2, 1, 2))
    w[:, :, 0, 0] = 1.0
    return ChannelSpec(
        alpha_a=1, alpha_x=2, alpha_s=2, alpha_u_max=u_max, alpha_shat=2,
        alpha_y=2, state_given_action=np.array([[0.5, 0.5]]),
        output_given_xsa=w, distortion=HAMMING2,
    )


def noiseless_pair_channel(u_max: int = 2) -> ChannelSpec:
    """|A|=|X|=2, Y = (X, A) noiselessly, action-independent uniform state."""
    w = np.zeros((2, 2, 2, 4))
    for x in range(2):
        for a in range(2):
            w[x, :, a, x * 2 + a] = 1.0
    return ChannelSpec(
        alpha_a=2, alpha_x=2, alpha_s=2, alpha_u_max=u_max, alpha_shat=2,
        alpha_y=4, state_given_action=np.array([[0.5, 0.5], [0.5, 0.5]]),
        output_given_xsa=w, distortion=HAMMING2,
    )


def state_only_output_channel(flip: float = 0.2, u_max: int = 4,
                              state_rows: np.ndarray | None = None) -> ChannelSpec:
    """p(y|x,s,a) = p(y|s,a): the channel input does not touch the output.

    Y equals S xor A flipped with probability `flip`; the state kernel
    defaults to action-dependent asymmetric rows.
    """
    if state_rows is None:
        state_rows = np.array([[0.8, 0.2], [0.35, 0.65]])
    w = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for a in range(2):
            y = s ^ a
            w[:, s, a, y] = 1 - flip
            w[:, s, a, 1 - y] = flip
    return ChannelSpec(
        alpha_a=2, alpha_x=2, alpha_s=2, alpha_u_max=u_max, alpha_shat=2,
        alpha_y=2, state_given_action=np.asarray(state_rows, dtype=float),
        output_given_xsa=w, distortion=HAMMING2,
    )


def scarce_capacity_channel(state_p: float = 0.2, flip: float = 0.05,
                            u_max: int = 4) -> ChannelSpec:
    """|A|=1, Y = (X xor S) through a BSC(flip): capacity below H(S).

    Full state description is impossible, so the minimum distortion is
    strictly positive and the curve reaches zero rate there.
    """
    w = np.zeros((2, 2, 1, 2))
    for x in range(2):
        for s in range(2):
            y = x ^ s
            w[x, s, 0, y] = 1 - flip
            w[x, s, 0, 1 - y] = flip
    return ChannelSpec(
        alpha_a=1, alpha_x=2, alpha_s=2, alpha_u_max=u_max, alpha_shat=2,
        alpha_y=2, state_given_action=np.array([[1 - state_p, state_p]]),
        output_given_xsa=w, distortion=HAMMING2,
    )


def random_binary_channel(rng: np.random.Generator, u_max: int = 4,
                          concentration: float = 1.5) -> ChannelSpec:
    """Random dense binary-alphabet channel with Hamming distortion."""
    p_sa = rng.dirichlet(concentration * np.ones(2), size=2)
    w = rng.dirichlet(concentration * np.ones(2), size=(2, 2, 2))
    return ChannelSpec(
        alpha_a=2, alpha_x=2, alpha_s=2, alpha_u_max=u_max, alpha_shat=2,
        alpha_y=2, state_given_action=p_sa, output_given_xsa=w,
        distortion=HAMMING2,
    )


def random_channel(rng: np.random.Generator, na=2, nx=2, ns=2, ny=2,
                   nshat=None, u_max: int | None = None,
                   concentration: float = 1.5) -> ChannelSpec:
    """Random channel with arbitrary alphabet sizes and Hamming-like d."""
    nshat = ns if nshat is None else nshat
    if u_max is None:
        u_max = nx * ns * na + 2
    p_sa = rng.dirichlet(concentration * np.ones(ns), size=na)
    w = rng.dirichlet(concentration * np.ones(ny), size=(nx, ns, na))
    d = np.ones((ns, nshat)) - np.eye(ns, nshat)
    return ChannelSpec(
        alpha_a=na, alpha_x=nx, alpha_s=ns, alpha_u_max=u_max,
        alpha_shat=nshat, alpha_y=ny, state_given_action=p_sa,
        output_given_xsa=w, distortion=d,
    )


def binary_cooperative_mac(flip: float = 0.1, state_p: float = 0.3) -> MacSpec:
    """Binary MAC: Y = (X1 xor S) with crossover `flip`, X2 shifts the state use.

    Output depends on all of (s, x1, x2): y = x1 xor (s and x2) through a
    BSC(flip).  State ~ Bern(state_p), Hamming distortion.
    """
    w = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for x1 in range(2):
            for x2 in range(2):
                y = x1 ^ (s & x2)
                w[s, x1, x2, y] = 1 - flip
                w[s, x1, x2, 1 - y] = flip
    return MacSpec(
        alpha_x1=2, alpha_x2=2, alpha_s=2, alpha_shat=2, alpha_y=2,
        state_pmf=np.array([1 - state_p, state_p]),
        output_given_sx1x2=w, distortion=HAMMING2,
    )


def uniform_input_policy(spec: ChannelSpec, num_u: int = 1,
                         estimator: np.ndarray | None = None) -> Policy:
    """Uniform p(a), p(x|a); constant description symbol; zero estimator."""
    nu = num_u
    pu = np.zeros((spec.alpha_x, spec.alpha_s, spec.alpha_a, nu))
    pu[..., 0] = 1.0
    if estimator is None:
        estimator = np.zeros((nu, spec.alpha_x, spec.alpha_a, spec.alpha_y),
                             dtype=int)
    return Policy(
        p_a=np.full(spec.alpha_a, 1.0 / spec.alpha_a),
        p_x_given_a=np.full((spec.alpha_a, spec.alpha_x), 1.0 / spec.alpha_x),
        p_u_given_xsa=pu, estimator=estimator,
    )


def state_copy_policy(spec: ChannelSpec, noise: float = 0.0) -> Policy:
    """U = S through a symmetric test channel with crossover `noise`.

    Needs |U| = |S|; estimator reconstructs shat = u (valid when
    |Shat| >= |S|).
    """
    ns = spec.alpha_s
    pu = np.zeros((spec.alpha_x, spec.alpha_s, spec.alpha_a, ns))
    for s in range(ns):
        pu[:, s, :, :] = noise / (ns - 1) if ns > 1 else 1.0
        pu[:, s, :, s] = 1.0 - noise
    est = np.zeros((ns, spec.alpha_x, spec.alpha_a, spec.alpha_y), dtype=int)
    for u in range(ns):
        est[u] = u
    return Policy(
        p_a=np.full(spec.alpha_a, 1.0 / spec.alpha_a),
        p_x_given_a=np.full((spec.alpha_a, spec.alpha_x), 1.0 / spec.alpha_x),
        p_u_given_xsa=pu, estimator=est,
    )


def random_policy(rng: np.random.Generator, spec: ChannelSpec, num_u: int,
                  concentration: float = 1.0) -> Policy:
    """Dirichlet-random policy with a random (valid) estimator map."""
    na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
    return Policy(
        p_a=rng.dirichlet(concentration * np.ones(na)),
        p_x_given_a=rng.dirichlet(concentration * np.ones(nx), size=na),
        p_u_given_xsa=rng.dirichlet(concentration * np.ones(num_u),
                                    size=(nx, ns, na)),
        estimator=rng.integers(0, spec.alpha_shat,
                               size=(num_u, nx, na, spec.alpha_y)),
    )
