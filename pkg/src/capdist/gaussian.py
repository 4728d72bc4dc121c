"""Closed-form capacity-distortion curves for the additive Gaussian model.

The channel is Y = X + A + W + Z with state S = A + W, where W ~ N(0, q) is
the state innovation and Z ~ N(0, n0) the noise, under average power
constraints p_x on the channel input and p_a on the action, with squared
error distortion.

Values are reported in bits.  The saturated branch uses (1/2) log2(1 + snr);
evaluating the middle branch at d_max forces the 1/2 factor, so the curve is
continuous there.

For p_a > 0 the non-adaptive curve is discontinuous at its lower breakpoint:
the middle branch tends to (1/2) log2(1 + p_a/(p_x+q+n0)) > 0 as the budget
approaches d_min from above, because action power keeps carrying message
bits even when all input power describes the state.  The adaptive curve is
continuous at both of its breakpoints, and both modes agree for budgets at
or beyond d_max.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

GAUSSIAN_MODES = ("nonadaptive", "adaptive")


@dataclass(frozen=True)
class GaussianParams:
    p_x: float
    p_a: float
    q: float
    n0: float

    def __post_init__(self):
        if self.p_x <= 0 or self.q <= 0 or self.n0 <= 0:
            raise ValueError("p_x, q and n0 must be strictly positive")
        if self.p_a < 0:
            raise ValueError("p_a must be >= 0")


@dataclass(frozen=True)
class GaussianBreakpoints:
    d_min_nonadaptive: float
    d_min_adaptive: float
    d_max: float


def coherent_power(params: GaussianParams) -> float:
    """p_x + q + n0 + p_a + 2 sqrt(p_a p_x): full action/input coherence."""
    return (params.p_x + params.q + params.n0 + params.p_a
            + 2.0 * math.sqrt(params.p_a * params.p_x))


def gaussian_breakpoints(params: GaussianParams) -> GaussianBreakpoints:
    qn = params.q * params.n0
    return GaussianBreakpoints(
        d_min_nonadaptive=qn / (params.p_x + params.q + params.n0),
        d_min_adaptive=qn / coherent_power(params),
        d_max=qn / (params.q + params.n0),
    )


def _log2_or_ln(x: float, nats: bool) -> float:
    return math.log(x) if nats else math.log2(x)


def saturation_rate(params: GaussianParams, nats: bool = False) -> float:
    """Unconstrained capacity (both modes) for budgets at or beyond d_max."""
    snr = (math.sqrt(params.p_x) + math.sqrt(params.p_a)) ** 2 \
        / (params.q + params.n0)
    return 0.5 * _log2_or_ln(1.0 + snr, nats)


def gaussian_capdist(params: GaussianParams, d_budget: float, mode: str,
                     nats: bool = False) -> float:
    """Capacity-distortion value at one budget for the requested mode."""
    if mode not in GAUSSIAN_MODES:
        raise ValueError(f"mode must be one of {GAUSSIAN_MODES}")
    if d_budget <= 0:
        raise ValueError("distortion budget must be strictly positive")
    bp = gaussian_breakpoints(params)
    if d_budget >= bp.d_max:
        return saturation_rate(params, nats)
    qn = params.q * params.n0
    if mode == "adaptive":
        if d_budget < bp.d_min_adaptive:
            return 0.0
        power = coherent_power(params)
    else:
        if d_budget < bp.d_min_nonadaptive:
            return 0.0
        radicand = params.p_x - (qn / d_budget - (params.q + params.n0))
        assert radicand >= -1e-12, "middle branch requires d >= d_min"
        power = (params.p_x + params.q + params.n0 + params.p_a
                 + 2.0 * math.sqrt(params.p_a * max(radicand, 0.0)))
    return 0.5 * _log2_or_ln(power / (qn / d_budget), nats)


def gaussian_curve(params: GaussianParams, budgets, mode: str,
                   nats: bool = False) -> list[float]:
    return [gaussian_capdist(params, d, mode, nats) for d in budgets]
