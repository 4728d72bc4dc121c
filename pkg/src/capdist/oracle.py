"""Brute-force reference maximization over quantized policy lattices.

Policies are quantized per probability slice: every pmf coordinate is a
multiple of 1/(resolution-1).  Two equivalent evaluation strategies cover
the same lattice exactly:

* ``naive``: enumerate the full product of all slices and evaluate each
  policy directly.  Transparent, but only feasible for tiny lattices.
* ``decomposed``: for fixed p(a), p(x|a) the objective splits as
  I(X,A;Y) + sum_{x,a} w(x,a) * [I(U;Y|x,a) - I(U;S|x,a)] and both the
  expected distortion and the description terms are local to each (x,a)
  group.  Enumerate each group's lattice once, keep its Pareto frontier
  over (distortion, information delta), and combine frontiers under the
  weights w(x,a) with an exact budget-constrained merge.

The distortion at every lattice point uses the per-cell optimal estimator,
which is the global optimum among deterministic maps of (u, x, a, y).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec, ResourceCapError
from .lattice import lattice_size, simplex_lattice


@dataclass(frozen=True)
class OracleOptions:
    resolution: int = 9
    u_cardinality: int = 2
    exhaustive_estimators: bool = False
    feasibility_slack: float = 1e-9
    naive_cap: int = 200_000
    max_outer_points: int = 2_000_000
    max_group_points: int = 80_000_000
    max_frontier_merge: int = 8_000_000
    chunk: int = 65_536

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if self.u_cardinality < 1:
            raise ValueError("u_cardinality must be >= 1")


def lattice_counts(spec: ChannelSpec, opts: OracleOptions) -> dict:
    """Lattice cardinalities for a channel at the configured resolution."""
    na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
    nu = opts.u_cardinality
    n_a = lattice_size(na, opts.resolution)
    n_x = lattice_size(nx, opts.resolution)
    n_u = lattice_size(nu, opts.resolution)
    outer = n_a * n_x ** na
    group = n_u ** ns
    return {
        "outer_points": outer,
        "group_points": group,
        "num_groups": nx * na,
        "total_policies": outer * group ** (nx * na),
        "evaluated_points": outer + nx * na * group,
    }


def _xlog2x(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0
    out[mask] = v[mask] * np.log2(v[mask])
    return out


def _batched_entropy(p: np.ndarray) -> np.ndarray:
    """Entropy along the last axis for a batch of distributions."""
    return -_xlog2x(p).sum(axis=-1)


def _pareto(d: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Non-dominated (min d, max v) subset, both outputs strictly increasing."""
    order = np.lexsort((-v, d))
    d, v = d[order], v[order]
    prev_best = np.concatenate(([-np.inf], np.maximum.accumulate(v)[:-1]))
    keep = v > prev_best
    return d[keep], v[keep]


def _group_frontier(p_s: np.ndarray, w_sy: np.ndarray, dist: np.ndarray,
                    nu: int, resolution: int, chunk: int
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Pareto frontier of (distortion, I(U;Y)-I(U;S)) for one (x,a) group.

    A group point is the tuple of description pmfs (p(u|s))_s on the
    quantized lattice; distortion uses the per-cell optimal reconstruction.
    """
    ns = p_s.shape[0]
    lat = simplex_lattice(nu, resolution)
    n_u = lat.shape[0]
    total = n_u ** ns
    front_d = np.empty(0)
    front_v = np.empty(0)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        # mixed-radix decode: one lattice choice per state symbol
        q = np.empty((idx.size, ns, nu))
        rem = idx.copy()
        for s in range(ns - 1, -1, -1):
            q[:, s, :] = lat[rem % n_u]
            rem //= n_u
        su = p_s[None, :, None] * q                      # [c, s, u]
        pu = su.sum(axis=1)                              # [c, u]
        h_s = _batched_entropy(p_s[None, :])[0]
        i_us = h_s + _batched_entropy(pu) - _batched_entropy(
            su.reshape(idx.size, -1))
        puy = np.einsum("csu,sy->cuy", su, w_sy)         # [c, u, y]
        py = puy.sum(axis=1)
        i_uy = (_batched_entropy(pu) + _batched_entropy(py)
                - _batched_entropy(puy.reshape(idx.size, -1)))
        cost = np.einsum("csu,sy,st->cuyt", su, w_sy, dist)
        d_g = cost.min(axis=-1).sum(axis=(1, 2))
        delta = i_uy - i_us
        cd, cv = _pareto(np.concatenate([front_d, d_g]),
                         np.concatenate([front_v, delta]))
        front_d, front_v = cd, cv
    return front_d, front_v


def _merge_frontiers(frontiers, weights, merge_cap: int
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Exact frontier of weighted sums, one point chosen per group."""
    acc_d = np.zeros(1)
    acc_v = np.zeros(1)
    for (g_d, g_v), w in zip(frontiers, weights):
        if w <= 0.0:
            continue
        if acc_d.size * g_d.size > merge_cap:
            raise ResourceCapError(
                f"frontier merge size {acc_d.size * g_d.size} exceeds cap "
                f"{merge_cap}; reduce resolution or u_cardinality")
        new_d = (acc_d[:, None] + w * g_d[None, :]).ravel()
        new_v = (acc_v[:, None] + w * g_v[None, :]).ravel()
        acc_d, acc_v = _pareto(new_d, new_v)
    return acc_d, acc_v


def _entropy_terms_outer(spec: ChannelSpec, pa: np.ndarray, px: np.ndarray):
    """I(X,A;Y), I(X;Y|A), I(A;S) for a batch of outer factor choices."""
    t = pa.shape[0]
    p_axsy = np.einsum("ta,tax,as,xsay->taxsy", pa, px,
                       spec.state_given_action, spec.output_given_xsa,
                       optimize=True)
    p_axy = p_axsy.sum(axis=3)
    h_a = _batched_entropy(pa)
    h_ax = _batched_entropy(p_axy.sum(axis=3).reshape(t, -1))
    h_y = _batched_entropy(p_axy.sum(axis=(1, 2)))
    h_axy = _batched_entropy(p_axy.reshape(t, -1))
    h_ay = _batched_entropy(p_axy.sum(axis=2).reshape(t, -1))
    i_xay = h_ax + h_y - h_axy
    i_xy_a = h_ax + h_ay - h_axy - h_a
    p_as = np.einsum("ta,as->tas", pa, spec.state_given_action)
    i_as = (h_a + _batched_entropy(p_as.sum(axis=1))
            - _batched_entropy(p_as.reshape(t, -1)))
    return i_xay, i_xy_a, i_as


def _outer_lattice(spec: ChannelSpec, opts: OracleOptions
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    na, nx = spec.alpha_a, spec.alpha_x
    lat_a = simplex_lattice(na, opts.resolution)
    lat_x = simplex_lattice(nx, opts.resolution)
    n_x = lat_x.shape[0]
    combos = n_x ** na
    outer = lat_a.shape[0] * combos
    if outer > opts.max_outer_points:
        raise ResourceCapError(
            f"outer lattice has {outer} points (p(a) x p(x|a)), cap is "
            f"{opts.max_outer_points}")
    idx = np.arange(combos)
    px_combo = np.empty((combos, na, nx))
    rows = np.empty((combos, na), dtype=np.int64)
    rem = idx.copy()
    for a in range(na - 1, -1, -1):
        rows[:, a] = rem % n_x
        px_combo[:, a, :] = lat_x[rows[:, a]]
        rem //= n_x
    pa = np.repeat(lat_a, combos, axis=0)
    px = np.tile(px_combo, (lat_a.shape[0], 1, 1))
    x_rows = np.tile(rows, (lat_a.shape[0], 1))
    return pa, px, x_rows


def _mode_threshold(mode: str, i_xay, i_xy_a):
    """Per-outer-point lower bound that the description delta must reach."""
    if mode == "nonadaptive":
        return -i_xy_a
    # adaptive and nocsi: nonnegative objective
    return -i_xay


def brute_force_point(spec: ChannelSpec, d_budget: float, mode: str,
                      opts: OracleOptions) -> float | None:
    """Exact maximum rate on the quantized policy lattice, or None.

    None indicates no lattice policy meets the distortion budget together
    with the mode's feasibility constraint.
    """
    if mode not in ("nonadaptive", "adaptive", "nocsi"):
        raise ValueError(f"unknown mode {mode!r}")
    nu = 1 if mode == "nocsi" else opts.u_cardinality
    counts = lattice_counts(spec, OracleOptions(
        resolution=opts.resolution, u_cardinality=nu))
    if counts["total_policies"] <= opts.naive_cap and not opts.exhaustive_estimators:
        return _naive_point(spec, d_budget, mode, nu, opts)
    if opts.exhaustive_estimators:
        if counts["total_policies"] > opts.naive_cap:
            raise ResourceCapError(
                f"exhaustive estimator search requires the naive strategy; "
                f"lattice has {counts['total_policies']} policies, cap "
                f"{opts.naive_cap}")
        return _naive_point(spec, d_budget, mode, nu, opts,
                            exhaustive_estimators=True)
    return _decomposed_best(spec, [d_budget], mode, nu, opts)[0]


def brute_force_curve(spec: ChannelSpec, d_budgets, mode: str,
                      opts: OracleOptions) -> list[float | None]:
    """brute_force_point for several budgets, sharing all lattice work."""
    nu = 1 if mode == "nocsi" else opts.u_cardinality
    return _decomposed_best(spec, list(d_budgets), mode, nu, opts)


def brute_force_min_distortion(spec: ChannelSpec, mode: str,
                               opts: OracleOptions) -> float:
    """Minimum lattice-achievable distortion under the mode's rate feasibility."""
    nu = 1 if mode == "nocsi" else opts.u_cardinality
    setup = _decomposed_setup(spec, nu, opts)
    slack = opts.feasibility_slack
    thresh = _mode_threshold(mode, setup.i_xay, setup.i_xy_a)
    best = np.inf
    for t in range(setup.pa.shape[0]):
        fronts = _scaled_fronts(setup, t)
        d = _query_min_distortion(fronts, thresh[t] - slack,
                                  opts.max_frontier_merge)
        if d is not None:
            best = min(best, d)
    return float(best)


@dataclass
class _DecomposedSetup:
    pa: np.ndarray             # [t, A]
    px: np.ndarray             # [t, A, X]
    a_frontiers: list          # [a][x_row] -> (d, v), weighted by p(x|a)
    x_rows: np.ndarray         # [t, A] row index into the p(x|a) lattice
    i_xay: np.ndarray
    i_xy_a: np.ndarray


def _decomposed_setup(spec: ChannelSpec, nu: int,
                      opts: OracleOptions) -> _DecomposedSetup:
    na, nx = spec.alpha_a, spec.alpha_x
    group_pts = lattice_size(nu, opts.resolution) ** spec.alpha_s
    if group_pts * nx * na > opts.max_group_points:
        raise ResourceCapError(
            f"description lattice needs {group_pts} points per (x,a) group "
            f"({group_pts * nx * na} total), cap is {opts.max_group_points}")
    pa, px, x_rows = _outer_lattice(spec, opts)
    lat_x = simplex_lattice(nx, opts.resolution)
    a_frontiers = []
    for a in range(na):
        groups = [_group_frontier(
            spec.state_given_action[a], spec.output_given_xsa[x, :, a, :],
            spec.distortion, nu, opts.resolution, opts.chunk)
            for x in range(nx)]
        per_row = [_merge_frontiers(groups, lat_x[r], opts.max_frontier_merge)
                   for r in range(lat_x.shape[0])]
        a_frontiers.append(per_row)
    i_xay, i_xy_a, _ = _entropy_terms_outer(spec, pa, px)
    return _DecomposedSetup(pa=pa, px=px, a_frontiers=a_frontiers,
                            x_rows=x_rows, i_xay=i_xay, i_xy_a=i_xy_a)


def _scaled_fronts(setup: _DecomposedSetup, t: int):
    """Positive-weight action frontiers for outer point t, scaled by p(a)."""
    fronts = []
    for a in range(setup.pa.shape[1]):
        w = setup.pa[t, a]
        if w <= 0.0:
            continue
        f_d, f_v = setup.a_frontiers[a][setup.x_rows[t, a]]
        fronts.append((w * f_d, w * f_v))
    return fronts


def _query_max_delta(fronts, budget: float, merge_cap: int) -> float | None:
    """Exact max of summed deltas subject to the summed-distortion budget,
    choosing one frontier point per action."""
    if len(fronts) == 1:
        f_d, f_v = fronts[0]
        k = int(np.searchsorted(f_d, budget, side="right")) - 1
        return None if k < 0 else float(f_v[k])
    head = fronts[0]
    for extra in fronts[1:-1]:
        head = _merge_frontiers([head, extra], [1.0, 1.0], merge_cap)
    d0, v0 = head
    d1, v1 = fronts[-1]
    j = np.searchsorted(d1, budget - d0, side="right") - 1
    valid = j >= 0
    if not np.any(valid):
        return None
    return float(np.max(v0[valid] + v1[j[valid]]))


def _query_min_distortion(fronts, delta_floor: float,
                          merge_cap: int) -> float | None:
    """Exact min of summed distortions subject to a summed-delta floor."""
    if len(fronts) == 1:
        f_d, f_v = fronts[0]
        k = int(np.searchsorted(f_v, delta_floor, side="left"))
        return None if k >= f_d.size else float(f_d[k])
    head = fronts[0]
    for extra in fronts[1:-1]:
        head = _merge_frontiers([head, extra], [1.0, 1.0], merge_cap)
    d0, v0 = head
    d1, v1 = fronts[-1]
    j = np.searchsorted(v1, delta_floor - v0, side="left")
    valid = j < d1.size
    if not np.any(valid):
        return None
    return float(np.min(d0[valid] + d1[j[valid]]))


def _decomposed_best(spec: ChannelSpec, d_budgets: list[float], mode: str,
                     nu: int, opts: OracleOptions) -> list[float | None]:
    setup = _decomposed_setup(spec, nu, opts)
    slack = opts.feasibility_slack
    thresh = _mode_threshold(mode, setup.i_xay, setup.i_xy_a)
    na = spec.alpha_a
    n_rows = len(setup.a_frontiers[0])
    max_v = np.array([[setup.a_frontiers[a][r][1][-1] for r in range(n_rows)]
                      for a in range(na)])
    min_d = np.array([[setup.a_frontiers[a][r][0][0] for r in range(n_rows)]
                      for a in range(na)])
    gathered_max = np.take_along_axis(max_v, setup.x_rows.T, axis=1).T
    gathered_min = np.take_along_axis(min_d, setup.x_rows.T, axis=1).T
    upper = setup.i_xay + (setup.pa * np.maximum(gathered_max, 0.0)).sum(axis=1)
    floor_d = (setup.pa * gathered_min).sum(axis=1)
    best = [-np.inf] * len(d_budgets)
    order = np.argsort(-upper)
    for t in order:
        if all(upper[t] <= best[j] for j in range(len(d_budgets))):
            break
        active = [j for j in range(len(d_budgets))
                  if upper[t] > best[j] and floor_d[t] <= d_budgets[j] + slack]
        if not active:
            continue
        fronts = _scaled_fronts(setup, t)
        for j in active:
            delta = _query_max_delta(fronts, d_budgets[j] + slack,
                                     opts.max_frontier_merge)
            if delta is None or delta < thresh[t] - slack:
                continue
            value = setup.i_xay[t] + delta
            if value > best[j]:
                best[j] = value
    return [None if not np.isfinite(v) else float(v) for v in best]


def _naive_point(spec: ChannelSpec, d_budget: float, mode: str, nu: int,
                 opts: OracleOptions, exhaustive_estimators: bool = False
                 ) -> float | None:
    """Direct enumeration of the full product lattice."""
    na, nx, ns, ny = spec.alpha_a, spec.alpha_x, spec.alpha_s, spec.alpha_y
    lat_a = simplex_lattice(na, opts.resolution)
    lat_x = simplex_lattice(nx, opts.resolution)
    lat_u = simplex_lattice(nu, opts.resolution)
    n_a, n_x, n_u = lat_a.shape[0], lat_x.shape[0], lat_u.shape[0]
    slots_x = na
    slots_u = nx * ns * na
    total = n_a * n_x ** slots_x * n_u ** slots_u
    slack = opts.feasibility_slack
    best = -np.inf
    for start in range(0, total, opts.chunk):
        idx = np.arange(start, min(start + opts.chunk, total))
        rem = idx.copy()
        pu = np.empty((idx.size, slots_u, nu))
        for k in range(slots_u - 1, -1, -1):
            pu[:, k, :] = lat_u[rem % n_u]
            rem //= n_u
        px = np.empty((idx.size, slots_x, nx))
        for k in range(slots_x - 1, -1, -1):
            px[:, k, :] = lat_x[rem % n_x]
            rem //= n_x
        pa = lat_a[rem]
        pu = pu.reshape(idx.size, nx, ns, na, nu)
        joint = np.einsum("ta,tax,as,txsau,xsay->taxsuy", pa, px,
                          spec.state_given_action, pu,
                          spec.output_given_xsa, optimize=True)
        m_axuy = joint.sum(axis=3)
        t = idx.size
        h_a = _batched_entropy(pa)
        h_axu = _batched_entropy(m_axuy.sum(axis=4).reshape(t, -1))
        h_y = _batched_entropy(m_axuy.sum(axis=(1, 2, 3)))
        h_axuy = _batched_entropy(m_axuy.reshape(t, -1))
        h_ay = _batched_entropy(m_axuy.sum(axis=(2, 3)).reshape(t, -1))
        m_axsu = joint.sum(axis=5)
        h_as = _batched_entropy(m_axsu.sum(axis=(2, 4)).reshape(t, -1))
        h_axsu = _batched_entropy(m_axsu.reshape(t, -1))
        i_uaxy = h_axu + h_y - h_axuy
        i_uxs_a = h_axu + h_as - h_axsu - h_a
        i_uxy_a = h_axu + h_ay - h_axuy - h_a
        obj = i_uaxy - i_uxs_a
        gap = i_uxy_a - i_uxs_a
        if exhaustive_estimators:
            dist = np.array([_exhaustive_distortion(joint[i], spec.distortion)
                             for i in range(t)])
        else:
            cost = np.einsum("taxsuy,sd->tuxayd", joint, spec.distortion,
                             optimize=True)
            dist = cost.min(axis=-1).sum(axis=(1, 2, 3, 4))
        feas = dist <= d_budget + slack
        if mode == "nonadaptive":
            feas &= gap >= -slack
        else:
            feas &= obj >= -slack
        if np.any(feas):
            best = max(best, float(obj[feas].max()))
    return None if not np.isfinite(best) else best


def _exhaustive_distortion(joint_p: np.ndarray, distortion: np.ndarray) -> float:
    cost = np.einsum("axsuy,sd->uxayd", joint_p, distortion)
    return float(cost.min(axis=-1).sum())


def exhaustive_estimator_search(joint, distortion: np.ndarray,
                                cap: int = 10_000_000
                                ) -> tuple[np.ndarray, float]:
    """True minimum over every deterministic map (u,x,a,y) -> shat.

    Enumerates all |Shat|^(|U||X||A||Y|) maps; refuses beyond `cap`.
    """
    distortion = np.asarray(distortion, dtype=float)
    p = joint.p
    nshat = distortion.shape[1]
    cost = np.einsum("axsuy,sd->uxayd", p, distortion)
    cells_shape = cost.shape[:-1]
    n_cells = int(np.prod(cells_shape))
    n_maps = nshat ** n_cells
    if n_maps > cap:
        raise ResourceCapError(
            f"{n_maps} estimator maps exceed cap {cap}")
    flat_cost = cost.reshape(n_cells, nshat)
    best_val = np.inf
    best_idx = 0
    powers = nshat ** np.arange(n_cells)
    cell_ids = np.arange(n_cells)
    chunk = 262_144
    for start in range(0, n_maps, chunk):
        idx = np.arange(start, min(start + chunk, n_maps))
        digits = (idx[:, None] // powers[None, :]) % nshat
        vals = flat_cost[cell_ids[None, :], digits].sum(axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_idx = int(idx[k])
    digits = (best_idx // powers) % nshat
    return digits.reshape(cells_shape), best_val
