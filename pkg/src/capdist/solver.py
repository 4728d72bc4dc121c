"""Capacity-distortion maximization over factorized policy spaces.

Three solve modes share the objective I(U,A,X;Y) - I(U,X;S|A) and differ in
their feasible sets:

* ``nonadaptive``: message-only actions; requires the description
  feasibility gap I(U,X;Y|A) - I(U,X;S|A) >= 0.
* ``adaptive``: actions may react to past states; the gap constraint is
  dropped (only a nonnegative objective is required).  Because the feasible
  set grows and the objective is unchanged, adaptive values dominate
  non-adaptive ones pointwise and both saturate at the same unconstrained
  capacity.
* ``nocsi``: the description variable is degenerate (|U| = 1).

The search is a coarse quantized-simplex grid (enumerated exhaustively when
small, sampled on the same lattice otherwise) followed by alternating
per-slice ascent with the estimator re-derived every pass.  Distortion is
handled by rejection, not by a Lagrangian sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .channel import ChannelSpec
from .infotheory import Policy, assemble_joint, optimal_estimator
from .lattice import lattice_size, simplex_lattice
from .parallel import map_ordered

MODES = ("nonadaptive", "adaptive", "nocsi")


@dataclass(frozen=True)
class SolveOptions:
    mode: str = "nonadaptive"
    u_cardinality: int | None = None   # None: use the channel's alpha_u_max
    grid_resolution: int = 3
    refinement_iterations: int = 2
    restarts: int = 3
    seed: int = 0
    tolerance: float = 1e-3
    top_k: int = 6
    grid_budget: int = 200_000

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.u_cardinality is not None and self.u_cardinality < 1:
            raise ValueError("u_cardinality must be >= 1")
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    def effective_u(self, spec: ChannelSpec) -> int:
        if self.mode == "nocsi":
            return 1
        if self.u_cardinality is not None:
            return self.u_cardinality
        return spec.alpha_u_max


@dataclass(frozen=True)
class CurvePoint:
    distortion_budget: float
    rate: float | None
    mode: str
    feasibility_gap_at_opt: float | None = None
    policy: Policy | None = None

    @property
    def feasible(self) -> bool:
        return self.rate is not None


@dataclass(frozen=True)
class Curve:
    points: tuple[CurvePoint, ...]
    channel_fingerprint: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        budgets = [p.distortion_budget for p in self.points]
        if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
            raise ValueError("curve budgets must be strictly increasing")

    def rates(self) -> list[float | None]:
        return [p.rate for p in self.points]


# ---------------------------------------------------------------------------
# batched policy evaluation


def _xlog2x(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0
    out[mask] = v[mask] * np.log2(v[mask])
    return out


def _ent(p: np.ndarray) -> np.ndarray:
    return -_xlog2x(p).sum(axis=-1)


def _eval_batch(spec: ChannelSpec, pa: np.ndarray, px: np.ndarray,
                pu: np.ndarray):
    """Shared objective, feasibility gap and optimal-estimator distortion.

    pa is [T,A], px is [T,A,X], pu is [T,X,S,A,U]; returns three [T] arrays.
    """
    joint = np.einsum("ta,tax,as,txsau,xsay->taxsuy", pa, px,
                      spec.state_given_action, pu, spec.output_given_xsa,
                      optimize=True)
    t = joint.shape[0]
    m_axuy = joint.sum(axis=3)
    m_axsu = joint.sum(axis=5)
    h_a = _ent(pa)
    h_axu = _ent(m_axuy.sum(axis=4).reshape(t, -1))
    h_y = _ent(m_axuy.sum(axis=(1, 2, 3)))
    h_ay = _ent(m_axuy.sum(axis=(2, 3)).reshape(t, -1))
    h_axuy = _ent(m_axuy.reshape(t, -1))
    h_as = _ent(m_axsu.sum(axis=(2, 4)).reshape(t, -1))
    h_axsu = _ent(m_axsu.reshape(t, -1))
    i_uaxy = h_axu + h_y - h_axuy
    i_uxs_a = h_axu + h_as - h_axsu - h_a
    i_uxy_a = h_axu + h_ay - h_axuy - h_a
    obj = i_uaxy - i_uxs_a
    gap = i_uxy_a - i_uxs_a
    cost = np.einsum("taxsuy,sd->tuxayd", joint, spec.distortion,
                     optimize=True)
    dist = cost.min(axis=-1).sum(axis=(1, 2, 3, 4))
    return obj, gap, dist


def _eval_single(spec: ChannelSpec, pa, px, pu):
    obj, gap, dist = _eval_batch(spec, pa[None], px[None], pu[None])
    return float(obj[0]), float(gap[0]), float(dist[0])


# ---------------------------------------------------------------------------
# grid stage


class _GridTable:
    """Quantized-lattice candidates with their evaluated metrics."""

    def __init__(self, pa, px, pu, obj, gap, dist, exhaustive: bool):
        self.pa, self.px, self.pu = pa, px, pu
        self.obj, self.gap, self.dist = obj, gap, dist
        self.exhaustive = exhaustive

    def __len__(self):
        return self.pa.shape[0]


_GRID_CACHE: dict[tuple, _GridTable] = {}
_GRID_CACHE_LIMIT = 8


def _grid_table(spec: ChannelSpec, nu: int, opts: SolveOptions) -> _GridTable:
    key = (spec.fingerprint(), nu, opts.grid_resolution, opts.grid_budget,
           opts.seed)
    hit = _GRID_CACHE.get(key)
    if hit is not None:
        return hit
    na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
    lat_a = simplex_lattice(na, opts.grid_resolution)
    lat_x = simplex_lattice(nx, opts.grid_resolution)
    lat_u = simplex_lattice(nu, opts.grid_resolution)
    n_a, n_x, n_u = lat_a.shape[0], lat_x.shape[0], lat_u.shape[0]
    slots_u = nx * ns * na
    total = n_a * (n_x ** na) * (n_u ** slots_u)
    if total <= opts.grid_budget:
        idx = np.arange(total)
        rem = idx.copy()
        u_choice = np.empty((total, slots_u), dtype=np.int64)
        for k in range(slots_u - 1, -1, -1):
            u_choice[:, k] = rem % n_u
            rem //= n_u
        x_choice = np.empty((total, na), dtype=np.int64)
        for k in range(na - 1, -1, -1):
            x_choice[:, k] = rem % n_x
            rem //= n_x
        a_choice = rem
        exhaustive = True
    else:
        rng = np.random.default_rng(opts.seed)
        m = opts.grid_budget
        a_choice = rng.integers(0, n_a, size=m)
        x_choice = rng.integers(0, n_x, size=(m, na))
        u_choice = rng.integers(0, n_u, size=(m, slots_u))
        exhaustive = False
    pa = lat_a[a_choice]
    px = lat_x[x_choice]
    pu = lat_u[u_choice].reshape(-1, nx, ns, na, nu)
    objs, gaps, dists = [], [], []
    chunk = 16_384
    for start in range(0, pa.shape[0], chunk):
        o, g, d = _eval_batch(spec, pa[start:start + chunk],
                              px[start:start + chunk],
                              pu[start:start + chunk])
        objs.append(o)
        gaps.append(g)
        dists.append(d)
    table = _GridTable(pa, px, pu, np.concatenate(objs), np.concatenate(gaps),
                       np.concatenate(dists), exhaustive)
    if len(_GRID_CACHE) >= _GRID_CACHE_LIMIT:
        _GRID_CACHE.pop(next(iter(_GRID_CACHE)))
    _GRID_CACHE[key] = table
    return table


def _lex_key(pa, px, pu) -> tuple:
    return tuple(np.concatenate([pa.ravel(), px.ravel(), pu.ravel()]).tolist())


def _constraint_values(table: _GridTable, mode: str) -> np.ndarray:
    return table.gap if mode == "nonadaptive" else table.obj


def _select_starts(table: _GridTable, mode: str, d_budget: float | None,
                   tol: float, k: int, by_distortion: bool = False):
    """Deterministic top-k grid candidates (ties: smallest quantized policy)."""
    cons = _constraint_values(table, mode)
    mask = cons >= -tol
    if d_budget is not None and not by_distortion:
        mask = mask & (table.dist <= d_budget + tol)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return []
    score = table.dist[idx] if by_distortion else -table.obj[idx]
    take = min(idx.size, max(4 * k, 32))
    part = np.argpartition(score, take - 1)[:take]
    pool = idx[part]
    ranked = sorted(
        pool.tolist(),
        key=lambda i: (table.dist[i] if by_distortion else -table.obj[i],
                       _lex_key(table.pa[i], table.px[i], table.pu[i])))
    return ranked[:k]


# ---------------------------------------------------------------------------
# refinement


def _simplex_clip(v: np.ndarray) -> np.ndarray:
    v = np.clip(v, 0.0, None)
    s = v.sum()
    return v / s if s > 0 else np.full_like(v, 1.0 / v.size)


def _nudge_interior(arr: np.ndarray, eta: float = 1e-4) -> np.ndarray:
    flat = (1.0 - eta) * arr + eta / arr.shape[-1]
    return flat


def _fixed_estimator_distortion(spec: ChannelSpec, pa, px, pu,
                                est: np.ndarray) -> float:
    joint = np.einsum("a,ax,as,xsau,xsay->axsuy", pa, px,
                      spec.state_given_action, pu, spec.output_given_xsa,
                      optimize=True)
    d_sel = spec.distortion.T[est]                    # [u,x,a,y,s]
    w = np.transpose(joint, (3, 1, 0, 4, 2))          # [u,x,a,y,s]
    return float(np.sum(w * d_sel))


def _rows_to_simplex(flat: np.ndarray, rows: int, cols: int) -> np.ndarray:
    out = flat.reshape(rows, cols).copy()
    for r in range(rows):
        out[r] = _simplex_clip(out[r])
    return out


def _ascend(spec: ChannelSpec, pa, px, pu, mode: str,
            d_budget: float | None, opts: SolveOptions,
            minimize_distortion: bool = False):
    """Alternating ascent over the three policy factors.

    Each factor's full conditional tensor is optimized jointly (one simplex
    equality per row) while the others are held fixed; the estimator is
    re-derived before every block so the distortion constraint stays linear
    within a block.
    """
    pa = _simplex_clip(_nudge_interior(np.array(pa, dtype=float)))
    px = np.apply_along_axis(_simplex_clip, -1,
                             _nudge_interior(np.array(px, dtype=float)))
    pu = np.apply_along_axis(_simplex_clip, -1,
                             _nudge_interior(np.array(pu, dtype=float)))
    na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
    nu = pu.shape[-1]
    margin = 0.5 * opts.tolerance

    def exact(pa_, px_, pu_):
        return _eval_single(spec, pa_, px_, pu_)

    def score(metrics):
        obj, gap, dist = metrics
        return dist if minimize_distortion else -obj

    blocks: list[str] = []
    if na > 1:
        blocks.append("a")
    if nx > 1:
        blocks.append("x")
    if nu > 1:
        blocks.append("u")
    current = exact(pa, px, pu)
    for _ in range(opts.refinement_iterations):
        improved = False
        for kind in blocks:
            joint = assemble_joint(spec, Policy(
                p_a=pa, p_x_given_a=px, p_u_given_xsa=pu,
                estimator=np.zeros((nu, nx, na, spec.alpha_y), dtype=int)))
            est, _ = optimal_estimator(joint, spec.distortion)

            if kind == "a":
                v0, rows, cols = pa.copy(), 1, na
            elif kind == "x":
                v0, rows, cols = px.copy(), na, nx
            else:
                v0, rows, cols = pu.copy(), nx * ns * na, nu

            def rebuild(v):
                block = _rows_to_simplex(np.asarray(v, dtype=float), rows,
                                         cols)
                if kind == "a":
                    return block[0], px, pu
                if kind == "x":
                    return pa, block, pu
                return pa, px, block.reshape(nx, ns, na, nu)

            def neg_obj(v):
                pa_, px_, pu_ = rebuild(v)
                if minimize_distortion:
                    return _fixed_estimator_distortion(spec, pa_, px_, pu_,
                                                       est)
                obj, _, _ = _eval_single(spec, pa_, px_, pu_)
                return -obj

            def cons_mode(v):
                pa_, px_, pu_ = rebuild(v)
                obj, gap, _ = _eval_single(spec, pa_, px_, pu_)
                return (gap if mode == "nonadaptive" else obj) + margin

            def cons_dist(v):
                pa_, px_, pu_ = rebuild(v)
                return (d_budget + margin
                        - _fixed_estimator_distortion(spec, pa_, px_, pu_,
                                                      est))

            def cons_rowsums(v):
                return np.asarray(v, dtype=float).reshape(rows,
                                                          cols).sum(axis=1) - 1.0

            cons = [{"type": "eq", "fun": cons_rowsums},
                    {"type": "ineq", "fun": cons_mode}]
            if d_budget is not None and not minimize_distortion:
                cons.append({"type": "ineq", "fun": cons_dist})
            res = minimize(neg_obj, v0.ravel(), method="SLSQP",
                           bounds=[(0.0, 1.0)] * v0.size, constraints=cons,
                           options={"maxiter": 60, "ftol": 1e-12})
            if not np.all(np.isfinite(res.x)):
                continue
            pa_n, px_n, pu_n = rebuild(res.x)
            metrics = exact(pa_n, px_n, pu_n)
            obj_n, gap_n, dist_n = metrics
            cons_val = gap_n if mode == "nonadaptive" else obj_n
            ok = cons_val >= -opts.tolerance
            if d_budget is not None and not minimize_distortion:
                ok = ok and dist_n <= d_budget + opts.tolerance
            if ok and score(metrics) < score(current) - 1e-12:
                pa, px, pu = pa_n, px_n, pu_n
                current = metrics
                improved = True
        if not improved:
            break
    return pa, px, pu, current


# ---------------------------------------------------------------------------
# public operations


def _random_start(rng: np.random.Generator, spec: ChannelSpec, nu: int):
    na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
    return (rng.dirichlet(np.ones(na)),
            rng.dirichlet(np.ones(nx), size=na),
            rng.dirichlet(np.ones(nu), size=(nx, ns, na)))


def _canonical_starts(spec: ChannelSpec, nu: int):
    na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
    out = []
    pu_const = np.zeros((nx, ns, na, nu))
    pu_const[..., 0] = 1.0
    uniform = (np.full(na, 1.0 / na), np.full((na, nx), 1.0 / nx),
               np.full((nx, ns, na, nu), 1.0 / nu))
    out.append(uniform)
    out.append((np.full(na, 1.0 / na), np.full((na, nx), 1.0 / nx), pu_const))
    if nu >= ns:
        pu_copy = np.zeros((nx, ns, na, nu))
        for s in range(ns):
            pu_copy[:, s, :, s] = 1.0
        out.append((np.full(na, 1.0 / na), np.full((na, nx), 1.0 / nx),
                    pu_copy))
    return out


def _finalize(spec: ChannelSpec, pa, px, pu, mode: str, d_budget: float | None,
              opts: SolveOptions) -> tuple[CurvePoint, tuple] | None:
    policy_draft = Policy(p_a=pa, p_x_given_a=px, p_u_given_xsa=pu,
                          estimator=np.zeros((pu.shape[-1], spec.alpha_x,
                                              spec.alpha_a, spec.alpha_y),
                                             dtype=int))
    joint = assemble_joint(spec, policy_draft)
    est, dist = optimal_estimator(joint, spec.distortion)
    obj, gap, _ = _eval_single(spec, pa, px, pu)
    cons_val = gap if mode == "nonadaptive" else obj
    if cons_val < -opts.tolerance:
        return None
    if d_budget is not None and dist > d_budget + opts.tolerance:
        return None
    policy = Policy(p_a=pa, p_x_given_a=px, p_u_given_xsa=pu, estimator=est)
    point = CurvePoint(distortion_budget=d_budget if d_budget is not None
                       else float("inf"),
                       rate=max(0.0, obj), mode=mode,
                       feasibility_gap_at_opt=gap, policy=policy)
    return point, (obj, _lex_key(pa, px, pu))


def solve_point(spec: ChannelSpec, d_budget: float, opts: SolveOptions,
                warm_start: Policy | None = None) -> CurvePoint:
    """Best policy for one distortion budget; infeasible points carry rate None."""
    if d_budget < 0:
        raise ValueError("distortion budget must be >= 0")
    mode = opts.mode
    nu = opts.effective_u(spec)
    table = _grid_table(spec, nu, opts)
    start_idx = _select_starts(table, mode, d_budget, opts.tolerance,
                               opts.top_k)
    start_idx += [i for i in _select_starts(table, mode, d_budget,
                                            opts.tolerance, 2,
                                            by_distortion=True)
                  if i not in start_idx]
    starts = [(table.pa[i], table.px[i], table.pu[i]) for i in start_idx]
    if not starts:
        # budget below the lattice's reach: descend in distortion first
        starts = [(table.pa[i], table.px[i], table.pu[i])
                  for i in _select_starts(table, mode, None, opts.tolerance,
                                          max(2, opts.top_k // 2),
                                          by_distortion=True)]
    rng = np.random.default_rng(opts.seed + 1)
    starts.extend(_random_start(rng, spec, nu) for _ in range(opts.restarts))
    for cand in _canonical_starts(spec, nu):
        starts.append(cand)
    if warm_start is not None and warm_start.p_u_given_xsa.shape[-1] == nu:
        starts.append((warm_start.p_a, warm_start.p_x_given_a,
                       warm_start.p_u_given_xsa))

    def refine(start):
        pa, px, pu = start
        _, _, dist0 = _eval_single(spec, pa, px, pu)
        if dist0 > d_budget + opts.tolerance:
            # infeasible start: restore distortion feasibility first
            pa, px, pu, _ = _ascend(spec, pa, px, pu, mode, None, opts,
                                    minimize_distortion=True)
        pa, px, pu, _ = _ascend(spec, pa, px, pu, mode, d_budget, opts)
        return _finalize(spec, pa, px, pu, mode, d_budget, opts)

    results = [r for r in map_ordered(refine, starts) if r is not None]
    # grid candidates are already exact; include them unrefined as well
    for i in start_idx:
        r = _finalize(spec, table.pa[i], table.px[i], table.pu[i], mode,
                      d_budget, opts)
        if r is not None:
            results.append(r)
    if not results:
        return CurvePoint(distortion_budget=d_budget, rate=None, mode=mode)
    results.sort(key=lambda r: (-r[1][0], r[1][1]))
    return results[0][0]


def sweep_curve(spec: ChannelSpec, d_grid, opts: SolveOptions) -> Curve:
    """Solve along an ascending budget grid with warm starts and a monotone
    upper-envelope post-pass (rates never decrease in the budget)."""
    budgets = [float(d) for d in d_grid]
    if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ValueError("distortion grid must be strictly increasing")
    points: list[CurvePoint] = []
    warm: Policy | None = None
    for d in budgets:
        point = solve_point(spec, d, opts, warm_start=warm)
        if point.feasible:
            warm = point.policy
        points.append(point)
    # monotone envelope: feasibility and best rate carry forward in the budget
    best: CurvePoint | None = None
    out: list[CurvePoint] = []
    for point in points:
        if point.feasible and (best is None or point.rate >= best.rate):
            best = point
        elif best is not None:
            point = CurvePoint(distortion_budget=point.distortion_budget,
                               rate=best.rate, mode=point.mode,
                               feasibility_gap_at_opt=best.feasibility_gap_at_opt,
                               policy=best.policy)
        out.append(point)
    return Curve(points=tuple(out), channel_fingerprint=spec.fingerprint(),
                 options={"mode": opts.mode, "grid_resolution":
                          opts.grid_resolution, "seed": opts.seed,
                          "tolerance": opts.tolerance,
                          "u_cardinality": opts.u_cardinality,
                          "restarts": opts.restarts})


def min_distortion(spec: ChannelSpec, opts: SolveOptions) -> float:
    """Smallest expected distortion reachable under the mode's feasibility."""
    mode = opts.mode
    nu = opts.effective_u(spec)
    table = _grid_table(spec, nu, opts)
    idx = _select_starts(table, mode, None, opts.tolerance, opts.top_k,
                         by_distortion=True)
    best = np.inf
    starts = [(table.pa[i], table.px[i], table.pu[i]) for i in idx]
    rng = np.random.default_rng(opts.seed + 2)
    starts.extend(_random_start(rng, spec, nu) for _ in range(opts.restarts))
    for cand in _canonical_starts(spec, nu):
        starts.append(cand)

    def refine(start):
        pa, px, pu = start
        pa, px, pu, metrics = _ascend(spec, pa, px, pu, mode, None, opts,
                                      minimize_distortion=True)
        obj, gap, dist = metrics
        cons_val = gap if mode == "nonadaptive" else obj
        return dist if cons_val >= -opts.tolerance else np.inf

    for d in map_ordered(refine, starts):
        best = min(best, d)
    for i in idx:
        cons = table.gap[i] if mode == "nonadaptive" else table.obj[i]
        if cons >= -opts.tolerance:
            best = min(best, float(table.dist[i]))
    return float(best)


def unconstrained_capacity(spec: ChannelSpec, opts: SolveOptions) -> float:
    """max I(X,A;Y) over p(a)p(x|a) with a degenerate description variable."""
    opts_u1 = replace(opts, mode="nocsi")
    table = _grid_table(spec, 1, opts_u1)
    idx = _select_starts(table, "nocsi", None, opts.tolerance, opts.top_k)
    starts = [(table.pa[i], table.px[i], table.pu[i]) for i in idx]
    rng = np.random.default_rng(opts.seed + 3)
    starts.extend(_random_start(rng, spec, 1) for _ in range(opts.restarts))
    starts.extend(_canonical_starts(spec, 1)[:1])
    best = 0.0
    for pa, px, pu in starts:
        pa, px, pu, metrics = _ascend(spec, pa, px, pu, "nocsi", None,
                                      opts_u1)
        best = max(best, metrics[0])
    if idx:
        best = max(best, float(table.obj[np.asarray(idx)].max()))
    return float(best)
