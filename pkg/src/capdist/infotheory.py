"""Joint distributions, information quantities and optimal state estimators.

The five-way joint over (A, X, S, U, Y) induced by a channel and an encoding
policy factorizes as p(a) p(x|a) p(s|a) p(u|x,s,a) p(y|x,s,a).  All
information quantities are reported in bits with the convention 0*log 0 = 0,
guarded by explicit zero masks rather than epsilon smoothing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec, PROB_TOL, _clean_prob_array

VARIABLES = ("A", "X", "S", "U", "Y")
_AXIS = {name: i for i, name in enumerate(VARIABLES)}


class AlphabetMismatchError(ValueError):
    """Policy and channel alphabets disagree."""


@dataclass(frozen=True, eq=False)
class Policy:
    """Factorized encoding policy plus a deterministic state estimator.

    p_a is indexed [a], p_x_given_a is [a][x], p_u_given_xsa is [x][s][a][u]
    and estimator maps (u, x, a, y) to a reconstruction index via an integer
    array indexed [u][x][a][y].
    """

    p_a: np.ndarray
    p_x_given_a: np.ndarray
    p_u_given_xsa: np.ndarray
    estimator: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_a", _clean_prob_array(self.p_a))
        object.__setattr__(self, "p_x_given_a",
                           _clean_prob_array(self.p_x_given_a))
        object.__setattr__(self, "p_u_given_xsa",
                           _clean_prob_array(self.p_u_given_xsa))
        est = np.array(self.estimator, dtype=int)
        est.setflags(write=False)
        object.__setattr__(self, "estimator", est)

    @property
    def num_u(self) -> int:
        return self.p_u_given_xsa.shape[3]

    def to_dict(self) -> dict:
        return {
            "p_a": self.p_a.tolist(),
            "p_x_given_a": self.p_x_given_a.tolist(),
            "p_u_given_xsa": self.p_u_given_xsa.tolist(),
            "estimator": self.estimator.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Policy":
        return cls(
            p_a=data["p_a"], p_x_given_a=data["p_x_given_a"],
            p_u_given_xsa=data["p_u_given_xsa"], estimator=data["estimator"],
        )


def policy_from_dict(data: dict, spec: ChannelSpec) -> Policy:
    """Build a Policy from its JSON dict, deriving the estimator if absent."""
    if data.get("estimator") is not None:
        return Policy.from_dict(data)
    pu = np.asarray(data["p_u_given_xsa"], dtype=float)
    draft = Policy(
        p_a=data["p_a"], p_x_given_a=data["p_x_given_a"], p_u_given_xsa=pu,
        estimator=np.zeros((pu.shape[3], spec.alpha_x, spec.alpha_a,
                            spec.alpha_y), dtype=int))
    est, _ = optimal_estimator(assemble_joint(spec, draft), spec.distortion)
    return Policy(p_a=draft.p_a, p_x_given_a=draft.p_x_given_a,
                  p_u_given_xsa=pu, estimator=est)


def validate_policy(policy: Policy, spec: ChannelSpec | None = None) -> list[str]:
    out: list[str] = []
    for name, arr in (("p_a", policy.p_a), ("p_x_given_a", policy.p_x_given_a),
                      ("p_u_given_xsa", policy.p_u_given_xsa)):
        if np.any(arr < 0):
            out.append(f"{name}: negative entry")
        sums = arr.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > PROB_TOL):
            bad = np.argwhere(np.abs(sums - 1.0) > PROB_TOL)[0]
            out.append(f"{name}{[int(i) for i in bad]}: slice does not sum to 1")
    if spec is not None:
        na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
        if policy.p_a.shape != (na,):
            out.append("p_a: size does not match action alphabet")
        if policy.p_x_given_a.shape != (na, nx):
            out.append("p_x_given_a: shape does not match alphabets")
        if policy.p_u_given_xsa.shape[:3] != (nx, ns, na):
            out.append("p_u_given_xsa: shape does not match alphabets")
        if policy.p_u_given_xsa.shape[3] > spec.alpha_u_max:
            out.append("p_u_given_xsa: description alphabet exceeds alpha_u_max")
        nu = policy.p_u_given_xsa.shape[3]
        if policy.estimator.shape != (nu, nx, na, spec.alpha_y):
            out.append("estimator: shape does not match alphabets")
        elif np.any((policy.estimator < 0) |
                    (policy.estimator >= spec.alpha_shat)):
            out.append("estimator: reconstruction index out of range")
    return out


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability tensor over (A, X, S, U, Y)."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.p.shape

    def marginal(self, variables: str) -> np.ndarray:
        """Marginal over the named variables, axes in the order given."""
        keep = [_AXIS[v] for v in variables]
        other = tuple(i for i in range(5) if i not in keep)
        m = self.p.sum(axis=other)
        # sum() keeps remaining axes in original order; permute to request order
        order = sorted(keep)
        return np.transpose(m, [order.index(k) for k in keep])

    def validate(self) -> list[str]:
        out = []
        if np.any(self.p < 0):
            out.append("joint: negative entry")
        if abs(self.p.sum() - 1.0) > PROB_TOL:
            out.append(f"joint: total mass {self.p.sum()!r}")
        return out


def assemble_joint(spec: ChannelSpec, policy: Policy) -> JointDistribution:
    """Product-form joint p(a,x,s,u,y) for a channel and policy."""
    na, nx, ns = spec.alpha_a, spec.alpha_x, spec.alpha_s
    if (policy.p_a.shape != (na,) or policy.p_x_given_a.shape != (na, nx)
            or policy.p_u_given_xsa.shape[:3] != (nx, ns, na)):
        raise AlphabetMismatchError(
            f"policy shapes {policy.p_a.shape}, {policy.p_x_given_a.shape}, "
            f"{policy.p_u_given_xsa.shape} do not match channel alphabets "
            f"(|A|,|X|,|S|) = {(na, nx, ns)}")
    p = np.einsum("a,ax,as,xsau,xsay->axsuy",
                  policy.p_a, policy.p_x_given_a, spec.state_given_action,
                  policy.p_u_given_xsa, spec.output_given_xsa, optimize=True)
    return JointDistribution(p)


def _grouped(joint: JointDistribution, groups: tuple[str, ...]) -> np.ndarray:
    """Marginalize and reshape to one flattened axis per variable group."""
    names = "".join(groups)
    if len(set(names)) != len(names):
        raise ValueError(f"variable groups must be disjoint: {groups}")
    m = joint.marginal(names)
    dims = []
    pos = 0
    for g in groups:
        size = int(np.prod(m.shape[pos:pos + len(g)], dtype=int)) if g else 1
        dims.append(size)
        pos += len(g)
    return m.reshape(dims)


def _xlog2x_sum(p: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask])))


def entropy(joint: JointDistribution, variables: str) -> float:
    """Shannon entropy H(variables) in bits."""
    m = joint.marginal(variables).ravel()
    return max(0.0, -_xlog2x_sum(m))


def mutual_information(joint: JointDistribution, left: str, right: str) -> float:
    """I(left; right) in bits; left and right are disjoint variable sets."""
    return conditional_mutual_information(joint, left, right, "")


def conditional_mutual_information(joint: JointDistribution, left: str,
                                   right: str, cond: str) -> float:
    """I(left; right | cond) in bits over pairwise-disjoint variable sets."""
    m = _grouped(joint, (left, right, cond))
    p_c = m.sum(axis=(0, 1))
    p_lc = m.sum(axis=1)
    p_rc = m.sum(axis=0)
    mask = m > 0
    l_idx, r_idx, c_idx = np.nonzero(mask)
    v = m[mask]
    total = np.sum(v * (np.log2(v) + np.log2(p_c[c_idx])
                        - np.log2(p_lc[l_idx, c_idx])
                        - np.log2(p_rc[r_idx, c_idx])))
    return max(0.0, float(total))


def nonadaptive_objective(joint: JointDistribution) -> float:
    """I(U,A,X;Y) - I(U,X;S|A); may be negative for poor policies."""
    return (conditional_mutual_information(joint, "UAX", "Y", "")
            - conditional_mutual_information(joint, "UX", "S", "A"))


def adaptive_objective(joint: JointDistribution) -> float:
    """I(U,A,X;Y) - I(U,X,A;S); differs from the non-adaptive form by I(A;S)."""
    return (conditional_mutual_information(joint, "UAX", "Y", "")
            - conditional_mutual_information(joint, "UXA", "S", ""))


def feasibility_gap(joint: JointDistribution) -> float:
    """I(U,X;Y|A) - I(U,X;S|A); nonnegative for admissible policies."""
    return (conditional_mutual_information(joint, "UX", "Y", "A")
            - conditional_mutual_information(joint, "UX", "S", "A"))


def optimal_estimator(joint: JointDistribution,
                      distortion: np.ndarray) -> tuple[np.ndarray, float]:
    """Best deterministic reconstruction map of (u, x, a, y).

    For each cell the map minimizes sum_s p(s|u,x,a,y) d(s, shat), ties
    broken toward the lowest reconstruction index; cells with zero
    probability map to index 0.  Returns the map and its expected distortion.
    """
    distortion = np.asarray(distortion, dtype=float)
    # cost[u,x,a,y,t] = sum_s p(a,x,s,u,y) d(s,t); argmin is posterior-optimal
    cost = np.einsum("axsuy,st->uxayt", joint.p, distortion, optimize=True)
    est = np.argmin(cost, axis=-1)
    expected = float(np.min(cost, axis=-1).sum())
    return est, expected


def expected_distortion(joint: JointDistribution, estimator: np.ndarray,
                        distortion: np.ndarray) -> float:
    """Average distortion of a fixed deterministic estimator map."""
    distortion = np.asarray(distortion, dtype=float)
    estimator = np.asarray(estimator, dtype=int)
    nu, nx, na, ny = estimator.shape
    # d_sel[u,x,a,y,s] = d(s, estimator(u,x,a,y))
    d_sel = distortion.T[estimator]          # [u,x,a,y,s]
    weights = np.transpose(joint.p, (3, 1, 0, 4, 2))  # [u,x,a,y,s]
    return float(np.sum(weights * d_sel))
