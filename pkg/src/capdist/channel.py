"""Discrete memoryless channels with action-dependent states.

A channel is described by the state kernel p(s|a), the output kernel
p(y|x,s,a) and a distortion matrix d(s, shat).  All types are immutable
after construction and safe to share across workers.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

# Normalization tolerance for probability slices; values in [-NEG_CLAMP, 0)
# are treated as serialization rounding noise and clamped to zero.
PROB_TOL = 1e-9
NEG_CLAMP = 1e-12


class ResourceCapError(RuntimeError):
    """Raised when a requested computation exceeds a configured size cap."""


def _clean_prob_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr[(arr < 0) & (arr >= -NEG_CLAMP)] = 0.0
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Finite-alphabet channel with action-dependent state.

    alpha_* are alphabet sizes for actions A, inputs X, states S, the
    description variable U (an upper bound), reconstructions Shat and
    outputs Y.  state_given_action is indexed [a][s], output_given_xsa is
    indexed [x][s][a][y] and distortion is indexed [s][shat].
    """

    alpha_a: int
    alpha_x: int
    alpha_s: int
    alpha_u_max: int
    alpha_shat: int
    alpha_y: int
    state_given_action: np.ndarray
    output_given_xsa: np.ndarray
    distortion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state_given_action",
                           _clean_prob_array(self.state_given_action))
        object.__setattr__(self, "output_given_xsa",
                           _clean_prob_array(self.output_given_xsa))
        object.__setattr__(self, "distortion",
                           _clean_prob_array(self.distortion))

    def to_dict(self) -> dict:
        return {
            "alpha": {
                "a": self.alpha_a, "x": self.alpha_x, "s": self.alpha_s,
                "u_max": self.alpha_u_max, "shat": self.alpha_shat,
                "y": self.alpha_y,
            },
            "p_s_given_a": self.state_given_action.tolist(),
            "p_y_given_xsa": self.output_given_xsa.tolist(),
            "distortion": self.distortion.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSpec":
        alpha = data["alpha"]
        return cls(
            alpha_a=int(alpha["a"]), alpha_x=int(alpha["x"]),
            alpha_s=int(alpha["s"]), alpha_u_max=int(alpha["u_max"]),
            alpha_shat=int(alpha["shat"]), alpha_y=int(alpha["y"]),
            state_given_action=data["p_s_given_a"],
            output_given_xsa=data["p_y_given_xsa"],
            distortion=data["distortion"],
        )

    def fingerprint(self) -> str:
        """Stable hex digest of the canonical JSON serialization."""
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class MacSpec:
    """Two-encoder multiple access channel with a memoryless state.

    state_pmf is indexed [s], output_given_sx1x2 is indexed [s][x1][x2][y].
    """

    alpha_x1: int
    alpha_x2: int
    alpha_s: int
    alpha_shat: int
    alpha_y: int
    state_pmf: np.ndarray
    output_given_sx1x2: np.ndarray
    distortion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state_pmf", _clean_prob_array(self.state_pmf))
        object.__setattr__(self, "output_given_sx1x2",
                           _clean_prob_array(self.output_given_sx1x2))
        object.__setattr__(self, "distortion",
                           _clean_prob_array(self.distortion))

    def to_dict(self) -> dict:
        return {
            "alpha": {
                "x1": self.alpha_x1, "x2": self.alpha_x2, "s": self.alpha_s,
                "shat": self.alpha_shat, "y": self.alpha_y,
            },
            "p_s": self.state_pmf.tolist(),
            "p_y_given_sx1x2": self.output_given_sx1x2.tolist(),
            "distortion": self.distortion.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MacSpec":
        alpha = data["alpha"]
        return cls(
            alpha_x1=int(alpha["x1"]), alpha_x2=int(alpha["x2"]),
            alpha_s=int(alpha["s"]), alpha_shat=int(alpha["shat"]),
            alpha_y=int(alpha["y"]),
            state_pmf=data["p_s"],
            output_given_sx1x2=data["p_y_given_sx1x2"],
            distortion=data["distortion"],
        )


def load_channel(path) -> ChannelSpec:
    with open(path) as fh:
        return ChannelSpec.from_dict(json.load(fh))


def save_channel(spec: ChannelSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_mac(path) -> MacSpec:
    with open(path) as fh:
        return MacSpec.from_dict(json.load(fh))


def _check_rows(arr: np.ndarray, expected_shape, name: str, out: list) -> bool:
    """Shape and row-normalization checks; returns True when shape is usable."""
    if arr.shape != expected_shape:
        out.append(f"{name}: shape {arr.shape} does not match alphabets "
                   f"{expected_shape}")
        return False
    if np.any(arr < 0):
        idx = tuple(int(i) for i in np.argwhere(arr < 0)[0])
        out.append(f"{name}{list(idx)}: negative entry {arr[idx]!r}")
    sums = arr.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > PROB_TOL)
    for idx in bad:
        key = tuple(int(i) for i in idx)
        out.append(f"{name}{list(key)}: sums to {sums[key]!r} "
                   f"(expected 1 within {PROB_TOL})")
    return True


def validate_channel(spec: ChannelSpec) -> list[str]:
    """Return every invariant violation with index paths; empty means valid."""
    out: list[str] = []
    for fname in ("alpha_a", "alpha_x", "alpha_s", "alpha_shat", "alpha_y"):
        if getattr(spec, fname) < 1:
            out.append(f"{fname}: must be a positive integer")
    if spec.alpha_u_max < 1:
        out.append("alpha_u_max: must be >= 1")
    _check_rows(spec.state_given_action, (spec.alpha_a, spec.alpha_s),
                "p_s_given_a", out)
    _check_rows(spec.output_given_xsa,
                (spec.alpha_x, spec.alpha_s, spec.alpha_a, spec.alpha_y),
                "p_y_given_xsa", out)
    d = spec.distortion
    if d.shape != (spec.alpha_s, spec.alpha_shat):
        out.append(f"distortion: shape {d.shape} does not match alphabets "
                   f"{(spec.alpha_s, spec.alpha_shat)}")
        return out
    if np.any(d < 0):
        idx = tuple(int(i) for i in np.argwhere(d < 0)[0])
        out.append(f"distortion{list(idx)}: negative value {d[idx]!r}")
    if not np.all(np.isfinite(d)):
        out.append("distortion: non-finite values are not supported")
    else:
        for s in range(spec.alpha_s):
            if d[s].min() > NEG_CLAMP:
                out.append(f"distortion[{s}]: no reconstruction achieves zero "
                           f"distortion (row minimum {d[s].min()!r})")
    return out


def validate_mac(mac: MacSpec) -> list[str]:
    out: list[str] = []
    for fname in ("alpha_x1", "alpha_x2", "alpha_s", "alpha_shat", "alpha_y"):
        if getattr(mac, fname) < 1:
            out.append(f"{fname}: must be a positive integer")
    if mac.state_pmf.shape != (mac.alpha_s,):
        out.append(f"p_s: shape {mac.state_pmf.shape} does not match alphabet")
    else:
        if np.any(mac.state_pmf < 0):
            out.append("p_s: negative entry")
        if abs(mac.state_pmf.sum() - 1.0) > PROB_TOL:
            out.append(f"p_s: sums to {mac.state_pmf.sum()!r}")
    _check_rows(mac.output_given_sx1x2,
                (mac.alpha_s, mac.alpha_x1, mac.alpha_x2, mac.alpha_y),
                "p_y_given_sx1x2", out)
    d = mac.distortion
    if d.shape != (mac.alpha_s, mac.alpha_shat):
        out.append("distortion: shape does not match alphabets")
    else:
        if np.any(d < 0):
            out.append("distortion: negative value")
        for s in range(mac.alpha_s):
            if d[s].min() > NEG_CLAMP:
                out.append(f"distortion[{s}]: no zero-distortion reconstruction")
    return out


def augment_state(spec: ChannelSpec) -> ChannelSpec:
    """Fold the action into the state: S' = (S, A).

    The new state alphabet has size |S|*|A| with s' = s*|A| + a.  The output
    kernel of the result reads the action component out of s' and ignores the
    action argument, and the distortion ignores the action component.
    """
    na, nx, ns, ny = spec.alpha_a, spec.alpha_x, spec.alpha_s, spec.alpha_y
    ns2 = ns * na
    p_s2 = np.zeros((na, ns2))
    for a in range(na):
        for s in range(ns):
            p_s2[a, s * na + a] = spec.state_given_action[a, s]
    w2 = np.zeros((nx, ns2, na, ny))
    for s in range(ns):
        for a_comp in range(na):
            s2 = s * na + a_comp
            w2[:, s2, :, :] = spec.output_given_xsa[:, s, a_comp, :][:, None, :]
    d2 = np.zeros((ns2, spec.alpha_shat))
    for s in range(ns):
        for a_comp in range(na):
            d2[s * na + a_comp] = spec.distortion[s]
    return ChannelSpec(
        alpha_a=na, alpha_x=nx, alpha_s=ns2, alpha_u_max=spec.alpha_u_max,
        alpha_shat=spec.alpha_shat, alpha_y=ny,
        state_given_action=p_s2, output_given_xsa=w2, distortion=d2,
    )


def reveal_actions_to_decoder(spec: ChannelSpec) -> ChannelSpec:
    """Expose the action sequence at the decoder: Y' = (Y, A).

    The new output alphabet has size |Y|*|A| with y' = y*|A| + a; all mass
    sits on the component matching the true action.
    """
    na, nx, ns, ny = spec.alpha_a, spec.alpha_x, spec.alpha_s, spec.alpha_y
    ny2 = ny * na
    w2 = np.zeros((nx, ns, na, ny2))
    for a in range(na):
        w2[:, :, a, a::na] = spec.output_given_xsa[:, :, a, :]
    return ChannelSpec(
        alpha_a=na, alpha_x=nx, alpha_s=ns, alpha_u_max=spec.alpha_u_max,
        alpha_shat=spec.alpha_shat, alpha_y=ny2,
        state_given_action=spec.state_given_action,
        output_given_xsa=w2, distortion=spec.distortion,
    )


def mac_adapter(mac: MacSpec, alpha_u_max: int | None = None) -> ChannelSpec:
    """View a state-dependent MAC as an action channel via A=X2, X=X1.

    The state is action-independent (p(s|a) = p(s) for every a) and the
    output kernel forwards to p(y|s,x1,x2).
    """
    na, nx, ns, ny = mac.alpha_x2, mac.alpha_x1, mac.alpha_s, mac.alpha_y
    if alpha_u_max is None:
        alpha_u_max = nx * ns * na + 2
    p_sa = np.tile(mac.state_pmf, (na, 1))
    w = np.zeros((nx, ns, na, ny))
    for x1 in range(nx):
        for s in range(ns):
            for x2 in range(na):
                w[x1, s, x2, :] = mac.output_given_sx1x2[s, x1, x2, :]
    return ChannelSpec(
        alpha_a=na, alpha_x=nx, alpha_s=ns, alpha_u_max=alpha_u_max,
        alpha_shat=mac.alpha_shat, alpha_y=ny,
        state_given_action=p_sa, output_given_xsa=w, distortion=mac.distortion,
    )
