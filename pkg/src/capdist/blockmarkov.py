"""Monte Carlo simulation of the block-Markov achievability scheme.

Transmission uses b blocks of n symbols.  In each block the encoder sends a
fresh message through the action codeword and a channel codeword indexed by
(message, bin index of the previous block's state description).  At the end
of a block it covers the observed state sequence with a description codeword
drawn conditionally on the transmitted pair, and forwards the description's
bin index in the next block.  The decoder recovers (message, bin) from each
block, then resolves the previous block's description index inside the
decoded bin and reconstructs that block's states through the policy's
estimator map.

Typicality is the robust (multiplicative-slack) letter-frequency test: a
tuple sequence is eps-typical iff every symbol-tuple frequency deviates from
the target joint by at most eps times its mass, with zero-mass tuples
forbidden.  The encoder uses epsilon_enc, the decoder the larger
epsilon_dec.

Code sizes are powers of two with ceil'd exponents: 2^ceil(n R) messages,
2^ceil(n R_desc) descriptions and 2^ceil(n R_bin) bins, the bin count capped
at the description count so the equal-size bin partition stays exact.  The
last block's description is never delivered, so empirical distortion
averages blocks 1..b-1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSpec, ResourceCapError
from .infotheory import (JointDistribution, Policy, assemble_joint,
                         conditional_mutual_information, mutual_information)

_STREAM_ACTIONS = 11
_STREAM_INPUTS = 12
_STREAM_DESC = 13
_STREAM_MESSAGES = 21
_STREAM_STATES = 22
_STREAM_CHANNEL = 23
_STREAM_COVER = 24


@dataclass(frozen=True)
class SimConfig:
    n: int
    b: int
    rate_r: float
    delta: float = 0.01
    epsilon_enc: float = 0.15
    epsilon_dec: float = 0.25
    seed: int = 0
    max_codebook_entries: int = 1 << 26

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.b < 2:
            raise ValueError("b must be >= 2")
        if self.rate_r < 0:
            raise ValueError("rate_r must be >= 0")
        if not (self.epsilon_dec > self.epsilon_enc > 0):
            raise ValueError("need epsilon_dec > epsilon_enc > 0")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class CodeRates:
    """Description rate, bin rate and the residual message-rate budget."""
    r_desc: float
    r_bin: float
    r_max: float


def derive_code_rates(spec: ChannelSpec, policy: Policy,
                      delta: float) -> CodeRates:
    """Operating rates for a policy: covering, binning and message budget.

    r_desc = I(U;S|X,A) + delta
    r_bin  = max(r_desc - I(U;Y|X,A), 0) + delta
    r_max  = I(X,A;Y) - r_bin - delta

    A negative r_max signals that the policy supports no positive message
    rate at this margin.
    """
    joint = assemble_joint(spec, policy)
    i_us = conditional_mutual_information(joint, "U", "S", "XA")
    i_uy = conditional_mutual_information(joint, "U", "Y", "XA")
    i_xay = mutual_information(joint, "XA", "Y")
    r_desc = i_us + delta
    r_bin = max(r_desc - i_uy, 0.0) + delta
    return CodeRates(r_desc=r_desc, r_bin=r_bin, r_max=i_xay - r_bin - delta)


def _ceil_bits(n: int, rate: float) -> int:
    if rate <= 0:
        return 0
    return int(np.ceil(n * rate - 1e-12))


def _sample_iid(rng: np.random.Generator, pmf: np.ndarray,
                size) -> np.ndarray:
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def _sample_rows(rng: np.random.Generator, pmf_rows: np.ndarray,
                 row_idx: np.ndarray) -> np.ndarray:
    """One draw per position i from pmf_rows[row_idx[i]]."""
    cdf = np.cumsum(pmf_rows, axis=-1)
    cdf[..., -1] = 1.0
    u = rng.random(row_idx.shape[0])
    return (u[:, None] > cdf[row_idx]).sum(axis=1).astype(np.int64)


@dataclass(eq=False)
class Codebook:
    """Random codebook for one block, description codewords drawn lazily."""

    spec: ChannelSpec
    policy: Policy
    n: int
    seed: int
    block: int
    num_messages: int
    num_bins: int
    num_desc: int
    actions: np.ndarray = field(init=False)       # [M, n]
    inputs: np.ndarray = field(init=False)        # [M, L, n]
    _desc_cache: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        m, l, n = self.num_messages, self.num_bins, self.n
        rng_a = np.random.default_rng(
            np.random.SeedSequence([self.seed, _STREAM_ACTIONS, self.block]))
        self.actions = _sample_iid(rng_a, self.policy.p_a, (m, n))
        rng_x = np.random.default_rng(
            np.random.SeedSequence([self.seed, _STREAM_INPUTS, self.block]))
        inputs = np.empty((m, l, n), dtype=np.int64)
        for mi in range(m):
            rows = self.actions[mi]
            for li in range(l):
                inputs[mi, li] = _sample_rows(rng_x, self.policy.p_x_given_a,
                                              rows)
        self.inputs = inputs
        # p(u|x,a) = sum_s p(s|a) p(u|x,s,a): marginal description draw
        self._p_u_given_xa = np.einsum(
            "as,xsau->xau", self.spec.state_given_action,
            self.policy.p_u_given_xsa)

    @property
    def bin_size(self) -> int:
        return self.num_desc // self.num_bins

    def bin_of(self, k: int) -> int:
        return k // self.bin_size

    def bin_members(self, l: int) -> np.ndarray:
        return np.arange(l * self.bin_size, (l + 1) * self.bin_size)

    def descriptions(self, m: int, l: int) -> np.ndarray:
        """Description codewords u^n(k | m, l) for k in [0, num_desc)."""
        key = (m, l)
        cached = self._desc_cache.get(key)
        if cached is not None:
            return cached
        rng = np.random.default_rng(np.random.SeedSequence(
            [self.seed, _STREAM_DESC, self.block, m, l]))
        x_seq = self.inputs[m, l]
        a_seq = self.actions[m]
        rows = self._p_u_given_xa[x_seq, a_seq]       # [n, U]
        cdf = np.cumsum(rows, axis=-1)
        cdf[:, -1] = 1.0
        u = rng.random((self.num_desc, self.n))
        out = (u[:, :, None] > cdf[None, :, :]).sum(axis=2).astype(np.int64)
        self._desc_cache[key] = out
        return out


def generate_codebook(spec: ChannelSpec, policy: Policy, config: SimConfig,
                      rates: CodeRates, block: int = 0) -> Codebook:
    """Seeded random codebook for one block; identical seeds reproduce it."""
    n = config.n
    mbits = _ceil_bits(n, config.rate_r)
    kbits = _ceil_bits(n, rates.r_desc)
    lbits = min(_ceil_bits(n, rates.r_bin), kbits)
    m, l, k = 1 << mbits, 1 << lbits, 1 << kbits
    entries = m * n + m * l * n + k * n
    if entries > config.max_codebook_entries:
        raise ResourceCapError(
            f"codebook needs about {entries} symbol entries "
            f"(M={m}, L={l}, K={k}, n={n}); cap is "
            f"{config.max_codebook_entries}")
    return Codebook(spec=spec, policy=policy, n=n, seed=config.seed,
                    block=block, num_messages=m, num_bins=l, num_desc=k)


# ---------------------------------------------------------------------------
# robust typicality


def sequence_counts(ids: np.ndarray, num_values: int) -> np.ndarray:
    """Occurrence counts per candidate row of encoded tuple ids [C, n]."""
    c = ids.shape[0]
    offsets = (np.arange(c, dtype=np.int64) * num_values)[:, None]
    flat = (ids + offsets).ravel()
    return np.bincount(flat, minlength=c * num_values).reshape(c, num_values)


def robust_typicality(counts: np.ndarray, n: int, pmf: np.ndarray,
                      eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Typicality mask and deviation score per candidate.

    A candidate is typical iff |freq - pmf| <= eps * pmf for every tuple
    value.  The score is the largest relative deviation (infinite when a
    zero-mass tuple occurs), so smaller is closer to the target joint.
    """
    freq = counts / n
    dev = np.abs(freq - pmf[None, :])
    typical = np.all(dev <= eps * pmf[None, :] + 1e-15, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(pmf[None, :] > 0, dev / pmf[None, :], 0.0)
    rel = np.where((pmf[None, :] == 0) & (counts > 0), np.inf, rel)
    return typical, rel.max(axis=1)


def _tuple_ids(seqs: list[np.ndarray], sizes: list[int]) -> np.ndarray:
    """Mixed-radix encoding of parallel symbol sequences (last varies fastest)."""
    out = np.zeros_like(seqs[0])
    for seq, size in zip(seqs, sizes):
        out = out * size + seq
    return out


@dataclass(frozen=True)
class BlockRecord:
    """Per-block log entry.

    m/m_hat are the block's message and its decode; l/l_hat the bin index
    carried by this block's transmission (previous block's description) and
    its decode; k/k_hat the previous block's description index and its
    decode (-1 when not applicable); covering_ok reports this block's own
    covering step, decode_ok the joint (message, bin) decode.
    """
    block: int
    m: int
    m_hat: int
    l: int
    l_hat: int
    k: int
    k_hat: int
    covering_ok: bool
    decode_ok: bool

    def to_line(self) -> str:
        return (f"block={self.block} m={self.m} m_hat={self.m_hat} "
                f"l={self.l} l_hat={self.l_hat} k={self.k} k_hat={self.k_hat} "
                f"covering_ok={int(self.covering_ok)} "
                f"decode_ok={int(self.decode_ok)}")


@dataclass(frozen=True)
class SimResult:
    empirical_message_error: float
    empirical_distortion: float
    encoder_covering_failures: int
    block_log: tuple[BlockRecord, ...]
    rates: CodeRates
    num_messages: int
    num_bins: int
    num_desc: int

    def to_dict(self) -> dict:
        return {
            "empirical_message_error": self.empirical_message_error,
            "empirical_distortion": self.empirical_distortion,
            "encoder_covering_failures": self.encoder_covering_failures,
            "rates": {"r_desc": self.rates.r_desc, "r_bin": self.rates.r_bin,
                      "r_max": self.rates.r_max},
            "code_sizes": {"messages": self.num_messages,
                           "bins": self.num_bins,
                           "descriptions": self.num_desc},
            "blocks": [r.to_line() for r in self.block_log],
        }


def run_block_markov(spec: ChannelSpec, policy: Policy,
                     config: SimConfig) -> SimResult:
    """Simulate the chained scheme end to end and measure its statistics."""
    joint = assemble_joint(spec, policy)
    rates = derive_code_rates(spec, policy, config.delta)
    books = [generate_codebook(spec, policy, config, rates, block=t)
             for t in range(config.b)]
    n, b = config.n, config.b
    na, nx, ns, ny = spec.alpha_a, spec.alpha_x, spec.alpha_s, spec.alpha_y
    nu = policy.num_u

    pmf_cover = joint.marginal("SUXA").ravel()
    pmf_dec1 = joint.marginal("XYA").ravel()
    pmf_dec2 = joint.marginal("UXAY").ravel()

    rng_msg = np.random.default_rng(
        np.random.SeedSequence([config.seed, _STREAM_MESSAGES]))

    m_true = rng_msg.integers(0, books[0].num_messages, size=b)
    l_true = np.zeros(b + 1, dtype=np.int64)   # l_true[t] carried in block t+1
    k_true = np.full(b, -1, dtype=np.int64)
    m_dec = np.full(b, -1, dtype=np.int64)
    l_dec = np.zeros(b + 1, dtype=np.int64)
    k_dec = np.full(b, -1, dtype=np.int64)
    covering_ok = np.zeros(b, dtype=bool)
    decode_ok = np.zeros(b, dtype=bool)

    states = np.empty((b, n), dtype=np.int64)
    outputs = np.empty((b, n), dtype=np.int64)
    distortion_sum = 0.0
    distortion_symbols = 0

    for t in range(b):
        book = books[t]
        rng_state = np.random.default_rng(
            np.random.SeedSequence([config.seed, _STREAM_STATES, t]))
        rng_chan = np.random.default_rng(
            np.random.SeedSequence([config.seed, _STREAM_CHANNEL, t]))
        rng_cover = np.random.default_rng(
            np.random.SeedSequence([config.seed, _STREAM_COVER, t]))

        a_seq = book.actions[m_true[t]]
        s_seq = _sample_rows(rng_state, spec.state_given_action, a_seq)
        x_seq = book.inputs[m_true[t], l_true[t]]
        w_rows = spec.output_given_xsa.reshape(-1, ny)
        y_seq = _sample_rows(rng_chan, w_rows,
                             (x_seq * ns + s_seq) * na + a_seq)
        states[t] = s_seq
        outputs[t] = y_seq

        # decoder step 1: joint (message, bin) decode for this block
        if t == 0:
            cand_m = np.arange(book.num_messages, dtype=np.int64)
            cand_l = np.zeros_like(cand_m)
        else:
            grid_m, grid_l = np.meshgrid(
                np.arange(book.num_messages, dtype=np.int64),
                np.arange(book.num_bins, dtype=np.int64), indexing="ij")
            cand_m, cand_l = grid_m.ravel(), grid_l.ravel()
        cand_x = book.inputs[cand_m, cand_l]
        cand_a = book.actions[cand_m]
        ids = _tuple_ids([cand_x,
                          np.broadcast_to(y_seq, cand_x.shape),
                          cand_a], [nx, ny, na])
        counts = sequence_counts(ids, nx * ny * na)
        typical, scores = robust_typicality(counts, n, pmf_dec1,
                                            config.epsilon_dec)
        n_typ = int(typical.sum())
        if n_typ == 1:
            pick = int(np.nonzero(typical)[0][0])
            decode_ok[t] = True
        elif n_typ > 1:
            masked = np.where(typical, scores, np.inf)
            pick = int(np.argmin(masked))
        else:
            pick = int(np.argmin(scores))
        m_dec[t] = cand_m[pick]
        l_dec[t] = cand_l[pick] if t > 0 else 0

        # decoder step 2: resolve block t-1's description in the decoded bin
        if t > 0:
            prev = books[t - 1]
            desc = prev.descriptions(int(m_dec[t - 1]),
                                     int(l_dec[t - 1]))
            members = prev.bin_members(int(l_dec[t]))
            x_prev = prev.inputs[m_dec[t - 1], l_dec[t - 1]]
            a_prev = prev.actions[m_dec[t - 1]]
            cand_u = desc[members]
            ids2 = _tuple_ids([cand_u,
                               np.broadcast_to(x_prev, cand_u.shape),
                               np.broadcast_to(a_prev, cand_u.shape),
                               np.broadcast_to(outputs[t - 1],
                                               cand_u.shape)],
                              [nu, nx, na, ny])
            counts2 = sequence_counts(ids2, nu * nx * na * ny)
            typical2, scores2 = robust_typicality(counts2, n, pmf_dec2,
                                                  config.epsilon_dec)
            n_typ2 = int(typical2.sum())
            if n_typ2 == 1:
                pick2 = int(np.nonzero(typical2)[0][0])
            elif n_typ2 > 1:
                pick2 = int(np.argmin(np.where(typical2, scores2, np.inf)))
            else:
                pick2 = int(np.argmin(scores2))
            k_dec[t - 1] = members[pick2]
            u_hat = cand_u[pick2]
            shat = policy.estimator[u_hat, x_prev, a_prev, outputs[t - 1]]
            distortion_sum += spec.distortion[states[t - 1], shat].sum()
            distortion_symbols += n

        # encoder: cover this block's state sequence for the next block
        desc_true = book.descriptions(int(m_true[t]), int(l_true[t]))
        ids3 = _tuple_ids([np.broadcast_to(s_seq, desc_true.shape),
                           desc_true,
                           np.broadcast_to(x_seq, desc_true.shape),
                           np.broadcast_to(a_seq, desc_true.shape)],
                          [ns, nu, nx, na])
        counts3 = sequence_counts(ids3, ns * nu * nx * na)
        typical3, _ = robust_typicality(counts3, n, pmf_cover,
                                        config.epsilon_enc)
        hits = np.nonzero(typical3)[0]
        if hits.size > 0:
            k_pick = int(hits[rng_cover.integers(0, hits.size)])
            covering_ok[t] = True
        else:
            k_pick = int(rng_cover.integers(0, book.num_desc))
        k_true[t] = k_pick
        l_true[t + 1] = book.bin_of(k_pick)

    log = tuple(
        BlockRecord(block=t + 1, m=int(m_true[t]), m_hat=int(m_dec[t]),
                    l=int(l_true[t]), l_hat=int(l_dec[t]),
                    k=int(k_true[t - 1]) if t > 0 else -1,
                    k_hat=int(k_dec[t - 1]) if t > 0 else -1,
                    covering_ok=bool(covering_ok[t]),
                    decode_ok=bool(decode_ok[t]))
        for t in range(b))
    return SimResult(
        empirical_message_error=float(np.mean(m_dec != m_true)),
        empirical_distortion=(distortion_sum / distortion_symbols
                              if distortion_symbols else 0.0),
        encoder_covering_failures=int(b - covering_ok.sum()),
        block_log=log, rates=rates,
        num_messages=books[0].num_messages, num_bins=books[0].num_bins,
        num_desc=books[0].num_desc)


def empirical_mi_check(spec: ChannelSpec, policy: Policy, n: int,
                       seed: int = 0) -> dict[str, float]:
    """Plug-in estimates of the scheme's governing information quantities.

    Draws n i.i.d. tuples (A,X,S,U,Y) from the policy-induced joint and
    evaluates the estimates on the empirical distribution.
    """
    joint = assemble_joint(spec, policy)
    p = joint.p.ravel()
    rng = np.random.default_rng(seed)
    ids = rng.choice(p.size, size=n, p=p / p.sum())
    counts = np.bincount(ids, minlength=p.size).astype(float)
    emp = JointDistribution(counts.reshape(joint.p.shape) / n)
    return {
        "I(U,A,X;Y)": mutual_information(emp, "UAX", "Y"),
        "I(U,X;S|A)": conditional_mutual_information(emp, "UX", "S", "A"),
        "I(U;S|X,A)": conditional_mutual_information(emp, "U", "S", "XA"),
        "I(U;Y|X,A)": conditional_mutual_information(emp, "U", "Y", "XA"),
    }
