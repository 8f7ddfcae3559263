"""Desk-scale Monte Carlo of the binned superposition wiretap scheme.

A common layer Q carries the split common message, user layers U1 and U2
are superposed on it, and each layer is double-binned: message bins hold
sub-bins, and the encoder picks a jointly typical (u1, u2) pair inside a
randomly chosen product sub-bin. Decoders look for the unique jointly
typical (s0, sj) pair. Leakage to the eavesdropper is measured with exact
posteriors over every message triple.

Seeds: the codebook uses ``SeedSequence((seed, 0))``; trial ``t`` draws its
messages, encoder randomness and channel noise from
``SeedSequence((seed, 1, t))``, ``(seed, 2, t)`` and ``(seed, 3, t)``;
leakage sample ``s`` uses ``SeedSequence((leak_seed, 4, s))``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from ..probcore import CapExceededError, JointPmf, ProbabilityError, WiretapBc
from .typical import delta_n, typical_mask

SIM_AXES = ("Q", "U1", "U2", "X")
CODEWORD_CAP = 2 ** 20
ENUM_CAP = 2 ** 20
RATE_TOL = 1e-9
SNAP_TOL = 1e-12
BLOCK_ENTRIES = 4_000_000
MAX_EXPONENT = 62.0


def _count(n: int, rate: float) -> int:
    """round(2**(n*rate)), at least 1."""
    e = n * rate
    if e > MAX_EXPONENT:
        raise CapExceededError(f"2^{e:.1f} codewords exceeds any enumerable codebook")
    return max(1, int(round(2.0 ** e)))


def _seed(x) -> np.random.Generator:
    if isinstance(x, np.random.Generator):
        return x
    return np.random.default_rng(x)


@dataclass
class SimConfig:
    """Parameters of one simulated code ensemble.

    ``t`` holds the codebook exponents (T0, T1, T2), ``rbar`` the binned
    message rates, ``rtilde`` the sub-bin rates, and ``r0_split`` the split
    (R01, R02) of the common message rate. All rates are in bits per
    channel use. ``realized`` is filled in with the integer counts used at
    blocklength ``n`` and the exponents they correspond to.
    """

    channel: WiretapBc
    aux: JointPmf
    n: int
    t: Tuple[float, float, float]
    r0_split: Tuple[float, float] = (0.0, 0.0)
    rbar: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    rtilde: Tuple[float, float] = (0.0, 0.0)
    trials: int = 100
    seed: int = 0
    delta_coefficient: float = 1.0
    leakage_samples: int = 100
    realized: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("blocklength n must be at least 1")
        self.n = int(self.n)
        if int(self.trials) < 0 or int(self.leakage_samples) < 0:
            raise ValueError("trials and leakage_samples must be nonnegative")
        self.trials = int(self.trials)
        self.leakage_samples = int(self.leakage_samples)
        self.t = tuple(float(v) for v in self.t)
        self.r0_split = tuple(float(v) for v in self.r0_split)
        self.rbar = tuple(float(v) for v in self.rbar)
        self.rtilde = tuple(float(v) for v in self.rtilde)
        if len(self.t) != 3 or len(self.rbar) != 3 or len(self.r0_split) != 2 or \
                len(self.rtilde) != 2:
            raise ValueError("t and rbar need 3 entries; r0_split and rtilde need 2")
        if min(self.t + self.rbar + self.r0_split + self.rtilde) < -RATE_TOL:
            raise ValueError("rates must be nonnegative")
        if abs(self.rbar[0] - sum(self.r0_split)) > RATE_TOL:
            raise ValueError(f"common rate {self.rbar[0]} differs from R01 + R02 = "
                             f"{sum(self.r0_split)}")
        if self.t[0] < self.rbar[0] - RATE_TOL:
            raise ValueError("T0 must be at least the common rate")
        for j in (1, 2):
            if self.rtilde[j - 1] > self.t[j] - self.rbar[j] + RATE_TOL:
                raise ValueError(f"sub-bin rate of user {j} exceeds T{j} - Rbar{j}")
        if self.delta_coefficient <= 0:
            raise ValueError("delta_coefficient must be positive")
        if set(self.aux.axes) != set(SIM_AXES):
            raise ProbabilityError(f"aux law must have axes {SIM_AXES}, got {self.aux.axes}")
        if self.aux.axes != SIM_AXES:
            self.aux = self.aux.marginal(SIM_AXES)
        if self.aux.sizes["X"] != self.channel.input_size:
            raise ProbabilityError("aux X alphabet differs from the channel input size")
        self.realized = self._realize()

    @property
    def rates(self) -> Tuple[float, float]:
        """User rates (R1, R2) = (Rbar_j + R0j)."""
        return (self.rbar[1] + self.r0_split[0], self.rbar[2] + self.r0_split[1])

    @property
    def delta(self) -> float:
        return delta_n(self.n, self.delta_coefficient)

    def _realize(self) -> dict:
        n = self.n
        counts = [_count(n, v) for v in self.t]
        bins = [_count(n, v) for v in self.rbar]
        for i in range(3):
            if bins[i] > counts[i]:
                raise ValueError(f"layer {i}: {bins[i]} bins but only {counts[i]} codewords "
                                 f"after rounding at n={n}")
        subs = [max(1, min(_count(n, self.rtilde[j]), counts[j + 1] // bins[j + 1]))
                for j in range(2)]
        total = counts[0] * (1 + counts[1] + counts[2])
        if total > CODEWORD_CAP:
            raise CapExceededError(f"codebook would hold {total} codewords "
                                   f"(cap {CODEWORD_CAP})")
        exps = lambda xs: [math.log2(c) / n for c in xs]  # noqa: E731
        return {"n": n, "codewords": counts, "bins": bins, "subbins": subs,
                "t": exps(counts), "rbar": exps(bins), "rtilde": exps(subs),
                "total_codewords": total, "delta": self.delta}

    def with_n(self, n: int) -> "SimConfig":
        return dataclasses.replace(self, n=n, realized={})

    def with_seed(self, seed: int) -> "SimConfig":
        return dataclasses.replace(self, seed=seed, realized={})

    def to_dict(self) -> dict:
        return {"n": self.n, "t": list(self.t), "r0_split": list(self.r0_split),
                "rbar": list(self.rbar), "rtilde": list(self.rtilde), "trials": self.trials,
                "seed": self.seed, "delta_coefficient": self.delta_coefficient,
                "leakage_samples": self.leakage_samples, "realized": self.realized,
                "aux": {"axes": list(self.aux.axes), "table": self.aux.table.tolist()}}


def _conditional(table: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    """Normalise the last axis; zero-mass rows get ``fallback``."""
    mass = table.sum(axis=-1, keepdims=True)
    safe = np.where(mass > 0, mass, 1.0)
    return np.where(mass > 0, table / safe, fallback)


def _draw(rng: np.random.Generator, cdf: np.ndarray, size) -> np.ndarray:
    """Inverse-CDF draws; ``cdf`` has the category axis last and broadcasts to size."""
    r = rng.random(size)
    idx = (r[..., None] >= cdf[..., :-1]).sum(axis=-1)
    return idx


@dataclass
class Codebook:
    """Superposition codebook with index-arithmetic binning.

    Word ``s`` of a layer with ``B`` bins lies in bin ``s % B``; its ordinal
    inside the bin is ``s // B`` and its sub-bin is ``(s // B) % L``.
    """

    q: np.ndarray
    u: Tuple[np.ndarray, np.ndarray]
    counts: Tuple[int, int, int]
    bins: Tuple[int, int, int]
    subbins: Tuple[int, int]
    sizes: Tuple[int, int, int, int]
    law_qu: np.ndarray
    law_dec: Tuple[np.ndarray, np.ndarray]
    x_cdf: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def bin_members(self, layer: int, w: int) -> np.ndarray:
        return np.arange(w, self.counts[layer], self.bins[layer])

    def subbin_members(self, j: int, w: int, l: int) -> np.ndarray:
        return self.bin_members(j, w)[l::self.subbins[j - 1]]

    def subbin_of(self, j: int, s: np.ndarray) -> np.ndarray:
        return (np.asarray(s) // self.bins[j]) % self.subbins[j - 1]


def gen_codebook(cfg: SimConfig) -> Codebook:
    """Draw a codebook; identical seeds give identical arrays."""
    rz = cfg.realized
    n0, n1, n2 = rz["codewords"]
    nq, nu1, nu2, nx = (cfg.aux.sizes[a] for a in SIM_AXES)
    n = cfg.n
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    pq = cfg.aux.marginal(("Q",)).table
    q = _draw(rng, np.cumsum(pq), (n0, n)).astype(np.int64)
    words = []
    for name, cnt, k in (("U1", n1, nu1), ("U2", n2, nu2)):
        cond = _conditional(cfg.aux.marginal(("Q", name)).table, np.full(k, 1.0 / k))
        cdf = np.cumsum(cond, axis=1)
        out = np.empty((n0, cnt, n), dtype=np.int64)
        blk = max(1, BLOCK_ENTRIES // max(cnt * n, 1))
        for s in range(0, n0, blk):
            qq = q[s:s + blk]
            out[s:s + blk] = _draw(rng, cdf[qq][:, None, :, :], (qq.shape[0], cnt, n))
        words.append(out)
    px = cfg.aux.marginal(("X",)).table
    x_cond = _conditional(cfg.aux.table, px).reshape(-1, nx)
    ch = cfg.channel
    law_qu = cfg.aux.marginal(("Q", "U1", "U2")).table.ravel()
    dec = []
    for name, w in (("U1", ch.ch_y1), ("U2", ch.ch_y2)):
        j = cfg.aux.marginal(("Q", name, "X")).table
        dec.append(np.einsum("qux,xy->quy", j, w.rows).ravel())
    return Codebook(q, (words[0], words[1]), (n0, n1, n2), tuple(rz["bins"]),
                    tuple(rz["subbins"]), (nq, nu1, nu2, nx), law_qu, tuple(dec),
                    np.cumsum(x_cond, axis=1))


@dataclass
class EncodeResult:
    x: np.ndarray
    s0: int
    s1: int
    s2: int
    l1: int
    l2: int
    failed: bool
    candidates: int


def _triple_symbols(cb: Codebook, s0: int, s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
    _, nu1, nu2, _ = cb.sizes
    q = cb.q[s0]
    return (q * nu1 + cb.u[0][s0, s1][:, None, :]) * nu2 + cb.u[1][s0, s2][None, :, :]


def encode(cb: Codebook, cfg: SimConfig, w0: int, w1: int, w2: int, trial_seed) -> EncodeResult:
    """Stochastic encoder with a mutual-covering search in one product sub-bin.

    When no jointly typical pair exists the encoder reports a failure and
    transmits a uniformly chosen pair of that sub-bin, so the eavesdropper
    still observes a channel output.
    """
    for w, b, name in ((w0, cb.bins[0], "w0"), (w1, cb.bins[1], "w1"), (w2, cb.bins[2], "w2")):
        if not 0 <= int(w) < b:
            raise IndexError(f"{name}={w} outside [0, {b})")
    rng = _seed(trial_seed)
    cand0 = cb.bin_members(0, w0)
    s0 = int(cand0[rng.integers(cand0.size)])
    l1 = int(rng.integers(cb.subbins[0]))
    l2 = int(rng.integers(cb.subbins[1]))
    m1 = cb.subbin_members(1, w1, l1)
    m2 = cb.subbin_members(2, w2, l2)
    sym = _triple_symbols(cb, s0, m1, m2).reshape(m1.size * m2.size, -1)
    ok = np.flatnonzero(typical_mask(sym, cb.law_qu, cfg.delta))
    failed = ok.size == 0
    pick = int(rng.integers(m1.size * m2.size)) if failed else int(ok[rng.integers(ok.size)])
    s1, s2 = int(m1[pick // m2.size]), int(m2[pick % m2.size])
    cells = sym[pick]
    x = _draw(rng, cb.x_cdf[cells], cells.shape)
    return EncodeResult(x, s0, s1, s2, l1, l2, failed, int(ok.size))


def transmit(x_seq, ch: WiretapBc, trial_seed) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Memoryless channel use; outputs follow the joint kernel P(y1, y2, z | x)."""
    rng = _seed(trial_seed)
    x = np.asarray(x_seq, dtype=np.int64)
    if x.size and (x.min() < 0 or x.max() >= ch.input_size):
        raise ProbabilityError("input symbol outside the channel alphabet")
    kern = ch.output_kernel()
    shape = kern.shape[1:]
    cdf = np.cumsum(kern.reshape(kern.shape[0], -1), axis=1)
    flat = _draw(rng, cdf[x], x.shape)
    y1, y2, z = np.unravel_index(flat, shape)
    return y1.astype(np.int64), y2.astype(np.int64), z.astype(np.int64)


@dataclass
class DecodeResult:
    w0: Optional[int]
    wj: Optional[int]
    s0: Optional[int]
    sj: Optional[int]
    candidates: int

    @property
    def failed(self) -> bool:
        return self.candidates != 1


def decode(cb: Codebook, cfg: SimConfig, j: int, y_seq) -> DecodeResult:
    """Unique joint-typicality decoding of (s0, sj); zero or several matches fail."""
    if j not in (1, 2):
        raise ValueError("user index must be 1 or 2")
    y = np.asarray(y_seq, dtype=np.int64)
    key = ("qu", j)
    qu = cb._cache.get(key)
    if qu is None:
        nu = cb.sizes[j]
        qu = cb.q[:, None, :] * nu + cb.u[j - 1]
        cb._cache[key] = qu
    ky = cb.law_dec[j - 1].size // (cb.sizes[0] * cb.sizes[j])
    n0, nj = qu.shape[0], qu.shape[1]
    hits: List[int] = []
    blk = max(1, BLOCK_ENTRIES // max(nj * y.size, 1))
    for s in range(0, n0, blk):
        sym = (qu[s:s + blk] * ky + y).reshape(-1, y.size)
        found = np.flatnonzero(typical_mask(sym, cb.law_dec[j - 1], cfg.delta))
        hits.extend((found + s * nj).tolist())
        if len(hits) > 1:
            break
    if len(hits) != 1:
        return DecodeResult(None, None, None, None, len(hits))
    s0, sj = divmod(hits[0], nj)
    return DecodeResult(s0 % cb.bins[0], sj % cb.bins[j], s0, sj, 1)


def _encoder_law(cb: Codebook, cfg: SimConfig) -> np.ndarray:
    """P(s0, s1, s2 | message) for every triple, as an (N0, N1, N2) array."""
    n0, n1, n2 = cb.counts
    b0, b1, b2 = cb.bins
    l1n, l2n = cb.subbins
    s1, s2 = np.arange(n1), np.arange(n2)
    g1 = (s1 % b1) * l1n + cb.subbin_of(1, s1)
    g2 = (s2 % b2) * l2n + cb.subbin_of(2, s2)
    ng1, ng2 = b1 * l1n, b2 * l2n
    gid = (g1[:, None] * ng2 + g2[None, :]).ravel()
    full = np.bincount(gid, minlength=ng1 * ng2)
    bin0_size = np.bincount(np.arange(n0) % b0, minlength=b0)
    law = np.empty((n0, n1, n2))
    for s0 in range(n0):
        sym = _triple_symbols(cb, s0, s1, s2).reshape(n1 * n2, -1)
        typ = typical_mask(sym, cb.law_qu, cfg.delta)
        cnt = np.bincount(gid, weights=typ, minlength=ng1 * ng2)
        size = np.where(cnt > 0, cnt, full)
        in_set = typ | (cnt[gid] == 0)
        law[s0] = (in_set / (bin0_size[s0 % b0] * l1n * l2n * size[gid])).reshape(n1, n2)
    return law


def estimate_leakage(cb: Codebook, cfg: SimConfig, ch: WiretapBc, samples: int,
                     seed: int) -> Tuple[float, float]:
    """Monte Carlo estimate of I(W0 W1 W2; Z^n)/n with exact posteriors.

    Each sample draws a message triple, runs the encoder and the channel, and
    computes H(W | z^n) by enumerating every codeword triple with its
    encoder probability and likelihood. Returns (leakage_rate, stderr).
    """
    n0, n1, n2 = cb.counts
    triples = n0 * n1 * n2
    if triples > ENUM_CAP:
        raise CapExceededError(f"{triples} codeword triples exceed the enumeration cap "
                               f"{ENUM_CAP}")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    b0, b1, b2 = cb.bins
    h_w = math.log2(b0 * b1 * b2)
    law = cb._cache.get("enc_law")
    if law is None:
        law = _encoder_law(cb, cfg)
        cb._cache["enc_law"] = law
    nq, nu1, nu2, _ = cb.sizes
    x_cond = np.diff(np.concatenate([np.zeros((cb.x_cdf.shape[0], 1)), cb.x_cdf], axis=1),
                     axis=1)
    wz = x_cond @ ch.ch_z.rows
    with np.errstate(divide="ignore"):
        logw = np.log(wz)
    msg = ((np.arange(n0) % b0)[:, None, None] * b1 + (np.arange(n1) % b1)[None, :, None]) \
        * b2 + (np.arange(n2) % b2)[None, None, :]
    msg = msg.ravel()
    s1, s2 = np.arange(n1), np.arange(n2)
    vals = np.empty(samples)
    for k in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 4, k)))
        w = (int(rng.integers(b0)), int(rng.integers(b1)), int(rng.integers(b2)))
        enc = encode(cb, cfg, *w, rng)
        _, _, z = transmit(enc.x, ch, rng)
        a = logw[:, z]
        cols = np.arange(z.size)
        ll = np.empty((n0, n1, n2))
        for s0 in range(n0):
            sym = _triple_symbols(cb, s0, s1, s2)
            ll[s0] = a[sym, cols].sum(axis=-1)
        ll = ll.ravel()
        weight = law.ravel() * np.exp(ll - ll.max())
        post = np.bincount(msg, weights=weight, minlength=b0 * b1 * b2)
        post = post / post.sum()
        nz = post[post > 0]
        v = h_w + float((nz * np.log2(nz)).sum())
        vals[k] = 0.0 if abs(v) < SNAP_TOL else max(v, 0.0)
    rate = float(vals.mean()) / cfg.n
    stderr = float(vals.std(ddof=1) / math.sqrt(samples)) / cfg.n if samples > 1 else 0.0
    return rate, stderr


@dataclass
class ErrorRate:
    value: float
    low: float
    high: float
    errors: int
    trials: int

    @classmethod
    def from_counts(cls, errors: int, trials: int) -> "ErrorRate":
        if trials == 0:
            return cls(0.0, 0.0, 1.0, 0, 0)
        ci = binomtest(errors, trials).proportion_ci(confidence_level=0.95, method="wilson")
        return cls(errors / trials, float(ci.low), float(ci.high), errors, trials)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SimResult:
    pe1: ErrorRate
    pe2: ErrorRate
    enc_fail_rate: float
    leakage_rate: Optional[float]
    leakage_stderr: Optional[float]
    trials_run: int
    n: int
    realized: dict

    def to_dict(self) -> dict:
        return {"n": self.n, "pe1": self.pe1.to_dict(), "pe2": self.pe2.to_dict(),
                "enc_fail_rate": self.enc_fail_rate, "leakage_rate": self.leakage_rate,
                "leakage_stderr": self.leakage_stderr, "trials_run": self.trials_run,
                "realized": self.realized}


TRIAL_FIELDS = ("trial", "w0", "w1", "w2", "enc_failed", "err1", "err2")


def run_trials(cb: Codebook, cfg: SimConfig) -> List[tuple]:
    """Simulate ``cfg.trials`` transmissions; one row per trial (see TRIAL_FIELDS)."""
    rows = []
    b0, b1, b2 = cb.bins
    for t in range(cfg.trials):
        rm = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1, t)))
        w = (int(rm.integers(b0)), int(rm.integers(b1)), int(rm.integers(b2)))
        enc = encode(cb, cfg, *w, np.random.SeedSequence((cfg.seed, 2, t)))
        if enc.failed:
            rows.append((t, *w, True, True, True))
            continue
        y1, y2, _ = transmit(enc.x, cfg.channel, np.random.SeedSequence((cfg.seed, 3, t)))
        d1 = decode(cb, cfg, 1, y1)
        d2 = decode(cb, cfg, 2, y2)
        e1 = d1.failed or (d1.w0, d1.wj) != (w[0], w[1])
        e2 = d2.failed or (d2.w0, d2.wj) != (w[0], w[2])
        rows.append((t, *w, False, bool(e1), bool(e2)))
    return rows


def simulate(cfg: SimConfig, leakage: bool = True) -> Tuple[SimResult, List[tuple]]:
    """Generate a codebook, run the trials and (optionally) estimate leakage."""
    cb = gen_codebook(cfg)
    rows = run_trials(cb, cfg)
    e1 = sum(r[5] for r in rows)
    e2 = sum(r[6] for r in rows)
    fails = sum(r[4] for r in rows)
    leak = stderr = None
    if leakage and cfg.leakage_samples > 0:
        leak, stderr = estimate_leakage(cb, cfg, cfg.channel, cfg.leakage_samples, cfg.seed)
    res = SimResult(ErrorRate.from_counts(e1, len(rows)), ErrorRate.from_counts(e2, len(rows)),
                    fails / len(rows) if rows else 0.0, leak, stderr, len(rows), cfg.n,
                    dict(cfg.realized))
    return res, rows


def sweep_n(cfg: SimConfig, ns: Sequence[int], leakage: bool = True) -> List[SimResult]:
    return [simulate(cfg.with_n(n), leakage)[0] for n in ns]
