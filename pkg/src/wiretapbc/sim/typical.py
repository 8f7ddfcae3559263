"""Strongly typical sets with the cube-root delta convention."""

from __future__ import annotations

from typing import Union

import numpy as np

from ..probcore import Dmc, Pmf, ProbabilityError

TYPICAL_TOL = 1e-12
CHUNK_ENTRIES = 8_000_000


def delta_n(n: int, c: float = 1.0) -> float:
    """Typicality slack c * n**(-1/3): it vanishes while sqrt(n) * delta_n diverges."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if c <= 0:
        raise ValueError("delta coefficient must be positive")
    return float(c * n ** (-1.0 / 3.0))


def _as_probs(p: Union[Pmf, np.ndarray, list]) -> np.ndarray:
    return p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)


def is_typical(seq, p, delta: float) -> bool:
    """Strong typicality of one sequence with respect to a pmf.

    Every empirical frequency must be within ``delta`` of its probability, and
    symbols of probability zero must not occur at all.
    """
    probs = _as_probs(p)
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size == 0:
        return True
    if seq.min() < 0 or seq.max() >= probs.size:
        raise ProbabilityError("sequence symbol outside the pmf alphabet")
    return bool(typical_mask(seq[None, :], probs.ravel(), delta)[0])


def is_cond_typical(y_seq, x_seq, w: Dmc, delta: float) -> bool:
    """Conditional typicality of y given x through channel w (joint-count form)."""
    x = np.asarray(x_seq, dtype=np.int64)
    y = np.asarray(y_seq, dtype=np.int64)
    if x.shape != y.shape:
        raise ValueError(f"sequence lengths differ: {x.size} vs {y.size}")
    n = x.size
    if n == 0:
        return True
    k, m = w.rows.shape
    if x.min() < 0 or x.max() >= k or y.min() < 0 or y.max() >= m:
        raise ProbabilityError("symbol outside the channel alphabets")
    counts = np.bincount(x * m + y, minlength=k * m).reshape(k, m)
    nx = counts.sum(axis=1)
    if np.any(counts[w.rows <= 0] > 0):
        return False
    dev = np.abs(counts / n - (nx / n)[:, None] * w.rows)
    return bool(np.all(dev <= delta + TYPICAL_TOL))


def typical_mask(seqs: np.ndarray, probs: np.ndarray, delta: float) -> np.ndarray:
    """Row-wise strong typicality of integer sequences against a flat pmf.

    ``seqs`` has shape (rows, n) with symbols in ``range(len(probs))``.
    Rows are processed in chunks to bound memory.
    """
    seqs = np.asarray(seqs)
    rows, n = seqs.shape
    k = probs.size
    out = np.empty(rows, dtype=bool)
    if rows == 0:
        return out
    if n == 0:
        out[:] = True
        return out
    zero = probs <= 0
    step = max(1, CHUNK_ENTRIES // max(n, k))
    for start in range(0, rows, step):
        block = seqs[start:start + step].astype(np.int64)
        m = block.shape[0]
        flat = (np.arange(m)[:, None] * k + block).ravel()
        counts = np.bincount(flat, minlength=m * k).reshape(m, k)
        ok = np.all(np.abs(counts / n - probs) <= delta + TYPICAL_TOL, axis=1)
        if np.any(zero):
            ok &= ~np.any(counts[:, zero] > 0, axis=1)
        out[start:start + m] = ok
    return out
