"""Finite-alphabet probability kernel.

Pmfs, dense joint tables with named axes, Shannon quantities in bits, binary
channel constructors and the small amount of channel algebra (cascades and
products) the rest of the package needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

SUM_TOL = 1e-9
DOMAIN_TOL = 1e-12
ZERO_FLOOR = 1e-15
MAX_TABLE_ENTRIES = 2 ** 24
PRODUCT_ALPHABET_CAP = 4096

AxisSet = Union[str, Sequence[str]]


class ProbabilityError(ValueError):
    """Invalid probability object or out-of-domain argument."""


class CapExceededError(ProbabilityError):
    """A dense table or product alphabet would exceed its configured cap."""


def _check_unit(name: str, x: float) -> float:
    x = float(x)
    if not (-DOMAIN_TOL <= x <= 1.0 + DOMAIN_TOL):
        raise ProbabilityError(f"{name}={x!r} is outside [0, 1]")
    return min(max(x, 0.0), 1.0)


def _plogp(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > ZERO_FLOOR
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def binary_entropy(x: float) -> float:
    """h2(x) in bits, with 0 log 0 = 0."""
    x = _check_unit("x", x)
    return float(-_plogp(np.array([x, 1.0 - x])).sum())


def binary_entropy_array(x) -> np.ndarray:
    """Vectorised h2 for arrays already known to lie in [0, 1]."""
    x = np.asarray(x, dtype=float)
    return -(_plogp(x) + _plogp(1.0 - x))


def bconv(x: float, y: float) -> float:
    """Binary convolution x(1-y) + (1-x)y."""
    x = _check_unit("x", x)
    y = _check_unit("y", y)
    return x * (1.0 - y) + (1.0 - x) * y


def _validate_probs(arr: np.ndarray, what: str, axis=None) -> None:
    if not np.all(np.isfinite(arr)):
        raise ProbabilityError(f"{what} has non-finite entries")
    if np.any(arr < 0):
        raise ProbabilityError(f"{what} has negative entries (min {arr.min():.3g})")
    sums = arr.sum(axis=axis)
    bad = np.abs(sums - 1.0) > SUM_TOL
    if np.any(bad):
        if axis is None:
            raise ProbabilityError(f"{what} sums to {float(sums):.12g}, not 1")
        idx = int(np.flatnonzero(bad)[0])
        raise ProbabilityError(
            f"{what} row {idx} sums to {float(np.ravel(sums)[idx]):.12g}, not 1")


def normalize(weights) -> "Pmf":
    """Rescale nonnegative weights into a Pmf (for ingestion only)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ProbabilityError("weights must be a non-empty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ProbabilityError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise ProbabilityError("weights sum to zero")
    return Pmf(w / total)


@dataclass(frozen=True)
class Pmf:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ProbabilityError("Pmf needs a non-empty vector")
        _validate_probs(p, "Pmf")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, k: int) -> "Pmf":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point(cls, k: int, i: int) -> "Pmf":
        p = np.zeros(k)
        p[i] = 1.0
        return cls(p)


def entropy(p: Union[Pmf, Sequence[float], np.ndarray]) -> float:
    """Shannon entropy in bits."""
    if not isinstance(p, Pmf):
        p = Pmf(p)
    return float(-_plogp(p.probs).sum())


def _names(axes: AxisSet) -> tuple:
    if isinstance(axes, str):
        return (axes,)
    return tuple(axes)


class JointPmf:
    """Dense joint pmf over named finite axes (row-major, one numpy dim per axis).

    Instances are immutable; entropies of axis subsets are memoised.
    """

    def __init__(self, axes: Sequence[str], table, *, validate: bool = True):
        axes = tuple(axes)
        if len(set(axes)) != len(axes):
            raise ProbabilityError(f"duplicate axis names in {axes}")
        t = np.array(table, dtype=float)
        if t.ndim != len(axes):
            raise ProbabilityError(
                f"table has {t.ndim} dims but {len(axes)} axes were named")
        if t.size > MAX_TABLE_ENTRIES:
            raise CapExceededError(
                f"joint table would have {t.size} entries (cap {MAX_TABLE_ENTRIES})")
        if validate:
            _validate_probs(t, "JointPmf")
        t.setflags(write=False)
        self.axes = axes
        self.table = t
        self._h_cache: dict = {}

    def __repr__(self) -> str:
        dims = ", ".join(f"{a}:{s}" for a, s in zip(self.axes, self.table.shape))
        return f"JointPmf({dims})"

    @property
    def shape(self) -> tuple:
        return self.table.shape

    @property
    def sizes(self) -> dict:
        return dict(zip(self.axes, self.table.shape))

    def index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise ProbabilityError(f"unknown axis {name!r}; axes are {self.axes}") from None

    def marginal(self, names: AxisSet) -> "JointPmf":
        names = _names(names)
        idx = [self.index(n) for n in names]
        if len(set(idx)) != len(idx):
            raise ProbabilityError(f"repeated axis in {names}")
        drop = tuple(i for i in range(len(self.axes)) if i not in idx)
        t = self.table.sum(axis=drop) if drop else self.table
        kept = [i for i in range(len(self.axes)) if i in idx]
        perm = [kept.index(i) for i in idx]
        return JointPmf(names, np.transpose(t, perm), validate=False)

    def pmf(self, name: str) -> Pmf:
        return Pmf(self.marginal(name).table)

    def entropy(self, names: Optional[AxisSet] = None) -> float:
        """Joint entropy of the named axes (all axes if None)."""
        names = self.axes if names is None else _names(names)
        key = frozenset(names)
        if len(key) != len(names):
            raise ProbabilityError(f"repeated axis in {names}")
        if not key:
            return 0.0
        hit = self._h_cache.get(key)
        if hit is None:
            for n in key:
                self.index(n)
            drop = tuple(i for i, a in enumerate(self.axes) if a not in key)
            t = self.table.sum(axis=drop) if drop else self.table
            hit = float(-_plogp(t).sum())
            self._h_cache[key] = hit
        return hit

    def conditional(self, given: AxisSet) -> np.ndarray:
        """Return P(all axes | given) in the table's own axis order.

        Slices where the conditioning event has zero probability are set
        uniform so that the result is always a valid kernel.
        """
        given = _names(given)
        gidx = [self.index(g) for g in given]
        other = tuple(i for i in range(len(self.axes)) if i not in gidx)
        denom = self.table.sum(axis=other, keepdims=True) if other else np.ones_like(self.table)
        n_other = int(np.prod([self.table.shape[i] for i in other])) if other else 1
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(denom > 0, self.table / np.where(denom > 0, denom, 1.0), 1.0 / n_other)
        return cond

    def condition(self, axis: str, value: int) -> "JointPmf":
        """Joint law of the remaining axes given axis == value."""
        i = self.index(axis)
        sl = np.take(self.table, value, axis=i)
        mass = sl.sum()
        if mass <= 0:
            raise ProbabilityError(f"P({axis}={value}) = 0; cannot condition")
        rest = self.axes[:i] + self.axes[i + 1:]
        return JointPmf(rest, sl / mass, validate=False)

    def extend(self, name: str, kernel, given: AxisSet) -> "JointPmf":
        """Append axis `name` drawn from P(name | given) = kernel[given..., name]."""
        given = _names(given)
        if name in self.axes:
            raise ProbabilityError(f"axis {name!r} already present")
        k = np.asarray(kernel, dtype=float)
        gshape = tuple(self.sizes[g] for g in given) if given else ()
        if k.shape[:-1] != gshape:
            raise ProbabilityError(
                f"kernel shape {k.shape} does not match given axes {given} {gshape}")
        _validate_probs(k.reshape(-1, k.shape[-1]), f"kernel for {name}", axis=1)
        new_size = self.table.size * k.shape[-1]
        if new_size > MAX_TABLE_ENTRIES:
            raise CapExceededError(
                f"joint table would have {new_size} entries (cap {MAX_TABLE_ENTRIES})")
        letters = "abcdefghijklmnopqrstuvwxyz"
        src = letters[: len(self.axes)]
        out = letters[len(self.axes)]
        ksub = "".join(src[self.index(g)] for g in given) + out
        t = np.einsum(f"{src},{ksub}->{src}{out}", self.table, k)
        return JointPmf(self.axes + (name,), t, validate=False)

    def copy_axis(self, src: str, name: str) -> "JointPmf":
        """Append a deterministic copy of an existing axis."""
        return self.extend(name, np.eye(self.sizes[src]), src)

    def merge(self, names: Sequence[str], name: str) -> "JointPmf":
        """Replace a group of axes by one axis over their product alphabet."""
        names = tuple(names)
        rest = tuple(a for a in self.axes if a not in names)
        j = self.marginal(rest + names)
        shape = j.shape[: len(rest)] + (int(np.prod(j.shape[len(rest):])),)
        return JointPmf(rest + (name,), j.table.reshape(shape), validate=False)

    @classmethod
    def independent(cls, parts: Mapping[str, Union[Pmf, Sequence[float]]]) -> "JointPmf":
        axes = tuple(parts)
        t = np.ones(())
        for a in axes:
            p = parts[a]
            p = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
            t = np.multiply.outer(t, p)
        return cls(axes, t)


def conditional_mi(j: JointPmf, a: AxisSet, b: AxisSet, c: AxisSet = ()) -> float:
    """I(A;B|C) in bits for disjoint axis groups of `j`."""
    a, b, c = _names(a), _names(b), _names(c)
    sa, sb, sc = set(a), set(b), set(c)
    if len(sa) != len(a) or len(sb) != len(b) or len(sc) != len(c):
        raise ProbabilityError("repeated axis inside a group")
    if sa & sb or sa & sc or sb & sc:
        raise ProbabilityError(f"axis groups overlap: {a} / {b} / {c}")
    if not a or not b:
        return 0.0
    val = j.entropy(a + c) + j.entropy(b + c) - j.entropy(a + b + c) - j.entropy(c)
    return max(val, 0.0)


@dataclass(frozen=True)
class Dmc:
    """Discrete memoryless channel; rows[x, y] = P(y|x)."""

    rows: np.ndarray

    def __post_init__(self):
        r = np.array(self.rows, dtype=float)
        if r.ndim != 2 or r.shape[0] == 0 or r.shape[1] == 0:
            raise ProbabilityError("channel matrix must be a non-empty 2-D array")
        _validate_probs(r, "channel", axis=1)
        r.setflags(write=False)
        object.__setattr__(self, "rows", r)

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def is_deterministic(self, tol: float = 1e-12) -> bool:
        r = self.rows
        return bool(np.all((np.abs(r) <= tol) | (np.abs(r - 1.0) <= tol)))

    def __eq__(self, other):
        return isinstance(other, Dmc) and self.rows.shape == other.rows.shape and bool(
            np.array_equal(self.rows, other.rows))

    def __hash__(self):
        return hash((self.rows.shape, self.rows.tobytes()))


def make_bsc(p: float) -> Dmc:
    p = _check_unit("p", p)
    return Dmc(np.array([[1.0 - p, p], [p, 1.0 - p]]))


def make_bec(e: float) -> Dmc:
    """Binary erasure channel; the erasure symbol is output index 2."""
    e = _check_unit("e", e)
    return Dmc(np.array([[1.0 - e, 0.0, e], [0.0, 1.0 - e, e]]))


def make_deterministic(f: Union[Sequence[int], Mapping[int, int], Callable[[int], int]],
                       input_size: Optional[int] = None,
                       output_size: Optional[int] = None) -> Dmc:
    """Channel putting all mass on f(x)."""
    if callable(f):
        if input_size is None:
            raise ProbabilityError("input_size is required when f is callable")
        values = [int(f(x)) for x in range(input_size)]
    elif isinstance(f, Mapping):
        n = input_size if input_size is not None else len(f)
        missing = [x for x in range(n) if x not in f]
        if missing:
            raise ProbabilityError(f"f is not total; missing inputs {missing}")
        values = [int(f[x]) for x in range(n)]
    else:
        values = [int(v) for v in f]
        if input_size is not None and len(values) != input_size:
            raise ProbabilityError("f length does not match input_size")
    if not values or min(values) < 0:
        raise ProbabilityError("f must map onto nonnegative output indices")
    ny = output_size if output_size is not None else max(values) + 1
    if max(values) >= ny:
        raise ProbabilityError("f maps outside the output alphabet")
    rows = np.zeros((len(values), ny))
    rows[np.arange(len(values)), values] = 1.0
    return Dmc(rows)


def make_identity(k: int) -> Dmc:
    return Dmc(np.eye(k))


def make_constant(input_size: int, output_size: int = 1) -> Dmc:
    """Useless channel: output index 0 regardless of input."""
    rows = np.zeros((input_size, output_size))
    rows[:, 0] = 1.0
    return Dmc(rows)


def cascade(w1: Dmc, q: Dmc) -> Dmc:
    """Channel X -> Z obtained by feeding the output of w1 into q."""
    if w1.output_size != q.input_size:
        raise ProbabilityError(
            f"cannot cascade: w1 has {w1.output_size} outputs, q has {q.input_size} inputs")
    rows = w1.rows @ q.rows
    rows = rows / rows.sum(axis=1, keepdims=True)
    return Dmc(rows)


def mutual_information(px: Union[Pmf, Sequence[float]], w: Dmc) -> float:
    """I(X;Y) in bits for input law px through channel w."""
    if not isinstance(px, Pmf):
        px = Pmf(px)
    if len(px) != w.input_size:
        raise ProbabilityError(
            f"input pmf has {len(px)} symbols, channel expects {w.input_size}")
    return max(float(mi_batch(px.probs[None, :], w.rows)[0]), 0.0)


def mi_batch(px: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """I(X;Y) for a batch of input pmfs (one per row of px), no validation."""
    py = px @ rows
    h_y = -_plogp(py).sum(axis=1)
    h_rows = -_plogp(rows).sum(axis=1)
    return h_y - px @ h_rows


@dataclass(frozen=True)
class WiretapBc:
    """Three channels sharing input X: legitimate Y1, Y2 and eavesdropper Z.

    `coupling`, when given, is a table P(y1, y2, z | x) whose marginals must
    agree with the three channels; otherwise outputs are taken conditionally
    independent given X.
    """

    ch_y1: Dmc
    ch_y2: Dmc
    ch_z: Dmc
    coupling: Optional[np.ndarray] = field(default=None, compare=False)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        sizes = {self.ch_y1.input_size, self.ch_y2.input_size, self.ch_z.input_size}
        if len(sizes) != 1:
            raise ProbabilityError(
                f"channels disagree on input alphabet size: "
                f"{self.ch_y1.input_size}, {self.ch_y2.input_size}, {self.ch_z.input_size}")
        if self.coupling is not None:
            c = np.array(self.coupling, dtype=float)
            want = (self.input_size, self.ch_y1.output_size, self.ch_y2.output_size,
                    self.ch_z.output_size)
            if c.shape != want:
                raise ProbabilityError(f"coupling has shape {c.shape}, expected {want}")
            _validate_probs(c.reshape(c.shape[0], -1), "coupling", axis=1)
            for ax, ch in ((1, self.ch_y1), (2, self.ch_y2), (3, self.ch_z)):
                other = tuple(i for i in (1, 2, 3) if i != ax)
                if np.max(np.abs(c.sum(axis=other) - ch.rows)) > SUM_TOL:
                    raise ProbabilityError("coupling marginals do not match the channels")
            c.setflags(write=False)
            object.__setattr__(self, "coupling", c)

    @property
    def input_size(self) -> int:
        return self.ch_y1.input_size

    def output_kernel(self) -> np.ndarray:
        """P(y1, y2, z | x) as a 4-D array."""
        if self.coupling is not None:
            return self.coupling
        return np.einsum("xa,xb,xc->xabc", self.ch_y1.rows, self.ch_y2.rows, self.ch_z.rows)

    def attach_outputs(self, joint: JointPmf, x_axis: str = "X",
                       names: Sequence[str] = ("Y1", "Y2", "Z")) -> JointPmf:
        """Extend a joint containing X with the three channel outputs."""
        if joint.sizes.get(x_axis) != self.input_size:
            raise ProbabilityError(
                f"joint axis {x_axis!r} has size {joint.sizes.get(x_axis)}, "
                f"channel input size is {self.input_size}")
        if self.coupling is None:
            out = joint
            for nm, ch in zip(names, (self.ch_y1, self.ch_y2, self.ch_z)):
                out = out.extend(nm, ch.rows, x_axis)
            return out
        k = self.coupling
        out = joint.extend("_YYZ", k.reshape(k.shape[0], -1), x_axis)
        t = out.table.reshape(out.shape[:-1] + k.shape[1:])
        return JointPmf(joint.axes + tuple(names), t, validate=False)

    def swap_users(self) -> "WiretapBc":
        c = None if self.coupling is None else np.transpose(self.coupling, (0, 2, 1, 3))
        return WiretapBc(self.ch_y2, self.ch_y1, self.ch_z, c, self.name)


def product_wbc(a: WiretapBc, b: WiretapBc, cap: int = PRODUCT_ALPHABET_CAP) -> WiretapBc:
    """Parallel combination: input (x_a, x_b), each output is the factor pair.

    Input index is x_a * |X_b| + x_b (Kronecker order); outputs likewise.
    """
    n_in = a.input_size * b.input_size
    sizes = [n_in] + [ca.output_size * cb.output_size
                      for ca, cb in ((a.ch_y1, b.ch_y1), (a.ch_y2, b.ch_y2), (a.ch_z, b.ch_z))]
    if max(sizes) > cap:
        raise CapExceededError(f"product alphabet size {max(sizes)} exceeds cap {cap}")
    chans = [Dmc(np.kron(ca.rows, cb.rows))
             for ca, cb in ((a.ch_y1, b.ch_y1), (a.ch_y2, b.ch_y2), (a.ch_z, b.ch_z))]
    return WiretapBc(*chans, name=f"{a.name}x{b.name}" if a.name or b.name else "")


def ck_identity_check(joint: JointPmf, n: Optional[int] = None) -> float:
    """Absolute defect of the Csiszar-Korner sum identity.

    Axes are read positionally as (X_1..X_n, Y_1..Y_n, C). Returns
    |sum_i I(Y_{i+1}^n; X_i | C X^{i-1}) - sum_i I(X^{i-1}; Y_i | C Y_{i+1}^n)|.
    """
    k = len(joint.axes)
    if n is None:
        if k % 2 != 1 or k < 3:
            raise ProbabilityError(f"expected 2n+1 axes, got {k}")
        n = (k - 1) // 2
    if k != 2 * n + 1:
        raise ProbabilityError(f"expected {2 * n + 1} axes for n={n}, got {k}")
    xs = joint.axes[:n]
    ys = joint.axes[n:2 * n]
    c = (joint.axes[-1],)
    lhs = sum(conditional_mi(joint, ys[i + 1:], xs[i], c + xs[:i]) for i in range(n))
    rhs = sum(conditional_mi(joint, xs[:i], ys[i], c + ys[i + 1:]) for i in range(n))
    return abs(lhs - rhs)


def random_pmf(rng: np.random.Generator, k: int, alpha: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(k, alpha))


def random_channel(rng: np.random.Generator, n_in: int, n_out: int, alpha: float = 1.0) -> Dmc:
    return Dmc(rng.dirichlet(np.full(n_out, alpha), size=n_in))


def iter_simplex_grid(k: int, resolution: int) -> Iterable[np.ndarray]:
    """All pmfs on k symbols with coordinates in multiples of 1/resolution."""
    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + [remaining]
            return
        for v in range(remaining + 1):
            yield from rec(prefix + [v], remaining - v, slots - 1)
    for combo in rec([], resolution, k):
        yield np.array(combo, dtype=float) / resolution


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    return np.array(list(iter_simplex_grid(k, resolution)))
