"""Synchronous diffusion step, potential, edge labels and traces.

Labels are stored as integer numerators over one shared positive
denominator ``D`` (``D == 1`` for integer labels).  A transfer across an
edge moves ``D`` numerator units per parallel edge, so every run stays in
exact integer arithmetic.  Numerators are either checked signed 64-bit
(``wide=False``, the default) or arbitrary precision (``wide=True``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from operator import add, mul
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ArithmeticOverflow, InvalidParams, LengthMismatch, MalformedLine
from .graph import MultiGraph, _check_perm

I64_MAX = int(np.iinfo(np.int64).max)
I64_MIN = int(np.iinfo(np.int64).min)

EdgeLabeling = dict  # {(u, v): (x, y)} with u < v, 1-indexed

_LABEL_TOKEN = re.compile(r"[+-]?\d+(/0*[1-9]\d*)?")

# graphs with at most this many adjacent pairs are stepped in pure Python
SMALL_GRAPH_PAIRS = 64


def _as_numerators(values, wide: bool) -> np.ndarray:
    ints = [int(x) for x in values]
    if wide:
        arr = np.empty(len(ints), dtype=object)
        arr[:] = ints
    else:
        if ints and (max(ints) > I64_MAX or min(ints) < I64_MIN):
            raise ArithmeticOverflow("label exceeds the signed 64-bit range; use wide mode")
        arr = np.array(ints, dtype=np.int64)
    arr.flags.writeable = False
    return arr


class Configuration:
    """A label vector ``w`` as ``numerators / denominator``."""

    __slots__ = ("numerators", "denominator")

    def __init__(self, numerators: Iterable[int], denominator: int = 1, *, wide: bool = False):
        denominator = int(denominator)
        if denominator < 1:
            raise InvalidParams(f"denominator must be >= 1, got {denominator}")
        self.numerators = _as_numerators(numerators, wide)
        self.denominator = denominator

    @classmethod
    def _wrap(cls, arr: np.ndarray, denominator: int) -> "Configuration":
        arr.flags.writeable = False
        obj = cls.__new__(cls)
        obj.numerators = arr
        obj.denominator = denominator
        return obj

    @classmethod
    def from_labels(cls, labels: Iterable, *, wide: bool | None = None) -> "Configuration":
        """Build from ints, Fractions or ``"p/q"`` strings using the lcm of denominators.

        ``wide`` defaults to False for integer input and True otherwise.
        """
        fracs = [Fraction(x) for x in labels]
        den = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
        if wide is None:
            wide = den != 1
        return cls((f.numerator * (den // f.denominator) for f in fracs), den, wide=wide)

    @classmethod
    def parse(cls, text: str, *, wide: bool | None = None) -> "Configuration":
        """Parse whitespace-separated integers or ``num/den`` tokens."""
        labels = []
        for tok in text.split():
            if not _LABEL_TOKEN.fullmatch(tok):
                raise MalformedLine(f"bad label token {tok!r}: use integers or num/den")
            labels.append(Fraction(tok))
        if not labels:
            raise MalformedLine("empty configuration")
        return cls.from_labels(labels, wide=wide)

    @property
    def n(self) -> int:
        return len(self.numerators)

    @property
    def wide(self) -> bool:
        return self.numerators.dtype == object

    def labels(self) -> list[Fraction]:
        d = self.denominator
        return [Fraction(int(x), d) for x in self.numerators]

    def format(self) -> str:
        if self.denominator == 1:
            return " ".join(str(int(x)) for x in self.numerators)
        return " ".join(str(f) for f in self.labels())

    def shift(self, c) -> "Configuration":
        """Add the constant label ``c`` to every vertex."""
        c = Fraction(c)
        scaled = c * self.denominator
        if scaled.denominator != 1:
            raise InvalidParams(f"shift {c} is not a multiple of 1/{self.denominator}")
        return Configuration((int(x) + scaled.numerator for x in self.numerators),
                             self.denominator, wide=self.wide)

    def relabel(self, perm: Sequence[int]) -> "Configuration":
        """Move the label of vertex ``v`` to vertex ``perm[v - 1]``."""
        _check_perm(perm, self.n)
        out = [0] * self.n
        for v, x in enumerate(self.numerators.tolist()):
            out[perm[v] - 1] = x
        return Configuration(out, self.denominator, wide=self.wide)

    def widen(self) -> "Configuration":
        return Configuration(self.numerators.tolist(), self.denominator, wide=True)

    def total(self) -> Fraction:
        return Fraction(sum(int(x) for x in self.numerators.tolist()), self.denominator)

    def min_label(self) -> Fraction:
        return Fraction(min(self.numerators.tolist()), self.denominator)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        if self.n != other.n:
            return False
        if self.denominator == other.denominator:
            return self.numerators.tolist() == other.numerators.tolist()
        return self.labels() == other.labels()

    def __hash__(self):
        return hash(tuple(self.labels()))

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Configuration([{self.format()}])"


def _check_fits(g: MultiGraph, *ws: Configuration) -> None:
    for w in ws:
        if w.n != g.n:
            raise LengthMismatch(f"configuration has {w.n} labels, graph has {g.n} vertices")
    if len({w.denominator for w in ws}) > 1:
        raise LengthMismatch("configurations use different denominators")


class _PyKernel:
    """Tuple-of-ints stepping; fastest for small graphs."""

    def __init__(self, g: MultiGraph, denominator: int, wide: bool):
        self.n = g.n
        self.denominator = denominator
        self.wide = wide
        self.flows = tuple((u, v, m * denominator) for u, v, m in g._pairs)
        self.pairs = tuple((u, v) for u, v, _ in g._pairs)

    def state(self, w: Configuration):
        return tuple(w.numerators.tolist())

    def config(self, s) -> Configuration:
        return Configuration._wrap(_as_numerators(s, self.wide), self.denominator)

    def advance(self, w):
        """Return ``(next_state, signs_of_w)``."""
        new = list(w)
        signs = []
        for u, v, f in self.flows:
            a = w[u]
            b = w[v]
            if a > b:
                new[u] -= f
                new[v] += f
                signs.append(1)
            elif a < b:
                new[u] += f
                new[v] -= f
                signs.append(-1)
            else:
                signs.append(0)
        if not self.wide and new and (max(new) > I64_MAX or min(new) < I64_MIN):
            raise ArithmeticOverflow("step left the signed 64-bit range; rerun in wide mode")
        return tuple(new), tuple(signs)

    def signs(self, w):
        return tuple((w[u] > w[v]) - (w[u] < w[v]) for u, v in self.pairs)

    @staticmethod
    def nonfinal(x, y) -> bool:
        """True if some edge label (x, y) is not (1,-1), (-1,1) or (0,0)."""
        return any(map(add, x, y))

    @staticmethod
    def key(w):
        return w

    @staticmethod
    def same(a, b) -> bool:
        return a == b

    @staticmethod
    def dot(a, b) -> int:
        return sum(map(mul, a, b))

    @staticmethod
    def minimum(w):
        return min(w)


class _NpKernel:
    """Vectorised stepping over edge arrays."""

    def __init__(self, g: MultiGraph, denominator: int, wide: bool):
        self.n = g.n
        self.denominator = denominator
        self.wide = wide
        self.src, self.dst = g._src, g._dst
        self.incidence = g.incidence()
        maxdeg = max(g.degrees) if g.n else 0
        self.max_move = maxdeg * denominator

    def state(self, w: Configuration):
        if w.wide == self.wide:
            return w.numerators
        return _as_numerators(w.numerators.tolist(), self.wide)

    def config(self, s) -> Configuration:
        return Configuration._wrap(s, self.denominator)

    def signs(self, w) -> np.ndarray:
        wu = w[self.src]
        wv = w[self.dst]
        return (wu > wv).astype(np.int8) - (wu < wv).astype(np.int8)

    def advance(self, w):
        s = self.signs(w)
        delta = self.incidence @ s
        if self.wide:
            move = delta.astype(object)
            if self.denominator != 1:
                move = move * self.denominator
            return w + move, s
        if self.max_move > I64_MAX:
            raise ArithmeticOverflow("denominator times degree exceeds the 64-bit range")
        if self.denominator != 1:
            delta *= self.denominator
        if len(w) and (int(w.max()) > I64_MAX - self.max_move or int(w.min()) < I64_MIN + self.max_move):
            hi = (delta > 0) & (w > I64_MAX - delta)
            lo = (delta < 0) & (w < I64_MIN - delta)
            if hi.any() or lo.any():
                raise ArithmeticOverflow("step left the signed 64-bit range; rerun in wide mode")
        return w + delta, s

    @staticmethod
    def nonfinal(x, y) -> bool:
        return bool(np.any(x + y))

    @staticmethod
    def key(w):
        return w.tobytes() if w.dtype != object else tuple(w.tolist())

    @staticmethod
    def same(a, b) -> bool:
        return bool(np.array_equal(a, b))

    @staticmethod
    def dot(a, b) -> int:
        return exact_dot(a, b)

    @staticmethod
    def minimum(w):
        return int(w.min())


def kernel_for(g: MultiGraph, denominator: int = 1, wide: bool = False):
    key = ("kernel", denominator, wide)
    k = g._cache.get(key)
    if k is None:
        cls = _PyKernel if g.num_pairs <= SMALL_GRAPH_PAIRS else _NpKernel
        k = g._cache[key] = cls(g, denominator, wide)
    return k


def exact_dot(a: np.ndarray, b: np.ndarray) -> int:
    """Exact integer inner product, falling back to Python ints when int64 could overflow."""
    if a.dtype == object or b.dtype == object or len(a) == 0:
        return sum(map(mul, a.tolist(), b.tolist()))
    ma = max(int(a.max()), -int(a.min()))
    mb = max(int(b.max()), -int(b.min()))
    if ma * mb * len(a) <= I64_MAX:
        return int(np.dot(a, b))
    return sum(map(mul, a.tolist(), b.tolist()))


def step(g: MultiGraph, w: Configuration) -> Configuration:
    """One synchronous diffusion step.

    Every vertex sends one chip along each incident edge to every neighbour
    holding strictly fewer chips; all vertices fire simultaneously.
    """
    _check_fits(g, w)
    k = kernel_for(g, w.denominator, w.wide)
    nxt, _ = k.advance(k.state(w))
    return k.config(nxt)


def potential(w_t: Configuration, w_t1: Configuration) -> Fraction:
    """Sum over vertices of ``w_v(t) * w_v(t+1)``, exactly."""
    if w_t.n != w_t1.n:
        raise LengthMismatch(f"configurations have lengths {w_t.n} and {w_t1.n}")
    if w_t.denominator != w_t1.denominator:
        raise LengthMismatch("configurations use different denominators")
    d = w_t.denominator
    return Fraction(exact_dot(w_t.numerators, w_t1.numerators), d * d)


def _sign(a, b) -> int:
    return (a > b) - (a < b)


def edge_labels(g: MultiGraph, w_t: Configuration, w_t1: Configuration) -> EdgeLabeling:
    """Map each adjacent pair ``(u, v)``, ``u < v``, to ``(sgn(w_u - w_v) at t, at t+1)``."""
    _check_fits(g, w_t, w_t1)
    a = w_t.numerators.tolist()
    b = w_t1.numerators.tolist()
    return {
        (u + 1, v + 1): (_sign(a[u], a[v]), _sign(b[u], b[v]))
        for u, v, _ in g._pairs
    }


def lower_bound(g: MultiGraph) -> Fraction:
    """Lower bound on the potential.

    ``-n(n-1)^2/4`` for simple graphs.  With parallel edges a label can move
    by up to ``deg(v)`` per step, giving ``-sum(deg(v)^2)/4`` instead.
    """
    return Fraction(-bound_quarters(g), 4)


def bound_quarters(g: MultiGraph) -> int:
    """``-4 * lower_bound(g)`` as an int."""
    q = g._cache.get("bound_quarters")
    if q is None:
        if g.is_simple:
            q = g.n * (g.n - 1) ** 2
        else:
            q = sum(d * d for d in g.degrees[1:])
        g._cache["bound_quarters"] = q
    return q


@dataclass
class Trace:
    """Recorded run: ``configurations[t]`` is w(t), ``potentials[t]`` is P(t)."""

    graph: MultiGraph
    configurations: list[Configuration] = field(default_factory=list)
    potentials: list[Fraction] = field(default_factory=list)
    labelings: list[EdgeLabeling] | None = None
    steps_recorded: int = 0


RECORD_OPTIONS = frozenset({"configs", "potentials", "labelings"})


def trace(
    g: MultiGraph,
    w0: Configuration,
    max_steps: int,
    record: Iterable[str] = ("configs", "potentials"),
    stop: Callable[[int, Configuration], bool] | None = None,
) -> Trace:
    """Apply :func:`step` up to ``max_steps`` times, recording the requested series.

    ``stop(t, w_t)`` is consulted after each new configuration ``w(t)``;
    returning True ends the run there.  A run of ``s`` steps records
    ``s + 1`` configurations and ``s`` potentials / labelings.
    """
    record = set(record)
    if record - RECORD_OPTIONS:
        raise InvalidParams(f"unknown record options: {sorted(record - RECORD_OPTIONS)}")
    if max_steps < 1:
        raise InvalidParams("max_steps must be >= 1")
    _check_fits(g, w0)
    k = kernel_for(g, w0.denominator, w0.wide)
    d2 = w0.denominator ** 2
    out = Trace(graph=g, labelings=[] if "labelings" in record else None)
    cur = k.state(w0)
    cur_cfg = w0
    if "configs" in record:
        out.configurations.append(w0)
    for t in range(1, max_steps + 1):
        nxt, _ = k.advance(cur)
        nxt_cfg = k.config(nxt)
        if "configs" in record:
            out.configurations.append(nxt_cfg)
        if "potentials" in record:
            out.potentials.append(Fraction(k.dot(cur, nxt), d2))
        if out.labelings is not None:
            out.labelings.append(edge_labels(g, cur_cfg, nxt_cfg))
        out.steps_recorded = t
        cur, cur_cfg = nxt, nxt_cfg
        if stop is not None and stop(t, nxt_cfg):
            break
    return out
