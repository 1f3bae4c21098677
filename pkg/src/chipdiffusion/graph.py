"""Multigraphs on vertices 1..n: construction, edge-list I/O and generators."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from .errors import CountMismatch, IndexOutOfRange, InvalidParams, MalformedLine, SelfLoop

FAMILIES = ("path", "cycle", "star", "complete", "gnp", "random_multi")


class MultiGraph:
    """Undirected multigraph without self-loops on the vertex set ``1..n``.

    ``edges`` is a sorted tuple of ``(u, v, multiplicity)`` with ``u < v``;
    repeated pairs passed to the constructor accumulate multiplicity.
    Instances are immutable and hashable.
    """

    __slots__ = ("n", "edges", "adjacency", "degrees", "_src", "_dst", "_mult", "_pairs", "_cache", "_hash")

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = ()):
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
            raise InvalidParams(f"vertex count must be a positive integer, got {n!r}")
        n = int(n)
        counts: Counter[tuple[int, int]] = Counter()
        for e in edges:
            if len(e) == 2:
                u, v = e
                mult = 1
            elif len(e) == 3:
                u, v, mult = e
            else:
                raise InvalidParams(f"edge must be (u, v) or (u, v, mult), got {e!r}")
            u, v, mult = int(u), int(v), int(mult)
            if u == v:
                raise SelfLoop(f"self-loop at vertex {u}")
            if not (1 <= u <= n and 1 <= v <= n):
                raise IndexOutOfRange(f"edge {{{u},{v}}} outside vertex range 1..{n}")
            if mult < 1:
                raise InvalidParams(f"multiplicity must be >= 1, got {mult}")
            counts[(min(u, v), max(u, v))] += mult

        self.n = n
        self.edges = tuple((u, v, m) for (u, v), m in sorted(counts.items()))
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n + 1)]
        deg = [0] * (n + 1)
        for u, v, m in self.edges:
            adj[u].append((v, m))
            adj[v].append((u, m))
            deg[u] += m
            deg[v] += m
        # index 0 is a placeholder so that adjacency[v] works for 1-indexed v
        self.adjacency = tuple(tuple(sorted(a)) for a in adj)
        self.degrees = tuple(deg)
        self._pairs = tuple((u - 1, v - 1, m) for u, v, m in self.edges)
        src = np.fromiter((u for u, _, _ in self._pairs), dtype=np.int64, count=len(self._pairs))
        dst = np.fromiter((v for _, v, _ in self._pairs), dtype=np.int64, count=len(self._pairs))
        mult = np.fromiter((m for _, _, m in self._pairs), dtype=np.int64, count=len(self._pairs))
        for arr in (src, dst, mult):
            arr.flags.writeable = False
        self._src, self._dst, self._mult = src, dst, mult
        self._cache = {}
        self._hash = hash((n, self.edges))

    def __setattr__(self, name, value):
        if hasattr(self, "_hash"):
            raise AttributeError("MultiGraph is immutable")
        object.__setattr__(self, name, value)

    def __reduce__(self):
        return (MultiGraph, (self.n, self.edges))

    @classmethod
    def _from_arrays(cls, n: int, src: np.ndarray, dst: np.ndarray, mult: np.ndarray | None = None) -> "MultiGraph":
        if mult is None:
            mult = np.ones(len(src), dtype=np.int64)
        return cls(n, zip((src + 1).tolist(), (dst + 1).tolist(), mult.tolist()))

    def incidence(self):
        """Sparse ``n x pairs`` matrix with ``+mult`` at the larger endpoint, ``-mult`` at the smaller."""
        mat = self._cache.get("incidence")
        if mat is None:
            from scipy import sparse

            k = len(self._pairs)
            cols = np.arange(k, dtype=np.int64)
            mat = sparse.csr_matrix(
                (np.concatenate([self._mult, -self._mult]),
                 (np.concatenate([self._dst, self._src]), np.concatenate([cols, cols]))),
                shape=(self.n, k),
            )
            self._cache["incidence"] = mat
        return mat

    @property
    def num_pairs(self) -> int:
        """Number of adjacent vertex pairs (parallel edges counted once)."""
        return len(self.edges)

    @property
    def num_edges(self) -> int:
        """Number of edges counted with multiplicity."""
        return sum(m for _, _, m in self.edges)

    @property
    def is_simple(self) -> bool:
        return all(m == 1 for _, _, m in self.edges)

    def degree(self, v: int) -> int:
        return self.degrees[v]

    def multiplicity(self, u: int, v: int) -> int:
        for w, m in self.adjacency[u]:
            if w == v:
                return m
        return 0

    def neighbours(self, v: int) -> tuple[tuple[int, int], ...]:
        """``(neighbour, multiplicity)`` pairs of vertex ``v``."""
        return self.adjacency[v]

    def relabel(self, perm: Sequence[int]) -> "MultiGraph":
        """Return the graph with vertex ``v`` renamed ``perm[v - 1]``."""
        _check_perm(perm, self.n)
        return MultiGraph(self.n, ((perm[u - 1], perm[v - 1], m) for u, v, m in self.edges))

    def __eq__(self, other):
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"MultiGraph(n={self.n}, pairs={self.num_pairs}, edges={self.num_edges})"


def _check_perm(perm: Sequence[int], n: int) -> None:
    if sorted(perm) != list(range(1, n + 1)):
        raise InvalidParams(f"not a permutation of 1..{n}: {list(perm)!r}")


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedLine(f"line {lineno}: non-integer token {token!r}") from None


def parse_edge_list(text: str) -> MultiGraph:
    """Parse the ``n m`` header + ``u v [mult]`` edge-list format.

    Blank lines and lines starting with ``#`` are skipped.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            rows.append((lineno, line.split()))
    if not rows:
        raise MalformedLine("empty edge list: expected header 'n m'")
    lineno, header = rows[0]
    if len(header) != 2:
        raise MalformedLine(f"line {lineno}: header must be 'n m', got {' '.join(header)!r}")
    n, m = (_parse_int(tok, lineno) for tok in header)
    if n < 1 or m < 0:
        raise MalformedLine(f"line {lineno}: need n >= 1 and m >= 0")
    body = rows[1:]
    if len(body) != m:
        raise CountMismatch(f"header announces {m} edge lines, found {len(body)}")
    edges = []
    for lineno, toks in body:
        if len(toks) not in (2, 3):
            raise MalformedLine(f"line {lineno}: expected 'u v [mult]', got {' '.join(toks)!r}")
        vals = [_parse_int(tok, lineno) for tok in toks]
        if len(vals) == 3 and vals[2] < 1:
            raise MalformedLine(f"line {lineno}: multiplicity must be >= 1")
        u, v = vals[0], vals[1]
        if u == v:
            raise SelfLoop(f"line {lineno}: self-loop at vertex {u}")
        if not (1 <= u <= n and 1 <= v <= n):
            raise IndexOutOfRange(f"line {lineno}: edge {{{u},{v}}} outside 1..{n}")
        edges.append(vals)
    return MultiGraph(n, edges)


def serialize_edge_list(g: MultiGraph) -> str:
    lines = [f"{g.n} {g.num_pairs}"]
    for u, v, m in g.edges:
        lines.append(f"{u} {v}" if m == 1 else f"{u} {v} {m}")
    return "\n".join(lines) + "\n"


def read_edge_list(path) -> MultiGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def write_edge_list(g: MultiGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_edge_list(g))


def _gnp_pairs(n: int, p: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # row by row: binomial neighbour count, then a uniform subset of that size
    src, dst = [], []
    for u in range(n - 1):
        rest = n - 1 - u
        k = int(rng.binomial(rest, p))
        if k == 0:
            continue
        picks = rng.choice(rest, size=k, replace=False) + (u + 1)
        src.append(np.full(k, u, dtype=np.int64))
        dst.append(picks.astype(np.int64))
    if not src:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(src), np.concatenate(dst)


def generate(
    family: str,
    n: int,
    *,
    p: float | None = None,
    max_mult: int | None = None,
    seed: int = 0,
) -> MultiGraph:
    """Build an instance from one of :data:`FAMILIES`.

    ``gnp`` needs ``p``; ``random_multi`` is G(n, p) (``p`` defaults to 0.5)
    with each present pair given a multiplicity uniform in ``1..max_mult``.
    The star has vertex 1 at its centre. Output depends only on the
    arguments, so a fixed ``seed`` always reproduces the same graph.
    """
    if family not in FAMILIES:
        raise InvalidParams(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParams(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if family == "path":
        return MultiGraph(n, ((v, v + 1) for v in range(1, n)))
    if family == "cycle":
        if n < 3:
            raise InvalidParams("cycle needs n >= 3")
        return MultiGraph(n, [(v, v + 1) for v in range(1, n)] + [(n, 1)])
    if family == "star":
        return MultiGraph(n, ((1, v) for v in range(2, n + 1)))
    if family == "complete":
        return MultiGraph(n, ((u, v) for u in range(1, n) for v in range(u + 1, n + 1)))

    if family == "random_multi" and p is None:
        p = 0.5
    if p is None or not (0.0 <= float(p) <= 1.0):
        raise InvalidParams(f"{family} needs 0 <= p <= 1, got {p!r}")
    rng = np.random.default_rng(seed)
    src, dst = _gnp_pairs(n, float(p), rng)
    if family == "gnp":
        return MultiGraph._from_arrays(n, src, dst)
    if max_mult is None or max_mult < 1:
        raise InvalidParams(f"random_multi needs max_mult >= 1, got {max_mult!r}")
    mult = rng.integers(1, int(max_mult), size=len(src), endpoint=True)
    return MultiGraph._from_arrays(n, src, dst, mult)
