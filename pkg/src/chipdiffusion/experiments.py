"""Batch scans and the search for large non-negativity offsets.

For a graph and an initial label profile, the *required offset* is the
smallest uniform boost that keeps every label non-negative for the whole
run.  The largest required offset over all ``n``-vertex instances is a
lower bound for ``f(n)``; nothing here claims an upper bound.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import json
import logging
import os
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator, TextIO

import numpy as np

from .analysis import detect_period, detect_period_generic, verify_theorem
from .engine import Configuration
from .errors import InvalidParams, SinkWriteFailure
from .graph import FAMILIES, MultiGraph, generate

log = logging.getLogger(__name__)

EXHAUSTIVE_MAX_N = 6
EXHAUSTIVE_MAX_K = 4


def _normalized(w0: Configuration) -> Configuration:
    if w0.denominator != 1:
        raise InvalidParams("required offsets are defined for integer labels only")
    low = min(w0.numerators.tolist())
    return w0.shift(-low) if low else w0


def required_offset(g: MultiGraph, w0: Configuration, cap: int | None = None) -> int:
    """Smallest uniform boost keeping the run from ``w0`` (shifted to minimum 0) non-negative."""
    rep = detect_period(g, _normalized(w0), cap)
    return max(0, -int(rep.min_label))


def star_offset(n: int) -> int:
    """Required offset of the star with centre label 1 and leaves 0.

    Every vertex count ``n`` admits this instance, so ``f(n) >= star_offset(n)``.
    """
    if n < 3:
        raise InvalidParams(f"star_offset needs n >= 3, got {n}")
    return required_offset(generate("star", n), Configuration([1] + [0] * (n - 1)))


@dataclass(frozen=True)
class SearchResult:
    graph: MultiGraph
    profile: Configuration
    offset: int
    index: int
    explored: int = 0

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "n": self.graph.n,
            "edges": [[u, v] if m == 1 else [u, v, m] for u, v, m in self.graph.edges],
            "profile": [int(x) for x in self.profile.numerators],
            "offset": self.offset,
        }


def _all_pairs(n: int) -> list[tuple[int, int]]:
    return [(u, v) for u in range(1, n) for v in range(u + 1, n + 1)]


def _profiles(n: int, K: int) -> list[tuple[int, ...]]:
    return [p for p in itertools.product(range(K + 1), repeat=n) if min(p) == 0]


def _exhaustive_chunk(args) -> tuple[list[tuple[int, int, tuple, tuple]], int]:
    """Local record-breakers ``(offset, index, edges, profile)`` for masks in ``[lo, hi)``."""
    n, K, lo, hi, limit = args
    pairs = _all_pairs(n)
    profiles = _profiles(n, K)
    best = -1
    found = []
    explored = 0
    for mask in range(lo, hi):
        edges = tuple(pairs[i] for i in range(len(pairs)) if mask >> i & 1)
        g = MultiGraph(n, edges)
        base = mask * len(profiles)
        for j, prof in enumerate(profiles):
            index = base + j
            if index >= limit:
                return found, explored
            explored += 1
            off = required_offset(g, Configuration(prof))
            if off > best:
                best = off
                found.append((off, index, edges, prof))
    return found, explored


def _random_instance(n: int, K: int, seed: int, index: int) -> tuple[tuple, tuple]:
    rng = np.random.default_rng([seed, index])
    pairs = _all_pairs(n)
    keep = rng.random(len(pairs)) < 0.5
    prof = rng.integers(0, K + 1, size=n)
    prof -= prof.min()
    return tuple(p for p, k in zip(pairs, keep) if k), tuple(int(x) for x in prof)


def _random_chunk(args) -> tuple[list[tuple[int, int, tuple, tuple]], int]:
    n, K, seed, lo, hi = args
    best = -1
    found = []
    for index in range(lo, hi):
        edges, prof = _random_instance(n, K, seed, index)
        off = required_offset(MultiGraph(n, edges), Configuration(prof))
        if off > best:
            best = off
            found.append((off, index, edges, prof))
    return found, hi - lo


def _chunks(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, hi - lo))
    size = -(-(hi - lo) // parts)
    return [(a, min(a + size, hi)) for a in range(lo, hi, size)]


def _map(fn, tasks: list, jobs: int) -> Iterator:
    if jobs <= 1 or len(tasks) <= 1:
        return map(fn, tasks)
    pool = ProcessPoolExecutor(max_workers=jobs)
    try:
        return iter(list(pool.map(fn, tasks)))
    finally:
        pool.shutdown()


def fn_lower_bound_search(
    n: int,
    strategy: str = "exhaustive",
    budget: int | None = None,
    seed: int = 0,
    *,
    K: int = 2,
    jobs: int = 1,
    on_improve: Callable[[SearchResult], None] | None = None,
) -> SearchResult:
    """Find the instance with the largest required offset among those explored.

    ``exhaustive`` walks every edge subset of K_n (in mask order) times every
    profile in ``{0..K}^n`` with minimum 0, stopping early after ``budget``
    instances if one is given.  ``random`` samples ``budget`` instances, each
    from its own seeded generator.  ``on_improve`` sees every strict
    improvement in enumeration order; the result is the same for any ``jobs``.
    """
    if n < 1 or K < 0:
        raise InvalidParams("need n >= 1 and K >= 0")
    if strategy == "exhaustive":
        if n > EXHAUSTIVE_MAX_N or K > EXHAUSTIVE_MAX_K:
            raise InvalidParams(f"exhaustive search needs n <= {EXHAUSTIVE_MAX_N} and K <= {EXHAUSTIVE_MAX_K}")
        if budget is not None and budget < 1:
            raise InvalidParams("budget must be >= 1")
        masks = 1 << len(_all_pairs(n))
        total = masks * len(_profiles(n, K))
        limit = total if budget is None else min(budget, total)
        tasks = [(n, K, a, b, limit) for a, b in _chunks(0, masks, 4 * jobs if jobs > 1 else 1)]
        results = _map(_exhaustive_chunk, tasks, jobs)
    elif strategy == "random":
        if budget is None or budget < 1:
            raise InvalidParams("random search needs budget >= 1")
        tasks = [(n, K, seed, a, b) for a, b in _chunks(0, budget, 4 * jobs if jobs > 1 else 1)]
        results = _map(_random_chunk, tasks, jobs)
    else:
        raise InvalidParams(f"unknown strategy {strategy!r}; use exhaustive or random")

    best = None
    explored = 0
    for found, count in results:
        explored += count
        for off, index, edges, prof in found:
            if best is None or off > best.offset:
                best = SearchResult(MultiGraph(n, edges), Configuration(prof), off, index)
                if on_improve is not None:
                    on_improve(best)
    return SearchResult(best.graph, best.profile, best.offset, best.index, explored)


@dataclass(frozen=True)
class FamilySpec:
    """Instance family for scans.

    Labels are uniform integers in ``[label_min, label_max]`` unless a fixed
    ``labels`` profile is given, in which case every instance starts from it.
    """

    family: str
    n: int
    p: float | None = None
    max_mult: int | None = None
    label_min: int = -50
    label_max: int = 50
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParams(f"unknown family {self.family!r}")
        if self.n < 1 or self.label_min > self.label_max:
            raise InvalidParams("need n >= 1 and label_min <= label_max")
        if self.labels is not None and len(self.labels) != self.n:
            raise InvalidParams(f"fixed labels need exactly n = {self.n} entries")

    def params(self) -> dict:
        out = {"n": self.n}
        if self.p is not None:
            out["p"] = self.p
        if self.max_mult is not None:
            out["max_mult"] = self.max_mult
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_mapping(cls, values: dict) -> "FamilySpec":
        conv = {"n": int, "p": float, "max_mult": int, "label_min": int, "label_max": int,
                "family": str, "labels": _int_tuple}
        unknown = set(values) - set(conv)
        if unknown:
            raise InvalidParams(f"unknown family keys: {sorted(unknown)}")
        try:
            return cls(**{k: conv[k](v) for k, v in values.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidParams):
                raise
            raise InvalidParams(f"bad family spec: {exc}") from None


def _int_tuple(value) -> tuple[int, ...]:
    if isinstance(value, str):
        value = value.replace(",", " ").split()
    return tuple(int(x) for x in value)


def read_config(path) -> dict[str, str]:
    """Read ``key = value`` lines (``#`` comments allowed) into a dict."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[scan]\n" + fh.read())
    except configparser.Error as exc:
        raise InvalidParams(f"{path}: {exc}") from None
    return dict(parser["scan"])


@dataclass
class ScanRecord:
    instance_id: str
    family: str
    params: dict
    seed: int
    n: int
    m: int
    transient: int
    period: int
    T: int
    T_prime: int
    min_label_over_run: int
    required_offset: int
    checks_passed: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class ScanSummary:
    count: int = 0
    max_transient: int = 0
    max_period: int = 0
    periods_ok: bool = True
    violations: list[str] = field(default_factory=list)
    period_counts: dict[int, int] = field(default_factory=dict)
    transient_histogram: dict[int, int] = field(default_factory=dict)
    offset_max: int = 0
    m_mean: float = 0.0
    records: list[ScanRecord] | None = None


def _scan_one(args) -> ScanRecord:
    spec, seed, index, recheck = args
    rng = np.random.default_rng([seed, index])
    gseed = int(rng.integers(0, 2**63))
    g = generate(spec.family, spec.n, p=spec.p, max_mult=spec.max_mult, seed=gseed)
    if spec.labels is not None:
        w0 = Configuration(spec.labels)
    else:
        w0 = Configuration(rng.integers(spec.label_min, spec.label_max, size=spec.n, endpoint=True))
    ver = verify_theorem(g, w0)
    rep = ver.period
    ok = ver.passed
    if recheck:
        ok = ok and detect_period_generic(g, w0) == (rep.transient, rep.period)
    # the normalized run is the raw run shifted down by min(w0)
    low = int(rep.min_label) - int(min(w0.numerators.tolist()))
    return ScanRecord(
        instance_id=f"{spec.family}-s{seed}-{index:06d}",
        family=spec.family,
        params=spec.params(),
        seed=gseed,
        n=g.n,
        m=g.num_edges,
        transient=rep.transient,
        period=rep.period,
        T=rep.potential_stabilization,
        T_prime=rep.label_stabilization,
        min_label_over_run=low,
        required_offset=max(0, -low),
        checks_passed=ok,
    )


def scan_transients(
    spec: FamilySpec,
    instance_count: int,
    seed: int,
    sink: TextIO | None = None,
    *,
    jobs: int = 1,
    recheck_every: int = 100,
    keep_records: bool = False,
) -> ScanSummary:
    """Generate, verify and record ``instance_count`` instances.

    One JSON line per instance goes to ``sink`` in instance order.  Every
    ``recheck_every``-th instance is also run through the generic cycle
    detector.  Any record with ``checks_passed`` false lands in
    ``summary.violations``.  With ``keep_records`` the records are also
    returned in ``summary.records``.
    """
    if instance_count < 1:
        raise InvalidParams("instance_count must be >= 1")
    tasks = [(spec, seed, i, i % recheck_every == 0) for i in range(instance_count)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records: Iterable[ScanRecord] = list(pool.map(_scan_one, tasks, chunksize=16))
    else:
        records = map(_scan_one, tasks)

    summary = ScanSummary(records=[] if keep_records else None)
    periods: Counter[int] = Counter()
    transients: Counter[int] = Counter()
    m_total = 0
    for rec in records:
        if sink is not None:
            try:
                sink.write(rec.to_json() + "\n")
            except OSError as exc:
                raise SinkWriteFailure(f"cannot write scan record: {exc}") from exc
        summary.count += 1
        if summary.records is not None:
            summary.records.append(rec)
        periods[rec.period] += 1
        transients[rec.transient] += 1
        m_total += rec.m
        summary.max_transient = max(summary.max_transient, rec.transient)
        summary.max_period = max(summary.max_period, rec.period)
        summary.offset_max = max(summary.offset_max, rec.required_offset)
        if rec.period not in (1, 2):
            summary.periods_ok = False
        if not rec.checks_passed:
            summary.violations.append(rec.instance_id)
            log.error("check failure on %s", rec.instance_id)
    summary.period_counts = dict(sorted(periods.items()))
    summary.transient_histogram = dict(sorted(transients.items()))
    summary.m_mean = m_total / summary.count
    return summary


def write_summary_csv(records: Iterable[ScanRecord], path) -> None:
    """Per-``n`` summary: n, m_mean, transient_max, period_counts, offset_max."""
    groups: dict[int, list[ScanRecord]] = defaultdict(list)
    for rec in records:
        groups[rec.n].append(rec)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["n", "m_mean", "transient_max", "period_counts", "offset_max"])
        for n in sorted(groups):
            recs = groups[n]
            counts = Counter(r.period for r in recs)
            out.writerow([
                n,
                f"{sum(r.m for r in recs) / len(recs):.3f}",
                max(r.transient for r in recs),
                ";".join(f"{p}:{c}" for p, c in sorted(counts.items())),
                max(r.required_offset for r in recs),
            ])


def default_jobs() -> int:
    env = os.environ.get("CHIPDIFFUSION_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParams(f"CHIPDIFFUSION_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1
