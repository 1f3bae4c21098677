"""Period detection, stabilization times and run verification.

Diffusion always settles into an orbit of period 1 or 2, so
:func:`detect_period` only keeps a two-step window.  :func:`detect_period_generic`
is the assumption-free cross-check: it remembers every configuration seen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .engine import I64_MAX, Configuration, Trace, bound_quarters, kernel_for, lower_bound
from .errors import CapExceeded, TraceTooShort
from .graph import MultiGraph

STRICT_DECREASE_LABELS = frozenset({(1, 1), (-1, -1), (0, 1), (0, -1)})
STABLE_LABELS = frozenset({(1, -1), (-1, 1), (0, 0), (1, 0), (-1, 0)})
FINAL_LABELS = frozenset({(1, -1), (-1, 1), (0, 0)})


@dataclass(frozen=True)
class PeriodReport:
    """Outcome of one run.

    ``potential_stabilization`` is the first time from which the potential
    stays constant; ``label_stabilization`` the first time from which every
    edge label is in :data:`FINAL_LABELS`.  ``steps`` is the number of steps
    simulated before the repeat was seen; ``min_label`` the lowest label
    any vertex held over that whole stretch, which covers the orbit.
    """

    transient: int
    period: int
    potential_stabilization: int
    label_stabilization: int
    final_potential: Fraction
    steps: int
    min_label: Fraction


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    first_failure: int | None = None


@dataclass
class VerificationReport:
    checks: list[Check]
    period: PeriodReport

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def default_cap(g: MultiGraph, w0: Configuration) -> int:
    """Step budget: 16 per unit of potential range, 16 per edge, plus slack.

    The range is ``(P(0) - lower_bound) * D**2``, the number of distinct
    values the potential can take on its way down.
    """
    k = kernel_for(g, w0.denominator, w0.wide)
    s = k.state(w0)
    nxt, _ = k.advance(s)
    d2 = w0.denominator ** 2
    span = -((-4 * k.dot(s, nxt) - bound_quarters(g) * d2) // 4)  # ceil
    return max(1024, 16 * span + 16 * g.num_edges + 256)


def _cap_message(cap: int) -> str:
    return (
        f"no repeat with period 1 or 2 within {cap} steps; every diffusion run "
        "reaches such an orbit, so either this is an implementation bug or the cap is too low"
    )


@dataclass
class _Run:
    report: PeriodReport
    states: list | None = None
    signs: list | None = None
    kernel: object = None


def _simulate(g: MultiGraph, w0: Configuration, cap: int | None, history: bool = False) -> _Run:
    if cap is None:
        cap = default_cap(g, w0)
    k = kernel_for(g, w0.denominator, w0.wide)
    nonfinal = k.nonfinal
    cur = k.state(w0)
    back1 = back2 = None
    x_prev = None
    p_prev = None
    pot_stab = lab_stab = 0
    low = k.minimum(cur) if g.n else 0
    states = [cur] if history else None
    signs = [] if history else None
    t = 0
    while True:
        if back1 is not None and k.same(cur, back1):
            period = 1
            break
        if back2 is not None and k.same(cur, back2):
            period = 2
            break
        if t >= cap:
            raise CapExceeded(_cap_message(cap))
        nxt, x_cur = k.advance(cur)
        p_cur = k.dot(cur, nxt)
        if x_prev is not None:
            # label at t-1 is (x_prev, x_cur); P(t) vs P(t-1)
            if nonfinal(x_prev, x_cur):
                lab_stab = t
            if p_cur < p_prev:
                pot_stab = t
        m = k.minimum(nxt) if g.n else 0
        if m < low:
            low = m
        if history:
            states.append(nxt)
            signs.append(x_cur)
        back2, back1, cur = back1, cur, nxt
        x_prev, p_prev = x_cur, p_cur
        t += 1

    x_last = k.signs(cur)
    if nonfinal(x_prev, x_last):
        lab_stab = t
    if history:
        signs.append(x_last)
    d = w0.denominator
    report = PeriodReport(
        transient=t - period,
        period=period,
        potential_stabilization=pot_stab,
        label_stabilization=lab_stab,
        final_potential=Fraction(p_prev, d * d),
        steps=t,
        min_label=Fraction(low, d),
    )
    return _Run(report, states, signs, k)


def detect_period(g: MultiGraph, w0: Configuration, cap: int | None = None) -> PeriodReport:
    """Run until ``w(t) == w(t-1)`` or ``w(t) == w(t-2)`` and report the orbit.

    Period 1 wins when both hold.  Raises :class:`CapExceeded` after ``cap``
    steps (default :func:`default_cap`).
    """
    return _simulate(g, w0, cap).report


def detect_period_generic(g: MultiGraph, w0: Configuration, cap: int | None = None) -> tuple[int, int]:
    """Return ``(transient, period)`` from the first repeated configuration."""
    if cap is None:
        cap = default_cap(g, w0)
    k = kernel_for(g, w0.denominator, w0.wide)
    seen = {}
    cur = k.state(w0)
    for t in range(cap + 1):
        key = k.key(cur)
        first = seen.get(key)
        if first is not None:
            return first, t - first
        seen[key] = t
        cur, _ = k.advance(cur)
    raise CapExceeded(f"no repeated configuration within {cap} steps; raise the cap")


def _stack(states, wide: bool) -> np.ndarray:
    if wide:
        arr = np.empty((len(states), len(states[0])), dtype=object)
        for i, s in enumerate(states):
            arr[i, :] = list(s)
        return arr
    return np.array([np.asarray(s) for s in states], dtype=np.int64).reshape(len(states), -1)


def _sign_matrix(g: MultiGraph, W: np.ndarray) -> np.ndarray:
    a = W[:, g._src]
    b = W[:, g._dst]
    return (a > b).astype(np.int8) - (a < b).astype(np.int8)


def _row_dots(W: np.ndarray) -> list[int]:
    """Exact ``sum_v W[t, v] * W[t+1, v]`` for each t."""
    if W.dtype != object and W.size:
        big = max(int(W.max()), -int(W.min()))
        if big * big * W.shape[1] <= I64_MAX:
            return (W[:-1] * W[1:]).sum(axis=1).tolist()
    A = W.astype(object)
    return [int(x) for x in (A[:-1] * A[1:]).sum(axis=1)] if W.shape[1] else [0] * (len(W) - 1)


def _row_sums(W: np.ndarray) -> list[int]:
    if W.dtype != object and W.size:
        big = max(int(W.max()), -int(W.min()))
        if big * W.shape[1] <= I64_MAX:
            return W.sum(axis=1).tolist()
    return [sum(int(x) for x in row) for row in W]


def _stabilization(pots: list[int], X: np.ndarray, Y: np.ndarray) -> tuple[int, int]:
    pot_stab = 0
    for t in range(len(pots) - 1, 0, -1):
        if pots[t] < pots[t - 1]:
            pot_stab = t
            break
    bad = np.flatnonzero((X + Y).any(axis=1)) if X.shape[1] else np.empty(0, dtype=int)
    lab_stab = int(bad[-1]) + 1 if len(bad) else 0
    return pot_stab, lab_stab


def _first_true(mask) -> int | None:
    idx = np.flatnonzero(np.asarray(mask, dtype=bool))
    return int(idx[0]) if len(idx) else None


def stabilization_times(trace: Trace) -> tuple[int, int]:
    """Return ``(T, T')`` from a trace that has reached its period-1 or -2 orbit.

    T is the index of the last strict potential decrease (0 if none);
    T' is one past the last time any edge label lies outside
    :data:`FINAL_LABELS` (0 if none).
    """
    cfgs = trace.configurations
    stop = None
    for t in range(1, len(cfgs)):
        if cfgs[t] == cfgs[t - 1] or (t >= 2 and cfgs[t] == cfgs[t - 2]):
            stop = t
            break
    if stop is None:
        raise TraceTooShort("trace never repeats a configuration with period 1 or 2")
    if len(trace.potentials) < stop:
        raise TraceTooShort("trace lacks the potentials up to the start of the orbit")
    d = cfgs[0].denominator
    pots = [int(p * d * d) for p in trace.potentials[:stop]]
    W = _stack([c.numerators.tolist() for c in cfgs[: stop + 1]], cfgs[0].wide)
    S = _sign_matrix(trace.graph, W)
    return _stabilization(pots, S[:-1], S[1:])


def verify_theorem(g: MultiGraph, w0: Configuration, cap: int | None = None) -> VerificationReport:
    """Run to periodicity (plus two steps) and check every step-wise invariant.

    A failed check is reported, never raised.
    """
    run = _simulate(g, w0, cap, history=True)
    rep = run.report
    k = run.kernel
    states = list(run.states)
    for _ in range(2):
        nxt, _ = k.advance(states[-1])
        states.append(nxt)

    d = w0.denominator
    W = _stack(states, w0.wide)
    L = len(W)
    S = _sign_matrix(g, W)
    X, Y = S[:-1], S[1:]  # edge labels at t = 0 .. L-2
    pots = _row_dots(W)  # P(t) * d^2 for t = 0 .. L-2
    floor = lower_bound(g) * d * d
    strict = ((Y != 0) & (X + Y != 0)).any(axis=1) if S.shape[1] else np.zeros(L - 1, bool)
    T, Tp = _stabilization(pots, X, Y)

    checks = []

    def add_check(name, fail_mask, offset=0):
        first = _first_true(fail_mask)
        checks.append(Check(name, first is None, None if first is None else first + offset))

    add_check("monotone_potential", [pots[t + 1] > pots[t] for t in range(L - 2)])
    add_check("potential_lower_bound", [p < floor for p in pots])
    add_check("strict_decrease_labels",
              [bool(strict[t]) and not pots[t + 1] < pots[t] for t in range(L - 2)])
    add_check("label_chaining", (Y[:-1] != X[1:]).any(axis=1) if S.shape[1] else [])

    Xa, Ya = X[T:], Y[T:]
    add_check("labels_confined_after_T", strict[T:], T)
    if S.shape[1] and len(Xa) > 1:
        x0, y0, x1, y1 = Xa[:-1], Ya[:-1], Xa[1:], Ya[1:]
        dies = (y0 == 0) & ~((x1 == 0) & (y1 == 0))
        up = (x0 == -1) & (y0 == 1) & ~((x1 == 1) & (y1 <= 0))
        down = (x0 == 1) & (y0 == -1) & ~((x1 == -1) & (y1 >= 0))
        add_check("transition_rules_after_T", (dies | up | down).any(axis=1), T)
    else:
        add_check("transition_rules_after_T", [])

    Xb, Yb = X[Tp:], Y[Tp:]
    add_check("final_labels_after_T_prime", (Xb + Yb != 0).any(axis=1) if S.shape[1] else [], Tp)
    add_check("two_step_return_after_T_prime",
              [W[t + 2].tolist() != W[t].tolist() for t in range(Tp, L - 2)], Tp)

    t0, p = rep.transient, rep.period
    orbit_ok = (p in (1, 2) and W[t0].tolist() == W[t0 + p].tolist()
                and (p == 1 or W[t0].tolist() != W[t0 + 1].tolist())
                and (t0 == 0 or W[t0 - 1].tolist() != W[t0 - 1 + p].tolist()))
    checks.append(Check("periodic_orbit", orbit_ok, None if orbit_ok else t0))

    sums = _row_sums(W)
    add_check("conservation", [s != sums[0] for s in sums])
    deg = np.array(g.degrees[1:], dtype=object if w0.wide else np.int64) * d
    add_check("step_magnitude", (abs(W[1:] - W[:-1]) > deg).any(axis=1) if g.n else [])

    consistent = (T, Tp) == (rep.potential_stabilization, rep.label_stabilization)
    ordered = T <= Tp <= t0 + p
    checks.append(Check("stabilization_order", consistent and ordered, None if consistent and ordered else Tp))
    return VerificationReport(checks, rep)


def report_record(instance_id: str, g: MultiGraph, rep: PeriodReport, checks_passed: bool | None = None) -> dict:
    """Flat record of a run, in the fixed key order used for line-delimited output."""
    fp = rep.final_potential
    return {
        "instance_id": instance_id,
        "n": g.n,
        "m": g.num_edges,
        "transient": rep.transient,
        "period": rep.period,
        "T": rep.potential_stabilization,
        "T_prime": rep.label_stabilization,
        "final_potential": f"{fp.numerator}/{fp.denominator}",
        "checks_passed": checks_passed,
    }


def dumps_record(record: dict) -> str:
    return json.dumps(record, separators=(", ", ": "))
