"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here touches the package internals: graphs are plain edge lists
and labels are Fractions.
"""

from fractions import Fraction


def multiplicity_matrix(n, edges):
    """Dense 1-indexed multiplicity table from (u, v) / (u, v, m) tuples."""
    mult = [[0] * (n + 1) for _ in range(n + 1)]
    for e in edges:
        u, v = e[0], e[1]
        m = e[2] if len(e) == 3 else 1
        mult[u][v] += m
        mult[v][u] += m
    return mult


def brute_step(n, edges, labels):
    """w_v + (#heavier neighbours) - (#lighter neighbours), counted per parallel edge."""
    mult = multiplicity_matrix(n, edges)
    w = [Fraction(x) for x in labels]
    out = []
    for v in range(1, n + 1):
        gained = sum(mult[u][v] for u in range(1, n + 1) if w[u - 1] > w[v - 1])
        lost = sum(mult[u][v] for u in range(1, n + 1) if w[u - 1] < w[v - 1])
        out.append(w[v - 1] + gained - lost)
    return out


def brute_potential(a, b):
    return sum(Fraction(x) * Fraction(y) for x, y in zip(a, b))


def brute_orbit(n, edges, labels, limit=100_000):
    """(transient, period, history) by scanning the full history list for a repeat."""
    history = [[Fraction(x) for x in labels]]
    for _ in range(limit):
        nxt = brute_step(n, edges, history[-1])
        for i, old in enumerate(history):
            if old == nxt:
                history.append(nxt)
                return i, len(history) - 1 - i, history
        history.append(nxt)
    raise RuntimeError("no repeat within limit")


def brute_min_label(n, edges, labels):
    _, _, history = brute_orbit(n, edges, labels)
    return min(min(w) for w in history)


def sgn(x):
    return (x > 0) - (x < 0)
