"""Independent reference implementations used by the tests."""

import copy

import numpy as np


def brute_force_coupling(a, b):
    """Minimum cost over every monotone coupling, by explicit enumeration.

    Paths start at (0, 0), end at (n-1, m-1) and move by (1, 1), (0, 1) or
    (1, 0).  The cost is accumulated in path order, like the DP.
    """
    a = np.asarray(a, dtype=float).reshape(len(a), -1)
    b = np.asarray(b, dtype=float).reshape(len(b), -1)
    n, m = len(a), len(b)
    cost = np.linalg.norm(a[:, None] - b[None], axis=2).tolist()
    best = [np.inf]
    count = [0]
    stack = [(0, 0, cost[0][0])]
    while stack:
        i, j, c = stack.pop()
        if i == n - 1 and j == m - 1:
            count[0] += 1
            if c < best[0]:
                best[0] = c
            continue
        for di, dj in ((1, 1), (0, 1), (1, 0)):
            ii, jj = i + di, j + dj
            if ii < n and jj < m:
                stack.append((ii, jj, c + cost[ii][jj]))
    return best[0], count[0]


def delannoy(n, m):
    """Number of monotone lattice paths with diagonal steps."""
    D = np.zeros((n + 1, m + 1), dtype=object)
    D[0, :] = 1
    D[:, 0] = 1
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i, j] = D[i - 1, j] + D[i, j - 1] + D[i - 1, j - 1]
    return int(D[n, m])


VIOLATIONS = ("endpoint", "monotonicity", "duplicate", "range")


def inject_violation(graph, rng, kind=None):
    """Copy of ``graph`` with one broken coupling; returns (graph, kind, segment, row)."""
    g = copy.deepcopy(graph)
    slots = [
        (s, r)
        for s in g.active()
        for r, pairs in enumerate(s.couplings)
        if pairs is not None and len(pairs) >= 3
    ]
    kind = kind or VIOLATIONS[rng.integers(len(VIOLATIONS))]
    s, r = slots[rng.integers(len(slots))]
    pairs = s.couplings[r].copy()
    if kind == "endpoint":
        pairs = pairs[1:] if rng.integers(2) else pairs[:-1]
    elif kind == "monotonicity":
        # swap two consecutive distinct pairs so that the edges cross
        k = int(rng.integers(len(pairs) - 1))
        pairs[[k, k + 1]] = pairs[[k + 1, k]]
    elif kind == "duplicate":
        k = int(rng.integers(len(pairs)))
        pairs = np.insert(pairs, k, pairs[k], axis=0)
    elif kind == "range":
        k = int(rng.integers(len(pairs)))
        pairs[k, int(rng.integers(2))] += 10_000
    s.couplings[r] = pairs
    s.modifiers[r] = np.zeros(len(pairs), dtype=np.int64)
    return g, kind, s.id, r
