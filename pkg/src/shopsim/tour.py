"""Closed-tour planning over a metric cost matrix (MST + minimum-weight
perfect matching on odd-degree vertices + Eulerian shortcutting).

With exact matching the tour cost is at most 1.5x the optimum. Matching is
exact (bitmask dynamic programming) up to 18 odd vertices and greedy
nearest-pair above; the `exact_matching` flag records which path ran.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, Unreachable

EXACT_MATCHING_LIMIT = 18


@dataclass
class Tour:
    """Visit order (a permutation of all indices, starting at the start)."""

    order: list[int]
    closed: bool = True
    exact_matching: bool = True


def tour_cost(costs: np.ndarray, order, closed: bool = True) -> float:
    total = 0.0
    for a, b in zip(order, order[1:]):
        total += float(costs[a, b])
    if closed and len(order) > 1:
        total += float(costs[order[-1], order[0]])
    return total


def _minimum_spanning_tree(costs: np.ndarray) -> list[tuple[int, int]]:
    """Prim's algorithm on the dense matrix; deterministic tie-breaking."""
    n = costs.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, math.inf)
    parent = np.full(n, -1, dtype=int)
    best[0] = 0.0
    edges = []
    for _ in range(n):
        u = -1
        for v in range(n):
            if not in_tree[v] and (u < 0 or best[v] < best[u]):
                u = v
        in_tree[u] = True
        if parent[u] >= 0:
            edges.append((parent[u], u))
        for v in range(n):
            if not in_tree[v] and costs[u, v] < best[v]:
                best[v] = costs[u, v]
                parent[v] = u
    return edges


def _exact_matching(costs: np.ndarray, odd: list[int]) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching by subset dynamic programming."""
    m = len(odd)
    full = (1 << m) - 1
    dp = np.full(1 << m, math.inf)
    choice = np.full(1 << m, -1, dtype=np.int64)
    dp[0] = 0.0
    for mask in range(1, full + 1):
        if bin(mask).count("1") % 2:
            continue
        i = (mask & -mask).bit_length() - 1  # lowest set vertex pairs first
        rest = mask ^ (1 << i)
        j = rest
        while j:
            k = (j & -j).bit_length() - 1
            prev = mask ^ (1 << i) ^ (1 << k)
            cand = dp[prev] + costs[odd[i], odd[k]]
            if cand < dp[mask]:
                dp[mask] = cand
                choice[mask] = k
            j ^= 1 << k
    pairs = []
    mask = full
    while mask:
        i = (mask & -mask).bit_length() - 1
        k = int(choice[mask])
        pairs.append((odd[i], odd[k]))
        mask ^= (1 << i) | (1 << k)
    return pairs


def _greedy_matching(costs: np.ndarray, odd: list[int]) -> list[tuple[int, int]]:
    """Repeatedly pair the cheapest remaining odd vertices."""
    remaining = list(odd)
    pairs = []
    while remaining:
        best = None
        for a in range(len(remaining)):
            for b in range(a + 1, len(remaining)):
                w = costs[remaining[a], remaining[b]]
                if best is None or w < best[0]:
                    best = (w, a, b)
        _, a, b = best
        pairs.append((remaining[a], remaining[b]))
        for idx in sorted((a, b), reverse=True):
            remaining.pop(idx)
    return pairs


def _eulerian_circuit(n: int, edges: list[tuple[int, int]], start: int) -> list[int]:
    """Hierholzer's algorithm on an undirected multigraph."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for ei, (u, v) in enumerate(edges):
        adj[u].append(ei)
        adj[v].append(ei)
    used = [False] * len(edges)
    stack = [start]
    circuit = []
    while stack:
        v = stack[-1]
        while adj[v] and used[adj[v][-1]]:
            adj[v].pop()
        if not adj[v]:
            circuit.append(stack.pop())
        else:
            ei = adj[v].pop()
            used[ei] = True
            u, w = edges[ei]
            stack.append(w if v == u else u)
    circuit.reverse()
    return circuit


def plan_tour(costs: np.ndarray, start_index: int = 0) -> Tour:
    """Closed tour through every index, starting and ending at start_index.

    Costs must be finite between all index pairs (grid shortest-path costs
    are metric enough); infinite required entries raise Unreachable with
    the offending indices.
    """
    costs = np.asarray(costs, dtype=float)
    n = costs.shape[0]
    if costs.shape != (n, n):
        raise ConfigError("cost matrix must be square")
    if not 0 <= start_index < n:
        raise ConfigError(f"start_index {start_index} out of range")
    if n == 1:
        return Tour(order=[start_index])

    off_diag = costs + np.diag([math.inf] * n)
    bad = sorted(set(np.nonzero(~np.isfinite(off_diag) & ~np.eye(n, dtype=bool))[0].tolist()))
    if bad:
        raise Unreachable(bad)

    mst = _minimum_spanning_tree(costs)
    degree = np.zeros(n, dtype=int)
    for u, v in mst:
        degree[u] += 1
        degree[v] += 1
    odd = [int(v) for v in range(n) if degree[v] % 2 == 1]

    exact = len(odd) <= EXACT_MATCHING_LIMIT
    matching = _exact_matching(costs, odd) if exact else _greedy_matching(costs, odd)

    circuit = _eulerian_circuit(n, mst + matching, start_index)
    seen = set()
    order = []
    for v in circuit:
        if v not in seen:
            order.append(v)
            seen.add(v)
    return Tour(order=order, closed=True, exact_matching=exact)
