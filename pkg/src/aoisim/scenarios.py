"""Scenario generators and exhaustive small-graph enumeration.

gen_star / gen_line build the stock benchmark instances (sources around a
hub; a unicast chain). enumerate_connected_graphs yields one representative
per isomorphism class of connected graphs on n <= 7 nodes, using the minimum
adjacency bit-string over all vertex permutations as the canonical form.
"""

from __future__ import annotations

import itertools

import numpy as np

from .costs import CostFunction
from .network import make_instance

FUNCTIONS_OF_AGE = ("linear15", "exponential", "square", "cube")


def _cycled_cost(i, cap=None):
    """Cost families cycled over sources: 15*A, e^A, A^2, A^3."""
    kind = FUNCTIONS_OF_AGE[(i - 1) % 4]
    kwargs = {} if cap is None else {"cap": cap}
    if kind == "linear15":
        return CostFunction.linear(15.0, **kwargs)
    if kind == "exponential":
        return CostFunction.exponential(**kwargs)
    if kind == "square":
        return CostFunction.power(2.0, **kwargs)
    return CostFunction.power(3.0, **kwargs)


def gen_star(n, weight_rule="i-over-n", reliability_rule="uniform", rng=None,
             cost_rule="weighted-linear"):
    """Star benchmark: sources 1..n-1 each unicast into hub n, one
    transmitter per slot.

    weight_rule: "i-over-n" (w_i = i/n) or "unit".
    reliability_rule: "uniform" (seeded U[0.6, 1] per link) or "reliable".
    cost_rule: "weighted-linear" (w_i * A) or "functions-of-age"
               (15A, e^A, A^2, A^3 cycled over the sources).

    Returns (instance, cost_fns).
    """
    if n < 2:
        raise ValueError("star needs n >= 2")
    hub = n
    sources = list(range(1, n))
    if reliability_rule == "reliable":
        probs = {s: 1.0 for s in sources}
    elif reliability_rule == "uniform":
        if rng is None:
            rng = np.random.default_rng(0)
        probs = {s: float(rng.uniform(0.6, 1.0)) for s in sources}
    else:
        raise ValueError(f"unknown reliability_rule {reliability_rule!r}")

    reliability = {(s, hub): probs[s] for s in sources}
    flows = [(s, {hub}) for s in sources]
    instance = make_instance(n, reliability, flows,
                             interference="single-transmitter", eligibility="path")

    cost_fns = {}
    for s in sources:
        if cost_rule == "weighted-linear":
            w = s / n if weight_rule == "i-over-n" else 1.0
            cost_fns[(s, hub)] = CostFunction.linear(w)
        elif cost_rule == "functions-of-age":
            cost_fns[(s, hub)] = _cycled_cost(s)
        else:
            raise ValueError(f"unknown cost_rule {cost_rule!r}")
    return instance, cost_fns


def gen_line(n, interference="parity", reliability=1.0):
    """Line benchmark: nodes 1..n in a chain, one unicast flow 1 -> n.

    interference "parity": all odd- or all even-numbered nodes forward right
    in a slot; "single-transmitter": one link at a time.

    Returns (instance, cost_fns) with unit linear cost on the single pair.
    """
    if n < 2:
        raise ValueError("line needs n >= 2")
    if interference not in ("parity", "single-transmitter"):
        raise ValueError(f"unknown line interference {interference!r}")
    rel = {(i, i + 1): float(reliability) for i in range(1, n)}
    instance = make_instance(n, rel, [(1, {n})],
                             interference=interference, eligibility="path")
    cost_fns = {(1, n): CostFunction.linear(1.0)}
    return instance, cost_fns


def broadcast_instance(n, edges, reliability=1.0, weights=None):
    """All-to-all broadcast instance on an explicit topology: every node is a
    broadcast source, one transmitter-edge per slot, linear costs (optionally
    weighted per source)."""
    rel = {e: float(reliability) for e in edges}
    flows = [(s, set(range(1, n + 1)) - {s}) for s in range(1, n + 1)]
    instance = make_instance(n, rel, flows,
                             interference="single-transmitter", eligibility="path")
    cost_fns = {}
    for f in instance.flows:
        w = 1.0 if weights is None else float(weights.get(f.source, 1.0))
        for j in sorted(f.destinations):
            cost_fns[(f.source, j)] = CostFunction.linear(w)
    return instance, cost_fns


def _edge_list(n):
    return list(itertools.combinations(range(n), 2))


def _connected(n, mask, edges):
    adj = [0] * n
    for b, (i, j) in enumerate(edges):
        if mask >> b & 1:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        v = frontier
        while v:
            low = (v & -v).bit_length() - 1
            nxt |= adj[low]
            v &= v - 1
        frontier = nxt & ~seen
        seen |= nxt
    return seen == (1 << n) - 1


def canonical_mask(n, mask, perm_maps=None):
    """Minimum adjacency bit-string over all vertex permutations."""
    edges = _edge_list(n)
    if perm_maps is None:
        perm_maps = _permutation_maps(n)
    bits = [b for b in range(len(edges)) if mask >> b & 1]
    best = None
    for pm in perm_maps:
        m = 0
        for b in bits:
            m |= 1 << pm[b]
        if best is None or m < best:
            best = m
    return best


def _permutation_maps(n):
    """For each vertex permutation, the induced map of edge bit positions."""
    edges = _edge_list(n)
    pos = {e: b for b, e in enumerate(edges)}
    maps = []
    for perm in itertools.permutations(range(n)):
        maps.append([pos[tuple(sorted((perm[i], perm[j])))] for (i, j) in edges])
    return maps


def enumerate_connected_graphs(n):
    """One graph per isomorphism class of connected graphs on n nodes,
    2 <= n <= 7, in deterministic (edge count, canonical form) order.

    Each graph is a sorted tuple of 1-based edges.
    """
    if not (2 <= n <= 7):
        raise ValueError("n out of range: enumeration supports 2..7 nodes")
    edges = _edge_list(n)
    n_bits = len(edges)
    connected_masks = [m for m in range(1 << n_bits) if _connected(n, m, edges)]

    # vectorized canonical form: min over permutations of the remapped mask
    perm_maps = np.array(_permutation_maps(n), dtype=np.int64)   # (n!, bits)
    weights = (np.uint64(1) << perm_maps.astype(np.uint64))      # bit weights
    canon = {}
    chunk = 2048
    masks = np.array(connected_masks, dtype=np.uint64)
    bit_matrix = ((masks[:, None] >> np.arange(n_bits, dtype=np.uint64)) &
                  np.uint64(1)).astype(np.uint64)
    for lo in range(0, len(masks), chunk):
        sub = bit_matrix[lo:lo + chunk]                          # (c, bits)
        remapped = sub @ weights.T                               # (c, n!)
        mins = remapped.min(axis=1)
        for m in mins:
            canon[int(m)] = None
    out = []
    for m in sorted(canon, key=lambda x: (bin(x).count("1"), x)):
        graph = tuple(sorted((i + 1, j + 1) for b, (i, j) in enumerate(edges)
                             if m >> b & 1))
        out.append(graph)
    return out
