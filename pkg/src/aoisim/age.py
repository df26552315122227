"""Age processes, packet buffers, and the virtual debt queue machinery.

State layout (plain dicts, owned by one simulation run):

  age     (flow, node) -> integer age of the node's information about the
                          flow's source, tracked for destinations and relays
  buffer  (node, flow) -> generation timestamp of the freshest packet of the
                          flow held at the node (absent if never received)
  debt    DebtState with destination queues (flow, dest) and intermediate
          queues (flow, dest, relay)

Ages advance once per slot: +1 without a delivery, min(age, t - t_g) + 1 when
a packet generated at t_g arrives at slot t. Debt queues accumulate the
positive part of (cost of next age - target) and never go negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .network import bfs_distances


@dataclass
class DebtState:
    """Destination and intermediate virtual queues, all starting at zero."""

    dest: dict = field(default_factory=dict)          # (k, j) -> Q >= 0
    intermediate: dict = field(default_factory=dict)  # (k, j, i) -> Q >= 0

    def copy(self):
        return DebtState(dict(self.dest), dict(self.intermediate))

    def total(self):
        return sum(self.dest.values()) + sum(self.intermediate.values())


def initial_age(tracked_pairs):
    """Everyone starts one slot old; the post-delivery minimum."""
    return {pair: 1 for pair in tracked_pairs}


def initial_buffer(flows):
    """Sources hold a (never transmitted) packet stamped just before t=0."""
    return {(f.source, f.source): -1 for f in flows}


def initial_debt(instance):
    debt = DebtState()
    for f in instance.flows:
        relays = instance.relays(f)
        for j in sorted(f.destinations):
            debt.dest[(f.source, j)] = 0.0
            for i in relays:
                debt.intermediate[(f.source, j, i)] = 0.0
    return debt


def advance_age(age, buffer, deliveries, t):
    """One slot of age evolution.

    ``deliveries`` is an iterable of (flow, node, t_g): packets that
    physically arrived during slot t. Returns the new age map; ``buffer`` is
    updated in place, keeping only the freshest timestamp per (node, flow).
    """
    best = {}
    for (k, j, t_g) in deliveries:
        if t_g > t:
            raise ValueError(f"causality violation: delivery ({k},{j}) generated at "
                             f"{t_g} > current slot {t}")
        cur = best.get((k, j))
        if cur is None or t_g > cur:
            best[(k, j)] = t_g
    nxt = {}
    for pair, a in age.items():
        t_g = best.get(pair)
        if t_g is None:
            nxt[pair] = a + 1
        else:
            nxt[pair] = min(a, t - t_g) + 1
    for (k, j), t_g in best.items():
        key = (j, k)
        if buffer.get(key, -(10 ** 18)) < t_g:
            buffer[key] = t_g
    return nxt


def update_destination_debt(debt, cost_fns, age_next, targets):
    """Q_kj <- [Q_kj + f_kj(next age) - alpha_kj]^+ for every pair."""
    dest = debt.dest
    for pair in dest:
        q = dest[pair] + cost_fns[pair](age_next[pair]) - targets[pair]
        dest[pair] = q if q > 0.0 else 0.0
    return debt


def restricted_hop_distance(adjacency, i, j, first_hops):
    """Fewest hops from i to j when the first hop must use an edge in
    ``first_hops`` (directed edges out of i); later hops are unrestricted.

    Walks may revisit nodes, so the answer is 1 + the plain hop distance from
    the best allowed first-hop head. Returns None when no such walk exists.
    """
    best = None
    for (tx, rx) in first_hops:
        if tx != i:
            raise ValueError(f"first-hop edge ({tx},{rx}) does not leave node {i}")
        if rx == j:
            return 1
        d = bfs_distances(adjacency, rx).get(j)
        if d is not None and (best is None or d + 1 < best):
            best = d + 1
    return best


def forwarding_sets(action):
    """(node, flow) -> list of directed edges the node sends that flow on."""
    out = {}
    for (tx, rx, k) in action:
        out.setdefault((tx, k), []).append((tx, rx))
    return out


def update_intermediate_debt(debt, age, buffer, action, targets, cost_fns,
                             age_next, adjacency, hop_lookup=None):
    """Advance every intermediate queue one slot.

    When relay i actually forwarded a flow-k packet this slot (it was
    assigned outgoing flow-k edges L and held a packet), the queue charges
    the most optimistic deliverable cost: f(min(relay age, dest age) + h)
    with h the L-restricted hop distance, using pre-slot ages. Otherwise the
    queue shadows the destination's realized cost f(next dest age).

    A forwarding assignment with no packet on board is a no-op on the wire
    and falls into the shadowing case, as does an L that cannot reach the
    destination at all (counted in the returned fallback tally).

    ``hop_lookup(i, j, L) -> h or None`` may be supplied to cache distances.
    """
    unreachable = 0
    forwards = forwarding_sets(action)
    for (k, j, i), q in debt.intermediate.items():
        links = forwards.get((i, k))
        term = None
        if links and (i, k) in buffer:
            if hop_lookup is not None:
                h = hop_lookup(i, j, tuple(links))
            else:
                h = restricted_hop_distance(adjacency, i, j, links)
            if h is None:
                unreachable += 1
            else:
                term = cost_fns[(k, j)](min(age[(k, i)], age[(k, j)]) + h)
        if term is None:
            term = cost_fns[(k, j)](age_next[(k, j)])
        nq = q + term - targets[(k, j)]
        debt.intermediate[(k, j, i)] = nq if nq > 0.0 else 0.0
    return debt, unreachable


def lyapunov(debt):
    """Sum of squares of every destination and intermediate queue."""
    total = 0.0
    for q in debt.dest.values():
        total += q * q
    for q in debt.intermediate.values():
        total += q * q
    return total
