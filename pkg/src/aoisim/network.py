"""Static network description.

A network instance bundles the topology (an undirected simple graph on nodes
1..N), per-edge delivery probabilities, the flows (source plus destination
set), and the explicit action space: the finite list of interference-free
(directed edge, flow) assignment sets a scheduler may pick from in one slot.

Actions are plain tuples of ``(tx, rx, flow)`` triples, sorted ascending, so
they hash, compare, and order deterministically. The empty tuple is the idle
action.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

# (tx, rx, flow) - node tx sends a packet of `flow` to its neighbor rx.
Assignment = tuple
Action = tuple

IDLE_ACTION: Action = ()

DEFAULT_ACTION_CAP = 10 ** 6

INTERFERENCE_MODELS = ("explicit", "single-transmitter", "matching", "parity")


class ActionSpaceError(ValueError):
    """Raised when an enumerated action space would exceed the size cap."""


def canon_edge(i, j):
    """Undirected edge as an ordered pair."""
    if i == j:
        raise ValueError(f"self-loop at node {i}")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Flow:
    """One flow: a source node streaming updates to a set of destinations.

    Flows are identified by their source node; two flows never share a
    source. ``kind`` is one of unicast / multicast / broadcast and must be
    consistent with the destination set (see classify_flow).
    """

    source: int
    destinations: frozenset
    kind: str

    def pairs(self):
        """Cost-bearing (source, destination) pairs, destination-sorted."""
        return [(self.source, j) for j in sorted(self.destinations)]


def classify_flow(source, destinations, node_count):
    if len(destinations) == 1:
        return "unicast"
    if len(destinations) == node_count - 1:
        return "broadcast"
    return "multicast"


def make_flow(source, destinations, node_count):
    dests = frozenset(destinations)
    if not dests:
        raise ValueError(f"flow {source} has no destinations")
    if source in dests:
        raise ValueError(f"flow {source}: source in destination set")
    return Flow(source, dests, classify_flow(source, dests, node_count))


@dataclass
class ActionSpace:
    """Explicit, ordered list of feasible actions. Index 0 is always idle."""

    actions: list
    index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.index = {a: i for i, a in enumerate(self.actions)}

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __getitem__(self, i):
        return self.actions[i]


@dataclass
class NetworkInstance:
    """Immutable-after-construction description of one network.

    Safe to share read-only across parallel runs; the simulation engine never
    mutates it (policy evaluators attach a private cache, built once).
    """

    node_count: int
    edges: tuple                 # canonical (i, j) pairs, i < j, sorted
    reliability: dict            # edge -> delivery probability in (0, 1]
    flows: tuple                 # Flow, sorted by source
    action_space: ActionSpace

    def __post_init__(self):
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        self.adjacency = adjacency_map(self.node_count, self.edges)
        self.flow_by_source = {f.source: f for f in self.flows}
        self._drift_cache = None

    def edge_prob(self, i, j):
        return self.reliability[canon_edge(i, j)]

    def relays(self, flow):
        """Nodes that can ever hold a packet of ``flow``: reachable from the
        source through directed edges that carry the flow in some action,
        minus the source and the flow's destinations.

        A node outside this set would keep an intermediate debt queue whose
        trajectory duplicates the destination queue exactly (it can never
        forward), so we do not track queues there.
        """
        outgoing = {}
        for action in self.action_space:
            for (tx, rx, k) in action:
                if k == flow.source:
                    outgoing.setdefault(tx, set()).add(rx)
        seen = {flow.source}
        frontier = deque([flow.source])
        while frontier:
            u = frontier.popleft()
            for v in outgoing.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return sorted(seen - flow.destinations - {flow.source})

    def tracked_pairs(self):
        """All (flow source, node) age processes the simulator maintains:
        every destination plus every relay node of each flow."""
        pairs = []
        for f in self.flows:
            for j in sorted(f.destinations):
                pairs.append((f.source, j))
            for i in self.relays(f):
                pairs.append((f.source, i))
        return pairs


def adjacency_map(node_count, edges):
    adj = {v: [] for v in range(1, node_count + 1)}
    for (i, j) in edges:
        adj[i].append(j)
        adj[j].append(i)
    for v in adj:
        adj[v].sort()
    return adj


def bfs_distances(adjacency, start):
    """Hop distances from ``start``; unreachable nodes are absent."""
    dist = {start: 0}
    frontier = deque([start])
    while frontier:
        u = frontier.popleft()
        for v in adjacency[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                frontier.append(v)
    return dist


def _eligible_flows(node_count, edges, flows, eligibility):
    """Map directed edge (tx, rx) -> tuple of flow ids assignable to it.

    "any": every flow may ride every directed edge (the scheduler may still
    never find that useful). "path": only flows for which the directed edge
    lies on a shortest path from the flow's source to one of its
    destinations; this is the pruning lever that keeps enumerated spaces
    small on stars and lines.
    """
    adj = adjacency_map(node_count, edges)
    directed = [(i, j) for (i, j) in edges] + [(j, i) for (i, j) in edges]
    directed.sort()
    out = {}
    if eligibility == "any":
        all_flows = tuple(f.source for f in flows)
        return {de: all_flows for de in directed}
    if eligibility != "path":
        raise ValueError(f"unknown eligibility rule {eligibility!r}")
    dist_from = {}
    for f in flows:
        dist_from[f.source] = bfs_distances(adj, f.source)
    dist_to = {}
    needed = {j for f in flows for j in f.destinations}
    for j in needed:
        dist_to[j] = bfs_distances(adj, j)
    for (tx, rx) in directed:
        keep = []
        for f in flows:
            ds = dist_from[f.source]
            if tx not in ds:
                continue
            for j in f.destinations:
                dt = dist_to[j]
                if rx in dt and tx in dt and ds[tx] + 1 + dt[rx] == ds.get(j, -1):
                    keep.append(f.source)
                    break
        out[(tx, rx)] = tuple(keep)
    return out


def _is_line(node_count, edges):
    expected = tuple(sorted((i, i + 1) for i in range(1, node_count)))
    return tuple(sorted(edges)) == expected


def build_action_space(node_count, edges, flows, model,
                       eligibility="any", explicit_actions=None,
                       cap=DEFAULT_ACTION_CAP):
    """Enumerate the feasible action set for one of the interference models.

    explicit            -- take ``explicit_actions`` as given (idle is added
                           if missing); each action is validated.
    single-transmitter  -- exactly one directed edge active per slot.
    matching            -- active edges form a matching (node-exclusive
                           interference); every direction/flow combination of
                           every matching is an action.
    parity              -- line networks only: all odd-numbered or all
                           even-numbered nodes forward one hop to the right.

    Actions come back sorted (idle first, then lexicographic by assignment),
    so identical inputs always produce the identical ordered list.
    """
    edges = tuple(sorted(canon_edge(i, j) for (i, j) in edges))
    eligible = _eligible_flows(node_count, edges, flows, eligibility)

    if model == "explicit":
        if explicit_actions is None:
            raise ValueError("explicit interference model needs an action list")
        acts = set()
        for action in explicit_actions:
            action = tuple(sorted(tuple(a) for a in action))
            errs = validate_action(action, edges, {f.source for f in flows})
            if errs:
                raise ValueError(f"invalid action {action}: " + "; ".join(errs))
            acts.add(action)
        acts.add(IDLE_ACTION)
        actions = sorted(acts)
    elif model == "single-transmitter":
        actions = [IDLE_ACTION]
        for (tx, rx) in sorted(eligible):
            for k in eligible[(tx, rx)]:
                actions.append(((tx, rx, k),))
    elif model == "matching":
        actions = _enumerate_matchings(edges, eligible, cap)
    elif model == "parity":
        if not _is_line(node_count, edges):
            raise ValueError("parity interference is defined for line networks only")
        actions = [IDLE_ACTION]
        for start in (1, 2):  # odd senders, then even senders
            senders = [i for i in range(start, node_count, 2)]
            assigns = []
            for i in senders:
                ks = eligible.get((i, i + 1), ())
                if ks:
                    assigns.append((i, i + 1, ks[0]))
            if assigns:
                actions.append(tuple(sorted(assigns)))
        actions = sorted(set(actions))
    else:
        raise ValueError(f"unknown interference model {model!r}")

    if len(actions) > cap:
        raise ActionSpaceError(
            f"instance too large for enumerative scheduling: "
            f"{len(actions)} actions exceed the cap of {cap}")
    return ActionSpace(actions)


def _enumerate_matchings(edges, eligible, cap):
    """All (direction, flow)-labeled matchings, idle included."""
    actions = [IDLE_ACTION]
    n_edges = len(edges)

    def extend(start, used_nodes, chosen):
        if len(actions) > cap:
            raise ActionSpaceError(
                f"instance too large for enumerative scheduling: more than "
                f"{cap} actions under the matching model")
        for idx in range(start, n_edges):
            (i, j) = edges[idx]
            if i in used_nodes or j in used_nodes:
                continue
            for (tx, rx) in ((i, j), (j, i)):
                for k in eligible[(tx, rx)]:
                    nxt = chosen + [(tx, rx, k)]
                    actions.append(tuple(sorted(nxt)))
                    extend(idx + 1, used_nodes | {i, j}, nxt)

    extend(0, set(), [])
    return sorted(set(actions))


def validate_action(action, edges, flow_ids):
    """All violations of the per-action invariants (empty list when fine)."""
    errors = []
    seen_edges = set()
    edge_set = set(edges)
    for (tx, rx, k) in action:
        e = (tx, rx) if tx < rx else (rx, tx)
        if tx == rx:
            errors.append(f"self-loop assignment at node {tx}")
            continue
        if e not in edge_set:
            errors.append(f"assignment uses non-edge {tx}-{rx}")
        if e in seen_edges:
            errors.append(f"edge {e[0]}-{e[1]} assigned more than once")
        seen_edges.add(e)
        if k not in flow_ids:
            errors.append(f"assignment references unknown flow {k}")
    return errors


def make_instance(node_count, reliability, flows, interference="single-transmitter",
                  eligibility="any", explicit_actions=None, cap=DEFAULT_ACTION_CAP):
    """Assemble and validate a NetworkInstance.

    ``reliability`` maps undirected edges to delivery probabilities;
    ``flows`` is a list of (source, destinations) pairs or Flow objects.
    """
    rel = {canon_edge(i, j): float(p) for (i, j), p in reliability.items()}
    edges = tuple(sorted(rel))
    flow_objs = []
    for f in flows:
        if isinstance(f, Flow):
            flow_objs.append(f)
        else:
            source, dests = f
            flow_objs.append(make_flow(source, dests, node_count))
    flow_objs.sort(key=lambda f: f.source)
    space = build_action_space(node_count, edges, flow_objs, interference,
                               eligibility=eligibility,
                               explicit_actions=explicit_actions, cap=cap)
    inst = NetworkInstance(node_count, edges, rel, tuple(flow_objs), space)
    errors = validate_instance(inst)
    if errors:
        raise ValueError("invalid instance: " + "; ".join(errors))
    return inst


def validate_instance(instance):
    """Diagnostic check of every instance invariant; returns all violations."""
    errors = []
    n = instance.node_count
    if n < 2:
        errors.append("node_count must be >= 2")
    seen = set()
    for (i, j) in instance.edges:
        if not (1 <= i <= n and 1 <= j <= n):
            errors.append(f"edge {i}-{j} references unknown node")
        if i == j:
            errors.append(f"self-loop at node {i}")
        if i > j:
            errors.append(f"edge {i}-{j} not in canonical order")
        if (i, j) in seen:
            errors.append(f"duplicate edge {i}-{j}")
        seen.add((i, j))
        p = instance.reliability.get((i, j))
        if p is None or not (0.0 < p <= 1.0):
            errors.append(f"reliability out of range on edge {i}-{j}: {p}")

    if not (1 <= len(instance.flows) <= n):
        errors.append(f"flow count {len(instance.flows)} outside 1..{n}")
    sources = [f.source for f in instance.flows]
    if len(set(sources)) != len(sources):
        errors.append("flow source identifiers are not distinct")

    adj = adjacency_map(n, [e for e in instance.edges if e[0] != e[1]])
    for f in instance.flows:
        if not (1 <= f.source <= n):
            errors.append(f"flow {f.source}: source is not a node")
            continue
        if f.source in f.destinations:
            errors.append(f"flow {f.source}: source in destination set")
        if not f.destinations:
            errors.append(f"flow {f.source}: empty destination set")
        expected = classify_flow(f.source, f.destinations, n)
        if f.kind != expected:
            errors.append(f"flow {f.source}: kind {f.kind!r} but destinations imply {expected!r}")
        dist = bfs_distances(adj, f.source)
        for j in sorted(f.destinations):
            if not (1 <= j <= n):
                errors.append(f"flow {f.source}: destination {j} is not a node")
            elif j not in dist:
                errors.append(f"flow {f.source}: destination {j} unreachable from source")

    flow_ids = {f.source for f in instance.flows}
    if IDLE_ACTION not in instance.action_space.index:
        errors.append("action space is missing the idle action")
    for a in instance.action_space:
        errors.extend(validate_action(a, instance.edges, flow_ids))
    return errors
