"""Scheduling and routing policies.

The central object is the exact one-slot drift of the Lyapunov function
L = sum of squared debt queues. For a candidate action, each destination
queue's next value depends on the channel outcome only through the freshest
successful delivery into that destination, so the expectation is computed
exactly by sorting the relevant links by the age they would deliver and
walking the "freshest success" distribution (O(links), no subset
enumeration). Intermediate queues are deterministic given the action when
the relay is forwarding, and otherwise shadow their destination queue's
outcome distribution.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .age import restricted_hop_distance

TIE_BREAKS = ("first", "last", "random", "freshest")


@dataclass
class PolicyDecision:
    """Chosen action plus the full score table (kept for testing)."""

    action_index: int
    action: tuple
    scores: tuple


class DriftEvaluator:
    """Precomputed per-action structure for exact expected drift.

    Built once per (instance, cost set); safe to reuse across slots because
    it only depends on the action space and topology.
    """

    def __init__(self, instance, cost_fns):
        self.instance = instance
        self.cost_fns = cost_fns
        actions = instance.action_space.actions
        tracked = instance.tracked_pairs()
        self.tracked = tracked
        dest_pairs = [(f.source, j) for f in instance.flows for j in sorted(f.destinations)]
        self.dest_pairs = dest_pairs
        # intermediates grouped by their destination pair
        self.intermediates = {pair: [] for pair in dest_pairs}
        for f in instance.flows:
            for j in sorted(f.destinations):
                for i in instance.relays(f):
                    self.intermediates[(f.source, j)].append(i)

        # per action: (k, i) -> [(m, p_edge)] links that can deliver flow k to i
        self.pair_links = []
        # per action: (k, i) -> tuple of directed edges node i sends flow k on
        self.forward_sets = []
        # per action: (k, j, i) -> restricted hop distance (None = unreachable)
        self.case1_h = []
        tracked_set = set(tracked)
        hop_cache = {}
        for action in actions:
            links = {}
            fwd = {}
            for (tx, rx, k) in action:
                if (k, rx) in tracked_set:
                    p = instance.edge_prob(tx, rx)
                    links.setdefault((k, rx), []).append((tx, p))
                fwd.setdefault((tx, k), []).append((tx, rx))
            h_map = {}
            for (i, k), L in fwd.items():
                flow = instance.flow_by_source.get(k)
                if flow is None:
                    continue
                for j in sorted(flow.destinations):
                    if i in self.intermediates.get((k, j), ()):
                        key = (i, j, tuple(sorted(L)))
                        if key not in hop_cache:
                            hop_cache[key] = restricted_hop_distance(
                                instance.adjacency, i, j, L)
                        h_map[(k, j, i)] = hop_cache[key]
            self.pair_links.append(links)
            self.forward_sets.append({ik: tuple(v) for ik, v in fwd.items()})
            self.case1_h.append(h_map)

    def next_age_dist(self, action_idx, pair, age, buffer):
        """Distribution of the pair's next age under the action:
        [(next_age, prob)], prob summing to 1."""
        k, _ = pair
        a_now = age[pair]
        cands = []
        for (m, p) in self.pair_links[action_idx].get(pair, ()):
            if m == k:
                cands.append((0, p))  # fresh stamp at transmission
            elif (m, k) in buffer and (k, m) in age:
                cands.append((age[(k, m)], p))
        if not cands:
            return ((a_now + 1, 1.0),)
        cands.sort()
        out = []
        stay = 1.0
        for (g, p) in cands:
            if g >= a_now:
                break  # delivery cannot beat what the node already has
            out.append((min(a_now, g) + 1, stay * p))
            stay *= 1.0 - p
        out.append((a_now + 1, stay))
        # merge duplicates from tied ages
        merged = {}
        for v, p in out:
            merged[v] = merged.get(v, 0.0) + p
        return tuple(sorted(merged.items()))

    def drift(self, action_idx, debt, age, buffer, targets):
        """Exact E[L(t+1) - L(t)] for the action at the given state."""
        total = 0.0
        case1 = self.case1_h[action_idx]
        fwd = self.forward_sets[action_idx]
        for pair in self.dest_pairs:
            k, j = pair
            f = self.cost_fns[pair]
            alpha = targets[pair]
            dist = self.next_age_dist(action_idx, pair, age, buffer)
            q = debt.dest[pair]
            exp_sq = 0.0
            for (a_next, p) in dist:
                nq = q + f(a_next) - alpha
                if nq > 0.0:
                    exp_sq += p * nq * nq
            total += exp_sq - q * q

            for i in self.intermediates[pair]:
                qi = debt.intermediate.get((k, j, i))
                if qi is None:
                    continue  # run configured with destination-only debt
                h = case1.get((k, j, i))
                if h is not None and (i, k) in buffer and fwd.get((i, k)):
                    nq = qi + f(min(age[(k, i)], age[pair]) + h) - alpha
                    total += (nq * nq if nq > 0.0 else 0.0) - qi * qi
                else:
                    exp_sq = 0.0
                    for (a_next, p) in dist:
                        nq = qi + f(a_next) - alpha
                        if nq > 0.0:
                            exp_sq += p * nq * nq
                    total += exp_sq - qi * qi
        return total

    def expected_age_sum(self, action_idx, age, buffer):
        """E[sum of all tracked ages next slot]; the freshness tie-breaker."""
        total = 0.0
        for pair in self.tracked:
            dist = self.next_age_dist(action_idx, pair, age, buffer)
            for (a_next, p) in dist:
                total += p * a_next
        return total


def get_drift_evaluator(instance, cost_fns):
    key = tuple(sorted((pair, cf) for pair, cf in cost_fns.items()))
    cache = instance._drift_cache
    if cache is None or cache[0] != key:
        instance._drift_cache = (key, DriftEvaluator(instance, cost_fns))
    return instance._drift_cache[1]


def expected_drift(action, debt, age, buffer, targets, cost_fns, instance):
    """Exact expected one-slot Lyapunov drift of ``action`` (member of the
    instance's action space, given as tuple or index)."""
    ev = get_drift_evaluator(instance, cost_fns)
    idx = action if isinstance(action, int) else instance.action_space.index[action]
    return ev.drift(idx, debt, age, buffer, targets)


def age_debt_action(debt, age, buffer, targets, cost_fns, instance,
                    tie_break="first", rng=None, evaluator=None):
    """Drift-minimizing action: argmin over the whole action space.

    Tie-breaking among exact co-minimizers:
      first    -- lowest action index
      last     -- highest action index
      random   -- uniform among co-minimizers (needs rng)
      freshest -- the co-minimizer with the lowest expected total tracked
                  age next slot (then lowest index). Pure index rules can
                  deadlock multihop cold starts, where no single-slot action
                  moves any queue; this one pushes fresh packets downstream.
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"unknown tie_break {tie_break!r}")
    ev = evaluator if evaluator is not None else get_drift_evaluator(instance, cost_fns)
    scores = [ev.drift(i, debt, age, buffer, targets)
              for i in range(len(instance.action_space))]
    best = min(scores)
    ties = [i for i, s in enumerate(scores) if s == best]
    if len(ties) == 1 or tie_break == "first":
        idx = ties[0]
    elif tie_break == "last":
        idx = ties[-1]
    elif tie_break == "random":
        if rng is None:
            raise ValueError("random tie-break needs an rng")
        idx = ties[int(rng.integers(len(ties)))]
    else:  # freshest
        sec = [(ev.expected_age_sum(i, age, buffer), i) for i in ties]
        idx = min(sec)[1]
    return PolicyDecision(idx, instance.action_space[idx], tuple(scores))


def single_hop_age_debt_action(ages, debts, reliabilities, cost_fns):
    """Closed-form drift bound minimizer for a single-hop star.

    Sequences are aligned over the sources; returns the 0-based position of
    argmax p_i * Q_i * (f_i(A_i + 1) - f_i(1)), lowest index on ties.
    """
    best_i = 0
    best_s = None
    for i, (a, q, p, f) in enumerate(zip(ages, debts, reliabilities, cost_fns)):
        s = p * q * (f(a + 1) - f(1))
        if best_s is None or s > best_s:
            best_s = s
            best_i = i
    return best_i


def max_weight_action(ages, reliabilities, weights):
    """Single-hop max-weight baseline: argmax p_i * w_i * A_i * (A_i + 2)."""
    best_i = 0
    best_s = None
    for i, (a, p, w) in enumerate(zip(ages, reliabilities, weights)):
        s = p * w * a * (a + 2)
        if best_s is None or s > best_s:
            best_s = s
            best_i = i
    return best_i


@dataclass
class RandomizedPolicy:
    """Stationary distribution over the action space, sampled i.i.d."""

    probabilities: tuple
    actions: tuple = None
    tuned_cost: float = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0):
            raise ValueError("negative probability")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        self.probabilities = tuple(float(x) for x in p)
        cum = np.cumsum(p)
        cum[-1] = 1.0
        self._cum = cum.tolist()

    def sample_index(self, rng):
        # inverse CDF on a scalar draw; rng.choice would rebuild its alias
        # tables every slot
        idx = bisect.bisect_right(self._cum, rng.random())
        n = len(self.probabilities)
        return idx if idx < n else n - 1


def randomized_action(policy, rng):
    """One i.i.d. draw from the policy; the Action when the policy carries
    the action list, else the index."""
    idx = policy.sample_index(rng)
    return policy.actions[idx] if policy.actions is not None else idx


def _project_simplex(v):
    v = np.maximum(v, 0.0)
    s = v.sum()
    if s <= 0:
        v = np.ones_like(v)
        s = v.sum()
    return v / s


def optimize_randomized(instance, cost_fns, search_budget=200, rng=None,
                        horizon=2000, seeds=(0, 1)):
    """Tune a stationary randomized policy by direct search on simulated cost.

    Seeds the search with point masses and uniform mixtures, then spends the
    budget on Dirichlet samples followed by coordinate perturbations around
    the incumbent. Reproducible for a fixed rng seed. Returns the best
    policy found, with its achieved average cost in ``tuned_cost``.
    """
    from .sim import SimConfig, run  # local import; sim depends on this module

    if rng is None:
        rng = np.random.default_rng(0)
    n = len(instance.action_space)
    evals = 0

    def objective(probs):
        nonlocal evals
        evals += 1
        pol = RandomizedPolicy(tuple(probs), actions=tuple(instance.action_space.actions))
        costs = []
        for s in seeds:
            cfg = SimConfig(horizon=horizon, seed=s, policy="randomized",
                            policy_params={"policy": pol})
            costs.append(run(instance, cost_fns, cfg).sum_cost)
        return sum(costs) / len(costs)

    candidates = [np.full(n, 1.0 / n)]
    if n > 1:
        u = np.zeros(n)
        u[1:] = 1.0 / (n - 1)
        candidates.append(u)  # uniform over non-idle
        for i in range(1, n):
            e = np.zeros(n)
            e[i] = 1.0
            candidates.append(e)

    best_p, best_c = None, None
    for p in candidates:
        if best_p is not None and evals >= search_budget:
            break
        c = objective(p)
        if best_c is None or c < best_c:
            best_p, best_c = p, c

    while evals < search_budget // 2:
        p = _project_simplex(rng.dirichlet(np.ones(n)))
        c = objective(p)
        if c < best_c:
            best_p, best_c = p, c

    deltas = (0.2, 0.1, 0.05, 0.02)
    di = 0
    while evals < search_budget:
        improved = False
        delta = deltas[min(di, len(deltas) - 1)]
        for i in range(n):
            if evals >= search_budget:
                break
            for sign in (1.0, -1.0):
                if evals >= search_budget:
                    break
                p = best_p.copy()
                p[i] += sign * delta
                p = _project_simplex(p)
                if np.allclose(p, best_p):
                    continue
                c = objective(p)
                if c < best_c:
                    best_p, best_c = p, c
                    improved = True
        if not improved:
            di += 1
            if di >= len(deltas):
                break
    return RandomizedPolicy(tuple(best_p), actions=tuple(instance.action_space.actions),
                            tuned_cost=best_c)
