"""Scenario expansion, experiment execution, and CSV emission.

A sweep expands the config's network section into scenarios (one per star /
line size, one per enumerated graph, or the single inline network), runs
every configured policy for every seed, and writes one CSV row per
(scenario, policy, seed) plus mean / stderr aggregate rows per group.

Column layout is fixed: scenario_id, graph_id, policy, seed, T, sum_cost,
stability_violations, max_QT_over_T, wall_ms, then one cost_k_j column per
source-destination pair seen anywhere in the sweep. wall_ms is written as 0
unless timing is requested, so identical configs and seeds produce
byte-identical files.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import parse_edge, parse_pair
from .costs import CostFunction
from .network import make_instance
from .policies import RandomizedPolicy, optimize_randomized
from .scenarios import broadcast_instance, enumerate_connected_graphs, gen_line, gen_star
from .sim import SimConfig, run, stability_diagnostic
from .targets import FlowControlConfig, GradientDescentConfig

FIXED_COLUMNS = ("scenario_id", "graph_id", "policy", "seed", "T", "sum_cost",
                 "stability_violations", "max_QT_over_T", "wall_ms")


@dataclass
class Scenario:
    scenario_id: str
    graph_id: object          # enumeration index or ""
    instance: object
    cost_fns: dict


def _inline_costs(cost_section, dest_pairs):
    default_spec = cost_section.get("default", {"kind": "linear", "weight": 1.0})
    per_pair = cost_section.get("per_pair", {})
    section_cap = cost_section.get("cap")
    out = {}
    for pair in dest_pairs:
        spec = None
        for key, s in per_pair.items():
            if parse_pair(key) == pair:
                spec = s
                break
        spec = dict(spec if spec is not None else default_spec)
        if section_cap is not None and "cap" not in spec:
            spec["cap"] = section_cap
        out[pair] = CostFunction.from_dict(spec)
    return out


def expand_scenarios(config):
    """Materialize the list of scenarios a config describes."""
    net = config.network
    gen = net.get("generator")
    if gen is None:
        reliability = dict(parse_edge(e) for e in net["edges"])
        flows = config.flows
        if flows == "all-broadcast":
            n = net["nodes"]
            flows = [(s, set(range(1, n + 1)) - {s}) for s in range(1, n + 1)]
        else:
            flows = [(f["source"], set(f["destinations"])) for f in flows]
        inter = config.interference or {}
        instance = make_instance(
            net["nodes"], reliability, flows,
            interference=inter.get("model", "single-transmitter"),
            eligibility=inter.get("eligibility", "any"),
            explicit_actions=inter.get("actions"))
        dest_pairs = [(f.source, j) for f in instance.flows
                      for j in sorted(f.destinations)]
        cost_fns = _inline_costs(config.costs, dest_pairs)
        return [Scenario("inline", "", instance, cost_fns)]

    sizes = net.get("sizes", [net.get("n")])
    out = []
    if gen == "star":
        for n in sizes:
            rng = np.random.default_rng(
                np.random.SeedSequence((net.get("generator_seed", 0), n)))
            instance, cost_fns = gen_star(
                n, weight_rule=net.get("weight_rule", "i-over-n"),
                reliability_rule=net.get("reliability", "uniform"),
                rng=rng, cost_rule=net.get("cost_rule", "weighted-linear"))
            out.append(Scenario(f"star-n{n}", "", instance, cost_fns))
        return out
    if gen == "line":
        inter = net.get("interference", "parity")
        for n in sizes:
            instance, cost_fns = gen_line(n, interference=inter)
            out.append(Scenario(f"line-n{n}-{inter}", "", instance, cost_fns))
        return out
    # graph-enum: all-to-all broadcast on every connected n-node topology
    for n in sizes:
        graphs = enumerate_connected_graphs(n)
        wanted = net.get("graph_ids")
        for gid, edges in enumerate(graphs):
            if wanted is not None and gid not in wanted:
                continue
            instance, cost_fns = broadcast_instance(n, edges)
            out.append(Scenario(f"graphs-n{n}", gid, instance, cost_fns))
    return out


def _parse_targets(raw, dest_pairs):
    if isinstance(raw, (int, float)):
        return float(raw)
    return {parse_pair(k): float(v) for k, v in raw.items()}


def policy_label(pol, idx, seen):
    label = pol.get("label")
    if label is None:
        mode = pol.get("target_mode", "fixed")
        label = pol["name"] if mode == "fixed" else f"{pol['name']}-{mode}"
    if label in seen:
        label = f"{label}#{idx}"
    seen.add(label)
    return label


def build_sim_config(pol, scenario, horizon, seed, sim_section):
    """Translate one config policy entry into a SimConfig for a scenario."""
    name = pol["name"]
    mode = pol.get("target_mode", "fixed")
    params = {}
    targets = None
    fc = None
    gd = None
    dp_params = {}
    if name == "age-debt":
        params["variant"] = pol.get("variant", "auto")
    if name == "max-weight" and "weights" in pol:
        params["weights"] = {int(k): float(v) for k, v in pol["weights"].items()}
    if name == "constant":
        params["action_index"] = pol["action_index"]
    if name == "randomized":
        if "probabilities" in pol:
            params["policy"] = RandomizedPolicy(tuple(pol["probabilities"]))
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence((pol.get("tuning_seed", 0), 0xBE57)))
            params["policy"] = optimize_randomized(
                scenario.instance, scenario.cost_fns,
                search_budget=pol.get("budget", 150), rng=rng,
                horizon=pol.get("tuning_horizon", 2000))
    if name == "dp-table":
        from .dp import dp_optimal
        params["solution"] = dp_optimal(
            scenario.instance, scenario.cost_fns,
            a_cap=pol.get("a_cap", 30), tolerance=pol.get("tolerance", 1e-3))

    if mode == "fixed":
        raw = pol.get("targets", 0.0)
        targets = _parse_targets(raw, None)
    elif mode == "flow-control":
        fc = FlowControlConfig(V=float(pol["V"]), alpha_max=float(pol["alpha_max"]))
    elif mode == "gradient-descent":
        init = pol["initial"]
        if not isinstance(init, (int, float)):
            init = _parse_targets(init, None)
        floor = pol.get("floor")
        if isinstance(floor, dict):
            floor = _parse_targets(floor, None)
        gd = GradientDescentConfig(
            epoch_length=int(pol["epoch_length"]), epochs=int(pol["epochs"]),
            step=float(pol["step"]), threshold=float(pol["threshold"]),
            initial=init, floor=floor)
    elif mode == "oracle-dp":
        dp_params = {"a_cap": pol.get("a_cap", 30),
                     "tolerance": pol.get("tolerance", 1e-3)}

    return SimConfig(
        horizon=horizon, seed=seed, policy=name, policy_params=params,
        target_mode=mode, targets=targets, flow_control=fc,
        gradient_descent=gd, dp_params=dp_params,
        tie_break=pol.get("tie_break", "freshest"),
        use_intermediate_queues=pol.get(
            "use_intermediate_queues",
            sim_section.get("use_intermediate_queues", True)),
        trace_detail=sim_section.get("trace_detail", "metrics-only"))


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _one_row(scenario, label, seed, horizon, cfg, timing):
    t0 = time.perf_counter()
    metrics = run(scenario.instance, scenario.cost_fns, cfg)
    wall_ms = int((time.perf_counter() - t0) * 1000) if timing else 0
    if cfg.target_mode in ("fixed", "oracle-dp") and cfg.policy == "age-debt":
        flags = stability_diagnostic(metrics)
        violations = sum(1 for ok in flags.values() if not ok)
    else:
        violations = ""
    row = {
        "scenario_id": scenario.scenario_id,
        "graph_id": scenario.graph_id,
        "policy": label,
        "seed": seed,
        "T": horizon,
        "sum_cost": metrics.sum_cost,
        "stability_violations": violations,
        "max_QT_over_T": max(metrics.per_pair_debt_rate.values()),
        "wall_ms": wall_ms,
    }
    for pair, c in metrics.per_pair_cost.items():
        row[f"cost_{pair[0]}_{pair[1]}"] = c
    return row, metrics


def _trace_path(out_path, row):
    gid = row["graph_id"]
    tag = f"{row['scenario_id']}{'-g' + str(gid) if gid != '' else ''}" \
          f"-{row['policy']}-s{row['seed']}"
    return f"{out_path}.trace.{tag}.csv"


def _worker(args):
    config, scen_idx, pol_idx, seed, timing = args
    scenario = expand_scenarios(config)[scen_idx]
    seen = set()
    labels = [policy_label(p, i, seen) for i, p in enumerate(config.policies)]
    pol = config.policies[pol_idx]
    horizon = config.sim["horizon"]
    cfg = build_sim_config(pol, scenario, horizon, seed, config.sim)
    row, metrics = _one_row(scenario, labels[pol_idx], seed, horizon, cfg, timing)
    trace = metrics.trace
    return (scen_idx, pol_idx, seed, row, trace)


def run_sweep(config, out_path, jobs=1, timing=False):
    """Execute the sweep and write its CSV; returns the row dicts."""
    scenarios = expand_scenarios(config)
    seeds = config.sim["seeds"]
    horizon = config.sim["horizon"]
    seen = set()
    labels = [policy_label(p, i, seen) for i, p in enumerate(config.policies)]

    tasks = [(s_i, p_i, seed)
             for s_i in range(len(scenarios))
             for p_i in range(len(config.policies))
             for seed in seeds]
    results = {}
    traces = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for (s_i, p_i, seed, row, trace) in pool.map(
                    _worker, [(config, s, p, seed, timing) for (s, p, seed) in tasks]):
                results[(s_i, p_i, seed)] = row
                traces[(s_i, p_i, seed)] = trace
    else:
        cfg_cache = {}
        for (s_i, p_i, seed) in tasks:
            scenario = scenarios[s_i]
            key = (s_i, p_i)
            if key not in cfg_cache:
                cfg_cache[key] = build_sim_config(
                    config.policies[p_i], scenario, horizon, seeds[0], config.sim)
            base = cfg_cache[key]
            cfg = SimConfig(**{**base.__dict__, "seed": seed})
            row, metrics = _one_row(scenario, labels[p_i], seed, horizon, cfg, timing)
            results[(s_i, p_i, seed)] = row
            traces[(s_i, p_i, seed)] = metrics.trace

    rows = []
    cost_cols = set()
    for (s_i, p_i, seed) in tasks:
        cost_cols.update(c for c in results[(s_i, p_i, seed)] if c.startswith("cost_"))
    cost_cols = sorted(cost_cols, key=lambda c: tuple(int(x) for x in c.split("_")[1:]))
    header = list(FIXED_COLUMNS) + cost_cols

    for s_i in range(len(scenarios)):
        for p_i in range(len(config.policies)):
            group = [results[(s_i, p_i, seed)] for seed in seeds]
            rows.extend(group)
            rows.extend(_aggregate(group, cost_cols))

    with open(out_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, restval="")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})

    if config.sim.get("trace_detail") == "full":
        for key, trace in traces.items():
            if trace is None:
                continue
            row = results[key]
            with open(_trace_path(out_path, row), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "pair", "A", "B", "Q", "alpha", "action_index"])
                for (t, pair, a, b, q, alpha, idx) in trace:
                    w.writerow([t, f"{pair[0]}-{pair[1]}", a, f"{b:.10g}",
                                f"{q:.10g}", f"{alpha:.10g}", idx])
    return rows


def _aggregate(group, cost_cols):
    if not group:
        return []
    numeric = ["sum_cost", "max_QT_over_T"] + [c for c in cost_cols if c in group[0]]
    base = {
        "scenario_id": group[0]["scenario_id"],
        "graph_id": group[0]["graph_id"],
        "policy": group[0]["policy"],
        "T": group[0]["T"],
        "stability_violations": "",
        "wall_ms": "",
    }
    mean_row = dict(base, seed="mean")
    err_row = dict(base, seed="stderr")
    n = len(group)
    for col in numeric:
        vals = [row[col] for row in group]
        mu = math.fsum(vals) / n
        mean_row[col] = mu
        if n > 1:
            var = math.fsum((v - mu) ** 2 for v in vals) / (n - 1)
            err_row[col] = math.sqrt(var / n)
        else:
            err_row[col] = 0.0
    return [mean_row, err_row]
