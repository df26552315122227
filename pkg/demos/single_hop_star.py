"""Weighted-sum age minimization on single-hop stars.

Sources 1..N-1 push updates to a hub over unreliable links (success
probabilities drawn from U[0.6, 1]); node i carries weight i/N. We compare:

  * max-weight scheduling (serves argmax p * w * A * (A + 2)),
  * age-debt given max-weight's measured averages as its targets,
  * age-debt with per-slot flow-control targets (no prior knowledge).

Expected picture: age-debt replicates max-weight when handed its averages,
and flow control lands within a few percent without any targets.
"""

import numpy as np

from aoisim import FlowControlConfig, SimConfig, gen_star, run

HORIZON = 30_000
SEED = 0

print(f"{'N':>3} {'max-weight':>11} {'age-debt':>9} {'flow-ctrl':>10} "
      f"{'ad/mw':>6} {'fc/mw':>6}")
for n in range(3, 11):
    rng = np.random.default_rng(np.random.SeedSequence((0, n)))
    instance, cost_fns = gen_star(n, rng=rng)

    mw = run(instance, cost_fns,
             SimConfig(horizon=HORIZON, seed=SEED, policy="max-weight"))

    # hand max-weight's realized per-pair averages to age-debt as targets
    ad = run(instance, cost_fns,
             SimConfig(horizon=HORIZON, seed=SEED, policy="age-debt",
                       targets=dict(mw.per_pair_cost)))

    fc = run(instance, cost_fns,
             SimConfig(horizon=HORIZON, seed=SEED, policy="age-debt",
                       target_mode="flow-control",
                       flow_control=FlowControlConfig(V=10.0, alpha_max=50.0)))

    print(f"{n:>3} {mw.sum_cost:>11.3f} {ad.sum_cost:>9.3f} "
          f"{fc.sum_cost:>10.3f} {ad.sum_cost / mw.sum_cost:>6.3f} "
          f"{fc.sum_cost / mw.sum_cost:>6.3f}")
