"""Dynamic selection of per-pair average-cost targets.

Two schemes drive the targets: an epoch-level gradient-descent rule that
nudges targets up for pairs whose debt queues blew past a threshold during
the epoch (and down for everyone when all queues stayed small), and a
per-slot flow-control rule that snaps each target to 1 or alpha_max depending
on whether the pair's current debt exceeds V.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class GradientDescentConfig:
    epoch_length: int                    # W, slots per epoch
    epochs: int                          # E
    step: float                          # eta > 0
    threshold: float                     # epsilon > 0; unstable iff Q(W) > eps*W
    initial: dict = field(default_factory=dict)   # pair -> starting target
    floor: dict = None                   # pair -> alpha_min; None = f(1) per pair

    def __post_init__(self):
        if self.epoch_length < 1 or self.epochs < 1:
            raise ValueError("epoch_length and epochs must be >= 1")
        if self.step <= 0 or self.threshold <= 0:
            raise ValueError("step and threshold must be > 0")


@dataclass
class FlowControlConfig:
    V: float
    alpha_max: float

    def __post_init__(self):
        if self.V <= 0:
            raise ValueError("V must be > 0")
        if self.alpha_max < 1:
            raise ValueError("alpha_max must be >= 1")


def gd_epoch_update(targets, debt_at_epoch_end, cfg, floor=None):
    """Epoch-boundary target step.

    If any pair's end-of-epoch debt exceeds threshold * W, bump exactly those
    pairs' targets by +step and leave the rest; otherwise lower every target
    by step. Targets are floored at ``floor[pair]`` (0 disables flooring and
    gives the raw rule, which can descend into never-achievable territory).
    """
    w = cfg.epoch_length
    unstable = {pair for pair, q in debt_at_epoch_end.items() if q > cfg.threshold * w}
    out = {}
    for pair, a in targets.items():
        if unstable:
            na = a + cfg.step if pair in unstable else a
        else:
            na = a - cfg.step
        if floor is not None:
            na = max(na, floor.get(pair, 0.0))
        out[pair] = na
    return out


def flow_control_update(debt_now, cfg):
    """Per-slot threshold rule: alpha = alpha_max where Q > V, else 1."""
    return {pair: (cfg.alpha_max if q > cfg.V else 1.0)
            for pair, q in debt_now.items()}


def closed_form_matches_program(debt_now, cfg, grid_points=1000):
    """Check that the threshold rule solves the per-pair boxed linear program
    min (V - Q) * alpha over alpha in [1, alpha_max] (test support).

    The per-pair objective V*alpha - alpha*Q is linear in alpha, so the
    minimum sits at a box corner; a fine grid over the box must not beat the
    rule's choice.
    """
    rule = flow_control_update(debt_now, cfg)
    lo, hi = 1.0, cfg.alpha_max
    step = (hi - lo) / max(grid_points - 1, 1)
    for pair, q in debt_now.items():
        coeff = cfg.V - q
        chosen = coeff * rule[pair]
        best = min(coeff * (lo + step * g) for g in range(grid_points))
        if chosen > best + 1e-12 * max(1.0, abs(best)):
            return False
    return True
