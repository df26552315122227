"""Per-edge Bernoulli channel processes.

Each edge gets its own counter-based random stream (Philox keyed by (run
seed, edge index)), so the success bit of edge e at slot t is a pure function
of (seed, e, t). Policies can consume as much or as little randomness as they
like without perturbing the channel sequence, which keeps policy comparisons
on common random numbers.
"""

from __future__ import annotations

import numpy as np

_CHANNEL_TAG = 0xC4A77E1  # domain separator vs. policy streams

# Philox.advance counts 4x64-bit counter steps; one step yields 4 doubles.
_BLOCK = 4096


def _edge_key(seed, edge_idx):
    ss = np.random.SeedSequence((int(seed) & (2 ** 64 - 1), _CHANNEL_TAG, edge_idx))
    return ss.generate_state(2, np.uint64)


class ChannelProcess:
    """Random-access success bits for every edge of an instance."""

    def __init__(self, instance, seed):
        self.instance = instance
        self.seed = int(seed)
        self.n_edges = len(instance.edges)
        self._keys = [_edge_key(seed, i) for i in range(self.n_edges)]
        self._probs = np.array([instance.reliability[e] for e in instance.edges])
        self._block_start = -1
        self._block = None

    def _load_block(self, start):
        draws = np.empty((_BLOCK, self.n_edges))
        for i, key in enumerate(self._keys):
            bg = np.random.Philox(key=key)
            bg.advance(start // 4)
            draws[:, i] = np.random.Generator(bg).random(_BLOCK)
        self._block = draws < self._probs
        self._block_start = start

    def slot(self, t):
        """Boolean success vector for slot t, indexed like instance.edges."""
        if t < 0:
            raise ValueError("slot must be >= 0")
        start = (t // _BLOCK) * _BLOCK
        if start != self._block_start:
            self._load_block(start)
        return self._block[t - start]


def sample_channels(instance, seed, t):
    """Success bit per edge at slot t: {edge: bool}.

    Stateless form of ChannelProcess: the same (instance, seed, t) always
    yields the same draw.
    """
    bits = ChannelProcess(instance, seed).slot(t)
    return {e: bool(bits[i]) for i, e in enumerate(instance.edges)}
