"""Deterministic random stream derivation.

Every randomized operation in the package draws from a counter-based Philox
generator keyed by (master seed, purpose-specific spawn key).  The k-th value
of a derived stream is a pure function of (seed, spawn key, k), so results are
identical regardless of chunking or of which graphs are sampled in parallel.

Substream conventions, per graph index g:
    (g, PAIRS)  -- Bernoulli uniforms for node pairs, in i<j lexicographic order
    (g, PARAMS) -- parameter draws (p ~ J) for graph g
    (g, MIX)    -- mixture component choice for graph g
"""

from __future__ import annotations

import numpy as np

PAIRS = 0
PARAMS = 1
MIX = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator for a (seed, spawn-key) pair."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def pair_stream(seed: int, graph_index: int) -> np.random.Generator:
    return stream(seed, graph_index, PAIRS)


def param_stream(seed: int, graph_index: int) -> np.random.Generator:
    return stream(seed, graph_index, PARAMS)


def mix_stream(seed: int, graph_index: int) -> np.random.Generator:
    return stream(seed, graph_index, MIX)
