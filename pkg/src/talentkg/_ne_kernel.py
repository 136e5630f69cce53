"""Numba kernel for the neighbor-embedding layout optimizer.

Sequential (non-parallel) on purpose: the epoch loop must be bit-for-bit
reproducible for a given seed, including the inlined xorshift RNG used for
negative sampling.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(inline="always")
def _xorshift(state):
    # Marsaglia xorwow-style mix over three 64-bit words
    state[0] ^= state[0] << 16
    state[0] ^= state[0] >> 5
    state[0] ^= state[0] << 1
    t = state[0]
    state[0] = state[1]
    state[1] = state[2]
    state[2] = t ^ state[0] ^ state[1]
    return state[2]


@numba.njit(inline="always")
def _clip(val):
    if val > 4.0:
        return 4.0
    if val < -4.0:
        return -4.0
    return val


@numba.njit(cache=True)
def optimize_layout(
    emb,
    heads,
    tails,
    epochs_per_sample,
    n_epochs,
    a,
    b,
    rng_state,
    gamma,
    initial_alpha,
    negative_sample_rate,
):
    """Attraction-repulsion SGD over the fuzzy neighbor graph edges.

    emb is modified in place: (n, 2) float32. heads/tails are the edge
    endpoints (undirected, each edge stored once, both ends move).
    """
    n_vertices = emb.shape[0]
    n_edges = heads.shape[0]
    epoch_of_next_sample = epochs_per_sample.copy()
    epochs_per_negative = epochs_per_sample / negative_sample_rate
    epoch_of_next_negative = epochs_per_negative.copy()

    for epoch in range(n_epochs):
        alpha = initial_alpha * (1.0 - epoch / n_epochs)
        for e in range(n_edges):
            if epoch_of_next_sample[e] > epoch:
                continue
            i = heads[e]
            j = tails[e]
            dx = np.float64(emb[i, 0] - emb[j, 0])
            dy = np.float64(emb[i, 1] - emb[j, 1])
            dist_sq = dx * dx + dy * dy
            if dist_sq > 0.0:
                coeff = (-2.0 * a * b * dist_sq ** (b - 1.0)) / (a * dist_sq**b + 1.0)
            else:
                coeff = 0.0
            gx = _clip(coeff * dx) * alpha
            gy = _clip(coeff * dy) * alpha
            emb[i, 0] += np.float32(gx)
            emb[i, 1] += np.float32(gy)
            emb[j, 0] -= np.float32(gx)
            emb[j, 1] -= np.float32(gy)
            epoch_of_next_sample[e] += epochs_per_sample[e]

            n_neg = int((epoch - epoch_of_next_negative[e]) / epochs_per_negative[e])
            for _ in range(n_neg):
                k = int(_xorshift(rng_state) % np.uint64(n_vertices))
                if k == i:
                    continue
                dx = np.float64(emb[i, 0] - emb[k, 0])
                dy = np.float64(emb[i, 1] - emb[k, 1])
                dist_sq = dx * dx + dy * dy
                if dist_sq > 0.0:
                    coeff = (2.0 * gamma * b) / ((0.001 + dist_sq) * (a * dist_sq**b + 1.0))
                    gx = _clip(coeff * dx) * alpha
                    gy = _clip(coeff * dy) * alpha
                else:
                    # exact overlap: push a fixed step to escape
                    gx = 4.0 * alpha
                    gy = 4.0 * alpha
                emb[i, 0] += np.float32(gx)
                emb[i, 1] += np.float32(gy)
            epoch_of_next_negative[e] += n_neg * epochs_per_negative[e]
