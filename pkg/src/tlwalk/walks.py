"""Layer-confined random walks.

A walk that starts at a bridging node moves only along cross-community
edges; any other walk stays inside its start node's community. Each step
picks a layer neighbor uniformly at random, and a node with no layer
neighbors ends the walk early.

Every walk draws from its own random stream keyed by
``(seed, start node, repetition)``, so the corpus is the same no matter how
the work is split across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .layers import Layer, LayerDecomposition

END = -1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _U30)) * _M1
    z = (z ^ (z >> _U27)) * _M2
    return z ^ (z >> _U31)


@numba.njit(cache=True, inline="always")
def stream_key(seed, a, b):
    """Hash three integers into a 64-bit stream state (splitmix64 finaliser)."""
    s = _mix64(np.uint64(seed) + _GOLDEN)
    s = _mix64(s ^ (np.uint64(a) + _GOLDEN))
    return _mix64(s ^ (np.uint64(b) + _GOLDEN))


@numba.njit(cache=True, inline="always")
def _uniform(state):
    state = state + _GOLDEN
    return state, (_mix64(state) >> _U11) * _INV53


@numba.njit(cache=True, nogil=True)
def _walk_kernel(inter_ptr, inter_idx, intra_ptr, intra_idx, bridging,
                 starts, reps, length, seed, out, lengths):
    for t in range(len(starts)):
        v = starts[t]
        if bridging[v]:
            ptr = inter_ptr
            idx = inter_idx
        else:
            ptr = intra_ptr
            idx = intra_idx
        state = stream_key(seed, v, reps[t])
        out[t, 0] = v
        cur = v
        n = 1
        while n < length:
            lo = ptr[cur]
            deg = ptr[cur + 1] - lo
            if deg == 0:
                break
            state, u = _uniform(state)
            cur = idx[lo + np.int64(u * deg)]
            out[t, n] = cur
            n += 1
        lengths[t] = n


@dataclass(frozen=True)
class WalkCorpus:
    """Walks stored row-wise in a padded matrix.

    Row ``v * num_walks + r`` is repetition ``r`` from start node ``v``;
    entries past ``lengths[row]`` are ``-1``.
    """

    paths: np.ndarray
    lengths: np.ndarray
    walk_length: int
    num_walks: int
    seed: int

    def __len__(self):
        return len(self.lengths)

    def __getitem__(self, i) -> np.ndarray:
        return self.paths[i, :self.lengths[i]]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def token_count(self) -> int:
        return int(self.lengths.sum())

    def walks(self) -> list[list[int]]:
        return [w.tolist() for w in self]

    def to_text(self, labels) -> str:
        return "".join(" ".join(labels[x] for x in w) + "\n" for w in self)


def next_step(layer: Layer, current: int, rng: np.random.Generator) -> int:
    """Uniform random layer neighbor of ``current``, or ``END`` if it has none."""
    nb = layer.neighbors(current)
    if len(nb) == 0:
        return END
    return int(nb[rng.integers(len(nb))])


def generate_corpus(ld: LayerDecomposition, walk_length: int = 80, num_walks: int = 10,
                    seed: int = 0, workers: int = 1) -> WalkCorpus:
    """Generate ``num_walks`` layer-confined walks from every node.

    A walk holds at most ``walk_length`` nodes, including its start.
    """
    if walk_length < 1 or num_walks < 1:
        raise ValueError("walk_length and num_walks must be >= 1")
    n = ld.node_count
    starts = np.repeat(np.arange(n, dtype=np.int64), num_walks)
    reps = np.tile(np.arange(num_walks, dtype=np.int64), n)
    total = len(starts)
    out = np.full((total, walk_length), -1, dtype=np.int32)
    lengths = np.zeros(total, dtype=np.int32)
    args = (ld.inter.indptr, ld.inter.indices, ld.intra.indptr, ld.intra.indices,
            ld.bridging)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    if workers <= 1 or total < 2 * workers:
        _walk_kernel(*args, starts, reps, walk_length, seed, out, lengths)
    else:
        bounds = np.linspace(0, total, workers + 1).astype(int)

        def run(i):
            lo, hi = bounds[i], bounds[i + 1]
            _walk_kernel(*args, starts[lo:hi], reps[lo:hi], walk_length, seed,
                         out[lo:hi], lengths[lo:hi])

        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(run, range(workers)))
    return WalkCorpus(out, lengths, walk_length, num_walks, seed)
