"""Skip-gram with negative sampling over a walk corpus.

For every walk position the center node is the target and each node within
``window`` positions on either side is a context. One update minimises

    -log s(W[t] . C[c]) - sum_n log s(-W[t] . C[n])

with ``k`` negatives ``n`` drawn from the unigram^0.75 distribution of the
corpus. The learning rate decays linearly from ``lr`` to ``lr / 100`` over
all center positions of all epochs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .walks import WalkCorpus, _uniform, stream_key

UNIGRAM_POWER = 0.75
LR_FLOOR_RATIO = 0.01
_MAX_EXP = 30.0


@numba.njit(cache=True, inline="always")
def _sigmoid(x):
    if x > _MAX_EXP:
        return 1.0
    if x < -_MAX_EXP:
        return 0.0
    return 1.0 / (1.0 + math.exp(-x))


@numba.njit(cache=True, inline="always")
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True, nogil=True, fastmath=True)
def sgns_step(W, C, target, context, negs, lr, work, with_loss=True):
    """Apply one SGNS gradient step in place and return the pre-step loss.

    ``negs`` entries equal to ``context`` are skipped. ``work`` is a scratch
    vector of length ``d``. The loss is only evaluated when ``with_loss``.
    """
    d = W.shape[1]
    loss = 0.0
    wt = W[target]
    zero = W.dtype.type(0)
    for i in range(d):
        work[i] = zero
    for s in range(len(negs) + 1):
        if s == 0:
            c = context
            label = 1.0
        else:
            c = negs[s - 1]
            if c == context:
                continue
            label = 0.0
        cc = C[c]
        f = zero
        for i in range(d):
            f += wt[i] * cc[i]
        if with_loss:
            loss -= _log_sigmoid(f) if label > 0 else _log_sigmoid(-f)
        # g = -dL/df
        g = W.dtype.type(label - _sigmoid(f))
        glr = W.dtype.type(lr) * g
        for i in range(d):
            work[i] += g * cc[i]
            cc[i] += glr * wt[i]
    lr_t = W.dtype.type(lr)
    for i in range(d):
        wt[i] += lr_t * work[i]
    return loss


def sgns_loss_grad(w, c, negs):
    """Loss and analytic gradients for one (target, context, negatives) triple.

    Parameters
    ----------
    w, c : ndarray, shape (d,)
        Target and context vectors.
    negs : ndarray, shape (k, d)
        Negative context vectors.

    Returns
    -------
    loss : float
    grad_w : ndarray, shape (d,)
    grad_c : ndarray, shape (d,)
    grad_negs : ndarray, shape (k, d)
    """
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    negs = np.asarray(negs, dtype=float)
    fp = w @ c
    fn = negs @ w
    loss = np.logaddexp(0.0, -fp) + np.sum(np.logaddexp(0.0, fn))
    gp = -1.0 / (1.0 + np.exp(fp))      # d/dfp of -log s(fp)
    gn = 1.0 / (1.0 + np.exp(-fn))      # d/dfn of -log s(-fn)
    grad_w = gp * c + gn @ negs
    return float(loss), grad_w, gp * w, np.outer(gn, w)


def alias_table(p):
    """Vose alias table for O(1) sampling from the discrete distribution ``p``."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    scaled = p * n
    prob = np.zeros(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    for i in small + large:
        prob[i] = 1.0
    return prob, alias


@numba.njit(cache=True, inline="always")
def _draw(state, prob, alias):
    state, u = _uniform(state)
    x = u * len(prob)
    i = np.int64(x)
    if x - i < prob[i]:
        return state, i
    return state, alias[i]


@numba.njit(cache=True, nogil=True, fastmath=True)
def _epoch_kernel(paths, lengths, order, W, C, prob, alias, window, negatives, dynamic,
                  lr0, lr_min, done0, step, total, seed, stream, losses, track):
    d = W.shape[1]
    work = np.zeros(d, dtype=W.dtype)
    negs = np.zeros(negatives, dtype=np.int64)
    state = stream_key(seed, stream, 0)
    done = done0
    pos = 0
    for oi in range(len(order)):
        row = order[oi]
        n = lengths[row]
        for i in range(n):
            lr = lr0 - (lr0 - lr_min) * (done / total)
            if lr < lr_min:
                lr = lr_min
            b = window
            if dynamic:
                state, u = _uniform(state)
                b = 1 + np.int64(u * window)
            target = paths[row, i]
            acc = 0.0
            lo = max(0, i - b)
            hi = min(n, i + b + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                for s in range(negatives):
                    state, negs[s] = _draw(state, prob, alias)
                acc += sgns_step(W, C, target, paths[row, j], negs, lr, work, track)
            losses[pos] = acc / max(hi - lo - 1, 1)
            pos += 1
            done += step


@dataclass
class EmbeddingMatrix:
    """Trained node vectors.

    ``W`` holds the output embedding (one row per node); ``C`` is the context
    matrix kept for inner-product diagnostics.
    """

    W: np.ndarray
    C: np.ndarray
    params: dict = field(default_factory=dict)
    epoch_loss: list = field(default_factory=list)
    tail_loss: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def __len__(self):
        return self.W.shape[0]

    def hadamard(self, u, v) -> np.ndarray:
        return hadamard_edge_embedding(self, u, v)

    def to_text(self, labels) -> str:
        lines = [f"{self.W.shape[0]} {self.W.shape[1]}"]
        for lab, row in zip(labels, self.W):
            lines.append(lab + " " + " ".join(f"{x:.6f}" for x in row))
        return "\n".join(lines) + "\n"


def hadamard_edge_embedding(e: EmbeddingMatrix, u, v) -> np.ndarray:
    """Element-wise product of the vectors of ``u`` and ``v``.

    ``u`` and ``v`` may be scalars or equal-length integer arrays (one edge
    per row).
    """
    W = e.W if isinstance(e, EmbeddingMatrix) else np.asarray(e)
    u = np.asarray(u)
    v = np.asarray(v)
    n = W.shape[0]
    if np.any((u < 0) | (u >= n)) or np.any((v < 0) | (v >= n)):
        raise IndexError("node id out of range")
    return W[u] * W[v]


@numba.njit(cache=True)
def _count_pairs(paths, lengths, window, out):
    for row in range(len(lengths)):
        n = lengths[row]
        for i in range(n):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if j != i:
                    out[paths[row, i], paths[row, j]] += 1


def cooccurrence_counts(corpus: WalkCorpus, n_nodes: int, window: int) -> np.ndarray:
    """Dense ``(target, context)`` pair counts over all fixed-size windows."""
    out = np.zeros((n_nodes, n_nodes), dtype=np.int64)
    _count_pairs(corpus.paths, corpus.lengths, window, out)
    return out


def expected_loss(W, C, counts, noise, negatives) -> float:
    """Exact SGNS objective per (target, context) pair, negatives in expectation.

    ``sum_tc n_tc [-log s(w_t.c_c)] + k sum_t n_t sum_n p(n) [-log s(-w_t.c_n)]``
    divided by the number of pairs. Unlike the running training loss this
    does not depend on the order updates were applied in.
    """
    S = np.asarray(W, dtype=float) @ np.asarray(C, dtype=float).T
    pos = np.sum(counts * np.logaddexp(0.0, -S))
    neg = negatives * np.sum(counts.sum(axis=1)[:, None] * noise[None, :] * np.logaddexp(0.0, S))
    return float((pos + neg) / counts.sum())


def noise_distribution(corpus: WalkCorpus, n_nodes: int) -> np.ndarray:
    counts = np.bincount(corpus.paths[corpus.paths >= 0], minlength=n_nodes).astype(float)
    p = counts ** UNIGRAM_POWER
    return p / p.sum()


def init_vectors(n: int, dim: int, seed: int, dtype=np.float32):
    rng = np.random.default_rng(seed)
    W = ((rng.random((n, dim)) - 0.5) / dim).astype(dtype)
    C = np.zeros((n, dim), dtype=dtype)
    return W, C


def train(corpus: WalkCorpus, n_nodes: int | None = None, dim: int = 128, window: int = 10,
          negatives: int = 5, epochs: int = 5, lr: float = 0.025, seed: int = 0,
          mode: str = "deterministic", workers: int = 1, dynamic_window: bool = False,
          track_loss: bool = False, dtype=np.float32, on_epoch=None) -> EmbeddingMatrix:
    """Train SGNS vectors on ``corpus``.

    In ``"deterministic"`` mode updates run in one thread in a fixed order and
    the result is bit-for-bit reproducible from ``seed``. ``"parallel"``
    mode splits each epoch's walks across ``workers`` threads updating shared
    matrices without locks, so results vary between runs.

    With ``track_loss`` the mean loss of each epoch, and of its last 10% of
    center positions, is recorded on the result. ``on_epoch(epoch, W, C)`` is
    called after every epoch with the live matrices.
    """
    if len(corpus) == 0 or corpus.token_count == 0:
        raise ValueError("cannot train on an empty corpus")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if window < 1 or negatives < 1 or epochs < 1:
        raise ValueError("window, negatives and epochs must be >= 1")
    if mode not in ("deterministic", "parallel"):
        raise ValueError(f"unknown mode {mode!r}")
    if n_nodes is None:
        n_nodes = int(corpus.paths.max()) + 1
    W, C = init_vectors(n_nodes, dim, seed, dtype)
    prob, alias = alias_table(noise_distribution(corpus, n_nodes))
    tokens = corpus.token_count
    total = float(tokens * epochs)
    lr_min = lr * LR_FLOOR_RATIO
    rng = np.random.default_rng(seed)
    emb = EmbeddingMatrix(W, C, params=dict(dim=dim, window=window, negatives=negatives,
                                            epochs=epochs, lr=lr, seed=seed, mode=mode,
                                            dynamic_window=dynamic_window))
    for ep in range(epochs):
        order = rng.permutation(len(corpus)).astype(np.int64)
        losses = np.zeros(tokens, dtype=np.float64)
        done0 = float(ep * tokens)
        if mode == "deterministic" or workers <= 1:
            _epoch_kernel(corpus.paths, corpus.lengths, order, W, C, prob, alias, window, negatives,
                          dynamic_window, lr, lr_min, done0, 1.0, total, seed, ep, losses, track_loss)
        else:
            chunks = np.array_split(order, workers)
            offsets = np.concatenate([[0], np.cumsum([corpus.lengths[c].sum() for c in chunks])])

            def run(i):
                lo, hi = offsets[i], offsets[i + 1]
                # chunks run concurrently, so each spans the full epoch of decay
                step = tokens / max(hi - lo, 1)
                _epoch_kernel(corpus.paths, corpus.lengths, chunks[i], W, C, prob, alias, window,
                              negatives, dynamic_window, lr, lr_min, done0, step, total,
                              seed, ep * workers + i + (1 << 32), losses[lo:hi], track_loss)

            with ThreadPoolExecutor(workers) as ex:
                list(ex.map(run, range(workers)))
        if track_loss:
            emb.epoch_loss.append(float(losses.mean()))
            emb.tail_loss.append(float(losses[int(0.9 * tokens):].mean()))
        if on_epoch is not None:
            on_epoch(ep, W, C)
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(C))):
        raise FloatingPointError("non-finite embedding entries")
    return emb
