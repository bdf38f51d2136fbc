"""End-to-end TLWalk embedding and the three evaluation protocols."""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .community import Partition, louvain
from .evaluation import (LogisticRegression, auc, element_centric_similarity, kmeans,
                         matched_accuracy, split_edges)
from .graph import Graph
from .layers import LayerDecomposition, decompose
from .sgns import EmbeddingMatrix, hadamard_edge_embedding, train
from .walks import WalkCorpus, generate_corpus


def substream(seed: int, name: str) -> int:
    """Derive a stable 63-bit seed for the named component from ``seed``."""
    h = hashlib.blake2b(f"{int(seed)}/{name}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little") >> 1


@dataclass
class EmbedParams:
    dim: int = 128
    walk_length: int = 80
    num_walks: int = 10
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    dynamic_window: bool = False
    workers: int = 1
    nondeterministic: bool = False

    def as_dict(self):
        return asdict(self)


@dataclass
class TLWalkResult:
    embedding: EmbeddingMatrix
    partition: Partition
    layers: LayerDecomposition
    corpus: WalkCorpus = field(repr=False)


def tlwalk_embed(g: Graph, params: EmbedParams | None = None, seed: int = 0,
                 partition: Partition | None = None) -> TLWalkResult:
    """Louvain, layer split, two-layer walks and SGNS training on ``g``."""
    params = params or EmbedParams()
    if partition is None:
        partition = louvain(g, substream(seed, "louvain"))
    ld = decompose(g, partition)
    corpus = generate_corpus(ld, params.walk_length, params.num_walks,
                             substream(seed, "walks"), workers=params.workers)
    emb = train(corpus, g.node_count, dim=params.dim, window=params.window,
                negatives=params.negatives, epochs=params.epochs, lr=params.lr,
                seed=substream(seed, "sgns"),
                mode="parallel" if params.nondeterministic else "deterministic",
                workers=params.workers, dynamic_window=params.dynamic_window)
    return TLWalkResult(emb, partition, ld, corpus)


def _embed_vectors(g, params, seed):
    return tlwalk_embed(g, params, seed).embedding.W


@dataclass
class RepeatedMetric:
    """Per-seed values of one metric plus summary statistics."""

    name: str
    seeds: list
    values: list
    extra: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def stddev(self) -> float:
        return float(np.std(self.values))


def _run_repeats(fn, seeds, threads):
    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(min(threads, len(seeds))) as ex:
            return list(ex.map(fn, seeds))
    return [fn(s) for s in seeds]


def link_prediction_run(g: Graph, params: EmbedParams, seed: int, ratio: float = 0.7,
                        l2: float = 1.0, embed_fn=_embed_vectors) -> float:
    """One repetition: split, embed the training graph, fit on Hadamard features, score AUC."""
    split = split_edges(g, ratio, substream(seed, "split"), substream(seed, "negatives"))
    W = embed_fn(split.train_graph, params, seed)
    Xtr = np.vstack([hadamard_edge_embedding(W, split.train_pos[:, 0], split.train_pos[:, 1]),
                     hadamard_edge_embedding(W, split.train_neg[:, 0], split.train_neg[:, 1])])
    ytr = np.r_[np.ones(len(split.train_pos)), np.zeros(len(split.train_neg))]
    Xte = np.vstack([hadamard_edge_embedding(W, split.test_pos[:, 0], split.test_pos[:, 1]),
                     hadamard_edge_embedding(W, split.test_neg[:, 0], split.test_neg[:, 1])])
    yte = np.r_[np.ones(len(split.test_pos)), np.zeros(len(split.test_neg))]
    clf = LogisticRegression(l2=l2).fit(Xtr, ytr)
    return auc(clf.predict_proba(Xte)[:, 1], yte)


def link_prediction_pipeline(g: Graph, params: EmbedParams | None = None, seeds=range(10),
                             ratio: float = 0.7, threads: int = 1,
                             embed_fn=_embed_vectors) -> RepeatedMetric:
    params = params or EmbedParams()
    seeds = list(seeds)
    vals = _run_repeats(lambda s: link_prediction_run(g, params, s, ratio, embed_fn=embed_fn),
                        seeds, threads)
    return RepeatedMetric("auc", seeds, vals)


def labels_to_array(g: Graph, mapping: dict) -> np.ndarray:
    """Class index per node (-1 where unlabeled); classes numbered by sorted label."""
    unknown = [k for k in mapping if str(k) not in g._label_index]
    if unknown:
        raise KeyError(f"labeled node {unknown[0]!r} is not in the graph")
    classes = sorted(set(mapping.values()))
    index = {c: i for i, c in enumerate(classes)}
    out = np.full(g.node_count, -1, dtype=np.int64)
    for node, c in mapping.items():
        out[g.node_id(node)] = index[c]
    return out


def clustering_run(g: Graph, labels: np.ndarray, params: EmbedParams, seed: int,
                   restarts: int = 10):
    W = _embed_vectors(g, params, seed)
    known = labels >= 0
    K = len(np.unique(labels[known]))
    pred = kmeans(W[known], K, substream(seed, "kmeans"), restarts=restarts).labels
    ecs = element_centric_similarity(pred, labels[known], seed=substream(seed, "ecs"))
    return matched_accuracy(pred, labels[known]), ecs


def clustering_pipeline(g: Graph, labels: np.ndarray, params: EmbedParams | None = None,
                        seeds=range(5), threads: int = 1) -> RepeatedMetric:
    params = params or EmbedParams()
    seeds = list(seeds)
    out = _run_repeats(lambda s: clustering_run(g, labels, params, s), seeds, threads)
    return RepeatedMetric("accuracy", seeds, [a for a, _ in out],
                          extra={"element_centric": [e.similarity for _, e in out],
                                 "element_centric_adjusted": [e.adjusted for _, e in out]})


def classification_run(g: Graph, labels: np.ndarray, params: EmbedParams, seed: int,
                       train_frac: float = 0.8, l2: float = 1.0) -> float:
    W = _embed_vectors(g, params, seed)
    idx = np.flatnonzero(labels >= 0)
    rng = np.random.default_rng(substream(seed, "node_split"))
    idx = rng.permutation(idx)
    n_train = int(round(train_frac * len(idx)))
    tr, te = idx[:n_train], idx[n_train:]
    clf = LogisticRegression(l2=l2).fit(W[tr], labels[tr])
    return float(np.mean(clf.predict(W[te]) == labels[te]))


def classification_pipeline(g: Graph, labels: np.ndarray, params: EmbedParams | None = None,
                            seeds=range(5), train_frac: float = 0.8,
                            threads: int = 1) -> RepeatedMetric:
    params = params or EmbedParams()
    seeds = list(seeds)
    vals = _run_repeats(lambda s: classification_run(g, labels, params, s, train_frac),
                        seeds, threads)
    return RepeatedMetric("accuracy", seeds, vals)
