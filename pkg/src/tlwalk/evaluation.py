"""Metrics and models for link prediction, node clustering and classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize
from scipy.special import expit
from scipy.stats import rankdata

from .graph import Graph, GraphError


# --- edge splits -----------------------------------------------------------

class NegativeSamplingError(GraphError):
    pass


@dataclass(frozen=True)
class EdgeSplit:
    train_graph: Graph
    train_pos: np.ndarray
    train_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    ratio: float
    seed: int


def sample_non_edges(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` distinct node pairs that are not edges of ``g``."""
    n = g.node_count
    available = n * (n - 1) // 2 - g.edge_count
    if count > available:
        raise NegativeSamplingError(
            f"need {count} non-edges but the graph only has {available}")
    existing = set((g.edges()[:, 0].astype(np.int64) * n + g.edges()[:, 1]).tolist())
    if available <= 4 * count:
        iu, ju = np.triu_indices(n, 1)
        keys = iu.astype(np.int64) * n + ju
        pool = np.array([k for k in keys.tolist() if k not in existing], dtype=np.int64)
        pick = rng.choice(len(pool), size=count, replace=False)
        chosen = pool[pick]
    else:
        seen = set()
        chosen = []
        while len(chosen) < count:
            a = rng.integers(n, size=2 * (count - len(chosen)))
            b = rng.integers(n, size=len(a))
            for u, v in zip(a.tolist(), b.tolist()):
                if u == v:
                    continue
                k = min(u, v) * n + max(u, v)
                if k in existing or k in seen:
                    continue
                seen.add(k)
                chosen.append(k)
                if len(chosen) == count:
                    break
        chosen = np.array(chosen, dtype=np.int64)
    return np.column_stack([chosen // n, chosen % n])


def split_edges(g: Graph, ratio: float = 0.7, seed: int = 0,
                neg_seed: int | None = None) -> EdgeSplit:
    """Hold out ``1 - ratio`` of the edges for testing.

    Negatives for both sides are non-edges of the full graph, disjoint from
    each other, one per positive.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    edges = g.edges().astype(np.int64)
    perm = rng.permutation(len(edges))
    n_train = int(round(ratio * len(edges)))
    train_pos = edges[np.sort(perm[:n_train])]
    test_pos = edges[np.sort(perm[n_train:])]
    neg_rng = np.random.default_rng(seed if neg_seed is None else neg_seed)
    neg = sample_non_edges(g, len(edges), neg_rng)
    return EdgeSplit(g.without_edges(test_pos), train_pos, neg[:n_train], test_pos,
                     neg[n_train:], ratio, seed)


# --- scoring ----------------------------------------------------------------

def auc(scores, labels) -> float:
    """ROC AUC as the Mann-Whitney statistic; ties count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


# --- logistic regression ----------------------------------------------------

class LogisticRegression:
    """L2-regularised logistic regression, one-vs-rest for several classes.

    Features are standardised with training-set mean and standard deviation.
    Each binary problem minimises ``sum log(1 + exp(-y f)) + l2/2 |w|^2`` (the
    intercept is not penalised) with L-BFGS until the gradient norm drops
    below ``tol`` or ``max_iter`` iterations pass.
    """

    def __init__(self, l2=1.0, tol=1e-6, max_iter=500):
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter

    def _fit_binary(self, X, y):
        s = np.where(y, 1.0, -1.0)
        d = X.shape[1]

        def objective(theta):
            w, b = theta[:d], theta[d]
            z = s * (X @ w + b)
            loss = np.logaddexp(0.0, -z).sum() + 0.5 * self.l2 * (w @ w)
            g = -s * expit(-z)
            return loss, np.concatenate([X.T @ g + self.l2 * w, [g.sum()]])

        res = minimize(objective, np.zeros(d + 1), jac=True, method="L-BFGS-B",
                       options=dict(maxiter=self.max_iter, gtol=self.tol))
        return res.x

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if len(X) < 2:
            raise ValueError("need at least two samples")
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes to fit")
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        Z = (X - self.mean_) / self.scale_
        targets = self.classes_[1:] if len(self.classes_) == 2 else self.classes_
        self.coef_ = np.array([self._fit_binary(Z, y == c) for c in targets])
        return self

    def decision_function(self, X):
        Z = (np.asarray(X, dtype=float) - self.mean_) / self.scale_
        return Z @ self.coef_[:, :-1].T + self.coef_[:, -1]

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        if len(self.classes_) == 2:
            return np.column_stack([1 - p[:, 0], p[:, 0]])
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def logistic_fit(features, labels, l2=1.0) -> LogisticRegression:
    return LogisticRegression(l2=l2).fit(features, labels)


def logistic_predict(clf: LogisticRegression, features, proba=False):
    return clf.predict_proba(features) if proba else clf.predict(features)


# --- k-means -------------------------------------------------------------------

class KMeansResult(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    wcss: float


def _kmeanspp(X, K, rng):
    n = len(X)
    centers = [int(rng.integers(n))]
    d2 = ((X - X[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            rest = np.setdiff1d(np.arange(n), centers)
            idx = int(rng.choice(rest))
        centers.append(idx)
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return X[centers].copy()


def _lloyd(X, centers, max_iter):
    labels = None
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(dist, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(len(centers)):
            members = X[labels == k]
            if len(members):
                centers[k] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the point worst served
                far = int(np.argmax(dist[np.arange(len(X)), labels]))
                centers[k] = X[far]
    dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(dist, axis=1)
    return labels, centers, float(dist[np.arange(len(X)), labels].sum())


def kmeans(points, K: int, seed: int = 0, restarts: int = 10, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds; best of ``restarts`` by WCSS."""
    X = np.asarray(points, dtype=float)
    if K > len(X):
        raise ValueError(f"K={K} exceeds the number of points ({len(X)})")
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(restarts, 1)):
        res = KMeansResult(*_lloyd(X, _kmeanspp(X, K, rng), max_iter))
        if best is None or res.wcss < best.wcss:
            best = res
    return best


# --- partition comparison ------------------------------------------------------

def contingency(pred, truth) -> np.ndarray:
    _, p = np.unique(np.asarray(pred), return_inverse=True)
    _, t = np.unique(np.asarray(truth), return_inverse=True)
    table = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(table, (p.ravel(), t.ravel()), 1)
    return table


def matched_accuracy(pred, truth) -> float:
    """Fraction of elements agreeing after the best one-to-one label matching."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if len(pred) != len(truth) or len(pred) == 0:
        raise ValueError("label vectors must be non-empty and equally long")
    table = contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / len(pred))


class ElementCentricScore(NamedTuple):
    similarity: float
    adjusted: float
    random_baseline: float


def element_centric_raw(pred, truth, alpha: float = 0.9) -> float:
    """Mean element-centric similarity of two flat partitions.

    For partitions the personalised-PageRank affinity of element ``i`` is
    ``(1 - alpha)`` on itself plus ``alpha / |cluster(i)|`` spread over its
    cluster. Normalising the L1 gap between affinities by ``2 alpha`` leaves
    ``|A(i) & B(i)| / max(|A(i)|, |B(i)|)`` per element, so ``alpha`` only
    needs to lie in (0, 1].
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if len(pred) != len(truth):
        raise ValueError("label vectors must be equally long")
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    p, t = p.ravel(), t.ravel()
    table = contingency(p, t)
    a = table.sum(axis=1)[p]
    b = table.sum(axis=0)[t]
    m = table[p, t]
    return float(np.mean(m / np.maximum(a, b)))


def element_centric_similarity(pred, truth, alpha: float = 0.9, permutations: int = 10,
                               seed: int = 0) -> ElementCentricScore:
    """Element-centric similarity with a permutation-based chance correction.

    ``adjusted = (S - S_rand) / (1 - S_rand)`` where ``S_rand`` averages the
    similarity of ``truth`` against ``permutations`` shuffles of ``pred``.
    """
    s = element_centric_raw(pred, truth, alpha)
    rng = np.random.default_rng(seed)
    pred = np.asarray(pred)
    base = float(np.mean([element_centric_raw(rng.permutation(pred), truth, alpha)
                          for _ in range(permutations)]))
    if base >= 1.0:
        adj = 1.0 if s >= 1.0 else 0.0
    else:
        adj = (s - base) / (1.0 - base)
    return ElementCentricScore(s, float(adj), base)
