"""Modularity scoring and Louvain community detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, GraphError

GAIN_TOL = 1e-7
_TIE_EPS = 1e-12


class UndefinedModularityError(GraphError):
    pass


def _canonical(assignment) -> np.ndarray:
    """Relabel community ids densely in order of first appearance."""
    assignment = np.asarray(assignment)
    _, first, inv = np.unique(assignment, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inv.ravel()].astype(np.int32)


@dataclass(frozen=True)
class Partition:
    """Assignment of every node to exactly one community.

    ``assignment`` holds dense community ids ``0..k-1``, numbered by first
    appearance in node order.
    """

    assignment: np.ndarray
    modularity: float = float("nan")
    history: tuple = field(default=(), compare=False, repr=False)

    @classmethod
    def from_labels(cls, labels, graph: Graph | None = None) -> "Partition":
        a = _canonical(labels)
        q = modularity(graph, a) if graph is not None and graph.edge_count else float("nan")
        return cls(a, q)

    @property
    def community_count(self) -> int:
        return int(self.assignment.max()) + 1 if len(self.assignment) else 0

    def __len__(self):
        return len(self.assignment)

    def communities(self) -> list[np.ndarray]:
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.cumsum(np.bincount(self.assignment, minlength=self.community_count))[:-1]
        return np.split(order, bounds)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.community_count)


def _assignment_of(p) -> np.ndarray:
    return p.assignment if isinstance(p, Partition) else np.asarray(p)


def modularity(g: Graph, p) -> float:
    r"""Newman modularity of a partition.

    .. math:: Q = \sum_c \left[ \frac{L_c}{|E|} - \left(\frac{D_c}{2|E|}\right)^2 \right]

    where :math:`L_c` is the number of edges inside community ``c`` and
    :math:`D_c` its total degree. This is the pairwise double sum regrouped
    by community.
    """
    a = _assignment_of(p)
    if len(a) != g.node_count:
        raise ValueError("partition does not cover the graph")
    m = g.edge_count
    if m == 0:
        raise UndefinedModularityError("modularity is undefined for a graph without edges")
    e = g.edges()
    same = a[e[:, 0]] == a[e[:, 1]]
    k = int(a.max()) + 1
    inner = np.bincount(a[e[same, 0]], minlength=k).astype(float)
    tot = np.bincount(a, weights=g.degrees().astype(float), minlength=k)
    return float(np.sum(inner / m - (tot / (2.0 * m)) ** 2))


def local_moving(indptr, indices, weights, order, tol=GAIN_TOL):
    """Run node-move sweeps on a weighted graph until no move helps.

    Each node starts in its own community. A node is moved to the neighboring
    community with the largest modularity gain (lowest id on ties) only when
    that beats staying put by more than ``tol``. Self-loop weight
    (``indices[p] == i``) counts toward the node's strength but never toward
    a move.

    Returns
    -------
    comm : list of int
        Community of each node (ids are node ids of representatives).
    moves : int
        Number of accepted moves.
    """
    n = len(indptr) - 1
    indptr = indptr.tolist() if hasattr(indptr, "tolist") else list(indptr)
    indices = indices.tolist() if hasattr(indices, "tolist") else list(indices)
    weights = weights.tolist() if hasattr(weights, "tolist") else list(weights)
    strength = [sum(weights[indptr[i]:indptr[i + 1]]) for i in range(n)]
    m2 = float(sum(strength))
    m = m2 / 2.0
    comm = list(range(n))
    tot = list(strength)
    order = [int(x) for x in order]
    moves = 0
    while True:
        moved = 0
        for i in order:
            ci = comm[i]
            ki = strength[i]
            links: dict[int, float] = {}
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j != i:
                    c = comm[j]
                    links[c] = links.get(c, 0.0) + weights[p]
            tot[ci] -= ki
            own = links.get(ci, 0.0) - tot[ci] * ki / m2
            best_gain = own
            best_c = ci
            if links:
                gains = {c: w - tot[c] * ki / m2 for c, w in links.items()}
                top = max(gains.values())
                if top > best_gain:
                    best_gain = top
                    best_c = min(c for c, v in gains.items() if v >= top - _TIE_EPS)
            if best_c != ci and (best_gain - own) / m > tol:
                comm[i] = best_c
                tot[best_c] += ki
                moved += 1
            else:
                tot[ci] += ki
        moves += moved
        if not moved:
            return comm, moves


def community_graph(indptr, indices, weights, assignment):
    """Collapse communities into weighted super-nodes (CSR, self-loops kept)."""
    a = np.asarray(assignment, dtype=np.int64)
    k = int(a.max()) + 1
    src = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    cs, cd = a[src], a[np.asarray(indices)]
    keys, inv = np.unique(cs * k + cd, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=np.asarray(weights, dtype=float))
    rows = keys // k
    new_indptr = np.zeros(k + 1, dtype=np.int64)
    np.add.at(new_indptr, rows + 1, 1)
    return np.cumsum(new_indptr), (keys % k).astype(np.int64), w


def louvain_levels(g: Graph, seed: int = 0, tol: float = GAIN_TOL) -> list[Partition]:
    """Louvain on ``g``, returning the partition reached after every level.

    Node visit order at each level is a permutation drawn from
    ``numpy.random.default_rng(seed)``; the whole run is deterministic in
    ``seed``.
    """
    if g.edge_count == 0:
        raise UndefinedModularityError("Louvain needs at least one edge")
    rng = np.random.default_rng(seed)
    indptr, indices = g.indptr, g.indices.astype(np.int64)
    weights = np.ones(len(indices))
    membership = np.arange(g.node_count)
    levels = []
    while True:
        n = len(indptr) - 1
        comm, moves = local_moving(indptr, indices, weights, rng.permutation(n), tol)
        if moves == 0:
            break
        comm = _canonical(comm)
        membership = comm[membership]
        levels.append(Partition(_canonical(membership), modularity(g, membership)))
        if comm.max() + 1 == n:
            break
        indptr, indices, weights = community_graph(indptr, indices, weights, comm)
    if not levels:
        levels.append(Partition(_canonical(membership), modularity(g, membership)))
    return levels


def louvain(g: Graph, seed: int = 0) -> Partition:
    """Detect communities by Louvain modularity optimisation (resolution 1)."""
    levels = louvain_levels(g, seed)
    last = levels[-1]
    return Partition(last.assignment, last.modularity,
                     history=tuple(p.modularity for p in levels))


def write_partition(path, g: Graph, p: Partition) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab, c in zip(g.labels, p.assignment):
            fh.write(f"{lab}\t{c}\n")


def read_partition(path, g: Graph) -> Partition:
    from .graph import read_label_file
    raw = read_label_file(path)
    missing = [lab for lab in g.labels if lab not in raw]
    if missing:
        raise GraphError(f"partition file misses {len(missing)} node(s), e.g. {missing[0]!r}")
    return Partition.from_labels([raw[lab] for lab in g.labels], g)
