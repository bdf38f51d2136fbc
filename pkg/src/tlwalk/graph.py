"""Undirected simple graphs in compressed adjacency form.

Internal node ids are dense integers ``0..n-1`` assigned in order of first
appearance in the input, so loading the same file twice always produces the
same ids. External labels are kept as strings.
"""

from __future__ import annotations

import io
import logging
import os
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

COMMENT_PREFIXES = ("#", "%")


class GraphError(ValueError):
    """Raised for malformed or unusable graph input."""


class EdgeListParseError(GraphError):
    def __init__(self, lineno, line, reason="expected two node labels"):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class EmptyGraphError(GraphError):
    pass


class Graph:
    """Immutable undirected simple graph.

    Adjacency is stored in CSR layout: the neighbors of node ``v`` are
    ``indices[indptr[v]:indptr[v + 1]]``, sorted ascending.

    Parameters
    ----------
    indptr, indices : ndarray
        CSR arrays. Must describe a symmetric adjacency without self-loops
        or duplicate entries; use :func:`from_edges` to build from pairs.
    labels : sequence of str
        External label of each internal id.
    """

    __slots__ = ("indptr", "indices", "labels", "_label_index", "dropped_self_loops")

    def __init__(self, indptr, indices, labels, dropped_self_loops=0):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int32)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        self.labels = tuple(str(x) for x in labels)
        if len(self.labels) != len(self.indptr) - 1:
            raise GraphError("label count does not match node count")
        self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self._label_index) != len(self.labels):
            raise GraphError("duplicate node labels")
        self.dropped_self_loops = dropped_self_loops

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def __repr__(self):
        return f"Graph(|V|={self.node_count}, |E|={self.edge_count})"

    def _check(self, v):
        if not 0 <= v < self.node_count:
            raise IndexError(f"node id {v} out of range [0, {self.node_count})")

    def degree(self, v: int) -> int:
        self._check(v)
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        self._check(v)
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def volume(self) -> int:
        """Sum of all adjacency entries, i.e. ``2 |E|``."""
        return int(len(self.indices))

    def node_id(self, label) -> int:
        try:
            return self._label_index[str(label)]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def edges(self) -> np.ndarray:
        """Return each edge once as an ``(m, 2)`` array with ``u < v``, lexicographic."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int32), self.degrees())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def adjacency_matrix(self) -> np.ndarray:
        n = self.node_count
        a = np.zeros((n, n))
        src = np.repeat(np.arange(n), self.degrees())
        a[src, self.indices] = 1.0
        return a

    def without_edges(self, edges) -> "Graph":
        """Return a new graph with ``edges`` removed; node set and ids unchanged."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        n = self.node_count
        kill = set(_edge_keys(edges, n).tolist())
        current = self.edges().astype(np.int64)
        keys = _edge_keys(current, n)
        mask = np.fromiter((k not in kill for k in keys.tolist()), bool, len(keys))
        return from_edges(current[mask], n, labels=self.labels)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.labels == other.labels
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    __hash__ = None


def _edge_keys(edges, n):
    u = np.minimum(edges[:, 0], edges[:, 1]).astype(np.int64)
    v = np.maximum(edges[:, 0], edges[:, 1]).astype(np.int64)
    return u * n + v


def from_edges(edges, n: int, labels: Sequence | None = None) -> Graph:
    """Build a graph on ``n`` nodes from integer pairs.

    Duplicate pairs (in either orientation) are collapsed and self-loops are
    dropped; the drop count is kept on ``Graph.dropped_self_loops``.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if labels is None:
        labels = [str(i) for i in range(n)]
    if len(edges) and (edges.min() < 0 or edges.max() >= n):
        raise GraphError("edge endpoint out of range")
    loops = edges[:, 0] == edges[:, 1]
    n_loops = int(loops.sum())
    edges = edges[~loops]
    keys = np.unique(_edge_keys(edges, n)) if len(edges) else np.empty(0, np.int64)
    u, v = keys // n, keys % n
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return Graph(indptr, dst, labels, dropped_self_loops=n_loops)


def _open_text(source):
    if isinstance(source, (str, os.PathLike)) and not (isinstance(source, str) and "\n" in source) \
            and os.path.exists(source):
        return open(source, encoding="utf-8")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def load_edge_list(source, nodes: Iterable | None = None) -> Graph:
    """Parse a whitespace-separated edge list.

    ``source`` may be a path, a file object, or the text itself. Lines
    starting with ``#`` or ``%`` are comments; extra tokens after the first
    two (weights, timestamps) are ignored. ``nodes`` optionally lists labels
    that must exist even without edges (e.g. from a label file); they are
    numbered after all edge endpoints.
    """
    labels: dict[str, int] = {}
    pairs = []
    fh = _open_text(source)
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(COMMENT_PREFIXES):
                continue
            tokens = line.split()
            if len(tokens) < 2:
                raise EdgeListParseError(lineno, raw.rstrip("\n"))
            a = labels.setdefault(tokens[0], len(labels))
            b = labels.setdefault(tokens[1], len(labels))
            pairs.append((a, b))
    finally:
        if fh is not source:
            fh.close()
    for lab in nodes or ():
        labels.setdefault(str(lab), len(labels))
    if not labels:
        raise EmptyGraphError("edge list contains no edges")
    g = from_edges(pairs, len(labels), labels=list(labels))
    if g.dropped_self_loops:
        logger.warning("dropped %d self-loop(s)", g.dropped_self_loops)
    return g


def to_edge_list_text(g: Graph) -> str:
    return "".join(f"{g.labels[u]} {g.labels[v]}\n" for u, v in g.edges())


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_edge_list_text(g))


def read_label_file(source) -> dict[str, str]:
    """Read ``node<TAB>label`` lines into a dict keyed by node label."""
    out = {}
    fh = _open_text(source)
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(COMMENT_PREFIXES):
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise EdgeListParseError(lineno, raw.rstrip("\n"), "expected node and label")
            out[tokens[0]] = tokens[1]
    finally:
        if fh is not source:
            fh.close()
    return out


def write_label_file(path, labels: Sequence[str], values) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab, val in zip(labels, values):
            fh.write(f"{lab}\t{val}\n")
