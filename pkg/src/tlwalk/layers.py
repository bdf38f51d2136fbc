"""Split a partitioned graph into its intra-community and inter-community layers."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .community import Partition
from .graph import Graph


@dataclass(frozen=True)
class Layer:
    """Subgraph over global node ids in CSR form.

    Nodes outside the layer simply have no neighbors here.
    """

    indptr: np.ndarray
    indices: np.ndarray

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def edges(self) -> np.ndarray:
        src = np.repeat(np.arange(len(self.indptr) - 1), self.degrees())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])


def _sub_csr(g: Graph, keep: np.ndarray) -> Layer:
    """Keep the adjacency entries flagged in ``keep`` (aligned with g.indices)."""
    src = np.repeat(np.arange(g.node_count), g.degrees())
    counts = np.bincount(src[keep], minlength=g.node_count)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return Layer(indptr, g.indices[keep].astype(np.int32))


@dataclass(frozen=True)
class LayerDecomposition:
    """Two-layer view of a graph under a community partition.

    Attributes
    ----------
    community : ndarray
        Community id of each node.
    intra : Layer
        Union of all intra-community subgraphs; node ``v`` only has
        neighbors from its own community.
    inter : Layer
        Inter-community subgraph: cross-community edges only.
    bridging : ndarray of bool
        ``bridging[v]`` is True when ``v`` has at least one cross-community
        edge.
    """

    community: np.ndarray
    intra: Layer
    inter: Layer
    bridging: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.community)

    @property
    def bridging_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.bridging)

    @property
    def community_count(self) -> int:
        return int(self.community.max()) + 1 if len(self.community) else 0

    def community_nodes(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.community == i)

    def intra_edges(self, i: int) -> np.ndarray:
        e = self.intra.edges()
        return e[self.community[e[:, 0]] == i]

    def isolated_in_intra(self) -> np.ndarray:
        """Nodes whose every edge is cross-community (zero rows of the intra transition matrix)."""
        return np.flatnonzero(self.intra.degrees() == 0)

    def walk_layer(self, v: int) -> Layer:
        return self.inter if self.bridging[v] else self.intra

    def to_json(self, g: Graph) -> str:
        comms = {str(i): [g.labels[v] for v in self.community_nodes(i)]
                 for i in range(self.community_count)}
        return json.dumps({
            "bridging": [g.labels[v] for v in self.bridging_nodes],
            "communities": comms,
            "intra_edge_count": self.intra.edge_count,
            "inter_edge_count": self.inter.edge_count,
            "isolated_in_intra": [g.labels[v] for v in self.isolated_in_intra()],
        }, indent=2)


def decompose(g: Graph, p) -> LayerDecomposition:
    """Build the intra and inter layers of ``g`` for partition ``p``.

    An edge goes to the inter layer exactly when its endpoints lie in
    different communities; an edge between two bridging nodes of the same
    community stays intra.
    """
    comm = np.asarray(p.assignment if isinstance(p, Partition) else p)
    if len(comm) != g.node_count:
        raise ValueError("partition does not cover the graph")
    src = np.repeat(np.arange(g.node_count), g.degrees())
    cross = comm[src] != comm[g.indices]
    intra = _sub_csr(g, ~cross)
    inter = _sub_csr(g, cross)
    bridging = inter.degrees() > 0
    ld = LayerDecomposition(comm.astype(np.int32), intra, inter, bridging)
    if intra.edge_count + inter.edge_count != g.edge_count:
        raise AssertionError("edge conservation violated")
    return ld
