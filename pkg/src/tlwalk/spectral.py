"""Dense transition-matrix tools for checking the two-layer walk on small graphs.

Everything here materialises ``|V| x |V|`` matrices and is meant for graphs
of at most a few hundred nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from .graph import Graph
from .layers import Layer, LayerDecomposition


class DomainError(ValueError):
    """Raised when a first-passage query is outside the two-layer walk's reach."""


def _row_normalised(layer: Layer, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    deg = layer.degrees()
    src = np.repeat(np.arange(n), deg)
    m[src, layer.indices] = 1.0 / deg[src]
    return m


@dataclass(frozen=True)
class TransitionMatrices:
    """Intra-layer (``M_I``) and inter-layer (``M_C``) transition matrices.

    Both are indexed by internal node id. ``node_order`` groups nodes by
    community; ``blocked()`` returns the matrices permuted into that order,
    where ``M_I`` is block diagonal.
    """

    M_I: np.ndarray
    M_C: np.ndarray
    node_order: np.ndarray
    intra_isolated: np.ndarray

    def blocked(self):
        o = self.node_order
        return self.M_I[np.ix_(o, o)], self.M_C[np.ix_(o, o)]


def build_transition_matrices(g: Graph, ld: LayerDecomposition) -> TransitionMatrices:
    n = g.node_count
    M_I = _row_normalised(ld.intra, n)
    M_C = _row_normalised(ld.inter, n)
    order = np.argsort(ld.community, kind="stable")
    return TransitionMatrices(M_I, M_C, order, ld.isolated_in_intra())


def random_walk_matrix(g: Graph) -> np.ndarray:
    """Plain ``D^-1 A`` transition matrix (zero rows for isolated nodes)."""
    deg = g.degrees()
    a = g.adjacency_matrix()
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(deg[:, None] > 0, a / np.maximum(deg, 1)[:, None], 0.0)


@dataclass(frozen=True)
class PmiMatrix:
    """Shifted PMI values; ``mask`` marks entries whose log argument is zero.

    Masked entries of ``values`` are NaN.
    """

    values: np.ndarray
    mask: np.ndarray
    window: int
    negatives: int

    def unmasked(self) -> np.ndarray:
        return self.values[~self.mask]


def _pmi_from_cooccurrence(S, g: Graph, T, k) -> PmiMatrix:
    deg = g.degrees().astype(float)
    vol = float(g.volume())
    mask = (S <= 0) | (deg[None, :] == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.log(vol * S / deg[None, :]) - np.log(k)
    vals[mask] = np.nan
    return PmiMatrix(vals, mask, T, k)


def layer_cooccurrence(tm: TransitionMatrices, T: int) -> np.ndarray:
    """``(1/T) sum_{r=1..T} (M_C^r + M_I^r)``."""
    acc = np.zeros_like(tm.M_I)
    pc = np.eye(len(acc))
    pi = np.eye(len(acc))
    for _ in range(T):
        pc = pc @ tm.M_C
        pi = pi @ tm.M_I
        acc += pc + pi
    return acc / T


def shifted_pmi(g: Graph, tm: TransitionMatrices, T: int, k: int) -> PmiMatrix:
    r"""Shifted PMI matrix of the two-layer walk.

    .. math::
        \log\Big(\mathrm{vol}(G)\,\frac{1}{T}\sum_{r=1}^{T}(M_C^r + M_I^r)\,D^{-1}\Big) - \log k
    """
    if T < 1 or k < 1:
        raise ValueError("T and k must be >= 1")
    return _pmi_from_cooccurrence(layer_cooccurrence(tm, T), g, T, k)


def enumerated_cooccurrence(ld: LayerDecomposition, T: int) -> np.ndarray:
    """Same quantity as :func:`layer_cooccurrence`, by listing every walk.

    Walks of 1..T steps are expanded explicitly in each layer and their
    probabilities (products of ``1 / layer degree``) accumulated at the end
    node. Exponential in ``T``; only for tiny graphs.
    """
    n = ld.node_count
    acc = np.zeros((n, n))
    for layer in (ld.inter, ld.intra):
        deg = layer.degrees()
        nbrs = [layer.neighbors(v).tolist() for v in range(n)]
        for w in range(n):
            stack = [(w, 1.0, 0)]
            while stack:
                node, prob, depth = stack.pop()
                if depth == T or deg[node] == 0:
                    continue
                step = prob / deg[node]
                for x in nbrs[node]:
                    acc[w, x] += step
                    stack.append((x, step, depth + 1))
    return acc / T


def enumerated_pmi(g: Graph, ld: LayerDecomposition, T: int, k: int) -> PmiMatrix:
    return _pmi_from_cooccurrence(enumerated_cooccurrence(ld, T), g, T, k)


def first_passage_table(P: np.ndarray, v: int, t_max: int) -> np.ndarray:
    """First-passage probabilities into ``v`` from every start node.

    Row ``t`` (``0 <= t <= t_max``) holds ``r^t_{.v}``: the probability that a
    chain started at each node is at ``v`` at step ``t`` without having
    visited it before. Row 0 is the indicator of ``v``; for ``t >= 1`` entry
    ``v`` is defined as 0 (a walk started at ``v`` has already visited it).
    """
    n = len(P)
    out = np.zeros((t_max + 1, n))
    out[0, v] = 1.0
    if t_max == 0:
        return out
    Q = P.copy()
    Q[:, v] = 0.0
    r = P[:, v].copy()
    r[v] = 0.0
    out[1] = r
    for t in range(2, t_max + 1):
        r = Q @ r
        r[v] = 0.0
        out[t] = r
    return out


def first_passage(g: Graph, mode: str, ld: LayerDecomposition | None, u: int, v: int,
                  t_max: int) -> list[float]:
    """``[r^1_uv, ..., r^t_max_uv]`` for the plain or the two-layer walk.

    In ``"tlwalk"`` mode the chain is the layer the walk from ``u`` lives in:
    ``M_C`` for a bridging ``u``, otherwise ``M_I``.
    """
    if u == v:
        raise ValueError("u and v must differ")
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if mode == "traditional":
        P = random_walk_matrix(g)
    elif mode == "tlwalk":
        if ld is None:
            raise ValueError("tlwalk mode needs a layer decomposition")
        if ld.community[u] != ld.community[v] and not (ld.bridging[u] and ld.bridging[v]):
            raise DomainError("cross-community first passage needs both nodes to be bridging")
        tm = build_transition_matrices(g, ld)
        P = tm.M_C if ld.bridging[u] else tm.M_I
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return first_passage_table(P, v, t_max)[1:, u].tolist()


@dataclass(frozen=True)
class Lemma1Record:
    u: int
    v: int
    t: int
    walk_prob: float
    bound: float
    equality_expected: bool

    @property
    def holds(self) -> bool:
        return self.walk_prob >= self.bound - 1e-12

    @property
    def equal(self) -> bool:
        return abs(self.walk_prob - self.bound) <= 1e-12

    @property
    def equality_consistent(self) -> bool:
        """Equality exactly when the neighbor condition predicts it.

        When both sides are zero equality is trivial and not counted against.
        """
        if self.bound <= 1e-15 and self.walk_prob <= 1e-15:
            return True
        return self.equal == self.equality_expected


def lemma1_records(g: Graph, ld: LayerDecomposition, t_max: int = 10,
                   reading: str = "literal") -> list[Lemma1Record]:
    """Compare the two-layer first-passage probability with the degree-diluted bound.

    For every ordered pair of bridging nodes ``u, v`` in different
    communities and every ``1 <= t <= t_max`` this records ``r^t_uv`` from the
    exact dynamic program on ``M_C`` and the bound
    ``(1/d(u)) sum_{j in N(u)} r^{t-1}_jv`` over all graph neighbors of ``u``.

    ``reading`` fixes what ``r^{t-1}_jv`` means for a neighbor ``j``:

    ``"literal"``
        ``r^{t-1}_jv`` is the first-passage probability of a two-layer walk
        started at ``j`` (on ``M_C`` if ``j`` is bridging, else 0 because an
        intra walk cannot leave ``j``'s community). Equality is expected when
        every neighbor of ``u`` is a bridging node. This fails whenever ``u``
        has a bridging neighbor inside its own community: that neighbor adds
        to the bound but the walk from ``u`` never steps to it.
    ``"proof"``
        Neighbors reached through an intra-community edge contribute 0, so
        only cross-community neighbors count. Then
        ``r^t_uv = d(u) / d_inter(u) * bound`` and the inequality always
        holds, with equality when every neighbor lies in another community.
    """
    if reading not in ("proof", "literal"):
        raise ValueError(f"unknown reading {reading!r}")
    tm = build_transition_matrices(g, ld)
    comm = ld.community
    bridging = ld.bridging_nodes
    records = []
    for v in bridging:
        table = first_passage_table(tm.M_C, v, t_max)
        for u in bridging:
            if comm[u] == comm[v]:
                continue
            nbrs = g.neighbors(u)
            if reading == "proof":
                counted = comm[nbrs] != comm[u]
            else:
                counted = ld.bridging[nbrs]
            expected = bool(counted.all())
            for t in range(1, t_max + 1):
                s = table[t - 1][nbrs[counted]].sum()
                records.append(Lemma1Record(int(u), int(v), t, float(table[t, u]),
                                            float(s) / len(nbrs), expected))
    return records


def sgns_pmi_spearman(W: np.ndarray, C: np.ndarray, pmi: PmiMatrix) -> float:
    """Spearman correlation between ``W C^T`` and the unmasked PMI entries."""
    dots = W @ C.T
    rho = spearmanr(dots[~pmi.mask], pmi.unmasked()).correlation
    return float(rho)


def dump_matrix_tsv(path, matrix, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t" + "\t".join(labels) + "\n")
        for lab, row in zip(labels, matrix):
            fh.write(lab + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")


def dump_pmi_tsv(path, pmi: PmiMatrix, labels) -> None:
    dump_matrix_tsv(path, np.where(pmi.mask, 0.0, pmi.values), labels)
    mask_path = str(path) + ".mask"
    with open(mask_path, "w", encoding="utf-8") as fh:
        fh.write("\t" + "\t".join(labels) + "\n")
        for lab, row in zip(labels, pmi.mask):
            fh.write(lab + "\t" + "\t".join("1" if x else "0" for x in row) + "\n")
