"""LFR-style benchmark graphs with planted communities.

Degrees follow a truncated power law with exponent ``tau1`` and community
sizes one with exponent ``tau2``. Every node sends a fraction ``mu`` of its
edges outside its community (randomly rounded per node). Edges come from stub
matching inside each community and across communities; self-loops and
repeated edges are repaired by random edge swaps.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .community import Partition
from .graph import Graph, GraphError, from_edges


class LfrError(GraphError):
    pass


@dataclass(frozen=True)
class LfrConfig:
    n: int = 1000
    k_avg: float = 10.0
    k_max: int = 50
    tau1: float = 3.0
    tau2: float = 1.5
    mu: float = 0.1
    s_min: int = 20
    s_max: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.tau1 <= 1 or self.tau2 <= 1:
            raise LfrError("power-law exponents tau1 and tau2 must exceed 1")
        if not 0 <= self.mu <= 1:
            raise LfrError("mu must lie in [0, 1]")
        if not 1 <= self.s_min <= self.s_max <= self.n:
            raise LfrError("need 1 <= s_min <= s_max <= n")
        if not 1 <= self.k_avg < self.k_max:
            raise LfrError("need 1 <= k_avg < k_max")
        if round((1 - self.mu) * self.k_max) > self.s_max - 1:
            raise LfrError(
                f"a node of degree k_max={self.k_max} needs {round((1 - self.mu) * self.k_max)}"
                f" internal neighbours but communities hold at most {self.s_max} nodes")


def _powerlaw_mean(xmin, xmax, tau):
    if abs(tau - 1) < 1e-9:
        return (xmax - xmin) / np.log(xmax / xmin)
    if abs(tau - 2) < 1e-9:
        return np.log(xmax / xmin) / (1 / xmin - 1 / xmax)
    a, b = 1 - tau, 2 - tau
    return (a / b) * (xmax ** b - xmin ** b) / (xmax ** a - xmin ** a)


def _powerlaw_sample(rng, size, xmin, xmax, tau):
    u = rng.random(size)
    if abs(tau - 1) < 1e-9:
        return xmin * (xmax / xmin) ** u
    a = 1 - tau
    return (xmin ** a + u * (xmax ** a - xmin ** a)) ** (1 / a)


def _calibrated_xmin(k_avg, k_max, tau):
    """Lower cut-off whose power law on [xmin, k_max] has mean ``k_avg``."""
    top = float(k_max)
    lo, hi = 1.0, top * (1 - 1e-9)
    if _powerlaw_mean(lo, top, tau) > k_avg:
        raise LfrError(f"k_avg={k_avg} is below the smallest reachable mean")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _powerlaw_mean(mid, top, tau) < k_avg:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_degrees(cfg: LfrConfig, rng) -> np.ndarray:
    xmin = _calibrated_xmin(cfg.k_avg, cfg.k_max, cfg.tau1)
    deg = np.rint(_powerlaw_sample(rng, cfg.n, xmin, cfg.k_max, cfg.tau1)).astype(np.int64)
    return np.clip(deg, 1, cfg.k_max)


def sample_community_sizes(cfg: LfrConfig, rng, attempts=200) -> np.ndarray:
    for _ in range(attempts):
        sizes = []
        while sum(sizes) < cfg.n:
            s = int(np.rint(_powerlaw_sample(rng, 1, cfg.s_min, cfg.s_max, cfg.tau2)[0]))
            sizes.append(min(max(s, cfg.s_min), cfg.s_max))
        sizes = np.array(sizes)
        excess = sizes.sum() - cfg.n
        slack = sizes - cfg.s_min
        if slack.sum() < excess:
            continue
        # trim the overshoot from the communities with the most room
        for i in np.argsort(-slack, kind="stable"):
            cut = min(excess, slack[i])
            sizes[i] -= cut
            excess -= cut
            if excess == 0:
                break
        return sizes
    raise LfrError("could not draw community sizes that cover n within [s_min, s_max]")


def assign_communities(k_in, sizes, rng, attempts=50) -> np.ndarray:
    """Place nodes so each fits its internal degree; largest internal degree first."""
    order = np.argsort(-k_in, kind="stable")
    for _ in range(attempts):
        free = sizes.copy()
        member = np.full(len(k_in), -1)
        ok = True
        for v in order:
            fits = np.flatnonzero((free > 0) & (sizes - 1 >= k_in[v]))
            if len(fits) == 0:
                ok = False
                break
            c = rng.choice(fits, p=free[fits] / free[fits].sum())
            member[v] = c
            free[c] -= 1
        if ok:
            return member
        order = order.copy()
        rng.shuffle(order[: max(1, len(order) // 10)])
    raise LfrError("could not place nodes into communities large enough for their internal degree")


def _match_stubs(stub_nodes, rng):
    stubs = rng.permutation(stub_nodes)
    return stubs.reshape(-1, 2)


def _repair(edges, valid_pair, rng, budget, what):
    """Swap endpoints of bad edges with random partners until all are valid.

    ``valid_pair(a, b)`` says whether an edge may exist at all (ignoring
    duplicates); duplicates are tracked here.
    """
    edges = edges.copy()
    m = len(edges)
    if m == 0:
        return edges
    count: dict[tuple, int] = {}
    key = lambda a, b: (a, b) if a < b else (b, a)  # noqa: E731
    for a, b in edges.tolist():
        k = key(a, b)
        count[k] = count.get(k, 0) + 1

    def bad(i):
        a, b = int(edges[i, 0]), int(edges[i, 1])
        return not valid_pair(a, b) or count[key(a, b)] > 1

    pending = [i for i in range(m) if bad(i)]
    spent = 0
    while pending:
        i = pending.pop()
        if not bad(i):
            continue
        while True:
            spent += 1
            if spent > budget:
                raise LfrError(f"{what}: rewiring budget of {budget} swaps exhausted")
            j = int(rng.integers(m))
            if j == i:
                continue
            a, b = int(edges[i, 0]), int(edges[i, 1])
            c, d = int(edges[j, 0]), int(edges[j, 1])
            if rng.random() < 0.5:
                c, d = d, c
            n1, n2 = key(a, c), key(b, d)
            if (not valid_pair(a, c) or not valid_pair(b, d) or n1 == n2
                    or count.get(n1, 0) or count.get(n2, 0)):
                continue
            for k in (key(a, b), key(c, d)):
                count[k] -= 1
            count[n1] = 1
            count[n2] = 1
            edges[i] = (a, c)
            edges[j] = (b, d)
            break
    return edges


def _match_community(stubs, rng, what, tries=20):
    # near-complete communities can trap the swap repair; start over a few times
    for attempt in range(tries):
        e = _match_stubs(stubs, rng)
        try:
            return _repair(e, lambda a, b: a != b, rng, 20 * len(e) + 100, what)
        except LfrError:
            if attempt == tries - 1:
                raise
    raise AssertionError("unreachable")


def lfr_generate(cfg: LfrConfig) -> tuple[Graph, Partition, dict]:
    """Generate one benchmark graph.

    Returns
    -------
    graph : Graph
    truth : Partition
        Planted communities.
    meta : dict
        Config echo plus realised statistics: mean degree, per-node
        mixing fraction and the ``n * p_out / <k>`` variant of mu.
    """
    rng = np.random.default_rng(cfg.seed)
    deg = sample_degrees(cfg, rng)
    # unbiased rounding: E[k_out] = mu * deg exactly, so the mean mixing fraction is mu
    x = cfg.mu * deg
    k_out = (np.floor(x) + (rng.random(cfg.n) < x - np.floor(x))).astype(np.int64)
    k_in = deg - k_out
    sizes = sample_community_sizes(cfg, rng)
    member = assign_communities(k_in, sizes, rng)

    intra = []
    for c in range(len(sizes)):
        nodes = np.flatnonzero(member == c)
        kin = k_in[nodes]
        if kin.sum() % 2:
            j = rng.choice(np.flatnonzero(kin > 0))
            k_in[nodes[j]] -= 1
            kin = k_in[nodes]
        if kin.sum() == 0:
            continue
        intra.append(_match_community(np.repeat(nodes, kin), rng, f"community {c}"))
    if k_out.sum() % 2:
        j = rng.choice(np.flatnonzero(k_out > 0))
        k_out[j] -= 1
    inter = np.empty((0, 2), dtype=np.int64)
    if k_out.sum():
        e = _match_stubs(np.repeat(np.arange(cfg.n), k_out), rng)
        inter = _repair(e, lambda a, b: member[a] != member[b], rng,
                        100 * len(e) + 100, "inter-community edges")
    edges = np.vstack(intra + [inter]) if intra else inter
    g = from_edges(edges, cfg.n)
    truth = Partition.from_labels(member, g if g.edge_count else None)

    d = g.degrees()
    src = np.repeat(np.arange(cfg.n), d)
    ext = np.bincount(src[member[src] != member[g.indices]], minlength=cfg.n)
    has = d > 0
    cross_pairs = (cfg.n ** 2 - np.sum(sizes.astype(float) ** 2)) / 2
    p_out = len(inter) / cross_pairs if cross_pairs else 0.0
    meta = dict(config=asdict(cfg),
                nodes=g.node_count, edges=g.edge_count,
                mean_degree=float(d.mean()),
                communities=int(len(sizes)),
                community_sizes=sizes.tolist(),
                realized_mu=float(np.mean(ext[has] / d[has])),
                eq9_mu=float(cfg.n * p_out / d.mean()) if d.mean() else 0.0)
    return g, truth, meta
