import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from tlwalk.community import louvain
from tlwalk.graph import from_edges
from tlwalk.layers import decompose
from tlwalk.sgns import cooccurrence_counts, train
from tlwalk.spectral import (DomainError, build_transition_matrices, dump_pmi_tsv,
                             enumerated_pmi, first_passage, first_passage_table,
                             layer_cooccurrence, lemma1_records, random_walk_matrix,
                             shifted_pmi)
from tlwalk.walks import generate_corpus

from conftest import planted_graph


def test_two_triangles_blocks():
    g = from_edges([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], 6)
    tm = build_transition_matrices(g, decompose(g, [0, 0, 0, 1, 1, 1]))
    block = np.full((3, 3), 0.5) - 0.5 * np.eye(3)
    expected = np.zeros((6, 6))
    expected[:3, :3] = expected[3:, 3:] = block
    assert np.array_equal(tm.M_I, expected)
    assert not tm.M_C.any()


def test_barbell_inter_matrix(barbell, barbell_partition):
    tm = build_transition_matrices(barbell, decompose(barbell, barbell_partition))
    c, d = barbell.node_id("c"), barbell.node_id("d")
    expected = np.zeros((6, 6))
    expected[c, d] = expected[d, c] = 1.0
    assert np.array_equal(tm.M_C, expected)


def test_all_inter_node_has_zero_intra_row():
    g = from_edges([(0, 1), (1, 2), (0, 2), (2, 3)], 4)
    tm = build_transition_matrices(g, decompose(g, [0, 0, 0, 1]))
    assert not tm.M_I[3].any()
    assert tm.intra_isolated.tolist() == [3]


def test_blocked_order_is_block_diagonal(karate):
    p = louvain(karate)
    tm = build_transition_matrices(karate, decompose(karate, p))
    MI, _ = tm.blocked()
    comm = p.assignment[tm.node_order]
    assert not MI[comm[:, None] != comm[None, :]].any()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), min_size=1, max_size=40),
       st.lists(st.integers(0, 2), min_size=12, max_size=12))
def test_row_sums(pairs, labels):
    g = from_edges(pairs, 12)
    ld = decompose(g, labels)
    tm = build_transition_matrices(g, ld)
    has_intra = ld.intra.degrees() > 0
    assert np.all(tm.M_I.sum(axis=1)[has_intra] == pytest.approx(1.0, abs=1e-15))
    assert np.all(tm.M_I.sum(axis=1)[~has_intra] == 0)
    assert np.all(tm.M_C.sum(axis=1)[ld.bridging] == pytest.approx(1.0, abs=1e-15))
    assert np.all(tm.M_C.sum(axis=1)[~ld.bridging] == 0)
    # M_C lives on bridging x bridging
    assert not tm.M_C[~ld.bridging].any() and not tm.M_C[:, ~ld.bridging].any()


def test_single_edge_pmi():
    g = from_edges([(0, 1)], 2)
    ld = decompose(g, [0, 0])
    pmi = shifted_pmi(g, build_transition_matrices(g, ld), T=1, k=1)
    assert pmi.values[0, 1] == pytest.approx(np.log(2), abs=1e-15)
    assert pmi.mask[0, 0] and pmi.mask[1, 1]
    assert np.isnan(pmi.values[0, 0])


def eight_node_graph():
    e = [(0, 1), (0, 2), (1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (6, 7), (4, 6), (4, 7),
         (3, 4), (2, 5)]
    return from_edges(e, 8), [0, 0, 0, 0, 1, 1, 1, 1]


@pytest.mark.parametrize("T", [1, 2, 3])
def test_pmi_matches_enumeration_eight_nodes(T):
    g, labels = eight_node_graph()
    ld = decompose(g, labels)
    a = shifted_pmi(g, build_transition_matrices(g, ld), T, 5)
    b = enumerated_pmi(g, ld, T, 5)
    assert np.array_equal(a.mask, b.mask)
    assert np.max(np.abs(a.unmasked() - b.unmasked())) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), min_size=1, max_size=30),
       st.lists(st.integers(0, 1), min_size=12, max_size=12), st.integers(1, 3))
def test_pmi_matches_enumeration_random(pairs, labels, T):
    g = from_edges(pairs, 12)
    ld = decompose(g, labels)
    a = shifted_pmi(g, build_transition_matrices(g, ld), T, 3)
    b = enumerated_pmi(g, ld, T, 3)
    assert np.array_equal(a.mask, b.mask)
    if (~a.mask).any():
        assert np.max(np.abs(a.unmasked() - b.unmasked())) <= 1e-10


def test_cooccurrence_rows_are_stochastic(karate):
    ld = decompose(karate, louvain(karate))
    S = layer_cooccurrence(build_transition_matrices(karate, ld), 4)
    # each non-empty layer adds one stochastic row; bridging nodes with intra edges count twice
    want = (ld.intra.degrees() > 0).astype(float) + ld.bridging
    assert np.allclose(S.sum(axis=1), want)


def test_bad_pmi_params(barbell, barbell_partition):
    tm = build_transition_matrices(barbell, decompose(barbell, barbell_partition))
    with pytest.raises(ValueError):
        shifted_pmi(barbell, tm, 0, 5)


def test_dump_pmi(tmp_path, barbell, barbell_partition):
    ld = decompose(barbell, barbell_partition)
    pmi = shifted_pmi(barbell, build_transition_matrices(barbell, ld), 2, 5)
    path = tmp_path / "pmi.tsv"
    dump_pmi_tsv(path, pmi, barbell.labels)
    rows = path.read_text().splitlines()
    assert rows[0].split("\t")[1:] == list(barbell.labels)
    mask_rows = (tmp_path / "pmi.tsv.mask").read_text().splitlines()
    assert len(mask_rows) == 7


# --- first passage -----------------------------------------------------------

def brute_first_passage(P, u, v, t):
    # sum over explicit paths u -> ... -> v that avoid v before step t
    total = 0.0
    stack = [(u, 1.0, 0)]
    while stack:
        node, prob, depth = stack.pop()
        if depth == t:
            if node == v:
                total += prob
            continue
        if node == v and depth > 0:
            continue
        for x in np.flatnonzero(P[node]):
            stack.append((x, prob * P[node, x], depth + 1))
    return total


@pytest.mark.parametrize("seed", range(3))
def test_first_passage_dp_matches_paths(seed):
    g, _ = planted_graph(8, 0.6, 0.2, seed)
    P = random_walk_matrix(g)
    for v in range(0, 8, 3):
        table = first_passage_table(P, v, 6)
        for u in range(8):
            if u == v:
                continue
            for t in range(1, 7):
                assert table[t, u] == pytest.approx(brute_first_passage(P, u, v, t), abs=1e-14)


def test_first_passage_table_conventions():
    P = random_walk_matrix(from_edges([(0, 1), (1, 2)], 3))
    table = first_passage_table(P, 2, 4)
    assert table[0].tolist() == [0, 0, 1]
    assert np.all(table[1:, 2] == 0)


def test_barbell_first_step(barbell, barbell_partition):
    ld = decompose(barbell, barbell_partition)
    c, d = barbell.node_id("c"), barbell.node_id("d")
    tl = first_passage(barbell, "tlwalk", ld, c, d, 10)
    plain = first_passage(barbell, "traditional", None, c, d, 10)
    assert tl[0] == 1.0
    assert plain[0] == pytest.approx(1 / 3)


def test_barbell_tlwalk_dominates_each_step(barbell, barbell_partition):
    ld = decompose(barbell, barbell_partition)
    c, d = barbell.node_id("c"), barbell.node_id("d")
    tl = first_passage(barbell, "tlwalk", ld, c, d, 10)
    plain = first_passage(barbell, "traditional", None, c, d, 10)
    assert all(a >= b for a, b in zip(tl, plain)), list(zip(tl, plain))


def test_barbell_tlwalk_dominates_cumulative(barbell, barbell_partition):
    ld = decompose(barbell, barbell_partition)
    c, d = barbell.node_id("c"), barbell.node_id("d")
    tl = np.cumsum(first_passage(barbell, "tlwalk", ld, c, d, 10))
    plain = np.cumsum(first_passage(barbell, "traditional", None, c, d, 10))
    assert np.all(tl >= plain - 1e-15)
    assert np.all(plain < 1)


def test_domain_errors(barbell, barbell_partition):
    ld = decompose(barbell, barbell_partition)
    a, d = barbell.node_id("a"), barbell.node_id("d")
    with pytest.raises(DomainError):
        first_passage(barbell, "tlwalk", ld, a, d, 3)
    with pytest.raises(ValueError):
        first_passage(barbell, "tlwalk", ld, d, d, 3)
    with pytest.raises(ValueError):
        first_passage(barbell, "lazy", ld, a, d, 3)
    # same community, non-bridging start: intra chain
    b = barbell.node_id("b")
    assert first_passage(barbell, "tlwalk", ld, a, b, 1)[0] == pytest.approx(0.5)


# --- neighbour-average first-passage bound --------------------------------------

def test_lemma1_barbell_both_readings(barbell, barbell_partition):
    ld = decompose(barbell, barbell_partition)
    for reading in ("literal", "proof"):
        recs = lemma1_records(barbell, ld, 10, reading)
        assert recs and all(r.holds and r.equality_consistent for r in recs)


@pytest.mark.parametrize("seed", range(20))
def test_lemma1_proof_reading_random(seed):
    g, truth = planted_graph(6 + seed % 7, 0.6, 0.25, seed)
    recs = lemma1_records(g, decompose(g, truth), 10, "proof")
    assert all(r.holds for r in recs)
    assert all(r.equality_consistent for r in recs)


def test_lemma1_literal_counterexample():
    # 0,1 in community A and 2,3 in B; every node bridging; 0-1 is an intra edge
    g = from_edges([(0, 1), (0, 2), (1, 3), (2, 3)], 4)
    ld = decompose(g, [0, 0, 1, 1])
    lit = {(r.u, r.v, r.t): r for r in lemma1_records(g, ld, 4, "literal")}
    r = lit[(0, 3, 2)]
    # the walk from 0 only ever sees 2, whose inter neighbor is 0 again
    assert r.walk_prob == 0.0
    assert r.bound == pytest.approx(0.5)
    assert not r.holds
    proof = {(r.u, r.v, r.t): r for r in lemma1_records(g, ld, 4, "proof")}
    assert proof[(0, 3, 2)].holds


def test_lemma1_bad_reading(barbell, barbell_partition):
    with pytest.raises(ValueError):
        lemma1_records(barbell, decompose(barbell, barbell_partition), 3, "loose")


# --- SGNS against corpus statistics -----------------------------------------------

def corpus_pmi(counts, k):
    with np.errstate(divide="ignore"):
        return np.log(counts * counts.sum() / np.outer(counts.sum(1), counts.sum(0))) - np.log(k)


@pytest.mark.parametrize("seed", range(3))
def test_sgns_tracks_corpus_pmi(seed):
    g, truth = planted_graph(12, 0.7, 0.1, seed)
    ld = decompose(g, truth)
    corpus = generate_corpus(ld, 80, 50, seed)
    e = train(corpus, 12, dim=16, window=2, negatives=5, epochs=50, seed=seed)
    counts = cooccurrence_counts(corpus, 12, 2).astype(float)
    seen = counts > 0
    dots = e.W.astype(float) @ e.C.T.astype(float)
    assert spearmanr(dots[seen], corpus_pmi(counts, 5)[seen]).correlation >= 0.85
