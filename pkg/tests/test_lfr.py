import numpy as np
import pytest

from tlwalk.layers import decompose
from tlwalk.lfr import (LfrConfig, LfrError, _calibrated_xmin, _powerlaw_mean, lfr_generate,
                        sample_degrees)


def test_config_validation():
    with pytest.raises(LfrError):
        LfrConfig(tau1=0.9)
    with pytest.raises(LfrError):
        LfrConfig(tau2=1.0)
    with pytest.raises(LfrError):
        LfrConfig(mu=1.2)
    with pytest.raises(LfrError):
        LfrConfig(s_min=50, s_max=40)
    with pytest.raises(LfrError):
        LfrConfig(s_max=30)  # a degree-50 node cannot fit 45 internal edges


def test_calibrated_xmin():
    x = _calibrated_xmin(10, 50, 3.0)
    assert _powerlaw_mean(x, 50, 3.0) == pytest.approx(10, rel=1e-9)


def test_degree_sample_range():
    cfg = LfrConfig()
    d = sample_degrees(cfg, np.random.default_rng(0))
    assert d.min() >= 1 and d.max() <= cfg.k_max


def test_mean_degree_within_five_percent():
    means = [lfr_generate(LfrConfig(seed=s))[2]["mean_degree"] for s in range(10)]
    assert abs(np.mean(means) - 10) <= 0.5


def test_mu_zero_has_no_inter_edges():
    g, truth, meta = lfr_generate(LfrConfig(mu=0.0, seed=7))
    assert decompose(g, truth).inter.edge_count == 0
    assert meta["realized_mu"] == 0.0


def test_mu_one_has_no_intra_edges():
    g, truth, _ = lfr_generate(LfrConfig(mu=1.0, seed=3))
    assert decompose(g, truth).intra.edge_count == 0


@pytest.mark.slow
def test_realized_mu_tracks_request():
    for mu in np.round(np.arange(0.1, 1.0, 0.1), 1):
        got = np.mean([lfr_generate(LfrConfig(mu=float(mu), seed=s))[2]["realized_mu"]
                       for s in range(5)])
        assert abs(got - mu) <= 0.03, (mu, got)


@pytest.mark.parametrize("mu", [0.1, 0.5])
def test_output_invariants(mu):
    cfg = LfrConfig(mu=mu, seed=11)
    g, truth, meta = lfr_generate(cfg)
    a = g.adjacency_matrix()
    assert np.array_equal(a, a.T) and not np.diag(a).any()
    assert len(truth.assignment) == cfg.n
    sizes = truth.sizes()
    assert sizes.min() >= cfg.s_min and sizes.max() <= cfg.s_max
    assert sizes.sum() == cfg.n
    assert sum(meta["community_sizes"]) == cfg.n
    assert meta["edges"] == g.edge_count
    assert meta["eq9_mu"] > 0


def test_reproducible():
    a = lfr_generate(LfrConfig(seed=5, n=300, s_max=60, mu=0.3))
    b = lfr_generate(LfrConfig(seed=5, n=300, s_max=60, mu=0.3))
    assert a[0] == b[0] and np.array_equal(a[1].assignment, b[1].assignment)
