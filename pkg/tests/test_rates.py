import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsvd_noma.channel import SystemConfig, sample_channels, sample_user_channels
from gsvd_noma.errors import ConfigError
from gsvd_noma.gsvd import GsvdFactors, Regime, gsvd, sigma_template
from gsvd_noma.rates import (
    SicUser,
    SubchannelKind,
    SubchannelPlan,
    gsvd_noma_report,
    hybrid_group_rates,
    instantaneous_rates,
    oma_multiuser_rates,
    oma_tdma_rates,
    plan_subchannels,
    sic_user,
    write_rate_reports,
)
from gsvd_noma.spectral import theoretical_t_sq

K = SubchannelKind


def factors_for(m, n, seed=0):
    cfg = SystemConfig(m=m, n=n, seed=seed)
    pair = sample_channels(cfg, 0)
    return cfg, pair, gsvd(pair.h1, pair.h2)


def synthetic(alpha_sq, m=1, n=1):
    """Factors carrying only the diagonals, for rate arithmetic checks."""
    alpha = np.sqrt(np.atleast_1d(alpha_sq))
    beta = np.sqrt(1 - alpha**2)
    s1, s2 = sigma_template(alpha, beta, m, n)
    eye = np.eye(m)
    return GsvdFactors(eye, eye, np.eye(n), s1, s2, alpha, beta, Regime.of(m, n))


def test_plan_counts_and_layout():
    cfg, _, f = factors_for(3, 2)
    assert [p.kind for p in plan_subchannels(f, cfg)] == [K.NOMA, K.NOMA]
    cfg, _, f = factors_for(2, 3)
    assert [p.kind for p in plan_subchannels(f, cfg)] == [K.OMA_USER1, K.NOMA, K.OMA_USER2]
    cfg, _, f = factors_for(2, 6 + 1)
    assert [p.kind for p in plan_subchannels(f, cfg)] == [K.OMA_USER1] * 2 + [K.MUTED] * 3 + [K.OMA_USER2] * 2


def test_plan_rejects_mismatched_config():
    _, _, f = factors_for(3, 2)
    with pytest.raises(ConfigError):
        plan_subchannels(f, SystemConfig(m=4, n=2))


def test_plan_overlap_uses_shifted_index():
    cfg, _, f = factors_for(5, 7, seed=3)
    plans = plan_subchannels(f, cfg)
    shared = [p for p in plans if p.kind is K.NOMA]
    assert [p.index for p in shared] == [2, 3, 4]
    np.testing.assert_allclose([p.alpha_sq for p in shared], f.alpha**2)


def test_sic_threshold_tie_goes_to_user2():
    assert sic_user(0.01, 0.01) is SicUser.USER2
    assert sic_user(0.0100001, 0.01) is SicUser.USER1
    assert sic_user(0.005, 0.01) is SicUser.USER2


def test_sic_at_user1_rate_is_one_bit():
    cfg = SystemConfig(m=1, n=1, p_dbm=0.0, n0_dbm=0.0, d1=1.0, d2=100.0, l2_sq=0.25)
    # P alpha^2 l2^2 / (t^2 d1^tau N0) = 1 with alpha^2 = 0.8, t^2 = 0.2.
    f = synthetic(0.8)
    plans = plan_subchannels(f, cfg)
    assert plans[0].sic_at is SicUser.USER1
    rep = instantaneous_rates(plans, f, cfg, t_sq=0.2)
    assert rep.r1_per_sub[0] == pytest.approx(1.0, rel=1e-14)


def test_far_user_rate_is_log2_3():
    # P/(t^2 d2^tau N0) = 10, beta^2 = 0.5, l2^2 = 0.2.
    cfg = SystemConfig(m=1, n=1, p_dbm=10.0, n0_dbm=0.0, d1=1.0, d2=1.0, tau=2.0, l2_sq=0.2)
    plan = SubchannelPlan(0, K.NOMA, 0.5, 0.5, SicUser.USER1)
    rep = instantaneous_rates([plan], synthetic(0.5), cfg, t_sq=1.0)
    assert rep.r2_per_sub[0] == pytest.approx(np.log2(3), rel=1e-14)


def test_tie_selects_user2_branch():
    # d1 = d2 puts the threshold at 1; alpha = beta gives w^2 = 1 exactly.
    cfg = SystemConfig(m=1, n=1, d1=50, d2=50)
    a = np.array([np.sqrt(0.5)])
    s1, s2 = sigma_template(a, a, 1, 1)
    f = GsvdFactors(np.eye(1), np.eye(1), np.eye(1), s1, s2, a, a, Regime.TALL)
    assert f.w_sq[0] == cfg.sic_threshold == 1.0
    plans = plan_subchannels(f, cfg)
    assert plans[0].sic_at is SicUser.USER2
    rep = instantaneous_rates(plans, f, cfg, t_sq=1.0)
    noise2 = cfg.path_loss2 * cfg.noise
    assert rep.r2_per_sub[0] == pytest.approx(np.log2(1 + cfg.power * 0.5 * cfg.l2_sq / noise2))


def test_oma_streams_and_muted():
    cfg, _, f = factors_for(2, 5, seed=1)
    rep = instantaneous_rates(plan_subchannels(f, cfg), f, cfg, t_sq=2.0)
    expect1 = np.log2(1 + cfg.power / (2.0 * cfg.path_loss1 * cfg.noise))
    expect2 = np.log2(1 + cfg.power / (2.0 * cfg.path_loss2 * cfg.noise))
    np.testing.assert_allclose(rep.r1_per_sub, [expect1, expect1, 0, 0, 0])
    np.testing.assert_allclose(rep.r2_per_sub, [0, 0, 0, expect2, expect2])


def test_report_totals_and_normalization():
    cfg, pair, _ = factors_for(6, 4, seed=2)
    rep = gsvd_noma_report(pair.h1, pair.h2, cfg, theoretical_t_sq(6, 4))
    assert rep.r1_total == pytest.approx(rep.r1_per_sub.sum(), abs=1e-12)
    assert rep.r1_norm == pytest.approx(rep.r1_total / 6)
    assert rep.sum_norm == pytest.approx(rep.r1_norm + rep.r2_norm)
    assert np.all(rep.r1_per_sub >= 0) and np.all(np.isfinite(rep.r2_per_sub))


shapes = st.tuples(st.integers(1, 8), st.integers(1, 8)).filter(lambda s: s[1] != 2 * s[0])


@given(shapes, st.integers(0, 10_000), st.floats(-10, 50))
def test_rates_monotone_in_power(shape, seed, p_dbm):
    m, n = shape
    cfg = SystemConfig(m=m, n=n, seed=seed, p_dbm=p_dbm)
    pair = sample_channels(cfg, 0)
    f = gsvd(pair.h1, pair.h2)
    t_sq = theoretical_t_sq(m, n)
    lo = instantaneous_rates(plan_subchannels(f, cfg), f, cfg, t_sq)
    hi_cfg = cfg.replace(p_dbm=p_dbm + 1.0)
    hi = instantaneous_rates(plan_subchannels(f, hi_cfg), f, hi_cfg, t_sq)
    assert np.all(hi.r1_per_sub >= lo.r1_per_sub) and np.all(hi.r2_per_sub >= lo.r2_per_sub)


@given(shapes, st.integers(0, 10_000))
def test_w_sq_substitution_identity(shape, seed):
    m, n = shape
    cfg = SystemConfig(m=m, n=n, seed=seed)
    pair = sample_channels(cfg, 0)
    f = gsvd(pair.h1, pair.h2)
    w_sq = f.w_sq
    alpha = np.sqrt(w_sq / (1 + w_sq))
    beta = np.sqrt(1 / (1 + w_sq))
    g = GsvdFactors(f.u, f.v, f.q, f.sigma1, f.sigma2, alpha, beta, f.regime)
    t_sq = theoretical_t_sq(m, n)
    a = instantaneous_rates(plan_subchannels(f, cfg), f, cfg, t_sq)
    b = instantaneous_rates(plan_subchannels(g, cfg), g, cfg, t_sq)
    np.testing.assert_allclose(a.r1_per_sub, b.r1_per_sub, atol=1e-12)
    np.testing.assert_allclose(a.r2_per_sub, b.r2_per_sub, atol=1e-12)


def test_wide_rates_depend_only_on_t_sq():
    cfg = SystemConfig(m=2, n=7)
    reports = [gsvd_noma_report(*(lambda p: (p.h1, p.h2))(sample_channels(cfg, t)), cfg, 3.0) for t in range(3)]
    for rep in reports[1:]:
        np.testing.assert_array_equal(rep.r1_per_sub, reports[0].r1_per_sub)


def test_oma_single_channel():
    cfg = SystemConfig(m=1, n=1)
    rep = oma_tdma_rates(np.array([[1.0]]), np.array([[1.0]]), cfg)
    assert rep.r1_norm == pytest.approx(0.5 * np.log2(1 + cfg.power / (cfg.path_loss1 * cfg.noise)))


def test_oma_equal_singular_values():
    cfg = SystemConfig(m=2, n=2)
    h = 3.0 * np.eye(2)
    rep = oma_tdma_rates(h, h, cfg)
    expected = 0.5 * 2 * np.log2(1 + (cfg.power / 2) * 9 / (cfg.path_loss1 * cfg.noise))
    assert rep.r1_total == pytest.approx(expected)


def test_noma_beats_oma_reference_setup():
    cfg = SystemConfig(m=28, n=35, p_dbm=30.0, seed=1)
    t_sq = theoretical_t_sq(28, 35)
    noma = oma = 0.0
    for t in range(20):
        pair = sample_channels(cfg, t)
        noma += gsvd_noma_report(pair.h1, pair.h2, cfg, t_sq).sum_norm
        oma += oma_tdma_rates(pair.h1, pair.h2, cfg).sum_norm
    assert noma > oma


def test_hybrid_single_group_equals_plain():
    cfg = SystemConfig(m=4, n=5)
    h = sample_user_channels(cfg, 2, 0)
    res = hybrid_group_rates(h, (10.0, 100.0), [(0, 1)], cfg)
    plain = gsvd_noma_report(h[0], h[1], cfg, theoretical_t_sq(4, 5))
    np.testing.assert_allclose(res.per_user, [plain.r1_norm, plain.r2_norm])


def test_hybrid_swap_within_pair():
    cfg = SystemConfig(m=4, n=5)
    h = sample_user_channels(cfg, 4, 1)
    d = (15.0, 10.0, 200.0, 300.0)
    a = hybrid_group_rates(h, d, [(0, 2), (1, 3)], cfg)
    b = hybrid_group_rates(h, d, [(2, 0), (3, 1)], cfg)
    assert a.sum_rate == pytest.approx(b.sum_rate, rel=1e-9)
    np.testing.assert_allclose(a.per_user, b.per_user, rtol=1e-9)


@pytest.mark.parametrize("pairing", [[(0, 1)], [(0, 1), (1, 2)], [(0, 1, 2), (3,)], [(0, 0), (1, 2)]])
def test_hybrid_invalid_partition(pairing):
    cfg = SystemConfig(m=2, n=3)
    with pytest.raises(ConfigError):
        hybrid_group_rates(sample_user_channels(cfg, 4, 0), (1, 2, 3, 4), pairing, cfg)


def test_oma_multiuser_shares():
    cfg = SystemConfig(m=2, n=3)
    h = sample_user_channels(cfg, 4, 0)
    rates = oma_multiuser_rates(h, (10, 10, 10, 10), cfg)
    assert rates.shape == (4,) and np.all(rates > 0)


def test_rate_report_csv(tmp_path):
    cfg, pair, _ = factors_for(2, 3)
    rep = gsvd_noma_report(pair.h1, pair.h2, cfg, theoretical_t_sq(2, 3))
    path = tmp_path / "rates.csv"
    write_rate_reports(path, [rep, rep])
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["trial", "subchannel", "kind", "r1", "r2"]
    assert len(rows) == 1 + 2 * 3
    assert rows[1][2] == "OmaUser1" and rows[2][2] == "NomaShared"
    assert float(rows[2][3]) == rep.r1_per_sub[1]
