import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from gsvd_noma.channel import SystemConfig, sample_channels
from gsvd_noma.errors import DomainError, NormalizationDivergenceError
from gsvd_noma.gsvd import Regime, gsvd
from gsvd_noma.spectral import (
    EmpiricalSpectrum,
    density_f,
    density_support,
    empirical_t_sq,
    export_law_csv,
    integrate_against_law,
    ks_distance,
    law_cdf,
    law_ppf,
    limiting_law,
    sample_law,
    theoretical_t_sq,
)

params = st.floats(0.05, 0.95)


def test_support_example():
    lo, hi = density_support(0.5, 0.5)
    assert math.sqrt(0.75) == pytest.approx(0.866025, abs=1e-6)
    assert lo == pytest.approx(0.071797, abs=1e-6)
    assert hi == pytest.approx(13.928203, abs=1e-6)


def test_zero_outside_support():
    assert density_f(0.0, 0.5, 0.5) == 0.0
    assert density_f(20.0, 0.5, 0.5) == 0.0
    assert np.all(density_f(np.array([-1.0, 0.05, 14.0]), 0.5, 0.5) == 0.0)


@pytest.mark.parametrize("y", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("yp", [0.25, 0.5, 0.75])
def test_density_normalization_oracle(y, yp):
    # Independent oracle: plain adaptive quad with scipy's algebraic endpoint weight.
    lo, hi = density_support(y, yp)
    val, _ = integrate.quad(
        lambda x: (1 - yp) / (2 * np.pi * x * (x * yp + y)), lo, hi,
        weight="alg", wvar=(0.5, 0.5), epsabs=1e-12,
    )
    assert val == pytest.approx(1.0, abs=1e-6)


@given(params, params)
def test_density_nonnegative_and_continuous(y, yp):
    lo, hi = density_support(y, yp)
    xs = np.linspace(lo, hi, 2001)
    vals = density_f(xs, y, yp)
    assert np.all(vals >= 0)
    assert vals[0] == 0.0 and vals[-1] == 0.0
    # Continuity at interior points: a tiny step gives a tiny change.
    inner = np.linspace(lo, hi, 503)[1:-1]
    h = 1e-9 * (hi - lo)
    jump = np.abs(density_f(inner + h, y, yp) - density_f(inner, y, yp))
    assert np.max(jump) < 1e-5 * np.max(vals)


@pytest.mark.parametrize("y,yp", [(0.5, 1.0), (0.5, 0.0), (0.0, 0.5), (1.0, 0.5), (-1, 0.5)])
def test_domain_errors(y, yp):
    with pytest.raises(DomainError):
        density_f(1.0, y, yp)


def test_law_parameters():
    law = limiting_law(40, 50)
    assert law.regime is Regime.OVERLAP
    assert law.t_sq == pytest.approx(1 / 0.6)
    assert law.y == pytest.approx(0.8 / 0.6) and law.y_prime == pytest.approx(0.8)
    assert law.scale == pytest.approx(0.6)
    lo, hi = density_support(law.y, law.y_prime)
    assert (law.support_lo, law.support_hi) == pytest.approx((0.6 * lo, 0.6 * hi))
    tall = limiting_law(2 * 7, 7)
    assert (tall.y, tall.y_prime, tall.scale) == (0.5, 0.5, 1.0)
    assert limiting_law(1, 3).t_sq == pytest.approx(2.0)
    assert not limiting_law(1, 3).has_density
    assert not limiting_law(5, 5).has_density
    with pytest.raises(NormalizationDivergenceError):
        limiting_law(4, 8)


def test_tall_support_matches_closed_form():
    eta = 1.4
    law = limiting_law(28, 20)
    g = math.sqrt(1 - (1 - 1 / eta) ** 2)
    assert law.support_lo == pytest.approx(((1 - g) / (1 - 1 / eta)) ** 2)
    assert law.support_hi == pytest.approx(((1 + g) / (1 - 1 / eta)) ** 2)


@pytest.mark.parametrize("m,n", [(5, 4), (3, 2), (2, 1), (3, 5), (3, 4), (4, 5), (5, 9)])
def test_law_mass_is_one(m, n):
    law = limiting_law(m, n)
    mass, err = integrate_against_law(law, None, -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert law_cdf(law, law.support_lo) == 0.0
    assert law_cdf(law, law.support_hi) == pytest.approx(1.0, abs=1e-6)


def test_degenerate_law_rejects_density_queries():
    with pytest.raises(DomainError):
        law_cdf(limiting_law(2, 5), 1.0)
    with pytest.raises(DomainError):
        limiting_law(3, 3).pdf(1.0)


def test_cdf_monotone_and_median():
    law = limiting_law(30, 20)
    xs = np.linspace(law.support_lo - 1, law.support_hi + 1, 1000)
    cdf = law_cdf(law, xs)
    assert np.all(np.diff(cdf) >= 0)
    assert cdf[0] == 0.0 and cdf[-1] == pytest.approx(1.0, abs=1e-9)
    lo, hi = law.support_lo, law.support_hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if law_cdf(law, mid) < 0.5 else (lo, mid)
    assert law_cdf(law, 0.5 * (lo + hi)) == pytest.approx(0.5, abs=1e-6)
    assert law_ppf(law, 0.5) == pytest.approx(0.5 * (lo + hi), abs=1e-8)


def test_ppf_inverts_cdf():
    law = limiting_law(30, 40)
    ps = np.array([0.01, 0.2, 0.5, 0.9, 0.999])
    np.testing.assert_allclose(law_cdf(law, law_ppf(law, ps)), ps, atol=1e-8)


def test_ks_self_consistency():
    law = limiting_law(40, 20)
    sample = sample_law(law, 10_000, np.random.default_rng(1))
    assert ks_distance(EmpiricalSpectrum(sample), law) < 0.02


def test_ks_one_point():
    law = limiting_law(40, 20)
    mid = 0.5 * (law.support_lo + law.support_hi)
    f_mid = law_cdf(law, mid)
    ks = ks_distance(EmpiricalSpectrum([mid]), law)
    assert ks >= abs(0.0 - f_mid)
    assert ks == pytest.approx(max(f_mid, 1 - f_mid))


def test_ks_from_gsvd_tall():
    pair = sample_channels(SystemConfig(m=200, n=100, seed=2), 0)
    f = gsvd(pair.h1, pair.h2)
    assert ks_distance(EmpiricalSpectrum(f.w_sq), limiting_law(200, 100)) < 0.05


def test_ks_decreases_with_size():
    # Averaged over a few realizations to keep the trend well above noise.
    means = []
    for scale in (1, 2, 4):
        m, n = 30 * scale, 20 * scale
        law = limiting_law(m, n)
        cfg = SystemConfig(m=m, n=n, seed=100 + scale)
        ks = [ks_distance(EmpiricalSpectrum(gsvd(p.h1, p.h2).w_sq), law)
              for p in (sample_channels(cfg, t) for t in range(8))]
        means.append(np.mean(ks))
    assert means[0] > means[1] > means[2]


def test_empirical_spectrum_validation():
    emp = EmpiricalSpectrum([3.0, 1.0, 2.0])
    np.testing.assert_array_equal(emp.values, [1.0, 2.0, 3.0])
    assert emp.count == 3 and emp.cdf(2.0) == pytest.approx(2 / 3)
    for bad in ([], [1.0, -1.0], [np.inf]):
        with pytest.raises(ValueError):
            EmpiricalSpectrum(bad)


def test_empirical_t_sq_batch_of_one():
    pair = sample_channels(SystemConfig(m=4, n=5), 0)
    f = gsvd(pair.h1, pair.h2)
    assert empirical_t_sq([f]) == pytest.approx(np.sum(np.abs(f.q) ** 2), rel=1e-15)
    with pytest.raises(ValueError):
        empirical_t_sq([])


def test_empirical_t_sq_wide_uses_masked_columns():
    pair = sample_channels(SystemConfig(m=1, n=3), 0)
    f = gsvd(pair.h1, pair.h2)
    expected = np.sum(np.abs(f.q[:, 0]) ** 2) + np.sum(np.abs(f.q[:, 2]) ** 2)
    assert empirical_t_sq([f]) == pytest.approx(expected)


def test_theoretical_t_sq_values():
    assert theoretical_t_sq(40, 50) == pytest.approx(5 / 3)
    assert theoretical_t_sq(2, 8) == pytest.approx(1.0)
    assert theoretical_t_sq(28, 20) == pytest.approx(1 / (2 * 1.4 - 1))


def test_law_csv(tmp_path):
    path = tmp_path / "law.csv"
    export_law_csv(limiting_law(200, 100), 11, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x", "pdf", "cdf"] and len(rows) == 12
    assert float(rows[1][2]) == 0.0 and float(rows[-1][2]) == pytest.approx(1.0)
