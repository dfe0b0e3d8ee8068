"""Limiting spectra of squared generalized singular values and precoder power.

The base density is

    f_{y,y'}(x) = (1 - y') sqrt((x - L)(U - x)) / (2 pi x (x y' + y)),  L < x < U,

with g = sqrt(1 - (1 - y)(1 - y')), L = ((1 - g)/(1 - y'))^2 and
U = ((1 + g)/(1 - y'))^2.  For m >= n the squared values follow
f_{1/eta, 1/eta}; for m < n < 2m they follow
eta/(2eta - 1)^2 f_{eta/(2eta-1), eta}(x/(2eta - 1)).  Note that in the
second case y = eta/(2eta - 1) > 1, where f_{y,y'} carries mass 1/y; the
eta/(2eta - 1) prefactor restores unit mass.

Integrals against these densities use the substitution
x = lo + (hi - lo) sin^2(theta), which absorbs the square-root edges.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError, NormalizationDivergenceError, QuadratureError
from .gsvd import GsvdFactors, Regime, precoder_power


def density_support(y: float, y_prime: float) -> tuple[float, float]:
    _check_params(y, y_prime)
    g = math.sqrt(1.0 - (1.0 - y) * (1.0 - y_prime))
    return ((1.0 - g) / (1.0 - y_prime)) ** 2, ((1.0 + g) / (1.0 - y_prime)) ** 2


def _check_params(y, y_prime):
    # y > 1 is legitimate (overlap regime); y' = 1 is the degenerate eta = 1 case.
    if not (y > 0.0 and math.isfinite(y)):
        raise DomainError(f"density parameter y must be positive, got {y}")
    if not 0.0 < y_prime < 1.0:
        raise DomainError(f"density parameter y' must lie in (0, 1), got {y_prime}")
    if y == 1.0:
        raise DomainError("y = 1 gives a degenerate support (L = 0)")


def density_f(x, y: float, y_prime: float):
    """Evaluate f_{y,y'} at ``x`` (scalar or array); zero outside (L, U)."""
    lo, hi = density_support(y, y_prime)
    xs = np.asarray(x, dtype=float)
    inside = (xs > lo) & (xs < hi)
    xi = np.where(inside, xs, 0.5 * (lo + hi))
    val = (1.0 - y_prime) * np.sqrt((xi - lo) * (hi - xi)) / (2.0 * np.pi * xi * (xi * y_prime + y))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LimitingLaw:
    """Asymptotic law of w^2 for antenna ratio eta = m/n.

    ``y``/``y_prime`` are None when there is no density: the wide regime
    (deterministic Sigma's) and eta = 1, where f_{1,1} degenerates.
    """

    eta: float
    regime: Regime
    y: Optional[float]
    y_prime: Optional[float]
    scale: float
    support_lo: float
    support_hi: float
    t_sq: float

    @property
    def has_density(self) -> bool:
        return self.y is not None

    def _kernel(self, x):
        """pdf(x) / sqrt((x - lo)(hi - x)), smooth on the closed support."""
        s = self.scale
        u = np.asarray(x, dtype=float) / s
        base = (1.0 - self.y_prime) / (2.0 * np.pi * u * (u * self.y_prime + self.y))
        # pdf(x) = (eta/s^2) f(x/s) for overlap; sqrt((u-L)(U-u)) = sqrt((x-lo)(hi-x))/s
        weight = 1.0 if self.regime is Regime.TALL else self.eta / s**3
        return weight * base

    def pdf(self, x):
        _require_density(self)
        if self.regime is Regime.TALL:
            return density_f(x, self.y, self.y_prime)
        s = self.scale
        val = self.eta / s**2 * np.asarray(density_f(np.asarray(x, dtype=float) / s, self.y, self.y_prime))
        return float(val) if val.ndim == 0 else val


def theoretical_t_sq(m: int, n: int) -> float:
    """Long-term precoder power: 1/(2eta - 1) if 2m > n, 1/(1/(2eta) - 1) if 2m < n."""
    if n == 2 * m:
        raise NormalizationDivergenceError(f"n = 2m = {n}: E[trace(QQ^H)] diverges")
    eta = m / n
    if 2 * m > n:
        return 1.0 / (2.0 * eta - 1.0)
    return 1.0 / (1.0 / (2.0 * eta) - 1.0)


def limiting_law(m: int, n: int) -> LimitingLaw:
    """Regime-dispatched limiting law of w^2 for the m/n antenna ratio."""
    regime = Regime.of(m, n)
    eta = m / n
    t_sq = theoretical_t_sq(m, n)
    if regime is Regime.WIDE or m == n:
        return LimitingLaw(eta, regime, None, None, 1.0, 0.0, 0.0, t_sq)
    if regime is Regime.TALL:
        y = y_prime = 1.0 / eta
        scale = 1.0
    else:
        y, y_prime = eta / (2.0 * eta - 1.0), eta
        scale = 2.0 * eta - 1.0
    lo, hi = density_support(y, y_prime)
    return LimitingLaw(eta, regime, y, y_prime, scale, scale * lo, scale * hi, t_sq)


def _require_density(law: LimitingLaw):
    if not law.has_density:
        raise DomainError(f"law at eta={law.eta:g} ({law.regime.value}) has no density")


def _theta(law: LimitingLaw, x: float) -> float:
    lo, hi = law.support_lo, law.support_hi
    frac = min(max((x - lo) / (hi - lo), 0.0), 1.0)
    return math.asin(math.sqrt(frac))


def integrate_against_law(
    law: LimitingLaw,
    func: Optional[Callable[[float], float]],
    a: float,
    b: float,
    *,
    epsabs: float = 1e-11,
    tol: float = 1e-8,
) -> tuple[float, float]:
    """Adaptive quadrature of ``func(x) pdf(x)`` over [a, b] clipped to the support.

    ``func=None`` integrates the density alone.  Returns (value, error
    estimate); raises QuadratureError if the estimate exceeds ``tol``.
    """
    _require_density(law)
    lo, hi = law.support_lo, law.support_hi
    a, b = max(a, lo), min(b, hi)
    if not a < b:
        return 0.0, 0.0
    width = hi - lo
    kernel = law._kernel

    def integrand(theta):
        s, c = math.sin(theta), math.cos(theta)
        x = lo + width * s * s
        val = float(kernel(x)) * 2.0 * width * width * s * s * c * c
        return val if func is None else val * func(x)

    value, err = integrate.quad(integrand, _theta(law, a), _theta(law, b),
                                epsabs=epsabs, epsrel=1e-12, limit=200)
    if not err <= tol:
        raise QuadratureError(f"quadrature error estimate {err:.2e} exceeds {tol:.0e}")
    return value, err


def law_cdf(law: LimitingLaw, x):
    """CDF of the limiting law; accepts a scalar or an array."""
    _require_density(law)
    xs = np.asarray(x, dtype=float)
    flat = xs.ravel()
    out = np.empty_like(flat)
    # Accumulate over sorted points so each quad call spans one short panel.
    order = np.argsort(flat)
    acc, prev = 0.0, law.support_lo
    for idx in order:
        xi = flat[idx]
        if xi > prev:
            acc += integrate_against_law(law, None, prev, xi)[0]
            prev = min(xi, law.support_hi)
        out[idx] = min(max(acc, 0.0), 1.0)
    out = out.reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=32)
def _cdf_table(law: LimitingLaw, panels: int = 2048, order: int = 10):
    """Composite Gauss-Legendre CDF table on a uniform theta grid."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, math.pi / 2.0, panels + 1)
    cum = np.concatenate([[0.0], np.cumsum(_gl_panels(law, edges[:-1], edges[1:], nodes, weights))])
    return edges, cum, nodes, weights


def _gl_panels(law, t0, t1, nodes, weights):
    lo, width = law.support_lo, law.support_hi - law.support_lo
    half = 0.5 * (t1 - t0)
    th = 0.5 * (t0 + t1)[:, None] + half[:, None] * nodes[None, :]
    s, c = np.sin(th), np.cos(th)
    vals = law._kernel(lo + width * s * s) * 2.0 * width * width * s * s * c * c
    return half * (vals @ weights)


def _fast_cdf_theta(law, theta):
    edges, cum, nodes, weights = _cdf_table(law)
    j = np.clip(np.searchsorted(edges, theta, side="right") - 1, 0, edges.size - 2)
    return cum[j] + _gl_panels(law, edges[j], theta, nodes, weights)


def law_ppf(law: LimitingLaw, p, *, xtol: float = 1e-10):
    """Inverse CDF by vectorized bisection on x to ``xtol``.

    The CDF inside the bisection is read from a cached composite
    Gauss-Legendre table rather than adaptive quadrature, so that 10^4
    quantiles cost milliseconds.
    """
    _require_density(law)
    ps = np.asarray(p, dtype=float)
    if np.any((ps < 0) | (ps > 1)):
        raise DomainError("probabilities must lie in [0, 1]")
    lo_x = np.full(ps.shape, law.support_lo)
    hi_x = np.full(ps.shape, law.support_hi)
    width = law.support_hi - law.support_lo
    while np.max(hi_x - lo_x, initial=0.0) > xtol:
        mid = 0.5 * (lo_x + hi_x)
        theta = np.arcsin(np.sqrt(np.clip((mid - law.support_lo) / width, 0.0, 1.0)))
        below = _fast_cdf_theta(law, theta.ravel()).reshape(ps.shape) < ps
        lo_x = np.where(below, mid, lo_x)
        hi_x = np.where(below, hi_x, mid)
    out = 0.5 * (lo_x + hi_x)
    return float(out) if out.ndim == 0 else out


def sample_law(law: LimitingLaw, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-transform sample from the limiting law."""
    return law_ppf(law, rng.uniform(size=size))


@dataclass(frozen=True)
class EmpiricalSpectrum:
    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empirical spectrum needs at least one value")
        if not np.all(np.isfinite(v)) or v[0] < 0:
            raise ValueError("empirical spectrum values must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.values.size

    def cdf(self, x):
        """F(x) = (1/k) #{v_j <= x}."""
        return np.searchsorted(self.values, x, side="right") / self.count


def ks_distance(emp: EmpiricalSpectrum, law: LimitingLaw) -> float:
    """One-sample Kolmogorov-Smirnov statistic sup |F_emp - F_law|."""
    _require_density(law)
    k = emp.count
    f = np.asarray(law_cdf(law, emp.values))
    i = np.arange(1, k + 1)
    return float(max(np.max(i / k - f), np.max(f - (i - 1) / k)))


def empirical_t_sq(batch: Sequence[GsvdFactors], regime: Optional[Regime] = None) -> float:
    """Batch mean of the per-realization precoder power (trace(QQ^H) or trace(QBQ^H))."""
    if len(batch) == 0:
        raise ValueError("empirical_t_sq needs a nonempty batch")
    shape = (batch[0].m, batch[0].n)
    regime = regime or batch[0].regime
    for f in batch:
        if (f.m, f.n) != shape or f.regime is not regime:
            raise ValueError("all factors must share (m, n) and regime")
    return float(np.mean([precoder_power(f) for f in batch]))


def law_table(law: LimitingLaw, grid: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, pdf, cdf) on a uniform grid of ``grid`` points spanning the support."""
    _require_density(law)
    if grid < 2:
        raise ConfigError("grid needs at least 2 points")
    xs = np.linspace(law.support_lo, law.support_hi, grid)
    return xs, law.pdf(xs), law_cdf(law, xs)


def export_law_csv(law: LimitingLaw, grid: int, path) -> None:
    """Write ``x,pdf,cdf`` rows on a uniform grid spanning the support."""
    xs, pdf, cdf = law_table(law, grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "pdf", "cdf"])
        for row in zip(xs, pdf, cdf):
            writer.writerow([f"{v:.12g}" for v in row])
