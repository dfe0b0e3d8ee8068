"""Closed-form normalized average rates in the large-antenna limit.

For 2m > n the average over the shared NOMA subchannels is an integral
against the limiting law of w^2, split at the SIC threshold d1^tau/d2^tau:

    C(a, b, c) = int_a^b log2(x + c) pdf(x) dx,    D(a, b) = int_a^b pdf(x) dx,

with limits clipped to the law's support.  The m >= n result weights the
NOMA average by n/m = 1/eta; the m < n < 2m result weights it by
(2m - n)/m = 2 - 1/eta and adds (1/eta - 1) log2(1 + P(2eta-1)/(d_i^tau N0))
for each user's private streams.  For 2m < n every stream is private.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .channel import SystemConfig
from .errors import DomainError
from .gsvd import Regime
from .spectral import LimitingLaw, integrate_against_law, limiting_law

QUAD_TOL = 1e-8


@dataclass(frozen=True)
class AsymptoticRateResult:
    r1_norm: float
    r2_norm: float
    regime: Regime
    eta: float
    quadrature_error_estimate: float = 0.0

    @property
    def sum_norm(self) -> float:
        return self.r1_norm + self.r2_norm


class _Integrals:
    """The C and D integrals against one law, with a running error total."""

    def __init__(self, law: LimitingLaw):
        self.law = law
        self.error = 0.0

    def c(self, a, b, shift):
        val, err = integrate_against_law(self.law, lambda x: math.log2(x + shift), a, b, tol=QUAD_TOL)
        self.error += err
        return val

    def d(self, a, b):
        val, err = integrate_against_law(self.law, None, a, b, tol=QUAD_TOL)
        self.error += err
        return val


def _noma_average(cfg: SystemConfig, law: LimitingLaw):
    """Per-subchannel average rates of the shared NOMA streams."""
    ints = _Integrals(law)
    lo, hi = law.support_lo, law.support_hi
    thr = cfg.sic_threshold
    p, l2 = cfg.power, cfg.l2_sq
    inv_t = 2.0 * cfg.eta - 1.0  # 1/t^2
    n1 = cfg.path_loss1 * cfg.noise
    n2 = cfg.path_loss2 * cfg.noise
    c, d = ints.c, ints.d

    r1 = (
        c(thr, hi, n1 / (n1 + p * l2 * inv_t))
        - c(thr, hi, 1.0)
        + math.log2((n1 + p * l2 * inv_t) / n1) * d(thr, hi)
        + c(lo, thr, n1 / (n1 + p * inv_t))
        - c(lo, thr, n1 / (n1 + p * l2 * inv_t))
        + math.log2((n1 + p * inv_t) / (n1 + p * l2 * inv_t)) * d(lo, thr)
    )
    r2 = (
        c(thr, hi, 1.0 + p * inv_t / n2)
        - c(thr, hi, 1.0 + p * l2 * inv_t / n2)
        + c(lo, thr, (p * l2 * inv_t + n2) / n2)
        - c(lo, thr, 1.0)
    )
    return r1, r2, ints.error


def corollary1_rates(cfg: SystemConfig) -> AsymptoticRateResult:
    """Normalized average rates for m >= n (eta > 1)."""
    eta = cfg.eta
    if eta < 1.0:
        raise DomainError(f"this closed form needs m >= n, got eta={eta:g}")
    if eta == 1.0:
        raise DomainError("eta = 1 has no limiting density; closed form not evaluated")
    law = limiting_law(cfg.m, cfg.n)
    r1, r2, err = _noma_average(cfg, law)
    return AsymptoticRateResult(r1 / eta, r2 / eta, Regime.TALL, eta, err / eta)


def corollary2_rates(cfg: SystemConfig) -> AsymptoticRateResult:
    """Normalized average rates for m < n < 2m (1/2 < eta < 1)."""
    eta = cfg.eta
    if not 0.5 < eta < 1.0:
        raise DomainError(f"this closed form needs 1/2 < eta < 1, got eta={eta:g}")
    law = limiting_law(cfg.m, cfg.n)
    r1, r2, err = _noma_average(cfg, law)
    shared = 2.0 - 1.0 / eta
    private = 1.0 / eta - 1.0
    snr = cfg.power * (2.0 * eta - 1.0) / cfg.noise
    r1 = shared * r1 + private * math.log2(1.0 + snr / cfg.path_loss1)
    r2 = shared * r2 + private * math.log2(1.0 + snr / cfg.path_loss2)
    return AsymptoticRateResult(r1, r2, Regime.OVERLAP, eta, shared * err)


def wide_rates(cfg: SystemConfig) -> AsymptoticRateResult:
    """Normalized rates for 2m < n: m private streams per user at power P/t^2."""
    eta = cfg.eta
    if not 2 * cfg.m < cfg.n:
        raise DomainError(f"wide-regime closed form needs 2m < n, got m={cfg.m}, n={cfg.n}")
    snr = cfg.power * (1.0 / (2.0 * eta) - 1.0) / cfg.noise
    return AsymptoticRateResult(
        math.log2(1.0 + snr / cfg.path_loss1),
        math.log2(1.0 + snr / cfg.path_loss2),
        Regime.WIDE,
        eta,
    )


def asymptotic_rates(cfg: SystemConfig) -> AsymptoticRateResult:
    """Dispatch to the closed form matching cfg's (m, n) regime."""
    regime = Regime.of(cfg.m, cfg.n)
    if regime is Regime.TALL:
        return corollary1_rates(cfg)
    if regime is Regime.OVERLAP:
        return corollary2_rates(cfg)
    return wide_rates(cfg)


SWEEP_COLUMNS = ("eta", "P_dbm", "d2", "r1_norm", "r2_norm", "regime")


def asymptotic_sweep(cfg: SystemConfig, param: str, values) -> list[dict]:
    """Closed-form rates at each value of one SystemConfig field."""
    rows = []
    for v in values:
        point = cfg.replace(**{param: v})
        res = asymptotic_rates(point)
        rows.append({
            "eta": point.eta,
            "P_dbm": point.p_dbm,
            "d2": point.d2,
            "r1_norm": res.r1_norm,
            "r2_norm": res.r2_norm,
            "regime": res.regime.value,
        })
    return rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in row.items()})
