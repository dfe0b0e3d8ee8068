"""GSVD-NOMA subchannel planning, instantaneous rates and the OMA-TDMA baseline.

All rates are in bits per channel use (log base 2).  A user's normalized
rate is its total rate divided by the per-user antenna count m.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import SystemConfig
from .errors import ConfigError
from .gsvd import GsvdFactors, Regime, gsvd
from .spectral import theoretical_t_sq


class SubchannelKind(str, enum.Enum):
    NOMA = "NomaShared"
    OMA_USER1 = "OmaUser1"
    OMA_USER2 = "OmaUser2"
    MUTED = "Muted"


class SicUser(enum.IntEnum):
    USER1 = 1
    USER2 = 2


@dataclass(frozen=True)
class SubchannelPlan:
    index: int
    kind: SubchannelKind
    alpha_sq: Optional[float] = None
    beta_sq: Optional[float] = None
    sic_at: Optional[SicUser] = None


def sic_user(w_sq: float, threshold: float) -> SicUser:
    """User 1 performs SIC iff w^2 > d1^tau / d2^tau; ties go to user 2."""
    return SicUser.USER1 if w_sq > threshold else SicUser.USER2


def plan_subchannels(factors: GsvdFactors, cfg: SystemConfig) -> list[SubchannelPlan]:
    """Assign each of the n transmit streams a role (0-based indices)."""
    m, n = cfg.m, cfg.n
    if (factors.m, factors.n) != (m, n):
        raise ConfigError(f"factors are {factors.m}x{factors.n} but config is {m}x{n}")
    thr = cfg.sic_threshold
    a_sq, b_sq = factors.alpha**2, factors.beta**2
    w_sq = factors.w_sq

    def shared(i, j):
        return SubchannelPlan(i, SubchannelKind.NOMA, float(a_sq[j]), float(b_sq[j]), sic_user(w_sq[j], thr))

    if factors.regime is Regime.TALL:
        return [shared(i, i) for i in range(n)]
    if factors.regime is Regime.OVERLAP:
        r = n - m
        return (
            [SubchannelPlan(i, SubchannelKind.OMA_USER1) for i in range(r)]
            + [shared(i, i - r) for i in range(r, m)]
            + [SubchannelPlan(i, SubchannelKind.OMA_USER2) for i in range(m, n)]
        )
    return (
        [SubchannelPlan(i, SubchannelKind.OMA_USER1) for i in range(m)]
        + [SubchannelPlan(i, SubchannelKind.MUTED) for i in range(m, n - m)]
        + [SubchannelPlan(i, SubchannelKind.OMA_USER2) for i in range(n - m, n)]
    )


@dataclass(frozen=True)
class RateReport:
    r1_per_sub: np.ndarray
    r2_per_sub: np.ndarray
    m: int
    t_sq_used: float
    kinds: tuple = field(default=(), compare=False)

    @property
    def r1_total(self) -> float:
        return float(np.sum(self.r1_per_sub))

    @property
    def r2_total(self) -> float:
        return float(np.sum(self.r2_per_sub))

    @property
    def r1_norm(self) -> float:
        return self.r1_total / self.m

    @property
    def r2_norm(self) -> float:
        return self.r2_total / self.m

    @property
    def sum_norm(self) -> float:
        return self.r1_norm + self.r2_norm

    def rows(self, trial: int):
        """CSV rows (trial, subchannel, kind, r1, r2)."""
        kinds = self.kinds or ("",) * self.r1_per_sub.size
        for i, (kind, r1, r2) in enumerate(zip(kinds, self.r1_per_sub, self.r2_per_sub)):
            yield trial, i, kind, float(r1), float(r2)


def write_rate_reports(path, reports: Sequence[RateReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "subchannel", "kind", "r1", "r2"])
        for trial, rep in enumerate(reports):
            for trial_, sub, kind, r1, r2 in rep.rows(trial):
                writer.writerow([trial_, sub, kind, repr(r1), repr(r2)])


def instantaneous_rates(
    plans: Sequence[SubchannelPlan], factors: GsvdFactors, cfg: SystemConfig, t_sq: float
) -> RateReport:
    """Per-subchannel achievable rates for one channel realization.

    On a shared subchannel with SIC at user 1 the far user's symbol carries
    power l1^2 and is decoded and cancelled by user 1 first; the mirror
    formulas apply when user 2 performs SIC.  OMA streams carry a single
    user's unit-power symbol.
    """
    if not t_sq > 0:
        raise ValueError(f"t_sq must be positive, got {t_sq}")
    if len(plans) != factors.n:
        raise ValueError(f"expected {factors.n} plans, got {len(plans)}")
    p = cfg.power
    noise1 = t_sq * cfg.path_loss1 * cfg.noise
    noise2 = t_sq * cfg.path_loss2 * cfg.noise
    l1, l2 = cfg.l1_sq, cfg.l2_sq
    r1 = np.zeros(len(plans))
    r2 = np.zeros(len(plans))
    for k, plan in enumerate(plans):
        if plan.kind is SubchannelKind.NOMA:
            pa, pb = p * plan.alpha_sq, p * plan.beta_sq
            if plan.sic_at is SicUser.USER1:
                r1[k] = np.log2(1.0 + pa * l2 / noise1)
                r2[k] = np.log2(1.0 + pb * l1 / (pb * l2 + noise2))
            else:
                r1[k] = np.log2(1.0 + pa * l1 / (pa * l2 + noise1))
                r2[k] = np.log2(1.0 + pb * l2 / noise2)
        elif plan.kind is SubchannelKind.OMA_USER1:
            r1[k] = np.log2(1.0 + p / noise1)
        elif plan.kind is SubchannelKind.OMA_USER2:
            r2[k] = np.log2(1.0 + p / noise2)
    kinds = tuple(plan.kind.value for plan in plans)
    return RateReport(r1, r2, cfg.m, float(t_sq), kinds)


def svd_equal_power_rates(h: np.ndarray, path_loss: float, cfg: SystemConfig) -> np.ndarray:
    """Per-stream rates of single-user SVD transmission with equal power P/k1."""
    s = np.linalg.svd(h, compute_uv=False)
    k1 = s.size
    return np.log2(1.0 + (cfg.power / k1) * s**2 / (path_loss * cfg.noise))


def oma_tdma_rates(h1: np.ndarray, h2: np.ndarray, cfg: SystemConfig) -> RateReport:
    """TDMA benchmark: each user gets half the time and its own SVD link.

    Per-stream entries already include the 1/2 time share.
    """
    r1 = 0.5 * svd_equal_power_rates(h1, cfg.path_loss1, cfg)
    r2 = 0.5 * svd_equal_power_rates(h2, cfg.path_loss2, cfg)
    k1 = r1.size
    # Both users' streams share one index axis: user 1 first, then user 2.
    per1 = np.concatenate([r1, np.zeros(k1)])
    per2 = np.concatenate([np.zeros(k1), r2])
    kinds = ("OmaUser1",) * k1 + ("OmaUser2",) * k1
    return RateReport(per1, per2, cfg.m, 1.0, kinds)


def gsvd_noma_report(h1, h2, cfg: SystemConfig, t_sq: float) -> RateReport:
    """Convenience: gsvd -> plan -> instantaneous rates."""
    f = gsvd(h1, h2)
    return instantaneous_rates(plan_subchannels(f, cfg), f, cfg, t_sq)


def validate_pairing(pairing, n_users: int) -> None:
    seen = [i for pair in pairing for i in pair]
    if any(len(pair) != 2 for pair in pairing):
        raise ConfigError("every group must contain exactly two users")
    if sorted(seen) != list(range(n_users)):
        raise ConfigError(f"pairing {pairing!r} does not partition users 0..{n_users - 1}")


@dataclass(frozen=True)
class HybridRates:
    per_user: np.ndarray  # normalized rate of each user, bandwidth share applied
    pairing: tuple

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.per_user))


def hybrid_group_rates(
    channels: Sequence[np.ndarray],
    distances: Sequence[float],
    pairing: Sequence[Sequence[int]],
    cfg: SystemConfig,
    t_sq: Optional[float] = None,
) -> HybridRates:
    """Hybrid MA: GSVD-NOMA inside each pair, equal orthogonal bandwidth across pairs.

    ``pairing`` holds 0-based user indices; the first member of a pair plays
    user 1.  ``t_sq`` defaults to the theoretical long-term value.
    """
    if len(channels) != len(distances):
        raise ConfigError("need one distance per user channel")
    validate_pairing(pairing, len(channels))
    t_sq = theoretical_t_sq(cfg.m, cfg.n) if t_sq is None else t_sq
    share = 1.0 / len(pairing)
    per_user = np.zeros(len(channels))
    for a, b in pairing:
        sub = cfg.replace(d1=float(distances[a]), d2=float(distances[b]))
        rep = gsvd_noma_report(channels[a], channels[b], sub, t_sq)
        per_user[a] = share * rep.r1_norm
        per_user[b] = share * rep.r2_norm
    return HybridRates(per_user, tuple(tuple(p) for p in pairing))


def oma_multiuser_rates(channels: Sequence[np.ndarray], distances: Sequence[float], cfg: SystemConfig) -> np.ndarray:
    """TDMA over K users: each gets a 1/K time share of its SVD link (normalized by m)."""
    k = len(channels)
    return np.array([
        svd_equal_power_rates(h, float(d) ** cfg.tau, cfg).sum() / (k * cfg.m)
        for h, d in zip(channels, distances)
    ])
