"""Monte Carlo engine and experiment presets.

Every trial is a pure function of (seed, trial_index).  Per-trial results
land in a buffer indexed by trial, and all reductions run over that buffer
in index order, so the aggregates do not depend on the worker count.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .asymptotic import asymptotic_rates
from .channel import SystemConfig, sample_channels, sample_user_channels
from .errors import ConfigError, DegenerateChannelError
from .gsvd import Regime, gsvd, n_generalized_values, precoder_power
from .rates import (
    hybrid_group_rates,
    instantaneous_rates,
    oma_multiuser_rates,
    oma_tdma_rates,
    plan_subchannels,
    validate_pairing,
)
from .spectral import theoretical_t_sq


BASELINES = ("oma_tdma", "asymptotic")
WORKERS_ENV = "GSVD_NOMA_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    return value


@dataclass
class _TrialBatch:
    """Raw per-trial outputs for a contiguous block of trial indices."""

    alpha_sq: np.ndarray  # trials x k
    beta_sq: np.ndarray
    power: np.ndarray  # trace(Q E[ss^H] Q^H)
    oma: np.ndarray  # trials x 2 normalized OMA rates, NaN when not requested
    ok: np.ndarray  # False for skipped degenerate trials


def _run_trials(cfg: SystemConfig, start: int, stop: int, with_oma: bool) -> _TrialBatch:
    count = stop - start
    k = n_generalized_values(cfg.m, cfg.n)
    out = _TrialBatch(
        np.full((count, k), np.nan), np.full((count, k), np.nan),
        np.full(count, np.nan), np.full((count, 2), np.nan), np.ones(count, dtype=bool),
    )
    for j, trial in enumerate(range(start, stop)):
        pair = sample_channels(cfg, trial)
        try:
            f = gsvd(pair.h1, pair.h2)
        except DegenerateChannelError:
            out.ok[j] = False
            continue
        out.alpha_sq[j] = f.alpha**2
        out.beta_sq[j] = f.beta**2
        out.power[j] = precoder_power(f)
        if with_oma:
            rep = oma_tdma_rates(pair.h1, pair.h2, cfg)
            out.oma[j] = (rep.r1_norm, rep.r2_norm)
    return out


def _chunks(trials: int, workers: int):
    size = max(1, -(-trials // (4 * workers)))
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def _collect(cfg: SystemConfig, with_oma: bool, workers: int) -> _TrialBatch:
    spans = _chunks(cfg.trials, workers)
    if workers == 1:
        parts = [_run_trials(cfg, a, b, with_oma) for a, b in spans]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_trials, cfg, a, b, with_oma) for a, b in spans]
            parts = [fut.result() for fut in futures]
    return _TrialBatch(*(np.concatenate([getattr(p, name) for p in parts])
                         for name in ("alpha_sq", "beta_sq", "power", "oma", "ok")))


class _FactorView:
    """Just enough of GsvdFactors for plan_subchannels/instantaneous_rates."""

    def __init__(self, cfg, regime, alpha_sq, beta_sq):
        self.m, self.n, self.regime = cfg.m, cfg.n, regime
        self.alpha = np.sqrt(alpha_sq)
        self.beta = np.sqrt(beta_sq)

    @property
    def w_sq(self):
        return self.alpha**2 / self.beta**2


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
    return mean, se


@dataclass
class AggregateResult:
    cfg: SystemConfig
    r1_mean: float
    r1_se: float
    r2_mean: float
    r2_se: float
    sum_mean: float
    sum_se: float
    trials: int
    skipped: int
    t_sq: float
    elapsed: float
    oma_r1: Optional[float] = None
    oma_r2: Optional[float] = None
    asym_r1: Optional[float] = None
    asym_r2: Optional[float] = None
    per_trial: np.ndarray = field(default=None, repr=False)  # trials x 2 normalized rates

    @property
    def oma_sum(self) -> Optional[float]:
        return None if self.oma_r1 is None else self.oma_r1 + self.oma_r2


def run_monte_carlo(
    cfg: SystemConfig,
    baselines: Sequence[str] = (),
    *,
    workers: Optional[int] = None,
    t_sq_mode: str = "theoretical",
) -> AggregateResult:
    """Average normalized GSVD-NOMA rates over cfg.trials channel draws.

    ``t_sq_mode`` is "theoretical" (the closed-form long-term value) or
    "empirical" (the batch mean of trace(Q E[ss^H] Q^H) over this run).
    Degenerate channel draws are skipped and counted.
    """
    unknown = set(baselines) - set(BASELINES)
    if unknown:
        raise ConfigError(f"unknown baselines {sorted(unknown)}; choose from {BASELINES}")
    if t_sq_mode not in ("theoretical", "empirical"):
        raise ConfigError(f"t_sq_mode must be 'theoretical' or 'empirical', got {t_sq_mode!r}")
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    regime = Regime.of(cfg.m, cfg.n)
    started = time.perf_counter()
    raw = _collect(cfg, "oma_tdma" in baselines, workers)
    ok = raw.ok
    if not ok.any():
        raise DegenerateChannelError("every trial was degenerate")
    if t_sq_mode == "theoretical":
        t_sq = theoretical_t_sq(cfg.m, cfg.n)
    else:
        t_sq = float(np.mean(raw.power[ok]))

    rates = np.full((cfg.trials, 2), np.nan)
    for j in np.flatnonzero(ok):
        view = _FactorView(cfg, regime, raw.alpha_sq[j], raw.beta_sq[j])
        rep = instantaneous_rates(plan_subchannels(view, cfg), view, cfg, t_sq)
        rates[j] = rep.r1_norm, rep.r2_norm
    good = rates[ok]
    r1, r1_se = _mean_se(good[:, 0])
    r2, r2_se = _mean_se(good[:, 1])
    _, total_se = _mean_se(good[:, 0] + good[:, 1])
    result = AggregateResult(
        cfg, r1, r1_se, r2, r2_se, r1 + r2, total_se,
        trials=int(ok.sum()), skipped=int((~ok).sum()), t_sq=t_sq,
        elapsed=0.0, per_trial=rates,
    )
    if "oma_tdma" in baselines:
        result.oma_r1 = float(np.mean(raw.oma[ok, 0]))
        result.oma_r2 = float(np.mean(raw.oma[ok, 1]))
    if "asymptotic" in baselines:
        try:
            asym = asymptotic_rates(cfg)
        except ArithmeticError:
            asym = None  # eta = 1: no closed form
        if asym is not None:
            result.asym_r1, result.asym_r2 = asym.r1_norm, asym.r2_norm
    result.elapsed = time.perf_counter() - started
    return result


@dataclass(frozen=True)
class HybridResult:
    pairing: tuple
    sum_mean: float
    sum_se: float
    oma_sum: float
    per_user: np.ndarray
    trials: int


def run_hybrid(
    cfg: SystemConfig, distances: Sequence[float], pairings: Sequence[Sequence[Sequence[int]]]
) -> list[HybridResult]:
    """Monte Carlo of hybrid GSVD-NOMA for several pairings on common channel draws."""
    for pairing in pairings:
        validate_pairing(pairing, len(distances))
    n_users = len(distances)
    sums = np.zeros((len(pairings), cfg.trials))
    users = np.zeros((len(pairings), cfg.trials, n_users))
    oma = np.zeros(cfg.trials)
    for t in range(cfg.trials):
        chans = sample_user_channels(cfg, n_users, t)
        oma[t] = oma_multiuser_rates(chans, distances, cfg).sum()
        for p, pairing in enumerate(pairings):
            res = hybrid_group_rates(chans, distances, pairing, cfg)
            users[p, t] = res.per_user
            sums[p, t] = res.sum_rate
    out = []
    for p, pairing in enumerate(pairings):
        mean, se = _mean_se(sums[p])
        out.append(HybridResult(tuple(tuple(x) for x in pairing), mean, se,
                                float(np.mean(oma)), users[p].mean(axis=0), cfg.trials))
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    """A named experiment: base config, one swept field and optional variants.

    ``variants`` are override dicts applied on top of ``cfg`` (each one is a
    curve of the experiment).  With ``eta`` set, sweeping ``n`` also sets
    m = round(eta * n).  ``distances``/``pairings`` mark a hybrid multi-user run.
    """

    name: str
    cfg: SystemConfig
    sweep_param: str
    sweep_values: tuple
    baselines: tuple = ()
    variants: tuple = ({},)
    eta: Optional[float] = None
    distances: tuple = ()
    pairings: tuple = ()
    output_path: str = ""

    def __post_init__(self):
        if not self.name:
            raise ConfigError("experiment name must be nonempty")
        diffs = np.diff(np.asarray(self.sweep_values, dtype=float))
        if self.sweep_values and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("sweep values must be strictly monotone")

    def point(self, variant: dict, value) -> SystemConfig:
        changes = dict(variant)
        changes[self.sweep_param] = value
        if self.eta is not None and self.sweep_param == "n":
            changes["m"] = int(round(self.eta * value))
        return self.cfg.replace(**changes)

    @property
    def is_hybrid(self) -> bool:
        return bool(self.pairings)


_FIG_BASE = dict(tau=2.0, n0_dbm=-35.0, l2_sq=0.2, trials=1000, seed=2024)
_P_SWEEP = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)


def preset(name: str) -> ExperimentSpec:
    """Named experiment setups, sized for a desktop run."""
    if name == "fig1":
        return ExperimentSpec(
            "fig1", SystemConfig(m=28, n=35, d1=10.0, d2=100.0, p_dbm=30.0, **_FIG_BASE),
            "p_dbm", _P_SWEEP, ("oma_tdma",), variants=({"n": 35}, {"n": 70}),
        )
    if name == "fig2":
        return ExperimentSpec(
            "fig2", SystemConfig(m=28, n=35, d1=50.0, d2=100.0, p_dbm=30.0, **_FIG_BASE),
            "d2", (10.0, 20.0, 40.0, 60.0, 80.0, 100.0), ("oma_tdma",), variants=({"n": 35}, {"n": 70}),
        )
    if name == "fig3_sum":
        return ExperimentSpec(
            "fig3_sum", SystemConfig(m=40, n=50, d1=10.0, d2=10.0, p_dbm=30.0, **_FIG_BASE),
            "p_dbm", _P_SWEEP, ("asymptotic",),
        )
    if name == "fig4":
        return ExperimentSpec(
            "fig4", SystemConfig(m=2, n=5, d1=10.0, d2=40.0, p_dbm=15.0, **_FIG_BASE),
            "n", (5, 10, 15, 20, 25, 30), ("asymptotic",), eta=0.4,
        )
    if name == "fig5":
        return ExperimentSpec(
            "fig5", SystemConfig(m=2, n=5, d1=10.0, d2=100.0, p_dbm=30.0, **_FIG_BASE),
            "p_dbm", _P_SWEEP, ("asymptotic",), variants=({"n": 5}, {"n": 6}, {"n": 8}),
        )
    if name == "fig6":
        return ExperimentSpec(
            "fig6", SystemConfig(m=7, n=5, d1=10.0, d2=100.0, p_dbm=30.0, **_FIG_BASE),
            "p_dbm", _P_SWEEP, ("asymptotic",), variants=({"l2_sq": 0.2}, {"l2_sq": 0.4}),
        )
    if name == "fig8":
        return ExperimentSpec(
            "fig8", SystemConfig(m=40, n=50, d1=15.0, d2=10.0, p_dbm=30.0, **{**_FIG_BASE, "trials": 200}),
            "p_dbm", (10.0, 20.0, 30.0, 40.0),
            distances=(15.0, 10.0, 200.0, 300.0),
            pairings=(((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))),
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")


PRESETS = ("fig1", "fig2", "fig3_sum", "fig4", "fig5", "fig6", "fig8")


POINT_COLUMNS = ("r1_norm", "r2_norm", "sum", "oma_sum", "m", "n", "l2_sq")
EXTENDED_COLUMNS = ("r1_se", "r2_se", "sum_se", "asym_r1", "asym_r2", "trials", "skipped")
HYBRID_COLUMNS = ("p_dbm", "pairing", "sum", "sum_se", "oma_sum")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def aggregate_row(res: AggregateResult) -> dict:
    return {
        "r1_norm": res.r1_mean, "r2_norm": res.r2_mean, "sum": res.sum_mean,
        "oma_sum": res.oma_sum, "m": res.cfg.m, "n": res.cfg.n, "l2_sq": res.cfg.l2_sq,
        "r1_se": res.r1_se, "r2_se": res.r2_se, "sum_se": res.sum_se,
        "asym_r1": res.asym_r1, "asym_r2": res.asym_r2,
        "trials": res.trials, "skipped": res.skipped,
    }


def run_experiment(spec: ExperimentSpec, *, workers: Optional[int] = None,
                   t_sq_mode: str = "theoretical", extended: bool = False) -> tuple[list[str], list[dict]]:
    """Run every (variant, sweep value) point; returns (columns, rows).

    Columns are the sweep parameter, then POINT_COLUMNS, then EXTENDED_COLUMNS
    when ``extended`` is set.
    """
    if spec.is_hybrid:
        rows = []
        for value in spec.sweep_values:
            cfg = spec.point({}, value)
            for res in run_hybrid(cfg, spec.distances, spec.pairings):
                label = "+".join(f"({a + 1},{b + 1})" for a, b in res.pairing)
                rows.append({"p_dbm": value, "pairing": label, "sum": res.sum_mean,
                             "sum_se": res.sum_se, "oma_sum": res.oma_sum})
        return list(HYBRID_COLUMNS), rows
    columns = [spec.sweep_param, *POINT_COLUMNS, *(EXTENDED_COLUMNS if extended else ())]
    rows = []
    for variant in spec.variants:
        for value in spec.sweep_values:
            cfg = spec.point(variant, value)
            res = run_monte_carlo(cfg, spec.baselines, workers=workers, t_sq_mode=t_sq_mode)
            rows.append({spec.sweep_param: value, **aggregate_row(res)})
    return columns, rows


def format_csv(columns, rows, *, timestamp: bool = True) -> str:
    """CSV text with an optional leading ``# generated <UTC time>`` comment line."""
    buf = io.StringIO()
    if timestamp:
        now = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        buf.write(f"# generated {now}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows, *, timestamp: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(columns, rows, timestamp=timestamp))
