"""Two-user MIMO-NOMA downlink precoded with the generalized SVD.

Modules: ``channel`` (parameters, fading draws), ``gsvd`` (the decomposition),
``spectral`` (limiting law of the squared generalized singular values),
``rates`` (instantaneous and OMA rates), ``asymptotic`` (closed forms) and
``sim`` (Monte Carlo harness and presets).
"""
from .asymptotic import (
    AsymptoticRateResult,
    asymptotic_rates,
    asymptotic_sweep,
    corollary1_rates,
    corollary2_rates,
    wide_rates,
)
from .channel import ChannelPair, SystemConfig, load_config, sample_channels
from .errors import (
    ConfigError,
    DegenerateChannelError,
    DomainError,
    GsvdNomaError,
    NormalizationDivergenceError,
    NumericalError,
    QuadratureError,
)
from .gsvd import GsvdFactors, GsvdResidual, Regime, gsvd, verify_gsvd
from .rates import (
    RateReport,
    SubchannelKind,
    instantaneous_rates,
    oma_tdma_rates,
    plan_subchannels,
)
from .sim import AggregateResult, ExperimentSpec, preset, run_monte_carlo
from .spectral import LimitingLaw, density_f, ks_distance, limiting_law, theoretical_t_sq

__version__ = "0.1.0"

__all__ = [
    "AggregateResult", "AsymptoticRateResult", "ChannelPair", "ConfigError",
    "DegenerateChannelError", "DomainError", "ExperimentSpec", "GsvdFactors",
    "GsvdNomaError", "GsvdResidual", "LimitingLaw", "NormalizationDivergenceError",
    "NumericalError", "QuadratureError", "RateReport", "Regime", "SubchannelKind",
    "SystemConfig", "asymptotic_rates", "asymptotic_sweep", "corollary1_rates",
    "corollary2_rates", "density_f", "gsvd", "instantaneous_rates", "ks_distance",
    "limiting_law", "load_config", "oma_tdma_rates", "plan_subchannels", "preset",
    "run_monte_carlo", "sample_channels", "theoretical_t_sq", "verify_gsvd", "wide_rates",
]
