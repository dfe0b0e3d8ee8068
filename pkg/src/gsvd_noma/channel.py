"""System parameters and i.i.d. Rayleigh channel sampling for the two-user downlink."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NormalizationDivergenceError

_MAX_SEED = 2**64 - 1


def to_linear_power(dbm: float) -> float:
    """Convert a power in dBm to mW."""
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts, geometry and power budget of one experiment point.

    Defaults for everything but the antenna counts describe a near/far pair
    (d1=10 m, d2=100 m, tau=2, N0=-35 dBm, l2^2=0.2, P=30 dBm).
    """

    m: int
    n: int
    d1: float = 10.0
    d2: float = 100.0
    tau: float = 2.0
    p_dbm: float = 30.0
    n0_dbm: float = -35.0
    l2_sq: float = 0.2
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        for name in ("m", "n", "trials"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        for name in ("d1", "d2", "tau"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be positive, got {value!r}")
        for name in ("p_dbm", "n0_dbm"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not 0.0 < self.l2_sq < 0.5:
            raise ConfigError(f"l2_sq must lie in (0, 0.5) so that l1 > l2, got {self.l2_sq}")
        if not 0 <= int(self.seed) <= _MAX_SEED:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n == 2 * self.m:
            raise NormalizationDivergenceError(
                f"n = 2m = {self.n}: long-term power normalization diverges "
                "(E[trace((H^H H)^-1)] is infinite); choose n != 2m"
            )

    @property
    def eta(self) -> float:
        return self.m / self.n

    @property
    def power(self) -> float:
        """Total transmit power P in mW."""
        return to_linear_power(self.p_dbm)

    @property
    def noise(self) -> float:
        """Noise power N0 in mW."""
        return to_linear_power(self.n0_dbm)

    @property
    def l1_sq(self) -> float:
        return 1.0 - self.l2_sq

    @property
    def path_loss1(self) -> float:
        """d1^tau."""
        return self.d1**self.tau

    @property
    def path_loss2(self) -> float:
        return self.d2**self.tau

    @property
    def sic_threshold(self) -> float:
        """d1^tau / d2^tau; SIC runs at user 1 iff w^2 exceeds this."""
        return (self.d1 / self.d2) ** self.tau

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SystemConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw, 0)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_overrides(pairs) -> dict:
    """Parse ``key=value`` strings into typed SystemConfig field values."""
    out = {}
    for item in pairs:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, raw.strip())
    return out


def load_config(path: str | Path, **overrides) -> SystemConfig:
    """Read a flat ``key = value`` file (``#`` starts a comment).

    Keys must be SystemConfig field names; unknown or repeated keys raise
    ConfigError.  ``overrides`` take precedence over the file.
    """
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        (key, value), = parse_overrides([line]).items()
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    values.update(overrides)
    for key in ("m", "n"):
        if key not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")
    return SystemConfig(**values)


@dataclass(frozen=True)
class ChannelPair:
    """Small-scale fading matrices H1, H2 (m x n each)."""

    h1: np.ndarray
    h2: np.ndarray

    def composite(self, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
        """G_i = H_i / sqrt(d_i^tau), including large-scale path loss."""
        return self.h1 / np.sqrt(cfg.path_loss1), self.h2 / np.sqrt(cfg.path_loss2)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by (seed, trial_index)."""
    if trial_index < 0:
        raise ConfigError(f"trial_index must be nonnegative, got {trial_index}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial_index)])))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: real and imaginary parts each of variance 1/2."""
    z = rng.standard_normal((2, *shape))
    return (z[0] + 1j * z[1]) * np.sqrt(0.5)


def sample_channels(cfg: SystemConfig, trial_index: int) -> ChannelPair:
    """Draw H1, H2 for one trial; a pure function of (cfg.seed, trial_index)."""
    rng = trial_rng(cfg.seed, trial_index)
    shape = (cfg.m, cfg.n)
    return ChannelPair(complex_gaussian(rng, shape), complex_gaussian(rng, shape))


def sample_user_channels(cfg: SystemConfig, n_users: int, trial_index: int) -> list[np.ndarray]:
    """Independent m x n fading matrices for ``n_users`` users (hybrid grouping)."""
    rng = trial_rng(cfg.seed, trial_index)
    return [complex_gaussian(rng, (cfg.m, cfg.n)) for _ in range(n_users)]
