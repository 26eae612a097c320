"""Exact log-normal path simulation with embedded arbitrage.

Random numbers
--------------
Every stream is a Philox4x64 counter-based generator keyed by
``SeedSequence([seed mod 2**64, tag, index]).generate_state(2, uint64)``.
Raw 64-bit outputs ``w`` become uniforms ``u = ((w >> 11) + 0.5) * 2**-53``
in the open interval (0, 1), and normals are ``ndtri(u)`` (inverse CDF).
Factor ``a`` uses ``tag = 0, index = a``; microstructure noise of asset ``i``
uses ``tag = 1, index = i``; Monte Carlo draws use ``tag = 2``.  Adding
assets or factors therefore never perturbs existing columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, DimensionError
from .market import MarketModel, PricePanel, market_null_space

__all__ = [
    "SimConfig",
    "SimResult",
    "normal_stream",
    "simulate",
    "contaminate",
    "ArbitrageMarket",
    "random_arbitrage_market",
]

SHOCK_TAG = 0
NOISE_TAG = 1
MC_TAG = 2

_MASK64 = (1 << 64) - 1


def normal_stream(seed: int, tag: int, index: int, size) -> np.ndarray:
    """Standard normal draws from the stream ``(seed, tag, index)``."""
    key = np.random.SeedSequence([int(seed) & _MASK64, int(tag), int(index)])
    bitgen = np.random.Philox(key=key.generate_state(2, np.uint64))
    n = int(np.prod(size))
    raw = bitgen.random_raw(n)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u).reshape(size)


@dataclass(frozen=True)
class SimConfig:
    model: MarketModel
    n_steps: int
    seed: int = 0
    microstructure_var: float = 0.0

    def __post_init__(self):
        problems = []
        if int(self.n_steps) < 2:
            problems.append(f"n_steps must be >= 2, got {self.n_steps}")
        if not self.microstructure_var >= 0:
            problems.append(
                f"microstructure_var must be >= 0, got {self.microstructure_var}")
        if problems:
            raise ConfigError("; ".join(problems), problems)


@dataclass(frozen=True)
class SimResult:
    """Simulated prices on steps ``0..n_steps``.

    ``shocks[t]`` is the Brownian increment ``B(t+1) - B(t)`` and ``noise``
    holds the injected log-price noise (zeros for a clean run).
    """

    clean: PricePanel
    observed: PricePanel
    shocks: np.ndarray
    noise: np.ndarray = None


def simulate(config: SimConfig) -> SimResult:
    """Sample prices from the closed-form solution of the Itô dynamics.

    ``X_mu(t) = X_mu(0) exp[(alpha_mu - |sigma_mu|^2 / 2) t + sigma_mu . B(t)]``
    with ``B`` the cumulative sum of unit-variance normal increments.
    """
    model = config.model
    n = int(config.n_steps)
    d = model.n_factors
    shocks = np.empty((n, d))
    for a in range(d):
        shocks[:, a] = normal_stream(config.seed, SHOCK_TAG, a, n)
    brownian = np.vstack([np.zeros((1, d)), np.cumsum(shocks, axis=0)])
    t = np.arange(n + 1, dtype=float)[:, None]
    var = np.sum(model.vol ** 2, axis=1)
    log_x = (np.log(model.init_prices)[None, :]
             + (model.drift - 0.5 * var)[None, :] * t
             + brownian @ model.vol.T)
    ids = tuple(f"X{i}" for i in range(model.n_assets))
    clean = PricePanel(ids, np.arange(n + 1), np.exp(log_x))
    result = SimResult(clean=clean, observed=clean, shocks=shocks,
                       noise=np.zeros_like(log_x))
    if config.microstructure_var > 0:
        result = contaminate(result, config.microstructure_var, config.seed)
    return result


def contaminate(result: SimResult, eta_sq: float, seed: int) -> SimResult:
    """Add i.i.d. Gaussian log-price noise of variance ``eta_sq``.

    Asset 0 is the numéraire and stays clean.
    """
    if not eta_sq >= 0:
        raise ConfigError(f"eta_sq must be >= 0, got {eta_sq}")
    clean = result.clean
    t, n = clean.prices.shape
    noise = np.zeros((t, n))
    if eta_sq > 0:
        sd = np.sqrt(eta_sq)
        for i in range(1, n):
            noise[:, i] = sd * normal_stream(seed, NOISE_TAG, i, t)
    observed = clean.with_prices(clean.prices * np.exp(noise))
    return SimResult(clean=clean, observed=observed, shocks=result.shocks, noise=noise)


@dataclass(frozen=True)
class ArbitrageMarket:
    """A random market together with the parameters used to build it."""

    model: MarketModel
    beta: np.ndarray
    arb_components: np.ndarray
    null_basis: np.ndarray

    @property
    def curvature(self) -> float:
        return float(self.arb_components @ self.arb_components)


def random_arbitrage_market(
    n_assets: int = 21,
    n_factors: int = 18,
    seed: int = 0,
    beta_scale: float = 1e-4,
    sigma_scale: float = 1e-3,
    arb_scale: float = 1e-4,
) -> ArbitrageMarket:
    """Random market with a savings account and arbitrage in the null space.

    Asset 0 is a zero-rate bank account (``X_0 = 1``, no volatility, zero
    drift). The risky loadings, risk premia and arbitrage components are
    uniform on ``[-scale, scale]``. The drift is assembled from the
    decomposition with the common rate chosen so that ``alpha_0 = 0``.
    """
    if n_assets < 2:
        raise DimensionError("need at least the bank account and one risky asset")
    rng = np.random.default_rng(seed)
    vol = np.zeros((n_assets, n_factors))
    vol[1:] = rng.uniform(-sigma_scale, sigma_scale, size=(n_assets - 1, n_factors))
    beta = rng.uniform(-beta_scale, beta_scale, size=n_factors)
    null = market_null_space(vol)
    arb = rng.uniform(-arb_scale, arb_scale, size=null.shape[1])
    sigma_hat = vol - vol.mean(axis=0)
    shape = sigma_hat @ beta + null @ arb
    drift = shape - shape[0]
    drift[0] = 0.0
    return ArbitrageMarket(
        model=MarketModel(drift, vol),
        beta=beta,
        arb_components=arb,
        null_basis=null,
    )
