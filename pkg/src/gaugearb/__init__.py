"""Gauge-invariant detection of arbitrage in asset price series.

Core pieces
-----------
market      Itô market models, drift decomposition, numéraire changes, price panels
simulate    exact log-normal simulation with embedded arbitrage and observation noise
estimators  covariance, gauge-invariant matrix, null basis, basis alignment
detector    rolling arbitrage-curvature signal and its noise diagnostics
portfolio   the self-financing strategy that earns the curvature
pricer      Monte Carlo pricing and a nonlinear Black-Scholes solver
io, cli     CSV/JSON input and output and the ``gaugearb`` command
"""

__version__ = "0.1.0"

from .detector import (ArbitrageSignal, DetectionConfig, SignalSummary, a2_step,
                       alpha_hat_step, eta2_hat, noise_band, run_detection, summarize)
from .errors import (AlignmentDegenerateError, AssetLookupError, ConfigError, ConvergenceError,
                     DataError, DimensionError, DomainError, GaugeArbError,
                     InsufficientDataError, InvalidSpectrumError, MisalignedInputError,
                     NonAnticipationError)
from .estimators import (AlignmentMap, NullBasis, OmegaEstimate, align, build_g,
                         estimate_omega, nearest_orthogonal, null_basis, spectral_gaps)
from .market import (DriftDecomposition, MarketModel, PricePanel, change_numeraire,
                     decompose_drift, log_returns, three_asset_model)
from .portfolio import PortfolioLedger, arbitrage_strategy, buy_and_hold
from .pricer import PdeGrid, PdeProblem, PricingProblem, mc_price, solve_pde
from .simulate import SimConfig, SimResult, contaminate, random_arbitrage_market, simulate

__all__ = [
    "ArbitrageSignal", "DetectionConfig", "SignalSummary", "a2_step", "alpha_hat_step",
    "eta2_hat", "noise_band", "run_detection", "summarize",
    "AlignmentDegenerateError", "AssetLookupError", "ConfigError", "ConvergenceError",
    "DataError", "DimensionError", "DomainError", "GaugeArbError", "InsufficientDataError",
    "InvalidSpectrumError", "MisalignedInputError", "NonAnticipationError",
    "AlignmentMap", "NullBasis", "OmegaEstimate", "align", "build_g", "estimate_omega",
    "nearest_orthogonal", "null_basis", "spectral_gaps",
    "DriftDecomposition", "MarketModel", "PricePanel", "change_numeraire", "decompose_drift",
    "log_returns", "three_asset_model",
    "PortfolioLedger", "arbitrage_strategy", "buy_and_hold",
    "PdeGrid", "PdeProblem", "PricingProblem", "mc_price", "solve_pde",
    "SimConfig", "SimResult", "contaminate", "random_arbitrage_market", "simulate",
]
