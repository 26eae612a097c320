"""Self-financing arbitrage portfolio and comparison ledgers.

Over each step ``[s, s+1)`` the strategy holds

    phi_i(s) = sum_A J^A_i(s) alpha^A(s) / X_i(s),   i >= 1

units of every risky asset, with the numéraire position ``phi_0`` set so the
portfolio is worth exactly the accumulated wealth.  Its gain over the step is
``alpha(s) . alpha(s+1)``, the curvature estimate, so the wealth is the
running sum of the estimated curvature.

No transaction costs or position limits are modelled even though the strategy
rebalances every step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import ArbitrageSignal
from .errors import MisalignedInputError
from .market import PricePanel

__all__ = [
    "PortfolioLedger",
    "arbitrage_strategy",
    "buy_and_hold",
    "ledger_identity_residual",
    "self_financing_residual",
]

NUMERAIRE_TOL = 1e-14


@dataclass(frozen=True)
class PortfolioLedger:
    """Holdings and wealth on a time grid.

    ``nominals[j]`` is held from ``times[j]`` to ``times[j + 1]``;
    ``increments[j]`` is the wealth change from ``times[j - 1]`` to
    ``times[j]`` (``increments[0] = 0``) and ``value`` is their running sum.
    """

    times: np.ndarray
    nominals: np.ndarray
    value: np.ndarray
    increments: np.ndarray


def arbitrage_strategy(signal: ArbitrageSignal, panel: PricePanel,
                       bases=None) -> PortfolioLedger:
    """Trade the estimated arbitrage directions of ``signal``.

    Parameters
    ----------
    signal
        Output of :func:`~gaugearb.detector.run_detection` on ``panel``.
    panel
        Prices in the numéraire of asset 0, which must be identically one.
    bases
        Null basis per row of ``signal.alpha_hat``; defaults to
        ``signal.bases``.

    The last row closes every risky position into the numéraire.
    """
    bases = signal.bases if bases is None else list(bases)
    alpha = signal.alpha_hat
    n = alpha.shape[0]
    if len(bases) != n:
        raise MisalignedInputError(f"{len(bases)} bases for {n} signal rows")
    if tuple(panel.asset_ids) != tuple(signal.asset_ids):
        raise MisalignedInputError("panel and signal cover different assets")
    if np.max(np.abs(panel.prices[:, 0] - 1.0)) > NUMERAIRE_TOL:
        raise MisalignedInputError("asset 0 must be the numéraire with X_0 = 1")
    rows = np.searchsorted(panel.times, signal.alpha_times)
    if np.any(rows >= panel.n_times) or np.any(panel.times[np.minimum(rows, panel.n_times - 1)]
                                               != signal.alpha_times):
        raise MisalignedInputError("signal times are not on the panel's time axis")

    x = panel.prices[rows]
    nominals = np.zeros_like(x)
    for j in range(n - 1):
        # the basis that produced alpha_hat[j + 1] was built with data up to times[j]
        if bases[j + 1].end_time is not None and bases[j + 1].end_time > signal.alpha_times[j]:
            raise MisalignedInputError(
                f"basis for step {signal.alpha_times[j]} uses data up to {bases[j + 1].end_time}")
        weights = bases[j + 1].vectors @ alpha[j]
        nominals[j, 1:] = weights[1:] / x[j, 1:]

    dx = np.diff(x, axis=0)
    increments = np.zeros(n)
    increments[1:] = np.sum(nominals[:-1, 1:] * dx[:, 1:], axis=1)
    value = np.cumsum(increments)
    nominals[:, 0] = value - np.sum(nominals[:, 1:] * x[:, 1:], axis=1)
    return PortfolioLedger(signal.alpha_times.copy(), nominals, value, increments)


def buy_and_hold(panel: PricePanel, asset, scale: float = 1.0) -> PortfolioLedger:
    """Hold ``scale / X(0)`` units of ``asset`` funded by the numéraire.

    The wealth is the scaled cumulative return ``scale * (X(t)/X(0) - 1)``.
    """
    j = panel.column(asset)
    x = panel.prices[:, j]
    units = scale / x[0]
    nominals = np.zeros_like(panel.prices)
    nominals[:, j] = units
    nominals[:, 0] = -scale
    increments = np.zeros(panel.n_times)
    increments[1:] = units * np.diff(x)
    return PortfolioLedger(panel.times.copy(), nominals, np.cumsum(increments), increments)


def ledger_identity_residual(ledger: PortfolioLedger, signal: ArbitrageSignal) -> float:
    """``max |V(t) - sum_{s<t} A2(s+1)|`` relative to ``max |V|`` (absolute when V = 0)."""
    expected = np.concatenate([[0.0], np.cumsum(signal.a2_hat)])
    if expected.shape != ledger.value.shape:
        raise MisalignedInputError("ledger and signal lengths differ")
    err = float(np.max(np.abs(ledger.value - expected)))
    scale = float(np.max(np.abs(expected)))
    return err / scale if scale > 0 else err


def self_financing_residual(ledger: PortfolioLedger, panel: PricePanel) -> float:
    """Largest ``|sum phi(t+) X(t) - sum phi(t-) X(t)|`` over rebalancing dates."""
    rows = np.searchsorted(panel.times, ledger.times)
    x = panel.prices[rows]
    after = np.sum(ledger.nominals[1:] * x[1:], axis=1)
    before = np.sum(ledger.nominals[:-1] * x[1:], axis=1)
    return float(np.max(np.abs(after - before))) if after.size else 0.0
