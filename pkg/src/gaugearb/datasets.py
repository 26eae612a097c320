"""Synthetic market-like data with a known arbitrage episode.

The bundled ``pulse_market.csv`` holds three equity-index-like series quoted
in a cash currency on business days.  Two common factors drive most of the
variance; a small idiosyncratic component leaves one direction of the
relative-price space nearly riskless.  Between two dates the drift acquires
a component along that direction, which is an arbitrage the detector should
flag.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .estimators import build_g, null_basis
from .simulate import SHOCK_TAG, normal_stream

__all__ = ["PulseMarket", "make_pulse_market", "pulse_market_csv", "load_pulse_market",
           "PULSE_FILE"]

PULSE_FILE = "pulse_market.csv"


@dataclass(frozen=True)
class PulseMarket:
    """Generated prices plus the ground truth used to build them.

    ``pulse_start`` and ``pulse_end`` are row indices (steps) of the first
    and last step whose return carries the arbitrage drift.
    """

    dates: tuple
    asset_ids: tuple
    prices: np.ndarray
    vol: np.ndarray
    direction: np.ndarray
    pulse_start: int
    pulse_end: int
    pulse_size: float


def make_pulse_market(
    n_steps: int = 3000,
    pulse_start: int = 1500,
    pulse_end: int = 1700,
    pulse_size: float = 1e-4,
    common_vol: float = 1e-3,
    idio_vol: float = 5e-5,
    seed: int = 20090101,
) -> PulseMarket:
    """Simulate the three-index market in cash units.

    The arbitrage direction is the lowest non-trivial eigenvector of the
    gauge-invariant matrix of the true covariance, with the cash account
    included as asset 0.  During the pulse the drift of asset ``mu`` gains
    ``pulse_size * (J_mu - J_0)``, which keeps the cash drift at zero.
    """
    ids = ("IDX_A", "IDX_B", "IDX_C")
    common = common_vol * np.array([[1.0, 0.2], [0.8, -0.6], [1.2, 0.5]])
    idio = idio_vol * np.eye(3)
    vol = np.vstack([np.zeros((1, 5)), np.hstack([common, idio])])
    omega = vol @ vol.T
    direction = null_basis(build_g(omega), 1).vectors[:, 0]

    premium = np.array([2e-5, 1e-5])
    base = np.concatenate([[0.0], common @ premium])
    var = np.sum(vol ** 2, axis=1)
    shocks = np.column_stack([normal_stream(seed, SHOCK_TAG, a, n_steps)
                              for a in range(vol.shape[1])])
    drift = np.tile(base, (n_steps, 1))
    drift[pulse_start:pulse_end + 1] += pulse_size * (direction - direction[0])
    log_inc = drift - 0.5 * var + shocks @ vol.T
    log_x = np.vstack([np.zeros(4), np.cumsum(log_inc, axis=0)])
    init = np.array([1.0, 1000.0, 2500.0, 150.0])
    prices = (init * np.exp(log_x))[:, 1:]
    prices = np.round(prices, 4)

    days = np.busday_offset(np.datetime64("2000-01-03"), np.arange(n_steps + 1), roll="forward")
    dates = tuple(str(d) for d in days)
    return PulseMarket(dates, ids, prices, vol, direction, pulse_start, pulse_end, pulse_size)


def pulse_market_csv(market: PulseMarket | None = None) -> str:
    """CSV text of ``market`` (the default pulse market when omitted)."""
    m = market or make_pulse_market()
    lines = [",".join(["time", *m.asset_ids])]
    for d, row in zip(m.dates, m.prices):
        lines.append(",".join([d, *(f"{v:.4f}" for v in row)]))
    return "\n".join(lines) + "\n"


def load_pulse_market(add_numeraire: bool = True):
    """Ingest the bundled CSV; returns ``(panel, path)``."""
    from .io import ingest_csv

    ref = resources.files("gaugearb") / "data" / PULSE_FILE
    with resources.as_file(ref) as path:
        return ingest_csv(path, add_numeraire=add_numeraire), path
