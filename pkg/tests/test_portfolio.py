import dataclasses

import numpy as np
import pytest

from gaugearb.detector import DetectionConfig, run_detection
from gaugearb.errors import AssetLookupError, MisalignedInputError
from gaugearb.market import PricePanel
from gaugearb.portfolio import (arbitrage_strategy, buy_and_hold, ledger_identity_residual,
                                self_financing_residual)
from gaugearb.simulate import SimConfig, random_arbitrage_market, simulate


@pytest.fixture(scope="module")
def small_case():
    mk = random_arbitrage_market(n_assets=7, n_factors=4, seed=3)
    p = simulate(SimConfig(mk.model, 400, seed=1)).clean
    sig = run_detection(p, DetectionConfig(window_len=60, null_dim=2, rolling=True,
                                           numeraire_sweep=False))
    return p, sig


@pytest.fixture(scope="module")
def reference_ledger(reference_sim):
    sig = run_detection(reference_sim.clean, DetectionConfig(window_len=100, null_dim=2,
                                                             numeraire_sweep=False))
    return sig, arbitrage_strategy(sig, reference_sim.clean)


def test_zero_signal_gives_flat_ledger():
    p = PricePanel.from_array(np.full((30, 3), 2.0) * [0.5, 1, 1])
    sig = run_detection(p, DetectionConfig(window_len=10))
    led = arbitrage_strategy(sig, p)
    assert np.all(led.nominals == 0.0) and np.all(led.value == 0.0)


def test_holdings_by_hand(small_case):
    p, sig = small_case
    led = arbitrage_strategy(sig, p)
    j = 17
    row = p.row(sig.alpha_times[j])
    x = p.prices[row]
    weights = sig.bases[j + 1].vectors @ sig.alpha_hat[j]
    np.testing.assert_allclose(led.nominals[j, 1:], weights[1:] / x[1:], rtol=1e-12)
    gain = np.sum(led.nominals[j] * (p.prices[row + 1] - x))
    assert gain == pytest.approx(sig.a2_hat[j], rel=1e-12)
    assert led.increments[j + 1] == pytest.approx(gain, rel=1e-12)
    # the position is worth the accumulated wealth
    assert np.sum(led.nominals[j] * x) == pytest.approx(led.value[j], abs=1e-18)
    np.testing.assert_array_equal(led.nominals[-1, 1:], 0.0)
    assert led.increments[0] == 0.0


def test_wealth_equals_cumulative_curvature(small_case):
    p, sig = small_case
    led = arbitrage_strategy(sig, p)
    assert ledger_identity_residual(led, sig) <= 1e-12
    assert self_financing_residual(led, p) <= 1e-15 * max(1.0, np.abs(led.value).max())


def test_reference_identity_and_growth(reference_market, reference_ledger):
    sig, led = reference_ledger
    assert ledger_identity_residual(led, sig) <= 1e-12
    rate = led.value[-1] / sig.a2_hat.size
    assert rate == pytest.approx(reference_market.curvature, rel=0.2)
    assert rate > 0


def test_misaligned_inputs(small_case):
    p, sig = small_case
    with pytest.raises(MisalignedInputError):
        arbitrage_strategy(sig, p, bases=sig.bases[:-1])
    renamed = PricePanel(tuple(f"Y{i}" for i in range(p.n_assets)), p.times, p.prices)
    with pytest.raises(MisalignedInputError):
        arbitrage_strategy(sig, renamed)
    scaled = PricePanel(p.asset_ids, p.times, p.prices * 2.0)
    with pytest.raises(MisalignedInputError, match="numéraire"):
        arbitrage_strategy(sig, scaled)
    shifted = PricePanel(p.asset_ids, p.times + 5000, p.prices)
    with pytest.raises(MisalignedInputError, match="time axis"):
        arbitrage_strategy(sig, shifted)
    late = list(sig.bases)
    late[5] = dataclasses.replace(late[5], end_time=int(sig.alpha_times[5]))
    with pytest.raises(MisalignedInputError, match="uses data up to"):
        arbitrage_strategy(sig, p, bases=late)
    with pytest.raises(MisalignedInputError):
        ledger_identity_residual(arbitrage_strategy(sig, p),
                                 dataclasses.replace(sig, a2_hat=sig.a2_hat[:-1]))


def test_buy_and_hold():
    t = np.arange(50)
    prices = np.column_stack([np.ones(50), np.full(50, 4.0), 3.0 * np.exp(0.01 * t)])
    p = PricePanel.from_array(prices, ["USD", "FLAT", "GROW"])
    assert np.all(buy_and_hold(p, "FLAT").value == 0.0)
    np.testing.assert_allclose(buy_and_hold(p, "GROW", 2.0).value, 2.0 * np.expm1(0.01 * t),
                               rtol=1e-12, atol=1e-15)
    assert np.all(buy_and_hold(p, 2, 0.0).value == 0.0)
    led = buy_and_hold(p, "GROW")
    assert self_financing_residual(led, p) < 1e-15
    with pytest.raises(AssetLookupError):
        buy_and_hold(p, "NOPE")
