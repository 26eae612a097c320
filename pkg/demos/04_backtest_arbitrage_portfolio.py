"""
Trading the estimated arbitrage
===============================

Holding, at each step, the estimated arbitrage direction weighted by its
last realised size is self-financing.  Its wealth is exactly the running
sum of the curvature estimates.
"""
from gaugearb import (DetectionConfig, SimConfig, arbitrage_strategy, buy_and_hold,
                      random_arbitrage_market, run_detection, simulate)
from gaugearb.portfolio import ledger_identity_residual, self_financing_residual

market = random_arbitrage_market(n_assets=21, n_factors=18, seed=2)
prices = simulate(SimConfig(market.model, 2100, seed=7)).clean
sig = run_detection(prices, DetectionConfig(window_len=100, null_dim=2, numeraire_sweep=False))

ledger = arbitrage_strategy(sig, prices)
steps = ledger.times.size - 1
print(f"final wealth {ledger.value[-1]:.3e} after {steps} steps")
print(f"per step {ledger.value[-1] / steps:.3e}  (true curvature {market.curvature:.3e})")
print(f"identity residual      {ledger_identity_residual(ledger, sig):.1e}")
print(f"self-financing residual {self_financing_residual(ledger, prices):.1e}")

# a small buy-and-hold position for scale
bench = buy_and_hold(prices, "X1", scale=1e-3)
print(f"buy-and-hold X1 (1e-3 invested): {bench.value[-1]:+.3e}")
