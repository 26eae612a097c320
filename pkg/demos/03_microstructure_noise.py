"""
Bid/ask bounce hides the signal
===============================

Adding independent noise to every observed log price makes consecutive
returns negatively correlated.  The curvature estimate multiplies
consecutive returns, so it turns negative.  The lag-one autocovariance of
returns measures the noise level.
"""
from gaugearb import DetectionConfig, SimConfig, random_arbitrage_market, run_detection, simulate

market = random_arbitrage_market(n_assets=21, n_factors=18, seed=2)
cfg = DetectionConfig(window_len=100, null_dim=2, numeraire_sweep=False)

for eta2 in (0.0, 1e-7, 1e-6, 1e-5):
    sim = simulate(SimConfig(market.model, 2100, seed=7, microstructure_var=eta2))
    sig = run_detection(sim.observed, cfg)
    print(f"noise variance {eta2:7.0e}: mean curvature {sig.a2_hat.mean():+.3e}  "
          f"estimated noise {sig.eta2_hat.mean():.3e}")

print(f"true curvature {market.curvature:.3e}")
