"""
Pricing when arbitrage is present
=================================

Each asset, discounted at its own rate, is a martingale under the pricing
measure; a Monte Carlo check recovers today's prices.  For a single option
the pricing equation becomes nonlinear; a suitable arbitrage field makes it
reproduce Black-Scholes with a different volatility.
"""
import math

from scipy.stats import norm

from gaugearb import PdeGrid, PdeProblem, PricingProblem, mc_price, solve_pde, three_asset_model
from gaugearb.pricer import call_payoff, constant_arbitrage, volatility_arbitrage


def bs_call(s, k, r, sigma, tau):
    d1 = (math.log(s / k) + (r + 0.5 * sigma ** 2) * tau) / (sigma * math.sqrt(tau))
    return s * norm.cdf(d1) - k * math.exp(-r * tau) * norm.cdf(d1 - sigma * math.sqrt(tau))


model = three_asset_model(0.01, 0.3, 0.05, 0.2, 0.3, [1.0, 100.0, 50.0])
problem = PricingProblem.from_model(model, horizon=1)
for asset in range(3):
    est, se = mc_price(problem, asset)
    print(f"asset {asset}: today {model.init_prices[asset]:7.2f}  MC {est:8.3f} +- {se:.3f}")

K, r, sigma, T = 100.0, 0.05, 0.2, 1.0
grid = PdeGrid(K * math.exp(-2), K * math.exp(2), 401, 200)
plain = solve_pde(PdeProblem(r, sigma, T, call_payoff(K), grid)).value_at(K)
print(f"\nno arbitrage   PDE {plain:.4f}  closed form {bs_call(K, K, r, sigma, T):.4f}")

for target in (0.15, 0.25):
    field = volatility_arbitrage(target, sigma)
    sol = solve_pde(PdeProblem(r, sigma, T, call_payoff(K), grid, arb_field=field))
    print(f"vol arbitrage  PDE {sol.value_at(K):.4f}  BS at {target:.2f} "
          f"{bs_call(K, K, r, target, T):.4f}  ({sol.iterations.max()} iterations max)")

for a in (-0.02, 0.02):
    sol = solve_pde(PdeProblem(r, sigma, T, call_payoff(K), grid, arb_field=constant_arbitrage(a)))
    print(f"constant field {a:+.2f}: {sol.value_at(K):.4f}")
