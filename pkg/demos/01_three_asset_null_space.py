"""
Null space of a three-asset market
==================================

A savings account and two stocks driven by one Brownian factor leave one
direction in drift space that neither inflation nor risk can explain.  Any
drift along that direction is an arbitrage opportunity.
"""
import math

import numpy as np

from gaugearb import build_g, decompose_drift, null_basis, three_asset_model

s1, s2 = 0.2, 0.3
model = three_asset_model(rate=0.01, beta=0.3, alpha_tilde=0.05, sigma1=s1, sigma2=s2)
dec = decompose_drift(model)

print("drifts          ", model.drift)
print("null vector J   ", dec.null_basis[:, 0])

# closed form for this market, up to sign
norm = math.sqrt(2) * math.sqrt(s1 ** 2 + s2 ** 2 - s1 * s2)
print("closed form     ", np.array([s1 - s2, s2, -s1]) / norm)
print("arbitrage alpha ", dec.arb_components[0])

# the drift is rebuilt from inflation, risk premium and arbitrage
print("reconstruction  ", np.abs(model.drift - dec.reconstruct()).max())

# the same direction is found from the covariance alone
g = build_g(model.omega())
print("G eigenvalues   ", np.linalg.eigvalsh(g))
print("expected        ", 2 / 3 * (s1 ** 2 + s2 ** 2 - s1 * s2))
print("from G          ", null_basis(g, 1).vectors[:, 0])

# changing the unit of account moves drifts and loadings but not J
shifted = model.gauge_transform(delta_alpha=0.02, delta_sigma=[0.1])
print("J after gauge   ", decompose_drift(shifted).null_basis[:, 0])
