"""Itô market models, drift decomposition and numéraire changes.

A market of ``N`` assets driven by ``d`` Brownian factors follows

    dX_mu = X_mu (alpha_mu dt + sum_a sigma^a_mu dW_a).

The drift splits into a common inflation rate, a risk-premium part that lies
in the span of the (cross-sectionally centred) volatility loadings, and an
arbitrage part that lies in the *null space*: directions orthogonal both to
the all-ones vector and to every volatility column.  The null-space
coefficients are invariant under changes of numéraire and of equivalent
probability measure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import helmert

from .errors import AssetLookupError, DataError, DimensionError, InsufficientDataError

__all__ = [
    "MarketModel",
    "DriftDecomposition",
    "PricePanel",
    "decompose_drift",
    "market_null_space",
    "canonical_basis",
    "fix_column_signs",
    "change_numeraire",
    "log_returns",
    "three_asset_model",
    "NULL_TOL",
]

#: relative tolerance for ``||Omega v||_inf <= NULL_TOL * ||Omega||_inf``
NULL_TOL = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MarketModel:
    """Constant-coefficient Itô market.

    Parameters
    ----------
    drift : (N,) array_like
        Drift ``alpha_mu`` per unit time.
    vol : (N, d) array_like
        Volatility loadings ``sigma^a_mu`` per square-root unit time.
    init_prices : (N,) array_like, optional
        Strictly positive prices at ``t = 0``. Defaults to ones.
    """

    drift: np.ndarray
    vol: np.ndarray
    init_prices: np.ndarray = None

    def __post_init__(self):
        drift = _frozen(self.drift)
        vol = np.array(self.vol, dtype=float)
        if vol.ndim == 1:
            vol = vol[:, None]
        if drift.ndim != 1:
            raise DimensionError("drift must be a vector")
        n = drift.shape[0]
        if n < 1:
            raise DimensionError("a market needs at least one asset")
        if vol.shape[0] != n:
            raise DimensionError(
                f"vol has {vol.shape[0]} rows but drift has {n} entries")
        init = np.ones(n) if self.init_prices is None else self.init_prices
        init = _frozen(init)
        if init.shape != (n,):
            raise DimensionError("init_prices must have one entry per asset")
        if not np.all(init > 0):
            raise DataError("init_prices must be strictly positive")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "vol", _frozen(vol))
        object.__setattr__(self, "init_prices", init)

    @property
    def n_assets(self) -> int:
        return self.drift.shape[0]

    @property
    def n_factors(self) -> int:
        return self.vol.shape[1]

    def omega(self) -> np.ndarray:
        """Quadratic-variation matrix ``vol @ vol.T``."""
        return self.vol @ self.vol.T

    def gauge_transform(self, delta_alpha=0.0, delta_sigma=None, scale=1.0) -> "MarketModel":
        """Model seen after multiplying every price by a process ``Lambda``.

        ``dLambda = Lambda (delta_alpha dt + delta_sigma . dW)`` and
        ``Lambda(0) = scale``.
        """
        ds = np.zeros(self.n_factors) if delta_sigma is None else np.asarray(delta_sigma, float)
        drift = self.drift + delta_alpha + self.vol @ ds
        return MarketModel(drift, self.vol + ds[None, :], self.init_prices * scale)

    def numeraire(self, index: int) -> "MarketModel":
        """Model of the relative prices ``X_mu / X_index``."""
        s = self.vol[index]
        return self.gauge_transform(
            delta_alpha=-self.drift[index] + s @ s,
            delta_sigma=-s,
            scale=1.0 / self.init_prices[index],
        )


@dataclass(frozen=True)
class DriftDecomposition:
    """``alpha_mu = mean_drift + sigma_hat @ beta + null_basis @ arb_components``."""

    mean_drift: float
    beta: np.ndarray
    arb_components: np.ndarray
    null_basis: np.ndarray
    sigma_hat: np.ndarray
    sigma_bar: np.ndarray

    @property
    def k(self) -> int:
        return self.null_basis.shape[1]

    @property
    def curvature(self) -> float:
        """Arbitrage curvature ``A^2 = sum_A (alpha^A)^2``."""
        return float(self.arb_components @ self.arb_components)

    def reconstruct(self) -> np.ndarray:
        return self.mean_drift + self.sigma_hat @ self.beta + self.null_basis @ self.arb_components


def fix_column_signs(vectors: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Flip columns so the first component with ``|v| > atol`` is positive."""
    v = np.array(vectors, dtype=float, copy=True)
    if v.ndim == 1:
        return fix_column_signs(v[:, None], atol)[:, 0]
    for j in range(v.shape[1]):
        nz = np.flatnonzero(np.abs(v[:, j]) > atol)
        if nz.size and v[nz[0], j] < 0:
            v[:, j] = -v[:, j]
    return v


def canonical_basis(projector: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the range of ``projector`` that depends only on it.

    Gram-Schmidt over the projected unit vectors ``P e_0, P e_1, ...`` in
    order, so two bases of the same subspace map to the same output.
    """
    n = projector.shape[0]
    out = []
    for j in range(n):
        if len(out) == dim:
            break
        v = projector[:, j].copy()
        for _ in range(2):
            for u in out:
                v -= (u @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            out.append(v / norm)
    if len(out) < dim:
        raise DimensionError(f"projector has rank below {dim}")
    return fix_column_signs(np.column_stack(out) if out else np.zeros((n, 0)))


def market_null_space(vol: np.ndarray, tol: float = NULL_TOL) -> np.ndarray:
    """Orthonormal basis of vectors summing to zero and orthogonal to all vol columns.

    Returns an ``(N, m)`` array with a canonical (rotation-free) choice of
    basis. A candidate ``v`` is accepted when
    ``||Omega v||_inf <= tol * ||Omega||_inf``.
    """
    vol = np.asarray(vol, dtype=float)
    n = vol.shape[0]
    if n < 2:
        return np.zeros((n, 0))
    q = helmert(n).T  # (N, N-1), orthonormal basis of the sum-zero hyperplane
    b = q.T @ (vol - vol.mean(axis=0))
    u = np.linalg.svd(b, full_matrices=True)[0]
    omega = vol @ vol.T
    scale = np.abs(omega).sum(axis=1).max() if omega.size else 0.0
    cand = q @ u
    keep = []
    for j in range(n - 1):
        resid = np.abs(omega @ cand[:, j]).max()
        if resid <= tol * scale:
            keep.append(j)
    if not keep:
        return np.zeros((n, 0))
    basis = cand[:, keep]
    return canonical_basis(basis @ basis.T, len(keep))


def decompose_drift(model: MarketModel, k: int | None = None) -> DriftDecomposition:
    """Split the drift into inflation, risk premium and null-space arbitrage.

    Parameters
    ----------
    model : MarketModel
    k : int, optional
        Number of null directions to return, between 1 and the null
        dimension (which is also the default). When ``k`` is smaller, the first basis vector is aligned
        with the drift's null-space projection so the reconstruction stays
        exact.

    Raises
    ------
    DimensionError
        If ``k`` exceeds the dimension of the exact null space.
    """
    vol = model.vol
    sigma_bar = vol.mean(axis=0)
    sigma_hat = vol - sigma_bar
    null = market_null_space(vol)
    dim = null.shape[1]
    if k is None:
        k = dim
    if k > dim:
        raise DimensionError(
            f"requested null dimension k={k} exceeds the exact null dimension {dim}")
    if k < min(1, dim):
        raise DimensionError(
            f"requested null dimension k={k}; at least 1 is needed to absorb the "
            f"null-space drift when the null dimension is {dim}")
    if k < dim:
        proj = null @ null.T
        p = proj @ model.drift
        pn = np.linalg.norm(p)
        if pn > 1e-300 and k > 0:
            first = fix_column_signs(p / pn)
            rest = canonical_basis(proj - np.outer(first, first), dim - 1)
            null = np.column_stack([first, rest])
        null = null[:, :k]

    alpha = float(model.drift.mean())
    arb = null.T @ model.drift
    resid = model.drift - alpha - null @ arb
    if sigma_hat.size:
        # minimum-norm least squares
        beta = np.linalg.pinv(sigma_hat, rcond=1e-12) @ resid
    else:
        beta = np.zeros(0)
    return DriftDecomposition(
        mean_drift=alpha,
        beta=_frozen(beta),
        arb_components=_frozen(arb),
        null_basis=_frozen(null),
        sigma_hat=_frozen(sigma_hat),
        sigma_bar=_frozen(sigma_bar),
    )


def three_asset_model(rate: float, beta: float, alpha_tilde: float, sigma1: float,
                      sigma2: float, init_prices=None) -> MarketModel:
    """Savings account plus two assets loading on one common factor.

    The arbitrage coefficient ``alpha_tilde`` multiplies the null vector
    ``(sigma1 - sigma2, sigma2, -sigma1) / sqrt(2 (sigma1^2 + sigma2^2 - sigma1 sigma2))``,
    so the two risky drifts are

        r + beta sigma1 + alpha_tilde (2 sigma2 - sigma1) / norm
        r + beta sigma2 + alpha_tilde (sigma2 - 2 sigma1) / norm

    with ``norm = sqrt(2) sqrt(sigma1^2 + sigma2^2 - sigma1 sigma2)``.
    """
    norm = np.sqrt(2.0) * np.sqrt(sigma1 ** 2 + sigma2 ** 2 - sigma1 * sigma2)
    if not norm > 0:
        raise DimensionError("sigma1 and sigma2 must not both vanish")
    drift = [
        rate,
        rate + beta * sigma1 + alpha_tilde * (2 * sigma2 - sigma1) / norm,
        rate + beta * sigma2 + alpha_tilde * (sigma2 - 2 * sigma1) / norm,
    ]
    return MarketModel(drift, [[0.0], [sigma1], [sigma2]], init_prices)


@dataclass(frozen=True)
class PricePanel:
    """Aligned multi-asset price history on integer time steps.

    ``prices[t, mu]`` is the price of asset ``asset_ids[mu]`` at step
    ``times[t]``.
    """

    asset_ids: tuple
    times: np.ndarray
    prices: np.ndarray
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        if prices.ndim != 2:
            raise DataError("prices must be a (T, N) matrix")
        ids = tuple(str(a) for a in self.asset_ids)
        if len(ids) != prices.shape[1]:
            raise DataError(
                f"{len(ids)} asset ids for {prices.shape[1]} price columns")
        if len(set(ids)) != len(ids):
            raise DataError("asset ids must be unique")
        times = np.asarray(self.times)
        if times.shape != (prices.shape[0],):
            raise DataError("times must have one entry per price row")
        if not np.issubdtype(times.dtype, np.integer):
            if not np.all(np.mod(times, 1) == 0):
                raise DataError("times must be integer step indices")
        times = _frozen(times, dtype=np.int64)
        if np.any(np.diff(times) <= 0):
            raise DataError("times must be strictly increasing")
        bad = ~np.isfinite(prices) | (prices <= 0)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise DataError(
                f"prices must be finite and strictly positive; first offending cell "
                f"row {r}, asset {ids[c]!r} = {prices[r, c]!r}")
        prices.setflags(write=False)
        object.__setattr__(self, "asset_ids", ids)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(ids)})

    @classmethod
    def from_array(cls, prices, asset_ids=None, start=0):
        prices = np.asarray(prices, dtype=float)
        if asset_ids is None:
            asset_ids = [f"X{i}" for i in range(prices.shape[1])]
        return cls(tuple(asset_ids), np.arange(start, start + prices.shape[0]), prices)

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    @property
    def n_times(self) -> int:
        return self.prices.shape[0]

    def column(self, asset) -> int:
        """Column position of ``asset`` (a label, or an integer position)."""
        key = str(asset)
        if key in self._index:
            return self._index[key]
        if isinstance(asset, (int, np.integer)) and 0 <= asset < self.n_assets:
            return int(asset)
        raise AssetLookupError(f"unknown asset id {asset!r}; known: {list(self.asset_ids)}")

    def row(self, t) -> int:
        """Row position of time step ``t``."""
        i = int(np.searchsorted(self.times, t))
        if i >= self.n_times or self.times[i] != t:
            raise InsufficientDataError(
                f"time step {t} is not in the panel "
                f"[{self.times[0]}, {self.times[-1]}]")
        return i

    def with_prices(self, prices) -> "PricePanel":
        return PricePanel(self.asset_ids, self.times, prices)

    def __eq__(self, other):
        if not isinstance(other, PricePanel):
            return NotImplemented
        return (self.asset_ids == other.asset_ids
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.prices, other.prices))

    __hash__ = None


def change_numeraire(panel: PricePanel, numeraire) -> PricePanel:
    """Express every price in units of asset ``numeraire``."""
    j = panel.column(numeraire)
    return panel.with_prices(panel.prices / panel.prices[:, j:j + 1])


def log_returns(panel: PricePanel) -> np.ndarray:
    """``log(X(t+1) / X(t))`` for every consecutive pair of rows."""
    if panel.n_times < 2:
        raise InsufficientDataError(
            "log returns need at least 2 price rows", required=2, available=panel.n_times)
    x = panel.prices
    return np.log(x[1:] / x[:-1])
