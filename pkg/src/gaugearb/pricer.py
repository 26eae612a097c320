"""Pricing with arbitrage: Monte Carlo and a nonlinear Black-Scholes solver.

Monte Carlo
-----------
Under the pricing measure every asset follows

    dX_mu = X_mu [(alpha* + sum_A alpha^A J^A_mu) dt + sigma_mu . dW*]

with ``alpha* = alpha - beta . sigma_bar`` (inflation minus the risk premium
of the average loading).  Each asset is then a martingale once discounted
at its own rate ``alpha* + sum_A alpha^A J^A_mu``.

Finite differences
------------------
One underlying ``X`` with volatility ``sigma``, a deterministic rate ``r``
and an arbitrage field ``alpha_tilde(t, X)`` give

    V_t + r X V_X + sigma^2 X^2 V_XX / 2
        + (sqrt(2) alpha_tilde [1 + q (q - 1)]^(1/2) - r) V = 0,   q = X V_X / V.

The solver works in ``x = log X`` and time-to-maturity ``tau``.  Writing
``D = X V_X`` the nonlinear term is ``sqrt(2) alpha_tilde Phi`` with

    Phi = sign(V) sqrt((V - D/2)^2 + 3 D^2 / 4) = V [1 + q (q - 1)]^(1/2)

which stays finite as ``V -> 0``.  Time stepping is Crank-Nicolson (after a
few implicit Euler half steps that damp the payoff kink) with the nonlinear
term handled by fixed-point iteration on each step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import ConfigError, ConvergenceError, DomainError
from .market import DriftDecomposition, MarketModel, decompose_drift
from .simulate import MC_TAG, normal_stream

__all__ = [
    "PricingProblem",
    "mc_price",
    "PdeGrid",
    "PdeProblem",
    "PdeSolution",
    "solve_pde",
    "call_payoff",
    "put_payoff",
    "constant_arbitrage",
    "volatility_arbitrage",
    "nonlinear_factor",
    "example_null_vector",
    "bs_residual",
    "general_residual",
]

SQRT2 = math.sqrt(2.0)


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class PricingProblem:
    """Monte Carlo pricing set-up.

    ``payoff`` maps the ``(paths, N)`` terminal prices to ``(paths,)`` values;
    ``None`` prices the asset itself.
    """

    model: MarketModel
    decomposition: DriftDecomposition | None
    horizon: float
    mc_paths: int = 100_000
    mc_seed: int = 0
    payoff: Callable | None = None

    def __post_init__(self):
        problems = []
        if not self.horizon >= 1:
            problems.append(f"horizon must be >= 1, got {self.horizon}")
        if int(self.mc_paths) < 1:
            problems.append(f"mc_paths must be >= 1, got {self.mc_paths}")
        if problems:
            raise ConfigError("; ".join(problems), problems)

    @classmethod
    def from_model(cls, model: MarketModel, horizon, **kwargs) -> "PricingProblem":
        return cls(model, decompose_drift(model), horizon, **kwargs)

    def pricing_drift(self) -> np.ndarray:
        """``alpha* + sum_A alpha^A J^A_mu`` for every asset."""
        dec = self.decomposition
        if dec is None:
            raise ConfigError("the drift decomposition is required for pricing")
        alpha_star = dec.mean_drift - float(dec.beta @ dec.sigma_bar)
        return alpha_star + dec.null_basis @ dec.arb_components


def mc_price(problem: PricingProblem, asset: int) -> tuple[float, float]:
    """Discounted expectation of the payoff under the pricing measure.

    Returns
    -------
    (estimate, standard_error)
    """
    rates = problem.pricing_drift()
    model = problem.model
    n_paths = int(problem.mc_paths)
    T = float(problem.horizon)
    z = np.empty((n_paths, model.n_factors))
    for a in range(model.n_factors):
        z[:, a] = normal_stream(problem.mc_seed, MC_TAG, a, n_paths)
    var = np.sum(model.vol ** 2, axis=1)
    diffusion = math.sqrt(T) * z @ model.vol.T
    log_growth = (rates - 0.5 * var) * T
    rate = rates[asset]
    if problem.payoff is None:
        # discount in log space so riskless assets come back exactly
        disc_log = np.log(model.init_prices[asset]) + (log_growth[asset] - rate * T) \
            + diffusion[:, asset]
        values = np.exp(disc_log)
    else:
        terminal = model.init_prices * np.exp(log_growth + diffusion)
        values = np.asarray(problem.payoff(terminal), dtype=float) * math.exp(-rate * T)
    est = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.inf
    return est, se


# --------------------------------------------------------------------------
# nonlinear PDE


def call_payoff(strike: float) -> Callable:
    return lambda x: np.maximum(np.asarray(x, dtype=float) - strike, 0.0)


def put_payoff(strike: float) -> Callable:
    return lambda x: np.maximum(strike - np.asarray(x, dtype=float), 0.0)


def nonlinear_factor(v, d):
    """``V [1 + q (q - 1)]^(1/2)`` with ``q = D / V``, in a form regular at ``V = 0``."""
    v = np.asarray(v, dtype=float)
    d = np.asarray(d, dtype=float)
    radicand = (v - 0.5 * d) ** 2 + 0.75 * d ** 2
    sign = np.where(v < 0, -1.0, 1.0)
    return sign * np.sqrt(radicand)


def constant_arbitrage(value: float) -> Callable:
    """Arbitrage field independent of time, price and the solution."""
    return lambda t, x, v, d, gamma: np.full_like(np.asarray(x, dtype=float), value)


def volatility_arbitrage(sigma_tilde: float, sigma: float) -> Callable:
    """Field that turns the solver into Black-Scholes with volatility ``sigma_tilde``.

    ``alpha_tilde = (sigma_tilde^2 - sigma^2) / 2^(3/2) * X^2 V_XX / Phi``; zero
    where ``Phi`` vanishes.
    """
    coef = (sigma_tilde ** 2 - sigma ** 2) / 2.0 ** 1.5

    def field(t, x, v, d, gamma):
        phi = nonlinear_factor(v, d)
        out = np.zeros_like(phi)
        ok = phi != 0
        out[ok] = coef * np.asarray(gamma)[ok] / phi[ok]
        return out

    return field


@dataclass(frozen=True)
class PdeGrid:
    """Uniform grid in ``log X`` on ``[x_min, x_max]`` and ``n_time`` steps."""

    x_min: float
    x_max: float
    n_space: int
    n_time: int

    def problems(self) -> list[str]:
        out = []
        if not self.x_min > 0:
            out.append(f"x_min must be > 0, got {self.x_min}")
        if not self.x_max > self.x_min:
            out.append(f"x_max must exceed x_min, got {self.x_max} <= {self.x_min}")
        if int(self.n_space) < 3:
            out.append(f"n_space must be >= 3, got {self.n_space}")
        if int(self.n_time) < 1:
            out.append(f"n_time must be >= 1, got {self.n_time}")
        return out

    @property
    def log_nodes(self) -> np.ndarray:
        return np.linspace(math.log(self.x_min), math.log(self.x_max), int(self.n_space))

    @property
    def dx(self) -> float:
        return (math.log(self.x_max) - math.log(self.x_min)) / (int(self.n_space) - 1)


@dataclass(frozen=True)
class PdeProblem:
    """One-underlying pricing problem.

    Parameters
    ----------
    rate, sigma
        Deterministic short rate and volatility of the underlying.
    maturity
        Time to expiry, in the same unit as ``rate`` and ``sigma**2``.
    terminal_payoff
        Vectorised function of the underlying price.
    grid
        Spatial and temporal resolution.
    arb_field
        ``alpha_tilde(t, X, V, X V_X, X^2 V_XX)``; ``None`` means no arbitrage.
    boundary
        Pair ``(lower, upper)`` of functions ``f(t, X)`` giving Dirichlet
        values. Defaults to the payoff's linear asymptote with its constant
        part discounted.
    scheme
        ``"crank-nicolson"`` (default) or ``"explicit"``.
    """

    rate: float
    sigma: float
    maturity: float
    terminal_payoff: Callable
    grid: PdeGrid
    arb_field: Callable | None = None
    boundary: tuple | None = None
    scheme: str = "crank-nicolson"
    rannacher_steps: int = 2
    fixed_point: bool = True
    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        problems = list(self.grid.problems())
        if not self.maturity > 0:
            problems.append(f"maturity must be > 0, got {self.maturity}")
        if not self.sigma >= 0:
            problems.append(f"sigma must be >= 0, got {self.sigma}")
        if self.scheme not in ("crank-nicolson", "explicit"):
            problems.append(f"unknown scheme {self.scheme!r}")
        elif self.scheme == "explicit" and not problems:
            cfl = self.cfl_number()
            if cfl > 1.0:
                problems.append(
                    f"explicit scheme unstable: dt * sigma^2 / dx^2 = {cfl:.3g} > 1; "
                    "refine n_time or use crank-nicolson")
        if problems:
            raise ConfigError("; ".join(problems), problems)

    def cfl_number(self) -> float:
        dt = self.maturity / int(self.grid.n_time)
        return dt * (self.sigma ** 2 / self.grid.dx ** 2 + abs(self.rate))


@dataclass(frozen=True)
class PdeSolution:
    """``values[i, j]`` is ``V`` at calendar time ``times[i]`` and price ``prices[j]``."""

    times: np.ndarray
    prices: np.ndarray
    values: np.ndarray
    iterations: np.ndarray

    def value_at(self, price, t: float = 0.0):
        """Cubic interpolation in ``log X`` of the slice nearest to ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        spline = CubicSpline(np.log(self.prices), self.values[i])
        out = spline(np.log(np.asarray(price, dtype=float)))
        return float(out) if np.ndim(out) == 0 else out


def _linear_asymptote(payoff, x_a, x_b):
    fa, fb = float(payoff(np.array([x_a]))[0]), float(payoff(np.array([x_b]))[0])
    slope = (fb - fa) / (x_b - x_a)
    return slope, fa - slope * x_a


def _default_boundary(problem: PdeProblem, prices):
    r, T = problem.rate, problem.maturity
    lo = _linear_asymptote(problem.terminal_payoff, prices[0], prices[1])
    hi = _linear_asymptote(problem.terminal_payoff, prices[-2], prices[-1])

    def make(slope, const):
        return lambda t, x: slope * x + const * math.exp(-r * (T - t))

    return make(*lo), make(*hi)


def _derivatives(v, dx):
    d = (v[2:] - v[:-2]) / (2 * dx)
    dxx = (v[2:] - 2 * v[1:-1] + v[:-2]) / dx ** 2
    return d, dxx - d


def _nonlinear_term(problem, t, prices, v, eps_v):
    """``sqrt(2) alpha_tilde Phi`` on interior nodes."""
    if problem.arb_field is None:
        return np.zeros(v.size - 2)
    d, gamma = _derivatives(v, problem.grid.dx)
    vi = v[1:-1]
    phi = nonlinear_factor(vi, d)
    small = np.abs(vi) < eps_v
    phi[small] = np.abs(d[small])
    alpha = np.asarray(problem.arb_field(t, prices[1:-1], vi, d, gamma), dtype=float)
    out = SQRT2 * alpha * phi
    if not np.all(np.isfinite(out)):
        raise DomainError(f"nonlinear term is not finite at t={t:.6g}")
    return out


def solve_pde(problem: PdeProblem) -> PdeSolution:
    """March the pricing equation backwards from the terminal payoff."""
    g = problem.grid
    x = g.log_nodes
    prices = np.exp(x)
    n, m = x.size, int(g.n_time)
    T, r, s2 = problem.maturity, problem.rate, problem.sigma ** 2
    dt = T / m
    dx = g.dx
    lower_bc, upper_bc = problem.boundary or _default_boundary(problem, prices)

    a = 0.5 * s2 / dx ** 2
    b = (r - 0.5 * s2) / (2 * dx)
    lo_c, di_c, up_c = a - b, -2 * a - r, a + b

    def apply_l(v):
        return lo_c * v[:-2] + di_c * v[1:-1] + up_c * v[2:]

    payoff = np.asarray(problem.terminal_payoff(prices), dtype=float)
    eps_v = 1e-12 * max(float(np.max(np.abs(payoff))), np.finfo(float).tiny)
    values = np.empty((m + 1, n))
    values[m] = payoff
    times = np.linspace(0.0, T, m + 1)
    times[m] = T
    iterations = np.zeros(m, dtype=int)

    def theta_step(v_old, t_old, t_new, h, theta):
        v_new = np.empty_like(v_old)
        v_new[0] = lower_bc(t_new, prices[0])
        v_new[-1] = upper_bc(t_new, prices[-1])
        k = n - 2
        ab = np.zeros((3, k))
        ab[0, 1:] = -theta * h * up_c
        ab[1, :] = 1 - theta * h * di_c
        ab[2, :-1] = -theta * h * lo_c
        base = v_old[1:-1] + (1 - theta) * h * apply_l(v_old)
        base[0] += theta * h * lo_c * v_new[0]
        base[-1] += theta * h * up_c * v_new[-1]
        n_old = _nonlinear_term(problem, t_old, prices, v_old, eps_v)
        n_new = n_old
        prev = None
        its = 0
        while True:
            its += 1
            rhs = base + h * ((1 - theta) * n_old + theta * n_new)
            v_new[1:-1] = solve_banded((1, 1), ab, rhs)
            if problem.arb_field is None or not problem.fixed_point:
                break
            if prev is not None:
                change = float(np.max(np.abs(v_new - prev)))
                if change <= problem.tol * max(1.0, float(np.max(np.abs(v_new)))):
                    break
                if its >= problem.max_iter:
                    raise ConvergenceError(
                        f"fixed-point iteration did not converge at t={t_new:.6g} "
                        f"(change {change:.3e} after {its} iterations)",
                        residual=change, iterations=its)
            prev = v_new.copy()
            n_new = _nonlinear_term(problem, t_new, prices, v_new, eps_v)
        if not np.all(np.isfinite(v_new)):
            raise DomainError(f"solution is not finite at t={t_new:.6g}")
        return v_new, its

    def explicit_step(v_old, t_old, t_new, h):
        v_new = np.empty_like(v_old)
        v_new[0] = lower_bc(t_new, prices[0])
        v_new[-1] = upper_bc(t_new, prices[-1])
        v_new[1:-1] = v_old[1:-1] + h * (apply_l(v_old)
                                         + _nonlinear_term(problem, t_old, prices, v_old, eps_v))
        if not np.all(np.isfinite(v_new)):
            raise DomainError(f"solution is not finite at t={t_new:.6g}")
        return v_new, 1

    for i in range(m, 0, -1):
        v = values[i]
        t_old, t_new = times[i], times[i - 1]
        if problem.scheme == "explicit":
            values[i - 1], iterations[i - 1] = explicit_step(v, t_old, t_new, dt)
        elif m - i < problem.rannacher_steps:
            t_mid = 0.5 * (t_old + t_new)
            half, k1 = theta_step(v, t_old, t_mid, 0.5 * dt, 1.0)
            values[i - 1], k2 = theta_step(half, t_mid, t_new, 0.5 * dt, 1.0)
            iterations[i - 1] = k1 + k2
        else:
            values[i - 1], iterations[i - 1] = theta_step(v, t_old, t_new, dt, 0.5)
    return PdeSolution(times, prices, values, iterations)


# --------------------------------------------------------------------------
# residuals of the one-underlying equation


def example_null_vector(q):
    """Null vector of the savings account, the underlying and a claim with ``q = X V_X / V``.

    ``(1 - q, q, -1) / (sqrt(2) sqrt(1 + q (q - 1)))``; stacked along the
    last axis when ``q`` is an array.
    """
    q = np.asarray(q, dtype=float)
    norm = SQRT2 * np.sqrt(1 + q * (q - 1))
    return np.stack([(1 - q) / norm, q / norm, -1.0 / norm + 0 * q], axis=-1)


def bs_residual(v, v_t, v_x, v_xx, x, rate, sigma, alpha_tilde):
    """Left side of the nonlinear Black-Scholes equation in price coordinates."""
    v, v_x, v_xx, x = (np.asarray(a, dtype=float) for a in (v, v_x, v_xx, x))
    q = x * v_x / v
    return (v_t + rate * x * v_x + 0.5 * sigma ** 2 * x ** 2 * v_xx
            + (SQRT2 * alpha_tilde * np.sqrt(1 + q * (q - 1)) - rate) * v)


def general_residual(v, v_t, v_x, v_xx, x, rate, sigma, alpha_tilde, null_vector):
    """Single-claim pricing equation for an arbitrary null vector ``J = (J_0, J_1, J_2)``.

    ``V_t + (alpha* + a J_1) X V_X - (alpha* + a J_2) V + sigma^2 X^2 V_XX / 2``
    with ``alpha* = r - a J_0``.
    """
    v, v_x, v_xx, x = (np.asarray(a, dtype=float) for a in (v, v_x, v_xx, x))
    j = np.asarray(null_vector, dtype=float)
    j0, j1, j2 = j[..., 0], j[..., 1], j[..., 2]
    alpha_star = rate - alpha_tilde * j0
    return (v_t + (alpha_star + alpha_tilde * j1) * x * v_x
            - (alpha_star + alpha_tilde * j2) * v
            + 0.5 * sigma ** 2 * x ** 2 * v_xx)
