"""Rolling arbitrage-curvature detection.

For every step the pipeline estimates ``Omega`` on a window of log returns,
builds the gauge-invariant matrix ``G``, takes its ``k`` smallest sum-zero
eigenvectors ``J`` and measures

    alpha^A(t+1) = sum_mu J^A_mu(t) (X_mu(t+1) - X_mu(t)) / X_mu(t)
    A2(t+1)      = sum_A alpha^A(t) alpha^A(t+1)

with ``J(t)`` built from prices up to ``t`` only.  Optionally the whole
pipeline is repeated in every numéraire to expose gauge dependence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (AlignmentDegenerateError, ConfigError, DimensionError,
                     InsufficientDataError, InvalidSpectrumError, NonAnticipationError)
from .estimators import NullBasis, align, build_g, null_basis, omega_from_returns
from .market import PricePanel, change_numeraire

__all__ = [
    "DetectionConfig",
    "ArbitrageSignal",
    "SignalSummary",
    "alpha_hat_step",
    "a2_step",
    "noise_band",
    "eta2_hat",
    "eta2_series",
    "run_detection",
    "summarize",
]

SPECTRUM_TOL = 1e-12


@dataclass(frozen=True)
class DetectionConfig:
    """Parameters of a detection run.

    ``rolling=False`` estimates ``G`` once on the first ``window_len``
    returns and keeps that basis; ``rolling=True`` re-estimates every step
    and aligns consecutive bases.  The noise band is centred at zero unless
    ``assume_zero_mean_noise`` is False, in which case ``known_a2`` (the true
    curvature, e.g. of a simulation) is the centre.
    """

    window_len: int = 100
    null_dim: int = 1
    rolling: bool = False
    numeraire_sweep: bool = True
    assume_zero_mean_noise: bool = True
    known_a2: float | None = None
    debug: bool = False

    def __post_init__(self):
        problems = []
        if int(self.window_len) < 2:
            problems.append(f"window_len must be >= 2, got {self.window_len}")
        if int(self.null_dim) < 1:
            problems.append(f"null_dim must be >= 1, got {self.null_dim}")
        if not self.assume_zero_mean_noise and self.known_a2 is None:
            problems.append("known_a2 is required when assume_zero_mean_noise is False")
        if problems:
            raise ConfigError("; ".join(problems), problems)

    @property
    def band_center(self) -> float:
        return 0.0 if self.assume_zero_mean_noise else float(self.known_a2)


@dataclass
class ArbitrageSignal:
    """Output of :func:`run_detection`.

    ``alpha_hat[i]`` is measured at step ``alpha_times[i]`` with basis
    ``bases[i]`` (built from prices up to ``alpha_times[i] - 1``).
    ``a2_hat[i]`` combines ``alpha_hat[i]`` and ``alpha_hat[i + 1]`` and is
    stamped ``times[i] = alpha_times[i + 1]``.
    """

    config: DetectionConfig
    asset_ids: tuple
    times: np.ndarray
    a2_hat: np.ndarray
    noise_lo: np.ndarray
    noise_hi: np.ndarray
    alpha_times: np.ndarray
    alpha_hat: np.ndarray
    lambda_k: np.ndarray
    spectra: np.ndarray
    bases: list
    degenerate: np.ndarray
    eta2_times: np.ndarray
    eta2_hat: np.ndarray
    per_numeraire_a2: np.ndarray | None = None
    per_numeraire_alpha: list | None = None
    warnings: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.alpha_hat.shape[1]

    @property
    def gauge_mean(self) -> np.ndarray | None:
        p = self.per_numeraire_a2
        return None if p is None else p.mean(axis=1)

    @property
    def gauge_min(self) -> np.ndarray | None:
        p = self.per_numeraire_a2
        return None if p is None else p.min(axis=1)

    @property
    def gauge_max(self) -> np.ndarray | None:
        p = self.per_numeraire_a2
        return None if p is None else p.max(axis=1)

    def gauge_spread(self, kind: str = "std") -> np.ndarray | None:
        """Per-step cross-gauge dispersion relative to the cross-gauge mean.

        ``kind="std"`` divides the standard deviation over numéraires by
        ``|mean|``; ``kind="range"`` uses ``max - min`` instead.
        """
        p = self.per_numeraire_a2
        if p is None:
            return None
        if kind == "std":
            num = p.std(axis=1)
        elif kind == "range":
            num = p.max(axis=1) - p.min(axis=1)
        else:
            raise ValueError(f"unknown spread kind {kind!r}")
        den = np.abs(p.mean(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den > 0, num / den, np.where(num > 0, np.inf, 0.0))
        return out


def alpha_hat_step(basis: NullBasis, panel: PricePanel, t: int) -> np.ndarray:
    """Arbitrage components realised over ``[t, t+1]`` with the basis held at ``t``.

    Raises
    ------
    NonAnticipationError
        If the basis uses information after ``t``.
    """
    if basis.end_time is None or basis.end_time > t:
        raise NonAnticipationError(
            f"basis estimated up to step {basis.end_time} cannot trade at step {t}")
    i = panel.row(t)
    if i + 1 >= panel.n_times:
        raise InsufficientDataError(f"no price after step {t}", required=i + 2,
                                    available=panel.n_times)
    x0, x1 = panel.prices[i], panel.prices[i + 1]
    return basis.vectors.T @ ((x1 - x0) / x0)


def a2_step(alpha_prev, alpha_curr) -> float:
    """``sum_A p_A^2 + sum_A p_A (c_A - p_A)``, i.e. the dot product ``p . c``."""
    p = np.asarray(alpha_prev, dtype=float)
    c = np.asarray(alpha_curr, dtype=float)
    if p.shape != c.shape:
        raise DimensionError(f"alpha vectors differ in length: {p.shape} vs {c.shape}")
    return float(p @ c)


def noise_band(alpha_prev, eigenvalues, center: float = 0.0):
    """``center -/+ sqrt(sum_A alpha_A^2 lambda_A)``."""
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(lam < -SPECTRUM_TOL):
        raise InvalidSpectrumError(f"negative eigenvalue {lam.min():.3e} in noise band")
    a = np.asarray(alpha_prev, dtype=float)
    half = math.sqrt(float(np.sum(a * a * np.clip(lam, 0.0, None))))
    return center - half, center + half


def eta2_series(panel: PricePanel) -> tuple[np.ndarray, np.ndarray]:
    """Microstructure diagnostic for every step with a neighbour on each side.

    Returns ``(times, eta2)`` where
    ``eta2(t) = -mean_{i>=1} log(X_i(t+1)/X_i(t)) log(X_i(t)/X_i(t-1))``.
    Column 0 (the numéraire) is excluded.
    """
    if panel.n_assets < 2:
        raise DimensionError("eta2 needs at least one asset besides the numéraire")
    if panel.n_times < 3:
        raise InsufficientDataError("eta2 needs three consecutive prices",
                                    required=3, available=panel.n_times)
    x = panel.prices[:, 1:]
    lr = np.log(x[1:] / x[:-1])
    eta = -np.mean(lr[1:] * lr[:-1], axis=1)
    return panel.times[1:-1].copy(), eta


def eta2_hat(panel: PricePanel, t: int) -> float:
    """Microstructure diagnostic at step ``t`` (see :func:`eta2_series`)."""
    if panel.n_assets < 2:
        raise DimensionError("eta2 needs at least one asset besides the numéraire")
    i = panel.row(t)
    if i < 1 or i + 1 >= panel.n_times:
        raise InsufficientDataError(f"eta2 at step {t} needs prices at t-1, t and t+1",
                                    required=3, available=panel.n_times)
    x = panel.prices[i - 1:i + 2, 1:]
    lr = np.log(x[1:] / x[:-1])
    return float(-np.mean(lr[1] * lr[0]))


@dataclass
class _Run:
    alpha_times: np.ndarray
    alpha: np.ndarray
    bases: list
    degenerate: np.ndarray


def _pipeline(panel: PricePanel, cfg: DetectionConfig) -> _Run:
    x = panel.prices
    n_rows, n = x.shape
    L, k = int(cfg.window_len), int(cfg.null_dim)
    if k > n - 1:
        raise DimensionError(f"null_dim={k} needs at least {k + 1} assets, panel has {n}")
    if n_rows < L + 2:
        raise InsufficientDataError(
            f"detection with window {L} needs at least {L + 2} prices, got {n_rows}",
            required=L + 2, available=n_rows)
    lr = np.log(x[1:] / x[:-1])
    rel = x[1:] / x[:-1] - 1.0
    rows = np.arange(L, n_rows - 1)
    degenerate = np.zeros(rows.size, dtype=bool)
    if not cfg.rolling:
        b = null_basis(build_g(omega_from_returns(lr[:L])), k, end_time=int(panel.times[L]))
        bases = [b] * rows.size
        alpha = rel[L:] @ b.vectors
    else:
        bases = []
        prev = None
        for j, t in enumerate(rows):
            b = null_basis(build_g(omega_from_returns(lr[t - L:t])), k,
                           end_time=int(panel.times[t]))
            if prev is not None:
                try:
                    b = align(prev, b)[1]
                except AlignmentDegenerateError:
                    degenerate[j] = True
            bases.append(b)
            prev = b
        stacked = np.stack([b.vectors for b in bases])
        alpha = np.einsum("tn,tnk->tk", rel[L:], stacked)
    return _Run(panel.times[rows + 1].copy(), alpha, bases, degenerate)


def run_detection(panel: PricePanel, config: DetectionConfig) -> ArbitrageSignal:
    """Run the detection algorithm over the whole panel."""
    main = _pipeline(panel, config)
    alpha = main.alpha
    a2 = np.sum(alpha[:-1] * alpha[1:], axis=1)
    center = config.band_center
    lo = np.empty(a2.size)
    hi = np.empty(a2.size)
    for i in range(a2.size):
        b = main.bases[i + 1]
        lo[i], hi[i] = noise_band(b.eigen_components(alpha[i]), b.eigenvalues, center)
    spectra = np.stack([b.all_eigenvalues for b in main.bases])
    lambda_k = np.array([b.eigenvalues[-1] for b in main.bases])

    warnings = []
    if not np.any(np.abs(spectra) > 0):
        warnings.append("empty spectrum: the estimated covariance is identically zero")
    if main.degenerate.any():
        warnings.append(f"{int(main.degenerate.sum())} window(s) with degenerate alignment "
                        "kept their unaligned basis")

    per_a2 = None
    per_alpha = None
    if config.numeraire_sweep:
        cols = []
        per_alpha = [] if config.debug else None
        for j in range(panel.n_assets):
            run = _pipeline(change_numeraire(panel, j), config)
            cols.append(np.sum(run.alpha[:-1] * run.alpha[1:], axis=1))
            if per_alpha is not None:
                per_alpha.append(run.alpha)
        per_a2 = np.column_stack(cols)

    if panel.n_assets >= 2 and panel.n_times >= 3:
        eta_t, eta = eta2_series(panel)
    else:
        eta_t, eta = np.zeros(0, dtype=np.int64), np.zeros(0)

    return ArbitrageSignal(
        config=config,
        asset_ids=panel.asset_ids,
        times=main.alpha_times[1:].copy(),
        a2_hat=a2,
        noise_lo=lo,
        noise_hi=hi,
        alpha_times=main.alpha_times,
        alpha_hat=alpha,
        lambda_k=lambda_k,
        spectra=spectra,
        bases=main.bases,
        degenerate=main.degenerate,
        eta2_times=eta_t,
        eta2_hat=eta,
        per_numeraire_a2=per_a2,
        per_numeraire_alpha=per_alpha,
        warnings=warnings,
    )


def _moments(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan, math.nan, math.nan
    mean = float(x.mean())
    std = float(x.std())
    if std > 0:
        ratio = mean / std
        skew = float(np.mean(((x - mean) / std) ** 3))
    else:
        ratio = math.inf
        skew = 0.0
    return mean, std, ratio, skew


@dataclass(frozen=True)
class SignalSummary:
    n: int
    mean: float
    std: float
    snr: float
    skewness: float
    eta2_mean: float
    eta2_std: float
    eta2_snr: float
    gauge_spread_mean: float | None
    gauge_spread_max: float | None
    gauge_range_mean: float | None
    gauge_range_max: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def summarize(signal: ArbitrageSignal) -> SignalSummary:
    """Mean, dispersion, mean/std ratio and skewness of the curvature signal.

    A series with zero dispersion reports ``snr = +inf``.
    """
    if signal.a2_hat.size == 0:
        raise InsufficientDataError("cannot summarise an empty signal", required=1, available=0)
    mean, std, snr, skew = _moments(signal.a2_hat)
    e_mean, e_std, e_snr, _ = _moments(signal.eta2_hat)
    spread = signal.gauge_spread("std")
    rng = signal.gauge_spread("range")
    return SignalSummary(
        n=int(signal.a2_hat.size),
        mean=mean,
        std=std,
        snr=snr,
        skewness=skew,
        eta2_mean=e_mean,
        eta2_std=e_std,
        eta2_snr=e_snr,
        gauge_spread_mean=None if spread is None else float(np.mean(spread)),
        gauge_spread_max=None if spread is None else float(np.max(spread)),
        gauge_range_mean=None if rng is None else float(np.mean(rng)),
        gauge_range_max=None if rng is None else float(np.max(rng)),
    )
