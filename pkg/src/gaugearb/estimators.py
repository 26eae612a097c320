"""Quadratic-variation estimate, gauge-invariant matrix, null basis and alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import helmert

from .errors import AlignmentDegenerateError, DimensionError, InsufficientDataError
from .market import PricePanel, fix_column_signs

__all__ = [
    "OmegaEstimate",
    "NullBasis",
    "AlignmentMap",
    "estimate_omega",
    "omega_from_returns",
    "build_g",
    "gauge_shift_omega",
    "null_basis",
    "align",
    "nearest_orthogonal",
    "pauli_nearest_orthogonal",
    "spectral_gaps",
]

DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class OmegaEstimate:
    matrix: np.ndarray
    window_len: int
    end_time: int


@dataclass(frozen=True)
class NullBasis:
    """Selected near-null eigenvectors of the gauge-invariant matrix.

    ``vectors = eigvecs @ frame`` where ``eigvecs`` are eigenvectors with
    eigenvalues ``eigenvalues``; ``frame`` is the identity until the basis
    is rotated by :func:`align`.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray
    all_eigenvalues: np.ndarray
    end_time: int = None
    frame: np.ndarray = None

    def __post_init__(self):
        if self.frame is None:
            object.__setattr__(self, "frame", np.eye(self.vectors.shape[1]))

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_assets(self) -> int:
        return self.vectors.shape[0]

    def eigen_components(self, coeffs) -> np.ndarray:
        """Coefficients on ``vectors`` re-expressed on the eigenvectors."""
        return self.frame @ np.asarray(coeffs, dtype=float)

    def gram(self) -> np.ndarray:
        """``vectors.T @ G @ vectors``."""
        return self.frame.T @ np.diag(self.eigenvalues) @ self.frame


@dataclass(frozen=True)
class AlignmentMap:
    rotation: np.ndarray
    raw_overlap: np.ndarray


def omega_from_returns(returns: np.ndarray) -> np.ndarray:
    """Biased (``1/L``) covariance of the rows of ``returns``."""
    r = np.asarray(returns, dtype=float)
    c = r - r.mean(axis=0)
    omega = c.T @ c / r.shape[0]
    return 0.5 * (omega + omega.T)


def estimate_omega(panel: PricePanel, window_len: int, end_time: int) -> OmegaEstimate:
    """Covariance of the ``window_len`` most recent log returns up to ``end_time``.

    Uses prices at steps ``end_time - window_len .. end_time``.
    """
    if window_len < 1:
        raise DimensionError(f"window_len must be >= 1, got {window_len}")
    end = panel.row(end_time)
    if end < window_len:
        raise InsufficientDataError(
            f"window of {window_len} returns ending at step {end_time} needs "
            f"{window_len + 1} prices, only {end + 1} available",
            required=window_len + 1, available=end + 1)
    x = panel.prices[end - window_len:end + 1]
    returns = np.log(x[1:] / x[:-1])
    return OmegaEstimate(omega_from_returns(returns), window_len, int(end_time))


def build_g(omega) -> np.ndarray:
    """``G = Omega - (U Omega + Omega U) / N + Tr(U Omega) U / N^2``."""
    m = omega.matrix if isinstance(omega, OmegaEstimate) else np.asarray(omega, dtype=float)
    row = m.mean(axis=1, keepdims=True)
    col = m.mean(axis=0, keepdims=True)
    g = m - row - col + m.mean()
    return 0.5 * (g + g.T)


def gauge_shift_omega(omega, vol, delta_sigma) -> np.ndarray:
    """``Omega`` after the loading shift ``sigma^a_mu -> sigma^a_mu + delta_sigma^a``.

    ``Omega_{mu nu} + delta_sigma . (sigma_mu + sigma_nu) + |delta_sigma|^2``
    for the ``(N, d)`` loadings ``vol``.
    """
    m = omega.matrix if isinstance(omega, OmegaEstimate) else np.asarray(omega, dtype=float)
    ds = np.asarray(delta_sigma, dtype=float)
    proj = np.asarray(vol, dtype=float) @ ds
    return m + proj[:, None] + proj[None, :] + ds @ ds


_HELMERT = {}


def _sum_zero_frame(n: int) -> np.ndarray:
    if n not in _HELMERT:
        _HELMERT[n] = helmert(n).T
    return _HELMERT[n]


def null_basis(g, k: int, end_time: int | None = None) -> NullBasis:
    """The ``k`` sum-zero eigenvectors of ``g`` with the smallest eigenvalues.

    The eigenproblem is solved on the hyperplane orthogonal to the all-ones
    vector, so the trivial zero mode never competes with the candidates and
    every returned vector sums to zero. Column signs are fixed so the first
    non-negligible component is positive.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if not 1 <= k <= n - 1:
        raise DimensionError(f"k must lie in [1, {n - 1}] for N={n}, got {k}")
    q = _sum_zero_frame(n)
    h = q.T @ g @ q
    w, u = np.linalg.eigh(0.5 * (h + h.T))
    vecs = fix_column_signs(q @ u[:, :k])
    return NullBasis(
        vectors=vecs,
        eigenvalues=w[:k].copy(),
        all_eigenvalues=np.concatenate([[0.0], w]),
        end_time=end_time,
    )


def pauli_nearest_orthogonal(overlap) -> np.ndarray:
    """Closed-form nearest orthogonal 2x2 matrix.

    Expands ``overlap`` on ``{I, [[0,1],[1,0]], [[1,0],[0,-1]], [[0,1],[-1,0]]}``
    and keeps whichever of the rotation part (first and last) or the
    reflection part (middle two) has the larger norm, normalised.
    """
    c = np.asarray(overlap, dtype=float)
    c0 = 0.5 * (c[0, 0] + c[1, 1])
    c1 = 0.5 * (c[0, 1] + c[1, 0])
    c2 = 0.5 * (c[0, 0] - c[1, 1])
    c3 = 0.5 * (c[0, 1] - c[1, 0])
    rot = np.hypot(c0, c3)
    ref = np.hypot(c1, c2)
    if abs(rot - ref) <= DEGENERATE_TOL:
        raise AlignmentDegenerateError(
            f"overlap matrix is rank deficient (rotation {rot:.3e} vs reflection {ref:.3e})")
    if ref > rot:
        a, b = c1 / ref, c2 / ref
        return np.array([[b, a], [a, -b]])
    a, b = c0 / rot, c3 / rot
    return np.array([[a, b], [-b, a]])


def nearest_orthogonal(overlap) -> np.ndarray:
    """Orthogonal matrix closest to ``overlap`` in Frobenius norm (polar factor)."""
    c = np.atleast_2d(np.asarray(overlap, dtype=float))
    k = c.shape[0]
    if k == 1:
        if abs(c[0, 0]) <= DEGENERATE_TOL:
            raise AlignmentDegenerateError("overlap is zero; sign undefined")
        return np.sign(c)
    u, s, vt = np.linalg.svd(c)
    if s[-1] <= DEGENERATE_TOL:
        raise AlignmentDegenerateError(
            f"overlap matrix is rank deficient (smallest singular value {s[-1]:.3e})")
    return u @ vt


def align(previous: NullBasis, current: NullBasis):
    """Rotate ``current`` so it continues ``previous`` across windows.

    Returns
    -------
    AlignmentMap
        ``raw_overlap[A, B] = current_A . previous_B`` and its nearest
        orthogonal matrix ``rotation``.
    NullBasis
        ``current.vectors @ rotation``; equal to ``previous`` when both
        bases span the same space.

    Raises
    ------
    AlignmentDegenerateError
        When the overlap matrix is (numerically) singular.
    """
    if previous.k != current.k:
        raise DimensionError(f"cannot align k={previous.k} with k={current.k}")
    overlap = current.vectors.T @ previous.vectors
    rotation = nearest_orthogonal(overlap)
    rotated = NullBasis(
        vectors=current.vectors @ rotation,
        eigenvalues=current.eigenvalues,
        all_eigenvalues=current.all_eigenvalues,
        end_time=current.end_time,
        frame=current.frame @ rotation,
    )
    return AlignmentMap(rotation=rotation, raw_overlap=overlap), rotated


def spectral_gaps(all_eigenvalues) -> np.ndarray:
    """``log10(lambda_{j+1} / lambda_j)`` for the non-trivial eigenvalues.

    Useful to pick the null dimension: a gap of several decades after
    ``lambda_k`` suggests ``k`` near-null directions.
    """
    lam = np.asarray(all_eigenvalues, dtype=float)[1:]
    tiny = np.finfo(float).tiny
    lam = np.maximum(np.abs(lam), tiny)
    return np.log10(lam[1:] / lam[:-1])
