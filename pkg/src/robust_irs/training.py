"""Uplink training: reflection patterns, LS estimation and CSI-error statistics."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import NumericalError, dft_matrix, pseudo_inverse, sylvester_hadamard

__all__ = [
    "PatternMatrix",
    "ChannelEstimate",
    "design_patterns",
    "simulate_uplink",
    "ls_estimate",
    "error_covariance",
    "estimate_channel",
    "normalized_mse",
]


@dataclass(frozen=True)
class PatternMatrix:
    """Extended training reflection vectors as columns of ``V`` ((N+1) x N_r).

    ``q_theta`` is the phase resolution in bits, ``None`` for continuous.
    """

    V: np.ndarray
    q_theta: Optional[int]
    source: str

    @property
    def N(self):
        return self.V.shape[0] - 1

    @property
    def N_r(self):
        return self.V.shape[1]


def _quantize_phases(x, q_theta):
    L = 2 ** q_theta
    step = 2 * np.pi / L
    idx = np.round(np.mod(np.angle(x), 2 * np.pi) / step).astype(int) % L
    return np.exp(1j * step * idx)


def design_patterns(N, N_r=None, q_theta=None):
    """Training pattern matrix for ``N`` elements over ``N_r`` pilots.

    * continuous phases: first N+1 rows of the order-``N_r`` DFT matrix;
    * ``q_theta == 1``: leading block of the smallest Sylvester Hadamard
      matrix of order >= N_r (truncated Hadamard);
    * ``q_theta >= 2``: DFT entries rounded to the nearest of the ``2**q_theta``
      phases (circular distance).
    """
    N = int(N)
    N_r = N + 1 if N_r is None else int(N_r)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if N_r < N + 1:
        raise ValueError(f"N_r >= N+1 is required for LS estimation (N={N}, N_r={N_r})")
    if q_theta is None:
        V = dft_matrix(N_r)[: N + 1]
        source = "DFT"
    elif q_theta == 1:
        order = 1
        while order < N_r:
            order *= 2
        V = sylvester_hadamard(order)[: N + 1, :N_r].astype(complex)
        source = "TruncatedHadamard"
    elif q_theta >= 2:
        V = _quantize_phases(dft_matrix(N_r)[: N + 1], q_theta)
        source = "QuantizedDFT"
    else:
        raise ValueError(f"training needs at least 1 phase bit, got q_theta={q_theta}")
    V = np.array(V, dtype=complex)
    V[0] = 1.0
    if np.linalg.matrix_rank(V) < N + 1:
        raise NumericalError(f"{source} pattern for N={N}, N_r={N_r} is rank deficient")
    return PatternMatrix(V=V, q_theta=q_theta, source=source)


def simulate_uplink(H_tilde, patterns, p_u, eps2, rng):
    """Received pilot block ``Y = sqrt(p_u) H_tilde^H V + noise`` (M x N_r).

    Pilot symbols are 1; noise entries are CN(0, eps2).
    """
    H_tilde = np.asarray(H_tilde)
    V = patterns.V
    if H_tilde.shape[0] != V.shape[0]:
        raise ValueError(f"H_tilde has {H_tilde.shape[0]} rows, patterns have {V.shape[0]}")
    if p_u <= 0:
        raise ValueError(f"training power must be positive, got {p_u}")
    M, N_r = H_tilde.shape[1], V.shape[1]
    noise = np.sqrt(eps2 / 2) * (rng.standard_normal((M, N_r)) + 1j * rng.standard_normal((M, N_r)))
    return np.sqrt(p_u) * H_tilde.conj().T @ V + noise


def ls_estimate(Y, patterns, p_u):
    """LS estimate ``((1/sqrt(p_u)) Y V^+)^H`` of the stacked channel."""
    Y = np.asarray(Y)
    if Y.shape[1] != patterns.N_r:
        raise ValueError(f"Y has {Y.shape[1]} columns, expected N_r={patterns.N_r}")
    return (Y @ pseudo_inverse(patterns.V) / np.sqrt(p_u)).conj().T


def error_covariance(patterns, eps2, p_u):
    """Per-column covariance of the LS error, ``(eps2/p_u) (V^+)^H V^+``.

    Entry (i, j) is ``(eps2/p_u) <vc_i, vc_j>`` with ``vc_i`` the i-th
    column of ``V^+``; equals ``(eps2/p_u) (V V^H)^{-1}`` for full row rank.
    """
    V = patterns.V
    if np.linalg.matrix_rank(V) < V.shape[0]:
        raise NumericalError("pattern matrix is rank deficient; error covariance undefined")
    Vp = pseudo_inverse(V)
    C = (eps2 / p_u) * (Vp.conj().T @ Vp)
    return 0.5 * (C + C.conj().T)


@dataclass
class ChannelEstimate:
    """Estimated stacked channel ``[h_d^H; H]`` and its error covariance.

    ``V_bar`` is ``[[v11, r^H], [r, R]]``.
    """

    H_bar: np.ndarray
    V_bar: np.ndarray

    def __post_init__(self):
        n1 = self.H_bar.shape[0]
        if self.V_bar.shape != (n1, n1):
            raise ValueError(f"V_bar shape {self.V_bar.shape} does not match H_bar {self.H_bar.shape}")

    @property
    def N(self):
        return self.H_bar.shape[0] - 1

    @property
    def M(self):
        return self.H_bar.shape[1]

    @property
    def h_d(self):
        """Estimated direct channel as an M-vector (``H_bar[0] = h_d^H``)."""
        return self.H_bar[0].conj()

    @property
    def H(self):
        return self.H_bar[1:]

    @property
    def v11(self):
        return float(self.V_bar[0, 0].real)

    @property
    def r(self):
        return self.V_bar[1:, 0]

    @property
    def R(self):
        return self.V_bar[1:, 1:]

    def without_error(self):
        """Same estimate with the error statistics zeroed (nonrobust design)."""
        return ChannelEstimate(self.H_bar, np.zeros_like(self.V_bar))

    def scaled(self, s):
        """Channels scaled by ``s``, covariance by ``|s|**2``."""
        return ChannelEstimate(self.H_bar * s, self.V_bar * abs(s) ** 2)


def estimate_channel(H_tilde, patterns, p_u, eps2, rng):
    """Run one training phase and return the :class:`ChannelEstimate`."""
    Y = simulate_uplink(H_tilde, patterns, p_u, eps2, rng)
    return ChannelEstimate(ls_estimate(Y, patterns, p_u), error_covariance(patterns, eps2, p_u))


def normalized_mse(H_bar, H_tilde):
    """``||H_bar - H_tilde||_F^2 / ||H_tilde||_F^2``."""
    H_tilde = np.asarray(H_tilde)
    den = np.linalg.norm(H_tilde) ** 2
    if den == 0:
        raise ValueError("normalized MSE undefined for a zero channel")
    return float(np.linalg.norm(np.asarray(H_bar) - H_tilde) ** 2 / den)
