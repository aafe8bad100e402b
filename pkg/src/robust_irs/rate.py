"""Achievable-rate lower bound under LS CSI errors and its WMMSE companions.

Precoders are stored row-wise: ``W[k]`` is the M-vector of user ``k``.
``v`` is the length-N reflection vector; the effective estimated channel of
user ``k`` is ``h_k = H_k^H v + h_dk`` so that the received amplitude of
stream ``j`` is ``h_k^H w_j``.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "extended",
    "effective_channel",
    "csi_error_power",
    "psi_d",
    "sinr",
    "achievable_rate",
    "user_rates",
    "weighted_sum_rate",
    "mmse_receiver",
    "mse_e_k",
    "AmplitudeProfile",
    "amplitude_profile",
    "eop",
]


def extended(v):
    """``[1; v]``."""
    return np.concatenate(([1.0 + 0j], np.asarray(v, dtype=complex)))


def effective_channel(v, estimate):
    """``H^H v + h_d``; its conjugate transpose is ``v^H H + h_d^H``."""
    return estimate.H_bar.conj().T @ extended(v)


def csi_error_power(v, estimate):
    """``v11 + v^H r + r^H v + v^H R v`` = ``[1;v]^H V_bar [1;v]``."""
    vt = extended(v)
    return float(np.real(vt.conj() @ estimate.V_bar @ vt))


def _as_precoders(W):
    W = np.asarray(W, dtype=complex)
    return W[None, :] if W.ndim == 1 else W


def psi_d(k, v, W, estimate_k, sigma2):
    """Interference-plus-noise power seen by user ``k``.

    Other-user leakage + CSI-error term times total transmit power + noise.
    """
    W = _as_precoders(W)
    h = effective_channel(v, estimate_k)
    amp = W @ h.conj()
    leak = float(np.sum(np.abs(amp) ** 2) - abs(amp[k]) ** 2)
    total_power = float(np.sum(np.abs(W) ** 2))
    return max(leak, 0.0) + csi_error_power(v, estimate_k) * total_power + sigma2


def sinr(k, v, W, estimate_k, sigma2):
    W = _as_precoders(W)
    h = effective_channel(v, estimate_k)
    return abs(h.conj() @ W[k]) ** 2 / psi_d(k, v, W, estimate_k, sigma2)


def achievable_rate(k, v, W, estimate_k, sigma2):
    """Rate lower bound of user ``k`` in bits/s/Hz."""
    return float(np.log2(1.0 + sinr(k, v, W, estimate_k, sigma2)))


def user_rates(v, W, estimates, sigma2s):
    W = _as_precoders(W)
    sigma2s = np.broadcast_to(np.asarray(sigma2s, dtype=float), (len(estimates),))
    return np.array([achievable_rate(k, v, W, est, s2)
                     for k, (est, s2) in enumerate(zip(estimates, sigma2s))])


def weighted_sum_rate(v, W, estimates, sigma2s, weights=None):
    rates = user_rates(v, W, estimates, sigma2s)
    weights = np.ones(len(rates)) if weights is None else np.asarray(weights, dtype=float)
    return float(weights @ rates)


def _total_received(k, v, W, estimate_k, sigma2):
    """Denominator of the MMSE receiver: all streams + CSI error + noise."""
    W = _as_precoders(W)
    h = effective_channel(v, estimate_k)
    amp = W @ h.conj()
    return (float(np.sum(np.abs(amp) ** 2))
            + csi_error_power(v, estimate_k) * float(np.sum(np.abs(W) ** 2)) + sigma2), amp


def mmse_receiver(k, v, W, estimate_k, sigma2):
    """Linear MMSE receive coefficient ``g_k``."""
    total, amp = _total_received(k, v, W, estimate_k, sigma2)
    return complex(amp[k] / total)


def mse_e_k(k, g, v, W, estimate_k, sigma2):
    """MSE ``E|g^* y_k - s_k|^2`` for receive coefficient ``g``."""
    total, amp = _total_received(k, v, W, estimate_k, sigma2)
    return float(abs(g) ** 2 * total - 2.0 * np.real(np.conj(g) * amp[k]) + 1.0)


@dataclass(frozen=True)
class AmplitudeProfile:
    """Single-user rate as a function of one element's amplitude ``a``.

    ``rate(a) = log2(1 + (A a^2 + c a + d) / (R a^2 + e a + f))``.
    """

    A: float
    c: float
    d: float
    R: float
    e: float
    f: float

    def numerator(self, a):
        return self.A * a * a + self.c * a + self.d

    def denominator(self, a):
        return self.R * a * a + self.e * a + self.f

    def rate(self, a):
        a = np.asarray(a, dtype=float)
        return np.log2(1.0 + self.numerator(a) / self.denominator(a))


def amplitude_profile(n, theta_n, v, w, estimate, sigma2):
    """Quadratic coefficients of signal and interference in element ``n``'s amplitude.

    Element ``n`` is set to ``a * exp(1j*theta_n)``; all other entries of
    ``v`` and the precoder ``w`` are held.
    """
    w = np.asarray(w, dtype=complex).reshape(-1)
    vt = extended(v)
    i = n + 1
    vt[i] = 0.0
    s = estimate.H_bar @ w
    rho = vt.conj() @ s
    rot = np.exp(-1j * theta_n)
    pw = float(np.real(w.conj() @ w))
    t = estimate.V_bar @ vt
    return AmplitudeProfile(
        A=float(abs(s[i]) ** 2),
        c=float(2.0 * np.real(rot * s[i] * np.conj(rho))),
        d=float(abs(rho) ** 2),
        R=float(np.real(estimate.V_bar[i, i])) * pw,
        e=float(2.0 * np.real(rot * t[i])) * pw,
        f=float(np.real(vt.conj() @ t)) * pw + sigma2,
    )


def eop(v, tol=1e-9):
    """Percentage of IRS elements switched off (``|v_n| < tol``)."""
    v = np.asarray(v)
    if v.size == 0:
        return 0.0
    return 100.0 * float(np.mean(np.abs(v) < tol))
