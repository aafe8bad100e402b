"""Multiuser weighted sum-rate design via penalty dual decomposition.

The rate problem is rewritten in WMMSE form with receivers ``g``, weights
``q`` and a feasible copy ``u`` of the reflection vector. Each inner iteration
minimizes the augmented Lagrangian

    sum_k alpha_k (q_k e_k - ln q_k) + ||v - u + beta mu||^2 / (2 beta)

exactly over g, q, W, v and u in turn; the outer loop updates ``mu`` and
shrinks ``beta`` until ``v`` and ``u`` agree.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numerics import bisection_root, hermitian_solve
from .reflection import FeasibleSet
from .rate import csi_error_power, effective_channel, eop, user_rates

__all__ = [
    "MuSolverConfig",
    "MuSolveReport",
    "update_receivers",
    "update_weights",
    "update_precoders",
    "update_v_mu",
    "update_u_mu",
    "dual_update",
    "mse_all",
    "al_objective",
    "pdd_solve",
    "no_irs_baseline",
]


@dataclass
class MuSolverConfig:
    beta0: float = 10.0
    c: float = 0.6
    eps_in: float = 1e-4
    eps_out: float = 1e-4
    max_inner: int = 200
    max_outer: int = 50
    # False: design as if the estimates were exact, report with true statistics
    robust: bool = True
    bisection_tol: float = 1e-10
    init: str = "ones"
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise ValueError(f"penalty shrink factor c must lie in (0, 1), got {self.c}")
        if min(self.beta0, self.eps_in, self.eps_out) <= 0:
            raise ValueError("beta0 and tolerances must be positive")
        if self.init not in ("ones", "random"):
            raise ValueError(f"unknown init mode {self.init!r}")


@dataclass
class MuSolveReport:
    W: np.ndarray
    v: np.ndarray
    rates: np.ndarray
    sum_rate: float
    eop: float
    al_traces: list = field(default_factory=list)
    violation_trace: list = field(default_factory=list)
    n_outer: int = 0
    n_inner: int = 0
    converged: bool = True


def _channels(v, estimates):
    """Effective channels (K, M) and CSI-error powers (K,)."""
    h = np.stack([effective_channel(v, est) for est in estimates])
    c = np.array([csi_error_power(v, est) for est in estimates])
    return h, c


def _totals(h, c, W, sigma2s):
    amp = h.conj() @ W.T  # amp[k, j] = h_k^H w_j
    total = np.sum(np.abs(amp) ** 2, axis=1) + c * np.sum(np.abs(W) ** 2) + sigma2s
    return amp, total


def update_receivers(v, W, estimates, sigma2s):
    """MMSE receive coefficients for every user."""
    h, c = _channels(v, estimates)
    amp, total = _totals(h, c, W, np.asarray(sigma2s, dtype=float))
    return np.diag(amp) / total


def mse_all(g, v, W, estimates, sigma2s):
    """Per-user MSE ``e_k`` for receivers ``g``."""
    h, c = _channels(v, estimates)
    amp, total = _totals(h, c, W, np.asarray(sigma2s, dtype=float))
    return np.abs(g) ** 2 * total - 2 * np.real(np.conj(g) * np.diag(amp)) + 1.0


def update_weights(e):
    """``q_k = 1 / e_k``."""
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0):
        raise ValueError("MSE values must be positive")
    return 1.0 / e


def update_precoders(v, g, q, estimates, weights, P, tol=1e-10):
    """Minimize ``sum_k alpha_k q_k e_k`` over W subject to ``sum ||w_k||^2 <= P``.

    ``w_k(nu) = alpha_k q_k g_k (B + nu I)^{-1} h_k`` with
    ``B = sum_j alpha_j q_j |g_j|^2 (h_j h_j^H + c_j I)``; ``nu`` is found by
    bisection when the unconstrained solution exceeds the budget.
    """
    h, c = _channels(v, estimates)
    wq = np.asarray(weights, dtype=float) * np.asarray(q, dtype=float)
    gain = wq * np.abs(g) ** 2
    M = h.shape[1]
    B = (h.T * gain) @ h.conj() + np.sum(gain * c) * np.eye(M)
    B = 0.5 * (B + B.conj().T)
    rhs = (h * (wq * g)[:, None]).T  # column k: alpha_k q_k g_k h_k
    lam, U = np.linalg.eigh(B)
    lam = np.maximum(lam, 0.0)
    proj = np.abs(U.conj().T @ rhs) ** 2  # (M, K)
    weight = np.sum(proj, axis=1)
    # rounding leaves ~eps-sized mass in the null space of B; drop it or nu -> 0 blows it up
    weight[weight <= (1e-12 * np.linalg.norm(rhs)) ** 2] = 0.0

    def power(nu):
        den = (lam + nu) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(weight > 0, weight / den, 0.0)
        return float(np.sum(terms))

    nu = bisection_root(power, P, lo=0.0, tol=tol * P)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where((lam + nu > 0) & (weight > 0), 1.0 / (lam + nu), 0.0)
    W = (U @ (inv[:, None] * (U.conj().T @ rhs))).T
    tot = float(np.sum(np.abs(W) ** 2))
    if tot > P:
        W *= np.sqrt(P / tot)
    return W


def _v_system(g, q, W, estimates, weights, u, dual, beta):
    """Hermitian matrix and right-hand side of the v-subproblem."""
    N = estimates[0].N
    wq = np.asarray(weights, dtype=float) * np.asarray(q, dtype=float)
    S = W.T @ W.conj()  # sum_j w_j w_j^H
    pw = float(np.sum(np.abs(W) ** 2))
    C = np.eye(N, dtype=complex) / (2 * beta)
    d = (u - beta * dual) / (2 * beta)
    for k, est in enumerate(estimates):
        gk = wq[k] * abs(g[k]) ** 2
        HS = est.H @ S
        C += gk * (HS @ est.H.conj().T + pw * est.R)
        d += wq[k] * np.conj(g[k]) * (est.H @ W[k]) - gk * (HS @ est.h_d + pw * est.r)
    return 0.5 * (C + C.conj().T), d


def update_v_mu(g, q, W, estimates, weights, u, dual, beta):
    """Unconstrained minimizer ``C^{-1} d`` of the v-subproblem."""
    C, d = _v_system(g, q, W, estimates, weights, u, dual, beta)
    return hermitian_solve(C, d)


def update_u_mu(v, dual, beta, feasible):
    """Project ``v + beta * mu`` onto the feasible set."""
    return feasible.project(v + beta * dual)


def dual_update(dual, v, u, beta):
    return dual + (v - u) / beta


def al_objective(g, q, v, u, dual, beta, W, estimates, sigma2s, weights):
    e = mse_all(g, v, W, estimates, sigma2s)
    wts = np.asarray(weights, dtype=float)
    pen = np.linalg.norm(v - u + beta * dual) ** 2 / (2 * beta)
    return float(np.sum(wts * (q * e - np.log(q))) + pen)


def _init_precoders(v, estimates, P):
    h, _ = _channels(v, estimates)
    K = h.shape[0]
    nrm = np.linalg.norm(h, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return np.sqrt(P / K) * h / nrm


def _initial_v(N, feasible, config):
    if config.init == "ones":
        return feasible.project(np.ones(N, dtype=complex))
    rng = np.random.default_rng(config.seed)
    return feasible.project(rng.uniform(0, 1, N) * np.exp(2j * np.pi * rng.uniform(0, 1, N)))


def pdd_solve(estimates, P, sigma2s, weights=None, feasible=FeasibleSet(None, None),
              config=None, v0=None):
    """Penalty dual decomposition for the robust weighted sum-rate problem.

    ``al_traces[i]`` holds the augmented Lagrangian after every block update
    of outer iteration ``i`` (starting value first, then five entries per
    inner iteration).
    """
    config = MuSolverConfig() if config is None else config
    K = len(estimates)
    if K < 1:
        raise ValueError("need at least one user")
    sigma2s = np.broadcast_to(np.asarray(sigma2s, dtype=float), (K,)).copy()
    weights = np.ones(K) if weights is None else np.asarray(weights, dtype=float)
    design = list(estimates) if config.robust else [est.without_error() for est in estimates]
    N = design[0].N

    u = feasible.project(_initial_v(N, feasible, config) if v0 is None else np.asarray(v0, dtype=complex))
    v = u.copy()
    dual = np.zeros(N, dtype=complex)
    beta = config.beta0
    W = _init_precoders(v, design, P)
    g = update_receivers(v, W, design, sigma2s)
    q = update_weights(mse_all(g, v, W, design, sigma2s))

    def al():
        return al_objective(g, q, v, u, dual, beta, W, design, sigma2s, weights)

    al_traces, violations = [], []
    n_inner = 0
    converged = False
    for outer in range(1, config.max_outer + 1):
        trace = [al()]
        for _ in range(config.max_inner):
            start = trace[-1]
            g = update_receivers(v, W, design, sigma2s)
            trace.append(al())
            q = update_weights(mse_all(g, v, W, design, sigma2s))
            trace.append(al())
            W = update_precoders(v, g, q, design, weights, P, config.bisection_tol)
            trace.append(al())
            v = update_v_mu(g, q, W, design, weights, u, dual, beta)
            trace.append(al())
            u = update_u_mu(v, dual, beta, feasible)
            trace.append(al())
            n_inner += 1
            if start - trace[-1] <= config.eps_in * abs(start):
                break
        al_traces.append(trace)
        violations.append(float(np.max(np.abs(v - u))))
        if violations[-1] <= config.eps_out:
            converged = True
            break
        dual = dual_update(dual, v, u, beta)
        beta *= config.c

    rates = user_rates(u, W, estimates, sigma2s)
    return MuSolveReport(
        W=W, v=u, rates=rates, sum_rate=float(weights @ rates), eop=eop(u),
        al_traces=al_traces, violation_trace=violations,
        n_outer=outer, n_inner=n_inner, converged=converged,
    )


def no_irs_baseline(estimates, P, sigma2s, weights=None, config=None):
    """Design without the IRS (``v = 0``): MRT for one user, WMMSE otherwise."""
    config = MuSolverConfig() if config is None else config
    K = len(estimates)
    sigma2s = np.broadcast_to(np.asarray(sigma2s, dtype=float), (K,)).copy()
    weights = np.ones(K) if weights is None else np.asarray(weights, dtype=float)
    v = np.zeros(estimates[0].N, dtype=complex)
    design = list(estimates) if config.robust else [est.without_error() for est in estimates]
    n_inner = 0
    if K == 1:
        h = estimates[0].h_d
        nrm = np.linalg.norm(h)
        W = (np.zeros_like(h) if nrm == 0 else np.sqrt(P) * h / nrm)[None, :]
    else:
        W = _init_precoders(v, design, P)
        prev = None
        for n_inner in range(1, config.max_inner * config.max_outer + 1):
            g = update_receivers(v, W, design, sigma2s)
            q = update_weights(mse_all(g, v, W, design, sigma2s))
            W = update_precoders(v, g, q, design, weights, P, config.bisection_tol)
            obj = float(np.sum(weights * (q * mse_all(g, v, W, design, sigma2s) - np.log(q))))
            if prev is not None and prev - obj <= config.eps_in * abs(prev):
                break
            prev = obj
    rates = user_rates(v, W, estimates, sigma2s)
    return MuSolveReport(W=W, v=v, rates=rates, sum_rate=float(weights @ rates), eop=100.0,
                         n_outer=0, n_inner=n_inner, converged=True)
