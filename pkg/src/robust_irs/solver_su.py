"""Single-user reflection design: penalized Dinkelbach-BSUM plus BCD refinement.

With one user the MRT precoder is optimal, so the problem reduces to the
fractional program

    max_v  P ||H^H v + h_d||^2 / (P [1;v]^H V_bar [1;v] + sigma2)

over the per-element feasible set. The penalty stage relaxes ``v`` and keeps a
feasible copy ``u``; the refinement stage is coordinate ascent on ``v``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .numerics import bisection_root, hermitian_solve
from .reflection import FeasibleSet
from .rate import achievable_rate, csi_error_power, effective_channel, eop, extended

__all__ = [
    "SuSolverConfig",
    "SuSolveReport",
    "mrt_precoder",
    "su_objective",
    "dinkelbach_y",
    "bsum_surrogate",
    "update_v_su",
    "per_element_continuous",
    "per_element_search",
    "bcd_refine",
    "solve_su",
    "solve_su_discrete",
    "solve_su_continuous",
    "solve_su_random_bcd",
    "solve_su_nonrobust",
]


@dataclass
class SuSolverConfig:
    beta0: float = 10.0
    c: float = 0.6
    eps_d: float = 1e-4
    eps_p: float = 1e-4
    eps_c: float = 1e-4
    max_outer: int = 100
    max_inner: int = 200
    max_sweeps: int = 100
    bisection_tol: float = 1e-8
    # radius of the norm-ball safeguard on v; None means N
    radius: Optional[float] = None
    init: str = "ones"
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise ValueError(f"penalty shrink factor c must lie in (0, 1), got {self.c}")
        if min(self.beta0, self.eps_d, self.eps_p, self.eps_c) <= 0:
            raise ValueError("beta0 and tolerances must be positive")
        if self.init not in ("ones", "random"):
            raise ValueError(f"unknown init mode {self.init!r}")


@dataclass
class SuSolveReport:
    v: np.ndarray
    w: np.ndarray
    objective: float
    rate: float
    eop: float
    y_traces: list = field(default_factory=list)
    violation_trace: list = field(default_factory=list)
    bcd_trace: list = field(default_factory=list)
    n_outer: int = 0
    n_inner: int = 0
    n_sweeps: int = 0
    converged: bool = True


def mrt_precoder(h_eff, P):
    """``sqrt(P) h / ||h||``."""
    h_eff = np.asarray(h_eff, dtype=complex)
    nrm = np.linalg.norm(h_eff)
    if nrm == 0:
        raise ValueError("MRT is undefined for a zero channel")
    return np.sqrt(P) * h_eff / nrm


def _mrt_or_zero(h_eff, P):
    nrm = np.linalg.norm(h_eff)
    return np.zeros_like(h_eff) if nrm == 0 else np.sqrt(P) * h_eff / nrm


def su_objective(v, estimate, P, sigma2):
    """SNR-like ratio maximized by the single-user design."""
    h = effective_channel(v, estimate)
    return float(P * np.real(h.conj() @ h) / (P * csi_error_power(v, estimate) + sigma2))


def dinkelbach_y(v, u, estimate, P, sigma2, beta):
    """Dinkelbach ratio with the ``||v - u||^2 / beta`` penalty in the denominator."""
    h = effective_channel(v, estimate)
    pen = float(np.real(np.vdot(v - u, v - u))) / beta
    return float(P * np.real(h.conj() @ h) / (P * csi_error_power(v, estimate) + sigma2 + pen))


def bsum_surrogate(v, v_prev, u, y, estimate, P, beta):
    """Convex upper bound (up to constants) of the Dinkelbach objective at ``v_prev``."""
    H, R, r = estimate.H, estimate.R, estimate.r
    v = np.asarray(v, dtype=complex)
    grad = H @ (H.conj().T @ v_prev)
    quad = np.real(v.conj() @ R @ v) + 2 * np.real(np.vdot(v, r))
    return float(
        y * P * quad
        + y / beta * np.real(np.vdot(v - u, v - u))
        - P * (2 * np.real(np.vdot(grad, v - v_prev)) + 2 * np.real(np.vdot(v, H @ estimate.h_d)))
    )


def update_v_su(v_prev, u, y, estimate, P, beta, radius=None, tol=1e-8):
    """Minimize the BSUM surrogate over the ball ``||v|| <= radius``.

    Stationarity gives ``(yPR + (y/beta + mu) I) v = b``; ``mu`` is 0 when the
    ball is inactive, otherwise found by bisection on ``||v(mu)|| = radius``.
    """
    H, R, r = estimate.H, estimate.R, estimate.r
    N = H.shape[0]
    radius = float(N) if radius is None else float(radius)
    b = y / beta * u + P * (H @ (H.conj().T @ v_prev)) + P * (H @ estimate.h_d) - y * P * r
    if y <= 0:
        # surrogate is linear in v: best point of the ball along b
        nb = np.linalg.norm(b)
        if nb == 0:
            nu = np.linalg.norm(u)
            return u.copy() if nu <= radius else u * (radius / nu)
        return radius * b / nb

    A0 = y * P * R + (y / beta) * np.eye(N)
    A0 = 0.5 * (A0 + A0.conj().T)
    lam, U = np.linalg.eigh(A0)
    c2 = np.abs(U.conj().T @ b) ** 2

    def norm_of(mu):
        return float(np.sqrt(np.sum(c2 / (lam + mu) ** 2)))

    mu = bisection_root(norm_of, radius, lo=0.0, tol=tol)
    return hermitian_solve(A0 + mu * np.eye(N), b)


class _ElementProblem:
    """Objective along one coordinate: ``(P f1(x)) / (P f2(x) + sigma2)``.

    With ``t = [1; v]`` and element ``i = n + 1`` zeroed,
    ``f1(x) = Phi_ii |x|^2 + 2 Re(x^* px) + pz`` and likewise ``f2`` with V_bar.
    """

    def __init__(self, n, v, estimate, P, sigma2):
        i = n + 1
        vt = extended(v)
        vt[i] = 0.0
        s = estimate.H_bar.conj().T @ vt  # h_d + H^H v without element n
        hrow = estimate.H_bar[i]
        self.P, self.sigma2 = P, sigma2
        self.phi_ii = float(np.real(hrow @ hrow.conj()))
        self.px = complex(hrow @ s)
        self.pz = float(np.real(s.conj() @ s))
        t = estimate.V_bar @ vt
        self.v_ii = float(np.real(estimate.V_bar[i, i]))
        self.vx = complex(t[i])
        self.vz = float(np.real(vt.conj() @ t))

    def value(self, x):
        x = np.asarray(x, dtype=complex)
        m2 = np.abs(x) ** 2
        num = self.phi_ii * m2 + 2 * np.real(x.conj() * self.px) + self.pz
        den = self.v_ii * m2 + 2 * np.real(x.conj() * self.vx) + self.vz
        return self.P * num / (self.P * den + self.sigma2)

    def interior_roots(self):
        P, s2 = self.P, self.sigma2
        x, xt, z, zt = self.px, self.vx, self.pz, self.vz
        qa = P * P * (self.phi_ii * np.conj(xt) - self.v_ii * np.conj(x))
        qb = (P * P * self.phi_ii * zt + P * self.phi_ii * s2 + P * P * x * np.conj(xt)
              - P * P * self.v_ii * z - P * P * xt * np.conj(x))
        qc = P * P * x * zt + P * x * s2 - P * P * xt * z
        scale = max(abs(qa), abs(qb), abs(qc))
        if scale == 0:
            return np.empty(0, dtype=complex)
        if abs(qa) <= 1e-13 * scale:
            return np.array([-qc / qb]) if abs(qb) > 1e-13 * scale else np.empty(0, dtype=complex)
        disc = np.sqrt(complex(qb * qb - 4 * qa * qc))
        return np.array([(-qb + disc) / (2 * qa), (-qb - disc) / (2 * qa)])

    def circle_phases(self, a):
        """Stationary phases of ``x = a e^{j phi}`` (both arccos branches)."""
        P, s2 = self.P, self.sigma2
        A = P * (self.phi_ii * a * a + self.pz)
        B, C = 2 * P * a * self.px.real, 2 * P * a * self.px.imag
        D = P * (self.v_ii * a * a + self.vz) + s2
        E, F = 2 * P * a * self.vx.real, 2 * P * a * self.vx.imag
        # d/dphi of (A + B cos + C sin)/(D + E cos + F sin) vanishes where
        # p cos(phi) + q sin(phi) + r = 0
        p, q, r = C * D - A * F, A * E - B * D, C * E - B * F
        amp = np.hypot(p, q)
        if amp == 0:
            return np.array([0.0, np.angle(self.px)])
        psi = np.arctan2(q, p)
        delta = np.arccos(np.clip(-r / amp, -1.0, 1.0))
        return np.array([psi + delta, psi - delta])

    def ray_amplitudes(self, theta):
        """Stationary amplitudes in [0, 1] along phase ``theta``, plus the endpoints."""
        P, s2 = self.P, self.sigma2
        rot = np.exp(-1j * theta)
        A, c, d = P * self.phi_ii, 2 * P * np.real(rot * self.px), P * self.pz
        R, e, f = P * self.v_ii, 2 * P * np.real(rot * self.vx), P * self.vz + s2
        roots = np.roots([A * e - c * R, 2 * (A * f - d * R), c * f - d * e])
        roots = roots[np.abs(roots.imag) < 1e-12].real
        return np.concatenate(([0.0, 1.0], roots[(roots > 0) & (roots < 1)]))


def _best(problem, candidates):
    candidates = np.asarray(candidates, dtype=complex)
    vals = problem.value(candidates)
    k = int(np.argmax(vals))
    return complex(candidates[k]), float(vals[k])


def per_element_continuous(n, v, estimate, P, sigma2):
    """Optimal ``v_n`` on the unit disc with the other elements fixed.

    Candidates: 0, interior stationary roots with ``|x| < 1`` and the
    stationary phases on ``|x| = 1``; the best by exact evaluation wins.
    """
    prob = _ElementProblem(n, v, estimate, P, sigma2)
    roots = prob.interior_roots()
    roots = roots[np.abs(roots) < 1.0]
    boundary = np.exp(1j * prob.circle_phases(1.0))
    return _best(prob, np.concatenate(([0.0], roots, boundary)))[0]


def _element_candidates(prob, feasible):
    mode = feasible.mode
    if mode == "discrete":
        return feasible.points()
    if mode == "continuous":
        roots = prob.interior_roots()
        return np.concatenate(([0.0], roots[np.abs(roots) < 1.0],
                               np.exp(1j * prob.circle_phases(1.0))))
    if mode == "CADP":
        return np.concatenate([prob.ray_amplitudes(th) * np.exp(1j * th) for th in feasible.phases])
    # DACP
    return np.concatenate([a * np.exp(1j * prob.circle_phases(a)) for a in feasible.amplitudes])


def per_element_search(n, v, estimate, P, sigma2, feasible):
    """Best feasible value of element ``n`` with the others fixed."""
    prob = _ElementProblem(n, v, estimate, P, sigma2)
    return _best(prob, _element_candidates(prob, feasible))


def bcd_refine(v, estimate, P, sigma2, feasible, eps=1e-4, max_sweeps=100):
    """Cyclic coordinate ascent on the single-user ratio.

    An element only moves on a strict improvement, so the objective trace
    (one entry per element visit) is nondecreasing.

    Returns
    -------
    v, trace, sweeps
    """
    v = np.array(v, dtype=complex)
    current = su_objective(v, estimate, P, sigma2)
    trace = [current]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        start = current
        for n in range(v.size):
            x, val = per_element_search(n, v, estimate, P, sigma2, feasible)
            if val > current * (1 + 1e-12) and x != v[n]:
                old = v[n]
                v[n] = x
                exact = su_objective(v, estimate, P, sigma2)
                if exact >= current:
                    current = exact
                else:
                    v[n] = old
            trace.append(current)
        if current - start <= eps * abs(start):
            break
    return v, trace, sweeps


def _initial_point(N, feasible, config):
    if config.init == "ones":
        return feasible.project(np.ones(N, dtype=complex))
    rng = np.random.default_rng(config.seed)
    raw = rng.uniform(0, 1, N) * np.exp(2j * np.pi * rng.uniform(0, 1, N))
    if feasible.mode == "discrete":
        pts = feasible.points()
        return pts[rng.integers(0, pts.size, N)]
    return feasible.project(raw)


def _penalty_stage(estimate, P, sigma2, feasible, config, v0):
    """Outer penalty loop around inner Dinkelbach-BSUM iterations."""
    N = estimate.N
    radius = float(N) if config.radius is None else config.radius
    u = feasible.project(v0)
    v = u.copy()
    beta = config.beta0
    y_traces, violations = [], []
    n_inner = 0
    converged = False
    for outer in range(1, config.max_outer + 1):
        y = dinkelbach_y(v, u, estimate, P, sigma2, beta)
        ys = [y]
        for _ in range(config.max_inner):
            v = update_v_su(v, u, y, estimate, P, beta, radius, config.bisection_tol)
            u = feasible.project(v)
            y_new = dinkelbach_y(v, u, estimate, P, sigma2, beta)
            ys.append(y_new)
            n_inner += 1
            done = (y_new - y) <= config.eps_d * abs(y)
            y = y_new
            if done:
                break
        y_traces.append(ys)
        violations.append(float(np.max(np.abs(v - u))))
        if violations[-1] <= config.eps_p:
            converged = True
            break
        beta *= config.c
    return v, u, y_traces, violations, outer, n_inner, converged


def solve_su(estimate, P, sigma2, feasible, config=None, v0=None):
    """Penalized Dinkelbach-BSUM followed by coordinate refinement.

    Works for any feasible set: the penalty stage projects with
    ``feasible.project`` and the refinement maximizes each element exactly
    over the set. The solve runs on noise-normalized channels, which leaves
    the ratio unchanged and keeps the penalty on the scale of the objective.
    """
    config = SuSolverConfig() if config is None else config
    scale = 1.0 / np.sqrt(sigma2)
    est = estimate.scaled(scale)
    if v0 is None:
        v0 = _initial_point(estimate.N, feasible, config)

    v, u, y_traces, violations, n_outer, n_inner, converged = _penalty_stage(
        est, P, 1.0, feasible, config, v0)

    eps = config.eps_d if feasible.mode == "discrete" else config.eps_c
    v_fin, bcd_trace, sweeps = bcd_refine(u, est, P, 1.0, feasible, eps, config.max_sweeps)
    return _report(v_fin, estimate, P, sigma2, y_traces, violations, bcd_trace,
                   n_outer, n_inner, sweeps, converged)


def _report(v, estimate, P, sigma2, y_traces, violations, bcd_trace, n_outer, n_inner, sweeps, converged):
    w = _mrt_or_zero(effective_channel(v, estimate), P)
    return SuSolveReport(
        v=v, w=w,
        objective=su_objective(v, estimate, P, sigma2),
        rate=achievable_rate(0, v, w[None, :], estimate, sigma2),
        eop=eop(v),
        y_traces=y_traces, violation_trace=violations, bcd_trace=bcd_trace,
        n_outer=n_outer, n_inner=n_inner, n_sweeps=sweeps, converged=converged,
    )


def solve_su_discrete(estimate, P, sigma2, config=None, feasible=FeasibleSet(1, 1)):
    if feasible.mode != "discrete":
        raise ValueError(f"solve_su_discrete needs a discrete set, got {feasible.mode}")
    return solve_su(estimate, P, sigma2, feasible, config)


def solve_su_continuous(estimate, P, sigma2, config=None):
    return solve_su(estimate, P, sigma2, FeasibleSet(None, None), config)


def solve_su_random_bcd(estimate, P, sigma2, feasible, seed=None, config=None):
    """Baseline: random feasible start, coordinate refinement only."""
    config = SuSolverConfig() if config is None else config
    rand_cfg = SuSolverConfig(**{**config.__dict__, "init": "random", "seed": seed})
    scale = 1.0 / np.sqrt(sigma2)
    est = estimate.scaled(scale)
    v0 = _initial_point(estimate.N, feasible, rand_cfg)
    eps = config.eps_d if feasible.mode == "discrete" else config.eps_c
    v_fin, trace, sweeps = bcd_refine(v0, est, P, 1.0, feasible, eps, config.max_sweeps)
    return _report(v_fin, estimate, P, sigma2, [], [], trace, 0, 0, sweeps, True)


def solve_su_nonrobust(estimate, P, sigma2, feasible, config=None):
    """Design as if the estimate were exact; rate reported under the true error statistics."""
    rep = solve_su(estimate.without_error(), P, sigma2, feasible, config)
    return _report(rep.v, estimate, P, sigma2, rep.y_traces, rep.violation_trace, rep.bcd_trace,
                   rep.n_outer, rep.n_inner, rep.n_sweeps, rep.converged)
