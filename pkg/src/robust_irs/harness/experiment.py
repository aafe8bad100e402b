"""Seeded Monte-Carlo trials and parameter sweeps.

A trial draws users and channels, runs one training phase, then solves every
enabled scheme on the same estimates (paired comparison). Rates always use
the true error statistics, and are scaled by ``(T0 - N_r) / T0`` when a frame
length ``T0`` is configured.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..channel import (Geometry, PathLossModel, RicianSpec, db_to_linear, generate_channels,
                       sample_users)
from ..reflection import FeasibleSet
from ..solver_mu import MuSolverConfig, no_irs_baseline, pdd_solve
from ..solver_su import SuSolverConfig, solve_su, solve_su_nonrobust, solve_su_random_bcd
from ..training import design_patterns, estimate_channel, normalized_mse

__all__ = [
    "SchemeResult",
    "TrialRecord",
    "trial_seed",
    "scheme_names",
    "run_trial",
    "run_trials",
    "aggregate",
    "run_sweep",
]

METRICS = ("sum_rate", "eop", "iterations", "converged")


@dataclass
class SchemeResult:
    sum_rate: float
    user_rates: list
    eop: float
    iterations: int
    converged: bool


@dataclass
class TrialRecord:
    seed: int
    sweep_value: object
    nmse: float
    schemes: dict = field(default_factory=dict)
    wall_time: float = 0.0


def trial_seed(master_seed, sweep_index, trial_index):
    """Independent 63-bit seed for one trial."""
    ss = np.random.SeedSequence([int(master_seed), int(sweep_index), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _use_su(cfg):
    return cfg.solver == "su" or (cfg.solver == "auto" and cfg.K == 1)


def scheme_names(cfg, schemes=None):
    """Enabled schemes in evaluation order."""
    if schemes is not None:
        return tuple(schemes)
    names = ["proposed"]
    if cfg.nonrobust:
        names.append("nonrobust")
    if cfg.no_irs:
        names.append("no_irs")
    if cfg.random_bcd and _use_su(cfg):
        names.append("random_bcd")
    return tuple(names)


def _setup(cfg):
    geometry = Geometry(ap_ref=cfg.ap_ref, irs_ref=cfg.irs_ref, M=cfg.M, N=cfg.N, irs_ny=cfg.irs_ny)
    plm = PathLossModel(c0_db=cfg.c0_db, alpha_au=cfg.alpha_au, alpha_ai=cfg.alpha_ai,
                        alpha_iu=cfg.alpha_iu)
    rician = RicianSpec(beta_au=float(db_to_linear(cfg.beta_au_db)),
                        beta_ai=float(db_to_linear(cfg.beta_ai_db)),
                        beta_iu=float(db_to_linear(cfg.beta_iu_db)))
    return geometry, plm, rician


def _from_su(rep, overhead):
    return SchemeResult(sum_rate=rep.rate * overhead, user_rates=[rep.rate * overhead], eop=rep.eop,
                        iterations=rep.n_inner + rep.n_sweeps, converged=bool(rep.converged))


def _from_mu(rep, overhead):
    rates = [float(r) * overhead for r in rep.rates]
    return SchemeResult(sum_rate=rep.sum_rate * overhead, user_rates=rates, eop=rep.eop,
                        iterations=rep.n_inner, converged=bool(rep.converged))


def _solve(name, cfg, estimates, P, sigma2, feasible, rng):
    su_cfg = SuSolverConfig(**cfg.solver_su)
    mu_cfg = MuSolverConfig(**cfg.solver_mu)
    if name == "no_irs":
        return no_irs_baseline(estimates, P, sigma2, config=mu_cfg), _from_mu
    if name == "random_bcd":
        seed = int(rng.integers(0, 2 ** 32))
        return solve_su_random_bcd(estimates[0], P, sigma2, feasible, seed=seed, config=su_cfg), _from_su
    robust = name == "proposed"
    if name not in ("proposed", "nonrobust"):
        raise ValueError(f"unknown scheme {name!r}")
    if _use_su(cfg):
        solver = solve_su if robust else solve_su_nonrobust
        return solver(estimates[0], P, sigma2, feasible, su_cfg), _from_su
    mu_cfg = MuSolverConfig(**{**mu_cfg.__dict__, "robust": robust})
    return pdd_solve(estimates, P, sigma2, feasible=feasible, config=mu_cfg), _from_mu


def run_trial(cfg, seed, sweep_value=None, schemes=None):
    """Full pipeline for one channel realization.

    Parameters
    ----------
    cfg : ExperimentConfig
        Configuration with the sweep value already applied.
    seed : int
        Trial seed; identical seeds give identical records.
    schemes : sequence of str, optional
        Override the enabled schemes (empty: estimation only).
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    geometry, plm, rician = _setup(cfg)
    geometry = geometry.with_users(sample_users(cfg.K, rng, cfg.cluster_center, cfg.cluster_radius))
    channels = generate_channels(geometry, plm, rician, rng)
    patterns = design_patterns(cfg.N, cfg.n_pilots, cfg.training_q_theta)
    p_u, eps2 = db_to_linear(cfg.p_u_dbm), db_to_linear(cfg.eps2_dbm)
    estimates = [estimate_channel(channels.H_tilde[k], patterns, p_u, eps2, rng) for k in range(cfg.K)]
    num = sum(float(np.linalg.norm(e.H_bar - h) ** 2) for e, h in zip(estimates, channels.H_tilde))
    den = sum(float(np.linalg.norm(h) ** 2) for h in channels.H_tilde)
    nmse = num / den if cfg.K > 1 else normalized_mse(estimates[0].H_bar, channels.H_tilde[0])

    P, sigma2 = float(db_to_linear(cfg.P_dbm)), float(db_to_linear(cfg.sigma2_dbm))
    feasible = FeasibleSet(cfg.q_a, cfg.q_theta)
    overhead = 1.0 if cfg.T0 is None else (cfg.T0 - cfg.n_pilots) / cfg.T0
    record = TrialRecord(seed=seed, sweep_value=sweep_value, nmse=nmse)
    for name in scheme_names(cfg, schemes):
        rep, convert = _solve(name, cfg, estimates, P, sigma2, feasible, rng)
        record.schemes[name] = convert(rep, overhead)
    record.wall_time = time.perf_counter() - start
    return record


def _run_one(args):
    cfg, seed, value, schemes = args
    return run_trial(cfg, seed, value, schemes)


def run_trials(cfg, schemes=None):
    """All trials of all sweep points, ordered by (sweep index, trial index)."""
    values = cfg.sweep_values if cfg.sweep_param is not None else (None,)
    jobs = []
    for si, value in enumerate(values):
        point = cfg.at(value) if value is not None else cfg
        for ti in range(cfg.trials):
            jobs.append((point, trial_seed(cfg.master_seed, si, ti), value, schemes))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(job) for job in jobs]
    return records


def _stats(xs):
    xs = np.asarray(xs, dtype=float)
    if xs.size and np.all(xs == xs[0]):
        return float(xs[0]), 0.0
    std = float(np.std(xs, ddof=1)) if xs.size > 1 else 0.0
    return float(np.mean(xs)), std


def aggregate(records, sweep_param=None):
    """Mean and sample std of every metric per sweep value and scheme.

    Rows keep the order of first appearance, so the output is independent of
    how trials were scheduled.
    """
    groups = {}
    for rec in records:
        groups.setdefault(rec.sweep_value, []).append(rec)
    rows = []
    for value, recs in groups.items():
        base = {"sweep_param": sweep_param or "", "sweep_value": value}
        mean, std = _stats([r.nmse for r in recs])
        rows.append({**base, "scheme": "estimation", "metric": "nmse", "mean": mean, "std": std,
                     "n_trials": len(recs)})
        for name in recs[0].schemes:
            for metric in METRICS:
                mean, std = _stats([float(getattr(r.schemes[name], metric)) for r in recs])
                rows.append({**base, "scheme": name, "metric": metric, "mean": mean, "std": std,
                             "n_trials": len(recs)})
    return rows


def run_sweep(cfg, schemes=None):
    """Aggregated rows for every sweep point (a single point without a sweep)."""
    return aggregate(run_trials(cfg, schemes), cfg.sweep_param)
