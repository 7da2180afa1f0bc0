"""Batch audits over random instances.

Trial ``t`` of a sweep with master seed ``s`` draws everything from a
Philox generator keyed by ``SeedSequence([s, t])``, so each trial is
reproducible on its own and results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .bounds import AuditConfig, audit, residual
from .errors import ValidationError
from .mdp import Mdp, random_mdp
from .model import random_normalized
from .norms import NormSpec, lyapunov_weight_heuristic, mixed_norm
from .planner import plan

SCHEMA_VERSION = 1
THEOREMS = ["baseline", "sup", "wsup", "lp", "lp_linear_r", "lp_via_wsup", "adp_general", "adp_specific"]
COLUMNS = (
    ["schema_version", "trial", "seed", "m", "n", "k", "gamma", "linear_r", "iterations",
     "actual_sup", "actual_wsup", "actual_lp"]
    + [f"total_{t}" for t in THEOREMS]
    + [f"holds_{t}" for t in THEOREMS]
    + ["C", "B_sup", "B_wsup", "B_lp", "fixed_point_gap", "violations"]
)
PROFILE_COLUMNS = ["schema_version", "seed", "gamma", "eps2_sup"]


@dataclass
class ExperimentConfig:
    seed: int = 0
    trials: int = 1
    m: Tuple[int, int] = (2, 30)
    n: Tuple[int, int] = (1, 10)
    k: Tuple[int, int] = (1, 4)
    gamma: Tuple[float, float] = (0.1, 0.95)
    p: float = 1
    linear_fraction: float = 0.25
    mode: str = "random"
    gammas: List[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9, 0.95])

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        for name in ("m", "n", "k"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValidationError(f"range {name} must satisfy 1 <= lo <= hi, got {(lo, hi)}")
            setattr(self, name, (int(lo), int(hi)))
        lo, hi = self.gamma
        if not 0 <= lo <= hi < 1:
            raise ValidationError(f"gamma range must lie in [0, 1), got {(lo, hi)}")
        self.gamma = (float(lo), float(hi))
        if self.mode not in ("random", "gamma_profile"):
            raise ValidationError(f"unknown sweep mode {self.mode!r}")
        if any(not 0 <= g < 1 for g in self.gammas):
            raise ValidationError("profile gammas must lie in [0, 1)")
        if not 0 <= self.linear_fraction <= 1:
            raise ValidationError("linear_fraction must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        for key in ("m", "n", "k", "gamma"):
            if key in known:
                known[key] = tuple(known[key])
        return cls(**known)

    def to_dict(self):
        return asdict(self)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


@dataclass
class Instance:
    mdp: Mdp
    model: object
    config: AuditConfig
    linear_r: bool


def make_instance(cfg: ExperimentConfig, trial: int) -> Instance:
    """Random MDP, normalised model and audit measures for one trial."""
    rng = trial_rng(cfg.seed, trial)
    m = int(rng.integers(cfg.m[0], cfg.m[1] + 1))
    n = int(rng.integers(cfg.n[0], min(cfg.n[1], m) + 1)) if cfg.n[0] <= m else m
    k = int(rng.integers(cfg.k[0], cfg.k[1] + 1))
    gamma = float(rng.uniform(*cfg.gamma))
    mdp = random_mdp(rng, m, k, gamma)
    linear = bool(rng.random() < cfg.linear_fraction)
    model = random_normalized(mdp, n, rng, linear=linear)
    mu = rng.dirichlet(np.ones(m))
    nu = lyapunov_weight_heuristic(mdp.P, gamma, base=rng.uniform(0.5, 2.0, size=m))
    delta = rng.uniform(0.0, 0.3)
    P_tilde = (1 - delta) * mdp.P + delta * rng.dirichlet(np.ones(m), size=(k, m))
    P_tilde /= P_tilde.sum(axis=2, keepdims=True)
    config = AuditConfig(mu=mu, p=cfg.p, nu=nu, eta=np.ones(n), P_tilde=P_tilde)
    return Instance(mdp, model, config, linear)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def run_trial(cfg: ExperimentConfig, trial: int) -> dict:
    inst = make_instance(cfg, trial)
    report = audit(inst.mdp, inst.model, inst.config)
    row = {
        "schema_version": SCHEMA_VERSION,
        "trial": trial,
        "seed": cfg.seed,
        "m": inst.mdp.num_states,
        "n": inst.model.n,
        "k": inst.mdp.num_actions,
        "gamma": inst.mdp.gamma,
        "linear_r": inst.linear_r,
        "iterations": report.plan.iterations,
        "actual_sup": report.errors["sup"],
        "actual_wsup": report.errors["wsup"],
        "actual_lp": report.errors["lp"],
        "C": report.concentrability,
        "B_sup": report.B["sup"],
        "B_wsup": report.B["wsup"],
        "B_lp": report.B["lp"],
        "fixed_point_gap": report.fixed_point_gap,
        "violations": len(report.violations),
    }
    for t in THEOREMS:
        rec = report.records[t]
        row[f"total_{t}"] = rec.total if rec.applicable else None
        row[f"holds_{t}"] = rec.holds if rec.applicable else None
    return row


def _run_trial_args(args):
    return run_trial(*args)


def gamma_profile(cfg: ExperimentConfig) -> List[dict]:
    """``eps2`` of the sup-norm bound on frozen ``P``, ``Q``, ``R`` and ``U*`` as gamma varies.

    Trial 0 of the config provides the instance; ``U*`` is computed once
    at the instance's own discount and then held fixed.
    """
    inst = make_instance(cfg, 0)
    result = plan(inst.mdp, inst.model, NormSpec.sup())
    res = mixed_norm(residual(inst.mdp, inst.model, result.U_star), NormSpec.sup())
    return [
        {"schema_version": SCHEMA_VERSION, "seed": cfg.seed, "gamma": g, "eps2_sup": g / (1 - g) * res}
        for g in sorted(cfg.gammas)
    ]


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> List[dict]:
    """Rows in trial order regardless of ``jobs``."""
    if cfg.mode == "gamma_profile":
        return gamma_profile(cfg)
    args = [(cfg, t) for t in range(cfg.trials)]
    if jobs <= 1:
        return [run_trial(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_trial_args, args, chunksize=max(1, len(args) // (4 * jobs))))


def rows_to_csv(rows: List[dict], columns: Optional[List[str]] = None) -> str:
    if columns is None:
        columns = PROFILE_COLUMNS if rows and "eps2_sup" in rows[0] else COLUMNS
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def count_violations(rows: List[dict]) -> int:
    return sum(int(r.get("violations", 0)) for r in rows)


__all__ = [
    "COLUMNS",
    "ExperimentConfig",
    "Instance",
    "SCHEMA_VERSION",
    "THEOREMS",
    "count_violations",
    "gamma_profile",
    "make_instance",
    "rows_to_csv",
    "run_sweep",
    "run_trial",
    "trial_rng",
]
