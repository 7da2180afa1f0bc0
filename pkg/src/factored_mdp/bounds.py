"""Policy-error bounds for factored linear models and an auditor.

Every bound compares ``V*`` and ``V^{pi_hat}`` with quantities computable
from the model. Residuals are taken through ``D^a V = P^a V - Q^a R V``
and measured in mixed max-norms over actions.

Each bound returns a :class:`TheoremRecord` holding its ``eps1``/``eps2``
terms, the total, the exactly computed policy error in the matching norm
and whether the bound held. Bounds whose assumptions fail raise
:class:`AssumptionViolated`; :func:`audit` records those as not applicable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import AssumptionViolated, ValidationError
from .mdp import Mdp, bellman_return, greedy, max_select, optimal_values, policy_evaluation, policy_kernel, policy_select
from .model import FactoredLinearModel, t_q
from .norms import INF, NormSpec, NormedOperator, lyapunov_beta, lyapunov_weight_heuristic, mixed_norm, op_norm, vec_norm
from .planner import PlanResult, compressed_policy, plan

VIOLATION_TOL = 1e-9
ASSUMPTION_SLACK = 1e-12


@dataclass
class TheoremRecord:
    name: str
    eps1_Vstar: Optional[float] = None
    eps1_Vpihat: Optional[float] = None
    eps2: Optional[float] = None
    total: Optional[float] = None
    actual: Optional[float] = None
    holds: Optional[bool] = None
    applicable: bool = True
    note: str = ""
    extras: Dict[str, float] = field(default_factory=dict)

    def check(self, tol=VIOLATION_TOL):
        self.holds = bool(self.total + tol >= self.actual)
        return self

    @property
    def violated(self):
        return self.applicable and self.holds is False

    def to_dict(self):
        d = {
            "name": self.name,
            "applicable": self.applicable,
            "eps1_Vstar": self.eps1_Vstar,
            "eps1_Vpihat": self.eps1_Vpihat,
            "eps2": self.eps2,
            "total": self.total,
            "actual": self.actual,
            "holds": self.holds,
            "note": self.note,
        }
        if self.extras:
            d["extras"] = dict(self.extras)
        return d


@dataclass
class Solved:
    """Exact quantities shared by all bounds for one (mdp, model, plan)."""

    V_star: np.ndarray
    pi_star: np.ndarray
    V_pihat: np.ndarray
    D_star: np.ndarray
    D_pihat: np.ndarray
    D_U: np.ndarray
    err: np.ndarray  # V* - V^{pi_hat}


def residual(mdp: Mdp, model: FactoredLinearModel, V):
    """``(P - QR) V`` per action, shape ``(k, m)``."""
    return mdp.P @ V - model.Q @ model.R.apply(V)


def solve(mdp: Mdp, model: FactoredLinearModel, result: PlanResult, tol: float = 1e-10) -> Solved:
    V_star, pi_star = optimal_values(mdp, tol=tol)
    V_pihat = policy_evaluation(mdp, result.pi_hat)
    return Solved(
        V_star,
        pi_star,
        V_pihat,
        residual(mdp, model, V_star),
        residual(mdp, model, V_pihat),
        residual(mdp, model, result.U_star),
        V_star - V_pihat,
    )


def _ctx(mdp, model, result, ctx):
    return ctx if ctx is not None else solve(mdp, model, result)


def _require_join_hom(model, name):
    if not model.R.is_join_hom:
        raise AssumptionViolated("R is a join-homomorphism", f"{name} needs (R v)_i = a_i v[J_i]")


def _finite(x, what):
    if not math.isfinite(x):
        raise AssumptionViolated(f"{what} is finite", f"got {x}")
    return x


def _scaled(c, x):
    # c * x with the convention inf * 0 = inf (the bound is vacuous)
    if math.isinf(c):
        return INF
    return c * x


def baseline_bound(mdp: Mdp, P_tilde, V_tilde=None, require_stochastic: bool = True, tol: float = 1e-10):
    """``2 gamma / (1 - gamma) ||(P - P_tilde) V_tilde||_inf``.

    ``V_tilde`` defaults to the optimal value of the MDP with kernel
    ``P_tilde``. Returns ``(bound, pi_tilde)`` with ``pi_tilde = G T_{P_tilde} V_tilde``.
    """
    P_tilde = np.asarray(P_tilde, dtype=float)
    if P_tilde.shape != mdp.P.shape:
        raise ValidationError(f"P_tilde must have shape {mdp.P.shape}")
    if require_stochastic:
        approx = Mdp(P_tilde, mdp.r, mdp.gamma)
        if V_tilde is None:
            V_tilde, _ = optimal_values(approx, tol=tol)
    elif V_tilde is None:
        raise ValidationError("V_tilde is required for a non-stochastic P_tilde")
    V_tilde = np.asarray(V_tilde, dtype=float)
    g = mdp.gamma
    bound = 2.0 * g / (1.0 - g) * mixed_norm((mdp.P - P_tilde) @ V_tilde, NormSpec.sup())
    pi_tilde = greedy(mdp.r + g * (P_tilde @ V_tilde))
    return bound, pi_tilde


def baseline_record(mdp: Mdp, P_tilde, V_tilde=None, require_stochastic=True, V_star=None) -> TheoremRecord:
    bound, pi_tilde = baseline_bound(mdp, P_tilde, V_tilde, require_stochastic)
    if V_star is None:
        V_star, _ = optimal_values(mdp)
    actual = vec_norm(V_star - policy_evaluation(mdp, pi_tilde), NormSpec.sup())
    rec = TheoremRecord("baseline", total=bound, eps2=bound / 2.0, actual=actual,
                        note="policy greedy for the approximate kernel; sup norm")
    return rec.check()


def q_norm(model: FactoredLinearModel, w_spec: NormSpec, v_spec: NormSpec) -> float:
    """``B = ||Q||`` from ``w_spec`` to the mixed norm built on ``v_spec``.

    Exact for sup-type outputs; an upper bound for ``L^p`` outputs with
    ``p < inf`` (exact when ``Q >= 0``).
    """
    return op_norm(NormedOperator(model.Q, w_spec, v_spec))


def piaq_norm(model: FactoredLinearModel, w_spec: NormSpec) -> float:
    return op_norm(NormedOperator(model.piA_Q(), w_spec, w_spec))


def _check_bounded_norm(model, w_spec, name):
    s = piaq_norm(model, w_spec)
    if s > 1.0 + ASSUMPTION_SLACK:
        raise AssumptionViolated("||piA Q|| <= 1", f"{name}: got {s!r} in {w_spec!r}")
    return s


def bound_sup(mdp: Mdp, model: FactoredLinearModel, result: PlanResult, ctx: Optional[Solved] = None) -> TheoremRecord:
    """Supremum-norm bound: ``eps(V*) + eps(V^pi_hat)`` with ``eps = min(eps1, eps2)``."""
    _require_join_hom(model, "sup-norm bound")
    sup = NormSpec.sup()
    s = _check_bounded_norm(model, sup, "sup-norm bound")
    B = _finite(q_norm(model, sup, sup), "B")
    c = _ctx(mdp, model, result, ctx)
    g = mdp.gamma

    def eps1(D):
        return g * mixed_norm(D, sup) + B * g * g / (1.0 - g) * mixed_norm(model.piA_apply(D), sup)

    e_star, e_pi = eps1(c.D_star), eps1(c.D_pihat)
    e2 = g / (1.0 - g) * mixed_norm(c.D_U, sup)
    total = min(e_star, e2) + min(e_pi, e2)
    rec = TheoremRecord("sup", e_star, e_pi, e2, total, vec_norm(c.err, sup),
                        note="B: sup -> mixed sup (exact)", extras={"B": B, "piaq_norm": s})
    return rec.check()


def bound_wsup(mdp: Mdp, model: FactoredLinearModel, result: PlanResult, nu, eta,
               ctx: Optional[Solved] = None) -> TheoremRecord:
    """Weighted-sup bound with Lyapunov weights ``nu`` (states) and ``eta`` (compressed)."""
    _require_join_hom(model, "weighted-sup bound")
    nu = np.asarray(nu, dtype=float)
    eta = np.asarray(eta, dtype=float)
    g = mdp.gamma
    beta_nu = lyapunov_beta(nu, mdp.P, g)
    beta_eta = lyapunov_beta(eta, model.piA_Q(), g)
    if not beta_nu < 1.0:
        raise AssumptionViolated("nu is gamma-Lyapunov for P", f"beta={beta_nu!r}")
    if not beta_eta < 1.0:
        raise AssumptionViolated("eta is gamma-Lyapunov for piA Q", f"beta={beta_eta!r}")
    v_spec, w_spec = NormSpec.wsup(nu), NormSpec.wsup(eta)
    B = _finite(q_norm(model, w_spec, v_spec), "B")
    c = _ctx(mdp, model, result, ctx)

    def eps1(D):
        return g * mixed_norm(D, v_spec) + B * g * g / (1.0 - beta_eta) * mixed_norm(model.piA_apply(D), w_spec)

    e_star, e_pi = eps1(c.D_star), eps1(c.D_pihat)
    e2 = g / (1.0 - beta_nu) * mixed_norm(c.D_U, v_spec)
    total = min(e_star, e2) + min(e_pi, e2)
    rec = TheoremRecord("wsup", e_star, e_pi, e2, total, vec_norm(c.err, v_spec),
                        note="B: wsup(eta) -> mixed wsup(nu) (exact)",
                        extras={"B": B, "beta_nu_P": beta_nu, "beta_eta_piAQ": beta_eta})
    return rec.check()


def concentrability(mdp: Mdp, pi_hat, mu, xi, p, seed: int = 0) -> float:
    """``(1 - gamma) ||(I - gamma P^pi)^{-1}||`` from ``L^p(xi)`` to ``L^p(mu)``."""
    P_pi, _ = policy_kernel(mdp, pi_hat)
    A = np.linalg.inv(np.eye(mdp.num_states) - mdp.gamma * P_pi)
    norm = op_norm(NormedOperator(A, NormSpec.lp(p, xi), NormSpec.lp(p, mu)), seed=seed)
    return (1.0 - mdp.gamma) * norm


def _lp_setup(mdp, model, mu, p, eta, xi, name):
    mu_spec = NormSpec.lp(p, mu)
    xi_spec = NormSpec.lp(p, mu if xi is None else xi)
    eta = np.ones(model.n) if eta is None else np.asarray(eta, dtype=float)
    w_spec = NormSpec.wsup(eta)
    s = _check_bounded_norm(model, w_spec, name)
    B = _finite(q_norm(model, w_spec, mu_spec), "B")
    return mu_spec, xi_spec, w_spec, s, B


def bound_lp(mdp: Mdp, model: FactoredLinearModel, result: PlanResult, mu, p=1, eta=None, xi=None,
             ctx: Optional[Solved] = None, C: Optional[float] = None) -> TheoremRecord:
    """``L^p(mu)`` bound: ``eps1(V*) + min(eps1(V^pi_hat), eps2)``.

    The compressed space carries the weighted sup norm with weights ``eta``
    (default ones); ``xi`` defaults to ``mu``.
    """
    _require_join_hom(model, "L^p bound")
    mu_spec, xi_spec, w_spec, s, B = _lp_setup(mdp, model, mu, p, eta, xi, "L^p bound")
    c = _ctx(mdp, model, result, ctx)
    g = mdp.gamma
    if C is None:
        C = concentrability(mdp, result.pi_hat, mu_spec.mu, xi_spec.mu, mu_spec.p)

    def eps1(D):
        return g * mixed_norm(D, mu_spec) + B * g * g / (1.0 - g) * mixed_norm(model.piA_apply(D), w_spec)

    e_star, e_pi = eps1(c.D_star), eps1(c.D_pihat)
    e2 = _scaled(C, g / (1.0 - g) * mixed_norm(c.D_U, xi_spec))
    total = e_star + min(e_pi, e2)
    rec = TheoremRecord("lp", e_star, e_pi, e2, total, vec_norm(c.err, mu_spec),
                        note="B: wsup(eta) -> mixed L^p(mu), sign-aligned upper bound",
                        extras={"B": B, "C": C, "piaq_norm": s})
    return rec.check()


def bound_lp_linear_r(mdp: Mdp, model: FactoredLinearModel, result: PlanResult, mu, p=1, eta=None, xi=None,
                      ctx: Optional[Solved] = None, C: Optional[float] = None) -> TheoremRecord:
    """``L^p(mu)`` bound for a general linear ``R`` and per-action ``piA``.

    ``eps1(V, N') = gamma ||D V||_{mu,p} + B gamma / (1 - gamma) (||R V - N' piA T_P V||_{inf,eta}
    + gamma ||piA D V||_{inf,eta})`` with ``N' = M'`` at ``V*`` and ``N' = M'^{pi'}``,
    ``pi' = G' T_{piA Q} u*``, at ``V^pi_hat``.

    ``eps2 = C gamma / (1 - gamma) ||P U* - Q u*||_{xi,p}``. The form without
    the leading ``gamma`` is also valid but looser; it is kept in
    ``extras['eps2_without_gamma']``.
    """
    mu_spec, xi_spec, w_spec, s, B = _lp_setup(mdp, model, mu, p, eta, xi, "linear-R L^p bound")
    c = _ctx(mdp, model, result, ctx)
    g = mdp.gamma
    if C is None:
        C = concentrability(mdp, result.pi_hat, mu_spec.mu, xi_spec.mu, mu_spec.p)
    pi_c = compressed_policy(model, result.u_star)

    def eps1(V, D, select):
        lookahead = model.piA_apply(bellman_return(mdp, V))
        gap = vec_norm(model.R.apply(V) - select(lookahead), w_spec)
        inner = gap + g * mixed_norm(model.piA_apply(D), w_spec)
        return g * mixed_norm(D, mu_spec) + B * g / (1.0 - g) * inner, gap

    e_star, gap_star = eps1(c.V_star, c.D_star, max_select)
    e_pi, gap_pi = eps1(c.V_pihat, c.D_pihat, lambda W: policy_select(W, pi_c))
    lifted_gap = mixed_norm(mdp.P @ result.U_star - model.Q @ result.u_star, xi_spec)
    e2 = _scaled(C, g / (1.0 - g) * lifted_gap)
    e2_printed = _scaled(C, 1.0 / (1.0 - g) * lifted_gap)
    total = e_star + min(e_pi, e2)
    rec = TheoremRecord("lp_linear_r", e_star, e_pi, e2, total, vec_norm(c.err, mu_spec),
                        note="B: wsup(eta) -> mixed L^p(mu), sign-aligned upper bound",
                        extras={"B": B, "C": C, "piaq_norm": s, "eps2_without_gamma": e2_printed,
                                "total_without_gamma": e_star + min(e_pi, e2_printed),
                                "select_gap_Vstar": gap_star, "select_gap_Vpihat": gap_pi})
    return rec.check()


def bound_lp_via_wsup(mdp: Mdp, model: FactoredLinearModel, result: PlanResult, mu, p, nu, eta,
                      ctx: Optional[Solved] = None, wsup_record: Optional[TheoremRecord] = None) -> TheoremRecord:
    """``||nu||_{mu,p}`` times the weighted-sup bound, as an ``L^p(mu)`` bound."""
    c = _ctx(mdp, model, result, ctx)
    w = wsup_record or bound_wsup(mdp, model, result, nu, eta, ctx=c)
    mu_spec = NormSpec.lp(p, mu)
    scale = vec_norm(np.asarray(nu, dtype=float), mu_spec)
    rec = TheoremRecord("lp_via_wsup", w.eps1_Vstar, w.eps1_Vpihat, w.eps2, scale * w.total,
                        vec_norm(c.err, mu_spec), note="||nu||_{mu,p} times the weighted-sup total",
                        extras={"nu_norm": scale})
    return rec.check()


def adp_bounds(mdp: Mdp, V_tilde, V_star=None):
    """ADP bounds on the greedy policy derived from ``V_tilde``.

    An action-value ``V_tilde`` (shape ``(k, m)``) gives
    ``2 (1 + gamma) / (1 - gamma) ||V_tilde - T_P V*||`` for ``G V_tilde``;
    a state-value ``V_tilde`` gives ``2 gamma / (1 - gamma) ||V_tilde - V*||``
    for ``G T_P V_tilde``. Returns ``(bound, policy)``.
    """
    if V_star is None:
        V_star, _ = optimal_values(mdp)
    V_tilde = np.asarray(V_tilde, dtype=float)
    g = mdp.gamma
    sup = NormSpec.sup()
    if V_tilde.ndim == 2:
        bound = 2.0 * (1.0 + g) / (1.0 - g) * mixed_norm(V_tilde - bellman_return(mdp, V_star), sup)
        return bound, greedy(V_tilde)
    bound = 2.0 * g / (1.0 - g) * vec_norm(V_tilde - V_star, sup)
    return bound, greedy(bellman_return(mdp, V_tilde))


def adp_records(mdp: Mdp, model: FactoredLinearModel, result: PlanResult, ctx: Optional[Solved] = None):
    """Both ADP bounds applied to the model: ``T_Q u*`` (giving ``pi_hat``) and ``U*``."""
    c = _ctx(mdp, model, result, ctx)
    sup = NormSpec.sup()
    out = []
    for name, V_tilde in (("adp_general", t_q(model, result.u_star)), ("adp_specific", result.U_star)):
        bound, pi = adp_bounds(mdp, V_tilde, c.V_star)
        actual = vec_norm(c.V_star - policy_evaluation(mdp, pi), sup)
        out.append(TheoremRecord(name, total=bound, actual=actual).check())
    return out


@dataclass
class AuditConfig:
    mu: Optional[np.ndarray] = None  # default uniform
    p: float = 1
    xi: Optional[np.ndarray] = None  # default mu
    nu: Optional[np.ndarray] = None  # default Lyapunov heuristic on P
    eta: Optional[np.ndarray] = None  # default ones
    P_tilde: Optional[np.ndarray] = None  # default QR when it is stochastic
    tol: float = 1e-10
    force: bool = False
    violation_tol: float = VIOLATION_TOL


@dataclass
class BoundReport:
    records: Dict[str, TheoremRecord]
    plan: PlanResult
    errors: Dict[str, float]
    error_gaps: Dict[str, float]
    concentrability: float
    B: Dict[str, float]
    betas: Dict[str, float]
    fixed_point_gap: Optional[float]

    @property
    def violations(self):
        return [name for name, r in self.records.items() if r.violated]

    def to_dict(self):
        return {
            "plan": self.plan.to_dict(),
            "errors": self.errors,
            "error_gaps": self.error_gaps,
            "concentrability": self.concentrability,
            "B": self.B,
            "betas": self.betas,
            "fixed_point_gap": self.fixed_point_gap,
            "records": {k: r.to_dict() for k, r in self.records.items()},
            "violations": self.violations,
        }

    def summary(self):
        lines = [
            f"pi_hat = {[int(a) for a in self.plan.pi_hat]}  iterations = {self.plan.iterations}",
            "error gaps: ||V*-U*|| = {V_star_U_star:.6g}  ||V^pi-U*|| = {V_pihat_U_star:.6g}  "
            "||V*-V^pi|| = {V_star_V_pihat:.6g}".format(**self.error_gaps),
        ]
        for name, r in self.records.items():
            if not r.applicable:
                lines.append(f"{name:14s} n/a  ({r.note})")
                continue
            flag = "ok" if r.holds else "VIOLATED"
            lines.append(f"{name:14s} actual {r.actual:.6g} <= bound {r.total:.6g}  {flag}")
        return "\n".join(lines)


def _not_applicable(name, exc):
    return TheoremRecord(name, applicable=False, note=str(exc))


def _run(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except AssumptionViolated as exc:
        return _not_applicable(name, exc)


def _model_kernel(model: FactoredLinearModel):
    """``QR`` if it is a stochastic kernel, else ``None``."""
    QR = model.QR()
    if np.any(QR < 0) or np.any(np.abs(QR.sum(axis=2) - 1.0) > 1e-12):
        return None
    return QR / QR.sum(axis=2, keepdims=True)


def audit(mdp: Mdp, model: FactoredLinearModel, config: Optional[AuditConfig] = None) -> BoundReport:
    """Plan, solve exactly and evaluate every applicable bound."""
    cfg = config or AuditConfig()
    m, n = mdp.num_states, model.n
    mu = np.full(m, 1.0 / m) if cfg.mu is None else np.asarray(cfg.mu, dtype=float)
    xi = mu if cfg.xi is None else np.asarray(cfg.xi, dtype=float)
    eta = np.ones(n) if cfg.eta is None else np.asarray(cfg.eta, dtype=float)
    nu = lyapunov_weight_heuristic(mdp.P, mdp.gamma) if cfg.nu is None else np.asarray(cfg.nu, dtype=float)

    result = plan(mdp, model, NormSpec.wsup(eta), tol=cfg.tol, force=cfg.force)
    ctx = solve(mdp, model, result, tol=cfg.tol)
    sup = NormSpec.sup()
    mu_spec = NormSpec.lp(cfg.p, mu)
    C = concentrability(mdp, result.pi_hat, mu, xi, mu_spec.p)

    records: Dict[str, TheoremRecord] = {}
    P_tilde = cfg.P_tilde if cfg.P_tilde is not None else _model_kernel(model)
    if P_tilde is None:
        records["baseline"] = TheoremRecord("baseline", applicable=False, note="QR is not a stochastic kernel")
    else:
        records["baseline"] = baseline_record(mdp, P_tilde, V_star=ctx.V_star)
    records["sup"] = _run("sup", bound_sup, mdp, model, result, ctx=ctx)
    records["wsup"] = _run("wsup", bound_wsup, mdp, model, result, nu, eta, ctx=ctx)
    records["lp"] = _run("lp", bound_lp, mdp, model, result, mu, cfg.p, eta, xi, ctx=ctx, C=C)
    records["lp_linear_r"] = _run("lp_linear_r", bound_lp_linear_r, mdp, model, result, mu, cfg.p, eta, xi,
                                  ctx=ctx, C=C)
    if records["wsup"].applicable:
        records["lp_via_wsup"] = bound_lp_via_wsup(mdp, model, result, mu, cfg.p, nu, eta, ctx=ctx,
                                                   wsup_record=records["wsup"])
    else:
        records["lp_via_wsup"] = TheoremRecord("lp_via_wsup", applicable=False, note=records["wsup"].note)
    for rec in adp_records(mdp, model, result, ctx=ctx):
        records[rec.name] = rec
    for rec in records.values():
        if rec.applicable:
            rec.check(cfg.violation_tol)

    U = result.U_star
    gaps = {
        "V_star_U_star": vec_norm(ctx.V_star - U, sup),
        "V_pihat_U_star": vec_norm(ctx.V_pihat - U, sup),
        "V_star_V_pihat": vec_norm(ctx.err, sup),
    }
    errors = {
        "sup": gaps["V_star_V_pihat"],
        "wsup": vec_norm(ctx.err, NormSpec.wsup(nu)),
        "lp": vec_norm(ctx.err, mu_spec),
    }
    B = {}
    for key, (w_spec, v_spec) in {
        "sup": (sup, sup),
        "wsup": (NormSpec.wsup(eta), NormSpec.wsup(nu)),
        "lp": (NormSpec.wsup(eta), mu_spec),
    }.items():
        B[key] = q_norm(model, w_spec, v_spec)
    betas = {
        "beta_nu_P": lyapunov_beta(nu, mdp.P, mdp.gamma),
        "beta_eta_piAQ": lyapunov_beta(eta, model.piA_Q(), mdp.gamma),
    }
    return BoundReport(records, result, errors, gaps, C, B, betas, result.fixed_point_gap)


__all__ = [
    "AuditConfig",
    "BoundReport",
    "Solved",
    "TheoremRecord",
    "adp_bounds",
    "adp_records",
    "audit",
    "baseline_bound",
    "baseline_record",
    "bound_lp",
    "bound_lp_linear_r",
    "bound_lp_via_wsup",
    "bound_sup",
    "bound_wsup",
    "concentrability",
    "piaq_norm",
    "q_norm",
    "residual",
    "solve",
]
