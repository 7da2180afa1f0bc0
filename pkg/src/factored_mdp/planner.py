"""Planning with a factored linear model.

The compressed fixed point ``u* = M' T_{piA Q} u*`` is found by iteration
in the compressed space. ``U* = M T_Q u*`` lifts it back to the state space
and ``pi_hat = G T_Q u*`` is the greedy policy after one Bellman lookahead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DivergedError, MaxIterationsError, NotContractiveError, UnsupportedNormError, ValidationError
from .mdp import Mdp, greedy, max_select, policy_select
from .model import FactoredLinearModel, contraction_modulus, t_piaq, t_q
from .norms import NormSpec, NormedOperator, op_norm, vec_norm

DIVERGENCE_GUARD = 1e12
KAPPA_FLOOR = 1e-3
POLISH_MAX = 10_000


@dataclass
class PlanResult:
    u_star: np.ndarray
    U_star: np.ndarray
    pi_hat: np.ndarray
    iterations: int
    residual: float
    modulus: float
    history: List[float] = field(default_factory=list, repr=False)
    # ||u* - R U*||_sup for join-homomorphism R, else None
    fixed_point_gap: Optional[float] = None

    def to_dict(self):
        return {
            "u_star": self.u_star.tolist(),
            "U_star": self.U_star.tolist(),
            "pi_hat": [int(a) for a in self.pi_hat],
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "modulus": float(self.modulus),
            "fixed_point_gap": self.fixed_point_gap,
        }


def compressed_step(model: FactoredLinearModel, u):
    """One application of ``M' T_{piA Q}``."""
    return max_select(t_piaq(model, u))


def compressed_value_iteration(model: FactoredLinearModel, w_spec: Optional[NormSpec] = None, tol: float = 1e-10,
                               max_iter: int = 10**6, force: bool = False, u0=None):
    """Iterate ``u <- M' T_{piA Q} u`` from ``u0`` (default zero).

    Returns ``(u_star, iterations, residual, modulus, history)`` where
    ``residual`` bounds ``||u - u*||`` in ``w_spec`` (sup norm by default)
    and ``history`` lists the step sizes. Raises :class:`NotContractiveError`
    when the modulus is at least 1 unless ``force`` is set.

    Once the modulus-aware stopping rule fires the loop keeps going while
    the step still shrinks, so the returned iterate is usually an exact
    floating-point fixed point.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    w_spec = w_spec or NormSpec.sup()
    kappa = contraction_modulus(model, w_spec)
    if kappa >= 1.0 and not force:
        raise NotContractiveError(kappa)
    contractive = kappa < 1.0
    threshold = tol * (1.0 - kappa) / max(kappa, KAPPA_FLOOR) if contractive else tol

    u = np.zeros(model.n) if u0 is None else np.array(u0, dtype=float)
    if u.shape != (model.n,):
        raise ValidationError(f"u0 must have length {model.n}")
    history = []
    step = np.inf
    it = 0
    while it < max_iter:
        u_next = compressed_step(model, u)
        it += 1
        step = vec_norm(u_next - u, w_spec)
        history.append(step)
        u = u_next
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > DIVERGENCE_GUARD:
            raise DivergedError(f"iterate exceeded {DIVERGENCE_GUARD:g} after {it} steps")
        if step <= threshold:
            break
    else:
        raise MaxIterationsError(max_iter, step)

    # polish towards an exact float fixed point
    for _ in range(POLISH_MAX):
        if step == 0.0:
            break
        u_next = compressed_step(model, u)
        new_step = vec_norm(u_next - u, w_spec)
        if new_step >= step:
            break
        u, step = u_next, new_step
        it += 1
        history.append(step)

    residual = kappa / (1.0 - kappa) * step if contractive else step
    return u, it, residual, kappa, history


def lift(model: FactoredLinearModel, u_star):
    """``U* = M T_Q u*``."""
    return max_select(t_q(model, u_star))


def extract_policy(model: FactoredLinearModel, u_star):
    """``pi_hat = G T_Q u*`` with ties to the lowest action index."""
    return greedy(t_q(model, u_star))


def compressed_policy(model: FactoredLinearModel, u_star):
    """``G' T_{piA Q} u*``: the greedy choice in the compressed space."""
    return greedy(t_piaq(model, u_star))


def qr_return(model: FactoredLinearModel, V):
    """``T_{QR} V = r + gamma Q R V``."""
    return model.r + model.gamma * (model.Q @ model.R.apply(V))


def plan(mdp: Mdp, model: FactoredLinearModel, w_spec: Optional[NormSpec] = None, tol: float = 1e-10,
         max_iter: int = 10**6, force: bool = False, u0=None) -> PlanResult:
    if not model.matches(mdp):
        raise ValidationError("model does not share shape, rewards and discount with the MDP")
    u, it, residual, kappa, history = compressed_value_iteration(model, w_spec, tol, max_iter, force, u0)
    T = t_q(model, u)
    U = max_select(T)
    pi = greedy(T)
    gap = None
    if model.R.is_join_hom:
        gap = float(np.max(np.abs(u - model.R.apply(U)))) if model.n else 0.0
    return PlanResult(u, U, pi, it, residual, kappa, history, gap)


def fixed_point_checks(model: FactoredLinearModel, result: PlanResult):
    """Sup-norm gaps of the fixed-point identities for the planned solution.

    ``u_vs_RU``: ``||u* - R U*||``; ``U_vs_MTQR``: ``||U* - M T_{QR} U*||``;
    ``U_vs_MpiTQR``: ``||U* - M^{pi_hat} T_{QR} U*||``. All are zero up to
    rounding when ``R`` is a join-homomorphism.
    """
    U = result.U_star
    T = qr_return(model, U)
    return {
        "u_vs_RU": float(np.max(np.abs(result.u_star - model.R.apply(U)))),
        "U_vs_MTQR": float(np.max(np.abs(U - max_select(T)))),
        "U_vs_MpiTQR": float(np.max(np.abs(U - policy_select(T, result.pi_hat)))),
    }


def _safe_op_norm(op):
    try:
        return op_norm(op)
    except UnsupportedNormError:
        return None


def diagnostics(model: FactoredLinearModel, v_spec: Optional[NormSpec] = None, w_spec: Optional[NormSpec] = None,
                max_power: int = 8):
    """Lipschitz estimates for powers of ``M T_{QR}``.

    Since ``(M T_{QR})^{j+1} = M T_Q (M' T_{piA Q})^j R`` for a
    join-homomorphism ``R``, ``Lip((M T_{QR})^{j+1}) <= B' kappa^j Lip(R)``
    with ``B' = gamma ||Q||`` and ``kappa`` the compressed modulus. Entries
    of ``power_bounds`` are indexed by the power ``1 .. max_power``. Values
    are ``None`` when a norm pairing has no closed form.
    """
    v_spec = v_spec or NormSpec.sup()
    w_spec = w_spec or NormSpec.sup()
    q_norm = _safe_op_norm(NormedOperator(model.Q, w_spec, v_spec))
    lip_R = _safe_op_norm(NormedOperator(model.R.matrix, v_spec, w_spec))
    kappa = _safe_op_norm(NormedOperator(model.piA_Q(), w_spec, w_spec))
    out = {"B_prime": None, "lip_R": lip_R, "kappa": None, "power_bounds": None, "first_contracting_power": None}
    if kappa is not None:
        kappa = model.gamma * kappa
        out["kappa"] = kappa
    if q_norm is None or lip_R is None or kappa is None:
        return out
    B_prime = model.gamma * q_norm
    out["B_prime"] = B_prime
    bounds = []
    for j in range(max_power):
        if B_prime == 0.0:
            bounds.append(0.0)
        else:
            bounds.append(B_prime * kappa**j * lip_R)
    out["power_bounds"] = bounds
    for power, b in enumerate(bounds, start=1):
        if b < 1.0:
            out["first_contracting_power"] = power
            break
    return out


def lp_point_evaluator_blowup(model: FactoredLinearModel, mu):
    """Whether ``mu`` puts no mass on the anchor states of a point-evaluator ``R``.

    In that case ``Lip(R) = inf`` between ``L^p`` norms, and so is the
    Lipschitz constant of every power of ``M T_{QR}`` whose compressed part
    is not identically zero.
    """
    if not model.R.is_join_hom:
        raise ValidationError("needs a join-homomorphism right factor")
    mu = np.asarray(mu, dtype=float)
    anchors = model.R.J[model.R.a > 0]
    return bool(anchors.size and np.all(mu[anchors] == 0))


__all__ = [
    "PlanResult",
    "compressed_policy",
    "compressed_step",
    "compressed_value_iteration",
    "diagnostics",
    "extract_policy",
    "fixed_point_checks",
    "lift",
    "lp_point_evaluator_blowup",
    "plan",
    "qr_return",
]
