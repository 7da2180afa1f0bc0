"""Small hand-built MDPs with known closed-form behaviour.

* :func:`tightness_mdp`: the supremum-norm bound is attained up to ``1 - eps``.
* :func:`harsh_mdp`: large sup-norm policy error but zero error under the
  stationary measure of the optimal policy.
* :func:`error_gaps_mdp`: ``||V* - U*||`` says little about the policy error.

Every generator returns an :class:`ExampleInstance` whose ``expected`` map
holds the closed-form quantities; :func:`verify_example` recomputes them.
States are 0-indexed (``x1`` is state 0) and so are actions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from .bounds import bound_sup, residual, solve
from .errors import ValidationError
from .mdp import Mdp, policy_kernel
from .model import FactoredLinearModel, contraction_modulus, point_evaluator_right
from .norms import NormSpec, mixed_norm, vec_norm
from .planner import plan

EXAMPLE_PLAN_TOL = 1e-12


@dataclass
class ExampleInstance:
    name: str
    params: Dict[str, float]
    mdp: Mdp
    model: FactoredLinearModel
    expected: Dict[str, Any]
    notes: Dict[str, str] = field(default_factory=dict)


@dataclass
class Check:
    name: str
    expected: Any
    actual: Any
    passed: bool


@dataclass
class Verification:
    instance: str
    checks: List[Check]

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        def conv(x):
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, (np.floating, np.integer, np.bool_)):
                return x.item()
            return x

        return {
            "instance": self.instance,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "expected": conv(c.expected), "actual": conv(c.actual), "passed": bool(c.passed)}
                for c in self.checks
            ],
        }


def _check_unit(name, x, lo_open=True, hi_open=True):
    lo_ok = x > 0 if lo_open else x >= 0
    hi_ok = x < 1 if hi_open else x <= 1
    if not (lo_ok and hi_ok):
        raise ValidationError(f"{name} must lie in (0, 1), got {x!r}")


# fork at x1 (state 0): a1 -> x2, a2 -> x3; x2 and x3 absorbing
_FORK_P = np.array([
    [[0, 1, 0], [0, 1, 0], [0, 0, 1]],
    [[0, 0, 1], [0, 1, 0], [0, 0, 1]],
], dtype=float)


def tightness_mdp(gamma: float, tau: float, eps: float) -> ExampleInstance:
    """Fork MDP whose model is nearsighted at the fork state.

    The sup-norm bound equals ``tau`` while the policy error is ``(1 - eps) tau``.
    """
    _check_unit("gamma", gamma)
    if not tau >= 0:
        raise ValidationError(f"tau must be nonnegative, got {tau!r}")
    if not 0 < eps < 1:
        raise ValidationError(f"eps must lie in (0, 1) (eps = 0 makes the greedy choice a tie), got {eps!r}")
    g, t = float(gamma), float(tau)
    Q = np.array([
        [[-1, 0], [0, 1], [1, 0]],
        [[0, -1], [0, 1], [1, 0]],
    ], dtype=float)
    side = t * (1 - g * g) / (4 * g)
    fork = t / 4 * (2 * eps + g - 1)
    r = np.array([[-fork, side, -side], [fork, side, -side]])
    mdp = Mdp(_FORK_P, r, g)
    model = FactoredLinearModel.for_mdp(mdp, Q, point_evaluator_right([1, 2], 3))
    V_star = t / 4 * np.array([2 * (1 - eps), (1 + g) / g, -(1 + g) / g])
    U_star = t / 4 * np.array([2 * eps, (1 - g) / g, -(1 - g) / g])
    expected = {
        "V_star": V_star,
        "U_star": U_star,
        "u_star": U_star[1:],
        "sup_error": (1 - eps) * t,
        "twice_eps2": t,
        # the gap at the fork is |t/2 - t eps|; the side states push the sup to t/2
        "gap_V_star_U_star_x1": abs(t / 2 - t * eps),
        "gap_V_star_U_star": t / 2,
        "gap_V_pihat_U_star": t / 2,
        "side_reward": t * (1 - g * g) / (4 * g),
    }
    if t > 0:
        expected["pi_hat_x1"] = 1
    return ExampleInstance("tightness", {"gamma": g, "tau": t, "eps": float(eps)}, mdp, model, expected)


def harsh_mdp(gamma: float, tau: float) -> ExampleInstance:
    """Tightness MDP with ``eps = 1/2`` plus an absorbing initial state ``x4``.

    At ``x4`` action 0 stays (reward ``2 (1 - gamma) tau'``, ``tau' = tau / 2``)
    and action 1 jumps to the fork. The model is exact for the stay action,
    so the greedy policy stays and the measure on ``x4`` sees no error, while
    the fork state still costs ``tau / 2`` in sup norm.
    """
    _check_unit("gamma", gamma)
    if not tau > 0:
        raise ValidationError(f"tau must be positive, got {tau!r}")
    g, t = float(gamma), float(tau)
    tp = t / 2
    base = tightness_mdp(g, t, 0.5)
    P = np.zeros((2, 4, 4))
    P[:, :3, :3] = base.mdp.P
    P[0, 3, 3] = 1.0
    P[1, 3, 0] = 1.0
    r = np.zeros((2, 4))
    r[:, :3] = base.mdp.r
    r[0, 3] = 2 * (1 - g) * tp
    Q = np.zeros((2, 4, 3))
    Q[:, :3, :2] = base.model.Q
    # the compressed coordinates are (x2, x3, x4)
    Q[:, 3, :] = P[:, 3, 1:]
    mdp = Mdp(P, r, g)
    model = FactoredLinearModel.for_mdp(mdp, Q, point_evaluator_right([1, 2, 3], 4))
    delta4 = np.array([0.0, 0.0, 0.0, 1.0])
    expected = {
        "sup_error": t / 2,
        "V_star_x4": 2 * tp,
        "pi_hat_x4": 0,
        "pi_star_x4": 0,
        "pi_hat_x1": 1,
        "lp_error_mu": 0.0,
        "lp_error_xi": 0.0,
        "mu": delta4,
        "xi": delta4,
    }
    notes = {"fork_block": "tightness block built with tau (not tau') so the sup-norm error is tau/2"}
    return ExampleInstance("harsh", {"gamma": g, "tau": t}, mdp, model, expected, notes)


def error_gaps_mdp(gamma: float, tau1: float, tau2: float) -> ExampleInstance:
    """Fork MDP with a one-dimensional compressed space.

    ``||V* - U*|| = tau1`` and ``||V^pi_hat - U*|| = tau2`` while the policy
    error is ``tau1 + tau2``.
    """
    _check_unit("gamma", gamma)
    if not (tau1 >= 0 and tau2 >= 0):
        raise ValidationError(f"tau1 and tau2 must be nonnegative, got {tau1!r}, {tau2!r}")
    g, t1, t2 = float(gamma), float(tau1), float(tau2)
    tmax = max(t1, t2)
    s = (1 - g) / g
    r = np.array([
        [t1, s * (t1 + tmax), -s * t2],
        [t1 + tmax, s * (t1 + tmax), -s * t2],
    ])
    q3 = -t2 / (t1 + tmax + (1.0 if tmax == 0 else 0.0))
    Q = np.array([[[0.0], [1.0], [q3]]] * 2)
    mdp = Mdp(_FORK_P, r, g)
    model = FactoredLinearModel.for_mdp(mdp, Q, point_evaluator_right([1], 3))
    expected = {
        "V_star": np.array([2 * t1 + tmax, (t1 + tmax) / g, -t2 / g]),
        "gap_V_star_U_star": t1,
        "gap_V_pihat_U_star": t2,
        "sup_error": t1 + t2,
        "reward_bound": 2 * tmax / g,
    }
    if tmax > 0:
        expected["pi_hat_x1"] = 1
    return ExampleInstance("error_gaps", {"gamma": g, "tau1": t1, "tau2": t2}, mdp, model, expected)


EXAMPLES = {
    "tightness": tightness_mdp,
    "harsh": harsh_mdp,
    "errorgaps": error_gaps_mdp,
    "error_gaps": error_gaps_mdp,
}


def _close(name, expected, actual, tol):
    expected_arr = np.asarray(expected, dtype=float)
    actual_arr = np.asarray(actual, dtype=float)
    ok = expected_arr.shape == actual_arr.shape and bool(np.all(np.abs(expected_arr - actual_arr) <= tol))
    return Check(name, expected, actual, ok)


def _equal(name, expected, actual):
    return Check(name, expected, actual, bool(expected == actual))


def _stationary(mdp, pi, measure, tol):
    P_pi, _ = policy_kernel(mdp, pi)
    return bool(np.max(np.abs(measure @ P_pi - measure)) <= tol)


def verify_example(instance: ExampleInstance, tol: float = 1e-9) -> Verification:
    """Recompute every closed-form quantity of ``instance``; one check per claim."""
    mdp, model, exp = instance.mdp, instance.model, instance.expected
    result = plan(mdp, model, tol=EXAMPLE_PLAN_TOL)
    ctx = solve(mdp, model, result, tol=EXAMPLE_PLAN_TOL)
    sup = NormSpec.sup()
    g = mdp.gamma
    checks = [
        Check("modulus_le_gamma", g, result.modulus, result.modulus <= g + 1e-12),
        Check("sup_modulus_le_gamma", g, contraction_modulus(model, sup), contraction_modulus(model, sup) <= g + 1e-12),
    ]
    U = result.U_star
    sup_error = vec_norm(ctx.err, sup)
    checks.append(_close("sup_error", exp["sup_error"], sup_error, tol))
    if "V_star" in exp:
        checks.append(_close("V_star", exp["V_star"], ctx.V_star, tol))
    if "U_star" in exp:
        checks.append(_close("U_star", exp["U_star"], U, tol))
    if "u_star" in exp:
        checks.append(_close("u_star", exp["u_star"], result.u_star, tol))
    if "pi_hat_x1" in exp:
        checks.append(_equal("pi_hat_x1", exp["pi_hat_x1"], int(result.pi_hat[0])))
    if "gap_V_star_U_star" in exp:
        checks.append(_close("gap_V_star_U_star", exp["gap_V_star_U_star"], vec_norm(ctx.V_star - U, sup), tol))
    if "gap_V_star_U_star_x1" in exp:
        checks.append(_close("gap_V_star_U_star_x1", exp["gap_V_star_U_star_x1"],
                             abs(ctx.V_star[0] - U[0]), tol))
    if "gap_V_pihat_U_star" in exp:
        checks.append(_close("gap_V_pihat_U_star", exp["gap_V_pihat_U_star"], vec_norm(ctx.V_pihat - U, sup), tol))
    if "twice_eps2" in exp:
        value = 2 * g / (1 - g) * mixed_norm(residual(mdp, model, U), sup)
        checks.append(_close("twice_eps2", exp["twice_eps2"], value, tol))
        rec = bound_sup(mdp, model, result, ctx=ctx)
        checks.append(Check("sup_bound_holds", True, rec.holds, bool(rec.holds)))
        checks.append(Check("sup_bound_le_tau", exp["twice_eps2"], rec.total, rec.total <= exp["twice_eps2"] + tol))
    if "side_reward" in exp:
        checks.append(_close("side_reward", exp["side_reward"], mdp.r[0, 1], tol))
    if "reward_bound" in exp:
        r_max = float(np.max(np.abs(mdp.r)))
        checks.append(Check("reward_bound", exp["reward_bound"], r_max, r_max <= exp["reward_bound"] + tol))
    if instance.name == "harsh":
        checks.append(_close("V_star_x4", exp["V_star_x4"], ctx.V_star[3], tol))
        checks.append(_equal("pi_hat_x4", exp["pi_hat_x4"], int(result.pi_hat[3])))
        checks.append(_equal("pi_star_x4", exp["pi_star_x4"], int(ctx.pi_star[3])))
        mu, xi = exp["mu"], exp["xi"]
        checks.append(Check("mu_stationary_pi_star", True, _stationary(mdp, ctx.pi_star, mu, tol),
                            _stationary(mdp, ctx.pi_star, mu, tol)))
        checks.append(Check("xi_stationary_pi_hat", True, _stationary(mdp, result.pi_hat, xi, tol),
                            _stationary(mdp, result.pi_hat, xi, tol)))
        checks.append(_close("lp_error_mu", exp["lp_error_mu"], vec_norm(ctx.err, NormSpec.lp(1, mu)), tol))
        checks.append(_close("lp_error_xi", exp["lp_error_xi"], vec_norm(ctx.err, NormSpec.lp(1, xi)), tol))
    return Verification(instance.name, checks)


__all__ = [
    "EXAMPLES",
    "ExampleInstance",
    "Verification",
    "error_gaps_mdp",
    "harsh_mdp",
    "tightness_mdp",
    "verify_example",
]
