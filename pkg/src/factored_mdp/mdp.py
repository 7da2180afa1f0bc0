"""Finite discounted MDPs and their exact operators.

Conventions used throughout the package:

* ``P`` has shape ``(k, m, m)`` with ``P[a, x, y]`` the probability of moving
  from ``x`` to ``y`` under action ``a``.
* ``r`` has shape ``(k, m)``.
* An action-value function is an array of shape ``(k, m)``; ``V[a]`` is the
  component for action ``a``.
* A policy is an integer array of length ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MaxIterationsError, ValidationError

STOCHASTIC_ATOL = 1e-12


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mdp:
    """A finite MDP with deterministic rewards.

    Rows of every ``P[a]`` must be probability vectors (within 1e-12). Pass
    ``repair=True`` to renormalise rows that are nonnegative but slightly off.
    """

    P: np.ndarray
    r: np.ndarray
    gamma: float
    repair: bool = False

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        r = np.array(self.r, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2]:
            raise ValidationError(f"transitions must have shape (k, m, m), got {P.shape}")
        k, m, _ = P.shape
        if k < 1 or m < 1:
            raise ValidationError("need at least one state and one action")
        if r.shape != (k, m):
            raise ValidationError(f"rewards must have shape ({k}, {m}), got {r.shape}")
        if not np.all(np.isfinite(r)):
            raise ValidationError("rewards must be finite")
        if not np.all(np.isfinite(P)):
            raise ValidationError("transitions must be finite")
        gamma = float(self.gamma)
        if not 0.0 <= gamma < 1.0:
            raise ValidationError(f"gamma must lie in [0, 1), got {gamma}")
        if np.any(P < 0):
            a, x, y = np.argwhere(P < 0)[0]
            raise ValidationError(f"transitions[{a}][{x}] has a negative entry at column {y}")
        sums = P.sum(axis=2)
        bad = np.abs(sums - 1.0) > STOCHASTIC_ATOL
        if np.any(bad):
            if self.repair and np.all(sums > 0):
                P = P / sums[:, :, None]
            else:
                a, x = np.argwhere(bad)[0]
                raise ValidationError(f"transitions[{a}][{x}] sums to {sums[a, x]!r}, not 1")
        object.__setattr__(self, "P", _frozen(P))
        object.__setattr__(self, "r", _frozen(r))
        object.__setattr__(self, "gamma", gamma)

    @property
    def num_states(self) -> int:
        return self.P.shape[1]

    @property
    def num_actions(self) -> int:
        return self.P.shape[0]

    def with_gamma(self, gamma: float) -> "Mdp":
        return Mdp(self.P, self.r, gamma)


def _check_value(mdp: Mdp, V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.shape != (mdp.num_states,):
        raise ValidationError(f"value vector must have length {mdp.num_states}, got shape {V.shape}")
    return V


def bellman_return(mdp: Mdp, V) -> np.ndarray:
    """``r^a + gamma P^a V`` for every action, shape ``(k, m)``."""
    V = _check_value(mdp, V)
    return mdp.r + mdp.gamma * (mdp.P @ V)


def max_select(V) -> np.ndarray:
    return np.max(np.asarray(V, dtype=float), axis=0)


def _check_policy(pi, k, m) -> np.ndarray:
    pi = np.asarray(pi)
    if pi.shape != (m,):
        raise ValidationError(f"policy must have length {m}, got shape {pi.shape}")
    if not np.issubdtype(pi.dtype, np.integer):
        if not np.all(np.equal(np.mod(pi, 1), 0)):
            raise ValidationError("policy entries must be integers")
        pi = pi.astype(int)
    if np.any(pi < 0) or np.any(pi >= k):
        raise ValidationError(f"policy entries must lie in [0, {k})")
    return pi


def policy_select(V, pi) -> np.ndarray:
    """Pick component ``pi[x]`` of ``V`` at each state ``x``."""
    V = np.asarray(V, dtype=float)
    pi = _check_policy(pi, V.shape[0], V.shape[1])
    return V[pi, np.arange(V.shape[1])]


def greedy(V) -> np.ndarray:
    """Per-state argmax; ties go to the lowest action index."""
    return np.argmax(np.asarray(V, dtype=float), axis=0)


def policy_kernel(mdp: Mdp, pi):
    """Return ``(P^pi, r^pi)`` for a deterministic policy."""
    pi = _check_policy(pi, mdp.num_actions, mdp.num_states)
    rows = np.arange(mdp.num_states)
    return mdp.P[pi, rows, :], mdp.r[pi, rows]


def policy_evaluation(mdp: Mdp, pi) -> np.ndarray:
    """Exact value of ``pi`` from a dense solve of ``(I - gamma P^pi) V = r^pi``."""
    P_pi, r_pi = policy_kernel(mdp, pi)
    A = np.eye(mdp.num_states) - mdp.gamma * P_pi
    return np.linalg.solve(A, r_pi)


def value_iteration(mdp: Mdp, tol: float = 1e-10, max_iter: int = 10**6, V0=None):
    """Iterate the Bellman optimality operator until ``||V - V*||_inf <= tol``.

    The loop stops once successive iterates differ by at most
    ``tol (1 - gamma) / gamma``, which certifies the returned iterate.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    gamma = mdp.gamma
    V = np.zeros(mdp.num_states) if V0 is None else _check_value(mdp, V0).copy()
    if gamma == 0.0:
        return max_select(mdp.r)
    threshold = tol * (1.0 - gamma) / gamma
    step = np.inf
    for _ in range(max_iter):
        V_next = max_select(bellman_return(mdp, V))
        step = np.max(np.abs(V_next - V))
        V = V_next
        if step <= threshold:
            return V
    raise MaxIterationsError(max_iter, step)


def optimal_values(mdp: Mdp, tol: float = 1e-10):
    """``(V*, pi*)`` to linear-solve precision.

    Value iteration locates a near-optimal greedy policy, then policy
    improvement runs to termination so the returned ``V*`` is an exact
    policy value rather than an iterate.
    """
    V = value_iteration(mdp, tol=tol)
    pi = greedy(bellman_return(mdp, V))
    for _ in range(10 * mdp.num_states * mdp.num_actions + 10):
        V = policy_evaluation(mdp, pi)
        Qv = bellman_return(mdp, V)
        current = Qv[pi, np.arange(mdp.num_states)]
        best = greedy(Qv)
        gain = Qv[best, np.arange(mdp.num_states)] - current
        scale = 1e-12 * max(1.0, np.max(np.abs(V)))
        improve = gain > scale
        if not np.any(improve):
            return V, pi
        pi = np.where(improve, best, pi)
    return V, pi


def random_mdp(rng: np.random.Generator, m: int, k: int, gamma: float) -> Mdp:
    """Dirichlet(1) transition rows and rewards uniform on ``[-1, 1]``."""
    P = rng.dirichlet(np.ones(m), size=(k, m))
    r = rng.uniform(-1.0, 1.0, size=(k, m))
    return Mdp(P, r, gamma, repair=True)
