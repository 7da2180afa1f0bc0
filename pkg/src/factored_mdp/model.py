"""Factored linear models ``P ~ Q R`` and the operators they induce.

``Q`` has shape ``(k, m, n)``: it maps a compressed value function
``u in R^n`` to an action-value function. The right factor ``R`` maps
``R^m -> R^n`` and is either a general matrix or a join-homomorphism
``(R v)_i = a_i v[J_i]``. The per-action extension ``piA`` holds one right
factor per action and defaults to ``k`` copies of ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .mdp import Mdp, bellman_return
from .norms import NormSpec, NormedOperator, op_norm


class RightFactor:
    """Linear map ``R^m -> R^n``; apply along the last axis."""

    n: int
    m: int

    def apply(self, v):
        raise NotImplementedError

    @property
    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_join_hom(self) -> bool:
        return False


class GeneralRight(RightFactor):
    def __init__(self, matrix):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2:
            raise ValidationError("right factor matrix must be 2-d")
        if not np.all(np.isfinite(M)):
            raise ValidationError("right factor entries must be finite")
        M.setflags(write=False)
        self._matrix = M
        self.n, self.m = M.shape

    def apply(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.m:
            raise ValidationError(f"right factor expects length {self.m}, got {v.shape[-1]}")
        return v @ self._matrix.T

    @property
    def matrix(self):
        return self._matrix

    def __eq__(self, other):
        return isinstance(other, GeneralRight) and np.array_equal(self._matrix, other._matrix)

    def __repr__(self):
        return f"GeneralRight(n={self.n}, m={self.m})"


class JoinHomRight(RightFactor):
    """``(R v)_i = a_i * v[J_i]`` with ``a >= 0``."""

    def __init__(self, a, J, m: int):
        a = np.array(a, dtype=float)
        J = np.array(J, dtype=int)
        if a.ndim != 1 or a.shape != J.shape:
            raise ValidationError("a and J must be 1-d with equal length")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValidationError("join-homomorphism scales must be finite and nonnegative")
        if np.any(J < 0) or np.any(J >= m):
            raise ValidationError(f"join-homomorphism indices must lie in [0, {m})")
        a.setflags(write=False)
        J.setflags(write=False)
        self.a, self.J = a, J
        self.n, self.m = a.size, int(m)

    def apply(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.m:
            raise ValidationError(f"right factor expects length {self.m}, got {v.shape[-1]}")
        return self.a * v[..., self.J]

    @property
    def matrix(self):
        M = np.zeros((self.n, self.m))
        M[np.arange(self.n), self.J] = self.a
        return M

    @property
    def is_join_hom(self):
        return True

    def __eq__(self, other):
        return (
            isinstance(other, JoinHomRight)
            and self.m == other.m
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.J, other.J)
        )

    def __repr__(self):
        return f"JoinHomRight(n={self.n}, m={self.m})"


def point_evaluator_right(anchors, m: int) -> JoinHomRight:
    anchors = np.asarray(anchors, dtype=int)
    return JoinHomRight(np.ones(anchors.size), anchors, m)


@dataclass
class JoinHomRejection:
    """Why a matrix is not a linear join-homomorphism.

    ``R (e_j v e_jp) != (R e_j) v (R e_jp)`` at coordinate ``row``. When
    ``R`` has a single column ``jp`` is ``None`` and stands for the zero vector.
    """

    row: int
    j: int
    jp: Optional[int]
    lhs: float
    rhs: float

    def witness(self, m):
        e_j = np.zeros(m)
        e_j[self.j] = 1.0
        e_jp = np.zeros(m)
        if self.jp is not None:
            e_jp[self.jp] = 1.0
        return e_j, e_jp

    def check(self, R) -> bool:
        """Recompute both sides on ``R`` and confirm they differ."""
        R = np.asarray(R, dtype=float)
        e_j, e_jp = self.witness(R.shape[1])
        lhs = R @ np.maximum(e_j, e_jp)
        rhs = np.maximum(R @ e_j, R @ e_jp)
        return bool(lhs[self.row] != rhs[self.row])


def validate_join_hom(R):
    """Decompose ``R`` as ``(a, J)`` or return a :class:`JoinHomRejection`.

    A row is accepted when it has at most one nonzero entry and that entry
    is positive. All-zero rows get ``J_i = 0`` and ``a_i = 0``.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2:
        raise ValidationError("expected a 2-d matrix")
    n, m = R.shape
    a = np.zeros(n)
    J = np.zeros(n, dtype=int)
    for i in range(n):
        nz = np.flatnonzero(R[i])
        if nz.size == 0:
            continue
        if nz.size == 1 and R[i, nz[0]] > 0:
            a[i] = R[i, nz[0]]
            J[i] = nz[0]
            continue
        if nz.size >= 2:
            # two nonzeros: the join adds them, the max of images does not
            j, jp = int(nz[0]), int(nz[1])
        else:
            # one negative entry: join with a column the row ignores
            j = int(nz[0])
            zeros = np.flatnonzero(R[i] == 0)
            jp = int(zeros[0]) if zeros.size else None
        rej = JoinHomRejection(i, j, jp, 0.0, 0.0)
        e_j, e_jp = rej.witness(m)
        rej.lhs = float((R @ np.maximum(e_j, e_jp))[i])
        rej.rhs = float(max((R @ e_j)[i], (R @ e_jp)[i]))
        return rej
    return JoinHomRight(a, J, m)


class FactoredLinearModel:
    """``<X, A, Q, R, r>`` sharing rewards and discount with an MDP."""

    def __init__(self, Q, R: RightFactor, r, gamma: float, piA: Optional[Sequence[RightFactor]] = None):
        Q = np.array(Q, dtype=float)
        r = np.array(r, dtype=float)
        if Q.ndim != 3:
            raise ValidationError(f"Q must have shape (k, m, n), got {Q.shape}")
        k, m, n = Q.shape
        if r.shape != (k, m):
            raise ValidationError(f"rewards must have shape ({k}, {m}), got {r.shape}")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(r))):
            raise ValidationError("model entries must be finite")
        if (R.n, R.m) != (n, m):
            raise ValidationError(f"R must map R^{m} -> R^{n}, got R^{R.m} -> R^{R.n}")
        if piA is None:
            piA = [R] * k
        piA = list(piA)
        if len(piA) != k:
            raise ValidationError(f"piA needs one right factor per action ({k}), got {len(piA)}")
        for f in piA:
            if (f.n, f.m) != (n, m):
                raise ValidationError("every piA factor must map R^m -> R^n")
        if R.is_join_hom and any(f != R for f in piA):
            raise ValidationError("with a join-homomorphism R every piA component must equal R")
        if not 0.0 <= float(gamma) < 1.0:
            raise ValidationError("gamma must lie in [0, 1)")
        Q.setflags(write=False)
        r.setflags(write=False)
        self.Q, self.R, self.r, self.gamma, self.piA = Q, R, r, float(gamma), piA
        self.k, self.m, self.n = k, m, n

    @classmethod
    def for_mdp(cls, mdp: Mdp, Q, R: RightFactor, piA=None):
        return cls(Q, R, mdp.r, mdp.gamma, piA)

    def with_gamma(self, gamma):
        return FactoredLinearModel(self.Q, self.R, self.r, gamma, self.piA)

    @property
    def shared_piA(self) -> bool:
        return all(f is self.R or f == self.R for f in self.piA)

    def piA_apply(self, V):
        """Apply ``piA[a]`` to component ``a`` of an action-value array ``(k, m)``."""
        V = np.asarray(V, dtype=float)
        if self.shared_piA:
            return self.R.apply(V)
        return np.stack([f.apply(V[a]) for a, f in enumerate(self.piA)])

    def piA_Q(self) -> np.ndarray:
        """``piA^a Q^a`` stacked, shape ``(k, n, n)``."""
        return np.stack([f.matrix @ self.Q[a] for a, f in enumerate(self.piA)])

    def QR(self) -> np.ndarray:
        return self.Q @ self.R.matrix

    def matches(self, mdp: Mdp) -> bool:
        return (
            (self.k, self.m) == (mdp.num_actions, mdp.num_states)
            and np.array_equal(self.r, mdp.r)
            and self.gamma == mdp.gamma
        )

    def __repr__(self):
        return f"FactoredLinearModel(k={self.k}, m={self.m}, n={self.n}, R={self.R!r})"


def apply_R(R: RightFactor, v):
    return R.apply(v)


def t_q(model: FactoredLinearModel, u) -> np.ndarray:
    """``r + gamma Q u``, shape ``(k, m)``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.n,):
        raise ValidationError(f"compressed vector must have length {model.n}, got shape {u.shape}")
    return model.r + model.gamma * (model.Q @ u)


def t_piaq(model: FactoredLinearModel, u) -> np.ndarray:
    """``piA (r + gamma Q u)``, shape ``(k, n)``."""
    return model.piA_apply(t_q(model, u))


def contraction_modulus(model: FactoredLinearModel, w_spec: NormSpec) -> float:
    """``gamma * ||piA Q||`` from ``w_spec`` to its mixed max-norm."""
    return model.gamma * op_norm(NormedOperator(model.piA_Q(), w_spec, w_spec))


# -- constructors -----------------------------------------------------------


def _nearest_anchor(m, anchors):
    anchors = np.asarray(anchors, dtype=int)
    states = np.arange(m)
    return np.argmin(np.abs(states[:, None] - anchors[None, :]), axis=1)


def point_evaluator(mdp: Mdp, anchors, assignment=None) -> FactoredLinearModel:
    """Point-evaluator model: ``(R v)_i = v[anchors[i]]``.

    ``assignment[y]`` names the anchor that stands in for state ``y``
    (default: the anchor with the nearest state index). ``Q^a(x, i)`` is the
    ``P^a``-mass that ``x`` sends to states assigned to anchor ``i``.
    """
    anchors = np.asarray(anchors, dtype=int)
    m = mdp.num_states
    if anchors.ndim != 1 or anchors.size == 0:
        raise ValidationError("need at least one anchor")
    if np.any(anchors < 0) or np.any(anchors >= m):
        raise ValidationError(f"anchors must lie in [0, {m})")
    if assignment is None:
        assignment = _nearest_anchor(m, anchors)
    assignment = np.asarray(assignment, dtype=int)
    if assignment.shape != (m,) or np.any(assignment < 0) or np.any(assignment >= anchors.size):
        raise ValidationError("assignment must map every state to an anchor index")
    Phi = np.zeros((m, anchors.size))
    Phi[np.arange(m), assignment] = 1.0
    return FactoredLinearModel.for_mdp(mdp, mdp.P @ Phi, point_evaluator_right(anchors, m))


def hard_aggregation(mdp: Mdp, partition, representatives=None) -> FactoredLinearModel:
    """Hard aggregation over ``partition`` (a list of disjoint blocks covering all states)."""
    m = mdp.num_states
    blocks = [np.asarray(b, dtype=int) for b in partition]
    seen = np.concatenate(blocks) if blocks else np.array([], dtype=int)
    if any(b.size == 0 for b in blocks) or sorted(seen.tolist()) != list(range(m)):
        raise ValidationError("partition blocks must be nonempty, disjoint and cover every state")
    if representatives is None:
        representatives = [int(b[0]) for b in blocks]
    representatives = np.asarray(representatives, dtype=int)
    for b, rep in zip(blocks, representatives):
        if rep not in b:
            raise ValidationError(f"representative {rep} is not in its block")
    assignment = np.empty(m, dtype=int)
    for i, b in enumerate(blocks):
        assignment[b] = i
    return point_evaluator(mdp, representatives, assignment)


def soft_aggregation(mdp: Mdp, D, Phi=None) -> FactoredLinearModel:
    """Soft aggregation with stochastic ``R = D`` (shape ``(n, m)``).

    ``Phi`` (shape ``(m, n)``, row-stochastic) gives each state's membership
    in the aggregates; by default it is ``D^T`` with rows normalised, falling
    back to uniform for states no aggregate covers. ``Q^a = P^a Phi``.
    """
    D = np.asarray(D, dtype=float)
    m = mdp.num_states
    if D.ndim != 2 or D.shape[1] != m:
        raise ValidationError(f"D must have shape (n, {m})")
    if np.any(D < 0) or np.any(np.abs(D.sum(axis=1) - 1.0) > 1e-12):
        raise ValidationError("D must be row-stochastic")
    n = D.shape[0]
    if Phi is None:
        Phi = D.T.copy()
        s = Phi.sum(axis=1)
        Phi[s == 0] = 1.0 / n
        Phi /= Phi.sum(axis=1, keepdims=True)
    Phi = np.asarray(Phi, dtype=float)
    if Phi.shape != (m, n) or np.any(Phi < 0) or np.any(np.abs(Phi.sum(axis=1) - 1.0) > 1e-12):
        raise ValidationError(f"Phi must be row-stochastic with shape ({m}, {n})")
    return FactoredLinearModel.for_mdp(mdp, mdp.P @ Phi, GeneralRight(D))


def unfactored_identity(mdp: Mdp) -> FactoredLinearModel:
    m = mdp.num_states
    return FactoredLinearModel.for_mdp(mdp, mdp.P, point_evaluator_right(np.arange(m), m))


def kbrl_model(mdp: Mdp, anchors, bandwidth: float, embedding=None) -> FactoredLinearModel:
    """Kernel-based model with a point-evaluator ``R`` at ``anchors``.

    Each next state ``y`` spreads its mass over the anchors with Gaussian
    weights ``exp(-|phi(y) - phi(x_i)|^2 / (2 h^2))``, normalised per ``y``;
    ``phi`` is ``embedding`` (shape ``(m, d)``, default the state index).
    """
    if not bandwidth > 0:
        raise ValidationError("kernel bandwidth must be positive")
    m = mdp.num_states
    anchors = np.asarray(anchors, dtype=int)
    if anchors.ndim != 1 or anchors.size == 0 or np.any(anchors < 0) or np.any(anchors >= m):
        raise ValidationError(f"anchors must be a nonempty list of states in [0, {m})")
    if embedding is None:
        embedding = np.arange(m, dtype=float)[:, None]
    emb = np.asarray(embedding, dtype=float)
    if emb.ndim == 1:
        emb = emb[:, None]
    if emb.shape[0] != m:
        raise ValidationError("embedding needs one row per state")
    d2 = ((emb[:, None, :] - emb[anchors][None, :, :]) ** 2).sum(axis=2)
    logits = -d2 / (2.0 * bandwidth**2)
    logits -= logits.max(axis=1, keepdims=True)
    K = np.exp(logits)
    K /= K.sum(axis=1, keepdims=True)
    return FactoredLinearModel.for_mdp(mdp, mdp.P @ K, point_evaluator_right(anchors, m))


def normalize_rows(Q):
    """Scale every row of every ``Q^a`` to unit absolute sum (zero rows stay zero)."""
    Q = np.array(Q, dtype=float)
    s = np.abs(Q).sum(axis=2, keepdims=True)
    return np.divide(Q, s, out=np.zeros_like(Q), where=s > 0)


def random_normalized(mdp: Mdp, n: int, rng: np.random.Generator, noise: Optional[float] = None,
                      linear: bool = False) -> FactoredLinearModel:
    """Random aggregation-style model with ``||piA Q||_inf = 1`` exactly.

    States are split into ``n`` random nonempty blocks. ``Q`` starts from the
    exact compression ``P^a Phi`` and is mixed with Gaussian noise of weight
    ``noise`` (drawn from ``[0, 0.4]`` when omitted), which may make it a
    pseudo-model with negative entries. Rows are then rescaled to unit
    absolute sum, and finally the whole of ``Q`` is divided by the largest
    absolute row sum of ``piA Q``.

    With ``linear=False`` the right factor is a point evaluator at a random
    representative of each block; with ``linear=True`` it is a stochastic
    soft-aggregation matrix, typically not a join-homomorphism.
    """
    m = mdp.num_states
    if not 1 <= n <= m:
        raise ValidationError(f"compressed dimension must lie in [1, {m}]")
    perm = rng.permutation(m)
    block = np.empty(m, dtype=int)
    block[perm[:n]] = np.arange(n)
    block[perm[n:]] = rng.integers(0, n, size=m - n)
    Phi = np.zeros((m, n))
    Phi[np.arange(m), block] = 1.0
    if linear:
        D = rng.dirichlet(np.ones(m), size=n) * 0.5
        D[np.arange(n), perm[:n]] += 0.5
        D /= D.sum(axis=1, keepdims=True)
        R = GeneralRight(D)
    else:
        reps = np.array([rng.choice(np.flatnonzero(block == i)) for i in range(n)])
        R = point_evaluator_right(reps, m)
    if noise is None:
        noise = rng.uniform(0.0, 0.4)
    Q = (1.0 - noise) * (mdp.P @ Phi) + noise * rng.standard_normal((mdp.num_actions, m, n))
    Q = normalize_rows(Q)
    model = FactoredLinearModel.for_mdp(mdp, Q, R)
    s = np.max(np.abs(model.piA_Q()).sum(axis=2))
    if s > 0:
        model = FactoredLinearModel.for_mdp(mdp, Q / s, R)
    return model


def exact_bellman_return(model: FactoredLinearModel, V):
    """``r + gamma Q R V``, the model's return operator on uncompressed values."""
    return model.r + model.gamma * (model.Q @ model.R.apply(V))


__all__ = [
    "RightFactor",
    "GeneralRight",
    "JoinHomRight",
    "JoinHomRejection",
    "FactoredLinearModel",
    "apply_R",
    "bellman_return",
    "contraction_modulus",
    "exact_bellman_return",
    "hard_aggregation",
    "kbrl_model",
    "point_evaluator",
    "point_evaluator_right",
    "random_normalized",
    "soft_aggregation",
    "t_piaq",
    "t_q",
    "unfactored_identity",
    "validate_join_hom",
]
