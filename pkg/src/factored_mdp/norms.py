"""Vector norms, mixed max-norms over actions and induced operator norms.

Three norm families are supported: the supremum norm, weighted supremum
norms ``max_i |v_i| / w_i`` and ``L^p(mu)`` norms for ``p`` in ``{1, 2, inf}``.
An action-value array of shape ``(k, d)`` is measured with the mixed
max-norm: the base norm applied to ``max_a |V[a]|``.

Induced norms have closed forms only for some pairings; see :func:`op_norm`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UnsupportedNormError, ValidationError

SUP = "sup"
WSUP = "wsup"
LP = "lp"
INF = math.inf

POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000


def _parse_p(p):
    if p in (1, 2):
        return int(p)
    if p == INF or (isinstance(p, str) and p.lower() in ("inf", "infinity")):
        return INF
    raise ValidationError(f"p must be 1, 2 or inf, got {p!r}")


@dataclass(frozen=True, eq=False)
class NormSpec:
    """Tagged norm choice. Use the :meth:`sup`, :meth:`wsup` and :meth:`lp` constructors."""

    kind: str
    w: Optional[np.ndarray] = None
    p: Optional[float] = None
    mu: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == SUP:
            return
        if self.kind == WSUP:
            w = np.array(self.w, dtype=float)
            if w.ndim != 1 or w.size == 0:
                raise ValidationError("weighted sup norm needs a nonempty weight vector")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValidationError("weights must be finite and strictly positive")
            w.setflags(write=False)
            object.__setattr__(self, "w", w)
            return
        if self.kind == LP:
            mu = np.array(self.mu, dtype=float)
            if mu.ndim != 1 or mu.size == 0:
                raise ValidationError("L^p norm needs a nonempty measure vector")
            if not np.all(np.isfinite(mu)) or np.any(mu < 0) or not np.any(mu > 0):
                raise ValidationError("measure must be nonnegative with positive total mass")
            mu.setflags(write=False)
            object.__setattr__(self, "mu", mu)
            object.__setattr__(self, "p", _parse_p(self.p))
            return
        raise ValidationError(f"unknown norm kind {self.kind!r}")

    @classmethod
    def sup(cls):
        return cls(SUP)

    @classmethod
    def wsup(cls, w):
        return cls(WSUP, w=w)

    @classmethod
    def lp(cls, p, mu):
        return cls(LP, p=p, mu=mu)

    @property
    def dim(self):
        if self.kind == WSUP:
            return self.w.size
        if self.kind == LP:
            return self.mu.size
        return None

    def weights(self, d):
        """Weight vector of a sup-type norm (all ones for the plain sup norm)."""
        if self.kind == SUP:
            return np.ones(d)
        if self.kind == WSUP:
            self.check_dim(d)
            return self.w
        raise UnsupportedNormError("L^p norms have no sup weights")

    def check_dim(self, d):
        if self.dim is not None and self.dim != d:
            raise ValidationError(f"norm is defined on dimension {self.dim}, vector has {d}")

    def to_dict(self):
        if self.kind == SUP:
            return {"kind": SUP}
        if self.kind == WSUP:
            return {"kind": WSUP, "w": self.w.tolist()}
        return {"kind": LP, "p": "inf" if self.p == INF else self.p, "mu": self.mu.tolist()}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == SUP:
            return cls.sup()
        if kind == WSUP:
            return cls.wsup(d["w"])
        if kind == LP:
            return cls.lp(d.get("p", 1), d["mu"])
        raise ValidationError(f"unknown norm kind {kind!r}")

    def __repr__(self):
        if self.kind == SUP:
            return "NormSpec(sup)"
        if self.kind == WSUP:
            return f"NormSpec(wsup, d={self.dim})"
        return f"NormSpec(lp, p={self.p}, d={self.dim})"


def vec_norm(v, spec: NormSpec) -> float:
    v = np.abs(np.asarray(v, dtype=float))
    if v.ndim != 1:
        raise ValidationError("vec_norm expects a 1-d vector")
    spec.check_dim(v.size)
    if spec.kind == SUP:
        return float(np.max(v)) if v.size else 0.0
    if spec.kind == WSUP:
        return float(np.max(v / spec.w))
    mu = spec.mu
    if spec.p == INF:
        return float(np.max(v[mu > 0]))
    if spec.p == 1:
        return float(np.dot(mu, v))
    return float(math.sqrt(np.dot(mu, v * v)))


def mixed_norm(V, spec: NormSpec) -> float:
    """Base norm of ``max_a |V[a]|``."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        return vec_norm(V, spec)
    return vec_norm(np.max(np.abs(V), axis=0), spec)


@dataclass(frozen=True, eq=False)
class NormedOperator:
    """A matrix between normed spaces.

    ``matrix`` is ``(d_out, d_in)`` or, for operators into action-value
    spaces, ``(k, d_out, d_in)``; the output is then measured in the mixed
    max-norm built on ``out_spec``.
    """

    matrix: np.ndarray
    in_spec: NormSpec
    out_spec: NormSpec

    def __post_init__(self):
        J = np.asarray(self.matrix, dtype=float)
        if J.ndim not in (2, 3):
            raise ValidationError("operator matrix must be 2-d or 3-d")
        self.in_spec.check_dim(J.shape[-1])
        self.out_spec.check_dim(J.shape[-2])
        object.__setattr__(self, "matrix", J)

    @property
    def stacked(self):
        J = self.matrix
        return J if J.ndim == 3 else J[None]


def _sup_type(spec):
    return spec.kind in (SUP, WSUP)


def is_exact(op: NormedOperator) -> bool:
    """Whether :func:`op_norm` returns the induced norm itself rather than an upper bound."""
    ins, outs = op.in_spec, op.out_spec
    if _sup_type(ins):
        if _sup_type(outs) or outs.p == INF:
            return True
        return bool(np.all(op.matrix >= 0))
    if outs.p == 2:
        return op.stacked.shape[0] == 1
    return True


def op_norm(op: NormedOperator, seed: int = 0) -> float:
    """Induced norm of ``op`` (``+inf`` when unbounded).

    Closed forms:

    * sup-type input (sup or weighted sup): the norm of ``max_a |J^a| w_in``
      in the output norm. This is exact for sup-type or ``L^inf`` outputs and
      an upper bound otherwise (exact for entrywise nonnegative ``J``).
    * ``L^1 -> L^1``: the weighted column-sum formula.
    * ``L^inf -> L^inf``: row sums restricted to the two supports.
    * ``L^2 -> L^2``: largest singular value of the rescaled matrix by power
      iteration; for several actions the stacked matrix is used, an upper
      bound on the mixed norm.

    ``L^p`` inputs must be paired with an ``L^p`` output of the same ``p``.
    """
    ins, outs = op.in_spec, op.out_spec
    A = op.stacked
    d_in = A.shape[2]
    if _sup_type(ins):
        w_in = ins.weights(d_in)
        return vec_norm(np.max(np.abs(A) @ w_in, axis=0), outs)
    if outs.kind != LP or outs.p != ins.p:
        raise UnsupportedNormError(f"no closed form for {ins!r} -> {outs!r}")
    p = ins.p
    mu_in, mu_out = ins.mu, outs.mu
    absA = np.abs(A)
    in_supp = mu_in > 0
    out_supp = mu_out > 0
    # mass-free input coordinates are unconstrained by the input norm
    leak = absA[:, out_supp][:, :, ~in_supp]
    if np.any(leak > 0):
        return INF
    if p == 1:
        col = mu_out @ absA.max(axis=0)
        return float(np.max(col[in_supp] / mu_in[in_supp]))
    if p == INF:
        rows = absA[:, out_supp][:, :, in_supp].sum(axis=2)
        return float(np.max(rows))
    B = A[:, out_supp][:, :, in_supp]
    B = np.sqrt(mu_out[out_supp])[None, :, None] * B / np.sqrt(mu_in[in_supp])[None, None, :]
    return spectral_norm(B.reshape(-1, B.shape[2]), seed=seed)


def spectral_norm(B, seed: int = 0, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value of ``B`` by power iteration on ``B^T B``."""
    B = np.asarray(B, dtype=float)
    if B.size == 0 or not np.any(B):
        return 0.0
    M = B.T @ B
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[0])
    x /= np.linalg.norm(x)
    lam = float(x @ M @ x)
    for _ in range(max_iter):
        y = M @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # started orthogonal to the range; restart from a fresh direction
            x = rng.standard_normal(M.shape[0])
            x /= np.linalg.norm(x)
            continue
        x = y / ny
        lam_new = float(x @ M @ x)
        if abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
            lam = lam_new
            break
        lam = lam_new
    return math.sqrt(max(lam, 0.0))


def lyapunov_beta(w, J, gamma: float) -> float:
    """``gamma * max_{a,x} sum_y |J^a(x,y)| w(y) / w(x)``.

    Equals ``gamma * sup_{|f| = w} ||J f||_{inf,w}`` maximised over actions.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValidationError("Lyapunov weights must be finite and strictly positive")
    J = np.asarray(J, dtype=float)
    if J.ndim == 2:
        J = J[None]
    if J.shape[1:] != (w.size, w.size):
        raise ValidationError(f"operator shape {J.shape[1:]} does not match weight length {w.size}")
    return float(gamma * np.max((np.abs(J) @ w) / w))


def lyapunov_weight_heuristic(J, gamma: float, base=None, tol: float = 1e-13, max_iter: int = 100_000):
    """Candidate Lyapunov weight: the fixed point of ``w <- base + gamma max_a |J^a| w``.

    At the fixed point ``beta_{w,J} = max (w - base) / w < 1``. The iteration
    converges whenever ``gamma |J|`` is a contraction (e.g. stochastic ``J``);
    callers should still check :func:`lyapunov_beta`. The result is scaled
    so its smallest entry is 1.
    """
    J = np.abs(np.asarray(J, dtype=float))
    if J.ndim == 2:
        J = J[None]
    d = J.shape[1]
    base = np.ones(d) if base is None else np.asarray(base, dtype=float)
    if base.shape != (d,) or np.any(base <= 0):
        raise ValidationError("base weights must be positive with one entry per coordinate")
    w = base.copy()
    for _ in range(max_iter):
        w_next = base + gamma * np.max(J @ w, axis=0)
        if not np.all(np.isfinite(w_next)):
            break
        done = np.max(np.abs(w_next - w)) <= tol * np.max(w_next)
        w = w_next
        if done:
            break
    return w / np.min(w)


def lip_point_evaluator_lp(rho, mu, anchors, p) -> float:
    """Lipschitz constant of a point evaluator from ``L^p(mu)`` to ``L^p(rho)``.

    ``anchors[i]`` is the state evaluated by compressed coordinate ``i``.
    Returns ``inf`` when ``rho`` pushed onto the anchors is not absolutely
    continuous with respect to ``mu``.
    """
    p = _parse_p(p)
    rho = np.asarray(rho, dtype=float)
    mu = np.asarray(mu, dtype=float)
    anchors = np.asarray(anchors, dtype=int)
    if rho.shape != anchors.shape:
        raise ValidationError("rho and anchors must have the same length")
    pushed = np.bincount(anchors, weights=rho, minlength=mu.size)
    if np.any((mu == 0) & (pushed > 0)):
        return INF
    supp = mu > 0
    if not np.any(pushed[supp] > 0):
        return 0.0
    if p == INF:
        return 1.0
    ratio = np.max(pushed[supp] / mu[supp])
    return float(ratio ** (1.0 / p))
