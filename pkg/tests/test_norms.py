import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from factored_mdp import (
    NormedOperator,
    NormSpec,
    UnsupportedNormError,
    ValidationError,
    lip_point_evaluator_lp,
    lyapunov_beta,
    mixed_norm,
    op_norm,
    vec_norm,
)
from factored_mdp.norms import is_exact, lyapunov_weight_heuristic, spectral_norm


def sign_patterns(d):
    return np.array(list(itertools.product([-1.0, 1.0], repeat=d)))


def beta_brute(w, J, gamma):
    # gamma * max over actions and sign patterns s of ||J (s w)||_{inf,w}
    F = sign_patterns(w.size) * w
    best = 0.0
    for Ja in J:
        best = max(best, np.max(np.abs(F @ Ja.T) / w))
    return gamma * best


def out_norm_rows(Y, spec):
    # Y: (trials, k, d_out); mixed norm of each trial
    return np.array([mixed_norm(y, spec) for y in Y])


def op_norm_vertices(J, in_spec, out_spec):
    """Brute force over the vertices of the input unit ball."""
    J = J if J.ndim == 3 else J[None]
    d = J.shape[2]
    if in_spec.kind in ("sup", "wsup"):
        V = sign_patterns(d) * in_spec.weights(d)
    elif in_spec.p == 1:
        mu = in_spec.mu
        V = np.concatenate([np.diag(1.0 / mu), -np.diag(1.0 / mu)])
    else:
        V = sign_patterns(d)
    Y = np.einsum("aij,tj->tai", J, V)
    return float(np.max(out_norm_rows(Y, out_spec)))


def test_vec_norm_formulas():
    v = np.array([3.0, -4.0, 1.0])
    w = np.array([1.0, 2.0, 0.5])
    mu = np.array([0.5, 0.25, 0.25])
    assert vec_norm(v, NormSpec.sup()) == 4.0
    assert vec_norm(v, NormSpec.wsup(w)) == 3.0
    assert vec_norm(v, NormSpec.lp(1, mu)) == pytest.approx(1.5 + 1.0 + 0.25)
    assert vec_norm(v, NormSpec.lp(2, mu)) == pytest.approx(np.sqrt(4.5 + 4.0 + 0.25))
    assert vec_norm(v, NormSpec.lp("inf", mu)) == 4.0
    assert vec_norm(v, NormSpec.lp("inf", [1.0, 0.0, 1.0])) == 3.0


def test_mixed_norm_takes_per_state_max_first():
    V = np.array([[1.0, -5.0], [-2.0, 1.0]])
    mu = np.array([0.5, 0.5])
    assert mixed_norm(V, NormSpec.lp(1, mu)) == pytest.approx(0.5 * 2 + 0.5 * 5)
    assert mixed_norm(V, NormSpec.wsup([1.0, 10.0])) == 2.0


@pytest.mark.parametrize("bad", [
    lambda: NormSpec.wsup([1.0, 0.0]),
    lambda: NormSpec.wsup([1.0, np.inf]),
    lambda: NormSpec.lp(1, [0.0, 0.0]),
    lambda: NormSpec.lp(1, [0.5, -0.1]),
    lambda: NormSpec.lp(3, [1.0]),
    lambda: NormSpec("banana"),
])
def test_bad_norm_specs_rejected(bad):
    with pytest.raises(ValidationError):
        bad()


def test_norm_spec_round_trip():
    for spec in (NormSpec.sup(), NormSpec.wsup([1.0, 2.0]), NormSpec.lp("inf", [0.5, 0.5]), NormSpec.lp(2, [1.0])):
        back = NormSpec.from_dict(spec.to_dict())
        assert back.to_dict() == spec.to_dict()


@pytest.mark.parametrize("seed", range(100))
def test_beta_matches_sign_pattern_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 13))
    k = int(rng.integers(1, 3))
    J = rng.standard_normal((k, n, n))
    w = rng.uniform(0.2, 3.0, size=n)
    gamma = float(rng.uniform(0.1, 0.99))
    assert abs(lyapunov_beta(w, J, gamma) - beta_brute(w, J, gamma)) <= 1e-12 * max(1.0, beta_brute(w, J, gamma))


def _random_spec(rng, kind, d, p=None):
    if kind == "sup":
        return NormSpec.sup()
    if kind == "wsup":
        return NormSpec.wsup(rng.uniform(0.2, 3.0, size=d))
    mu = rng.dirichlet(np.ones(d))
    if d > 1 and rng.random() < 0.3:
        mu[rng.integers(d)] = 0.0
    return NormSpec.lp(p, mu)


@pytest.mark.parametrize("seed", range(40))
@pytest.mark.parametrize("pair", [("sup", "sup"), ("wsup", "wsup"), ("wsup", "sup"), ("sup", "lp_inf"),
                                  ("lp_1", "lp_1"), ("lp_inf", "lp_inf")])
def test_induced_norms_match_vertex_brute_force(seed, pair):
    rng = np.random.default_rng(seed)
    d_in, d_out, k = int(rng.integers(1, 9)), int(rng.integers(1, 7)), int(rng.integers(1, 4))
    J = rng.standard_normal((k, d_out, d_in))
    ins_kind, outs_kind = pair
    p_in = {"lp_1": 1, "lp_inf": "inf"}.get(ins_kind)
    p_out = {"lp_1": 1, "lp_inf": "inf"}.get(outs_kind)
    ins = _random_spec(rng, "lp" if p_in else ins_kind, d_in, p_in)
    outs = _random_spec(rng, "lp" if p_out else outs_kind, d_out, p_out)
    if ins.kind == "lp":
        # the brute force covers the supported coordinates; keep mu_in positive
        ins = NormSpec.lp(ins.p, rng.dirichlet(np.ones(d_in)))
    op = NormedOperator(J, ins, outs)
    assert is_exact(op)
    got = op_norm(op)
    want = op_norm_vertices(J, ins, outs)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-14)


def test_sup_to_lp1_is_upper_bound_and_exact_when_nonnegative(rng):
    for _ in range(30):
        J = rng.standard_normal((2, 4, 5))
        ins, outs = NormSpec.wsup(rng.uniform(0.5, 2, 5)), NormSpec.lp(1, rng.dirichlet(np.ones(4)))
        assert op_norm(NormedOperator(J, ins, outs)) >= op_norm_vertices(J, ins, outs) - 1e-12
        Jp = np.abs(J)
        assert op_norm(NormedOperator(Jp, ins, outs)) == pytest.approx(op_norm_vertices(Jp, ins, outs), rel=1e-12)


def test_lp_leak_gives_infinity():
    J = np.array([[0.0, 1.0]])
    op = NormedOperator(J, NormSpec.lp(1, [1.0, 0.0]), NormSpec.lp(1, [1.0]))
    assert op_norm(op) == np.inf


def test_mismatched_p_unsupported():
    with pytest.raises(UnsupportedNormError):
        op_norm(NormedOperator(np.eye(2), NormSpec.lp(1, [0.5, 0.5]), NormSpec.lp(2, [0.5, 0.5])))


@pytest.mark.parametrize("seed", range(20))
def test_p2_power_iteration_restart_agrees(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 12))
    A = rng.standard_normal((d, d))
    mu_in, mu_out = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
    op = NormedOperator(A, NormSpec.lp(2, mu_in), NormSpec.lp(2, mu_out))
    a, b = op_norm(op, seed=0), op_norm(op, seed=99)
    assert abs(a - b) <= 1e-8 * max(a, 1.0)
    B = np.sqrt(mu_out)[:, None] * A / np.sqrt(mu_in)[None, :]
    assert a == pytest.approx(np.linalg.norm(B, 2), rel=1e-8)


def test_spectral_norm_of_zero_is_zero():
    assert spectral_norm(np.zeros((3, 3))) == 0.0


@pytest.mark.parametrize("p", [1, 2, "inf"])
@pytest.mark.parametrize("seed", range(10))
def test_point_evaluator_lipschitz_matches_subset_indicators(seed, p):
    rng = np.random.default_rng(seed)
    m, n = 6, int(rng.integers(1, 5))
    anchors = rng.choice(m, size=n, replace=False)
    rho = rng.dirichlet(np.ones(n))
    mu = rng.dirichlet(np.ones(m))
    R = np.zeros((n, m))
    R[np.arange(n), anchors] = 1.0
    best = 0.0
    for mask in itertools.product([0.0, 1.0], repeat=m):
        v = np.array(mask)
        if not v.any():
            continue
        best = max(best, vec_norm(R @ v, NormSpec.lp(p, rho)) / vec_norm(v, NormSpec.lp(p, mu)))
    assert lip_point_evaluator_lp(rho, mu, anchors, p) == pytest.approx(best, rel=1e-12)


def test_point_evaluator_lipschitz_infinite_off_support():
    assert lip_point_evaluator_lp([1.0], [0.0, 1.0], [0], 1) == np.inf


def test_lyapunov_heuristic_certifies_contraction(rng):
    for _ in range(20):
        P = rng.dirichlet(np.ones(7), size=(3, 7))
        gamma = float(rng.uniform(0.1, 0.99))
        w = lyapunov_weight_heuristic(P, gamma, base=rng.uniform(0.5, 2.0, size=7))
        assert np.min(w) == pytest.approx(1.0)
        assert lyapunov_beta(w, P, gamma) < 1.0
    np.testing.assert_allclose(lyapunov_weight_heuristic(P, 0.9), np.ones(7), rtol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4),
       st.sampled_from([1, 2, "inf"]))
def test_lp_triangle_inequality(u, v, p):
    spec = NormSpec.lp(p, [0.1, 0.2, 0.3, 0.4])
    u, v = np.array(u), np.array(v)
    assert vec_norm(u + v, spec) <= vec_norm(u, spec) + vec_norm(v, spec) + 1e-9
