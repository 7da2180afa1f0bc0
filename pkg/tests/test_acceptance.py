"""Acceptance criteria 1-10.

Each criterion returns ``(passed, detail)``; the pytest tests assert on it
and a one-line verdict per criterion is printed in the terminal summary.
Run ``python3 tests/test_acceptance.py`` to print the verdicts alone.
"""

import itertools
import time

import numpy as np
import pytest

from factored_mdp import (
    NormSpec,
    bound_lp,
    bound_lp_linear_r,
    bound_sup,
    bound_wsup,
    error_gaps_mdp,
    harsh_mdp,
    lyapunov_beta,
    max_select,
    mixed_norm,
    op_norm,
    plan,
    policy_select,
    random_mdp,
    random_normalized,
    tightness_mdp,
    validate_join_hom,
    vec_norm,
    JoinHomRight,
    NormedOperator,
)
from factored_mdp.bounds import solve
from factored_mdp.cli import main as cli_main
from factored_mdp.counterexamples import EXAMPLE_PLAN_TOL
from factored_mdp.experiments import ExperimentConfig, make_instance, run_sweep
from factored_mdp.model import JoinHomRejection
from factored_mdp.planner import fixed_point_checks

SUP = NormSpec.sup()
RESULTS = {}

SWEEP_SEED = 20240611
SWEEP_TRIALS = 500
PLAN_TOL = 1e-10


def _record(num, title, limit=None):
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            ok, detail = fn()
            dt = time.perf_counter() - t0
            if limit is not None and dt >= limit:
                ok = False
                detail += f"; runtime {dt:.2f}s exceeds {limit:g}s"
            RESULTS[num] = (ok, title, f"{detail} [{dt:.2f}s]")
            return ok, detail
        run.num = num
        return run
    return wrap


def _solved(inst):
    res = plan(inst.mdp, inst.model, tol=EXAMPLE_PLAN_TOL)
    return res, solve(inst.mdp, inst.model, res, tol=EXAMPLE_PLAN_TOL)


@_record(1, "tightness grid", limit=1.0)
def criterion_1():
    worst = 0.0
    for g, t, e in itertools.product([0.1, 0.5, 0.9, 0.95], [0.5, 4.0, 16.0], [0.05, 0.5, 0.95]):
        inst = tightness_mdp(g, t, e)
        res, ctx = _solved(inst)
        err = vec_norm(ctx.err, SUP)
        twice_eps2 = 2 * g / (1 - g) * mixed_norm(ctx.D_U, SUP)
        worst = max(worst, abs(err - (1 - e) * t), abs(twice_eps2 - t))
    return worst <= 1e-9, f"36 cases, max abs deviation {worst:.2e}"


@_record(2, "error-gap triples", limit=1.0)
def criterion_2():
    worst = 0.0
    for g, (t1, t2) in itertools.product([0.3, 0.7], [(0, 1), (1, 0), (1, 2), (5, 3)]):
        inst = error_gaps_mdp(g, t1, t2)
        res, ctx = _solved(inst)
        got = np.array([
            vec_norm(ctx.V_star - res.U_star, SUP),
            vec_norm(ctx.V_pihat - res.U_star, SUP),
            vec_norm(ctx.err, SUP),
        ])
        worst = max(worst, float(np.max(np.abs(got - [t1, t2, t1 + t2]))))
    return worst <= 1e-9, f"8 cases, max abs deviation {worst:.2e}"


@_record(3, "sup-norm harshness", limit=1.0)
def criterion_3():
    worst_sup, worst_l1 = 0.0, 0.0
    for g, t in itertools.product([0.2, 0.5, 0.9], [0.5, 2.0, 10.0]):
        inst = harsh_mdp(g, t)
        res, ctx = _solved(inst)
        worst_sup = max(worst_sup, abs(vec_norm(ctx.err, SUP) - t / 2))
        for key in ("mu", "xi"):
            worst_l1 = max(worst_l1, vec_norm(ctx.err, NormSpec.lp(1, inst.expected[key])))
    ok = worst_sup <= 1e-9 and worst_l1 <= 1e-9
    return ok, f"9 cases, sup deviation {worst_sup:.2e}, max L1 error {worst_l1:.2e}"


@_record(4, "bound soundness sweep", limit=60.0)
def criterion_4():
    rows = run_sweep(ExperimentConfig(seed=SWEEP_SEED, trials=SWEEP_TRIALS))
    violations = sum(r["violations"] for r in rows)
    checked = sum(r[f"holds_{t}"] is not None for r in rows for t in
                  ("baseline", "sup", "wsup", "lp", "lp_linear_r", "lp_via_wsup", "adp_general", "adp_specific"))
    return violations == 0, f"{len(rows)} instances, {checked} bound checks, {violations} violations"


@_record(5, "fixed-point identities")
def criterion_5():
    cfg = ExperimentConfig(seed=SWEEP_SEED, trials=SWEEP_TRIALS)
    worst_u, worst_U, worst_start, joinhom = 0.0, 0.0, 0.0, 0
    for t in range(cfg.trials):
        inst = make_instance(cfg, t)
        res = plan(inst.mdp, inst.model, tol=PLAN_TOL)
        rng = np.random.default_rng(t)
        other = plan(inst.mdp, inst.model, tol=PLAN_TOL, u0=rng.uniform(-50, 50, size=inst.model.n))
        worst_start = max(worst_start, float(np.max(np.abs(res.u_star - other.u_star))))
        if inst.model.R.is_join_hom:
            joinhom += 1
            gaps = fixed_point_checks(inst.model, res)
            worst_u = max(worst_u, gaps["u_vs_RU"])
            worst_U = max(worst_U, gaps["U_vs_MTQR"])
    ok = max(worst_u, worst_U, worst_start) <= 2 * PLAN_TOL
    return ok, (f"{joinhom} join-hom cases: |u*-RU*| {worst_u:.1e}, |U*-MTU*| {worst_U:.1e}; "
                f"two starts differ by {worst_start:.1e} (limit {2 * PLAN_TOL:.0e})")


def _signs(d):
    return np.array(list(itertools.product([-1.0, 1.0], repeat=d)))


@_record(6, "norm-engine oracles", limit=30.0)
def criterion_6():
    rng = np.random.default_rng(6)
    beta_err = 0.0
    for _ in range(100):
        n, k = int(rng.integers(1, 13)), int(rng.integers(1, 3))
        J = rng.standard_normal((k, n, n))
        w = rng.uniform(0.2, 3.0, size=n)
        g = float(rng.uniform(0.1, 0.99))
        F = _signs(n) * w
        brute = g * max(np.max(np.abs(F @ Ja.T) / w) for Ja in J)
        beta_err = max(beta_err, abs(lyapunov_beta(w, J, g) - brute) / max(1.0, brute))
    op_err = 0.0
    for _ in range(100):
        d_in, d_out, k = int(rng.integers(1, 9)), int(rng.integers(1, 7)), int(rng.integers(1, 4))
        J = rng.standard_normal((k, d_out, d_in))
        mu_in, mu_out = rng.dirichlet(np.ones(d_in)), rng.dirichlet(np.ones(d_out))
        w_in, w_out = rng.uniform(0.2, 3, d_in), rng.uniform(0.2, 3, d_out)
        cases = [
            (NormSpec.wsup(w_in), NormSpec.wsup(w_out), _signs(d_in) * w_in),
            (NormSpec.lp(1, mu_in), NormSpec.lp(1, mu_out), np.concatenate([np.diag(1 / mu_in), -np.diag(1 / mu_in)])),
            (NormSpec.lp("inf", mu_in), NormSpec.lp("inf", mu_out), _signs(d_in)),
        ]
        for ins, outs, vertices in cases:
            brute = max(mixed_norm(J @ v, outs) for v in vertices)
            op_err = max(op_err, abs(op_norm(NormedOperator(J, ins, outs)) - brute) / max(1.0, brute))
    restart_err = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 15))
        op = NormedOperator(rng.standard_normal((d, d)), NormSpec.lp(2, rng.dirichlet(np.ones(d))),
                            NormSpec.lp(2, rng.dirichlet(np.ones(d))))
        a, b = op_norm(op, seed=0), op_norm(op, seed=1)
        restart_err = max(restart_err, abs(a - b) / max(1.0, a))
    ok = beta_err <= 1e-12 and op_err <= 1e-12 and restart_err <= 1e-8
    return ok, f"beta {beta_err:.1e}, p in (1, inf) induced {op_err:.1e}, p=2 restart {restart_err:.1e}"


@_record(7, "non-expansion of max selections")
def criterion_7():
    rng = np.random.default_rng(7)
    worst = -np.inf
    for family in ("sup", "wsup", "lp1", "lp2", "lpinf"):
        for _ in range(1000):
            k, d = int(rng.integers(1, 5)), int(rng.integers(1, 11))
            if family == "sup":
                spec = SUP
            elif family == "wsup":
                spec = NormSpec.wsup(rng.uniform(0.1, 10, d))
            else:
                spec = NormSpec.lp({"lp1": 1, "lp2": 2, "lpinf": "inf"}[family], rng.dirichlet(np.ones(d)))
            # the same maps act on state values (M, M^pi) and compressed values (M', M'^pi)
            V, U = rng.standard_normal((2, k, d)) * rng.uniform(0.1, 100)
            pi = rng.integers(0, k, size=d)
            rhs = mixed_norm(V - U, spec)
            worst = max(worst,
                        vec_norm(max_select(V) - max_select(U), spec) - rhs,
                        vec_norm(policy_select(V, pi) - policy_select(U, pi), spec) - rhs)
    return worst <= 1e-12, f"5 families x 1000 pairs, max excess {worst:.1e}"


@_record(8, "reduction identities")
def criterion_8():
    rng = np.random.default_rng(8)
    worst_w, worst_l = 0.0, 0.0
    for _ in range(100):
        m = int(rng.integers(2, 16))
        mdp = random_mdp(rng, m, int(rng.integers(1, 5)), float(rng.uniform(0.1, 0.95)))
        model = random_normalized(mdp, int(rng.integers(1, min(m, 8) + 1)), rng)
        res = plan(mdp, model, tol=1e-12)
        ctx = solve(mdp, model, res)
        a = bound_sup(mdp, model, res, ctx)
        b = bound_wsup(mdp, model, res, np.ones(m), np.ones(model.n), ctx)
        worst_w = max(worst_w, abs(a.total - b.total) / max(abs(a.total), 1e-300))
        mu = rng.dirichlet(np.ones(m))
        p = [1, 2, "inf"][int(rng.integers(3))]
        c = bound_lp(mdp, model, res, mu, p=p, ctx=ctx)
        d = bound_lp_linear_r(mdp, model, res, mu, p=p, ctx=ctx, C=c.extras["C"])
        worst_l = max(worst_l, abs(c.total - d.total) / max(abs(c.total), 1e-300))
    ok = worst_w <= 1e-12 and worst_l <= 1e-12
    return ok, f"100 instances, wsup(1)/sup rel {worst_w:.1e}, linear-R/L^p rel {worst_l:.1e}"


@_record(9, "join-homomorphism decomposition")
def criterion_9():
    rng = np.random.default_rng(9)
    round_trips, witnesses = 0, 0
    for _ in range(100):
        n, m = int(rng.integers(1, 9)), int(rng.integers(1, 12))
        R = np.zeros((n, m))
        R[np.arange(n), rng.integers(0, m, size=n)] = rng.uniform(0.0, 3.0, size=n) * (rng.random(n) > 0.1)
        dec = validate_join_hom(R)
        if isinstance(dec, JoinHomRight) and np.array_equal(dec.matrix, R):
            round_trips += 1
    for _ in range(100):
        n, m = int(rng.integers(1, 9)), int(rng.integers(1, 12))
        R = np.zeros((n, m))
        R[np.arange(n), rng.integers(0, m, size=n)] = rng.uniform(0.1, 3.0, size=n)
        i = int(rng.integers(n))
        R[i] = 0.0
        if m > 1 and rng.random() < 0.6:
            R[i, rng.choice(m, size=2, replace=False)] = rng.uniform(-1, 1, size=2) + 1e-3
        else:
            R[i, rng.integers(m)] = -rng.uniform(0.1, 2.0)
        rej = validate_join_hom(R)
        if isinstance(rej, JoinHomRejection):
            e_j, e_jp = rej.witness(m)
            lhs, rhs = R @ np.maximum(e_j, e_jp), np.maximum(R @ e_j, R @ e_jp)
            if lhs[rej.row] != rhs[rej.row]:
                witnesses += 1
    return round_trips == 100 and witnesses == 100, f"{round_trips}/100 exact round trips, {witnesses}/100 witnesses"


@_record(10, "sweep determinism")
def criterion_10(tmp=None):
    import json
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        (d / "cfg.json").write_text(json.dumps({"seed": 77, "trials": 64}))
        codes = []
        for name, jobs in (("a", 1), ("b", 1), ("c", 8)):
            codes.append(cli_main(["sweep", str(d / "cfg.json"), "--jobs", str(jobs), "--out", str(d / f"{name}.csv")]))
        a, b, c = ((d / f"{x}.csv").read_bytes() for x in "abc")
    ok = a == b == c and codes == [0, 0, 0]
    return ok, f"runs identical: {a == b}, jobs 1 vs 8 identical: {a == c}, exit codes {codes}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{c.num}" for c in CRITERIA])
def test_criterion(criterion):
    ok, detail = criterion()
    assert ok, detail


def format_results():
    lines = []
    for num in sorted(RESULTS):
        ok, title, detail = RESULTS[num]
        lines.append(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    return lines


if __name__ == "__main__":
    for c in CRITERIA:
        c()
    print("\n".join(format_results()))
