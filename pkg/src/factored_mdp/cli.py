"""Command-line driver: ``flm solve|plan|audit|example|sweep``.

Exit codes: 0 success, 2 invalid input, 3 compressed operator not
contractive, 4 a bound was violated (or an example check failed).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .bounds import AuditConfig, audit
from .counterexamples import EXAMPLES, verify_example
from .errors import DivergedError, FactoredMDPError, MaxIterationsError, NotContractiveError, ValidationError
from .experiments import ExperimentConfig, count_violations, rows_to_csv, run_sweep
from .mdp import optimal_values
from .norms import NormSpec
from .planner import plan

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONTRACTIVE = 3
EXIT_VIOLATION = 4

FAMILIES = {
    "sup": ["baseline", "sup", "adp_general", "adp_specific"],
    "wsup": ["wsup"],
    "lp": ["lp", "lp_linear_r", "lp_via_wsup"],
}


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _vector(path, size, name):
    if path is None:
        return None
    v = fio.load_vector(path)
    if v.size != size:
        raise ValidationError(f"--{name} has {v.size} entries, expected {size}")
    return v


def _plan_norm(args, n):
    eta = _vector(args.eta, n, "eta")
    if args.norm == "sup":
        return NormSpec.sup()
    if args.norm == "wsup":
        return NormSpec.wsup(np.ones(n) if eta is None else eta)
    return NormSpec.lp(args.p, np.full(n, 1.0 / n) if eta is None else eta)


def cmd_solve(args):
    mdp = fio.load_mdp(args.mdp)
    V, pi = optimal_values(mdp, tol=args.tol)
    _emit(fio.dumps({"V_star": V, "pi_star": pi}), args.out)
    return EXIT_OK


def cmd_plan(args):
    mdp = fio.load_mdp(args.mdp)
    model = fio.load_model(args.model, mdp)
    result = plan(mdp, model, _plan_norm(args, model.n), tol=args.tol, force=args.force)
    _emit(fio.dumps(result.to_dict()), args.out)
    return EXIT_OK


def cmd_audit(args):
    mdp = fio.load_mdp(args.mdp)
    model = fio.load_model(args.model, mdp)
    m, n = mdp.num_states, model.n
    cfg = AuditConfig(
        mu=_vector(args.mu, m, "mu"),
        p=args.p,
        xi=_vector(args.xi, m, "xi"),
        nu=_vector(args.nu, m, "nu"),
        eta=_vector(args.eta, n, "eta"),
        tol=args.tol,
        force=args.force,
    )
    report = audit(mdp, model, cfg)
    payload = report.to_dict()
    if args.out:
        fio.write_json(payload, args.out)
    else:
        sys.stdout.write(fio.dumps(payload))
    lines = report.summary().splitlines()
    if args.norm:
        keep = set(FAMILIES[args.norm])
        lines = [ln for ln in lines if ln.split(" ", 1)[0] not in report.records or ln.split(" ", 1)[0] in keep]
    print("\n".join(lines), file=sys.stderr)
    if report.violations:
        print(f"critical: bound violated: {', '.join(report.violations)}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _example_params(args):
    if args.name == "tightness":
        return {"gamma": args.gamma, "tau": args.tau, "eps": args.eps}
    if args.name == "harsh":
        return {"gamma": args.gamma, "tau": args.tau}
    return {"gamma": args.gamma, "tau1": args.tau1, "tau2": args.tau2}


def cmd_example(args):
    inst = EXAMPLES[args.name](**_example_params(args))
    record = verify_example(inst, tol=args.tol)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        fio.write_json(fio.mdp_to_dict(inst.mdp), out / "mdp.json")
        fio.write_json(fio.model_to_dict(inst.model), out / "model.json")
        fio.write_json(record.to_dict(), out / "verification.json")
    else:
        sys.stdout.write(fio.dumps(record.to_dict()))
    for c in record.checks:
        print(f"{'pass' if c.passed else 'FAIL'}  {c.name}", file=sys.stderr)
    return EXIT_OK if record.passed else EXIT_VIOLATION


def cmd_sweep(args):
    data = fio.read_json(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    cfg = ExperimentConfig.from_dict(data)
    rows = run_sweep(cfg, jobs=args.jobs)
    _emit(rows_to_csv(rows), args.out)
    if cfg.mode == "gamma_profile":
        print(f"gamma profile: {len(rows)} rows", file=sys.stderr)
        return EXIT_OK
    v = count_violations(rows)
    print(f"trials={len(rows)} violations={v}", file=sys.stderr)
    return EXIT_VIOLATION if v else EXIT_OK


def _p(value):
    if value.lower() in ("inf", "infinity"):
        return float("inf")
    if value in ("1", "2"):
        return int(value)
    raise argparse.ArgumentTypeError("p must be 1, 2 or inf")


def build_parser():
    parser = argparse.ArgumentParser(prog="flm", description="Planning and policy-error bounds for factored linear models.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        p.add_argument("mdp", help="MDP JSON file")
        if model:
            p.add_argument("model", help="factored model JSON file")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--out", help="output path (default stdout)")

    def norm_flags(p):
        p.add_argument("--norm", choices=["sup", "wsup", "lp"])
        p.add_argument("--p", type=_p, default=1)
        p.add_argument("--mu", help="state measure (JSON list or text)")
        p.add_argument("--nu", help="state Lyapunov weights")
        p.add_argument("--eta", help="compressed weights")
        p.add_argument("--xi", help="second state measure (default mu)")
        p.add_argument("--force", action="store_true", help="iterate even when the modulus is >= 1")

    p = sub.add_parser("solve", help="exact V* and an optimal policy")
    common(p, model=False)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("plan", help="compressed value iteration and the lookahead policy")
    common(p)
    norm_flags(p)
    p.set_defaults(func=cmd_plan, norm="sup")

    p = sub.add_parser("audit", help="every applicable bound against the exact policy error")
    common(p)
    norm_flags(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("example", help="build and verify a counterexample MDP")
    p.add_argument("name", choices=["tightness", "harsh", "errorgaps"])
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=4.0)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--tau1", type=float, default=1.0)
    p.add_argument("--tau2", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", help="directory for mdp.json, model.json and verification.json")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("sweep", help="batch audits on random instances, CSV output")
    p.add_argument("config", help="sweep config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NotContractiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONTRACTIVE
    except (ValidationError, DivergedError, MaxIterationsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FactoredMDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
