"""Command-line front end: point interval computation, single-cell simulation,
table reproduction and the likelihood-ratio crossing check.

Weight functions use one flat syntax, family:p1,p2[,p3,p4]:

    normal:mu0,tau0sq | beta:alpha,beta | nig:mu0,kappa0,alpha0,beta0 | logodds

Defaults: epsilon 0.2, reps 10000, seed 42 (overridable via ROBBINS_SEED),
threads = available cores.  All defaults are echoed in the output metadata.
Exit codes: 0 success, 1 numerical/runtime failure, 2 argument validation.
A JSON --config file may supply any long option (keys are option names with
dashes as underscores); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__, bernoulli, engine, normal, simulation, two_bernoulli
from .core import (BetaWeight, LogOddsJeffreysInduced, NormalInverseGamma, NormalWeight,
                   PersistenceLevel)
from .simulation import Model, Rule, SequencePlan, compare_to_reference, reproduce_table, run_plan

DEFAULT_EPSILON = 0.2
DEFAULT_REPS = 10_000


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _default_seed() -> int:
    raw = os.environ.get("ROBBINS_SEED", "42")
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"ROBBINS_SEED must be an integer, got {raw!r}")


def parse_weight(spec: str):
    """Parse family:p1,p2[,p3,p4] into a weight object."""
    family, _, rest = spec.partition(":")
    family = family.strip().lower()
    try:
        params = [float(x) for x in rest.split(",") if x.strip() != ""]
    except ValueError:
        raise CliError(f"--weight: non-numeric parameter in {spec!r}")
    try:
        if family == "normal":
            if len(params) != 2:
                raise CliError(f"--weight normal takes mu0,tau0sq; got {len(params)} values")
            return NormalWeight(*params)
        if family == "beta":
            if len(params) != 2:
                raise CliError(f"--weight beta takes alpha,beta; got {len(params)} values")
            return BetaWeight(*params)
        if family == "nig":
            if len(params) != 4:
                raise CliError(f"--weight nig takes mu0,kappa0,alpha0,beta0; got {len(params)} values")
            return NormalInverseGamma(*params)
        if family == "logodds":
            if params:
                raise CliError("--weight logodds takes no parameters")
            return LogOddsJeffreysInduced()
    except ValueError as exc:            # invalid weight parameters
        raise CliError(f"--weight: {exc}")
    raise CliError(f"--weight: unknown family {family!r} "
                   "(expected normal | beta | nig | logodds)")


def _require(args, names, context):
    for name in names:
        if getattr(args, name.lstrip("-").replace("-", "_"), None) is None:
            raise CliError(f"{context} requires {name}")


def _level(args) -> PersistenceLevel:
    eps = args.epsilon if args.epsilon is not None else DEFAULT_EPSILON
    try:
        return PersistenceLevel(eps)
    except ValueError as exc:
        raise CliError(f"--epsilon: {exc}")


def _conf(args) -> float:
    if args.conf is None:
        raise CliError(f"rule {args.rule!r} requires --conf")
    if not (0.0 < args.conf < 1.0):
        raise CliError(f"--conf must lie in (0, 1), got {args.conf}")
    return args.conf


# ---------------------------------------------------------------------------
# interval
# ---------------------------------------------------------------------------

def _interval_normal(args):
    _require(args, ["--n", "--ybar"], "model normal")
    rule = args.rule or "exact"
    meta = {}
    if rule == "classical":
        _require(args, ["--sigma2"], "rule classical")
        stat = normal.NormalSuffStat(args.n, args.ybar)
        iv = normal.classical_interval(stat, args.sigma2, _conf(args))
        meta["conf"] = _conf(args)
    elif rule == "exact":
        _require(args, ["--sigma2", "--weight"], "rule exact")
        w = _expect_weight(args, NormalWeight)
        level = _level(args)
        stat = normal.NormalSuffStat(args.n, args.ybar)
        iv = normal.robbins_interval_known_var(stat, args.sigma2, w, level)
        meta["epsilon"] = level.epsilon
        meta["threshold"] = level.log_epsilon + normal.exact_log_mixture(
            stat, args.sigma2, w).value
    elif rule == "nig":
        _require(args, ["--sigma2hat", "--weight"], "rule nig")
        w = _expect_weight(args, NormalInverseGamma)
        level = _level(args)
        stat = normal.NormalSuffStat(args.n, args.ybar, args.sigma2hat)
        iv = normal.nig_profile_interval(stat, w, level)
        meta["epsilon"] = level.epsilon
        meta["threshold"] = level.log_epsilon + normal.nig_log_marginal(stat, w)
    elif rule == "approx":
        _require(args, ["--sigma2hat", "--weight"], "rule approx")
        w = _expect_weight(args, NormalWeight)
        level = _level(args)
        stat = normal.NormalSuffStat(args.n, args.ybar, args.sigma2hat)
        iv = normal.approx_interval_unknown_var(stat, w, level)
        meta["epsilon"] = level.epsilon
    else:
        raise CliError(f"--rule {rule!r} is not valid for model normal "
                       "(classical | exact | nig | approx)")
    return iv, meta


def _interval_bernoulli(args):
    _require(args, ["--n", "--s"], "model bernoulli")
    stat = bernoulli.BernoulliSuffStat(args.n, args.s)
    rule = args.rule or "exact"
    meta = {}
    if rule == "exact":
        _require(args, ["--weight"], "rule exact")
        w = _expect_weight(args, BetaWeight)
        level = _level(args)
        iv = bernoulli.robbins_interval_bernoulli(stat, w, level)
        meta["epsilon"] = level.epsilon
        meta["threshold"] = level.log_epsilon + bernoulli.beta_binomial_log_pmf(stat, w)
    elif rule == "lr":
        iv = bernoulli.lr_interval(stat, _conf(args))
        meta["conf"] = _conf(args)
    elif rule == "approx":
        _require(args, ["--weight"], "rule approx")
        w = args.weight
        if isinstance(w, BetaWeight):
            w = bernoulli.omega_weight_from_beta(w)
        elif not isinstance(w, NormalWeight):
            raise CliError("--weight: rule approx takes a normal weight on the arcsine "
                           "scale, or a beta weight to be moment-matched")
        level = _level(args)
        iv = bernoulli.arcsine_approx_interval(stat, w, level)
        meta["epsilon"] = level.epsilon
        meta["omega_weight"] = f"normal:{w.mu0:g},{w.tau0_sq:g}"
    else:
        raise CliError(f"--rule {rule!r} is not valid for model bernoulli (exact | lr | approx)")
    return iv, meta


def _interval_two_bernoulli(args):
    _require(args, ["--n1", "--n2", "--s1", "--s2"], "model two-bernoulli")
    stat = two_bernoulli.TwoSampleStat(args.n1, args.n2, args.s1, args.s2)
    rule = args.rule or "exact"
    meta = {}
    if rule == "exact":
        if args.weight is not None and not isinstance(args.weight, LogOddsJeffreysInduced):
            raise CliError("--weight: the exact conditional rule uses the built-in "
                           "log-odds weight (logodds)")
        level = _level(args)
        log_qn = two_bernoulli.conditional_log_mixture(stat)
        iv = two_bernoulli.robbins_conditional_interval(stat, level)
        meta["epsilon"] = level.epsilon
        meta["threshold"] = level.log_epsilon + log_qn.value
    elif rule == "approx":
        _require(args, ["--weight"], "rule approx")
        w = _expect_weight(args, NormalWeight)
        level = _level(args)
        iv = two_bernoulli.approx_interval_log_odds(stat, w, level)
        meta["epsilon"] = level.epsilon
    elif rule == "wald":
        iv = two_bernoulli.wald_interval(stat, _conf(args))
        meta["conf"] = _conf(args)
    else:
        raise CliError(f"--rule {rule!r} is not valid for model two-bernoulli "
                       "(exact | approx | wald)")
    return iv, meta


def _expect_weight(args, cls):
    if args.weight is None:
        raise CliError(f"--weight is required and must be a {cls.__name__}")
    if not isinstance(args.weight, cls):
        raise CliError(f"--weight: expected a {cls.__name__} for this model/rule, "
                       f"got {type(args.weight).__name__}")
    return args.weight


def cmd_interval(args) -> int:
    handlers = {"normal": _interval_normal, "bernoulli": _interval_bernoulli,
                "two-bernoulli": _interval_two_bernoulli}
    if args.model not in handlers:
        raise CliError(f"--model must be one of {sorted(handlers)}, got {args.model!r}")
    iv, meta = handlers[args.model](args)
    meta = {"model": args.model, "rule": args.rule or "exact", "seed": args.seed, **meta}
    if args.format == "json":
        print(json.dumps({"lower": iv.lower, "upper": iv.upper, **meta}))
    elif args.format == "csv":
        keys = ["lower", "upper"] + list(meta)
        print(",".join(keys))
        print(",".join([f"{iv.lower:.10g}", f"{iv.upper:.10g}"] + [str(meta[k]) for k in meta]))
    else:
        print(f"{iv.lower:.4f} {iv.upper:.4f}")
        for k, v in meta.items():
            print(f"# {k}={v}")
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_RULE_MAP = {"classical": Rule.CLASSICAL_Z, "lr": Rule.LIKELIHOOD_RATIO,
             "exact": Rule.ROBBINS_EXACT, "approx": Rule.ROBBINS_APPROX}


def cmd_simulate(args) -> int:
    if args.model not in (m.value for m in Model):
        raise CliError(f"--model must be one of {[m.value for m in Model]}, got {args.model!r}")
    model = Model(args.model)
    rule_name = args.rule or ("exact" if model != Model.TWO_BERNOULLI else "approx")
    if rule_name not in _RULE_MAP:
        raise CliError(f"--rule must be one of {sorted(_RULE_MAP)}, got {rule_name!r}")
    rule = _RULE_MAP[rule_name]
    if model == Model.TWO_BERNOULLI:
        _require(args, ["--theta1", "--theta2"], "model two-bernoulli")
        truth = (args.theta1, args.theta2)
    else:
        _require(args, ["--theta"], f"model {model.value}")
        truth = args.theta
    if rule in (Rule.CLASSICAL_Z, Rule.LIKELIHOOD_RATIO):
        level = _conf(args)
        weight = None
    else:
        level = _level(args).epsilon
        if args.weight is None:
            raise CliError(f"rule {rule_name} requires --weight")
        weight = args.weight
    try:
        plan = SequencePlan(model=model, truth=truth, rule=rule, level=level,
                            weight=weight, n_min=args.nmin, n_max=args.nmax,
                            reps=args.reps, seed=args.seed, sigma0_sq=args.sigma2)
    except ValueError as exc:
        raise CliError(str(exc))
    row = run_plan(plan, threads=args.threads)
    report = simulation.TableReport(table="-", rows=(row,))
    _emit_report(report, args)
    return 0


def _emit_report(report, args) -> None:
    if args.format == "json":
        text = report.json_text()
    elif args.format == "plain":
        lines = []
        for r in report.rows:
            lines.append(f"{r.row_label} level={r.level:g}: "
                         f"contradictions={r.contradictions_pct:.2f}% (se {r.se_contra:.3f}), "
                         f"non-coverages={r.noncoverages_pct:.2f}% (se {r.se_noncov:.3f}) "
                         f"[reps={r.reps} n={r.nmin}..{r.nmax} seed={r.seed}]")
        text = "\n".join(lines) + "\n"
    else:
        text = report.csv_text()
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", code=1)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# reproduce-table
# ---------------------------------------------------------------------------

def cmd_reproduce_table(args) -> int:
    table_id = str(args.id).upper()
    if not table_id.startswith("T"):
        table_id = "T" + table_id
    if table_id not in simulation.TABLE_IDS:
        raise CliError(f"--id must be 1..5, got {args.id!r}")
    report = reproduce_table(table_id, reps=args.reps, seed=args.seed, threads=args.threads)
    _emit_report(report, args)
    comps = compare_to_reference(report)
    worst = max(comps, key=lambda c: abs(c.delta))
    outside = [c for c in comps if not c.within]
    print(f"{table_id}: {len(comps)} cells vs bundled reference; "
          f"max |observed-reference| = {abs(worst.delta):.3f} pts "
          f"({worst.metric} at {worst.row_label}, level {worst.level:g})")
    if outside:
        print(f"{len(outside)} cell(s) outside 3 combined SEs:")
        for c in outside:
            print(f"  {c.row_label} level {c.level:g} {c.metric}: "
                  f"observed {c.observed:.2f} vs reference {c.expected:.2f} "
                  f"(tolerance {c.tolerance:.3f})")
    else:
        print("all cells within 3 combined SEs of the reference")
    return 0


# ---------------------------------------------------------------------------
# ville-check
# ---------------------------------------------------------------------------

def cmd_ville_check(args) -> int:
    if args.k is None:
        raise CliError("--k is required")
    if not args.k > 1.0:
        raise CliError(f"--k must exceed 1 for a meaningful bound, got {args.k}")
    model = args.model or "normal"
    if model == "normal":
        w = args.weight if args.weight is not None else NormalWeight(0.0, 1.0)
        if not isinstance(w, NormalWeight):
            raise CliError("--weight: normal model takes a normal weight")
        theta = args.theta if args.theta is not None else 0.0
        path = normal.ville_log_ratio_path(theta, args.sigma2, w)
    elif model == "bernoulli":
        w = args.weight if args.weight is not None else BetaWeight(1.0, 1.0)
        if not isinstance(w, BetaWeight):
            raise CliError("--weight: bernoulli model takes a beta weight")
        theta = args.theta if args.theta is not None else 0.5
        if not (0.0 < theta < 1.0):
            raise CliError(f"--theta must lie in (0, 1) for bernoulli, got {theta}")
        path = bernoulli.ville_log_ratio_path(theta, w)
    else:
        raise CliError(f"--model must be normal or bernoulli, got {model!r}")
    res = engine.verify_ville_inequality(path, k=args.k, n_max=args.nmax,
                                         reps=args.reps, seed=args.seed)
    verdict = "PASS" if res.passed else "FAIL"
    if args.format == "json":
        print(json.dumps({"estimate": res.estimate, "bound": res.bound,
                          "std_error": res.std_error, "crossings": res.crossings,
                          "reps": res.reps, "k": res.k, "n_max": args.nmax,
                          "model": model, "theta": theta, "seed": args.seed,
                          "verdict": verdict}))
    else:
        print(f"crossing estimate {res.estimate:.4f} (se {res.std_error:.4f}) "
              f"vs bound 1/k = {res.bound:.4f}: {verdict}")
        print(f"# model={model} theta={theta} k={args.k} nmax={args.nmax} "
              f"reps={res.reps} seed={args.seed}")
    return 0 if res.passed else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="RNG master seed (default 42, "
                   "or ROBBINS_SEED)")
    p.add_argument("--format", choices=["plain", "csv", "json"], default="plain")
    p.add_argument("--config", type=str, default=None,
                   help="JSON file of option defaults (explicit flags win)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robbins",
                                     description="Anytime-valid confidence sequences: "
                                                 "intervals, simulations, table reproduction.")
    parser.add_argument("--version", action="version", version=f"robbins {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("interval", help="compute one confidence-sequence interval")
    p.add_argument("--model", type=str, default=None)
    p.add_argument("--rule", type=str, default=None,
                   help="normal: classical|exact|nig|approx; bernoulli: exact|lr|approx; "
                        "two-bernoulli: exact|approx|wald (default exact)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--ybar", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None, help="known variance (normal)")
    p.add_argument("--sigma2hat", type=float, default=None, help="MLE variance (normal, unknown-variance rules)")
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--n1", type=int, default=None)
    p.add_argument("--n2", type=int, default=None)
    p.add_argument("--s1", type=int, default=None)
    p.add_argument("--s2", type=int, default=None)
    p.add_argument("--weight", type=str, default=None,
                   help="family:params, e.g. normal:0,1 | beta:0.5,0.5 | "
                        "nig:1,8,2,1 | logodds")
    p.add_argument("--epsilon", type=float, default=None,
                   help=f"persistence epsilon (default {DEFAULT_EPSILON})")
    p.add_argument("--conf", type=float, default=None, help="confidence level for "
                   "classical/lr/wald rules")
    _add_common(p)
    p.set_defaults(func=cmd_interval)

    p = sub.add_parser("simulate", help="run one simulation cell")
    p.add_argument("--model", type=str, default=None)
    p.add_argument("--rule", type=str, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--theta1", type=float, default=None)
    p.add_argument("--theta2", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--weight", type=str, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--conf", type=float, default=None)
    p.add_argument("--nmin", type=int, default=10)
    p.add_argument("--nmax", type=int, default=4000)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce-table", help="re-run a bundled table grid")
    p.add_argument("--id", type=str, default=None, help="table id, 1..5")
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", type=str, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_reproduce_table, format="csv")

    p = sub.add_parser("ville-check", help="Monte Carlo check of the crossing bound")
    p.add_argument("--model", type=str, default="normal")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--weight", type=str, default=None)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--nmax", type=int, default=2000)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    _add_common(p)
    p.set_defaults(func=cmd_ville_check)

    return parser


def _load_config(argv):
    """Extract --config from argv and return its JSON dict (or {})."""
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise CliError("--config requires a file path")
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            continue
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise CliError(f"--config: cannot read {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise CliError(f"--config: invalid JSON in {path}: {exc}")
        if not isinstance(cfg, dict):
            raise CliError("--config: file must contain a JSON object")
        return {k.replace("-", "_"): v for k, v in cfg.items()}
    return {}


def _inject_config(argv, cfg):
    """Splice config entries in as options right after the subcommand; options
    given explicitly on the command line come later and therefore win."""
    if not cfg:
        return argv
    for i, tok in enumerate(argv):
        if not tok.startswith("-"):
            inject = []
            for key, value in cfg.items():
                inject += [f"--{key.replace('_', '-')}", str(value)]
            return argv[: i + 1] + inject + argv[i + 1:]
    raise CliError("--config requires a command")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _inject_config(argv, _load_config(argv))
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_help()
            return 2
        if getattr(args, "seed", None) is None:
            args.seed = _default_seed()
        if isinstance(getattr(args, "weight", None), str):
            args.weight = parse_weight(args.weight)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
