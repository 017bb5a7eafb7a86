"""Command line entry point: ``lipbo run | report | audit-benchmarks | theory``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report
from .benchmarks import REGISTRY, lookup, reference_optima_audit
from .harness import METHODS, RunConfig, aggregate, load_config_file, parse_seeds, run_experiment
from .lipschitz import KAPPA_DEFAULT

log = logging.getLogger("lipbo")

# flag dest -> RunConfig field, for flags that may also come from a config file
_RUN_FIELDS = {
    "benchmark": "benchmark", "acq": "acquisition", "lbo": "lbo", "l_mode": "l_mode", "kappa": "kappa",
    "iters": "iterations", "seeds": "seeds", "init_points": "init_points", "explore_every": "explore_every",
    "direct_budget": "direct_budget", "ts_candidates": "ts_candidates", "beta": "beta", "beta_c": "beta_c",
    "noise_sd": "noise_sd", "n_starts": "n_starts", "true_l_samples": "true_l_samples", "out": "out",
}


def _add_run_parser(sub):
    p = sub.add_parser("run", help="run BO / LBO / random search on one benchmark")
    p.add_argument("--config", help="flat key = value file with RunConfig fields; flags override it")
    p.add_argument("--benchmark", choices=REGISTRY)
    p.add_argument("--acq", choices=METHODS)
    p.add_argument("--lbo", choices=("off", "truncated", "ar"))
    p.add_argument("--l-mode", help="growing | known:<value> | true")
    p.add_argument("--kappa", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--seeds", type=parse_seeds, help="N for seeds 1..N, or a comma list")
    p.add_argument("--init-points", type=int)
    p.add_argument("--explore-every", type=int)
    p.add_argument("--direct-budget", type=int)
    p.add_argument("--ts-candidates", type=int)
    p.add_argument("--beta", help="'practical' or a constant, e.g. 1e16")
    p.add_argument("--beta-c", type=float)
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--n-starts", type=int)
    p.add_argument("--true-l-samples", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--compare", action="store_true",
                   help="also run the plain-BO counterpart and random search into the same figure group")
    p.add_argument("--log-scale", choices=("auto", "on", "off"), default="auto")


def _run_config(args) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for dest, fld in _RUN_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[fld] = v
    if "benchmark" not in values:
        raise SystemExit("lipbo run: --benchmark is required (flag or config file)")
    if "out" not in values:
        raise SystemExit("lipbo run: --out is required (flag or config file)")
    return RunConfig(**values)


def _configs_for(cfg: RunConfig, compare: bool) -> list[RunConfig]:
    out = [cfg]
    if compare:
        if cfg.lbo != "off":
            out.append(replace(cfg, lbo="off"))
        if cfg.acquisition != "random":
            out.append(replace(cfg, acquisition="random", lbo="off"))
    return out


def cmd_run(args) -> int:
    cfg = _run_config(args)
    out = report.validate_out_dir(cfg.out)
    bench = lookup(cfg.benchmark)
    log_scale = bench.log_scale_error if args.log_scale == "auto" else args.log_scale == "on"
    traces = []
    for c in _configs_for(cfg, args.compare):
        traces += run_experiment(c, progress=lambda tr: log.info("%s %s seed %d done", tr.benchmark, tr.method, tr.seed))
    rows = aggregate(traces)
    paths = report.emit_outputs(rows, traces, out, cfg.benchmark, log_scale)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("benchmark", "method", "seed", "final_abs_error", "failed"))
    for tr in traces:
        err = "" if tr.failed or not tr.records else repr(tr.final_error)
        w.writerow((tr.benchmark, tr.method, tr.seed, err, int(tr.failed)))
    print(f"# summary: {paths['csv']}")
    print(f"# figure: {paths['svg']}")
    return 1 if any(tr.failed for tr in traces) else 0


def cmd_report(args) -> int:
    out = Path(args.dir)
    if not (out / "traces").is_dir():
        raise SystemExit(f"lipbo report: no traces under {out}")
    for r in report.rebuild_reports(out, lambda name: lookup(name).log_scale_error if name in REGISTRY else False):
        print(f"{r['benchmark']},{r['csv']},{r['svg']}")
    return 0


def cmd_audit(args) -> int:
    names = args.benchmark or REGISTRY
    ok = True
    for name in names:
        rep = reference_optima_audit(lookup(name), n=args.n, seed=args.seed)
        print(rep.line())
        ok &= rep.passed
    return 0 if ok else 1


def cmd_harmless(args) -> int:
    from .theory import harmless_pruning_experiment

    fn = lookup(args.benchmark)
    out = report.validate_out_dir(args.out) if args.out else None
    results = [harmless_pruning_experiment(fn, args.eps, m, args.trials, args.seed, args.kappa)
               for m in ("none", "known", "growing")]
    base = results[0].mean_evaluations
    print("mode,mean_evaluations,median_evaluations,ratio_to_none,mean_rejected,censored")
    for r in results:
        print(f"{r.mode},{r.mean_evaluations!r},{r.median_evaluations!r},{r.mean_evaluations / base!r},"
              f"{float(np.mean(r.rejected))!r},{r.n_censored}")
    if out:
        path = out / f"harmless_{report.slug(args.benchmark)}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("mode", "trial", "evaluations", "rejected", "censored"))
            for r in results:
                for i in range(len(r.evaluations)):
                    w.writerow((r.mode, i, int(r.evaluations[i]), int(r.rejected[i]), int(r.censored[i])))
        _plot_harmless(results, out / f"harmless_{report.slug(args.benchmark)}.svg", args.benchmark)
        print(f"# per-trial: {path}")
    return 0


def _plot_harmless(results, path, title):
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    for k, r in enumerate(results):
        ev = np.sort(r.evaluations)
        (line,) = ax.step(ev, np.arange(1, len(ev) + 1) / len(ev), where="post", label=r.mode)
        line.set_gid(r.mode)
    ax.set_xscale("log")
    ax.set_xlabel("evaluations to reach epsilon-optimality")
    ax.set_ylabel("fraction of trials")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def cmd_regret(args) -> int:
    from .theory import regret_study

    out = report.validate_out_dir(args.out) if args.out else None
    tol = args.ar_tolerance if args.ar_tolerance == "noise" else float(args.ar_tolerance)
    study = regret_study(args.grid, args.T, range(args.seeds), args.delta, args.beta == "literal",
                         args.length_scale, args.noise_sd, tol)
    print("policy,seed,R_T,bound,within_bound,gamma_T,maximizer_ucb_rejected,maximizer_outside_envelope,fallbacks")
    for policy, recs in study.items():
        for r in recs:
            print(f"{policy},{r.seed},{r.R_T!r},{r.bound!r},{int(r.within_bound)},{r.gamma_T!r},"
                  f"{r.maximizer_ucb_rejected},{r.maximizer_outside_envelope},{r.fallbacks}")
    for policy, recs in study.items():
        print(f"# {policy} mean R(T) = {np.mean([r.R_T for r in recs])!r}")
    if out:
        import matplotlib.pyplot as plt

        path = out / "regret.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("round", "policy", "mean_cumulative_regret", "std_cumulative_regret"))
            for policy, recs in study.items():
                C = np.vstack([r.cumulative for r in recs])
                for t in range(C.shape[1]):
                    w.writerow((t + 1, policy, repr(float(C[:, t].mean())), repr(float(C[:, t].std()))))
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        for policy, recs in study.items():
            C = np.vstack([r.cumulative for r in recs])
            (line,) = ax.plot(np.arange(1, C.shape[1] + 1), C.mean(axis=0), label=policy)
            line.set_gid(policy)
        ax.set_xlabel("round")
        ax.set_ylabel("mean cumulative regret")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(out / "regret.svg", metadata={"Date": None})
        plt.close(fig)
        print(f"# per-round: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lipbo", description="Lipschitz-aware Bayesian optimization experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)

    p = sub.add_parser("report", help="rebuild CSV and SVG from the traces in a directory")
    p.add_argument("dir")

    p = sub.add_parser("audit-benchmarks", help="check every reference optimum by dense scanning")
    p.add_argument("--benchmark", action="append", choices=REGISTRY)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)

    theory = sub.add_parser("theory", help="desk checks of the pruning and regret arguments")
    tsub = theory.add_subparsers(dest="theory_command", required=True)
    p = tsub.add_parser("harmless", help="paired random search with and without pruning")
    p.add_argument("--benchmark", choices=REGISTRY, default="branin-2")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kappa", type=float, default=KAPPA_DEFAULT)
    p.add_argument("--out")
    p = tsub.add_parser("regret", help="GP-UCB vs AR-UCB on a GP-drawn 1-d grid")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--beta", choices=("literal", "srinivas"), default="literal")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--noise-sd", type=float, default=1e-3)
    p.add_argument("--length-scale", type=float, default=0.1)
    p.add_argument("--ar-tolerance", default="0", help="'noise' or a number")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args)
    if args.command == "report":
        return cmd_report(args)
    if args.command == "audit-benchmarks":
        return cmd_audit(args)
    if args.theory_command == "harmless":
        return cmd_harmless(args)
    return cmd_regret(args)


if __name__ == "__main__":
    sys.exit(main())
