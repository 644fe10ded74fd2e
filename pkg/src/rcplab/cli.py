"""Command-line front end.

Exit-code contract: 0 = ran and every enabled verification passed;
1 = ran to completion but at least one verification failed; 2 = usage or
configuration error.  Seeds default to a fixed constant so bare invocations
are reproducible; output bytes are identical for identical (argv, config,
seed) regardless of --workers.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, analysis, experiments, rngstream
from .engine import SimConfig, simulate_trace, simulate
from .graph import GraphConstructionError, build as build_graph, spanning_walk
from .heavytail import HeavyTailSpec, spec_from_config

DEFAULT_SEED = 20260809

CONFIG_KEYS = {
    "dist.family": ("family", str),
    "dist.alpha": ("alpha", float),
    "dist.kappa": ("kappa", float),
    "lambda": ("lam", float),
    "graph": ("graph", str),
    "horizon": ("horizon", float),
    "seed": ("seed", int),
    "workers": ("workers", int),
    "format": ("format", str),
    "output": ("output", str),
}


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return f"{x:.12g}"
    return str(x)


def load_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected 'key = value'")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def apply_config(args: argparse.Namespace, raw: dict):
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        dest, conv = CONFIG_KEYS[key]
        if getattr(args, dest, None) is None and hasattr(args, dest):
            setattr(args, dest, conv(value))


def emit(args, header, rows, checks, extra=None):
    """Write rows as CSV or a JSON summary; return the exit code."""
    ok = all(p for _, p in checks) if checks else True
    if args.format == "json":
        doc = {
            "version": __version__,
            "config": {k: v for k, v in sorted(vars(args).items())
                       if k not in ("func",) and v is not None},
            "rows": rows,
            "checks": [{"name": n, "pass": bool(p)} for n, p in checks],
            "pass": bool(ok),
        }
        if extra:
            doc.update(extra)
        text = json.dumps(doc, indent=2, default=fmt) + "\n"
    else:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(fmt(row[k]) for k in header))
        text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def _spec(args) -> HeavyTailSpec:
    return spec_from_config(args.family, args.alpha, args.kappa)


def _floats(text: str):
    return tuple(float(x) for x in str(text).split(",") if x != "")


# ------------------------------------------------------------------ commands

def cmd_simulate(args):
    g = build_graph(args.graph)
    cfg = SimConfig(
        graph=g, dist=_spec(args), lam=args.lam, horizon=args.horizon,
        seed=args.seed, v0=args.v0,
        checkpoints=_floats(args.checkpoints) if args.checkpoints else (),
        trace=bool(args.trace_events or args.trace_marks),
    )
    if cfg.trace:
        result, trace = simulate_trace(cfg)
        if args.trace_events:
            with open(args.trace_events, "w", newline="") as fh:
                fh.write(trace.to_csv())
        if args.trace_marks:
            with open(args.trace_marks, "w", newline="") as fh:
                fh.write(trace.marks_csv())
    else:
        result = simulate(cfg)
    doc = {
        "version": __version__,
        "config": {
            "graph": args.graph, "alpha": args.alpha, "family": args.family,
            "kappa": args.kappa, "lambda": args.lam, "horizon": args.horizon,
            "v0": args.v0, "seed": args.seed,
            "checkpoints": list(_floats(args.checkpoints) if args.checkpoints else ()),
        },
        "result": result.to_dict(),
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args):
    graphs = [build_graph(k) for k in args.graphs.split(",")]
    rows = experiments.survival_sweep(
        alphas=_floats(args.alphas), graphs=graphs, lam=args.lam,
        horizons=_floats(args.horizons), runs_per_cell=args.runs,
        master_seed=args.seed, workers=args.workers,
        family=args.family, kappa=args.kappa,
    )
    header = ["alpha", "graph", "n_vertices", "lambda", "horizon", "runs",
              "survivors", "p_hat", "ci_lo", "ci_hi"]
    return emit(args, header, rows, checks=[])


def cmd_verify_et(args):
    rows = experiments.verify_et(_spec(args), _floats(args.t), args.h,
                                 args.runs, args.seed)
    header = ["alpha", "t", "h", "runs", "estimate", "theory", "rel_err", "pass"]
    checks = [(f"et@t={r['t']:g}", r["pass"]) for r in rows]
    return emit(args, header, rows, checks)


def cmd_verify_dl(args):
    row = experiments.verify_dl(_spec(args), args.t, args.n, args.seed,
                                threshold=args.threshold,
                                use_increment_constant=args.increment_constant)
    header = ["alpha", "t", "n", "ks", "threshold", "pass"]
    return emit(args, header, [row], [(f"dl@t={args.t:g}", row["pass"])])


def cmd_verify_tailbound(args):
    values = tuple(int(v) if args.which == "prop41" else float(v)
                   for v in str(args.param).split(","))
    rows = experiments.tail_bound_check(_spec(args), args.t, values, args.slack,
                                        args.runs, args.which, args.seed)
    header = ["which", "alpha", "t", "param", "slack", "runs", "empirical",
              "ci_lo", "ci_hi", "bound", "pass"]
    checks = [(f"{args.which}@{r['param']}", r["pass"]) for r in rows]
    return emit(args, header, rows, checks)


def cmd_theory_thresholds(args):
    alphas = [args.alpha]
    if args.grid:
        alphas = list(np.linspace(0.5, 1.0, args.grid + 2)[1:-1])
    rows, checks = [], []
    for a in alphas:
        rep = analysis.thresholds(a)
        rows.append({
            "alpha": rep.alpha, "v_minus": rep.v_minus, "v_plus": rep.v_plus,
            "gap": rep.gap,
            "indeterminate": '"' + ",".join(str(k) for k in rep.indeterminate_sizes) + '"',
        })
        checks.append((f"gap<1@alpha={a:.6g}", rep.gap < 1.0))
    header = ["alpha", "v_minus", "v_plus", "gap", "indeterminate"]
    return emit(args, header, rows, checks)


def cmd_theory_elogy(args):
    quad = analysis.expected_log_max(args.alpha, args.m)
    rng = rngstream.stream(args.seed, rngstream.SHARD)
    samples = np.log(analysis.sample_dl_max(args.alpha, args.m, args.mc_samples, rng))
    mc = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(args.mc_samples))
    below = args.m < analysis.extinction_size_bound(args.alpha)
    row = {
        "alpha": args.alpha, "M": args.m, "elogy_quadrature": quad,
        "elogy_mc": mc, "mc_stderr": stderr, "below_threshold": below,
    }
    checks = [("quad_vs_mc_3se", abs(quad - mc) <= 3 * stderr)]
    if below:
        checks.append(("negative_below_threshold", quad < 0))
    header = ["alpha", "M", "elogy_quadrature", "elogy_mc", "mc_stderr",
              "below_threshold"]
    return emit(args, header, [row], checks)


def cmd_theory_domination(args):
    n_grid = round(math.exp(args.log_n))
    if n_grid * n_grid > 4_000_000:
        rep = analysis.cond2_report(args.alpha, args.m, theta=args.theta,
                                    eta=args.eta, log_n=args.log_n, rho=args.rho)
        row = {
            "alpha": rep["alpha"], "M": rep["m"], "theta": rep["theta"],
            "eta": rep["eta"], "N": rep["grid_n"], "rho": rep["rho"],
            "C": rep["c_norm"], "theta_moment": rep["theta_moment_bound"],
            "mu_bound": rep["bracket_bound"], "cond2_ok": rep["ok"],
        }
    else:
        try:
            law = analysis.build_dominating_law(
                args.alpha, args.m, theta=args.theta, eta=args.eta,
                log_n=args.log_n, rho=args.rho,
            )
        except analysis.DominationConstructionError as exc:
            sys.stderr.write(f"domination construction failed: {exc}\n")
            return 1
        row = {
            "alpha": law.alpha, "M": law.m, "theta": law.theta, "eta": law.eta,
            "N": law.grid_n, "rho": law.rho, "C": law.c_norm,
            "theta_moment": law.theta_moment, "mu_bound": law.mu_bound,
            "cond2_ok": law.theta_moment <= law.mu_bound / law.c_norm,
        }
    header = ["alpha", "M", "theta", "eta", "N", "rho", "C", "theta_moment",
              "mu_bound", "cond2_ok"]
    return emit(args, header, [row], [("cond2", row["cond2_ok"])])


def cmd_theory_appendix_g(args):
    rows, checks = [], []
    norm = analysis.d_alpha(args.alpha) * analysis.appendix_g_infinity(args.alpha)
    rows.append({"x": float("inf"), "value": norm, "kind": "d_alpha*g"})
    checks.append(("normalization", abs(norm - 1.0) <= 1e-8))
    if args.negativity:
        grid = np.exp(np.linspace(math.log(1.0 + 1e-9), math.log(args.x_max),
                                  args.points))
        rep = analysis.appendix_G_negativity(args.alpha, grid)
        for x, v in zip(rep.x_grid, rep.values):
            rows.append({"x": x, "value": v, "kind": "G"})
        checks.append(("G_negative_on_grid", rep.all_negative))
        checks.append(("G_at_1_zero", rep.g_at_one == 0.0))
    header = ["x", "value", "kind"]
    return emit(args, header, rows, checks)


def cmd_probe_chain(args):
    g = build_graph(args.graph)
    spec = _spec(args)
    if args.ratio_check:
        law = analysis.build_dominating_law(args.alpha, g.n_vertices - 1,
                                            eta=args.eta, log_n=args.log_n,
                                            rho=args.rho, require_cond2=False)
        rep = experiments.chain_ratio_domination(law, spec, args.t_tilde,
                                                 args.chains, args.seed)
        row = {
            "n_chains": rep["n_chains"], "t_tilde": rep["t_tilde"],
            "violations": rep["violations"],
            "worst_margin_over_3se": rep["worst_margin_over_3se"],
            "pass": rep["pass"],
        }
        header = ["n_chains", "t_tilde", "violations", "worst_margin_over_3se",
                  "pass"]
        return emit(args, header, [row], [("ratio_domination", rep["pass"])])
    chain = experiments.extinction_chain(g, spec, args.t_star, args.steps,
                                         args.seed)
    rows = [{"step": i + 1, "S_n": s, "X_n": x, "argmax": a}
            for i, (s, x, a) in enumerate(zip(chain.S, chain.X,
                                              chain.argmax_history))]
    header = ["step", "S_n", "X_n", "argmax"]
    return emit(args, header, rows, checks=[])


def cmd_probe_stairway(args):
    from scipy.stats import gamma as gamma_dist

    g = build_graph(args.graph)
    walk = spanning_walk(g)
    samples = experiments.stairway(g, args.lam, args.t, args.runs, args.seed)
    ks = analysis.ks_statistic(samples,
                               gamma_dist(a=walk.length, scale=1.0 / args.lam).cdf)
    crit = 1.63 / math.sqrt(args.runs)  # asymptotic 1% point
    rows = [{"l": walk.length, "lambda": args.lam, "t": args.t,
             "runs": args.runs, "ks": ks, "critical": crit, "pass": ks < crit}]
    header = ["l", "lambda", "t", "runs", "ks", "critical", "pass"]
    return emit(args, header, rows, [("stairway_erlang_ks", ks < crit)])


def cmd_probe_schedule(args):
    g = build_graph(args.graph)
    sched = experiments.build_schedule(g, args.alpha, args.lam,
                                       epsilon=args.epsilon, gamma=args.gamma,
                                       n_max=args.n_max)
    if not sched.feasible:
        rows = [{"n": "", "b_n": "", "c_n": "", "t_n": "",
                 "note": '"' + sched.note + '"'}]
        header = ["n", "b_n", "c_n", "t_n", "note"]
        return emit(args, header, rows, checks=[])
    if args.probe_runs:
        spec = _spec(args)
        rows = experiments.probe_survival_events(sched, spec, args.probe_runs,
                                                 args.seed)
        header = ["n", "t_n", "b_n", "c_n", "c_n_used", "runs", "a_fail_freq",
                  "a_bound", "b_fail_freq", "b_bound"]
        return emit(args, header, rows, checks=[])
    rows = [{"n": n, "b_n": b, "c_n": c, "t_n": t,
             "note": '""' if sched.asymptotic_regime else '"driver-sum t_n"'}
            for n, b, c, t in sched.entries]
    header = ["n", "b_n", "c_n", "t_n", "note"]
    return emit(args, header, rows, checks=[])


def cmd_probe_audit(args):
    g = build_graph(args.graph)
    rep = experiments.necessary_condition_audit(
        g, _spec(args), args.lam, args.horizon, args.t_star, args.runs,
        args.seed,
    )
    header = ["runs", "intervals_checked", "violations", "pass"]
    return emit(args, header, [rep], [("zero_violations", rep["pass"])])


# -------------------------------------------------------------------- parser

def _add_common(sp, *, dist=True):
    sp.add_argument("--seed", type=int, default=None,
                    help="master seed (64-bit; default fixed constant)")
    sp.add_argument("--workers", type=int, default=None,
                    help="worker pool size (output is worker-count independent)")
    sp.add_argument("--output", default=None, help="output path (default stdout)")
    sp.add_argument("--format", choices=("csv", "json"), default=None,
                    help="output format (default csv)")
    sp.add_argument("--config", default=None,
                    help="flat key=value config file; flags override it")
    if dist:
        sp.add_argument("--alpha", type=float, default=None,
                        help="cure tail index in (0,1)")
        sp.add_argument("--family", default=None,
                        help="waiting-time family: plain | logcorrected")
        sp.add_argument("--kappa", type=float, default=None,
                        help="log-correction exponent (logcorrected only)")


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rcp",
        description="Renewal contact process laboratory: simulation and "
                    "numerical verification campaigns.",
    )
    p.add_argument("--version", action="version", version=f"rcp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one replication, emit JSON result")
    _add_common(s)
    s.add_argument("--graph", default=None,
                   help="complete:K | path:K | cycle:K | star:K | custom:FILE")
    s.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="transmission rate per edge (events/time)")
    s.add_argument("--horizon", type=float, default=None, help="simulation horizon")
    s.add_argument("--v0", type=int, default=0, help="initially infected vertex")
    s.add_argument("--checkpoints", default=None,
                   help="comma-separated survival checkpoint times")
    s.add_argument("--trace-events", default=None,
                   help="write the event trace CSV here")
    s.add_argument("--trace-marks", default=None,
                   help="write the full mark record CSV here")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="survival sweep over (alpha, graph) cells")
    _add_common(s)
    s.add_argument("--alphas", default=None, help="comma-separated alphas")
    s.add_argument("--graphs", default=None, help="comma-separated graph specs")
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--horizons", default=None,
                   help="comma-separated horizons (one run serves all)")
    s.add_argument("--runs", type=int, default=400, help="replications per cell")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="theorem verification campaigns")
    vsub = v.add_subparsers(dest="verify_what", required=True)

    s = vsub.add_parser("et", help="renewal increment vs C_alpha h/m(t)")
    _add_common(s)
    s.add_argument("--t", default=None, help="comma-separated window base times")
    s.add_argument("--h", type=float, default=1.0, help="window width")
    s.add_argument("--runs", type=int, default=100000, help="clocks per t")
    s.set_defaults(func=cmd_verify_et)

    s = vsub.add_parser("dl", help="excess-fraction limit law KS test")
    _add_common(s)
    s.add_argument("--t", type=float, default=None, help="evaluation time")
    s.add_argument("--n", type=int, default=None, help="number of clocks")
    s.add_argument("--threshold", type=float, default=0.02, help="KS pass bound")
    s.add_argument("--increment-constant", action="store_true",
                   help="normalize with the increment constant C_alpha instead "
                        "of D_alpha (regression: total mass is then 1/(1-alpha))")
    s.set_defaults(func=cmd_verify_dl)

    s = vsub.add_parser("tailbound", help="one-sided excess tail bounds")
    _add_common(s)
    s.add_argument("--which", choices=("corollary32", "prop41"), required=True)
    s.add_argument("--t", type=float, default=None)
    s.add_argument("--param", default=None,
                   help="m (corollary32) or comma-separated n values (prop41)")
    s.add_argument("--slack", type=float, default=None,
                   help="epsilon (corollary32) or eta (prop41)")
    s.add_argument("--runs", type=int, default=10000)
    s.set_defaults(func=cmd_verify_tailbound)

    t = sub.add_parser("theory", help="closed forms and quadrature checks")
    tsub = t.add_subparsers(dest="theory_what", required=True)

    s = tsub.add_parser("thresholds", help="survival/extinction size thresholds")
    _add_common(s)
    s.add_argument("--grid", type=int, default=0,
                   help="emit this many alphas across (1/2,1) instead")
    s.set_defaults(func=cmd_theory_thresholds)

    s = tsub.add_parser("elogy", help="E[log max] criterion, quadrature vs MC")
    _add_common(s)
    s.add_argument("--m", type=int, default=None, help="number of maxima M")
    s.add_argument("--mc-samples", type=int, default=1000000)
    s.set_defaults(func=cmd_theory_elogy)

    s = tsub.add_parser("domination", help="build the dominating law, check moments")
    _add_common(s)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--eta", type=float, default=0.1)
    s.add_argument("--log-n", type=int, default=3, help="grid N = round(e^log_n)")
    s.add_argument("--rho", type=float, default=1e-4)
    s.set_defaults(func=cmd_theory_domination)

    s = tsub.add_parser("appendix-g", help="g normalization and G negativity")
    _add_common(s)
    s.add_argument("--negativity", action="store_true")
    s.add_argument("--x-max", type=float, default=1e6)
    s.add_argument("--points", type=int, default=61)
    s.set_defaults(func=cmd_theory_appendix_g)

    pr = sub.add_parser("probe", help="machinery probes")
    psub = pr.add_subparsers(dest="probe_what", required=True)

    s = psub.add_parser("chain", help="extinction interval chain")
    _add_common(s)
    s.add_argument("--graph", default=None)
    s.add_argument("--t-star", type=float, default=10.0)
    s.add_argument("--steps", type=int, default=20)
    s.add_argument("--ratio-check", action="store_true",
                   help="run the domination atom check instead of one chain")
    s.add_argument("--t-tilde", type=float, default=2e5)
    s.add_argument("--chains", type=int, default=10000)
    s.add_argument("--eta", type=float, default=0.1)
    s.add_argument("--log-n", type=int, default=3)
    s.add_argument("--rho", type=float, default=1e-4)
    s.set_defaults(func=cmd_probe_chain)

    s = psub.add_parser("stairway", help="transmission cascade along the walk")
    _add_common(s, dist=False)
    s.add_argument("--graph", default=None)
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--runs", type=int, default=10000)
    s.set_defaults(func=cmd_probe_stairway)

    s = psub.add_parser("schedule", help="interval schedule and event probes")
    _add_common(s)
    s.add_argument("--graph", default=None)
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--n-max", type=int, default=60)
    s.add_argument("--probe-runs", type=int, default=0,
                   help="if set, probe the A_n/B_n event frequencies")
    s.set_defaults(func=cmd_probe_schedule)

    s = psub.add_parser("audit", help="necessary-condition interval audit")
    _add_common(s)
    s.add_argument("--graph", default=None)
    s.add_argument("--lambda", dest="lam", type=float, default=None)
    s.add_argument("--horizon", type=float, default=None)
    s.add_argument("--t-star", type=float, default=10.0)
    s.add_argument("--runs", type=int, default=1000)
    s.set_defaults(func=cmd_probe_audit)

    return p


_REQUIRED = {
    cmd_simulate: ("graph", "alpha", "lam", "horizon"),
    cmd_sweep: ("alphas", "graphs", "lam", "horizons"),
    cmd_verify_et: ("alpha", "t"),
    cmd_verify_dl: ("alpha", "t", "n"),
    cmd_verify_tailbound: ("alpha", "t", "param", "slack"),
    cmd_theory_thresholds: ("alpha",),
    cmd_theory_elogy: ("alpha", "m"),
    cmd_theory_domination: ("alpha", "m"),
    cmd_theory_appendix_g: ("alpha",),
    cmd_probe_chain: ("graph", "alpha"),
    cmd_probe_stairway: ("graph", "lam"),
    cmd_probe_schedule: ("graph", "alpha", "lam"),
    cmd_probe_audit: ("graph", "alpha", "lam", "horizon"),
}

_DEFAULTS = {"family": "plain", "kappa": 0.0, "seed": DEFAULT_SEED,
             "workers": 1, "format": "csv"}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            apply_config(args, load_config(args.config))
        for key, val in _DEFAULTS.items():
            if getattr(args, key, False) is None:
                setattr(args, key, val)
        missing = [k for k in _REQUIRED.get(args.func, ())
                   if getattr(args, k, None) is None]
        if missing:
            raise ValueError(
                f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}"
            )
        alpha = getattr(args, "alpha", None)
        if alpha is not None and not 0 < alpha < 1:
            raise ValueError(f"alpha must lie in (0,1), got {alpha}")
        return args.func(args)
    except (ValueError, GraphConstructionError, OSError) as exc:
        sys.stderr.write(f"rcp: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
