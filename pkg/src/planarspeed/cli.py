"""Command line entry point: ``planarspeed <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis, direct, harness, quadrature, reduced
from .errors import PlanarSpeedError
from .nonlinearity import from_json, validate

DEFAULT_G = '{"family": "shifted_cosine", "a": 2.0, "b": 1.0}'


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _emit(obj):
    print(json.dumps(harness._jsonable(obj), indent=2, sort_keys=True))


def _add_model(p, with_p=True):
    p.add_argument("--g", default=DEFAULT_G, help="forcing as JSON")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=0.0)
    if with_p:
        p.add_argument("--p", type=float, default=1.0)


def _sweep_config(args, kind):
    if args.config:
        cfg = harness.ExperimentConfig.load(args.config)
        cfg.kind = kind
    else:
        d = {"kind": kind, "g": json.loads(args.g), "eps": _floats(args.eps), "p": _floats(args.p),
             "alpha": args.alpha, "numerics": {}, "direct": {}}
        if getattr(args, "N", None):
            d["numerics"]["N"] = args.N
        if getattr(args, "T", None):
            d["numerics"]["T"] = args.T
        if getattr(args, "band", False):
            d["numerics"]["band"] = True
        if kind == "sandwich":
            d["direct"] = {"L": args.L, "T": args.direct_T, "nodes_per_period": args.nodes_per_period,
                           "v0": json.loads(args.v0)}
        cfg = harness.ExperimentConfig.from_dict(d)
    if args.out_dir:
        cfg.out_dir = args.out_dir
    cfg.jobs = args.jobs
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _run_sweep(args, kind):
    _, summary = harness.run_config(_sweep_config(args, kind))
    _emit(summary)
    return 0 if summary["pass"] else 1


def cmd_effective_speed(args):
    g = from_json(args.g)
    _emit(quadrature.effective_speed(abs(args.p), g).to_dict())
    return 0


def cmd_validate_g(args):
    rep = validate(from_json(args.g), args.samples)
    _emit(rep.to_dict())
    return 0 if rep.ok else 1


def cmd_run_chi(args):
    g = from_json(args.g)
    params = reduced.ModelParams(args.eps, args.alpha, abs(args.p))
    traj = reduced.solve_chi(params, g, reduced.PeriodicGrid(args.N), T=args.T, dt=args.dt,
                             sample_every=args.sample_every, scheme=args.scheme)
    return _finish_speed_run(args, params, g, traj)


def cmd_run_ode(args):
    g = from_json(args.g)
    params = reduced.ModelParams(args.eps, args.alpha, 0.0)
    traj = reduced.solve_ode_p0(params, g, T=args.T, dt=args.dt, sample_every=args.sample_every)
    return _finish_speed_run(args, params, g, traj)


def _finish_speed_run(args, params, g, traj):
    if args.out:
        traj.to_csv(args.out)
    est = analysis.extract_speed(traj, params, raise_nonstationary=False)
    bounds = analysis.check_speed_bounds(est, params, g)
    c_p = quadrature.effective_speed(params.p_norm, g)
    _emit({"meta": traj.meta, "estimate": est.to_dict(), "bounds": bounds, "effective_speed": c_p.to_dict()})
    return 0 if bounds["pass"] and est.stationary else 1


def cmd_run_direct(args):
    g = from_json(args.g)
    params = reduced.ModelParams(args.eps, args.alpha, abs(args.p))
    v0 = json.loads(args.v0)
    datum = direct.InitialDatum(args.p, **v0)
    if args.M:
        domain = direct.LineDomain(args.L, args.M)
    else:
        domain = harness.build_domain(args.eps, args.p, {"L": args.L, "M": None,
                                                         "nodes_per_period": args.nodes_per_period})
    traj = direct.solve_direct(datum, params, g, domain, args.T, dt=args.dt)
    if args.out:
        traj.write_snapshot(args.out)
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        for i, t in enumerate(_floats(args.times) if args.times else []):
            k = min(range(len(traj.t)), key=lambda j: abs(traj.t[j] - t))
            traj.write_snapshot(f"{stem}_t{i}.csv", k)
    _emit({"meta": traj.meta, "t_final": traj.t[-1]})
    return 0


def cmd_extract_speed(args):
    params = reduced.ModelParams(args.eps, args.alpha, abs(args.p))
    traj = reduced.Trajectory.from_csv(args.traj)
    est = analysis.extract_speed(traj, params, args.window, raise_nonstationary=False)
    _emit({"estimate": est.to_dict(), "pass": est.stationary})
    return 0 if est.stationary else 1


def cmd_check_band(args):
    params = reduced.ModelParams(args.eps, args.alpha, abs(args.p))
    short = reduced.Trajectory.from_csv(args.short)
    long = reduced.Trajectory.from_csv(args.long)
    e1 = analysis.extract_speed(short, params, args.window, raise_nonstationary=False)
    e2 = analysis.extract_speed(long, params, args.window, raise_nonstationary=False)
    rep = analysis.band_check(short, e1, long, e2)
    _emit(rep)
    return 0 if rep["pass"] else 1


def cmd_check_bernstein(args):
    if not args.traj:
        return _run_sweep(args, "bernstein-sweep")
    g = from_json(args.g)
    pairs = []
    for item in args.traj:
        eps, _, path = item.partition("=")
        pairs.append((float(eps), path))
    pairs.sort(key=lambda pr: -pr[0])
    p = abs(_floats(args.p)[0])
    plist = [reduced.ModelParams(e, args.alpha, p) for e, _ in pairs]
    trajs = [reduced.Trajectory.from_csv(path) for _, path in pairs]
    fit = analysis.bernstein_scaling(trajs, plist, g)
    osc = analysis.oscillation_check(trajs, plist)
    _emit({"scaling_fit": fit.to_dict(), "oscillation": osc, "pass": fit.passed and osc["pass"]})
    return 0 if fit.passed and osc["pass"] else 1


def cmd_run(args):
    if not args.config:
        raise PlanarSpeedError("run needs --config")
    cfg = harness.ExperimentConfig.load(args.config)
    if args.out_dir:
        cfg.out_dir = args.out_dir
    cfg.jobs = args.jobs
    if args.seed is not None:
        cfg.seed = args.seed
    _, summary = harness.run_config(cfg)
    _emit(summary)
    return 0 if summary["pass"] else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="planarspeed", description=__doc__)
    parser.add_argument("--config", help="experiment config (JSON)")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("effective-speed", help="limit speed c(p)")
    p.add_argument("--g", default=DEFAULT_G)
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_effective_speed)

    p = sub.add_parser("validate-g", help="check periodicity, sign and norms of g")
    p.add_argument("--g", default=DEFAULT_G)
    p.add_argument("--samples", type=int, default=4096)
    p.set_defaults(func=cmd_validate_g)

    p = sub.add_parser("run-chi", help="integrate the periodic corrector equation")
    _add_model(p)
    p.add_argument("--N", type=int, default=reduced.DEFAULT_NODES)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--sample-every", dest="sample_every", type=int, default=None)
    p.add_argument("--scheme", choices=("imex", "explicit"), default="imex")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run_chi)

    p = sub.add_parser("run-ode", help="integrate the p = 0 ODE")
    _add_model(p, with_p=False)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--sample-every", dest="sample_every", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run_ode)

    p = sub.add_parser("run-direct", help="solve the unrescaled equation on a line")
    _add_model(p)
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--nodes-per-period", dest="nodes_per_period", type=int, default=32)
    p.add_argument("--T", type=float, default=0.25)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--v0", default='{"kind": "none"}')
    p.add_argument("--times", default=None, help="extra snapshot times, comma separated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run_direct)

    for name, kind, help_ in (("sweep-eps", "eps-sweep", "speed convergence as eps -> 0"),
                              ("sweep-p", "p-sweep", "speed against slope")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--g", default=DEFAULT_G)
        p.add_argument("--eps", default="0.1,0.05,0.02,0.01" if kind == "eps-sweep" else "0.01")
        p.add_argument("--p", default="1" if kind == "eps-sweep" else "0,0.25,0.5,1,2")
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--N", type=int, default=None)
        p.add_argument("--T", type=float, default=None)
        p.add_argument("--band", action="store_true", help="also run T-doubling band checks")
        p.set_defaults(func=lambda a, k=kind: _run_sweep(a, k))

    p = sub.add_parser("check-bernstein", help="gradient scaling fit over an eps sweep")
    p.add_argument("--g", default=DEFAULT_G)
    p.add_argument("--eps", default="0.1,0.05,0.02,0.01")
    p.add_argument("--p", default="1")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--traj", action="append", help="EPS=PATH of a trajectory CSV (repeat)")
    p.set_defaults(func=cmd_check_bernstein)

    p = sub.add_parser("sandwich", help="direct runs against shifted planes")
    p.add_argument("--g", default=DEFAULT_G)
    p.add_argument("--eps", default="0.1,0.05,0.025")
    p.add_argument("--p", default="1")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--direct-T", dest="direct_T", type=float, default=0.25)
    p.add_argument("--nodes-per-period", dest="nodes_per_period", type=int, default=32)
    p.add_argument("--v0", default='{"kind": "bump", "amplitude": 0.3, "width": 0.25}')
    p.set_defaults(func=lambda a: _run_sweep(a, "sandwich"))

    p = sub.add_parser("extract-speed", help="fit the speed of a trajectory CSV")
    _add_model(p)
    p.add_argument("--traj", required=True)
    p.add_argument("--window", type=float, default=0.5)
    p.set_defaults(func=cmd_extract_speed)

    p = sub.add_parser("check-band", help="band stability between a run and its doubled horizon")
    _add_model(p)
    p.add_argument("--short", required=True)
    p.add_argument("--long", required=True)
    p.add_argument("--window", type=float, default=0.5)
    p.set_defaults(func=cmd_check_band)

    p = sub.add_parser("run", help="execute an experiment config")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PlanarSpeedError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
