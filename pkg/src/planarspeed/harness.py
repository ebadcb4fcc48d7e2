"""Experiment configs, sweeps and on-disk results.

A config is one JSON document.  Runs are expanded from it in a fixed order,
executed serially or in a process pool, and aggregated by their sort key, so
the written CSVs and ``summary.json`` do not depend on scheduling.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import time
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, direct, quadrature, reduced
from .errors import ConfigError, PlanarSpeedError
from .nonlinearity import from_dict, validate

log = logging.getLogger(__name__)

KINDS = ("chi-run", "ode-run", "direct-run", "eps-sweep", "p-sweep", "bernstein-sweep", "sandwich", "comparison")

DEFAULT_NUMERICS = {
    "N": reduced.DEFAULT_NODES,
    "dt": None,
    "T": None,
    "periods": reduced.DEFAULT_PERIODS,
    "ode_periods": 2 * reduced.DEFAULT_PERIODS,
    "window": 0.5,
    "sample_every": None,
    "band": False,
}
DEFAULT_DIRECT = {
    "L": 2.0,
    "M": None,
    "nodes_per_period": 32,
    "T": 0.25,
    "dt": None,
    "region": 0.5,
    "v0": {"kind": "none"},
    "trials": 10,
}
_UNHASHED = ("out_dir", "jobs")


@dataclass
class ExperimentConfig:
    kind: str
    g: dict
    eps: list
    p: list
    alpha: float = 0.0
    numerics: dict = field(default_factory=dict)
    direct: dict = field(default_factory=dict)
    out_dir: str | None = None
    seed: int = 0
    jobs: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = copy.deepcopy(d)
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        for key in ("kind", "g"):
            if key not in d:
                raise ConfigError(f"config is missing {key!r}")
        for key in ("eps", "p"):
            v = d.get(key, [])
            d[key] = [v] if isinstance(v, (int, float)) else list(v)
        cfg = cls(**d)
        cfg.numerics = {**DEFAULT_NUMERICS, **(cfg.numerics or {})}
        cfg.direct = {**DEFAULT_DIRECT, **(cfg.direct or {})}
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "g": self.g, "eps": self.eps, "p": self.p, "alpha": self.alpha,
            "numerics": self.numerics, "direct": self.direct, "out_dir": self.out_dir,
            "seed": self.seed, "jobs": self.jobs,
        }

    @property
    def config_hash(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def nonlinearity(self):
        return from_dict(self.g)


def validate_config(cfg: ExperimentConfig) -> None:
    """Fail fast on anything a run would reject."""
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}; expected one of {KINDS}")
    try:
        g = cfg.nonlinearity()
    except PlanarSpeedError as exc:
        raise ConfigError(f"bad g: {exc}") from exc
    rep = validate(g)
    if not rep.ok:
        raise ConfigError(f"g failed validation: {rep.failed()}")
    if not cfg.eps:
        raise ConfigError("eps list is empty")
    if not cfg.p:
        raise ConfigError("p list is empty")
    for e in cfg.eps:
        for p in cfg.p:
            try:
                reduced.ModelParams(float(e), float(cfg.alpha), abs(float(p)))
            except PlanarSpeedError as exc:
                raise ConfigError(str(exc)) from exc
    num = cfg.numerics
    if int(num["N"]) < 16:
        raise ConfigError("numerics.N must be >= 16")
    for key in ("dt", "T", "sample_every"):
        if num[key] is not None and not num[key] > 0:
            raise ConfigError(f"numerics.{key} must be positive or null")
    if not 0 < num["window"] <= 1:
        raise ConfigError("numerics.window must lie in (0, 1]")
    if num["dt"] is not None and g.lipschitz_const > 0:
        worst = max(float(e) ** (1 - cfg.alpha) for e in cfg.eps)
        if num["dt"] * worst * g.lipschitz_const > 1:
            raise ConfigError("numerics.dt violates dt * eps^(1-alpha) * Lip(g) <= 1 for some eps")
    if cfg.kind == "eps-sweep" and len(cfg.eps) < 3:
        raise ConfigError("eps-sweep needs at least 3 eps values")
    if cfg.kind == "bernstein-sweep":
        if len(cfg.eps) < 4:
            raise ConfigError("bernstein-sweep needs at least 4 eps values")
        if any(float(p) == 0 for p in cfg.p):
            raise ConfigError("bernstein-sweep needs p != 0")
    if cfg.kind in ("direct-run", "sandwich", "comparison"):
        dcfg = cfg.direct
        if not dcfg["L"] > 0 or not dcfg["T"] > 0:
            raise ConfigError("direct.L and direct.T must be positive")
        try:
            direct.InitialDatum(float(cfg.p[0]), **_v0_kwargs(dcfg["v0"]))
        except (TypeError, PlanarSpeedError) as exc:
            raise ConfigError(f"bad direct.v0: {exc}") from exc
    if int(cfg.jobs) < 1:
        raise ConfigError("jobs must be >= 1")


def _v0_kwargs(v0: dict) -> dict:
    allowed = {"kind", "amplitude", "center", "width", "level", "shift_periods"}
    bad = set(v0) - allowed
    if bad:
        raise ConfigError(f"unknown v0 keys {sorted(bad)}")
    return dict(v0)


def _key(kind, eps, p, alpha, extra=""):
    return f"{kind}_eps{eps:g}_p{p:g}_a{alpha:g}{extra}"


# --- single runs (module-level so they pickle for the process pool) ---


def _speed_run(spec):
    g = from_dict(spec["g"])
    params = reduced.ModelParams(spec["eps"], spec["alpha"], abs(spec["p"]))
    num = spec["numerics"]
    T = num["T"] if num["T"] is not None else None
    if params.p_norm > 0:
        grid = reduced.PeriodicGrid(int(num["N"]))
        if T is None:
            T = reduced.default_horizon(params, g, num["periods"]) * spec.get("horizon_factor", 1.0)
        traj = reduced.solve_chi(params, g, grid, T=T, dt=num["dt"], sample_every=num["sample_every"])
    else:
        if T is None:
            T = reduced.default_horizon_p0(params, g, num["ode_periods"]) * spec.get("horizon_factor", 1.0)
        traj = reduced.solve_ode_p0(params, g, T=T, sample_every=num["sample_every"])
    return params, g, traj


def execute_run(spec: dict) -> dict:
    """Run one trajectory and analyse it; errors are captured, never raised."""
    start = time.perf_counter()
    out = {"key": spec["key"], "params": {"eps": spec["eps"], "alpha": spec["alpha"], "p": spec["p"]}}
    try:
        params, g, traj = _speed_run(spec)
        out["trajectory"] = traj
        out["meta"] = traj.meta
        try:
            est = analysis.extract_speed(traj, params, spec["numerics"]["window"])
            out["status"] = "ok"
        except analysis.NonStationary as exc:
            est = exc.estimate
            out["status"] = "nonstationary"
        out["estimate"] = est.to_dict()
        out["bounds"] = analysis.check_speed_bounds(est, params, g)
    except PlanarSpeedError as exc:
        out["status"] = "error"
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["wall_clock"] = time.perf_counter() - start
    return out


def _execute_all(specs, jobs):
    specs = sorted(specs, key=lambda s: s["key"])
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(execute_run, specs))
    else:
        results = [execute_run(s) for s in specs]
    return results


def _speed_specs(cfg, kind="chi"):
    specs = []
    for e in cfg.eps:
        for p in cfg.p:
            spec = {"eps": float(e), "alpha": float(cfg.alpha), "p": float(p), "g": cfg.g,
                    "numerics": dict(cfg.numerics)}
            spec["key"] = _key("ode" if float(p) == 0 else kind, spec["eps"], spec["p"], spec["alpha"])
            specs.append(spec)
    return specs


# --- experiment kinds ---


def _check(name, passed, measured, expected=None, tolerance=None):
    return {"name": name, "pass": bool(passed), "measured": measured, "expected": expected, "tolerance": tolerance}


def speed_table(results, g) -> list:
    rows = []
    for r in results:
        if "estimate" not in r:
            rows.append({**r["params"], "status": r["status"], "scaled_speed": None, "c_p": None, "error": None})
            continue
        c_p = quadrature.effective_speed(abs(r["params"]["p"]), g)
        s = r["estimate"]["scaled_speed"]
        rows.append({**r["params"], "status": r["status"], "scaled_speed": s, "c_p": c_p.value,
                     "case": c_p.case_tag, "error": abs(s - c_p.value)})
    return rows


def sweep_eps(cfg: ExperimentConfig, results=None):
    """Speed convergence table over eps (plus a gradient scaling fit when possible)."""
    g = cfg.nonlinearity()
    if results is None:
        results = _execute_all(_speed_specs(cfg), cfg.jobs)
    checks = []
    fit = None
    for p in sorted({float(p) for p in cfg.p}):
        rows = [r for r in results if r["params"]["p"] == p]
        rows.sort(key=lambda r: -r["params"]["eps"])
        table = speed_table(rows, g)
        errs = [row["error"] for row in table]
        ok = all(e is not None for e in errs) and all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
        checks.append(_check(f"speed_error_nonincreasing[p={p:g}]", ok, errs))
        if p > 0 and len(rows) >= 4 and all("trajectory" in r for r in rows):
            plist = [reduced.ModelParams(r["params"]["eps"], cfg.alpha, p) for r in rows]
            trajs = [r["trajectory"] for r in rows]
            fit = analysis.bernstein_scaling(trajs, plist, g)
            osc = analysis.oscillation_check(trajs, plist)
            checks.append(_check(f"bernstein_scaling[p={p:g}]", fit.passed, fit.slope, fit.expected_exponent - 0.05))
            checks.append(_check(f"oscillation[p={p:g}]", osc["pass"], osc["oscillation_sup"], osc["bound"]))
    table = speed_table(sorted(results, key=lambda r: (r["params"]["p"], -r["params"]["eps"])), g)
    return fit, table, checks


def sweep_p(cfg: ExperimentConfig, results=None):
    g = cfg.nonlinearity()
    if results is None:
        results = _execute_all(_speed_specs(cfg), cfg.jobs)
    checks = []
    table = speed_table(sorted(results, key=lambda r: (r["params"]["eps"], r["params"]["p"])), g)
    for e in sorted({float(e) for e in cfg.eps}):
        rows = [row for row in table if row["eps"] == e and row["scaled_speed"] is not None]
        zero = [row for row in rows if row["p"] == 0]
        nonzero = [row for row in rows if row["p"] != 0]
        if zero and nonzero:
            s0 = zero[0]["scaled_speed"]
            c_gap = quadrature.effective_speed(1.0, g).value - quadrature.effective_speed(0.0, g).value
            gaps = [row["scaled_speed"] - s0 for row in nonzero]
            checks.append(_check(f"lower_semicontinuity[eps={e:g}]", all(gp >= -1e-3 for gp in gaps), gaps, 0.0, 1e-3))
            # the measured jump should carry most of the limit gap
            checks.append(_check(f"jump_at_zero[eps={e:g}]", min(gaps) >= 0.75 * c_gap - 1e-3, min(gaps),
                                 c_gap, 0.25 * c_gap + 1e-3))
    return table, checks


def bernstein_sweep(cfg: ExperimentConfig, results=None):
    g = cfg.nonlinearity()
    if results is None:
        results = _execute_all(_speed_specs(cfg), cfg.jobs)
    checks, fits = [], []
    for p in sorted({float(p) for p in cfg.p}):
        rows = sorted([r for r in results if r["params"]["p"] == p], key=lambda r: -r["params"]["eps"])
        if not all("trajectory" in r for r in rows):
            checks.append(_check(f"bernstein_scaling[p={p:g}]", False, "run failed"))
            continue
        plist = [reduced.ModelParams(r["params"]["eps"], cfg.alpha, p) for r in rows]
        trajs = [r["trajectory"] for r in rows]
        fit = analysis.bernstein_scaling(trajs, plist, g)
        osc = analysis.oscillation_check(trajs, plist)
        fits.append(fit.to_dict())
        checks.append(_check(f"bernstein_scaling[p={p:g}]", fit.passed, fit.slope, fit.expected_exponent, 0.05))
        checks.append(_check(f"oscillation[p={p:g}]", osc["pass"], osc["oscillation_sup"], osc["bound"]))
    return fits, checks


def build_domain(eps, p, dcfg):
    L = float(dcfg["L"])
    npp = int(dcfg["nodes_per_period"])
    if p != 0 and dcfg.get("M") is None:
        per_side = L * abs(p) / eps
        if abs(per_side - round(per_side)) < 1e-9:
            return direct.matched_domain(eps, p, int(round(per_side)), npp)
    M = int(dcfg["M"]) if dcfg.get("M") else int(2 * L / eps * npp) + 1
    return direct.LineDomain(L, M)


def band_constant(params, g, numerics) -> float:
    """K_emp from a reduced speed run at these parameters."""
    spec = {"key": "band", "eps": params.eps, "alpha": params.alpha, "p": params.p_norm,
            "g": g.to_dict(), "numerics": numerics}
    _, _, traj = _speed_run(spec)
    est = analysis.extract_speed(traj, params, numerics["window"], raise_nonstationary=False)
    return est.K_emp


def envelope_shifts(inf_v0: float, sup_v0: float, eps: float) -> tuple[int, int]:
    """Whole-period shifts ``(floor(inf/eps), floor(sup/eps) + 1)``, in exact arithmetic."""
    e = Fraction(eps)
    return math.floor(Fraction(inf_v0) / e), math.floor(Fraction(sup_v0) / e) + 1


def sandwich_run(spec: dict) -> dict:
    """Planar run, optional perturbed run, and the envelope/sandwich checks at one eps."""
    start = time.perf_counter()
    g = from_dict(spec["g"])
    eps, alpha, p = spec["eps"], spec["alpha"], spec["p"]
    dcfg = spec["direct"]
    params = reduced.ModelParams(eps, alpha, abs(p))
    out = {"key": spec["key"], "params": {"eps": eps, "alpha": alpha, "p": p}}
    try:
        domain = build_domain(eps, p, dcfg)
        nc = domain.nodes_per_period or reduced.DEFAULT_NODES
        dt = dcfg["dt"] or direct.default_direct_dt(params, g, domain, nc)
        region = dcfg["region"] * domain.half_width
        c_p = quadrature.effective_speed(abs(p), g).value
        k_emp = band_constant(params, g, spec["numerics"])
        slack = direct.sandwich_slack(eps, k_emp, 2.0 * (domain.spacing ** 2 + dt))
        v0 = _v0_kwargs(dcfg["v0"])
        planar = direct.InitialDatum(p, level=v0.get("level", 0.0))
        tr = direct.solve_direct(planar, params, g, domain, dcfg["T"], dt=dt)
        out["planar"] = direct.sandwich_check(tr, p, c_p, planar, region, slack)
        out["planar"]["K_emp"] = k_emp
        out["trajectory"] = tr
        if v0.get("kind", "none") != "none":
            pert = direct.InitialDatum(p, **v0)
            tp = direct.solve_direct(pert, params, g, domain, dcfg["T"], dt=dt)
            inf_v0, sup_v0 = pert.bounds(eps)
            base = v0.get("level", 0.0)
            lo_k, hi_k = envelope_shifts(inf_v0 - base, sup_v0 - base, eps)
            # integer-period shifts of the planar run are exact discrete solutions
            below = above = True
            worst_lo, worst_hi = np.inf, np.inf
            for k in range(len(tp.t)):
                yp = tp.periods[k] + tp.frac[k]
                ylo = (tr.periods[k] + lo_k) + tr.frac[k]
                yhi = (tr.periods[k] + hi_k) + tr.frac[k]
                worst_lo = min(worst_lo, float((yp - ylo).min()))
                worst_hi = min(worst_hi, float((yhi - yp).min()))
            below, above = worst_lo >= 0, worst_hi >= 0
            out["envelope"] = {"pass": bool(below and above), "min_gap_lower": worst_lo * eps,
                               "min_gap_upper": worst_hi * eps, "shift_lower": lo_k, "shift_upper": hi_k}
            out["perturbed"] = direct.sandwich_check(tp, p, c_p, pert, region, slack)
        out["status"] = "ok"
        out["meta"] = tr.meta
    except PlanarSpeedError as exc:
        out["status"] = "error"
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["wall_clock"] = time.perf_counter() - start
    return out


def comparison_trials(cfg: ExperimentConfig) -> list:
    """Randomised ordered-data trials on both solvers, seeded from the config."""
    g = cfg.nonlinearity()
    rng = np.random.default_rng(cfg.seed)
    eps, p = float(cfg.eps[0]), float(cfg.p[0])
    params = reduced.ModelParams(eps, cfg.alpha, abs(p))
    out = []
    for i in range(int(cfg.direct["trials"])):
        if p != 0:
            out.append({"solver": "reduced", "trial": i, **reduced_comparison_trial(params, g, rng, cfg.numerics)})
        out.append({"solver": "direct", "trial": i, **direct_comparison_trial(params, g, rng, cfg.direct, p)})
    return out


def _random_dt(rng, limit, fallback):
    # anywhere up to the monotonicity limit
    return float(rng.uniform(0.05, 1.0)) * limit if np.isfinite(limit) else fallback


def reduced_comparison_trial(params, g, rng, numerics, steps=400):
    grid = reduced.PeriodicGrid(int(numerics.get("N") or 64))
    z = grid.nodes
    a = sum(rng.normal() * np.cos(2 * np.pi * k * z + rng.uniform(0, 2 * np.pi)) / k for k in range(1, 4))
    b = a + rng.uniform(0.0, 0.5, size=z.size) + 1e-3
    limit = 1.0 / (params.reaction_scale * g.lipschitz_const) if g.lipschitz_const > 0 else np.inf
    dt = _random_dt(rng, limit, reduced.default_dt(params, g, grid))
    sa, sb = reduced.state_from_values(a), reduced.state_from_values(b)
    stepper = reduced._Stepper(params, g, grid.n_nodes, dt, "imex")
    worst = np.inf
    for _ in range(steps):
        stepper.advance(sa.periods, sa.frac, 1)
        stepper.advance(sb.periods, sb.frac, 1)
        worst = min(worst, float(((sb.periods - sa.periods) + (sb.frac - sa.frac)).min()))
    return {"pass": bool(worst >= 0), "min_gap": worst, "steps": steps, "dt": dt}


def direct_comparison_trial(params, g, rng, dcfg, p):
    domain = build_domain(params.eps, p, dcfg)
    base = direct.InitialDatum(p)
    amp = float(rng.uniform(0.05, 0.5))
    width = float(rng.uniform(0.1, 0.45)) * domain.half_width / 2
    center = float(rng.uniform(-1, 1)) * (domain.half_width / 2 - width)
    kind = str(rng.choice(["bump", "plateau"]))
    bumped = direct.InitialDatum(p, kind=kind, amplitude=amp, center=center, width=width)
    nc = domain.nodes_per_period or reduced.DEFAULT_NODES
    limit = params.eps / g.lipschitz_const if g.lipschitz_const > 0 else np.inf
    dt = _random_dt(rng, limit, direct.default_direct_dt(params, g, domain, nc))
    cone = (domain.half_width / 2.0) ** 2 / 4.0 / params.eps ** params.alpha
    T = min(float(dcfg["T"]), cone, 400 * dt)
    rep = direct.comparison_check(base, bumped, params, g, domain, T, dt)
    rep["dt"] = dt
    return rep


# --- top level ---


def _write_csvs(results, out_dir: Path):
    for r in results:
        tr = r.get("trajectory")
        if isinstance(tr, reduced.Trajectory):
            tr.to_csv(out_dir / f"{r['key']}.csv")
        elif isinstance(tr, direct.DirectTrajectory):
            tr.write_snapshot(out_dir / f"{r['key']}_final.csv")


def _run_entry(r):
    entry = {"key": r["key"], "params": r["params"], "status": r["status"]}
    for k in ("estimate", "bounds", "planar", "perturbed", "envelope", "error"):
        if k in r:
            entry[k] = r[k]
    return entry


def run_config(cfg: ExperimentConfig | dict):
    """Execute every run of ``cfg``; write CSVs, ``summary.json`` and ``runs.jsonl``.

    Returns ``(records, summary)``.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    validate_config(cfg)
    g = cfg.nonlinearity()
    checks = []
    extra = {}
    results = []
    if cfg.kind in ("chi-run", "ode-run", "eps-sweep", "p-sweep", "bernstein-sweep"):
        specs = _speed_specs(cfg)
        if cfg.kind == "ode-run":
            specs = [s for s in specs if s["p"] == 0] or specs
        results = _execute_all(specs, cfg.jobs)
        for r in results:
            if "bounds" in r:
                checks.append({**r["bounds"], "name": f"speed_bounds[{r['key']}]", "expected": None,
                               "tolerance": analysis.BOUND_HEADROOM})
            if r["status"] != "ok":
                checks.append(_check(f"run[{r['key']}]", False, r["status"]))
        if cfg.kind == "eps-sweep":
            fit, table, more = sweep_eps(cfg, results)
            extra["speed_table"] = table
            extra["scaling_fit"] = fit.to_dict() if fit else None
            checks += more
        elif cfg.kind == "p-sweep":
            table, more = sweep_p(cfg, results)
            extra["speed_table"] = table
            checks += more
        elif cfg.kind == "bernstein-sweep":
            fits, more = bernstein_sweep(cfg, results)
            extra["scaling_fits"] = fits
            checks += more
        else:
            extra["speed_table"] = speed_table(results, g)
        if cfg.numerics.get("band"):
            longs = []
            for r in results:
                if "trajectory" not in r:
                    continue
                spec = next(s for s in specs if s["key"] == r["key"])
                long_spec = {**spec, "horizon_factor": 2.0, "key": spec["key"] + "_2T"}
                if spec["numerics"]["T"] is not None:
                    long_spec["numerics"] = {**spec["numerics"], "T": 2 * spec["numerics"]["T"]}
                long = execute_run(long_spec)
                params = reduced.ModelParams(spec["eps"], spec["alpha"], abs(spec["p"]))
                est1 = analysis.extract_speed(r["trajectory"], params, spec["numerics"]["window"], False)
                est2 = analysis.extract_speed(long["trajectory"], params, spec["numerics"]["window"], False)
                band = analysis.band_check(r["trajectory"], est1, long["trajectory"], est2)
                checks.append({**band, "name": f"band[{r['key']}]", "measured": band["relative_change"],
                               "expected": 0.0})
                longs.append(long)
            results += longs
    elif cfg.kind in ("direct-run", "sandwich"):
        specs = []
        for e in cfg.eps:
            for p in cfg.p:
                specs.append({"key": _key("direct", float(e), float(p), float(cfg.alpha)), "eps": float(e),
                              "alpha": float(cfg.alpha), "p": float(p), "g": cfg.g, "direct": cfg.direct,
                              "numerics": dict(cfg.numerics)})
        specs.sort(key=lambda s: s["key"])
        if cfg.jobs > 1 and len(specs) > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                results = list(pool.map(sandwich_run, specs))
        else:
            results = [sandwich_run(s) for s in specs]
        for r in results:
            if r["status"] != "ok":
                checks.append(_check(f"run[{r['key']}]", False, r.get("error")))
                continue
            checks.append({**r["planar"], "name": f"sandwich_planar[{r['key']}]", "measured": r["planar"]["planar_deviation"],
                           "expected": 0.0, "tolerance": r["planar"]["slack"]})
            if "envelope" in r:
                checks.append({**r["envelope"], "name": f"envelope[{r['key']}]", "measured": r["envelope"]["min_gap_upper"],
                               "expected": None, "tolerance": 0.0})
                checks.append({**r["perturbed"], "name": f"sandwich_perturbed[{r['key']}]",
                               "measured": [r["perturbed"]["deviation_min"], r["perturbed"]["deviation_max"]],
                               "expected": [r["perturbed"]["inf_v0"], r["perturbed"]["sup_v0"]],
                               "tolerance": r["perturbed"]["slack"]})
        if cfg.kind == "sandwich":
            for p in sorted({float(p) for p in cfg.p}):
                rows = sorted([r for r in results if r["params"]["p"] == p and r["status"] == "ok"],
                              key=lambda r: -r["params"]["eps"])
                devs = [r["planar"]["planar_deviation"] for r in rows]
                ok = len(devs) >= 2 and all(b < a for a, b in zip(devs, devs[1:]))
                checks.append(_check(f"planar_deviation_shrinks[p={p:g}]", ok, devs))
    elif cfg.kind == "comparison":
        trials = comparison_trials(cfg)
        extra["trials"] = trials
        checks.append(_check("comparison_ordering", all(t["pass"] for t in trials),
                             min(t["min_gap"] for t in trials), 0.0))

    summary = {
        "config_hash": cfg.config_hash,
        "kind": cfg.kind,
        "runs": [_run_entry(r) for r in sorted(results, key=lambda r: r["key"])],
        "checks": checks,
        **extra,
    }
    summary["pass"] = all(c["pass"] for c in checks)
    records = [
        {"config_hash": cfg.config_hash, "key": r["key"], "inputs": r["params"], "status": r["status"],
         "result": _run_entry(r), "wall_clock": r.get("wall_clock"), "scheme": r.get("meta")}
        for r in sorted(results, key=lambda r: r["key"])
    ]
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csvs(results, out)
        with open(out / "summary.json", "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(out / "runs.jsonl", "a") as fh:
            for rec in records:
                fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")
    return records, _jsonable(summary)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj
