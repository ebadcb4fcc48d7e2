"""Solver for the unrescaled equation on a truncated line (n = 1).

    u_t - eps^alpha u_xx + g(u / eps) = 0,   u(x, 0) = p x + v0(x).

The state is the deviation ``Y = (u - p x) / eps`` carried as
``periods + frac``.  Boundary values at ``x = +-L`` are read from a periodic
corrector run advanced in lockstep, which is the exact planar solution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainTooSmall, MonotonicityViolation, ParameterError
from .nonlinearity import Nonlinearity
from .reduced import ModelParams, PeriodicGrid, solve_chi, split_values

PERTURBATIONS = ("none", "bump", "plateau")
_SLACK = 1e-12


@dataclass(frozen=True)
class LineDomain:
    half_width: float
    n_nodes: int
    nodes_per_period: int | None = None

    def __post_init__(self):
        if not self.half_width > 0:
            raise ParameterError(f"half_width must be positive, got {self.half_width}")
        if self.n_nodes < 64:
            raise ParameterError(f"line domain needs at least 64 nodes, got {self.n_nodes}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n_nodes)


def matched_domain(eps: float, p: float, periods_per_side: int, nodes_per_period: int) -> LineDomain:
    """A line whose nodes land on the nodes of a periodic grid in ``p x / eps``."""
    if p == 0:
        raise ParameterError("a matched domain needs p != 0")
    L = periods_per_side * eps / abs(p)
    M = 2 * periods_per_side * nodes_per_period + 1
    return LineDomain(L, M, nodes_per_period)


def _bump(s):
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _smoothstep(s):
    # C-infinity transition from 0 (s <= 0) to 1 (s >= 1)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class InitialDatum:
    """``u0(x) = p x + level + eps * shift_periods + perturbation(x)``.

    The perturbation is ``amplitude`` times a smooth profile supported in
    ``[center - width, center + width]``: a bump peaking at the centre or a
    mollified step (plateau) that equals 1 on the inner half.
    """

    slope: float
    level: float = 0.0
    shift_periods: int = 0
    kind: str = "none"
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in PERTURBATIONS:
            raise ParameterError(f"unknown perturbation {self.kind!r}; expected one of {PERTURBATIONS}")
        if self.kind != "none" and not self.width > 0:
            raise ParameterError("perturbation width must be positive")

    def perturbation(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "none" or self.amplitude == 0:
            return np.zeros_like(x)
        s = (x - self.center) / self.width
        if self.kind == "bump":
            return self.amplitude * _bump(s)
        return self.amplitude * _smoothstep(2.0 * (1.0 - np.abs(s)))

    def v0(self, x, eps: float) -> np.ndarray:
        return self.level + eps * self.shift_periods + self.perturbation(x)

    def bounds(self, eps: float) -> tuple[float, float]:
        """Exact ``(inf v0, sup v0)``."""
        base = self.level + eps * self.shift_periods
        amp = self.amplitude if self.kind != "none" else 0.0
        return base + min(0.0, amp), base + max(0.0, amp)

    def support(self) -> tuple[float, float] | None:
        if self.kind == "none" or self.amplitude == 0:
            return None
        return self.center - self.width, self.center + self.width

    def shifted(self, k: int) -> "InitialDatum":
        return InitialDatum(self.slope, self.level, self.shift_periods + int(k), self.kind,
                            self.amplitude, self.center, self.width)

    def to_dict(self):
        return {"slope": self.slope, "level": self.level, "shift_periods": self.shift_periods,
                "kind": self.kind, "amplitude": self.amplitude, "center": self.center, "width": self.width}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class DirectTrajectory:
    t: np.ndarray
    x: np.ndarray
    slope: float
    eps: float
    periods: list = field(repr=False)
    frac: list = field(repr=False)
    meta: dict = field(default_factory=dict)

    def u(self, k: int) -> np.ndarray:
        return self.slope * self.x + self.eps * (self.periods[k] + self.frac[k])

    @property
    def u_all(self) -> np.ndarray:
        return np.array([self.u(k) for k in range(len(self.t))])

    def deviation(self, k: int, speed: float) -> np.ndarray:
        """``u - p x - speed * t`` at sample ``k``."""
        return self.eps * (self.periods[k] + self.frac[k]) - speed * self.t[k]

    def write_snapshot(self, path, k: int = -1) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("x", "u"))
            for x, u in zip(self.x, self.u(k)):
                w.writerow((repr(float(x)), repr(float(u))))


def default_direct_dt(params: ModelParams, g: Nonlinearity, domain: LineDomain, companion_nodes: int) -> float:
    """The reduced default step mapped to original time (``dt = eps^(2-alpha) dt_s``)."""
    hz = 1.0 / companion_nodes
    accuracy = 0.1 * hz / max(1.0, params.p_norm)
    dt_s = accuracy
    if g.lipschitz_const > 0:
        dt_s = min(0.5 / (params.reaction_scale * g.lipschitz_const), accuracy)
    return dt_s * params.time_scale


def cone_ok(params: ModelParams, domain: LineDomain, T: float) -> bool:
    return params.eps ** params.alpha * T <= (domain.half_width / 2.0) ** 2 / 4.0


class _DirectRun:
    def __init__(self, datum, params, g, domain, T, dt, companion_nodes, check_domain):
        if abs(abs(datum.slope) - params.p_norm) > 1e-14 * max(1.0, params.p_norm):
            raise ParameterError(f"datum slope {datum.slope} does not match p_norm {params.p_norm}")
        eps = params.eps
        if dt <= 0:
            raise ParameterError(f"dt must be positive, got {dt}")
        if dt * g.lipschitz_const / eps > 1.0 + _SLACK:
            raise MonotonicityViolation(
                f"dt * Lip(g) / eps = {dt * g.lipschitz_const / eps:.6g} > 1; "
                f"the reaction g(u/eps) has Lipschitz constant Lip(g)/eps in u"
            )
        if check_domain:
            if not cone_ok(params, domain, T):
                raise DomainTooSmall(
                    f"eps^alpha * T = {eps ** params.alpha * T:.6g} exceeds (L/2)^2/4 = "
                    f"{(domain.half_width / 2) ** 2 / 4:.6g}; enlarge L or shorten T"
                )
            sup = datum.support()
            if sup is not None and max(abs(sup[0]), abs(sup[1])) > domain.half_width / 2.0:
                raise DomainTooSmall("the perturbation must be supported in [-L/2, L/2]")
        self.params, self.g, self.domain, self.datum, self.dt = params, g, domain, datum, dt
        x = domain.nodes
        self.x = x
        p = datum.slope
        self.phase = np.array([_kernels.unit_reduce(v) for v in p * x / eps])
        self.r = dt * eps ** params.alpha / domain.spacing ** 2
        self.dt_react = dt / eps
        diag = np.full(domain.n_nodes - 2, 1.0 + 2.0 * self.r)
        self.cp, self.m = _kernels.tri_factor(diag, self.r)

        level = datum.level / eps
        y0 = level + datum.perturbation(x) / eps
        self.periods, self.frac = split_values(y0)
        self.periods += datum.shift_periods

        if params.p_norm > 0:
            nc = companion_nodes
            dt_s = dt / params.time_scale
            self.c_r = dt_s * params.p_norm ** 2 * nc * nc
            self.c_phase = np.arange(nc) / nc
            self.c_factors = _kernels.cyclic_factor(nc, self.c_r)
        else:
            nc = 1
            self.c_r = 0.0
            self.c_phase = np.zeros(1)
            self.c_factors = (np.zeros(1), np.ones(1), np.zeros(1), 0.0, 1.0)
        self.c_periods, self.c_frac = split_values(np.full(nc, level))
        self.c_periods += datum.shift_periods
        self.bc = (self.phase[0], self.phase[-1])
        self.steps = 0

    def advance(self, nsteps):
        code, a, b, table = self.g.kernel_args()
        cp, m, z, vz, denom = self.c_factors
        _kernels.advance_direct(
            self.periods, self.frac, self.phase, code, a, b, table, self.r, self.dt_react, self.cp, self.m,
            self.c_periods, self.c_frac, self.c_phase, self.c_r, cp, m, z, vz, denom,
            self.bc[0], self.bc[1], nsteps,
        )
        self.steps += nsteps

    @property
    def t(self):
        return self.steps * self.dt


def solve_direct(
    datum: InitialDatum,
    params: ModelParams,
    g: Nonlinearity,
    domain: LineDomain,
    T: float,
    dt: float | None = None,
    sample_every: int | None = None,
    companion_nodes: int | None = None,
    check_domain: bool = True,
) -> DirectTrajectory:
    """IMEX integration on ``[-L, L]`` with planar Dirichlet data at both ends."""
    nc = companion_nodes or domain.nodes_per_period or PeriodicGrid().n_nodes
    dt = default_direct_dt(params, g, domain, nc) if dt is None else float(dt)
    run = _DirectRun(datum, params, g, domain, T, dt, nc, check_domain)
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    every = sample_every or max(1, nsteps // 100)
    times, periods, fracs = [0.0], [run.periods.copy()], [run.frac.copy()]
    done = 0
    while done < nsteps:
        chunk = min(every, nsteps - done)
        run.advance(chunk)
        done += chunk
        times.append(run.t)
        periods.append(run.periods.copy())
        fracs.append(run.frac.copy())
    meta = {"solver": "direct", "scheme": "imex", "M": domain.n_nodes, "L": domain.half_width,
            "dt": dt, "T": nsteps * dt, "steps": nsteps, "sample_every": every, "companion_N": nc,
            **params.to_dict(), "datum": datum.to_dict(),
            "boundary": "Dirichlet from lockstep planar corrector (truncation is a heuristic)"}
    return DirectTrajectory(np.array(times), run.x, datum.slope, params.eps, periods, fracs, meta)


def reconstruct_planar(
    params: ModelParams,
    g: Nonlinearity,
    x: np.ndarray,
    times: np.ndarray,
    grid: PeriodicGrid,
    dt: float,
    slope: float | None = None,
) -> np.ndarray:
    """``p x + eps * chi(frac(p x / eps), t / eps^(2-alpha))`` from an independent corrector run.

    ``dt`` is the original-time step; ``times`` must be multiples of it.
    """
    p = params.p_norm if slope is None else slope
    dt_s = dt / params.time_scale
    steps = np.rint(np.asarray(times) / dt).astype(int)
    if np.any(np.abs(steps * dt - times) > 1e-9 * max(1.0, float(np.max(times)))):
        raise ParameterError("reconstruction times must be multiples of dt")
    every = int(np.gcd.reduce(steps[steps > 0])) if np.any(steps > 0) else 1
    traj = solve_chi(params, g, grid, T=max(steps.max(), 1) * dt_s, dt=dt_s, sample_every=every, keep_states=True)
    by_step = {int(round(st.t / dt_s)): st for st in traj.states}
    pos = np.array([_kernels.unit_reduce(v) for v in p * np.asarray(x) / params.eps])
    out = []
    for s in steps:
        st = by_step[int(s)]
        vals = np.append(st.values, st.values[0] + 0.0)
        s_pos = pos * grid.n_nodes
        j = np.minimum(s_pos.astype(int), grid.n_nodes - 1)
        theta = s_pos - j
        out.append(p * x + params.eps * (vals[j] + theta * (vals[j + 1] - vals[j])))
    return np.array(out)


def sandwich_slack(eps: float, k_emp: float, scheme_tol: float) -> float:
    return k_emp * eps + 2.0 * eps + scheme_tol


def sandwich_check(
    traj: DirectTrajectory,
    p: float,
    c_p: float,
    datum: InitialDatum,
    region: float,
    slack: float,
) -> dict:
    """Check ``inf v0 - slack <= u - p x - c(p) t <= sup v0 + slack`` for ``|x| <= region``."""
    inside = np.abs(traj.x) <= region
    if not np.any(inside):
        raise ParameterError("sandwich region contains no nodes")
    if region >= traj.x.max():
        raise ParameterError("sandwich region must be strictly interior")
    lo, hi = datum.bounds(traj.eps)
    dmin, dmax, planar_dev = np.inf, -np.inf, 0.0
    for k in range(len(traj.t)):
        d = traj.deviation(k, c_p)[inside]
        dmin = min(dmin, float(d.min()))
        dmax = max(dmax, float(d.max()))
    planar_dev = max(abs(dmax - lo), abs(dmin - lo)) if lo == hi else None
    return {
        "pass": bool(dmin >= lo - slack and dmax <= hi + slack),
        "deviation_min": dmin,
        "deviation_max": dmax,
        "inf_v0": lo,
        "sup_v0": hi,
        "slack": slack,
        "planar_deviation": planar_dev,
        "region": region,
        "eps": traj.eps,
        "c_p": c_p,
        "note": "checked on a truncated line; the boundary cone guard is a heuristic",
    }


def comparison_check(
    datum_a: InitialDatum,
    datum_b: InitialDatum,
    params: ModelParams,
    g: Nonlinearity,
    domain: LineDomain,
    T: float,
    dt: float | None = None,
    companion_nodes: int | None = None,
    tol: float = 0.0,
) -> dict:
    """Run both data in lockstep and check ``u_a <= u_b`` after every step."""
    nc = companion_nodes or domain.nodes_per_period or PeriodicGrid().n_nodes
    dt = default_direct_dt(params, g, domain, nc) if dt is None else float(dt)
    x = domain.nodes
    gap0 = datum_b.v0(x, params.eps) - datum_a.v0(x, params.eps)
    if np.any(gap0 < 0):
        raise ParameterError("comparison_check requires datum_a <= datum_b pointwise")
    ra = _DirectRun(datum_a, params, g, domain, T, dt, nc, True)
    rb = _DirectRun(datum_b, params, g, domain, T, dt, nc, True)
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    worst = np.inf
    for _ in range(nsteps):
        ra.advance(1)
        rb.advance(1)
        diff = (rb.periods - ra.periods) + (rb.frac - ra.frac)
        worst = min(worst, float(diff.min()))
    return {"pass": bool(worst * params.eps >= -tol), "min_gap": worst * params.eps, "steps": nsteps, "tol": tol}
