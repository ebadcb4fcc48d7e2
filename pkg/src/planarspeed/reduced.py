"""Time integration of the 1-periodic corrector equation.

For a slope ``p != 0`` the deviation from the plane, written as a function of
``z = p.x``, solves

    chi_t - |p|^2 chi_zz + eps^(1-alpha) g(chi + z) = 0,   chi(z, 0) = 0,

with ``chi`` 1-periodic in ``z``.  For ``p = 0`` it reduces to the scalar ODE
``v' + eps^(1-alpha) g(v) = 0``, ``v(0) = 0``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CflViolation, DegenerateForcing, MonotonicityViolation, ParameterError
from .nonlinearity import Nonlinearity
from .quadrature import simpson

DEFAULT_NODES = 256
DEFAULT_PERIODS = 10.0
TARGET_SAMPLES = 1000
TRAJECTORY_COLUMNS = ("t", "mean", "oscillation", "grad_sup")
_SLACK = 1e-12


@dataclass(frozen=True)
class ModelParams:
    eps: float
    alpha: float
    p_norm: float

    def __post_init__(self):
        if not (0.0 < self.eps <= 1.0):
            raise ParameterError(f"eps must lie in (0, 1], got {self.eps}")
        if not (0.0 <= self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not (self.p_norm >= 0.0 and math.isfinite(self.p_norm)):
            raise ParameterError(f"p_norm must be finite and nonnegative, got {self.p_norm}")

    @property
    def reaction_scale(self) -> float:
        """``eps^(1-alpha)``, the size of the forcing after parabolic rescaling."""
        return self.eps ** (1.0 - self.alpha)

    @property
    def time_scale(self) -> float:
        """``eps^(2-alpha)``: original time = time_scale * rescaled time."""
        return self.eps ** (2.0 - self.alpha)

    def to_dict(self):
        return {"eps": self.eps, "alpha": self.alpha, "p": self.p_norm}


@dataclass(frozen=True)
class PeriodicGrid:
    n_nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.n_nodes < 16:
            raise ParameterError(f"periodic grid needs at least 16 nodes, got {self.n_nodes}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_nodes

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes) / self.n_nodes


@dataclass(frozen=True)
class ChiState:
    """One period of ``chi`` at time ``t``, stored as ``periods + frac``."""

    t: float
    periods: np.ndarray
    frac: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.periods + self.frac

    @property
    def n_nodes(self) -> int:
        return self.periods.shape[0]

    def shifted(self, k: int) -> "ChiState":
        """The same profile moved up by ``k`` whole periods (exact)."""
        return ChiState(self.t, self.periods + float(int(k)), self.frac.copy())


def split_values(values) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    periods = np.floor(values)
    frac = values - periods
    wrap = frac >= 1.0
    frac[wrap] -= 1.0
    periods[wrap] += 1.0
    return periods, frac


def init_chi(grid: PeriodicGrid) -> ChiState:
    n = grid.n_nodes
    return ChiState(0.0, np.zeros(n), np.zeros(n))


def state_from_values(values, t: float = 0.0) -> ChiState:
    periods, frac = split_values(values)
    if periods.shape[0] < 16:
        raise ParameterError("a periodic state needs at least 16 nodes")
    return ChiState(float(t), periods, frac)


def profile_stats(state: ChiState) -> tuple[float, float, float, float]:
    """``(mean, min, max, sup |d chi/dz|)`` of one period."""
    n, f = state.periods, state.frac
    vals = n + f
    h = 1.0 / n.shape[0]
    diff = (np.roll(n, -1) - np.roll(n, 1)) + (np.roll(f, -1) - np.roll(f, 1))
    return float(vals.mean()), float(vals.min()), float(vals.max()), float(np.max(np.abs(diff)) / (2.0 * h))


def default_dt(params: ModelParams, g: Nonlinearity, grid: PeriodicGrid) -> float:
    """Largest step keeping the reaction monotone and time error near space error."""
    accuracy = 0.1 * grid.spacing / max(1.0, params.p_norm)
    react = params.reaction_scale * g.lipschitz_const
    if react > 0:
        return min(0.5 / react, accuracy)
    return accuracy


def default_horizon(params: ModelParams, g: Nonlinearity, periods: float = DEFAULT_PERIODS) -> float:
    """Time for ``periods`` vertical periods at the largest admissible speed."""
    rate = params.reaction_scale * (g.sup_norm if g.sup_norm > 0 else 1.0)
    return periods / rate


def default_horizon_p0(params: ModelParams, g: Nonlinearity, periods: float = 2 * DEFAULT_PERIODS) -> float:
    """Time for at least ``periods`` vertical periods of the ``p = 0`` solution.

    The slowest point of the ODE moves at ``eps^(1-alpha) |max g|``; when ``g``
    touches zero the solution is stationary and the sup norm sets the scale.
    """
    slowest = abs(g.max_value) if g.strictly_negative else g.sup_norm
    rate = params.reaction_scale * (slowest if slowest > 0 else 1.0)
    return periods / rate


def check_monotone(dt: float, params: ModelParams, g: Nonlinearity) -> None:
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if dt * params.reaction_scale * g.lipschitz_const > 1.0 + _SLACK:
        raise MonotonicityViolation(
            f"dt * eps^(1-alpha) * Lip(g) = {dt * params.reaction_scale * g.lipschitz_const:.6g} > 1; "
            f"shrink dt below {1.0 / (params.reaction_scale * g.lipschitz_const):.6g}"
        )


def check_cfl(dt: float, params: ModelParams, h: float) -> None:
    limit = h * h / (2.0 * params.p_norm ** 2)
    if dt > limit * (1.0 + _SLACK):
        raise CflViolation(f"dt = {dt:.6g} exceeds the explicit diffusion limit h^2/(2|p|^2) = {limit:.6g}")


def _require_slope(params):
    if params.p_norm <= 0:
        raise ParameterError("the periodic corrector equation needs p_norm > 0; use solve_ode_p0 for p = 0")


class _Stepper:
    """Precomputed operators for repeated steps on one grid."""

    def __init__(self, params, g, n_nodes, dt, scheme):
        _require_slope(params)
        check_monotone(dt, params, g)
        h = 1.0 / n_nodes
        if scheme == "explicit":
            check_cfl(dt, params, h)
        elif scheme != "imex":
            raise ParameterError(f"unknown scheme {scheme!r}; expected 'imex' or 'explicit'")
        self.scheme = scheme
        self.dt = dt
        self.r = dt * params.p_norm ** 2 * n_nodes * n_nodes
        self.dt_react = dt * params.reaction_scale
        self.phase = np.arange(n_nodes) / n_nodes
        self.gargs = g.kernel_args()
        if scheme == "imex":
            self.factors = _kernels.cyclic_factor(n_nodes, self.r)

    def advance(self, periods, frac, nsteps):
        code, a, b, table = self.gargs
        if self.scheme == "imex":
            cp, m, z, vz, denom = self.factors
            _kernels.advance_periodic_imex(
                periods, frac, self.phase, code, a, b, table, self.r, self.dt_react, cp, m, z, vz, denom, nsteps
            )
        else:
            _kernels.advance_periodic_explicit(
                periods, frac, self.phase, code, a, b, table, self.r, self.dt_react, nsteps
            )


def _one_step(state, params, g, dt, scheme):
    stepper = _Stepper(params, g, state.n_nodes, dt, scheme)
    periods, frac = state.periods.copy(), state.frac.copy()
    stepper.advance(periods, frac, 1)
    return ChiState(state.t + dt, periods, frac)


def step_imex(state: ChiState, params: ModelParams, g: Nonlinearity, dt: float) -> ChiState:
    """One step of implicit diffusion / explicit reaction.

    Solves ``(I - dt |p|^2 D2) chi_new = chi_old - dt eps^(1-alpha) g(chi_old + z)``
    with the cyclic second-difference ``D2``.
    """
    return _one_step(state, params, g, dt, "imex")


def step_explicit(state: ChiState, params: ModelParams, g: Nonlinearity, dt: float) -> ChiState:
    """One forward-Euler step; kept as an independent scheme for cross-checks."""
    return _one_step(state, params, g, dt, "explicit")


@dataclass
class Trajectory:
    """Sampled diagnostics of a run.

    ``lo``/``hi`` (profile min/max) are present for in-memory runs and absent
    for trajectories read back from CSV.
    """

    t: np.ndarray
    mean: np.ndarray
    oscillation: np.ndarray
    grad_sup: np.ndarray
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    states: list = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @property
    def final_state(self):
        return self.states[-1] if self.states else None

    def __len__(self):
        return len(self.t)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_COLUMNS)
            for row in zip(self.t, self.mean, self.oscillation, self.grad_sup):
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header = tuple(rows[0])
        if header != TRAJECTORY_COLUMNS:
            raise ParameterError(f"{path}: expected header {','.join(TRAJECTORY_COLUMNS)}, got {','.join(header)}")
        data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, 4)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def write_snapshot(path, nodes, values, name="z", value_name="chi") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((name, value_name))
        for x, u in zip(nodes, values):
            w.writerow((repr(float(x)), repr(float(u))))


def _plan(T, dt, sample_every):
    if T <= 0:
        raise ParameterError(f"horizon T must be positive, got {T}")
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    if sample_every is None:
        sample_every = max(1, nsteps // TARGET_SAMPLES)
    if sample_every < 1:
        raise ParameterError(f"sample_every must be >= 1, got {sample_every}")
    return nsteps, int(sample_every)


def solve_chi(
    params: ModelParams,
    g: Nonlinearity,
    grid: PeriodicGrid | None = None,
    T: float | None = None,
    dt: float | None = None,
    sample_every: int | None = None,
    scheme: str = "imex",
    init: ChiState | None = None,
    keep_states: bool = False,
) -> Trajectory:
    """Integrate the corrector equation from ``init`` (default zero) to time ``>= T``."""
    _require_slope(params)
    grid = grid or (PeriodicGrid(init.n_nodes) if init is not None else PeriodicGrid())
    if init is not None and init.n_nodes != grid.n_nodes:
        raise ParameterError("initial state and grid sizes differ")
    dt = default_dt(params, g, grid) if dt is None else float(dt)
    T = default_horizon(params, g) if T is None else float(T)
    nsteps, every = _plan(T, dt, sample_every)
    stepper = _Stepper(params, g, grid.n_nodes, dt, scheme)

    start = init or init_chi(grid)
    periods, frac = start.periods.copy(), start.frac.copy()
    t0 = start.t
    times, stats, states = [], [], []

    def record(step):
        st = ChiState(t0 + step * dt, periods.copy(), frac.copy())
        times.append(st.t)
        stats.append(profile_stats(st))
        if keep_states:
            states.append(st)

    record(0)
    done = 0
    while done < nsteps:
        chunk = min(every, nsteps - done)
        stepper.advance(periods, frac, chunk)
        done += chunk
        record(done)
    if not keep_states:
        states.append(ChiState(t0 + nsteps * dt, periods.copy(), frac.copy()))

    s = np.array(stats)
    meta = {"solver": "chi", "scheme": scheme, "N": grid.n_nodes, "dt": dt, "T": nsteps * dt,
            "steps": nsteps, "sample_every": every, **params.to_dict()}
    return Trajectory(np.array(times), s[:, 0], s[:, 2] - s[:, 1], s[:, 3], s[:, 1], s[:, 2], states, meta)


def default_ode_dt(params: ModelParams, g: Nonlinearity, T: float) -> float:
    rate = params.reaction_scale * max(g.lipschitz_const, g.sup_norm)
    if rate > 0:
        return min(0.02 / rate, T / 100.0)
    return T / 100.0


def solve_ode_p0(
    params: ModelParams,
    g: Nonlinearity,
    T: float | None = None,
    dt: float | None = None,
    sample_every: int | None = None,
) -> Trajectory:
    """Classical RK4 for ``v' = -eps^(1-alpha) g(v)``, ``v(0) = 0``."""
    T = default_horizon_p0(params, g) if T is None else float(T)
    dt = default_ode_dt(params, g, T) if dt is None else float(dt)
    nsteps, every = _plan(T, dt, sample_every)
    nsteps = every * int(math.ceil(nsteps / every))
    out = np.empty(nsteps // every + 1)
    code, a, b, table = g.kernel_args()
    _kernels.rk4_scalar(0.0, code, a, b, table, params.reaction_scale, dt, nsteps, every, out)
    t = np.arange(out.size) * (every * dt)
    zeros = np.zeros_like(out)
    meta = {"solver": "ode", "scheme": "rk4", "N": 1, "dt": dt, "T": nsteps * dt,
            "steps": nsteps, "sample_every": every, **params.to_dict()}
    return Trajectory(t, out.copy(), zeros, zeros.copy(), out.copy(), out.copy(), [], meta)


def time_of_value_p0(params: ModelParams, g: Nonlinearity, v_target: float, n: int = 1024) -> float:
    """Exact time at which the ``p = 0`` solution reaches ``v_target``.

    Evaluates ``-eps^(alpha-1) * int_0^v ds/g(s)`` with composite Simpson,
    ``n`` panels per whole period plus ``n`` panels on the remainder.
    """
    if g.attains_zero:
        raise DegenerateForcing("g attains zero; the p = 0 solution never leaves its equilibrium")
    if v_target < 0:
        raise ParameterError(f"v_target must be nonnegative, got {v_target}")
    inv = lambda s: 1.0 / g(s)
    whole = math.floor(v_target)
    rest = v_target - whole
    total = 0.0
    if whole:
        total += whole * simpson(inv, 0.0, 1.0, n)
    if rest > 0:
        total += simpson(inv, 0.0, rest, n)
    return -total / params.reaction_scale
