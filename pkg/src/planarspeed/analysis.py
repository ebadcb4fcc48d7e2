"""Speed extraction and measurable versions of the gradient, oscillation and speed bounds."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import NonStationary, ParameterError
from .nonlinearity import Nonlinearity
from .reduced import ModelParams, Trajectory

MIN_WINDOW_SAMPLES = 20
STATIONARY_TOL = 0.01
BOUND_HEADROOM = 1e-9


@dataclass(frozen=True)
class SpeedEstimate:
    c_eps: float
    scaled_speed: float
    fit_window: tuple
    fit_residual_sup: float
    K_emp: float
    stationary: bool
    half_slopes: tuple
    intercept: float

    def to_dict(self):
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        d["half_slopes"] = list(self.half_slopes)
        return d


def _slope(t, y):
    A = np.column_stack([t, np.ones_like(t)])
    (s, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(s), float(b)


def band_width(traj: Trajectory, c_eps: float) -> float:
    """``sup_k max_z |chi(z, t_k) - c_eps t_k|`` over all samples.

    Without per-sample extremes (CSV input) the bound
    ``|mean - c t| + oscillation`` is used instead.
    """
    line = c_eps * traj.t
    if traj.lo is not None and traj.hi is not None:
        return float(np.max(np.maximum(np.abs(traj.hi - line), np.abs(traj.lo - line))))
    return float(np.max(np.abs(traj.mean - line) + traj.oscillation))


def extract_speed(
    traj: Trajectory,
    params: ModelParams,
    window_fraction: float = 0.5,
    raise_nonstationary: bool = True,
) -> SpeedEstimate:
    """Least-squares slope of the profile mean over the last ``window_fraction`` of the run."""
    if not 0 < window_fraction <= 1:
        raise ParameterError(f"window_fraction must lie in (0, 1], got {window_fraction}")
    t, mean = np.asarray(traj.t), np.asarray(traj.mean)
    if np.any(np.diff(t) <= 0):
        raise ParameterError("trajectory times must be strictly increasing")
    T = t[-1]
    win = t >= T * (1.0 - window_fraction)
    if win.sum() < MIN_WINDOW_SAMPLES:
        raise ParameterError(f"need {MIN_WINDOW_SAMPLES} samples in the fit window, got {int(win.sum())}")
    c, b = _slope(t[win], mean[win])
    resid = float(np.max(np.abs(mean[win] - (c * t[win] + b))))

    first = (t >= T / 2) & (t <= 3 * T / 4)
    second = t >= 3 * T / 4
    s1 = _slope(t[first], mean[first])[0] if first.sum() >= 2 else np.nan
    s2 = _slope(t[second], mean[second])[0] if second.sum() >= 2 else np.nan
    scale = max(abs(s1), abs(s2))
    stationary = bool(abs(s1 - s2) < STATIONARY_TOL * scale or scale <= 1e-14)

    est = SpeedEstimate(
        c_eps=c,
        scaled_speed=c / params.reaction_scale,
        fit_window=(float(t[win][0]), float(T)),
        fit_residual_sup=resid,
        K_emp=band_width(traj, c),
        stationary=stationary,
        half_slopes=(float(s1), float(s2)),
        intercept=b,
    )
    if raise_nonstationary and not stationary:
        raise NonStationary(
            f"slopes on [T/2, 3T/4] and [3T/4, T] differ by {abs(s1 - s2) / scale:.3%}; extend the horizon",
            estimate=est,
        )
    return est


def is_degenerate(params: ModelParams, g: Nonlinearity) -> bool:
    """Zero limit speed is expected: ``g`` vanishes identically, or ``p = 0`` and ``g`` touches zero."""
    return g.sup_norm == 0 or (params.p_norm == 0 and g.attains_zero)


def check_speed_bounds(est: SpeedEstimate, params: ModelParams, g: Nonlinearity) -> dict:
    """``0 < c_eps <= eps^(1-alpha) ||g||_inf``; the degenerate case expects ``c_eps = 0``."""
    upper = params.reaction_scale * g.sup_norm
    degenerate = is_degenerate(params, g)
    if degenerate:
        lower_ok = abs(est.c_eps) <= BOUND_HEADROOM
    else:
        lower_ok = est.c_eps > 0
    upper_ok = est.c_eps <= upper + BOUND_HEADROOM
    return {
        "name": "speed_bounds",
        "pass": bool(lower_ok and upper_ok),
        "measured": est.c_eps,
        "upper": upper,
        "degenerate": degenerate,
        "positive": bool(est.c_eps > 0),
    }


def band_check(traj: Trajectory, est: SpeedEstimate, traj_long: Trajectory, est_long: SpeedEstimate,
               tol: float = 0.1) -> dict:
    """The band half-width must not grow when the horizon doubles."""
    k1 = band_width(traj, est.c_eps)
    k2 = band_width(traj_long, est_long.c_eps)
    big = max(k1, k2)
    rel = abs(k2 - k1) / big if big > 0 else 0.0
    ok = rel < tol or big < 1e-9
    return {"name": "band", "pass": bool(ok), "K_emp": k1, "K_emp_doubled": k2, "relative_change": rel,
            "tolerance": tol, "T": traj.horizon, "T_doubled": traj_long.horizon}


@dataclass(frozen=True)
class ScalingFit:
    eps_list: tuple
    observable: tuple
    slope: float | None
    intercept: float | None
    r2: float | None
    ratios: tuple
    expected_exponent: float
    passed: bool
    tag: str = ""

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["eps_list"] = list(self.eps_list)
        d["observable"] = list(self.observable)
        d["ratios"] = list(self.ratios)
        return d


def _sweep_params(params_list):
    eps = [p.eps for p in params_list]
    if len(eps) < 4:
        raise ParameterError(f"a scaling sweep needs at least 4 eps values, got {len(eps)}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ParameterError("eps values must be strictly decreasing")
    if len({(p.alpha, p.p_norm) for p in params_list}) != 1:
        raise ParameterError("alpha and p must be identical across the sweep")
    return eps


def gradient_observable(traj: Trajectory, p_norm: float) -> float:
    """``sup_t sup_x |D w|``, with ``|D w| = |p| |d chi/dz|``."""
    return float(p_norm * np.max(traj.grad_sup))


def bernstein_scaling(trajs, params_list, g: Nonlinearity, exponent_slack: float = 0.05,
                      ratio_cap: float = 1.0) -> ScalingFit:
    """Fit ``log(sup |Dw|)`` against ``log eps`` across a sweep.

    Passes when the fitted exponent is at least ``(1-alpha)/4 - exponent_slack``
    and the ratio to ``eps^((1-alpha)/4) (1+|p|) ||g||_{1,inf}`` stays below
    ``ratio_cap`` without growing as ``eps`` shrinks.
    """
    eps = _sweep_params(params_list)
    alpha, p = params_list[0].alpha, params_list[0].p_norm
    expo = (1.0 - alpha) / 4.0
    obs = [gradient_observable(tr, p) for tr in trajs]
    if g.is_constant or max(obs) <= 1e-12:
        return ScalingFit(tuple(eps), tuple(obs), None, None, None, tuple(0.0 for _ in obs), expo, True,
                          "flat profile")
    x, y = np.log(eps), np.log(obs)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    ratios = [o / (e ** expo * (1.0 + p) * g.lipschitz_norm) for o, e in zip(obs, eps)]
    bounded = max(ratios) <= ratio_cap and ratios[-1] <= ratios[0]
    ok = slope >= expo - exponent_slack and bounded
    return ScalingFit(tuple(eps), tuple(obs), float(slope), float(intercept), r2, tuple(ratios), expo, bool(ok))


def oscillation_check(trajs, params_list, bound: float = 2.0, slack: float = 1.0) -> dict:
    """``sup_t osc(chi) <= bound + slack`` at every eps, nonincreasing as eps shrinks."""
    eps = _sweep_params(params_list)
    osc = [float(np.max(tr.oscillation)) for tr in trajs]
    within = all(o <= bound + slack for o in osc)
    monotone = all(b <= a for a, b in zip(osc, osc[1:]))
    return {"name": "oscillation", "pass": bool(within and monotone), "eps": eps, "oscillation_sup": osc,
            "bound": bound + slack, "nonincreasing": bool(monotone)}
