"""Periodic quadrature and the limit speed map ``c(p)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateForcing, ParameterError
from .nonlinearity import ZERO_THRESHOLD, Nonlinearity

P_NONZERO = "p_nonzero"
P_ZERO_STRICT = "p_zero_strict"
P_ZERO_TOUCHING = "p_zero_touching"

DEFAULT_NODES = 1024


@dataclass(frozen=True)
class EffectiveSpeed:
    value: float
    case_tag: str

    def to_dict(self):
        return {"value": self.value, "case": self.case_tag}


def _nodes(n):
    if n < 8:
        raise ParameterError(f"quadrature needs at least 8 nodes, got {n}")
    return np.arange(n) / n


def mean_g(g: Nonlinearity, n: int = DEFAULT_NODES) -> float:
    """Periodic trapezoid rule for the integral of ``g`` over one period."""
    return float(np.mean(g(_nodes(n))))


def harmonic_time_g(g: Nonlinearity, n: int = DEFAULT_NODES) -> float:
    """Periodic trapezoid rule for the integral of ``1/g`` over one period.

    Raises DegenerateForcing when ``max g >= -1e-12``.
    """
    if g.max_value >= -ZERO_THRESHOLD:
        raise DegenerateForcing(
            f"max g = {g.max_value:g} >= -{ZERO_THRESHOLD:g}; 1/g is not integrable"
        )
    return float(np.mean(1.0 / g(_nodes(n))))


def effective_speed(p_norm: float, g: Nonlinearity, n: int = DEFAULT_NODES) -> EffectiveSpeed:
    """Limit speed of planes with slope norm ``p_norm``.

    Arithmetic mean of ``-g`` for ``p != 0``, harmonic mean of ``-g`` for
    ``p = 0``, and zero when ``p = 0`` and ``g`` touches zero.
    """
    if p_norm < 0:
        raise ParameterError(f"p_norm must be nonnegative, got {p_norm}")
    if p_norm > 0:
        return EffectiveSpeed(-mean_g(g, n), P_NONZERO)
    if g.attains_zero:
        return EffectiveSpeed(0.0, P_ZERO_TOUCHING)
    return EffectiveSpeed(-1.0 / harmonic_time_g(g, n), P_ZERO_STRICT)


def simpson(f, lo: float, hi: float, panels: int) -> float:
    """Composite Simpson rule with ``panels`` (rounded up to even) subintervals."""
    if panels < 2:
        raise ParameterError(f"Simpson needs at least 2 panels, got {panels}")
    if panels % 2:
        panels += 1
    x = np.linspace(lo, hi, panels + 1)
    y = f(x)
    h = (hi - lo) / panels
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))
