"""The 1-periodic, nonpositive, Lipschitz forcing ``g`` and its norms."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ParameterError

FAMILIES = ("constant", "shifted_cosine", "touching", "tabulated")
NORM_GRID = 4096
ZERO_THRESHOLD = 1e-12

_CODES = {
    "constant": _kernels.CONSTANT,
    "shifted_cosine": _kernels.SHIFTED_COSINE,
    "touching": _kernels.TOUCHING,
    "tabulated": _kernels.TABULATED,
}
_EMPTY = np.zeros(2)


@dataclass(frozen=True)
class Nonlinearity:
    """A forcing term ``g`` with period 1.

    Closed-form families carry exact analytic norms. A tabulated ``g`` holds
    samples on the closed grid ``v_j = j/M``, ``j = 0..M``, and is linearly
    interpolated in between; its norms are exact for that interpolant.

    ``lipschitz_const`` is the Lipschitz constant of ``g`` alone;
    ``lipschitz_norm`` is ``sup_norm + lipschitz_const``.
    """

    family: str
    params: tuple
    sup_norm: float
    lipschitz_const: float
    max_value: float
    min_value: float
    samples: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def lipschitz_norm(self) -> float:
        return self.sup_norm + self.lipschitz_const

    @property
    def attains_zero(self) -> bool:
        return self.max_value >= -ZERO_THRESHOLD

    @property
    def strictly_negative(self) -> bool:
        return not self.attains_zero

    @property
    def is_constant(self) -> bool:
        return self.lipschitz_const == 0.0

    def kernel_args(self):
        """``(code, a, b, table)`` as consumed by the compiled kernels."""
        code = _CODES[self.family]
        if self.family == "tabulated":
            return code, 0.0, 0.0, self.samples
        a = float(self.params[0])
        b = float(self.params[1]) if len(self.params) > 1 else 0.0
        return code, a, b, _EMPTY

    def __call__(self, v):
        scalar = np.ndim(v) == 0
        arr = np.ascontiguousarray(np.atleast_1d(np.asarray(v, dtype=float)).ravel())
        code, a, b, table = self.kernel_args()
        out = _kernels.g_array(code, a, b, table, arr)
        if scalar:
            return float(out[0])
        return out.reshape(np.shape(v))

    def to_dict(self) -> dict:
        if self.family == "constant":
            return {"family": "constant", "c": self.params[0]}
        if self.family == "shifted_cosine":
            return {"family": "shifted_cosine", "a": self.params[0], "b": self.params[1]}
        if self.family == "touching":
            return {"family": "touching", "a": self.params[0]}
        return {"family": "tabulated", "samples": [float(s) for s in self.samples]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def make_builtin(family: str, *params) -> Nonlinearity:
    """Build one of the closed-form families, or a tabulated ``g``.

    ``constant(c)`` is ``g = c`` with ``c <= 0``; ``shifted_cosine(a, b)`` is
    ``g(v) = -(a + b cos 2 pi v)`` with ``a >= b >= 0``; ``touching(a)`` is
    ``g(v) = -(a/2)(1 - cos 2 pi v)`` with ``a >= 0``; ``tabulated(samples)``
    takes at least three samples on a closed uniform grid over ``[0, 1]``.
    """
    if family == "constant":
        (c,) = _arity(family, params, 1)
        if not c <= 0:
            raise ParameterError(f"constant(c) requires c <= 0, got c={c}")
        return Nonlinearity("constant", (c,), abs(c), 0.0, c, c)
    if family == "shifted_cosine":
        a, b = _arity(family, params, 2)
        if not b >= 0:
            raise ParameterError(f"shifted_cosine(a, b) requires b >= 0, got b={b}")
        if not a >= b:
            raise ParameterError(f"shifted_cosine(a, b) requires a >= b, got a={a}, b={b}")
        return Nonlinearity("shifted_cosine", (a, b), a + b, 2.0 * math.pi * b, -(a - b), -(a + b))
    if family == "touching":
        (a,) = _arity(family, params, 1)
        if not a >= 0:
            raise ParameterError(f"touching(a) requires a >= 0, got a={a}")
        return Nonlinearity("touching", (a,), a, math.pi * a, 0.0, -a)
    if family == "tabulated":
        if len(params) != 1:
            raise ParameterError("tabulated expects a single sequence of samples")
        s = np.array(params[0], dtype=float)
        if s.ndim != 1 or s.size < 3:
            raise ParameterError("tabulated needs a 1-D sequence of at least 3 samples")
        if not np.all(np.isfinite(s)):
            raise ParameterError("tabulated samples must be finite")
        s.setflags(write=False)
        m = s.size - 1
        lip = float(np.max(np.abs(np.diff(s)))) * m
        return Nonlinearity(
            "tabulated", (m,), float(np.max(np.abs(s))), lip, float(s.max()), float(s.min()), s
        )
    raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")


def _arity(family, params, n):
    if len(params) != n:
        raise ParameterError(f"{family} takes {n} parameter(s), got {len(params)}")
    out = tuple(float(p) for p in params)
    if not all(math.isfinite(p) for p in out):
        raise ParameterError(f"{family} parameters must be finite, got {out}")
    return out


def from_dict(desc: dict) -> Nonlinearity:
    """Build from a JSON-style description, e.g. ``{"family": "touching", "a": 1}``."""
    desc = dict(desc)
    family = desc.pop("family", None)
    keys = {
        "constant": ("c",),
        "shifted_cosine": ("a", "b"),
        "touching": ("a",),
        "tabulated": ("samples",),
    }
    if family not in keys:
        raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")
    missing = [k for k in keys[family] if k not in desc]
    extra = sorted(set(desc) - set(keys[family]))
    if missing or extra:
        raise ParameterError(f"{family}: missing keys {missing}, unexpected keys {extra}")
    return make_builtin(family, *(desc[k] for k in keys[family]))


def from_json(text: str) -> Nonlinearity:
    return from_dict(json.loads(text))


def eval_g(g: Nonlinearity, v: float) -> float:
    return g(v)


@dataclass
class ValidationReport:
    checks: dict
    details: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failed(self):
        return [name for name, passed in self.checks.items() if not passed]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": dict(self.checks), "details": dict(self.details)}


def validate(g: Nonlinearity, m: int = NORM_GRID) -> ValidationReport:
    """Check periodicity, sign and norm consistency of ``g`` on an ``m``-point grid."""
    if m < 16:
        raise ParameterError(f"validate needs at least 16 sample points, got {m}")
    v = np.arange(m) / m
    vals = g(v)
    shifted = g(v + 1.0)
    scale = 1.0 + g.sup_norm
    period_gap = float(np.max(np.abs(shifted - vals)))
    if g.family == "tabulated":
        period_gap = max(period_gap, abs(float(g.samples[-1] - g.samples[0])))
    slopes = np.abs(np.diff(np.append(vals, vals[0]))) * m
    max_abs = float(np.max(np.abs(vals)))
    max_val = float(np.max(vals))
    if g.family == "tabulated":
        max_val = max(max_val, float(np.max(g.samples)))
    tol = 1e-12 * scale
    checks = {
        "periodicity": period_gap <= tol,
        "sign": max_val <= 0.0,
        "sup_norm": g.sup_norm + tol >= max_abs,
        "lipschitz_norm": g.lipschitz_const + tol * m >= float(np.max(slopes)),
        "flags": g.strictly_negative != g.attains_zero,
    }
    details = {
        "grid": m,
        "period_gap": period_gap,
        "max_value": max_val,
        "grid_sup": max_abs,
        "grid_slope": float(np.max(slopes)),
        "sup_norm": g.sup_norm,
        "lipschitz_const": g.lipschitz_const,
    }
    return ValidationReport(checks, details)
