"""C-regularized translation semigroup W(t) = e^{lambda t} T(t) C on C_0([0, inf)).

T(t) is the left translation f -> f(. + t) and C an injective bounded
multiplier commuting with it: the identity or a constant 0 < c <= 1. A
diagonal-decay C (factor base^-k on index k) is available for sequences,
where it only serves the Im(C) norm.

Also here: the solution orbit t -> e^{tA} x of the frequently hypercyclic
vector built for the translation generator, evaluated at real t.
"""
import bisect
import logging
import math
from enum import Enum
from fractions import Fraction
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, model_validator

from hypercyclic_lab.constructor import FhcPlacement
from hypercyclic_lab.lab_error import LabError, ErrorCode
from hypercyclic_lab.operators import TranslationModel
from hypercyclic_lab.spaces import (PiecewiseLinearFn, PolySeries, Scalar, SparseVector, Vector, as_working,
                                    linear_combine, max_slope, norm, pl_shift, scale, with_log_scale)

logger = logging.getLogger("regularized-semigroup")

_SMOOTHNESS_TOLERANCE = 1e-12
_WINDOW_DEPTH = 60


class RegularizerKind(str, Enum):
    identity = 'identity'
    scalar = 'scalar'
    diagonal_decay = 'diagonal_decay'


class Regularizer(BaseModel, frozen=True):
    kind: RegularizerKind = RegularizerKind.identity
    factor: Scalar = Fraction(1)

    @model_validator(mode='after')
    def check_factor(self):
        if isinstance(self.factor, complex):
            raise ValueError(f"the regularizer factor must be real (got {self.factor})")
        if self.kind == RegularizerKind.scalar and not 0 < self.factor <= 1:
            raise ValueError(f"a scalar regularizer needs 0 < c <= 1 (got {self.factor})")
        if self.kind == RegularizerKind.diagonal_decay and not self.factor > 1:
            raise ValueError(f"diagonal decay needs a base > 1 (got {self.factor})")
        return self


class RegularizedSemigroup(BaseModel, frozen=True):
    rate: Scalar = Fraction(1)
    regularizer: Regularizer = Regularizer()

    @model_validator(mode='after')
    def check_rate(self):
        if isinstance(self.rate, complex) or not self.rate > 0:
            raise ValueError(f"lambda must be real and > 0 (got {self.rate})")
        return self


def apply_c(sg: RegularizedSemigroup, x: Vector) -> Vector:
    c = sg.regularizer
    if c.kind == RegularizerKind.identity:
        return x
    if c.kind == RegularizerKind.scalar:
        return scale(c.factor, x)
    if not isinstance(x, SparseVector):
        raise LabError("diagonal decay acts on sequences only", ErrorCode.DOMAIN)
    return SparseVector.from_dict({k: v * c.factor ** -k for k, v in x.entries}, x.space)


def apply_c_inverse(sg: RegularizedSemigroup, x: Vector) -> Vector:
    c = sg.regularizer
    if c.kind == RegularizerKind.identity:
        return x
    if c.kind == RegularizerKind.scalar:
        return scale(1 / c.factor, x)
    if not isinstance(x, SparseVector):
        raise LabError("diagonal decay acts on sequences only, so this vector is not in Im(C)", ErrorCode.DOMAIN)
    return SparseVector.from_dict({k: v * c.factor ** k for k, v in x.entries}, x.space)


def _check_time(t):
    if t < 0:
        raise LabError(f"the semigroup is defined for t >= 0 (got t={t})", ErrorCode.DOMAIN)


def w_apply(sg: RegularizedSemigroup, t, f: PiecewiseLinearFn) -> PiecewiseLinearFn:
    _check_time(t)
    if not isinstance(f, PiecewiseLinearFn):
        raise LabError(f"W(t) acts on piecewise-linear functions, not {type(f).__name__}", ErrorCode.SPACE_MISMATCH)
    return apply_c(sg, with_log_scale(pl_shift(f, -t), sg.rate * t))


def semigroup_law_residual(sg: RegularizedSemigroup, t, s, f: PiecewiseLinearFn):
    """||W(t) W(s) f - C W(t + s) f||; exactly zero for rational t, s, lambda and f."""
    _check_time(t)
    _check_time(s)
    composed = w_apply(sg, t, w_apply(sg, s, f))
    combined = apply_c(sg, w_apply(sg, t + s, f))
    return norm(linear_combine(1, composed, -1, combined))


def _bump_values(f: PolySeries, xs):
    a, b = float(f.model.a), float(f.model.b)
    inside = (xs >= a) & (xs <= b)
    return np.where(inside, np.polynomial.polynomial.polyval(xs, f.numpy_coeffs()), 0.0)


def _check_smooth_bump(f):
    if not isinstance(f, PolySeries):
        raise LabError(f"the generator check needs a smooth bump (a polynomial on [a, b] extended by zero), "
                       f"got {type(f).__name__}", ErrorCode.DOMAIN)
    if f.is_zero():
        return
    coeffs = f.numpy_coeffs()
    derivative = np.polynomial.polynomial.polyder(coeffs)
    for x in (float(f.model.a), float(f.model.b)):
        edge = max(abs(np.polynomial.polynomial.polyval(x, coeffs)),
                   abs(np.polynomial.polynomial.polyval(x, derivative)))
        if edge > _SMOOTHNESS_TOLERANCE:
            raise LabError(f"not a C^1 bump: value or slope {edge:.3g} at the support end {x}", ErrorCode.DOMAIN)


def generator_residual(sg: RegularizedSemigroup, f: PolySeries, t_step: float, grid_points: int = 2001) -> float:
    """sup over a grid of |C^-1 (W(h) f - C f)/h - (f' + lambda f)|, h = t_step."""
    if t_step <= 0:
        raise LabError(f"t_step must be > 0 (got {t_step})", ErrorCode.DOMAIN)
    if sg.regularizer.kind == RegularizerKind.diagonal_decay:
        raise LabError("diagonal decay acts on sequences only", ErrorCode.DOMAIN)
    _check_smooth_bump(f)
    if f.is_zero():
        return 0.0
    rate = float(sg.rate)
    xs = np.linspace(float(f.model.a), float(f.model.b), grid_points)
    # C is a constant multiplier here, so C^-1 (W(h) f - C f) = e^{lambda h} f(. + h) - f
    quotient = (math.exp(rate * t_step) * _bump_values(f, xs + t_step) - _bump_values(f, xs)) / t_step
    derivative = PolySeries.from_coeffs(np.polynomial.polynomial.polyder(f.numpy_coeffs()).tolist(), f.model)
    expected = _bump_values(derivative, xs) + rate * _bump_values(f, xs)
    return float(np.max(np.abs(quotient - expected)))


def imc_norm(sg: RegularizedSemigroup, x: Vector) -> float:
    """||C^-1 x||, the norm of the Banach space Im(C)."""
    preimage = apply_c_inverse(sg, x)
    value = float(norm(preimage))
    if not math.isfinite(value):
        raise LabError("vector is not in Im(C): its preimage under C is not finite", ErrorCode.DOMAIN)
    return value


def translation_modulus(y: PiecewiseLinearFn, rate, s) -> float:
    """Upper bound for ||e^{lambda s} y(. + s) - y|| on the half-line."""
    growth = math.exp(float(rate) * float(s))
    return (growth - 1.0) * float(norm(y)) + growth * max_slope(y) * float(s)


def continuity_window(y: PiecewiseLinearFn, rate, epsilon) -> Fraction:
    """Largest dyadic delta <= 1 with translation_modulus(y, rate, delta) < epsilon / 2, or 0."""
    for i in range(_WINDOW_DEPTH + 1):
        delta = Fraction(1, 2 ** i)
        if translation_modulus(y, rate, delta) < epsilon / 2:
            return delta
    return Fraction(0)


def strong_continuity_profile(sg: RegularizedSemigroup, f: PiecewiseLinearFn, levels: int = 10):
    """Rows (t, ||W(t) f - C f||, modulus bound) for t = 1, 1/2, ..., 2^-levels."""
    cf = apply_c(sg, f)
    rows = []
    for i in range(levels + 1):
        t = Fraction(1, 2 ** i)
        gap = float(norm(linear_combine(1, w_apply(sg, t, f), -1, cf)))
        rows.append((t, gap, translation_modulus(cf, sg.rate, t)))
    return rows


class SolutionOrbit:
    """t -> e^{tA} x for the vector x of a translation placement."""

    def __init__(self, placement: FhcPlacement):
        cert = placement.cert
        if not isinstance(cert.op, TranslationModel):
            raise LabError(f"solution orbits need the translation generator, not {cert.op.label}", ErrorCode.DOMAIN)
        if cert.power != 1 or cert.scalar_twist != 1 or cert.swapped:
            raise LabError("solution orbits need an untransformed translation certificate", ErrorCode.DOMAIN)
        self.placement = placement
        self.rate = float(cert.op.rate)
        self._rate = as_working(cert.op.rate, cert.exact)

    def _backward_bound(self, y, distance) -> float:
        # members are integers at least one apart
        return float(norm(y)) * math.exp(-self.rate * float(distance)) / -math.expm1(-self.rate)

    def at(self, t) -> Tuple[PiecewiseLinearFn, float]:
        p = self.placement
        _check_time(t)
        if t > p.horizon:
            raise LabError(f"t={t} lies beyond the placement horizon {p.horizon}", ErrorCode.DOMAIN)
        total, error = PiecewiseLinearFn.zero(), 0.0
        for l in p.target_indices():
            y = p.cert.target(l)
            members = p.members(l)
            i = bisect.bisect_left(members, t)
            for j in members[i:]:
                d = j - t
                bound = self._backward_bound(y, d)
                if p.negligible is not None and d > 0 and bound <= p.negligible:
                    error += bound
                    break
                total = linear_combine(1, total, 1, with_log_scale(pl_shift(y, d), -self._rate * d))
            else:
                error += self._backward_bound(y, p.next_member_beyond(l, p.horizon) - t)
            reach = y.support_end
            for j in reversed(members[:i]):
                d = t - j
                if d >= reach:
                    break
                total = linear_combine(1, total, 1, with_log_scale(pl_shift(y, -d), self._rate * d))
        return total, error


def solution_orbit(placement: FhcPlacement) -> SolutionOrbit:
    return SolutionOrbit(placement)
