"""Finite vectors, their norms, and the dense target enumerations.

Three families of finite objects stand in for elements of the Banach
spaces the operators act on:

* ``SparseVector``: finitely supported sequences in l_p (p >= 1) or c_0,
  indices from 1.
* ``PolySeries``: polynomials, normed either as the Hardy space H^2 of the
  unit disc (l_2 norm of the Taylor coefficients) or as C^k[a, b].
* ``PiecewiseLinearFn``: compactly supported piecewise-linear functions on
  the half-line, normed by the sup norm. Values carry a shared exponential
  factor ``exp(log_scale)`` so translations and their rescalings stay exact.

Scalars are ``Fraction`` in rational mode and ``float``/``complex`` in float
mode; arithmetic never mixes the two on purpose.
"""
import itertools
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Annotated, Any, Dict, Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer, model_validator

from hypercyclic_lab.lab_error import LabError, ErrorCode

logger = logging.getLogger("spaces")


def parse_scalar(value):
    if isinstance(value, bool):
        raise ValueError("expected a number, got a boolean")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, (float, complex)):
        return value
    if isinstance(value, dict) and set(value) == {'re', 'im'}:
        return complex(float(value['re']), float(value['im']))
    if isinstance(value, str):
        text = value.strip().replace(' ', '')
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            pass
        try:
            z = complex(text)
        except ValueError:
            raise ValueError(f"not a number: '{value}' (examples: 2, 1/2, 0.5, 2j, 1+1j)")
        return z.real if z.imag == 0 else z
    raise ValueError(f"not a number: {value!r}")


def format_scalar(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        return repr(value)
    return value


Scalar = Annotated[Any, BeforeValidator(parse_scalar), PlainSerializer(format_scalar)]


def as_working(value, exact: bool):
    """The scalar as used in arithmetic: Fractions survive only in rational mode."""
    if exact or not isinstance(value, Fraction):
        return value
    return float(value)


class SequenceSpace(BaseModel, frozen=True):
    kind: Literal['lp', 'c0'] = 'lp'
    p: float = 2.0

    @model_validator(mode='after')
    def check_exponent(self):
        if self.kind == 'lp' and not (1 <= self.p < math.inf):
            raise ValueError(f"p must satisfy 1 <= p < inf (got {self.p})")
        return self

    @property
    def p_exponent(self):
        return int(self.p) if float(self.p).is_integer() else self.p

    @property
    def label(self):
        return 'c0' if self.kind == 'c0' else f"l{self.p_exponent}"


class PolyModel(BaseModel, frozen=True):
    kind: Literal['h2', 'ck'] = 'h2'
    k: int = Field(1, ge=0)
    a: Scalar = Fraction(0)
    b: Scalar = Fraction(1)
    mesh: float = Field(1e-4, gt=0)

    @model_validator(mode='after')
    def check_interval(self):
        if isinstance(self.a, complex) or isinstance(self.b, complex) or not self.a < self.b:
            raise ValueError(f"need real a < b (got a={self.a}, b={self.b})")
        return self

    @property
    def base_point(self):
        # antiderivatives vanish here
        return self.a if self.kind == 'ck' else Fraction(0)

    @property
    def label(self):
        return 'H2' if self.kind == 'h2' else f"C^{self.k}[{self.a},{self.b}]"


class HalfLineSpace(BaseModel, frozen=True):
    kind: Literal['c0_plus'] = 'c0_plus'

    @property
    def label(self):
        return 'C0(R+)'


Space = Union[SequenceSpace, PolyModel, HalfLineSpace]


@dataclass(frozen=True)
class SparseVector:
    entries: Tuple[Tuple[int, Any], ...]
    space: SequenceSpace

    @classmethod
    def from_dict(cls, entries: Dict[int, Any], space: SequenceSpace) -> 'SparseVector':
        items = []
        for k, c in sorted(entries.items()):
            if k < 1:
                raise LabError(f"sequence index must be >= 1 (got {k})", ErrorCode.DOMAIN)
            if c != 0:
                items.append((k, c))
        return cls(tuple(items), space)

    @classmethod
    def basis(cls, k: int, space: SequenceSpace, coefficient=Fraction(1)) -> 'SparseVector':
        return cls.from_dict({k: coefficient}, space)

    def as_dict(self) -> Dict[int, Any]:
        return dict(self.entries)

    def get(self, k: int):
        return self.as_dict().get(k, 0)

    @property
    def support(self) -> List[int]:
        return [k for k, _ in self.entries]

    def is_zero(self):
        return not self.entries


@dataclass(frozen=True)
class PolySeries:
    coeffs: Tuple[Any, ...]
    model: PolyModel

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, model: PolyModel) -> 'PolySeries':
        coeffs = list(coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        return cls(tuple(coeffs), model)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def numpy_coeffs(self):
        dtype = complex if any(isinstance(c, complex) for c in self.coeffs) else float
        return np.array([complex(c) if dtype is complex else float(c) for c in self.coeffs], dtype=dtype)


@dataclass(frozen=True)
class PiecewiseLinearFn:
    breakpoints: Tuple[Any, ...]
    values: Tuple[Any, ...]
    log_scale: Any = Fraction(0)

    def __post_init__(self):
        if self.values and self.values[0] != 0 and self.breakpoints[0] != 0:
            raise LabError("a continuous function must vanish at its first breakpoint unless it sits at 0",
                           ErrorCode.DOMAIN)

    @classmethod
    def from_points(cls, breakpoints: Sequence, values: Sequence, log_scale=Fraction(0)) -> 'PiecewiseLinearFn':
        breakpoints, values = list(breakpoints), list(values)
        if len(breakpoints) != len(values):
            raise LabError(f"{len(breakpoints)} breakpoints but {len(values)} values", ErrorCode.DOMAIN)
        if any(x < 0 for x in breakpoints):
            raise LabError(f"breakpoints must lie in [0, inf): {breakpoints}", ErrorCode.DOMAIN)
        if any(b <= a for a, b in zip(breakpoints, breakpoints[1:])):
            raise LabError(f"breakpoints must be strictly increasing: {breakpoints}", ErrorCode.DOMAIN)
        breakpoints, values = _prune_zero_runs(breakpoints, values)
        if values and values[-1] != 0:
            raise LabError("a compactly supported function must vanish at its last breakpoint", ErrorCode.DOMAIN)
        return cls(tuple(breakpoints), tuple(values), log_scale if values else Fraction(0))

    @classmethod
    def tent(cls, left, peak, right, height=Fraction(1)) -> 'PiecewiseLinearFn':
        return cls.from_points([left, peak, right], [0, height, 0])

    @classmethod
    def zero(cls) -> 'PiecewiseLinearFn':
        return cls((), (), Fraction(0))

    def is_zero(self):
        return not self.values

    @property
    def support_end(self):
        return self.breakpoints[-1] if self.breakpoints else 0

    def raw_at(self, x):
        """Value at x without the ``exp(log_scale)`` factor."""
        bps = self.breakpoints
        if not bps or x < bps[0] or x > bps[-1]:
            return 0
        i = bisect_right(bps, x) - 1
        if bps[i] == x or i == len(bps) - 1:
            return self.values[i]
        x0, x1 = bps[i], bps[i + 1]
        v0, v1 = self.values[i], self.values[i + 1]
        return v0 + (v1 - v0) * (x - x0) / (x1 - x0)

    def at(self, x):
        return scaled_value(self.raw_at(x), self.log_scale)


Vector = Union[SparseVector, PolySeries, PiecewiseLinearFn]


def _prune_zero_runs(breakpoints, values):
    if all(v == 0 for v in values):
        return [], []
    while len(values) >= 2 and values[0] == 0 and values[1] == 0:
        breakpoints, values = breakpoints[1:], values[1:]
    while len(values) >= 2 and values[-1] == 0 and values[-2] == 0:
        breakpoints, values = breakpoints[:-1], values[:-1]
    return breakpoints, values


def scaled_value(value, log_scale):
    if log_scale == 0:
        return value
    if value == 0:
        return 0.0
    magnitude = math.log(abs(value)) + float(log_scale)
    unit = value / abs(value)
    try:
        return unit * math.exp(magnitude)
    except OverflowError:
        return unit * math.inf


def space_of(v: Vector):
    if isinstance(v, SparseVector):
        return v.space
    if isinstance(v, PolySeries):
        return v.model
    if isinstance(v, PiecewiseLinearFn):
        return HalfLineSpace()
    raise LabError(f"not a vector of any supported space: {type(v).__name__}", ErrorCode.SPACE_MISMATCH)


def zero_like(v: Vector) -> Vector:
    return zero_of(space_of(v))


def zero_of(space: Space) -> Vector:
    if isinstance(space, SequenceSpace):
        return SparseVector((), space)
    if isinstance(space, PolyModel):
        return PolySeries((), space)
    return PiecewiseLinearFn.zero()


def is_zero(v: Vector) -> bool:
    return v.is_zero()


# norms

def norm_pth_power(v: SparseVector):
    """Exact sum of |x_k|^p (rational entries and integer p stay rational)."""
    p = v.space.p_exponent
    return sum((abs(c) ** p for _, c in v.entries), Fraction(0))


def _sequence_norm(v: SparseVector):
    if not v.entries:
        return 0.0
    if v.space.kind == 'c0':
        return max(abs(c) for _, c in v.entries)
    p = v.space.p_exponent
    if p == 1:
        return sum((abs(c) for _, c in v.entries), Fraction(0))
    biggest = max(float(abs(c)) for _, c in v.entries)
    if biggest == 0.0 or math.isinf(biggest):
        return biggest
    if all(isinstance(c, Fraction) for _, c in v.entries) and isinstance(p, int):
        total = norm_pth_power(v)
        return float(total) ** (1.0 / p) if float(total) > 0 else biggest
    # rescale so large weights do not overflow
    total = math.fsum((float(abs(c)) / biggest) ** p for _, c in v.entries)
    return biggest * total ** (1.0 / p)


def _hardy_norm(v: PolySeries) -> float:
    if not v.coeffs:
        return 0.0
    biggest = max(float(abs(c)) for c in v.coeffs)
    if biggest == 0.0 or math.isinf(biggest):
        return biggest
    return biggest * math.sqrt(math.fsum((float(abs(c)) / biggest) ** 2 for c in v.coeffs))


def ck_norm_interval(v: PolySeries) -> Tuple[float, float]:
    """Enclosure of max_{i<=k} sup_{[a,b]} |f^(i)| from a grid of the model's mesh.

    The upper end adds mesh * (Lipschitz bound of f^(i)) per derivative, the
    Lipschitz bound taken from the coefficients at R = max(|a|, |b|).
    """
    if not v.coeffs:
        return 0.0, 0.0
    model = v.model
    a, b = float(model.a), float(model.b)
    points = int(math.ceil((b - a) / model.mesh)) + 1
    xs = np.linspace(a, b, points)
    mesh = (b - a) / (points - 1)
    radius = max(abs(a), abs(b))
    coeffs = v.numpy_coeffs()
    lo = hi = 0.0
    for _ in range(model.k + 1):
        if coeffs.size == 0:
            break
        sampled = float(np.max(np.abs(np.polynomial.polynomial.polyval(xs, coeffs))))
        derivative = np.polynomial.polynomial.polyder(coeffs) if coeffs.size > 1 else np.zeros(0)
        lipschitz = float(sum(abs(c) * radius ** j for j, c in enumerate(derivative.tolist())))
        lo = max(lo, sampled)
        hi = max(hi, sampled + mesh * lipschitz)
        coeffs = derivative
    return lo, hi


def _pl_norm(v: PiecewiseLinearFn) -> float:
    if not v.values:
        return 0.0
    biggest = max(abs(x) for x in v.values)
    return float(abs(scaled_value(biggest, v.log_scale)))


def norm(v: Vector):
    if isinstance(v, SparseVector):
        return _sequence_norm(v)
    if isinstance(v, PolySeries):
        if v.model.kind == 'h2':
            return _hardy_norm(v)
        return ck_norm_interval(v)[1]
    if isinstance(v, PiecewiseLinearFn):
        return _pl_norm(v)
    raise LabError(f"cannot take the norm of {type(v).__name__}", ErrorCode.SPACE_MISMATCH)


def max_slope(f: PiecewiseLinearFn) -> float:
    if len(f.values) < 2:
        return 0.0
    steepest = max(abs((v1 - v0) / (x1 - x0))
                   for x0, x1, v0, v1 in zip(f.breakpoints, f.breakpoints[1:], f.values, f.values[1:]))
    return float(abs(scaled_value(steepest, f.log_scale)))


# linear structure

def _check_same_space(u: Vector, v: Vector):
    if type(u) is not type(v) or space_of(u) != space_of(v):
        raise LabError(f"cannot combine a vector of {space_of(u).label} with one of {space_of(v).label}",
                       ErrorCode.SPACE_MISMATCH)


def scale(c, v: Vector) -> Vector:
    if c == 1:
        return v
    if isinstance(v, SparseVector):
        return SparseVector.from_dict({k: c * x for k, x in v.entries}, v.space)
    if isinstance(v, PolySeries):
        return PolySeries.from_coeffs([c * x for x in v.coeffs], v.model)
    if isinstance(v, PiecewiseLinearFn):
        if c == 0 or v.is_zero():
            return PiecewiseLinearFn.zero()
        return PiecewiseLinearFn(v.breakpoints, tuple(c * x for x in v.values), v.log_scale)
    raise LabError(f"cannot scale {type(v).__name__}", ErrorCode.SPACE_MISMATCH)


def linear_combine(a, u: Vector, b, v: Vector) -> Vector:
    """a*u + b*v, zeros pruned."""
    _check_same_space(u, v)
    if isinstance(u, SparseVector):
        out = {k: a * c for k, c in u.entries}
        for k, c in v.entries:
            out[k] = out.get(k, 0) + b * c
        return SparseVector.from_dict(out, u.space)
    if isinstance(u, PolySeries):
        size = max(len(u.coeffs), len(v.coeffs))
        cu = list(u.coeffs) + [0] * (size - len(u.coeffs))
        cv = list(v.coeffs) + [0] * (size - len(v.coeffs))
        return PolySeries.from_coeffs([a * x + b * y for x, y in zip(cu, cv)], u.model)
    return _combine_pl(a, u, b, v)


def _combine_pl(a, u: PiecewiseLinearFn, b, v: PiecewiseLinearFn) -> PiecewiseLinearFn:
    if u.is_zero() or a == 0:
        return scale(b, v)
    if v.is_zero() or b == 0:
        return scale(a, u)
    if u.log_scale == v.log_scale:
        common, fu, fv = u.log_scale, 1, 1
    else:
        # keep the larger exponent symbolic, shrink the other one
        common = max(u.log_scale, v.log_scale)
        fu = math.exp(float(u.log_scale - common))
        fv = math.exp(float(v.log_scale - common))
    grid = sorted(set(u.breakpoints) | set(v.breakpoints))
    values = [a * fu * u.raw_at(x) + b * fv * v.raw_at(x) for x in grid]
    grid, values = _prune_zero_runs(grid, values)
    if not values:
        return PiecewiseLinearFn.zero()
    return PiecewiseLinearFn(tuple(grid), tuple(values), common)


def difference(u: Vector, v: Vector) -> Vector:
    return linear_combine(1, u, -1, v)


def distance(u: Vector, v: Vector):
    return norm(difference(u, v))


def sum_vectors(vectors: Sequence[Vector], like: Vector) -> Vector:
    total = zero_like(like)
    for v in vectors:
        total = linear_combine(1, total, 1, v)
    return total


def to_float(v: Vector) -> Vector:
    """Drop exactness: Fractions become floats."""
    if isinstance(v, SparseVector):
        return SparseVector.from_dict({k: as_working(c, False) for k, c in v.entries}, v.space)
    if isinstance(v, PolySeries):
        return PolySeries.from_coeffs([as_working(c, False) for c in v.coeffs], v.model)
    return PiecewiseLinearFn(tuple(as_working(x, False) for x in v.breakpoints),
                             tuple(as_working(x, False) for x in v.values), v.log_scale)


# half-line translations

def pl_shift(f: PiecewiseLinearFn, offset) -> PiecewiseLinearFn:
    """x -> f(x - offset) restricted to [0, inf); negative offsets move left and clip at 0."""
    if f.is_zero() or offset == 0:
        return f
    if offset > 0:
        if f.values[0] != 0:
            raise LabError(f"shifting right by {offset} a function with value {f.values[0]} at 0 leaves "
                           f"C_0[0, inf) (jump at {offset})", ErrorCode.DOMAIN)
        return PiecewiseLinearFn(tuple(x + offset for x in f.breakpoints), f.values, f.log_scale)
    cut = -offset
    if f.breakpoints[-1] <= cut:
        return PiecewiseLinearFn.zero()
    bps, vals = [], []
    if f.breakpoints[0] < cut and cut not in f.breakpoints:
        bps.append(cut)
        vals.append(f.raw_at(cut))
    for x, y in zip(f.breakpoints, f.values):
        if x >= cut:
            bps.append(x)
            vals.append(y)
    bps, vals = _prune_zero_runs([x - cut for x in bps], vals)
    if not vals:
        return PiecewiseLinearFn.zero()
    return PiecewiseLinearFn(tuple(bps), tuple(vals), f.log_scale)


def with_log_scale(f: PiecewiseLinearFn, delta) -> PiecewiseLinearFn:
    if f.is_zero() or delta == 0:
        return f
    return PiecewiseLinearFn(f.breakpoints, f.values, f.log_scale + delta)


# dense enumerations

def _dyadic_level(v: Fraction) -> int:
    return v.denominator.bit_length() - 1


def stage_values(stage: int) -> List[Fraction]:
    """Nonzero points of 2^-(stage-1) Z in [-stage, stage], coarse before fine."""
    den = 2 ** (stage - 1)
    values = [Fraction(m, den) for m in range(-stage * den, stage * den + 1) if m != 0]
    return sorted(values, key=lambda v: (_dyadic_level(v), abs(v), v < 0))


def _staged_coefficients(width_of_stage) -> Iterator[Tuple[int, Tuple[Tuple[int, Fraction], ...]]]:
    stage = 1
    while True:
        width = width_of_stage(stage)
        values = stage_values(stage)
        for size in range(1, width + 1):
            for support in itertools.combinations(range(1, width + 1), size):
                for coeffs in itertools.product(values, repeat=size):
                    yield stage, tuple(zip(support, coeffs))
        stage += 1


def _hat_combination(stage: int, terms) -> PiecewiseLinearFn:
    h = Fraction(1, 2 ** (stage - 1))
    heights = dict(terms)
    top = max(heights) + 1
    grid = [i * h for i in range(0, top + 1)]
    values = [heights.get(i, Fraction(0)) for i in range(0, top + 1)]
    bps, vals = [grid[0]], [values[0]]
    for i in range(1, len(grid) - 1):
        # drop collinear interior points
        if (values[i] - values[i - 1]) != (values[i + 1] - values[i]):
            bps.append(grid[i])
            vals.append(values[i])
    bps.append(grid[-1])
    vals.append(values[-1])
    return PiecewiseLinearFn.from_points(bps, vals)


def _exactness(v: Vector, exact: bool) -> Vector:
    return v if exact else to_float(v)


def enumerate_targets(space: Space, count: int, exact: bool = False) -> List[Vector]:
    """First ``count`` elements of a fixed injective enumeration of a dense subset.

    Sequence spaces: finitely supported vectors with dyadic coefficients,
    stage s allowing indices <= s and coefficients in 2^-(s-1) Z ∩ [-s, s].
    Polynomial models: the same over the monomials 1, z, z^2, ...
    Half-line: sums of dyadic hat functions, stage s using hats of half-width
    2^-(s-1) centred on that grid up to s.
    """
    if count < 1:
        raise LabError(f"need at least one target (got {count})", ErrorCode.DOMAIN)
    if isinstance(space, SequenceSpace):
        def build(stage, terms):
            return SparseVector.from_dict(dict(terms), space)

        def key(v):
            return v.entries

        width = lambda s: s
    elif isinstance(space, PolyModel):
        def build(stage, terms):
            top = max(i for i, _ in terms)
            coeffs = [Fraction(0)] * top
            for i, c in terms:
                coeffs[i - 1] = c
            return PolySeries.from_coeffs(coeffs, space)

        def key(v):
            return v.coeffs

        width = lambda s: s
    elif isinstance(space, HalfLineSpace):
        build = _hat_combination

        def key(v):
            return v.breakpoints, v.values

        width = lambda s: s * 2 ** (s - 1)
    else:
        raise LabError(f"no enumeration for {space!r}", ErrorCode.SPACE_MISMATCH)

    seen = set()
    out = []
    for stage, terms in _staged_coefficients(width):
        v = build(stage, terms)
        k = key(v)
        if k in seen:
            continue
        seen.add(k)
        out.append(_exactness(v, exact))
        if len(out) == count:
            break
    logger.debug("enumerated %d targets of %s", count, space.label)
    return out


# JSON codec

def to_json_dict(v: Vector) -> dict:
    if isinstance(v, SparseVector):
        return {'type': 'sparse', 'space': v.space.model_dump(),
                'entries': [[k, format_scalar(c)] for k, c in v.entries]}
    if isinstance(v, PolySeries):
        return {'type': 'poly', 'model': v.model.model_dump(),
                'coeffs': [format_scalar(c) for c in v.coeffs]}
    if isinstance(v, PiecewiseLinearFn):
        return {'type': 'pl', 'breakpoints': [format_scalar(x) for x in v.breakpoints],
                'values': [format_scalar(x) for x in v.values],
                'log_scale': format_scalar(v.log_scale)}
    raise LabError(f"cannot serialise {type(v).__name__}", ErrorCode.SPACE_MISMATCH)


def from_json_dict(d: dict) -> Vector:
    kind = d.get('type')
    if kind == 'sparse':
        return SparseVector.from_dict({int(k): parse_scalar(c) for k, c in d['entries']},
                                      SequenceSpace.model_validate(d['space']))
    if kind == 'poly':
        return PolySeries.from_coeffs([parse_scalar(c) for c in d['coeffs']], PolyModel.model_validate(d['model']))
    if kind == 'pl':
        return PiecewiseLinearFn.from_points([parse_scalar(x) for x in d['breakpoints']],
                                             [parse_scalar(x) for x in d['values']],
                                             parse_scalar(d.get('log_scale', 0)))
    raise LabError(f"unknown vector type '{kind}' (expected sparse, poly or pl)", ErrorCode.CONFIG_VALIDATION)
