"""Unbounded operator models with an explicit right inverse, and their
certificates.

Every model supplies a forward action ``A`` and a right inverse ``B`` with
``A B = I`` on the spaces' finite vectors:

* weighted backward shift on l_p / c_0, A e_{k+1} = w^k e_k (|w| > 1),
  B e_k = w^-k e_{k+1};
* differentiation D on polynomials with B the antiderivative vanishing at
  the model's base point;
* the generator of the exponentially rescaled left translation on
  C_0([0, inf)), A^n f = e^{lambda n} f(. + n) and B^n f = e^{-lambda n} f(. - n)
  (zero left of n).

A certificate fixes a model, a finite dense target list and three
transforms: a power r, a unimodular twist and an optional forward/inverse
swap. Its step-n forward action is ``twist^n A^{r n}`` (``twist^-n B^{r n}``
when swapped) and its inverse action the matching counterpart.
"""
import logging
import math
from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_serializer, field_validator, model_validator

from hypercyclic_lab.lab_error import LabError, ErrorCode
from hypercyclic_lab.spaces import (Scalar, SequenceSpace, PolyModel, HalfLineSpace, SparseVector, PolySeries,
                                    PiecewiseLinearFn, Vector, as_working, enumerate_targets, from_json_dict,
                                    linear_combine, norm, parse_scalar, pl_shift, scale, space_of, to_json_dict,
                                    with_log_scale)

logger = logging.getLogger("operators")

UNIMODULAR_TOLERANCE = 1e-12


class Precision(str, Enum):
    float = 'float'
    rational = 'rational'


class ShiftModel(BaseModel, frozen=True):
    kind: Literal['shift'] = 'shift'
    w: Scalar = Fraction(2)
    space: SequenceSpace = SequenceSpace()

    @model_validator(mode='after')
    def check_weight(self):
        if not abs(self.w) > 1:
            raise ValueError(f"the shift weight needs |w| > 1 (got w={self.w})")
        return self

    @property
    def target_space(self):
        return self.space

    @property
    def label(self):
        return f"weighted shift w={self.w} on {self.space.label}"


class DifferentiationModel(BaseModel, frozen=True):
    kind: Literal['differentiation'] = 'differentiation'
    model: PolyModel = PolyModel()

    @property
    def target_space(self):
        return self.model

    @property
    def label(self):
        return f"differentiation on {self.model.label}"


class TranslationModel(BaseModel, frozen=True):
    kind: Literal['translation'] = 'translation'
    rate: Scalar = Fraction(1)

    @model_validator(mode='after')
    def check_rate(self):
        if isinstance(self.rate, complex) or not self.rate > 0:
            raise ValueError(f"the translation rate lambda must be real and > 0 (got {self.rate})")
        return self

    @property
    def target_space(self):
        return HalfLineSpace()

    @property
    def label(self):
        return f"e^(lambda t) translation, lambda={self.rate}"


OperatorModel = Annotated[Union[ShiftModel, DifferentiationModel, TranslationModel], Field(discriminator='kind')]


class OperatorCertificate(BaseModel, frozen=True):
    op: OperatorModel
    target_count: int = Field(ge=1)
    targets: Tuple[Any, ...]
    scalar_twist: Scalar = Fraction(1)
    power: int = Field(1, ge=1)
    swapped: bool = False
    precision: Precision = Precision.float

    @field_validator('targets', mode='before')
    @classmethod
    def decode_targets(cls, value):
        return tuple(from_json_dict(v) if isinstance(v, dict) else v for v in value)

    @field_serializer('targets')
    def encode_targets(self, targets):
        return [to_json_dict(v) for v in targets]

    @model_validator(mode='after')
    def check_certificate(self):
        if len(self.targets) != self.target_count:
            raise ValueError(f"{len(self.targets)} targets listed but target_count is {self.target_count}")
        if abs(abs(self.scalar_twist) - 1) > UNIMODULAR_TOLERANCE:
            raise ValueError(f"the twist must have modulus 1 (got {self.scalar_twist})")
        expected = self.op.target_space
        for y in self.targets:
            if space_of(y) != expected:
                raise ValueError(f"target in {space_of(y).label} but the operator acts on {expected.label}")
        return self

    @property
    def exact(self) -> bool:
        return self.precision == Precision.rational

    def target(self, l: int) -> Vector:
        if not 1 <= l <= self.target_count:
            raise LabError(f"target index {l} outside 1..{self.target_count}", ErrorCode.DOMAIN)
        return self.targets[l - 1]

    def describe(self) -> str:
        parts = [self.op.label]
        if self.power != 1:
            parts.append(f"power {self.power}")
        if self.scalar_twist != 1:
            parts.append(f"twist {self.scalar_twist}")
        if self.swapped:
            parts.append("swapped")
        return ", ".join(parts)


def build_certificate(op, target_count: int, precision: Union[Precision, str] = Precision.float) -> OperatorCertificate:
    precision = Precision(precision)
    targets = enumerate_targets(op.target_space, target_count, exact=precision == Precision.rational)
    cert = OperatorCertificate(op=op, target_count=target_count, targets=tuple(targets), precision=precision)
    logger.info("certificate for %s with %d targets (%s)", op.label, target_count, precision.value)
    return cert


# raw actions: A^m and B^m, m >= 0

def _shift_exponent(k: int, m: int) -> int:
    # k + (k+1) + ... + (k+m-1)
    return m * k + m * (m - 1) // 2


def _weight_power(w, s: int):
    try:
        return w ** s
    except OverflowError:
        return math.inf if not isinstance(w, complex) else complex(math.inf, 0)
    except ZeroDivisionError:
        return 0.0


def _shift_forward(op: ShiftModel, v: SparseVector, m: int, exact: bool) -> SparseVector:
    w = as_working(op.w, exact)
    out = {}
    for k, c in v.entries:
        j = k - m
        if j >= 1:
            out[j] = c * _weight_power(w, _shift_exponent(j, m))
    return SparseVector.from_dict(out, v.space)


def _shift_inverse(op: ShiftModel, v: SparseVector, m: int, exact: bool) -> SparseVector:
    w = as_working(op.w, exact)
    return SparseVector.from_dict({k + m: c * _weight_power(w, -_shift_exponent(k, m)) for k, c in v.entries},
                                  v.space)


def _falling_ratio(j: int, m: int, exact: bool):
    """j! / (j + m)!"""
    if exact:
        return Fraction(math.factorial(j), math.factorial(j + m))
    return math.exp(math.lgamma(j + 1) - math.lgamma(j + m + 1))


def _poly_derivative(v: PolySeries, m: int) -> PolySeries:
    coeffs = [c * math.perm(j, m) for j, c in enumerate(v.coeffs) if j >= m]
    return PolySeries.from_coeffs(coeffs, v.model)


def _poly_antiderivative(v: PolySeries, m: int, exact: bool) -> PolySeries:
    if not v.coeffs:
        return v
    base = as_working(v.model.base_point, exact)
    if base == 0:
        coeffs = [0] * m + [c * _falling_ratio(j, m, exact) for j, c in enumerate(v.coeffs)]
        return PolySeries.from_coeffs(coeffs, v.model)
    coeffs = list(v.coeffs)
    for _ in range(m):
        coeffs = [0] + [c / (j + 1) for j, c in enumerate(coeffs)]
        coeffs[0] = -_horner(coeffs, base)
    return PolySeries.from_coeffs(coeffs, v.model)


def _horner(coeffs, x):
    total = 0
    for c in reversed(coeffs):
        total = total * x + c
    return total


def _translation_forward(op: TranslationModel, f: PiecewiseLinearFn, m: int, exact: bool) -> PiecewiseLinearFn:
    return with_log_scale(pl_shift(f, -m), as_working(op.rate, exact) * m)


def _translation_inverse(op: TranslationModel, f: PiecewiseLinearFn, m: int, exact: bool) -> PiecewiseLinearFn:
    return with_log_scale(pl_shift(f, m), -as_working(op.rate, exact) * m)


def _check_vector(cert: OperatorCertificate, v: Vector):
    expected = cert.op.target_space
    if space_of(v) != expected:
        raise LabError(f"vector in {space_of(v).label} cannot be acted on by {cert.op.label}",
                       ErrorCode.SPACE_MISMATCH)


def raw_forward(cert: OperatorCertificate, v: Vector, m: int) -> Vector:
    op = cert.op
    if m == 0:
        return v
    if isinstance(op, ShiftModel):
        return _shift_forward(op, v, m, cert.exact)
    if isinstance(op, DifferentiationModel):
        return _poly_derivative(v, m)
    return _translation_forward(op, v, m, cert.exact)


def raw_inverse(cert: OperatorCertificate, v: Vector, m: int) -> Vector:
    op = cert.op
    if m == 0:
        return v
    if isinstance(op, ShiftModel):
        return _shift_inverse(op, v, m, cert.exact)
    if isinstance(op, DifferentiationModel):
        return _poly_antiderivative(v, m, cert.exact)
    return _translation_inverse(op, v, m, cert.exact)


def _twist(cert: OperatorCertificate, n: int):
    return as_working(cert.scalar_twist, cert.exact) ** n


def apply_forward(cert: OperatorCertificate, v: Vector, n: int) -> Vector:
    if n < 0:
        raise LabError(f"apply_forward needs n >= 0 (got {n})", ErrorCode.DOMAIN)
    _check_vector(cert, v)
    m = cert.power * n
    if cert.swapped:
        return scale(_twist(cert, -n), raw_inverse(cert, v, m))
    return scale(_twist(cert, n), raw_forward(cert, v, m))


def apply_inverse(cert: OperatorCertificate, v: Vector, n: int) -> Vector:
    if n < 0:
        raise LabError(f"apply_inverse needs n >= 0 (got {n})", ErrorCode.DOMAIN)
    _check_vector(cert, v)
    m = cert.power * n
    if cert.swapped:
        return scale(_twist(cert, n), raw_forward(cert, v, m))
    return scale(_twist(cert, -n), raw_inverse(cert, v, m))


def right_inverse_identity_check(cert: OperatorCertificate, v: Vector):
    """||forward(inverse(v, 1), 1) - v||, zero when the inverse is a right inverse on v.

    Raises DOMAIN when an intermediate image leaves the space (a swapped
    translation re-extending a clipped translate)."""
    return norm(linear_combine(1, apply_forward(cert, apply_inverse(cert, v, 1), 1), -1, v))


def raw_forward_extinction(cert: OperatorCertificate, v: Vector) -> int:
    """Smallest m with A^m v = 0 (and A^m' v = 0 for all m' >= m)."""
    if v.is_zero():
        return 0
    if isinstance(v, SparseVector):
        return max(v.support)
    if isinstance(v, PolySeries):
        return v.degree + 1
    return int(math.ceil(v.support_end))


def extinction_steps(cert: OperatorCertificate, v: Vector, direction: str) -> Optional[int]:
    """Certificate steps after which the action in ``direction`` kills v, None if never."""
    uses_raw_forward = (direction == 'forward') != cert.swapped
    if v.is_zero():
        return 0
    if not uses_raw_forward:
        return None
    return -(-raw_forward_extinction(cert, v) // cert.power)


# transforms

def transform_power(cert: OperatorCertificate, r: int) -> OperatorCertificate:
    if r < 1:
        raise LabError(f"power must be >= 1 (got {r})", ErrorCode.DOMAIN)
    return cert.model_copy(update={'power': cert.power * r, 'scalar_twist': cert.scalar_twist ** r})


def transform_rotation(cert: OperatorCertificate, twist) -> OperatorCertificate:
    try:
        twist = parse_scalar(twist)
    except ValueError as e:
        raise LabError(str(e), ErrorCode.DOMAIN) from e
    if abs(abs(twist) - 1) > UNIMODULAR_TOLERANCE:
        raise LabError(f"rotation needs |lambda| = 1 (got {twist}, modulus {abs(twist)})", ErrorCode.DOMAIN)
    # a swapped forward action applies twist^-n
    factor = 1 / twist if cert.swapped else twist
    return cert.model_copy(update={'scalar_twist': cert.scalar_twist * factor})


def transform_inverse(cert: OperatorCertificate) -> OperatorCertificate:
    return cert.model_copy(update={'swapped': not cert.swapped})


# extras

def unboundedness_witness(cert: OperatorCertificate, n: int) -> Tuple[float, float]:
    """(||u||, ||A u||) for the unit vector u = |w|^n w^-n e_{n+1}; the second grows like |w|^n."""
    op = cert.op
    if not isinstance(op, ShiftModel):
        raise LabError(f"unboundedness witnesses are built for the weighted shift, not {op.label}",
                       ErrorCode.DOMAIN)
    if n < 1:
        raise LabError(f"witness index must be >= 1 (got {n})", ErrorCode.DOMAIN)
    w = as_working(op.w, cert.exact)
    x = SparseVector.from_dict({n + 1: _weight_power(w, -n)}, op.space)
    unit = scale(abs(w) ** n, x)
    return float(norm(unit)), float(norm(raw_forward(cert, unit, 1)))


def in_domain_chain(cert: OperatorCertificate, v: Vector, depth: int) -> bool:
    """Every A^m v for m <= depth is a finite vector of the space."""
    _check_vector(cert, v)
    current = v
    for _ in range(depth + 1):
        if not math.isfinite(float(norm(current))):
            return False
        current = raw_forward(cert, current, 1)
    return True
