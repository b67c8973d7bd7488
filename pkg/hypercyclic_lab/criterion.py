"""Certified tail bounds and the per-target thresholds N_l.

``tail_norm(cert, y, N, direction)`` bounds sup_F ||sum_{n in F} T^n y|| over
finite F ⊂ [N, inf), where T^n is the certificate's forward or inverse action.
Sides that reach zero after finitely many steps are summed exactly term by
term; the decaying sides use closed-form majorants:

* shift on l_p: the terms of one basis component sit on pairwise distinct
  coordinates, so each component contributes |c| (sum_n |w|^{-p s_n})^{1/p};
  on c_0 the first term dominates;
* differentiation on H^2: per monomial z^j, |c| (sum_n (j!/(j+n)!)^2)^{1/2};
* differentiation on C^k[a, b]: ||B^q f||_{C^k} <= ||f||_{C^k} max_{q-k<=m<=q} h^m/m!
  with h = b - a;
* translation: ||B^n f|| = e^{-lambda n} ||f||, a geometric series.

Infinite majorant series are summed until the next term is negligible and
closed with a geometric remainder; every built-in family has eventually
non-increasing term ratios, which makes that remainder an upper bound.
"""
import logging
import math
from enum import Enum
from typing import Callable, Dict, List

import numpy as np
from pydantic import BaseModel, Field

from hypercyclic_lab.lab_error import LabError, ErrorCode
from hypercyclic_lab.operators import (OperatorCertificate, ShiftModel, DifferentiationModel, TranslationModel,
                                       apply_forward, apply_inverse, extinction_steps)
from hypercyclic_lab.spaces import (Vector, ck_norm_interval, linear_combine, norm, zero_like)

logger = logging.getLogger("criterion")

DEFAULT_THRESHOLD_CAP = 10_000
_SERIES_CUTOFF = 1e-17
_SERIES_MAX_TERMS = 1_000_000


class Direction(str, Enum):
    forward = 'forward'
    inverse = 'inverse'


def _direction(direction) -> Direction:
    try:
        return Direction(direction)
    except ValueError:
        raise LabError(f"unsupported direction '{direction}' (expected forward or inverse)", ErrorCode.DOMAIN)


def action(cert: OperatorCertificate, direction: Direction) -> Callable[[Vector, int], Vector]:
    if direction == Direction.forward:
        return lambda v, n: apply_forward(cert, v, n)
    return lambda v, n: apply_inverse(cert, v, n)


def series_tail(term: Callable[[int], float], start: int) -> float:
    total = 0.0
    n = start
    current = term(n)
    for _ in range(_SERIES_MAX_TERMS):
        if current == 0.0:
            return total
        total += current
        following = term(n + 1)
        if following == 0.0:
            return total
        ratio = following / current
        if ratio < 1.0 and following <= _SERIES_CUTOFF * total:
            return total + following / (1.0 - ratio)
        n += 1
        current = following
    raise LabError(f"series from {start} did not settle within {_SERIES_MAX_TERMS} terms", ErrorCode.NOT_CERTIFIABLE)


def _finite_tail(cert: OperatorCertificate, y: Vector, N: int, direction: Direction, last: int) -> float:
    act = action(cert, direction)
    return math.fsum(float(norm(act(y, n))) for n in range(N, last))


def _lp_series(log_term: Callable[[int], float], start: int, p: float) -> float:
    """(sum_{n >= start} exp(p log_term(n)))^(1/p), summed relative to the first term."""
    first = log_term(start)
    relative = series_tail(lambda n: math.exp(p * (log_term(n) - first)), start)
    return math.exp(first) * relative ** (1.0 / p)


def _shift_majorant(op: ShiftModel, y, N: int, r: int) -> float:
    log_w = math.log(abs(op.w))
    total = 0.0
    for k, c in y.entries:
        def log_term(n, k=k):
            m = r * n
            return -(m * k + m * (m - 1) // 2) * log_w
        if op.space.kind == 'c0':
            component = math.exp(log_term(N))
        else:
            component = _lp_series(log_term, N, op.space.p)
        total += float(abs(c)) * component
    return total


def _hardy_majorant(y, N: int, r: int) -> float:
    total = 0.0
    for j, c in enumerate(y.coeffs):
        if c == 0:
            continue
        component = _lp_series(lambda n, j=j: math.lgamma(j + 1) - math.lgamma(j + r * n + 1), N, 2.0)
        total += float(abs(c)) * component
    return total


def _ck_majorant(y, N: int, r: int) -> float:
    model = y.model
    h = float(model.b - model.a)
    upper = ck_norm_interval(y)[1]

    def growth(m):
        return 1.0 if m <= 0 else math.exp(m * math.log(h) - math.lgamma(m + 1)) if h > 0 else 0.0

    def term(n):
        q = r * n
        return max(growth(q - i) for i in range(model.k + 1))

    return upper * series_tail(term, N)


def _translation_majorant(op: TranslationModel, y, N: int, r: int) -> float:
    decay = float(op.rate) * r
    return float(norm(y)) * math.exp(-decay * N) / -math.expm1(-decay)


def tail_norm(cert: OperatorCertificate, y: Vector, N: int, direction) -> float:
    direction = _direction(direction)
    N = max(int(N), 1)
    if y.is_zero():
        return 0.0
    last = extinction_steps(cert, y, direction.value)
    if last is not None:
        return 0.0 if N >= last else _finite_tail(cert, y, N, direction, last)
    op, r = cert.op, cert.power
    if isinstance(op, ShiftModel):
        return _shift_majorant(op, y, N, r)
    if isinstance(op, DifferentiationModel):
        if op.model.kind == 'h2':
            return _hardy_majorant(y, N, r)
        return _ck_majorant(y, N, r)
    if isinstance(op, TranslationModel):
        return _translation_majorant(op, y, N, r)
    raise LabError(f"no tail bound for {op!r} in direction {direction.value}", ErrorCode.DOMAIN)


def identity_residual(cert: OperatorCertificate, y: Vector, N: int) -> float:
    round_trip = apply_forward(cert, apply_inverse(cert, y, N), N)
    return float(norm(linear_combine(1, round_trip, -1, y)))


class TailRecord(BaseModel, frozen=True):
    l: int
    threshold: int = Field(ge=1)
    forward_tail_bound: float
    inverse_tail_bound: float
    target_tail_bound: float
    identity_residual: float

    @property
    def pair_bound(self) -> float:
        return 1.0 / (self.l * 2 ** self.l)

    @property
    def target_bound(self) -> float:
        return 1.0 / 2 ** self.l


class TailCertificate(BaseModel, frozen=True):
    cert: OperatorCertificate
    records: List[TailRecord]

    def thresholds(self) -> Dict[int, int]:
        return {r.l: r.threshold for r in self.records}

    def pairs(self):
        return [(r.l, r.threshold) for r in self.records]

    def target(self, l: int) -> Vector:
        return self.cert.target(l)


def _threshold_for(cert: OperatorCertificate, l: int, cap: int) -> TailRecord:
    pair_bound = 1.0 / (l * 2 ** l)
    target_bound = 1.0 / 2 ** l
    leading = cert.targets[:l]
    y_l = cert.targets[l - 1]
    for N in range(1, cap + 1):
        forward = max(tail_norm(cert, y, N, Direction.forward) for y in leading)
        if forward > pair_bound:
            continue
        inverse = max(tail_norm(cert, y, N, Direction.inverse) for y in leading)
        if inverse > pair_bound:
            continue
        own = tail_norm(cert, y_l, N, Direction.inverse)
        if own > target_bound:
            continue
        residual = identity_residual(cert, y_l, N)
        if residual > target_bound:
            continue
        return TailRecord(l=l, threshold=N, forward_tail_bound=forward, inverse_tail_bound=inverse,
                          target_tail_bound=own, identity_residual=residual)
    raise LabError(f"no threshold N <= {cap} certifies target {l} of {cert.describe()}; "
                   f"the tails or the forward/inverse round trip stay above the required bounds",
                   ErrorCode.NOT_CERTIFIABLE)


def compute_thresholds(cert: OperatorCertificate, cap: int = DEFAULT_THRESHOLD_CAP) -> TailCertificate:
    """Smallest N_l per target such that every tail bound and the round-trip
    residual fall under 1/(l 2^l) and 1/2^l respectively."""
    records = []
    for l in range(1, cert.target_count + 1):
        record = _threshold_for(cert, l, cap)
        logger.info("N_%d = %d (inverse tail %.3g, forward tail %.3g)",
                    l, record.threshold, record.inverse_tail_bound, record.forward_tail_bound)
        records.append(record)
    return TailCertificate(cert=cert, records=records)


def unconditional_probe(cert: OperatorCertificate, y: Vector, N: int, trials: int = 1000, seed: int = 0,
                        window: int = 64, direction=Direction.inverse) -> float:
    """Largest ||sum_{n in F} T^n y|| over ``trials`` random F ⊂ (N, N + window].

    The subset masks depend only on ``seed``, so probes at different N use the
    same positions relative to N.
    """
    act = action(cert, _direction(direction))
    masks = np.random.default_rng(seed).random((trials, window)) < 0.5
    terms = [act(y, N + 1 + i) for i in range(window)]
    live = [i for i, t in enumerate(terms) if not t.is_zero()]
    best = 0.0
    for mask in masks:
        total = zero_like(y)
        for i in live:
            if mask[i]:
                total = linear_combine(1, total, 1, terms[i])
        best = max(best, float(norm(total)))
    return best


def brute_force_tail(cert: OperatorCertificate, y: Vector, N: int, count: int, direction=Direction.inverse):
    """The norm of the partial sum over n = N .. N + count - 1, in the certificate's own arithmetic."""
    act = action(cert, _direction(direction))
    total = zero_like(y)
    for n in range(N, N + count):
        total = linear_combine(1, total, 1, act(y, n))
    return total, norm(total)
