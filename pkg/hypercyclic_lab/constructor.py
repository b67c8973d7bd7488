"""Placement of targets on the disjoint index sets and orbit evaluation.

A placement sets z_n = y_l for n in A(l, N_l) and z_n = 0 elsewhere. The
frequently hypercyclic vector is x = sum_n B^n z_n (B the certificate's
inverse action); the orbit point A^n x splits into

    sum_{j<n} A^{n-j} z_j  +  z_n  +  sum_{j>n} B^{j-n} z_j

and each side is summed over the members j of each A(l, N_l) in order of
distance from n until its remaining tail bound is negligible or the
members run past the horizon. The tail bounds of the omitted terms add up
to the reported certified error.
"""
import bisect
import logging
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, PrivateAttr

from hypercyclic_lab.criterion import Direction, TailCertificate, tail_norm
from hypercyclic_lab.density_partition import PairKey, PartitionSchedule, build_schedule
from hypercyclic_lab.lab_error import LabError, ErrorCode
from hypercyclic_lab.operators import apply_forward, apply_inverse
from hypercyclic_lab.spaces import Vector, linear_combine, norm, zero_like

logger = logging.getLogger("constructor")

DEFAULT_NEGLIGIBLE = 1e-18


class MaterializedVector(NamedTuple):
    vector: Vector
    tail_bound: float


@dataclass(frozen=True)
class OrbitPoint:
    n: int
    vector: Vector
    forward_part: Vector
    middle: Vector
    backward_part: Vector
    certified_error: float


class FhcPlacement(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    tail_certificate: TailCertificate
    horizon: int
    placements: Dict[int, int]
    truncation: int
    truncation_tail_bound: float
    negligible: Optional[float] = DEFAULT_NEGLIGIBLE

    _schedule: Optional[PartitionSchedule] = PrivateAttr(None)
    _members: Dict[int, List[int]] = PrivateAttr(default_factory=dict)
    _tails: Dict[tuple, float] = PrivateAttr(default_factory=dict)
    _orbits: Dict[int, OrbitPoint] = PrivateAttr(default_factory=dict)

    @property
    def cert(self):
        return self.tail_certificate.cert

    @property
    def schedule(self) -> PartitionSchedule:
        if self._schedule is None:
            self._schedule = build_schedule(self.tail_certificate.pairs())
        return self._schedule

    def key(self, l: int) -> PairKey:
        return PairKey(l=l, nu=self.tail_certificate.thresholds()[l])

    def members(self, l: int) -> List[int]:
        if l not in self._members:
            self._members[l] = self.schedule.members(self.key(l), self.horizon)
        return self._members[l]

    def next_member_beyond(self, l: int, after: int) -> int:
        return self.schedule.next_member(self.key(l), after)

    def tail(self, direction: Direction, l: int, distance: int) -> float:
        cache_key = (direction, l, distance)
        if cache_key not in self._tails:
            self._tails[cache_key] = tail_norm(self.cert, self.cert.target(l), distance, direction)
        return self._tails[cache_key]

    def z(self, n: int) -> Optional[Vector]:
        l = self.placements.get(n)
        return None if l is None else self.cert.target(l)

    def target_indices(self):
        return range(1, self.cert.target_count + 1)


def assign_placements(tc: TailCertificate, horizon: int, negligible: Optional[float] = DEFAULT_NEGLIGIBLE) -> FhcPlacement:
    largest = max(r.threshold for r in tc.records)
    if horizon < largest:
        raise LabError(f"horizon {horizon} is below the largest threshold N_l = {largest}", ErrorCode.DOMAIN)
    schedule = build_schedule(tc.pairs())
    placements = {n: key.l for n, key in schedule.tagged_members(horizon)}
    tail_bound = 0.0
    for r in tc.records:
        beyond = schedule.next_member(PairKey(l=r.l, nu=r.threshold), horizon)
        tail_bound += tail_norm(tc.cert, tc.target(r.l), beyond, Direction.inverse)
    placement = FhcPlacement(tail_certificate=tc, horizon=horizon, placements=placements,
                             truncation=horizon, truncation_tail_bound=tail_bound, negligible=negligible)
    placement._schedule = schedule
    logger.info("placed %d targets at %d indices up to %d (truncation tail %.3g)",
                tc.cert.target_count, len(placements), horizon, tail_bound)
    return placement


def materialize(p: FhcPlacement, M: int) -> MaterializedVector:
    """sum_{n <= M} B^n z_n and a bound on the norm of everything left out."""
    if M > p.horizon:
        raise LabError(f"cannot materialise up to {M}: placements only reach {p.horizon}", ErrorCode.DOMAIN)
    total = zero_like(p.cert.target(1))
    for n in sorted(p.placements):
        if n > M:
            break
        total = linear_combine(1, total, 1, apply_inverse(p.cert, p.cert.target(p.placements[n]), n))
    tail_bound = 0.0
    for l in p.target_indices():
        beyond = p.next_member_beyond(l, max(M, 0))
        tail_bound += p.tail(Direction.inverse, l, beyond)
    return MaterializedVector(total, tail_bound)


def _backward_side(p: FhcPlacement, l: int, n: int, y: Vector, total: Vector):
    members = p.members(l)
    error = 0.0
    i = bisect.bisect_right(members, n)
    for j in members[i:]:
        d = j - n
        bound = p.tail(Direction.inverse, l, d)
        if p.negligible is not None and bound <= p.negligible:
            return total, error + bound
        total = linear_combine(1, total, 1, apply_inverse(p.cert, y, d))
    beyond = p.next_member_beyond(l, max(p.horizon, n))
    return total, error + p.tail(Direction.inverse, l, beyond - n)


def _forward_side(p: FhcPlacement, l: int, n: int, y: Vector, total: Vector):
    members = p.members(l)
    i = bisect.bisect_left(members, n)
    for j in reversed(members[:i]):
        d = n - j
        bound = p.tail(Direction.forward, l, d)
        if bound == 0.0 or (p.negligible is not None and bound <= p.negligible):
            return total, bound
        total = linear_combine(1, total, 1, apply_forward(p.cert, y, d))
    return total, 0.0


def orbit_eval(p: FhcPlacement, n: int) -> OrbitPoint:
    if n < 0 or n > p.horizon:
        raise LabError(f"orbit index {n} outside [0, {p.horizon}]", ErrorCode.DOMAIN)
    cached = p._orbits.get(n)
    if cached is not None:
        return cached
    zero = zero_like(p.cert.target(1))
    forward, backward, error = zero, zero, 0.0
    for l in p.target_indices():
        y = p.cert.target(l)
        forward, forward_error = _forward_side(p, l, n, y, forward)
        backward, backward_error = _backward_side(p, l, n, y, backward)
        error += forward_error + backward_error
    middle = p.z(n) or zero
    vector = linear_combine(1, linear_combine(1, forward, 1, middle), 1, backward)
    point = OrbitPoint(n=n, vector=vector, forward_part=forward, middle=middle, backward_part=backward,
                       certified_error=error)
    p._orbits[n] = point
    return point


def distance_to_target(p: FhcPlacement, n: int, l: int) -> float:
    point = orbit_eval(p, n)
    return float(norm(linear_combine(1, point.vector, -1, p.cert.target(l))))


def proximity_bound(l: int) -> float:
    return 5.0 / 2 ** l


def component_bounds(l: int):
    """(forward, middle, backward) bounds whose sum is the proximity bound."""
    return 2.0 / 2 ** l, 1.0 / 2 ** l, 2.0 / 2 ** l


def component_norms(p: FhcPlacement, n: int, l: int):
    """(||forward part||, ||z_n - y_l||, ||backward part||) at n."""
    point = orbit_eval(p, n)
    middle_gap = norm(linear_combine(1, point.middle, -1, p.cert.target(l)))
    return float(norm(point.forward_part)), float(middle_gap), float(norm(point.backward_part))


def cauchy_tail(p: FhcPlacement, N: int, m: int) -> float:
    """||sum_{N < n <= m} B^n z_n||, the size of one step of the partial sums."""
    if not 0 <= N <= m <= p.horizon:
        raise LabError(f"need 0 <= N <= m <= {p.horizon} (got N={N}, m={m})", ErrorCode.DOMAIN)
    total = zero_like(p.cert.target(1))
    for n in sorted(k for k in p.placements if N < k <= m):
        total = linear_combine(1, total, 1, apply_inverse(p.cert, p.z(n), n))
    return float(norm(total))
