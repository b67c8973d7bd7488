"""Pairwise-disjoint index sets A(l, nu) of positive lower density.

The sets are built by block scheduling. The naturals are tiled by
consecutive blocks starting at 1; block t belongs to the pair of rank
j = 1 + (2-adic valuation of t). A pair of rank j owns blocks of length
L_j = 4 * rho_j and puts exactly two members in each, at offsets rho_j and
3 * rho_j from the block start. A valuation with no matching rank yields a
filler block of ``filler_length`` positions and no members. A single-pair
schedule has no fillers: its pair owns every block.

Head and tail margins of rho_j per block make every cross-block gap at
least rho + rho', and rank j recurs with frequency 2^-j, so every set has
positive lower density.
"""
import bisect
import csv
import heapq
import logging
import math
import threading
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from hypercyclic_lab.lab_error import LabError, ErrorCode

logger = logging.getLogger("density-partition")

FILLER = 0


class PairKey(BaseModel, frozen=True):
    l: int = Field(ge=1)
    nu: int = Field(ge=1)

    @property
    def rho(self) -> int:
        # rho(l, nu) = nu
        return self.nu

    @property
    def rank_order(self):
        return self.l + self.nu, self.l

    def label(self):
        return f"A({self.l},{self.nu})"

    @staticmethod
    def of(value) -> "PairKey":
        if isinstance(value, PairKey):
            return value
        l, nu = value
        return PairKey(l=l, nu=nu)


class PartitionSchedule:
    """Immutable membership, lazily materialised blocks.

    Extension is guarded by a lock, so one schedule can be shared between
    threads; callers that want no locking at all can `materialize` up to
    their largest horizon before sharing.
    """

    def __init__(self, pairs: List[PairKey], filler_length: int = 1):
        self.pairs = list(pairs)
        self.rank_of = {key: j for j, key in enumerate(self.pairs, 1)}
        self.block_lengths = {j: 4 * max(key.rho, 1) for j, key in enumerate(self.pairs, 1)}
        self.filler_length = filler_length
        self._starts: List[int] = []
        self._ranks: List[int] = []
        self._starts_by_rank: Dict[int, List[int]] = {j: [] for j in self.rank_of.values()}
        self._end = 1  # first position not yet covered by a block
        self._lock = threading.Lock()

    @property
    def rank_count(self):
        return len(self.pairs)

    def rank_of_block(self, t: int) -> int:
        if self.rank_count == 1:
            return 1
        j = (t & -t).bit_length()
        return j if j <= self.rank_count else FILLER

    def block_length(self, rank: int) -> int:
        return self.filler_length if rank == FILLER else self.block_lengths[rank]

    def materialize(self, horizon: int) -> None:
        """Make sure blocks cover every position up to ``horizon``."""
        if horizon < self._end:
            return
        with self._lock:
            t = len(self._starts)
            start = self._end
            while start <= horizon:
                t += 1
                rank = self.rank_of_block(t)
                self._starts.append(start)
                self._ranks.append(rank)
                if rank != FILLER:
                    self._starts_by_rank[rank].append(start)
                start += self.block_length(rank)
            self._end = start
        logger.debug("materialised %d blocks up to position %d", len(self._starts), self._end - 1)

    @property
    def block_starts(self) -> List[int]:
        return list(self._starts)

    def _rank(self, key) -> int:
        key = PairKey.of(key)
        rank = self.rank_of.get(key)
        if rank is None:
            raise LabError(f"{key.label()} is not part of this schedule "
                           f"(scheduled: {', '.join(k.label() for k in self.pairs)})",
                           ErrorCode.UNKNOWN_KEY)
        return rank

    def members(self, key, horizon: int) -> List[int]:
        rank = self._rank(key)
        if horizon < 1:
            return []
        self.materialize(horizon)
        rho = self.pairs[rank - 1].rho
        starts = self._starts_by_rank[rank]
        out = []
        for start in starts[:bisect.bisect_right(starts, horizon)]:
            for n in (start + rho, start + 3 * rho):
                if n <= horizon:
                    out.append(n)
        return out

    def next_member(self, key, after: int) -> int:
        """Smallest member of A(key) strictly greater than ``after``."""
        rank = self._rank(key)
        rho = self.pairs[rank - 1].rho
        horizon = max(after, 1)
        while True:
            horizon = 2 * horizon + 4 * rho
            self.materialize(horizon)
            starts = self._starts_by_rank[rank]
            i = bisect.bisect_right(starts, after - 3 * rho)
            for start in starts[i:]:
                for n in (start + rho, start + 3 * rho):
                    if n > after:
                        return n

    def locate(self, n: int) -> Optional[PairKey]:
        if n < 1:
            return None
        self.materialize(n)
        i = bisect.bisect_right(self._starts, n) - 1
        rank = self._ranks[i]
        if rank == FILLER:
            return None
        key = self.pairs[rank - 1]
        offset = n - self._starts[i]
        return key if offset in (key.rho, 3 * key.rho) else None

    def tagged_members(self, horizon: int) -> List[Tuple[int, PairKey]]:
        """Every member of every set up to ``horizon``, in ascending order."""
        streams = [[(n, key.l, key) for n in self.members(key, horizon)] for key in self.pairs]
        return [(n, key) for n, _, key in heapq.merge(*streams)]


def build_schedule(pairs: Iterable[Union[PairKey, Tuple[int, int]]], filler_length: int = 1) -> PartitionSchedule:
    keys = [PairKey.of(p) for p in pairs]
    if not keys:
        raise LabError("A schedule needs at least one (l, nu) pair", ErrorCode.SEMANTIC_VALIDATION)
    seen, dupes = set(), []
    for key in keys:
        if key in seen:
            dupes.append(key.label())
        seen.add(key)
    if dupes:
        raise LabError(f"Duplicate pair(s): {', '.join(sorted(set(dupes)))}. "
                       f"Each (l, nu) may be scheduled once.", ErrorCode.SEMANTIC_VALIDATION)
    if filler_length < 1:
        raise LabError(f"filler_length must be >= 1 (got {filler_length})", ErrorCode.SEMANTIC_VALIDATION)

    ranked = sorted(keys, key=lambda k: k.rank_order)
    schedule = PartitionSchedule(ranked, filler_length=filler_length)
    logger.info("scheduled %s", ", ".join(f"{k.label()}@rank{j}" for j, k in enumerate(ranked, 1)))
    return schedule


def members(sched: PartitionSchedule, key, horizon: int) -> List[int]:
    return sched.members(key, horizon)


def locate(sched: PartitionSchedule, n: int) -> Optional[PairKey]:
    return sched.locate(n)


def running_density_floor(sorted_members, window_start: int, horizon: int) -> float:
    """min over n in [window_start, horizon] of |S ∩ [1, n]| / n."""
    window_start = max(int(window_start), 1)
    if window_start > horizon:
        raise LabError(f"empty density window [{window_start}, {horizon}]", ErrorCode.DOMAIN)
    m = np.asarray(sorted_members, dtype=np.int64)
    ns = np.arange(window_start, horizon + 1, dtype=np.int64)
    counts = np.searchsorted(m, ns, side='right')
    return float(np.min(counts / ns))


def density_floor(sched: PartitionSchedule, key, window_start: int, horizon: int) -> float:
    if window_start >= horizon:
        raise LabError(f"window_start {window_start} must be below horizon {horizon}", ErrorCode.DOMAIN)
    return running_density_floor(sched.members(key, horizon), window_start, horizon)


def average_block_length(sched: PartitionSchedule) -> float:
    if sched.rank_count == 1:
        return float(sched.block_lengths[1])
    r = sched.rank_count
    return sum(2.0 ** -j * length for j, length in sched.block_lengths.items()) + 2.0 ** -r * sched.filler_length


def analytic_density(sched: PartitionSchedule, key) -> float:
    rank = sched._rank(key)
    frequency = 1.0 if sched.rank_count == 1 else 2.0 ** -rank
    return 2 * frequency / average_block_length(sched)


def summability_weight(sched: PartitionSchedule) -> float:
    return math.fsum(key.rho / 2.0 ** (key.l + key.nu) for key in sched.pairs)


def export_members_csv(sched: PartitionSchedule, horizon: int, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['n', 'l', 'nu'])
            for n, key in sched.tagged_members(horizon):
                writer.writerow([n, key.l, key.nu])
    except OSError as e:
        raise LabError(f"Could not write member list to {path}: {e}", ErrorCode.IO) from e
    return path
