"""Empirical checks of frequent hypercyclicity, with certified error bars.

Discrete mode counts the n <= N whose orbit point A^n x is certifiably
within epsilon of a target. Continuous mode does the same for the orbit of
the translation semigroup on a grid of [0, T_max]: each grid cell gets an
inner verdict (certified inside the ball for the whole cell) and an outer
one (possibly inside), and integer visits are widened to windows
[n, n + delta] by the translation modulus of the target.
"""
import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Protocol, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, TypeAdapter

from hypercyclic_lab.constructor import FhcPlacement, orbit_eval, proximity_bound
from hypercyclic_lab.density_partition import running_density_floor
from hypercyclic_lab.lab_error import LabError, ErrorCode
from hypercyclic_lab.regularized_semigroup import continuity_window, translation_modulus
from hypercyclic_lab.spaces import PiecewiseLinearFn, linear_combine, max_slope, norm

logger = logging.getLogger("verifier")

DEFAULT_WINDOW_FRACTION = 0.1
REPORT_COLUMNS = ['l', 'epsilon', 'horizon', 'visits', 'density_floor', 'covering_set_check',
                  'proof_bound', 'certified_error']


class OrbitReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan='constants')

    l: int
    epsilon: float
    horizon: Union[int, float]
    mode: str = 'discrete'
    visit_times: List[int] = []
    intervals: List[Tuple[float, float]] = []
    density_floor: float
    covering_set_check: bool
    proof_bound: float
    certified_error: float
    vacuous: bool = False
    inner_measure: Optional[float] = None
    outer_measure: Optional[float] = None
    delta: Optional[float] = None
    bridged_visits: Optional[int] = None

    @property
    def visit_count(self) -> int:
        return len(self.visit_times) if self.mode == 'discrete' else (self.bridged_visits or 0)


class OrbitEvaluator(Protocol):
    rate: float

    def at(self, t) -> Tuple[PiecewiseLinearFn, float]:
        ...


def density_proxy(visits: Sequence[int], N: int, window_fraction: float = DEFAULT_WINDOW_FRACTION) -> float:
    """min over n in [ceil(window_fraction * N), N] of |visits ∩ [1, n]| / n."""
    if N < 1 or not 0 < window_fraction <= 1:
        raise LabError(f"empty density window for N={N}, window_fraction={window_fraction}", ErrorCode.DOMAIN)
    start = max(1, math.ceil(window_fraction * N))
    return running_density_floor(sorted(visits), start, N)


def discrete_visits(p: FhcPlacement, l: int, epsilon: float, N: int,
                    window_fraction: float = DEFAULT_WINDOW_FRACTION) -> OrbitReport:
    if N > p.horizon:
        raise LabError(f"cannot check visits up to {N}: the placement stops at {p.horizon}", ErrorCode.DOMAIN)
    y = p.cert.target(l)
    visits, worst_error = [], 0.0
    for n in range(1, N + 1):
        point = orbit_eval(p, n)
        worst_error = max(worst_error, point.certified_error)
        if math.isinf(epsilon):
            visits.append(n)
            continue
        if float(norm(linear_combine(1, point.vector, -1, y))) + point.certified_error < epsilon:
            visits.append(n)
    bound = proximity_bound(l)
    vacuous = epsilon <= bound + worst_error
    if vacuous:
        logger.warning("epsilon %.3g for target %d does not exceed the proximity bound %.3g plus error %.3g; "
                       "missing visits prove nothing", epsilon, l, bound, worst_error)
    covering = set(m for m in p.members(l) if m <= N) <= set(visits)
    report = OrbitReport(l=l, epsilon=epsilon, horizon=N, visit_times=visits,
                         density_floor=density_proxy(visits, N, window_fraction),
                         covering_set_check=covering, proof_bound=bound, certified_error=worst_error,
                         vacuous=vacuous)
    logger.info("target %d: %d visits up to %d, density floor %.4f", l, len(visits), N, report.density_floor)
    return report


def _merge(intervals):
    merged = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _measure(intervals) -> float:
    return math.fsum(b - a for a, b in intervals)


def _interval_density_floor(intervals, t_max: float, window_fraction: float) -> float:
    """min over T in [window_fraction * t_max, t_max] of |S ∩ [0, T]| / T for a finite union S."""
    start = window_fraction * t_max

    def covered(T):
        return math.fsum(min(b, T) - a for a, b in intervals if a < T)

    candidates = [start, t_max] + [a for a, _ in intervals if start < a < t_max]
    return min(covered(T) / T for T in candidates)


def continuous_visits(evaluator: OrbitEvaluator, target: PiecewiseLinearFn, epsilon: float, t_max: float,
                      grid: float, l: int = 1, window_fraction: float = DEFAULT_WINDOW_FRACTION) -> OrbitReport:
    if not (t_max > 0 and grid > 0):
        raise LabError(f"need t_max > 0 and grid > 0 (got {t_max}, {grid})", ErrorCode.DOMAIN)
    rate = float(evaluator.rate)
    inner, outer = [], []
    worst_error = 0.0
    cells = int(math.ceil(t_max / grid))
    for i in range(cells):
        t0 = i * grid
        width = min(grid, t_max - t0)
        u, err = evaluator.at(t0)
        worst_error = max(worst_error, err)
        gap = float(norm(linear_combine(1, u, -1, target))) + err
        # ||e^{sA} u - u|| for s <= width, widened by err on both sides of the comparison
        drift = (math.expm1(rate * width) * (float(norm(u)) + err)
                 + math.exp(rate * width) * (max_slope(u) * width + 2 * err))
        if gap + drift < epsilon:
            inner.append((t0, t0 + width))
        if gap - drift < epsilon:
            outer.append((t0, t0 + width))

    delta = float(continuity_window(target, rate, epsilon)) if epsilon > 0 else 0.0
    bridged = 0
    if delta > 0:
        margin = (epsilon - translation_modulus(target, rate, delta)) * math.exp(-rate * delta)
        n = 1
        while n + delta <= t_max:
            u, err = evaluator.at(n)
            if float(norm(linear_combine(1, u, -1, target))) + err < margin:
                inner.append((float(n), n + delta))
                outer.append((float(n), n + delta))
                bridged += 1
            n += 1

    inner, outer = _merge(inner), _merge(outer)
    report = OrbitReport(l=l, epsilon=epsilon, horizon=t_max, mode='continuous', intervals=inner,
                         density_floor=_interval_density_floor(inner, t_max, window_fraction),
                         covering_set_check=bridged * delta <= _measure(inner) + 1e-12,
                         proof_bound=proximity_bound(l), certified_error=worst_error,
                         inner_measure=_measure(inner), outer_measure=_measure(outer),
                         delta=delta, bridged_visits=bridged)
    logger.info("continuous orbit on [0, %g]: inner measure %.4g, outer %.4g, %d bridged visits (delta %g)",
                t_max, report.inner_measure, report.outer_measure, bridged, delta)
    return report


def _csv_cell(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return value


def report_export(reports: Sequence[OrbitReport], csv_path, json_path=None):
    csv_path = Path(csv_path)
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open('w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(REPORT_COLUMNS)
            for r in reports:
                writer.writerow([_csv_cell(v) for v in (r.l, r.epsilon, r.horizon, r.visit_count,
                                                         r.density_floor, r.covering_set_check,
                                                         r.proof_bound, r.certified_error)])
        if json_path is not None:
            json_path = Path(json_path)
            json_path.write_text(TypeAdapter(List[OrbitReport]).dump_json(list(reports), indent=2).decode())
    except OSError as e:
        raise LabError(f"Could not write reports: {e}", ErrorCode.IO) from e
    return csv_path


def report_import(json_path) -> List[OrbitReport]:
    json_path = Path(json_path)
    try:
        raw = json_path.read_text()
    except OSError as e:
        raise LabError(f"Could not read reports from {json_path}: {e}", ErrorCode.IO) from e
    try:
        return TypeAdapter(List[OrbitReport]).validate_json(raw)
    except ValueError as e:
        raise LabError(f"{json_path} is not a report file: {e}", ErrorCode.CONFIG_VALIDATION) from e
