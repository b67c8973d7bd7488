"""Command line entry point.

    hypercyclic-lab run configs/shift_w2.nt
    hypercyclic-lab partition --pairs "(1,2)" --horizon 16
    hypercyclic-lab certify --op shift --w 2 --targets 1
    hypercyclic-lab construct --config configs/hardy_diff.nt --materialize 50
    hypercyclic-lab orbit --op shift --targets 3 --horizon 200 --n 5 17 40
    hypercyclic-lab density --reports out/reports.json
    hypercyclic-lab semigroup --lambda 1 --t 1/2 --s 1/4

``run`` exits 0 when every checked invariant holds, 2 naming the failed
invariants otherwise, and 1 on a config or IO problem.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from hypercyclic_lab.constructor import (FhcPlacement, assign_placements, component_bounds, component_norms,
                                         distance_to_target, materialize, orbit_eval, proximity_bound)
from hypercyclic_lab.criterion import TailCertificate, compute_thresholds, unconditional_probe
from hypercyclic_lab.density_partition import build_schedule, export_members_csv, summability_weight
from hypercyclic_lab.lab_error import LabError, ErrorCode
from hypercyclic_lab.model_config import (ExperimentConfig, Mode, build_config_certificate, config_from_data,
                                          load_config, parse_config_text, read_config_file)
from hypercyclic_lab.operators import ShiftModel, right_inverse_identity_check, unboundedness_witness
from hypercyclic_lab.pair_coords import parse_pairs
from hypercyclic_lab.regularized_semigroup import (RegularizedSemigroup, Regularizer, continuity_window,
                                                   generator_residual, semigroup_law_residual,
                                                   solution_orbit, strong_continuity_profile)
from hypercyclic_lab.report_tables import (describe_vector, orbit_table, profile_table, report_table,
                                           schedule_table, threshold_table)
from hypercyclic_lab.spaces import PiecewiseLinearFn, PolyModel, PolySeries, parse_scalar
from hypercyclic_lab.verifier import (OrbitReport, continuous_visits, density_proxy, discrete_visits,
                                      report_export, report_import)

logger = logging.getLogger("hypercyclic-lab")

_ROUNDING_SLACK = 1e-12


@dataclass
class RunResult:
    config: ExperimentConfig
    tail_certificate: TailCertificate
    placement: FhcPlacement
    reports: List[OrbitReport]
    failures: List[str] = field(default_factory=list)


def _check_right_inverse(tc: TailCertificate) -> List[str]:
    failures = []
    for l in range(1, tc.cert.target_count + 1):
        residual = float(right_inverse_identity_check(tc.cert, tc.target(l)))
        if residual > _ROUNDING_SLACK:
            failures.append(f"right-inverse: target {l} round trip off by {residual:.3g}")
    return failures


def _check_proximity(p: FhcPlacement, l: int, scale: float) -> List[str]:
    bound = proximity_bound(l) * scale
    limits = [b * scale for b in component_bounds(l)]
    for n in p.members(l):
        gap = distance_to_target(p, n, l) + orbit_eval(p, n).certified_error
        if gap > bound:
            return [f"proximity-bound: target {l} at n={n} is {gap:.3g} away, bound {bound:.3g}"]
        parts = component_norms(p, n, l)
        for name, value, limit in zip(('forward', 'middle', 'backward'), parts, limits):
            if value > limit:
                return [f"component-bound: {name} part for target {l} at n={n} is {value:.3g}, bound {limit:.3g}"]
    return []


def _check_probe(config: ExperimentConfig, tc: TailCertificate, l: int) -> List[str]:
    record = tc.records[l - 1]
    probe = unconditional_probe(tc.cert, tc.target(l), record.threshold, trials=config.trials, seed=config.seed)
    if probe > record.target_tail_bound * (1 + 1e-9) + _ROUNDING_SLACK:
        return [f"unconditional-probe: target {l} reached {probe:.3g} above its tail bound "
                f"{record.target_tail_bound:.3g}"]
    return []


def run_experiment(config: ExperimentConfig) -> RunResult:
    cert = build_config_certificate(config)
    tc = compute_thresholds(cert, cap=config.threshold_cap)
    placement = assign_placements(tc, config.horizon, negligible=config.negligible)
    result = RunResult(config=config, tail_certificate=tc, placement=placement, reports=[])

    result.failures += _check_right_inverse(tc)
    for l in range(1, cert.target_count + 1):
        epsilon = config.radii.factor * proximity_bound(l)
        report = discrete_visits(placement, l, epsilon, config.horizon, config.radii.window_fraction)
        result.reports.append(report)
        if not report.covering_set_check:
            result.failures.append(f"covering-set: some index of A({l},{tc.records[l - 1].threshold}) "
                                   f"is not a visit at radius {epsilon:.3g}")
        result.failures += _check_proximity(placement, l, config.bound_scale)
        if config.trials > 0:
            result.failures += _check_probe(config, tc, l)

    if config.mode == Mode.continuous:
        section = config.continuous
        report = continuous_visits(solution_orbit(placement), tc.target(section.target), section.epsilon,
                                   section.t_max, section.grid, l=section.target,
                                   window_fraction=config.radii.window_fraction)
        result.reports.append(report)
        if not report.covering_set_check:
            result.failures.append(f"continuous-bridge: inner measure {report.inner_measure:.4g} is below "
                                   f"{report.bridged_visits} windows of length {report.delta}")
        if report.inner_measure > report.outer_measure + _ROUNDING_SLACK:
            result.failures.append("continuous-bracket: inner measure exceeds outer measure")
    return result


def write_outputs(result: RunResult, out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / 'certificate.json').write_text(result.tail_certificate.model_dump_json(indent=2))
        (out_dir / 'placement.json').write_text(result.placement.model_dump_json(indent=2))
    except OSError as e:
        raise LabError(f"Could not write to {out_dir}: {e}", ErrorCode.IO) from e
    report_export(result.reports, out_dir / 'reports.csv', out_dir / 'reports.json')
    export_members_csv(result.placement.schedule, result.config.horizon, out_dir / 'members.csv')


def _load_config_data(args) -> dict:
    if getattr(args, 'config', None):
        return parse_config_text(read_config_file(args.config), source=Path(args.config).name)
    return {'operator': {}}


_OPERATOR_FLAGS = {'op': 'kind', 'w': 'w', 'space': 'space', 'p': 'p', 'model': 'model', 'k': 'k',
                   'a': 'a', 'b': 'b', 'rate': 'lambda', 'twist': 'twist', 'power': 'power'}


def _config_from_args(args, **extra) -> ExperimentConfig:
    data = _load_config_data(args)
    operator = dict(data.get('operator') or {})
    for flag, key in _OPERATOR_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            operator[key] = value
    if getattr(args, 'swap', False):
        operator['swap'] = True
    operator.setdefault('kind', 'shift')
    data['operator'] = operator
    for name in ('targets', 'precision', 'horizon'):
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if getattr(args, 'cap', None) is not None:
        data['threshold-cap'] = args.cap
    data.update(extra)
    source = Path(args.config).name if getattr(args, 'config', None) else "command line"
    return config_from_data(data, source)


def cmd_run(args) -> int:
    config = load_config(args.config)
    result = run_experiment(config)
    out_dir = Path(args.out) if args.out else config.output_dir()
    write_outputs(result, out_dir)

    print(f"Operator: {result.tail_certificate.cert.describe()}")
    print(threshold_table(result.tail_certificate))
    print(schedule_table(result.placement.schedule, min(config.horizon, 200)))
    print(report_table(result.reports))
    print(f"Wrote certificate.json, placement.json, reports.csv, reports.json, members.csv to {out_dir}")
    if result.failures:
        print(f"\n{len(result.failures)} invariant(s) failed:", file=sys.stderr)
        for failure in result.failures:
            print(f"  - {failure}", file=sys.stderr)
        return 2
    print("All checked invariants hold.")
    return 0


def cmd_partition(args) -> int:
    sched = build_schedule(parse_pairs(args.pairs))
    print(schedule_table(sched, args.horizon))
    for key in sched.pairs:
        print(f"{key.label()} ∩ [1,{args.horizon}] = {sched.members(key, args.horizon)}")
    print(f"summability weight: {summability_weight(sched):.6g}")
    if args.csv:
        print(f"Wrote {export_members_csv(sched, args.horizon, args.csv)}")
    return 0


def cmd_certify(args) -> int:
    config = _config_from_args(args)
    tc = compute_thresholds(build_config_certificate(config), cap=config.threshold_cap)
    print(f"Operator: {tc.cert.describe()}")
    print(threshold_table(tc))
    for record in tc.records:
        print(f"N_{record.l} = {record.threshold}")
    if isinstance(tc.cert.op, ShiftModel):
        for n in (1, 5, 10):
            unit, image = unboundedness_witness(tc.cert, n)
            print(f"unbounded: ||u|| = {unit:g}, ||A u|| = {image:.4g} at u ~ e_{n + 1}")
    if args.json:
        _write_text(Path(args.json), tc.model_dump_json(indent=2))
    return 0


def _placement_from_args(args) -> FhcPlacement:
    config = _config_from_args(args)
    tc = compute_thresholds(build_config_certificate(config), cap=config.threshold_cap)
    return assign_placements(tc, config.horizon, negligible=config.negligible)


def cmd_construct(args) -> int:
    placement = _placement_from_args(args)
    shown = sorted(placement.placements.items())[:args.show]
    print(f"{len(placement.placements)} placements up to {placement.horizon}; first: "
          + ", ".join(f"z_{n} = y_{l}" for n, l in shown))
    print(f"tail beyond the horizon <= {placement.truncation_tail_bound:.3g}")
    if args.materialize is not None:
        vector, tail = materialize(placement, args.materialize)
        print(f"x_{args.materialize} = {describe_vector(vector, limit=6)}")
        print(f"tail bound {tail:.3g}")
    if args.json:
        _write_text(Path(args.json), placement.model_dump_json(indent=2))
    return 0


def cmd_orbit(args) -> int:
    placement = _placement_from_args(args)
    rows = []
    for n in args.n:
        point = orbit_eval(placement, n)
        l = placement.placements.get(n, args.target)
        rows.append((n, placement.placements.get(n), distance_to_target(placement, n, l),
                     component_norms(placement, n, l), point.certified_error))
    print(orbit_table(rows))
    return 0


def cmd_density(args) -> int:
    reports = report_import(args.reports)
    if args.window_fraction is not None:
        reports = [r.model_copy(update={'density_floor': density_proxy(r.visit_times, int(r.horizon),
                                                                      args.window_fraction)})
                   if r.mode == 'discrete' else r for r in reports]
    print(report_table(reports))
    return 0


def cmd_semigroup(args) -> int:
    sg = RegularizedSemigroup(rate=args.rate, regularizer=Regularizer(kind=args.regularizer, factor=args.factor))
    tent = PiecewiseLinearFn.tent(0, 1, 2)
    t, s = parse_scalar(args.t), parse_scalar(args.s)
    print(f"||W(t)W(s)f - C W(t+s)f|| at t={t}, s={s}: {float(semigroup_law_residual(sg, t, s, tent)):.3g}")
    bump = PolySeries.from_coeffs([0, 0, 1, -2, 1], PolyModel(kind='ck', k=1))
    for step in (1e-2, 1e-3, 1e-4):
        residual, halved = generator_residual(sg, bump, step), generator_residual(sg, bump, step / 2)
        print(f"generator residual at h={step:g}: {residual:.4g}, at h/2: {halved:.4g} (ratio {halved / residual:.3f})")
    print(f"continuity window for the unit tent at epsilon={args.epsilon}: "
          f"{continuity_window(tent, sg.rate, args.epsilon)}")
    print(profile_table(strong_continuity_profile(sg, tent, levels=args.levels)))
    return 0


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise LabError(f"Could not write {path}: {e}", ErrorCode.IO) from e
    print(f"Wrote {path}")


def _add_operator_arguments(parser):
    parser.add_argument('--config', help="NestedText experiment config; flags below override it")
    parser.add_argument('--op', choices=['shift', 'differentiation', 'translation'])
    parser.add_argument('--w', help="shift weight, |w| > 1 (e.g. 2, 2j, 1/2+3j)")
    parser.add_argument('--space', choices=['lp', 'c0'])
    parser.add_argument('--p', type=float)
    parser.add_argument('--model', choices=['h2', 'ck'])
    parser.add_argument('--k', type=int)
    parser.add_argument('--a')
    parser.add_argument('--b')
    parser.add_argument('--lambda', dest='rate', help="translation rate")
    parser.add_argument('--twist', help="unimodular rotation, e.g. -1 or 1j")
    parser.add_argument('--power', type=int)
    parser.add_argument('--swap', action='store_true', help="use the inverse as the forward action")
    parser.add_argument('--targets', type=int)
    parser.add_argument('--precision', choices=['float', 'rational'])
    parser.add_argument('--cap', type=int, help="largest threshold searched")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='hypercyclic-lab',
                                     description="Certified frequently hypercyclic vectors for unbounded operators.")
    parser.add_argument('--log-level', default='WARNING', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help="certify, construct and verify from a config, writing the result files")
    p.add_argument('config')
    p.add_argument('--out', help="output directory (default: output.dir, or $HYPERCYCLIC_LAB_OUT)")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser('partition', help="print the disjoint index sets for (l,nu) pairs")
    p.add_argument('--pairs', required=True, help="e.g. '(1,2), (2,3)'")
    p.add_argument('--horizon', type=int, default=64)
    p.add_argument('--csv', help="also write every member with its pair")
    p.set_defaults(handler=cmd_partition)

    p = sub.add_parser('certify', help="compute the thresholds N_l")
    _add_operator_arguments(p)
    p.add_argument('--json', help="write the tail certificate")
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser('construct', help="place the targets and materialise the vector")
    _add_operator_arguments(p)
    p.add_argument('--horizon', type=int)
    p.add_argument('--materialize', type=int, metavar='M')
    p.add_argument('--show', type=int, default=10)
    p.add_argument('--json', help="write the placement")
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser('orbit', help="evaluate orbit points with certified errors")
    _add_operator_arguments(p)
    p.add_argument('--horizon', type=int)
    p.add_argument('--n', type=int, nargs='+', required=True)
    p.add_argument('--target', type=int, default=1, help="target compared at unplaced indices")
    p.set_defaults(handler=cmd_orbit)

    p = sub.add_parser('density', help="density floors of a saved report file")
    p.add_argument('--reports', required=True)
    p.add_argument('--window-fraction', type=float)
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser('semigroup', help="checks of the C-regularized translation semigroup")
    p.add_argument('--lambda', dest='rate', default='1')
    p.add_argument('--regularizer', choices=['identity', 'scalar'], default='identity')
    p.add_argument('--factor', default='1')
    p.add_argument('--t', default='1/2')
    p.add_argument('--s', default='1/4')
    p.add_argument('--epsilon', type=float, default=0.5)
    p.add_argument('--levels', type=int, default=10)
    p.set_defaults(handler=cmd_semigroup)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(name)s: %(message)s")
    try:
        return args.handler(args)
    except LabError as e:
        print(f"\n{e}", file=sys.stderr)
        return 2 if e.error_code == ErrorCode.INVARIANT_FAILED else 1


if __name__ == '__main__':
    sys.exit(main())
