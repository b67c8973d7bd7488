"""Console tables for the CLI."""
from prettytable import PrettyTable

from hypercyclic_lab.density_partition import analytic_density, PartitionSchedule
from hypercyclic_lab.spaces import PiecewiseLinearFn, PolySeries, SparseVector


def _fmt(x, digits=4):
    return f"{float(x):.{digits}g}"


def schedule_table(sched: PartitionSchedule, horizon: int, shown: int = 12) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ['rank', 'set', 'block', 'density', f'members <= {horizon}']
    for rank, key in enumerate(sched.pairs, 1):
        found = sched.members(key, horizon)
        head = ", ".join(str(n) for n in found[:shown]) + (", ..." if len(found) > shown else "")
        table.add_row([rank, key.label(), sched.block_lengths[rank], _fmt(analytic_density(sched, key)), head])
    table.align[f'members <= {horizon}'] = 'l'
    return table


def threshold_table(tc) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ['l', 'target', 'N_l', 'forward tail', 'inverse tail', 'bound 1/(l 2^l)', 'round trip']
    for record in tc.records:
        table.add_row([record.l, describe_vector(tc.target(record.l)), record.threshold,
                       _fmt(record.forward_tail_bound), _fmt(record.inverse_tail_bound),
                       _fmt(record.pair_bound), _fmt(record.identity_residual)])
    return table


def report_table(reports) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ['l', 'epsilon', 'horizon', 'visits', 'density floor', 'covering', 'proof bound', 'error']
    for r in reports:
        table.add_row([r.l, _fmt(r.epsilon), r.horizon, r.visit_count, _fmt(r.density_floor),
                       'yes' if r.covering_set_check else 'NO', _fmt(r.proof_bound), _fmt(r.certified_error, 3)])
    return table


def orbit_table(rows) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ['n', 'placed', '||A^n x - y_l||', 'forward', 'middle', 'backward', 'error']
    for n, placed, gap, parts, error in rows:
        table.add_row([n, placed or '-', _fmt(gap), *(_fmt(v) for v in parts), _fmt(error, 3)])
    return table


def profile_table(rows) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ['t', '||W(t)f - Cf||', 'modulus bound']
    for t, gap, bound in rows:
        table.add_row([str(t), _fmt(gap), _fmt(bound)])
    return table


def describe_vector(v, limit: int = 4) -> str:
    if isinstance(v, SparseVector):
        terms, joiner = [f"{c}·e{k}" for k, c in v.entries], " + "
    elif isinstance(v, PolySeries):
        terms, joiner = [f"{c}·z^{j}" for j, c in enumerate(v.coeffs) if c != 0], " + "
    elif isinstance(v, PiecewiseLinearFn):
        terms, joiner = [f"({x},{y})" for x, y in zip(v.breakpoints, v.values)], " "
    else:
        return repr(v)
    if not terms:
        return "0"
    return joiner.join(terms[:limit]) + (" ..." if len(terms) > limit else "")
