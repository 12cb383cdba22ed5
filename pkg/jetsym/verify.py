"""
Self-test of jetsym.

Every closed formula is checked against its independent route (oracle,
tables, templates, model generators) and the outcomes are collected into
one result dictionary that can be rendered as text, JSON or CSV.
"""

import csv
import io
import json
import logging
import time
from itertools import combinations_with_replacement
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .combinatorics import CosetSpec, coset_weight, integer_partitions, orbit_count
from .exceptions import JetsymError
from .faa_di_bruno import CompositionSpec, bell_check, fdb_closed, fdb_derivations, fdb_oracle
from .flatness import (GHLMSymbols, SecondOrderSystem, collect_families, cubic_rhs, derive_target_system,
                       emit_families, evaluate_squares, expand_compat_first, ghlm_from_squares,
                       ghlm_in_terms_of, match_families, quasi_inversion, reduce_modulo_families,
                       second_aux_formulas, solve_second_aux, square_functions, target_form)
from .jets import JetContext
from .kernel import FormalFraction, fraction_equal
from .models import model_fields, model_system
from .prolongation import (VectorField, binomial_slice, prolong_closed, prolong_inductive,
                           slice_by_jets)
from .reference import (bracket_mismatches, composition_template, first_order_template, prolongation_template,
                        reference_cleared_target, reference_fdb, reference_scalar_prolongation,
                        reference_target_entries, second_order_template, template_orders)
from .symmetry import (bracket_table, determining_system, is_symmetry, jacobi_defects, taylor_rank,
                       verify_prolong_bracket)
from .transfer import (SolutionManifold, flat_solutions, specialize, transfer_F_derivatives,
                       verify_total_derivative)
from .utils import canonical_pair, load_settings, multi_indices

logger = logging.getLogger(__name__)

# A check returns (passed, detail, warnings).
CheckResult = Tuple[bool, str, List[str]]


def check_prolongation_oracle(grid: Mapping[str, Any]) -> CheckResult:
    """Closed prolongation against the inductive one on the configured grid."""
    spaces = [(n, m, grid['prolong_max_order'])
              for n in range(1, grid['prolong_max_n'] + 1)
              for m in range(1, grid['prolong_max_m'] + 1)]
    spaces.append((1, 1, grid['prolong_scalar_order']))
    compared = 0
    for n, m, order in spaces:
        ctx = JetContext(n, m, order)
        prolonged = prolong_inductive(VectorField.generic(ctx), order)
        for jet in ctx.jets(1, order):
            if prolong_closed(ctx, jet) != prolonged.coefficient(jet.dep, jet.idx):
                return False, f"mismatch at n={n}, m={m} for {jet}", []
            compared += 1
    return True, f"{compared} coefficients agree", []


def check_scalar_tables(grid: Mapping[str, Any]) -> CheckResult:
    """Tabulated Y_1..Y_6 and the pure y_1 slices."""
    top = min(6, grid['prolong_scalar_order'])
    for order in range(1, top + 1):
        ctx = JetContext(1, 1, order)
        computed = prolong_inductive(VectorField.generic(ctx), order).coefficient(1, (1,) * order)
        if computed != reference_scalar_prolongation(order):
            return False, f"Y_{order} differs from the table", []
        if slice_by_jets(computed, {ctx.y(1, (1,))}) != binomial_slice(order):
            return False, f"binomial slice of Y_{order} differs", []
    return True, f"Y_1..Y_{top} match", []


def check_templates(grid: Mapping[str, Any]) -> CheckResult:
    """Kronecker templates and the tabulated template families against the closed form."""
    for n in range(1, grid['prolong_max_n'] + 1):
        for m in range(1, grid['prolong_max_m'] + 1):
            ctx = JetContext(n, m, 1)
            for j in range(1, m + 1):
                for i in range(1, n + 1):
                    if first_order_template(ctx, j, i) != prolong_closed(ctx, ctx.y(j, (i,))):
                        return False, f"first order template differs at n={n}, m={m}, j={j}, i={i}", []
        ctx = JetContext(n, 1, 2)
        for i1, i2 in combinations_with_replacement(range(1, n + 1), 2):
            if second_order_template(ctx, i1, i2) != prolong_closed(ctx, ctx.y(1, (i1, i2))):
                return False, f"second order template differs at n={n}, ({i1},{i2})", []
    for name, n, m in (('one_dependent', 2, 1), ('one_independent', 1, 2), ('general', 2, 2)):
        for order in template_orders('prolongation_templates', name):
            ctx = JetContext(n, m, order)
            for j in range(1, m + 1):
                for idx in multi_indices(n, order):
                    if prolongation_template(name, ctx, j, idx) != prolong_closed(ctx, ctx.y(j, idx)):
                        return False, f"{name} template differs at j={j}, {idx}", []
    return True, "templates agree", []


def check_fdb(grid: Mapping[str, Any]) -> CheckResult:
    """Closed Faa di Bruno against the chain rule, the derivations and the tables."""
    compared = 0
    specs = []
    for n in range(1, grid['fdb_max_n'] + 1):
        for m in range(1, grid['fdb_max_m'] + 1):
            for order in range(1, grid['fdb_max_order'] + 1):
                specs.extend(CompositionSpec(n, m, idx) for idx in multi_indices(n, order))
    specs.extend(CompositionSpec.scalar(k) for k in range(grid['fdb_max_order'] + 1,
                                                          grid['fdb_scalar_order'] + 1))
    for spec in specs:
        closed = fdb_closed(spec)
        if closed != fdb_oracle(spec):
            return False, f"closed and chain rule differ for n={spec.n}, m={spec.m}, {spec.target}", []
        if spec.order <= 4 and closed != fdb_derivations(spec):
            return False, f"derivation route differs for n={spec.n}, m={spec.m}, {spec.target}", []
        compared += 1
    for order in range(1, 7):
        if fdb_closed(CompositionSpec.scalar(order)) != reference_fdb(order):
            return False, f"h_{order} differs from the table", []
    for name, n, m in (('one_outer_variable', 2, 1), ('one_inner_variable', 1, 2), ('general', 2, 2)):
        for order in template_orders('composition_templates', name):
            for idx in multi_indices(n, order):
                if composition_template(name, n, m, idx) != fdb_closed(CompositionSpec(n, m, idx)):
                    return False, f"{name} composition template differs at {idx}", []
    for order in range(1, grid['fdb_scalar_order'] + 1):
        if not bell_check(order):
            return False, f"Bell number check fails at order {order}", []
    return True, f"{compared} derivatives agree", []


def check_cosets(grid: Mapping[str, Any]) -> CheckResult:
    """|F| from the counting formula against brute-force orbits."""
    count = 0
    for size in range(1, grid['coset_max_size'] + 1):
        for shape in integer_partitions(size):
            spec = CosetSpec.from_shape(shape)
            if coset_weight(spec)[1] != orbit_count(spec):
                return False, f"coset count differs for shape {shape}", []
            count += 1
    if coset_weight(CosetSpec((1, 2), (2, 1))) != (4, 6):
        return False, "shape (1, 1, 2) should give |H| = 4, |F| = 6", []
    return True, f"{count} shapes agree", []


def check_determining(grid: Mapping[str, Any]) -> CheckResult:
    """Determining equations of y'' = 0 and of y'' = F(x, y, y')."""
    flat = determining_system(model_system('flat'))
    if not flat.is_linear():
        return False, "determining equations of y'' = 0 are not linear", []
    for f in model_fields('flat'):
        if flat.check(f):
            return False, f"{f.name} does not solve the determining equations of y'' = 0", []
    generic = determining_system(model_system('generic_scalar'), expand=False)
    if len(generic) != 1 or not generic.is_linear():
        return False, "y'' = F should give one linear identity", []
    return True, f"{len(flat)} equations for y'' = 0", []


def check_generators(grid: Mapping[str, Any]) -> CheckResult:
    """Tangency, independence, brackets and Jacobi identity of the model generators."""
    for model in ('flat', 'e4', 'e5'):
        system = model_system(model)
        fields = model_fields(model)
        for f in fields:
            if not is_symmetry(system, f):
                return False, f"{model}: {f.name} is not tangent", []
        if taylor_rank(fields) != len(fields):
            return False, f"{model}: generators are dependent", []
        table = bracket_table(fields, [f.name for f in fields])
        if not table.closed():
            return False, f"{model}: brackets leave the span", []
        if model in ('flat', 'e4'):
            bad = bracket_mismatches(table, model)
            if bad:
                return False, f"{model}: bracket table differs at {bad[0]}", []
        if jacobi_defects(fields):
            return False, f"{model}: Jacobi identity fails", []
        first, last = fields[0], fields[-1]
        if not verify_prolong_bracket(first, last, 2):
            return False, f"{model}: prolongation does not commute with the bracket", []
    return True, "flat, e4 and e5 generators verified", []


def check_transfer(grid: Mapping[str, Any]) -> CheckResult:
    """Derivative transfer to the solutions and the pulled-back total derivative."""
    mf = SolutionManifold()
    if not verify_total_derivative(mf):
        return False, "F_x + Pi_x F_y + Pi_xx F_y1 != Pi_xxx", []
    flat = flat_solutions(mf)
    for name, q in transfer_F_derivatives(mf).items():
        if not specialize(q, mf, flat).num.is_zero():
            return False, f"{name} does not vanish on the flat solutions", []
    return True, "transfer identities hold", []


def check_flatness_expansion(grid: Mapping[str, Any]) -> CheckResult:
    """Collected compatibility conditions against the emitted families."""
    for n in range(2, grid['flatness_max_n'] + 1):
        s = GHLMSymbols(n)
        system = SecondOrderSystem.from_ghlm(n, s.ghlm())
        mismatches = match_families(collect_families(system), emit_families(n, s))
        if mismatches:
            return False, f"n={n}: families differ at {mismatches[0]}", []
    return True, f"families agree for n=2..{grid['flatness_max_n']}", []


def check_flatness_transformation(grid: Mapping[str, Any]) -> CheckResult:
    """The target system of a point transformation at n = 2, computed and tabulated."""
    n = 2
    s = GHLMSymbols(n)
    derived = derive_target_system(n, s)
    form = target_form(n, s)
    squares = square_functions(n, symbols=s)
    ghlm = ghlm_from_squares(n, s)
    if reference_target_entries(s) != form:
        return False, "square-function form differs from the table", []
    cleared, jacobian = reference_cleared_target(s)
    for key, value in derived.items():
        if not fraction_equal(value, evaluate_squares(form[key], squares)):
            return False, f"y{key} differs from the square-function form", []
        if cubic_rhs(s.ctx, ghlm, *key) != form[key]:
            return False, f"cubic template through the squares differs at {key}", []
        if not fraction_equal(value, FormalFraction(-cleared[key], jacobian)):
            return False, f"y{key} differs from the cleared Jacobian identity", []
    return True, "target system matches at n=2", []


def _check_second_aux(n: int, s: GHLMSymbols, solved) -> Optional[str]:
    formulas = second_aux_formulas(n, s)
    for (j1, j2), value in formulas['theta_x'].items():
        if solved.theta_x(j1, j2) != value:
            return f"n={n}: Theta^{j1}_x{j2} differs"
    for j, value in formulas['theta_y'].items():
        if solved.theta_y(j) != value:
            return f"n={n}: Theta^{j}_y differs"
    for j, value in formulas['theta_n_x'].items():
        if solved.theta_n_x(j) != value:
            return f"n={n}: Theta^N_x{j} differs"
    if solved.theta_n_y() != formulas['theta_n_y']:
        return f"n={n}: Theta^N_y differs"
    return None


def check_auxiliary(grid: Mapping[str, Any]) -> CheckResult:
    """Quasi-inversion, the second auxiliary system and the first compatibility family."""
    top = grid['flatness_max_n']
    for n in range(2, top + 1):
        s = GHLMSymbols(n)
        quasi = quasi_inversion(n, s)

        def box(k: int, a: int, b: int):
            return quasi[(k,) + canonical_pair(a, b)]

        if ghlm_in_terms_of(n, box) != s.ghlm():
            return False, f"n={n}: quasi-inversion does not invert the function extraction", []
        solved = solve_second_aux(n, s)
        mismatch = _check_second_aux(n, s, solved)
        if mismatch:
            return False, mismatch, []
        if n == 2:
            expanded = expand_compat_first(n, 1, 1, 2, solved)
            if reduce_modulo_families(expanded, n, symbols=s) != 'reduced':
                return False, "n=2: first compatibility family at (1,1,2) not reduced within the degree bound", []
    return True, f"auxiliary systems verified for n=2..{top}", []


CHECKS: List[Tuple[str, Callable[[Mapping[str, Any]], CheckResult]]] = [
    ('prolongation_oracle', check_prolongation_oracle),
    ('scalar_tables', check_scalar_tables),
    ('kronecker_templates', check_templates),
    ('faa_di_bruno', check_fdb),
    ('cosets', check_cosets),
    ('determining_equations', check_determining),
    ('generators', check_generators),
    ('transfer', check_transfer),
    ('flatness_expansion', check_flatness_expansion),
    ('flatness_transformation', check_flatness_transformation),
    ('auxiliary_systems', check_auxiliary),
]


def check_names() -> List[str]:
    return [name for name, _ in CHECKS]


def run_selftest(settings: Optional[Dict[str, Any]] = None,
                 only: Optional[Sequence[str]] = None,
                 progress: Optional[Callable[[str], None]] = None) -> Dict[str, Any]:
    """
    Run the named checks.

    Args:
        settings: Settings dictionary (default: load_settings())
        only: Restrict to these check names
        progress: Called with each check name before it runs

    Returns:
        {'valid', 'checks': [{'name', 'status', 'detail', 'seconds'}],
         'errors', 'warnings'}
    """
    settings = settings or load_settings()
    grid = settings['selftest']
    if only:
        unknown = sorted(set(only) - set(check_names()))
        if unknown:
            raise JetsymError(f"unknown checks: {', '.join(unknown)}")
    results: Dict[str, Any] = {'valid': True, 'checks': [], 'errors': [], 'warnings': []}
    for name, check in CHECKS:
        if only and name not in only:
            continue
        if progress:
            progress(name)
        start = time.perf_counter()
        try:
            passed, detail, warnings = check(grid)
        except JetsymError as e:
            passed, detail, warnings = False, f"{type(e).__name__}: {e}", []
        elapsed = time.perf_counter() - start
        logger.info("%s: %s in %.2fs", name, 'pass' if passed else 'FAIL', elapsed)
        results['checks'].append({
            'name': name,
            'status': 'pass' if passed else 'fail',
            'detail': detail,
            'seconds': round(elapsed, 3),
        })
        results['warnings'].extend(f"{name}: {w}" for w in warnings)
        if not passed:
            results['valid'] = False
            results['errors'].append(f"{name}: {detail}")
    return results


def generate_report(results: Dict[str, Any], output_format: str = 'text') -> str:
    """
    Format self-test results.

    Args:
        results: Results from run_selftest()
        output_format: 'text', 'json' or 'csv'

    Returns:
        Formatted report string
    """
    if output_format == 'json':
        return json.dumps(results, indent=2)

    if output_format == 'csv':
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['check', 'status', 'seconds', 'detail'])
        for check in results['checks']:
            writer.writerow([check['name'], check['status'], check['seconds'], check['detail']])
        return buffer.getvalue().rstrip('\n')

    lines = []
    lines.append("=" * 60)
    lines.append("SELFTEST REPORT")
    lines.append("=" * 60)
    passed = sum(1 for c in results['checks'] if c['status'] == 'pass')
    lines.append(f"Checks run:    {len(results['checks'])}")
    lines.append(f"Checks passed: {passed}")
    lines.append("")
    for check in results['checks']:
        mark = 'PASS' if check['status'] == 'pass' else 'FAIL'
        lines.append(f"[{mark}] {check['name']:<26} {check['seconds']:>9.3f}s  {check['detail']}")
    if results['warnings']:
        lines.append("")
        lines.append("WARNINGS:")
        lines.append("-" * 60)
        for warning in results['warnings']:
            lines.append(f"  - {warning}")
    lines.append("")
    lines.append("All checks passed." if results['valid'] else "Some checks FAILED.")
    lines.append("=" * 60)
    return '\n'.join(lines)


def save_report(results: Dict[str, Any], output_path: str, output_format: str = 'text') -> None:
    """Write the formatted report to `output_path`."""
    report = generate_report(results, output_format)
    with open(output_path, 'w', encoding='utf-8') as f:
        f.write(report)
