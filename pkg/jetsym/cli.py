"""
Command-line interface for jetsym.

Reads systems and vector fields from text files (or the bundled models),
dispatches to the engine and prints the results as text, LaTeX or a
versioned JSON report.
"""

import argparse
import copy
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

try:
    from rich.console import Console
    from rich.table import Table
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False

from . import __version__
from .exceptions import JetsymError
from .faa_di_bruno import CompositionSpec, fdb_closed, fdb_oracle
from .flatness import (FAMILY_NAMES, GHLMSymbols, SecondOrderSystem, collect_families, cubic_test,
                       emit_families, match_families)
from .formatter import format_combination, format_output, format_text
from .jets import JetContext, PDESystem
from .kernel import Poly
from .models import model_fields, model_names, model_system
from .parser import parse_fields, parse_system, read_text
from .prolongation import VectorField, prolong_closed, prolong_inductive
from .reference import bracket_mismatches, load_reference
from .symmetry import (bracket_table, complete_skeleton, determining_system, invariants_E1,
                       jacobi_defects, tangency_defect)
from .utils import configure_logging, load_settings, multi_indices
from .verify import check_names, generate_report, run_selftest, save_report

logger = logging.getLogger(__name__)

FORMATS = ('text', 'json', 'latex')
COMMANDS = ('prolong', 'fdb', 'determine', 'tangent', 'brackets', 'flat2', 'selftest')

# Smaller grids for `selftest --quick`.
QUICK_GRID = {
    'prolong_max_n': 2,
    'prolong_max_m': 2,
    'prolong_max_order': 3,
    'fdb_max_n': 2,
    'fdb_max_m': 2,
    'fdb_max_order': 4,
    'flatness_max_n': 2,
    'coset_max_size': 6,
}


@dataclass
class SessionConfig:
    """Everything one invocation needs; built from the command line."""

    command: str
    n: int = 1
    m: int = 1
    order: int = 1
    inputs: Dict[str, Any] = field(default_factory=dict)
    output_format: str = 'text'
    verbose: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise JetsymError(f"unknown command '{self.command}'")
        if self.n < 1 or self.m < 1:
            raise JetsymError("n and m must be at least 1")
        if self.order < 1:
            raise JetsymError("the order must be at least 1")
        if self.output_format not in FORMATS:
            raise JetsymError(f"output format must be one of {', '.join(FORMATS)}")


@dataclass
class CommandOutcome:
    status: str  # 'ok' or 'failed'
    results: List[Dict[str, Any]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)


# input helpers ---------------------------------------------------------------

def _parse_target(text: Optional[str]) -> Optional[Tuple[int, ...]]:
    if not text:
        return None
    try:
        return tuple(int(part) for part in text.split(',') if part.strip())
    except ValueError:
        raise JetsymError(f"target must be a comma separated index list, got '{text}'")


def load_system(cfg: SessionConfig, complete: bool = True) -> PDESystem:
    """The system named by --model or read from --system."""
    if cfg.inputs.get('model'):
        return model_system(cfg.inputs['model'], complete=complete)
    path = cfg.inputs.get('system')
    if not path:
        raise JetsymError("give --system FILE or --model NAME")
    system = parse_system(read_text(path))
    return complete_skeleton(system) if complete else system


def load_fields(cfg: SessionConfig, ctx: Optional[JetContext] = None) -> List[VectorField]:
    """The fields named by --model or read from --fields."""
    if cfg.inputs.get('model') and not cfg.inputs.get('fields'):
        return model_fields(cfg.inputs['model'])
    path = cfg.inputs.get('fields')
    if not path:
        raise JetsymError("give --fields FILE or --model NAME")
    return parse_fields(read_text(path), ctx=ctx)


# commands ------------------------------------------------------------------

def cmd_prolong(cfg: SessionConfig) -> CommandOutcome:
    ctx = JetContext(cfg.n, cfg.m, cfg.order)
    target = _parse_target(cfg.inputs.get('target'))
    if target is not None:
        if len(target) != cfg.order:
            raise JetsymError(f"target {target} does not have length {cfg.order}")
        jets = [ctx.y(cfg.inputs.get('dep', 1), target)]
    else:
        jets = list(ctx.jets(cfg.order, cfg.order))
    method = cfg.inputs.get('method', 'closed')
    compare = cfg.inputs.get('compare', False)

    inductive = None
    if method == 'inductive' or compare:
        inductive = prolong_inductive(VectorField.generic(ctx), cfg.order)
    outcome = CommandOutcome('ok')
    for jet in jets:
        closed = prolong_closed(ctx, jet) if method == 'closed' or compare else None
        oracle = inductive.coefficient(jet.dep, jet.idx) if inductive is not None else None
        value = closed if closed is not None else oracle
        entry = {'name': str(jet), 'terms': len(value), 'value': format_output(value, cfg.output_format)}
        if compare:
            entry['match'] = closed == oracle
            if not entry['match']:
                outcome.status = 'failed'
        outcome.results.append(entry)
    return outcome


def cmd_fdb(cfg: SessionConfig) -> CommandOutcome:
    target = _parse_target(cfg.inputs.get('target'))
    if target is not None:
        specs = [CompositionSpec(cfg.n, cfg.m, target)]
    else:
        specs = [CompositionSpec(cfg.n, cfg.m, idx) for idx in multi_indices(cfg.n, cfg.order)]
    compare = cfg.inputs.get('compare', False)
    outcome = CommandOutcome('ok')
    for spec in specs:
        closed = fdb_closed(spec)
        entry = {'name': f"h[{','.join(map(str, spec.target))}]", 'terms': len(closed),
                 'value': format_output(closed, cfg.output_format)}
        if compare:
            entry['match'] = closed == fdb_oracle(spec)
            if not entry['match']:
                outcome.status = 'failed'
        outcome.results.append(entry)
    if cfg.n == 1 and cfg.m == 1 and any(spec.order == 5 for spec in specs):
        outcome.notes.append("the classical printed h5 table swaps the coefficients of "
                             "f3*g1*g2^2 (15) and f3*g1^2*g3 (10); the values here follow the chain rule")
    return outcome


def cmd_determine(cfg: SessionConfig) -> CommandOutcome:
    system = load_system(cfg)
    expand = not cfg.inputs.get('no_expand', False)
    ds = determining_system(system, expand=expand)
    outcome = CommandOutcome('ok')
    for (jet, head), eq in zip(ds.labels, ds.equations):
        label = str(jet) + (f" @ {format_text(Poly.from_monomial(head))}" if head else '')
        outcome.results.append({'name': label, 'terms': len(eq),
                                'value': format_output(eq, cfg.output_format)})
    if not ds.is_linear():
        outcome.status = 'failed'
        outcome.notes.append("some equation is not linear in the unknown derivatives")
    return outcome


def cmd_tangent(cfg: SessionConfig) -> CommandOutcome:
    system = load_system(cfg)
    fields = load_fields(cfg, system.ctx)
    outcome = CommandOutcome('ok')
    tangent = 0
    for f in fields:
        defects = [d for d in tangency_defect(system, f) if not d.is_zero()]
        entry = {'name': f.name, 'tangent': not defects,
                 'defects': [format_output(d, cfg.output_format) for d in defects]}
        if defects:
            outcome.status = 'failed'
        else:
            tangent += 1
        outcome.results.append(entry)
    outcome.notes.append(f"{tangent}/{len(fields)} tangent")
    return outcome


def cmd_brackets(cfg: SessionConfig) -> CommandOutcome:
    ctx = None
    if cfg.inputs.get('system'):
        ctx = parse_system(read_text(cfg.inputs['system'])).ctx
    fields = load_fields(cfg, ctx)
    names = [f.name or f"L{k + 1}" for k, f in enumerate(fields)]
    table = bracket_table(fields, names)
    outcome = CommandOutcome('ok')
    for row in table.rows():
        for entry in row:
            value = (format_combination(entry.coefficients, names) if entry.status == 'ok'
                     else 'outside span')
            outcome.results.append({'name': f"[{entry.left}, {entry.right}]", 'status': entry.status,
                                    'value': value})
    if not table.closed():
        outcome.status = 'failed'
        outcome.notes.append("some brackets leave the span of the fields")
    if jacobi_defects(fields):
        outcome.status = 'failed'
        outcome.notes.append("the Jacobi identity fails")
    model = cfg.inputs.get('model')
    if model and model in load_reference().get('brackets', {}):
        bad = bracket_mismatches(table, model)
        if bad:
            outcome.status = 'failed'
            outcome.notes.append(f"{len(bad)} entries differ from the reference table, first {bad[0]}")
        else:
            outcome.notes.append("table matches the reference")
    return outcome


def cmd_flat2(cfg: SessionConfig) -> CommandOutcome:
    outcome = CommandOutcome('ok')
    if not cfg.inputs.get('model') and not cfg.inputs.get('system'):
        # Generic run: families from the expansion against the emitted ones.
        n = cfg.n
        if n < 2:
            raise JetsymError("the generic flatness run needs --n 2 or more")
        s = GHLMSymbols(n)
        collected = collect_families(SecondOrderSystem.from_ghlm(n, s.ghlm()))
        emitted = emit_families(n, s)
        mismatches = match_families(collected, emitted)
        for name in FAMILY_NAMES:
            outcome.results.append({'name': f"family {name}", 'collected': len(collected[name]),
                                    'emitted': len(emitted[name])})
        if mismatches:
            outcome.status = 'failed'
            outcome.notes.append(f"{len(mismatches)} mismatches, first {mismatches[0]}")
        else:
            outcome.notes.append("collected and emitted families agree")
        return outcome

    system = SecondOrderSystem.from_pde(load_system(cfg))
    if system.n == 1:
        first, second = invariants_E1(system.F(1, 1), system.ctx)
        outcome.results.append({'name': 'I1', 'value': format_output(first, cfg.output_format)})
        outcome.results.append({'name': 'I2', 'value': format_output(second, cfg.output_format)})
        outcome.notes.append('flat' if first.is_zero() and second.is_zero() else 'not flat')
        return outcome
    test = cubic_test(system)
    if not test.is_cubic:
        outcome.results.append({'name': 'cubic', 'value': False,
                                'witness': format_output(test.witness, cfg.output_format)})
        outcome.notes.append('not flat: a right-hand side is not cubic in the first-order jets')
        return outcome
    outcome.results.append({'name': 'cubic', 'value': True})
    for key, value in sorted(test.ghlm.items()):
        if not value.is_zero():
            label = key[0] + ''.join(str(i) for i in key[1:])
            outcome.results.append({'name': label, 'value': format_output(value, cfg.output_format)})
    remaining = [(name, key, eq) for name, fam in collect_families(system).items() for key, eq in fam.items()]
    for name, (js, ks), eq in remaining:
        outcome.results.append({'name': f"{name} {js} {ks}", 'value': format_output(eq, cfg.output_format)})
    outcome.notes.append('flat' if not remaining else f"not flat: {len(remaining)} conditions fail")
    return outcome


def cmd_selftest(cfg: SessionConfig, console=None) -> CommandOutcome:
    settings = copy.deepcopy(load_settings())
    if cfg.inputs.get('quick'):
        settings['selftest'].update(QUICK_GRID)
    progress = None
    if cfg.output_format != 'json':
        def progress(name):
            print_step(console, f"Running {name}")
    results = run_selftest(settings, only=cfg.inputs.get('only'), progress=progress)
    if cfg.inputs.get('report'):
        path = cfg.inputs['report']
        fmt = 'json' if path.endswith('.json') else 'csv' if path.endswith('.csv') else 'text'
        save_report(results, path, fmt)
    outcome = CommandOutcome('ok' if results['valid'] else 'failed', results['checks'])
    outcome.notes.extend(results['warnings'])
    if cfg.output_format != 'json':
        outcome.notes.insert(0, generate_report(results, 'text'))
    return outcome


HANDLERS = {
    'prolong': cmd_prolong,
    'fdb': cmd_fdb,
    'determine': cmd_determine,
    'tangent': cmd_tangent,
    'brackets': cmd_brackets,
    'flat2': cmd_flat2,
}


def run(cfg: SessionConfig, console=None) -> Tuple[int, Dict[str, Any]]:
    """
    Execute one command.

    Returns:
        (exit status, report) with status 0 when everything verified and 1
        when a comparison or verification failed
    """
    start = time.perf_counter()
    if cfg.command == 'selftest':
        outcome = cmd_selftest(cfg, console)
    else:
        outcome = HANDLERS[cfg.command](cfg)
    elapsed = time.perf_counter() - start
    report = {
        'schema_version': load_settings()['json']['schema_version'],
        'command': cfg.command,
        'inputs': {'n': cfg.n, 'm': cfg.m, 'order': cfg.order,
                   **{k: v for k, v in cfg.inputs.items() if v not in (None, False)}},
        'status': outcome.status,
        'results': outcome.results,
        'notes': outcome.notes,
        'timings': {'total_seconds': round(elapsed, 3)},
    }
    logger.debug("%s finished in %.3fs with status %s", cfg.command, elapsed, outcome.status)
    return (0 if outcome.status == 'ok' else 1), report


def render(report: Dict[str, Any], output_format: str) -> str:
    """Text or LaTeX listing of a report; JSON dumps the report itself."""
    if output_format == 'json':
        return json.dumps(report, indent=2, default=str)
    lines = []
    for entry in report['results']:
        if report['command'] == 'selftest':
            continue
        line = f"{entry['name']} = {entry.get('value', '')}".rstrip(' =')
        if 'match' in entry:
            line += "\n  " + ('MATCH' if entry['match'] else 'MISMATCH')
        if 'tangent' in entry:
            line = f"{entry['name']}: {'tangent' if entry['tangent'] else 'NOT tangent'}"
            for d in entry['defects']:
                line += f"\n  defect: {d}"
        if 'collected' in entry:
            line = f"{entry['name']}: {entry['collected']} collected, {entry['emitted']} emitted"
        if 'witness' in entry:
            line += f"\n  witness: {entry['witness']}"
        lines.append(line)
    lines.extend(report['notes'])
    return '\n'.join(lines)


# console helpers -------------------------------------------------------------

def print_header(console):
    """Print CLI header."""
    if console:
        console.print(f"\n[bold cyan]jetsym {__version__}[/bold cyan] "
                      "[dim]exact prolongation and symmetry computations[/dim]\n")
    else:
        print("\n" + "=" * 60)
        print(f"jetsym {__version__}")
        print("=" * 60 + "\n")


def print_step(console, message):
    if console:
        console.print(f"[bold blue]→[/bold blue] {message}")
    else:
        print(f"→ {message}")


def print_success(console, message):
    if console:
        console.print(f"[green]✓[/green] {message}")
    else:
        print(f"✓ {message}")


def print_error(console, message):
    if console:
        console.print(f"[red]✗[/red] {message}", style="red")
    else:
        print(f"✗ {message}", file=sys.stderr)


def print_summary(console, report: Dict[str, Any]):
    """Print a short table with the command, status and timing."""
    rows = [
        ("Command", report['command']),
        ("Status", report['status']),
        ("Results", str(len(report['results']))),
        ("Seconds", f"{report['timings']['total_seconds']:.3f}"),
        ("Timestamp", datetime.now().strftime('%Y-%m-%d %H:%M:%S')),
    ]
    if console:
        table = Table(show_header=False, box=None)
        table.add_column("Property", style="cyan")
        table.add_column("Value", style="white")
        for key, value in rows:
            table.add_row(key, value)
        console.print()
        console.print(table)
    else:
        print()
        for key, value in rows:
            print(f"{key + ':':<12}{value}")


# argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', '-f', choices=FORMATS, default=None,
                        help='Output format (default from config: text)')
    common.add_argument('--output', '-o', help='Write the result to this file instead of stdout')
    common.add_argument('--verbose', '-v', action='store_true', help='Debug logging')

    space = argparse.ArgumentParser(add_help=False)
    space.add_argument('--n', type=int, default=1, help='Number of independent variables')
    space.add_argument('--m', type=int, default=1, help='Number of dependent variables')
    space.add_argument('--order', '--kappa', '-k', dest='order', type=int, default=1,
                       help='Derivative order')
    space.add_argument('--target', help='Comma separated directions, e.g. 1,1,2')
    space.add_argument('--compare', action='store_true', help='Compare with the independent oracle')

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument('--system', help='System file')
    inputs.add_argument('--fields', help='Vector field file')
    inputs.add_argument('--model', help='Bundled model instead of files')

    parser = argparse.ArgumentParser(
        prog='jetsym',
        description='Exact jet-space prolongation, Faa di Bruno formulas, Lie symmetries and flatness',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Scalar Y_6 by the closed formula, checked against the recursion
  jetsym prolong --n 1 --m 1 --kappa 6 --compare

  # Tangency of the generators of a model system
  jetsym tangent --system e5.sys --fields e5.vf

  # Faa di Bruno h_5 against the chain rule
  jetsym fdb --n 1 --m 1 --order 5 --compare

  # Commutator table of the flat model, as JSON
  jetsym brackets --model flat --format json

  # Full self-test with a CSV report
  jetsym selftest --report selftest.csv
        """
    )
    parser.add_argument('--version', action='version', version=f"jetsym {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)

    prolong = sub.add_parser('prolong', parents=[common, space], help='Prolongation coefficients')
    prolong.add_argument('--dep', type=int, default=1, help='Dependent index j of the target jet')
    prolong.add_argument('--method', choices=('closed', 'inductive'), default='closed')
    sub.add_parser('fdb', parents=[common, space], help='Faa di Bruno derivatives of f(g(x))')

    determine = sub.add_parser('determine', parents=[common, inputs], help='Determining equations')
    determine.add_argument('--no-expand', action='store_true',
                           help='Keep each defect whole instead of collecting parametric monomials')
    sub.add_parser('tangent', parents=[common, inputs], help='Tangency of fields to a system')
    sub.add_parser('brackets', parents=[common, inputs], help='Lie bracket table of fields')

    flat2 = sub.add_parser('flat2', parents=[common, inputs], help='Flatness of second order systems')
    flat2.add_argument('--n', type=int, default=2, help='Generic run at this n when no system is given')

    selftest = sub.add_parser('selftest', parents=[common], help='Run every verification')
    selftest.add_argument('--only', action='append', choices=check_names(), help='Run only this check')
    selftest.add_argument('--quick', action='store_true', help='Use small grids')
    selftest.add_argument('--report', help='Save the report (text, json or csv by extension)')
    return parser


def config_from_args(args: argparse.Namespace) -> SessionConfig:
    settings = load_settings()
    inputs = {}
    for key in ('target', 'compare', 'dep', 'method', 'system', 'fields', 'model', 'no_expand',
                'only', 'quick', 'report'):
        if hasattr(args, key):
            inputs[key] = getattr(args, key)
    return SessionConfig(
        command=args.command,
        n=getattr(args, 'n', 1),
        m=getattr(args, 'm', 1),
        order=getattr(args, 'order', 1),
        inputs=inputs,
        output_format=args.format or settings['output_format'],
        verbose=args.verbose,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    console = Console() if RICH_AVAILABLE else None
    verbose = getattr(args, 'verbose', False)
    configure_logging('DEBUG' if verbose else load_settings()['log_level'], use_rich=RICH_AVAILABLE)

    try:
        cfg = config_from_args(args)
        if cfg.inputs.get('model') and cfg.inputs['model'] not in model_names():
            print_error(console, f"Unknown model '{cfg.inputs['model']}'; "
                                 f"available: {', '.join(model_names())}")
            return 2
        chatty = cfg.output_format != 'json' and not args.output
        if chatty:
            print_header(console)
        status, report = run(cfg, console if chatty else None)
        text = render(report, cfg.output_format)
        if args.output:
            output_dir = os.path.dirname(args.output)
            if output_dir and not os.path.exists(output_dir):
                os.makedirs(output_dir)
            with open(args.output, 'w', encoding='utf-8') as f:
                f.write(text + '\n')
        else:
            print(text)
        if chatty:
            if status == 0:
                print_success(console, f"{cfg.command} finished")
            else:
                print_error(console, f"{cfg.command}: verification failed")
            print_summary(console, report)
        return status

    except KeyboardInterrupt:
        print_error(console, "\nOperation cancelled by user")
        return 130
    except (JetsymError, OSError) as e:
        print_error(console, f"{type(e).__name__}: {e}")
        if verbose:
            import traceback
            traceback.print_exc()
        return 2


if __name__ == '__main__':
    sys.exit(main())
