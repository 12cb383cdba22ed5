"""
Parser for the jetsym expression language and its input files.

Expressions:

    expr   := ['+' | '-'] term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*        division by constants only
    factor := atom ['^' natural]
    atom   := number | '(' expr ')' | xname | param | yname ['[' index-list ']']
            | Name ['<' index-list '>'] ['_' '{' coord ['^' k] (',' coord ['^' k])* '}']
            | 'D' coord '(' expr ')'

System files hold header lines (n = 2, m = 1, order = 2, x: ..., y: ...,
params: ..., parametric: ..., function F(...)) followed by one graphed
equation `jet = expr` per line. Field files hold lines
`Name = { coord: expr, ... }`. '#' starts a comment everywhere.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .exceptions import (ExpressionSyntaxError, JetOrderError, JetsymError, NegativePowerError,
                         UnknownSymbolError, ZeroDenominatorError)
from .jets import JetContext, PDESystem
from .kernel import (Add, BaseVar, Coordinate, DerivSym, Expr, FuncSym, JetVar, Mul, Neg, Num, Partial,
                     Poly, Pow, Sym, normalize)

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9]*)|(.))")


@dataclass
class Token:
    kind: str  # 'num', 'name', 'op' or 'end'
    text: str
    line: int
    column: int


def tokenize(src: str, line: int = 1) -> List[Token]:
    """Split one line of source into tokens; comments are dropped."""
    tokens = []
    src = src.split('#', 1)[0]
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == '':
            break
        match = _TOKEN.match(src, pos)
        number, name, op = match.groups()
        column = match.start(1 if number else 2 if name else 3) + 1
        if number:
            tokens.append(Token('num', number, line, column))
        elif name:
            tokens.append(Token('name', name, line, column))
        else:
            if op not in '+-*/^()[]{}<>,_=:':
                raise ExpressionSyntaxError(f"unexpected character '{op}'", line, column)
            tokens.append(Token('op', op, line, column))
        pos = match.end()
    tokens.append(Token('end', '', line, len(src) + 1))
    return tokens


@dataclass
class Scope:
    """
    Names an expression may use: coordinates of a jet space, free
    parameters and declared formal functions.
    """

    ctx: JetContext
    params: Dict[str, BaseVar] = field(default_factory=dict)
    functions: Dict[Tuple[str, Tuple[int, ...]], FuncSym] = field(default_factory=dict)

    @classmethod
    def for_generic_field(cls, ctx: JetContext) -> 'Scope':
        """Scope that also knows the formal coefficients X, Y of a field."""
        from .prolongation import generic_functions
        scope = cls(ctx)
        xs, ys = generic_functions(ctx)
        for f in xs + ys:
            scope.declare(f)
        return scope

    def declare(self, func: FuncSym) -> None:
        self.functions[func.name, func.component] = func

    def add_params(self, names: Sequence[str]) -> None:
        for name in names:
            self.params[name] = BaseVar(name)

    def function_names(self) -> set:
        return {name for name, _ in self.functions}

    def coordinate(self, name: str, idx: Sequence[int] = ()) -> Optional[Coordinate]:
        if name in self.ctx.xnames and not idx:
            return BaseVar(name)
        if name in self.ctx.ynames:
            return self.ctx.y(self.ctx.ynames.index(name) + 1, idx)
        if name in self.params and not idx:
            return self.params[name]
        return None


class ExpressionParser:
    """Recursive descent parser over the tokens of one line."""

    def __init__(self, tokens: List[Token], scope: Scope):
        self.tokens = tokens
        self.pos = 0
        self.scope = scope

    # token helpers --------------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != 'end':
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.current.kind == 'op' and self.current.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            tok = self.current
            found = tok.text or 'end of line'
            raise ExpressionSyntaxError(f"expected '{text}', found '{found}'", tok.line, tok.column)
        return self.advance()

    def error(self, message: str, tok: Optional[Token] = None) -> ExpressionSyntaxError:
        tok = tok or self.current
        return ExpressionSyntaxError(message, tok.line, tok.column)

    def natural(self) -> int:
        tok = self.current
        if tok.kind != 'num':
            raise self.error("expected a natural number")
        self.advance()
        return int(tok.text)

    def index_list(self, close: str) -> Tuple[int, ...]:
        values = [self.natural()]
        while self.at(','):
            self.advance()
            values.append(self.natural())
        self.expect(close)
        return tuple(values)

    # grammar --------------------------------------------------------------

    def expr(self) -> Expr:
        sign = None
        if self.at('+') or self.at('-'):
            sign = self.advance().text
        first = self.term()
        args = [Neg(first) if sign == '-' else first]
        while self.at('+') or self.at('-'):
            op = self.advance().text
            t = self.term()
            args.append(Neg(t) if op == '-' else t)
        return args[0] if len(args) == 1 else Add(*args)

    def term(self) -> Expr:
        args = [self.factor()]
        while self.at('*') or self.at('/'):
            op = self.advance()
            rhs = self.factor()
            if op.text == '*':
                args.append(rhs)
                continue
            value = normalize(rhs)
            if not value.is_constant():
                raise self.error("division is only allowed by a constant", op)
            if value.is_zero():
                raise ZeroDenominatorError(f"line {op.line}, column {op.column}: division by zero")
            args.append(Num(Fraction(1) / Fraction(value.constant_term())))
        return args[0] if len(args) == 1 else Mul(*args)

    def factor(self) -> Expr:
        base = self.atom()
        if self.at('^'):
            caret = self.advance()
            if self.at('-'):
                raise NegativePowerError(f"line {caret.line}, column {caret.column}: negative exponent")
            return Pow(base, self.natural())
        return base

    def coordinate_ref(self) -> Coordinate:
        """A coordinate name, with an index list for jets."""
        tok = self.current
        if tok.kind != 'name':
            raise self.error("expected a coordinate")
        self.advance()
        idx: Tuple[int, ...] = ()
        if self.at('['):
            self.advance()
            idx = self.index_list(']')
        try:
            coord = self.scope.coordinate(tok.text, idx)
        except JetOrderError as e:
            raise JetOrderError(f"line {tok.line}, column {tok.column}: {e}")
        if coord is None:
            raise UnknownSymbolError(tok.text, tok.line, tok.column)
        return coord

    def function_atom(self, tok: Token) -> Expr:
        component: Tuple[int, ...] = ()
        if self.at('<'):
            self.advance()
            component = self.index_list('>')
        func = self.scope.functions.get((tok.text, component))
        if func is None:
            raise UnknownSymbolError(f"{tok.text}<{','.join(map(str, component))}>" if component else tok.text,
                                     tok.line, tok.column)
        order = [0] * len(func.dependency)
        if self.at('_'):
            self.advance()
            self.expect('{')
            while True:
                at = self.current
                coord = self.coordinate_ref()
                k = 1
                if self.at('^'):
                    self.advance()
                    k = self.natural()
                pos = func.position(coord)
                if pos is None:
                    raise JetsymError(f"line {at.line}, column {at.column}: {func} does not depend on {coord}")
                order[pos] += k
                if self.at(','):
                    self.advance()
                    continue
                self.expect('}')
                break
        return Sym(DerivSym(func, order))

    def atom(self) -> Expr:
        tok = self.current
        if tok.kind == 'num':
            self.advance()
            return Num(int(tok.text))
        if self.at('('):
            self.advance()
            inner = self.expr()
            self.expect(')')
            return inner
        if tok.kind != 'name':
            raise self.error(f"unexpected '{tok.text or 'end of line'}'")
        name = tok.text
        scope = self.scope
        if name in scope.params or name in scope.ctx.xnames or name in scope.ctx.ynames:
            return Sym(self.coordinate_ref())
        if name in scope.function_names():
            self.advance()
            return self.function_atom(tok)
        if name.startswith('D') and len(name) > 1 and scope.coordinate(name[1:]) is not None:
            self.advance()
            # 'Dy[1](...)' differentiates along a jet coordinate
            idx: Tuple[int, ...] = ()
            if self.at('['):
                self.advance()
                idx = self.index_list(']')
            coord = scope.coordinate(name[1:], idx)
            self.expect('(')
            inner = self.expr()
            self.expect(')')
            return Partial(inner, coord)
        raise UnknownSymbolError(name, tok.line, tok.column)

    def finish(self) -> None:
        if self.current.kind != 'end':
            raise self.error(f"unexpected '{self.current.text}'")


def parse_expression(src: str, ctx_or_scope, line: int = 1) -> Poly:
    """
    Parse and normalize an expression.

    Args:
        src: Expression text
        ctx_or_scope: JetContext or Scope naming the available symbols
        line: Line number used in error messages

    Returns:
        Normalized polynomial

    Raises:
        ExpressionSyntaxError: Malformed input, with line and column
        UnknownSymbolError: Undeclared name
        JetOrderError: Jet index out of range
    """
    scope = ctx_or_scope if isinstance(ctx_or_scope, Scope) else Scope(ctx_or_scope)
    parser = ExpressionParser(tokenize(src, line), scope)
    tree = parser.expr()
    parser.finish()
    return normalize(tree)


# files ---------------------------------------------------------------------

_HEADER = re.compile(r"^\s*(n|m|order)\s*=\s*(\d+)\s*$")
_LIST = re.compile(r"^\s*(x|y|params|parametric)\s*:\s*(.*)$")
_FUNCTION = re.compile(r"^\s*function\s+([A-Za-z][A-Za-z0-9]*)\s*(?:<([\d,\s]+)>)?\s*\((.*)\)\s*$")


def _split_names(text: str) -> List[str]:
    return [part.strip() for part in text.split(',') if part.strip()]


def _split_top_level(text: str) -> List[str]:
    """Split on commas that are not inside brackets."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in '([{<':
            depth += 1
        elif ch in ')]}>':
            depth -= 1
        elif ch == ',' and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return [p.strip() for p in parts if p.strip()]


class _HeaderState:
    """Collects header lines until the first body line fixes the jet space."""

    def __init__(self, ctx: Optional[JetContext] = None, scope: Optional[Scope] = None):
        self.values = {'n': None, 'm': 1, 'order': 1}
        self.xnames: Tuple[str, ...] = ()
        self.ynames: Tuple[str, ...] = ()
        self.params: List[str] = []
        self.parametric_src: List[Tuple[str, int]] = []
        self.function_src: List[Tuple[str, Optional[str], str, int]] = []
        self.scope = scope
        if scope is not None:
            ctx = scope.ctx
        self.ctx = ctx

    def feed(self, text: str, lineno: int) -> bool:
        """Consume a header line; False when the line belongs to the body."""
        if m := _HEADER.match(text):
            if self.scope is not None:
                raise ExpressionSyntaxError("header lines must come first", lineno, 1)
            self.values[m.group(1)] = int(m.group(2))
            return True
        if m := _LIST.match(text):
            key, rest = m.group(1), m.group(2)
            if key == 'parametric':
                self.parametric_src.append((rest, lineno))
                return True
            if self.scope is not None and key != 'params':
                raise ExpressionSyntaxError("header lines must come first", lineno, 1)
            if key == 'x':
                self.xnames = tuple(_split_names(rest))
            elif key == 'y':
                self.ynames = tuple(_split_names(rest))
            else:
                self.params.extend(_split_names(rest))
                if self.scope is not None:
                    self.scope.add_params(_split_names(rest))
            return True
        if m := _FUNCTION.match(text):
            self.function_src.append((m.group(1), m.group(2), m.group(3), lineno))
            if self.scope is not None:
                self._declare(*self.function_src[-1])
            return True
        return False

    def _declare(self, name: str, comps: Optional[str], deps: str, lineno: int) -> None:
        component = tuple(int(c) for c in _split_names(comps)) if comps else ()
        parser = ExpressionParser(tokenize(deps, lineno), self.scope)
        coords = []
        if not parser.at(')') and parser.current.kind != 'end':
            coords.append(parser.coordinate_ref())
            while parser.at(','):
                parser.advance()
                coords.append(parser.coordinate_ref())
        parser.finish()
        self.scope.declare(FuncSym(name, component, coords))

    def build(self) -> Scope:
        if self.scope is not None:
            return self.scope
        if self.ctx is None:
            n = self.values['n']
            if n is None:
                n = len(self.xnames) or None
            if n is None:
                raise ExpressionSyntaxError("missing header line 'n = ...'", 1, 1)
            m = self.values['m'] if not self.ynames else len(self.ynames)
            self.ctx = JetContext(n, m, self.values['order'], self.xnames, self.ynames)
        self.scope = Scope(self.ctx)
        self.scope.add_params(self.params)
        for item in self.function_src:
            self._declare(*item)
        return self.scope

    def parametric(self) -> List[JetVar]:
        jets = []
        for src, lineno in self.parametric_src:
            for piece in _split_top_level(src):
                parser = ExpressionParser(tokenize(piece, lineno), self.scope)
                coord = parser.coordinate_ref()
                parser.finish()
                if not isinstance(coord, JetVar):
                    raise ExpressionSyntaxError(f"'{piece}' is not a jet", lineno, 1)
                jets.append(coord)
        return jets


def _body_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split('#', 1)[0].strip()
        if stripped:
            yield lineno, stripped


def parse_system(text: str, ctx: Optional[JetContext] = None) -> PDESystem:
    """
    Parse a system file.

    Args:
        text: File content
        ctx: Jet space to use instead of the header lines

    Returns:
        PDESystem with the declared parametric jets, skeleton and functions
    """
    state = _HeaderState(ctx)
    skeleton: Dict[JetVar, Poly] = {}
    scope = None
    for lineno, line in _body_lines(text):
        if scope is None and state.feed(line, lineno):
            continue
        if scope is None:
            scope = state.build()
        if '=' not in line:
            raise ExpressionSyntaxError("expected 'jet = expression'", lineno, 1)
        lhs, rhs = line.split('=', 1)
        parser = ExpressionParser(tokenize(lhs, lineno), scope)
        jet = parser.coordinate_ref()
        parser.finish()
        if not isinstance(jet, JetVar) or jet.order == 0:
            raise ExpressionSyntaxError(f"left-hand side '{lhs.strip()}' must be a jet of order >= 1", lineno, 1)
        if jet in skeleton:
            raise ExpressionSyntaxError(f"{jet} is defined twice", lineno, 1)
        column = len(lhs) + 2
        try:
            skeleton[jet] = parse_expression(rhs, scope, lineno)
        except ExpressionSyntaxError as e:
            raise ExpressionSyntaxError(str(e).split(': ', 1)[-1], lineno, e.column + column - 1)
    if scope is None:
        scope = state.build()
    functions = {str(f): f for f in scope.functions.values()}
    system = PDESystem(scope.ctx, frozenset(state.parametric()), skeleton, functions)
    logger.debug("parsed system with %d equations, %d parametric jets",
                 len(skeleton), len(system.parametric))
    return system


def parse_fields(text: str, ctx: Optional[JetContext] = None, scope: Optional[Scope] = None):
    """
    Parse a vector-field file.

    Returns:
        List of VectorField, in file order, each carrying its name
    """
    from .prolongation import VectorField

    state = _HeaderState(ctx, scope)
    fields = []
    body_scope = None
    for lineno, line in _body_lines(text):
        if body_scope is None and state.feed(line, lineno):
            continue
        if body_scope is None:
            body_scope = state.build()
        match = re.match(r"^([A-Za-z][A-Za-z0-9']*)\s*=\s*\{(.*)\}\s*$", line)
        if not match:
            raise ExpressionSyntaxError("expected 'Name = { coord: expr, ... }'", lineno, 1)
        name, body = match.group(1), match.group(2)
        sctx = body_scope.ctx
        xs = {x: Poly() for x in sctx.xs()}
        ys = {y: Poly() for y in sctx.ys()}
        for piece in _split_top_level(body):
            if ':' not in piece:
                raise ExpressionSyntaxError(f"expected 'coord: expr' in '{piece}'", lineno, 1)
            coord_src, expr_src = piece.split(':', 1)
            parser = ExpressionParser(tokenize(coord_src, lineno), body_scope)
            coord = parser.coordinate_ref()
            parser.finish()
            value = parse_expression(expr_src, body_scope, lineno)
            if coord in xs:
                xs[coord] = value
            elif coord in ys:
                ys[coord] = value
            else:
                raise ExpressionSyntaxError(f"'{coord}' is not a base coordinate", lineno, 1)
        fields.append(VectorField(sctx, tuple(xs.values()), tuple(ys.values()), name=name))
    logger.debug("parsed %d vector fields", len(fields))
    return fields


def read_text(path: str, encoding: str = 'utf-8') -> str:
    """
    Read an input file.

    Raises:
        FileNotFoundError: With the offending path
    """
    try:
        with open(path, 'r', encoding=encoding) as f:
            return f.read()
    except FileNotFoundError:
        raise FileNotFoundError(f"input file not found: {path}")
