"""Line-oriented model-definition files and their expression grammar.

Sections: ``[params]`` (name = positive | numeric default), ``[axes]``
(name = kind[, group]), ``[phase]``, ``[observable]`` and optional
``[expect]``.  Expressions are built from parameters, axis names, ``i``,
``pi`` and ``T`` with ``+ - * / ^`` and parentheses; a recursive-descent
parser reports precise error positions.  Only constructs the engine can
reduce are expressible, so a file that parses and validates is runnable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .engine import GaugeGroup, ModelSpec, apply_gauge, _build_phase
from .errors import DegenerateCase, ParseError, UnsupportedStructure, ValidationError
from .params import Param, ParamPoly
from .symbols import Axis, AxisPoly, TPoly

AXIS_KINDS = ("position", "momentum", "field")


# ---------------------------------------------------------------------------
# Expression tokenizer / parser (AST of nested tuples)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*|\.\d+|\d+)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int


def tokenize(text: str, line: int) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ParseError(f"unexpected character {rest[0]!r}", line, pos + 1)
        pos = m.end()
        for kind in ("number", "ident", "op"):
            s = m.group(kind)
            if s is not None:
                out.append(Token(kind, s, m.start(kind) + 1))
                break
    return out


class _Parser:
    def __init__(self, tokens: list[Token], line: int):
        self.tokens = tokens
        self.line = line
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression", self.line,
                             self.tokens[-1].column if self.tokens else 1)
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        tok = self.next()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"expected {op!r}, found {tok.text!r}", self.line, tok.column)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"trailing input {tok.text!r}", self.line, tok.column)
        return node

    def expr(self):
        node = self.term()
        while (tok := self.peek()) and tok.kind == "op" and tok.text in "+-":
            self.next()
            rhs = self.term()
            node = (tok.text, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while (tok := self.peek()) and tok.kind == "op" and tok.text in "*/":
            self.next()
            rhs = self.unary()
            node = (tok.text, node, rhs)
        return node

    def unary(self):
        tok = self.peek()
        if tok and tok.kind == "op" and tok.text == "-":
            self.next()
            return ("neg", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok and tok.kind == "op" and tok.text == "^":
            self.next()
            exponent = self.unary()
            return ("^", base, exponent)
        return base

    def atom(self):
        tok = self.next()
        if tok.kind == "number":
            return ("num", tok.text)
        if tok.kind == "ident":
            return ("sym", tok.text)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected token {tok.text!r}", self.line, tok.column)


def parse_expression(text: str, line: int = 1):
    tokens = tokenize(text, line)
    if not tokens:
        raise ParseError("empty expression", line, 1)
    return _Parser(tokens, line).parse()


def render_ast(node) -> str:
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "sym":
        return node[1]
    if kind == "neg":
        return f"-{_wrap(node[1], above=('+', '-', 'neg'))}"
    if kind in ("+", "-"):
        return f"{render_ast(node[1])} {kind} {_wrap(node[2], above=('+', '-') if kind == '-' else ())}"
    if kind in ("*", "/"):
        lhs = _wrap(node[1], above=("+", "-", "neg"))
        rhs = _wrap(node[2], above=("+", "-", "neg", "*", "/"))
        return f"{lhs}{kind}{rhs}"
    if kind == "^":
        return f"{_wrap(node[1], above=('+', '-', 'neg', '*', '/', '^'))}^{_wrap(node[2], above=('+', '-', '*', '/', '^'))}"
    raise ValueError(kind)


def _wrap(node, above: tuple[str, ...]) -> str:
    s = render_ast(node)
    if node[0] in above:
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# Lowering into the axis-polynomial algebra
# ---------------------------------------------------------------------------


def lower_ast(node, axis_names: set[str], param_names: set[str], line: int = 1) -> AxisPoly:
    kind = node[0]
    if kind == "num":
        return AxisPoly.number(float(node[1]))
    if kind == "sym":
        name = node[1]
        if name == "i":
            return AxisPoly.number(1j)
        if name == "T":
            return AxisPoly({(): TPoly.of(ParamPoly.one(), 1)})
        if name in axis_names:
            return AxisPoly.symbol(name)
        if name in param_names or name == "pi":
            return AxisPoly.constant(ParamPoly.var(name))
        raise ParseError(f"unknown symbol {name!r}", line)
    if kind == "neg":
        return -lower_ast(node[1], axis_names, param_names, line)
    if kind == "+":
        return lower_ast(node[1], axis_names, param_names, line) + lower_ast(
            node[2], axis_names, param_names, line
        )
    if kind == "-":
        return lower_ast(node[1], axis_names, param_names, line) - lower_ast(
            node[2], axis_names, param_names, line
        )
    if kind == "*":
        return lower_ast(node[1], axis_names, param_names, line) * lower_ast(
            node[2], axis_names, param_names, line
        )
    if kind == "/":
        num = lower_ast(node[1], axis_names, param_names, line)
        den = lower_ast(node[2], axis_names, param_names, line)
        return num * _invert(den, line)
    if kind == "^":
        base = lower_ast(node[1], axis_names, param_names, line)
        exp = _int_exponent(node[2], line)
        if exp >= 0:
            return base**exp
        return _invert(base**(-exp), line)
    raise ParseError(f"unsupported node {kind}", line)


def _int_exponent(node, line: int) -> int:
    if node[0] == "num" and "." not in node[1]:
        return int(node[1])
    if node[0] == "neg":
        return -_int_exponent(node[1], line)
    raise ParseError("exponent must be an integer literal", line)


def _invert(p: AxisPoly, line: int) -> AxisPoly:
    if p.symbols():
        raise ParseError("division by an axis-dependent expression", line)
    tp = p.constant_part()
    if len(tp.parts) != 1:
        raise ParseError("division by a non-monomial expression", line)
    ((tpow, poly),) = tp.parts.items()
    try:
        inv = poly.inverse()
    except UnsupportedStructure as exc:
        raise ParseError(f"cannot invert {poly.render()}: {exc}", line) from exc
    return AxisPoly({(): TPoly.of(inv, -tpow)})


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


@dataclass
class ParsedModel:
    name: str
    params: list[tuple[str, float | None]] = field(default_factory=list)
    axes: list[tuple[str, str, str | None]] = field(default_factory=list)
    phase_ast: object = None
    observable_ast: object = None
    expect_ast: object = None

    def param_names(self) -> set[str]:
        return {n for n, _ in self.params}

    def axis_names(self) -> set[str]:
        return {n for n, _, _ in self.axes}


def parse_model_text(text: str, name: str = "custom") -> ParsedModel:
    model = ParsedModel(name)
    section = None
    saw_any = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        saw_any = True
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("unterminated section header", lineno, len(line))
            section = line[1:-1].strip().lower()
            if section not in ("params", "axes", "phase", "observable", "expect"):
                raise ParseError(f"unknown section [{section}]", lineno, 2)
            continue
        if section is None:
            raise ParseError("content before any section header", lineno, 1)
        if section == "params":
            name_, _, value = line.partition("=")
            pname, pval = name_.strip(), value.strip()
            if not pname or not pval:
                raise ParseError("expected 'name = positive|value'", lineno, 1)
            if pval == "positive":
                model.params.append((pname, None))
            else:
                try:
                    model.params.append((pname, float(pval)))
                except ValueError:
                    raise ParseError(f"bad parameter value {pval!r}", lineno,
                                     line.index(pval) + 1) from None
        elif section == "axes":
            name_, _, rhs = line.partition("=")
            aname = name_.strip()
            fields = [f.strip() for f in rhs.split(",")]
            if not aname or not fields or not fields[0]:
                raise ParseError("expected 'name = kind[, group]'", lineno, 1)
            kind = fields[0]
            if kind not in AXIS_KINDS:
                raise ParseError(f"unknown axis kind {kind!r}", lineno,
                                 line.index(kind) + 1)
            group = fields[1] if len(fields) > 1 and fields[1] else None
            model.axes.append((aname, kind, group))
        elif section == "phase":
            model.phase_ast = _merge_expr(model.phase_ast, line, lineno)
        elif section == "observable":
            model.observable_ast = _merge_expr(model.observable_ast, line, lineno)
        elif section == "expect":
            model.expect_ast = _merge_expr(model.expect_ast, line, lineno)
    if not saw_any:
        raise ParseError("empty model file", 1, 1)
    if model.phase_ast is None:
        raise ParseError("missing [phase] section", 1, 1)
    if model.observable_ast is None:
        raise ParseError("missing [observable] section", 1, 1)
    if not model.axes:
        raise ParseError("missing [axes] section", 1, 1)
    return model


def _merge_expr(current, line: str, lineno: int):
    node = parse_expression(line, lineno)
    return node if current is None else ("+", current, node)


def render_model(model: ParsedModel) -> str:
    out = ["[params]"]
    for name, value in model.params:
        out.append(f"{name} = {'positive' if value is None else value}")
    out.append("[axes]")
    for name, kind, group in model.axes:
        out.append(f"{name} = {kind}" + (f", {group}" if group else ""))
    out.append("[phase]")
    out.append(render_ast(model.phase_ast))
    out.append("[observable]")
    out.append(render_ast(model.observable_ast))
    if model.expect_ast is not None:
        out.append("[expect]")
        out.append(render_ast(model.expect_ast))
    return "\n".join(out) + "\n"


def to_model_spec(parsed: ParsedModel) -> ModelSpec:
    """Lower a parsed file into a runnable spec, validating reducibility."""
    params = tuple(Param(n, default=v) for n, v in parsed.params)
    pnames = parsed.param_names()
    anames = parsed.axis_names()
    axes = []
    group_members: dict[str, list[str]] = {}
    for name, kind, group in parsed.axes:
        gid = group or f"g_{name}"
        axes.append(Axis(name, kind, gid))
        group_members.setdefault(gid, []).append(name)
    groups = tuple(
        GaugeGroup(gid, tuple(members), f"z{i + 1}")
        for i, (gid, members) in enumerate(group_members.items())
    )
    phase = lower_ast(parsed.phase_ast, anames, pnames)
    observable = lower_ast(parsed.observable_ast, anames, pnames)
    expected = {}
    if parsed.expect_ast is not None:
        exp_poly = lower_ast(parsed.expect_ast, set(), pnames)
        expected["observable"] = exp_poly.constant_part().plain()
    spec = ModelSpec(
        name=parsed.name,
        description="custom model",
        params=params,
        axes=tuple(axes),
        groups=groups,
        hamiltonian=phase,
        observables={"observable": observable},
        expected=expected,
    )
    try:
        apply_gauge(spec)
        _build_phase(spec)
    except (DegenerateCase, UnsupportedStructure) as exc:
        raise ValidationError(str(exc)) from exc
    return spec


def parse_model_file(path, name: str | None = None) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    import os

    default_name = os.path.splitext(os.path.basename(str(path)))[0]
    parsed = parse_model_text(text, name or default_name)
    return to_model_spec(parsed)
