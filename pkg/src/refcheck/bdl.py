"""Reader and writer for the line-oriented block diagram language (``.bdl``).

Example::

    model gains
    # comments run to end of line
    block u Inport
    block g Gain k=2.5
    block y Outport
    wire u.0 -> g.0
    wire g.0 -> y.0

Numbers are decimal literals (``-1.25e-3``) or exact ratios (``1/3``); both
are kept as :class:`fractions.Fraction`. The parser only checks syntax and
parameter shapes: wiring problems are left to :func:`refcheck.model.validate`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction

from refcheck.model import PARAMS, UNARY_OPS, Block, Kind, Model, Wire


class ErrorKind(str, enum.Enum):
    LEX = "Lex"
    SYNTAX = "Syntax"
    UNKNOWN_KIND = "UnknownKind"
    BAD_PARAM = "BadParam"


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1


class ParseError(Exception):
    def __init__(self, span: SourceSpan, message: str, kind: ErrorKind):
        self.span = span
        self.message = message
        self.kind = kind
        super().__init__(f"{span.line}:{span.column}: {kind.value} error: {message}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#.*)
  | (?P<arrow>->)
  | (?P<number>[+-]?\d+(?:/\d+|(?:\.\d+)?(?:[eE][+-]?\d+)?))
  | (?P<signs>[+-]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<eq>=)
  | (?P<dot>\.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    type: str
    text: str
    line: int
    column: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.column, max(len(self.text), 1))


def _tokenize(line: str, lineno: int) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise ParseError(SourceSpan(lineno, pos + 1, 1), f"unexpected character {line[pos]!r}", ErrorKind.LEX)
        if m.lastgroup == "number" and m.end() < len(line) and (line[m.end()].isalnum() or line[m.end()] in "_./"):
            end = m.end()
            while end < len(line) and not line[end].isspace():
                end += 1
            raise ParseError(
                SourceSpan(lineno, pos + 1, end - pos), f"malformed number {line[pos:end]!r}", ErrorKind.LEX
            )
        if m.lastgroup not in ("ws", "comment"):
            tokens.append(Token(m.lastgroup, m.group(), lineno, pos + 1))
        pos = m.end()
    return tokens


def parse_number(text: str) -> Fraction:
    """Exact value of a numeric literal; ``"0.1"`` gives ``Fraction(1, 10)``."""
    return Fraction(text)


class _Line:
    """Cursor over one line's tokens."""

    def __init__(self, tokens: list[Token], lineno: int, end_col: int):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.end_col = end_col

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, type_: str, what: str) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(SourceSpan(self.lineno, self.end_col, 1), f"expected {what}, found end of line", ErrorKind.SYNTAX)
        if tok.type != type_:
            raise ParseError(tok.span, f"expected {what}, found {tok.text!r}", ErrorKind.SYNTAX)
        self.pos += 1
        return tok

    def end(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise ParseError(tok.span, f"unexpected {tok.text!r} at end of line", ErrorKind.SYNTAX)


def _nat(tok: Token) -> int:
    if not tok.text.isdigit():
        raise ParseError(tok.span, f"expected a port number, found {tok.text!r}", ErrorKind.SYNTAX)
    return int(tok.text)


def _number(tok: Token, kind: ErrorKind) -> Fraction:
    try:
        return parse_number(tok.text)
    except ZeroDivisionError:
        raise ParseError(tok.span, f"zero denominator in {tok.text!r}", kind) from None


def _param_value(kind: Kind, name: str, tok: Token):
    bad = ErrorKind.BAD_PARAM
    if kind is Kind.SUM:
        if tok.type != "signs" or len(tok.text) < 2:
            raise ParseError(tok.span, f"signs must be a string of at least two '+'/'-', found {tok.text!r}", bad)
        return tok.text
    if kind is Kind.PRODUCT:
        if tok.type != "number" or not tok.text.isdigit() or int(tok.text) < 2:
            raise ParseError(tok.span, f"arity must be an integer >= 2, found {tok.text!r}", bad)
        return int(tok.text)
    if kind is Kind.UNARY_FN:
        if tok.type != "ident" or tok.text not in UNARY_OPS:
            raise ParseError(tok.span, f"op must be one of {', '.join(UNARY_OPS)}, found {tok.text!r}", bad)
        return tok.text
    if tok.type != "number":
        raise ParseError(tok.span, f"{name} must be a number, found {tok.text!r}", bad)
    return _number(tok, bad)


def _parse_block(cur: _Line) -> Block:
    ident = cur.next("ident", "block id")
    kind_tok = cur.next("ident", "block kind")
    try:
        kind = Kind(kind_tok.text)
    except ValueError:
        raise ParseError(kind_tok.span, f"unknown block kind {kind_tok.text!r}", ErrorKind.UNKNOWN_KIND) from None
    expected = PARAMS[kind]
    params = {}
    while cur.peek() is not None:
        name = cur.next("ident", "parameter name")
        if name.text not in expected:
            raise ParseError(name.span, f"{kind.value} has no parameter {name.text!r}", ErrorKind.BAD_PARAM)
        if name.text in params:
            raise ParseError(name.span, f"parameter {name.text!r} given twice", ErrorKind.BAD_PARAM)
        cur.next("eq", "'='")
        value = cur.peek()
        if value is None:
            raise ParseError(SourceSpan(cur.lineno, cur.end_col, 1), f"missing value for {name.text}", ErrorKind.BAD_PARAM)
        cur.pos += 1
        params[name.text] = _param_value(kind, name.text, value)
    missing = [p for p in expected if p not in params]
    if missing:
        raise ParseError(
            kind_tok.span, f"{kind.value} block {ident.text!r} is missing {', '.join(p + '=' for p in missing)}", ErrorKind.BAD_PARAM
        )
    return Block(ident.text, kind, tuple(sorted(params.items())))


def _parse_wire(cur: _Line) -> Wire:
    src = cur.next("ident", "source block id")
    cur.next("dot", "'.'")
    sport = _nat(cur.next("number", "source port"))
    cur.next("arrow", "'->'")
    dst = cur.next("ident", "destination block id")
    cur.next("dot", "'.'")
    dport = _nat(cur.next("number", "destination port"))
    cur.end()
    return Wire((src.text, sport), (dst.text, dport))


def parse_bdl(text: str) -> Model:
    """Parse BDL source into a :class:`Model`; raises :class:`ParseError` at the first problem."""
    if text.startswith("\ufeff"):
        text = text[1:]
    name = None
    blocks: list[Block] = []
    wires: list[Wire] = []
    sample_time = None
    lineno = 0
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        cur = _Line(tokens, lineno, len(line) + 1)
        head = cur.next("ident", "a keyword")
        if name is None:
            if head.text != "model":
                raise ParseError(head.span, f"file must start with 'model NAME', found {head.text!r}", ErrorKind.SYNTAX)
            name = cur.next("ident", "model name").text
            cur.end()
        elif head.text == "block":
            blocks.append(_parse_block(cur))
        elif head.text == "wire":
            wires.append(_parse_wire(cur))
        elif head.text == "sample_time":
            if sample_time is not None:
                raise ParseError(head.span, "sample_time given twice", ErrorKind.SYNTAX)
            tok = cur.next("number", "sample time")
            sample_time = _number(tok, ErrorKind.BAD_PARAM)
            if sample_time <= 0:
                raise ParseError(tok.span, "sample_time must be positive", ErrorKind.BAD_PARAM)
            cur.end()
        elif head.text == "model":
            raise ParseError(head.span, "only one 'model' header is allowed", ErrorKind.SYNTAX)
        else:
            raise ParseError(head.span, f"expected 'block', 'wire' or 'sample_time', found {head.text!r}", ErrorKind.SYNTAX)
    if name is None:
        raise ParseError(SourceSpan(max(lineno, 1), 1, 1), "missing 'model NAME' header", ErrorKind.SYNTAX)
    return Model(name, tuple(blocks), tuple(wires), Fraction(1) if sample_time is None else sample_time)


def format_number(q: Fraction) -> str:
    """Shortest exact literal for ``q``: plain decimal when finite, else ``p/q``."""
    q = Fraction(q)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    if places == 0:
        return str(q.numerator)
    scaled = q * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _format_param(value) -> str:
    if isinstance(value, Fraction):
        return format_number(value)
    return str(value)


def serialize_bdl(model: Model) -> str:
    """Canonical text: header, optional sample_time, blocks by id, wires by destination."""
    lines = [f"model {model.name}"]
    if model.sample_time != 1:
        lines.append(f"sample_time {format_number(model.sample_time)}")
    for block in sorted(model.blocks, key=lambda b: b.id):
        params = "".join(f" {k}={_format_param(v)}" for k, v in block.params)
        lines.append(f"block {block.id} {block.kind.value}{params}")
    for wire in sorted(model.wires, key=lambda w: (w.dst, w.src)):
        lines.append(f"wire {wire.src[0]}.{wire.src[1]} -> {wire.dst[0]}.{wire.dst[1]}")
    return "\n".join(lines) + "\n"


__all__ = ["ErrorKind", "ParseError", "SourceSpan", "format_number", "parse_bdl", "serialize_bdl"]
