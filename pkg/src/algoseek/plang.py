"""Lexer, parser, and AST for the pseudo-code language.

A program is a list of functions. Statement bodies mix control-flow keywords
with two kinds of opaque expressions: math text wrapped in ``$...$`` and
natural-language text wrapped in ``@...@``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import DataError

KEYWORDS = {
    "if", "elseif", "else", "while", "for", "for each", "to", "downto",
    "repeat", "until", "and", "or", "not", "return",
}

PUNCT = set("{}(),")


class UnbalancedDelimiter(DataError):
    def __init__(self, line: int):
        super().__init__(f"line {line}: unbalanced '$' or '@' delimiter")
        self.line = line


class PSyntaxError(DataError):
    def __init__(self, line: int, expected: str, found: str):
        super().__init__(f"line {line}: expected {expected}, found {found!r}")
        self.line = line
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class PToken:
    kind: str  # keyword | name | math-delim | nl-delim | punct | raw-text
    text: str
    line: int
    col: int


# --- AST ---------------------------------------------------------------

@dataclass(frozen=True)
class MathExpr:
    raw: str


@dataclass(frozen=True)
class NlExpr:
    raw: str


PExpr = Union[MathExpr, NlExpr]


@dataclass(frozen=True)
class TestLeaf:
    expr: PExpr


@dataclass(frozen=True)
class NotTest:
    operand: "PTest"


@dataclass(frozen=True)
class AndTest:
    left: "PTest"
    right: "PTest"


@dataclass(frozen=True)
class OrTest:
    left: "PTest"
    right: "PTest"


PTest = Union[TestLeaf, NotTest, AndTest, OrTest]


@dataclass(frozen=True)
class ExprStmt:
    expr: PExpr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CallStmt:
    name: str
    args: tuple  # of str (bare names) or PExpr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ReturnStmt:
    value: Optional[Union[PExpr, CallStmt]] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IfStmt:
    test: PTest
    then: tuple
    elifs: tuple = ()  # of (PTest, tuple-of-stmts)
    orelse: Optional[tuple] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class WhileStmt:
    test: PTest
    body: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ForStmt:
    header: PExpr
    bound: Optional[PExpr] = None
    direction: str = "none"  # none | to | downto
    each: bool = False
    body: tuple = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RepeatStmt:
    body: tuple
    until: PTest = None
    line: int = field(default=0, compare=False)


PStmt = Union[ExprStmt, CallStmt, ReturnStmt, IfStmt, WhileStmt, ForStmt, RepeatStmt]


@dataclass(frozen=True)
class PFunction:
    name: str
    params: tuple  # of str or PExpr
    body: tuple


@dataclass(frozen=True)
class PProgram:
    functions: tuple


# --- Lexer -------------------------------------------------------------

def tokenize(source: str) -> list[PToken]:
    tokens: list[PToken] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(ch):
        nonlocal line, col
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1

    while i < n:
        ch = source[i]
        if ch.isspace():
            advance(ch)
            i += 1
            continue
        if ch in "$@":
            kind = "math-delim" if ch == "$" else "nl-delim"
            other = "@" if ch == "$" else "$"
            open_line, open_col = line, col
            tokens.append(PToken(kind, ch, line, col))
            advance(ch)
            i += 1
            start = i
            raw_line, raw_col = line, col
            while i < n and source[i] != ch:
                if source[i] == other:
                    raise UnbalancedDelimiter(line)
                advance(source[i])
                i += 1
            if i >= n:
                raise UnbalancedDelimiter(open_line)
            tokens.append(PToken("raw-text", source[start:i], raw_line, raw_col))
            tokens.append(PToken(kind, ch, line, col))
            advance(ch)
            i += 1
            continue
        if ch in PUNCT:
            tokens.append(PToken("punct", ch, line, col))
            advance(ch)
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            start = i
            word_line, word_col = line, col
            while i < n and (source[i].isalnum() or source[i] == "_"):
                advance(source[i])
                i += 1
            word = source[start:i]
            if word == "for":
                # "for each" lexes as one two-word keyword
                j = i
                while j < n and source[j] in " \t":
                    j += 1
                if source[j:j + 4] == "each" and (
                    j + 4 >= n or not (source[j + 4].isalnum() or source[j + 4] == "_")
                ):
                    while i < j + 4:
                        advance(source[i])
                        i += 1
                    tokens.append(PToken("keyword", "for each", word_line, word_col))
                    continue
            kind = "keyword" if word in KEYWORDS else "name"
            tokens.append(PToken(kind, word, word_line, word_col))
            continue
        # any other character: emit as punct so the parser reports it
        tokens.append(PToken("punct", ch, line, col))
        advance(ch)
        i += 1
    return tokens


# --- Parser ------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[PToken]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset=0) -> Optional[PToken]:
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else None

    def next(self) -> Optional[PToken]:
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def error(self, expected: str):
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise PSyntaxError(last.line if last else 1, expected, "<eof>")
        raise PSyntaxError(tok.line, expected, tok.text)

    def expect(self, kind: str, text: str = None) -> PToken:
        tok = self.peek()
        if tok is None or tok.kind != kind or (text is not None and tok.text != text):
            self.error(text if text is not None else kind)
        return self.next()

    def at(self, kind: str, text: str = None) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind and (text is None or tok.text == text)

    def program(self) -> PProgram:
        functions = []
        while self.peek() is not None:
            functions.append(self.function())
        if not functions:
            self.error("function definition")
        names = [f.name for f in functions]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise PSyntaxError(1, "unique function names", dup)
        return PProgram(tuple(functions))

    def function(self) -> PFunction:
        name = self.expect("name").text
        params = self.parameters()
        body = self.suite()
        return PFunction(name, params, body)

    def parameters(self) -> tuple:
        self.expect("punct", "(")
        params = []
        if not self.at("punct", ")"):
            params.append(self.para())
            while self.at("punct", ","):
                self.next()
                params.append(self.para())
        self.expect("punct", ")")
        return tuple(params)

    def para(self):
        if self.at("name"):
            return self.next().text
        if self.at("math-delim") or self.at("nl-delim"):
            return self.expr()
        self.error("parameter")

    def expr(self) -> PExpr:
        tok = self.peek()
        if tok is None or tok.kind not in ("math-delim", "nl-delim"):
            self.error("'$' or '@' expression")
        self.next()
        raw = self.expect("raw-text").text
        self.expect(tok.kind)
        return MathExpr(raw) if tok.kind == "math-delim" else NlExpr(raw)

    def suite(self) -> tuple:
        self.expect("punct", "{")
        stmts = [self.stmt()]
        while not self.at("punct", "}"):
            stmts.append(self.stmt())
        self.expect("punct", "}")
        return tuple(stmts)

    def stmt(self) -> PStmt:
        tok = self.peek()
        if tok is None:
            self.error("statement")
        line = tok.line
        if tok.kind == "keyword":
            if tok.text == "if":
                return self.if_stmt(line)
            if tok.text == "while":
                self.next()
                test = self.test()
                return WhileStmt(test, self.suite(), line=line)
            if tok.text in ("for", "for each"):
                return self.for_stmt(line)
            if tok.text == "repeat":
                self.next()
                body = self.suite()
                self.expect("keyword", "until")
                return RepeatStmt(body, self.test(), line=line)
            if tok.text == "return":
                return self.return_stmt(line)
            self.error("statement")
        if tok.kind in ("math-delim", "nl-delim"):
            return ExprStmt(self.expr(), line=line)
        if tok.kind == "name":
            return self.call_stmt(line)
        self.error("statement")

    def if_stmt(self, line: int) -> IfStmt:
        self.expect("keyword", "if")
        test = self.test()
        then = self.suite()
        elifs = []
        while self.at("keyword", "elseif"):
            self.next()
            elifs.append((self.test(), self.suite()))
        orelse = None
        if self.at("keyword", "else"):
            self.next()
            orelse = self.suite()
        return IfStmt(test, then, tuple(elifs), orelse, line=line)

    def for_stmt(self, line: int) -> ForStmt:
        kw = self.next()
        each = kw.text == "for each"
        header = self.expr()
        bound, direction = None, "none"
        if self.at("keyword", "to") or self.at("keyword", "downto"):
            direction = self.next().text
            bound = self.expr()
        return ForStmt(header, bound, direction, each, self.suite(), line=line)

    def return_stmt(self, line: int) -> ReturnStmt:
        self.expect("keyword", "return")
        if self.at("math-delim") or self.at("nl-delim"):
            return ReturnStmt(self.expr(), line=line)
        if self.at("name") and self.peek(1) is not None \
                and self.peek(1).kind == "punct" and self.peek(1).text == "(":
            return ReturnStmt(self.call_stmt(line), line=line)
        return ReturnStmt(None, line=line)

    def call_stmt(self, line: int) -> CallStmt:
        name = self.expect("name").text
        args = self.parameters()
        return CallStmt(name, args, line=line)

    # test precedence: or < and < not; leaves are expressions
    def test(self) -> PTest:
        t = self.and_test()
        while self.at("keyword", "or"):
            self.next()
            t = OrTest(t, self.and_test())
        return t

    def and_test(self) -> PTest:
        t = self.not_test()
        while self.at("keyword", "and"):
            self.next()
            t = AndTest(t, self.not_test())
        return t

    def not_test(self) -> PTest:
        if self.at("keyword", "not"):
            self.next()
            return NotTest(self.not_test())
        return TestLeaf(self.expr())


def parse(tokens: list[PToken]) -> PProgram:
    return _Parser(tokens).program()


def parse_source(source: str) -> PProgram:
    return parse(tokenize(source))


# --- Pretty printer ----------------------------------------------------

def _fmt_expr(e: PExpr) -> str:
    if isinstance(e, MathExpr):
        return f"${e.raw}$"
    return f"@{e.raw}@"


def _fmt_test(t: PTest) -> str:
    # parser-shaped trees only: and/or left-associative, not > and > or
    if isinstance(t, TestLeaf):
        return _fmt_expr(t.expr)
    if isinstance(t, NotTest):
        return f"not {_fmt_test(t.operand)}"
    if isinstance(t, AndTest):
        return f"{_fmt_test(t.left)} and {_fmt_test(t.right)}"
    return f"{_fmt_test(t.left)} or {_fmt_test(t.right)}"


def _fmt_para(p) -> str:
    return p if isinstance(p, str) else _fmt_expr(p)


def _fmt_stmt(s: PStmt, indent: int, out: list[str]):
    pad = "  " * indent
    if isinstance(s, ExprStmt):
        out.append(pad + _fmt_expr(s.expr))
    elif isinstance(s, CallStmt):
        out.append(pad + s.name + "(" + ", ".join(_fmt_para(a) for a in s.args) + ")")
    elif isinstance(s, ReturnStmt):
        if s.value is None:
            out.append(pad + "return")
        elif isinstance(s.value, CallStmt):
            out.append(pad + "return " + s.value.name + "("
                       + ", ".join(_fmt_para(a) for a in s.value.args) + ")")
        else:
            out.append(pad + "return " + _fmt_expr(s.value))
    elif isinstance(s, IfStmt):
        out.append(pad + "if " + _fmt_test(s.test) + " {")
        for st in s.then:
            _fmt_stmt(st, indent + 1, out)
        for test, body in s.elifs:
            out.append(pad + "} elseif " + _fmt_test(test) + " {")
            for st in body:
                _fmt_stmt(st, indent + 1, out)
        if s.orelse is not None:
            out.append(pad + "} else {")
            for st in s.orelse:
                _fmt_stmt(st, indent + 1, out)
        out.append(pad + "}")
    elif isinstance(s, WhileStmt):
        out.append(pad + "while " + _fmt_test(s.test) + " {")
        for st in s.body:
            _fmt_stmt(st, indent + 1, out)
        out.append(pad + "}")
    elif isinstance(s, ForStmt):
        head = "for each " if s.each else "for "
        head += _fmt_expr(s.header)
        if s.direction != "none":
            head += f" {s.direction} " + _fmt_expr(s.bound)
        out.append(pad + head + " {")
        for st in s.body:
            _fmt_stmt(st, indent + 1, out)
        out.append(pad + "}")
    elif isinstance(s, RepeatStmt):
        out.append(pad + "repeat {")
        for st in s.body:
            _fmt_stmt(st, indent + 1, out)
        out.append(pad + "} until " + _fmt_test(s.until))
    else:
        raise TypeError(f"unknown statement {s!r}")


def pretty_print(program: PProgram) -> str:
    out: list[str] = []
    for fn in program.functions:
        out.append(fn.name + "(" + ", ".join(_fmt_para(p) for p in fn.params) + ") {")
        for st in fn.body:
            _fmt_stmt(st, 1, out)
        out.append("}")
        out.append("")
    return "\n".join(out)
