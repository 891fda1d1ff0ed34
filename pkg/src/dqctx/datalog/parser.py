"""Tokenizer and recursive-descent parser for the rule language.

Grammar::

    program   := { statement }
    statement := atom [ (":-" | "←") atomlist ] "."
    atomlist  := atom { "," atom }
    atom      := ident "(" [ term { "," term } ] ")" | term cmp term { cmp term }
    cmp       := "=" | "!=" | "<" | "<=" | ">" | ">="      (also ≠ ≤ ≥)
    term      := variable | constant

Identifiers starting with a lowercase letter or ``_`` are variables; those
starting with an uppercase letter are text constants.  Other constants are
quoted strings, numbers, ``HH:MM`` times and date tags such as ``Sep/5``.
A chain ``11:30 <= t <= 12:30`` stands for ``11:30 <= t, t <= 12:30``.
``%`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

from ..errors import DslSyntaxError
from ..relmodel import DateTag, Time
from .syntax import Builtin, Const, Program, Query, Rel, Rule, Var, make_query

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"%[^\n]*"),
    ("ARROW", r":-|←"),
    ("MAPSTO", r"->|→"),
    ("CMP", r"<=|>=|!=|≤|≥|≠|=|<|>"),
    ("TIME", r"\d{1,2}:\d{2}(?!\d)"),
    ("NUMBER", r"-?\d+(?:\.\d+)?"),
    ("DATE", r"[A-Za-z]+/\d{1,2}(?!\d)"),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"'),
    ("IDENT", r"#?[A-Za-z_][A-Za-z0-9_']*(?:@[bf]*(?:_\d+)?)?"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("LBRACK", r"\["),
    ("RBRACK", r"\]"),
    ("COMMA", r","),
    ("DOT", r"\."),
    ("COLON", r":"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))
_CMP_CANON = {"≤": "<=", "≥": ">=", "≠": "!="}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind, value = m.lastgroup, m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text or kind.lower()
            got = tok.text or "end of input"
            raise DslSyntaxError(f"expected {want}, found {got!r}", tok.line, tok.col)
        return self.next()

    def error(self, message: str) -> DslSyntaxError:
        tok = self.peek()
        return DslSyntaxError(message, tok.line, tok.col)

    # -- rule language ------------------------------------------------------

    def term(self):
        tok = self.next()
        try:
            if tok.kind == "IDENT" and not tok.text.startswith("#") and "@" not in tok.text:
                if tok.text[0].islower() or tok.text[0] == "_":
                    return Var(tok.text)
                return Const(tok.text)
            if tok.kind == "STRING":
                return Const(re.sub(r"\\(.)", r"\1", tok.text[1:-1]))
            if tok.kind == "NUMBER":
                return Const(Decimal(tok.text))
            if tok.kind == "TIME":
                return Const(Time.parse(tok.text))
            if tok.kind == "DATE":
                return Const(DateTag(tok.text))
        except ValueError as exc:
            raise DslSyntaxError(str(exc), tok.line, tok.col) from None
        raise DslSyntaxError(f"expected a term, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)

    def conjunct(self) -> list:
        """One body item; a comparison chain yields several built-ins."""
        first = self.atom()
        if not isinstance(first, Builtin):
            return [first]
        out = [first]
        while self.at("CMP"):
            op = self.next().text
            out.append(Builtin(_CMP_CANON.get(op, op), out[-1].right, self.term()))
        return out

    def atom(self):
        if self.at("IDENT") and self.peek(1).kind == "LPAREN":
            pred = self.next().text
            self.expect("LPAREN")
            terms = []
            if not self.at("RPAREN"):
                terms.append(self.term())
                while self.accept("COMMA"):
                    terms.append(self.term())
            self.expect("RPAREN")
            return Rel(pred, terms)
        left = self.term()
        op = self.expect("CMP").text
        right = self.term()
        return Builtin(_CMP_CANON.get(op, op), left, right)

    def rule(self) -> Rule:
        start = self.peek()
        head = self.atom()
        if not isinstance(head, Rel):
            raise DslSyntaxError("rule head must be a relational atom", start.line, start.col)
        body = []
        if self.accept("ARROW"):
            body.extend(self.conjunct())
            while self.accept("COMMA"):
                body.extend(self.conjunct())
        self.expect("DOT")
        if not body and head.variables():
            raise DslSyntaxError("facts must be ground", start.line, start.col)
        return Rule(head, body)


def parse_rules(text: str) -> list[Rule]:
    stream = TokenStream(text)
    rules = []
    while not stream.at("EOF"):
        rules.append(stream.rule())
    return rules


def parse_rule(text: str) -> Rule:
    rules = parse_rules(text)
    if len(rules) != 1:
        raise DslSyntaxError(f"expected exactly one rule, found {len(rules)}", 1, 1)
    return rules[0]


def parse_program(text: str) -> Program:
    return Program(parse_rules(text))


def parse_query(text: str, answer: str | None = None) -> Query:
    return make_query(parse_rules(text), answer)
