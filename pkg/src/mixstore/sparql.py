"""Parser for SELECT queries over a single basic graph pattern."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .terms import RDF_TYPE, XSD, Term, unescape_literal

_VAR_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class QueryError(ValueError):
    pass


class SparqlSyntaxError(QueryError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"syntax error at {position}: {reason}")
        self.position = position
        self.reason = reason


class UnsupportedFeature(QueryError):
    def __init__(self, name: str):
        super().__init__(f"unsupported feature: {name}")
        self.name = name


class UnboundProjection(QueryError):
    def __init__(self, var: "Variable"):
        super().__init__(f"projected variable {var} does not occur in the pattern")
        self.var = var


@dataclass(frozen=True, order=True)
class Variable:
    name: str

    def __post_init__(self) -> None:
        if not _VAR_NAME.fullmatch(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")

    def __str__(self) -> str:
        return "?" + self.name


PatternTerm = Union[Variable, Term]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: Term
    object: PatternTerm

    def variables(self) -> list[Variable]:
        out = []
        for x in (self.subject, self.object):
            if isinstance(x, Variable) and x not in out:
                out.append(x)
        return out

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {self.object}"


@dataclass(frozen=True)
class BgpQuery:
    projection: tuple[Variable, ...]
    patterns: tuple[TriplePattern, ...]
    distinct: bool = False
    select_all: bool = False

    def variables(self) -> list[Variable]:
        """All variables in first-occurrence order."""
        seen: dict[Variable, None] = {}
        for tp in self.patterns:
            for v in tp.variables():
                seen.setdefault(v)
        return list(seen)

    @classmethod
    def of(cls, patterns, projection=None, distinct: bool = False) -> "BgpQuery":
        patterns = tuple(patterns)
        if not patterns:
            raise ValueError("a query needs at least one pattern")
        q = cls((), patterns, distinct, projection is None)
        if projection is None:
            return cls(tuple(q.variables()), patterns, distinct, True)
        known = set(q.variables())
        for v in projection:
            if v not in known:
                raise UnboundProjection(v)
        return cls(tuple(projection), patterns, distinct, False)


# ------------------------------------------------------------------- lexer

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<bnode>_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)
  | (?P<num>[+-]?(?:\d*\.\d+(?:[eE][+-]?\d+)?|\d+\.\d*[eE][+-]?\d+|\d+[eE][+-]?\d+|\d+))
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*(?:\.[A-Za-z0-9_\-]+)*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?)
  | (?P<word>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>[{}.;,()*\[\]/|^+?!=<>&])
""", re.VERBOSE)

_UNSUPPORTED_KEYWORDS = {
    "FILTER", "OPTIONAL", "UNION", "MINUS", "BIND", "VALUES", "GRAPH", "SERVICE",
    "GROUP", "ORDER", "LIMIT", "OFFSET", "HAVING", "REDUCED", "CONSTRUCT", "ASK",
    "DESCRIBE", "FROM", "EXISTS", "NOT",
}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> Iterator[_Tok]:
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SparqlSyntaxError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            yield _Tok(kind, m.group(), pos)
        pos = m.end()
    yield _Tok("eof", "", n)


# ------------------------------------------------------------------ parser


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokenize(text))
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.base = ""

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def is_word(self, word: str) -> bool:
        return self.tok.kind == "word" and self.tok.text.upper() == word

    def expect_punct(self, ch: str) -> None:
        t = self.advance()
        if t.kind != "punct" or t.text != ch:
            raise SparqlSyntaxError(t.pos, f"expected {ch!r}, found {t.text or 'end of input'!r}")

    def check_unsupported(self) -> None:
        t = self.tok
        if t.kind == "word" and t.text.upper() in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeature(t.text.upper())

    def parse(self) -> BgpQuery:
        self.prologue()
        self.check_unsupported()
        if not self.is_word("SELECT"):
            raise SparqlSyntaxError(self.tok.pos, "expected SELECT")
        self.advance()
        distinct = False
        if self.is_word("DISTINCT"):
            distinct = True
            self.advance()
        self.check_unsupported()
        projection: list[Variable] | None = []
        if self.tok.kind == "punct" and self.tok.text == "*":
            self.advance()
            projection = None
        else:
            while self.tok.kind == "var":
                projection.append(Variable(self.advance().text[1:]))
            if self.tok.kind == "punct" and self.tok.text == "(":
                raise UnsupportedFeature("projection expression")
            if not projection:
                raise SparqlSyntaxError(self.tok.pos, "expected projection")
        self.check_unsupported()
        if self.is_word("WHERE"):
            self.advance()
        self.expect_punct("{")
        patterns = self.group()
        self.expect_punct("}")
        self.check_unsupported()
        if self.tok.kind != "eof":
            raise SparqlSyntaxError(self.tok.pos, f"unexpected {self.tok.text!r} after query")
        if not patterns:
            raise SparqlSyntaxError(self.tok.pos, "empty basic graph pattern")
        return BgpQuery.of(patterns, projection, distinct)

    def prologue(self) -> None:
        while True:
            if self.is_word("PREFIX"):
                self.advance()
                t = self.advance()
                if t.kind != "pname" or not t.text.endswith(":"):
                    raise SparqlSyntaxError(t.pos, "expected prefix name")
                iri = self.advance()
                if iri.kind != "iri":
                    raise SparqlSyntaxError(iri.pos, "expected IRI")
                self.prefixes[t.text[:-1]] = self.resolve_iri(iri.text[1:-1], iri.pos)
            elif self.is_word("BASE"):
                self.advance()
                iri = self.advance()
                if iri.kind != "iri":
                    raise SparqlSyntaxError(iri.pos, "expected IRI")
                self.base = iri.text[1:-1]
            else:
                return

    def resolve_iri(self, iri: str, pos: int) -> str:
        if "\\" in iri:
            try:
                iri = unescape_literal(iri)
            except ValueError as exc:
                raise SparqlSyntaxError(pos, str(exc)) from None
        if self.base and ":" not in iri:
            iri = self.base + iri
        if not iri or any(c.isspace() for c in iri):
            raise SparqlSyntaxError(pos, "empty or invalid IRI")
        return iri

    def group(self) -> list[TriplePattern]:
        patterns: list[TriplePattern] = []
        while True:
            t = self.tok
            if t.kind == "punct" and t.text == "}":
                return patterns
            if t.kind == "punct" and t.text == ".":
                self.advance()
                continue
            if t.kind == "eof":
                raise SparqlSyntaxError(t.pos, "unterminated group")
            self.check_unsupported()
            if t.kind == "punct" and t.text == "{":
                rest = {x.text.upper() for x in self.toks[self.i:] if x.kind == "word"}
                for name in ("UNION", "SELECT", "MINUS"):
                    if name in rest:
                        raise UnsupportedFeature("subquery" if name == "SELECT" else name)
                raise UnsupportedFeature("nested group")
            subject = self.node(role="subject")
            patterns.extend(self.property_list(subject))
            nxt = self.tok
            if nxt.kind == "punct" and nxt.text in ".}":
                continue
            self.check_unsupported()
            raise SparqlSyntaxError(nxt.pos, f"expected '.' or '}}', found {nxt.text or 'end of input'!r}")

    def property_list(self, subject: PatternTerm) -> list[TriplePattern]:
        out = []
        while True:
            pred = self.verb()
            while True:
                obj = self.node(role="object")
                out.append(TriplePattern(subject, pred, obj))
                if self.tok.kind == "punct" and self.tok.text == ",":
                    self.advance()
                    continue
                break
            if self.tok.kind == "punct" and self.tok.text == ";":
                while self.tok.kind == "punct" and self.tok.text == ";":
                    self.advance()
                if self.tok.kind == "punct" and self.tok.text in ".}":
                    return out
                continue
            return out

    def verb(self) -> Term:
        t = self.tok
        if t.kind == "var":
            raise UnsupportedFeature("variable predicate")
        if t.kind == "word" and t.text == "a":
            self.advance()
            pred = Term.iri(RDF_TYPE)
        elif t.kind in ("iri", "pname"):
            pred = self.node(role="predicate")
        elif t.kind == "punct" and t.text in "^!(":
            raise UnsupportedFeature("property path")
        else:
            self.check_unsupported()
            raise SparqlSyntaxError(t.pos, f"expected predicate, found {t.text or 'end of input'!r}")
        nxt = self.tok
        if nxt.kind == "punct" and nxt.text in "/|^*+?":
            raise UnsupportedFeature("property path")
        return pred

    def node(self, role: str) -> PatternTerm:
        t = self.advance()
        if t.kind == "var":
            if role == "predicate":
                raise UnsupportedFeature("variable predicate")
            return Variable(t.text[1:])
        if t.kind == "iri":
            return Term.iri(self.resolve_iri(t.text[1:-1], t.pos))
        if t.kind == "pname":
            prefix, _, local = t.text.partition(":")
            if prefix not in self.prefixes:
                raise SparqlSyntaxError(t.pos, f"undeclared prefix {prefix!r}")
            return Term.iri(self.prefixes[prefix] + local)
        if role == "predicate":
            raise SparqlSyntaxError(t.pos, "predicate must be an IRI")
        if t.kind == "bnode" or (t.kind == "punct" and t.text == "["):
            raise UnsupportedFeature("blank node in pattern")
        if t.kind in ("str", "num") or (t.kind == "word" and t.text in ("true", "false")):
            if role == "subject":
                raise SparqlSyntaxError(t.pos, "literal in subject position")
            return self.literal(t)
        if t.kind == "punct" and t.text == "(":
            raise UnsupportedFeature("collection")
        self.i -= 1 if t.kind != "eof" else 0
        self.check_unsupported()
        raise SparqlSyntaxError(t.pos, f"expected {role}, found {t.text or 'end of input'!r}")

    def literal(self, t: _Tok) -> Term:
        if t.kind == "num":
            text = t.text
            if "e" in text.lower():
                dt = "double"
            elif "." in text:
                dt = "decimal"
            else:
                dt = "integer"
            return Term.literal(text, datatype=XSD + dt)
        if t.kind == "word":
            return Term.literal(t.text, datatype=XSD + "boolean")
        try:
            value = unescape_literal(t.text[1:-1])
        except ValueError as exc:
            raise SparqlSyntaxError(t.pos, str(exc)) from None
        if self.tok.kind == "lang":
            return Term.literal(value, lang=self.advance().text[1:])
        if self.tok.kind == "dtype":
            self.advance()
            dt = self.node(role="predicate")
            return Term.literal(value, datatype=dt.lexical)
        return Term.literal(value)


def parse_query(text: str) -> BgpQuery:
    """Parse ``text`` into a :class:`BgpQuery` or raise a :class:`QueryError`."""
    try:
        return _Parser(text).parse()
    except QueryError:
        raise
    except (ValueError, IndexError) as exc:  # defensive: keep parsing total
        raise SparqlSyntaxError(0, str(exc)) from None


def format_query(q: BgpQuery) -> str:
    head = "SELECT DISTINCT" if q.distinct else "SELECT"
    proj = "*" if q.select_all else " ".join(str(v) for v in q.projection)
    body = "".join(f"  {tp} .\n" for tp in q.patterns)
    return f"{head} {proj} WHERE {{\n{body}}}\n"
