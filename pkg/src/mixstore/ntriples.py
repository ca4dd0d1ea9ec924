"""Line-oriented N-Triples reader and writer."""
from __future__ import annotations

import io
import re
from typing import IO, Iterable

from .terms import Dictionary, Term, TermKind, Triple, unescape_literal


class MalformedLine(ValueError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


_IRI = r"<([^<>\s]*)>"
_BNODE = r"_:([A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)"
_LIT = r'"((?:[^"\\\n\r]|\\.)*)"(?:@([A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^<([^<>\s]*)>)?'

# Fast path for the overwhelmingly common statement shapes.
_B = r"_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?"
_L = r'"(?:[^"\\\n\r]|\\.)*"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>\s]*>)?'
_STATEMENT = re.compile(
    rf"[ \t]*(<[^<>\s]*>|{_B})[ \t]+(<[^<>\s]*>)[ \t]+(<[^<>\s]*>|{_B}|{_L})[ \t]*\.[ \t]*(?:#.*)?$"
)
_IRI_AT = re.compile(_IRI)
_BNODE_AT = re.compile(_BNODE)
_LIT_AT = re.compile(_LIT)
_WS = re.compile(r"[ \t]*")


def _decode_iri(raw: str) -> str:
    return unescape_literal(raw) if "\\" in raw else raw


def term_from_token(token: str) -> Term:
    """Build a Term from one N-Triples token (``<..>``, ``_:x`` or a literal)."""
    c = token[0]
    if c == "<":
        return Term(TermKind.IRI, _decode_iri(token[1:-1]))
    if c == "_":
        return Term(TermKind.BLANK, token[2:])
    m = _LIT_AT.fullmatch(token)
    if m is None:
        raise ValueError(f"bad literal {token!r}")
    value, lang, dt = m.groups()
    return Term.literal(unescape_literal(value), lang=lang, datatype=_decode_iri(dt) if dt else None)


def _scan_term(line: str, pos: int, lineno: int, role: str) -> tuple[str, int]:
    pos = _WS.match(line, pos).end()
    if pos >= len(line):
        raise MalformedLine(lineno, f"missing {role}")
    c = line[pos]
    if c == "<":
        m = _IRI_AT.match(line, pos)
        if m is None:
            raise MalformedLine(lineno, f"unclosed IRI in {role}")
    elif c == '"':
        m = _LIT_AT.match(line, pos)
        if m is None:
            raise MalformedLine(lineno, f"unclosed literal in {role}")
        if role != "object":
            raise MalformedLine(lineno, f"literal in {role} position")
    elif line.startswith("_:", pos):
        m = _BNODE_AT.match(line, pos)
        if m is None:
            raise MalformedLine(lineno, f"bad blank node in {role}")
        if role == "predicate":
            raise MalformedLine(lineno, "blank node in predicate position")
    else:
        raise MalformedLine(lineno, f"unexpected character {c!r} in {role}")
    return m.group(0), m.end()


def _split_statement(line: str, lineno: int) -> tuple[str, str, str]:
    m = _STATEMENT.match(line)
    if m is not None:
        return m.group(1), m.group(2), m.group(3)
    s, pos = _scan_term(line, 0, lineno, "subject")
    p, pos = _scan_term(line, pos, lineno, "predicate")
    o, pos = _scan_term(line, pos, lineno, "object")
    rest = line[pos:].strip()
    if not rest.startswith("."):
        raise MalformedLine(lineno, "missing terminator")
    rest = rest[1:].strip()
    if rest and not rest.startswith("#"):
        raise MalformedLine(lineno, f"trailing content {rest[:20]!r}")
    return s, p, o


def parse_ntriples(stream: IO[str] | str | Iterable[str], dictionary: Dictionary | None = None
                   ) -> tuple[list[Triple], Dictionary]:
    """Parse an N-Triples document, interning every term.

    Aborts with :class:`MalformedLine` on the first bad statement.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    d = Dictionary() if dictionary is None else dictionary
    cache: dict[str, int] = {}
    triples: list[Triple] = []
    append = triples.append

    def tid(token: str, lineno: int) -> int:
        i = cache.get(token)
        if i is None:
            try:
                term = term_from_token(token)
            except ValueError as exc:
                raise MalformedLine(lineno, str(exc)) from None
            i = cache[token] = d.intern(term)
        return i

    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\r\n")
        stripped = line.lstrip()
        if not stripped or stripped[0] == "#":
            continue
        s, p, o = _split_statement(line, lineno)
        if s[0] == '"':
            raise MalformedLine(lineno, "literal in subject position")
        append(Triple(tid(s, lineno), tid(p, lineno), tid(o, lineno)))
    return triples, d


def format_triple(t: Triple, dictionary: Dictionary) -> str:
    r = dictionary.reverse
    return f"{r[t.subject].n3()} {r[t.predicate].n3()} {r[t.object].n3()} ."


def write_ntriples(triples: Iterable[Triple], dictionary: Dictionary, stream: IO[str]) -> int:
    n = 0
    for t in triples:
        stream.write(format_triple(t, dictionary))
        stream.write("\n")
        n += 1
    return n


def load_file(path) -> tuple[list[Triple], Dictionary]:
    with open(path, encoding="utf-8", newline="") as f:
        return parse_ntriples(f)
