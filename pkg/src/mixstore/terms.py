"""RDF terms, triples and the dense term dictionary."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
XSD = "http://www.w3.org/2001/XMLSchema#"


class TermKind(enum.Enum):
    IRI = "I"
    LITERAL = "L"
    BLANK = "B"


_NT_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


_UNESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_UNESCAPE_RE = re.compile(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|.)")


def escape_literal(value: str) -> str:
    return "".join(_NT_ESCAPES.get(ch, ch) for ch in value)


def _unescape_one(m: re.Match) -> str:
    code = m.group(1)
    if len(code) > 1:
        return chr(int(code[1:], 16))
    try:
        return _UNESCAPES[code]
    except KeyError:
        raise ValueError(f"unknown escape \\{code}") from None


def unescape_literal(text: str) -> str:
    if "\\" not in text:
        return text
    return _UNESCAPE_RE.sub(_unescape_one, text)


@dataclass(frozen=True, order=True)
class Term:
    """An RDF term identified by its kind and full lexical form.

    IRIs are stored without angle brackets and blank nodes without the ``_:``
    prefix.  A literal's lexical form keeps its quoting together with any
    language tag or datatype, e.g. ``"12"^^<http://...#integer>``, so that
    two literals are equal exactly when their source forms are.
    """

    kind: TermKind
    lexical: str

    def __post_init__(self) -> None:
        if self.kind is TermKind.IRI:
            if not self.lexical or any(ch.isspace() for ch in self.lexical):
                raise ValueError(f"invalid IRI {self.lexical!r}")
        elif self.kind is TermKind.BLANK and not self.lexical:
            raise ValueError("empty blank node label")

    @classmethod
    def iri(cls, value: str) -> "Term":
        return cls(TermKind.IRI, value)

    @classmethod
    def blank(cls, label: str) -> "Term":
        return cls(TermKind.BLANK, label)

    @classmethod
    def literal(cls, value: str, lang: str | None = None, datatype: str | None = None) -> "Term":
        if lang and datatype:
            raise ValueError("a literal has either a language tag or a datatype")
        lexical = '"' + escape_literal(value) + '"'
        if lang:
            lexical += "@" + lang
        elif datatype:
            lexical += "^^<" + datatype + ">"
        return cls(TermKind.LITERAL, lexical)

    @property
    def value(self) -> str:
        """Decoded value: the IRI, the blank label, or the literal's string."""
        if self.kind is not TermKind.LITERAL:
            return self.lexical
        end = self.lexical.rindex('"')
        return unescape_literal(self.lexical[1:end])

    @property
    def is_literal(self) -> bool:
        return self.kind is TermKind.LITERAL

    def n3(self) -> str:
        """Render in N-Triples syntax."""
        if self.kind is TermKind.IRI:
            return f"<{self.lexical}>"
        if self.kind is TermKind.BLANK:
            return f"_:{self.lexical}"
        return self.lexical

    def __str__(self) -> str:
        return self.n3()


class Triple(NamedTuple):
    subject: int
    predicate: int
    object: int


@dataclass
class Dictionary:
    """Bijection between terms and dense integer ids starting at 0."""

    forward: dict[Term, int] = field(default_factory=dict)
    reverse: list[Term] = field(default_factory=list)

    def intern(self, term: Term) -> int:
        tid = self.forward.get(term)
        if tid is None:
            tid = len(self.reverse)
            self.forward[term] = tid
            self.reverse.append(term)
        return tid

    def resolve(self, tid: int) -> Term:
        return self.reverse[tid]

    def lookup(self, term: Term) -> int | None:
        return self.forward.get(term)

    def __len__(self) -> int:
        return len(self.reverse)

    def __contains__(self, term: object) -> bool:
        return term in self.forward

    def __iter__(self) -> Iterator[Term]:
        return iter(self.reverse)

    @classmethod
    def from_terms(cls, terms) -> "Dictionary":
        d = cls()
        n = 0
        for n, t in enumerate(terms, 1):
            d.intern(t)
        if len(d) != n:
            raise ValueError("duplicate terms")
        return d


def intern(dictionary: Dictionary, term: Term) -> int:
    return dictionary.intern(term)
