"""DLGP-style text format for rules, facts and queries, plus JSON output.

Syntax summary (head-first rules, unlike the usual logical body -> head
notation):

    % comment
    [label] head_atom, ... :- body_atom, ... .     rule
    atom, ... .                                    fact
    ?(X, Y) :- atom, ... .                         query (? :- ... for BCQ)

Predicates and constants match [a-z][A-Za-z0-9_]*, variables
[A-Z][A-Za-z0-9_]*.  Head variables absent from the body are existential.
Names starting with __ are reserved and rejected.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .kb import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    RESERVED_PREFIX,
    Term,
    canonicalize,
    check_arities,
    const,
    sorted_atoms,
    var,
    vars_of,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class DlgpError(ValueError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        where = f" at {span}" if span else ""
        super().__init__(f"{message}{where}")


@dataclass
class Document:
    rules: list[ExistentialRule] = field(default_factory=list)
    facts: list[frozenset[Atom]] = field(default_factory=list)
    queries: list[ConjunctiveQuery] = field(default_factory=list)
    source_spans: list[SourceSpan] = field(default_factory=list)

    def fact_atoms(self) -> frozenset[Atom]:
        return frozenset(a for f in self.facts for a in f)


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>%[^\n]*)
      | (?P<arrow>:-)
      | (?P<punct>[()\[\],.?])
      | (?P<lident>[a-z][A-Za-z0-9_]*)
      | (?P<uident>[A-Z][A-Za-z0-9_]*)
      | (?P<reserved>_[A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DlgpError(
                f"unexpected character {text[pos]!r}", SourceSpan(line, col, line, col)
            )
        kind = m.lastgroup
        tok = m.group()
        nl = tok.count("\n")
        end_line = line + nl
        end_col = len(tok) - tok.rfind("\n") if nl else col + len(tok)
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, tok, SourceSpan(line, col, end_line, end_col)))
        line, col = end_line, end_col
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.arities: dict[str, int] = {}

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1].span if self.tokens else SourceSpan(1, 1, 1, 1)
            raise DlgpError("unexpected end of input", last)
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise DlgpError(f"expected {text!r}, found {tok.text!r}", tok.span)
        return tok

    def term(self) -> Term:
        tok = self.next()
        if tok.kind == "lident":
            return const(tok.text)
        if tok.kind == "uident":
            return var(tok.text)
        if tok.kind == "reserved":
            raise DlgpError(f"reserved name {tok.text!r} not allowed", tok.span)
        raise DlgpError(f"expected a term, found {tok.text!r}", tok.span)

    def atom(self) -> Atom:
        tok = self.next()
        if tok.kind == "reserved" or tok.text.startswith(RESERVED_PREFIX):
            raise DlgpError(f"reserved predicate {tok.text!r} not allowed", tok.span)
        if tok.kind != "lident":
            raise DlgpError(f"expected a predicate, found {tok.text!r}", tok.span)
        self.expect("(")
        args = [self.term()]
        while self.peek() and self.peek().text == ",":
            self.next()
            args.append(self.term())
        self.expect(")")
        a = Atom(tok.text, tuple(args))
        try:
            check_arities([a], self.arities)
        except ValueError as e:
            raise DlgpError(str(e), tok.span) from None
        self.arities.setdefault(a.predicate, a.arity)
        return a

    def atom_list(self) -> list[Atom]:
        atoms = [self.atom()]
        while self.peek() and self.peek().text == ",":
            self.next()
            atoms.append(self.atom())
        return atoms

    def statement(self, doc: Document, auto_label: int) -> int:
        start = self.peek().span
        tok = self.peek()
        if tok.text == "?":
            self.next()
            answer: list[Term] = []
            if self.peek() and self.peek().text == "(":
                self.next()
                if self.peek() and self.peek().text != ")":
                    answer.append(self.term())
                    while self.peek() and self.peek().text == ",":
                        self.next()
                        answer.append(self.term())
                self.expect(")")
            self.expect(":-")
            atoms = self.atom_list()
            end = self.expect(".").span
            qvars = vars_of(atoms)
            for t in answer:
                if t.is_variable and t not in qvars:
                    raise DlgpError(f"answer variable {t} not in query body", start)
            doc.queries.append(ConjunctiveQuery(frozenset(atoms), tuple(answer)))
            doc.source_spans.append(self._merge(start, end))
            return auto_label
        label = None
        if tok.text == "[":
            self.next()
            name = self.next()
            if name.kind not in ("lident", "uident"):
                raise DlgpError(f"expected a rule label, found {name.text!r}", name.span)
            label = name.text
            self.expect("]")
        first = self.atom_list()
        nxt = self.next()
        if nxt.text == ".":
            if label is not None:
                raise DlgpError("facts cannot carry a label", start)
            doc.facts.append(frozenset(first))
            doc.source_spans.append(self._merge(start, nxt.span))
            return auto_label
        if nxt.text != ":-":
            raise DlgpError(f"expected '.' or ':-', found {nxt.text!r}", nxt.span)
        body = self.atom_list()
        end = self.expect(".").span
        if label is None:
            label = f"r{auto_label}"
            auto_label += 1
        doc.rules.append(ExistentialRule(label, frozenset(body), frozenset(first)))
        doc.source_spans.append(self._merge(start, end))
        return auto_label

    @staticmethod
    def _merge(a: SourceSpan, b: SourceSpan) -> SourceSpan:
        return SourceSpan(a.line, a.col, b.end_line, b.end_col)


def parse_document(text: str) -> Document:
    parser = _Parser(_tokenize(text))
    doc = Document()
    auto_label = 1
    while parser.peek() is not None:
        auto_label = parser.statement(doc, auto_label)
    return doc


def _term_text(t: Term) -> str:
    s = str(t)
    if t.is_constant or s[0].isupper():
        return s
    return s[0].upper() + s[1:]


def _atom_text(a: Atom, rename: Optional[dict[Term, Term]] = None) -> str:
    args = [rename.get(t, t) if rename else t for t in a.args]
    return f"{a.predicate}({','.join(_term_text(t) for t in args)})"


def _x_rename_step(q: ConjunctiveQuery, width: int) -> ConjunctiveQuery:
    rename: dict[Term, Term] = {}
    for a in sorted_atoms(q.atoms):
        for t in a.args:
            if t.is_variable and t not in rename:
                rename[t] = var(f"X{len(rename):0{width}d}")
    atoms = frozenset(
        Atom(a.predicate, tuple(rename.get(t, t) for t in a.args)) for a in q.atoms
    )
    return ConjunctiveQuery(atoms, tuple(rename.get(t, t) for t in q.answer_vars))


def query_to_dlgp(q: ConjunctiveQuery) -> str:
    """One query statement with canonical variable names and sorted atoms.

    Renaming by first occurrence can reorder atoms, so the renaming step is
    iterated to a cycle and the smallest member is printed; serialization
    followed by parsing is then a fixpoint.  Variable names are zero-padded
    so their lexicographic order matches their introduction order.
    """
    width = len(str(max(len(vars_of(q.atoms)) - 1, 1)))
    seen: dict[ConjunctiveQuery, int] = {}
    seq: list[ConjunctiveQuery] = []
    cur = _x_rename_step(q, width)
    while cur not in seen:
        seen[cur] = len(seq)
        seq.append(cur)
        cur = _x_rename_step(cur, width)
    q = min(seq[seen[cur]:], key=lambda c: (c.sort_key(), c.answer_vars))
    ordered = sorted_atoms(q.atoms)
    head = ""
    if q.answer_vars:
        head = "(" + ",".join(_term_text(t) for t in q.answer_vars) + ")"
    body = ", ".join(_atom_text(a) for a in ordered)
    return f"?{head} :- {body}."


def document_to_dlgp(doc: Document) -> str:
    lines = []
    for r in doc.rules:
        body = ", ".join(_atom_text(a) for a in sorted_atoms(r.body))
        head = ", ".join(_atom_text(a) for a in sorted_atoms(r.head))
        lines.append(f"[{r.label}] {head} :- {body}.")
    for f in doc.facts:
        lines.append(", ".join(_atom_text(a) for a in sorted_atoms(f)) + ".")
    for q in doc.queries:
        lines.append(query_to_dlgp(q))
    return "\n".join(lines) + "\n"


def result_stats(result) -> dict:
    return {
        "generated": result.generated_count,
        "output": len(result.cover),
        "depth": result.depth_reached,
        "terminated": result.terminated,
    }


def serialize(obj, format: str = "dlgp") -> str:
    """Serialize a Document or a RewritingResult as dlgp or json text."""
    if format not in ("dlgp", "json"):
        raise ValueError(f"unknown format {format!r}")
    if isinstance(obj, Document):
        if format == "dlgp":
            return document_to_dlgp(obj)
        payload = {
            "rules": [str(r) for r in obj.rules],
            "facts": [sorted(str(a) for a in f) for f in obj.facts],
            "queries": [query_to_dlgp(q) for q in obj.queries],
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    # RewritingResult
    queries = sorted(query_to_dlgp(q) for q in obj.cover)
    if format == "dlgp":
        return "\n".join(queries) + "\n"
    payload = {"cover": queries, "stats": result_stats(obj)}
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"
