"""Text syntax for processes.

Grammar::

    process  := par
    par      := restrict { "|" restrict }
    restrict := "new" ident+ "in" "{" process "}" | atom
    atom     := "0" | ident "->" ident | ident "=>" "[" [identlist] "]"
              | "?" ident | "+" ident | "*" ident | "(" process ")"

``#`` starts a comment unless it is directly followed by a digit, in which
case it is part of a canonical bound name such as ``#3``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .process import (
    Bridge, Distribute, Duplicator, Duploser, Loser, Par, Process, Restrict, Stop,
)

__all__ = [
    "ParseError", "SourceSpan", "parse_process", "pretty", "builtin",
    "builtin_names", "builtin_source", "load_process",
]

KEYWORDS = {"new", "in"}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#(?!\d)[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*|\#\d+)
  | (?P<op>->|=>|[|{}()\[\],?+*0])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan, expected: frozenset[str] = frozenset()):
        self.span = span
        self.expected = expected
        detail = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at offset {span.start}{detail}")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(pos, pos + 1))
        if m.lastgroup != "ws":
            value = m.group()
            kind = "kw" if m.lastgroup == "ident" and value in KEYWORDS else m.lastgroup
            out.append((kind, value, m.start(), m.end()))
        pos = m.end()
    out.append(("eof", "", len(text), len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def fail(self, expected):
        kind, value, start, end = self.peek()
        what = "end of input" if kind == "eof" else f"{value!r}"
        raise ParseError(f"unexpected {what}", SourceSpan(start, end), frozenset(expected))

    def accept(self, value):
        if self.peek()[1] == value and self.peek()[0] in ("op", "kw"):
            self.i += 1
            return True
        return False

    def expect(self, value):
        if not self.accept(value):
            self.fail({value})

    def ident(self):
        kind, value, _, _ = self.peek()
        if kind != "ident":
            self.fail({"identifier"})
        self.i += 1
        return value

    def process(self) -> Process:
        parts = [self.restrict()]
        while self.accept("|"):
            parts.append(self.restrict())
        result = parts[-1]
        for q in reversed(parts[:-1]):
            result = Par(q, result)
        return result

    def restrict(self) -> Process:
        if self.accept("new"):
            names = [self.ident()]
            while self.peek()[0] == "ident":
                names.append(self.ident())
            self.expect("in")
            self.expect("{")
            body = self.process()
            self.expect("}")
            for n in reversed(names):
                body = Restrict(n, body)
            return body
        return self.atom()

    def atom(self) -> Process:
        kind, value, _, _ = self.peek()
        if kind == "op" and value in ("?", "+", "*"):
            self.i += 1
            ch = self.ident()
            return {"?": Loser, "+": Duplicator, "*": Duploser}[value](ch)
        if self.accept("0"):
            return Stop()
        if self.accept("("):
            p = self.process()
            self.expect(")")
            return p
        if kind == "ident":
            src = self.ident()
            if self.accept("->"):
                return Bridge(src, self.ident())
            if self.accept("=>"):
                self.expect("[")
                targets = []
                if not self.accept("]"):
                    targets.append(self.ident())
                    while self.accept(","):
                        targets.append(self.ident())
                    self.expect("]")
                return Distribute(src, tuple(targets))
            self.fail({"->", "=>"})
        self.fail({"0", "(", "?", "+", "*", "new", "identifier"})


def parse_process(text: str) -> Process:
    parser = _Parser(text)
    p = parser.process()
    if parser.peek()[0] != "eof":
        parser.fail({"|", "end of input"})
    return p


def _binders(p: Process):
    names = []
    while isinstance(p, Restrict):
        names.append(p.channel)
        p = p.body
    return names, p


def pretty(p: Process) -> str:
    """Render with the fewest parentheses that parse back to ``p``."""
    if isinstance(p, Stop):
        return "0"
    if isinstance(p, Par):
        left = pretty(p.left)
        if isinstance(p.left, Par):
            left = f"({left})"
        return f"{left} | {pretty(p.right)}"
    if isinstance(p, Restrict):
        names, body = _binders(p)
        return f"new {' '.join(names)} in {{ {pretty(body)} }}"
    if isinstance(p, Distribute):
        return f"{p.source} => [{', '.join(p.targets)}]"
    if isinstance(p, Bridge):
        return f"{p.source} -> {p.target}"
    glyph = {Loser: "?", Duplicator: "+", Duploser: "*"}[type(p)]
    return f"{glyph}{p.channel}"


# -- builtins ----------------------------------------------------------------

_BUILTINS = ("D", "M", "M_star", "M_i", "M_o", "fig5", "fig6", "fig7", "fig8", "lossyD", "lossyM")


def builtin_names() -> tuple[str, ...]:
    return _BUILTINS


def builtin_source(name: str) -> str:
    if name not in _BUILTINS:
        raise KeyError(f"unknown builtin {name!r}; known: {', '.join(_BUILTINS)}")
    return resources.files("commnet").joinpath("data").joinpath(f"{name}.cn").read_text(encoding="utf-8")


def builtin(name: str) -> Process:
    return parse_process(builtin_source(name))


def load_process(ref: str) -> Process:
    """Read ``builtin:NAME`` or a ``.cn`` file path."""
    if ref.startswith("builtin:"):
        return builtin(ref.split(":", 1)[1])
    with open(ref, encoding="utf-8") as fh:
        return parse_process(fh.read())
