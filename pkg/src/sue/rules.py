"""Rule language: declare fluents and the event patterns that initiate or
terminate them under spatiotemporal constraints.

Syntax::

    # comment
    fluent shooting
    initiate shooting when gunshot(confidence >= 0.5) and weapon_sighting within 30s, 150m
    terminate shooting when all_clear

Durations take units ``ms``, ``s``, or ``m`` (minutes); distances take ``m``
(meters) or ``km``. The bare ``m`` is minutes before the comma and meters
after it. Parsing is all-or-nothing: any diagnostic aborts with 1-based
line/column positions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .model import ValidationError


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class RuleParseError(ValidationError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class EventPattern:
    event_type: str
    min_confidence: float = 0.0
    modality: Optional[str] = None


@dataclass(frozen=True)
class Rule:
    kind: str  # "initiates" | "terminates"
    fluent: str
    patterns: tuple[EventPattern, ...]
    within_ms: Optional[int] = None
    within_m: Optional[float] = None


@dataclass(frozen=True)
class RuleSet:
    fluents: frozenset[str] = frozenset()
    rules: tuple[Rule, ...] = ()

    def rules_for(self, fluent: str) -> list[Rule]:
        return [r for r in self.rules if r.fluent == fluent]

    @property
    def max_within_ms(self) -> int:
        return max((r.within_ms for r in self.rules if r.within_ms), default=0)


KEYWORDS = {"fluent", "initiate", "terminate", "when", "and", "within", "confidence"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<geq>>=)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | number | geq | lparen | rparen | comma | eof
    text: str
    line: int
    column: int


def _lex(source: str) -> Iterator[_Token]:
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise RuleParseError([Diagnostic(line, col, f"unexpected character {source[pos]!r}")])
        kind = m.lastgroup or ""
        text = m.group()
        if kind == "newline":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(text)
        else:
            yield _Token(kind, text, line, col)
            col += len(text)
        pos = m.end()
    yield _Token("eof", "", line, col)


class _Parser:
    def __init__(self, source: str):
        self.tokens = list(_lex(source))
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []
        self.fluent_order: list[str] = []
        self.rules: list[Rule] = []

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def bump(self) -> _Token:
        tok = self.cur
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, tok: _Token, message: str) -> None:
        self.diagnostics.append(Diagnostic(tok.line, tok.column, message))

    def sync_to_statement(self) -> None:
        while self.cur.kind != "eof" and not (
            self.cur.kind == "ident" and self.cur.text in ("fluent", "initiate", "terminate")
        ):
            self.bump()

    def expect_ident(self, what: str) -> Optional[_Token]:
        tok = self.cur
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            return self.bump()
        self.error(tok, f"expected {what}, got {tok.text or 'end of input'!r}")
        return None

    def expect_keyword(self, kw: str) -> bool:
        tok = self.cur
        if tok.kind == "ident" and tok.text == kw:
            self.bump()
            return True
        self.error(tok, f"expected '{kw}', got {tok.text or 'end of input'!r}")
        return False

    def parse(self) -> RuleSet:
        while self.cur.kind != "eof":
            tok = self.cur
            if tok.kind == "ident" and tok.text == "fluent":
                self.bump()
                name = self.expect_ident("fluent name")
                if name:
                    if name.text in self.fluent_order:
                        self.error(name, f"duplicate fluent declaration '{name.text}'")
                    else:
                        self.fluent_order.append(name.text)
                else:
                    self.sync_to_statement()
            elif tok.kind == "ident" and tok.text in ("initiate", "terminate"):
                self.parse_rule()
            else:
                self.error(tok, f"expected 'fluent', 'initiate' or 'terminate', got {tok.text!r}")
                self.sync_to_statement()
        self.check_semantics()
        if self.diagnostics:
            raise RuleParseError(self.diagnostics)
        return RuleSet(fluents=frozenset(self.fluent_order), rules=tuple(self.rules))

    def parse_rule(self) -> None:
        head = self.bump()  # initiate | terminate
        kind = "initiates" if head.text == "initiate" else "terminates"
        fluent_tok = self.expect_ident("fluent name")
        if fluent_tok is None:
            self.sync_to_statement()
            return
        if not self.expect_keyword("when"):
            self.sync_to_statement()
            return
        patterns: list[EventPattern] = []
        first = self.parse_pattern()
        if first is None:
            self.sync_to_statement()
            return
        patterns.append(first)
        while self.cur.kind == "ident" and self.cur.text == "and":
            self.bump()
            p = self.parse_pattern()
            if p is None:
                self.sync_to_statement()
                return
            patterns.append(p)
        within_ms: Optional[int] = None
        within_m: Optional[float] = None
        if self.cur.kind == "ident" and self.cur.text == "within":
            window_tok = self.bump()
            parsed = self.parse_window()
            if parsed is None:
                self.sync_to_statement()
                return
            within_ms, within_m = parsed
            if len(patterns) == 1:
                # Single-pattern rules ignore windows; drop so equality is structural.
                within_ms = within_m = None
        elif len(patterns) > 1:
            self.error(
                fluent_tok,
                f"rule for '{fluent_tok.text}' combines {len(patterns)} patterns "
                "but declares no 'within' window",
            )
        self.rules.append(
            Rule(kind=kind, fluent=fluent_tok.text, patterns=tuple(patterns),
                 within_ms=within_ms, within_m=within_m)
        )

    def parse_pattern(self) -> Optional[EventPattern]:
        name = self.expect_ident("event type")
        if name is None:
            return None
        min_conf = 0.0
        if self.cur.kind == "lparen":
            self.bump()
            if not self.expect_keyword("confidence"):
                return None
            if self.cur.kind != "geq":
                self.error(self.cur, f"expected '>=', got {self.cur.text!r}")
                return None
            self.bump()
            if self.cur.kind != "number":
                self.error(self.cur, f"expected confidence value, got {self.cur.text!r}")
                return None
            num = self.bump()
            min_conf = float(num.text)
            if not (0.0 <= min_conf <= 1.0):
                self.error(num, f"confidence floor out of range [0,1]: {num.text}")
            if self.cur.kind != "rparen":
                self.error(self.cur, f"expected ')', got {self.cur.text!r}")
                return None
            self.bump()
        return EventPattern(event_type=name.text, min_confidence=min_conf)

    def parse_window(self) -> Optional[tuple[int, float]]:
        if self.cur.kind != "number":
            self.error(self.cur, f"expected duration, got {self.cur.text!r}")
            return None
        num = self.bump()
        unit_tok = self.cur
        if unit_tok.kind != "ident" or unit_tok.text not in ("s", "ms", "m"):
            self.error(unit_tok, f"expected duration unit 's', 'ms' or 'm', got {unit_tok.text!r}")
            return None
        self.bump()
        scale = {"ms": 1, "s": 1000, "m": 60_000}[unit_tok.text]
        within_ms = int(round(float(num.text) * scale))
        if within_ms <= 0:
            self.error(num, "temporal window must be positive")
            return None
        if self.cur.kind != "comma":
            self.error(self.cur, f"expected ',', got {self.cur.text!r}")
            return None
        self.bump()
        if self.cur.kind != "number":
            self.error(self.cur, f"expected distance, got {self.cur.text!r}")
            return None
        dnum = self.bump()
        dunit = self.cur
        if dunit.kind != "ident" or dunit.text not in ("m", "km"):
            self.error(dunit, f"expected distance unit 'm' or 'km', got {dunit.text!r}")
            return None
        self.bump()
        within_m = float(dnum.text) * (1000.0 if dunit.text == "km" else 1.0)
        if within_m <= 0:
            self.error(dnum, "spatial window must be positive")
            return None
        return within_ms, within_m

    def check_semantics(self) -> None:
        declared = set(self.fluent_order)
        initiated = {r.fluent for r in self.rules if r.kind == "initiates"}
        for rule in self.rules:
            if rule.fluent not in declared:
                # Best-effort position: point at the start of input when lost.
                self.diagnostics.append(
                    Diagnostic(*self._rule_pos(rule), f"undeclared fluent '{rule.fluent}'")
                )
        for name in self.fluent_order:
            if name not in initiated:
                self.diagnostics.append(
                    Diagnostic(1, 1, f"fluent '{name}' has no initiate rule")
                )

    def _rule_pos(self, rule: Rule) -> tuple[int, int]:
        for tok in self.tokens:
            if tok.kind == "ident" and tok.text == rule.fluent:
                return tok.line, tok.column
        return 1, 1


def parse_rules(source: str) -> RuleSet:
    """Parse rule text into a validated RuleSet; raises RuleParseError with
    positioned diagnostics on any lexical, syntactic, or semantic problem."""
    return _Parser(source).parse()


def _format_number(x: float) -> str:
    return str(int(x)) if float(x) == int(x) else repr(float(x))


def _format_duration(ms: int) -> str:
    if ms % 60_000 == 0:
        return f"{ms // 60_000}m"
    if ms % 1000 == 0:
        return f"{ms // 1000}s"
    return f"{ms}ms"


def _format_distance(m: float) -> str:
    if m >= 1000.0 and m % 1000.0 == 0.0:
        return f"{int(m) // 1000}km"
    return f"{_format_number(m)}m"


def format_pattern(p: EventPattern) -> str:
    if p.min_confidence > 0.0:
        return f"{p.event_type}(confidence >= {_format_number(p.min_confidence)})"
    return p.event_type


def format_rule(r: Rule) -> str:
    head = "initiate" if r.kind == "initiates" else "terminate"
    text = f"{head} {r.fluent} when " + " and ".join(format_pattern(p) for p in r.patterns)
    if r.within_ms is not None and r.within_m is not None:
        text += f" within {_format_duration(r.within_ms)}, {_format_distance(r.within_m)}"
    return text


def format_rules(rs: RuleSet) -> str:
    """Canonical pretty-printer; parse_rules(format_rules(rs)) == rs."""
    lines = [f"fluent {name}" for name in sorted(rs.fluents)]
    if lines and rs.rules:
        lines.append("")
    lines.extend(format_rule(r) for r in rs.rules)
    return "\n".join(lines) + ("\n" if lines else "")
