"""Tokenizer for .ucp / .ucv / .ucr files."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import PolicySyntaxError, SourceSpan
from ..values import DAY, HOUR, MINUTE, WEEK, Value

UNITS = {
    "s": 1, "sec": 1, "secs": 1, "second": 1, "seconds": 1,
    "min": MINUTE, "mins": MINUTE, "minute": MINUTE, "minutes": MINUTE,
    "h": HOUR, "hr": HOUR, "hrs": HOUR, "hour": HOUR, "hours": HOUR,
    "d": DAY, "day": DAY, "days": DAY,
    "w": WEEK, "week": WEEK, "weeks": WEEK,
}

WORD_RE = r"[A-Za-z_][A-Za-z0-9_.\-+~]*"
_unit_alt = "|".join(sorted(UNITS, key=len, reverse=True))

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("TIMESTAMP", r"@-?\d+"),
    ("AT", r"@"),
    ("NUMBER", rf"-?\d+(?:\.\d+|/\d+)?(?:[ \t]*(?:{_unit_alt})(?![A-Za-z0-9_]))?"),
    ("NEG_INF", r"-(?:inf\b|∞)"),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"'),
    ("WORD", WORD_RE),
    ("ARROW", r"<-|←"),
    ("LE", r"<=|≤"),
    ("GE", r">=|≥"),
    ("NE", r"!=|≠"),
    ("DOTDOT", r"\.\."),
    ("LT", r"<"),
    ("GT", r">"),
    ("EQ", r"="),
    ("NOT", r"!|¬"),
    ("AND", r"&|∧"),
    ("OR", r"\||∨"),
    ("INF", r"∞"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("LBRACK", r"\["),
    ("RBRACK", r"\]"),
    ("LBRACE", r"\{"),
    ("RBRACE", r"\}"),
    ("COMMA", r","),
    ("COLON", r":"),
    ("SEMI", r";"),
    ("TILDE", r"~"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))
_NUM_RE = re.compile(rf"(-?\d+(?:\.\d+|/\d+)?)(?:[ \t]*({_unit_alt}))?$")


@dataclass(frozen=True)
class Token:
    type: str
    text: str
    span: SourceSpan
    value: object = None


def _number_value(text: str, span: SourceSpan) -> Value:
    m = _NUM_RE.match(text)
    assert m is not None
    num, unit = m.group(1), m.group(2)
    if "/" in num:
        p, q = num.split("/")
        if int(q) == 0:
            raise PolicySyntaxError("zero denominator", span)
        x: int | Fraction = Fraction(int(p), int(q))
    elif "." in num:
        x = Fraction(num)
    else:
        x = int(num)
    if unit is None:
        return Value.decimal(x) if isinstance(x, Fraction) else Value.integer(x)
    secs = Fraction(x) * UNITS[unit]
    if secs.denominator != 1:
        raise PolicySyntaxError(f"duration {text!r} is not a whole number of seconds", span)
    if secs < 0:
        raise PolicySyntaxError(f"duration {text!r} is negative", span)
    return Value.duration(int(secs))


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r"}


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


def tokenize(text: str, file: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, col = 1, 1
    n = len(text)
    while pos < n:
        m = _MASTER.match(text, pos)
        if m is None:
            span = SourceSpan(file, line, col, line, col + 1)
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        s = m.group()
        nl = s.count("\n")
        if nl:
            end_line, end_col = line + nl, len(s) - s.rfind("\n")
        else:
            end_line, end_col = line, col + len(s)
        span = SourceSpan(file, line, col, end_line, end_col)
        if kind not in ("WS", "COMMENT"):
            value: object = None
            if kind == "NUMBER":
                value = _number_value(s, span)
            elif kind == "TIMESTAMP":
                value = Value.timestamp(int(s[1:]))
            elif kind == "STRING":
                value = Value.text(_unescape(s[1:-1]))
            tokens.append(Token(kind, s, span, value))
        pos = m.end()
        line, col = end_line, end_col
    tokens.append(Token("EOF", "", SourceSpan(file, line, col, line, col)))
    return tokens
