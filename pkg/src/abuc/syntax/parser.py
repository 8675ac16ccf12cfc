"""Recursive-descent parser for policies, vocabularies and requests.

Policy grammar (ASCII spelling; the Unicode connectives are accepted too)::

    policy    := "policy" ID "kind" ("RoP"|"QoP"|"CSP") annots rule*
    rule      := "rule" ID ":" ["!"] rights {"&" obls} {"&" rstrs} "<-" cond annots [";"]
    rights    := "Rt" "(" ["!"] ID {("&"|"|") ["!"] ID} ")"
    obls      := "Ob" "(" obl {("&"|"|") obl} ")"
    obl       := ["!"] ID ["(" ID "=" value {"," ID "=" value} ")"] ["window" "[" value "," value "]"]
    rstrs     := "Rn" "(" rstr {("&"|",") rstr} ")"       # CNAT predicates
    rstr      := pred | "!" rstr | "!" "(" rstr ")"
    cond      := cterm {"|" cterm}
    cterm     := cfactor {"&" cfactor}
    cfactor   := "!" cfactor | "(" cond ")" | "true" | "false" | CAT "(" gexpr ")"
    gexpr     := gterm {"|" gterm};  gterm := gfactor {"&" gfactor}
    gfactor   := "!" gfactor | "(" gexpr ")" | pred
    pred      := ID op value annots | ID "in" range annots
"""

from __future__ import annotations

import dataclasses
from typing import Callable

from ..errors import (
    AbucError,
    DuplicateAssignment,
    DuplicateAttribute,
    DuplicateRuleId,
    EmptyDomain,
    KindMismatch,
    PolicySyntaxError,
    SourceSpan,
    UnknownAttribute,
)
from ..model import (
    And,
    Assignment,
    AttributeEntry,
    AttributePredicate,
    Category,
    Condition,
    Const,
    Effect,
    Expr,
    Lifecycle,
    Not,
    ObligationSpec,
    Op,
    Or,
    Policy,
    PolicyKind,
    Pred,
    Request,
    Right,
    Rule,
    Vocabulary,
    to_dnf,
)
from ..values import Interval, Kind, Value, ValueRange, coerce
from .lexer import Token, tokenize

_OPS = {"EQ": Op.EQ, "NE": Op.NE, "LT": Op.LT, "LE": Op.LE, "GT": Op.GT, "GE": Op.GE}
_CATS = {"SAT": Category.SAT, "OAT": Category.OAT, "CNAT": Category.CNAT}
_ORDERED_KINDS = {"integer": Kind.INTEGER, "decimal": Kind.DECIMAL, "timestamp": Kind.TIMESTAMP, "duration": Kind.DURATION}


class _Parser:
    def __init__(self, text: str, file: str, vocab: Vocabulary | None = None) -> None:
        self.toks = tokenize(text, file)
        self.i = 0
        self.file = file
        self.vocab = vocab

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> PolicySyntaxError:
        tok = tok or self.tok
        found = "end of input" if tok.type == "EOF" else repr(tok.text)
        return PolicySyntaxError(f"{msg} (found {found})", tok.span)

    def at(self, type_: str, text: str | None = None) -> bool:
        t = self.tok
        return t.type == type_ and (text is None or t.text == text)

    def at_word(self, *words: str) -> bool:
        return self.tok.type == "WORD" and self.tok.text in words

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, type_: str, text: str | None = None) -> Token | None:
        if self.at(type_, text):
            return self.advance()
        return None

    def expect(self, type_: str, what: str, text: str | None = None) -> Token:
        if not self.at(type_, text):
            raise self.error(f"expected {what}")
        return self.advance()

    def expect_word(self, what: str) -> Token:
        return self.expect("WORD", what)

    def ident(self, what: str) -> Token:
        """A name: a bare word, or a quoted string for names that are not valid words."""
        t = self.tok
        if t.type == "STRING":
            self.advance()
            return Token("WORD", t.value.data, t.span)
        return self.expect("WORD", what)

    def keyword(self, word: str) -> Token:
        return self.expect("WORD", f"'{word}'", word)

    def expect_eof(self) -> None:
        if not self.at("EOF"):
            raise self.error("unexpected trailing input")

    def span_from(self, start: Token) -> SourceSpan:
        end = self.toks[max(self.i - 1, 0)].span
        return SourceSpan(start.span.file, start.span.start_line, start.span.start_col, end.end_line, end.end_col)

    # -- literals -------------------------------------------------------------

    def value(self) -> Value:
        t = self.tok
        if t.type in ("NUMBER", "TIMESTAMP", "STRING"):
            self.advance()
            return t.value
        if t.type == "WORD":
            self.advance()
            if t.text == "true":
                return Value.boolean(True)
            if t.text == "false":
                return Value.boolean(False)
            return Value.text(t.text)
        raise self.error("expected a value")

    def _bound(self) -> tuple[Value | None, Token]:
        t = self.tok
        if t.type in ("INF", "NEG_INF") or (t.type == "WORD" and t.text == "inf"):
            self.advance()
            return None, t
        return self.value(), t

    def _interval(self) -> tuple[Kind | None, Interval]:
        open_tok = self.advance()
        lo, lo_tok = self._bound()
        if lo is None and lo_tok.type not in ("NEG_INF",):
            raise self.error("lower bound must be a value or -inf", lo_tok)
        self.expect("COMMA", "','")
        hi, hi_tok = self._bound()
        if hi is None and hi_tok.type == "NEG_INF":
            raise self.error("upper bound must be a value or inf", hi_tok)
        close = self.tok
        if close.type not in ("RBRACK", "RPAREN"):
            raise self.error("expected ']' or ')'")
        self.advance()
        kinds = {v.kind for v in (lo, hi) if v is not None}
        kind = _unify_kinds(kinds, open_tok)
        for v in (lo, hi):
            if v is not None and kind is not None and not kind.ordered:
                raise KindMismatch(f"{kind.value} values cannot bound an interval", open_tok.span)
        lo_d = coerce(lo, kind).data if lo is not None else None
        hi_d = coerce(hi, kind).data if hi is not None else None
        return kind, Interval(lo_d, hi_d, open_tok.type == "LBRACK", close.type == "RBRACK")

    def range_literal(self) -> ValueRange:
        start = self.tok
        if self.at("LBRACK") or self.at("LPAREN"):
            kind, iv = self._interval()
            return ValueRange.from_intervals(kind or Kind.INTEGER, [iv])
        complemented = bool(self.accept("TILDE"))
        self.expect("LBRACE", "'{', '[' or '('")
        if self.at("LBRACK") or self.at("LPAREN"):
            if complemented:
                raise self.error("'~' applies to value sets only", start)
            parts = [self._interval()]
            while self.accept("COMMA"):
                parts.append(self._interval())
            self.expect("RBRACE", "'}'")
            kind = _unify_kinds({k for k, _ in parts if k is not None}, start) or Kind.INTEGER
            ivs = [Interval(*(_coerce_num(x, k, kind) for x in (iv.lo, iv.hi)), iv.lo_closed, iv.hi_closed)
                   for k, iv in parts]
            return ValueRange.from_intervals(kind, ivs)
        values: list[Value] = []
        if not self.at("RBRACE"):
            values.append(self.value())
            while self.accept("COMMA"):
                values.append(self.value())
        self.expect("RBRACE", "'}'")
        kind = _unify_kinds({v.kind for v in values}, start) or Kind.TEXT
        return ValueRange.of_values(kind, [coerce(v, kind) for v in values], complemented=complemented)

    def annotations(self, allowed: tuple[str, ...]) -> dict[str, tuple[str, Token]]:
        out: dict[str, tuple[str, Token]] = {}
        while self.at("AT"):
            at = self.advance()
            name = self.expect_word("annotation name")
            if name.text not in allowed:
                raise self.error(f"annotation @{name.text} is not allowed here; expected one of "
                                 + ", ".join("@" + a for a in allowed), name)
            if name.text in out:
                raise self.error(f"duplicate annotation @{name.text}", name)
            self.expect("EQ", "'='")
            parts = [self._annotation_atom()]
            # only stakeholder lists take several values; elsewhere ',' separates items
            while name.text == "sh" and self.accept("COMMA"):
                parts.append(self._annotation_atom())
            out[name.text] = (",".join(parts), at)
        return out

    def _annotation_atom(self) -> str:
        t = self.tok
        if t.type in ("WORD", "NUMBER"):
            self.advance()
            return t.text
        if t.type == "STRING":
            self.advance()
            return t.value.data
        raise self.error("expected annotation value")

    def lifecycle(self, ann: dict, default: Lifecycle | None) -> Lifecycle | None:
        if "lc" not in ann:
            return default
        text, tok = ann["lc"]
        try:
            return Lifecycle(text)
        except ValueError:
            raise self.error("@lc must be 'dp' or 'eot'", tok) from None

    # -- predicates -------------------------------------------------------------

    def predicate(self, category: Category) -> AttributePredicate:
        name = self.ident("attribute name")
        if self.at_word("in"):
            self.advance()
            value: Value | ValueRange = self.range_literal()
            op = Op.IN
        elif self.tok.type in _OPS:
            op = _OPS[self.advance().type]
            value = self.value()
        else:
            raise self.error("expected a comparison operator (= != < <= > >= in)")
        ann = self.annotations(("issuer", "lc"))
        span = self.span_from(name)
        if self.vocab is not None:
            try:
                entry = self.vocab.entry(category, name.text)
            except UnknownAttribute as e:
                raise UnknownAttribute(e.message, name.span) from None
            try:
                value = _coerce_literal(value, entry.kind)
            except KindMismatch as e:
                raise KindMismatch(f"{name.text}: {e.message}", span) from None
            if op.ordering and not entry.kind.ordered:
                raise KindMismatch(f"operator {op.value} cannot compare {entry.kind.value} attribute {name.text}", span)
        try:
            return AttributePredicate(
                category, name.text, op, value,
                issuer=ann["issuer"][0] if "issuer" in ann else None,
                lifecycle=self.lifecycle(ann, None),
            )
        except KindMismatch as e:
            raise KindMismatch(e.message, span) from None

    def gexpr(self, category: Category) -> Expr:
        items = [self.gterm(category)]
        while self.accept("OR"):
            items.append(self.gterm(category))
        return items[0] if len(items) == 1 else Or(tuple(items))

    def gterm(self, category: Category) -> Expr:
        items = [self.gfactor(category)]
        while self.accept("AND"):
            items.append(self.gfactor(category))
        return items[0] if len(items) == 1 else And(tuple(items))

    def gfactor(self, category: Category) -> Expr:
        if self.accept("NOT"):
            return Not(self.gfactor(category))
        if self.accept("LPAREN"):
            e = self.gexpr(category)
            self.expect("RPAREN", "')'")
            return e
        return Pred(self.predicate(category))

    def group(self, category: Category) -> Expr:
        self.advance()
        self.expect("LPAREN", "'('")
        if self.at("RPAREN"):
            raise self.error(f"{category.value}(...) needs at least one predicate")
        e = self.gexpr(category)
        self.expect("RPAREN", "')'")
        return e

    def cond(self) -> Expr:
        items = [self.cterm()]
        while self.accept("OR"):
            items.append(self.cterm())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def cterm(self) -> Expr:
        items = [self.cfactor()]
        while self.accept("AND"):
            items.append(self.cfactor())
        return items[0] if len(items) == 1 else And(tuple(items))

    def cfactor(self) -> Expr:
        if self.accept("NOT"):
            return Not(self.cfactor())
        if self.accept("LPAREN"):
            e = self.cond()
            self.expect("RPAREN", "')'")
            return e
        if self.at_word("true", "false"):
            return Const(self.advance().text == "true")
        if self.tok.type == "WORD" and self.tok.text in _CATS:
            return self.group(_CATS[self.tok.text])
        raise self.error("expected SAT(...), OAT(...), CNAT(...), true, false, '!' or '('")

    # -- rule components ------------------------------------------------------

    def rights(self, allow_negation: bool = True) -> list[Right]:
        self.keyword("Rt")
        self.expect("LPAREN", "'('")
        if self.at("RPAREN"):
            raise self.error("Rt(...) needs at least one right")
        out = []
        while True:
            neg = self.accept("NOT")
            if neg and not allow_negation:
                raise self.error("negated rights are not allowed here", neg)
            out.append(Right(self.ident("right name").text, bool(neg)))
            if self.accept("AND") or self.accept("OR") or self.accept("COMMA"):
                continue
            break
        self.expect("RPAREN", "')'")
        return out

    def _window_bound(self) -> int:
        t = self.tok
        v = self.value()
        try:
            return coerce(v, Kind.DURATION).data
        except (KindMismatch, ValueError):
            raise self.error("window bounds must be durations", t) from None

    def obligation(self) -> ObligationSpec:
        start = self.tok
        neg = bool(self.accept("NOT"))
        action = self.ident("obligation action").text
        params: dict[str, Value] = {}
        if self.accept("LPAREN"):
            while True:
                pname = self.ident("parameter name")
                if pname.text in params:
                    raise self.error(f"duplicate parameter {pname.text}", pname)
                self.expect("EQ", "'='")
                params[pname.text] = self.value()
                if not self.accept("COMMA"):
                    break
            self.expect("RPAREN", "')'")
        window = None
        if self.at_word("window"):
            self.advance()
            self.expect("LBRACK", "'['")
            ts = self._window_bound()
            self.expect("COMMA", "','")
            te = self._window_bound()
            self.expect("RBRACK", "']'")
            if ts > te:
                raise PolicySyntaxError("obligation window must start before it ends", self.span_from(start))
            window = (ts, te)
        return ObligationSpec(action, tuple(params.items()), window, neg)

    def obligations(self) -> list[ObligationSpec]:
        self.keyword("Ob")
        self.expect("LPAREN", "'('")
        if self.at("RPAREN"):
            raise self.error("Ob(...) needs at least one action")
        out = [self.obligation()]
        while self.accept("AND") or self.accept("OR") or self.accept("COMMA"):
            out.append(self.obligation())
        self.expect("RPAREN", "')'")
        return out

    def restrictions(self) -> list[AttributePredicate]:
        self.keyword("Rn")
        self.expect("LPAREN", "'('")
        if self.at("RPAREN"):
            raise self.error("Rn(...) needs at least one predicate")
        out = [self.restriction()]
        while self.accept("AND") or self.accept("COMMA"):
            out.append(self.restriction())
        if self.at("OR"):
            raise self.error("restrictions are a conjunction; '|' is not allowed in Rn(...)")
        self.expect("RPAREN", "')'")
        return out

    def restriction(self) -> AttributePredicate:
        if not self.accept("NOT"):
            return self.predicate(Category.CNAT)
        wrapped = bool(self.accept("LPAREN"))
        p = self.restriction()
        if wrapped:
            self.expect("RPAREN", "')'")
        return dataclasses.replace(p, negated=not p.negated)

    def rule(self, policy_sh: tuple[str, ...], policy_lc: Lifecycle) -> tuple[Rule, Token]:
        self.keyword("rule")
        rid = self.ident("rule id")
        self.expect("COLON", "':'")
        effect = Effect.DENY if self.accept("NOT") else Effect.PERMIT
        rights = self.rights()
        names = [r.name for r in rights]
        for r in rights:
            if names.count(r.name) > 1 and any(o.negated != r.negated for o in rights if o.name == r.name):
                raise self.error(f"right {r.name} is both granted and negated", rid)
        obls: list[ObligationSpec] = []
        rstrs: list[AttributePredicate] = []
        while self.accept("AND"):
            if self.at_word("Ob"):
                if rstrs:
                    raise self.error("Ob(...) must come before Rn(...)")
                obls.extend(self.obligations())
            elif self.at_word("Rn"):
                rstrs.extend(self.restrictions())
            else:
                raise self.error("expected Ob(...) or Rn(...)")
        self.expect("ARROW", "'<-'")
        raw = self.cond()
        ann = self.annotations(("lc", "sh"))
        self.accept("SEMI")
        try:
            condition = to_dnf(raw, self.vocab)
        except AbucError as e:
            raise type(e)(e.message, self.span_from(rid)) from None
        sh = tuple(ann["sh"][0].split(",")) if "sh" in ann else policy_sh
        return Rule(
            id=rid.text,
            effect=effect,
            rights=tuple(rights),
            condition=condition,
            obligations=tuple(obls),
            restrictions=tuple(rstrs),
            lifecycle=self.lifecycle(ann, policy_lc),
            stakeholders=sh,
        ), rid

    def policy(self) -> Policy:
        self.keyword("policy")
        pid = self.ident("policy id")
        self.keyword("kind")
        kt = self.expect_word("policy kind (RoP, QoP or CSP)")
        try:
            kind = PolicyKind(kt.text)
        except ValueError:
            raise self.error("policy kind must be RoP, QoP or CSP", kt) from None
        ann = self.annotations(("sh", "lc"))
        if "sh" not in ann:
            raise self.error("policy header needs a stakeholder annotation @sh=<id>")
        sh = tuple(ann["sh"][0].split(","))
        lc = self.lifecycle(ann, Lifecycle.DP)
        rules: list[Rule] = []
        seen: dict[str, Token] = {}
        while self.at_word("rule"):
            rule, rid = self.rule(sh, lc)
            if rule.id in seen:
                raise DuplicateRuleId(f"duplicate rule id {rule.id}", rid.span)
            seen[rule.id] = rid
            rules.append(rule)
        return Policy(pid.text, kind, sh, tuple(rules))

    # -- vocabulary -------------------------------------------------------------

    def vocabulary(self) -> Vocabulary:
        entries: dict = {}
        trust: dict[str, frozenset[str]] = {}
        while not self.at("EOF"):
            if self.at_word("trust"):
                self.advance()
                gname = self.ident("trust group name")
                if gname.text in trust:
                    raise DuplicateAttribute(f"duplicate trust group {gname.text}", gname.span)
                self.expect("COLON", "':'")
                self.expect("LBRACE", "'{'")
                members = [self.ident("issuer id").text]
                while self.accept("COMMA"):
                    members.append(self.ident("issuer id").text)
                self.expect("RBRACE", "'}'")
                trust[gname.text] = frozenset(members)
                continue
            if not (self.tok.type == "WORD" and self.tok.text in _CATS):
                raise self.error("expected SAT, OAT, CNAT or trust")
            start = self.advance()
            cat = _CATS[start.text]
            name = self.ident("attribute name")
            if (cat, name.text) in entries:
                raise DuplicateAttribute(f"attribute {cat.value}.{name.text} declared twice", name.span)
            self.expect("COLON", "':'")
            kind, domain = self._kind_spec()
            grid = None
            if self.at_word("grid"):
                self.advance()
                grid = self._grid(kind)
            if domain.is_empty():
                raise EmptyDomain(f"attribute {name.text} has an empty domain", self.span_from(start))
            self.accept("SEMI")
            entries[(cat, name.text)] = AttributeEntry(kind, domain, grid)
        return Vocabulary(entries, trust)

    def _kind_spec(self) -> tuple[Kind, ValueRange]:
        t = self.expect_word("attribute kind")
        if t.text == "enum":
            rng = self.range_literal()
            if rng.kind.ordered and not rng.is_finite():
                raise self.error("enum domains must list values", t)
            return rng.kind, rng
        if t.text == "boolean":
            return Kind.BOOLEAN, ValueRange.universal(Kind.BOOLEAN)
        if t.text == "text":
            if self.at("LBRACE"):
                rng = self.range_literal()
                if rng.kind is not Kind.TEXT:
                    raise self.error("text domains list text values", t)
                return Kind.TEXT, rng
            return Kind.TEXT, ValueRange.universal(Kind.TEXT)
        if t.text in _ORDERED_KINDS:
            kind = _ORDERED_KINDS[t.text]
            if self.at("LBRACK") or self.at("LPAREN") or self.at("LBRACE"):
                return kind, _coerce_literal(self.range_literal(), kind)
            return kind, ValueRange.universal(kind)
        raise self.error("expected enum, boolean, text, integer, decimal, timestamp or duration", t)

    def _grid(self, kind: Kind) -> tuple[Value, ...]:
        if self.accept("LBRACE"):
            vals = [coerce(self.value(), kind)]
            while self.accept("COMMA"):
                vals.append(coerce(self.value(), kind))
            self.expect("RBRACE", "'}'")
            return tuple(sorted(set(vals)))
        start_tok = self.tok
        lo = coerce(self.value(), kind)
        self.expect("DOTDOT", "'..'")
        hi = coerce(self.value(), kind)
        step: Value = Value(kind, 1) if kind is not Kind.DECIMAL else Value.decimal(1)
        if self.at_word("step"):
            self.advance()
            step = coerce(self.value(), kind)
        if not kind.ordered or step.data <= 0:
            raise self.error("grid ranges need an ordered kind and a positive step", start_tok)
        out, x = [], lo.data
        while x <= hi.data:
            out.append(Value(kind, x))
            x += step.data
        return tuple(out)

    def grid_file(self) -> dict:
        """``CAT name : {v, ...}`` or ``CAT name : lo .. hi [step s]`` lines, typed by the vocabulary."""
        out: dict = {}
        while not self.at("EOF"):
            if not (self.tok.type == "WORD" and self.tok.text in _CATS):
                raise self.error("expected SAT, OAT or CNAT")
            cat = _CATS[self.advance().text]
            name = self.ident("attribute name")
            if (cat, name.text) in out:
                raise DuplicateAttribute(f"grid for {cat.value}.{name.text} given twice", name.span)
            kind = None
            if self.vocab is not None:
                try:
                    kind = self.vocab.entry(cat, name.text).kind
                except UnknownAttribute as e:
                    raise UnknownAttribute(e.message, name.span) from None
            self.expect("COLON", "':'")
            if kind is None:
                kind = self.tok.value.kind if self.tok.value is not None else Kind.TEXT
            out[(cat, name.text)] = self._grid(kind)
            self.accept("SEMI")
        return out

    # -- requests ---------------------------------------------------------------

    def request(self) -> Request:
        head = self.keyword("request")
        ann = self.annotations(("t", "sub", "obj"))
        t = 0
        if "t" in ann:
            text, tok = ann["t"]
            try:
                t = int(text)
            except ValueError:
                raise self.error("@t must be an integer timestamp", tok) from None
        assignments: dict = {}
        rights: list[str] = []
        obls: list[ObligationSpec] = []
        while not self.at("EOF"):
            if self.at_word("Rt"):
                rights.extend(r.name for r in self.rights(allow_negation=False))
            elif self.at_word("Ob"):
                obls.extend(self.obligations())
            elif self.tok.type == "WORD" and self.tok.text in _CATS:
                cat = _CATS[self.advance().text]
                self.expect("LPAREN", "'('")
                while True:
                    a, span = self._assignment(cat)
                    if a.key in assignments:
                        raise DuplicateAssignment(f"attribute {cat.value}.{a.attr} assigned twice", span)
                    assignments[a.key] = a
                    if not (self.accept("COMMA") or self.accept("AND")):
                        break
                self.expect("RPAREN", "')'")
            else:
                raise self.error("expected Rt(...), Ob(...), SAT(...), OAT(...) or CNAT(...)")
        if not rights:
            raise PolicySyntaxError("a request must demand at least one right with Rt(...)", head.span)
        return Request(
            tuple(assignments.values()), frozenset(rights), tuple(obls), t,
            subject=ann["sub"][0] if "sub" in ann else None,
            object=ann["obj"][0] if "obj" in ann else None,
        )

    def _assignment(self, cat: Category) -> tuple[Assignment, SourceSpan]:
        name = self.ident("attribute name")
        self.expect("EQ", "'=' (requests assign single values)")
        value = self.value()
        ann = self.annotations(("issuer",))
        if self.vocab is not None:
            try:
                entry = self.vocab.entry(cat, name.text)
            except UnknownAttribute as e:
                raise UnknownAttribute(e.message, name.span) from None
            try:
                value = coerce(value, entry.kind)
            except KindMismatch as e:
                raise KindMismatch(f"{name.text}: {e.message}", self.span_from(name)) from None
        issuer = ann["issuer"][0] if "issuer" in ann else None
        return Assignment(cat, name.text, value, issuer), self.span_from(name)


def _unify_kinds(kinds: set[Kind], tok: Token) -> Kind | None:
    if not kinds:
        return None
    if len(kinds) == 1:
        return next(iter(kinds))
    others = kinds - {Kind.INTEGER}
    if len(others) == 1:
        return next(iter(others))
    raise KindMismatch("mixed value kinds: " + ", ".join(sorted(k.value for k in kinds)), tok.span)


def _coerce_num(x, src: Kind | None, dst: Kind):
    if x is None or src is None or src is dst:
        return x
    return coerce(Value(src, x), dst).data


def _coerce_literal(value: Value | ValueRange, kind: Kind) -> Value | ValueRange:
    if isinstance(value, Value):
        return coerce(value, kind)
    if value.kind is kind:
        return value
    if value.is_empty():
        return ValueRange.empty(kind)
    if value.kind is Kind.INTEGER and kind.ordered:
        return ValueRange.from_intervals(kind, value.intervals)
    raise KindMismatch(f"cannot use a {value.kind.value} range where {kind.value} is expected")


def _run(fn: Callable[[_Parser], object], text: str, file: str, vocab: Vocabulary | None):
    p = _Parser(text, file, vocab)
    result = fn(p)
    p.expect_eof()
    return result


def parse_policy(text: str, vocab: Vocabulary | None = None, file: str = "<policy>") -> Policy:
    """Parse one policy.  With ``vocab``, attributes are resolved and literals typed."""
    return _run(_Parser.policy, text, file, vocab)


def parse_vocabulary(text: str, file: str = "<vocabulary>") -> Vocabulary:
    return _run(_Parser.vocabulary, text, file, None)


def parse_grid(text: str, vocab: Vocabulary | None = None, file: str = "<grid>") -> dict:
    return _run(_Parser.grid_file, text, file, vocab)


def parse_request(text: str, vocab: Vocabulary | None = None, file: str = "<request>") -> Request:
    return _run(_Parser.request, text, file, vocab)


def parse_condition(text: str, vocab: Vocabulary | None = None) -> Condition:
    """Parse a bare condition expression (the part after ``<-``)."""
    return to_dnf(parse_expr(text, vocab), vocab)


def parse_expr(text: str, vocab: Vocabulary | None = None) -> Expr:
    return _run(_Parser.cond, text, "<condition>", vocab)


def parse_predicate(text: str, category: Category = Category.CNAT, vocab: Vocabulary | None = None) -> AttributePredicate:
    return _run(lambda p: p.predicate(category), text, "<predicate>", vocab)


def parse_range(text: str) -> ValueRange:
    return _run(_Parser.range_literal, text, "<range>", None)


__all__ = [
    "parse_policy",
    "parse_vocabulary",
    "parse_request",
    "parse_grid",
    "parse_condition",
    "parse_expr",
    "parse_predicate",
    "parse_range",
]
