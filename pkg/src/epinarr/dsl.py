"""Reader and writer for the textual ``.biopepa`` dialect.

Grammar (statements end with ``;`` except events and the system equation)::

    model NAME;
    location NAME [in NAME] : size = EXPR, type = compartment|membrane;
    NAME = NUMBER [in ACTION];                  parameter (local to ACTION)
    NAME = EXPR;                                functional rate or derived parameter
    NAME = PREFIX (+ PREFIX)*;                  species component
    NAME = ();                                  species component taking no part
    event NAME at NUMBER { NAME = EXPR (, NAME = EXPR)* }
    COMP (<*> COMP)*                            system equation, last

    PREFIX := (ACTION, INT) OP NAME[@LOCATION]
    OP     := <<  reactant | >>  product | (+) activator
            | (-) inhibitor | (.) generic modifier
    COMP   := NAME[@LOCATION][[NUMBER]]         or () for an empty system

``NAME = EXPR`` is a functional rate when NAME is used as an action in some
prefix; otherwise a numeric literal makes a parameter and any other
expression is folded into a parameter over earlier parameters.
Comments run from ``//`` to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import EpinarrError, ParseError
from .expr import (
    OPERATORS, Expr, Number, Sub, Symbol, eval_expr, format_number, to_infix,
)
from .model import (
    DEFAULT_MODEL_NAME, Event, FunctionalRate, Location, LocationKind, Model,
    Parameter, Prefix, Role, SpeciesComponent, SpeciesInstance,
)

ROLE_TOKENS = {
    "<<": Role.REACTANT,
    ">>": Role.PRODUCT,
    "(+)": Role.ACTIVATOR,
    "(-)": Role.INHIBITOR,
    "(.)": Role.GENERIC_MODIFIER,
}
ROLE_SYMBOLS = {role: tok for tok, role in ROLE_TOKENS.items()}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\n\f\v]+|//[^\n]*)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><\*>|<<|>>|\(\+\)|\(-\)|\(\.\)|[()\[\]{},;:=+\-*/^@])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str        # 'number', 'ident', 'op', 'eof'
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    source = source.replace("\r\n", "\n").replace("\r", "\n")
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1,
                             f"unexpected character {source[pos]!r}")
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0
        self.open_parens: list[Token] = []

    # --- token helpers ---

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, message: str, expected: Optional[str] = None,
              tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        if tok.kind == "eof" and self.open_parens:
            opener = self.open_parens[-1]
            return ParseError(opener.line, opener.column,
                              "unbalanced parenthesis", "')'")
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(tok.line, tok.column, f"{message}, found {found}", expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}", repr(text))
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}", what)
        return self.advance()

    def open(self) -> None:
        self.open_parens.append(self.expect("("))

    def close(self) -> None:
        if not self.at(")"):
            opener = self.open_parens[-1]
            raise ParseError(opener.line, opener.column, "unbalanced parenthesis",
                             "')'")
        self.advance()
        self.open_parens.pop()

    def number(self) -> float:
        sign = 1.0
        if self.at("-"):
            self.advance()
            sign = -1.0
        if self.tok.kind != "number":
            raise self.error("expected a number", "number")
        return sign * float(self.advance().text)

    # --- expressions ---

    def expr(self) -> Expr:
        node = self.term()
        while self.at("+") or self.at("-"):
            op = OPERATORS[self.advance().text]
            node = op(node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = OPERATORS[self.advance().text]
            node = op(node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            return Sub(Number(0.0), self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.advance()
            return OPERATORS["^"](base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Number(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            return Symbol(tok.text)
        if self.at("("):
            self.open()
            node = self.expr()
            self.close()
            return node
        raise self.error("expected an expression", "expression")

    # --- statements ---

    def parse_model(self, default_name: str) -> Model:
        name = default_name
        locations, events, instances = [], [], []
        assignments = []     # (kind, name token, payload, local reaction)
        defined: dict[tuple[str, str], Token] = {}

        def define(space: str, tok: Token):
            key = (space, tok.text)
            if key in defined:
                first = defined[key]
                raise ParseError(tok.line, tok.column,
                                 f"duplicate definition of {tok.text!r} (first defined at "
                                 f"line {first.line}, column {first.column})",
                                 related=(first.line, first.column))
            defined[key] = tok

        saw_system = False
        while self.tok.kind != "eof":
            if saw_system:
                raise self.error("the system equation must be the last statement",
                                 "end of input")
            tok = self.tok
            nxt = self.peek()
            if tok.kind == "ident" and tok.text == "model" and nxt.kind == "ident":
                self.advance()
                name = self.advance().text
                self.expect(";")
            elif (tok.kind == "ident" and tok.text == "location" and nxt.kind == "ident"
                  and self.peek(2).text in ("in", ":")):
                loc, name_tok = self.location()
                define("location", name_tok)
                locations.append(loc)
            elif (tok.kind == "ident" and tok.text == "event" and nxt.kind == "ident"
                  and self.peek(2).text == "at"):
                ev, name_tok = self.event()
                define("event", name_tok)
                events.append(ev)
            elif tok.kind == "ident" and nxt.text == "=" and nxt.kind == "op":
                define("name", tok)
                assignments.append(self.assignment())
            else:
                instances = self.system_equation()
                saw_system = True

        seen_instances: dict[tuple, Token] = {}
        for inst, tok in instances:
            key = (inst.species, inst.location)
            if key in seen_instances:
                first = seen_instances[key]
                raise ParseError(tok.line, tok.column,
                                 f"duplicate species instance {inst.global_id!r} (first at "
                                 f"line {first.line}, column {first.column})",
                                 related=(first.line, first.column))
            seen_instances[key] = tok

        actions = {p.action for kind, _, payload, _ in assignments if kind == "component"
                   for p in payload}
        parameters, rates, components = [], [], []
        env: dict[str, float] = {}
        for kind, tok, payload, extra in assignments:
            if kind == "component":
                components.append(SpeciesComponent(tok.text, tuple(payload)))
            elif tok.text in actions and extra is None:
                rates.append(FunctionalRate(tok.text, payload))
            else:
                try:
                    value = eval_expr(payload, env)
                except EpinarrError as exc:
                    raise ParseError(tok.line, tok.column,
                                     f"{tok.text!r} is not used as an action, so its value "
                                     f"must be a constant over earlier parameters ({exc})")
                try:
                    parameters.append(Parameter(tok.text, value, extra))
                except ValueError as exc:
                    raise ParseError(tok.line, tok.column, str(exc))
                env[tok.text] = value
        return Model(name=name, locations=locations, parameters=parameters,
                     functional_rates=rates, species_components=components,
                     system_equation=[inst for inst, _ in instances], events=events)

    def location(self):
        self.advance()  # 'location'
        name_tok = self.expect_ident("location name")
        parent = None
        if self.at("in"):
            self.advance()
            parent = self.expect_ident("parent location").text
        self.expect(":")
        self.expect("size")
        self.expect("=")
        size = self.expr()
        self.expect(",")
        self.expect("type")
        self.expect("=")
        kind_tok = self.expect_ident("'compartment' or 'membrane'")
        kinds = {"compartment": LocationKind.COMPARTMENT, "membrane": LocationKind.MEMBRANE}
        if kind_tok.text not in kinds:
            raise self.error("unknown location type", "'compartment' or 'membrane'",
                             tok=kind_tok)
        self.expect(";")
        return Location(name_tok.text, parent, size, kinds[kind_tok.text]), name_tok

    def event(self):
        self.advance()  # 'event'
        name_tok = self.expect_ident("event name")
        self.expect("at")
        time_tok = self.tok
        t = self.number()
        if t < 0:
            raise self.error("trigger time must be nonnegative", tok=time_tok)
        self.expect("{")
        assigns = []
        while True:
            target = self.expect_ident("assignment target").text
            self.expect("=")
            assigns.append((target, self.expr()))
            if self.at(","):
                self.advance()
                continue
            break
        self.expect("}")
        return Event(name_tok.text, t, tuple(assigns)), name_tok

    def assignment(self):
        name_tok = self.advance()
        self.advance()  # '='
        if self.at("(") and self.peek().text == ")" and self.peek(2).text == ";":
            for _ in range(3):
                self.advance()
            return "component", name_tok, [], None
        if self.at("(") and self.peek().kind == "ident" and self.peek(2).text == ",":
            prefixes = [self.prefix(name_tok.text)]
            while self.at("+"):
                self.advance()
                prefixes.append(self.prefix(name_tok.text))
            seen = {}
            for p, tok in prefixes:
                if (p.action, p.location) in seen:
                    raise ParseError(tok.line, tok.column,
                                     f"species {name_tok.text!r} already takes part in "
                                     f"action {p.action!r}",
                                     related=(seen[(p.action, p.location)].line,
                                              seen[(p.action, p.location)].column))
                seen[(p.action, p.location)] = tok
            self.expect(";")
            return "component", name_tok, [p for p, _ in prefixes], None
        # parameter with a literal value, optionally local to a reaction
        if (self.tok.kind == "number" or (self.at("-") and self.peek().kind == "number")):
            save = self.i
            value = self.number()
            if self.at("in") and self.peek().kind == "ident":
                self.advance()
                reaction = self.advance().text
                self.expect(";")
                return "value", name_tok, Number(value), reaction
            if self.at(";"):
                self.advance()
                return "value", name_tok, Number(value), None
            self.i = save
        law = self.expr()
        self.expect(";")
        return "expr", name_tok, law, None

    def prefix(self, component: str):
        start = self.tok
        self.open()
        action = self.expect_ident("action name").text
        self.expect(",")
        k_tok = self.tok
        if k_tok.kind != "number":
            raise self.error("expected a stoichiometry", "positive integer")
        k = float(self.advance().text)
        if not k.is_integer() or k < 1:
            raise self.error("stoichiometry must be a positive integer",
                             "positive integer", tok=k_tok)
        self.close()
        op_tok = self.tok
        if op_tok.text not in ROLE_TOKENS or op_tok.kind != "op":
            raise self.error("expected a role operator", "<<, >>, (+), (-) or (.)")
        self.advance()
        target = self.expect_ident("species name")
        if target.text != component:
            raise self.error(f"prefix must act on the species being defined "
                             f"({component!r})", repr(component), tok=target)
        location = None
        if self.at("@"):
            self.advance()
            location = self.expect_ident("location name").text
        return Prefix(action, int(k), ROLE_TOKENS[op_tok.text], location), start

    def system_equation(self):
        if self.at("(") and self.peek().text == ")":
            self.advance()
            self.advance()
            if self.tok.kind != "eof":
                raise self.error("expected end of input", "end of input")
            return []
        items = [self.species_instance()]
        while self.at("<*>"):
            self.advance()
            items.append(self.species_instance())
        if self.tok.kind != "eof":
            raise self.error("expected '<*>' or end of input", "'<*>'")
        return items

    def species_instance(self):
        tok = self.expect_ident("species name or statement")
        location = None
        amount = None
        if self.at("@"):
            self.advance()
            location = self.expect_ident("location name").text
        if self.at("["):
            self.advance()
            amt_tok = self.tok
            amount = self.number()
            if amount < 0:
                raise self.error("initial amount must be nonnegative", tok=amt_tok)
            self.expect("]")
        return SpeciesInstance(tok.text, location, amount), tok


def parse_model(source: str, name: str = DEFAULT_MODEL_NAME) -> Model:
    """Parse ``.biopepa`` text.  ``name`` is used unless the text has a
    ``model NAME;`` header."""
    return _Parser(source).parse_model(name)


def parse_expr(source: str) -> Expr:
    p = _Parser(source)
    node = p.expr()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input", "end of input")
    return node


# --- rendering ---------------------------------------------------------------

def render_location(loc: Location) -> str:
    parent = f" in {loc.parent}" if loc.parent is not None else ""
    kind = "membrane" if loc.kind is LocationKind.MEMBRANE else "compartment"
    return f"location {loc.name}{parent} : size = {to_infix(loc.size)}, type = {kind};"


def render_prefix(component: str, p: Prefix) -> str:
    where = f"@{p.location}" if p.location else ""
    return f"({p.action}, {p.stoichiometry}) {ROLE_SYMBOLS[p.role]} {component}{where}"


def render_instance(s: SpeciesInstance) -> str:
    text = s.species
    if s.location:
        text += f"@{s.location}"
    if s.initial_amount is not None:
        text += f"[{format_number(s.initial_amount)}]"
    return text


def render_model(model: Model) -> str:
    lines = []
    if model.name != DEFAULT_MODEL_NAME:
        lines += [f"model {model.name};", ""]
    if model.locations:
        lines += [render_location(l) for l in model.locations] + [""]
    if model.parameters:
        for p in model.parameters:
            local = f" in {p.reaction}" if p.reaction is not None else ""
            lines.append(f"{p.name} = {format_number(p.value)}{local};")
        lines.append("")
    if model.functional_rates:
        lines += [f"{r.action} = {to_infix(r.law)};" for r in model.functional_rates] + [""]
    if model.species_components:
        for c in model.species_components:
            body = " + ".join(render_prefix(c.name, p) for p in c.prefixes) or "()"
            lines.append(f"{c.name} = {body};")
        lines.append("")
    for ev in model.events:
        body = ", ".join(f"{t} = {to_infix(v)}" for t, v in ev.assignments)
        lines.append(f"event {ev.name} at {format_number(ev.trigger_time)} {{ {body} }}")
    if model.events:
        lines.append("")
    if model.system_equation:
        lines.append(" <*> ".join(render_instance(s) for s in model.system_equation))
    else:
        lines.append("()")
    return "\n".join(lines) + "\n"
