"""Concrete syntax: tokenizer, raw ASTs, commands, and elaboration.

Scripts are sequences of `.`-terminated commands (`%` comments).  Terms
and formulas are parsed to a raw tree and elaborated against the current
signature with monomorphic type inference; capitalized identifiers are
implicitly universally quantified in definition clauses, resolved
against the sequent in tactic arguments, and rejected in theorem
statements (statements must be closed).  Identifiers matching ``n<k>``
are reserved for nominal constants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .formulas import (
    ATM,
    FORM,
    NT,
    OLIST,
    All,
    And,
    Atom,
    Ann,
    Bot,
    Eq,
    Ex,
    Formula,
    Imp,
    Nab,
    Or,
    Top,
    mk_judgment,
)
from .terms import (
    App,
    Arrow,
    Base,
    Bd,
    Con,
    Lam,
    Nom,
    OTY,
    Term,
    Ty,
    Var,
    normalize,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


NOMINAL_RE = re.compile(r"^n[0-9]+$")

_TOKEN_RE = re.compile(
    r"""
    (?P<comment>%[^\n]*)
  | (?P<ws>\s+)
  | (?P<string>"[^"]*")
  | (?P<sym>:=|::|\|-|->|=>|/\\|\\/|[(){}<>,.:;\\=@*_])
  | (?P<ident>[A-Za-z][A-Za-z0-9_']*)
  | (?P<int>[0-9]+)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Tok:
    kind: str
    val: str
    line: int
    start: int = 0
    end: int = 0


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        val = m.group()
        line += val.count("\n")
        pos = m.end()
        if kind in ("comment", "ws"):
            continue
        toks.append(Tok(kind, val, line - val.count("\n"), m.start(), m.end()))
    return toks


# ---------------------------------------------------------------------------
# Raw ASTs

@dataclass
class RName:
    name: str
    line: int = 0


@dataclass
class RApp:
    fn: "RTerm"
    arg: "RTerm"


@dataclass
class RLam:
    name: str
    ty: Optional["RTy"]
    body: "RTerm"


@dataclass
class RCons:
    head: "RTerm"
    tail: "RTerm"


RTerm = RName | RApp | RLam | RCons


@dataclass
class RTyName:
    name: str
    line: int = 0


@dataclass
class RTyArrow:
    left: "RTy"
    right: "RTy"


RTy = RTyName | RTyArrow


# raw spec-logic goal formulas (the G grammar)
@dataclass
class RGAtm:
    spine: RTerm
    explicit: bool = False  # written with <...>


@dataclass
class RGAnd:
    left: "RG"
    right: "RG"


@dataclass
class RGImp:
    # at the G level the left side must elaborate to an atom; the clause
    # (D) level also allows a conjunction here and flattens it
    left: "RG"
    right: "RG"


@dataclass
class RGAll:
    name: str
    ty: Optional[RTy]
    body: "RG"


@dataclass
class RGTT:
    pass


RG = RGAtm | RGAnd | RGImp | RGAll | RGTT


# raw spec-logic program clauses (the D grammar)
@dataclass
class RDAtom:
    spine: RTerm


@dataclass
class RDImp:
    left: RG
    right: "RD"


@dataclass
class RDPi:
    name: str
    ty: Optional[RTy]
    body: "RD"


RD = RDAtom | RDImp | RDPi


# raw reasoning-level formulas
@dataclass
class RTop:
    pass


@dataclass
class RBot:
    pass


@dataclass
class RAnd:
    left: "RForm"
    right: "RForm"


@dataclass
class ROr:
    left: "RForm"
    right: "RForm"


@dataclass
class RImp:
    left: "RForm"
    right: "RForm"


@dataclass
class RQuant:
    kind: str  # forall | exists | nabla
    binders: list[tuple[str, Optional[RTy]]]
    body: "RForm"


@dataclass
class REq:
    left: RTerm
    right: RTerm


@dataclass
class RAtom:
    spine: RTerm
    ann: Optional[Ann] = None


@dataclass
class RJudg:
    ctx: Optional[RTerm]
    goal: RG
    ann: Optional[Ann] = None


RForm = RTop | RBot | RAnd | ROr | RImp | RQuant | REq | RAtom | RJudg


# ---------------------------------------------------------------------------
# Commands

@dataclass
class RClause:
    nablas: list[str]
    head: RTerm
    body: Optional[RForm]
    line: int = 0


@dataclass
class SpecCmd:
    path: str
    line: int = 0


@dataclass
class DefineCmd:
    name: str
    ty: RTy
    clauses: list[RClause]
    override: bool = False
    line: int = 0


@dataclass
class TheoremCmd:
    name: str
    formula: RForm
    line: int = 0


@dataclass
class QedCmd:
    line: int = 0


@dataclass
class SetCmd:
    option: str
    value: str
    line: int = 0


@dataclass
class QuitCmd:
    line: int = 0


@dataclass
class TacticCmd:
    name: str
    line: int = 0
    hyps: list[str] = field(default_factory=list)
    lemma: Optional[str] = None
    number: Optional[int] = None
    term: Optional[RTerm] = None
    formula: Optional[RForm] = None
    withs: list[tuple[str, RTerm]] = field(default_factory=list)
    nom: Optional[str] = None


Command = SpecCmd | DefineCmd | TheoremCmd | QedCmd | SetCmd | QuitCmd | TacticCmd


# spec files
@dataclass
class SpecFile:
    kinds: list[str]
    decls: list[tuple[str, RTy, int]]
    clauses: list[tuple[RD, int]]


# ---------------------------------------------------------------------------
# Parser

TACTICS = {
    "intros", "case", "apply", "induction", "exists", "split", "left",
    "right", "unfold", "assert", "search", "inst", "cut", "monotone",
    "undo", "abort",
}


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.pos = 0

    def commands_with_source(self) -> Iterator[tuple[Command, str]]:
        while not self.done():
            start_tok = self.peek()
            cmd = self.command()
            end_tok = self.toks[self.pos - 1]
            yield cmd, self.text[start_tok.start : end_tok.end]

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Optional[Tok]:
        i = self.pos + ahead
        return self.toks[i] if i < len(self.toks) else None

    def at(self, val: str) -> bool:
        t = self.peek()
        return t is not None and t.val == val

    def next(self) -> Tok:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input", self.line())
        self.pos += 1
        return t

    def expect(self, val: str) -> Tok:
        t = self.next()
        if t.val != val:
            raise ParseError(f"expected {val!r}, found {t.val!r}", t.line)
        return t

    def line(self) -> int:
        t = self.peek()
        if t:
            return t.line
        return self.toks[-1].line if self.toks else 0

    def ident(self) -> str:
        t = self.next()
        if t.kind != "ident":
            raise ParseError(f"expected identifier, found {t.val!r}", t.line)
        return t.val

    def done(self) -> bool:
        return self.pos >= len(self.toks)

    # -- types

    def ty(self) -> RTy:
        left = self.ty_atom()
        if self.at("->"):
            self.next()
            return RTyArrow(left, self.ty())
        return left

    def ty_atom(self) -> RTy:
        t = self.next()
        if t.val == "(":
            inner = self.ty()
            self.expect(")")
            return inner
        if t.kind != "ident":
            raise ParseError(f"expected type, found {t.val!r}", t.line)
        return RTyName(t.val, t.line)

    # -- terms

    def term(self) -> RTerm:
        # binder?
        t = self.peek()
        if t and t.kind == "ident" and self.peek(1) and self.peek(1).val == "\\":
            name = self.ident()
            self.expect("\\")
            return RLam(name, None, self.term())
        if (
            t
            and t.val == "("
            and self.peek(1)
            and self.peek(1).kind == "ident"
            and self.peek(2)
            and self.peek(2).val == ":"
        ):
            # could be an annotated binder "(x:ty)\ t" — try it, else backtrack
            save = self.pos
            self.next()
            name = self.ident()
            self.expect(":")
            ty = self.ty()
            if self.at(")") and self.peek(1) and self.peek(1).val == "\\":
                self.next()
                self.next()
                return RLam(name, ty, self.term())
            self.pos = save
        return self.cons_term()

    def cons_term(self) -> RTerm:
        left = self.app_term()
        if self.at("::"):
            self.next()
            return RCons(left, self.cons_term())
        return left

    def app_term(self) -> RTerm:
        t = self.atom_term()
        while True:
            nxt = self.peek()
            if nxt and (nxt.kind in ("ident", "int") or nxt.val == "("):
                # an annotated binder cannot start an argument; atom_term handles "("
                t = RApp(t, self.atom_term())
            else:
                return t

    def atom_term(self) -> RTerm:
        t = self.next()
        if t.val == "(":
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "ident":
            if self.peek() and self.peek().val == "\\":
                self.next()
                return RLam(t.val, None, self.term())
            return RName(t.val, t.line)
        raise ParseError(f"expected term, found {t.val!r}", t.line)

    # -- spec-logic goal formulas
    # precedence: "," binds tighter than "=>"; both right-associative

    def gform(self) -> RG:
        left = self.gconj()
        if self.at("=>"):
            self.next()
            return RGImp(left, self.gform())
        return left

    def gconj(self) -> RG:
        left = self.gprim()
        if self.at(","):
            self.next()
            return RGAnd(left, self.gconj())
        return left

    def gprim(self) -> RG:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input in spec formula", self.line())
        if t.val == "pi":
            self.next()
            if self.at("("):
                self.next()
                name = self.ident()
                self.expect(":")
                ty = self.ty()
                self.expect(")")
            else:
                name = self.ident()
                ty = None
            self.expect("\\")
            return RGAll(name, ty, self.gform())
        if t.val == "tt":
            self.next()
            return RGTT()
        if t.val == "<":
            self.next()
            spine = self.term()
            self.expect(">")
            return RGAtm(spine, explicit=True)
        if t.val == "(":
            self.next()
            inner = self.gform()
            self.expect(")")
            return inner
        return RGAtm(self.app_term())

    # -- spec-logic program clauses (reinterpret a parsed G as a D spine)

    def dform(self) -> RD:
        g = self.gform()
        return self._g_to_d(g)

    def _g_to_d(self, g: RG) -> RD:
        if isinstance(g, RGImp):
            return RDImp(g.left, self._g_to_d(g.right))
        if isinstance(g, RGAll):
            return RDPi(g.name, g.ty, self._g_to_d(g.body))
        if isinstance(g, RGAtm):
            if g.explicit:
                raise ParseError("program clause head must be a plain atom", self.line())
            return RDAtom(g.spine)
        raise ParseError("program clause head must be atomic", self.line())

    # -- reasoning formulas

    def formula(self) -> RForm:
        t = self.peek()
        if t and t.val in ("forall", "exists", "nabla"):
            self.next()
            binders: list[tuple[str, Optional[RTy]]] = []
            while True:
                nt = self.peek()
                if nt is None:
                    raise ParseError("unexpected end of quantifier", self.line())
                if nt.val == ",":
                    break
                if nt.val == "(":
                    self.next()
                    name = self.ident()
                    self.expect(":")
                    ty = self.ty()
                    self.expect(")")
                    binders.append((name, ty))
                else:
                    binders.append((self.ident(), None))
            if not binders:
                raise ParseError("quantifier needs at least one variable", self.line())
            self.expect(",")
            return RQuant(t.val, binders, self.formula())
        return self.imp_formula()

    def imp_formula(self) -> RForm:
        left = self.or_formula()
        if self.at("->"):
            self.next()
            return RImp(left, self.formula())
        return left

    def or_formula(self) -> RForm:
        left = self.and_formula()
        if self.at("\\/"):
            self.next()
            return ROr(left, self.or_formula())
        return left

    def and_formula(self) -> RForm:
        left = self.base_formula()
        if self.at("/\\"):
            self.next()
            return RAnd(left, self.and_formula())
        return left

    def annotation(self) -> Optional[Ann]:
        if self.at("@") or self.at("*"):
            tok = self.next()
            gen = 1
            while self.at(tok.val):
                self.next()
                gen += 1
            return Ann(star=(tok.val == "*"), gen=gen)
        return None

    def base_formula(self) -> RForm:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of formula", self.line())
        if t.val == "true":
            self.next()
            return RTop()
        if t.val == "false":
            self.next()
            return RBot()
        if t.val == "{":
            self.next()
            # judgment: optional "ctx |-" then a goal formula
            save = self.pos
            ctx: Optional[RTerm] = None
            try:
                maybe_ctx = self.term()
                if self.at("|-"):
                    self.next()
                    ctx = maybe_ctx
                else:
                    self.pos = save
            except ParseError:
                self.pos = save
            goal = self.gform()
            self.expect("}")
            ann = self.annotation()
            return RJudg(ctx, goal, ann)
        if t.val == "(":
            # parenthesized formula or a parenthesized term starting an atom/eq
            save = self.pos
            try:
                self.next()
                inner = self.formula()
                self.expect(")")
                # a parenthesized *term* would be followed by '=' or more term
                nxt = self.peek()
                if nxt and (nxt.val == "=" or nxt.kind in ("ident", "int")):
                    raise ParseError("term context", t.line)
                return inner
            except ParseError:
                self.pos = save
        left = self.term()
        if self.at("="):
            self.next()
            right = self.term()
            return REq(left, right)
        ann = self.annotation()
        return RAtom(left, ann)

    # -- commands

    def commands(self) -> Iterator[Command]:
        while not self.done():
            yield self.command()

    def command(self) -> Command:
        t = self.peek()
        assert t is not None
        if t.kind == "ident" and t.val in TACTICS:
            cmd = self.tactic()
        elif t.val == "Specification":
            self.next()
            s = self.next()
            if s.kind != "string":
                raise ParseError("Specification expects a quoted path", s.line)
            cmd = SpecCmd(s.val.strip('"'), t.line)
        elif t.val == "Define":
            cmd = self.define()
        elif t.val == "Theorem":
            self.next()
            name = self.ident()
            self.expect(":")
            cmd = TheoremCmd(name, self.formula(), t.line)
        elif t.val == "qed" or t.val == "Qed":
            self.next()
            cmd = QedCmd(t.line)
        elif t.val == "Set":
            self.next()
            opt = self.ident()
            val = self.next().val
            cmd = SetCmd(opt, val, t.line)
        elif t.val == "Quit":
            self.next()
            cmd = QuitCmd(t.line)
        else:
            raise ParseError(f"unknown command {t.val!r}", t.line)
        self.expect(".")
        return cmd

    def define(self) -> DefineCmd:
        start = self.expect("Define")
        override = False
        if self.at("override"):
            self.next()
            override = True
        name = self.ident()
        self.expect(":")
        ty = self.ty()
        if self.next().val != "by":
            raise ParseError("expected 'by' in Define", self.line())
        clauses = [self.define_clause()]
        while self.at(";"):
            self.next()
            clauses.append(self.define_clause())
        return DefineCmd(name, ty, clauses, override, start.line)

    def define_clause(self) -> RClause:
        line = self.line()
        nablas: list[str] = []
        if self.at("nabla"):
            self.next()
            while not self.at(","):
                nablas.append(self.ident())
            self.expect(",")
        head = self.app_term()
        body: Optional[RForm] = None
        if self.at(":="):
            self.next()
            body = self.formula()
        return RClause(nablas, head, body, line)

    def tactic(self) -> TacticCmd:
        t = self.next()
        cmd = TacticCmd(t.val, t.line)
        name = t.val
        if name in ("intros", "split", "left", "right", "undo", "abort"):
            return cmd
        if name == "case":
            cmd.hyps = [self.ident()]
            return cmd
        if name == "induction":
            if self.next().val != "on":
                raise ParseError("expected 'on' after induction", t.line)
            n = self.next()
            if n.kind != "int":
                raise ParseError("induction on <antecedent number>", n.line)
            cmd.number = int(n.val)
            return cmd
        if name == "apply":
            cmd.lemma = self.ident()
            if self.at("to"):
                self.next()
                while True:
                    nt = self.peek()
                    if nt is None or nt.val in (".", "with"):
                        break
                    if nt.val == "_":
                        self.next()
                        cmd.hyps.append("_")
                    else:
                        cmd.hyps.append(self.ident())
            if self.at("with"):
                self.next()
                while True:
                    var = self.ident()
                    self.expect("=")
                    cmd.withs.append((var, self.term()))
                    if self.at(","):
                        self.next()
                        continue
                    break
            return cmd
        if name == "exists":
            cmd.term = self.term()
            return cmd
        if name == "unfold":
            if self.peek() and self.peek().kind == "int":
                cmd.number = int(self.next().val)
            return cmd
        if name == "assert":
            cmd.formula = self.formula()
            return cmd
        if name == "search":
            if self.peek() and self.peek().kind == "int":
                cmd.number = int(self.next().val)
            return cmd
        if name == "inst":
            cmd.hyps = [self.ident()]
            if self.next().val != "with":
                raise ParseError("expected 'with' in inst", t.line)
            save = self.pos
            nt = self.peek()
            if (
                nt is not None
                and nt.kind == "ident"
                and NOMINAL_RE.match(nt.val)
                and self.peek(1)
                and self.peek(1).val == "="
            ):
                cmd.nom = self.ident()
                self.expect("=")
            else:
                self.pos = save
            cmd.term = self.term()
            return cmd
        if name == "cut":
            cmd.hyps = [self.ident(), self.ident()]
            return cmd
        if name == "monotone":
            cmd.hyps = [self.ident()]
            if self.next().val != "with":
                raise ParseError("expected 'with' in monotone", t.line)
            cmd.term = self.term()
            return cmd
        raise ParseError(f"unhandled tactic {name}", t.line)

    # -- spec files

    def spec_file(self) -> SpecFile:
        kinds: list[str] = []
        decls: list[tuple[str, RTy, int]] = []
        clauses: list[tuple[RD, int]] = []
        while not self.done():
            t = self.peek()
            assert t is not None
            if t.val == "kind":
                self.next()
                kinds.append(self.ident())
                while self.at(","):
                    self.next()
                    kinds.append(self.ident())
            elif (
                t.kind == "ident"
                and self.peek(1) is not None
                and self.peek(1).val == ":"
            ):
                name = self.ident()
                self.expect(":")
                decls.append((name, self.ty(), t.line))
            else:
                clauses.append((self.dform(), t.line))
            self.expect(".")
        return SpecFile(kinds, decls, clauses)


def parse_commands(text: str) -> list[Command]:
    return list(Parser(text).commands())


def parse_spec_file(text: str) -> SpecFile:
    return Parser(text).spec_file()


def parse_formula_text(text: str) -> RForm:
    p = Parser(text)
    f = p.formula()
    if not p.done():
        raise ParseError(f"trailing input after formula: {p.peek().val!r}", p.line())
    return f


def parse_term_text(text: str) -> RTerm:
    p = Parser(text)
    t = p.term()
    if not p.done():
        raise ParseError(f"trailing input after term: {p.peek().val!r}", p.line())
    return t
