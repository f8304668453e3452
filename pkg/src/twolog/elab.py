"""Elaboration of raw syntax into core terms and formulas.

Monomorphic type inference: every binder and implicitly quantified
variable gets a type metavariable, constant occurrences constrain them,
and everything must resolve to a ground type (otherwise the user is
asked to annotate).  The elaborator also enforces the closedness policy
per context: definition clauses collect capitalized identifiers as
implicit universals, theorem statements must be closed, tactic arguments
resolve names against the focused sequent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import parser as P
from .formulas import (
    ATM,
    FORM,
    NT,
    OLIST,
    All,
    And,
    Atom,
    Bot,
    Eq,
    Ex,
    Formula,
    Imp,
    Nab,
    Or,
    Top,
    map_terms,
    mk_judgment,
)
from .parser import ParseError
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
    contains_o,
    normalize,
)


@dataclass(frozen=True)
class TyMeta(Ty):
    uid: int

    def __repr__(self) -> str:
        return f"?{self.uid}"


F_ATM = Con("f_atm", Arrow(ATM, FORM))
F_AND = Con("f_and", Arrow(FORM, Arrow(FORM, FORM)))
F_IMP = Con("f_imp", Arrow(ATM, Arrow(FORM, FORM)))
TT = Con("tt", FORM)
NIL = Con("nil", OLIST)
CONS = Con("::", Arrow(ATM, Arrow(OLIST, OLIST)))
Z = Con("z", NT)
S = Con("s", Arrow(NT, NT))


def f_all(ty: Ty) -> Con:
    return Con("f_all", Arrow(Arrow(ty, FORM), FORM))


BUILTIN_KINDS = {"nt", "atm", "form", "olist"}
BUILTIN_CONSTS = {c.name: c.ty for c in (TT, NIL, CONS, Z, S, F_ATM, F_AND, F_IMP)}
RESERVED_CONSTS = set(BUILTIN_CONSTS) | {"f_all"}


@dataclass
class Signature:
    """Known base kinds, term constants, and meta-level predicates."""

    kinds: set[str] = field(default_factory=lambda: set(BUILTIN_KINDS))
    consts: dict[str, Ty] = field(default_factory=lambda: dict(BUILTIN_CONSTS))
    preds: dict[str, Ty] = field(default_factory=dict)

    def ty_of_rty(self, rty: P.RTy) -> Ty:
        if isinstance(rty, P.RTyArrow):
            return Arrow(self.ty_of_rty(rty.left), self.ty_of_rty(rty.right))
        if rty.name == "o":
            return OTY
        if rty.name not in self.kinds:
            raise ParseError(f"unknown type {rty.name!r}", rty.line)
        return Base(rty.name)


@dataclass
class Scope:
    """Name resolution context for one elaboration."""

    mode: str  # "clause" | "statement" | "tactic"
    eigen: dict[str, Var] = field(default_factory=dict)
    noms: dict[str, Nom] = field(default_factory=dict)
    preseed: dict[str, Var] = field(default_factory=dict)  # clause nabla vars etc.


class Elab:
    def __init__(self, sig: Signature, scope: Scope):
        self.sig = sig
        self.scope = scope
        self.solution: dict[int, Ty] = {}
        self.counter = 0
        self.universals: dict[str, Var] = {}
        self.binders: list[tuple[str, Ty]] = []  # innermost first

    # -- type metavariables

    def fresh_ty(self) -> Ty:
        self.counter += 1
        return TyMeta(self.counter)

    def find(self, ty: Ty) -> Ty:
        while isinstance(ty, TyMeta) and ty.uid in self.solution:
            ty = self.solution[ty.uid]
        return ty

    def resolve(self, ty: Ty) -> Ty:
        ty = self.find(ty)
        if isinstance(ty, Arrow):
            return Arrow(self.resolve(ty.left), self.resolve(ty.right))
        return ty

    def occurs(self, uid: int, ty: Ty) -> bool:
        ty = self.find(ty)
        if isinstance(ty, TyMeta):
            return ty.uid == uid
        if isinstance(ty, Arrow):
            return self.occurs(uid, ty.left) or self.occurs(uid, ty.right)
        return False

    def unify_ty(self, a: Ty, b: Ty, line: int) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if isinstance(a, TyMeta):
            if self.occurs(a.uid, b):
                raise ParseError("circular type constraint", line)
            self.solution[a.uid] = b
            return
        if isinstance(b, TyMeta):
            self.unify_ty(b, a, line)
            return
        if isinstance(a, Arrow) and isinstance(b, Arrow):
            self.unify_ty(a.left, b.left, line)
            self.unify_ty(a.right, b.right, line)
            return
        raise ParseError(f"type mismatch: {self.resolve(a)!r} vs {self.resolve(b)!r}", line)

    def zonk_ty(self, ty: Ty, line: int, what: str) -> Ty:
        ty = self.find(ty)
        if isinstance(ty, TyMeta):
            raise ParseError(f"cannot infer the type of {what}; add an annotation", line)
        if isinstance(ty, Arrow):
            return Arrow(self.zonk_ty(ty.left, line, what), self.zonk_ty(ty.right, line, what))
        return ty

    # -- name resolution

    def lookup(self, name: str, line: int) -> Term:
        for idx, (bname, bty) in enumerate(self.binders):
            if bname == name:
                return Bd(idx)
        if P.NOMINAL_RE.match(name):
            if self.scope.mode != "tactic":
                raise ParseError(
                    f"nominal constant {name!r} cannot appear here", line
                )
            if name not in self.scope.noms:
                raise ParseError(f"nominal constant {name!r} is not in scope", line)
            return self.scope.noms[name]
        if name in self.scope.preseed:
            return self.scope.preseed[name]
        if name in self.universals:
            return self.universals[name]
        if self.scope.mode == "tactic" and name in self.scope.eigen:
            return self.scope.eigen[name]
        if name in self.sig.consts:
            return Con(name, self.sig.consts[name])
        if name in self.sig.preds:
            return Con(name, self.sig.preds[name])
        if name[0].isupper():
            if self.scope.mode == "clause":
                v = Var(name, self.fresh_ty())
                self.universals[name] = v
                return v
            if self.scope.mode == "statement":
                raise ParseError(
                    f"unbound variable {name!r}: theorem statements must be closed", line
                )
            raise ParseError(f"unknown variable {name!r}", line)
        raise ParseError(f"unknown constant {name!r}", line)

    def binder_ty(self, bty: Optional[Ty], rty: Optional[P.RTy]) -> Ty:
        if rty is not None:
            return self.sig.ty_of_rty(rty)
        return bty if bty is not None else self.fresh_ty()

    # -- terms

    def term(self, raw: P.RTerm, expected: Optional[Ty] = None, line: int = 0) -> tuple[Term, Ty]:
        match raw:
            case P.RName(name, l):
                t = self.lookup(name, l or line)
                ty = self.ty_of(t)
            case P.RApp(fn, arg):
                f, fty = self.term(fn, None, line)
                a_expect = self.fresh_ty()
                r_ty = self.fresh_ty()
                self.unify_ty(fty, Arrow(a_expect, r_ty), line)
                a, _ = self.term(arg, a_expect, line)
                t, ty = App(f, a), r_ty
            case P.RLam(name, rty, body):
                bty = self.binder_ty(None, rty)
                self.binders.insert(0, (name, bty))
                try:
                    b, b_ty = self.term(body, None, line)
                finally:
                    self.binders.pop(0)
                t, ty = Lam(bty, b, hint=name), Arrow(bty, b_ty)
            case P.RCons(hd, tl):
                h, _ = self.term(hd, ATM, line)
                tl_t, _ = self.term(tl, OLIST, line)
                t, ty = App(App(CONS, h), tl_t), OLIST
            case _:
                raise AssertionError(f"bad raw term {raw!r}")
        if expected is not None:
            self.unify_ty(ty, expected, line)
        return t, ty

    def ty_of(self, t: Term) -> Ty:
        match t:
            case Bd(k):
                return self.binders[k][1]
            case Var(_, ty) | Con(_, ty) | Nom(_, ty):
                return ty
        raise AssertionError

    # -- spec-logic goal formulas (terms of type form)

    def gform(self, raw: P.RG, line: int = 0) -> Term:
        match raw:
            case P.RGTT():
                return TT
            case P.RGAnd(l, r):
                return App(App(F_AND, self.gform(l, line)), self.gform(r, line))
            case P.RGImp(l, r):
                if not isinstance(l, P.RGAtm):
                    raise ParseError("left side of => must be atomic in a goal formula", line)
                lt = self.gatom(l, line)
                return App(App(F_IMP, lt), self.gform(r, line))
            case P.RGAll(name, rty, body):
                bty = self.binder_ty(None, rty)
                self.binders.insert(0, (name, bty))
                try:
                    b = self.gform(body, line)
                finally:
                    self.binders.pop(0)
                return App(f_all(bty), Lam(bty, b, hint=name))
            case P.RGAtm():
                return self.gunit(raw, line)
        raise AssertionError(f"bad raw gform {raw!r}")

    def gunit(self, raw: P.RGAtm, line: int) -> Term:
        # a variable-headed goal denotes a whole formula; constants head atoms
        if not raw.explicit:
            head, _ = flatten_rapp(raw.spine)
            if isinstance(head, P.RName):
                name = head.name
                is_var = (
                    any(b == name for b, _ in self.binders)
                    or name in self.scope.preseed
                    or name in self.universals
                    or (self.scope.mode == "tactic" and name in self.scope.eigen)
                    or (
                        name[0].isupper()
                        and name not in self.sig.consts
                        and name not in self.sig.preds
                    )
                )
                if is_var:
                    t, ty = self.term(raw.spine, None, line)
                    self.unify_ty(ty, FORM, line)
                    return t
        return App(F_ATM, self.gatom(raw, line))

    def gatom(self, raw: P.RGAtm, line: int) -> Term:
        t, ty = self.term(raw.spine, None, line)
        self.unify_ty(ty, ATM, line)
        return t

    # -- reasoning formulas

    def formula(self, raw: P.RForm, line: int = 0) -> Formula:
        match raw:
            case P.RTop():
                return Top()
            case P.RBot():
                return Bot()
            case P.RAnd(l, r):
                return And(self.formula(l, line), self.formula(r, line))
            case P.ROr(l, r):
                return Or(self.formula(l, line), self.formula(r, line))
            case P.RImp(l, r):
                return Imp(self.formula(l, line), self.formula(r, line))
            case P.RQuant(kind, binders, body):
                return self.quantified(kind, binders, body, line)
            case P.REq(l, r):
                ty = self.fresh_ty()
                lt, _ = self.term(l, ty, line)
                rt, _ = self.term(r, ty, line)
                return Eq(lt, rt)
            case P.RAtom(spine, ann):
                head, args = flatten_rapp(spine)
                if not isinstance(head, P.RName):
                    raise ParseError("formula atom must start with a predicate", line)
                if head.name not in self.sig.preds:
                    raise ParseError(f"unknown predicate {head.name!r}", head.line or line)
                pred_ty = self.sig.preds[head.name]
                arg_terms = []
                ty: Ty = pred_ty
                for a in args:
                    if not isinstance(ty, Arrow):
                        raise ParseError(f"predicate {head.name!r} applied to too many arguments", line)
                    at, _ = self.term(a, ty.left, line)
                    arg_terms.append(at)
                    ty = ty.right
                if ty != OTY:
                    raise ParseError(f"predicate {head.name!r} is missing arguments", line)
                return Atom(head.name, tuple(arg_terms), ann)
            case P.RJudg(ctx, goal, ann):
                if ctx is None:
                    ctx_t: Term = NIL
                else:
                    ctx_t, _ = self.term(ctx, OLIST, line)
                goal_t = self.gform(goal, line)
                return mk_judgment_shifted(ctx_t, goal_t, ann)
        raise AssertionError(f"bad raw formula {raw!r}")

    def quantified(self, kind, binders, body, line) -> Formula:
        tys = []
        for name, rty in binders:
            bty = self.binder_ty(None, rty)
            tys.append(bty)
            self.binders.insert(0, (name, bty))
        try:
            inner = self.formula(body, line)
        finally:
            del self.binders[: len(binders)]
        ctor = {"forall": All, "exists": Ex, "nabla": Nab}[kind]
        for (name, _), bty in zip(reversed(binders), reversed(tys)):
            inner = ctor(bty, inner, hint=name)
        return inner

    # -- zonking

    def zonk_term(self, t: Term, line: int, what: str) -> Term:
        def z(u: Term) -> Term:
            match u:
                case Var(name, ty):
                    return Var(name, self.zonk_ty(ty, line, name))
                case Con(name, ty):
                    return Con(name, self.zonk_ty(ty, line, name))
                case Nom(idx, ty):
                    return Nom(idx, self.zonk_ty(ty, line, what))
                case App(f, a):
                    return App(z(f), z(a))
                case Lam(ty, body, hint):
                    return Lam(self.zonk_ty(ty, line, hint), z(body), hint)
                case _:
                    return u
        return normalize(z(t))

    def zonk_formula(self, f: Formula, line: int, what: str) -> Formula:
        f = map_terms(f, lambda t, _d: self.zonk_term(t, line, what))

        def fix(g: Formula) -> Formula:
            match g:
                case All(ty, body, hint):
                    return All(self._quant_ty(ty, line, hint), fix(body), hint)
                case Ex(ty, body, hint):
                    return Ex(self._quant_ty(ty, line, hint), fix(body), hint)
                case Nab(ty, body, hint):
                    return Nab(self._quant_ty(ty, line, hint), fix(body), hint)
                case And(l, r):
                    return And(fix(l), fix(r))
                case Or(l, r):
                    return Or(fix(l), fix(r))
                case Imp(l, r):
                    return Imp(fix(l), fix(r))
                case _:
                    return g

        f = fix(f)
        return f

    def _quant_ty(self, ty: Ty, line: int, hint: str) -> Ty:
        ty = self.zonk_ty(ty, line, hint)
        if contains_o(ty):
            raise ParseError(f"quantified type for {hint!r} contains o", line)
        return ty


def mk_judgment_shifted(ctx: Term, goal: Term, ann) -> Formula:
    return mk_judgment(ctx, goal, ann)


def flatten_rapp(raw: P.RTerm) -> tuple[P.RTerm, list[P.RTerm]]:
    args: list[P.RTerm] = []
    while isinstance(raw, P.RApp):
        args.append(raw.arg)
        raw = raw.fn
    args.reverse()
    return raw, args


# ---------------------------------------------------------------------------
# Convenience wrappers

def elab_statement(sig: Signature, raw: P.RForm, line: int = 0) -> Formula:
    e = Elab(sig, Scope("statement"))
    f = e.formula(raw, line)
    return e.zonk_formula(f, line, "statement")


def elab_tactic_formula(
    sig: Signature,
    raw: P.RForm,
    eigen: dict[str, Var],
    noms: dict[str, Nom],
    line: int = 0,
) -> Formula:
    e = Elab(sig, Scope("tactic", eigen=eigen, noms=noms))
    f = e.formula(raw, line)
    return e.zonk_formula(f, line, "formula")


def elab_tactic_term(
    sig: Signature,
    raw: P.RTerm,
    eigen: dict[str, Var],
    noms: dict[str, Nom],
    expected: Optional[Ty] = None,
    line: int = 0,
) -> Term:
    e = Elab(sig, Scope("tactic", eigen=eigen, noms=noms))
    t, _ty = e.term(raw, expected, line)
    return e.zonk_term(t, line, "term")
