"""Definitional clauses: validation, stratification, raising.

A clause  forall x̄, nabla z̄, H := B  defines part of a predicate.  Head
variables bound by nabla are instantiated with distinct fresh nominal
constants at use sites; the forall-variables may never depend on those
(enforced operationally by raising).  No nominal constant may appear in
a clause.

Stratification: predicates get levels in definition order, and a body
occurrence at negative polarity must be of a strictly lower level.
Because bodies can only mention already-defined predicates (or the one
being defined), the only possible violation is a negative occurrence of
the predicate itself; `override` accepts it anyway and records a trust
obligation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import parser as P
from .elab import Elab, Scope, Signature
from .formulas import (
    And,
    Atom,
    Bot,
    Ex,
    All,
    Formula,
    Imp,
    Nab,
    Or,
    Top,
    free_vars_f,
    iter_terms,
    map_terms,
    support_f,
)
from .parser import ParseError
from .terms import (
    Nom,
    OTY,
    Term,
    Ty,
    Var,
    arg_types,
    contains_o,
    fresh_name,
    normalize,
    subst_vars,
    target_type,
)
from .unify import raise_over, t_apps


class DefinitionError(Exception):
    pass


@dataclass
class Clause:
    uvars: list[Var]
    nablas: list[Var]
    head: Atom
    body: Formula

    def var_names(self) -> set[str]:
        return {v.name for v in self.uvars} | {v.name for v in self.nablas}


@dataclass
class DefinedPred:
    name: str
    ty: Ty
    clauses: list[Clause]
    level: int
    override: bool = False


@dataclass
class Definitions:
    preds: dict[str, DefinedPred] = field(default_factory=dict)

    def is_defined(self, name: str) -> bool:
        return name in self.preds

    def clauses_of(self, name: str) -> list[Clause]:
        if name not in self.preds:
            raise DefinitionError(f"predicate {name!r} has no definition")
        return self.preds[name].clauses

    def add(
        self,
        sig: Signature,
        name: str,
        ty: Ty,
        clauses: list[Clause],
        override: bool = False,
    ) -> DefinedPred:
        """Validate and install a definition (sig.preds must already hold it)."""
        if name in self.preds:
            raise DefinitionError(f"predicate {name!r} is already defined")
        if target_type(ty) != OTY:
            raise DefinitionError(f"predicate {name!r} must target o")
        for a in arg_types(ty):
            if contains_o(a):
                raise DefinitionError(f"argument types of {name!r} may not contain o")
        violation = None
        for c in clauses:
            self._check_clause(name, ty, c)
            neg = self._negative_self(name, c.body)
            if neg and violation is None:
                violation = neg
        if violation and not override:
            raise DefinitionError(
                f"stratification violation: {name!r} occurs negatively in its own "
                f"definition (use 'Define override' to accept the obligation)"
            )
        pred = DefinedPred(name, ty, clauses, level=len(self.preds), override=bool(violation))
        self.preds[name] = pred
        return pred

    def _check_clause(self, name: str, ty: Ty, c: Clause) -> None:
        if c.head.pred != name:
            raise DefinitionError(
                f"clause head names {c.head.pred!r}, expected {name!r}"
            )
        if len(c.head.args) != len(arg_types(ty)):
            raise DefinitionError(f"clause head arity mismatch for {name!r}")
        if support_f(c.head) or support_f(c.body):
            raise DefinitionError("no nominal constant may appear in a clause")
        allowed = c.var_names()
        for v in free_vars_f(c.head):
            if v not in allowed:
                raise DefinitionError(f"unbound variable {v!r} in clause head")
        for v in free_vars_f(c.body):
            if v not in allowed:
                raise DefinitionError(f"variable {v!r} of the body is not bound by the head")

    def _negative_self(self, name: str, body: Formula, positive: bool = True) -> Optional[str]:
        match body:
            case Atom(pred, _, _):
                if pred == name and not positive:
                    return pred
                return None
            case And(l, r) | Or(l, r):
                return self._negative_self(name, l, positive) or self._negative_self(
                    name, r, positive
                )
            case Imp(l, r):
                return self._negative_self(name, l, not positive) or self._negative_self(
                    name, r, positive
                )
            case All(_, b, _) | Ex(_, b, _) | Nab(_, b, _):
                return self._negative_self(name, b, positive)
            case _:
                return None


# ---------------------------------------------------------------------------
# Elaborating Define commands

def elaborate_define(sig: Signature, cmd: P.DefineCmd) -> tuple[str, Ty, list[Clause]]:
    name = cmd.name
    if name in sig.consts or name in sig.preds:
        raise ParseError(f"{name!r} is already declared", cmd.line)
    if P.NOMINAL_RE.match(name):
        raise ParseError(f"{name!r} is reserved for nominal constants", cmd.line)
    ty = sig.ty_of_rty(cmd.ty)
    if target_type(ty) != OTY:
        raise ParseError(f"defined predicate {name!r} must have target type o", cmd.line)
    sig.preds[name] = ty
    try:
        clauses = [_elab_clause(sig, name, ty, rc) for rc in cmd.clauses]
    except Exception:
        del sig.preds[name]
        raise
    return name, ty, clauses


def _elab_clause(sig: Signature, name: str, ty: Ty, rc: P.RClause) -> Clause:
    e = Elab(sig, Scope("clause"))
    preseed: dict[str, Var] = {}
    for nb in rc.nablas:
        if nb in preseed:
            raise ParseError(f"repeated nabla variable {nb!r}", rc.line)
        v = Var(nb, e.fresh_ty())
        preseed[nb] = v
    e.scope.preseed = preseed
    head_raw = P.RAtom(rc.head)
    head = e.formula(head_raw, rc.line)
    if not isinstance(head, Atom):
        raise ParseError("clause head must be an atom", rc.line)
    if head.pred != name:
        raise ParseError(f"clause head must use {name!r}", rc.line)
    body = e.formula(rc.body, rc.line) if rc.body is not None else Top()
    head = e.zonk_formula(head, rc.line, "clause head")
    body = e.zonk_formula(body, rc.line, "clause body")
    nablas = [Var(v.name, e.zonk_ty(v.ty, rc.line, v.name)) for v in preseed.values()]
    uvars = [
        Var(v.name, e.zonk_ty(v.ty, rc.line, v.name)) for v in e.universals.values()
    ]
    for nv in nablas:
        if contains_o(nv.ty):
            raise ParseError(f"nabla variable {nv.name!r} has a type containing o", rc.line)
        if nv.name not in free_vars_f(head):
            raise ParseError(f"nabla variable {nv.name!r} must occur in the head", rc.line)
    assert isinstance(head, Atom)
    return Clause(uvars, nablas, head, body)


# ---------------------------------------------------------------------------
# Raising a clause over nominal constants

def raise_clause(c: Clause, noms: list[Nom], avoid_names: set[str]) -> Clause:
    """Replace each forall-variable x by (h ā), h fresh away from avoid_names.

    Variables are renamed apart even when ā is empty, so a clause never
    captures a sequent eigenvariable of the same name.
    """
    mapping: dict[str, Term] = {}
    new_uvars: list[Var] = []
    taken = set(avoid_names) | c.var_names()
    for v in c.uvars:
        if noms:
            h, app = raise_over(Var(fresh_name(v.name, taken), v.ty), noms, taken)
        else:
            h = Var(fresh_name(v.name, taken), v.ty)
            app = h
        taken.add(h.name)
        new_uvars.append(h)
        mapping[v.name] = app
    head = map_terms(c.head, lambda t, _d: normalize(subst_vars(t, mapping)))
    body = map_terms(c.body, lambda t, _d: normalize(subst_vars(t, mapping)))
    assert isinstance(head, Atom)
    return Clause(new_uvars, list(c.nablas), head, body)
