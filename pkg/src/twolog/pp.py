"""Printers: human display syntax and the fully parenthesized wire syntax.

Wire output annotates every binder with its type and parenthesizes every
compound subterm, so parsing it back is unambiguous; display output is
the same grammar with minimal parentheses.  Specification-logic formula
constructors (f_atm/f_and/f_imp/f_all/tt) print in clause syntax
(`<A>`, `,`, `=>`, `pi x\\`) wherever a form-typed term appears.
"""

from __future__ import annotations

from typing import Optional

from .formulas import (
    All,
    And,
    Ann,
    Atom,
    Bot,
    Eq,
    Ex,
    Formula,
    Imp,
    Nab,
    Or,
    Top,
    formula_ann,
    free_vars_f,
    match_judgment,
)
from .terms import (
    App,
    Arrow,
    Bd,
    Con,
    Lam,
    Nom,
    Term,
    Ty,
    Var,
    free_vars,
    fresh_name,
    spine,
)


def ty_str(ty: Ty) -> str:
    if isinstance(ty, Arrow):
        left = ty_str(ty.left)
        if isinstance(ty.left, Arrow):
            left = f"({left})"
        return f"{left} -> {ty_str(ty.right)}"
    return ty.name


def ann_str(ann: Optional[Ann]) -> str:
    if ann is None:
        return ""
    return ("*" if ann.star else "@") * ann.gen


# ---------------------------------------------------------------------------
# Terms

def term_str(t: Term, wire: bool = False, bound: tuple[str, ...] = ()) -> str:
    return _term(t, wire, bound, 0)


def _binder_name(hint: str, t_free: set[str], bound: tuple[str, ...]) -> str:
    return fresh_name(hint or "x", t_free | set(bound))


def _is_cons(t: Term) -> bool:
    head, args = spine(t)
    return isinstance(head, Con) and head.name == "::" and len(args) == 2


def _form_head(t: Term) -> Optional[str]:
    head, args = spine(t)
    if isinstance(head, Con) and head.name in ("f_atm", "f_and", "f_imp", "f_all", "tt"):
        return head.name
    return None


# precedence levels: 0 lambda body, 1 cons, 2 application, 3 atom
def _term(t: Term, wire: bool, bound: tuple[str, ...], prec: int) -> str:
    match t:
        case Bd(k):
            return bound[k] if k < len(bound) else f"#{k}"
        case Con(name, _):
            return name
        case Nom():
            return t.name
        case Lam(ty, body, hint):
            nm = _binder_name(hint, set(free_vars(t)), bound)
            binder = f"({nm}:{ty_str(ty)})\\" if wire else f"{nm}\\"
            s = f"{binder} {_term(body, wire, (nm,) + bound, 0)}"
            return f"({s})" if prec > 0 else s
        case App():
            if _form_head(t) is not None:
                return f"({form_str(t, wire, bound)})"
            if _is_cons(t):
                _, (hd, tl) = spine(t)
                s = f"{_term(hd, wire, bound, 2)} :: {_term(tl, wire, bound, 1)}"
                return f"({s})" if prec > 1 or wire else s
            head, args = spine(t)
            parts = [_term(head, wire, bound, 3)] + [_term(a, wire, bound, 3) for a in args]
            s = " ".join(parts)
            return f"({s})" if prec > 2 or (wire and prec > 0) else s
        case Var(name, _):
            return name
        case _:
            raise AssertionError(f"unprintable term {t!r}")


def form_str(t: Term, wire: bool = False, bound: tuple[str, ...] = ()) -> str:
    """Specification-logic formula syntax for a form-typed term."""
    head, args = spine(t)
    if isinstance(head, Con):
        if head.name == "tt" and not args:
            return "tt"
        if head.name == "f_atm" and len(args) == 1:
            inner, _ = spine(args[0])
            if isinstance(inner, Con):
                return _term(args[0], wire, bound, 2 if not wire else 1)
            return f"< {_term(args[0], wire, bound, 0)} >"
        if head.name == "f_and" and len(args) == 2:
            return f"{_paren_gform(args[0], wire, bound)} , {form_str(args[1], wire, bound)}"
        if head.name == "f_imp" and len(args) == 2:
            lhs, _ = spine(args[0])
            if isinstance(lhs, Con):
                left = _term(args[0], wire, bound, 2 if not wire else 1)
            else:
                left = f"< {_term(args[0], wire, bound, 0)} >"
            return f"{left} => {form_str(args[1], wire, bound)}"
        if head.name == "f_all" and len(args) == 1 and isinstance(args[0], Lam):
            lam = args[0]
            nm = _binder_name(lam.hint, set(free_vars(lam)), bound)
            binder = f"pi ({nm}:{ty_str(lam.ty)})\\" if wire else f"pi {nm}\\"
            return f"{binder} {form_str(lam.body, wire, (nm,) + bound)}"
        if head.name == "f_all" and len(args) == 1:
            return f"pi {_term(args[0], wire, bound, 3)}"
    return _raw_spine(t, wire, bound)


def _raw_spine(t: Term, wire: bool, bound: tuple[str, ...]) -> str:
    head, args = spine(t)
    if not args:
        return _term(head, wire, bound, 3)
    parts = [_term(head, wire, bound, 3)] + [_term(a, wire, bound, 3) for a in args]
    return " ".join(parts)


def _paren_gform(t: Term, wire: bool, bound: tuple[str, ...]) -> str:
    s = form_str(t, wire, bound)
    head, _ = spine(t)
    # pi and => extend to the right and must be isolated under a comma
    if isinstance(head, Con) and head.name in ("f_and", "f_imp", "f_all"):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# Formulas

# precedence: 0 top (quantifier bodies), 1 ->, 2 \/, 3 /\, 4 atomic
def formula_str(f: Formula, wire: bool = False, bound: tuple[str, ...] = ()) -> str:
    return _formula(f, wire, bound, 0)


def _formula(f: Formula, wire: bool, bound: tuple[str, ...], prec: int) -> str:
    j = match_judgment(f)
    if j is not None:
        ctx, goal, ann = j
        inner = form_str(goal, wire, bound)
        if isinstance(ctx, Con) and ctx.name == "nil":
            s = "{" + inner + "}"
        else:
            s = "{" + _term(ctx, wire, bound, 1) + " |- " + inner + "}"
        return s + ann_str(ann)
    match f:
        case Top():
            return "true"
        case Bot():
            return "false"
        case Atom(pred, args, ann):
            parts = [pred] + [_term(a, wire, bound, 3) for a in args]
            s = " ".join(parts) + ann_str(ann)
            return f"({s})" if (prec > 3 and args) or (wire and args) else s
        case Eq(l, r):
            s = f"{_term(l, wire, bound, 2)} = {_term(r, wire, bound, 2)}"
            return f"({s})" if prec > 3 or wire else s
        case And(l, r):
            s = f"{_formula(l, wire, bound, 4)} /\\ {_formula(r, wire, bound, 3)}"
            return f"({s})" if prec > 3 or wire else s
        case Or(l, r):
            s = f"{_formula(l, wire, bound, 3)} \\/ {_formula(r, wire, bound, 2)}"
            return f"({s})" if prec > 2 or wire else s
        case Imp(l, r):
            s = f"{_formula(l, wire, bound, 2)} -> {_formula(r, wire, bound, 1)}"
            return f"({s})" if prec > 1 or wire else s
        case All() | Ex() | Nab():
            word = {All: "forall", Ex: "exists", Nab: "nabla"}[type(f)]
            free = set(free_vars_f(f))
            names: list[str] = []
            parts: list[str] = []
            cur: Formula = f
            while type(cur) is type(f):
                nm = fresh_name(cur.hint or "x", free | set(bound) | set(names))
                names.append(nm)
                parts.append(f"({nm}:{ty_str(cur.ty)})" if wire else nm)
                cur = cur.body
                # judgment sugar is an Ex; never absorb it into a prefix
                if match_judgment(cur) is not None:
                    break
            s = f"{word} {' '.join(parts)}, {_formula(cur, wire, tuple(reversed(names)) + bound, 0)}"
            return f"({s})" if prec > 0 else s
    raise AssertionError(f"unprintable formula {f!r}")
