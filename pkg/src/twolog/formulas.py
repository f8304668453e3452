"""Reasoning-level formulas.

Quantifiers bind term-level variables with de Bruijn indices shared
between the formula spine and the terms inside atoms and equations.
Atoms of defined predicates may carry an induction annotation (`@` for
"equal to the measure", `*` for "strictly smaller"), with a generation
counter so nested inductions stay separate.

The specification-judgment sugar  {L |- G}  abbreviates the formula
exists n, nat n /\ seq n L G; its annotation lives on the seq atom.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional

from .terms import (
    Base,
    Bd,
    Nom,
    Perm,
    Term,
    Ty,
    apply_perm,
    free_vars as term_free_vars,
    normalize,
    shift,
    inst_bound,
    sorted_noms,
    subst_vars,
    support as term_support,
    ty_key,
)

NT = Base("nt")
ATM = Base("atm")
FORM = Base("form")
OLIST = Base("olist")


@dataclass(frozen=True)
class Ann:
    """Induction measure annotation: '@' (equal) or '*' (smaller)."""

    star: bool
    gen: int = 1

    def __repr__(self) -> str:
        return ("*" if self.star else "@") * self.gen


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class All(Formula):
    ty: Ty
    body: Formula
    hint: str = field(default="x", compare=False, hash=False)


@dataclass(frozen=True)
class Ex(Formula):
    ty: Ty
    body: Formula
    hint: str = field(default="x", compare=False, hash=False)


@dataclass(frozen=True)
class Nab(Formula):
    ty: Ty
    body: Formula
    hint: str = field(default="x", compare=False, hash=False)


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple[Term, ...]
    ann: Optional[Ann] = None


TRUE = Top()
FALSE = Bot()

_QUANT = {All: All, Ex: Ex, Nab: Nab}


def conj(parts: list[Formula]) -> Formula:
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


# ---------------------------------------------------------------------------
# Generic traversal over the terms inside a formula

def map_terms(f: Formula, fn: Callable[[Term, int], Term], depth: int = 0) -> Formula:
    match f:
        case Top() | Bot():
            return f
        case And(l, r):
            return And(map_terms(l, fn, depth), map_terms(r, fn, depth))
        case Or(l, r):
            return Or(map_terms(l, fn, depth), map_terms(r, fn, depth))
        case Imp(l, r):
            return Imp(map_terms(l, fn, depth), map_terms(r, fn, depth))
        case All(ty, body, hint):
            return All(ty, map_terms(body, fn, depth + 1), hint)
        case Ex(ty, body, hint):
            return Ex(ty, map_terms(body, fn, depth + 1), hint)
        case Nab(ty, body, hint):
            return Nab(ty, map_terms(body, fn, depth + 1), hint)
        case Eq(l, r):
            return Eq(fn(l, depth), fn(r, depth))
        case Atom(pred, args, ann):
            return Atom(pred, tuple(fn(a, depth) for a in args), ann)
    raise AssertionError(f"map_terms: {f!r}")


def iter_terms(f: Formula) -> Iterator[Term]:
    match f:
        case And(l, r) | Or(l, r) | Imp(l, r):
            yield from iter_terms(l)
            yield from iter_terms(r)
        case All(_, body, _) | Ex(_, body, _) | Nab(_, body, _):
            yield from iter_terms(body)
        case Eq(l, r):
            yield l
            yield r
        case Atom(_, args, _):
            yield from args


def subst_vars_f(f: Formula, mapping: dict[str, Term]) -> Formula:
    """Instantiate eigenvariables (ranges must be locally closed terms)."""
    if not mapping:
        return f
    return map_terms(f, lambda t, _d: normalize(subst_vars(t, mapping)))


def apply_perm_f(pi: Perm, f: Formula) -> Formula:
    if pi.is_identity():
        return f
    return map_terms(f, lambda t, _d: apply_perm(pi, t))


def subst_nom_f(f: Formula, nom: Nom, value: Term) -> Formula:
    from .terms import subst_nom
    return map_terms(f, lambda t, _d: subst_nom(t, nom, value))


def shift_f(f: Formula, d: int, cutoff: int = 0) -> Formula:
    return map_terms(f, lambda t, depth: shift(t, d, cutoff + depth))


def open_f(body: Formula, value: Term) -> Formula:
    """Instantiate the outermost binder of a quantified body."""
    return map_terms(body, lambda t, depth: normalize(inst_bound(t, value, depth)))


def support_f(f: Formula) -> frozenset[Nom]:
    out: set[Nom] = set()
    for t in iter_terms(f):
        out |= term_support(t)
    return frozenset(out)


def free_vars_f(f: Formula) -> dict[str, "Term"]:
    out: dict = {}
    for t in iter_terms(f):
        out.update(term_free_vars(t))
    return out


def strip_ann(f: Formula) -> Formula:
    match f:
        case Atom(pred, args, ann):
            return Atom(pred, args, None) if ann else f
        case And(l, r):
            return And(strip_ann(l), strip_ann(r))
        case Or(l, r):
            return Or(strip_ann(l), strip_ann(r))
        case Imp(l, r):
            return Imp(strip_ann(l), strip_ann(r))
        case All(ty, body, hint):
            return All(ty, strip_ann(body), hint)
        case Ex(ty, body, hint):
            return Ex(ty, strip_ann(body), hint)
        case Nab(ty, body, hint):
            return Nab(ty, strip_ann(body), hint)
        case _:
            return f


def alpha_eq(a: Formula, b: Formula) -> bool:
    """Equality up to alpha-conversion, ignoring annotations."""
    return strip_ann(a) == strip_ann(b)


def perm_match(a: Formula, b: Formula) -> Optional[Perm]:
    """A permutation pi with pi.a == b (annotations ignored), if any."""
    import itertools

    a, b = strip_ann(a), strip_ann(b)
    sa, sb = sorted_noms(support_f(a)), sorted_noms(support_f(b))
    if len(sa) != len(sb):
        return None
    ga: dict[str, list[Nom]] = {}
    gb: dict[str, list[Nom]] = {}
    for n in sa:
        ga.setdefault(ty_key(n.ty), []).append(n)
    for n in sb:
        gb.setdefault(ty_key(n.ty), []).append(n)
    if {k: len(v) for k, v in ga.items()} != {k: len(v) for k, v in gb.items()}:
        return None
    keys = sorted(ga)
    pools = [list(itertools.permutations(gb[k])) for k in keys]
    for combo in itertools.product(*pools):
        mapping: dict[Nom, Nom] = {}
        for key, images in zip(keys, combo):
            mapping.update(zip(ga[key], images))
        from .terms import extend_to_perm
        pi = extend_to_perm(mapping) if mapping else Perm.identity()
        if apply_perm_f(pi, a) == b:
            return pi
    return None


# ---------------------------------------------------------------------------
# Specification-judgment sugar: {L |- G} = exists n, nat n /\ seq n L G

def mk_judgment(ctx: Term, goal: Term, ann: Optional[Ann] = None) -> Formula:
    ctx1, goal1 = shift(ctx, 1), shift(goal, 1)
    return Ex(
        NT,
        And(Atom("nat", (Bd(0),)), Atom("seq", (Bd(0), ctx1, goal1), ann)),
        hint="n",
    )


def match_judgment(f: Formula) -> Optional[tuple[Term, Term, Optional[Ann]]]:
    match f:
        case Ex(ty, And(Atom("nat", (Bd(0),), None), Atom("seq", (Bd(0), ctx, goal), ann)), _) if ty == NT:
            from .terms import has_index
            if has_index(ctx, 0) or has_index(goal, 0):
                return None
            return shift(ctx, -1), shift(goal, -1), ann
    return None


def set_judgment_ann(f: Formula, ann: Optional[Ann]) -> Formula:
    m = match_judgment(f)
    assert m is not None
    ctx, goal, _ = m
    return mk_judgment(ctx, goal, ann)


def formula_ann(f: Formula) -> Optional[Ann]:
    """Annotation of an atom or judgment-sugar formula."""
    if isinstance(f, Atom):
        return f.ann
    m = match_judgment(f)
    return m[2] if m else None


def set_formula_ann(f: Formula, ann: Optional[Ann]) -> Formula:
    if isinstance(f, Atom):
        return replace(f, ann=ann)
    m = match_judgment(f)
    if m:
        return mk_judgment(m[0], m[1], ann)
    raise ValueError("formula cannot carry an induction annotation")
