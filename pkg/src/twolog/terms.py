"""Simply typed lambda terms with two kinds of constants.

Terms distinguish ordinary constants (the signature) from nominal
constants (an infinite, per-type family ``n1, n2, ...`` standing for
generic names).  Bound variables are de Bruijn indices, so structural
equality is alpha-equivalence.  Every term built through `mk_app` /
`normalize` is kept beta-normal; eta is handled lazily by the unifier.
"""

from __future__ import annotations

import itertools
import re
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional


class TermError(Exception):
    """Raised for ill-typed or malformed term constructions."""


# ---------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class Ty:
    pass


@dataclass(frozen=True)
class Base(Ty):
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow(Ty):
    left: Ty
    right: Ty

    def __repr__(self) -> str:
        l = f"({self.left!r})" if isinstance(self.left, Arrow) else repr(self.left)
        return f"{l} -> {self.right!r}"


OTY = Base("o")


def arrow(args: Iterable[Ty], target: Ty) -> Ty:
    ty = target
    for a in reversed(list(args)):
        ty = Arrow(a, ty)
    return ty


def arg_types(ty: Ty) -> list[Ty]:
    out = []
    while isinstance(ty, Arrow):
        out.append(ty.left)
        ty = ty.right
    return out


def target_type(ty: Ty) -> Ty:
    while isinstance(ty, Arrow):
        ty = ty.right
    return ty


def contains_o(ty: Ty) -> bool:
    if isinstance(ty, Arrow):
        return contains_o(ty.left) or contains_o(ty.right)
    return ty == OTY


def order(ty: Ty) -> int:
    if isinstance(ty, Arrow):
        return max(order(ty.left) + 1, order(ty.right))
    return 0


def ty_key(ty: Ty) -> str:
    return repr(ty)


# ---------------------------------------------------------------------------
# Terms

@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Bd(Term):
    """Bound variable (de Bruijn index, innermost binder is 0)."""

    k: int


@dataclass(frozen=True)
class Var(Term):
    """Eigenvariable / instantiatable meta-variable."""

    name: str
    ty: Ty


@dataclass(frozen=True)
class Con(Term):
    """Ordinary constant (member of the signature)."""

    name: str
    ty: Ty


@dataclass(frozen=True)
class Nom(Term):
    """Nominal constant; identified by (index, type), displayed ``n<index>``."""

    index: int
    ty: Ty

    @property
    def name(self) -> str:
        return f"n{self.index}"


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Lam(Term):
    ty: Ty
    body: Term
    hint: str = field(default="x", compare=False, hash=False)


# ---------------------------------------------------------------------------
# Basic traversals

def shift(t: Term, d: int, cutoff: int = 0) -> Term:
    match t:
        case Bd(k):
            return Bd(k + d) if k >= cutoff else t
        case App(f, a):
            return App(shift(f, d, cutoff), shift(a, d, cutoff))
        case Lam(ty, body, hint):
            return Lam(ty, shift(body, d, cutoff + 1), hint)
        case _:
            return t


def inst_bound(body: Term, value: Term, depth: int = 0) -> Term:
    """Substitute `value` for index `depth` in `body` (no normalization)."""
    match body:
        case Bd(k):
            if k == depth:
                return shift(value, depth)
            return Bd(k - 1) if k > depth else body
        case App(f, a):
            return App(inst_bound(f, value, depth), inst_bound(a, value, depth))
        case Lam(ty, b, hint):
            return Lam(ty, inst_bound(b, value, depth + 1), hint)
        case _:
            return body


def normalize(t: Term) -> Term:
    """Full beta-normal form; idempotent and type-preserving."""
    match t:
        case App(f, a):
            f = normalize(f)
            a = normalize(a)
            if isinstance(f, Lam):
                return normalize(inst_bound(f.body, a))
            return App(f, a)
        case Lam(ty, body, hint):
            return Lam(ty, normalize(body), hint)
        case _:
            return t


def mk_app(fn: Term, *args: Term) -> Term:
    """Apply and renormalize, typechecking each application step."""
    t = fn
    for a in args:
        fty = term_ty(t)
        if not isinstance(fty, Arrow):
            raise TermError(f"cannot apply non-function of type {fty!r}")
        aty = term_ty(a)
        if fty.left != aty:
            raise TermError(f"argument type mismatch: expected {fty.left!r}, got {aty!r}")
        t = App(t, a)
    return normalize(t)


def spine(t: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def term_ty(t: Term, env: tuple[Ty, ...] = ()) -> Ty:
    """Compute the type; `env` lists binder types, innermost first."""
    match t:
        case Bd(k):
            if k >= len(env):
                raise TermError(f"unbound de Bruijn index {k}")
            return env[k]
        case Var(_, ty) | Con(_, ty) | Nom(_, ty):
            return ty
        case App(f, a):
            fty = term_ty(f, env)
            if not isinstance(fty, Arrow):
                raise TermError(f"application head has non-arrow type {fty!r}")
            aty = term_ty(a, env)
            if fty.left != aty:
                raise TermError(f"ill-typed application: expected {fty.left!r}, got {aty!r}")
            return fty.right
        case Lam(ty, body, _):
            return Arrow(ty, term_ty(body, (ty,) + env))
    raise TermError(f"unknown term {t!r}")


def eta_contract(t: Term) -> Term:
    """Fully eta-contract (used to bring unifier arguments to atoms)."""
    match t:
        case Lam(_, body, _):
            body = eta_contract(body)
            if isinstance(body, App) and body.arg == Bd(0) and not has_index(body.fn, 0):
                return eta_contract(shift(body.fn, -1))
            return Lam(t.ty, body, t.hint)
        case App(f, a):
            return App(eta_contract(f), eta_contract(a))
        case _:
            return t


def has_index(t: Term, k: int) -> bool:
    match t:
        case Bd(i):
            return i == k
        case App(f, a):
            return has_index(f, k) or has_index(a, k)
        case Lam(_, body, _):
            return has_index(body, k + 1)
        case _:
            return False


# ---------------------------------------------------------------------------
# Meta-variable substitution

def subst_vars(t: Term, mapping: dict[str, Term]) -> Term:
    """Replace Vars by (locally closed) terms, then renormalize."""
    if not mapping:
        return t
    return normalize(_subst_vars(t, mapping))


def _subst_vars(t: Term, mapping: dict[str, Term]) -> Term:
    match t:
        case Var(name, _):
            return mapping.get(name, t)
        case App(f, a):
            return App(_subst_vars(f, mapping), _subst_vars(a, mapping))
        case Lam(ty, body, hint):
            return Lam(ty, _subst_vars(body, mapping), hint)
        case _:
            return t


def subst_nom(t: Term, nom: Nom, value: Term) -> Term:
    """Replace one nominal constant by a term (used by the trusted inst rule)."""
    def go(u: Term) -> Term:
        match u:
            case Nom():
                return value if u == nom else u
            case App(f, a):
                return App(go(f), go(a))
            case Lam(ty, body, hint):
                return Lam(ty, go(body), hint)
            case _:
                return u
    return normalize(go(t))


def free_vars(t: Term) -> dict[str, Var]:
    out: dict[str, Var] = {}
    _free_vars(t, out)
    return out


def _free_vars(t: Term, out: dict[str, Var]) -> None:
    match t:
        case Var():
            out[t.name] = t
        case App(f, a):
            _free_vars(f, out)
            _free_vars(a, out)
        case Lam(_, body, _):
            _free_vars(body, out)


def support(t: Term) -> frozenset[Nom]:
    """The nominal constants occurring in the beta-normal form of t."""
    out: set[Nom] = set()
    _support(normalize(t), out)
    return frozenset(out)


def _support(t: Term, out: set[Nom]) -> None:
    match t:
        case Nom():
            out.add(t)
        case App(f, a):
            _support(f, out)
            _support(a, out)
        case Lam(_, body, _):
            _support(body, out)


def sorted_noms(noms: Iterable[Nom]) -> list[Nom]:
    return sorted(noms, key=lambda n: (ty_key(n.ty), n.index))


# ---------------------------------------------------------------------------
# Permutations of nominal constants

@dataclass(frozen=True)
class Perm:
    """Finite type-preserving bijection on nominal constants.

    Stored as a sorted tuple of (source, image) pairs; identity elsewhere.
    """

    pairs: tuple[tuple[Nom, Nom], ...]

    @staticmethod
    def make(mapping: dict[Nom, Nom]) -> "Perm":
        mapping = {k: v for k, v in mapping.items() if k != v}
        srcs, imgs = set(mapping), set(mapping.values())
        if srcs != imgs:
            raise TermError("permutation is not a bijection on its domain")
        for k, v in mapping.items():
            if k.ty != v.ty:
                raise TermError("permutation is not type-preserving")
        pairs = tuple(sorted(mapping.items(), key=lambda kv: (ty_key(kv[0].ty), kv[0].index)))
        return Perm(pairs)

    @staticmethod
    def identity() -> "Perm":
        return Perm(())

    def is_identity(self) -> bool:
        return not self.pairs

    def apply(self, n: Nom) -> Nom:
        for k, v in self.pairs:
            if k == n:
                return v
        return n

    def inverse(self) -> "Perm":
        return Perm.make({v: k for k, v in self.pairs})

    def __repr__(self) -> str:
        if not self.pairs:
            return "id"
        return "{" + ", ".join(f"{k.name}->{v.name}" for k, v in self.pairs) + "}"


def apply_perm(pi: Perm, t: Term) -> Term:
    """Structural permutation action: acts on nominals, homomorphic elsewhere."""
    if pi.is_identity():
        return t
    match t:
        case Nom():
            return pi.apply(t)
        case App(f, a):
            return App(apply_perm(pi, f), apply_perm(pi, a))
        case Lam(ty, body, hint):
            return Lam(ty, apply_perm(pi, body), hint)
        case _:
            return t


def extend_to_perm(partial: dict[Nom, Nom]) -> Perm:
    """Complete an injective type-preserving map to a finite permutation."""
    srcs = set(partial)
    imgs = set(partial.values())
    if len(imgs) != len(partial):
        raise TermError("map is not injective")
    domain = sorted_noms(srcs | imgs)
    mapping = dict(partial)
    unmapped = [n for n in domain if n not in srcs]
    unhit = [n for n in domain if n not in imgs]
    by_ty: dict[str, list[Nom]] = {}
    for n in unhit:
        by_ty.setdefault(ty_key(n.ty), []).append(n)
    for n in unmapped:
        mapping[n] = by_ty[ty_key(n.ty)].pop(0)
    return Perm.make(mapping)


# ---------------------------------------------------------------------------
# Fresh name generation

# Test hook for equivariance replays: maps (type, enumeration index) to a
# permuted index.  Proof replay must be deterministic, so this is the only
# source of nondeterminism and it is injected explicitly.
NS_PERM: ContextVar[Optional[Callable[[Ty, int], int]]] = ContextVar("NS_PERM", default=None)


def fresh_nominal(ty: Ty, avoid: Iterable[Nom]) -> Nom:
    """Lowest-index unused nominal of type `ty` (per-type namespaces)."""
    perm = NS_PERM.get()
    taken = {n.index for n in avoid if n.ty == ty}
    for k in itertools.count(1):
        idx = perm(ty, k) if perm else k
        if idx not in taken:
            return Nom(idx, ty)
    raise AssertionError("unreachable")


def fresh_nominals(tys: Iterable[Ty], avoid: Iterable[Nom]) -> list[Nom]:
    got: list[Nom] = []
    avoid = list(avoid)
    for ty in tys:
        n = fresh_nominal(ty, avoid)
        got.append(n)
        avoid.append(n)
    return got


_NOMINAL_NAME = re.compile(r"^n[0-9]+$")


def fresh_name(hint: str, taken: Iterable[str]) -> str:
    """Deterministic fresh display name: `hint`, then `hint1`, `hint2`, ...

    Names of the form ``n<digits>`` are reserved for nominal constants and
    never produced.
    """
    taken = set(taken)
    if hint and hint not in taken and not _NOMINAL_NAME.match(hint):
        return hint
    base = hint or "X"
    if _NOMINAL_NAME.match(f"{base}1"):
        base = base + "_"
    for k in itertools.count(1):
        cand = f"{base}{k}"
        if cand not in taken:
            return cand
    raise AssertionError("unreachable")
