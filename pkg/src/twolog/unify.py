"""Higher-order pattern unification with nominal constants.

The fragment solved here: meta-variables applied to distinct bound
variables and/or distinct nominal constants.  Each variable carries a
*permitted support*: the set of nominal constants its instantiation may
mention directly (dependencies on other nominals must be explicit
arguments).  The kernel always works in empty-support mode — raising
makes every nominal dependency explicit — while lemma application and
proof search use cofinite supports.

Outcomes are exactly three: a most general unifier, a definitive
failure, or `NonPattern` when the fragment is exceeded (the solver never
guesses).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .terms import (
    App,
    Arrow,
    Bd,
    Con,
    Lam,
    Nom,
    Perm,
    Term,
    TermError,
    Ty,
    Var,
    arrow,
    eta_contract,
    fresh_name,
    free_vars,
    normalize,
    shift,
    sorted_noms,
    spine,
    subst_vars,
    support,
    term_ty,
    ty_key,
)


class _Restart(Exception):
    """Internal: a prune bound a variable; re-run the current inversion."""


class NoUnifier(Exception):
    """The equations have no support-respecting unifier (definitive)."""


class NonPattern(Exception):
    """The problem leaves the pattern fragment; no answer is guessed."""


class MalformedProblem(Exception):
    """Ill-typed or otherwise broken unification problem."""


# ---------------------------------------------------------------------------
# Permitted supports

@dataclass(frozen=True)
class VarSupport:
    """Nominal constants a variable's instantiation may mention.

    `allowed=None` means cofinite: everything except `excluded`.
    """

    allowed: Optional[frozenset[Nom]] = frozenset()
    excluded: frozenset[Nom] = frozenset()

    def permits(self, n: Nom) -> bool:
        if self.allowed is None:
            return n not in self.excluded
        return n in self.allowed

    def subset_of(self, other: "VarSupport") -> bool:
        if self.allowed is not None:
            return all(other.permits(n) for n in self.allowed)
        if other.allowed is not None:
            return False
        return self.excluded >= other.excluded

    def intersect(self, other: "VarSupport") -> "VarSupport":
        if self.allowed is None and other.allowed is None:
            return VarSupport(None, self.excluded | other.excluded)
        if self.allowed is None:
            return VarSupport(frozenset(n for n in other.allowed if self.permits(n)))
        if other.allowed is None:
            return VarSupport(frozenset(n for n in self.allowed if other.permits(n)))
        return VarSupport(self.allowed & other.allowed)


EMPTY_SUPPORT = VarSupport(frozenset())
FULL_SUPPORT = VarSupport(None)

SupportEnv = dict[str, VarSupport]


# ---------------------------------------------------------------------------
# Results

@dataclass
class Unified:
    """A most general, support-respecting unifier."""

    subst: dict[str, Term]
    env: SupportEnv

    def apply(self, t: Term) -> Term:
        return subst_vars(t, self.subst)


@dataclass
class UnifProblem:
    """List of equations at matching types, plus the support environment."""

    eqs: list[tuple[Term, Term]]
    env: SupportEnv = field(default_factory=dict)
    frozen: frozenset[str] = frozenset()
    avoid_names: frozenset[str] = frozenset()
    default_support: VarSupport = EMPTY_SUPPORT


def unify_pattern(problem: UnifProblem) -> tuple[str, Optional[Unified]]:
    """Solve; returns ('mgu', u) | ('no', None) | ('nonpattern', None)."""
    try:
        return "mgu", solve(problem)
    except NoUnifier:
        return "no", None
    except NonPattern:
        return "nonpattern", None


def solve(problem: UnifProblem) -> Unified:
    solver = _Solver(problem)
    return solver.run()


def unify_terms(
    s: Term,
    t: Term,
    env: Optional[SupportEnv] = None,
    frozen: Iterable[str] = (),
    avoid_names: Iterable[str] = (),
    default_support: VarSupport = EMPTY_SUPPORT,
) -> Unified:
    return solve(
        UnifProblem(
            [(s, t)],
            env=dict(env or {}),
            frozen=frozenset(frozen),
            avoid_names=frozenset(avoid_names),
            default_support=default_support,
        )
    )


class _Solver:
    def __init__(self, problem: UnifProblem):
        self.env: SupportEnv = dict(problem.env)
        self.frozen = set(problem.frozen)
        self.default = problem.default_support
        self.subst: dict[str, Term] = {}
        self.taken: set[str] = set(problem.avoid_names) | set(self.env)
        self.eqs: list[tuple[Term, Term, tuple[Ty, ...]]] = []
        for s, t in problem.eqs:
            try:
                st, tt = term_ty(s), term_ty(t)
            except TermError as e:
                raise MalformedProblem(str(e)) from e
            if st != tt:
                raise MalformedProblem(f"equation at mismatched types {st!r} vs {tt!r}")
            for v in (*free_vars(s), *free_vars(t)):
                self.taken.add(v)
            self.eqs.append((s, t, ()))

    # -- support helpers

    def support_of(self, name: str) -> VarSupport:
        return self.env.get(name, self.default)

    def fresh_var(self, hint: str, ty: Ty, sup: VarSupport) -> Var:
        name = fresh_name(hint, self.taken)
        self.taken.add(name)
        self.env[name] = sup
        return Var(name, ty)

    def is_flex(self, head: Term) -> bool:
        return isinstance(head, Var) and head.name not in self.frozen and head.name not in self.subst

    # -- binding

    def bind(self, v: Var, value: Term) -> None:
        value = normalize(subst_vars(value, self.subst))
        if v.name in free_vars(value):
            raise NoUnifier(f"occurs check: {v.name}")
        sup = self.support_of(v.name)
        for n in support(value):
            if not sup.permits(n):
                raise NoUnifier(f"support violation binding {v.name}: {n.name}")
        self.subst = {k: subst_vars(t, {v.name: value}) for k, t in self.subst.items()}
        self.subst[v.name] = value

    # -- main loop

    def run(self) -> Unified:
        # non-pattern equations are postponed: a later binding may bring
        # them back into the fragment, and a definitive failure elsewhere
        # settles the whole problem without guessing
        deferred: list[tuple[Term, Term, tuple[Ty, ...], NonPattern]] = []
        last_size = -1
        while True:
            while self.eqs:
                s, t, binders = self.eqs.pop()
                s = normalize(subst_vars(s, self.subst))
                t = normalize(subst_vars(t, self.subst))
                try:
                    self.step(s, t, binders)
                except NonPattern as np:
                    deferred.append((s, t, binders, np))
            if not deferred:
                break
            if len(self.subst) == last_size:
                raise deferred[0][3]
            last_size = len(self.subst)
            self.eqs = [(s, t, b) for (s, t, b, _np) in deferred]
            deferred = []
        self.check_result()
        return Unified(dict(self.subst), dict(self.env))

    def push(self, s: Term, t: Term, binders: tuple[Ty, ...]) -> None:
        self.eqs.append((s, t, binders))

    def step(self, s: Term, t: Term, binders: tuple[Ty, ...]) -> None:
        if s == t:
            return
        if isinstance(s, Lam) or isinstance(t, Lam):
            s, t = self.eta_align(s, t, binders)
            if s == t:
                return
            if isinstance(s, Lam):
                self.push(s.body, t.body, (s.ty,) + binders)
                return
        sh, sargs = spine(s)
        th, targs = spine(t)
        sflex, tflex = self.is_flex(sh), self.is_flex(th)
        if sflex and tflex:
            # a bare variable can swallow the other side wholesale (the
            # inversion machinery handles supports and non-pattern subterms)
            if not sargs:
                self.flex_rigid(sh, [], t, binders)
            elif not targs:
                self.flex_rigid(th, [], s, binders)
            else:
                s_pat = self._is_pattern(sh, sargs)
                t_pat = self._is_pattern(th, targs)
                if s_pat and t_pat:
                    self.flex_flex(sh, sargs, th, targs, binders)
                elif s_pat:
                    self.flex_rigid(sh, sargs, t, binders)
                elif t_pat:
                    self.flex_rigid(th, targs, s, binders)
                else:
                    raise NonPattern("flexible-flexible outside the pattern fragment")
        elif sflex:
            self.flex_rigid(sh, sargs, t, binders)
        elif tflex:
            self.flex_rigid(th, targs, s, binders)
        else:
            if sh != th:
                raise NoUnifier(f"rigid head clash")
            if len(sargs) != len(targs):
                raise NoUnifier("rigid spine length mismatch")
            for a, b in zip(sargs, targs):
                self.push(a, b, binders)

    def eta_align(self, s: Term, t: Term, binders: tuple[Ty, ...]) -> tuple[Term, Term]:
        def expand(u: Term, ty: Ty) -> Term:
            return Lam(ty, App(shift(u, 1), Bd(0)))
        if isinstance(s, Lam) and not isinstance(t, Lam):
            t = expand(t, s.ty)
        elif isinstance(t, Lam) and not isinstance(s, Lam):
            s = expand(s, t.ty)
        return s, t

    # -- pattern checks

    def _is_pattern(self, v: Var, args: list[Term]) -> bool:
        try:
            self.pattern_args(v, args)
            return True
        except NonPattern:
            return False

    def pattern_args(self, v: Var, args: list[Term]) -> list[Term]:
        """Eta-contract args and verify the pattern-modulo-support condition."""
        out = []
        for a in args:
            a = eta_contract(normalize(a))
            if isinstance(a, Bd):
                out.append(a)
            elif isinstance(a, Nom):
                if self.support_of(v.name).permits(a):
                    # ambiguous: the dependency could go through the argument
                    # or through the permitted support
                    raise NonPattern(f"{v.name} applied to supported nominal {a.name}")
                out.append(a)
            else:
                raise NonPattern(f"{v.name} applied to non-atomic argument")
        if len(set(out)) != len(out):
            raise NonPattern(f"{v.name} applied to repeated arguments")
        return out

    # -- flex/rigid

    def flex_rigid(self, v: Var, args: list[Term], t: Term, binders: tuple[Ty, ...]) -> None:
        args = self.pattern_args(v, args)
        while True:
            try:
                body = self.invert(v, args, t, 0)
                break
            except _Restart:
                t = normalize(subst_vars(t, self.subst))
        arg_tys = [b.ty if isinstance(b, Nom) else binders[b.k] for b in args]
        value = t_lams(arg_tys, body)
        self.bind(v, value)

    def invert(self, v: Var, args: list[Term], t: Term, e: int) -> Term:
        """Rewrite `t` as the body of v's binder, pruning inner flexes."""
        k = len(args)

        def arg_index(atom: Term) -> Optional[int]:
            for p, a in enumerate(args):
                if a == atom:
                    return e + (k - 1 - p)
            return None

        match t:
            case Bd(j):
                if j < e:
                    return t
                idx = arg_index(Bd(j - e))
                if idx is None:
                    raise NoUnifier("rigid dependency on unavailable bound variable")
                return Bd(idx)
            case Nom():
                idx = arg_index(t)
                if idx is not None:
                    return Bd(idx)
                if self.support_of(v.name).permits(t):
                    return t
                raise NoUnifier(f"rigid dependency on unavailable nominal {t.name}")
            case Con():
                return t
            case Var(name, _):
                if name == v.name:
                    raise NoUnifier(f"occurs check: {v.name}")
                if self.is_flex(t):
                    return self.invert_flex(v, args, t, [], e)
                return t
            case App():
                head, targs = spine(t)
                if isinstance(head, Var) and self.is_flex(head):
                    if head.name == v.name:
                        raise NoUnifier(f"occurs check: {v.name}")
                    try:
                        return self.invert_flex(v, args, head, targs, e)
                    except NonPattern:
                        return self.invert_flex_structural(v, args, head, targs, e)
                fn = self.invert(v, args, t.fn, e)
                arg = self.invert(v, args, t.arg, e)
                return App(fn, arg)
            case Lam(ty, b, hint):
                return Lam(ty, self.invert(v, args, b, e + 1), hint)
        raise AssertionError(f"invert: {t!r}")

    def invert_flex_structural(self, v: Var, args: list[Term], g: Var, gargs: list[Term], e: int) -> Term:
        """Inner flexible spine whose arguments are not all atoms: keep the
        head and invert the arguments structurally.

        This stays most general because instantiations are nominal-free
        outside their supports, so two candidate images agreeing on the
        distinct generic arguments coincide; it requires the inner head's
        support not to exceed v's (a later instantiation of the head could
        otherwise smuggle in a nominal forbidden for v)."""
        if not self.support_of(g.name).subset_of(self.support_of(v.name)):
            raise NonPattern(
                f"support of {g.name} exceeds that of {v.name}"
            )
        try:
            new_args = [self.invert(v, args, a, e) for a in gargs]
        except NoUnifier as ex:
            # an inner head might still drop the offending dependency; do
            # not claim definitive failure
            raise NonPattern(str(ex)) from ex
        return t_apps(g, new_args)

    def invert_flex(self, v: Var, args: list[Term], g: Var, gargs: list[Term], e: int) -> Term:
        """Occurrence of flex `g gargs` inside the image of `v args`."""
        gargs = self.pattern_args(g, gargs)
        k = len(args)
        vsup = self.support_of(v.name)

        def arg_index(atom: Term) -> Optional[int]:
            for p, a in enumerate(args):
                if a == atom:
                    return e + (k - 1 - p)
            return None

        keep: list[bool] = []
        images: list[Term] = []
        for a in gargs:
            if isinstance(a, Bd):
                if a.k < e:
                    keep.append(True)
                    images.append(a)
                    continue
                idx = arg_index(Bd(a.k - e))
                if idx is None:
                    keep.append(False)
                    images.append(a)
                else:
                    keep.append(True)
                    images.append(Bd(idx))
            else:
                idx = arg_index(a)
                if idx is not None:
                    keep.append(True)
                    images.append(Bd(idx))
                elif vsup.permits(a):
                    keep.append(True)
                    images.append(a)
                else:
                    keep.append(False)
                    images.append(a)
        gsup = self.support_of(g.name)
        new_sup = gsup.intersect(vsup)
        if all(keep) and new_sup == gsup:
            return t_apps(g, images)
        # prune: g := \x1..xn. g' (kept xs), then restart the whole inversion
        gtys = arg_prefix_types(g.ty, len(gargs))
        kept_tys = [ty for ty, kp in zip(gtys, keep) if kp]
        g2 = self.fresh_var(g.name, arrow(kept_tys, drop_prefix(g.ty, len(gargs))), new_sup)
        inner = t_apps(g2, [Bd(len(gargs) - 1 - p) for p, kp in enumerate(keep) if kp])
        self.bind(g, t_lams(gtys, inner))
        raise _Restart

    # -- flex/flex

    def flex_flex(self, f: Var, fargs: list[Term], g: Var, gargs: list[Term], binders: tuple[Ty, ...]) -> None:
        fargs = self.pattern_args(f, fargs)
        gargs = self.pattern_args(g, gargs)
        if f == g:
            if fargs == gargs:
                return
            ftys = arg_prefix_types(f.ty, len(fargs))
            target = drop_prefix(f.ty, len(fargs))
            keep = [a == b for a, b in zip(fargs, gargs)]
            kept_tys = [ty for ty, kp in zip(ftys, keep) if kp]
            f2 = self.fresh_var(f.name, arrow(kept_tys, target), self.support_of(f.name))
            body = t_apps(f2, [Bd(len(fargs) - 1 - p) for p, kp in enumerate(keep) if kp])
            self.bind(f, t_lams(ftys, body))
            return
        fsup, gsup = self.support_of(f.name), self.support_of(g.name)
        for a in fargs:
            if isinstance(a, Nom) and gsup.permits(a) and a not in gargs:
                raise NonPattern(f"nominal {a.name} explicit for {f.name} but supported by {g.name}")
        for a in gargs:
            if isinstance(a, Nom) and fsup.permits(a) and a not in fargs:
                raise NonPattern(f"nominal {a.name} explicit for {g.name} but supported by {f.name}")
        ftys = arg_prefix_types(f.ty, len(fargs))
        gtys = arg_prefix_types(g.ty, len(gargs))
        target = drop_prefix(f.ty, len(fargs))
        common = [a for a in fargs if a in gargs]
        common_tys = [ftys[fargs.index(a)] for a in common]
        h = self.fresh_var(f.name, arrow(common_tys, target), fsup.intersect(gsup))

        def project(var_args: list[Term], tys: list[Ty]) -> Term:
            k = len(var_args)
            imgs = []
            for a in common:
                p = var_args.index(a)
                imgs.append(Bd(k - 1 - p))
            return t_lams(tys, t_apps(h, imgs))

        self.bind(f, project(fargs, ftys))
        self.bind(g, project(gargs, gtys))

    # -- final validation

    def check_result(self) -> None:
        for name, t in self.subst.items():
            assert name not in free_vars(t), "substitution not idempotent"
            sup = self.support_of(name)
            assert all(sup.permits(n) for n in support(t)), "support violated"


def t_apps(head: Term, args: Iterable[Term]) -> Term:
    t = head
    for a in args:
        t = App(t, a)
    return t


def t_lams(tys: Iterable[Ty], body: Term) -> Term:
    t = body
    for ty in reversed(list(tys)):
        t = Lam(ty, t)
    return t


def arg_prefix_types(ty: Ty, n: int) -> list[Ty]:
    out = []
    for _ in range(n):
        if not isinstance(ty, Arrow):
            raise MalformedProblem("over-applied variable")
        out.append(ty.left)
        ty = ty.right
    return out


def drop_prefix(ty: Ty, n: int) -> Ty:
    for _ in range(n):
        ty = ty.right
    return ty


# ---------------------------------------------------------------------------
# Raising

def raise_over(v: Var, noms: list[Nom], avoid_names: Iterable[str]) -> tuple[Var, Term]:
    """Replace `v` by `h c̄` with fresh `h`, making nominal deps explicit."""
    if not noms:
        return v, v
    if len(set(noms)) != len(noms):
        raise MalformedProblem("raising over repeated nominals")
    h = Var(fresh_name(v.name, avoid_names), arrow([n.ty for n in noms], v.ty))
    return h, t_apps(h, noms)


# ---------------------------------------------------------------------------
# Permutation enumeration

def candidate_perms(a: Iterable[Nom], c: Iterable[Nom]) -> Iterator[Perm]:
    """All type-preserving permutations of a ∪ c (identity outside), no dups."""
    noms = sorted_noms(set(a) | set(c))
    groups: dict[str, list[Nom]] = {}
    for n in noms:
        groups.setdefault(ty_key(n.ty), []).append(n)
    keys = sorted(groups)
    per_group = [list(itertools.permutations(groups[k])) for k in keys]
    for combo in itertools.product(*per_group):
        mapping: dict[Nom, Nom] = {}
        for key, images in zip(keys, combo):
            mapping.update(zip(groups[key], images))
        yield Perm.make(mapping)
