"""Brute-force enumeration oracle for pattern unification tests.

Universe: base type i, two ordinary constants (a : i, f : i -> i), two
nominal constants n1 n2 : i, terms up to depth 3.  Solutions are checked
by exhaustive substitution enumeration and normalization, independent of
the unifier's algorithm.
"""

from __future__ import annotations

import itertools
import random

from twolog.terms import (
    App,
    Arrow,
    Base,
    Bd,
    Con,
    Lam,
    Nom,
    Term,
    Var,
    free_vars,
    normalize,
    subst_vars,
    support,
)
from twolog.unify import EMPTY_SUPPORT, SupportEnv, UnifProblem, VarSupport

I = Base("i")
II = Arrow(I, I)
A = Con("a", I)
F = Con("f", II)
N1, N2 = Nom(1, I), Nom(2, I)


def ground_terms(max_depth: int, extra_leaves: tuple[Term, ...] = ()) -> list[Term]:
    """All type-i terms of depth <= max_depth over {a, f, n1, n2} + leaves."""
    layers = [[A, N1, N2, *extra_leaves]]
    for _ in range(max_depth):
        layers.append([App(F, t) for t in layers[-1]])
    out: list[Term] = []
    for i in range(len(layers)):
        out.extend(layers[i])
    return out


def candidates(ty, sup: VarSupport, depth: int) -> list[Term]:
    """Support-respecting instantiation candidates for a variable."""
    def ok(t: Term) -> bool:
        return all(sup.permits(n) for n in support(t))

    if ty == I:
        return [t for t in ground_terms(depth) if ok(t)]
    if ty == II:
        bodies = ground_terms(depth - 1, extra_leaves=(Bd(0),))
        return [Lam(I, b) for b in bodies if ok(b)]
    raise AssertionError(f"no candidate universe for {ty!r}")


def enumerate_unifiers(problem: UnifProblem, depth: int = 3) -> list[dict[str, Term]]:
    """Every assignment (from the bounded universe) solving all equations."""
    vars_: dict[str, Term] = {}
    for s, t in problem.eqs:
        vars_.update(free_vars(s))
        vars_.update(free_vars(t))
    names = sorted(vars_)
    cand_lists = [
        candidates(vars_[n].ty, problem.env.get(n, problem.default_support), depth)
        for n in names
    ]
    sols = []
    for combo in itertools.product(*cand_lists):
        theta = dict(zip(names, combo))
        if all(
            normalize(subst_vars(s, theta)) == normalize(subst_vars(t, theta))
            for s, t in problem.eqs
        ):
            sols.append(theta)
    return sols


def random_pattern_problem(rng: random.Random) -> UnifProblem:
    """A random problem inside the pattern-modulo-support fragment.

    Per problem a support pool is fixed; variable supports are subsets of
    the pool and nominal arguments of flex occurrences are drawn from its
    complement, which keeps every flex-flex interaction inside the
    fragment.
    """
    pool = rng.choice([frozenset(), frozenset({N1})])
    arg_noms = [n for n in (N1, N2) if n not in pool]
    env: SupportEnv = {}

    def new_var(name: str, ty) -> Var:
        subsets = [frozenset(), pool] if pool else [frozenset()]
        env[name] = VarSupport(rng.choice(subsets))
        return Var(name, ty)

    vars_: list[Var] = []
    for idx in range(rng.randint(1, 2)):
        ty = rng.choice([I, I, II])
        vars_.append(new_var(f"X{idx}", ty))

    def gen(depth: int, binders: int) -> Term:
        roll = rng.random()
        if roll < 0.3 and vars_:
            v = rng.choice(vars_)
            if v.ty == I:
                return v
            opts: list[Term] = [Bd(k) for k in range(binders)] + list(arg_noms)
            return App(v, rng.choice(opts))
        if depth <= 0:
            leaves = [A, N1, N2] + [Bd(k) for k in range(binders)]
            return rng.choice(leaves)
        if roll < 0.75:
            return App(F, gen(depth - 1, binders))
        leaves = [A, N1, N2] + [Bd(k) for k in range(binders)]
        return rng.choice(leaves)

    eqs = []
    for _ in range(rng.randint(1, 2)):
        under_lam = rng.random() < 0.4
        if under_lam:
            s, t = Lam(I, gen(2, 1)), Lam(I, gen(2, 1))
        else:
            s, t = gen(3, 0), gen(3, 0)
        eqs.append((normalize(s), normalize(t)))
    pruned_env = {v.name: env[v.name] for v in vars_}
    return UnifProblem(eqs, env=pruned_env)


def factors_through(
    theta: dict[str, Term], mgu_subst: dict[str, Term], problem: UnifProblem, depth: int = 3
) -> bool:
    """Check that `theta` = delta o mgu for some delta (delta found by matching)."""
    from twolog.unify import NonPattern, NoUnifier, unify_terms

    prob_vars: dict[str, Term] = {}
    for s, t in problem.eqs:
        prob_vars.update(free_vars(s))
        prob_vars.update(free_vars(t))
    eqs = []
    for name, v in sorted(prob_vars.items()):
        image = normalize(subst_vars(v, mgu_subst))
        target = normalize(subst_vars(v, theta))
        eqs.append((image, target))
    try:
        delta = unify_terms(
            eqs[0][0], eqs[0][1], env={}, default_support=VarSupport(None)
        ) if len(eqs) == 1 else None
        if delta is None:
            from twolog.unify import solve
            delta = solve(
                UnifProblem(eqs, env={}, default_support=VarSupport(None))
            )
    except (NoUnifier, NonPattern):
        return False
    # independent verification by normalization
    for image, target in eqs:
        if normalize(subst_vars(image, delta.subst)) != target:
            return False
    return True
