import random

import pytest

from twolog.terms import (
    App,
    Arrow,
    Base,
    Bd,
    Con,
    Lam,
    Nom,
    Perm,
    Var,
    apply_perm,
    normalize,
    subst_vars,
)
from twolog.unify import (
    EMPTY_SUPPORT,
    FULL_SUPPORT,
    MalformedProblem,
    NonPattern,
    NoUnifier,
    UnifProblem,
    VarSupport,
    candidate_perms,
    raise_over,
    solve,
    unify_pattern,
    unify_terms,
)

from oracle import (
    N1,
    N2,
    A,
    F,
    I,
    II,
    enumerate_unifiers,
    factors_through,
    random_pattern_problem,
)


def test_spec_example_projection():
    # F n1 = n1 with empty support: only lambda x. x
    Fv = Var("F", II)
    u = unify_terms(App(Fv, N1), N1, env={"F": EMPTY_SUPPORT})
    assert u.subst == {"F": Lam(I, Bd(0))}


def test_spec_example_supported_nominal_is_nonpattern():
    Fv = Var("F", II)
    kind, _ = unify_pattern(
        UnifProblem([(App(Fv, N1), N1)], env={"F": VarSupport(frozenset({N1}))})
    )
    assert kind == "nonpattern"


def test_trivial_and_clash():
    X = Var("X", I)
    u = unify_terms(X, X)
    assert u.subst == {}
    with pytest.raises(NoUnifier):
        unify_terms(N1, N2)


def test_type_mismatch_is_malformed():
    with pytest.raises(MalformedProblem):
        unify_terms(A, F)


def test_occurs_check():
    X = Var("X", I)
    with pytest.raises(NoUnifier):
        unify_terms(X, App(F, X))


def test_support_violation_fails():
    X = Var("X", I)
    with pytest.raises(NoUnifier):
        unify_terms(X, N1, env={"X": EMPTY_SUPPORT})
    u = unify_terms(X, N1, env={"X": VarSupport(frozenset({N1}))})
    assert u.subst == {"X": N1}


def test_frozen_vars_are_rigid():
    X, Y = Var("X", I), Var("Y", I)
    with pytest.raises(NoUnifier):
        unify_terms(X, Y, frozen=["X", "Y"])
    u = unify_terms(X, Y, frozen=["Y"])
    assert u.subst == {"X": Y}


def test_flex_flex_same_head_projection():
    H = Var("H", Arrow(I, II))
    # H x y = H y x  forces H to ignore both arguments
    s = Lam(I, Lam(I, App(App(H, Bd(1)), Bd(0))))
    t = Lam(I, Lam(I, App(App(H, Bd(0)), Bd(1))))
    u = unify_terms(s, t)
    img = u.subst["H"]
    assert isinstance(img, Lam) and isinstance(img.body, Lam)
    assert not any(isinstance(x, Bd) for x in _leaves(img.body.body))


def _leaves(t):
    stack, out = [t], []
    while stack:
        u = stack.pop()
        if isinstance(u, App):
            stack.extend([u.fn, u.arg])
        elif isinstance(u, Lam):
            stack.append(u.body)
        else:
            out.append(u)
    return out


def test_flex_flex_distinct_heads_intersection():
    Fv, Gv = Var("F", II), Var("G", II)
    # \x. F x = \x. G x just aliases the heads
    u = unify_terms(Lam(I, App(Fv, Bd(0))), Lam(I, App(Gv, Bd(0))))
    lhs = normalize(subst_vars(Lam(I, App(Fv, Bd(0))), u.subst))
    rhs = normalize(subst_vars(Lam(I, App(Gv, Bd(0))), u.subst))
    assert lhs == rhs


def test_pruning_through_inner_flex():
    # F n1 = f (G n1 n2): G's second argument must be pruned away, since
    # F's image can depend on n2 neither directly nor through G.
    Fv, Gv = Var("F", II), Var("G", Arrow(I, II))
    lhs_t = App(Fv, N1)
    rhs_t = App(F, App(App(Gv, N1), N2))
    u = unify_terms(lhs_t, rhs_t, env={"F": EMPTY_SUPPORT, "G": EMPTY_SUPPORT})
    assert normalize(subst_vars(lhs_t, u.subst)) == normalize(subst_vars(rhs_t, u.subst))
    g_img = normalize(subst_vars(Gv, u.subst))
    # G's image ignores its second argument
    got = normalize(App(App(g_img, N1), N2))
    also = normalize(App(App(g_img, N1), A))
    assert got == also


def test_eta_equality_of_head_and_expansion():
    Fv = Var("F", II)
    u = unify_terms(Lam(I, App(Fv, Bd(0))), Fv)
    assert u.subst == {}


def test_raise_over_examples():
    v = Var("v", I)
    h, app = raise_over(v, [N1], avoid_names={"v"})
    assert h.ty == II and app == App(h, N1)
    h2, app2 = raise_over(v, [], avoid_names={"v"})
    assert (h2, app2) == (v, v)
    v3 = Var("w", II)
    h3, app3 = raise_over(v3, [N1, N2], avoid_names={"w"})
    assert h3.ty == Arrow(I, Arrow(I, II))
    assert app3 == App(App(h3, N1), N2)


def test_candidate_perms_counts():
    assert [p for p in candidate_perms([], [])] == [Perm.identity()]
    perms = list(candidate_perms([N1], [N2]))
    assert len(perms) == 2 and Perm.identity() in perms
    n3 = Nom(3, I)
    assert len(list(candidate_perms([N1, N2], [n3]))) == 6
    # mixed types permute independently
    m1, m2 = Nom(1, II), Nom(2, II)
    assert len(list(candidate_perms([N1, N2], [m1, m2]))) == 4


def test_equivariance_of_unification():
    rng = random.Random(7)
    pi = Perm.make({N1: N2, N2: N1})
    for _ in range(120):
        p = random_pattern_problem(rng)
        permuted = UnifProblem(
            [(apply_perm(pi, s), apply_perm(pi, t)) for s, t in p.eqs],
            env={
                name: VarSupport(frozenset(pi.apply(n) for n in sup.allowed))
                if sup.allowed is not None
                else sup
                for name, sup in p.env.items()
            },
        )
        k1, _ = unify_pattern(p)
        k2, _ = unify_pattern(permuted)
        assert k1 == k2


def test_mini_oracle_soundness_and_most_generality():
    rng = random.Random(42)
    checked = 0
    for _ in range(200):
        p = random_pattern_problem(rng)
        kind, u = unify_pattern(p)
        sols = enumerate_unifiers(p)
        if kind == "no":
            assert sols == []
        elif kind == "mgu":
            for s, t in p.eqs:
                assert normalize(subst_vars(s, u.subst)) == normalize(
                    subst_vars(t, u.subst)
                )
            for theta in sols:
                assert factors_through(theta, u.subst, p)
            checked += 1
        else:
            raise AssertionError("generator should stay in the pattern fragment")
    assert checked > 30
