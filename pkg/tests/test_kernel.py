import pytest

from twolog.definitions import Clause, DefinedPred, Definitions
from twolog.formulas import (
    ATM,
    FORM,
    NT,
    OLIST,
    All,
    And,
    Ann,
    Atom,
    Bot,
    Eq,
    Ex,
    Imp,
    Nab,
    Top,
    formula_ann,
    match_judgment,
    mk_judgment,
)
from twolog.kernel import (
    Hyp,
    KernelError,
    Sequent,
    all_right,
    and_left,
    antecedent_leaves,
    def_left,
    def_right,
    def_right_options,
    eq_left,
    eq_right_closes,
    ex_left,
    imp_right,
    nab_left,
    nab_right,
    nat_induct,
    rule_id,
    sugar_pack,
    sugar_unpack,
)
from twolog.terms import (
    App,
    Arrow,
    Base,
    Bd,
    Con,
    Nom,
    OTY,
    Var,
    mk_app,
)

I = Base("i")
N1, N2 = Nom(1, I), Nom(2, I)


@pytest.fixture
def defs():
    d = Definitions()
    x = Var("x", I)
    d.preds["name"] = DefinedPred(
        "name", Arrow(I, OTY), [Clause([], [x], Atom("name", (x,)), Top())], 0
    )
    E = Var("E", I)
    d.preds["fresh"] = DefinedPred(
        "fresh",
        Arrow(I, Arrow(I, OTY)),
        [Clause([E], [Var("x", I)], Atom("fresh", (Var("x", I), E)), Top())],
        1,
    )
    return d


def test_def_left_name_eigenvar_becomes_nominal(defs):
    T = Var("T", I)
    s = Sequent((Hyp("H1", Atom("name", (T,))),), Atom("p", (T,)))
    prems = def_left(s, "H1", defs)
    assert len(prems) == 1
    prem, _ = prems[0]
    assert prem.goal == Atom("p", (N1,))


def test_def_left_name_compound_closes(defs):
    f = Con("f", Arrow(I, I))
    s = Sequent((Hyp("H1", Atom("name", (App(f, Con("c", I)),))),), Bot())
    assert def_left(s, "H1", defs) == []


def test_def_right_name_nominal(defs):
    s = Sequent((), Atom("name", (N1,)))
    opts = list(def_right_options(s, defs))
    assert opts and all(p.goal == Top() for _, p, _ in opts)
    s2 = Sequent((), Atom("name", (Con("c", I),)))
    assert list(def_right_options(s2, defs)) == []


def test_def_right_fresh_scope(defs):
    assert list(def_right_options(Sequent((), Atom("fresh", (N1, N2))), defs))
    assert not list(def_right_options(Sequent((), Atom("fresh", (N1, N1))), defs))
    with pytest.raises(KernelError):
        def_right(Sequent((), Atom("fresh", (N1, N1))), defs)


def test_def_left_fresh_prunes_dependency(defs):
    Ev = Var("E", Arrow(I, I))
    s = Sequent(
        (Hyp("H1", Atom("fresh", (N1, App(Ev, N1)))),),
        Atom("p", (App(Ev, N1),)),
    )
    prems = def_left(s, "H1", defs)
    assert len(prems) == 1
    prem, _ = prems[0]
    # the dependency of E on n1 is raised away: goal head var applied to n2 only
    (arg,) = prem.goal.args
    assert N1 not in list(_noms(arg))


def _noms(t):
    from twolog.terms import support
    return support(t)


def test_rule_id_modulo_permutation():
    s = Sequent((Hyp("H1", Atom("p", (N1, N2))),), Atom("p", (N2, N1)))
    assert rule_id(s, "H1")
    s2 = Sequent((Hyp("H1", Atom("p", (N1, N1))),), Atom("p", (N1, N2)))
    assert not rule_id(s2, "H1")
    s3 = Sequent((Hyp("H1", Atom("p", (N1, N1))),), Atom("p", (N1, N1)))
    assert rule_id(s3, "H1")


def test_eq_rules():
    X = Var("X", I)
    c = Con("c", I)
    s = Sequent((Hyp("H1", Eq(X, c)),), Atom("q", (X,)))
    prems = eq_left(s, "H1")
    assert [p.goal for p in prems] == [Atom("q", (c,))]
    f = Con("f", Arrow(I, I))
    s2 = Sequent((Hyp("H1", Eq(App(f, c), c)),), Bot())
    assert eq_left(s2, "H1") == []
    assert eq_right_closes(Sequent((), Eq(N1, N1))) is not None
    assert eq_right_closes(Sequent((), Eq(N1, N2))) is None


def test_nabla_right_fresh_choice(defs):
    g = Nab(I, Atom("name", (Bd(0),)), hint="x")
    s = nab_right(Sequent((), g))
    assert s.goal == Atom("name", (N1,))
    # nabla under existing support picks the next name
    s2 = nab_right(Sequent((Hyp("H1", Atom("p", (N1,))),), g))
    assert s2.goal == Atom("name", (N2,))


def test_all_right_raises_over_support():
    g = All(I, Atom("p", (Bd(0), N1)), hint="X")
    s = all_right(Sequent((), g))
    (arg, nom) = s.goal.args
    assert nom == N1
    assert isinstance(arg, App) and arg.arg == N1  # X applied to n1


def test_ex_left_raises():
    g = Ex(I, Atom("p", (Bd(0), N1)), hint="V")
    s = Sequent((Hyp("H1", g),), Bot())
    s2, v = ex_left(s, "H1")
    (arg, nom) = s2.hyps[0].formula.args
    assert isinstance(arg, App) and arg.arg == N1


def test_induction_and_annotations(defs):
    d = defs
    step = Con("step", Arrow(I, Arrow(I, ATM)))
    judg = mk_judgment(Con("nil", OLIST), App(Con("f_atm", Arrow(ATM, FORM)), App(App(step, Bd(1)), Bd(0))))
    goal = All(I, All(I, Imp(judg, Eq(Bd(1), Bd(0)))), "M")
    d.preds["seq"] = DefinedPred("seq", Arrow(NT, Arrow(OLIST, Arrow(FORM, OTY))), [], 2)
    d.preds["nat"] = DefinedPred("nat", Arrow(NT, OTY), [], 3)
    s = nat_induct(Sequent((), goal), 1, 1, d)
    assert s.hyps[-1].name == "IH"
    leaves = antecedent_leaves(s.goal)
    assert formula_ann(leaves[0]) == Ann(star=False, gen=1)
    ih_leaves = antecedent_leaves(s.hyps[-1].formula)
    assert formula_ann(ih_leaves[0]) == Ann(star=True, gen=1)
    with pytest.raises(KernelError):
        nat_induct(Sequent((), goal), 2, 1, d)


def test_sugar_pack_unpack(defs):
    d = defs
    d.preds["seq"] = DefinedPred("seq", Arrow(NT, Arrow(OLIST, Arrow(FORM, OTY))), [], 2)
    d.preds["nat"] = DefinedPred("nat", Arrow(NT, OTY), [], 3)
    j = mk_judgment(Con("nil", OLIST), Con("tt", FORM), ann=Ann(star=False, gen=1))
    s = Sequent((Hyp("H1", j),), Bot())
    s2, nat_h, seq_h = sugar_unpack(s, "H1")
    assert s2.hyp(nat_h).formula.pred == "nat"
    assert s2.hyp(seq_h).formula.pred == "seq"
    assert s2.hyp(seq_h).formula.ann == Ann(star=False, gen=1)
    s3, packed = sugar_pack(s2, seq_h, nat_h)
    assert match_judgment(s3.hyp(packed).formula) is not None
    assert formula_ann(s3.hyp(packed).formula) == Ann(star=False, gen=1)


def test_def_left_annotation_propagation(defs):
    # q defined by q X := name X /\ q X: casing q@ gives starred body atoms
    d = defs
    X = Var("X", I)
    d.preds["q"] = DefinedPred(
        "q",
        Arrow(I, OTY),
        [Clause([X], [], Atom("q", (X,)), And(Atom("name", (X,)), Atom("q", (X,))))],
        2,
    )
    T = Var("T", I)
    s = Sequent((Hyp("H1", Atom("q", (T,), Ann(star=False, gen=1))),), Bot())
    prems = def_left(s, "H1", d)
    assert len(prems) == 1
    prem, body_name = prems[0]
    body = prem.hyp(body_name).formula
    assert isinstance(body, And)
    assert body.left.ann == Ann(star=True, gen=1)
    assert body.right.ann == Ann(star=True, gen=1)
