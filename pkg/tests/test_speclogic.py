import pytest

from twolog import parser as P
from twolog.definitions import Definitions
from twolog.elab import NIL, Elab, Scope, Signature
from twolog.formulas import match_judgment
from twolog.pp import form_str, term_str
from twolog.session import Session, SessionError
from twolog.speclogic import (
    SpecError,
    SpecSearch,
    compile_spec,
    install_seq,
    meta_cut,
    meta_inst,
    meta_monotone,
)
from twolog.terms import Nom, normalize

SPEC = open("src/twolog/corpus/stlc.lp").read()


@pytest.fixture(scope="module")
def prog_and_sig():
    sig = Signature()
    prog = compile_spec(sig, SPEC)
    defs = Definitions()
    install_seq(sig, defs, prog)
    return prog, sig, defs


def _goal(sig, text):
    e = Elab(sig, Scope("clause"))
    raw = P.Parser(text).gform()
    return e.zonk_term(e.gform(raw), 0, "query")


def test_compile_clause_shapes(prog_and_sig):
    prog, sig, _ = prog_and_sig
    rendered = [(term_str(pc.head), form_str(pc.body)) for pc in prog.clauses]
    assert ("value (abs A R)", "tt") in rendered
    assert ("steps M M", "tt") in rendered
    assert ("of (app M N) B", "of M (arr A B) , of N A") in rendered
    assert any(
        h == "of (abs A R) (arr A B)" and b == "type A , pi x\\ of x A => of (R x) B"
        for h, b in rendered
    )


def test_compile_round_trip(prog_and_sig):
    """Pretty-printing a compiled clause and recompiling gives the same clause."""
    prog, sig, _ = prog_and_sig
    for pc in prog.clauses:
        if form_str(pc.body) == "tt":
            text = f"{term_str(pc.head)}."
        else:
            text = f"({form_str(pc.body)}) => {term_str(pc.head)}."
        sig2 = Signature()
        prog2 = compile_spec(
            sig2,
            "kind tm. kind ty.\n"
            "i : ty. arr : ty -> ty -> ty.\n"
            "app : tm -> tm -> tm. abs : ty -> (tm -> tm) -> tm.\n"
            "value : tm -> o. step : tm -> tm -> o. steps : tm -> tm -> o.\n"
            "type : ty -> o. of : tm -> ty -> o.\n" + text,
        )
        (pc2,) = prog2.clauses
        assert term_str(pc2.head) == term_str(pc.head)
        assert form_str(pc2.body) == form_str(pc.body)


def test_spec_search_acceptance_queries(prog_and_sig):
    prog, sig, _ = prog_and_sig
    ss = SpecSearch(prog)
    ok = ss.search(NIL, _goal(sig, "of (abs i (x\\ x)) (arr i i)"), 10)
    assert ok is not None
    refuted = ss.search(NIL, _goal(sig, "of (abs i (x\\ x)) i"), 10)
    assert refuted is None
    beta = ss.search(
        NIL, _goal(sig, "steps (app (abs i (x\\ x)) (abs i (x\\ x))) (abs i (x\\ x))"), 10
    )
    assert beta is not None


def test_spec_search_solves_query_variables(prog_and_sig):
    prog, sig, _ = prog_and_sig
    ss = SpecSearch(prog)
    e = Elab(sig, Scope("clause"))
    raw = P.Parser("steps (app (abs i (x\\ x)) (abs i (x\\ x))) R").gform()
    g = e.zonk_term(e.gform(raw), 0, "query")
    sols = []
    noms = []
    sol = ss.search(NIL, g, 10)
    assert sol is not None and "R" in sol
    # enumerate a few solutions and check the beta result is among them
    from twolog.terms import subst_vars
    found = []
    count = 0
    qvars = {"R"}
    env0 = {name: __import__("twolog.unify", fromlist=["VarSupport"]).VarSupport(frozenset()) for name in qvars}
    for theta in ss._solve([(NIL, g)], {}, env0, frozenset(), 10, {"R"}):
        count += 1
        found.append(term_str(normalize(subst_vars(__import__("twolog.terms", fromlist=["Var"]).Var("R", __import__("twolog.terms", fromlist=["Base"]).Base("tm")), theta))))
        if count > 6:
            break
    assert "abs i (x\\ x)" in found


def test_seq_install_verbatim(prog_and_sig):
    _, _, defs = prog_and_sig
    assert [len(defs.clauses_of(p)) for p in ("nat", "element", "member")] == [2, 2, 1]
    # six clauses plus one universal clause for the single quantified type tm
    assert len(defs.clauses_of("seq")) == 6
    assert len(defs.clauses_of("prog")) == 10


def test_double_install_rejected(prog_and_sig):
    prog, sig, defs = prog_and_sig
    with pytest.raises(SpecError, match="already installed"):
        install_seq(sig, defs, prog)


def test_meta_rules_unit(prog_and_sig):
    prog, sig, _ = prog_and_sig
    s = Session(base_dir="src/twolog/corpus")
    s.execute_text('Specification "stlc.lp".')
    e = Elab(s.sig, Scope("clause"))

    def judg(text):
        from twolog.elab import elab_statement
        return elab_statement(s.sig, P.parse_formula_text(text))

    # monotone: weakening/permuting/contracting decided syntactically
    h = judg("{type i}")
    ctx = _ctx(s.sig, "(type i) :: nil")
    res = meta_monotone(h, ctx)
    assert res.evidence is None
    from twolog.pp import formula_str
    assert formula_str(res.formula) == "{type i :: nil |- type i}"
    perm = meta_monotone(judg("{(type i) :: (value (abs i (x\\ x))) :: nil |- type i}"),
                         _ctx(s.sig, "(value (abs i (x\\ x))) :: (type i) :: nil"))
    assert perm.evidence is None
    contr = meta_monotone(judg("{(type i) :: (type i) :: nil |- type i}"),
                          _ctx(s.sig, "(type i) :: nil"))
    assert contr.evidence is None
    # not a subset: evidence subgoal required
    hard = meta_monotone(judg("{(type i) :: nil |- type i}"), _ctx(s.sig, "nil"))
    assert hard.evidence is not None

    # cut
    h1 = judg("{type i}")
    h2 = judg("{(type i) :: nil |- type (arr i i)}")
    out = meta_cut(h1, h2)
    assert formula_str(out) == "{type (arr i i)}"
    with pytest.raises(SpecError):
        meta_cut(h1, judg("{(value (abs i (x\\ x))) :: nil |- type i}"))

    # inst: replace a support constant; absent constants are vacuous
    from twolog.elab import CONS, NIL as NIL_C, F_ATM
    from twolog.formulas import mk_judgment, support_f
    from twolog.terms import App, Base, Con, Nom

    TM, TY = Base("tm"), Base("ty")
    n1 = Nom(1, TM)
    of_c = Con("of", s.sig.consts["of"])
    i_c = Con("i", TY)
    atom = App(App(of_c, n1), i_c)
    jf = mk_judgment(App(App(CONS, atom), NIL_C), App(F_ATM, atom))
    inst1 = meta_inst(jf, n1, Con("c_abs", TM) if False else App(App(Con("app", s.sig.consts["app"]), n1), n1))
    # replacing n1 by a term mentioning n1 keeps support; replacing by a
    # closed term removes it
    closed = meta_inst(jf, n1, App(App(Con("app", s.sig.consts["app"]),
                                       Con("absx", TM) if False else i_term(s)), i_term(s)))
    assert support_f(closed) == frozenset()
    vac = meta_inst(mk_judgment(NIL_C, App(F_ATM, App(App(of_c, i_term(s)), i_c))), n1, i_term(s))
    assert support_f(vac) == frozenset()


def i_term(s):
    from twolog.terms import App, Con
    abs_c = Con("abs", s.sig.consts["abs"])
    from twolog.terms import Lam, Bd, Base
    return App(App(abs_c, Con("i", Base("ty"))), Lam(Base("tm"), Bd(0)))


def _ctx(sig, text):
    e = Elab(sig, Scope("clause"))
    t, _ = e.term(P.parse_term_text(text), None, 0)
    from twolog.formulas import OLIST
    return e.zonk_term(t, 0, "ctx")
