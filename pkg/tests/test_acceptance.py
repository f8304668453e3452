"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.
"""

import random
import subprocess
import sys
import time

import pytest

from twolog import parser as P
from twolog.elab import NIL, Elab, Scope
from twolog.formulas import And, Atom, Ex, Nab, Or, mk_judgment
from twolog.kernel import Hyp, Sequent
from twolog.session import Session, SessionError
from twolog.speclogic import SpecSearch
from twolog.tactics import TacticError, case, search
from twolog.terms import App, Base, Bd, Con, Lam, NS_PERM, normalize
from twolog.unify import UnifProblem, unify_pattern

from oracle import enumerate_unifiers, factors_through, random_pattern_problem

CORPUS = "src/twolog/corpus"
WN = f"{CORPUS}/wn.thm"
TYPEUNIQ = f"{CORPUS}/typeuniq.thm"
METAPROPS = f"{CORPUS}/metaprops.thm"

WN_THEOREMS = [
    "step_det",            # one step of evaluation is deterministic
    "of_step",             # evaluation preserves typing
    "halts_step",          # halts invariance under step
    "reduce_step",         # reduce preservation
    "type_prune",          # types contain no nominals
    "ctx_type",            # type-context irrelevance
    "of_prune",            # nominals in of judgments occur in the context
    "member_prune",        # member nominal containment
    "of_type",             # typing yields well-formed types
    "subst_closed",        # closed terms unaffected by substitutions
    "subst_app",           # application compositionality
    "subst_abs",           # abstraction compositionality
    "subst_of",            # substitution preserves typing
    "normalize_general",   # the generalized theorem
    "weak_norm",           # the final corollary
]


def _batch(*files: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "twolog", "--batch", *files],
        capture_output=True,
        text=True,
    )


def test_corpus_replay_weak_normalization():
    t0 = time.time()
    proc = _batch(WN)
    wall = time.time() - t0
    assert proc.returncode == 0, proc.stderr
    s = Session(base_dir=CORPUS)
    s.load(WN)
    for name in WN_THEOREMS:
        assert name in s.lemmas, f"missing theorem {name}"
    assert wall < 60.0
    print(f"PASS corpus replay: weak-normalization development, {wall:.1f}s")


def test_section3_regression():
    t0 = time.time()
    proc = _batch(TYPEUNIQ, METAPROPS)
    wall = time.time() - t0
    assert proc.returncode == 0, proc.stderr
    s = Session(base_dir=CORPUS)
    s.load(TYPEUNIQ)
    assert "type_uniq" in s.lemmas
    s2 = Session(base_dir=CORPUS)
    s2.load(METAPROPS)
    for name in ("type_subst", "ctx_weaken", "ctx_permute", "ctx_contract"):
        assert name in s2.lemmas
    rules = [e.detail for e in s2.trust if e.kind == "rule"]
    assert rules.count("inst") == 1 and rules.count("cut") == 1
    assert rules.count("monotone") == 3
    print(f"PASS section-3 regression: type uniqueness + meta-property corollaries, {wall:.1f}s")


# ---------------------------------------------------------------------------

ANIMATION_QUERIES = [
    ("of (abs i (x\\ x)) (arr i i)", True),
    ("steps (app (abs i (x\\ x)) (abs i (x\\ x))) (abs i (x\\ x))", True),
    ("of (abs i (x\\ x)) i", False),
]


def test_spec_animation_and_oracle_equivalence():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    ss = SpecSearch(s.program)
    for text, expected in ANIMATION_QUERIES:
        e = Elab(s.sig, Scope("clause"))
        goal = e.zonk_term(e.gform(P.Parser(text).gform()), 0, "query")
        found = ss.search(NIL, goal, 10) is not None
        assert found == expected, f"spec_search on {text}"
        # kernel-level oracle: the same query as a sequent goal
        seq = Sequent((), mk_judgment(NIL, goal))
        kernel_found = search(s.prover(), seq, depth=10)
        assert kernel_found == expected, f"kernel search on {text}"
    print("PASS spec animation: animator and kernel unfolding agree on all queries")


# ---------------------------------------------------------------------------

def test_unifier_oracle_thousand_problems():
    rng = random.Random(2026)
    checked = mgu_count = none_count = 0
    while checked < 1000:
        prob = random_pattern_problem(rng)
        kind, u = unify_pattern(prob)
        assert kind != "nonpattern", "generator must stay in the pattern fragment"
        sols = enumerate_unifiers(prob)
        if kind == "no":
            assert sols == [], "NoSolution must be definitive"
            none_count += 1
        else:
            from twolog.terms import subst_vars
            for sone, stwo in prob.eqs:
                assert normalize(subst_vars(sone, u.subst)) == normalize(
                    subst_vars(stwo, u.subst)
                )
            for theta in sols:
                assert factors_through(theta, u.subst, prob)
            mgu_count += 1
        checked += 1
    assert mgu_count >= 100
    print(
        f"PASS unifier oracle: {checked} problems "
        f"({mgu_count} MGUs factor-checked, {none_count} NoSolution confirmed empty)"
    )


# ---------------------------------------------------------------------------

def _permuted_namespace(seed: int, size: int = 64):
    rng = random.Random(seed)
    table = list(range(1, size + 1))
    rng.shuffle(table)

    def perm(ty, k):
        return table[k - 1] if k <= size else k

    return perm


@pytest.mark.parametrize("path", [WN, TYPEUNIQ, METAPROPS])
def test_equivariance_replay_under_permuted_namespace(path):
    token = NS_PERM.set(_permuted_namespace(20260809))
    try:
        s = Session(base_dir=CORPUS)
        s.load(path)
        assert s.state is None
    finally:
        NS_PERM.reset(token)
    print(f"PASS equivariance: {path.split('/')[-1]} replays under a permuted namespace")


# ---------------------------------------------------------------------------

def _mini_prover(session):
    prover = session.prover()

    def derivable(seq, depth=0) -> bool:
        if depth > 8:
            return False
        if search(prover, seq, depth=4):
            return True
        for h in seq.hyps:
            from twolog.formulas import Eq as FEq
            if isinstance(h.formula, (Nab, And, Or, Ex, FEq)):
                try:
                    prems = case(prover, seq, h.name)
                except TacticError:
                    continue
                if all(derivable(p, depth + 1) for p in prems):
                    return True
        return False

    return derivable


def _nabla_test_session():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    s.execute_text("Define pp : tm -> o by pp X := pp X.")
    s.execute_text("Define qq : tm -> tm -> o by qq X X := qq X X.")
    return s


def _random_open_formula(rng, nvars):
    """Formula over bound variables Bd(0..nvars-1) of type tm."""
    TM = Base("tm")

    def leaf():
        i = rng.randrange(nvars)
        j = rng.randrange(nvars)
        which = rng.random()
        if which < 0.45:
            return Atom("qq", (Bd(i), Bd(j)))
        if which < 0.7:
            return Atom("pp", (Bd(i),))
        ground = App(App(Con("abs", None), Con("i", None)), Lam(TM, Bd(0)))
        return Atom("qq", (Bd(i), App(App(Con("app", _app_ty()), _ground()), _ground())))

    def go(depth):
        if depth == 0:
            return leaf()
        r = rng.random()
        if r < 0.4:
            return And(go(depth - 1), go(depth - 1))
        if r < 0.6:
            return Or(go(depth - 1), go(depth - 1))
        return leaf()

    return go(2)


def _app_ty():
    TM = Base("tm")
    from twolog.terms import Arrow
    return Arrow(TM, Arrow(TM, TM))


def _ground():
    TM, TY = Base("tm"), Base("ty")
    from twolog.terms import Arrow
    abs_ty = Arrow(TY, Arrow(Arrow(TM, TM), TM))
    return App(App(Con("abs", abs_ty), Con("i", TY)), Lam(TM, Bd(0)))


def _fix_leaf_types(f):
    return f


def test_nabla_structural_checks():
    s = _nabla_test_session()
    derivable = _mini_prover(s)
    rng = random.Random(7180)
    TM = Base("tm")
    checked = 0
    for _ in range(10):
        # strengthening: nabla x, F  <->  F  when x is not free in F
        body = _random_open_formula(rng, 1)  # uses Bd(0) = a dummy var below
        from twolog.formulas import open_f
        ground = open_f(body, _ground())
        nab = Nab(TM, _shift_f(ground), hint="x")
        assert derivable(Sequent((Hyp("H1", nab),), ground)), "nabla-strengthening ->"
        assert derivable(Sequent((Hyp("H1", ground),), nab)), "nabla-strengthening <-"
        checked += 1
    for _ in range(10):
        # exchange: nabla x y, F  <->  nabla y x, F
        body = _random_open_formula(rng, 2)
        xy = Nab(TM, Nab(TM, body, hint="y"), hint="x")
        yx = Nab(TM, Nab(TM, _swap_top2(body), hint="x"), hint="y")
        assert derivable(Sequent((Hyp("H1", xy),), yx)), "nabla-exchange ->"
        assert derivable(Sequent((Hyp("H1", yx),), xy)), "nabla-exchange <-"
        checked += 1
    assert checked == 20
    print("PASS nabla structural checks: strengthening and exchange on 20 formulas")


def _shift_f(f):
    from twolog.formulas import shift_f
    return shift_f(f, 1)


def _swap_top2(f):
    """Swap Bd(0) and Bd(1) (exchange the two outer binders)."""
    from twolog.formulas import map_terms
    from twolog.terms import Bd as TBd

    def sw(t, depth):
        def go(u, d):
            match u:
                case TBd(k):
                    if k == d:
                        return TBd(d + 1)
                    if k == d + 1:
                        return TBd(d)
                    return u
                case App(fn, a):
                    return App(go(fn, d), go(a, d))
                case Lam(ty, b, hint):
                    return Lam(ty, go(b, d + 1), hint)
                case _:
                    return u
        return go(t, depth)

    return map_terms(f, sw)


# ---------------------------------------------------------------------------

def test_stratification_override_and_trust_report():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    reduce_text = """Define reduce : tm -> ty -> o by
      reduce M i := {of M i} ;
      reduce M (arr A B) := forall N, reduce N A -> reduce (app M N) B."""
    with pytest.raises(SessionError, match="stratification"):
        s.execute_text(reduce_text + "\n")
    s.execute_text(reduce_text.replace("Define", "Define override", 1) + "\n")
    assert s.defs.preds["reduce"].override

    full = Session(base_dir=CORPUS)
    full.load(WN)
    overrides = [e for e in full.trust if e.kind == "override"]
    assert len(overrides) == 1 and overrides[0].detail == "reduce"
    print("PASS stratification: reduce rejected without override, trust report lists exactly one override")
