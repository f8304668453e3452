import pytest

from twolog.definitions import DefinitionError, Definitions, elaborate_define, raise_clause
from twolog.elab import Signature
from twolog.formulas import ATM, Atom, Top
from twolog.parser import ParseError, Parser
from twolog.session import Session, SessionError
from twolog.terms import Arrow, Base, Nom, OTY, Var


def _define(session, text):
    return session.execute_text(text)


@pytest.fixture
def spec_session():
    s = Session(base_dir="src/twolog/corpus")
    s.execute_text('Specification "stlc.lp".')
    return s


def test_name_fresh_definitions_accepted(spec_session):
    _define(spec_session, "Define name : tm -> o by nabla x, name x.")
    _define(
        spec_session,
        "Define fresh : tm -> tm -> o by nabla x, fresh x E.",
    )
    assert spec_session.defs.is_defined("name")
    assert spec_session.defs.is_defined("fresh")


def test_reduce_rejected_without_override(spec_session):
    text = """Define reduce : tm -> ty -> o by
      reduce M i := {of M i} ;
      reduce M (arr A B) := forall N, reduce N A -> reduce (app M N) B."""
    with pytest.raises(SessionError, match="stratification"):
        _define(spec_session, text + "\n")
    # rejection must not leave a half-registered predicate behind
    assert not spec_session.defs.is_defined("reduce")
    assert "reduce" not in spec_session.sig.preds
    _define(spec_session, text.replace("Define", "Define override", 1) + "\n")
    assert spec_session.defs.preds["reduce"].override
    assert [e for e in spec_session.trust if e.kind == "override"]


def test_direct_negative_self_loop_rejected(spec_session):
    with pytest.raises(SessionError, match="stratification"):
        _define(spec_session, "Define p : tm -> o by p X := p X -> false.")
    _define(spec_session, "Define override p : tm -> o by p X := p X -> false.")
    assert spec_session.defs.preds["p"].override


def test_positive_self_reference_allowed(spec_session):
    _define(spec_session, "Define nats : nt -> o by nats z ; nats (s N) := nats N.")
    assert not spec_session.defs.preds["nats"].override


def test_duplicate_definition_flagged(spec_session):
    _define(spec_session, "Define p : tm -> o by p X.")
    with pytest.raises(SessionError, match="already declared"):
        _define(spec_session, "Define p : tm -> o by p X.")


def test_nominal_constant_forbidden_in_clause(spec_session):
    with pytest.raises(SessionError, match="nominal"):
        _define(spec_session, "Define p : tm -> o by p n1.")


def test_body_variable_must_be_head_bound(spec_session):
    with pytest.raises(SessionError):
        _define(spec_session, "Define p : tm -> o by p X := q Y.")


def test_raise_clause_shapes():
    I = Base("i")
    E = Var("E", I)
    x = Var("x", I)
    c = __import__("twolog.definitions", fromlist=["Clause"]).Clause(
        [E], [x], Atom("fresh", (x, E)), Top()
    )
    n1 = Nom(1, I)
    rc = raise_clause(c, [n1], {"E", "x"})
    # E becomes a fresh variable applied to n1
    (xa, ea) = rc.head.args
    from twolog.terms import App
    assert isinstance(ea, App) and ea.arg == n1
    # raising over nothing still renames apart
    rc0 = raise_clause(c, [], {"E", "x"})
    assert rc0.uvars[0].name != "E"
    assert rc0.head.args[0] == x
