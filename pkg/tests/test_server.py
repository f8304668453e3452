import json

import pytest
from fastapi.testclient import TestClient

from twolog.server import make_app
from twolog.session import Session

CORPUS = "src/twolog/corpus"


@pytest.fixture
def client():
    app = make_app(Session(base_dir=CORPUS))
    with TestClient(app) as c:
        yield c


def _hello(client, name=None):
    r = client.post("/api/session", json={"name": name} if name else {})
    assert r.status_code == 200
    h = r.json()
    return h["session"], h["token"]


def _cmd(client, sid, token, text):
    r = client.post(f"/api/session/{sid}/command", json={"token": token, "text": text})
    assert r.status_code == 200
    return r.json()


def test_snapshot_schema_and_version(client):
    sid, token = _hello(client)
    out = _cmd(client, sid, token, 'Specification "stlc.lp".')
    assert out["v"] == 1 and out["type"] == "ok"
    snap = out["snapshot"]
    assert snap["mode"] == "top"
    assert "sl_and" in snap["lemmas"]


def test_proof_interaction_and_premise_count(client):
    sid, token = _hello(client)
    _cmd(client, sid, token, 'Specification "stlc.lp".')
    _cmd(client, sid, token, "Theorem two : forall M N P, {step M N} -> {step M P} -> N = P.")
    _cmd(client, sid, token, "induction on 1.")
    _cmd(client, sid, token, "intros.")
    out = _cmd(client, sid, token, "case H1.")
    snap = out["snapshot"]
    assert snap["subgoal_count"] == 3
    names = [h["name"] for h in snap["goals"][0]["hypotheses"]]
    assert "IH" in names


def test_error_reply_keeps_state(client):
    sid, token = _hello(client)
    _cmd(client, sid, token, 'Specification "stlc.lp".')
    _cmd(client, sid, token, "Theorem t : forall M N, {step M N} -> {step M N}.")
    before = _cmd(client, sid, token, "intros.")["snapshot"]
    out = _cmd(client, sid, token, "case H99.")
    assert out["type"] == "error" and "H99" in out["error"]
    assert out["snapshot"] == before


def test_undo_returns_previous_snapshot(client):
    sid, token = _hello(client)
    _cmd(client, sid, token, 'Specification "stlc.lp".')
    _cmd(client, sid, token, "Theorem t : forall M N, {step M N} -> {step M N}.")
    snap1 = _cmd(client, sid, token, "intros.")["snapshot"]
    _cmd(client, sid, token, "search.")
    out = _cmd(client, sid, token, "undo.")
    got = dict(out["snapshot"])
    # the transcript grows by the recorded lines; the proof state is restored
    assert got["goals"] == snap1["goals"]
    assert got["subgoal_count"] == snap1["subgoal_count"]


def test_single_writer(client):
    sid, token = _hello(client, name="shared")
    r = client.post("/api/session", json={"name": "shared"})
    assert r.status_code == 409
    r2 = client.post(f"/api/session/{sid}/command", json={"token": "bad", "text": "undo."})
    assert r2.status_code == 403


def test_concurrent_sessions_are_independent(client):
    sid1, tok1 = _hello(client)
    sid2, tok2 = _hello(client)
    _cmd(client, sid1, tok1, 'Specification "stlc.lp".')
    out1 = _cmd(client, sid1, tok1, "Theorem a : true. search. qed.")
    out2 = _cmd(client, sid2, tok2, 'Specification "stlc.lp".')
    assert "a" in out1["snapshot"]["lemmas"]
    assert "a" not in out2["snapshot"]["lemmas"]


def test_event_stream_carries_snapshots(client):
    sid, token = _hello(client)
    _cmd(client, sid, token, 'Specification "stlc.lp".')
    r = client.get(f"/api/session/{sid}/events?once=true")
    first = next(l for l in r.text.splitlines() if l.startswith("data: "))
    msg = json.loads(first[len("data: "):])
    assert msg["type"] == "snapshot" and msg["v"] == 1
    assert "sl_and" in msg["lemmas"]


def test_wire_formulas_round_trip(client):
    from twolog.elab import elab_tactic_formula
    from twolog.kernel import eigen_vars
    from twolog.parser import parse_formula_text
    from twolog.pp import formula_str
    from twolog.tactics import noms_in_scope

    sid, token = _hello(client)
    _cmd(client, sid, token, 'Specification "stlc.lp".')
    _cmd(client, sid, token, "Theorem t : forall M N P, {step M N} -> {step M P} -> N = P.")
    out = _cmd(client, sid, token, "induction on 1. intros. case H1.")
    snap = out["snapshot"]
    # a parallel session reconstructs the sequent scope for re-elaboration
    sess = Session(base_dir=CORPUS)
    sess.execute_text('Specification "stlc.lp".')
    sess.execute_text("Theorem t : forall M N P, {step M N} -> {step M P} -> N = P.")
    sess.execute_text("induction on 1. intros. case H1.")
    seq = sess.state.goals[0]
    scope_e, scope_n = eigen_vars(seq), noms_in_scope(seq)
    for h in snap["goals"][0]["hypotheses"]:
        f = elab_tactic_formula(sess.sig, parse_formula_text(h["formula"]), scope_e, scope_n)
        assert formula_str(f, wire=True) == h["formula"]
    g = elab_tactic_formula(sess.sig, parse_formula_text(snap["goals"][0]["goal"]), scope_e, scope_n)
    assert formula_str(g, wire=True) == snap["goals"][0]["goal"]
