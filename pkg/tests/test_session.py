import subprocess
import sys

import pytest

from twolog.session import Session, SessionError

CORPUS = "src/twolog/corpus"

DEMO = """
Specification "stlc.lp".
Theorem id_typing : {of (abs i (x\\ x)) (arr i i)}.
search.
qed.
Define halting : tm -> o by
  halting M := exists V, {steps M V} /\\ {value V}.
Theorem trivial_halt : forall A R, halting (abs A R).
intros. search.
qed.
"""


def test_transcript_replay_is_byte_identical():
    s = Session(base_dir=CORPUS)
    s.execute_text(DEMO)
    first = s.serialize()
    replay = Session(base_dir=CORPUS)
    replay.execute_text("\n".join(s.transcript))
    assert replay.serialize() == first


def test_transcript_excludes_support_script():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    assert s.transcript == ['Specification "stlc.lp".']
    assert "sl_and" in s.lemmas


def test_undo_restores_state_and_trust():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    s.execute_text(
        "Theorem t : forall R N A B,"
        " (nabla x, {(of x A) :: nil |- of (R x) B}) -> {of N A} -> {of (R N) B}."
    )
    s.execute_text("intros. case H1.")
    before = s.serialize()
    trust_before = len(s.trust)
    s.execute_text("inst H3 with N.")
    assert len(s.trust) == trust_before + 1
    s.execute_text("undo.")
    assert len(s.trust) == trust_before
    # undo is recorded in the transcript but the proof state is restored
    s2 = Session(base_dir=CORPUS)
    s2.execute_text("\n".join(s.transcript))
    assert s2.serialize() == s.serialize()
    s.execute_text("inst H3 with N. cut H2 H4. search. qed.")
    assert "t" in s.lemmas


def test_tactic_failure_leaves_state_unchanged():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    s.execute_text("Theorem t : forall M N, {step M N} -> {step M N}.")
    before = s.serialize()
    with pytest.raises(SessionError):
        s.execute_text("case H7.")
    assert s.serialize() == before
    with pytest.raises(SessionError):
        s.execute_text("split.")
    assert s.serialize() == before


def test_qed_with_open_subgoals_rejected():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    s.execute_text("Theorem t : forall M N, {step M N} -> {step M N}.")
    with pytest.raises(SessionError, match="open subgoals"):
        s.execute_text("qed.")


def test_duplicate_names_error():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    s.execute_text("Theorem t : forall M N, {step M N} -> {step M N}. intros. search. qed.")
    with pytest.raises(SessionError, match="duplicate"):
        s.execute_text("Theorem t : true.")
    with pytest.raises(SessionError, match="already loaded"):
        s.execute_text('Specification "stlc.lp".')


def test_halting_script_reports_line(tmp_path):
    bad = tmp_path / "bad.thm"
    bad.write_text(
        'Specification "stlc.lp".\n\nTheorem nope : forall M, {value M} -> false.\n'
        "intros.\ncase H1.\nsearch.\nqed.\n"
    )
    # the specification file is resolved relative to the script; copy it next door
    import shutil
    shutil.copy(f"{CORPUS}/stlc.lp", tmp_path / "stlc.lp")
    s = Session()
    with pytest.raises(SessionError) as e:
        s.load(str(bad))
    assert e.value.line == 6
    assert e.value.kind == "proof"


def test_batch_cli_exit_codes(tmp_path):
    import shutil
    shutil.copy(f"{CORPUS}/stlc.lp", tmp_path / "stlc.lp")
    good = tmp_path / "good.thm"
    good.write_text('Specification "stlc.lp".\nTheorem t : true.\nsearch.\nqed.\n')
    bad_proof = tmp_path / "badproof.thm"
    bad_proof.write_text('Specification "stlc.lp".\nTheorem t : false.\nsearch.\nqed.\n')
    bad_parse = tmp_path / "badparse.thm"
    bad_parse.write_text("Theorem t : forall , true.\n")

    def run(*files):
        return subprocess.run(
            [sys.executable, "-m", "twolog", "--batch", *files],
            capture_output=True, text=True,
        ).returncode

    assert run(str(good)) == 0
    assert run(str(bad_proof)) == 1
    assert run(str(bad_parse)) == 2


def test_set_search_depth():
    s = Session(base_dir=CORPUS)
    s.execute_text('Specification "stlc.lp".')
    s.execute_text("Set search_depth 9.")
    assert s.search_depth == 9
