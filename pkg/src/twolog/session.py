"""Sessions: command execution, script loading, transcripts, trust report.

A session executes `.`-terminated commands (definitions, theorem
declarations, tactics).  `Specification "file.lp".` compiles a
specification, installs the seq/prog embedding, and then proves the
spec-logic support lemmas (leq totality, seq height monotonicity, and
the judgment composition lemmas) by running a generated support script;
those lemmas are what `search` composes judgments with.

The transcript records the exact source text of every successfully
executed user command; replaying it from an empty session reconstructs
the session state byte-for-byte (`serialize`).
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Optional

from . import parser as P
from . import tactics as T
from .definitions import DefinitionError, Definitions, elaborate_define
from .elab import Signature, elab_statement
from .formulas import Formula, formula_ann
from .kernel import KernelError, Sequent, eigen_vars
from .parser import ParseError
from .pp import formula_str, term_str, ty_str
from .speclogic import SpecError, SpecProgram, SpecSearch, compile_spec, install_seq
from .tactics import ProofState, Prover, TacticError, TrustEvent, initial_state, step
from .terms import Ty


class SessionError(Exception):
    def __init__(self, msg: str, line: int = 0, kind: str = "error"):
        super().__init__(msg)
        self.line = line
        self.kind = kind  # "parse" | "proof" | "error"


def _ty_slug(ty: Ty) -> str:
    from .terms import Arrow, Base
    if isinstance(ty, Base):
        return ty.name
    assert isinstance(ty, Arrow)
    return _ty_slug(ty.left) + "_to_" + _ty_slug(ty.right)


PRELUDE_HEAD = """
Define leq : nt -> nt -> o by
  leq z N ;
  leq (s M) (s N) := leq M N.

Theorem sl_le_total : forall M N, nat M -> nat N -> leq M N \\/ leq N M.
induction on 1. intros. case H1.
left. search.
case H2.
right. search.
apply IH to H3 H4. case H5.
left. search.
right. search.
qed.
"""

PRELUDE_TAIL = """
Theorem sl_mem : forall L A, member A L -> {L |- <A>}.
intros. search.
qed.

Theorem sl_fact : forall L A, prog A tt -> {L |- <A>}.
intros. search.
qed.

Theorem sl_bc : forall L A G, prog A G -> {L |- G} -> {L |- <A>}.
intros. case H2. search.
qed.

Theorem sl_imp : forall L A G, {A :: L |- G} -> {L |- A => G}.
intros. case H1. search.
qed.

Theorem sl_and : forall L G1 G2, {L |- G1} -> {L |- G2} -> {L |- G1 , G2}.
intros. case H1. case H2.
apply sl_le_total to H4 H7. case H9.
apply sl_height_le to H10 H5. search.
apply sl_height_le to H10 H8. search.
qed.
"""


def _height_le_script(pi_types: list[Ty]) -> str:
    """Proof of sl_height_le, with one fall case per quantified type."""
    cases = [
        # member clause: any height works
        "search.",
        # f_and: both conjuncts lifted
        "case H1. apply IH to H6 H4. apply IH to H6 H5. search.",
        # f_imp
        "case H1. apply IH to H4 H3. search.",
    ]
    for _ in pi_types:
        cases.append("case H3. case H1. apply IH to H5 H4. search.")
    cases += [
        # exists b, prog A b /\\ seq N' L b
        "case H1. apply IH to H7 H6. search.",
        # prog A tt
        "case H1. search.",
    ]
    body = "\n".join(cases)
    return (
        "Theorem sl_height_le : forall N M L G, leq N M -> seq N L G -> seq M L G.\n"
        "induction on 2. intros. case H2.\n" + body + "\nqed.\n"
    )


def _nat_prune_script(ty: Ty) -> str:
    """A nat value is a numeral, so it cannot depend on a nominal constant."""
    slug = _ty_slug(ty)
    t = ty_str(ty)
    return (
        f"Theorem sl_nat_prune_{slug} : forall N, nabla (x:{t}), nat (N x) -> "
        "exists M, N = y\\ M.\n"
        "induction on 1. intros. case H1.\n"
        "search.\n"
        "apply IH to H2. case H4. search.\n"
        "qed.\n"
    )


def _all_lemma_script(ty: Ty) -> str:
    slug = _ty_slug(ty)
    t = ty_str(ty)
    return (
        f"Theorem sl_all_{slug} : forall L B, (nabla (x:{t}), {{L |- B x}}) -> "
        f"{{L |- pi (y:{t})\\ B y}}.\n"
        f"intros. case H1. case H2. apply sl_nat_prune_{slug} to H4. case H7. search.\n"
        "qed.\n"
    )


def support_script(pi_types: list[Ty]) -> str:
    parts = [PRELUDE_HEAD, _height_le_script(pi_types)]
    for ty in pi_types:
        parts.append(_nat_prune_script(ty))
        parts.append(_all_lemma_script(ty))
    parts.append(PRELUDE_TAIL)
    return "\n".join(parts)


@dataclass
class Session:
    search_depth: int = 5
    verify_meta: bool = False
    base_dir: str = "."
    sig: Signature = field(default_factory=Signature)
    defs: Definitions = field(default_factory=Definitions)
    lemmas: dict[str, Formula] = field(default_factory=dict)
    program: Optional[SpecProgram] = None
    state: Optional[ProofState] = None
    transcript: list[str] = field(default_factory=list)
    trust: list[TrustEvent] = field(default_factory=list)
    history: list[tuple[ProofState, int]] = field(default_factory=list)
    _theorem: str = ""
    _in_prelude: bool = False
    meta_verified: int = 0
    meta_skipped: int = 0

    # -- prover view

    def prover(self) -> Prover:
        return Prover(
            self.sig,
            self.defs,
            self.lemmas,
            self.program,
            self.search_depth,
            self.trust,
            self._theorem,
            self.verify_meta,
        )

    # -- command execution

    def execute_text(self, text: str) -> list[str]:
        msgs: list[str] = []
        for cmd, src in P.Parser(text).commands_with_source():
            msgs.extend(self.execute(cmd, src))
        return msgs

    def execute(self, cmd: P.Command, source: str) -> list[str]:
        msgs = self._dispatch(cmd, source)
        return msgs

    def _dispatch(self, cmd: P.Command, source: str) -> list[str]:
        match cmd:
            case P.SpecCmd(path, line):
                self._no_proof(cmd)
                if self.program is not None:
                    raise SessionError("a specification is already loaded", line)
                full = os.path.join(self.base_dir, path)
                try:
                    with open(full, "r", encoding="utf-8") as fh:
                        text = fh.read()
                except OSError as e:
                    raise SessionError(f"cannot read {path!r}: {e}", line) from e
                try:
                    program = compile_spec(self.sig, text)
                    install_seq(self.sig, self.defs, program)
                except (SpecError, ParseError, DefinitionError) as e:
                    raise SessionError(str(e), line, "parse") from e
                self.program = program
                self._record(source)
                self._run_support_script(line)
                return [f"specification {path!r} loaded ({len(program.clauses)} clauses)"]
            case P.DefineCmd():
                self._no_proof(cmd)
                try:
                    name, ty, clauses = elaborate_define(self.sig, cmd)
                    pred = self.defs.add(self.sig, name, ty, clauses, cmd.override)
                except (ParseError, DefinitionError) as e:
                    if isinstance(e, DefinitionError) and cmd.name in self.sig.preds:
                        del self.sig.preds[cmd.name]
                    raise SessionError(str(e), cmd.line, "parse") from e
                if pred.override:
                    self.trust.append(
                        TrustEvent("override", cmd.name, self._theorem or "(top level)")
                    )
                self._record(source)
                return [f"predicate {name} defined"]
            case P.TheoremCmd(name, raw, line):
                self._no_proof(cmd)
                if name in self.lemmas or name in ("IH",):
                    raise SessionError(f"duplicate theorem name {name!r}", line)
                try:
                    f = elab_statement(self.sig, raw, line)
                except ParseError as e:
                    raise SessionError(str(e), line, "parse") from e
                self.state = initial_state(name, f)
                self._theorem = name
                self.history = []
                self._record(source)
                return [f"proving {name}"]
            case P.QedCmd(line):
                if self.state is None:
                    raise SessionError("no proof in progress", line)
                if not self.state.done:
                    raise SessionError(
                        f"qed with {len(self.state.goals)} open subgoals", line, "proof"
                    )
                self.lemmas[self.state.name] = self.state.statement
                msg = f"theorem {self.state.name} proved"
                self.state = None
                self._theorem = ""
                self.history = []
                self._record(source)
                return [msg]
            case P.SetCmd(opt, val, line):
                if opt == "search_depth":
                    self.search_depth = int(val)
                else:
                    raise SessionError(f"unknown option {opt!r}", line)
                self._record(source)
                return [f"{opt} set to {val}"]
            case P.QuitCmd():
                raise EOFError
            case P.TacticCmd():
                return self._tactic(cmd, source)
        raise SessionError(f"unhandled command {cmd!r}")

    def _tactic(self, cmd: P.TacticCmd, source: str) -> list[str]:
        if self.state is None:
            raise SessionError(f"{cmd.name}: no proof in progress", cmd.line)
        if cmd.name == "undo":
            if not self.history:
                raise SessionError("nothing to undo", cmd.line)
            state, trust_len = self.history.pop()
            self.state = state
            del self.trust[trust_len:]
            self._record(source)
            return ["undone"]
        if cmd.name == "abort":
            self.state = None
            self._theorem = ""
            self.history = []
            self._record(source)
            return ["proof aborted"]
        snapshot = (self.state, len(self.trust))
        try:
            new_state = step(self.prover(), self.state, cmd)
        except TacticError as e:
            raise SessionError(f"{cmd.name}: {e}", cmd.line, "proof") from e
        self.history.append(snapshot)
        self.state = new_state
        self._record(source)
        if new_state.done:
            return ["proof completed; conclude with qed."]
        return [f"{len(new_state.goals)} subgoal(s)"]

    def _no_proof(self, cmd) -> None:
        if self.state is not None:
            raise SessionError(
                "finish or abort the current proof first", getattr(cmd, "line", 0)
            )

    def _record(self, source: str) -> None:
        if not self._in_prelude:
            self.transcript.append(" ".join(source.split()))

    def _run_support_script(self, line: int) -> None:
        assert self.program is not None
        text = support_script(self.program.pi_types)
        self._in_prelude = True
        try:
            self.execute_text(text)
        except SessionError as e:
            raise SessionError(f"internal: support script failed: {e}", line) from e
        finally:
            self._in_prelude = False

    # -- loading

    def load(self, path: str) -> list[str]:
        """Load a .thm script or a specification file."""
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        old_base = self.base_dir
        self.base_dir = os.path.dirname(os.path.abspath(path))
        try:
            if path.endswith(".lp"):
                rel = os.path.basename(path)
                return self.execute_text(f'Specification "{rel}".')
            return self.execute_text(text)
        finally:
            self.base_dir = old_base

    # -- display / serialization

    def show_focus(self) -> str:
        if self.state is None:
            return "(no proof in progress)"
        if self.state.done:
            return "(proof completed; conclude with qed.)"
        return show_sequent(self.state.goals[0], len(self.state.goals))

    def serialize(self) -> str:
        out = io.StringIO()
        out.write("twolog-session v1\n")
        out.write("[definitions]\n")
        for name, pred in self.defs.preds.items():
            out.write(f"{name} : {ty_str(pred.ty)} ({len(pred.clauses)} clauses)\n")
        out.write("[lemmas]\n")
        for name, f in self.lemmas.items():
            out.write(f"{name} : {formula_str(f, wire=True)}\n")
        out.write("[state]\n")
        if self.state is None:
            out.write("-\n")
        else:
            out.write(f"theorem {self.state.name}\n")
            for g in self.state.goals:
                out.write(sequent_wire(g) + "\n")
        out.write("[trust]\n")
        for ev in self.trust:
            out.write(f"{ev.kind} {ev.detail} in {ev.theorem}\n")
        out.write("[transcript]\n")
        for line in self.transcript:
            out.write(line + "\n")
        return out.getvalue()

    def trust_report(self) -> str:
        out = io.StringIO()
        overrides = [ev for ev in self.trust if ev.kind == "override"]
        rules = [ev for ev in self.trust if ev.kind == "rule"]
        out.write(f"trust report: {len(overrides)} override(s), {len(rules)} trusted-rule use(s)\n")
        for ev in overrides:
            out.write(f"  override: definition {ev.detail}\n")
        for ev in rules:
            out.write(f"  trusted rule {ev.detail} in {ev.theorem}\n")
        if self.verify_meta:
            verified = sum(1 for ev in rules if ev.verified is True)
            skipped = sum(1 for ev in rules if ev.verified is None)
            failed = sum(1 for ev in rules if ev.verified is False)
            out.write(
                f"  meta verification: {verified} verified, {skipped} skipped"
                f" (open instances), {failed} failed\n"
            )
        return out.getvalue()


def show_sequent(seq: Sequent, total: int = 1) -> str:
    out = io.StringIO()
    if total > 1:
        out.write(f"subgoal 1 of {total}\n")
    ev = eigen_vars(seq)
    if ev:
        out.write("Variables: " + " ".join(sorted(ev)) + "\n")
    for h in seq.hyps:
        out.write(f"{h.name} : {formula_str(h.formula)}\n")
    out.write("============================\n")
    out.write(f" {formula_str(seq.goal)}\n")
    return out.getvalue()


def sequent_wire(seq: Sequent) -> str:
    parts = []
    for h in seq.hyps:
        parts.append(f"{h.name}:{formula_str(h.formula, wire=True)}")
    parts.append("|- " + formula_str(seq.goal, wire=True))
    return " ; ".join(parts)
