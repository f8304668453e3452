"""User-facing proof steps over the kernel and the spec-logic layer.

`case` dispatches on the hypothesis shape; on specification judgments it
unfolds `seq` once and cascade-processes the clause body (unpacking
conjunctions and existentials, enumerating `prog` backchains, tracking
the height's `nat` witness, discarding refutable member premises and
re-packaging leaf judgments), which presents exactly the member case
plus one case per matching program clause.

`search` alternates right rules, defR, id (modulo permutations of
nominal constants) and reflexivity, and handles specification judgments
through the composition lemmas proved by the auto-loaded support script
(it refuses to compose judgments when those lemmas are absent).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from . import kernel as K
from . import parser as P
from .definitions import Definitions
from .elab import (
    CONS,
    NIL,
    Signature,
    TT,
    elab_tactic_formula,
    elab_tactic_term,
)
from .formulas import (
    ATM,
    FORM,
    OLIST,
    All,
    And,
    Ann,
    Atom,
    Bot,
    Eq,
    Ex,
    Formula,
    Imp,
    Nab,
    Or,
    Top,
    alpha_eq,
    apply_perm_f,
    conjuncts,
    formula_ann,
    free_vars_f,
    match_judgment,
    mk_judgment,
    open_f,
    strip_ann,
    subst_vars_f,
    support_f,
)
from .kernel import Hyp, KernelError, Sequent, StuckNonPattern
from .parser import ParseError, TacticCmd
from .pp import formula_str, term_str
from .speclogic import (
    MetaResult,
    SpecError,
    SpecProgram,
    fand_spine,
    meta_cut,
    meta_inst,
    meta_monotone,
    olist_spine,
)
from .terms import (
    App,
    Con,
    Lam,
    Nom,
    Term,
    Ty,
    Var,
    apply_perm,
    fresh_name,
    fresh_nominal,
    normalize,
    sorted_noms,
    spine,
    subst_vars,
    support,
    term_ty,
    ty_key,
)
from .unify import (
    FULL_SUPPORT,
    SupportEnv,
    UnifProblem,
    VarSupport,
    candidate_perms,
    unify_pattern,
)


class TacticError(Exception):
    pass


@dataclass
class TrustEvent:
    kind: str  # "override" | "rule"
    detail: str
    theorem: str
    verified: Optional[bool] = None  # --verify-meta outcome (None = skipped)


@dataclass
class Prover:
    sig: Signature
    defs: Definitions
    lemmas: dict[str, Formula] = field(default_factory=dict)
    program: Optional[SpecProgram] = None
    search_depth: int = 5
    trust: list[TrustEvent] = field(default_factory=list)
    theorem_name: str = ""
    verify_meta: bool = False


def _verify_meta_instance(prover: Prover, f: Formula) -> Optional[bool]:
    """Re-derive a trusted-rule result via the spec animator when the
    instance is closed; None when it is open (not decidable here)."""
    if prover.program is None:
        return None
    m = match_judgment(f)
    if m is None:
        return None
    ctx, gform, _ = m
    if free_vars_f(f) or support_f(f):
        return None
    from .speclogic import SpecSearch
    ss = SpecSearch(prover.program)
    sol = ss.search(ctx, gform, depth=8)
    return sol is not None


@dataclass
class ProofState:
    name: str
    statement: Formula
    goals: list[Sequent]
    gen: int = 0

    @property
    def done(self) -> bool:
        return not self.goals


def initial_state(name: str, statement: Formula) -> ProofState:
    return ProofState(name, statement, [Sequent((), statement)])


# ---------------------------------------------------------------------------
# Helpers

def _script_nom_name(n: Nom) -> str:
    """Script-level name of a nominal: its position in the enumeration.

    Under a permuted namespace (equivariance replays) the k-th name the
    prover picks is Nom(perm(ty,k)), so script references `nK` must be
    resolved through the permutation.
    """
    from twolog.terms import NS_PERM
    perm = NS_PERM.get()
    if perm is None:
        return n.name
    for k in range(1, 4096):
        if perm(n.ty, k) == n.index:
            return f"n{k}"
    return n.name


def noms_in_scope(seq: Sequent) -> dict[str, Nom]:
    out: dict[str, Nom] = {}
    for n in sorted_noms(K.seq_support(seq)):
        key = _script_nom_name(n)
        if key in out and out[key] != n:
            # same script name at two types; tactic terms cannot refer to it
            continue
        out[key] = n
    return out


def _focused(state: ProofState) -> Sequent:
    if not state.goals:
        raise TacticError("no subgoals left")
    return state.goals[0]


def _replace_focus(state: ProofState, new: list[Sequent]) -> ProofState:
    return ProofState(state.name, state.statement, new + state.goals[1:], state.gen)


# ---------------------------------------------------------------------------
# intros

def intros(seq: Sequent) -> Sequent:
    while True:
        g = seq.goal
        if match_judgment(g) is not None:
            return seq
        if isinstance(g, All):
            seq = K.all_right(seq)
        elif isinstance(g, Nab):
            seq = K.nab_right(seq)
        elif isinstance(g, Imp):
            seq = K.imp_right(seq)
        else:
            return seq


# ---------------------------------------------------------------------------
# case

def case(prover: Prover, seq: Sequent, hname: str) -> list[Sequent]:
    h = seq.hyp(hname)
    f = h.formula
    if match_judgment(f) is not None:
        return _case_judgment(prover, seq, hname)
    match f:
        case Top():
            return [K.remove_hyp(seq, hname)]
        case Bot():
            return []
        case And():
            return [K.and_left(seq, hname)]
        case Or():
            return K.or_left(seq, hname)
        case Ex():
            s2, _ = K.ex_left(seq, hname)
            return _decompose(s2, [s2.hyps[-1].name])
        case Nab():
            return _decompose(K.nab_left(seq, hname), [])
        case Eq():
            try:
                return K.eq_left(seq, hname)
            except StuckNonPattern as e:
                raise TacticError(str(e)) from e
        case Atom(pred, _, _):
            if pred == "member":
                return _case_member(prover, seq, hname)
            if not prover.defs.is_defined(pred):
                raise TacticError(f"{pred!r} has no definition to case on")
            try:
                prems = K.def_left(seq, hname, prover.defs)
            except StuckNonPattern as e:
                raise TacticError(str(e)) from e
            out: list[Sequent] = []
            for prem, body_name in prems:
                d = _decompose(prem, [body_name] if body_name else [])
                out.extend(d)
            return out
    raise TacticError(f"cannot case on {hname}: {formula_str(f)}")


def _decompose(seq: Sequent, queue: list[str]) -> list[Sequent]:
    """Auto-unpack conjunctions / existentials / truth in new hypotheses."""
    queue = list(queue)
    while queue:
        name = queue.pop(0)
        if not seq.has_hyp(name):
            continue
        f = seq.hyp(name).formula
        if match_judgment(f) is not None:
            continue
        if isinstance(f, Top):
            seq = K.remove_hyp(seq, name)
        elif isinstance(f, Bot):
            return []
        elif isinstance(f, And):
            before = {h.name for h in seq.hyps}
            seq = K.and_left(seq, name)
            queue.extend(h.name for h in seq.hyps if h.name not in before)
        elif isinstance(f, Ex):
            before = {h.name for h in seq.hyps}
            seq, _ = K.ex_left(seq, name)
            queue.extend(h.name for h in seq.hyps if h.name not in before)
    return [seq]


# -- specification-judgment case

def _case_judgment(prover: Prover, seq: Sequent, hname: str) -> list[Sequent]:
    m = match_judgment(seq.hyp(hname).formula)
    assert m is not None
    _ctx, goal_form, _ann = m
    s2, nat_h, seq_h = K.sugar_unpack(seq, hname)
    head, _ = spine(goal_form)
    if not (isinstance(head, Con) and head.name in ("f_atm", "f_and", "f_imp", "f_all", "tt")):
        # flexible goal formula: leave the raw seq/nat pair for low-level work
        return [s2]
    return _seq_cascade(prover, s2, seq_h, nat_h)


def _case_nat_once(prover: Prover, seq: Sequent, nat_h: str) -> Optional[Sequent]:
    """nat (s N) becomes nat N (drop when the height is unconstrained)."""
    if not seq.has_hyp(nat_h):
        return seq
    f = seq.hyp(nat_h).formula
    assert isinstance(f, Atom) and f.pred == "nat"
    (n,) = f.args
    hd, _ = spine(n)
    if isinstance(hd, Var):
        return seq
    prems = K.def_left(seq, nat_h, prover.defs)
    if not prems:
        return None
    assert len(prems) == 1
    prem, body = prems[0]
    if body:
        # rename the body hypothesis back to the tracked name
        hyps = tuple(Hyp(nat_h, h.formula) if h.name == body else h for h in prem.hyps)
        prem = replace(prem, hyps=hyps)
    return prem


def _seq_cascade(prover: Prover, seq: Sequent, seq_h: str, nat_h: str) -> list[Sequent]:
    """Unfold one seq step and normalize the resulting premises."""
    try:
        prems = K.def_left(seq, seq_h, prover.defs)
    except StuckNonPattern as e:
        raise TacticError(str(e)) from e
    out: list[Sequent] = []
    for prem, body_name in prems:
        out.extend(_process_seq_body(prover, prem, body_name, nat_h))
    return out


def _process_seq_body(
    prover: Prover, seq: Sequent, body_name: str, nat_h: str
) -> list[Sequent]:
    """Normalize hypotheses produced by unfolding seq/prog atoms."""
    s = _case_nat_once(prover, seq, nat_h)
    if s is None:
        return []
    seq = s
    pending = [body_name] if body_name else []
    results: list[Sequent] = []
    while pending:
        name = pending.pop(0)
        if not seq.has_hyp(name):
            continue
        f = seq.hyp(name).formula
        if isinstance(f, Top):
            seq = K.remove_hyp(seq, name)
        elif isinstance(f, Bot):
            return []
        elif isinstance(f, And):
            before = {h.name for h in seq.hyps}
            seq = K.and_left(seq, name)
            pending = [h.name for h in seq.hyps if h.name not in before] + pending
        elif isinstance(f, Ex):
            before = {h.name for h in seq.hyps}
            seq, _ = K.ex_left(seq, name)
            pending = [h.name for h in seq.hyps if h.name not in before] + pending
        elif isinstance(f, Nab):
            before = {h.name for h in seq.hyps}
            seq = K.nab_left(seq, name)
            pending = [h.name for h in seq.hyps if h.name not in before] + pending
        elif isinstance(f, Atom) and f.pred == "prog":
            try:
                prems = K.def_left(seq, name, prover.defs)
            except StuckNonPattern as e:
                raise TacticError(str(e)) from e
            sub: list[Sequent] = []
            for prem, bn in prems:
                sub.extend(_process_seq_body(prover, prem, bn, nat_h))
            # this premise split; the current traversal ends here
            for alt in sub:
                results.append(alt)
            return results if results else sub
        elif isinstance(f, Atom) and f.pred == "seq":
            pass  # handled by the normalization pass below
        elif isinstance(f, Atom) and f.pred == "member":
            refuted = _member_refutable(prover, seq, name)
            if refuted:
                return []
        else:
            pass
    return results + _normalize_premise(prover, seq, nat_h)


def _rigid_form_head(f: Formula) -> Optional[str]:
    if isinstance(f, Atom) and f.pred == "seq":
        head, _ = spine(f.args[2])
        if isinstance(head, Con) and head.name in ("f_atm", "f_and", "f_imp", "f_all", "tt"):
            return head.name
    return None


def _normalize_premise(prover: Prover, seq: Sequent, nat_h: str) -> list[Sequent]:
    """Package atomic seq hypotheses, then cascade structural ones.

    Packing first matters: a sibling branch's unfolding refines the shared
    height variable, while already-packaged judgments are immune.
    """
    seq = _final_pack(prover, seq, nat_h, keep_nat=True)
    for h in seq.hyps:
        hd = _rigid_form_head(h.formula)
        if hd is not None and hd != "f_atm":
            out: list[Sequent] = []
            for prem in _seq_cascade(prover, seq, h.name, nat_h):
                out.extend(_normalize_premise(prover, prem, nat_h))
            return out
    return [_final_pack(prover, seq, nat_h)]


def _heights_covered(n: Term, m: Term) -> bool:
    """n is s^k(m) for some k >= 0."""
    while n != m:
        head, args = spine(n)
        if isinstance(head, Con) and head.name == "s" and len(args) == 1:
            n = args[0]
        else:
            return False
    return True


def _final_pack(prover: Prover, seq: Sequent, nat_h: str, keep_nat: bool = False) -> Sequent:
    while True:
        if not seq.has_hyp(nat_h):
            break
        natf = seq.hyp(nat_h).formula
        packable = [
            h.name
            for h in seq.hyps
            if _rigid_form_head(h.formula) == "f_atm"
            and _heights_covered(h.formula.args[0], natf.args[0])
        ]
        if not packable:
            break
        raw_count = sum(
            1 for h in seq.hyps
            if isinstance(h.formula, Atom) and h.formula.pred == "seq"
        )
        seq, _ = K.sugar_pack(seq, packable[0], nat_h)
        if raw_count > 1 or keep_nat:
            hyps = list(seq.hyps) + [Hyp(nat_h, natf)]
            seq = replace(seq, hyps=tuple(hyps))
    if not keep_nat and seq.has_hyp(nat_h):
        n = seq.hyp(nat_h).formula.args[0]
        still_used = any(
            isinstance(h.formula, Atom) and h.formula.pred == "seq"
            for h in seq.hyps
        )
        if not still_used:
            seq = K.remove_hyp(seq, nat_h)
    return seq


def _member_refutable(prover: Prover, seq: Sequent, hname: str) -> bool:
    """True when the member hypothesis closes by exhaustive unfolding."""
    f = seq.hyp(hname).formula
    _elems, tail = olist_spine(f.args[1])
    if tail != NIL:
        return False
    try:
        return _case_member(prover, seq, hname) == []
    except TacticError:
        return False


def _case_member(prover: Prover, seq: Sequent, hname: str) -> list[Sequent]:
    """Present member cases (head / tail) hiding the element/nat plumbing."""
    f = seq.hyp(hname).formula
    assert isinstance(f, Atom) and f.pred == "member"
    ann = f.ann
    prems = K.def_left(seq, hname, prover.defs)
    out: list[Sequent] = []
    for prem, body in prems:
        # body: exists n, nat n /\ element n B L
        branches = _decompose(prem, [body])
        for br in branches:
            elem_h = None
            nat_hh = None
            for h in br.hyps:
                if isinstance(h.formula, Atom) and h.formula.pred == "element":
                    elem_h = h.name
                if isinstance(h.formula, Atom) and h.formula.pred == "nat":
                    nat_hh = h.name
            if elem_h is None:
                out.append(br)
                continue
            out.extend(_element_cascade(prover, br, elem_h, nat_hh, ann))
    return out


def _element_cascade(
    prover: Prover, seq: Sequent, elem_h: str, nat_h: Optional[str], ann
) -> list[Sequent]:
    try:
        prems = K.def_left(seq, elem_h, prover.defs)
    except StuckNonPattern as e:
        raise TacticError(str(e)) from e
    out: list[Sequent] = []
    for prem, body in prems:
        inner_elem = None
        if body and prem.has_hyp(body):
            bf = prem.hyp(body).formula
            if isinstance(bf, Top):
                prem = K.remove_hyp(prem, body)
            elif isinstance(bf, Atom) and bf.pred == "element":
                inner_elem = body
        if inner_elem is None:
            # head case: drop the unused height witness
            if nat_h and prem.has_hyp(nat_h):
                prem = K.remove_hyp(prem, nat_h)
            out.append(prem)
            continue
        # tail case: element n' B L'; rebuild a member hypothesis (strictly
        # smaller than the original, hence a star annotation)
        prem2 = _case_nat_once(prover, prem, nat_h) if nat_h else prem
        if prem2 is None:
            continue
        prem = prem2
        ef = prem.hyp(inner_elem).formula
        n, b, l = ef.args
        prem = K.remove_hyp(prem, inner_elem)
        if nat_h and prem.has_hyp(nat_h):
            prem = K.remove_hyp(prem, nat_h)
        tail_ann = Ann(star=True, gen=ann.gen) if ann is not None else None
        prem, _ = K.add_hyps(prem, [Atom("member", (b, l), tail_ann)])
        out.append(prem)
    return out


# ---------------------------------------------------------------------------
# Formula matching for apply / search

def formula_eqs(
    pat: Formula,
    target: Formula,
    taken: set[str],
    check_ann: bool = True,
) -> Optional[tuple[list[tuple[Term, Term]], set[str]]]:
    """Structural lockstep decomposition into term equations.

    Binders are opened with shared fresh (frozen) parameters; `None`
    signals a shape or annotation mismatch.
    """
    eqs: list[tuple[Term, Term]] = []
    new_frozen: set[str] = set()
    taken = set(taken)

    def walk(a: Formula, b: Formula) -> bool:
        match (a, b):
            case (Top(), Top()) | (Bot(), Bot()):
                return True
            case (And(), And()) | (Or(), Or()) | (Imp(), Imp()):
                return walk(a.left, b.left) and walk(a.right, b.right)
            case (Eq(al, ar), Eq(bl, br)):
                eqs.append((al, bl))
                eqs.append((ar, br))
                return True
            case (Atom(p1, args1, ann1), Atom(p2, args2, ann2)):
                if p1 != p2:
                    return False
                if check_ann and ann1 is not None and ann1 != ann2:
                    return False
                eqs.extend(zip(args1, args2))
                return True
            case (All(t1, b1, h1), All(t2, b2, _)) | (Ex(t1, b1, h1), Ex(t2, b2, _)):
                if type(a) is not type(b) or t1 != t2:
                    return False
                nm = fresh_name(h1 or "w", taken)
                taken.add(nm)
                new_frozen.add(nm)
                v = Var(nm, t1)
                return walk(open_f(b1, v), open_f(b2, v))
            case (Nab(t1, b1, _), Nab(t2, b2, _)):
                if t1 != t2:
                    return False
                avoid = support_f(a) | support_f(b)
                nom = fresh_nominal(t1, avoid)
                return walk(open_f(b1, nom), open_f(b2, nom))
            case _:
                return False

    if walk(pat, target):
        return eqs, new_frozen
    return None


# ---------------------------------------------------------------------------
# apply

@dataclass
class _LemmaParts:
    allvars: list[Var]
    nabvars: list[Var]
    excluded: dict[str, int]  # var name -> number of nabla vars in scope before it
    premises: list[Formula]
    conclusion: Formula


def _split_lemma(f: Formula, taken: set[str]) -> _LemmaParts:
    allvars: list[Var] = []
    nabvars: list[Var] = []
    excluded: dict[str, int] = {}
    taken = set(taken)
    while True:
        if match_judgment(f) is not None:
            break
        if isinstance(f, All):
            nm = fresh_name(f.hint or "X", taken)
            taken.add(nm)
            v = Var(nm, f.ty)
            excluded[nm] = len(nabvars)
            allvars.append(v)
            f = open_f(f.body, v)
        elif isinstance(f, Nab):
            nm = fresh_name(f.hint or "x", taken)
            taken.add(nm)
            v = Var(nm, f.ty)
            nabvars.append(v)
            f = open_f(f.body, v)
        else:
            break
    premises: list[Formula] = []
    while isinstance(f, Imp):
        premises.extend(conjuncts(f.left))
        f = f.right
    return _LemmaParts(allvars, nabvars, excluded, premises, f)


def apply_lemma(
    prover: Prover,
    seq: Sequent,
    lemma: Formula,
    hyp_names: list[str],
    withs: list[tuple[str, Term]],
    with_name_map: dict[str, str],
) -> tuple[Formula, list[Formula]]:
    """Match hypotheses against the lemma premises; return the instantiated
    conclusion and any remaining premise obligations."""
    taken = K.taken_names(seq)
    parts = _split_lemma(lemma, taken)
    taken |= {v.name for v in parts.allvars} | {v.name for v in parts.nabvars}
    if len(hyp_names) > len(parts.premises):
        raise TacticError("more hypotheses supplied than the lemma has premises")

    hyps: list[Optional[Formula]] = []
    for i, p in enumerate(parts.premises):
        if i < len(hyp_names) and hyp_names[i] != "_":
            hyps.append(seq.hyp(hyp_names[i]).formula)
        else:
            hyps.append(None)

    # candidate nominals for the nabla parameters
    cand_noms: dict[str, list[Nom]] = {}
    seq_supp = K.seq_support(seq)
    for v in parts.nabvars:
        options = [n for n in sorted_noms(seq_supp) if n.ty == v.ty]
        fresh = fresh_nominal(v.ty, seq_supp)
        cand_noms[v.name] = options + [fresh]

    pre_bound: dict[str, Term] = {}
    for wname, wterm in withs:
        if wname not in with_name_map:
            raise TacticError(f"the lemma has no variable named {wname!r}")
        pre_bound[with_name_map[wname]] = wterm

    last_error = "lemma premises do not match the given hypotheses"
    for assignment in _nab_assignments(parts.nabvars, cand_noms):
        nabmap = {v.name: nom for v, nom in zip(parts.nabvars, assignment)}
        inst = {name: nom for name, nom in nabmap.items()}
        env: SupportEnv = {}
        for v in parts.allvars:
            later = {nabmap[nv.name] for nv in parts.nabvars[parts.excluded[v.name]:]}
            env[v.name] = VarSupport(None, frozenset(later))
        premises = [subst_vars_f(p, inst) for p in parts.premises]
        conclusion = subst_vars_f(parts.conclusion, inst)
        got = _match_premises(
            prover, seq, premises, hyps, env, dict(pre_bound), taken
        )
        if got is None:
            continue
        theta = got
        concl = subst_vars_f(conclusion, theta)
        remaining = [
            subst_vars_f(p, theta) for p, h in zip(premises, hyps) if h is None
        ]
        unresolved = set(free_vars_f(concl)) & {v.name for v in parts.allvars}
        for r in remaining:
            unresolved |= set(free_vars_f(r)) & {v.name for v in parts.allvars}
        if unresolved:
            last_error = (
                "cannot determine " + ", ".join(sorted(unresolved)) + "; use 'with'"
            )
            continue
        return concl, remaining
    raise TacticError(last_error)


def _nab_assignments(nabvars: list[Var], cands: dict[str, list[Nom]]):
    pools = [cands[v.name] for v in nabvars]
    for combo in itertools.product(*pools):
        if len(set(combo)) == len(combo):
            yield combo


def _match_premises(
    prover: Prover,
    seq: Sequent,
    premises: list[Formula],
    hyps: list[Optional[Formula]],
    env: SupportEnv,
    theta: dict[str, Term],
    taken: set[str],
) -> Optional[dict[str, Term]]:
    frozen_seq = set(K.eigen_vars(seq))

    def go(i: int, theta: dict[str, Term], env: SupportEnv, taken: set[str]):
        if i == len(premises):
            yield theta
            return
        hyp = hyps[i]
        if hyp is None:
            yield from go(i + 1, theta, env, taken)
            return
        pat = subst_vars_f(premises[i], theta)
        supp_h = support_f(hyp)
        supp_p = support_f(pat)
        for pi in candidate_perms(supp_h, supp_p):
            cand = apply_perm_f(pi, hyp)
            got = formula_eqs(pat, cand, taken)
            if got is None:
                continue
            eqs, new_frozen = got
            kind, u = unify_pattern(
                UnifProblem(
                    eqs,
                    env=dict(env),
                    frozen=frozenset(frozen_seq | new_frozen),
                    avoid_names=frozenset(taken | new_frozen),
                )
            )
            if kind != "mgu":
                continue
            theta2 = {k: normalize(subst_vars(t, u.subst)) for k, t in theta.items()}
            for k, t in u.subst.items():
                if k not in theta2:
                    theta2[k] = t
            env2 = dict(u.env)
            yield from go(i + 1, theta2, env2, taken | new_frozen)

    for sol in go(0, theta, env, taken):
        # apply the with-bindings that unification may have refined
        return sol
    return None


# ---------------------------------------------------------------------------
# the search procedure

SL_LEMMAS = {
    "f_and": "sl_and",
    "f_imp": "sl_imp",
    "f_atm_bc": "sl_bc",
    "f_atm_fact": "sl_fact",
    "f_atm_mem": "sl_mem",
}


class _Search:
    def __init__(self, prover: Prover, depth: int):
        self.prover = prover
        self.depth = depth
        self.nodes = 0
        self.limit = 50000

    def attempt(self, seq: Sequent) -> bool:
        for _ in self.solve(seq, {}, {}, self.depth, K.taken_names(seq)):
            return True
        return False

    def tick(self) -> bool:
        self.nodes += 1
        return self.nodes < self.limit

    def fresh_flex(self, hint: str, ty: Ty, seq: Sequent, env: SupportEnv, taken: set[str]) -> Var:
        nm = fresh_name(hint or "W", taken)
        taken.add(nm)
        env[nm] = VarSupport(frozenset(K.seq_support(seq)))
        return Var(nm, ty)

    def solve(
        self,
        seq: Sequent,
        subst: dict[str, Term],
        env: SupportEnv,
        depth: int,
        taken: set[str],
    ) -> Iterator[tuple[dict[str, Term], SupportEnv]]:
        if not self.tick():
            return
        seq = K.subst_seq(seq, subst)
        goal = seq.goal
        # identity modulo permutations, possibly instantiating search vars
        yield from self.try_id(seq, subst, env, taken)
        if isinstance(goal, Top):
            yield subst, env
            return
        j = match_judgment(goal)
        if j is not None:
            # composed route through the spec-logic support lemmas, then the
            # raw exists/defR route (the only one available while the support
            # lemmas are themselves being proved)
            yield from self.solve_judgment(seq, j, subst, env, depth, taken)
        match goal:
            case And():
                parts = conjuncts(goal)
                parts.sort(key=lambda f: isinstance(f, Atom) and f.pred == "nat")
                yield from self.solve_many(seq, parts, subst, env, depth, taken)
            case Or(l, r):
                yield from self.solve(replace(seq, goal=l), subst, env, depth, taken)
                yield from self.solve(replace(seq, goal=r), subst, env, depth, taken)
            case Imp():
                yield from self.solve(K.imp_right(seq), subst, env, depth, taken)
            case All():
                yield from self.solve(K.all_right(seq), subst, env, depth, taken)
            case Nab():
                yield from self.solve(K.nab_right(seq), subst, env, depth, taken)
            case Ex(ty, body, hint):
                env2 = dict(env)
                taken2 = set(taken)
                w = self.fresh_flex(hint, ty, seq, env2, taken2)
                yield from self.solve(
                    replace(seq, goal=open_f(body, w)), subst, env2, depth, taken2
                )
            case Eq():
                try:
                    u = K.eq_right_closes(seq, flex=env, avoid=taken)
                except KernelError:
                    u = None
                if u is not None:
                    env2 = dict(env)
                    env2.update(u.env)
                    yield _compose_subst(subst, u.subst), env2
            case Atom(pred, _, _):
                if depth <= 0 or not self.prover.defs.is_defined(pred):
                    return
                try:
                    for _idx, prem, u in K.def_right_options(seq, self.prover.defs, flex=env):
                        env2 = dict(env)
                        env2.update(u.env)
                        yield from self.solve(
                            prem,
                            _compose_subst(subst, u.subst),
                            env2,
                            depth - 1,
                            taken | set(u.env) | K.taken_names(prem),
                        )
                except KernelError:
                    return
        return

    def solve_many(self, seq, goals, subst, env, depth, taken):
        if not goals:
            yield subst, env
            return
        first, rest = goals[0], goals[1:]
        for s2, e2 in self.solve(replace(seq, goal=first), subst, env, depth, taken):
            yield from self.solve_many(seq, rest, s2, e2, depth, taken | set(e2))

    def try_id(self, seq, subst, env, taken):
        goal = strip_ann(seq.goal)
        if isinstance(goal, Top):
            return
        frozen = set(K.eigen_vars(seq)) - set(env)
        gsupp = support_f(goal)
        for h in seq.hyps:
            cand0 = strip_ann(h.formula)
            for pi in candidate_perms(support_f(cand0), gsupp):
                cand = apply_perm_f(pi, cand0)
                got = formula_eqs(goal, cand, taken, check_ann=False)
                if got is None:
                    continue
                eqs, new_frozen = got
                kind, u = unify_pattern(
                    UnifProblem(
                        eqs,
                        env=dict(env),
                        frozen=frozenset(frozen | new_frozen),
                        avoid_names=frozenset(taken | new_frozen),
                    )
                )
                if kind == "mgu":
                    env2 = dict(env)
                    env2.update(u.env)
                    yield _compose_subst(subst, u.subst), env2

    # -- specification judgments

    def solve_judgment(self, seq, j, subst, env, depth, taken):
        ctx, gform, _ann = j
        head, args = spine(gform)
        if not isinstance(head, Con):
            return
        if head.name == "tt":
            return
        if head.name == "f_and":
            if not self.has_lemma("sl_and"):
                return
            g1 = replace(seq, goal=mk_judgment(ctx, args[0]))
            g2 = replace(seq, goal=mk_judgment(ctx, args[1]))
            for s2, e2 in self.solve(g1, subst, env, depth, taken):
                yield from self.solve(g2, s2, e2, depth, taken | set(e2))
            return
        if head.name == "f_imp":
            if not self.has_lemma("sl_imp"):
                return
            ctx2 = App(App(CONS, args[0]), ctx)
            yield from self.solve(
                replace(seq, goal=mk_judgment(ctx2, args[1])), subst, env, depth, taken
            )
            return
        if head.name == "f_all":
            lam = args[0]
            ty = lam.ty if isinstance(lam, Lam) else None
            if ty is None:
                return
            if not self.has_lemma(f"sl_all_{_ty_slug(ty)}"):
                return
            a = fresh_nominal(ty, K.seq_support(seq))
            body = normalize(App(lam, a))
            yield from self.solve(
                replace(seq, goal=mk_judgment(ctx, body)), subst, env, depth, taken
            )
            return
        if head.name == "f_atm":
            atom = args[0]
            # member route
            elems, _tail = olist_spine(ctx)
            if elems and not self.has_lemma("sl_mem"):
                elems = []
            frozen = set(K.eigen_vars(seq)) - set(env)
            for e in elems:
                kind, u = unify_pattern(
                    UnifProblem(
                        [(atom, e)],
                        env=dict(env),
                        frozen=frozenset(frozen),
                        avoid_names=frozenset(taken),
                    )
                )
                if kind == "mgu":
                    env2 = dict(env)
                    env2.update(u.env)
                    yield _compose_subst(subst, u.subst), env2
            # backchain route
            if depth <= 0 or self.prover.program is None:
                return
            for pc in self.prover.program.clauses:
                ren: dict[str, Term] = {}
                env2 = dict(env)
                taken2 = set(taken)
                supp = frozenset(K.seq_support(seq) | support(atom))
                for v in pc.uvars:
                    nm = fresh_name(v.name, taken2)
                    taken2.add(nm)
                    ren[v.name] = Var(nm, v.ty)
                    env2[nm] = VarSupport(supp)
                h = subst_vars(pc.head, ren)
                b = subst_vars(pc.body, ren)
                kind, u = unify_pattern(
                    UnifProblem(
                        [(h, atom)],
                        env=env2,
                        frozen=frozenset(frozen),
                        avoid_names=frozenset(taken2),
                    )
                )
                if kind != "mgu":
                    continue
                env3 = dict(env2)
                env3.update(u.env)
                s2 = _compose_subst(subst, u.subst)
                bb = normalize(subst_vars(b, u.subst))
                if bb == TT:
                    if not self.has_lemma("sl_fact"):
                        continue
                    yield s2, env3
                else:
                    if not self.has_lemma("sl_bc"):
                        continue
                    yield from self.solve(
                        replace(seq, goal=mk_judgment(ctx, bb)),
                        s2,
                        env3,
                        depth - 1,
                        taken2,
                    )
            return

    def has_lemma(self, name: str) -> bool:
        return name in self.prover.lemmas


def _ty_slug(ty: Ty) -> str:
    from .terms import Arrow, Base
    if isinstance(ty, Base):
        return ty.name
    assert isinstance(ty, Arrow)
    return _ty_slug(ty.left) + "_to_" + _ty_slug(ty.right)


def _compose_subst(a: dict[str, Term], b: dict[str, Term]) -> dict[str, Term]:
    out = {k: normalize(subst_vars(t, b)) for k, t in a.items()}
    for k, t in b.items():
        if k not in out:
            out[k] = t
    return out


def search(prover: Prover, seq: Sequent, depth: Optional[int] = None) -> bool:
    s = _Search(prover, depth if depth is not None else prover.search_depth)
    return s.attempt(seq)


# ---------------------------------------------------------------------------
# Tactic dispatch

def _elab_term(prover: Prover, seq: Sequent, raw, expected: Optional[Ty], line: int) -> Term:
    return elab_tactic_term(
        prover.sig, raw, K.eigen_vars(seq), noms_in_scope(seq), expected, line
    )


def _elab_formula(prover: Prover, seq: Sequent, raw, line: int) -> Formula:
    return elab_tactic_formula(
        prover.sig, raw, K.eigen_vars(seq), noms_in_scope(seq), line
    )


def step(prover: Prover, state: ProofState, cmd: TacticCmd) -> ProofState:
    """Apply one tactic to the focused subgoal; raises TacticError on failure."""
    name = cmd.name
    seq = _focused(state)
    try:
        if name == "intros":
            return _replace_focus(state, [intros(seq)])
        if name == "case":
            return _replace_focus(state, case(prover, seq, cmd.hyps[0]))
        if name == "induction":
            st2 = ProofState(state.name, state.statement, list(state.goals), state.gen + 1)
            new = K.nat_induct(seq, cmd.number, st2.gen, prover.defs)
            return _replace_focus(st2, [new])
        if name == "split":
            return _replace_focus(state, K.and_right(seq))
        if name == "left":
            return _replace_focus(state, [K.or_right(seq, "left")])
        if name == "right":
            return _replace_focus(state, [K.or_right(seq, "right")])
        if name == "exists":
            if not isinstance(seq.goal, Ex):
                raise TacticError("goal is not an existential")
            t = _elab_term(prover, seq, cmd.term, seq.goal.ty, cmd.line)
            return _replace_focus(state, [K.ex_right(seq, t)])
        if name == "assert":
            f = _elab_formula(prover, seq, cmd.formula, cmd.line)
            side = replace(seq, goal=f)
            main, _ = K.add_hyps(seq, [f])
            return _replace_focus(state, [side, main])
        if name == "unfold":
            idx = cmd.number - 1 if cmd.number is not None else None
            prem = K.def_right(seq, prover.defs, clause_idx=idx)
            return _replace_focus(state, [prem])
        if name == "search":
            if search(prover, seq, cmd.number):
                return _replace_focus(state, [])
            raise TacticError("search found no proof")
        if name == "apply":
            return _apply_cmd(prover, state, seq, cmd)
        if name == "inst":
            return _inst_cmd(prover, state, seq, cmd)
        if name == "cut":
            h1 = seq.hyp(cmd.hyps[0]).formula
            h2 = seq.hyp(cmd.hyps[1]).formula
            try:
                res = meta_cut(h1, h2)
            except SpecError as e:
                raise TacticError(str(e)) from e
            ver = _verify_meta_instance(prover, res) if prover.verify_meta else None
            prover.trust.append(TrustEvent("rule", "cut", prover.theorem_name, ver))
            s2, _ = K.add_hyps(seq, [res])
            return _replace_focus(state, [s2])
        if name == "monotone":
            hyp = seq.hyp(cmd.hyps[0]).formula
            ctx = _elab_term(prover, seq, cmd.term, OLIST, cmd.line)
            try:
                res = meta_monotone(hyp, ctx)
            except SpecError as e:
                raise TacticError(str(e)) from e
            ver = _verify_meta_instance(prover, res.formula) if prover.verify_meta else None
            prover.trust.append(TrustEvent("rule", "monotone", prover.theorem_name, ver))
            s2, _ = K.add_hyps(seq, [res.formula])
            goals = [s2]
            if res.evidence is not None:
                goals.append(replace(seq, goal=res.evidence))
            return _replace_focus(state, goals)
    except (KernelError, ParseError) as e:
        raise TacticError(str(e)) from e
    raise TacticError(f"unknown tactic {name!r}")


def _apply_cmd(prover: Prover, state: ProofState, seq: Sequent, cmd: TacticCmd) -> ProofState:
    lname = cmd.lemma
    if lname in prover.lemmas:
        lemma = prover.lemmas[lname]
    elif seq.has_hyp(lname):
        lemma = seq.hyp(lname).formula
    else:
        raise TacticError(f"unknown lemma or hypothesis {lname!r}")
    # map user-facing statement variable names to the split's fresh names
    taken = K.taken_names(seq)
    parts = _split_lemma(lemma, taken)
    name_map: dict[str, str] = {}
    f = lemma
    idx_all = 0
    while True:
        if match_judgment(f) is not None:
            break
        if isinstance(f, All):
            name_map[f.hint or f"X{idx_all}"] = parts.allvars[idx_all].name
            idx_all += 1
            f = f.body
        elif isinstance(f, Nab):
            f = f.body
        else:
            break
    withs: list[tuple[str, Term]] = []
    for wname, wraw in cmd.withs:
        target = name_map.get(wname)
        if target is None:
            raise TacticError(f"the lemma has no variable named {wname!r}")
        ty = next(v.ty for v in parts.allvars if v.name == target)
        withs.append((wname, _elab_term(prover, seq, wraw, ty, cmd.line)))
    concl, remaining = apply_lemma(prover, seq, lemma, cmd.hyps, withs, name_map)
    goals: list[Sequent] = []
    if isinstance(concl, Bot):
        pass  # a false conclusion closes the focused subgoal
    else:
        main, names = K.add_hyps(seq, [concl])
        goals.extend(_decompose(main, names))
    for r in remaining:
        goals.append(replace(seq, goal=r))
    return _replace_focus(state, goals)


def _inst_cmd(prover: Prover, state: ProofState, seq: Sequent, cmd: TacticCmd) -> ProofState:
    hyp = seq.hyp(cmd.hyps[0]).formula
    supp = sorted_noms(support_f(hyp))
    if cmd.nom is not None:
        matches = [n for n in supp if _script_nom_name(n) == cmd.nom]
        if not matches:
            raise TacticError(f"{cmd.nom} is not in the support of {cmd.hyps[0]}")
        nom = matches[0]
    else:
        if len(supp) != 1:
            raise TacticError(
                "hypothesis has several support constants; use 'inst H with nK = t'"
            )
        nom = supp[0]
    t = _elab_term(prover, seq, cmd.term, nom.ty, cmd.line)
    try:
        res = meta_inst(hyp, nom, t)
    except SpecError as e:
        raise TacticError(str(e)) from e
    ver = _verify_meta_instance(prover, res) if prover.verify_meta else None
    prover.trust.append(TrustEvent("rule", "inst", prover.theorem_name, ver))
    s2, _ = K.add_hyps(seq, [res])
    return _replace_focus(state, [s2])
