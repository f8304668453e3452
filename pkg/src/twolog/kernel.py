"""The trusted core: sequents and the inference rules.

Sequents are  Σ : Γ ⊢ C  with Σ computed from the free eigenvariables of
Γ and C.  Raising is eager: an eigenvariable introduced under nominal
constants appears applied to them (`h c̄`), and no instantiation ever
contains a nominal constant directly (variables marked as having full
support — proof-search existentials — are exempt and are never raised).

Definition unfolding implements the raised-clause recipe: pick fresh
nominals c̄ for the clause's nabla prefix, raise the sequent over c̄,
raise the clause over the support of the target atom and away from the
sequent, substitute c̄ for the nabla variables, then unify (left) or
match (right) the head against the target under every permutation of
the combined support, taking a most general pattern unifier each time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .definitions import Clause, Definitions, raise_clause
from .formulas import (
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
    iter_terms,
    map_terms,
    match_judgment,
    mk_judgment,
    open_f,
    perm_match,
    set_formula_ann,
    strip_ann,
    subst_vars_f,
    support_f,
)
from .terms import (
    Nom,
    Perm,
    Term,
    Ty,
    Var,
    extend_to_perm,
    fresh_name,
    fresh_nominal,
    fresh_nominals,
    normalize,
    sorted_noms,
    subst_vars,
    term_ty,
)
from .unify import (
    EMPTY_SUPPORT,
    FULL_SUPPORT,
    NonPattern,
    NoUnifier,
    SupportEnv,
    UnifProblem,
    Unified,
    candidate_perms,
    raise_over,
    unify_pattern,
)


class KernelError(Exception):
    pass


class StuckNonPattern(KernelError):
    """Unification left the pattern fragment; surfaced to the tactic layer."""


@dataclass(frozen=True)
class Hyp:
    name: str
    formula: Formula


@dataclass(frozen=True)
class Sequent:
    hyps: tuple[Hyp, ...]
    goal: Formula
    counter: int = 1  # next hypothesis number

    def hyp(self, name: str) -> Hyp:
        for h in self.hyps:
            if h.name == name:
                return h
        raise KernelError(f"unknown hypothesis {name!r}")

    def has_hyp(self, name: str) -> bool:
        return any(h.name == name for h in self.hyps)


def eigen_vars(seq: Sequent) -> dict[str, Var]:
    out: dict[str, Var] = {}
    for h in seq.hyps:
        out.update(free_vars_f(h.formula))
    out.update(free_vars_f(seq.goal))
    return out


def seq_support(seq: Sequent) -> frozenset[Nom]:
    out: frozenset[Nom] = support_f(seq.goal)
    for h in seq.hyps:
        out |= support_f(h.formula)
    return out


def taken_names(seq: Sequent) -> set[str]:
    names = set(eigen_vars(seq))
    names.update(h.name for h in seq.hyps)
    return names


def subst_seq(seq: Sequent, mapping: dict[str, Term]) -> Sequent:
    if not mapping:
        return seq
    return Sequent(
        tuple(Hyp(h.name, subst_vars_f(h.formula, mapping)) for h in seq.hyps),
        subst_vars_f(seq.goal, mapping),
        seq.counter,
    )


def remove_hyp(seq: Sequent, name: str) -> Sequent:
    seq.hyp(name)
    return replace(seq, hyps=tuple(h for h in seq.hyps if h.name != name))


def _merged(seq: Sequent, f: Formula) -> bool:
    for h in seq.hyps:
        if perm_match(strip_ann(h.formula), strip_ann(f)) is not None:
            if _anns_equal(h.formula, f):
                return True
    return False


def _anns_equal(a: Formula, b: Formula) -> bool:
    return formula_ann(a) == formula_ann(b)


def add_hyps(
    seq: Sequent, formulas: list[Formula], names: Optional[list[str]] = None
) -> tuple[Sequent, list[str]]:
    """Add hypotheses H<k>, merging duplicates (mod permutation + annotation)."""
    hyps = list(seq.hyps)
    counter = seq.counter
    got: list[str] = []
    for i, f in enumerate(formulas):
        if isinstance(f, Top):
            continue
        if _merged(replace(seq, hyps=tuple(hyps)), f):
            continue
        if names and i < len(names):
            name = names[i]
        else:
            existing = {h.name for h in hyps}
            while f"H{counter}" in existing:
                counter += 1
            name = f"H{counter}"
            counter += 1
        hyps.append(Hyp(name, f))
        got.append(name)
    return Sequent(tuple(hyps), seq.goal, counter), got


# ---------------------------------------------------------------------------
# Core right rules

def and_right(seq: Sequent) -> list[Sequent]:
    match seq.goal:
        case And():
            return [replace(seq, goal=g) for g in conjuncts(seq.goal)]
    raise KernelError("goal is not a conjunction")


def or_right(seq: Sequent, side: str) -> Sequent:
    match seq.goal:
        case Or(l, r):
            return replace(seq, goal=l if side == "left" else r)
    raise KernelError("goal is not a disjunction")


def imp_right(seq: Sequent) -> Sequent:
    match seq.goal:
        case Imp(l, r):
            s2, _ = add_hyps(replace(seq, goal=r), conjuncts(l))
            return s2
    raise KernelError("goal is not an implication")


def all_right(seq: Sequent) -> Sequent:
    match seq.goal:
        case All(ty, body, hint):
            cs = sorted_noms(support_f(body))
            name = fresh_name(hint or "X", taken_names(seq))
            v = Var(name, ty)
            app: Term = v
            if cs:
                _, app = raise_over(v, cs, taken_names(seq))
            return replace(seq, goal=open_f(body, app))
    raise KernelError("goal is not universally quantified")


def nab_right(seq: Sequent) -> Sequent:
    match seq.goal:
        case Nab(ty, body, _):
            a = fresh_nominal(ty, seq_support(seq))
            return replace(seq, goal=open_f(body, a))
    raise KernelError("goal is not nabla-quantified")


def ex_right(seq: Sequent, witness: Term) -> Sequent:
    match seq.goal:
        case Ex(ty, body, _):
            _check_witness(seq, witness, ty)
            return replace(seq, goal=open_f(body, witness))
    raise KernelError("goal is not existentially quantified")


def _check_witness(seq: Sequent, t: Term, ty: Ty) -> None:
    got = term_ty(t)
    if got != ty:
        raise KernelError(f"witness has type {got!r}, expected {ty!r}")
    eigen = eigen_vars(seq)
    for name, v in free_vars_f(Atom("_w", (t,))).items():
        if name not in eigen:
            raise KernelError(f"witness mentions unknown variable {name!r}")


# ---------------------------------------------------------------------------
# Core left rules

def and_left(seq: Sequent, hname: str) -> Sequent:
    h = seq.hyp(hname)
    if not isinstance(h.formula, And):
        raise KernelError(f"{hname} is not a conjunction")
    s2 = remove_hyp(seq, hname)
    s3, _ = add_hyps(s2, conjuncts(h.formula))
    return s3


def or_left(seq: Sequent, hname: str) -> list[Sequent]:
    h = seq.hyp(hname)
    if not isinstance(h.formula, Or):
        raise KernelError(f"{hname} is not a disjunction")
    s2 = remove_hyp(seq, hname)
    out = []
    for side in (h.formula.left, h.formula.right):
        s3, _ = add_hyps(s2, [side])
        out.append(s3)
    return out


def imp_left(seq: Sequent, hname: str) -> list[Sequent]:
    h = seq.hyp(hname)
    if not isinstance(h.formula, Imp):
        raise KernelError(f"{hname} is not an implication")
    s2 = remove_hyp(seq, hname)
    left = replace(s2, goal=h.formula.left)
    right, _ = add_hyps(s2, [h.formula.right])
    return [left, right]


def all_left(seq: Sequent, hname: str, witness: Term) -> Sequent:
    h = seq.hyp(hname)
    if not isinstance(h.formula, All):
        raise KernelError(f"{hname} is not universally quantified")
    _check_witness(seq, witness, h.formula.ty)
    s2 = remove_hyp(seq, hname)
    s3, _ = add_hyps(s2, [open_f(h.formula.body, witness)])
    return s3


def ex_left(seq: Sequent, hname: str) -> tuple[Sequent, Var]:
    h = seq.hyp(hname)
    if not isinstance(h.formula, Ex):
        raise KernelError(f"{hname} is not existentially quantified")
    body, ty, hint = h.formula.body, h.formula.ty, h.formula.hint
    cs = sorted_noms(support_f(body))
    name = fresh_name((hint or "X"), taken_names(seq))
    v = Var(name, ty)
    if cs:
        v, app = raise_over(v, cs, taken_names(seq))
    else:
        app = v
    s2 = remove_hyp(seq, hname)
    s3, _ = add_hyps(s2, [open_f(body, app)])
    return s3, v


def nab_left(seq: Sequent, hname: str) -> Sequent:
    h = seq.hyp(hname)
    if not isinstance(h.formula, Nab):
        raise KernelError(f"{hname} is not nabla-quantified")
    a = fresh_nominal(h.formula.ty, seq_support(seq))
    s2 = remove_hyp(seq, hname)
    s3, _ = add_hyps(s2, [open_f(h.formula.body, a)])
    return s3


# ---------------------------------------------------------------------------
# Identity (modulo permutations of nominal constants) and equality

def rule_id(seq: Sequent, hname: str) -> bool:
    h = seq.hyp(hname)
    return perm_match(strip_ann(h.formula), strip_ann(seq.goal)) is not None


def eq_right_closes(seq: Sequent, flex: Optional[SupportEnv] = None,
                    avoid: Optional[set[str]] = None) -> Optional[Unified]:
    """Close an equality goal when both sides are alpha-beta-eta equal
    (instantiating only variables listed in `flex`)."""
    match seq.goal:
        case Eq(l, r):
            frozen = set(eigen_vars(seq)) - set(flex or {})
            try:
                _, u = _unify_or_none(
                    [(l, r)], env=dict(flex or {}), frozen=frozen,
                    avoid=avoid or taken_names(seq),
                )
            except StuckNonPattern:
                return None
            return u
    raise KernelError("goal is not an equality")


def eq_left(
    seq: Sequent, hname: str, flex: Optional[SupportEnv] = None
) -> list[Sequent]:
    """Equality hypothesis: zero premises (closed) or one instantiated premise."""
    h = seq.hyp(hname)
    if not isinstance(h.formula, Eq):
        raise KernelError(f"{hname} is not an equality")
    env: SupportEnv = dict(flex or {})
    kind, u = unify_pattern(
        UnifProblem(
            [(h.formula.left, h.formula.right)],
            env=env,
            avoid_names=frozenset(taken_names(seq)),
        )
    )
    if kind == "nonpattern":
        raise StuckNonPattern(f"case {hname}: unification outside the pattern fragment")
    if kind == "no":
        return []
    s2 = remove_hyp(seq, hname)
    return [subst_seq(s2, u.subst)]


def _unify_or_none(eqs, env, frozen, avoid):
    kind, u = unify_pattern(
        UnifProblem(list(eqs), env=env, frozen=frozenset(frozen), avoid_names=frozenset(avoid))
    )
    if kind == "nonpattern":
        raise StuckNonPattern("unification outside the pattern fragment")
    return kind, u


# ---------------------------------------------------------------------------
# Definition rules (defL / defR)

def _prepare_clause(
    seq: Sequent,
    target: Atom,
    clause: Clause,
    flex: SupportEnv,
) -> tuple[Sequent, Atom, Clause, list[Nom], list[Nom], set[str], SupportEnv]:
    """Raise the sequent over fresh c̄ and the clause over supp(target).

    Flexible variables (proof-search existentials) with finite supports
    are raised like eigenvariables, transferring their flexibility to the
    raised head; cofinite-support variables are left alone (raising them
    would leave the pattern fragment).
    """
    a_noms = sorted_noms(support_f(target))
    supp = seq_support(seq) | support_f(target)
    cs = fresh_nominals([z.ty for z in clause.nablas], supp)
    taken = taken_names(seq) | clause.var_names() | set(free_vars_f(target)) | set(flex)
    flex2 = dict(flex)
    sigma: dict[str, Term] = {}
    if cs:
        ev = eigen_vars(seq)
        ev.update(free_vars_f(target))
        for name in sorted(ev):
            if name in flex and flex[name].allowed is None:
                continue
            h, app = raise_over(ev[name], cs, taken)
            taken.add(h.name)
            sigma[name] = app
            if name in flex:
                flex2[h.name] = flex2.pop(name)
    seq1 = subst_seq(seq, sigma)
    target1 = subst_vars_f(target, sigma)
    assert isinstance(target1, Atom)
    rc = raise_clause(clause, a_noms, taken)
    taken |= rc.var_names()
    zmap = {z.name: c for z, c in zip(rc.nablas, cs)}
    head = subst_vars_f(rc.head, zmap)
    body = subst_vars_f(rc.body, zmap)
    assert isinstance(head, Atom)
    rc2 = Clause([*rc.uvars], [], head, body)
    return seq1, target1, rc2, a_noms, cs, taken, flex2


def _relevant_perms(a_noms: list[Nom], cs: list[Nom]) -> Iterator:
    """Permutations of ā∪c̄ quotiented by action on c̄.

    Two permutations agreeing on the clause's nabla constants c̄ produce
    premises that differ only by a renaming of the freshly raised clause
    variables, so it suffices to enumerate injective type-preserving
    images of c̄ in ā∪c̄ (extended to permutations deterministically).
    """
    import itertools as _it

    if not cs:
        yield Perm.identity()
        return
    universe = sorted_noms(set(a_noms) | set(cs))
    pools = [[n for n in universe if n.ty == c.ty] for c in cs]
    for combo in _it.product(*pools):
        if len(set(combo)) != len(combo):
            continue
        yield extend_to_perm({c: img for c, img in zip(cs, combo) if c != img})


def _annotate_body(body: Formula, gen: int, defs: Definitions) -> Formula:
    """Positive defined atoms of an unfolded body are strictly smaller."""

    def walk(f: Formula, positive: bool) -> Formula:
        if positive and match_judgment(f) is not None:
            return set_formula_ann(f, Ann(star=True, gen=gen))
        match f:
            case Atom(pred, args, _):
                if positive and defs.is_defined(pred):
                    return Atom(pred, args, Ann(star=True, gen=gen))
                return f
            case And(l, r):
                return And(walk(l, positive), walk(r, positive))
            case Or(l, r):
                return Or(walk(l, positive), walk(r, positive))
            case Imp(l, r):
                return Imp(walk(l, not positive), walk(r, positive))
            case All(ty, b, hint):
                return All(ty, walk(b, positive), hint)
            case Ex(ty, b, hint):
                return Ex(ty, walk(b, positive), hint)
            case Nab(ty, b, hint):
                return Nab(ty, walk(b, positive), hint)
            case _:
                return f

    return walk(body, True)


def def_left(
    seq: Sequent,
    hname: str,
    defs: Definitions,
    flex: Optional[SupportEnv] = None,
) -> list[tuple[Sequent, str]]:
    """Unfold a defined atom on the left.  Returns premises with the name
    of the hypothesis holding the clause-body instance ('' when the body
    was trivial); an empty list closes the subgoal."""
    h = seq.hyp(hname)
    atom = h.formula
    if not isinstance(atom, Atom):
        raise KernelError(f"{hname} is not an atom")
    clauses = defs.clauses_of(atom.pred)
    ann = atom.ann
    target = Atom(atom.pred, atom.args, None)
    base = remove_hyp(seq, hname)
    flex = dict(flex or {})
    premises: list[tuple[Sequent, str]] = []
    for clause in clauses:
        seq1, target1, rc, a_noms, cs, taken, flex2 = _prepare_clause(
            base, target, clause, flex
        )
        seen: set[tuple[Formula, Formula]] = set()
        for pi in _relevant_perms(a_noms, cs):
            piH = apply_perm_f(pi, rc.head)
            piB = apply_perm_f(pi, rc.body)
            if (piH, piB) in seen:
                continue
            seen.add((piH, piB))
            assert isinstance(piH, Atom)
            kind, u = unify_pattern(
                UnifProblem(
                    list(zip(piH.args, target1.args)),
                    env=dict(flex2),
                    avoid_names=frozenset(taken),
                )
            )
            if kind == "nonpattern":
                raise StuckNonPattern(
                    f"case {hname}: unification outside the pattern fragment"
                )
            if kind == "no":
                continue
            body = subst_vars_f(piB, u.subst)
            if ann is not None:
                body = _annotate_body(body, ann.gen, defs)
            prem = subst_seq(seq1, u.subst)
            prem2, names = add_hyps(prem, [body])
            premises.append((prem2, names[0] if names else ""))
    return premises


def def_right_options(
    seq: Sequent,
    defs: Definitions,
    flex: Optional[SupportEnv] = None,
    clause_idx: Optional[int] = None,
) -> Iterator[tuple[int, Sequent, Unified]]:
    """Enumerate defR instances for an atomic goal: the premise keeps the
    hypotheses (raised) and proves the matched clause body.  Sequent
    eigenvariables are frozen except those with full support."""
    goal = seq.goal
    if not isinstance(goal, Atom):
        raise KernelError("goal is not an atom")
    clauses = defs.clauses_of(goal.pred)
    target = Atom(goal.pred, goal.args, None)
    flex = dict(flex or {})
    for idx, clause in enumerate(clauses):
        if clause_idx is not None and idx != clause_idx:
            continue
        seq1, target1, rc, a_noms, cs, taken, flex2 = _prepare_clause(
            replace(seq, goal=Top()), target, clause, flex
        )
        seen: set[tuple[Formula, Formula]] = set()
        frozen = set(eigen_vars(seq1)) | set(free_vars_f(target1))
        frozen -= set(flex2)
        env0 = dict(flex2)
        for v in rc.uvars:
            # clause variables stay flexible for the caller (search)
            env0.setdefault(v.name, EMPTY_SUPPORT)
        for pi in _relevant_perms(a_noms, cs):
            piH = apply_perm_f(pi, rc.head)
            piB = apply_perm_f(pi, rc.body)
            if (piH, piB) in seen:
                continue
            seen.add((piH, piB))
            assert isinstance(piH, Atom)
            try:
                kind, u = _unify_or_none(
                    list(zip(piH.args, target1.args)), env=dict(env0), frozen=frozen, avoid=taken
                )
            except StuckNonPattern:
                continue
            if kind == "no":
                continue
            body = subst_vars_f(piB, u.subst)
            prem = subst_seq(seq1, u.subst)
            prem = replace(prem, goal=body)
            yield idx, prem, u


def def_right(
    seq: Sequent,
    defs: Definitions,
    clause_idx: Optional[int] = None,
) -> Sequent:
    for _idx, prem, _u in def_right_options(seq, defs, clause_idx=clause_idx):
        return prem
    raise KernelError("no definitional clause matches the goal")


# ---------------------------------------------------------------------------
# Judgment sugar plumbing (the exists/nat packaging of seq atoms)

def sugar_unpack(seq: Sequent, hname: str) -> tuple[Sequent, str, str]:
    """{L |- G}  ~~>  nat N, seq N L G  (exists-left + and-left)."""
    h = seq.hyp(hname)
    if match_judgment(h.formula) is None:
        raise KernelError(f"{hname} is not a specification judgment")
    s2, _v = ex_left(seq, hname)
    packed = s2.hyps[-1]
    s3 = remove_hyp(s2, packed.name)
    s4, names = add_hyps(s3, conjuncts(packed.formula))
    assert len(names) == 2
    return s4, names[0], names[1]


def sugar_pack(seq: Sequent, seq_hyp: str, nat_hyp: str) -> tuple[Sequent, str]:
    """nat N, seq N L G  ~~>  {L |- G}  (derivable by exists-right)."""
    sh = seq.hyp(seq_hyp)
    nh = seq.hyp(nat_hyp)
    if not (isinstance(sh.formula, Atom) and sh.formula.pred == "seq"):
        raise KernelError(f"{seq_hyp} is not a seq atom")
    if not (isinstance(nh.formula, Atom) and nh.formula.pred == "nat"):
        raise KernelError(f"{nat_hyp} is not a nat atom")
    n, ctx, goal = sh.formula.args
    # nat is closed under s, so a height s^k(m) is covered by nat m
    peeled = n
    while peeled != nh.formula.args[0]:
        from .terms import spine as _spine
        head, args = _spine(peeled)
        if isinstance(head, Con) and head.name == "s" and len(args) == 1:
            peeled = args[0]
        else:
            raise KernelError("height mismatch between seq and nat hypotheses")
    s2 = remove_hyp(remove_hyp(seq, seq_hyp), nat_hyp)
    s3, names = add_hyps(s2, [mk_judgment(ctx, goal, sh.formula.ann)])
    return s3, names[0] if names else ""


# ---------------------------------------------------------------------------
# Natural-number induction (the implicit measure, via annotations)

def antecedent_leaves(goal: Formula) -> list[Formula]:
    leaves: list[Formula] = []

    def walk(f: Formula) -> None:
        if match_judgment(f) is not None:
            return
        match f:
            case All(_, b, _) | Nab(_, b, _):
                walk(b)
            case Imp(l, r):
                leaves.extend(conjuncts(l))
                walk(r)
            case _:
                pass

    walk(goal)
    return leaves


def _map_antecedent(goal: Formula, idx: int, ann: Ann) -> Formula:
    count = [0]

    def mark(leaf: Formula) -> Formula:
        count[0] += 1
        if count[0] == idx:
            return set_formula_ann(leaf, ann)
        return leaf

    def walk(f: Formula) -> Formula:
        if match_judgment(f) is not None:
            return f
        match f:
            case All(ty, b, hint):
                return All(ty, walk(b), hint)
            case Nab(ty, b, hint):
                return Nab(ty, walk(b), hint)
            case Imp(l, r):
                parts = [mark(p) for p in conjuncts(l)]
                out = parts[-1]
                for p in reversed(parts[:-1]):
                    out = And(p, out)
                return Imp(out, walk(r))
            case _:
                return f

    return walk(goal)


def nat_induct(seq: Sequent, idx: int, gen: int, defs: Definitions) -> Sequent:
    """Annotate the idx-th goal antecedent with @ and add the IH (same
    statement with * there)."""
    leaves = antecedent_leaves(seq.goal)
    if idx < 1 or idx > len(leaves):
        raise KernelError(f"no antecedent number {idx}")
    leaf = leaves[idx - 1]
    ok = match_judgment(leaf) is not None or (
        isinstance(leaf, Atom) and defs.is_defined(leaf.pred)
    )
    if not ok:
        raise KernelError("induction target must be a defined atom or a specification judgment")
    if formula_ann(leaf) is not None:
        raise KernelError("antecedent already carries an induction annotation")
    new_goal = _map_antecedent(seq.goal, idx, Ann(star=False, gen=gen))
    ih = _map_antecedent(seq.goal, idx, Ann(star=True, gen=gen))
    s2 = replace(seq, goal=new_goal)
    existing = {h.name for h in s2.hyps}
    name = "IH" if "IH" not in existing else fresh_name("IH", existing)
    s3 = replace(s2, hyps=s2.hyps + (Hyp(name, ih),))
    return s3
