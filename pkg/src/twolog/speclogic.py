"""The second level: specification logic embedding.

Specification files declare object-language constants and second-order
hereditary Harrop clauses (`pi x\\` for the object universal, `=>` for
the object implication, `,` for the object conjunction).  Predicates
declared with target `o` in a specification file become constants
targeting the reserved base type `atm`; clauses compile to `prog`
facts, and provability is reflected by the `seq` definition installed
verbatim:

    element N B (B::L)        := true
    element (s N) B (C::L)    := element N B L
    member B L                := exists n, nat n /\\ element n B L
    seq N L <A>               := member A L
    seq (s N) L (B , C)       := seq N L B /\\ seq N L C
    seq (s N) L (A => B)      := seq N (A::L) B
    seq (s N) L (pi B)        := nabla x, seq N L (B x)
    seq (s N) L <A>           := exists b, prog A b /\\ seq N L b
    seq (s N) L <A>           := prog A tt

with the sugar {L |- G} = exists n, nat n /\\ seq n L G.  The object
universal is a per-type family, so one `pi` clause is installed for
each quantified type occurring in the specification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import parser as P
from .definitions import Clause, Definitions
from .elab import (
    CONS,
    F_ATM,
    F_AND,
    F_IMP,
    NIL,
    S,
    TT,
    Z,
    Elab,
    Scope,
    Signature,
    f_all,
)
from .formulas import (
    ATM,
    FORM,
    NT,
    OLIST,
    All as FAll,
    And,
    Ann,
    Atom,
    Ex,
    Formula,
    Imp as FImp,
    Nab,
    Top,
    alpha_eq,
    apply_perm_f,
    match_judgment,
    mk_judgment,
    strip_ann,
    subst_nom_f,
    support_f,
)
from .parser import ParseError
from .terms import (
    App,
    Arrow,
    Base,
    Bd,
    Con,
    Lam,
    Nom,
    OTY,
    Perm,
    Term,
    Ty,
    Var,
    apply_perm,
    arg_types,
    contains_o,
    fresh_name,
    fresh_nominal,
    free_vars,
    normalize,
    order,
    shift,
    sorted_noms,
    spine,
    subst_nom,
    subst_vars,
    support,
    target_type,
    term_ty,
    ty_key,
)
from .unify import (
    FULL_SUPPORT,
    NonPattern,
    NoUnifier,
    SupportEnv,
    UnifProblem,
    VarSupport,
    candidate_perms,
    unify_pattern,
)


class SpecError(Exception):
    pass


@dataclass
class ProgClause:
    """prog HEAD BODY := true, with the forall-prefix variables."""

    uvars: list[Var]
    head: Term  # atm
    body: Term  # form

    def to_clause(self) -> Clause:
        return Clause(list(self.uvars), [], Atom("prog", (self.head, self.body)), Top())


@dataclass
class SpecProgram:
    sig: Signature
    clauses: list[ProgClause]
    pi_types: list[Ty]
    source: str = ""


# ---------------------------------------------------------------------------
# Compilation

def compile_spec(sig: Signature, text: str) -> SpecProgram:
    """Parse and compile a specification file into prog clauses."""
    sf = P.parse_spec_file(text)
    for k in sf.kinds:
        if k in sig.kinds or k == "o":
            raise SpecError(f"kind {k!r} is already declared")
        if P.NOMINAL_RE.match(k):
            raise SpecError(f"kind name {k!r} is reserved")
        sig.kinds.add(k)
    for name, rty, line in sf.decls:
        if name in sig.consts or name in sig.preds:
            raise SpecError(f"constant {name!r} is already declared (line {line})")
        if P.NOMINAL_RE.match(name):
            raise SpecError(f"constant name {name!r} is reserved (line {line})")
        ty = sig.ty_of_rty(rty)
        tgt = target_type(ty)
        if tgt == OTY:
            ty = _retarget(ty, ATM)
        elif not isinstance(tgt, Base) or tgt.name not in sig.kinds:
            raise SpecError(f"constant {name!r} must target a declared kind or o (line {line})")
        for a in arg_types(ty):
            if contains_o(a) or ATM in _bases(a) or FORM in _bases(a):
                raise SpecError(f"argument types of {name!r} must be object types (line {line})")
            if order(a) > 1:
                raise SpecError(f"argument of {name!r} exceeds order 1 (line {line})")
        sig.consts[name] = ty
    clauses: list[ProgClause] = []
    pi_types: list[Ty] = []
    for rd, line in sf.clauses:
        pc, pts = _compile_clause(sig, rd, line)
        clauses.append(pc)
        for t in pts:
            if t not in pi_types:
                pi_types.append(t)
    return SpecProgram(sig, clauses, pi_types, text)


def _bases(ty: Ty) -> set[Base]:
    if isinstance(ty, Arrow):
        return _bases(ty.left) | _bases(ty.right)
    return {ty} if isinstance(ty, Base) else set()


def _retarget(ty: Ty, new: Ty) -> Ty:
    if isinstance(ty, Arrow):
        return Arrow(ty.left, _retarget(ty.right, new))
    return new


def _compile_clause(sig: Signature, rd: P.RD, line: int) -> tuple[ProgClause, list[Ty]]:
    e = Elab(sig, Scope("clause"))
    pis: list[tuple[str, Var]] = []
    node = rd
    gs_raw: list[P.RG] = []
    while True:
        if isinstance(node, P.RDPi):
            ty = e.binder_ty(None, node.ty)
            v = Var(node.name, ty)
            if node.name in e.scope.preseed:
                raise ParseError(f"repeated pi variable {node.name!r}", line)
            e.scope.preseed[node.name] = v
            pis.append((node.name, v))
            node = node.body
        elif isinstance(node, P.RDImp):
            gs_raw.append(node.left)
            node = node.right
        else:
            assert isinstance(node, P.RDAtom)
            break
    head = e.gatom(P.RGAtm(node.spine), line)
    gs = [e.gform(g, line) for g in gs_raw]
    body: Term = TT
    if gs:
        body = gs[-1]
        for g in reversed(gs[:-1]):
            body = App(App(F_AND, g), body)
    head = e.zonk_term(head, line, "clause head")
    body = e.zonk_term(body, line, "clause body")
    uvars = [Var(v.name, e.zonk_ty(v.ty, line, v.name)) for v in e.universals.values()]
    uvars += [Var(name, e.zonk_ty(v.ty, line, name)) for name, v in pis]
    for v in uvars:
        if contains_o(v.ty) or order(v.ty) > 1:
            raise SpecError(
                f"quantified variable {v.name!r} must have order <= 1 without o (line {line})"
            )
    pi_types = _collect_pi_types(head) + _collect_pi_types(body)
    return ProgClause(uvars, head, body), pi_types


def _collect_pi_types(t: Term) -> list[Ty]:
    out: list[Ty] = []

    def go(u: Term) -> None:
        match u:
            case App(Con("f_all", fty), Lam(ty, body, _)):
                if ty not in out:
                    out.append(ty)
                go(body)
            case App(f, a):
                go(f)
                go(a)
            case Lam(_, body, _):
                go(body)
            case _:
                pass

    go(t)
    return out


# ---------------------------------------------------------------------------
# Installing the embedding as definitions

SEQ_PREDS = {
    "nat": Arrow(NT, OTY),
    "element": Arrow(NT, Arrow(ATM, Arrow(OLIST, OTY))),
    "member": Arrow(ATM, Arrow(OLIST, OTY)),
    "prog": Arrow(ATM, Arrow(FORM, OTY)),
    "seq": Arrow(NT, Arrow(OLIST, Arrow(FORM, OTY))),
}


def install_seq(sig: Signature, defs: Definitions, program: SpecProgram) -> None:
    """Register nat/element/member/prog/seq, with prog holding the program."""
    for name in SEQ_PREDS:
        if defs.is_defined(name):
            raise SpecError("specification logic is already installed")
    for name, ty in SEQ_PREDS.items():
        sig.preds[name] = ty

    N, B, C, L, A = (Var(x, t) for x, t in
                     [("N", NT), ("B", ATM), ("C", ATM), ("L", OLIST), ("A", ATM)])

    def cons(h: Term, t: Term) -> Term:
        return App(App(CONS, h), t)

    defs.add(sig, "nat", SEQ_PREDS["nat"], [
        Clause([], [], Atom("nat", (Z,)), Top()),
        Clause([N], [], Atom("nat", (App(S, N),)), Atom("nat", (N,))),
    ])
    defs.add(sig, "element", SEQ_PREDS["element"], [
        Clause([N, B, L], [], Atom("element", (N, B, cons(B, L))), Top()),
        Clause([N, B, C, L], [], Atom("element", (App(S, N), B, cons(C, L))),
               Atom("element", (N, B, L))),
    ])
    defs.add(sig, "member", SEQ_PREDS["member"], [
        Clause([B, L], [], Atom("member", (B, L)),
               Ex(NT, And(Atom("nat", (Bd(0),)), Atom("element", (Bd(0), B, L))), hint="n")),
    ])
    defs.add(sig, "prog", SEQ_PREDS["prog"], [pc.to_clause() for pc in program.clauses])

    GF, BF, CF = Var("G", FORM), Var("B", FORM), Var("C", FORM)
    seq_clauses = [
        Clause([N, L, A], [], Atom("seq", (N, L, App(F_ATM, A))), Atom("member", (A, L))),
        Clause([N, L, BF, CF], [],
               Atom("seq", (App(S, N), L, App(App(F_AND, BF), CF))),
               And(Atom("seq", (N, L, BF)), Atom("seq", (N, L, CF)))),
        Clause([N, L, A, BF], [],
               Atom("seq", (App(S, N), L, App(App(F_IMP, A), BF))),
               Atom("seq", (N, cons(A, L), BF))),
    ]
    for ty in program.pi_types:
        BV = Var("B", Arrow(ty, FORM))
        seq_clauses.append(
            Clause([N, L, BV], [],
                   Atom("seq", (App(S, N), L, App(f_all(ty), BV))),
                   Nab(ty, Atom("seq", (N, L, App(BV, Bd(0)))), hint="x"))
        )
    seq_clauses += [
        Clause([N, L, A], [],
               Atom("seq", (App(S, N), L, App(F_ATM, A))),
               Ex(FORM, And(Atom("prog", (A, Bd(0))), Atom("seq", (N, L, Bd(0)))), hint="b")),
        Clause([N, L, A], [],
               Atom("seq", (App(S, N), L, App(F_ATM, A))),
               Atom("prog", (A, TT))),
    ]
    defs.add(sig, "seq", SEQ_PREDS["seq"], seq_clauses)


# ---------------------------------------------------------------------------
# The specification animator: bounded uniform-proof search

@dataclass
class SpecSearch:
    program: SpecProgram
    nonpattern_seen: bool = False

    def search(
        self,
        ctx: Term,
        goal: Term,
        depth: int,
        env: Optional[SupportEnv] = None,
    ) -> Optional[dict[str, Term]]:
        """First solution for query variables, or None."""
        self.nonpattern_seen = False
        qvars = dict(free_vars(ctx))
        qvars.update(free_vars(goal))
        noms = sorted_noms(support(ctx) | support(goal))
        env0: SupportEnv = {
            name: VarSupport(frozenset(noms)) for name in qvars
        }
        if env:
            env0.update(env)
        taken = set(qvars) | {"X"}
        for sol in self._solve([(ctx, goal)], {}, env0, frozenset(noms), depth, taken):
            return sol
        return None

    def _solve(
        self,
        goals: list[tuple[Term, Term]],
        subst: dict[str, Term],
        env: SupportEnv,
        noms: frozenset[Nom],
        depth: int,
        taken: set[str],
    ) -> Iterator[dict[str, Term]]:
        if not goals:
            yield dict(subst)
            return
        ctx, g = goals[0]
        rest = goals[1:]
        ctx = normalize(subst_vars(ctx, subst))
        g = normalize(subst_vars(g, subst))
        head, args = spine(g)
        if head == TT and not args:
            # bare tt goals are not derivable (facts go through prog _ tt)
            return
        if isinstance(head, Con) and head.name == "f_and":
            yield from self._solve(
                [(ctx, args[0]), (ctx, args[1])] + rest, subst, env, noms, depth, taken
            )
            return
        if isinstance(head, Con) and head.name == "f_imp":
            yield from self._solve(
                [(App(App(CONS, args[0]), ctx), args[1])] + rest,
                subst, env, noms, depth, taken,
            )
            return
        if isinstance(head, Con) and head.name == "f_all":
            lam = args[0]
            a = fresh_nominal(lam.ty if isinstance(lam, Lam) else arg_types(term_ty(lam))[0], noms)
            body = normalize(App(lam, a))
            yield from self._solve(
                [(ctx, body)] + rest, subst, env, noms | {a}, depth, taken
            )
            return
        if isinstance(head, Con) and head.name == "f_atm":
            atom = args[0]
            yield from self._solve_atom(ctx, atom, rest, subst, env, noms, depth, taken)
            return
        # variable-headed goal formula: outside the executable fragment
        self.nonpattern_seen = True
        return

    def _solve_atom(self, ctx, atom, rest, subst, env, noms, depth, taken):
        # member: try each context element
        elems, tail = olist_spine(ctx)
        for e in elems:
            found = self._try_unify([(atom, e)], env, taken)
            if found is None:
                continue
            u, env2 = found
            s2 = _compose(subst, u)
            yield from self._solve(rest, s2, env2, noms, depth, taken)
        # backchain on program clauses
        if depth <= 0:
            return
        for pc in self.program.clauses:
            ren: dict[str, Term] = {}
            env2 = dict(env)
            taken2 = set(taken)
            for v in pc.uvars:
                nm = fresh_name(v.name, taken2)
                taken2.add(nm)
                ren[v.name] = Var(nm, v.ty)
                env2[nm] = VarSupport(frozenset(noms))
            h = subst_vars(pc.head, ren)
            b = subst_vars(pc.body, ren)
            found = self._try_unify([(h, atom)], env2, taken2)
            if found is None:
                continue
            u, env3 = found
            s2 = _compose(subst, u)
            if b == TT:
                yield from self._solve(rest, s2, env3, noms, depth - 1, taken2)
            else:
                new_goals = [(ctx, g) for g in fand_spine(normalize(subst_vars(b, u.subst)))]
                yield from self._solve(new_goals + rest, s2, env3, noms, depth - 1, taken2)

    def _try_unify(self, eqs, env, taken):
        kind, u = unify_pattern(
            UnifProblem(list(eqs), env=dict(env), avoid_names=frozenset(taken))
        )
        if kind == "nonpattern":
            self.nonpattern_seen = True
            return None
        if kind == "no":
            return None
        return u, u.env


def _compose(subst: dict[str, Term], u) -> dict[str, Term]:
    out = {k: normalize(subst_vars(t, u.subst)) for k, t in subst.items()}
    for k, t in u.subst.items():
        if k not in out:
            out[k] = t
    return out


def olist_spine(ctx: Term) -> tuple[list[Term], Term]:
    elems = []
    while True:
        head, args = spine(ctx)
        if isinstance(head, Con) and head.name == "::" and len(args) == 2:
            elems.append(args[0])
            ctx = args[1]
        else:
            return elems, ctx


def fand_spine(g: Term) -> list[Term]:
    head, args = spine(g)
    if isinstance(head, Con) and head.name == "f_and" and len(args) == 2:
        return fand_spine(args[0]) + fand_spine(args[1])
    return [g]


# ---------------------------------------------------------------------------
# Trusted meta-properties of the specification logic

@dataclass
class MetaResult:
    formula: Formula
    evidence: Optional[Formula]  # extra subgoal, when not discharged


def meta_monotone(hyp: Formula, new_ctx: Term) -> MetaResult:
    """{L1 |- g} with member-subset evidence yields {L2 |- g}."""
    m = match_judgment(hyp)
    if m is None:
        raise SpecError("monotone expects a specification judgment")
    l1, g, _ann = m
    if term_ty(new_ctx) != OLIST:
        raise SpecError("monotone context must be an olist")
    result = mk_judgment(new_ctx, g)
    e1, t1 = olist_spine(l1)
    e2, t2 = olist_spine(new_ctx)
    ground = (t1 == NIL and t2 == NIL)
    if ground and all(any(a == b for b in e2) for a in e1):
        return MetaResult(result, None)
    ev = FAll(
        ATM,
        FImp(
            Atom("member", (Bd(0), shift(l1, 1))),
            Atom("member", (Bd(0), shift(new_ctx, 1))),
        ),
        hint="e",
    )
    return MetaResult(result, ev)


def meta_inst(hyp: Formula, nom: Nom, t: Term) -> Formula:
    """Replace a support constant of a judgment by a term."""
    m = match_judgment(hyp)
    if m is None:
        raise SpecError("inst expects a specification judgment")
    if term_ty(t) != nom.ty:
        raise SpecError(f"instantiation term must have type {nom.ty!r}")
    l, g, _ann = m
    return mk_judgment(subst_nom(l, nom, t), subst_nom(g, nom, t))


def meta_cut(h1: Formula, h2: Formula) -> Formula:
    """{L1 |- <a>} and {a :: L2 |- g} yield {L1 ++ L2 |- g}."""
    m1, m2 = match_judgment(h1), match_judgment(h2)
    if m1 is None or m2 is None:
        raise SpecError("cut expects two specification judgments")
    l1, g1, _ = m1
    l2full, g2, _ = m2
    h, a1 = spine(g1)
    if not (isinstance(h, Con) and h.name == "f_atm"):
        raise SpecError("the first cut judgment must prove an atom")
    atom = a1[0]
    e2, t2 = olist_spine(l2full)
    if not e2:
        raise SpecError("the second cut judgment must have the cut atom as context head")
    cut_atom, l2_elems = e2[0], e2[1:]
    pi = _perm_aligning(l1, atom, cut_atom)
    if pi is None:
        raise SpecError("cut atom does not match the head of the second context")
    l1p = apply_perm(pi, l1)
    elems1, tail1 = olist_spine(l1p)
    if tail1 != NIL:
        raise SpecError("cannot append an open context")
    result_ctx = rebuild_olist(elems1 + l2_elems, t2)
    return mk_judgment(result_ctx, g2)


def _perm_aligning(l1: Term, atom: Term, target: Term) -> Optional[Perm]:
    if normalize(atom) == normalize(target):
        return Perm.identity()
    sa = sorted_noms(support(atom) | support(l1))
    sb = sorted_noms(support(target))
    for pi in candidate_perms(sa, sb):
        if normalize(apply_perm(pi, atom)) == normalize(target):
            return pi
    return None


def rebuild_olist(elems: list[Term], tail: Term) -> Term:
    out = tail
    for e in reversed(elems):
        out = App(App(CONS, e), out)
    return out
