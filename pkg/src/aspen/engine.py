"""Conflict-driven search for answer sets of ground normal programs.

The search works on a clause translation of the program: rule clauses,
support (completion) clauses with shared body auxiliaries, and constraints
learned from conflicts.  Atoms in cyclic components of the positive
dependency graph additionally go through unfounded-set propagation, so
models found by the clause engine are answer sets; every witness is
nevertheless re-checked against the input program before it is returned.

Internally a literal is ``2*atom`` (positive) or ``2*atom + 1`` (negative);
all literals crossing the public boundary are signed atom ids.  Decision
making consults the attached heuristic, which may queue choices, unroll
assignments, inject constraints, or hand control to the built-in
activity-guided default (negative polarity, ties broken by a seeded RNG).
"""

import random
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .ground import FALSUM, GroundProgram, Interpretation, Rule, is_answer_set
from .heuristics import (
    AddConstraint,
    Choose,
    Fallback,
    FallbackController,
    HeuristicProtocolError,
    SearchView,
    Unroll,
)

UNDEF, TRUE, FALSE = 0, 1, 2

ACTIVITY_DECAY = 1.0 / 0.95
ACTIVITY_RESCALE = 1e100
CLAUSE_DECAY = 1.0 / 0.999
CLAUSE_RESCALE = 1e20
LUBY_UNIT = 32
LEARNED_FLOOR = 5000


class EngineError(Exception):
    """An internal invariant of the search engine was broken."""


def luby(i):
    """The i-th element (1-based) of the Luby restart sequence."""
    while True:
        k = (i + 1).bit_length() - 1
        if (1 << k) - 1 == i:
            return 1 << (k - 1)
        i -= (1 << k) - 1


def to_internal(signed):
    a = signed if signed > 0 else -signed
    return a + a if signed > 0 else a + a + 1


def to_signed(lit):
    v = lit >> 1
    return v if not (lit & 1) else -v


@dataclass
class Statistics:
    decisions: int = 0
    conflicts: int = 0
    restarts: int = 0
    learned: int = 0
    propagations: int = 0
    wall_ms: float = 0.0

    def as_dict(self):
        return {
            "decisions": self.decisions,
            "conflicts": self.conflicts,
            "restarts": self.restarts,
            "learned": self.learned,
            "propagations": self.propagations,
            "wall_ms": round(self.wall_ms, 3),
        }


@dataclass
class Limits:
    wall_s: float = None  # wall-clock budget in seconds
    max_decisions: int = None  # decision budget for deterministic cutoffs


@dataclass
class CoherentWitness:
    true_atoms: frozenset
    stats: Statistics = field(default_factory=Statistics)


@dataclass
class Incoherent:
    stats: Statistics = field(default_factory=Statistics)


@dataclass
class TimedOut:
    stats: Statistics = field(default_factory=Statistics)


@dataclass
class SimplifyResult:
    """Outcome of the structural program simplification.

    ``rules`` only mention undetermined atoms; ``true``/``false`` collect the
    atoms fixed at level zero.  ``incoherent`` reports a constraint violated
    already by the deterministic part (``program`` is then None).
    """

    rules: list
    true: frozenset
    false: frozenset
    incoherent: bool
    program: GroundProgram = None


def _discard_vacuous(rules):
    # a contradictory body never holds; a rule whose head feeds its own
    # positive body can never derive anything new
    return [r for r in rules if not r.is_vacuous and r.head not in r.pos]


def _simplify_fixpoint(program):
    true0, false0 = set(), set()
    rules = _discard_vacuous(program.rules)
    atoms = set(program.atoms) - {FALSUM}
    while True:
        changed = False
        out = []
        for r in rules:
            if r.head in true0:
                changed = True
                continue
            if (r.pos & false0) or (r.neg & true0):
                changed = True
                continue
            pos = r.pos - true0
            neg = r.neg - false0
            if len(pos) != len(r.pos) or len(neg) != len(r.neg):
                changed = True
                r = Rule(r.head, pos, neg)
            if not pos and not neg:
                if r.head == FALSUM:
                    return None, true0, false0
                true0.add(r.head)
                changed = True
                continue
            out.append(r)
        rules = out
        heads = {r.head for r in rules}
        for a in atoms:
            if a not in true0 and a not in false0 and a not in heads:
                false0.add(a)
                changed = True
        if not changed:
            return rules, true0, false0


def simplify(program, frozen=()):
    """Fix the deterministic part of the program and strip it from the rules.

    Repeats until nothing changes: vacuous rules are dropped, facts make
    their head true, rules of true heads and rules with a false body are
    removed, true body literals are stripped, and atoms without any rule
    become false.  Atoms listed in ``frozen`` keep their table entry even
    when their value got fixed.
    """
    frozen = frozenset(frozen)
    rules, true0, false0 = _simplify_fixpoint(program)
    if rules is None:
        return SimplifyResult([], frozenset(true0), frozenset(false0), True)
    referenced = set()
    for r in rules:
        referenced.add(r.head)
        referenced |= r.pos
        referenced |= r.neg
    referenced.discard(FALSUM)
    keep = referenced | (frozen & set(program.atoms))
    names = {a: n for a, n in program.names.items() if a in keep}
    prog = GroundProgram(rules, names=names, atoms=keep)
    return SimplifyResult(rules, frozenset(true0), frozenset(false0), False, prog)


class _Clause:
    __slots__ = ("lits", "learned", "activity", "seq", "deleted")

    def __init__(self, lits, learned=False, seq=0):
        self.lits = lits
        self.learned = learned
        self.activity = 0.0
        self.seq = seq
        self.deleted = False

    def __repr__(self):
        return "_Clause(%r)" % (self.lits,)


class _Finished(Exception):
    def __init__(self, answer):
        self.answer = answer


_COMMAND_TYPES = (Choose, Unroll, Fallback, AddConstraint)


class Engine:
    """One-shot search over a clause translation of a ground program.

    ``rules`` defaults to the program's own rules; ``determined`` maps atoms
    fixed before the search to their value, and ``frozen`` atoms among them
    stay visible (assigned at level zero with events) instead of being
    dropped from the view.
    """

    def __init__(self, program, rules=None, determined=None, frozen=(),
                 heuristic=None, seed=0, limits=None, decision_log=None,
                 verify=True):
        self.program = program
        self.rules = _discard_vacuous(
            program.rules if rules is None else rules)
        self.det = dict(determined or {})
        self.frozen = frozenset(frozen)
        self.listener = heuristic
        self.rng = random.Random(seed)
        self.limits = limits if limits is not None else Limits()
        self.decision_log = decision_log
        self.verify = verify
        self.stats = Statistics()
        self.atom_ids = frozenset(program.atoms)
        self.view = sorted(
            a for a in program.atoms
            if a != FALSUM and (a not in self.det or a in self.frozen))

        self._build_clauses()
        self._build_scc_machinery()

        self.level = 0
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.n_unassigned = len(self.view)
        self.pending = deque()
        self.fallback = FallbackController()
        self.act_inc = 1.0
        self.cla_inc = 1.0
        self.clause_seq = 0
        self.luby_idx = 1
        self.conflicts_since = 0
        self.reduce_threshold = max(LEARNED_FLOOR, 2 * len(self.rules))
        self._ran = False

    # ------------------------------------------------------------------
    # construction

    def _build_clauses(self):
        nvars = (max(self.atom_ids) if self.atom_ids else 0) + 1
        self._first_aux = nvars
        aux_by_body = {}
        clause_lits = []
        units = []

        def body_lits(r):
            return tuple([x + x for x in sorted(r.pos)]
                         + [x + x + 1 for x in sorted(r.neg)])

        def emit(lits):
            out = list(dict.fromkeys(lits))
            s = set(out)
            for l in out:
                if l ^ 1 in s:
                    return  # tautology
            if len(out) == 1:
                units.append(out[0])
            else:
                clause_lits.append(out)

        by_head = {}
        for r in self.rules:
            if r.head == FALSUM:
                emit([l ^ 1 for l in body_lits(r)])
            else:
                by_head.setdefault(r.head, []).append(r)

        def conj_aux(body):
            nonlocal nvars
            beta = aux_by_body.get(body)
            if beta is None:
                beta = nvars
                nvars += 1
                aux_by_body[body] = beta
                bl = beta + beta
                for l in body:
                    emit([bl ^ 1, l])
                emit([bl] + [l ^ 1 for l in body])
            return beta

        for a, rs in by_head.items():
            pa = a + a
            if any(not r.pos and not r.neg for r in rs):
                units.append(pa)
                continue
            if len(rs) == 1:
                body = body_lits(rs[0])
                emit([pa] + [l ^ 1 for l in body])
                for l in body:
                    emit([pa ^ 1, l])
                continue
            support = [pa ^ 1]
            for r in rs:
                body = body_lits(r)
                if len(body) == 1:
                    emit([body[0] ^ 1, pa])
                    support.append(body[0])
                else:
                    beta = conj_aux(body)
                    emit([(beta + beta) ^ 1, pa])
                    support.append(beta + beta)
            emit(support)

        for a in self.view:
            if a not in by_head and a not in self.det:
                units.append(a + a + 1)

        self.nvars = nvars
        nlits = nvars + nvars
        self.val = bytearray(nlits)
        self.valview = np.frombuffer(self.val, dtype=np.uint8)[0::2]
        self.levels = [0] * nvars
        self.reasons = [None] * nvars
        self.seen = bytearray(nvars)
        self.viewmask = bytearray(nvars)
        for a in self.view:
            self.viewmask[a] = 1
        self.choose_mask = np.frombuffer(self.viewmask, dtype=np.uint8) != 0
        self.activity = np.zeros(nvars)
        self.amplify = np.ones(nvars)
        self.signpos = bytearray(nvars)
        self.watches = [[] for _ in range(nlits)]
        self.init_units = units
        self.clauses = []
        self.learned_clauses = []
        self.extra_clauses = []
        for lits in clause_lits:
            c = _Clause(lits)
            self.clauses.append(c)
            self.watches[lits[0]].append(c)
            self.watches[lits[1]].append(c)

    def _build_scc_machinery(self):
        by_head = {}
        for r in self.rules:
            if r.head != FALSUM:
                by_head.setdefault(r.head, []).append(r)
        adj = {a: sorted({x for r in rs for x in r.pos if x in by_head})
               for a, rs in by_head.items()}
        sccs = _cyclic_sccs(adj)
        self.scc_members = sccs
        self.scc_of = {}
        for i, members in enumerate(sccs):
            for a in members:
                self.scc_of[a] = i
        self.scc_rules = [[] for _ in sccs]
        dbl = {}
        for a, rs in by_head.items():
            s = self.scc_of.get(a)
            if s is None:
                continue
            for r in rs:
                body = tuple([x + x for x in sorted(r.pos)]
                             + [x + x + 1 for x in sorted(r.neg)])
                same = tuple(x for x in sorted(r.pos) if self.scc_of.get(x) == s)
                self.scc_rules[s].append((a, body, same))
                for l in body:
                    dbl.setdefault(l ^ 1, set()).add(s)
        self.dbl = dbl if sccs else None
        self.dirty = set(range(len(sccs)))

    # ------------------------------------------------------------------
    # assignment and propagation

    def _assign(self, lit, reason):
        self.val[lit] = TRUE
        self.val[lit ^ 1] = FALSE
        v = lit >> 1
        self.levels[v] = self.level
        self.reasons[v] = reason
        self.trail.append(lit)
        if reason is not None:
            self.stats.propagations += 1
        if self.viewmask[v]:
            self.n_unassigned -= 1
            if self.listener is not None:
                sl = v if not (lit & 1) else -v
                if self.listener.on_lit_true(sl) is not None:
                    raise HeuristicProtocolError(
                        "commands are only accepted for a choice request")
        if self.dbl is not None:
            s = self.dbl.get(lit)
            if s:
                self.dirty |= s

    def _decide(self, lit):
        self.trail_lim.append(len(self.trail))
        self.level += 1
        self.stats.decisions += 1
        if self.decision_log is not None:
            self.decision_log.append(to_signed(lit))
        self._assign(lit, None)

    def _backjump(self, lvl):
        trail = self.trail
        val = self.val
        reasons = self.reasons
        viewmask = self.viewmask
        listener = self.listener
        scc_of = self.scc_of
        dirty = self.dirty
        lim = self.trail_lim[lvl]
        for i in range(len(trail) - 1, lim - 1, -1):
            lit = trail[i]
            v = lit >> 1
            val[lit] = UNDEF
            val[lit ^ 1] = UNDEF
            reasons[v] = None
            if viewmask[v]:
                self.n_unassigned += 1
                if listener is not None:
                    sl = v if not (lit & 1) else -v
                    if listener.on_unroll_lit(sl) is not None:
                        raise HeuristicProtocolError(
                            "commands are only accepted for a choice request")
            if scc_of:
                s = scc_of.get(v)
                if s is not None:
                    dirty.add(s)
        del trail[lim:]
        del self.trail_lim[lvl:]
        self.level = lvl
        self.qhead = lim

    def _unit_propagate(self):
        val = self.val
        watches = self.watches
        trail = self.trail
        levels = self.levels
        reasons = self.reasons
        viewmask = self.viewmask
        listener = self.listener
        dbl = self.dbl
        dirty = self.dirty
        level = self.level
        qhead = self.qhead
        nprop = 0
        confl = None
        while qhead < len(trail):
            flit = trail[qhead] ^ 1
            qhead += 1
            ws = watches[flit]
            if not ws:
                continue
            i = 0
            j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c.deleted:
                    continue
                lits = c.lits
                if lits[0] == flit:
                    lits[0] = lits[1]
                    lits[1] = flit
                w0 = lits[0]
                if val[w0] == 1:
                    ws[j] = c
                    j += 1
                    continue
                moved = False
                k = 2
                ln = len(lits)
                while k < ln:
                    lk = lits[k]
                    if val[lk] != 2:
                        lits[1] = lk
                        lits[k] = flit
                        watches[lk].append(c)
                        moved = True
                        break
                    k += 1
                if moved:
                    continue
                ws[j] = c
                j += 1
                if val[w0] == 2:
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    confl = c
                    break
                val[w0] = 1
                val[w0 ^ 1] = 2
                v = w0 >> 1
                levels[v] = level
                reasons[v] = c
                trail.append(w0)
                nprop += 1
                if viewmask[v]:
                    self.n_unassigned -= 1
                    if listener is not None:
                        sl = v if not (w0 & 1) else -v
                        if listener.on_lit_true(sl) is not None:
                            raise HeuristicProtocolError(
                                "commands are only accepted for a choice request")
                if dbl is not None:
                    s = dbl.get(w0)
                    if s:
                        dirty |= s
            del ws[j:]
            if confl is not None:
                break
        self.qhead = qhead
        self.stats.propagations += nprop
        return confl

    def _unfounded_pass(self):
        val = self.val
        while self.dirty:
            s = self.dirty.pop()
            members = self.scc_members[s]
            cand = [a for a in members if val[a + a] != 2]
            if not cand:
                continue
            founded = set()
            srules = self.scc_rules[s]
            changed = True
            while changed:
                changed = False
                for head, body, same in srules:
                    if head in founded or val[head + head] == 2:
                        continue
                    ok = True
                    for l in body:
                        if val[l] == 2:
                            ok = False
                            break
                    if not ok:
                        continue
                    for x in same:
                        if x not in founded:
                            ok = False
                            break
                    if not ok:
                        continue
                    founded.add(head)
                    changed = True
            unfounded = [a for a in cand if a not in founded]
            if not unfounded:
                continue
            uset = set(unfounded)
            ext = []
            seen_w = set()
            for head, body, same in srules:
                if head not in uset:
                    continue
                external = True
                for x in same:
                    if x in uset:
                        external = False
                        break
                if not external:
                    continue
                w = None
                for l in body:
                    if val[l] == 2:
                        w = l
                        break
                if w is None:
                    raise EngineError("support rule of an unfounded atom "
                                      "has no false body literal")
                if w not in seen_w:
                    seen_w.add(w)
                    ext.append(w)
            for a in unfounded:
                pa = a + a
                if val[pa] == 1:
                    self.dirty.add(s)
                    return _Clause([pa ^ 1] + ext)
                if val[pa] == 0:
                    self._assign(pa ^ 1, _Clause([pa ^ 1] + ext))
            if self.qhead < len(self.trail):
                return None
        return None

    def _propagate(self):
        while True:
            c = self._unit_propagate()
            if c is not None:
                return c
            if not self.dirty:
                return None
            c = self._unfounded_pass()
            if c is not None:
                return c
            if self.qhead >= len(self.trail) and not self.dirty:
                return None

    # ------------------------------------------------------------------
    # conflict analysis

    def _analyze(self, confl):
        seen = self.seen
        levels = self.levels
        trail = self.trail
        cur = self.level
        learned = []
        counter = 0
        idx = len(trail) - 1
        c = confl
        skip = -1
        while True:
            if c.learned:
                self._bump_clause(c)
            for q in c.lits:
                if q == skip:
                    continue
                v = q >> 1
                if not seen[v] and levels[v] > 0:
                    seen[v] = 1
                    if levels[v] >= cur:
                        counter += 1
                    else:
                        learned.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            t = trail[idx]
            idx -= 1
            v = t >> 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                learned.insert(0, t ^ 1)
                break
            c = self.reasons[v]
            skip = t
        for q in learned[1:]:
            seen[q >> 1] = 0
        if len(learned) > 1:
            bi = 1
            bl = levels[learned[1] >> 1]
            for k in range(2, len(learned)):
                lk = levels[learned[k] >> 1]
                if lk > bl:
                    bl = lk
                    bi = k
            learned[1], learned[bi] = learned[bi], learned[1]
            return learned, bl
        return learned, 0

    def _bump_clause(self, c):
        c.activity += self.cla_inc
        if c.activity > CLAUSE_RESCALE:
            inv = 1.0 / CLAUSE_RESCALE
            for d in self.learned_clauses:
                d.activity *= inv
            self.cla_inc *= inv

    def _bump_atoms(self, lits):
        act = self.activity
        amp = self.amplify
        inc = self.act_inc
        for q in lits:
            v = q >> 1
            act[v] += inc * amp[v]
        inc *= ACTIVITY_DECAY
        if inc > ACTIVITY_RESCALE:
            act *= 1.0 / ACTIVITY_RESCALE
            inc *= 1.0 / ACTIVITY_RESCALE
        self.act_inc = inc

    def _reduce_learned(self):
        locked = set()
        for lit in self.trail:
            r = self.reasons[lit >> 1]
            if r is not None and r.learned:
                locked.add(id(r))
        cand = [c for c in self.learned_clauses
                if len(c.lits) > 2 and id(c) not in locked]
        cand.sort(key=lambda c: (c.activity, -c.seq))
        for c in cand[:len(cand) // 2]:
            c.deleted = True
        self.learned_clauses = [c for c in self.learned_clauses if not c.deleted]

    # ------------------------------------------------------------------
    # heuristic commands

    def _notify(self, method, *args):
        h = self.listener
        if h is None:
            return
        if getattr(h, method)(*args) is not None:
            raise HeuristicProtocolError(
                "commands are only accepted for a choice request")

    def _literal_status(self, signed):
        a = signed if signed > 0 else -signed
        if a == FALSUM or a not in self.atom_ids:
            raise HeuristicProtocolError("unknown atom %d" % a)
        if a in self.det and a not in self.frozen:
            holds = self.det[a] if signed > 0 else not self.det[a]
            return 1 if holds else 2
        return self.val[to_internal(signed)]

    def _value_of(self, atom):
        if atom == FALSUM:
            return False
        if atom in self.det and atom not in self.frozen:
            return self.det[atom]
        if atom not in self.atom_ids:
            raise KeyError(atom)
        v = self.val[atom + atom]
        return None if v == UNDEF else v == TRUE

    def _queue_batch(self, batch):
        if isinstance(batch, _COMMAND_TYPES):
            batch = [batch]
        if batch is None:
            raise HeuristicProtocolError("a choice request needs commands")
        cmds = list(batch)
        if not cmds:
            raise HeuristicProtocolError("empty command batch")
        for i, c in enumerate(cmds):
            if not isinstance(c, _COMMAND_TYPES):
                raise HeuristicProtocolError("unknown command %r" % (c,))
            if isinstance(c, Fallback) and i != len(cmds) - 1:
                raise HeuristicProtocolError("fallback must end its batch")
        self.pending.extend(cmds)

    def _default_choice(self):
        undef = (self.valview == UNDEF) & self.choose_mask
        cand = np.flatnonzero(undef)
        if cand.size == 0:
            raise EngineError("choice requested with nothing unassigned")
        acts = self.activity[cand]
        ties = cand[acts == acts.max()]
        if ties.size == 1:
            v = int(ties[0])
        else:
            v = int(ties[self.rng.randrange(ties.size)])
        return v + v if self.signpos[v] else v + v + 1

    def _make_choice(self):
        if self.listener is None:
            self._decide(self._default_choice())
            return
        while True:
            if self.fallback.active():
                self.fallback.consume()
                self._decide(self._default_choice())
                return
            if self.pending:
                cmd = self.pending.popleft()
                t = type(cmd)
                if t is Choose:
                    # a run of consecutive queued choices opens one decision
                    # level per literal before propagation weighs in, so a
                    # planned block is decided as planned
                    decided = False
                    while True:
                        st = self._literal_status(cmd.literal)
                        if st == UNDEF:
                            self._decide(to_internal(cmd.literal))
                            decided = True
                        elif st == FALSE:
                            self.pending.clear()
                            self._notify("on_inco_choice", cmd.literal)
                            return
                        if not self.pending or \
                                type(self.pending[0]) is not Choose:
                            break
                        cmd = self.pending.popleft()
                    if decided:
                        return
                    continue
                if t is Unroll:
                    self._apply_unroll(cmd.literal)
                    return
                if t is AddConstraint:
                    self._apply_add_constraint(cmd.body)
                    return
                self._apply_fallback(cmd)
                continue
            self._check_budget()
            batch = self.listener.on_choice_required()
            self._queue_batch(batch)

    def _apply_unroll(self, signed):
        if signed == 0:
            self._restart(flush=False)
            return
        a = signed if signed > 0 else -signed
        if a not in self.atom_ids:
            raise HeuristicProtocolError("unknown atom %d" % a)
        if a in self.det and a not in self.frozen:
            raise HeuristicProtocolError(
                "cannot unroll a literal fixed by simplification")
        if self.val[a + a] == UNDEF:
            return
        if self.levels[a] == 0:
            raise HeuristicProtocolError("cannot unroll a level-0 literal")
        self._backjump(self.levels[a] - 1)

    def _apply_add_constraint(self, body):
        lits = []
        for sl in body:
            a = sl if sl > 0 else -sl
            if a == FALSUM or a not in self.atom_ids:
                raise HeuristicProtocolError("unknown atom %d" % a)
            if a in self.det and a not in self.frozen:
                if (sl > 0) == self.det[a]:
                    continue  # body literal permanently true: no clause effect
                return  # body literal permanently false: constraint satisfied
            lits.append(to_internal(sl) ^ 1)
        out = list(dict.fromkeys(lits))
        s = set(out)
        for l in out:
            if l ^ 1 in s:
                return  # tautological clause
        if not out:
            raise _Finished(Incoherent(self.stats))
        val = self.val
        if all(val[l] == FALSE for l in out):
            lmax = max(self.levels[l >> 1] for l in out)
            if lmax == 0:
                raise _Finished(Incoherent(self.stats))
            self._backjump(lmax - 1)
        if len(out) == 1:
            l = out[0]
            if val[l] != TRUE:
                if self.level > 0:
                    self._backjump(0)
                if val[l] == FALSE:
                    raise _Finished(Incoherent(self.stats))
                self._assign(l, None)
            return
        nonfalse = [l for l in out if val[l] != FALSE]
        if len(nonfalse) >= 2:
            w0, w1 = nonfalse[0], nonfalse[1]
        else:
            w0 = nonfalse[0]
            w1 = max((l for l in out if l != w0),
                     key=lambda l: self.levels[l >> 1])
        out.remove(w0)
        out.remove(w1)
        out = [w0, w1] + out
        c = _Clause(out, seq=self.clause_seq)
        self.clause_seq += 1
        self.extra_clauses.append(c)
        self.watches[w0].append(c)
        self.watches[w1].append(c)
        if len(nonfalse) == 1 and val[w0] == UNDEF:
            self._assign(w0, c)

    def _apply_fallback(self, cmd):
        if not isinstance(cmd.count, int):
            raise HeuristicProtocolError("fallback count must be an integer")
        for table, kind in ((cmd.activity, "activity"),
                            (cmd.amplify, "amplify"),
                            (cmd.sign, "sign")):
            for atom, value in table.items():
                if atom not in self.atom_ids or atom == FALSUM:
                    raise HeuristicProtocolError("unknown atom %d" % atom)
                if kind == "sign":
                    if value not in (1, -1):
                        raise HeuristicProtocolError("sign must be +1 or -1")
                    self.signpos[atom] = 1 if value > 0 else 0
                else:
                    value = float(value)
                    if value < 0:
                        raise HeuristicProtocolError(
                            "%s must not be negative" % kind)
                    if kind == "activity":
                        self.activity[atom] = value
                    else:
                        self.amplify[atom] = value
        self.fallback.engage(cmd.count)

    # ------------------------------------------------------------------
    # main loop

    def _restart(self, flush=True):
        if self.level > 0:
            self._backjump(0)
        self.luby_idx += 1
        self.conflicts_since = 0
        self.stats.restarts += 1
        if flush:
            self.pending.clear()
        self._notify("on_restart")

    def _check_budget(self):
        lim = self.limits
        if lim.wall_s is not None and time.monotonic() >= self._deadline:
            raise _Finished(TimedOut(self.stats))
        if lim.max_decisions is not None \
                and self.stats.decisions >= lim.max_decisions:
            raise _Finished(TimedOut(self.stats))

    def _init_level0(self):
        self._assign(1, None)  # falsum is never true
        for lit in self.init_units:
            if self.val[lit] == TRUE:
                continue
            if self.val[lit] == FALSE:
                raise _Finished(Incoherent(self.stats))
            self._assign(lit, None)
        for a in sorted(self.det):
            if a in self.frozen:
                tv = self.det[a]
                lit = a + a if tv else a + a + 1
                if self.val[lit] == TRUE:
                    continue
                if self.val[lit] == FALSE:
                    raise _Finished(Incoherent(self.stats))
                self._assign(lit, None)

    def _extract_witness(self):
        val = self.val
        trues = {a for a in self.view if val[a + a] == TRUE}
        trues.update(a for a, tv in self.det.items()
                     if tv and a not in self.frozen)
        return frozenset(trues)

    def _handle_conflict(self, confl):
        self.stats.conflicts += 1
        self.conflicts_since += 1
        if self.level == 0:
            raise _Finished(Incoherent(self.stats))
        learned, bj = self._analyze(confl)
        self._backjump(bj)
        self.pending.clear()
        if self.listener is not None:
            if bj > 0:
                sdl = to_signed(self.trail[self.trail_lim[bj - 1]])
            else:
                sdl = None
            self._notify("on_conflict", sdl)
        self.cla_inc *= CLAUSE_DECAY
        self._bump_atoms(learned)
        self.stats.learned += 1
        if len(learned) == 1:
            self._assign(learned[0], None)
        else:
            c = _Clause(learned, learned=True, seq=self.clause_seq)
            self.clause_seq += 1
            self.learned_clauses.append(c)
            self.watches[learned[0]].append(c)
            self.watches[learned[1]].append(c)
            self._assign(learned[0], c)
        if self.listener is not None:
            self._notify("on_learn", [to_signed(q ^ 1) for q in learned])
        if len(self.learned_clauses) > self.reduce_threshold:
            self._reduce_learned()

    def run(self):
        if self._ran:
            raise EngineError("engine instances are one-shot")
        self._ran = True
        t0 = time.monotonic()
        lim = self.limits
        self._deadline = t0 + lim.wall_s if lim.wall_s is not None else None
        answer = None
        try:
            if self.listener is not None:
                names = {a: n for a, n in self.program.names.items()
                         if self.viewmask[a]}
                view = SearchView(atoms=tuple(self.view), names=names,
                                  rule_count=len(self.rules),
                                  value_of=self._value_of)
                self._notify("on_search", view)
            self._init_level0()
            while True:
                self._check_budget()
                confl = self._propagate()
                if confl is not None:
                    self._handle_conflict(confl)
                    continue
                if self.conflicts_since >= LUBY_UNIT * luby(self.luby_idx):
                    self._restart()
                    continue
                if self.n_unassigned == 0:
                    answer = self._model_found()
                    break
                self._make_choice()
        except _Finished as fin:
            answer = fin.answer
        finally:
            self.stats.wall_ms = (time.monotonic() - t0) * 1000.0
        return answer

    def _model_found(self):
        witness = self._extract_witness()
        if self.verify:
            interp = Interpretation.total_from_true(self.program, witness)
            if not is_answer_set(self.program, interp):
                raise EngineError("model fails the answer-set check; "
                                  "this is an engine bug")
        return CoherentWitness(witness, self.stats)


def _cyclic_sccs(adj):
    """Strongly connected components with more than one node, as sorted
    lists, over the (deterministically ordered) adjacency mapping."""
    index = {}
    low = {}
    onstack = set()
    stack = []
    sccs = []
    counter = 0
    for root in sorted(adj):
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        onstack.add(root)
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(adj.get(w, ()))))
                    pushed = True
                    break
                if w in onstack and index[w] < low[v]:
                    low[v] = index[w]
            if pushed:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                if len(comp) > 1:
                    sccs.append(sorted(comp))
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
    return sccs


def solve(program, heuristic=None, seed=0, limits=None, decision_log=None,
          verify=True):
    """Search for one answer set of ``program``.

    Returns CoherentWitness (with the true atoms), Incoherent, or TimedOut,
    each carrying search statistics.  ``heuristic`` drives branching through
    the event interface; ``decision_log``, when a list is passed, records
    every decision literal in order.
    """
    t0 = time.monotonic()
    frozen = frozenset()
    if heuristic is not None:
        got = heuristic.on_program(program)
        frozen = frozenset(got or ())
        for a in frozen:
            if a not in program.atoms or a == FALSUM:
                raise HeuristicProtocolError("cannot freeze unknown atom %r" % (a,))
    rules, true0, false0 = _simplify_fixpoint(program)
    if rules is None:
        stats = Statistics()
        stats.wall_ms = (time.monotonic() - t0) * 1000.0
        return Incoherent(stats)
    det = {a: True for a in true0}
    det.update((a, False) for a in false0)
    eng = Engine(program, rules=rules, determined=det, frozen=frozen,
                 heuristic=heuristic, seed=seed, limits=limits,
                 decision_log=decision_log, verify=verify)
    answer = eng.run()
    answer.stats.wall_ms = (time.monotonic() - t0) * 1000.0
    return answer
