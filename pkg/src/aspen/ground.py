"""Ground normal logic programs: data model, text format, and exhaustive oracles.

Atoms are positive integers; atom 0 is reserved for falsum and is always part
of the atom table.  A literal is a signed atom id: +a means "a is true", -a
means "a is false".  A rule `head <- pos, not neg` is normal; head 0 encodes a
constraint.  An interpretation assigns True/False/None to every atom, with
atom 0 pinned to False.
"""

from __future__ import annotations

import re

import numpy as np

FALSUM = 0

# Hard ceiling for the brute-force oracle: enumeration is 2**n interpretations.
BRUTE_FORCE_LIMIT = 22


class GroundError(Exception):
    pass


class GpfParseError(GroundError):
    """Raised on malformed program text; message carries the line number."""


class SymbolError(GroundError):
    pass


class OracleLimitError(GroundError):
    """Raised when a program is too large for exhaustive enumeration."""


_SYM_NAME = re.compile(r"[A-Za-z0-9_]+\Z")


def parse_symbol(name):
    """Split an atom name into (predicate, args).

    Grammar: `pred` or `pred(arg1,...,argk)` where predicate and every arg
    match [A-Za-z0-9_]+.  Nested terms are not part of the grammar.
    """
    if not isinstance(name, str) or not name:
        raise SymbolError("empty symbol")
    if "(" not in name:
        if not _SYM_NAME.match(name):
            raise SymbolError("bad predicate name: %r" % name)
        return name, ()
    if not name.endswith(")"):
        raise SymbolError("unbalanced parentheses: %r" % name)
    pred, _, rest = name.partition("(")
    if not _SYM_NAME.match(pred):
        raise SymbolError("bad predicate name: %r" % name)
    body = rest[:-1]
    if "(" in body or ")" in body:
        raise SymbolError("nested terms not allowed: %r" % name)
    args = body.split(",")
    for a in args:
        if not _SYM_NAME.match(a):
            raise SymbolError("bad argument %r in %r" % (a, name))
    return pred, tuple(args)


def format_symbol(pred, args=()):
    if not args:
        return pred
    return "%s(%s)" % (pred, ",".join(str(a) for a in args))


class Rule:
    """A normal rule: head <- pos bodies, not neg bodies.  Immutable."""

    __slots__ = ("head", "pos", "neg")

    def __init__(self, head, pos=(), neg=()):
        self.head = int(head)
        self.pos = frozenset(int(a) for a in pos)
        self.neg = frozenset(int(a) for a in neg)

    @property
    def is_fact(self):
        return not self.pos and not self.neg

    @property
    def is_constraint(self):
        return self.head == FALSUM

    @property
    def is_vacuous(self):
        # pos and neg intersect: the body can never hold
        return bool(self.pos & self.neg)

    def atoms(self):
        return {self.head} | self.pos | self.neg

    def key(self):
        return (self.head, self.pos, self.neg)

    def __eq__(self, other):
        return isinstance(other, Rule) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "Rule(%d, pos=%s, neg=%s)" % (
            self.head, sorted(self.pos), sorted(self.neg))


class GroundProgram:
    """A finite list of rules plus an atom table (ids, optional names)."""

    def __init__(self, rules=(), names=None, atoms=()):
        self.rules = tuple(rules)
        self.names = dict(names or {})
        universe = {FALSUM}
        universe.update(int(a) for a in atoms)
        universe.update(self.names)
        for r in self.rules:
            universe.update(r.atoms())
        self.atoms = frozenset(universe)
        self._validate()
        self.ids = {}
        for aid, name in self.names.items():
            if name in self.ids:
                raise GroundError("duplicate atom name %r" % name)
            self.ids[name] = aid

    def _validate(self):
        for a in self.atoms:
            if a < 0:
                raise GroundError("negative atom id %d" % a)
        if FALSUM in self.names:
            raise GroundError("atom 0 cannot be named")
        for r in self.rules:
            if FALSUM in r.pos or FALSUM in r.neg:
                raise GroundError("atom 0 may not appear in a body")
            if r.head == FALSUM and r.is_fact:
                raise GroundError("constraint with empty body")

    def name_of(self, aid):
        return self.names.get(aid)

    def id_of(self, name):
        return self.ids[name]

    def __eq__(self, other):
        return (isinstance(other, GroundProgram)
                and self.rules == other.rules
                and self.names == other.names
                and self.atoms == other.atoms)

    def __repr__(self):
        return "GroundProgram(%d atoms, %d rules)" % (
            len(self.atoms), len(self.rules))


class ProgramBuilder:
    """Incremental construction helper used by the encoders."""

    def __init__(self):
        self._next = 1
        self._rules = []
        self._names = {}
        self._ids = {}

    def atom(self, name=None):
        """Allocate a fresh atom id, optionally named."""
        aid = self._next
        self._next += 1
        if name is not None:
            if name in self._ids:
                raise GroundError("duplicate atom name %r" % name)
            self._names[aid] = name
            self._ids[name] = aid
        return aid

    def named(self, name):
        """Return the id for `name`, allocating it on first use."""
        if name in self._ids:
            return self._ids[name]
        return self.atom(name)

    def rule(self, head, pos=(), neg=()):
        self._rules.append(Rule(head, pos, neg))

    def fact(self, head):
        self.rule(head)

    def constraint(self, pos=(), neg=()):
        self.rule(FALSUM, pos, neg)

    def guess(self, aid, complement_name=None):
        """Add the guessing pair for `aid` and return the complement atom."""
        comp = self.atom(complement_name)
        self.rule(aid, neg=[comp])
        self.rule(comp, neg=[aid])
        return comp

    def at_most(self, selectors, bound):
        """Bound the number of true atoms among `selectors` by `bound`.

        Compiled to sequential-counter rules: c(i,j) holds when at least j of
        the first i selectors are true.  Counter atoms are unnamed.
        """
        selectors = list(selectors)
        if bound < 0:
            raise GroundError("negative bound")
        if bound >= len(selectors):
            return
        if bound == 0:
            for x in selectors:
                self.constraint(pos=[x])
            return
        prev = {}
        for i, x in enumerate(selectors):
            cur = {}
            top = min(i + 1, bound)
            for j in range(1, top + 1):
                cur[j] = self.atom()
            self.rule(cur[1], pos=[x])
            for j in range(1, top + 1):
                if j in prev:
                    self.rule(cur[j], pos=[prev[j]])
                if j > 1 and (j - 1) in prev:
                    self.rule(cur[j], pos=[prev[j - 1], x])
            if bound in prev:
                self.constraint(pos=[prev[bound], x])
            prev = cur

    def build(self, extra_atoms=()):
        return GroundProgram(self._rules, self._names, extra_atoms)


def parse_program(text):
    """Parse the line-oriented ground program format.

    Lines: optional header `p gpf 1`; `a <id> <name>` declarations;
    `r <head> <npos> <pos...> <nneg> <neg...>` rules; `#` starts a comment.
    """
    rules = []
    names = {}
    atoms = set()
    seen_header = False
    seen_content = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "p":
            if seen_header or seen_content:
                raise GpfParseError("line %d: stray header" % lineno)
            if parts[1:] != ["gpf", "1"]:
                raise GpfParseError("line %d: unsupported header %r" % (lineno, line))
            seen_header = True
            continue
        seen_content = True
        if tag == "a":
            if len(parts) != 3:
                raise GpfParseError("line %d: malformed atom declaration" % lineno)
            try:
                aid = int(parts[1])
            except ValueError:
                raise GpfParseError("line %d: bad atom id %r" % (lineno, parts[1]))
            if aid <= 0:
                raise GpfParseError("line %d: atom id must be positive" % lineno)
            name = parts[2]
            if aid in names and names[aid] != name:
                raise GpfParseError("line %d: atom %d redeclared" % (lineno, aid))
            if name in names.values() and names.get(aid) != name:
                raise GpfParseError("line %d: duplicate atom name %r" % (lineno, name))
            names[aid] = name
            atoms.add(aid)
        elif tag == "r":
            try:
                nums = [int(x) for x in parts[1:]]
            except ValueError:
                raise GpfParseError("line %d: malformed rule" % lineno)
            if len(nums) < 2:
                raise GpfParseError("line %d: malformed rule" % lineno)
            head, npos = nums[0], nums[1]
            if head < 0 or npos < 0:
                raise GpfParseError("line %d: malformed rule" % lineno)
            if len(nums) < 2 + npos + 1:
                raise GpfParseError("line %d: truncated rule" % lineno)
            pos = nums[2:2 + npos]
            nneg = nums[2 + npos]
            if nneg < 0 or len(nums) != 3 + npos + nneg:
                raise GpfParseError("line %d: truncated rule" % lineno)
            neg = nums[3 + npos:]
            if FALSUM in pos or FALSUM in neg:
                raise GpfParseError("line %d: atom 0 in rule body" % lineno)
            if head == FALSUM and not pos and not neg:
                raise GpfParseError("line %d: constraint with empty body" % lineno)
            rules.append(Rule(head, pos, neg))
        else:
            raise GpfParseError("line %d: unknown directive %r" % (lineno, tag))
    try:
        return GroundProgram(rules, names, atoms)
    except GroundError as exc:
        raise GpfParseError(str(exc))


def serialize_program(program):
    """Render a program in the format read by parse_program (with header)."""
    out = ["p gpf 1"]
    for aid in sorted(program.names):
        out.append("a %d %s" % (aid, program.names[aid]))
    for r in program.rules:
        pos = sorted(r.pos)
        neg = sorted(r.neg)
        fields = [str(r.head), str(len(pos))] + [str(a) for a in pos]
        fields += [str(len(neg))] + [str(a) for a in neg]
        out.append("r " + " ".join(fields))
    return "\n".join(out) + "\n"


def encode_pigeonhole(n, m):
    """The guess-and-check pigeonhole program over n pigeons and m holes.

    Guessed inHole/outHole pairs, mutual exclusion per hole and per pigeon,
    and coverage of every pigeon via inSomeHole.
    """
    if n < 0 or m < 0:
        raise GroundError("negative pigeonhole size")
    b = ProgramBuilder()
    pigeons = list(range(1, n + 1))
    holes = list(range(1, m + 1))
    for p in pigeons:
        b.fact(b.named("pigeon(%d)" % p))
    for h in holes:
        b.fact(b.named("hole(%d)" % h))
    inh = {}
    for p in pigeons:
        for h in holes:
            inh[p, h] = b.named("inHole(%d,%d)" % (p, h))
    for p in pigeons:
        for h in holes:
            out = b.named("outHole(%d,%d)" % (p, h))
            b.rule(inh[p, h], neg=[out])
            b.rule(out, neg=[inh[p, h]])
    for h in holes:
        for i, p1 in enumerate(pigeons):
            for p2 in pigeons[i + 1:]:
                b.constraint(pos=[inh[p1, h], inh[p2, h]])
    for p in pigeons:
        for i, h1 in enumerate(holes):
            for h2 in holes[i + 1:]:
                b.constraint(pos=[inh[p, h1], inh[p, h2]])
    for p in pigeons:
        some = b.named("inSomeHole(%d)" % p)
        for h in holes:
            b.rule(some, pos=[inh[p, h]])
        b.constraint(neg=[some])
    return b.build()


class Interpretation:
    """A (possibly partial) three-valued assignment over a program's atoms."""

    def __init__(self, atoms, true=(), false=()):
        self.universe = frozenset(atoms) | {FALSUM}
        self._val = {}
        for a in true:
            self._val[int(a)] = True
        for a in false:
            if self._val.get(int(a)) is True:
                raise GroundError("atom %d both true and false" % a)
            self._val[int(a)] = False
        if self._val.get(FALSUM) is True:
            raise GroundError("falsum cannot be true")
        self._val[FALSUM] = False
        for a in self._val:
            if a not in self.universe:
                raise GroundError("atom %d outside the universe" % a)

    @classmethod
    def total_from_true(cls, program, true_atoms):
        """The total interpretation over `program` with exactly `true_atoms` true."""
        trues = set(int(a) for a in true_atoms)
        return cls(program.atoms, trues, set(program.atoms) - trues)

    def value(self, atom):
        return self._val.get(atom)

    def is_total(self):
        return all(a in self._val for a in self.universe)

    def true_atoms(self):
        return frozenset(a for a, v in self._val.items() if v)

    def satisfies_literal(self, lit):
        v = self._val.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v


def _check_total_model(program, interp):
    if not interp.is_total():
        raise GroundError("interpretation is not total")
    for r in program.rules:
        body = all(interp.value(a) for a in r.pos) and \
            not any(interp.value(a) for a in r.neg)
        if not body:
            continue
        head_true = r.head != FALSUM and interp.value(r.head)
        if not head_true:
            return False
    return True


def reduct(program, interp):
    """The reduct of `program` under a total interpretation.

    Rules with a true negative body atom are dropped; survivors lose their
    negative body.  The atom table is preserved.
    """
    if not interp.is_total():
        raise GroundError("reduct needs a total interpretation")
    kept = []
    for r in program.rules:
        if any(interp.value(a) for a in r.neg):
            continue
        kept.append(Rule(r.head, r.pos))
    return GroundProgram(kept, program.names, program.atoms)


def least_model(program):
    """Least model of a negation-free program, as a set of true atoms.

    Constraints (head 0) are treated as rules deriving falsum; if one fires
    the returned set contains FALSUM.
    """
    facts = []
    count = []
    by_atom = {}
    for idx, r in enumerate(program.rules):
        if r.neg:
            raise GroundError("least_model needs a negation-free program")
        count.append(len(r.pos))
        if not r.pos:
            facts.append(idx)
        for a in r.pos:
            by_atom.setdefault(a, []).append(idx)
    derived = set()
    queue = []
    for idx in facts:
        queue.append(program.rules[idx].head)
    while queue:
        a = queue.pop()
        if a in derived:
            continue
        derived.add(a)
        for idx in by_atom.get(a, ()):
            count[idx] -= 1
            if count[idx] == 0:
                h = program.rules[idx].head
                if h not in derived:
                    queue.append(h)
    return derived


def is_answer_set(program, interp):
    """True when `interp` is a model whose positive part is the least model
    of the reduct."""
    if not _check_total_model(program, interp):
        return False
    lm = least_model(reduct(program, interp))
    if FALSUM in lm:
        return False
    return lm == set(interp.true_atoms())


def brute_force_answer_sets(program, limit=BRUTE_FORCE_LIMIT):
    """All answer sets of `program`, each a frozenset of true atoms.

    Enumerates every total interpretation and keeps the ones passing the
    answer-set check; exact and exhaustive.  Refuses programs with more than
    `limit` non-falsum atoms.
    """
    atoms = sorted(a for a in program.atoms if a != FALSUM)
    k = len(atoms)
    if k > limit:
        raise OracleLimitError(
            "%d atoms exceed the oracle limit of %d" % (k, limit))
    if k > 62:
        raise OracleLimitError("oracle cannot enumerate past 62 atoms")
    index = {a: i for i, a in enumerate(atoms)}
    dtype = np.uint32 if k <= 31 else np.uint64

    def mask(ids):
        m = 0
        for a in ids:
            m |= 1 << index[a]
        return dtype(m)

    zero = dtype(0)
    interps = np.arange(1 << k, dtype=dtype)
    is_model = np.ones(interps.shape, dtype=bool)
    rule_masks = []
    for r in program.rules:
        pm, nm = mask(r.pos), mask(r.neg)
        body_true = ((interps & pm) == pm) & ((interps & nm) == zero)
        if r.head == FALSUM:
            is_model &= ~body_true
            rule_masks.append((None, pm, nm))
        else:
            hb = mask([r.head])
            is_model &= ~body_true | ((interps & hb) != zero)
            rule_masks.append((hb, pm, nm))
    models = interps[is_model]
    del interps, is_model
    if models.size == 0:
        return set()

    # Least model of each reduct, vectorized across all classical models.
    derived = np.zeros(models.shape, dtype=dtype)
    while True:
        before = derived.copy()
        for hb, pm, nm in rule_masks:
            if hb is None:
                continue
            fire = ((models & nm) == zero) & ((derived & pm) == pm)
            derived = np.where(fire, derived | hb, derived)
        if np.array_equal(before, derived):
            break
    stable = models[derived == models]
    out = set()
    for bits in stable.tolist():
        out.add(frozenset(a for a in atoms if bits & (1 << index[a])))
    return out
