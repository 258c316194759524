"""Branching-heuristic interface for the solver.

The engine raises events on the heuristic handle; only a choice request may
be answered with commands.  Literals are signed atom ids throughout.

Events: search (once, after simplification), lit_true, unroll_lit (reverse
trail order), conflict (carrying the latest surviving branching literal, or
None), inco_choice, learn (conflict-learned constraints only), restart, and
choice_required.

Commands: Choose(lit), Unroll(lit, 0 meaning full restart), Fallback(n, ...)
switching to the built-in default heuristic for n choices (n <= 0: for good),
and AddConstraint(body) injecting a constraint; an empty body stops the
search with Incoherent.  A batch is processed in order; queued choices are
consumed across successive choice requests.
"""

from dataclasses import dataclass, field

from .ground import parse_symbol


class HeuristicProtocolError(Exception):
    """A heuristic (in-process or external) broke the interface contract."""


@dataclass
class Choose:
    literal: int


@dataclass
class Unroll:
    literal: int  # 0 unrolls everything and counts as a restart


@dataclass
class Fallback:
    count: int
    activity: dict = field(default_factory=dict)
    amplify: dict = field(default_factory=dict)
    sign: dict = field(default_factory=dict)  # atom -> +1 (positive) or -1


@dataclass
class AddConstraint:
    body: tuple  # literals; the constraint forbids them all holding at once

    def __init__(self, body=()):
        self.body = tuple(body)


class FallbackController:
    """Tracks how many upcoming choices bypass the external heuristic."""

    def __init__(self, remaining=0, permanent=False):
        self.remaining = remaining
        self.permanent = permanent

    def engage(self, count):
        if count <= 0:
            self.permanent = True
            self.remaining = 0
        else:
            self.remaining = count

    def active(self):
        return self.permanent or self.remaining > 0

    def consume(self):
        if not self.permanent and self.remaining > 0:
            self.remaining -= 1


@dataclass
class SearchView:
    """What a heuristic sees when the search starts: the post-simplification
    atom table, the rule count, and a live read-only trail query."""

    atoms: tuple
    names: dict
    rule_count: int
    value_of: object  # callable atom id -> True | False | None

    def named(self, name):
        for aid, n in self.names.items():
            if n == name:
                return aid
        raise KeyError(name)


class Heuristic:
    """Base class; override what you need.  Event handlers must return None,
    commands belong to on_choice_required only."""

    def on_program(self, program):
        """Called once with the parsed program before simplification.
        Returns atom ids to freeze (exempt from simplification removal)."""
        return ()

    def on_search(self, view):
        pass

    def on_lit_true(self, literal):
        pass

    def on_unroll_lit(self, literal):
        pass

    def on_conflict(self, literal):
        pass

    def on_inco_choice(self, literal):
        pass

    def on_learn(self, literals):
        pass

    def on_restart(self):
        pass

    def on_choice_required(self):
        raise NotImplementedError


class DiagonalPigeonhole(Heuristic):
    """The reference in-process heuristic for the pigeonhole programs.

    Registers pigeons and holes from the atom names, freezes every named
    atom, and either stops the search outright (more pigeons than holes) or
    queues the diagonal placement inHole(i,i) for every pigeon.
    """

    def __init__(self):
        self.pigeons = []
        self.holes = []
        self.in_hole = {}
        self.queued = False

    def on_program(self, program):
        for aid, name in program.names.items():
            pred, args = parse_symbol(name)
            if pred == "pigeon":
                self.pigeons.append(int(args[0]))
            elif pred == "hole":
                self.holes.append(int(args[0]))
            elif pred == "inHole":
                self.in_hole[int(args[0]), int(args[1])] = aid
        return tuple(program.names)

    def on_choice_required(self):
        if len(self.pigeons) > len(self.holes):
            return [AddConstraint([])]
        if not self.queued:
            self.queued = True
            return [Choose(self.in_hole[p, p]) for p in sorted(self.pigeons)]
        return [Fallback(0)]
