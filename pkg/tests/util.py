"""Shared helpers for the test suite."""

import random

from aspen.ground import FALSUM, GroundProgram, Rule


def random_program(seed, max_atoms=12, max_rules=25):
    """A seeded random ground program, mixing tight and non-tight shapes.

    Bodies draw both positive and negative literals; positive cycles arise
    naturally and are made more likely for odd seeds.
    """
    rng = random.Random(seed)
    n = rng.randint(1, max_atoms)
    atoms = list(range(1, n + 1))
    n_rules = rng.randint(0, max_rules)
    cyclic_bias = seed % 2 == 1
    rules = []
    for _ in range(n_rules):
        head = FALSUM if rng.random() < 0.1 else rng.choice(atoms)
        body_len = rng.randint(0, min(3, n))
        if head == FALSUM and body_len == 0:
            body_len = 1
        body = rng.sample(atoms, body_len)
        pos, neg = [], []
        for a in body:
            pos_prob = 0.65 if cyclic_bias else 0.45
            (pos if rng.random() < pos_prob else neg).append(a)
        rules.append(Rule(head, pos, neg))
    return GroundProgram(rules, atoms=atoms)


def has_cyclic_scc(program):
    """True when the positive dependency graph has a cycle."""
    succ = {}
    for r in program.rules:
        if r.head == FALSUM:
            continue
        succ.setdefault(r.head, set()).update(r.pos)
        if r.head in r.pos:
            return True
    color = {}

    def visit(v):
        color[v] = 1
        for w in succ.get(v, ()):
            c = color.get(w)
            if c == 1:
                return True
            if c is None and visit(w):
                return True
        color[v] = 2
        return False

    return any(visit(v) for v in list(succ) if v not in color)
