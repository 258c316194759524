"""Partner-unit domain: format, encoding, verifier, order, heuristics."""

import pytest

from aspen.engine import CoherentWitness, Incoherent, solve
from aspen.ground import (
    ProgramBuilder,
    brute_force_answer_sets,
    format_symbol,
)
from aspen.heuristics import AddConstraint, Choose, Fallback, Unroll
from aspen.pup import (
    FIG1_SOLUTION,
    PupError,
    PupHeuristic,
    PupInstance,
    PupSolution,
    bfs_order,
    default_start_zone,
    encode_e1,
    enumerate_pup_solutions,
    extract_pup,
    fig1_instance,
    gen_pup,
    parse_pup,
    serialize_pup,
    verify_pup,
)


def tiny(zones, sensors, edges, units, ucap=1, iucap=1):
    return PupInstance(tuple(sensors), tuple(zones), tuple(edges),
                       units, ucap, iucap)


class TestFormat:
    def test_fig1_contents(self):
        inst = fig1_instance()
        assert len(inst.sensors) == 6
        assert len(inst.zones) == 6
        assert len(inst.edges) == 12
        assert inst.unit_count == 3
        assert inst.ucap == 2 and inst.iucap == 2

    def test_round_trip(self):
        for inst in (fig1_instance(), gen_pup("double", 2),
                     gen_pup("grid", 2, width=3, unit_count=4)):
            assert parse_pup(serialize_pup(inst)) == inst

    def test_degenerate_zoneless(self):
        inst = parse_pup("pup 1 1 1\ns sa\n")
        assert inst.zones == () and inst.sensors == ("sa",)

    def test_dangling_edge(self):
        with pytest.raises(PupError, match="unknown sensor"):
            parse_pup("pup 1 1 1\nz za\ne sx za\n")

    def test_nonpositive_caps(self):
        with pytest.raises(PupError):
            parse_pup("pup 0 1 1\nz za\n")

    def test_bad_line(self):
        with pytest.raises(PupError, match="line 2"):
            parse_pup("pup 1 1 1\nq zx\n")


class TestVerifier:
    def test_fig1_solution_accepted(self):
        assert verify_pup(fig1_instance(), FIG1_SOLUTION) == []

    def test_missing_partners_rejected(self):
        bare = PupSolution(dict(FIG1_SOLUTION.zone_unit),
                           dict(FIG1_SOLUTION.sensor_unit), set())
        violations = verify_pup(fig1_instance(), bare)
        assert violations
        assert any("s2" in v and "z123" in v for v in violations)

    def test_capacity_violation(self):
        inst = tiny(["a", "b", "c"], [], [], 1, ucap=2)
        sol = PupSolution({"a": 1, "b": 1, "c": 1}, {})
        assert any("3 zones" in v for v in verify_pup(inst, sol))

    def test_partner_cap_violation(self):
        inst = tiny(["z1", "z2", "z3"], ["s1", "s2", "s3"],
                    [("s1", "z1"), ("s2", "z2"), ("s3", "z3")],
                    4, ucap=3, iucap=1)
        sol = PupSolution({"z1": 2, "z2": 3, "z3": 4},
                          {"s1": 1, "s2": 1, "s3": 1},
                          {(1, 2), (1, 3), (1, 4)})
        violations = verify_pup(inst, sol)
        assert any("partners" in v for v in violations)

    def test_unplaced_zone(self):
        inst = tiny(["z1"], [], [], 1)
        assert verify_pup(inst, PupSolution({}, {}))


class TestEncoding:
    def test_forced_single_unit(self):
        inst = tiny(["z1"], ["s1"], [("s1", "z1")], 1)
        program = encode_e1(inst)
        models = brute_force_answer_sets(program)
        assert len(models) == 1
        sol = extract_pup(next(iter(models)), program, inst)
        assert sol.zone_unit == {"z1": 1}
        assert sol.sensor_unit == {"s1": 1}
        assert sol.partners == set()
        assert verify_pup(inst, sol) == []

    def test_three_zones_one_unit_incoherent(self):
        inst = tiny(["z1", "z2", "z3"], [], [], 1, ucap=2)
        program = encode_e1(inst)
        assert not brute_force_answer_sets(program)
        assert isinstance(solve(program), Incoherent)

    def test_brute_forced_models_extract_and_verify(self):
        cases = [
            tiny(["z1", "z2"], [], [], 1, ucap=2),
            tiny(["z1"], ["s1"], [("s1", "z1")], 2),
            tiny(["z1"], [], [], 2, ucap=1),
        ]
        for inst in cases:
            program = encode_e1(inst)
            models = brute_force_answer_sets(program, limit=24)
            assert models, inst
            for model in models:
                sol = extract_pup(model, program, inst)
                assert verify_pup(inst, sol) == [], inst

    def test_coherence_matches_enumeration(self):
        cases = [
            tiny(["z1", "z2"], ["s1"], [("s1", "z1"), ("s1", "z2")], 2,
                 ucap=1, iucap=1),
            tiny(["z1", "z2"], ["s1", "s2"],
                 [("s1", "z1"), ("s2", "z2")], 2, ucap=1, iucap=1),
            tiny(["z1", "z2", "z3"], ["s1"],
                 [("s1", "z1"), ("s1", "z2"), ("s1", "z3")], 3,
                 ucap=1, iucap=1),
            tiny(["z1"], ["s1", "s2", "s3"],
                 [("s1", "z1"), ("s2", "z1"), ("s3", "z1")], 2,
                 ucap=2, iucap=1),
            tiny(["z1", "z2"], ["s1"], [("s1", "z1")], 1, ucap=2),
        ]
        for inst in cases:
            exists = bool(enumerate_pup_solutions(inst, limit=1))
            answer = solve(encode_e1(inst))
            assert isinstance(answer, CoherentWitness) == exists, inst
            if exists:
                sol = extract_pup(answer.true_atoms, encode_e1(inst), inst)
                assert verify_pup(inst, sol) == []

    def test_fig1_coherent_and_admits_depicted_solution(self):
        inst = fig1_instance()
        program = encode_e1(inst)
        answer = solve(program, seed=0)
        assert isinstance(answer, CoherentWitness)
        sol = extract_pup(answer.true_atoms, program, inst)
        assert verify_pup(inst, sol) == []


class TestCounter:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_bound_is_exact(self, n):
        # with the selectors fixed as facts the counter alone decides
        for bound in range(0, n + 1):
            for chosen in range(1 << n):
                b = ProgramBuilder()
                sel = [b.named("x%d" % i) for i in range(n)]
                picked = [sel[i] for i in range(n) if chosen >> i & 1]
                for a in picked:
                    b.fact(a)
                b.at_most(sel, bound)
                answer = solve(b.build())
                want = len(picked) <= bound
                assert isinstance(answer, CoherentWitness) == want

    def test_guessed_models_per_cardinality(self):
        n, bound = 4, 2
        b = ProgramBuilder()
        sel = [b.named("x%d" % i) for i in range(n)]
        for a in sel:
            b.guess(a)
        b.at_most(sel, bound)
        program = b.build()
        models = brute_force_answer_sets(program, limit=24)
        counts = sorted(len(set(sel) & m) for m in models)
        # all subsets of size <= 2 and nothing larger
        assert counts == [0, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2]


class TestOrder:
    def test_fig1_order(self):
        inst = fig1_instance()
        assert default_start_zone(inst) == "z123"
        order = bfs_order(inst, "z123")
        assert order == [
            ("z", "z123"), ("s", "s1"), ("s", "s2"), ("s", "s3"),
            ("z", "z1"), ("z", "z24"), ("z", "z35"),
            ("s", "s4"), ("s", "s5"), ("z", "z456"),
            ("s", "s6"), ("z", "z6"),
        ]

    def test_permutation_and_distance_monotone(self):
        for inst in (fig1_instance(), gen_pup("grid", 2, width=2),
                     gen_pup("triple", 3)):
            start = default_start_zone(inst)
            order = bfs_order(inst, start)
            everything = [("z", z) for z in inst.zones]
            everything += [("s", s) for s in inst.sensors]
            assert sorted(order) == sorted(everything)
            dist = {("z", start): 0}
            frontier = [("z", start)]
            adj = {}
            for s, z in inst.edges:
                adj.setdefault(("z", z), []).append(("s", s))
                adj.setdefault(("s", s), []).append(("z", z))
            while frontier:
                nxt = []
                for v in frontier:
                    for w in adj.get(v, ()):
                        if w not in dist:
                            dist[w] = dist[v] + 1
                            nxt.append(w)
                frontier = nxt
            seen_d = 0
            for v in order:
                if v in dist:
                    assert dist[v] >= seen_d
                    seen_d = dist[v]

    def test_disconnected_appended(self):
        inst = tiny(["z1", "z2"], ["s1"], [("s1", "z1")], 1, ucap=2)
        assert bfs_order(inst, "z1") == [("z", "z1"), ("s", "s1"),
                                         ("z", "z2")]

    def test_single_zone(self):
        inst = tiny(["z1"], [], [], 1)
        assert bfs_order(inst, "z1") == [("z", "z1")]

    def test_star(self):
        inst = tiny(["z1"], ["s1", "s2", "s3"],
                    [("s1", "z1"), ("s2", "z1"), ("s3", "z1")], 2, ucap=2)
        assert bfs_order(inst, "z1") == [("z", "z1"), ("s", "s1"),
                                         ("s", "s2"), ("s", "s3")]


class TestGenerators:
    def test_double_shape(self):
        inst = gen_pup("double", 2)
        assert len(inst.zones) == 4
        assert len(inst.sensors) == 3
        assert len(inst.edges) == 6
        assert inst.unit_count == 2

    def test_doublev_shape(self):
        base = gen_pup("double", 2)
        inst = gen_pup("doublev", 2)
        assert len(inst.zones) == len(base.zones) + 2
        assert len(inst.edges) == len(base.edges) + 2

    def test_triple_shape(self):
        inst = gen_pup("triple", 1)
        assert len(inst.zones) == 3
        assert len(inst.sensors) == 1
        assert len(inst.edges) == 3

    def test_grid_smallest(self):
        inst = gen_pup("grid", 1)
        assert len(inst.zones) == 1
        assert len(inst.sensors) == 4

    def test_grid_shape(self):
        inst = gen_pup("grid", 2, width=3)
        assert len(inst.zones) == 6
        assert len(inst.sensors) == 3 * 3 + 2 * 4

    def test_double2_solves_with_two_units(self):
        inst = gen_pup("double", 2)
        program = encode_e1(inst)
        answer = solve(program)
        assert isinstance(answer, CoherentWitness)
        sol = extract_pup(answer.true_atoms, program, inst)
        assert verify_pup(inst, sol) == []

    def test_unknown_topology(self):
        with pytest.raises(PupError):
            gen_pup("ring", 2)


def atom_of(program, name):
    for atom, n in program.names.items():
        if n == name:
            return atom
    raise AssertionError(name)


class TestHeuristics:
    def test_pred_first_choices_on_fig1(self):
        inst = fig1_instance()
        program = encode_e1(inst)
        log = []
        answer = solve(program, heuristic=PupHeuristic("pred"),
                       decision_log=log)
        assert isinstance(answer, CoherentWitness)
        assert log[0] == atom_of(program, "unit2zone(1,z123)")
        assert log[1] == atom_of(program, "unit2sensor(1,s1)")

    def test_quickpup_prefers_fresh_units(self):
        inst = fig1_instance()
        program = encode_e1(inst)
        log = []
        solve(program, heuristic=PupHeuristic("quickpup"),
              decision_log=log)
        assert log[0] == atom_of(program, "unit2zone(1,z123)")
        assert log[1] == atom_of(program, "unit2sensor(2,s1)")

    def test_quickpup_star_prefers_used_units(self):
        inst = fig1_instance()
        program = encode_e1(inst)
        log = []
        solve(program, heuristic=PupHeuristic("quickpup_star"),
              decision_log=log)
        assert log[0] == atom_of(program, "unit2zone(1,z123)")
        assert log[1] == atom_of(program, "unit2sensor(1,s1)")

    @pytest.mark.parametrize("variant",
                             ["quickpup", "quickpup_star", "pred"])
    def test_fig1_solves_and_verifies(self, variant):
        inst = fig1_instance()
        program = encode_e1(inst)
        answer = solve(program, heuristic=PupHeuristic(variant))
        assert isinstance(answer, CoherentWitness)
        sol = extract_pup(answer.true_atoms, program, inst)
        assert verify_pup(inst, sol) == []

    @pytest.mark.parametrize("variant",
                             ["quickpup", "quickpup_star", "pred"])
    def test_coherence_matches_default_on_generated(self, variant):
        cases = [
            gen_pup("double", 2),
            gen_pup("doublev", 2, unit_count=3),
            gen_pup("triple", 2, ucap=2, iucap=2),
            gen_pup("grid", 2, width=2, unit_count=6),
            gen_pup("double", 2, unit_count=1),  # too tight, incoherent
        ]
        for inst in cases:
            program = encode_e1(inst)
            ref = solve(program)
            got = solve(program, heuristic=PupHeuristic(variant))
            assert type(got) is type(ref), inst
            if isinstance(got, CoherentWitness):
                sol = extract_pup(got.true_atoms, program, inst)
                assert verify_pup(inst, sol) == []

    def test_empty_instance_falls_back(self):
        b = ProgramBuilder()
        x = b.named("x")
        b.guess(x)
        heur = PupHeuristic()
        answer = solve(b.build(), heuristic=heur)
        assert isinstance(answer, CoherentWitness)

    def test_state_tracks_trail(self):
        inst = fig1_instance()
        program = encode_e1(inst)

        class Spy(PupHeuristic):
            checked = 0

            def _check(self):
                for (u, v), atom in self.assign_atoms.items():
                    if self.view.value_of(atom) is True:
                        assert atom in self.true_set
                    else:
                        assert atom not in self.true_set
                Spy.checked += 1

            def on_lit_true(self, literal):
                super().on_lit_true(literal)
                self._check()

            def on_unroll_lit(self, literal):
                super().on_unroll_lit(literal)
                self._check()

        answer = solve(program, heuristic=Spy("pred"))
        assert isinstance(answer, CoherentWitness)
        assert Spy.checked > 10


class TestRetreat:
    """White-box runs of the backtracking logic, events fed by hand."""

    def make(self, variant="quickpup"):
        inst = tiny(["z1", "z2"], [], [], 2, ucap=1)
        program = encode_e1(inst)
        heur = PupHeuristic(variant)
        heur.on_program(program)
        heur.on_search(None)
        return heur, program

    def test_refuted_unit_not_retried(self):
        heur, program = self.make()
        a11 = atom_of(program, "unit2zone(1,z1)")
        a21 = atom_of(program, "unit2zone(2,z1)")
        batch = heur.on_choice_required()
        assert batch == [Choose(a11)]
        heur.on_inco_choice(a11)
        batch = heur.on_choice_required()
        assert batch == [Choose(a21)]

    def test_retreat_unrolls_previous_placement(self):
        heur, program = self.make()
        a11 = atom_of(program, "unit2zone(1,z1)")
        a12 = atom_of(program, "unit2zone(1,z2)")
        a22 = atom_of(program, "unit2zone(2,z2)")
        assert heur.on_choice_required() == [Choose(a11)]
        heur.on_lit_true(a11)
        assert heur.on_choice_required() == [Choose(a22)]
        heur.on_inco_choice(a22)
        # unit 2 refuted for z2; unit 1 is filtered as false on trail
        heur.on_lit_true(-a12)
        batch = heur.on_choice_required()
        assert batch == [Unroll(a11)]

    def test_total_exhaustion_stops(self):
        heur, program = self.make()
        a11 = atom_of(program, "unit2zone(1,z1)")
        a21 = atom_of(program, "unit2zone(2,z1)")
        assert heur.on_choice_required() == [Choose(a11)]
        heur.on_inco_choice(a11)
        assert heur.on_choice_required() == [Choose(a21)]
        heur.on_inco_choice(a21)
        assert heur.on_choice_required() == [Unroll(0), AddConstraint([])]

    def test_fallback_once_everything_is_placed(self):
        heur, program = self.make()
        a11 = atom_of(program, "unit2zone(1,z1)")
        a22 = atom_of(program, "unit2zone(2,z2)")
        heur.on_choice_required()
        heur.on_lit_true(a11)
        heur.on_choice_required()
        heur.on_lit_true(a22)
        assert heur.on_choice_required() == [Fallback(1)]
