"""External-process heuristics: wire protocol, failure modes, replays."""

import json
import os
import sys
import time

import pytest

from aspen.engine import CoherentWitness, Incoherent, solve
from aspen.ground import encode_pigeonhole, parse_program
from aspen.heuristics import (
    AddConstraint,
    Choose,
    DiagonalPigeonhole,
    Fallback,
    Unroll,
)
from aspen.plugin import (
    PluginHeuristic,
    PluginProtocolError,
    PluginSession,
    parse_choice_reply,
)

HERE = os.path.dirname(os.path.abspath(__file__))
CHILDREN = os.path.join(HERE, "plugin_children")
DATA = os.path.join(HERE, "data")


def child(name, *args):
    return [sys.executable, os.path.join(CHILDREN, name)] + list(args)


def run_with(name, program, seed=0, timeout=None, transcript=None,
             decision_log=None):
    heur = PluginHeuristic(child(name), timeout=timeout,
                           transcript=transcript)
    try:
        return solve(program, heuristic=heur, seed=seed,
                     decision_log=decision_log), heur
    finally:
        heur.close()


class TestReplyParsing:
    def test_single_literal(self):
        assert parse_choice_reply(7) == [Choose(7)]
        assert parse_choice_reply(-3) == [Choose(-3)]

    def test_literal_list(self):
        assert parse_choice_reply([5, -9, 12]) == \
            [Choose(5), Choose(-9), Choose(12)]

    def test_stop(self):
        assert parse_choice_reply({"stop": True}) == [AddConstraint([])]

    def test_object_forms(self):
        assert parse_choice_reply({"unroll": 0}) == [Unroll(0)]
        assert parse_choice_reply({"add_constraint": [1, -2]}) == \
            [AddConstraint([1, -2])]
        assert parse_choice_reply({"choose": [4]}) == [Choose(4)]
        assert parse_choice_reply({"fallback": 2}) == [Fallback(2)]

    def test_combined_object_order(self):
        batch = parse_choice_reply(
            {"fallback": 0, "choose": [3], "unroll": 1})
        assert batch == [Unroll(1), Choose(3), Fallback(0)]

    def test_fallback_tables(self):
        batch = parse_choice_reply(
            {"fallback": {"n": -1, "activity": {"4": 2.5},
                          "sign": {"4": "pos", "5": -1}}})
        fb = batch[0]
        assert fb.count == -1
        assert fb.activity == {4: 2.5}
        assert fb.sign == {4: 1, 5: -1}

    def test_rejects_garbage(self):
        for bad in (True, None, 1.5, {}, [], {"chooze": [1]},
                    {"choose": 4}, {"fallback": True}, [1, "x"],
                    {"unroll": None}):
            with pytest.raises(PluginProtocolError):
                parse_choice_reply(bad)


class TestFailureModes:
    def test_spawn_failure(self):
        with pytest.raises(PluginProtocolError, match="could not start"):
            PluginSession(["/nonexistent/plugin-binary"])

    def test_malformed_reply(self):
        with pytest.raises(PluginProtocolError, match="malformed"):
            run_with("malformed_child.py", encode_pigeonhole(2, 2))

    def test_session_closed_after_violation(self):
        heur = PluginHeuristic(child("malformed_child.py"))
        with pytest.raises(PluginProtocolError):
            solve(encode_pigeonhole(2, 2), heuristic=heur)
        assert heur.session.state == "closed"
        assert heur.session.child.poll() is not None

    def test_timeout(self):
        start = time.monotonic()
        with pytest.raises(PluginProtocolError, match="no response within"):
            run_with("hang_child.py", encode_pigeonhole(2, 2), timeout=0.5)
        assert time.monotonic() - start < 5

    def test_command_as_ack_is_violation(self):
        with pytest.raises(PluginProtocolError, match="ack"):
            run_with("badack_child.py", encode_pigeonhole(2, 2))

    def test_close_idempotent(self):
        heur = PluginHeuristic(child("fallback_child.py"))
        heur.close()
        heur.close()
        assert heur.session.child.poll() is not None

    def test_close_forces_kill_on_stubborn_child(self):
        heur = PluginHeuristic(child("hang_child.py", "--stubborn"))
        time.sleep(0.3)  # give it a chance to install its handler
        start = time.monotonic()
        heur.close()
        elapsed = time.monotonic() - start
        assert heur.session.child.poll() is not None
        assert 1.5 < elapsed < 8


class TestBehavior:
    def test_fallback_child_matches_default(self):
        program = encode_pigeonhole(3, 3)
        for seed in (0, 1):
            ours = []
            theirs = []
            ans, _ = run_with("fallback_child.py", program, seed=seed,
                              decision_log=theirs)
            ref = solve(program, seed=seed, decision_log=ours)
            assert ours == theirs
            assert ans.true_atoms == ref.true_atoms

    def test_stop_reply_ends_incoherent(self):
        ans, _ = run_with("diagonal_child.py", encode_pigeonhole(3, 2))
        assert isinstance(ans, Incoherent)
        assert ans.stats.conflicts == 0
        assert ans.stats.decisions == 0

    def test_matches_in_process_diagonal_everywhere(self):
        for n in range(1, 5):
            for m in range(1, 5):
                program = encode_pigeonhole(n, m)
                wire_log = []
                local_log = []
                ans, _ = run_with("diagonal_child.py", program,
                                  decision_log=wire_log)
                ref = solve(program, heuristic=DiagonalPigeonhole(),
                            decision_log=local_log)
                assert type(ans) is type(ref), (n, m)
                assert wire_log == local_log, (n, m)
                assert ans.stats.decisions == ref.stats.decisions
                assert ans.stats.conflicts == ref.stats.conflicts
                if isinstance(ans, CoherentWitness):
                    assert ans.true_atoms == ref.true_atoms

    def test_mixed_commands_over_wire(self):
        program = parse_program(open(
            os.path.join(DATA, "programs", "pairs3.gpf")).read())
        log = []
        ans, _ = run_with("mixed_child.py", program, decision_log=log)
        assert isinstance(ans, CoherentWitness)
        assert log == [1, 2, -1, 2]
        assert ans.true_atoms == {2, 3, 4}


class TestTranscripts:
    def load(self, label):
        path = os.path.join(DATA, "transcripts", label + ".jsonl")
        with open(path, encoding="utf-8") as handle:
            lines = [json.loads(l) for l in handle if l.strip()]
        return path, lines[0], [(r["d"], r["b"]) for r in lines[1:]]

    def replay(self, label):
        path, header, wire = self.load(label)
        program = parse_program(open(
            os.path.join(DATA, "programs", header["program"])).read())
        recorded = []
        log = []
        heur = PluginHeuristic(child("player_child.py", path),
                               transcript=recorded)
        try:
            answer = solve(program, heuristic=heur, seed=header["seed"],
                           decision_log=log)
        finally:
            heur.close()
        return header, wire, recorded, answer, log

    @pytest.mark.parametrize("label", [
        "diagonal_2_2", "diagonal_4_4", "stop_3_2",
        "fallback_3_3", "mixed_pairs3"])
    def test_replay_is_bit_exact(self, label):
        header, wire, recorded, answer, log = self.replay(label)
        assert recorded == wire
        assert type(answer).__name__ == header["answer"]
        assert log == header["decisions"]
        stats = answer.stats.as_dict()
        stats.pop("wall_ms")
        assert stats == header["stats"]
        if header["true_atoms"] is not None:
            assert sorted(answer.true_atoms) == header["true_atoms"]

    def test_live_session_matches_recording(self):
        # a fresh child run must still produce the recorded traffic
        path, header, wire = self.load("diagonal_2_2")
        program = parse_program(open(
            os.path.join(DATA, "programs", header["program"])).read())
        recorded = []
        ans, _ = run_with(header["child"], program, seed=header["seed"],
                          transcript=recorded)
        assert recorded == wire
        assert sorted(ans.true_atoms) == header["true_atoms"]
