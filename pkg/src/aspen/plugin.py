"""Branching heuristics running in a separate process.

A plugin is any executable that speaks a line-delimited JSON protocol on
its standard streams.  Every message is a single UTF-8 JSON object
terminated by a newline, and traffic is strictly synchronous: the solver
writes one message and blocks until the plugin answers.

Solver to plugin:

    {"e":"atom","id":N,"name":S}    one per named atom, before search
    {"e":"parsing_done"}            handshake end; answer lists frozen ids
    {"e":"search"}                  search begins
    {"e":"lit_true","lits":[...]}   literals that became true, in order
    {"e":"unroll_lit","lits":[...]} literals unassigned, in order
    {"e":"conflict","lit":N}        0 when no decision survived
    {"e":"inco_choice","lit":N}
    {"e":"learn","lits":[...]}
    {"e":"restart"}
    {"e":"choice_required"}

Plugin to solver: every notification is answered with {"ack":true}.  The
reply to parsing_done is {"frozen":[ids]} (a bare list works too).  The
reply to choice_required is one of

    7                   a single choice
    [7, -9, 12]         a queue of choices, consumed across requests
    {"stop":true}       give up: empty constraint, search ends incoherent
    {"unroll":L}        unassign L, or 0 for a full restart
    {"add_constraint":[lits]}
    {"choose":[lits]}
    {"fallback":N} or {"fallback":{"n":N,"activity":{...},
                                   "amplify":{...},"sign":{...}}}

An object reply may combine keys; they apply in the order unroll,
add_constraint (or stop), choose, fallback.  Negative integers are
negative literals and 0 is reserved.  Sign table values may be +1/-1 or
"pos"/"neg".

Anything else - malformed JSON, a command outside choice_required, a
missing ack, silence past the timeout - is a protocol violation: the
session is closed and the solve aborts with a diagnostic.
"""

import json
import os
import queue
import subprocess
import threading

from .heuristics import (
    AddConstraint,
    Choose,
    Fallback,
    Heuristic,
    HeuristicProtocolError,
    Unroll,
)

DEFAULT_TIMEOUT = 10.0
GRACE_S = 2.0


class PluginProtocolError(HeuristicProtocolError):
    """The external heuristic broke the wire protocol."""


def _default_timeout():
    raw = os.environ.get("ASPEN_PLUGIN_TIMEOUT")
    if not raw:
        return DEFAULT_TIMEOUT
    try:
        value = float(raw)
    except ValueError:
        return DEFAULT_TIMEOUT
    return value if value > 0 else DEFAULT_TIMEOUT


def _dump(obj):
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


class PluginSession:
    """One child process plus the framing layer around its streams.

    The optional transcript list collects ("out", text) and ("in", text)
    pairs, letting a session be recorded and replayed bit-exactly.
    """

    def __init__(self, command, timeout=None, transcript=None):
        self.timeout = timeout if timeout is not None else _default_timeout()
        self.transcript = transcript
        self.state = "handshake"
        if isinstance(command, str):
            command = command.split()
        try:
            self.child = subprocess.Popen(
                list(command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE)
        except OSError as exc:
            raise PluginProtocolError(
                "could not start plugin %r: %s" % (command, exc))
        self._lines = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        stream = self.child.stdout
        while True:
            line = stream.readline()
            if not line:
                self._lines.put(None)
                return
            self._lines.put(line)

    def _fail(self, message):
        self.close()
        raise PluginProtocolError(message)

    def send(self, obj):
        text = _dump(obj)
        if self.transcript is not None:
            self.transcript.append(("out", text))
        try:
            self.child.stdin.write(text.encode() + b"\n")
            self.child.stdin.flush()
        except (BrokenPipeError, OSError, ValueError):
            self._fail("plugin exited while the solver was sending %s" % text)

    def recv(self):
        try:
            raw = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self._fail("plugin gave no response within %.6gs" % self.timeout)
        if raw is None:
            self._fail("plugin closed its output stream")
        text = raw.decode("utf-8", errors="replace").rstrip("\r\n")
        if self.transcript is not None:
            self.transcript.append(("in", text))
        try:
            return json.loads(text)
        except ValueError:
            self._fail("plugin sent malformed JSON: %r" % text)

    def request(self, obj):
        self.send(obj)
        return self.recv()

    def notify(self, obj):
        reply = self.request(obj)
        if reply != {"ack": True}:
            self._fail("plugin answered a notification with %r instead of "
                       'an {"ack":true}' % (reply,))

    def close(self):
        if self.state == "closed":
            return
        self.state = "closed"
        child = self.child
        try:
            child.stdin.close()
        except OSError:
            pass
        # the reader thread owns stdout until the child dies, so end the
        # child before touching that stream
        if child.poll() is None:
            child.terminate()
            try:
                child.wait(timeout=GRACE_S)
            except subprocess.TimeoutExpired:
                child.kill()
                child.wait()
        self._reader.join(timeout=1.0)
        if not self._reader.is_alive():
            try:
                child.stdout.close()
            except OSError:
                pass


def _as_literal(value, what):
    if isinstance(value, bool) or not isinstance(value, int):
        raise PluginProtocolError("plugin sent a non-integer %s: %r"
                                  % (what, value))
    return value


def _int_keyed(table, what):
    if not isinstance(table, dict):
        raise PluginProtocolError("plugin sent a non-object %s table" % what)
    out = {}
    for key, value in table.items():
        try:
            atom = int(key)
        except (TypeError, ValueError):
            raise PluginProtocolError(
                "plugin sent a non-numeric atom key %r in the %s table"
                % (key, what))
        out[atom] = value
    return out


def _parse_fallback(spec):
    if isinstance(spec, bool):
        raise PluginProtocolError("plugin sent a boolean fallback")
    if isinstance(spec, int):
        return Fallback(spec)
    if not isinstance(spec, dict):
        raise PluginProtocolError("plugin sent an unusable fallback: %r"
                                  % (spec,))
    count = spec.get("n", 0)
    if isinstance(count, bool) or not isinstance(count, int):
        raise PluginProtocolError("plugin sent a non-integer fallback count")
    sign = {}
    for atom, value in _int_keyed(spec.get("sign", {}), "sign").items():
        if value in ("pos", "neg"):
            value = 1 if value == "pos" else -1
        sign[atom] = value
    return Fallback(count,
                    activity=_int_keyed(spec.get("activity", {}), "activity"),
                    amplify=_int_keyed(spec.get("amplify", {}), "amplify"),
                    sign=sign)


def parse_choice_reply(reply):
    """Turn one choice_required reply into a command batch."""
    if isinstance(reply, bool):
        raise PluginProtocolError("plugin sent a boolean choice")
    if isinstance(reply, int):
        return [Choose(reply)]
    if isinstance(reply, list):
        if not reply:
            raise PluginProtocolError("plugin sent an empty choice list")
        return [Choose(_as_literal(l, "choice")) for l in reply]
    if not isinstance(reply, dict):
        raise PluginProtocolError("plugin sent an unusable choice reply: %r"
                                  % (reply,))
    known = {"stop", "unroll", "add_constraint", "choose", "fallback"}
    unknown = set(reply) - known
    if unknown or not reply:
        raise PluginProtocolError("plugin sent an unusable choice reply: %r"
                                  % (reply,))
    batch = []
    if "unroll" in reply:
        batch.append(Unroll(_as_literal(reply["unroll"], "unroll target")))
    if reply.get("stop"):
        batch.append(AddConstraint([]))
    elif "add_constraint" in reply:
        body = reply["add_constraint"]
        if not isinstance(body, list):
            raise PluginProtocolError("plugin sent a non-list constraint")
        batch.append(AddConstraint(
            [_as_literal(l, "constraint literal") for l in body]))
    if "choose" in reply:
        lits = reply["choose"]
        if not isinstance(lits, list):
            raise PluginProtocolError("plugin sent a non-list choose")
        batch.extend(Choose(_as_literal(l, "choice")) for l in lits)
    if "fallback" in reply:
        batch.append(_parse_fallback(reply["fallback"]))
    if not batch:
        raise PluginProtocolError("plugin sent an unusable choice reply: %r"
                                  % (reply,))
    return batch


class PluginHeuristic(Heuristic):
    """Adapter presenting an external plugin as an in-process heuristic.

    Consecutive literal notifications are coalesced into one message per
    direction change, so chatter stays proportional to search activity
    rather than to trail length.
    """

    def __init__(self, command, timeout=None, transcript=None):
        self.session = PluginSession(command, timeout=timeout,
                                     transcript=transcript)
        self._buffer_kind = None
        self._buffer = []

    def close(self):
        self.session.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _flush(self):
        if self._buffer:
            kind, lits = self._buffer_kind, self._buffer
            self._buffer_kind, self._buffer = None, []
            self.session.notify({"e": kind, "lits": lits})

    def _push(self, kind, literal):
        if self._buffer_kind != kind:
            self._flush()
            self._buffer_kind = kind
        self._buffer.append(literal)

    def _notify(self, obj):
        self._flush()
        self.session.notify(obj)

    def on_program(self, program):
        for atom in sorted(program.names):
            self._notify({"e": "atom", "id": atom,
                          "name": program.names[atom]})
        self._flush()
        reply = self.session.request({"e": "parsing_done"})
        if isinstance(reply, dict) and set(reply) == {"frozen"}:
            reply = reply["frozen"]
        if not isinstance(reply, list):
            self.session._fail("plugin answered parsing_done with %r"
                               % (reply,))
        frozen = tuple(_as_literal(a, "frozen atom") for a in reply)
        self.session.state = "searching"
        return frozen

    def on_search(self, view):
        self._notify({"e": "search"})

    def on_lit_true(self, literal):
        self._push("lit_true", literal)

    def on_unroll_lit(self, literal):
        self._push("unroll_lit", literal)

    def on_conflict(self, literal):
        self._notify({"e": "conflict", "lit": literal or 0})

    def on_inco_choice(self, literal):
        self._notify({"e": "inco_choice", "lit": literal})

    def on_learn(self, body):
        self._flush()
        self.session.notify({"e": "learn", "lits": list(body)})

    def on_restart(self):
        self._notify({"e": "restart"})

    def on_choice_required(self):
        self._flush()
        return parse_choice_reply(self.session.request(
            {"e": "choice_required"}))
