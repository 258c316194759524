"""Breadth-first unit placement spoken over the solver's wire protocol.

A prototype of the bundled quickpup policy as an external process: it
reconstructs the zones, sensors, units, and placement atoms from the
atom registration messages, orders the vertices breadth-first from the
highest-degree zone, and proposes unused units before used ones for the
first unplaced vertex.  Refuted units are remembered per stack
position; a dry position retreats one placement, and running dry at the
root restarts and stops the search.  Programs without placement atoms,
and any internal desync, are answered with a fallback command.
"""

import json
import sys


def parse_name(name):
    if "(" not in name or not name.endswith(")"):
        return name, ()
    func, _, rest = name.partition("(")
    return func, tuple(rest[:-1].split(","))


class Placer:
    def __init__(self):
        self.zones = []
        self.sensors = []
        self.units = []
        self.edges = []  # (sensor, zone)
        self.assign = {}  # (unit, vertex) -> atom
        self.info = {}  # atom -> (unit, vertex)
        self.order = []
        self.reset()

    def reset(self):
        self.true_set = set()
        self.false_set = set()
        self.stack = []
        self.root_tried = set()
        self.blame = False

    def add_atom(self, atom, name):
        func, args = parse_name(name)
        if func == "zone":
            self.zones.append(args[0])
        elif func == "sensor":
            self.sensors.append(args[0])
        elif func == "unit":
            self.units.append(int(args[0]))
        elif func == "zone2sensor":
            self.edges.append((args[1], args[0]))
        elif func == "unit2zone":
            info = (int(args[0]), ("z", args[1]))
            self.info[atom] = info
            self.assign[info] = atom
        elif func == "unit2sensor":
            info = (int(args[0]), ("s", args[1]))
            self.info[atom] = info
            self.assign[info] = atom

    def finish_parse(self):
        self.units.sort()
        if self.zones and self.assign:
            self.order = self.bfs_order()
        else:
            self.order = ([("z", z) for z in self.zones]
                          + [("s", s) for s in self.sensors])

    def bfs_order(self):
        zone_sensors = {z: [] for z in self.zones}
        sensor_zones = {s: [] for s in self.sensors}
        for s, z in self.edges:
            if z in zone_sensors and s in sensor_zones:
                zone_sensors[z].append(s)
                sensor_zones[s].append(z)
        zone_pos = {z: i for i, z in enumerate(self.zones)}
        sensor_pos = {s: i for i, s in enumerate(self.sensors)}
        for z in zone_sensors:
            zone_sensors[z].sort(key=sensor_pos.__getitem__)
        for s in sensor_zones:
            sensor_zones[s].sort(key=zone_pos.__getitem__)
        degree = {z: 0 for z in self.zones}
        for _, z in self.edges:
            if z in degree:
                degree[z] += 1
        start = max(self.zones,
                    key=lambda z: (degree[z], -zone_pos[z]))
        order = [("z", start)]
        seen = {("z", start)}
        queue = [("z", start)]
        while queue:
            kind, vid = queue.pop(0)
            if kind == "z":
                nxt = [("s", s) for s in zone_sensors[vid]]
            else:
                nxt = [("z", z) for z in sensor_zones[vid]]
            for v in nxt:
                if v not in seen:
                    seen.add(v)
                    order.append(v)
                    queue.append(v)
        for z in self.zones:
            if ("z", z) not in seen:
                order.append(("z", z))
        for s in self.sensors:
            if ("s", s) not in seen:
                order.append(("s", s))
        return order

    def assigned(self, lit):
        atom = abs(lit)
        if atom in self.info:
            (self.true_set if lit > 0 else self.false_set).add(atom)

    def unassigned(self, lit):
        atom = abs(lit)
        self.true_set.discard(atom)
        self.false_set.discard(atom)

    def tried_here(self):
        return self.stack[-1]["children"] if self.stack else self.root_tried

    def sync(self):
        popped = None
        while self.stack and self.stack[-1]["atom"] not in self.true_set:
            popped = self.stack.pop()
        if popped is not None and self.blame:
            self.tried_here().add(popped["unit"])
        self.blame = False

    def unit_of(self, vertex):
        for u in self.units:
            atom = self.assign.get((u, vertex))
            if atom is not None and atom in self.true_set:
                return u
        return None

    def ranked_units(self):
        used = set()
        for (u, _vertex), atom in self.assign.items():
            if atom in self.true_set:
                used.add(u)
        fresh = [u for u in self.units if u not in used]
        return fresh + [u for u in self.units if u in used]

    def choose(self):
        if not self.assign:
            return {"fallback": 0}
        self.sync()
        vertex = None
        for v in self.order:
            if self.unit_of(v) is None:
                vertex = v
                break
        if vertex is None:
            return {"fallback": 1}
        tried = self.tried_here()
        for u in self.ranked_units():
            if u in tried:
                continue
            atom = self.assign.get((u, vertex))
            if atom is None or atom in self.false_set:
                continue
            self.stack.append({"vertex": vertex, "unit": u,
                               "atom": atom, "children": set()})
            return atom
        # dry position: retreat one placement and retry there
        while self.stack:
            top = self.stack.pop()
            self.tried_here().add(top["unit"])
            if any(u not in self.tried_here() for u in self.units):
                return {"unroll": top["atom"]}
        return {"unroll": 0, "stop": True}


def main():
    placer = Placer()

    def reply(obj):
        print(json.dumps(obj, separators=(",", ":")), flush=True)

    for line in sys.stdin:
        msg = json.loads(line)
        kind = msg.get("e")
        if kind == "atom":
            placer.add_atom(msg["id"], msg["name"])
            reply({"ack": True})
        elif kind == "parsing_done":
            placer.finish_parse()
            reply({"frozen": []})
        elif kind == "search":
            placer.reset()
            reply({"ack": True})
        elif kind == "lit_true":
            for lit in msg.get("lits", ()):
                placer.assigned(lit)
            reply({"ack": True})
        elif kind == "unroll_lit":
            for lit in msg.get("lits", ()):
                placer.unassigned(lit)
            reply({"ack": True})
        elif kind in ("conflict", "inco_choice"):
            placer.blame = True
            reply({"ack": True})
        elif kind == "choice_required":
            try:
                reply(placer.choose())
            except Exception:
                reply({"fallback": 0})  # lost the thread: hand over for good
        else:
            reply({"ack": True})


if __name__ == "__main__":
    main()
