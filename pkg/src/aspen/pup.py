"""Partner units: instances, encoding, verification, heuristics, generators.

An instance is a bipartite graph between sensors and zones plus three
numbers: how many units exist, how many zones (and sensors) fit on one
unit, and how many partner units each unit may have.  A solution places
every zone and every sensor on a unit so that each sensor can reach the
zones it belongs to on the same unit or on a directly partnered one.

Instance files use a small line format:

    pup <UCAP> <IUCAP> <unitCount>
    z <zoneId>
    s <sensorId>
    e <sensorId> <zoneId>

Declaration order is meaningful: it breaks ties in the heuristic vertex
orders, so serialization preserves it.
"""

from dataclasses import dataclass, field
from itertools import combinations

from .ground import (
    ProgramBuilder,
    format_symbol,
    parse_symbol,
)
from .heuristics import AddConstraint, Choose, Fallback, Heuristic, Unroll


class PupError(ValueError):
    pass


@dataclass(frozen=True)
class PupInstance:
    sensors: tuple
    zones: tuple
    edges: tuple  # (sensor, zone) pairs
    unit_count: int
    ucap: int
    iucap: int

    def __post_init__(self):
        if self.unit_count < 1 or self.ucap < 1 or self.iucap < 1:
            raise PupError("capacities and unit count must be positive")
        if len(set(self.sensors)) != len(self.sensors):
            raise PupError("duplicate sensor")
        if len(set(self.zones)) != len(self.zones):
            raise PupError("duplicate zone")
        known_s, known_z = set(self.sensors), set(self.zones)
        for s, z in self.edges:
            if s not in known_s:
                raise PupError("edge references unknown sensor %r" % s)
            if z not in known_z:
                raise PupError("edge references unknown zone %r" % z)

    @property
    def units(self):
        return tuple(range(1, self.unit_count + 1))


@dataclass
class PupSolution:
    zone_unit: dict
    sensor_unit: dict
    partners: set = field(default_factory=set)

    def __post_init__(self):
        self.partners = {(a, b) for a, b in self.partners}
        self.partners |= {(b, a) for a, b in self.partners}
        self.partners -= {(a, a) for a, _ in self.partners}


def parse_pup(text):
    header = None
    sensors, zones, edges = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "pup":
                header = tuple(int(p) for p in parts[1:4])
                if len(parts) != 4:
                    raise PupError("bad header")
            elif kind == "z" and len(parts) == 2:
                zones.append(parts[1])
            elif kind == "s" and len(parts) == 2:
                sensors.append(parts[1])
            elif kind == "e" and len(parts) == 3:
                edges.append((parts[1], parts[2]))
            else:
                raise PupError("unrecognized line")
        except (ValueError, PupError) as exc:
            raise PupError("line %d: %s: %r" % (lineno, exc, raw))
    if header is None:
        raise PupError("missing pup header line")
    ucap, iucap, unit_count = header
    return PupInstance(tuple(sensors), tuple(zones), tuple(edges),
                       unit_count, ucap, iucap)


def serialize_pup(instance):
    lines = ["pup %d %d %d" % (instance.ucap, instance.iucap,
                               instance.unit_count)]
    lines.extend("z %s" % z for z in instance.zones)
    lines.extend("s %s" % s for s in instance.sensors)
    lines.extend("e %s %s" % e for e in instance.edges)
    return "\n".join(lines) + "\n"


def encode_e1(instance):
    """Direct encoding: guessed placements, coverage, capacity counters,
    and partner links derived from cross-unit sensor/zone contacts."""
    b = ProgramBuilder()
    units = instance.units
    for z in instance.zones:
        b.fact(b.named(format_symbol("zone", (z,))))
    for s in instance.sensors:
        b.fact(b.named(format_symbol("sensor", (s,))))
    for s, z in instance.edges:
        b.fact(b.named(format_symbol("zone2sensor", (z, s,))))
    for u in units:
        b.fact(b.named(format_symbol("unit", (u,))))
    b.fact(b.named(format_symbol("ucap", (instance.ucap,))))
    b.fact(b.named(format_symbol("iucap", (instance.iucap,))))

    u2z = {}
    u2s = {}
    for u in units:
        for z in instance.zones:
            a = b.named(format_symbol("unit2zone", (u, z,)))
            b.guess(a)
            u2z[u, z] = a
        for s in instance.sensors:
            a = b.named(format_symbol("unit2sensor", (u, s,)))
            b.guess(a)
            u2s[u, s] = a

    # every zone and sensor placed on exactly one unit
    for z in instance.zones:
        cov = b.named(format_symbol("zoneAssigned", (z,)))
        for u in units:
            b.rule(cov, pos=[u2z[u, z]])
        b.constraint(neg=[cov])
        for u, v in combinations(units, 2):
            b.constraint(pos=[u2z[u, z], u2z[v, z]])
    for s in instance.sensors:
        cov = b.named(format_symbol("sensorAssigned", (s,)))
        for u in units:
            b.rule(cov, pos=[u2s[u, s]])
        b.constraint(neg=[cov])
        for u, v in combinations(units, 2):
            b.constraint(pos=[u2s[u, s], u2s[v, s]])

    # per-unit room for zones and for sensors
    for u in units:
        b.at_most([u2z[u, z] for z in instance.zones], instance.ucap)
        b.at_most([u2s[u, s] for s in instance.sensors], instance.ucap)

    # a sensor on one unit reaching a zone on another makes them partners
    partner = {}
    for u in units:
        for v in units:
            if u != v:
                partner[u, v] = b.named(format_symbol("partner", (u, v,)))
    for s, z in instance.edges:
        for u in units:
            for v in units:
                if u != v:
                    b.rule(partner[u, v],
                           pos=[u2s[u, s], u2z[v, z]])
                    b.constraint(pos=[u2s[u, s], u2z[v, z]],
                                 neg=[partner[u, v]])
    for u in units:
        for v in units:
            if u != v:
                b.rule(partner[u, v], pos=[partner[v, u]])
    for u in units:
        b.at_most([partner[u, v] for v in units if v != u],
                  instance.iucap)
    return b.build()


def verify_pup(instance, solution):
    """Check a solution against the instance; returns a violation list."""
    violations = []
    units = set(instance.units)
    for z in instance.zones:
        if solution.zone_unit.get(z) not in units:
            violations.append("zone %s is not placed on a unit" % z)
    for s in instance.sensors:
        if solution.sensor_unit.get(s) not in units:
            violations.append("sensor %s is not placed on a unit" % s)
    if violations:
        return violations
    zone_load = {u: 0 for u in units}
    sensor_load = {u: 0 for u in units}
    for z, u in solution.zone_unit.items():
        zone_load[u] += 1
    for s, u in solution.sensor_unit.items():
        sensor_load[u] += 1
    for u in sorted(units):
        if zone_load[u] > instance.ucap:
            violations.append("unit %d holds %d zones, over the cap of %d"
                              % (u, zone_load[u], instance.ucap))
        if sensor_load[u] > instance.ucap:
            violations.append("unit %d holds %d sensors, over the cap of %d"
                              % (u, sensor_load[u], instance.ucap))
    degree = {u: set() for u in units}
    for a, bb in solution.partners:
        degree[a].add(bb)
    for u in sorted(units):
        if len(degree[u]) > instance.iucap:
            violations.append("unit %d has %d partners, over the cap of %d"
                              % (u, len(degree[u]), instance.iucap))
    for s, z in instance.edges:
        su, zu = solution.sensor_unit[s], solution.zone_unit[z]
        if su != zu and (su, zu) not in solution.partners:
            violations.append(
                "sensor %s on unit %d cannot reach zone %s on unit %d"
                % (s, su, z, zu))
    return violations


def extract_pup(true_atoms, program, instance):
    """Read a solution out of an answer set of encode_e1's program."""
    zone_unit = {}
    sensor_unit = {}
    partners = set()
    for atom in true_atoms:
        name = program.names.get(atom)
        if name is None:
            continue
        func, args = parse_symbol(name)
        if func == "unit2zone":
            zone_unit[args[1]] = int(args[0])
        elif func == "unit2sensor":
            sensor_unit[args[1]] = int(args[0])
        elif func == "partner":
            partners.add((int(args[0]), int(args[1])))
    for z in instance.zones:
        if z not in zone_unit:
            raise PupError("witness places no unit on zone %s" % z)
    for s in instance.sensors:
        if s not in sensor_unit:
            raise PupError("witness places no unit on sensor %s" % s)
    return PupSolution(zone_unit, sensor_unit, partners)


def enumerate_pup_solutions(instance, limit=None):
    """Exhaustively enumerate verifier-accepted solutions (tiny instances).

    Partners are the links forced by the placement, so enumeration only
    ranges over placements."""
    vertices = [("z", z) for z in instance.zones]
    vertices += [("s", s) for s in instance.sensors]
    found = []

    def forced_partners(zone_unit, sensor_unit):
        partners = set()
        for s, z in instance.edges:
            su, zu = sensor_unit[s], zone_unit[z]
            if su != zu:
                partners.add((su, zu))
                partners.add((zu, su))
        return partners

    def rec(idx, zone_unit, sensor_unit):
        if limit is not None and len(found) >= limit:
            return
        if idx == len(vertices):
            sol = PupSolution(dict(zone_unit), dict(sensor_unit),
                              forced_partners(zone_unit, sensor_unit))
            if not verify_pup(instance, sol):
                found.append(sol)
            return
        kind, vid = vertices[idx]
        target = zone_unit if kind == "z" else sensor_unit
        for u in instance.units:
            target[vid] = u
            rec(idx + 1, zone_unit, sensor_unit)
            del target[vid]

    rec(0, {}, {})
    return found


def bfs_order(instance, start_zone):
    """Vertices in breadth-first order from a zone, declaration-order ties,
    unreachable vertices appended afterwards in declaration order."""
    if start_zone not in instance.zones:
        raise PupError("unknown start zone %r" % start_zone)
    zone_sensors = {z: [] for z in instance.zones}
    sensor_zones = {s: [] for s in instance.sensors}
    for s, z in instance.edges:
        zone_sensors[z].append(s)
        sensor_zones[s].append(z)
    # neighbor listing by declaration order of the opposite side
    for z in zone_sensors:
        zone_sensors[z].sort(key=instance.sensors.index)
    for s in sensor_zones:
        sensor_zones[s].sort(key=instance.zones.index)
    order = [("z", start_zone)]
    seen = {("z", start_zone)}
    queue = [("z", start_zone)]
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
    for z in instance.zones:
        if ("z", z) not in seen:
            order.append(("z", z))
    for s in instance.sensors:
        if ("s", s) not in seen:
            order.append(("s", s))
    return order


def default_start_zone(instance):
    """Highest-degree zone, declaration order breaking ties."""
    if not instance.zones:
        return None
    degree = {z: 0 for z in instance.zones}
    for _, z in instance.edges:
        degree[z] += 1
    return max(instance.zones, key=lambda z: (degree[z],
                                              -instance.zones.index(z)))


class PupHeuristic(Heuristic):
    """Order-driven unit placement: QuickPup and its two variations.

    Walks a breadth-first vertex order and proposes a unit for the first
    unplaced vertex.  Refuted units are remembered per search-stack
    position; when a position runs dry the previous placement is
    unrolled and retried, and running dry at the very first vertex stops
    the search.
    """

    def __init__(self, variant="quickpup"):
        if variant not in ("quickpup", "quickpup_star", "pred"):
            raise PupError("unknown variant %r" % variant)
        self.variant = variant

    def on_program(self, program):
        self.atom_info = {}
        self.assign_atoms = {}
        zones, sensors, units = [], [], []
        edges = []
        for atom in sorted(program.names):
            func, args = parse_symbol(program.names[atom])
            if func == "zone":
                zones.append(args[0])
            elif func == "sensor":
                sensors.append(args[0])
            elif func == "unit":
                units.append(int(args[0]))
            elif func == "zone2sensor":
                edges.append((args[1], args[0]))
            elif func == "unit2zone":
                info = (int(args[0]), ("z", args[1]))
                self.atom_info[atom] = info
                self.assign_atoms[info] = atom
            elif func == "unit2sensor":
                info = (int(args[0]), ("s", args[1]))
                self.atom_info[atom] = info
                self.assign_atoms[info] = atom
        self.units = sorted(units)
        self.zone_sensors = {z: [] for z in zones}
        self.sensor_zones = {s: [] for s in sensors}
        for s, z in edges:
            if z in self.zone_sensors and s in self.sensor_zones:
                self.zone_sensors[z].append(s)
                self.sensor_zones[s].append(z)
        vertices = [("z", z) for z in zones] + [("s", s) for s in sensors]
        if zones and self.assign_atoms:
            instance = PupInstance(tuple(sensors), tuple(zones),
                                   tuple(edges),
                                   max(self.units) if self.units else 1,
                                   1, 1)
            self.order = bfs_order(instance, default_start_zone(instance))
        else:
            self.order = vertices
        return ()

    def on_search(self, view):
        self.view = view
        self.true_set = set()
        self.false_set = set()
        self.stack = []
        self.root_tried = set()
        self.blame_pending = False

    def on_lit_true(self, literal):
        atom = abs(literal)
        if atom in self.atom_info:
            (self.true_set if literal > 0 else self.false_set).add(atom)

    def on_unroll_lit(self, literal):
        atom = abs(literal)
        self.true_set.discard(atom)
        self.false_set.discard(atom)

    def on_conflict(self, literal):
        self.blame_pending = True

    def on_inco_choice(self, literal):
        self.blame_pending = True

    def _tried_here(self):
        return self.stack[-1]["children"] if self.stack else self.root_tried

    def _sync(self):
        popped_last = None
        while self.stack and self.stack[-1]["atom"] not in self.true_set:
            popped_last = self.stack.pop()
        if popped_last is not None and self.blame_pending:
            self._tried_here().add(popped_last["unit"])
        self.blame_pending = False

    def _unit_of(self, vertex):
        for u in self.units:
            atom = self.assign_atoms.get((u, vertex))
            if atom is not None and atom in self.true_set:
                return u
        return None

    def _neighbors_two_edges(self, vertex):
        kind, vid = vertex
        near = set()
        if kind == "z":
            for s in self.zone_sensors.get(vid, ()):
                near.add(("s", s))
                for z in self.sensor_zones[s]:
                    near.add(("z", z))
        else:
            for z in self.sensor_zones.get(vid, ()):
                near.add(("z", z))
                for s in self.zone_sensors[z]:
                    near.add(("s", s))
        near.discard(vertex)
        return near

    def _ranked_units(self, vertex):
        used = set()
        for (u, _v), atom in self.assign_atoms.items():
            if atom in self.true_set:
                used.add(u)
        fresh = [u for u in self.units if u not in used]
        old = [u for u in self.units if u in used]
        if self.variant == "quickpup_star":
            base = old + fresh
        else:
            base = fresh + old
        if self.variant != "pred":
            return base
        near_units = set()
        for v in self._neighbors_two_edges(vertex):
            u = self._unit_of(v)
            if u is not None:
                near_units.add(u)
        preferred = [u for u in self.units if u in near_units]
        return preferred + [u for u in base if u not in near_units]

    def on_choice_required(self):
        if not self.assign_atoms:
            return [Fallback(0)]
        self._sync()
        vertex = next((v for v in self.order if self._unit_of(v) is None),
                      None)
        if vertex is None:
            return [Fallback(1)]
        tried = self._tried_here()
        for u in self._ranked_units(vertex):
            if u in tried:
                continue
            atom = self.assign_atoms.get((u, vertex))
            if atom is None or atom in self.false_set:
                continue
            self.stack.append({"vertex": vertex, "unit": u, "atom": atom,
                               "children": set()})
            return [Choose(atom)]
        # this position is dry: retreat one placement and try again there
        while self.stack:
            top = self.stack.pop()
            self._tried_here().add(top["unit"])
            remaining = [u for u in self.units
                         if u not in self._tried_here()]
            if remaining:
                return [Unroll(top["atom"])]
        return [Unroll(0), AddConstraint([])]


def gen_pup(topology, size, ucap=2, iucap=2, unit_count=None, width=None):
    """Deterministic instance families shaped like the named topologies."""
    zones, sensors, edges = [], [], []
    if topology == "double":
        zones = ["z%d" % i for i in range(1, 2 * size + 1)]
        sensors = ["s%d" % i for i in range(1, 2 * size)]
        for i, s in enumerate(sensors, start=1):
            edges.append((s, "z%d" % i))
            edges.append((s, "z%d" % (i + 1)))
    elif topology == "doublev":
        inst = gen_pup("double", size, ucap, iucap, unit_count=1)
        zones, sensors = list(inst.zones), list(inst.sensors)
        edges = list(inst.edges)
        for tag, s in (("a", sensors[0]), ("b", sensors[-1])):
            z = "zv%s" % tag
            zones.append(z)
            edges.append((s, z))
    elif topology == "triple":
        zones = ["z%d" % i for i in range(1, size + 3)]
        sensors = ["s%d" % i for i in range(1, size + 1)]
        for i, s in enumerate(sensors, start=1):
            for off in range(3):
                edges.append((s, "z%d" % (i + off)))
    elif topology == "grid":
        w = width if width is not None else size
        h = size
        for r in range(h):
            for c in range(w):
                zones.append("z%d_%d" % (r, c))
        for r in range(h + 1):
            for c in range(w):
                s = "sh%d_%d" % (r, c)
                sensors.append(s)
                if r > 0:
                    edges.append((s, "z%d_%d" % (r - 1, c)))
                if r < h:
                    edges.append((s, "z%d_%d" % (r, c)))
        for r in range(h):
            for c in range(w + 1):
                s = "sv%d_%d" % (r, c)
                sensors.append(s)
                if c > 0:
                    edges.append((s, "z%d_%d" % (r, c - 1)))
                if c < w:
                    edges.append((s, "z%d_%d" % (r, c)))
    else:
        raise PupError("unknown topology %r" % topology)
    if unit_count is None:
        unit_count = max(1, -(-max(len(zones), len(sensors)) // ucap))
    return PupInstance(tuple(sensors), tuple(zones), tuple(edges),
                       unit_count, ucap, iucap)


FIG1_TEXT = """\
pup 2 2 3
z z1
z z123
z z24
z z35
z z456
z z6
s s1
s s2
s s3
s s4
s s5
s s6
e s1 z1
e s1 z123
e s2 z123
e s3 z123
e s2 z24
e s4 z24
e s3 z35
e s5 z35
e s4 z456
e s5 z456
e s6 z456
e s6 z6
"""


def fig1_instance():
    """The six-zone, six-sensor instance used throughout the tests."""
    return parse_pup(FIG1_TEXT)


FIG1_SOLUTION = PupSolution(
    zone_unit={"z1": 1, "z35": 1, "z123": 2, "z456": 2, "z6": 3, "z24": 3},
    sensor_unit={"s1": 1, "s3": 1, "s4": 2, "s5": 2, "s6": 3, "s2": 3},
    partners={(1, 2), (2, 3)},
)
