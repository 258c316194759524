"""Combined configuration: instances, encoding, verifier, heuristics, generator.

The problem couples five subtasks on one directed acyclic graph: color
every vertex with exactly one of C colors, pack the vertices of each
color into at most B bins of capacity K, keep two marked paths
color-disjoint, assign every border element to one of its areas so that
the elements assigned to an area share a color and no area holds more
than M of them, and keep every color class connected in the underlying
undirected graph.

Instance files use a small line format:

    ccp <M> <C> <B> <K>
    v <id> <type> <size>
    e <from> <to>
    p1 <from> <to>
    p2 <from> <to>
    area <idx> <ids...>
    border <idx> <ids...>

`p1`/`p2` lines mark declared edges as members of the two paths, and a
`border` line picks the assignable elements of the matching `area` line.
Declaration order is meaningful: it drives heuristic tie-breaking, so
serialization preserves it.
"""

import time
from dataclasses import dataclass, field
from itertools import combinations

from .ground import (
    OracleLimitError,
    ProgramBuilder,
    format_symbol,
    parse_symbol,
)
from .heuristics import Choose, Fallback, Heuristic, Unroll


class CcpError(ValueError):
    pass


@dataclass(frozen=True)
class CcpInstance:
    vertices: tuple          # ids in declaration order
    vtypes: tuple            # parallel to vertices
    sizes: tuple             # parallel to vertices
    edges: tuple             # directed (from, to) pairs, acyclic
    path1: tuple             # edge subset
    path2: tuple             # edge subset, disjoint from path1
    areas: tuple             # tuple of vertex tuples
    borders: tuple           # parallel to areas: assignable elements
    max_border: int          # M
    colors: int              # C
    bins: int                # B
    capacity: int            # K

    def __post_init__(self):
        if self.colors < 1 or self.bins < 1 or self.capacity < 1:
            raise CcpError("colors, bins and capacity must be positive")
        if self.max_border < 0:
            raise CcpError("negative border cap")
        if not (len(self.vertices) == len(self.vtypes) == len(self.sizes)):
            raise CcpError("vertex, type and size lists disagree")
        if len(set(self.vertices)) != len(self.vertices):
            raise CcpError("duplicate vertex")
        for v, s in zip(self.vertices, self.sizes):
            if s < 1:
                raise CcpError("vertex %s has a non-positive size" % v)
            if s > self.capacity:
                raise CcpError("vertex %s is larger than one bin" % v)
        known = set(self.vertices)
        for u, v in self.edges:
            if u not in known or v not in known:
                raise CcpError("edge (%s, %s) references an unknown vertex"
                               % (u, v))
        if len(set(self.edges)) != len(self.edges):
            raise CcpError("duplicate edge")
        self._check_acyclic()
        edge_set = set(self.edges)
        for tag, path in (("p1", self.path1), ("p2", self.path2)):
            for e in path:
                if e not in edge_set:
                    raise CcpError("%s edge (%s, %s) is not a graph edge"
                                   % (tag, e[0], e[1]))
        if set(self.path1) & set(self.path2):
            raise CcpError("the two paths share an edge")
        if len(self.areas) != len(self.borders):
            raise CcpError("area and border lists disagree")
        for idx, (area, border) in enumerate(zip(self.areas, self.borders),
                                             start=1):
            for v in area:
                if v not in known:
                    raise CcpError("area %d references unknown vertex %s"
                                   % (idx, v))
            if len(set(area)) != len(area):
                raise CcpError("area %d repeats a vertex" % idx)
            area_set = set(area)
            for v in border:
                if v not in area_set:
                    raise CcpError("border element %s is outside area %d"
                                   % (v, idx))
            if len(set(border)) != len(border):
                raise CcpError("area %d repeats a border element" % idx)

    def _check_acyclic(self):
        out = {v: [] for v in self.vertices}
        indeg = {v: 0 for v in self.vertices}
        for u, v in self.edges:
            out[u].append(v)
            indeg[v] += 1
        ready = [v for v in self.vertices if indeg[v] == 0]
        seen = 0
        while ready:
            u = ready.pop()
            seen += 1
            for v in out[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
        if seen != len(self.vertices):
            raise CcpError("the edge relation has a cycle")

    @property
    def color_range(self):
        return tuple(range(1, self.colors + 1))

    @property
    def bin_range(self):
        return tuple(range(1, self.bins + 1))

    def size_of(self, v):
        return self.sizes[self.vertices.index(v)]

    @property
    def border_elements(self):
        """Vertices appearing in any border set, declaration order."""
        members = set()
        for border in self.borders:
            members.update(border)
        return tuple(v for v in self.vertices if v in members)

    def candidate_areas(self, element):
        """1-based indexes of the areas whose border set holds `element`."""
        return [i for i, border in enumerate(self.borders, start=1)
                if element in border]

    def path_vertices(self, path):
        members = set()
        for u, v in path:
            members.add(u)
            members.add(v)
        return tuple(v for v in self.vertices if v in members)

    def neighbor_map(self):
        """Undirected adjacency, neighbor lists in declaration order."""
        near = {v: [] for v in self.vertices}
        for u, v in self.edges:
            if v not in near[u]:
                near[u].append(v)
            if u not in near[v]:
                near[v].append(u)
        order = {v: i for i, v in enumerate(self.vertices)}
        for v in near:
            near[v].sort(key=order.__getitem__)
        return near


@dataclass
class CcpSolution:
    color: dict = field(default_factory=dict)  # vertex -> 1..C
    bin: dict = field(default_factory=dict)    # vertex -> 1..B
    area: dict = field(default_factory=dict)   # border element -> area idx


def parse_ccp(text):
    """Parse the CCPF line format into a CcpInstance."""
    header = None
    vertices, vtypes, sizes = [], [], []
    edges, path1, path2 = [], [], []
    areas, borders = {}, {}

    def err(lineno, msg):
        raise CcpError("line %d: %s" % (lineno, msg))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "ccp":
            if header is not None:
                err(lineno, "duplicate header")
            if len(parts) != 5:
                err(lineno, "header needs M, C, B and K")
            try:
                header = tuple(int(x) for x in parts[1:])
            except ValueError:
                err(lineno, "header values must be integers")
        elif tag == "v":
            if len(parts) != 4:
                err(lineno, "vertex line needs id, type and size")
            try:
                size = int(parts[3])
            except ValueError:
                err(lineno, "vertex size must be an integer")
            vertices.append(parts[1])
            vtypes.append(parts[2])
            sizes.append(size)
        elif tag in ("e", "p1", "p2"):
            if len(parts) != 3:
                err(lineno, "edge line needs two endpoints")
            pair = (parts[1], parts[2])
            {"e": edges, "p1": path1, "p2": path2}[tag].append(pair)
        elif tag in ("area", "border"):
            if len(parts) < 3:
                err(lineno, "%s line needs an index and vertices" % tag)
            try:
                idx = int(parts[1])
            except ValueError:
                err(lineno, "%s index must be an integer" % tag)
            target = areas if tag == "area" else borders
            if idx in target:
                err(lineno, "duplicate %s %d" % (tag, idx))
            target[idx] = tuple(parts[2:])
        else:
            err(lineno, "unknown line tag %r" % tag)
    if header is None:
        raise CcpError("missing ccp header line")
    idxs = sorted(areas)
    if idxs != list(range(1, len(idxs) + 1)):
        raise CcpError("area indexes must be 1..%d" % len(idxs))
    for idx in borders:
        if idx not in areas:
            raise CcpError("border %d has no matching area" % idx)
    m, c, b, k = header
    return CcpInstance(
        vertices=tuple(vertices),
        vtypes=tuple(vtypes),
        sizes=tuple(sizes),
        edges=tuple(edges),
        path1=tuple(path1),
        path2=tuple(path2),
        areas=tuple(areas[i] for i in idxs),
        borders=tuple(borders.get(i, ()) for i in idxs),
        max_border=m, colors=c, bins=b, capacity=k)


def serialize_ccp(instance):
    lines = ["ccp %d %d %d %d" % (instance.max_border, instance.colors,
                                  instance.bins, instance.capacity)]
    for v, t, s in zip(instance.vertices, instance.vtypes, instance.sizes):
        lines.append("v %s %s %d" % (v, t, s))
    for u, v in instance.edges:
        lines.append("e %s %s" % (u, v))
    for u, v in instance.path1:
        lines.append("p1 %s %s" % (u, v))
    for u, v in instance.path2:
        lines.append("p2 %s %s" % (u, v))
    for idx, (area, border) in enumerate(zip(instance.areas,
                                             instance.borders), start=1):
        lines.append("area %d %s" % (idx, " ".join(area)))
        if border:
            lines.append("border %d %s" % (idx, " ".join(border)))
    return "\n".join(lines) + "\n"


def encode_ccp(instance):
    """Ground program whose answer sets are exactly the valid solutions.

    Colors and bins are guessed with exactly-one groups, bin loads are
    bounded by a sequential counter that repeats each vertex selector
    size-many times, areas carry a derived color atom so mixed areas are
    two derived colors and one pairwise constraint away, and
    connectedness is a guessed per-color root plus recursive reach over
    the undirected edges.  The reach recursion makes the program
    non-tight whenever an edge exists.
    """
    b = ProgramBuilder()
    inst = instance
    crange, brange = inst.color_range, inst.bin_range

    # instance facts, so heuristics can read the graph back from names
    for v, t, s in zip(inst.vertices, inst.vtypes, inst.sizes):
        b.fact(b.named(format_symbol("vertex", (v,))))
        b.fact(b.named(format_symbol("vsize", (v, s))))
    for u, v in inst.edges:
        b.fact(b.named(format_symbol("arc", (u, v))))
    b.fact(b.named(format_symbol("kcap", (inst.capacity,))))

    color, vbin = {}, {}
    for v in inst.vertices:
        for c in crange:
            color[v, c] = b.named(format_symbol("color", (v, c)))
            b.guess(color[v, c])
        cov = b.named(format_symbol("colored", (v,)))
        for c in crange:
            b.rule(cov, pos=[color[v, c]])
        b.constraint(neg=[cov])  # every vertex gets a color
        for c1, c2 in combinations(crange, 2):
            b.constraint(pos=[color[v, c1], color[v, c2]])  # only one
        for bb in brange:
            vbin[v, bb] = b.named(format_symbol("bin", (v, bb)))
            b.guess(vbin[v, bb])
        bcov = b.named(format_symbol("binned", (v,)))
        for bb in brange:
            b.rule(bcov, pos=[vbin[v, bb]])
        b.constraint(neg=[bcov])  # every vertex lands in a bin
        for b1, b2 in combinations(brange, 2):
            b.constraint(pos=[vbin[v, b1], vbin[v, b2]])

    # load per color and bin: a vertex of size s counts s times
    inbin = {}
    for v in inst.vertices:
        for c in crange:
            for bb in brange:
                aid = b.named(format_symbol("inbin", (v, c, bb)))
                b.rule(aid, pos=[color[v, c], vbin[v, bb]])
                inbin[v, c, bb] = aid
    for c in crange:
        for bb in brange:
            selectors = []
            for v, s in zip(inst.vertices, inst.sizes):
                selectors.extend([inbin[v, c, bb]] * s)
            b.at_most(selectors, inst.capacity)

    # the two paths may not share a color
    p1v = inst.path_vertices(inst.path1)
    p2v = inst.path_vertices(inst.path2)
    for u in p1v:
        for v in p2v:
            for c in crange:
                b.constraint(pos=[color[u, c], color[v, c]])

    # border elements pick exactly one of their areas
    assign = {}
    for i, border in enumerate(inst.borders, start=1):
        for e in border:
            assign[e, i] = b.named(format_symbol("assign", (e, i)))
            b.guess(assign[e, i])
    for e in inst.border_elements:
        cands = inst.candidate_areas(e)
        cov = b.named(format_symbol("assigned", (e,)))
        for i in cands:
            b.rule(cov, pos=[assign[e, i]])
        b.constraint(neg=[cov])
        for i1, i2 in combinations(cands, 2):
            b.constraint(pos=[assign[e, i1], assign[e, i2]])
    for i, border in enumerate(inst.borders, start=1):
        b.at_most([assign[e, i] for e in border], inst.max_border)
        acolor = {}
        for c in crange:
            acolor[c] = b.named(format_symbol("areacolor", (i, c)))
            for e in border:
                b.rule(acolor[c], pos=[assign[e, i], color[e, c]])
        for c1, c2 in combinations(crange, 2):
            b.constraint(pos=[acolor[c1], acolor[c2]])  # one color per area

    # connectedness: a guessed root per color, reach spreads in the class
    for c in crange:
        reach = {}
        root = {}
        for v in inst.vertices:
            root[v] = b.named(format_symbol("root", (v, c)))
            b.guess(root[v])
            b.constraint(pos=[root[v]], neg=[color[v, c]])  # root is in class
            reach[v] = b.named(format_symbol("reach", (v, c)))
            b.rule(reach[v], pos=[root[v]])
        for v1, v2 in combinations(inst.vertices, 2):
            b.constraint(pos=[root[v1], root[v2]])  # one seed per color
        for u, v in inst.edges:
            # connectivity ignores edge direction
            b.rule(reach[v], pos=[reach[u], color[v, c]])
            b.rule(reach[u], pos=[reach[v], color[u, c]])
        for v in inst.vertices:
            b.constraint(pos=[color[v, c]], neg=[reach[v]])
    return b.build()


def verify_ccp(instance, solution):
    """Check a solution directly; returns a list of violation strings."""
    violations = []
    for v in instance.vertices:
        c = solution.color.get(v)
        if c is None:
            violations.append("vertex %s has no color" % v)
        elif not 1 <= c <= instance.colors:
            violations.append("vertex %s has color %d outside 1..%d"
                              % (v, c, instance.colors))
        bb = solution.bin.get(v)
        if bb is None:
            violations.append("vertex %s is in no bin" % v)
        elif not 1 <= bb <= instance.bins:
            violations.append("vertex %s is in bin %d outside 1..%d"
                              % (v, bb, instance.bins))
    if violations:
        return violations
    load = {}
    for v, s in zip(instance.vertices, instance.sizes):
        key = (solution.color[v], solution.bin[v])
        load[key] = load.get(key, 0) + s
    for c, bb in sorted(load):
        if load[c, bb] > instance.capacity:
            violations.append("bin %d of color %d holds %d, over the "
                              "capacity %d" % (bb, c, load[c, bb],
                                               instance.capacity))
    p2v = instance.path_vertices(instance.path2)
    for u in instance.path_vertices(instance.path1):
        for v in p2v:
            if solution.color[u] == solution.color[v]:
                violations.append("path vertices %s and %s share color %d"
                                  % (u, v, solution.color[u]))
    assigned = {}
    for e in instance.border_elements:
        i = solution.area.get(e)
        if i is None:
            violations.append("border element %s is assigned to no area" % e)
        elif i not in instance.candidate_areas(e):
            violations.append("border element %s is not eligible for area %d"
                              % (e, i))
        else:
            assigned.setdefault(i, []).append(e)
    for i in sorted(assigned):
        elems = assigned[i]
        if len(elems) > instance.max_border:
            violations.append("area %d holds %d border elements, over the "
                              "cap of %d" % (i, len(elems),
                                             instance.max_border))
        if len({solution.color[e] for e in elems}) > 1:
            violations.append("area %d border elements do not share one "
                              "color" % i)
    near = instance.neighbor_map()
    classes = {}
    for v in instance.vertices:
        classes.setdefault(solution.color[v], []).append(v)
    for c in sorted(classes):
        members = classes[c]
        seen = {members[0]}
        queue = [members[0]]
        member_set = set(members)
        while queue:
            u = queue.pop()
            for w in near[u]:
                if w in member_set and w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != len(members):
            violations.append("color %d class is not connected" % c)
    return violations


def extract_ccp(true_atoms, program, instance):
    """Read a solution out of an answer set of encode_ccp's program."""
    solution = CcpSolution()
    for atom in true_atoms:
        name = program.names.get(atom)
        if name is None:
            continue
        func, args = parse_symbol(name)
        if func == "color":
            solution.color[args[0]] = int(args[1])
        elif func == "bin":
            solution.bin[args[0]] = int(args[1])
        elif func == "assign":
            solution.area[args[0]] = int(args[1])
    for v in instance.vertices:
        if v not in solution.color:
            raise CcpError("witness leaves vertex %s uncolored" % v)
        if v not in solution.bin:
            raise CcpError("witness leaves vertex %s unbinned" % v)
    return solution


ORACLE_VERTEX_LIMIT = 6


def enumerate_ccp_solutions(instance, limit=None):
    """Exhaustively enumerate verifier-accepted solutions (tiny instances).

    Staged search: colors with path-disjointness pruning, then bins with
    load pruning, then areas; connectedness is checked once a coloring
    is total.  Raises OracleLimitError beyond ORACLE_VERTEX_LIMIT
    vertices."""
    if len(instance.vertices) > ORACLE_VERTEX_LIMIT:
        raise OracleLimitError("instance too large for the exhaustive "
                               "oracle (%d vertices)"
                               % len(instance.vertices))
    vertices = instance.vertices
    sizes = dict(zip(vertices, instance.sizes))
    p1v = set(instance.path_vertices(instance.path1))
    p2v = set(instance.path_vertices(instance.path2))
    elements = instance.border_elements
    found = []

    def area_rec(idx, color, vbin, area):
        if limit is not None and len(found) >= limit:
            return
        if idx == len(elements):
            sol = CcpSolution(dict(color), dict(vbin), dict(area))
            if not verify_ccp(instance, sol):
                found.append(sol)
            return
        e = elements[idx]
        for i in instance.candidate_areas(e):
            chosen = [x for x in area if area[x] == i]
            if len(chosen) >= instance.max_border:
                continue
            if any(color[x] != color[e] for x in chosen):
                continue
            area[e] = i
            area_rec(idx + 1, color, vbin, area)
            del area[e]

    def bin_rec(idx, color, vbin, load):
        if limit is not None and len(found) >= limit:
            return
        if idx == len(vertices):
            area_rec(0, color, vbin, {})
            return
        v = vertices[idx]
        for bb in instance.bin_range:
            key = (color[v], bb)
            if load.get(key, 0) + sizes[v] > instance.capacity:
                continue
            vbin[v] = bb
            load[key] = load.get(key, 0) + sizes[v]
            bin_rec(idx + 1, color, vbin, load)
            load[key] -= sizes[v]
            del vbin[v]

    def classes_connected(color):
        near = instance.neighbor_map()
        for c in set(color.values()):
            members = [v for v in vertices if color[v] == c]
            seen = {members[0]}
            queue = [members[0]]
            while queue:
                u = queue.pop()
                for w in near[u]:
                    if color.get(w) == c and w not in seen:
                        seen.add(w)
                        queue.append(w)
            if len(seen) != len(members):
                return False
        return True

    def color_rec(idx, color):
        if limit is not None and len(found) >= limit:
            return
        if idx == len(vertices):
            if classes_connected(color):
                bin_rec(0, color, {}, {})
            return
        v = vertices[idx]
        for c in instance.color_range:
            if v in p1v and any(color.get(u) == c for u in p2v):
                continue
            if v in p2v and any(color.get(u) == c for u in p1v):
                continue
            color[v] = c
            color_rec(idx + 1, color)
            del color[v]

    color_rec(0, {})
    return found


def a1_plan(instance):
    """Greedy matching: each border element to its emptiest candidate area.

    Elements are visited in declaration order; ties go to the lower area
    index.  Returns (element, area index) pairs."""
    counts = {i: 0 for i in range(1, len(instance.areas) + 1)}
    plan = []
    for e in instance.border_elements:
        cands = instance.candidate_areas(e)
        if not cands:
            raise CcpError("border element %s belongs to no area" % e)
        best = min(cands, key=lambda i: (counts[i], i))
        counts[best] += 1
        plan.append((e, best))
    return plan


def a1_assign_borders(instance, assign_atoms):
    """The greedy matching plan as Choose commands.

    `assign_atoms` maps (element, area index) to the encoding's atom."""
    return [Choose(assign_atoms[e, i]) for e, i in a1_plan(instance)]


def vertex_scores(vertices, edges):
    """1 for vertices with only incoming or only outgoing edges, else 0."""
    indeg = {v: 0 for v in vertices}
    outdeg = {v: 0 for v in vertices}
    for u, v in edges:
        outdeg[u] += 1
        indeg[v] += 1
    return {v: 1 if (indeg[v] > 0) != (outdeg[v] > 0) else 0
            for v in vertices}


DEFAULT_WALL_BUDGET = 10.0
DEFAULT_CHOICE_BUDGET = 5000


class CcpHeuristic(Heuristic):
    """Greedy coloring and bin packing driven by a vertex queue.

    The queue walks one weakly connected region per color: a seed vertex
    is colored with the current color and packed best-fit, successful
    vertices pull their neighbors into the queue, and a drained queue
    advances the color and reseeds.  Refused vertices are skipped for
    the current color and the CDCL default completes whatever is left.

    Variants: a1a2 first assigns border elements greedily to areas, then
    runs the queue; a2f is the bare queue plus a budget (wall seconds or
    a choice count) after which it falls back permanently; a2fo also
    sorts vertices so that sources and sinks come first; a2afo
    alternates heuristic and default phases each budget period, building
    a new vertex order per re-entry, and gives up for good once every
    candidate order has been tried.
    """

    VARIANTS = ("a1a2", "a2f", "a2fo", "a2afo")

    def __init__(self, variant="a2f", budget=None, budget_mode="wall"):
        if variant not in self.VARIANTS:
            raise CcpError("unknown variant %r" % variant)
        if budget_mode not in ("wall", "choices"):
            raise CcpError("unknown budget mode %r" % budget_mode)
        self.variant = variant
        self.budget_mode = budget_mode
        if budget is None:
            budget = (DEFAULT_WALL_BUDGET if budget_mode == "wall"
                      else DEFAULT_CHOICE_BUDGET)
        if budget < 0:
            raise CcpError("negative budget")
        self.budget = budget

    # -- program reading ------------------------------------------------

    def on_program(self, program):
        self.roles = {}
        self.color_atoms = {}
        self.bin_atoms = {}
        self.assign_atoms = {}
        self.sizes = {}
        vertices, edges = [], []
        self.capacity = None
        ncolors = nbins = 0
        for atom in sorted(program.names):
            func, args = parse_symbol(program.names[atom])
            if func == "vertex":
                vertices.append(args[0])
            elif func == "vsize":
                self.sizes[args[0]] = int(args[1])
            elif func == "arc":
                edges.append((args[0], args[1]))
            elif func == "kcap":
                self.capacity = int(args[0])
            elif func == "color":
                v, c = args[0], int(args[1])
                self.color_atoms[v, c] = atom
                self.roles[atom] = ("color", v, c)
                ncolors = max(ncolors, c)
            elif func == "bin":
                v, bb = args[0], int(args[1])
                self.bin_atoms[v, bb] = atom
                self.roles[atom] = ("bin", v, bb)
                nbins = max(nbins, bb)
            elif func == "assign":
                e, i = args[0], int(args[1])
                self.assign_atoms[e, i] = atom
                self.roles[atom] = ("assign", e, i)
        self.vertices = vertices
        self.decl_index = {v: i for i, v in enumerate(vertices)}
        self.ncolors = ncolors
        self.nbins = nbins
        if self.capacity is None:
            self.capacity = 10 ** 9  # no kcap fact: treat bins as roomy
        self.neighbors = {v: [] for v in vertices}
        for u, v in edges:
            if u in self.neighbors and v in self.neighbors:
                if v not in self.neighbors[u]:
                    self.neighbors[u].append(v)
                if u not in self.neighbors[v]:
                    self.neighbors[v].append(u)
        for v in self.neighbors:
            self.neighbors[v].sort(key=self.decl_index.__getitem__)
        if self.variant in ("a2fo", "a2afo"):
            self.score = vertex_scores(vertices, edges)
        else:
            self.score = {v: 0 for v in vertices}
        starts = [v for v in vertices if self.score[v] == 1]
        self.order_count = max(1, len(starts)) if self.variant == "a2afo" \
            else 1
        self.order_starts = starts
        return ()

    def _make_order(self, cursor):
        base = sorted(self.vertices,
                      key=lambda v: (-self.score[v], self.decl_index[v]))
        if self.variant not in ("a2fo", "a2afo"):
            base = list(self.vertices)
        if self.variant == "a2afo" and self.order_starts:
            start = self.order_starts[cursor]
            return [start] + [v for v in base if v != start]
        return base

    # -- state tracking -------------------------------------------------

    def on_search(self, view):
        self.view = view
        self.colored = {}
        self.binned = {}
        self.assigned = {}
        self.false_atoms = set()
        self.order_cursor = 0
        self.order = self._make_order(0)
        self.mode = "heuristic"
        self.done = False
        self.a1_done = self.variant != "a1a2"
        self.consults = 0
        self._reset_a2()
        self._period_reset()

    def _reset_a2(self):
        self.queue = []
        self.cursor_color = 0
        self.skipped = set()
        self.bin_skipped = set()
        self.pending = None
        self.refute_flag = False

    def _period_reset(self):
        self.period_consults = 0
        self.period_start = time.monotonic() if self.budget_mode == "wall" \
            else 0.0

    def _period_over(self):
        if self.budget_mode == "choices":
            return self.period_consults >= self.budget
        return time.monotonic() - self.period_start >= self.budget

    def on_lit_true(self, literal):
        atom = abs(literal)
        role = self.roles.get(atom)
        if role is None:
            return
        if literal < 0:
            self.false_atoms.add(atom)
            return
        kind, v, x = role
        if kind == "color":
            self.colored[v] = x
        elif kind == "bin":
            self.binned[v] = x
        else:
            self.assigned[v] = x

    def on_unroll_lit(self, literal):
        atom = abs(literal)
        role = self.roles.get(atom)
        if role is None:
            return
        if literal < 0:
            self.false_atoms.discard(atom)
            return
        kind, v, x = role
        table = {"color": self.colored, "bin": self.binned,
                 "assign": self.assigned}[kind]
        if table.get(v) == x:
            del table[v]

    def on_conflict(self, literal):
        self.refute_flag = True

    def on_inco_choice(self, literal):
        self.refute_flag = True

    # -- choice computation ---------------------------------------------

    def _needs_work(self, v):
        return v not in self.colored or v not in self.binned

    def _loads(self, c):
        load = {}
        for v, cv in self.colored.items():
            if cv == c and v in self.binned:
                load[self.binned[v]] = (load.get(self.binned[v], 0)
                                        + self.sizes.get(v, 1))
        return load

    def _best_fit(self, v, c):
        """Feasible bin with the smallest post-placement residual."""
        load = self._loads(c)
        size = self.sizes.get(v, 1)
        best = None
        best_resid = None
        for bb in range(1, self.nbins + 1):
            atom = self.bin_atoms.get((v, bb))
            if atom is None or atom in self.false_atoms:
                continue
            resid = self.capacity - load.get(bb, 0) - size
            if resid < 0:
                continue
            if best_resid is None or resid < best_resid:
                best, best_resid = bb, resid
        return best

    def _sync(self):
        if self.pending is not None:
            v, atoms, c, kind = self.pending
            self.pending = None
            placed = all(self.view.value_of(a) is True for a in atoms)
            if placed:
                if self.queue and self.queue[0] == v:
                    self.queue.pop(0)
                for n in self.neighbors.get(v, ()):
                    if self._needs_work(n) and n not in self.queue:
                        self.queue.append(n)
                self.queue.sort(key=lambda u: (-self.score[u],
                                               self.decl_index[u]))
            elif self.refute_flag:
                if self.queue and self.queue[0] == v:
                    self.queue.pop(0)
                if kind == "bin":
                    self.bin_skipped.add((v, c))
                else:
                    self.skipped.add((v, c))
        self.refute_flag = False

    def _seed(self):
        for v in self.order:
            if not self._needs_work(v):
                continue
            if v not in self.colored:
                nxt = self.cursor_color + 1
                if nxt > self.ncolors:
                    continue  # no fresh color left for this region
                self.cursor_color = nxt
                self.queue.append(v)
                return True
            if (v, self.colored[v]) in self.bin_skipped:
                continue
            self.queue.append(v)
            return True
        return False

    def _give_up(self, v, c):
        self.queue.pop(0)
        self.skipped.add((v, c))

    def _a2_batch(self):
        while True:
            self.queue = [v for v in self.queue if self._needs_work(v)]
            if not self.queue:
                if not self._seed():
                    self.done = True
                    return [Fallback(0)]
            v = self.queue[0]
            c = self.colored.get(v)
            if c is None:
                c = self.cursor_color
                catom = self.color_atoms.get((v, c))
                if ((v, c) in self.skipped or catom is None
                        or catom in self.false_atoms):
                    self._give_up(v, c)
                    continue
                atoms = [catom]
                if v not in self.binned:
                    bb = self._best_fit(v, c)
                    if bb is None:
                        self._give_up(v, c)
                        continue
                    atoms.append(self.bin_atoms[v, bb])
                else:
                    load = self._loads(c)
                    used = load.get(self.binned[v], 0)
                    if used + self.sizes.get(v, 1) > self.capacity:
                        self._give_up(v, c)
                        continue
                self.pending = (v, tuple(atoms), c, "place")
                return [Choose(a) for a in atoms]
            bb = self._best_fit(v, c)
            if bb is None:
                self.queue.pop(0)
                self.bin_skipped.add((v, c))
                continue
            self.pending = (v, (self.bin_atoms[v, bb],), c, "bin")
            return [Choose(self.bin_atoms[v, bb])]

    def on_choice_required(self):
        self.consults += 1
        self.period_consults += 1
        if self.done or not self.color_atoms:
            return [Fallback(0)]
        self._sync()
        if self.variant in ("a2f", "a2fo") and self._period_over():
            self.done = True
            return [Fallback(0)]
        if self.variant == "a2afo":
            if self.mode == "default":
                if not self._period_over():
                    return [Fallback(1)]
                self.order_cursor += 1
                if self.order_cursor >= self.order_count:
                    self.done = True
                    return [Fallback(0)]
                self.order = self._make_order(self.order_cursor)
                self._reset_a2()
                self._period_reset()
                self.mode = "heuristic"
            elif self._period_over():
                self.mode = "default"
                self._period_reset()
                return [Unroll(0), Fallback(1)]
        if not self.a1_done:
            self.a1_done = True
            batch = self._a1_batch()
            if batch:
                return batch
        return self._a2_batch()

    def _a1_batch(self):
        counts = {}
        batch = []
        elements = sorted({e for e, _i in self.assign_atoms},
                          key=self.decl_index.get)
        for e in elements:
            cands = sorted(i for ee, i in self.assign_atoms if ee == e)
            best = min(cands, key=lambda i: (counts.get(i, 0), i))
            counts[best] = counts.get(best, 0) + 1
            atom = self.assign_atoms[e, best]
            if self.view.value_of(atom) is None:
                batch.append(Choose(atom))
        return batch


def gen_ccp_grid(w, h, colors=2, bins=2, capacity=4, max_border=None,
                 sizes=(1, 2), paths=None):
    """Grid-shaped instance: right and down edges, row areas, row paths.

    The two paths are the top and bottom rows, which forces h >= 2 when
    paths are wanted; `paths=None` requests them exactly when they fit.
    Vertex sizes cycle through `sizes` in declaration (row-major) order.
    """
    if w < 1 or h < 1:
        raise CcpError("grid dimensions must be positive")
    if paths is None:
        paths = h >= 2
    if paths and h < 2:
        raise CcpError("paths would intersect on a single row")
    name = {}
    vertices, vtypes, vsizes = [], [], []
    idx = 0
    for r in range(1, h + 1):
        for c in range(1, w + 1):
            v = "n%d_%d" % (r, c)
            name[r, c] = v
            vertices.append(v)
            vtypes.append("g")
            size = sizes[idx % len(sizes)]
            if size > capacity:
                raise CcpError("size %d exceeds the bin capacity %d"
                               % (size, capacity))
            vsizes.append(size)
            idx += 1
    edges = []
    for r in range(1, h + 1):
        for c in range(1, w + 1):
            if c < w:
                edges.append((name[r, c], name[r, c + 1]))
            if r < h:
                edges.append((name[r, c], name[r + 1, c]))
    path1 = tuple((name[1, c], name[1, c + 1]) for c in range(1, w)) \
        if paths else ()
    path2 = tuple((name[h, c], name[h, c + 1]) for c in range(1, w)) \
        if paths else ()
    areas, borders = [], []
    for r in range(1, h + 1):
        row = tuple(name[r, c] for c in range(1, w + 1))
        areas.append(row)
        ends = (row[0],) if w == 1 else (row[0], row[-1])
        borders.append(ends)
    if max_border is None:
        max_border = 2 if w >= 2 else 1
    return CcpInstance(
        vertices=tuple(vertices), vtypes=tuple(vtypes),
        sizes=tuple(vsizes), edges=tuple(edges),
        path1=path1, path2=path2,
        areas=tuple(areas), borders=tuple(borders),
        max_border=max_border, colors=colors, bins=bins,
        capacity=capacity)


FIG2_TEXT = """\
% eight vertices, five of them border elements of two overlapping areas
ccp 3 3 2 3
v b1 b 1
v p1 p 3
v b2 b 1
v p3 p 3
v b5 b 1
v b3 b 1
v p2 p 3
v b4 b 1
e b1 p1
e p1 b2
e b2 p3
e p3 b5
e p1 b3
e b3 p2
e p2 b4
e b4 p3
p1 b1 p1
p1 p1 b3
p2 p3 b5
p2 b4 p3
area 1 b1 b2 b3 p1
border 1 b1 b2 b3
area 2 b2 b4 b5 p3
border 2 b2 b4 b5
"""


def fig2_instance():
    return parse_ccp(FIG2_TEXT)


FIG2_SOLUTION = CcpSolution(
    color={"b1": 1, "p1": 1, "b2": 1, "b3": 1,
           "p3": 2, "b5": 2, "b4": 2, "p2": 3},
    bin={"p1": 1, "b1": 2, "b2": 2, "b3": 2,
         "p3": 1, "b5": 2, "b4": 2, "p2": 1},
    area={"b1": 1, "b2": 1, "b3": 1, "b4": 2, "b5": 2},
)
