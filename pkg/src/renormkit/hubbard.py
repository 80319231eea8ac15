"""Combinatorial superattracting models: disked trees and their substitutions.

A model lists the periodic disks ``D0 .. D{p-1}`` (``D0`` critical), the tree
edges joining them, and for every edge the ordered level-1 segments it is cut
into by the preimage disks, each tagged with the edge it maps onto.  Level-1
preimage disks other than the ``Dk`` are named ``Dk'`` (``k >= 1``), the
symmetric partner of ``Dk``; both map onto ``D(k+1 mod p)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from .circuits import Circuit, TcgStructure, total_conductance
from .errors import AlignmentError, DataError, DomainError, ResourceError, StructuralError
from .harmonic import hsum
from .wad import Arc, Certificate, Group, Surface, Wad, shared_end_hook

DEPTH_CAP = 8

AXIOMS = ("shift", "critical_disk", "tree_of_complete_graphs", "valence",
          "substitution", "no_periodic_horizontal_arc")


@dataclass(frozen=True)
class Segment:
    image: str
    reversed: bool = False
    through: str | None = None  # level-1 disk at the far end (None on the last segment)


@dataclass(frozen=True)
class LiftEntry:
    intersection: int
    lifts: tuple
    disk: str | None = None


@dataclass(frozen=True)
class DiskedTreeModel:
    name: str
    p: int
    degrees: Mapping[str, int]
    edges: Mapping[str, tuple]          # edge id -> (disk, disk)
    substitution: Mapping[str, tuple]   # edge id -> tuple of Segment
    codisks: Mapping[str, str]          # co-disk id -> image disk
    lift_table: Mapping[str, LiftEntry] = field(default_factory=dict)

    @property
    def disks(self) -> tuple:
        return tuple(self.degrees)

    @property
    def arcs(self) -> tuple:
        return tuple(self.edges)

    def disk_index(self, d: str) -> int:
        try:
            return int(d[1:])
        except ValueError:
            raise DomainError(f"disk id {d!r} is not of the form Dk") from None

    def image_of(self, disk: str) -> str:
        """F on level-1 disks."""
        if disk in self.codisks:
            return self.codisks[disk]
        if disk in self.degrees:
            return f"D{(self.disk_index(disk) + 1) % self.p}"
        raise DomainError(f"unknown level-1 disk {disk!r}")

    def level1_disks(self) -> tuple:
        return self.disks + tuple(self.codisks)

    def surface(self, level: int = 0) -> Surface:
        """Sphere with the level-``level`` disks (proper ends) and the outer boundary removed."""
        disks = self.disks if level == 0 else self.level1_disks()
        return Surface(frozenset(disks) | {"outer"}, frozenset(disks), 1 - len(disks))

    def wad(self, weights: Mapping[str, float]) -> Wad:
        arcs = [Arc(e, ends) for e, ends in self.edges.items()]
        return Wad(self.surface(), arcs, weights)


# -- loading ------------------------------------------------------------------

def model_from_json(data: Mapping) -> DiskedTreeModel:
    try:
        p = int(data["p"])
        degrees = {d["id"]: int(d.get("deg", 1)) for d in data["disks"]}
        edges = {}
        for e in data["tree_edges"]:
            if e["id"] in edges:
                raise StructuralError(f"duplicate edge id {e['id']!r}")
            x, y = e["ends"]
            edges[e["id"]] = (x, y)
        subst = {}
        for k, segs in data["substitution"].items():
            out = []
            for s in segs:
                through = list(s.get("disks_through", []))
                if len(through) > 1:
                    raise StructuralError(f"segment of {k!r} lists more than one disk")
                out.append(Segment(s["image"], bool(s.get("reversed", False)),
                                   through[0] if through else None))
            subst[k] = tuple(out)
        if "codisks" in data:
            codisks = {c["id"]: c["maps_to"] for c in data["codisks"]}
        else:
            codisks = {f"D{k}'": f"D{(k + 1) % p}" for k in range(1, p)}
        lifts = {t: LiftEntry(int(v["intersection"]), tuple(v.get("lifts", [])), v.get("disk"))
                 for t, v in data.get("lift_table", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, StructuralError):
            raise
        raise StructuralError(f"malformed model description: {exc!r}") from None
    if p < 2:
        raise StructuralError("period must be at least 2")
    return DiskedTreeModel(str(data.get("name", "")), p, degrees, edges, subst, codisks, lifts)


def load_model(source) -> DiskedTreeModel:
    if isinstance(source, Mapping):
        return model_from_json(source)
    return model_from_json(json.loads(Path(source).read_text()))


# -- validation ---------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)  # (axiom, message)
    notes: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def axioms(self) -> set:
        return {a for a, _ in self.violations}


def disk_graph(model: DiskedTreeModel) -> nx.MultiGraph:
    g = nx.MultiGraph()
    g.add_nodes_from(model.disks)
    for e, (x, y) in model.edges.items():
        g.add_edge(x, y, key=e)
    return g


def blocks(model: DiskedTreeModel) -> list[frozenset]:
    g = nx.Graph(disk_graph(model))
    return [frozenset(b) for b in nx.biconnected_components(g)]


def validate_model(model: DiskedTreeModel) -> ValidationReport:
    rep = ValidationReport()
    bad = rep.violations.append
    p = model.p
    expected = [f"D{k}" for k in range(p)]
    if sorted(model.disks) != sorted(expected):
        bad(("shift", f"disks must be {expected}, got {list(model.disks)}"))
    for c, img in model.codisks.items():
        if img not in model.degrees:
            bad(("shift", f"co-disk {c!r} maps to unknown disk {img!r}"))
        elif c == "D0'":
            bad(("shift", "D0 is critical and has no symmetric partner"))
    crit = [d for d, k in model.degrees.items() if k == 2]
    if len(crit) != 1 or any(k not in (1, 2) for k in model.degrees.values()):
        bad(("critical_disk", f"exactly one disk must have degree 2, found {crit}"))
    elif crit[0] != "D0":
        bad(("critical_disk", f"the critical disk must be D0, found {crit[0]!r}"))

    g = disk_graph(model)
    for e, (x, y) in model.edges.items():
        if x not in model.degrees or y not in model.degrees:
            bad(("tree_of_complete_graphs", f"edge {e!r} has an endpoint that is not a disk"))
        if x == y:
            bad(("tree_of_complete_graphs", f"edge {e!r} is a loop"))
    if all(x in model.degrees and y in model.degrees for x, y in model.edges.values()):
        simple = nx.Graph(g)
        if simple.number_of_edges() != g.number_of_edges():
            bad(("tree_of_complete_graphs", "two tree edges join the same pair of disks"))
        if not nx.is_connected(simple):
            bad(("tree_of_complete_graphs", "disk graph is disconnected"))
        else:
            for b in blocks(model):
                sub = simple.subgraph(b)
                n = len(b)
                if sub.number_of_edges() != n * (n - 1) // 2:
                    bad(("tree_of_complete_graphs",
                         f"block {sorted(b)} is not a complete graph"))
            for d in model.disks:
                val = sum(d in b for b in blocks(model))
                if val > 2:
                    bad(("valence", f"disk {d!r} lies in {val} blocks (at most 2 allowed)"))

    level1 = set(model.level1_disks())
    for e in model.edges:
        segs = model.substitution.get(e)
        if not segs:
            bad(("substitution", f"edge {e!r} has no substitution rule"))
            continue
        for i, s in enumerate(segs):
            if s.image not in model.edges:
                bad(("substitution", f"segment {i} of {e!r} maps to unknown edge {s.image!r}"))
            last = i == len(segs) - 1
            if last and s.through is not None:
                bad(("substitution", f"last segment of {e!r} must not list a disk"))
            if not last and s.through not in level1:
                bad(("substitution", f"segment {i} of {e!r} ends at {s.through!r}, "
                                     "not a level-1 disk"))
    for e in model.substitution:
        if e not in model.edges:
            bad(("substitution", f"rule for unknown edge {e!r}"))
    if any(a == "substitution" for a, _ in rep.violations):
        return rep

    for e, segs in model.substitution.items():
        ends = _segment_ends(model, e)
        for (x, y), s in zip(ends, segs):
            u, v = model.edges[s.image]
            fx, fy = model.image_of(x), model.image_of(y)
            want = (v, u) if s.reversed else (u, v)
            if (fx, fy) != want:
                rep.notes.append(f"segment {x}-{y} of {e!r} maps its ends to {fx}-{fy}, "
                                 f"while {s.image!r} runs {want[0]}-{want[1]}")
    mp = transition_matrix(model, p)
    for e, row in zip(mp.arcs, mp.entries):
        if sum(row) == 1:
            bad(("no_periodic_horizontal_arc",
                 f"edge {e!r} has M^p row sum 1 and would be invariant under F^p"))
    if model.lift_table:
        for t, ent in model.lift_table.items():
            if ent.disk is not None and ent.disk not in model.degrees:
                rep.notes.append(f"lift token {t!r} names unknown disk {ent.disk!r}")
    return rep


def _segment_ends(model: DiskedTreeModel, e: str) -> list[tuple]:
    x, y = model.edges[e]
    pts = [x] + [s.through for s in model.substitution[e][:-1]] + [y]
    return list(zip(pts, pts[1:]))


# -- transition matrices --------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    arcs: tuple
    entries: tuple  # tuple of tuples of int

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=object)

    def row_sums(self) -> tuple:
        return tuple(sum(r) for r in self.entries)

    def __getitem__(self, key):
        g, d = key
        return self.entries[self.arcs.index(g)][self.arcs.index(d)]


def image_word(model: DiskedTreeModel, e: str, k: int) -> tuple:
    """Edges hit, in order, by the level-``k`` segments of ``e`` under ``F^k``."""

    @lru_cache(maxsize=None)
    def word(arc, j):
        if j == 0:
            return (arc,)
        out = []
        for s in model.substitution[arc]:
            w = word(s.image, j - 1)
            out.extend(reversed(w) if s.reversed else w)
        return tuple(out)

    return word(e, k)


def transition_matrix(model: DiskedTreeModel, k: int = 1, method: str = "symbolic"
                      ) -> TransitionMatrix:
    """``M^k`` either by composing substitutions or as an integer matrix power."""
    if k < 0:
        raise DomainError("iterate must be nonnegative")
    arcs = model.arcs
    pos = {a: i for i, a in enumerate(arcs)}
    n = len(arcs)
    if method == "symbolic":
        rows = []
        for a in arcs:
            row = [0] * n
            for d in image_word(model, a, k):
                row[pos[d]] += 1
            rows.append(tuple(row))
        return TransitionMatrix(arcs, tuple(rows))
    if method == "power":
        m1 = transition_matrix(model, 1).as_array()
        out = np.identity(n, dtype=object)
        for _ in range(k):
            out = out.dot(m1)
        return TransitionMatrix(arcs, tuple(tuple(int(x) for x in r) for r in out))
    raise DomainError(f"unknown method {method!r}")


@dataclass
class ExpansionReport:
    rows: list  # (arc, row sum, ok)

    @property
    def passed(self) -> bool:
        return all(ok for *_, ok in self.rows)

    @property
    def offending(self) -> list:
        return [a for a, _, ok in self.rows if not ok]


def expansion_check(model: DiskedTreeModel) -> ExpansionReport:
    mp = transition_matrix(model, model.p)
    return ExpansionReport([(a, s, s >= 2) for a, s in zip(mp.arcs, mp.row_sums())])


# -- subdivision ------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ChainDisk:
    id: str
    birth: int
    image: str    # F^level of the disk, an original disk
    degree: int   # degree of F^level on the disk


def _orbit_degree(model: DiskedTreeModel, start: int, steps: int) -> int:
    """Degree of ``F^steps`` on ``D_start``: a factor 2 per visit to ``D0``."""
    visits = sum(1 for i in range(steps) if (start + i) % model.p == 0)
    return 2 ** visits


def _level1_disk(model: DiskedTreeModel, x: str, level: int) -> ChainDisk:
    # x is a level-1 disk seen at level ``level >= 1``.
    if x in model.codisks:
        j = model.disk_index(model.codisks[x])
        return ChainDisk(x, 1, f"D{(j + level - 1) % model.p}",
                         _orbit_degree(model, j, level - 1))
    k = model.disk_index(x)
    return ChainDisk(x, 0, f"D{(k + level) % model.p}", _orbit_degree(model, k, level))


def _chain_builder(model: DiskedTreeModel):
    @lru_cache(maxsize=None)
    def chain(e: str, level: int) -> tuple:
        if level == 0:
            x, y = model.edges[e]
            return (ChainDisk(x, 0, x, 1), ChainDisk(y, 0, y, 1))
        segs = model.substitution[e]
        ends = _segment_ends(model, e)
        out = [_level1_disk(model, ends[0][0], level)]
        for i, (s, (x, y)) in enumerate(zip(segs, ends)):
            inner = chain(s.image, level - 1)[1:-1]
            if s.reversed:
                inner = inner[::-1]
            tag = f"{e}#{i}"
            out.extend(ChainDisk(f"{tag}/{d.id}", d.birth + 1, d.image, d.degree)
                       for d in inner)
            out.append(_level1_disk(model, y, level))
        return tuple(out)

    return chain


@dataclass
class LevelData:
    level: int
    r: int
    chains: dict  # edge -> tuple of ChainDisk
    p_step: int = 0

    def is_new(self, d: ChainDisk) -> bool:
        return d.birth > self.level - self.p_step

    def length(self, e: str) -> int:
        return len(self.chains[e]) - 1

    def new_disks(self, e: str) -> list:
        return [d for d in self.chains[e] if self.is_new(d)]

    def contracts(self) -> list:
        """(edge, length, 2^r, new count, 2^(r-1), ok) per edge."""
        out = []
        for e in self.chains:
            n_new = len(self.new_disks(e))
            need_new = 2 ** (self.r - 1) if self.r >= 1 else 0
            ok = self.length(e) >= 2 ** self.r and n_new >= need_new
            out.append((e, self.length(e), 2 ** self.r, n_new, need_new, ok))
        return out


def subdivide_level(model: DiskedTreeModel, level: int, cap_level: int | None = None) -> dict:
    """Chains of every tree edge through the disks of level ``level``."""
    cap = DEPTH_CAP * model.p if cap_level is None else cap_level
    if level < 0:
        raise DomainError("level must be nonnegative")
    if level > cap:
        raise ResourceError(f"level {level} exceeds the cap {cap}")
    chain = _chain_builder(model)
    return {e: chain(e, level) for e in model.edges}


def subdivide(model: DiskedTreeModel, r: int, cap: int = DEPTH_CAP) -> LevelData:
    """Chains at level ``r*p``; a disk is new when it is born after level ``(r-1)p``."""
    if r < 0:
        raise DomainError("depth must be nonnegative")
    if r > cap:
        raise ResourceError(f"depth {r} exceeds the cap {cap} (chains grow like 2^r)")
    level = r * model.p
    return LevelData(level, r, subdivide_level(model, level, cap * model.p), p_step=model.p)


# -- aligned circuits and the entropy bound -------------------------------------------

def _aligned_weights(model: DiskedTreeModel, y) -> dict:
    weights = y.weights if isinstance(y, Wad) else dict(y)
    for k, w in weights.items():
        if k not in model.edges:
            raise AlignmentError(f"arc {k!r} is not a tree edge")
        if w < 0:
            raise DomainError(f"negative weight on {k!r}")
    return {e: float(weights.get(e, 0.0)) for e in model.edges}


@dataclass(frozen=True)
class AlignedNetwork:
    """Disk graph with conductances ``Y(e)``; plug a battery to get a circuit."""

    vertices: tuple
    edges: tuple  # (u, v, w, edge id)

    def local_conductance(self, x: str) -> float:
        return math.fsum(w for u, v, w, _ in self.edges if x in (u, v))

    def plug(self, a: str, b: str) -> Circuit:
        return Circuit(self.vertices, (a, b),
                       [(u, v, w) for u, v, w, _ in self.edges if w > 0])


def aligned_circuit(model: DiskedTreeModel, y) -> AlignedNetwork:
    w = _aligned_weights(model, y)
    return AlignedNetwork(model.disks, tuple((*model.edges[e], w[e], e) for e in model.edges))


def disk_load(model: DiskedTreeModel, y) -> dict:
    """``Y|D``: total weight of the tree edges at every disk."""
    net = aligned_circuit(model, y)
    return {d: net.local_conductance(d) for d in model.disks}


@dataclass
class YZReport:
    edge: str
    r: int
    bound: float
    cap: float
    direct: float
    chain_length: int
    new_disks: int
    exact_degree_bound: float
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return (self.direct <= self.bound + self.tol * max(1.0, self.bound)
                and self.bound <= self.cap + self.tol * max(1.0, self.cap))


def chain_segment_weights(model: DiskedTreeModel, y, level: int, e: str) -> list[float]:
    w = _aligned_weights(model, y)
    return [w[d] for d in image_word(model, e, level)]


def yz_bound(model: DiskedTreeModel, y, r: int, alpha: str, cap: int = DEPTH_CAP) -> YZReport:
    """Harmonic bound on the pulled-back weight of ``alpha`` at level ``r*p``.

    Terms are ``2 * Y|F^l(x)`` over the new disks ``x`` of the chain of
    ``alpha``; the direct value is the series conductance of the chain with
    segment weights ``Y(F^l(segment))``.
    """
    if alpha not in model.edges:
        raise AlignmentError(f"{alpha!r} is not a tree edge")
    if r < 1:
        raise DomainError("depth must be at least 1")
    lvl = subdivide(model, r, cap)
    load = disk_load(model, y)
    new = lvl.new_disks(alpha)
    bound = hsum([2.0 * load[d.image] for d in new]) if new else math.inf
    exact = hsum([d.degree * load[d.image] for d in new]) if new else math.inf
    segs = chain_segment_weights(model, y, lvl.level, alpha)
    direct = 0.0 if min(segs) == 0 else _path_conductance(segs)
    cap_value = 2.0 ** (-(r - 2)) * max(load.values())
    return YZReport(alpha, r, bound, cap_value, direct, lvl.length(alpha), len(new), exact)


def _path_conductance(weights: Sequence[float]) -> float:
    names = [f"x{i}" for i in range(len(weights) + 1)]
    c = Circuit(names, (names[0], names[-1]),
                [(names[i], names[i + 1], w) for i, w in enumerate(weights)])
    return total_conductance(c)


# -- pullback of an aligned WAD to level-1 segments --------------------------------------

def segment_arcs(model: DiskedTreeModel) -> dict:
    """Level-1 segments as arcs ``"<edge>#<i>"`` on the level-1 surface."""
    out = {}
    for e in model.edges:
        for i, (x, y) in enumerate(_segment_ends(model, e)):
            out[f"{e}#{i}"] = Arc(f"{e}#{i}", (x, y))
    return out


def pull_to_segments(model: DiskedTreeModel, y) -> Wad:
    w = _aligned_weights(model, y)
    arcs = segment_arcs(model)
    weights = {k: w[model.substitution[k.split("#")[0]][int(k.split("#")[1])].image]
               for k in arcs}
    return Wad(model.surface(1), arcs, weights)


def natural_certificate(model: DiskedTreeModel, y) -> tuple[Wad, Wad, Certificate]:
    """``(f*Y, Z, cert)`` with ``Z(e)`` the harmonic sum of the segments of ``e``."""
    up = pull_to_segments(model, y)
    groups, z = [], {}
    for e in model.edges:
        segs = tuple((f"{e}#{i}", up[f"{e}#{i}"]) for i in range(len(model.substitution[e])))
        if all(w > 0 for _, w in segs):
            v = hsum(w for _, w in segs)
            z[e] = v
            groups.append(Group(e, v, segs, True))
    return up, model.wad(z), Certificate(tuple(groups))


def arrow_hook(model: DiskedTreeModel):
    target = {e: Arc(e, ends) for e, ends in model.edges.items()}
    return shared_end_hook(segment_arcs(model), target, model.level1_disks())


def loc_cond_comp(model: DiskedTreeModel, y, z) -> list:
    """``(disk, Z|D, deg * Y|F(D), ok)`` for every disk."""
    ly, lz = disk_load(model, y), disk_load(model, z)
    out = []
    for d in model.disks:
        rhs = model.degrees[d] * ly[model.image_of(d)]
        out.append((d, lz[d], rhs, lz[d] <= rhs * (1 + 1e-12) + 1e-12))
    return out


# -- constants of the entropy argument -------------------------------------------------

@dataclass(frozen=True)
class EntropyConstants:
    p: int
    n: int
    q: tuple             # q_0 .. q_max(n, 10p)
    loss_factor: Fraction
    stated_loss_factor: Fraction
    threshold_M: int

    @property
    def q_n(self) -> int:
        return self.q[self.n]

    def threshold_holds(self) -> bool:
        qq = self.q[10 * self.p]
        return self.loss_factor * self.threshold_M + 3 * self.p * qq <= Fraction(self.threshold_M, 2)


def q_sequence(p: int, n: int) -> tuple:
    q = [0]
    for _ in range(n):
        q.append(3 * p * (q[-1] + 2))
    return tuple(q)


def entropy_constants(p: int, n: int) -> EntropyConstants:
    """``q_n`` of the minimal recursion, the loss factor and the threshold ``M(p)``."""
    if p < 2 or n < 0:
        raise DomainError("need p >= 2 and n >= 0")
    q = q_sequence(p, max(n, 10 * p))
    loss = Fraction(3, 8)
    # Smallest M with loss*M + 3p q_{10p} <= M/2.
    m = Fraction(3 * p * q[10 * p]) / (Fraction(1, 2) - loss)
    return EntropyConstants(p, n, q, loss, Fraction(1, 4), int(m))


# -- vertical lift tables ---------------------------------------------------------------

@dataclass
class LiftReport:
    token: str
    steps: list            # per step: sorted tokens
    monotone: bool
    periodic: list
    periodic_ok: bool
    perp: list
    perp_per_disk_ok: bool
    reached_all_perp: bool
    problems: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.monotone and self.periodic_ok and self.perp_per_disk_ok


def lift_vertical(model: DiskedTreeModel, beta: str, n: int) -> LiftReport:
    """Iterate the lift table from ``beta`` for ``n`` steps."""
    table = model.lift_table
    if beta not in table:
        raise DataError(f"token {beta!r} is not in the lift table")
    problems = []
    monotone = True
    steps = [[beta]]
    seen = {beta}
    frontier = {beta}
    for k in range(n):
        nxt = set()
        for t in sorted(frontier):
            for u in table[t].lifts:
                if u not in table:
                    raise DataError(f"lift {u!r} of {t!r} is missing at depth {k + 1}")
                if table[u].intersection > table[t].intersection:
                    monotone = False
                    problems.append(f"intersection grows from {t!r} to {u!r}")
                nxt.add(u)
        frontier = nxt
        seen |= nxt
        steps.append(sorted(nxt))
    g = nx.DiGraph()
    g.add_nodes_from(seen)
    g.add_edges_from((t, u) for t in seen for u in table[t].lifts if u in seen)
    periodic = sorted(t for comp in nx.strongly_connected_components(g) for t in comp
                      if len(comp) > 1 or g.has_edge(t, t))
    periodic_ok = True
    for t in periodic:
        if table[t].intersection != 0:
            periodic_ok = False
            problems.append(f"periodic token {t!r} meets the tree {table[t].intersection} times")
    perp = sorted(t for t, ent in table.items() if ent.intersection == 0)
    per_disk: dict = {}
    for t in perp:
        per_disk[table[t].disk] = per_disk.get(table[t].disk, 0) + 1
    per_disk_ok = all(c <= 2 for d, c in per_disk.items() if d is not None)
    if not per_disk_ok:
        problems.append("more than two perpendicular arcs at one disk")
    return LiftReport(beta, steps, monotone, periodic, periodic_ok, perp, per_disk_ok,
                      set(perp) <= seen, problems)
