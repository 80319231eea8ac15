"""Seeded randomized property suites shared by the CLI and the test-suite.

Every suite returns a :class:`SuiteResult` carrying the number of cases, the
violations found and the worst slack observed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import circuits as C
from . import hubbard as H
from . import wad as W
from .harmonic import hsum, interchange, shifted_lower_bound


@dataclass
class SuiteResult:
    name: str
    lemma: str
    cases: int
    tolerance: float
    violations: list = field(default_factory=list)
    worst: float = -math.inf  # largest (actual - allowed) seen; <= 0 means no violation

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, excess: float, detail=None):
        """``excess`` > 0 marks a violation."""
        self.worst = max(self.worst, excess)
        if excess > 0:
            self.violations.append(detail)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_weights(rng, k, lo=0.1, hi=10.0) -> np.ndarray:
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size=k))


def random_circuit(rng, n_min: int = 2, n_max: int = 9, extra: float = 0.35,
                   prefix: str = "v") -> C.Circuit:
    """Random connected circuit: spanning tree plus random chords."""
    n = int(rng.integers(n_min, n_max + 1))
    names = [f"{prefix}{i}" for i in range(n)]
    edges = []
    for i in range(1, n):
        edges.append((i, int(rng.integers(0, i))))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra:
                edges.append((i, j))
    w = random_weights(rng, len(edges))
    a, b = rng.choice(n, size=2, replace=False)
    return C.Circuit(names, (names[a], names[b]),
                     [(names[i], names[j], float(x)) for (i, j), x in zip(edges, w)])


def _rel(x, y):
    return abs(x - y) / max(abs(x), abs(y), 1e-300)


def series_suite(seed=0, n=500, tol=1e-9) -> SuiteResult:
    res = SuiteResult("series law", "Series Law", n, tol)
    rng = _rng(seed)
    for i in range(n):
        c1, c2 = random_circuit(rng), random_circuit(rng)
        w = C.total_conductance(C.compose(c1, c2, "series"))
        want = hsum([C.total_conductance(c1), C.total_conductance(c2)])
        res.record(_rel(w, want) - tol, (i, w, want))
    return res


def parallel_suite(seed=0, n=500, tol=1e-9) -> SuiteResult:
    res = SuiteResult("parallel law", "Parallel Law", n, tol)
    rng = _rng(seed)
    for i in range(n):
        c1, c2 = random_circuit(rng), random_circuit(rng)
        w = C.total_conductance(C.compose(c1, c2, "parallel"))
        want = C.total_conductance(c1) + C.total_conductance(c2)
        res.record(_rel(w, want) - tol, (i, w, want))
    return res


def random_quotient(rng):
    k = int(rng.integers(2, 5))
    parts = [random_circuit(rng, n_min=3) for _ in range(k)]
    internal = [(i, x) for i, c in enumerate(parts) for x in c.vertices if x not in c.battery]
    rng.shuffle(internal)
    ident, pos, cls = {}, 0, 0
    while pos < len(internal) - 1 and rng.random() < 0.8:
        size = int(rng.integers(2, 4))
        members = internal[pos:pos + size]
        pos += size
        if len(members) >= 2:
            ident[f"q{cls}"] = [(int(i), x) for i, x in members]
            cls += 1
    return parts, ident


def quotient_suite(seed=0, n=500, tol=1e-9) -> SuiteResult:
    res = SuiteResult("quotient law", "quotient", n, tol)
    rng = _rng(seed)
    for i in range(n):
        parts, ident = random_quotient(rng)
        w = C.total_conductance(C.quotient(parts, ident))
        total = math.fsum(C.total_conductance(c) for c in parts)
        res.record((total - w) / total - tol, (i, w, total))
    return res


def energy_suite(seed=0, n=500, tol=1e-9) -> SuiteResult:
    res = SuiteResult("energy equals conductance", "E=W", n, tol)
    rng = _rng(seed)
    for i in range(n):
        eq = C.solve_equilibrium(random_circuit(rng))
        res.record(_rel(eq.energy, eq.current_a) - tol, (i, eq.energy, eq.current_a))
    return res


def local_conductance_suite(seed=0, n=500, tol=1e-9) -> SuiteResult:
    res = SuiteResult("conductance below local conductance", "loc cond", n, tol)
    rng = _rng(seed)
    for i in range(n):
        c = random_circuit(rng)
        w = C.total_conductance(c)
        bound = min(c.local_conductance(x) for x in c.battery)
        res.record((w - bound) / bound - tol, (i, w, bound))
    return res


def random_domination(rng):
    """Circuit ``c`` and ``c'`` with a random set of edges replaced by stronger circuits."""
    c = random_circuit(rng, n_min=2, n_max=7)
    edges = c.edges
    picks = [e for e in edges if rng.random() < 0.5] or [edges[0]]
    repl, new_edges, verts = {}, [e for e in edges if e not in picks], list(c.vertices)
    for k, (x, y, w) in enumerate(picks):
        sub = random_circuit(rng, n_min=2, n_max=5, prefix=f"r{k}_")
        ren = {sub.battery[0]: x, sub.battery[1]: y}
        sub = C.Circuit([ren.get(v, v) for v in sub.vertices], (x, y),
                        [(ren.get(u, u), ren.get(v, v), ww) for u, v, ww in sub.edges])
        factor = w * (1 + rng.random()) / C.total_conductance(sub)
        sub = C.Circuit(sub.vertices, (x, y), [(u, v, ww * factor) for u, v, ww in sub.edges])
        repl[(x, y)] = sub
        verts += [v for v in sub.vertices if v not in (x, y)]
        new_edges += sub.edges
    return C.Circuit(verts, c.battery, new_edges), c, repl


def domination_suite(seed=0, n=500, tol=1e-9) -> SuiteResult:
    res = SuiteResult("domination raises local conductance", "domin and lc", n, tol)
    rng = _rng(seed)
    for i in range(n):
        cp, c, repl = random_domination(rng)
        rep = C.verify_dominates(cp, c, repl, tol)
        if not rep.dominates:
            res.record(1.0, (i, "construction failed to dominate"))
            continue
        worst = max((lc - lp) / lc for _, lp, lc, _ in rep.local)
        res.record(worst - tol, (i, worst))
    return res


def random_tcg(rng, max_cliques: int = 5):
    """Cliques glued one at a time to a random existing vertex."""
    count = 0

    def fresh(k):
        nonlocal count
        out = [f"t{count + i}" for i in range(k)]
        count += k
        return out

    cliques = [fresh(int(rng.integers(2, 5)))]
    for _ in range(int(rng.integers(0, max_cliques))):
        pool = [x for k in cliques for x in k]
        anchor = pool[int(rng.integers(0, len(pool)))]
        cliques.append([anchor] + fresh(int(rng.integers(1, 4))))
    struct = C.TcgStructure(cliques)
    edges = sorted(struct.edge_set(), key=sorted)
    w = random_weights(rng, len(edges))
    verts = list(struct.vertices)
    a, b = rng.choice(len(verts), size=2, replace=False)
    circuit = C.Circuit(verts, (verts[a], verts[b]),
                        [(*sorted(e), float(x)) for e, x in zip(edges, w)])
    return circuit, struct


def tcg_suite(seed=0, n=500, tol=1e-9) -> SuiteResult:
    res = SuiteResult("tree of complete graphs bound", "ec based on trees", n, tol)
    rng = _rng(seed)
    for i in range(n):
        c, s = random_tcg(rng)
        w = C.total_conductance(c)
        bound = C.tcg_bound(c, s)
        d = len(C.tcg_chain(s, *c.battery)) - 1
        top = C.max_local_conductance(c) / d
        res.record(max((w - bound) / bound, (bound - top) / top) - tol, (i, w, bound, top))
    return res


def minus_b_suite(seed=0, n=10_000, tol=1e-12) -> SuiteResult:
    res = SuiteResult("shifted harmonic lower bound", "minus b", n, tol)
    rng = _rng(seed)
    for i in range(n):
        k = int(rng.integers(1, 7))
        xs = random_weights(rng, k, 1e-3, 1e3)
        bs = random_weights(rng, k, 1e-3, 1e3) * (rng.random(k) < 0.7)
        y = hsum(xs + bs) * rng.choice([1.0, rng.random()])
        lower = shifted_lower_bound(y, bs)
        res.record(lower - hsum(xs) - tol, (i, xs.tolist(), bs.tolist(), y))
    return res


def interchange_suite(seed=0, n=10_000, tol=1e-12) -> SuiteResult:
    res = SuiteResult("interchange inequality", "arithmetic", n, tol)
    rng = _rng(seed)
    for i in range(n):
        r, c = (int(x) for x in rng.integers(1, 7, size=2))
        m = random_weights(rng, r * c, 1e-3, 1e3).reshape(r, c)
        m[rng.random((r, c)) < 0.05] = 0.0
        lhs, rhs = interchange(m.tolist())
        res.record(lhs - rhs - tol, (i, m.tolist()))
    return res


def dickson_suite(seed=0, n=1000, dim=5, top=6, max_size=40) -> SuiteResult:
    res = SuiteResult("Dickson minimal elements", "basis", n, 0.0)
    rng = _rng(seed)
    for i in range(n):
        size = int(rng.integers(0, max_size + 1))
        pts = [tuple(int(v) for v in p) for p in rng.integers(0, top + 1, size=(size, dim))]
        got = set(W.dickson_basis(pts))
        brute = {p for p in pts if not any(q != p and all(a <= b for a, b in zip(q, p))
                                           for q in pts)}
        res.record(0.0 if got == brute else 1.0, (i, pts))
    return res


def yz_suite(model: H.DiskedTreeModel, seed=0, n=200, rs=(2, 3, 4), tol=1e-9) -> SuiteResult:
    res = SuiteResult(f"entropy bound chain ({model.name})", "Y-Z", n * len(rs), tol)
    rng = _rng(seed)
    for r in rs:
        for i in range(n):
            y = {e: float(x) for e, x in zip(model.arcs, random_weights(rng, len(model.arcs)))}
            alpha = model.arcs[int(rng.integers(0, len(model.arcs)))]
            rep = H.yz_bound(model, y, r, alpha)
            ex1 = (rep.direct - rep.bound) / max(rep.bound, 1e-300)
            ex2 = (rep.bound - rep.cap) / rep.cap
            res.record(max(ex1, ex2) - tol, (r, i, rep))
    return res
