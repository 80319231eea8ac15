"""Finite electrical networks with a two-pole battery.

A :class:`Circuit` is an immutable connected weighted graph with opaque string
vertex ids and a battery ``(a, b)``.  Parallel edges are merged on
construction (their conductances add).  The normalized equilibrium potential
(``U(a) = 1``, ``U(b) = 0``) is the solution of the graph-Laplacian system
restricted to the internal vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import DomainError, NumericalError, PreconditionError, StructuralError
from .harmonic import hsum

DENSE_LIMIT = 2000
DEFAULT_TOL = 1e-9


class Circuit:
    """Connected graph, battery poles and strictly positive conductances."""

    __slots__ = ("vertices", "battery", "_index", "_u", "_v", "_w", "_local")

    def __init__(self, vertices: Iterable[str], battery: Sequence[str],
                 edges: Iterable):
        vertices = tuple(vertices)
        index = {x: i for i, x in enumerate(vertices)}
        if len(index) != len(vertices):
            raise StructuralError("duplicate vertex ids")
        us, vs, ws = [], [], []
        for e in edges:
            if isinstance(e, Mapping):
                x, y, w = e["u"], e["v"], e["w"]
            else:
                x, y, w = e
            try:
                us.append(index[x])
                vs.append(index[y])
            except KeyError as exc:
                raise StructuralError(f"edge endpoint {exc.args[0]!r} is not a vertex") from None
            ws.append(w)
        self._setup(vertices, index, battery,
                    np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64),
                    np.asarray(ws, dtype=float))

    @classmethod
    def from_arrays(cls, vertices: Sequence[str], battery: Sequence[str],
                    u, v, w) -> "Circuit":
        """Build from integer endpoint arrays indexing ``vertices`` (fast path)."""
        self = cls.__new__(cls)
        vertices = tuple(vertices)
        index = {x: i for i, x in enumerate(vertices)}
        if len(index) != len(vertices):
            raise StructuralError("duplicate vertex ids")
        self._setup(vertices, index, battery, np.asarray(u, dtype=np.int64),
                    np.asarray(v, dtype=np.int64), np.asarray(w, dtype=float))
        return self

    def _setup(self, vertices, index, battery, u, v, w):
        if len(battery) != 2:
            raise StructuralError("battery must be a pair of vertex ids")
        a, b = battery
        if a == b:
            raise StructuralError("battery poles must be distinct")
        if a not in index or b not in index:
            raise StructuralError("battery poles must be vertices")
        if np.any(u == v):
            raise StructuralError("self-loops are not allowed")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise StructuralError("edge conductances must be finite and strictly positive")
        n = len(vertices)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        key = lo * n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        merged = np.bincount(inv, weights=w, minlength=len(uniq)) if len(uniq) else np.zeros(0)
        self.vertices = vertices
        self.battery = (a, b)
        self._index = index
        self._u = uniq // n
        self._v = uniq % n
        self._w = merged
        for arr in (self._u, self._v, self._w):
            arr.flags.writeable = False
        local = np.bincount(self._u, weights=self._w, minlength=n) + \
            np.bincount(self._v, weights=self._w, minlength=n)
        local.flags.writeable = False
        self._local = local
        ncomp = _components(n, self._u, self._v)
        if ncomp != 1:
            raise StructuralError(f"circuit graph is disconnected ({ncomp} components)")

    # -- accessors -----------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.vertices)

    def index(self, x: str) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise DomainError(f"unknown vertex {x!r}") from None

    def __contains__(self, x) -> bool:
        return x in self._index

    @property
    def edges(self) -> list[tuple[str, str, float]]:
        V = self.vertices
        return [(V[i], V[j], float(w)) for i, j, w in zip(self._u, self._v, self._w)]

    def edge_arrays(self):
        return self._u, self._v, self._w

    def weight(self, x: str, y: str) -> float:
        """Conductance between ``x`` and ``y`` (0 if not adjacent)."""
        i, j = sorted((self.index(x), self.index(y)))
        mask = (self._u == i) & (self._v == j)
        return float(self._w[mask].sum())

    def local_conductance(self, x: str) -> float:
        return float(self._local[self.index(x)])

    def laplacian(self) -> sp.csr_matrix:
        n = self.n
        u, v, w = self._u, self._v, self._w
        off = sp.coo_matrix((np.concatenate([-w, -w]),
                             (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))
        return (off + sp.diags(self._local)).tocsr()

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "battery": list(self.battery),
                "edges": [{"u": x, "v": y, "w": w} for x, y, w in self.edges]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Circuit":
        try:
            return cls(data["vertices"], data["battery"], data["edges"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed circuit description: {exc}") from None

    def with_battery(self, a: str, b: str) -> "Circuit":
        return Circuit.from_arrays(self.vertices, (a, b), self._u, self._v, self._w)

    def __repr__(self):
        return f"Circuit(n={self.n}, edges={len(self._w)}, battery={self.battery})"


def _components(n: int, u: np.ndarray, v: np.ndarray) -> int:
    if n > 256:
        adj = sp.coo_matrix((np.ones(len(u)), (u, v)), shape=(n, n))
        return csgraph.connected_components(adj, directed=False)[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    count = n
    for i, j in zip(u.tolist(), v.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            count -= 1
    return count


def dense_laplacian(circuit: "Circuit") -> np.ndarray:
    n = circuit.n
    u, v, w = circuit.edge_arrays()
    L = np.zeros((n, n))
    np.add.at(L, (u, v), -w)
    np.add.at(L, (v, u), -w)
    L[np.diag_indices(n)] = circuit._local
    return L


@dataclass(frozen=True)
class Potential:
    """Vertex potentials of a circuit; normalized so that U(a)=1, U(b)=0."""

    vertices: tuple
    values: np.ndarray = field(repr=False)
    index: Mapping = field(default=None, repr=False, compare=False)

    def __getitem__(self, x):
        if self.index is None:
            return float(self.values[self.vertices.index(x)])
        return float(self.values[self.index[x]])

    def as_dict(self) -> dict:
        return {x: float(u) for x, u in zip(self.vertices, self.values)}

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class Equilibrium:
    potential: Potential
    current_a: float  # boundary of the current at a
    current_b: float  # boundary of the current at b
    energy: float
    residual: float
    method: str

    @property
    def conductance(self) -> float:
        return self.current_a


def _solve_dense(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        c = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        cond = float(np.linalg.cond(M))
        raise NumericalError(f"Laplacian block is not positive definite (cond={cond:.3g})",
                             condition=cond) from None
    return scipy.linalg.cho_solve(c, rhs, check_finite=False)


def _solve_sparse(A: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    try:
        lu = spla.splu(A.tocsc(), permc_spec="COLAMD")
    except RuntimeError as exc:
        raise NumericalError(f"sparse factorization failed: {exc}") from None
    return lu.solve(rhs)


def _solve_cg(A: sp.csr_matrix, rhs: np.ndarray, x0, tol: float) -> np.ndarray:
    d = A.diagonal()
    precond = spla.LinearOperator(A.shape, matvec=lambda r: r / d)
    x, info = spla.cg(A, rhs, x0=x0, rtol=min(tol, 1e-12) * 1e-2, atol=0.0,
                      maxiter=50 * A.shape[0] + 1000, M=precond)
    if info != 0:
        raise NumericalError(f"conjugate gradient did not converge (info={info})")
    return x


def solve_equilibrium(circuit: Circuit, *, method: str = "auto", initial=None,
                      tol: float = DEFAULT_TOL) -> Equilibrium:
    """Normalized equilibrium of ``circuit``.

    ``method`` is ``"dense"`` (Cholesky), ``"sparse"`` (sparse LU) or ``"cg"``
    (preconditioned conjugate gradient started from ``initial``, a mapping of
    vertex potentials).  ``"auto"`` picks dense below ``DENSE_LIMIT`` vertices
    and sparse LU above.
    """
    n = circuit.n
    ia, ib = circuit.index(circuit.battery[0]), circuit.index(circuit.battery[1])
    u, v, w = circuit.edge_arrays()
    values = np.zeros(n)
    values[ia] = 1.0
    internal = np.ones(n, dtype=bool)
    internal[[ia, ib]] = False
    idx = np.flatnonzero(internal)
    residual = 0.0
    if method == "auto":
        method = "dense" if n < DENSE_LIMIT else "sparse"
    if len(idx):
        if method == "dense":
            L = dense_laplacian(circuit)
            A = L[np.ix_(idx, idx)]
            # U(a) = 1 moves the a-column to the right-hand side.
            rhs = -L[idx, ia]
            x = _solve_dense(A, rhs)
        elif method in ("sparse", "cg"):
            L = circuit.laplacian()
            A = L[idx][:, idx]
            rhs = -np.asarray(L[idx][:, [ia]].todense()).ravel()
            if method == "sparse":
                x = _solve_sparse(A, rhs)
            else:
                x0 = None
                if initial is not None:
                    x0 = np.array([float(initial[circuit.vertices[i]]) for i in idx])
                x = _solve_cg(A, rhs, x0, tol)
        else:
            raise DomainError(f"unknown solver method {method!r}")
        r = A @ x - rhs
        scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
        residual = float(np.abs(r).max(initial=0.0)) / scale
        if not np.all(np.isfinite(x)) or residual > tol:
            dense = A.toarray() if sp.issparse(A) else A
            cond = float(np.linalg.cond(dense)) if len(idx) < DENSE_LIMIT else None
            raise NumericalError(f"equilibrium residual {residual:.3g} exceeds {tol:.3g}"
                                 f" (condition {cond})", condition=cond)
        values[idx] = x
    du = values[u] - values[v]
    # d I(x) = sum over neighbours y of W[x,y] (U(x) - U(y)).
    flow = w * du
    boundary = np.bincount(u, weights=flow, minlength=n) - np.bincount(v, weights=flow, minlength=n)
    energy = float(np.sum(w * du * du))
    values.flags.writeable = False
    pot = Potential(circuit.vertices, values, circuit._index)
    return Equilibrium(pot, float(boundary[ia]), float(boundary[ib]), energy, residual, method)


def equilibrium(circuit: Circuit, **kw) -> Potential:
    return solve_equilibrium(circuit, **kw).potential


def total_conductance(circuit: Circuit, **kw) -> float:
    """Total current leaving ``a`` at the normalized equilibrium."""
    return solve_equilibrium(circuit, **kw).current_a


def current_boundary(circuit: Circuit, potential: Potential) -> dict:
    """Boundary of the current forced by ``potential``, per vertex."""
    u, v, w = circuit.edge_arrays()
    vals = np.asarray(potential.values)
    flow = w * (vals[u] - vals[v])
    n = circuit.n
    bd = np.bincount(u, weights=flow, minlength=n) - np.bincount(v, weights=flow, minlength=n)
    return dict(zip(circuit.vertices, bd.tolist()))


def energy(circuit: Circuit, potential: Mapping) -> float:
    u, v, w = circuit.edge_arrays()
    vals = np.array([float(potential[x]) for x in circuit.vertices])
    return float(np.sum(w * (vals[u] - vals[v]) ** 2))


def local_conductance(circuit: Circuit, x: str) -> float:
    """Sum of the conductances of the edges at ``x``."""
    return circuit.local_conductance(x)


# -- composition ------------------------------------------------------------

def compose(c1: Circuit, c2: Circuit, mode: str) -> Circuit:
    """Series (``b1 = a2``) or parallel (``a1 = a2``, ``b1 = b2``) connection.

    Vertex ids are renamed ``"1:x"`` / ``"2:x"``; merged poles keep the name
    of the first circuit's vertex.
    """
    if mode not in ("series", "parallel"):
        raise DomainError(f"mode must be 'series' or 'parallel', not {mode!r}")
    a1, b1 = c1.battery
    a2, b2 = c2.battery
    ren1 = {x: f"1:{x}" for x in c1.vertices}
    ren2 = {x: f"2:{x}" for x in c2.vertices}
    if mode == "series":
        ren2[a2] = ren1[b1]
        battery = (ren1[a1], ren2[b2])
    else:
        ren2[a2] = ren1[a1]
        ren2[b2] = ren1[b1]
        battery = (ren1[a1], ren1[b1])
    verts = list(ren1.values()) + [y for x, y in ren2.items() if y not in ren1.values()]
    edges = [(ren1[x], ren1[y], w) for x, y, w in c1.edges]
    edges += [(ren2[x], ren2[y], w) for x, y, w in c2.edges]
    return Circuit(verts, battery, edges)


def quotient(parts: Sequence[Circuit],
             identifications: Mapping[str, Iterable[tuple[int, str]]] | None = None) -> Circuit:
    """Glue ``parts`` along a vertex partition.

    ``identifications`` maps a new vertex id to the ``(part index, vertex)``
    pairs merged into it.  All ``a`` poles are merged into ``"@a"`` and all
    ``b`` poles into ``"@b"``; any other vertex not mentioned keeps the id
    ``"<part>:<vertex>"``.  Parallel edges created by the gluing are merged and
    edges collapsed to a point are dropped.
    """
    if not parts:
        raise PreconditionError("quotient of an empty family")
    cls = {}
    for i, c in enumerate(parts):
        cls[(i, c.battery[0])] = "@a"
        cls[(i, c.battery[1])] = "@b"
    for new, members in (identifications or {}).items():
        members = [(int(i), x) for i, x in members]
        poles = {cls.get(m) for m in members} & {"@a", "@b"}
        for i, x in members:
            if i < 0 or i >= len(parts) or x not in parts[i]:
                raise PreconditionError(f"identification refers to unknown vertex {(i, x)!r}")
        if poles:
            if len(poles) > 1 or any(cls.get(m) not in poles for m in members):
                raise PreconditionError(
                    f"class {new!r} merges an internal vertex with a battery pole")
            continue
        if new in ("@a", "@b"):
            raise PreconditionError("class ids '@a' and '@b' are reserved")
        for m in members:
            if m in cls:
                raise PreconditionError(f"vertex {m!r} assigned to two classes")
            cls[m] = new
    verts: dict[str, None] = {"@a": None, "@b": None}
    edges = []
    for i, c in enumerate(parts):
        name = {x: cls.get((i, x), f"{i}:{x}") for x in c.vertices}
        for x in c.vertices:
            verts.setdefault(name[x], None)
        for x, y, w in c.edges:
            if name[x] != name[y]:
                edges.append((name[x], name[y], w))
    return Circuit(list(verts), ("@a", "@b"), edges)


# -- domination -------------------------------------------------------------

@dataclass
class DominationReport:
    per_edge: list = field(default_factory=list)     # (u, v, W(C'(e)), W(e), ok)
    local: list = field(default_factory=list)        # (x, W'|x, W|x, ok)
    dominates: bool = True
    local_ok: bool = True


def verify_dominates(c_prime: Circuit, c: Circuit,
                     replacements: Mapping[tuple[str, str], Circuit] | None = None,
                     tol: float = DEFAULT_TOL) -> DominationReport:
    """Check ``C' -o C`` edge by edge.

    ``replacements`` maps an edge ``(u, v)`` of ``c`` to the circuit that
    replaces it; its battery must be ``{u, v}``.  Edges without a replacement
    are compared with the same edge of ``c_prime``.  When domination holds the
    local conductances of ``c_prime`` are also compared at every vertex of ``c``.
    """
    replacements = dict(replacements or {})
    rep = {}
    for (x, y), sub in replacements.items():
        if x not in c or y not in c or c.weight(x, y) == 0:
            raise StructuralError(f"replacement for {(x, y)!r}, which is not an edge")
        if set(sub.battery) != {x, y}:
            raise StructuralError(f"replacement for {(x, y)!r} is attached at {sub.battery!r}")
        rep[frozenset((x, y))] = sub
    # Expected weighted edge set of c_prime.
    expected: dict[frozenset, float] = {}
    for x, y, w in c.edges:
        if frozenset((x, y)) in rep:
            continue
        expected[frozenset((x, y))] = None  # weight free, compared below
    for sub in rep.values():
        for x, y, w in sub.edges:
            k = frozenset((x, y))
            if k in expected and expected[k] is None:
                raise StructuralError(f"replacement edge {(x, y)!r} duplicates an edge of C")
            expected[k] = (expected.get(k) or 0.0) + w
    actual = {frozenset((x, y)): w for x, y, w in c_prime.edges}
    if set(actual) != set(expected):
        raise StructuralError("C' is not C with the declared edges replaced")
    for k, w in expected.items():
        if w is not None and not math.isclose(actual[k], w, rel_tol=1e-12, abs_tol=1e-15):
            raise StructuralError(f"edge {tuple(k)!r} of C' does not match its replacement")
    for x in c.vertices:
        if x not in c_prime:
            raise StructuralError(f"vertex {x!r} of C is missing from C'")

    report = DominationReport()
    for x, y, w in c.edges:
        sub = rep.get(frozenset((x, y)))
        wr = total_conductance(sub) if sub is not None else actual[frozenset((x, y))]
        ok = wr >= w - tol * max(1.0, w)
        report.per_edge.append((x, y, wr, w, ok))
        report.dominates &= ok
    if report.dominates:
        for x in c.vertices:
            lp, lc = c_prime.local_conductance(x), c.local_conductance(x)
            ok = lp >= lc - tol * max(1.0, lc)
            report.local.append((x, lp, lc, ok))
            report.local_ok &= ok
    return report


# -- trees of complete graphs -----------------------------------------------

class TcgStructure:
    """Cliques glued along single vertices in a tree pattern."""

    def __init__(self, cliques: Iterable[Iterable[str]]):
        self.cliques = tuple(tuple(dict.fromkeys(k)) for k in cliques)
        if not self.cliques:
            raise StructuralError("a TCG needs at least one clique")
        if any(len(k) < 2 for k in self.cliques):
            raise StructuralError("every clique needs at least two vertices")
        # Clique/vertex incidence graph: K<i> -- vertex.
        self._adj: dict = {}
        for i, k in enumerate(self.cliques):
            node = ("K", i)
            self._adj.setdefault(node, set())
            for x in k:
                self._adj[node].add(("V", x))
                self._adj.setdefault(("V", x), set()).add(node)
        nodes = len(self._adj)
        links = sum(len(k) for k in self.cliques)
        if links != nodes - 1 or not self._connected():
            raise StructuralError("clique incidence structure is not a tree")
        self.vertices = tuple(x for kind, x in self._adj if kind == "V")

    def _connected(self) -> bool:
        start = next(iter(self._adj))
        seen, stack = {start}, [start]
        while stack:
            for m in self._adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return len(seen) == len(self._adj)

    @property
    def gluing(self) -> list[tuple[int, int, str]]:
        """Pairs of cliques sharing a vertex, as ``(i, j, vertex)``."""
        out = []
        for x in self.vertices:
            ks = sorted(i for _, i in self._adj[("V", x)])
            # A shared vertex joins all of its cliques; list a spanning star.
            out.extend((ks[0], j, x) for j in ks[1:])
        return out

    def edge_set(self) -> set[frozenset]:
        return {frozenset((x, y)) for k in self.cliques
                for i, x in enumerate(k) for y in k[i + 1:]}

    def path(self, x: str, y: str) -> list:
        src, dst = ("V", x), ("V", y)
        if src not in self._adj or dst not in self._adj:
            raise DomainError(f"vertices {x!r}, {y!r} must belong to the TCG")
        prev = {src: None}
        queue = [src]
        for node in queue:
            if node == dst:
                break
            for m in sorted(self._adj[node], key=repr):
                if m not in prev:
                    prev[m] = node
                    queue.append(m)
        out, node = [], dst
        while node is not None:
            out.append(node)
            node = prev[node]
        return out[::-1]

    @classmethod
    def from_json(cls, data) -> "TcgStructure":
        cliques = data["cliques"] if isinstance(data, Mapping) else data
        return cls(cliques)


def tcg_chain(structure: TcgStructure, x: str, y: str) -> list[str]:
    """Chain ``(x, x_1, ..., y)`` of vertices separating ``x`` from ``y``."""
    if x == y:
        raise DomainError("chain endpoints must differ")
    return [v for kind, v in structure.path(x, y) if kind == "V"]


def check_tcg_matches(circuit: Circuit, structure: TcgStructure) -> None:
    ours = {frozenset((x, y)) for x, y, _ in circuit.edges}
    if ours != structure.edge_set() or set(circuit.vertices) != set(structure.vertices):
        raise StructuralError("circuit graph does not match the TCG structure")


def tcg_bound(circuit: Circuit, structure: TcgStructure) -> float:
    """Harmonic sum of local conductances along the battery chain, ``x_1..x_d``."""
    check_tcg_matches(circuit, structure)
    chain = tcg_chain(structure, *circuit.battery)
    return hsum(circuit.local_conductance(x) for x in chain[1:])


def max_local_conductance(circuit: Circuit) -> float:
    return float(max(circuit.local_conductance(x) for x in circuit.vertices))
