"""Weighted arc diagrams over an abstract surface signature.

Arcs are opaque tokens with a declared pair of ends; which pairs of arcs
cross is declared data as well.  Nothing here computes homotopy classes, so
the domination relation is checked from explicit certificates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (DomainError, IncompatibilityError, MappingError, NumericalError,
                     PreconditionError, StructuralError)
from .harmonic import hsum

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Surface:
    ends: frozenset
    proper: frozenset
    chi: int

    def __post_init__(self):
        object.__setattr__(self, "ends", frozenset(self.ends))
        object.__setattr__(self, "proper", frozenset(self.proper))
        if not self.proper <= self.ends:
            raise StructuralError("proper ends must be a subset of the ends")
        if int(self.chi) != self.chi or self.chi >= 0:
            raise StructuralError(f"Euler characteristic must be a negative integer, got {self.chi!r}")
        object.__setattr__(self, "chi", int(self.chi))

    @property
    def max_support(self) -> int:
        return 3 * abs(self.chi)

    def kind(self, arc: "Arc") -> str:
        n = sum(e in self.proper for e in arc.ends)
        return {2: "horizontal", 1: "vertical"}.get(n, "other")

    def to_json(self) -> dict:
        return {"ends": sorted(self.ends), "proper": sorted(self.proper), "chi": self.chi}

    @classmethod
    def from_json(cls, d: Mapping) -> "Surface":
        return cls(frozenset(d["ends"]), frozenset(d.get("proper", [])), d["chi"])


@dataclass(frozen=True)
class Arc:
    id: str
    ends: tuple

    def __post_init__(self):
        ends = tuple(sorted(self.ends))
        if len(ends) != 2:
            raise StructuralError(f"arc {self.id!r} must have exactly two ends")
        object.__setattr__(self, "ends", ends)


def _pairs(crossings: Iterable) -> frozenset:
    out = set()
    for pair in crossings:
        x, y = pair
        if x == y:
            raise StructuralError(f"arc {x!r} declared to cross itself")
        out.add(frozenset((x, y)))
    return frozenset(out)


class Wad:
    """Positive weights on a pairwise non-crossing family of arcs.

    ``arcs`` is the catalog of known arcs (supported or not) and
    ``crossings`` the declared symmetric crossing relation on their ids.
    Zero weights are dropped from the support.
    """

    __slots__ = ("surface", "arcs", "weights", "crossings")

    def __init__(self, surface: Surface, arcs: Mapping[str, Arc] | Iterable[Arc],
                 weights: Mapping[str, float], crossings: Iterable = ()):
        if not isinstance(arcs, Mapping):
            arcs = {a.id: a for a in arcs}
        self.surface = surface
        self.arcs = dict(arcs)
        self.crossings = _pairs(crossings)
        for a in self.arcs.values():
            bad = set(a.ends) - surface.ends
            if bad:
                raise StructuralError(f"arc {a.id!r} ends at unknown end(s) {sorted(bad)}")
        for pair in self.crossings:
            for x in pair:
                if x not in self.arcs:
                    raise StructuralError(f"crossing declared for unknown arc {x!r}")
        w = {}
        for k, x in weights.items():
            x = float(x)
            if not (x >= 0 and math.isfinite(x)):
                raise DomainError(f"weight of {k!r} must be finite and nonnegative, got {x!r}")
            if k not in self.arcs:
                raise MappingError(f"arc {k!r} is not in the catalog")
            if x > 0:
                w[k] = x
        self.weights = dict(sorted(w.items()))
        for x, y in combinations(self.weights, 2):
            if frozenset((x, y)) in self.crossings:
                raise StructuralError(f"supported arcs {x!r} and {y!r} cross")
        if len(self.weights) > surface.max_support:
            raise StructuralError(
                f"support has {len(self.weights)} arcs, above 3|chi| = {surface.max_support}")

    # -- basic queries --------------------------------------------------
    @property
    def support(self) -> tuple:
        return tuple(self.weights)

    def __getitem__(self, arc_id) -> float:
        return self.weights.get(arc_id, 0.0)

    def crosses(self, x, y) -> bool:
        return frozenset((x, y)) in self.crossings

    def kind(self, arc_id) -> str:
        return self.surface.kind(self.arcs[arc_id])

    def replace(self, weights: Mapping[str, float]) -> "Wad":
        return Wad(self.surface, self.arcs, weights, self.crossings)

    def __eq__(self, other):
        return (isinstance(other, Wad) and self.surface == other.surface
                and self.weights == other.weights)

    def __repr__(self):
        terms = " + ".join(f"{w:g}*{k}" for k, w in self.weights.items()) or "0"
        return f"Wad({terms})"

    def to_json(self) -> dict:
        return {"surface": self.surface.to_json(),
                "arcs": [{"id": a.id, "ends": list(a.ends), "w": self[a.id]}
                         for a in self.arcs.values()],
                "crossings": sorted(sorted(p) for p in self.crossings)}

    @classmethod
    def from_json(cls, d: Mapping) -> "Wad":
        try:
            surface = Surface.from_json(d["surface"])
            arcs = [Arc(a["id"], tuple(a["ends"])) for a in d["arcs"]]
            weights = {a["id"]: a.get("w", 0.0) for a in d["arcs"]}
            return cls(surface, arcs, weights, [tuple(p) for p in d.get("crossings", [])])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed WAD description: {exc!r}") from None


def _merged(x: Wad, y: Wad):
    if x.surface != y.surface:
        raise IncompatibilityError("WADs live on different surfaces")
    arcs = dict(x.arcs)
    for k, a in y.arcs.items():
        if k in arcs and arcs[k] != a:
            raise IncompatibilityError(f"arc {k!r} has conflicting ends")
        arcs[k] = a
    return arcs, x.crossings | y.crossings


def add(x: Wad, y: Wad) -> Wad:
    arcs, crossings = _merged(x, y)
    for p in x.support:
        for q in y.support:
            if frozenset((p, q)) in crossings:
                raise IncompatibilityError(f"supports cross at {p!r} / {q!r}")
    w = dict(x.weights)
    for k, v in y.weights.items():
        w[k] = w.get(k, 0.0) + v
    return Wad(x.surface, arcs, w, crossings)


def sub(x: Wad, y: Wad) -> Wad:
    """``(X - Y)(a) = max(X(a) - Y(a), 0)``."""
    arcs, crossings = _merged(x, y)
    return Wad(x.surface, arcs, {k: max(v - y[k], 0.0) for k, v in x.weights.items()}, crossings)


def scalar_sub(x: Wad, c: float) -> Wad:
    return x.replace({k: max(v - c, 0.0) for k, v in x.weights.items()})


def scale(x: Wad, c: float) -> Wad:
    if c < 0:
        raise DomainError("scale factor must be nonnegative")
    return x.replace({k: c * v for k, v in x.weights.items()})


def norm1(x: Wad) -> float:
    return math.fsum(x.weights.values())


def norm_inf(x: Wad) -> float:
    return max(x.weights.values(), default=0.0)


def restrict(x: Wad, part: str) -> Wad:
    """Keep horizontal (``"h"``), vertical (``"v"``) or both (``"vh"``) arcs."""
    kinds = {"h": {"horizontal"}, "v": {"vertical"}, "vh": {"horizontal", "vertical"},
             "hv": {"horizontal", "vertical"}}
    if part not in kinds:
        raise DomainError(f"unknown restriction {part!r}")
    return x.replace({k: v for k, v in x.weights.items() if x.kind(k) in kinds[part]})


_OPS = {"add": add, "sub": sub, "scalar_sub": scalar_sub, "norm1": norm1,
        "norm_inf": norm_inf, "restrict": restrict, "scale": scale}


def wad_arith(op: str, *args):
    try:
        fn = _OPS[op]
    except KeyError:
        raise DomainError(f"unknown WAD operation {op!r}") from None
    return fn(*args)


# -- pullbacks ----------------------------------------------------------------

@dataclass(frozen=True)
class ArcMap:
    """Correspondence from upstairs arcs to downstairs arc ids.

    ``lifts`` optionally declares, per downstairs arc, how many upstairs arcs
    map onto it; the declaration is checked when pulling back.
    """

    surface: Surface
    arcs: Mapping[str, Arc]
    image: Mapping[str, str]
    crossings: frozenset = frozenset()
    lifts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        missing = set(self.arcs) - set(self.image)
        if missing:
            raise MappingError(f"no image declared for {sorted(missing)}")
        counts: dict = {}
        for k in self.arcs:
            counts[self.image[k]] = counts.get(self.image[k], 0) + 1
        for d, n in self.lifts.items():
            if counts.get(d, 0) != n:
                raise MappingError(f"arc {d!r} declares {n} lifts, found {counts.get(d, 0)}")

    @classmethod
    def identity(cls, w: Wad) -> "ArcMap":
        return cls(w.surface, dict(w.arcs), {k: k for k in w.arcs}, w.crossings)

    @classmethod
    def from_json(cls, d: Mapping) -> "ArcMap":
        arcs = {a["id"]: Arc(a["id"], tuple(a["ends"])) for a in d["arcs"]}
        image = {a["id"]: a["image"] for a in d["arcs"]}
        return cls(Surface.from_json(d["surface"]), arcs, image,
                   _pairs(tuple(p) for p in d.get("crossings", [])), dict(d.get("lifts", {})))


def pullback(y: Wad, m: ArcMap) -> Wad:
    """Upstairs WAD with weight ``Y(image(a))`` on every upstairs arc ``a``."""
    w = {}
    for k, img in m.image.items():
        if img not in y.arcs:
            raise MappingError(f"image {img!r} of {k!r} is not a downstairs arc")
        w[k] = y[img]
    return Wad(m.surface, m.arcs, w, m.crossings)


def compose_maps(upper: ArcMap, lower: ArcMap) -> ArcMap:
    """Composite correspondence: ``upper`` lands on the source arcs of ``lower``."""
    image = {}
    for k, mid in upper.image.items():
        if mid not in lower.image:
            raise MappingError(f"image {mid!r} of {k!r} is not in the next correspondence")
        image[k] = lower.image[mid]
    return ArcMap(upper.surface, upper.arcs, image, upper.crossings)


# -- domination certificates ----------------------------------------------------

@dataclass(frozen=True)
class Group:
    beta: str
    v: float
    segments: tuple  # ((alpha, w), ...)
    arrow: bool = False

    @property
    def alphas(self) -> tuple:
        return tuple(a for a, _ in self.segments)


@dataclass(frozen=True)
class Certificate:
    groups: tuple = ()

    @classmethod
    def from_json(cls, d: Mapping) -> "Certificate":
        try:
            gs = tuple(Group(g["beta"], float(g["v"]),
                             tuple((s["alpha"], float(s["w"])) for s in g["segments"]),
                             bool(g.get("arrow", False)))
                       for g in d["groups"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed certificate: {exc!r}") from None
        return cls(gs)

    def to_json(self) -> dict:
        return {"groups": [{"beta": g.beta, "v": g.v, "arrow": g.arrow,
                            "segments": [{"alpha": a, "w": w} for a, w in g.segments]}
                           for g in self.groups]}


@dataclass
class DominationReport:
    passed: bool
    violations: list = field(default_factory=list)  # (clause, message)
    checks: list = field(default_factory=list)      # (clause, subject, expected, actual, ok)

    @property
    def clauses(self) -> set:
        return {c for c, _ in self.violations}


ArrowHook = Callable[[Group], "str | None"]


def _close(x: float, y: float, tol: float) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def verify_domination(x: Wad, y: Wad, cert: Certificate, tol: float = DEFAULT_TOL,
                      arrow_hook: ArrowHook | None = None) -> DominationReport:
    """Check the certificate for ``X -o Y`` clause by clause.

    (a) capacity: summed segment weights per arc stay within ``X``; certificate
        arcs lie in the support of ``X``.  (b) the ``v`` per target arc add up
    to ``Y``.  (c) each group's harmonic sum reaches its ``v``.  (d) each group
    declares its arrow witness (and passes ``arrow_hook`` when given).
    """
    rep = DominationReport(True)

    def fail(clause, msg):
        rep.violations.append((clause, msg))
        rep.passed = False

    for i, g in enumerate(cert.groups):
        if not g.segments:
            fail("c", f"group {i} has no segments")
        if not g.v > 0 or any(not w > 0 for _, w in g.segments):
            fail("c", f"group {i} has a non-positive weight")

    used: dict = {}
    for g in cert.groups:
        for a, w in g.segments:
            used.setdefault(a, []).append(w)
    for a, ws in used.items():
        cap = x[a]
        total = math.fsum(ws)
        ok = total <= cap + tol * max(1.0, cap)
        rep.checks.append(("a", a, cap, total, ok))
        if a not in x.weights:
            fail("a", f"arc {a!r} is not in the support of X")
            crossing = [s for s in x.support if x.crosses(a, s)]
            if crossing:
                fail("a", f"arc {a!r} crosses supported arc(s) {crossing}")
        elif not ok:
            fail("a", f"arc {a!r} is used with weight {total!r} > X = {cap!r}")
    for p, q in combinations(sorted(used), 2):
        if x.crosses(p, q):
            fail("a", f"certificate arcs {p!r} and {q!r} cross")

    targets = set(y.support) | {g.beta for g in cert.groups}
    for b in sorted(targets):
        s = math.fsum(g.v for g in cert.groups if g.beta == b)
        ok = _close(s, y[b], tol)
        rep.checks.append(("b", b, y[b], s, ok))
        if not ok:
            fail("b", f"group values for {b!r} sum to {s!r}, Y = {y[b]!r}")

    for i, g in enumerate(cert.groups):
        if not g.segments or any(not w > 0 for _, w in g.segments):
            continue
        h = hsum(w for _, w in g.segments)
        ok = h >= g.v - tol * max(1.0, g.v)
        rep.checks.append(("c", f"group {i}", g.v, h, ok))
        if not ok:
            fail("c", f"group {i}: harmonic sum {h!r} < v = {g.v!r}")

    for i, g in enumerate(cert.groups):
        if not g.arrow:
            fail("d", f"group {i} declares no arrow witness")
        elif arrow_hook is not None:
            msg = arrow_hook(g)
            if msg:
                fail("d", f"group {i}: {msg}")
    return rep


def shared_end_hook(upstairs: Mapping[str, Arc], target: Mapping[str, Arc],
                    improper: Iterable[str], end_image: Mapping[str, str] | None = None
                    ) -> ArrowHook:
    """Arrow consistency hook for model-derived surface pairs.

    Consecutive itinerary arcs must share an end listed in ``improper``; the
    first and last arcs must reach the two ends of the target arc (after
    applying ``end_image`` to upstairs ends).
    """
    improper = frozenset(improper)
    end_image = dict(end_image or {})

    def hook(g: Group):
        try:
            arcs = [upstairs[a] for a in g.alphas]
            beta = target[g.beta]
        except KeyError as exc:
            return f"unknown arc {exc.args[0]!r} in itinerary"
        for p, q in zip(arcs, arcs[1:]):
            if not (set(p.ends) & set(q.ends) & improper):
                return f"{p.id!r} and {q.id!r} share no non-properly embedded component"
        img = lambda e: end_image.get(e, e)  # noqa: E731
        first = {img(e) for e in arcs[0].ends}
        last = {img(e) for e in arcs[-1].ends}
        b0, b1 = beta.ends
        if not ((b0 in first and b1 in last) or (b1 in first and b0 in last)):
            return f"itinerary does not join the ends of {g.beta!r}"
        return None

    return hook


def lower_target(y: Wad, y_new: Wad, cert: Certificate) -> Certificate:
    """Rescale group values so that ``cert`` targets ``y_new <= y``."""
    groups = []
    for g in cert.groups:
        old, new = y[g.beta], y_new[g.beta]
        if new > old * (1 + 1e-15):
            raise DomainError(f"target weight of {g.beta!r} increased")
        if new > 0:
            groups.append(Group(g.beta, g.v * new / old, g.segments, g.arrow))
    return Certificate(tuple(groups))


def strip_buffer(x: Wad, b: Wad, y: Wad, cert: Certificate,
                 tol: float = DEFAULT_TOL) -> tuple[Wad, Certificate]:
    """From ``X + B -o Y`` derive ``X -o Y - ||B||_1`` with an explicit certificate.

    Each segment weight is split into a buffer part and an ``X`` part, the
    buffer taking the share ``min(B(a), D(a)) / D(a)`` where ``D(a)`` is the
    total certificate use of ``a``.  Group values drop by their buffer share
    and are then trimmed to sum exactly to the lowered target.
    """
    total = add(x, b)
    pre = verify_domination(total, y, cert, tol)
    if not pre.passed:
        raise PreconditionError("input certificate does not verify: "
                                + "; ".join(f"({c}) {m}" for c, m in pre.violations))
    load: dict = {}
    for g in cert.groups:
        for a, w in g.segments:
            load[a] = load.get(a, 0.0) + w
    share = {a: min(b[a], d) / d for a, d in load.items()}
    nb = norm1(b)
    y2 = scalar_sub(y, nb)
    staged = []
    for g in cert.groups:
        segs = [(a, w - w * share[a]) for a, w in g.segments]
        bufs = math.fsum(w * share[a] for a, w in g.segments)
        v = max(g.v - bufs, 0.0)
        staged.append((g, segs, v, bufs))
    groups = []
    for beta in dict.fromkeys(g.beta for g in cert.groups):
        mine = [s for s in staged if s[0].beta == beta]
        target = y2[beta]
        have = math.fsum(v for _, _, v, _ in mine)
        if all(bufs == 0 for *_, bufs in mine) and target == y[beta]:
            factor = 1.0
        else:
            factor = target / have if have > target else 1.0
        for g, segs, v, _ in mine:
            v2 = v * factor
            if v2 > 0:
                groups.append(Group(beta, v2, tuple(segs), g.arrow))
    out = Certificate(tuple(groups))
    post = verify_domination(x, y2, out, tol)
    if not post.passed:
        raise NumericalError("stripped certificate failed to verify: "
                             + "; ".join(f"({c}) {m}" for c, m in post.violations))
    return y2, out


# -- Dickson bases --------------------------------------------------------------

def _check_points(points: Iterable[Sequence[int]]) -> list[tuple]:
    pts = []
    for p in points:
        t = tuple(int(c) for c in p)
        if any(c != float(q) for c, q in zip(t, p)):
            raise DomainError(f"non-integer coordinate in {p!r}")
        if any(c < 0 for c in t):
            raise DomainError(f"negative coordinate in {p!r}")
        pts.append(t)
    if pts and len({len(t) for t in pts}) != 1:
        raise DomainError("points have different dimensions")
    return sorted(set(pts))


def _leq(p, q) -> bool:
    return all(a <= b for a, b in zip(p, q))


def minimal_elements(points: Iterable[Sequence[int]]) -> list[tuple]:
    """Direct scan: points with nothing strictly below them."""
    pts = _check_points(points)
    return [p for p in pts if not any(q != p and _leq(q, p) for q in pts)]


def _slices(pts: list, free: frozenset) -> set:
    # Points in ``pts`` agree on every coordinate outside ``free``.
    if not pts:
        return set()
    t0 = pts[0]
    out = {t0}
    if not free:
        return out
    for i in sorted(free):
        for k in range(t0[i]):
            layer = [t for t in pts if t[i] == k]
            out |= _slices(layer, free - {i})
    return out


def dickson_basis(points: Iterable[Sequence[int]]) -> list[tuple]:
    """Minimal elements of a finite ``T`` in ``Z^n_+`` under the product order.

    Built by slicing: any point not above a chosen ``t0`` lies in a layer
    ``t_i = k < t0_i`` of lower dimension.  The result is cross-checked against
    a direct scan.
    """
    pts = _check_points(points)
    if not pts:
        return []
    cover = _slices(pts, frozenset(range(len(pts[0]))))
    basis = sorted(p for p in cover if not any(q != p and _leq(q, p) for q in cover))
    if basis != minimal_elements(pts):
        raise NumericalError("slice construction disagrees with the direct scan")
    return basis
