import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from renormkit import wad as W
from renormkit.errors import (DomainError, IncompatibilityError, MappingError,
                              PreconditionError, StructuralError)
from renormkit.harmonic import hsum

from conftest import fixture_json


def good():
    d = fixture_json("good_cert.json")
    return W.Wad.from_json(d["X"]), W.Wad.from_json(d["Y"]), W.Certificate.from_json(d["certificate"])


def mutate(cert, **changes):
    g = cert.groups[0]
    fields = {"beta": g.beta, "v": g.v, "segments": g.segments, "arrow": g.arrow}
    fields.update(changes)
    return W.Certificate((W.Group(**fields),) + cert.groups[1:])


def test_good_certificate_passes():
    x, y, cert = good()
    rep = W.verify_domination(x, y, cert)
    assert rep.passed, rep.violations


def test_bad_certificate_names_clause_c():
    d = fixture_json("bad_cert.json")
    rep = W.verify_domination(W.Wad.from_json(d["X"]), W.Wad.from_json(d["Y"]),
                              W.Certificate.from_json(d["certificate"]))
    assert rep.clauses == {"c"}


@pytest.mark.parametrize("name,changes,clause", [
    ("inflated v", {"v": 1.6}, "c"),
    ("deflated w", {"segments": (("a1", 3.0), ("a2", 2.0))}, "c"),
    ("missing support", {"segments": (("a1", 3.0), ("beta", 3.0))}, "a"),
    ("crossing support", {"segments": (("c", 3.0), ("a2", 3.0))}, "a"),
    ("missing arrow", {"arrow": False}, "d"),
])
def test_mutations_fail_with_named_clause(name, changes, clause):
    x, y, cert = good()
    bad = mutate(cert, **changes)
    if "v" in changes:
        # keep the exact-sum clause satisfied so only the harmonic clause trips
        y = y.replace({"beta": changes["v"]})
    rep = W.verify_domination(x, y, bad)
    assert not rep.passed
    assert clause in rep.clauses, (name, rep.violations)


def test_clause_b_exact_sum():
    x, y, cert = good()
    rep = W.verify_domination(x, y.replace({"beta": 1.4}), cert)
    assert rep.clauses == {"b"}


def test_capacity_overuse():
    x, y, cert = good()
    twice = W.Certificate(cert.groups * 2)
    rep = W.verify_domination(x, y.replace({"beta": 3.0}), twice)
    assert "a" in rep.clauses


def test_arrow_hook_runs():
    x, y, cert = good()
    rep = W.verify_domination(x, y, cert, arrow_hook=lambda g: "no path")
    assert rep.clauses == {"d"}
    hook = W.shared_end_hook(x.arcs, y.arcs, improper={"e2"})
    assert W.verify_domination(x, y, cert, arrow_hook=hook).passed
    hook = W.shared_end_hook(x.arcs, y.arcs, improper={"e4"})
    assert not W.verify_domination(x, y, cert, arrow_hook=hook).passed


def test_wad_invariants():
    x, _, _ = good()
    with pytest.raises(StructuralError):
        x.replace({"c": 1.0, "a1": 1.0})
    with pytest.raises(MappingError):
        x.replace({"nope": 1.0})
    with pytest.raises(DomainError):
        x.replace({"a1": -1.0})
    with pytest.raises(StructuralError):
        W.Surface({"e1"}, {"e2"}, -1)
    assert x.replace({"a1": 0.0}).support == ()


def test_arithmetic():
    x, y, _ = good()
    s = W.wad_arith("add", x, y)
    assert s["a1"] == 3.0 and s["beta"] == 1.5
    assert W.norm1(s) == 7.5 and W.norm_inf(s) == 3.0
    assert W.sub(s, x) == y
    assert W.scalar_sub(s, 2.0).weights == {"a1": 1.0, "a2": 1.0}
    assert W.scale(x, 0.5)["a2"] == 1.5
    assert W.restrict(s, "h").support == ("a1", "a2", "beta")
    with pytest.raises(IncompatibilityError):
        W.add(x.replace({"a1": 1.0}), x.replace({"c": 1.0}))
    with pytest.raises(DomainError):
        W.wad_arith("mul", x, y)


def test_json_roundtrip():
    x, _, cert = good()
    assert W.Wad.from_json(x.to_json()) == x
    assert W.Certificate.from_json(cert.to_json()) == cert


def test_pullback_and_composition():
    x, y, _ = good()
    up = {"u1": W.Arc("u1", ("e1", "e3")), "u2": W.Arc("u2", ("e1", "e3"))}
    m = W.ArcMap(x.surface, up, {"u1": "beta", "u2": "beta"}, lifts={"beta": 2})
    pb = W.pullback(y, m)
    assert pb.weights == {"u1": 1.5, "u2": 1.5}
    ident = W.ArcMap.identity(y)
    assert W.pullback(y, W.compose_maps(m, ident)) == pb
    with pytest.raises(MappingError):
        W.ArcMap(x.surface, up, {"u1": "beta", "u2": "beta"}, lifts={"beta": 3})
    with pytest.raises(MappingError):
        W.pullback(y, W.ArcMap(x.surface, up, {"u1": "zzz", "u2": "beta"}))


def test_strip_buffer_fixture():
    d = fixture_json("strip_example.json")
    x, b, y = (W.Wad.from_json(d[k]) for k in ("X", "B", "Y"))
    cert = W.Certificate.from_json(d["certificate"])
    y2, cert2 = W.strip_buffer(x, b, y, cert)
    assert y2["beta"] == pytest.approx(2.0)
    assert W.verify_domination(x, y2, cert2).passed


def test_strip_buffer_precondition():
    d = fixture_json("strip_example.json")
    x, b, y = (W.Wad.from_json(d[k]) for k in ("X", "B", "Y"))
    cert = W.Certificate.from_json(d["certificate"])
    with pytest.raises(PreconditionError):
        W.strip_buffer(x, b, y.replace({"beta": 9.0}), cert)


# Random certificates on a surface with disjoint arcs s0..s5 and targets t0, t1.
SURF = W.Surface({f"e{i}" for i in range(8)}, {f"e{i}" for i in range(8)}, -6)
ARCS = [W.Arc(f"s{i}", (f"e{i}", f"e{(i + 1) % 6}")) for i in range(6)] + \
       [W.Arc("t0", ("e6", "e7")), W.Arc("t1", ("e0", "e7"))]

weight = st.floats(min_value=0.05, max_value=20.0)


@st.composite
def certified(draw):
    groups, x = [], {}
    for k in range(draw(st.integers(1, 3))):
        arcs = draw(st.lists(st.sampled_from([f"s{i}" for i in range(6)]),
                             min_size=1, max_size=3, unique=True))
        ws = [draw(weight) for _ in arcs]
        for a, w in zip(arcs, ws):
            x[a] = x.get(a, 0.0) + w
        v = hsum(ws) * draw(st.floats(min_value=0.1, max_value=1.0))
        groups.append(W.Group(draw(st.sampled_from(["t0", "t1"])), v, tuple(zip(arcs, ws)), True))
    y = {}
    for g in groups:
        y[g.beta] = y.get(g.beta, 0.0) + g.v
    bx = {a: draw(st.floats(min_value=0.0, max_value=1.0)) * w for a, w in x.items()}
    X = W.Wad(SURF, ARCS, {a: w - bx[a] for a, w in x.items()})
    B = W.Wad(SURF, ARCS, bx)
    return X, B, W.Wad(SURF, ARCS, y), W.Certificate(tuple(groups))


@settings(max_examples=200, deadline=None)
@given(certified())
def test_strip_buffer_reverifies(case):
    x, b, y, cert = case
    assume(all(x[a] > 0 for a in x.arcs if W.add(x, b)[a] > 0))
    assert W.verify_domination(W.add(x, b), y, cert).passed
    y2, cert2 = W.strip_buffer(x, b, y, cert)
    assert W.verify_domination(x, y2, cert2).passed
    for k in y.support:
        assert y2[k] == pytest.approx(max(y[k] - W.norm1(b), 0.0), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(certified(), st.floats(min_value=0.0, max_value=1.0))
def test_domination_monotone(case, factor):
    x, b, y, cert = case
    total = W.add(x, b)
    # enlarging X keeps the certificate valid
    assert W.verify_domination(W.scale(total, 1.5), y, cert).passed
    # lowering Y with rescaled group values keeps it valid
    y_low = W.scale(y, factor)
    assert W.verify_domination(total, y_low, W.lower_target(y, y_low, cert)).passed


def test_dickson_example():
    pts = fixture_json("dickson_example.json")["points"]
    assert W.dickson_basis(pts) == [(0, 5), (1, 2), (2, 1), (3, 0)]
    assert W.dickson_basis([]) == []
    with pytest.raises(DomainError):
        W.dickson_basis([(1, -1)])


@given(st.lists(st.tuples(*[st.integers(0, 6)] * 4), max_size=40))
def test_dickson_matches_scan(pts):
    basis = W.dickson_basis(pts)
    assert basis == W.minimal_elements(pts)
    for p in pts:
        assert any(all(a <= c for a, c in zip(q, p)) for q in basis)
    for p in basis:
        assert not any(q != p and all(a <= c for a, c in zip(q, p)) for q in basis)
