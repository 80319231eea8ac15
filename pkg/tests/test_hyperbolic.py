import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renormkit import hyperbolic as Y
from renormkit.errors import DomainError, ParameterError

side = st.floats(min_value=1e-3, max_value=10.0)


def mp_hexagon(a, b, c):
    with mp.workdps(60):
        a, b, c = mp.mpf(a), mp.mpf(b), mp.mpf(c)
        return float(mp.acosh((mp.cosh(c) + mp.cosh(a) * mp.cosh(b)) / (mp.sinh(a) * mp.sinh(b))))


def test_regular_hexagon():
    # all alternate sides equal: cosh s = cosh a / (cosh a - 1)
    s = Y.hexagon_side(1, 1, 1)
    assert s == pytest.approx(mp_hexagon(1, 1, 1), rel=1e-14)
    assert math.cosh(s) == pytest.approx(math.cosh(1) / (math.cosh(1) - 1), rel=1e-14)


@settings(max_examples=300, deadline=None)
@given(side, side, side)
def test_hexagon_identity(a, b, c):
    s = Y.hexagon_side(a, b, c)
    assert Y.hexagon_residual(a, b, c, s) <= 1e-10
    assert s == pytest.approx(mp_hexagon(a, b, c), rel=1e-12)


@pytest.mark.parametrize("a,b,c", [(40, 35, 50), (1e-8, 1e-8, 1e-8), (100, 1e-3, 2), (30, 31, 29)])
def test_hexagon_extremes(a, b, c):
    s = Y.hexagon_side(a, b, c)
    assert math.isfinite(s)
    assert s == pytest.approx(mp_hexagon(a, b, c), rel=1e-10)


def test_hexagon_short_sides_asymptotic():
    # s ~ -log a - log b + log 4 as a, b, c -> 0
    s = Y.hexagon_side(1e-4, 1e-4, 1e-4)
    assert s == pytest.approx(-2 * math.log(1e-4) + math.log(4), abs=1e-6)


def test_bad_sides():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(DomainError):
            Y.hexagon_side(bad, 1, 1)
    with pytest.raises(DomainError):
        Y.pants_transversal(1, 0, 1)


def test_pants_values():
    assert Y.pants_transversal(2, 2, 2) == pytest.approx(Y.hexagon_side(1, 1, 1), rel=1e-15)
    assert Y.pants_self_transversal(4, 1) == pytest.approx(Y.hexagon_side(1, 1, 1), rel=1e-15)


def test_stored_constants_bound_the_defects():
    consts = Y.load_constants()
    lo, hi = consts["box"]
    rng = np.random.default_rng(0)
    pts = np.exp(rng.uniform(math.log(lo), math.log(hi), size=(500, 3)))
    for a, b, c in pts:
        assert abs(Y.transversal_defect(a, b, c)) <= consts["transversal"]["C"] + 1e-9
        assert abs(Y.self_transversal_defect(a, b)) <= consts["self_transversal"]["C"] + 1e-9
        assert abs(Y.hexagon_defect(a, b, c)) <= consts["hexagon"]["C"] + 1e-9


def test_constants_are_stable():
    consts = Y.load_constants()
    fresh = Y.measure_constants()
    for kind in ("transversal", "self_transversal", "hexagon"):
        assert fresh[kind]["C"] == pytest.approx(consts[kind]["C"], abs=1e-6)


def test_short_arc_diagram():
    diag = Y.short_arc_diagram({"a": 0.01, "b": 0.05, "c": 1.0})
    assert set(diag.weights) == {"a"}  # 0.05 is not strictly below 0.1 / 2
    assert diag.weights["a"] == pytest.approx(-math.log(0.01))
    with pytest.raises(DomainError):
        Y.short_arc_diagram({"a": 0.0})


@given(st.dictionaries(st.sampled_from("abcd"), st.integers(1, 64).map(lambda k: k / 8)),
       st.dictionaries(st.sampled_from("abcd"), st.integers(0, 5)),
       st.dictionaries(st.sampled_from("abcd"), st.integers(0, 5)))
def test_pairing_linear(w, g1, g2):
    both = {k: g1.get(k, 0) + g2.get(k, 0) for k in set(g1) | set(g2)}
    assert Y.pairing(w, both) == Y.pairing(w, g1) + Y.pairing(w, g2)


def test_length_estimates():
    assert Y.length_estimates("peripheral_M", {"a": 2.0}, {"a": 3}) == 12.0
    assert Y.length_estimates("peripheral_W", {"a": 1.0}, {"a": 1}) == pytest.approx(math.pi)
    assert Y.length_estimates("wad_from_M", {"a": math.pi})["a"] == pytest.approx(2.0)
    assert Y.modulus_from_length(math.pi) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        Y.pairing({"a": 1.0}, {"a": -1})
    with pytest.raises(DomainError):
        Y.length_estimates("nothing")


def test_strip_parameters():
    for kw in ({"d": 0.0}, {"d": 0.6}, {"d": 0.2, "truncation": 5.0}, {"d": 0.2, "resolution": 32}):
        with pytest.raises(ParameterError):
            Y.strip_width_check(**kw)


def test_strip_against_continuum_oracle():
    # the grid estimate approaches the exact strip value from the elliptic-integral form
    for d in (0.1, 0.4):
        got = Y.strip_width_check(d, resolution=64).estimate
        assert got == pytest.approx(Y.strip_extremal_length(d), rel=0.02)


def test_strip_oracle_asymptotics():
    # exact value differs from -2/pi log d by a bounded amount
    gaps = [Y.strip_extremal_length(d) + 2 / math.pi * math.log(d) for d in (1e-2, 1e-3, 1e-4)]
    assert max(gaps) - min(gaps) < 1e-3


def test_strip_truncation_insensitive():
    a = Y.strip_width_check(0.2, truncation=10.0, resolution=64).estimate
    b = Y.strip_width_check(0.2, truncation=20.0, resolution=64).estimate
    assert a == pytest.approx(b, rel=1e-6)
