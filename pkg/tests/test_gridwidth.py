import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renormkit import gridwidth as G
from renormkit.errors import DomainError, StructuralError


@pytest.mark.parametrize("m,n", [(1, 1), (10, 20), (7, 3), (25, 25), (40, 9)])
def test_uniform_rectangle(m, n):
    assert G.grid_width(G.GridQuad(m, n)) == pytest.approx(m / n, rel=1e-12)


@pytest.mark.parametrize("m,n", [(12, 4), (3, 1), (30, 17)])
def test_periodic_annulus(m, n):
    ann = G.GridAnnulus(m, n)
    assert G.annulus_width(ann) == pytest.approx(m / n, rel=1e-12)
    assert ann.modulus == pytest.approx(n / m, rel=1e-12)


@pytest.mark.parametrize("degree", [1, 2, 3, 5])
def test_cover_scaling(degree):
    ann = G.GridAnnulus(6, 5)
    up = G.annulus_width(G.cover(ann, degree))
    assert up == pytest.approx(degree * G.annulus_width(ann), rel=1e-12)
    chk = G.modulus_transform_check(ann, degree)
    assert chk.holds
    assert chk.downstairs == pytest.approx(degree * chk.upstairs, rel=1e-12)


@pytest.mark.parametrize("r,degree", [(0.1, 2), (0.5, 3), (0.9, 7)])
def test_power_map_closed_form(r, degree):
    chk = G.power_map_check(r, degree)
    assert chk.holds
    assert chk.downstairs == pytest.approx(degree * chk.upstairs, rel=1e-13)


def test_round_annulus():
    assert G.round_annulus_modulus(1.0, math.e) == pytest.approx(1 / (2 * math.pi))
    with pytest.raises(DomainError):
        G.round_annulus_modulus(2.0, 1.0)


def random_obstacles(rng, quad, k):
    cells = rng.choice(quad.m * quad.n, size=k, replace=False)
    return [(int(c) // quad.m, int(c) % quad.m) for c in cells]


def width_or_zero(q):
    try:
        return G.grid_width(q)
    except StructuralError:
        return 0.0


@pytest.mark.parametrize("m,n", [(8, 6), (12, 12)])
def test_obstacle_monotonicity(m, n):
    rng = np.random.default_rng(m * 100 + n)
    base = G.GridQuad(m, n)
    w0 = G.grid_width(base)
    for _ in range(200):
        cells = random_obstacles(rng, base, int(rng.integers(1, m * n // 3)))
        half = base.with_obstacles(cells[: len(cells) // 2])
        full = base.with_obstacles(cells)
        w_half, w_full = width_or_zero(half), width_or_zero(full)
        assert w_full <= w_half * (1 + 1e-12) + 1e-15
        assert w_half <= w0 * (1 + 1e-12)


def test_blocked_quad_raises():
    wall = [(2, c) for c in range(5)]
    with pytest.raises(StructuralError):
        G.grid_width(G.GridQuad(5, 5, frozenset(wall)))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 10), st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_series_law(m, n1, n2, seed):
    rng = np.random.default_rng(seed)
    lower = G.GridQuad(m, n1)
    upper = G.GridQuad(m, n2).with_obstacles(random_obstacles(rng, G.GridQuad(m, n2), m * n2 // 4))
    try:
        stacked, bound = G.series_bound(lower, upper)
    except StructuralError:
        return
    assert stacked <= bound * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(1, 8))
def test_parallel_law(m1, m2, n):
    left, right = G.GridQuad(m1, n), G.GridQuad(m2, n)
    joined = G.grid_width(G.side_by_side(left, right))
    assert joined == pytest.approx(G.grid_width(left) + G.grid_width(right), rel=1e-12)


def test_quad_validation_and_json():
    with pytest.raises(DomainError):
        G.GridQuad(0, 3)
    with pytest.raises(DomainError):
        G.GridQuad(3, 3, frozenset({(5, 0)}))
    with pytest.raises(DomainError):
        G.GridAnnulus(2, 3)
    q = G.GridQuad.from_json({"m": 4, "n": 3, "obstacles": [[1, 1]]})
    assert G.GridQuad.from_mask(q.mask()) == q


def test_convergence_table(tmp_path):
    path = tmp_path / "table.csv"
    rows = G.convergence_check("rectangle", [4, 8, 16], csv_path=path)
    assert all(r.estimate == pytest.approx(2.0, rel=1e-12) for r in rows)
    with open(path) as fh:
        got = list(csv.DictReader(fh))
    assert [int(r["resolution"]) for r in got] == [4, 8, 16]
    assert got[0]["delta"] == ""
    with pytest.raises(DomainError):
        G.convergence_check("rectangle", [8, 4])


def test_lshape_converges():
    rows = G.convergence_check("lshape", [16, 32, 64, 128])
    deltas = [abs(r.delta) for r in rows[1:]]
    for prev, cur in zip(deltas, deltas[1:]):
        assert cur <= prev / 2
    # the notch removes area near the top, so the width sits below the full rectangle
    assert 1.5 < rows[-1].estimate < 2.0
