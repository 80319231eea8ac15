"""Discrete extremal width of grid quadrilaterals and annuli.

Cells are vertices of a unit-conductance network; neighbouring cells are
joined by unit edges and every cell on a marked side is joined to its pole by
a half edge (conductance 2).  With this convention the uniform ``m x n`` grid
has width exactly ``m / n``.  All solves go through :mod:`renormkit.circuits`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .circuits import Circuit, solve_equilibrium
from .errors import DomainError, StructuralError
from .harmonic import hsum


def grid_conductance(active: np.ndarray, pole_a: np.ndarray, pole_b: np.ndarray, *,
                     hweight: np.ndarray | None = None, vweight: np.ndarray | None = None,
                     periodic: bool = False, method: str = "auto") -> float:
    """Effective conductance between two poles attached to a cell grid.

    ``active`` is a boolean ``(rows, cols)`` mask.  ``pole_a``/``pole_b`` give
    the conductance from each cell to the pole (0 for none).  ``hweight`` has
    shape ``(rows, cols - 1)`` (``cols`` when ``periodic``) and scales the
    edges between horizontal neighbours; ``vweight`` has shape
    ``(rows - 1, cols)``.  Cells cut off from pole ``a`` are dropped.
    """
    active = np.asarray(active, dtype=bool)
    ny, nx = active.shape
    pole_a = np.where(active, np.asarray(pole_a, dtype=float), 0.0)
    pole_b = np.where(active, np.asarray(pole_b, dtype=float), 0.0)
    ids = np.arange(ny * nx).reshape(ny, nx)
    A, B = ny * nx, ny * nx + 1
    us, vs, ws = [], [], []

    def link(x, y, w, mask):
        mask = mask & (w > 0)
        us.append(x[mask])
        vs.append(y[mask])
        ws.append(np.broadcast_to(w, mask.shape)[mask])

    hw = np.ones((ny, nx if periodic else nx - 1)) if hweight is None else np.asarray(hweight, float)
    vw = np.ones((ny - 1, nx)) if vweight is None else np.asarray(vweight, float)
    if nx > 1:
        link(ids[:, :-1], ids[:, 1:], hw[:, :nx - 1], active[:, :-1] & active[:, 1:])
        if periodic:
            link(ids[:, -1], ids[:, 0], hw[:, nx - 1], active[:, -1] & active[:, 0])
    if ny > 1:
        link(ids[:-1], ids[1:], vw, active[:-1] & active[1:])
    link(ids, np.full_like(ids, A), pole_a, pole_a > 0)
    link(ids, np.full_like(ids, B), pole_b, pole_b > 0)
    u = np.concatenate([x.ravel() for x in us])
    v = np.concatenate([x.ravel() for x in vs])
    w = np.concatenate([x.ravel() for x in ws])
    n = ny * nx + 2
    adj = sp.coo_matrix((np.ones(len(u)), (u, v)), shape=(n, n))
    _, labels = csgraph.connected_components(adj, directed=False)
    keep = labels == labels[A]
    if not keep[B]:
        raise StructuralError("the marked sides are disconnected")
    new = np.cumsum(keep) - 1
    sel = keep[u] & keep[v]
    names = [f"c{i}" for i in np.flatnonzero(keep[:-2])] + ["A", "B"]
    c = Circuit.from_arrays(names, ("A", "B"), new[u[sel]], new[v[sel]], w[sel])
    return solve_equilibrium(c, method=method).current_a


def _side_poles(ny: int, nx: int, active: np.ndarray):
    pa = np.zeros((ny, nx))
    pb = np.zeros((ny, nx))
    pa[0] = 2.0
    pb[-1] = 2.0
    return pa * active, pb * active


@dataclass(frozen=True)
class GridQuad:
    """``m`` cells wide, ``n`` cells high; the marked sides are bottom and top.

    ``obstacles`` are removed cells ``(row, col)`` with row 0 at the bottom.
    """

    m: int
    n: int
    obstacles: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise DomainError("grid dimensions must be positive")
        obs = frozenset((int(r), int(c)) for r, c in self.obstacles)
        for r, c in obs:
            if not (0 <= r < self.n and 0 <= c < self.m):
                raise DomainError(f"obstacle {(r, c)} lies outside the grid")
        object.__setattr__(self, "obstacles", obs)

    def mask(self) -> np.ndarray:
        act = np.ones((self.n, self.m), dtype=bool)
        for r, c in self.obstacles:
            act[r, c] = False
        return act

    @classmethod
    def from_mask(cls, active: np.ndarray) -> "GridQuad":
        rows, cols = np.nonzero(~np.asarray(active, dtype=bool))
        n, m = np.shape(active)
        return cls(m, n, frozenset(zip(rows.tolist(), cols.tolist())))

    def with_obstacles(self, cells: Iterable) -> "GridQuad":
        return GridQuad(self.m, self.n, self.obstacles | frozenset(cells))

    @classmethod
    def from_json(cls, d) -> "GridQuad":
        return cls(int(d["m"]), int(d["n"]), frozenset(tuple(x) for x in d.get("obstacles", [])))


@dataclass(frozen=True)
class GridAnnulus:
    """Periodic grid: ``m`` cells around, ``n`` cells between the boundary circles."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 3 or self.n < 1:
            raise DomainError("annulus needs m >= 3 and n >= 1")

    @property
    def modulus(self) -> float:
        return 1.0 / annulus_width(self)


def grid_width(quad: GridQuad, method: str = "auto") -> float:
    act = quad.mask()
    pa, pb = _side_poles(quad.n, quad.m, act)
    return grid_conductance(act, pa, pb, method=method)


def annulus_width(ann: GridAnnulus, method: str = "auto") -> float:
    act = np.ones((ann.n, ann.m), dtype=bool)
    pa, pb = _side_poles(ann.n, ann.m, act)
    return grid_conductance(act, pa, pb, periodic=True, method=method)


def cover(ann: GridAnnulus, degree: int) -> GridAnnulus:
    """Unbranched ``degree``-fold cover: the circumference is multiplied."""
    if degree < 1:
        raise DomainError("degree must be positive")
    return GridAnnulus(ann.m * degree, ann.n)


def stack(lower: GridQuad, upper: GridQuad) -> GridQuad:
    """Place ``upper`` on top of ``lower`` (same width)."""
    if lower.m != upper.m:
        raise DomainError("stacked quads need equal widths")
    obs = lower.obstacles | {(r + lower.n, c) for r, c in upper.obstacles}
    return GridQuad(lower.m, lower.n + upper.n, frozenset(obs))


def side_by_side(left: GridQuad, right: GridQuad) -> GridQuad:
    """Join two quads of equal height with a full obstacle column between them."""
    if left.n != right.n:
        raise DomainError("side-by-side quads need equal heights")
    sep = {(r, left.m) for r in range(left.n)}
    obs = left.obstacles | sep | {(r, c + left.m + 1) for r, c in right.obstacles}
    return GridQuad(left.m + right.m + 1, left.n, frozenset(obs))


def round_annulus_modulus(r: float, R: float) -> float:
    """``mod A(r, R) = log(R / r) / 2 pi``."""
    if not 0 < r < R:
        raise DomainError("need 0 < r < R")
    return math.log(R / r) / (2 * math.pi)


@dataclass
class TransformCheck:
    degree: int
    upstairs: float      # modulus of the covering annulus
    downstairs: float    # modulus of the image
    holds: bool


def modulus_transform_check(ann: GridAnnulus, degree: int, tol: float = 1e-9) -> TransformCheck:
    """Compare ``mod(image)`` with ``degree * mod(cover)`` on the grid."""
    up = 1.0 / annulus_width(cover(ann, degree))
    down = 1.0 / annulus_width(ann)
    return TransformCheck(degree, up, down, down >= degree * up - tol * max(1.0, down))


def power_map_check(r: float, degree: int) -> TransformCheck:
    """``z -> z^d`` maps ``A(r, 1)`` onto ``A(r^d, 1)``; closed forms only."""
    up = round_annulus_modulus(r, 1.0)
    down = round_annulus_modulus(r ** degree, 1.0)
    return TransformCheck(degree, up, down, down >= degree * up * (1 - 1e-12))


# -- convergence tables --------------------------------------------------------------

def rectangle(a: float, resolution: int) -> GridQuad:
    """Rectangle ``a`` wide and 1 high, ``resolution`` cells per unit."""
    m = a * resolution
    if abs(m - round(m)) > 1e-9:
        raise DomainError("a * resolution must be an integer")
    return GridQuad(int(round(m)), resolution)


def l_shape(resolution: int, width: float = 2.0, notch=(0.5, 0.5)) -> GridQuad:
    """``width x 1`` rectangle with the top-right ``notch`` (w, h) removed."""
    m = int(round(width * resolution))
    nw, nh = (int(round(x * resolution)) for x in notch)
    quad = GridQuad(m, resolution)
    act = quad.mask()
    act[resolution - nh:, m - nw:] = False
    return GridQuad.from_mask(act)


@dataclass
class ConvergenceRow:
    resolution: int
    estimate: float
    delta: float | None


def convergence_check(target: str, resolutions: Sequence[int], *, a: float = 2.0,
                      mu: float = 1.0, csv_path: str | Path | None = None) -> list:
    """Grid estimates of a ``rectangle`` (width ``a``), an ``lshape`` or an ``annulus``
    of modulus ``mu`` at increasing resolutions."""
    if list(resolutions) != sorted(set(resolutions)):
        raise DomainError("resolutions must be strictly increasing")
    rows, prev = [], None
    for k in resolutions:
        if target == "rectangle":
            est = grid_width(rectangle(a, k))
        elif target == "lshape":
            est = grid_width(l_shape(k))
        elif target == "annulus":
            m = k
            n = int(round(mu * k))
            est = annulus_width(GridAnnulus(m, n))
        else:
            raise DomainError(f"unknown target {target!r}")
        rows.append(ConvergenceRow(k, est, None if prev is None else est - prev))
        prev = est
    if csv_path is not None:
        write_table(rows, csv_path)
    return rows


def write_table(rows: Sequence[ConvergenceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["resolution", "estimate", "delta"])
        for r in rows:
            w.writerow([r.resolution, repr(r.estimate), "" if r.delta is None else repr(r.delta)])


def series_bound(lower: GridQuad, upper: GridQuad) -> tuple[float, float]:
    """(width of the stack, harmonic sum of the parts)."""
    return grid_width(stack(lower, upper)), hsum([grid_width(lower), grid_width(upper)])
