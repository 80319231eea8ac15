"""Right-angled hexagons, pants transversals and width/length conversions."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

import numpy as np

from .errors import DomainError, ParameterError
from .gridwidth import grid_conductance

LOG_SPACE_SWITCH = 30.0
DEFAULT_EPSILON0 = 0.1
ENVELOPE_BOX = (1e-6, 1.0)


def _logcosh(x: float) -> float:
    x = abs(x)
    return x + math.log1p(math.exp(-2 * x)) - math.log(2)


def _logsinh(x: float) -> float:
    if x < 1.0:
        return math.log(math.sinh(x))
    return x + math.log1p(-math.exp(-2 * x)) - math.log(2)


def _arccosh1p(t: float, log_t: float) -> float:
    # arccosh(1 + t) without forming 1 + t when t is tiny or huge.
    if log_t < 0:
        return math.log1p(t + math.sqrt(t * (t + 2)))
    u = math.exp(-log_t)
    return log_t + math.log(1 + u + math.sqrt(1 + 2 * u))


def hexagon_side(a: float, b: float, c: float) -> float:
    """Side ``c'`` opposite ``c`` in the right-angled hexagon with alternate sides a, b, c.

    ``cosh c' = (cosh c + cosh a cosh b) / (sinh a sinh b)``, evaluated as
    ``arccosh(1 + t)`` with ``t = (cosh c + cosh(a - b)) / (sinh a sinh b)``.
    Above side length 30 ``t`` is formed in log space.
    """
    a, b, c = float(a), float(b), float(c)
    for name, x in (("a", a), ("b", b), ("c", c)):
        if not (x > 0 and math.isfinite(x)):
            raise DomainError(f"side {name} must be positive and finite, got {x!r}")
    if max(a, b, c) <= LOG_SPACE_SWITCH:
        t = (math.cosh(c) + math.cosh(a - b)) / (math.sinh(a) * math.sinh(b))
        return _arccosh1p(t, math.log(t))
    lc, lab = _logcosh(c), _logcosh(a - b)
    log_t = max(lc, lab) + math.log1p(math.exp(-abs(lc - lab))) - _logsinh(a) - _logsinh(b)
    t = math.exp(log_t) if log_t < 700 else math.inf
    return _arccosh1p(t, log_t)


def hexagon_residual(a: float, b: float, c: float, side: float | None = None) -> float:
    """Relative residual of ``cosh c' sinh a sinh b - cosh a cosh b = cosh c`` at 50 digits."""
    import mpmath as mp

    if side is None:
        side = hexagon_side(a, b, c)
    with mp.workdps(50):
        a_, b_, c_, s_ = (mp.mpf(x) for x in (a, b, c, side))
        lhs = mp.cosh(s_) * mp.sinh(a_) * mp.sinh(b_) - mp.cosh(a_) * mp.cosh(b_)
        return float(abs(lhs - mp.cosh(c_)) / mp.cosh(c_))


def pants_transversal(a: float, b: float, c: float) -> float:
    """Shortest arc joining the cuffs of lengths ``a`` and ``b`` in a pair of pants."""
    _positive(a, b, c)
    return hexagon_side(a / 2, b / 2, c / 2)


def pants_self_transversal(a: float, b: float) -> float:
    """Shortest arc from the cuff of length ``a`` back to itself, separating the other cuffs."""
    _positive(a, b)
    return hexagon_side(a / 4, a / 4, b)


def _positive(*xs):
    for x in xs:
        if not (x > 0 and math.isfinite(x)):
            raise DomainError(f"cuff lengths must be positive, got {x!r}")


# -- envelopes ------------------------------------------------------------------

def transversal_defect(a, b, c) -> float:
    return pants_transversal(a, b, c) + math.log(a) + math.log(b)


def self_transversal_defect(a, b) -> float:
    return pants_self_transversal(a, b) + 2 * math.log(a)


def hexagon_defect(a, b, c) -> float:
    return hexagon_side(a, b, c) + math.log(a) + math.log(b)


_DEFECTS = {"transversal": (transversal_defect, 3),
            "self_transversal": (self_transversal_defect, 2),
            "hexagon": (hexagon_defect, 3)}


def envelope(kind: str, box=ENVELOPE_BOX, points: int = 13) -> tuple[float, tuple]:
    """``sup |defect|`` over ``box^k``: log-spaced grid, then bounded L-BFGS-B polish.

    Returns the supremum and the maximizing point.
    """
    from scipy.optimize import minimize

    fn, k = _DEFECTS[kind]
    lo, hi = math.log(box[0]), math.log(box[1])
    axis = np.linspace(lo, hi, points)
    mesh = np.stack(np.meshgrid(*[axis] * k, indexing="ij"), -1).reshape(-1, k)
    vals = np.array([abs(fn(*np.exp(p))) for p in mesh])
    order = np.argsort(-vals, kind="stable")[:3]
    best_val, best_pt = -1.0, None
    for i in order:
        res = minimize(lambda x: -abs(fn(*np.exp(x))), mesh[i], method="L-BFGS-B",
                       bounds=[(lo, hi)] * k)
        for val, pt in ((-float(res.fun), res.x), (float(vals[i]), mesh[i])):
            if val > best_val:
                best_val, best_pt = val, pt
    return best_val, tuple(float(x) for x in np.exp(best_pt))


def load_constants() -> dict:
    text = resources.files("renormkit").joinpath("fixtures/hyperbolic_constants.json").read_text()
    return json.loads(text)


def measure_constants() -> dict:
    out = {"C0": ENVELOPE_BOX[1], "box": list(ENVELOPE_BOX)}
    for kind in _DEFECTS:
        val, pt = envelope(kind)
        out[kind] = {"C": val, "argmax": list(pt)}
    return out


# -- short arcs, pairings, conversions --------------------------------------------

@dataclass(frozen=True)
class ShortArcDiagram:
    weights: Mapping[str, float]
    epsilon0: float = DEFAULT_EPSILON0


def short_arc_diagram(lengths: Mapping[str, float], epsilon0: float = DEFAULT_EPSILON0
                      ) -> ShortArcDiagram:
    """``-log L`` on arcs shorter than ``epsilon0 / 2`` (strictly); other arcs dropped."""
    if not epsilon0 > 0:
        raise DomainError("epsilon0 must be positive")
    w = {}
    for k, L in lengths.items():
        if not L > 0:
            raise DomainError(f"length of {k!r} must be positive")
        if L < epsilon0 / 2:
            w[k] = -math.log(L)
    return ShortArcDiagram(w, epsilon0)


def _weights(w) -> Mapping[str, float]:
    if hasattr(w, "weights"):
        return w.weights
    return w


def pairing(w, iv: Mapping[str, int]) -> float:
    """``<gamma, W> = sum W(a) <gamma, a>``; arcs missing on either side contribute 0."""
    ws = _weights(w)
    for k, n in iv.items():
        if n < 0 or int(n) != n:
            raise DomainError(f"intersection number of {k!r} must be a nonnegative integer")
    return math.fsum(x * iv.get(k, 0) for k, x in ws.items())


def length_estimates(kind: str, *args):
    """Principal terms; each estimate holds up to an additive O(1) depending on the topology.

    ``peripheral_M(M, iv)`` = 2<M, gamma>; ``peripheral_W(W, iv)`` = pi<W, gamma>;
    ``wad_from_M(M)`` = (2/pi) M; ``mod_from_length(L)`` = pi / L.
    """
    if kind == "peripheral_M":
        return 2 * pairing(*args)
    if kind == "peripheral_W":
        return math.pi * pairing(*args)
    if kind == "wad_from_M":
        (m,) = args
        return {k: 2 / math.pi * x for k, x in _weights(m).items()}
    if kind == "mod_from_length":
        (L,) = args
        if not L > 0:
            raise DomainError("length must be positive")
        return math.pi / L
    raise DomainError(f"unknown estimate {kind!r}")


def modulus_from_length(L: float) -> float:
    return length_estimates("mod_from_length", L)


# -- strip widths -------------------------------------------------------------------

@dataclass(frozen=True)
class StripResult:
    d: float
    truncation: float
    resolution: int
    estimate: float
    principal: float
    cells: int = field(default=0, compare=False)


def strip_width_check(d: float, truncation: float | None = None, resolution: int = 128
                      ) -> StripResult:
    """Grid width of the strip ``0 < Im z < pi`` cut to ``[-T, d + T]`` with the
    sides ``[0, d]`` on both boundary lines marked.

    The estimate is the reciprocal of the grid conductance between the marked
    sides.  Both mirror symmetries are used: the line ``Im z = pi/2`` sits at
    potential 1/2 and no current crosses ``Re z = d/2``, so one quarter carries
    the whole computation.  Cells partly covered by a marked side are attached
    in proportion to the covered length.
    """
    if not 0 < d <= 0.5:
        raise ParameterError("separation d must lie in (0, 0.5]")
    T = 10 * max(d, 1.0) if truncation is None else float(truncation)
    if T < 10 * max(d, 1.0):
        raise ParameterError("truncation must be at least 10 max(d, 1)")
    if resolution < 64:
        raise ParameterError("resolution must be at least 64 cells per unit")
    n = math.ceil(math.pi * resolution)
    n += n % 2
    h = math.pi / n
    rows = n // 2
    cols = math.ceil((d / 2) / h) + math.ceil(T / h)
    # Column j spans [d/2 - (cols - j) h, d/2 - (cols - j - 1) h] in the mirror frame.
    k = np.arange(cols)[::-1]
    lo, hi = d / 2 - (k + 1) * h, d / 2 - k * h
    covered = np.clip((np.minimum(hi, d / 2) - np.maximum(lo, 0.0)) / h, 0.0, 1.0)
    pa = np.zeros((rows, cols))
    pb = np.zeros((rows, cols))
    pa[0] = 2.0 * covered
    pb[-1] = 2.0
    w_quarter = grid_conductance(np.ones((rows, cols), dtype=bool), pa, pb)
    # Full conductance: the x-mirror doubles it, the y-midline at 1/2 halves it.
    return StripResult(d, T, resolution, 1.0 / w_quarter, -2 / math.pi * math.log(d), rows * cols)


def strip_slope(ds, resolution: int = 128, truncation: float | None = None) -> tuple[float, list]:
    """Least-squares slope of the strip estimate against ``log d``."""
    results = [strip_width_check(d, truncation, resolution) for d in ds]
    slope = float(np.polyfit(np.log(ds), [r.estimate for r in results], 1)[0])
    return slope, results


def strip_extremal_length(d: float) -> float:
    """Continuum value for the untruncated strip, via the exponential map and a
    cross-ratio (complete elliptic integrals)."""
    import mpmath as mp

    with mp.workdps(30):
        b = mp.e ** mp.mpf(d)
        r = (b - 1) ** 2 / (b + 1) ** 2
        return float(mp.ellipk(1 - r) / mp.ellipk(r))
