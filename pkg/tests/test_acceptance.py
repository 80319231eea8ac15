"""Acceptance criteria 1-10, each at its stated tolerance.

Every criterion records a one-line verdict that is printed in the pytest
terminal summary (and directly when this file is run as a script).
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from renormkit import circuits as C
from renormkit import gridwidth as G
from renormkit import hubbard as H
from renormkit import hyperbolic as Y
from renormkit import suites as S
from renormkit import wad as W
from renormkit.errors import StructuralError
from renormkit.report import dumps

from conftest import ACCEPTANCE, FIXTURES, fixture_json

MODELS = ["period2_basic.json", "period3_tworarc.json"]
INVALID = {"invalid_valence.json": "valence",
           "invalid_nontcg.json": "tree_of_complete_graphs",
           "invalid_two_critical.json": "critical_disk",
           "invalid_periodic.json": "no_periodic_horizontal_arc"}
TIMES: dict = {}


class Criterion:
    """Collects sub-checks; records a verdict line even when an assertion fails."""

    def __init__(self, number):
        self.number = number
        self.failures = []
        self.notes = []

    def expect(self, ok, what):
        if not ok:
            self.failures.append(what)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        TIMES[self.number] = dt
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        detail = "; ".join(self.notes + self.failures[:3])
        ok = not self.failures
        ACCEPTANCE[self.number] = (ok, f"[{dt:.2f} s] {detail}")
        print(f"criterion {self.number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, self.failures
        return False


def _suite(crit, res):
    crit.expect(res.passed, f"{res.name}: {len(res.violations)} violations")
    crit.notes.append(f"{res.name} {res.cases}/{res.cases - len(res.violations)}")


def test_criterion_1_circuit_laws():
    with Criterion(1) as crit:
        t0 = time.perf_counter()
        for fn in (S.series_suite, S.parallel_suite, S.quotient_suite, S.energy_suite,
                   S.local_conductance_suite, S.domination_suite):
            res = fn(seed=0, n=500, tol=1e-9)
            crit.expect(res.cases == 500, f"{res.name} ran {res.cases} cases")
            crit.expect(res.passed, f"{res.name}: {len(res.violations)} violations")
        dt = time.perf_counter() - t0
        crit.notes.append(f"6 laws x 500 circuits, 0 violations required, {dt:.1f} s")
        crit.expect(dt < 10.0, f"runtime {dt:.1f} s exceeds 10 s")


def test_criterion_2_harmonic_inequalities():
    with Criterion(2) as crit:
        for fn in (S.minus_b_suite, S.interchange_suite):
            res = fn(seed=0, n=10_000, tol=1e-12)
            crit.expect(res.cases == 10_000, f"{res.name} ran {res.cases} cases")
            _suite(crit, res)


def test_criterion_3_tcg_bound():
    with Criterion(3) as crit:
        _suite(crit, S.tcg_suite(seed=0, n=500, tol=1e-9))


def test_criterion_4_dickson():
    with Criterion(4) as crit:
        _suite(crit, S.dickson_suite(seed=0, n=1000, dim=5, top=6, max_size=40))


def test_criterion_5_hubbard_dynamics():
    with Criterion(5) as crit:
        for name in MODELS:
            m = H.load_model(FIXTURES / name)
            crit.expect(H.validate_model(m).valid, f"{name} rejected")
            for k in range(7):
                crit.expect(H.transition_matrix(m, k, "symbolic") == H.transition_matrix(m, k, "power"),
                            f"{name}: M^{k} mismatch")
            crit.expect(H.expansion_check(m).passed, f"{name}: expansion fails")
            for r in range(6):
                for e, length, need_len, n_new, need_new, ok in H.subdivide(m, r).contracts():
                    crit.expect(ok, f"{name} r={r} {e}: length {length}, new {n_new}")
        for name, axiom in INVALID.items():
            rep = H.validate_model(H.load_model(FIXTURES / name))
            crit.expect(set(rep.axioms) == {axiom}, f"{name}: named {sorted(rep.axioms)}")
        crit.notes.append("2 models, k<=6, r<=5, 4 invalid fixtures")


def test_criterion_6_entropy_bound_chain():
    with Criterion(6) as crit:
        for name in MODELS:
            _suite(crit, S.yz_suite(H.load_model(FIXTURES / name), seed=0, n=200,
                                    rs=(2, 3, 4), tol=1e-9))
        ec = H.entropy_constants(2, 2)
        crit.expect(ec.q[1] == 12 and ec.q[2] == 84, f"q = {ec.q[:3]}")
        crit.expect(ec.loss_factor == 3 / 8 and ec.threshold_holds(), "threshold inequality fails")
        crit.notes.append(f"q1={ec.q[1]} q2={ec.q[2]} M={ec.threshold_M}")


def test_criterion_7_hexagon_identity():
    with Criterion(7) as crit:
        rng = np.random.default_rng(0)
        pts = np.exp(rng.uniform(math.log(1e-3), math.log(10.0), size=(2000, 3)))
        worst = max(Y.hexagon_residual(a, b, c) for a, b, c in pts)
        crit.expect(worst <= 1e-10, f"residual {worst:.3g}")
        consts = Y.load_constants()
        box = np.exp(rng.uniform(math.log(1e-6), 0.0, size=(2000, 3)))
        t = max(abs(Y.transversal_defect(a, b, c)) for a, b, c in box)
        s = max(abs(Y.self_transversal_defect(a, b)) for a, b, _ in box)
        crit.expect(t <= consts["transversal"]["C"] + 1e-9, f"transversal defect {t}")
        crit.expect(s <= consts["self_transversal"]["C"] + 1e-9, f"self-transversal defect {s}")
        fresh = Y.measure_constants()
        for kind in ("transversal", "self_transversal"):
            drift = abs(fresh[kind]["C"] - consts[kind]["C"])
            crit.expect(drift <= 1e-6, f"{kind} constant drifted by {drift:.3g}")
        crit.notes.append(f"max residual {worst:.2g}; C = {consts['transversal']['C']:.6f}, "
                          f"{consts['self_transversal']['C']:.6f}")


def test_criterion_8_grid_oracle():
    with Criterion(8) as crit:
        t0 = time.perf_counter()
        for m, n in [(10, 20), (17, 5), (32, 32)]:
            w = G.grid_width(G.GridQuad(m, n))
            crit.expect(abs(w - m / n) <= 1e-12 * (m / n), f"{m}x{n}: {w!r}")
            a = G.annulus_width(G.GridAnnulus(m, n))
            crit.expect(abs(a - m / n) <= 1e-12 * (m / n), f"annulus {m}x{n}: {a!r}")
        base = G.GridAnnulus(7, 4)
        for degree in (2, 3, 5):
            up = G.annulus_width(G.cover(base, degree))
            want = degree * G.annulus_width(base)
            crit.expect(abs(up - want) <= 1e-12 * want, f"cover {degree}: {up!r} vs {want!r}")
            crit.expect(G.power_map_check(0.3, degree).holds, f"power map {degree}")
        rng = np.random.default_rng(0)
        quad = G.GridQuad(10, 8)
        w0 = G.grid_width(quad)
        for _ in range(200):
            k = int(rng.integers(1, 25))
            cells = [(int(c) // quad.m, int(c) % quad.m)
                     for c in rng.choice(quad.m * quad.n, size=k, replace=False)]
            try:
                w = G.grid_width(quad.with_obstacles(cells))
            except StructuralError:  # A and B separated: width 0
                w = 0.0
            crit.expect(w <= w0 * (1 + 1e-12), f"obstacles raised width to {w}")
        slope, _ = Y.strip_slope([0.05, 0.1, 0.2, 0.3, 0.5], resolution=128)
        err = abs(slope / (-2 / math.pi) - 1)
        crit.expect(err <= 0.05, f"strip slope {slope:.5f}, {err:.1%} off")
        dt = time.perf_counter() - t0
        crit.expect(dt < 60.0, f"runtime {dt:.1f} s exceeds 60 s")
        crit.notes.append(f"strip slope {slope:.5f} vs {-2 / math.pi:.5f} ({err:.2%}), {dt:.1f} s")


def test_criterion_9_domination_calculus():
    with Criterion(9) as crit:
        d = fixture_json("good_cert.json")
        x, y = W.Wad.from_json(d["X"]), W.Wad.from_json(d["Y"])
        cert = W.Certificate.from_json(d["certificate"])
        crit.expect(W.verify_domination(x, y, cert).passed, "valid certificate rejected")
        g = cert.groups[0]
        mutations = {
            "inflated v": (W.Group(g.beta, 1.6, g.segments, True), y.replace({"beta": 1.6}), "c"),
            "deflated w": (W.Group(g.beta, g.v, (("a1", 3.0), ("a2", 2.0)), True), y, "c"),
            "missing support": (W.Group(g.beta, g.v, (("a1", 3.0), ("beta", 3.0)), True), y, "a"),
            "crossing support": (W.Group(g.beta, g.v, (("c", 3.0), ("a2", 3.0)), True), y, "a"),
            "missing arrow": (W.Group(g.beta, g.v, g.segments, False), y, "d"),
        }
        for name, (group, target, clause) in mutations.items():
            rep = W.verify_domination(x, target, W.Certificate((group,)))
            crit.expect(not rep.passed and clause in rep.clauses,
                        f"{name}: clauses {sorted(rep.clauses)}")
        s = fixture_json("strip_example.json")
        sx, sb, sy = (W.Wad.from_json(s[k]) for k in ("X", "B", "Y"))
        y2, cert2 = W.strip_buffer(sx, sb, sy, W.Certificate.from_json(s["certificate"]))
        crit.expect(W.verify_domination(sx, y2, cert2).passed, "stripped certificate fails")
        crit.notes.append("valid passes, 5 mutations caught, stripped certificate re-verifies")


def _cli_body(*argv):
    proc = subprocess.run([sys.executable, "-m", "renormkit", *argv],
                          capture_output=True, text=True)
    return proc.returncode, dumps(json.loads(proc.stdout)["body"])


def test_criterion_10_determinism_and_runtime():
    with Criterion(10) as crit:
        for argv in (["circuit-laws", "-n", "100", "--seed", "11"],
                     ["wad-check", "good_cert.json"],
                     ["hubbard-yz", "period3_tworarc.json", "-n", "20", "--seed", "5"]):
            first, second = _cli_body(*argv), _cli_body(*argv)
            crit.expect(first == second, f"{argv[0]}: report bodies differ")
            crit.expect(first[0] == 0, f"{argv[0]}: exit {first[0]}")
        total = sum(TIMES.get(k, 0.0) for k in range(1, 10))
        crit.expect(total < 120.0, f"criteria 1-9 took {total:.1f} s")
        crit.notes.append(f"byte-identical bodies; criteria 1-9 took {total:.1f} s "
                          "(whole-session limit checked at exit)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
