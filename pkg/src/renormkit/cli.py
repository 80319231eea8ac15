"""Command-line front end: ``renormkit <subcommand> [inputs] [--tol] [--seed] [--out]``.

Exit status is 0 when every check passes, 1 when a check fails and 2 on
malformed input or a structural/numerical error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from . import circuits as C
from . import gridwidth as G
from . import hubbard as H
from . import hyperbolic as Y
from . import suites as S
from . import wad as W
from .errors import RenormError
from .report import Report, dumps


class InputError(Exception):
    pass


def fixture_dirs() -> list[Path]:
    out = []
    env = os.environ.get("RENORM_FIXTURES")
    if env:
        out.append(Path(env))
    out.append(Path(str(resources.files("renormkit").joinpath("fixtures"))))
    return out


def resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    for d in fixture_dirs():
        for cand in (d / path, d / p.name):
            if cand.exists():
                return cand
    raise InputError(f"input file not found: {path}")


def load_json(path: str, report: Report):
    p = resolve(path)
    report.add_input(p)
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{p.name}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from None


def _rel_ok(x, y, tol):
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


# -- circuits -------------------------------------------------------------------

def cmd_circuit_solve(args, rep: Report):
    c = C.Circuit.from_json(load_json(args.input, rep))
    eq = C.solve_equilibrium(c, tol=args.tol)
    bd = C.current_boundary(c, eq.potential)
    internal = [abs(v) for x, v in bd.items() if x not in c.battery]
    rep.data.update(conductance=eq.current_a, energy=eq.energy,
                    potential=eq.potential.as_dict(), residual=eq.residual)
    rep.check("energy equals conductance", "E=W", eq.current_a, eq.energy,
              _rel_ok(eq.energy, eq.current_a, args.tol), args.tol)
    rep.check("current conserved at internal vertices", "I-eq", 0.0, max(internal, default=0.0),
              max(internal, default=0.0) <= args.tol, args.tol)
    rep.check("poles carry opposite currents", "I-eq", -eq.current_a, eq.current_b,
              _rel_ok(eq.current_b, -eq.current_a, args.tol), args.tol)
    vals = eq.potential.values
    rep.check("maximum principle", "equilibrium", [0.0, 1.0], [float(vals.min()), float(vals.max())],
              vals.min() >= -args.tol and vals.max() <= 1 + args.tol, args.tol)
    bound = min(c.local_conductance(x) for x in c.battery)
    rep.check("conductance below pole local conductance", "loc cond", bound, eq.current_a,
              eq.current_a <= bound * (1 + args.tol), args.tol)


def _suite_check(rep: Report, res: S.SuiteResult):
    rep.check(f"{res.name} ({res.cases} cases)", res.lemma, 0, len(res.violations),
              res.passed, res.tolerance)


def cmd_circuit_laws(args, rep: Report):
    n = args.n or 500
    for fn in (S.series_suite, S.parallel_suite, S.quotient_suite, S.energy_suite,
               S.local_conductance_suite, S.domination_suite):
        _suite_check(rep, fn(seed=args.seed, n=n, tol=args.tol))


def cmd_tcg_bound(args, rep: Report):
    if args.input is None:
        _suite_check(rep, S.tcg_suite(seed=args.seed, n=args.n or 500, tol=args.tol))
        return
    data = load_json(args.input, rep)
    c = C.Circuit.from_json(data)
    s = C.TcgStructure.from_json(data)
    chain = C.tcg_chain(s, *c.battery)
    w = C.total_conductance(c)
    bound = C.tcg_bound(c, s)
    top = C.max_local_conductance(c) / (len(chain) - 1)
    rep.data.update(chain=chain, conductance=w, bound=bound, max_local_over_d=top)
    rep.check("conductance below chain bound", "ec based on trees", bound, w,
              w <= bound * (1 + args.tol), args.tol)
    rep.check("chain bound below max local conductance / d", "ec based on trees", top, bound,
              bound <= top * (1 + args.tol), args.tol)


# -- WADs -----------------------------------------------------------------------

def _domination_checks(rep: Report, dom: W.DominationReport, label=""):
    for clause in "abcd":
        msgs = [m for c, m in dom.violations if c == clause]
        rep.check(f"{label}clause ({clause})", "domination", [], msgs, not msgs)


def cmd_wad_check(args, rep: Report):
    data = load_json(args.input, rep)
    x, y = W.Wad.from_json(data["X"]), W.Wad.from_json(data["Y"])
    cert = W.Certificate.from_json(data["certificate"])
    _domination_checks(rep, W.verify_domination(x, y, cert, args.tol))


def cmd_wad_strip(args, rep: Report):
    data = load_json(args.input, rep)
    x, b, y = (W.Wad.from_json(data[k]) for k in ("X", "B", "Y"))
    cert = W.Certificate.from_json(data["certificate"])
    y2, cert2 = W.strip_buffer(x, b, y, cert, args.tol)
    rep.data.update(Y_prime=y2.weights, certificate=cert2.to_json(), buffer_norm=W.norm1(b))
    _domination_checks(rep, W.verify_domination(x, y2, cert2, args.tol), "stripped ")


def cmd_dickson(args, rep: Report):
    if args.input is None:
        _suite_check(rep, S.dickson_suite(seed=args.seed, n=args.n or 1000))
        return
    pts = load_json(args.input, rep)["points"]
    basis = W.dickson_basis(pts)
    brute = W.minimal_elements(pts)
    rep.data["basis"] = [list(p) for p in basis]
    rep.check("basis equals minimal elements", "basis", [list(p) for p in brute],
              [list(p) for p in basis], basis == brute)


# -- Hubbard models ---------------------------------------------------------------

def _model(args, rep):
    return H.load_model(load_json(args.input, rep))


def cmd_hubbard_validate(args, rep: Report):
    m = _model(args, rep)
    v = H.validate_model(m)
    for axiom in H.AXIOMS:
        msgs = [msg for a, msg in v.violations if a == axiom]
        rep.check(f"axiom {axiom}", axiom, [], msgs, not msgs)
    rep.data["notes"] = v.notes


def cmd_hubbard_matrix(args, rep: Report):
    m = _model(args, rep)
    top = args.k if args.k is not None else 6
    for k in range(top + 1):
        sym = H.transition_matrix(m, k, "symbolic")
        pw = H.transition_matrix(m, k, "power")
        rep.check(f"M^{k} symbolic equals matrix power", "transition matrix",
                  [list(r) for r in pw.entries], [list(r) for r in sym.entries], sym == pw)
    rep.data.update(arcs=list(m.arcs),
                    M=[list(r) for r in H.transition_matrix(m, 1).entries])


def cmd_hubbard_expansion(args, rep: Report):
    m = _model(args, rep)
    for arc, s, ok in H.expansion_check(m).rows:
        rep.check(f"row {arc} of M^{m.p}", "expansion", ">= 2", s, ok)


def cmd_hubbard_subdivide(args, rep: Report):
    m = _model(args, rep)
    r = args.r if args.r is not None else 3
    lvl = H.subdivide(m, r)
    for e, length, need_len, n_new, need_new, _ in lvl.contracts():
        rep.check(f"chain length of {e}", "big distance", need_len, length, length >= need_len)
        rep.check(f"new disks on {e}", "good disks", need_new, n_new, n_new >= need_new)
    rep.data.update(level=lvl.level, chains={e: [d.id for d in ch] for e, ch in lvl.chains.items()})


def cmd_hubbard_yz(args, rep: Report):
    m = _model(args, rep)
    rs = [args.r] if args.r is not None else [2, 3, 4]
    if args.weights:
        y = json.loads(args.weights)
        for r in rs:
            for e in m.arcs:
                z = H.yz_bound(m, y, r, e)
                tol = args.tol
                rep.check(f"direct conductance below bound ({e}, r={r})", "Y-Z", z.bound,
                          z.direct, z.direct <= z.bound + tol * max(1.0, z.bound), tol)
                rep.check(f"bound below cap ({e}, r={r})", "Y-Z", z.cap, z.bound,
                          z.bound <= z.cap + tol * max(1.0, z.cap), tol)
        return
    _suite_check(rep, S.yz_suite(m, seed=args.seed, n=args.n or 200, rs=tuple(rs), tol=args.tol))


def cmd_hubbard_constants(args, rep: Report):
    p = args.p if args.p is not None else 2
    n = args.n if args.n is not None else 2
    ec = H.entropy_constants(p, n)
    rep.data.update(q=list(ec.q[:n + 1]), loss_factor=ec.loss_factor,
                    stated_loss_factor=ec.stated_loss_factor, threshold_M=ec.threshold_M)
    rep.check("recursion is tight", "q", True,
              all(ec.q[i + 1] == 3 * p * (ec.q[i] + 2) for i in range(len(ec.q) - 1)), True)
    rep.check("threshold inequality", "loss of hor weight", True, ec.threshold_holds(),
              ec.threshold_holds())


# -- hyperbolic ---------------------------------------------------------------------

def cmd_hex(args, rep: Report):
    side = Y.hexagon_side(args.a, args.b, args.c)
    res = Y.hexagon_residual(args.a, args.b, args.c, side)
    rep.data.update(side=side)
    rep.check("hexagon identity residual", "hexagon", 0.0, res, res <= 1e-10, 1e-10)


def cmd_pants(args, rep: Report):
    consts = Y.load_constants()
    c0 = consts["C0"]
    t = Y.pants_transversal(args.a, args.b, args.c)
    s = Y.pants_self_transversal(args.a, args.b)
    rep.data.update(transversal=t, self_transversal=s)
    if max(args.a, args.b, args.c) <= c0 and min(args.a, args.b, args.c) >= consts["box"][0]:
        d1 = abs(t + math.log(args.a) + math.log(args.b))
        d2 = abs(s + 2 * math.log(args.a))
        rep.check("transversal envelope", "fenchel", consts["transversal"]["C"], d1,
                  d1 <= consts["transversal"]["C"] + 1e-9, 1e-9)
        rep.check("self-transversal envelope", "fenchel", consts["self_transversal"]["C"], d2,
                  d2 <= consts["self_transversal"]["C"] + 1e-9, 1e-9)


def cmd_strip_width(args, rep: Report):
    res = args.res or 128
    if args.d is not None:
        r = Y.strip_width_check(args.d, args.T, res)
        rep.data.update(d=r.d, estimate=r.estimate, principal=r.principal, cells=r.cells)
        return
    ds = [0.05, 0.1, 0.2, 0.3, 0.5]
    slope, results = Y.strip_slope(ds, res, args.T)
    rep.data.update(rows=[{"d": r.d, "estimate": r.estimate, "principal": r.principal}
                          for r in results])
    target = -2 / math.pi
    rep.check("slope against log d", "hyp dist vs mod", target, slope,
              abs(slope / target - 1) <= 0.05, 0.05)


def cmd_grid_width(args, rep: Report):
    if args.input is not None:
        data = load_json(args.input, rep)
    else:
        data = {"kind": "quad", "m": args.m, "n": args.n}
    if data.get("kind", "quad") == "annulus":
        ann = G.GridAnnulus(int(data["m"]), int(data["n"]))
        w = G.annulus_width(ann)
        exact = ann.m / ann.n
    else:
        q = G.GridQuad.from_json(data)
        w = G.grid_width(q)
        exact = q.m / q.n
    rep.data["width"] = w
    if not data.get("obstacles"):
        rep.check("uniform width m/n", "increase", exact, w, _rel_ok(w, exact, 1e-12), 1e-12)
    else:
        rep.check("obstacles never increase width", "increase", exact, w, w <= exact * (1 + 1e-12))


def cmd_converge(args, rep: Report):
    res = args.res or [32, 64, 128, 256]
    rows = G.convergence_check(args.target, res, csv_path=args.csv)
    rep.data["table"] = [{"resolution": r.resolution, "estimate": r.estimate, "delta": r.delta}
                         for r in rows]
    if args.target == "rectangle":
        for r in rows:
            rep.check(f"rectangle at {r.resolution}", "Definitions", 2.0, r.estimate,
                      _rel_ok(r.estimate, 2.0, 1e-12), 1e-12)
    elif args.target == "annulus":
        for r in rows:
            rep.check(f"annulus at {r.resolution}", "modulus transform-1", 1.0, r.estimate,
                      _rel_ok(r.estimate, 1.0, 1e-12), 1e-12)
    else:
        deltas = [r.delta for r in rows if r.delta is not None]
        for prev, cur, r in zip(deltas, deltas[1:], rows[2:]):
            rep.check(f"Cauchy difference halves at {r.resolution}", "Q", 2.0,
                      abs(prev / cur), abs(cur) * 2 <= abs(prev))


COMMANDS = {
    "circuit-solve": (cmd_circuit_solve, "input"),
    "circuit-laws": (cmd_circuit_laws, None),
    "tcg-bound": (cmd_tcg_bound, "input?"),
    "wad-check": (cmd_wad_check, "input"),
    "wad-strip": (cmd_wad_strip, "input"),
    "dickson": (cmd_dickson, "input?"),
    "hubbard-validate": (cmd_hubbard_validate, "input"),
    "hubbard-matrix": (cmd_hubbard_matrix, "input"),
    "hubbard-expansion": (cmd_hubbard_expansion, "input"),
    "hubbard-subdivide": (cmd_hubbard_subdivide, "input"),
    "hubbard-yz": (cmd_hubbard_yz, "input"),
    "hubbard-constants": (cmd_hubbard_constants, None),
    "hex": (cmd_hex, None),
    "pants": (cmd_pants, None),
    "strip-width": (cmd_strip_width, None),
    "grid-width": (cmd_grid_width, "input?"),
    "converge": (cmd_converge, None),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="check tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for several inputs")
    common.add_argument("--out", help="write the report here instead of stdout")
    parser = argparse.ArgumentParser(prog="renormkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, inp) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common])
        if inp == "input":
            sp.add_argument("inputs", nargs="+", metavar="input")
        elif inp == "input?":
            sp.add_argument("inputs", nargs="*", metavar="input")
        sp.add_argument("-n", "--n", type=int, dest="n", default=None)
        if name == "hubbard-matrix":
            sp.add_argument("--k", type=int)
        if name in ("hubbard-subdivide", "hubbard-yz"):
            sp.add_argument("--r", type=int)
        if name == "hubbard-yz":
            sp.add_argument("--weights", help='aligned weights as JSON, e.g. \'{"g": 1.0}\'')
        if name == "hubbard-constants":
            sp.add_argument("--p", type=int)
        if name in ("hex", "pants"):
            sp.add_argument("--a", type=float, required=True)
            sp.add_argument("--b", type=float, required=True)
            sp.add_argument("--c", type=float, default=1.0)
        if name == "strip-width":
            sp.add_argument("--d", type=float)
            sp.add_argument("--T", type=float)
            sp.add_argument("--res", type=int)
        if name == "grid-width":
            sp.add_argument("--m", type=int, default=10)
        if name == "converge":
            sp.add_argument("--target", choices=["rectangle", "lshape", "annulus"],
                            default="lshape")
            sp.add_argument("--res", type=int, nargs="+")
            sp.add_argument("--csv", help="write the (resolution, estimate, delta) table here")
    return parser


def run_one(command: str, args, input_path: str | None) -> Report:
    fn, _ = COMMANDS[command]
    rep = Report(command, seed=args.seed)
    ns = argparse.Namespace(**vars(args))
    ns.input = input_path
    if command == "grid-width" and input_path is None:
        ns.n = args.n or 20
    try:
        fn(ns, rep)
    except (InputError, RenormError, KeyError, TypeError, ValueError) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


def _worker(payload):
    command, args, path = payload
    return run_one(command, args, path)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    inputs = getattr(args, "inputs", None) or [None]
    payloads = [(args.command, args, p) for p in inputs]
    if args.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_worker, payloads))
    else:
        reports = [_worker(p) for p in payloads]
    if len(reports) == 1:
        rep = reports[0]
    else:
        rep = Report(args.command, seed=args.seed)
        for r in reports:
            rep.inputs.update(r.inputs)
            rep.checks.extend(r.checks)
            if r.error and rep.error is None:
                rep.error = r.error
        rep.data["runs"] = [r.body() for r in reports]
    text = rep.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if rep.error:
        print(f"renormkit: {rep.error}", file=sys.stderr)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
