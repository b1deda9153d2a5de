"""Command-line interface: classify | periods | flux | deform | correct | mesh | verify.

Exit status is 0 when every certificate check passes, 2 when a computed
result fails a check, and 1 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import CatalogEntry, get_entry, load_catalog
from .convexint import PathFamily, DeformConfig, TargetSchedule, deform_paths
from .domain import DEFAULT_QUADRATURE_N, DiscretePath
from .errors import NonzeroRealPeriods, NullCurveError, ParseError
from .mesh import export_mesh
from .spray import correct_to_null
from .verify import verify_minimal
from .weierstrass import (
    PolarGrid,
    classify,
    flux,
    integrate_real,
    period_table_header,
    period_table_rows,
    periods,
    winding_parity_class,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

log = logging.getLogger("nullcurves")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def _write_json(path, doc):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text)


def _certificate_path(args, sidecar=True):
    """The certificate goes to --out itself when it is the only output, else next to it."""
    if not args.out:
        return None
    out = Path(args.out)
    return out.with_name(out.name + ".cert.json") if sidecar else out


def _emit_certificate(args, cert, sidecar=True):
    path = _certificate_path(args, sidecar)
    if path is not None:
        _write_json(path, cert)
    return EXIT_OK if cert.get("pass", False) else EXIT_FAILED


def _entry(args) -> CatalogEntry:
    name = args.name
    p = Path(name)
    if p.suffix == ".json" and p.exists():
        entries = load_catalog(p)
        if len(entries) != 1:
            raise UsageError(f"{name} must hold exactly one entry")
        entry = entries[0]
    else:
        try:
            entry = get_entry(name, args.catalog)
        except KeyError:
            known = ", ".join(e.name for e in load_catalog(args.catalog))
            raise UsageError(f"unknown entry {name!r}; catalog has: {known}") from None
    if args.n is not None and args.n != entry.n:
        raise UsageError(f"--n {args.n} does not match entry dimension {entry.n}")
    return entry


def _loops(args, basis):
    if args.loop is None:
        return list(range(len(basis)))
    if not 1 <= args.loop <= len(basis):
        raise UsageError(f"--loop must lie in 1..{len(basis)}")
    return [args.loop - 1]


# ---------------------------------------------------------------------------

def cmd_classify(args):
    entry = _entry(args)
    basis = entry.basis()
    N = args.samples or 256
    cls = classify(entry.f, entry.domain, basis, N)
    idx = _loops(args, basis)
    bits = [cls.bits[i] for i in idx]
    print("nontrivial" if any(bits) else "trivial")
    if len(idx) > 1:
        for i in idx:
            print(f"  loop {i + 1} ({basis[i]}): {cls.labels()[i]}")
    # independent checks: finer monodromy, and winding parity when g is holomorphic
    fine = classify(entry.f, entry.domain, basis, 2 * N)
    checks = {"refined_monodromy_agrees": fine.bits == cls.bits}
    if entry.g_holomorphic():
        wp = winding_parity_class(entry.eta, basis, entry.g, entry.domain)
        checks["winding_parity_agrees"] = wp.bits == cls.bits
    expected = entry.expected_bits()
    if expected is not None:
        checks["matches_catalog"] = tuple(expected) == cls.bits
    cert = {"command": "classify", "entry": entry.name, "loops": [i + 1 for i in idx],
            "bits": list(bits), "all_bits": list(cls.bits), "flat": cls.flat,
            "label": "nontrivial" if any(bits) else "trivial", "samples": N,
            "checks": checks, "pass": all(checks.values())}
    return _emit_certificate(args, cert, sidecar=False)


def _period_check(entry, basis, N, kind):
    pv = periods(entry.f, entry.theta, basis, N)
    fine = periods(entry.f, entry.theta, basis, 2 * N)
    checks = {"refinement_agrees": float(np.max(np.abs(fine.entries - pv.entries))) < 1e-8}
    if kind == "periods":
        exp = entry.expected_periods()
        if exp is not None:
            checks["matches_catalog"] = float(np.max(np.abs(pv.entries - exp))) < 1e-8
    else:
        exp = entry.expected_flux()
        if exp is not None:
            checks["matches_catalog"] = float(np.max(np.abs(pv.entries.imag - exp))) < 1e-8
    return pv, checks


def _csv_text(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r[0]] + [repr(float(x)) for x in r[1:]])
    return buf.getvalue()


def cmd_periods(args):
    entry = _entry(args)
    basis = entry.basis()
    N = args.samples or DEFAULT_QUADRATURE_N
    pv, checks = _period_check(entry, basis, N, "periods")
    idx = _loops(args, basis)
    rows = [period_table_rows(pv)[i] for i in idx]
    text = _csv_text(rows, period_table_header(entry.n))
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    cert = {"command": "periods", "entry": entry.name, "samples": N,
            "periods": [[_pair(c) for c in pv.entries[i]] for i in idx],
            "checks": checks, "pass": all(checks.values())}
    return _emit_certificate(args, cert)


def cmd_flux(args):
    entry = _entry(args)
    basis = entry.basis()
    N = args.samples or DEFAULT_QUADRATURE_N
    pv, checks = _period_check(entry, basis, N, "flux")
    idx = _loops(args, basis)
    fx = flux(entry.f, entry.theta, basis, N).entries
    header = ["loop"] + [f"x{j + 1}" for j in range(entry.n)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i in idx:
        w.writerow([i + 1] + [repr(float(x)) for x in fx[i]])
    sys.stdout.write(buf.getvalue())
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    cert = {"command": "flux", "entry": entry.name, "samples": N,
            "flux": [[float(x) for x in fx[i]] for i in idx],
            "checks": checks, "pass": all(checks.values())}
    return _emit_certificate(args, cert)


def _read_vec(raw, n=None):
    v = np.array([complex(re, im) for re, im in raw])
    if n is not None and v.shape != (n,):
        raise UsageError(f"expected {n} complex entries")
    return v


def load_family(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    paths = []
    for p in doc.get("paths", []):
        samples = np.array([_read_vec(s) for s in p])
        paths.append(DiscretePath(samples))
    if not paths:
        raise ParseError("family has no paths", field="paths")
    family = PathFamily(tuple(paths), frozenset(doc.get("frozen", [])))
    T = int(doc.get("T", 16))
    tg = doc.get("targets")
    if tg is None:
        raise ParseError("family needs targets", field="targets")
    tg = [np.array([_read_vec(x, family.n) for x in t]) if np.ndim(t) == 3 else _read_vec(t, family.n)
          for t in tg]
    if all(t.ndim == 1 for t in tg):
        schedule = TargetSchedule.linear(family, np.array(tg), T)
    else:
        schedule = TargetSchedule(np.array(tg))
    return family, schedule, doc.get("epsilon")


def cmd_deform(args):
    family, schedule, eps = load_family(args.name)
    epsilon = args.epsilon if args.epsilon is not None else (eps or 1e-3)
    h = deform_paths(family, schedule, epsilon, DeformConfig(T=schedule.T, seed=args.seed))
    cert = h.certificate()
    cond = cert["conditions"]
    print(f"fixed at t=0 and on frozen paths: {cond['fixed_on_initial_and_frozen']}")
    print(f"endpoints fixed: {cond['endpoints_fixed']}")
    print(f"max |integral - target|: {cond['max_integral_error']:.3e} (epsilon {epsilon:g})")
    if args.out:
        snaps = {"snapshots": [[[[_pair(c) for c in row] for row in snap.samples]
                                for snap in prow] for prow in h.snapshots],
                 "times": schedule.times.tolist()}
        _write_json(Path(args.out), snaps)
    cert["command"] = "deform"
    cert["pass"] = bool(cert["pass"] and cond["max_relative_quadric_residual"] < 1e-8)
    return _emit_certificate(args, cert)


def cmd_correct(args):
    entry = _entry(args)
    basis = entry.basis()
    N = args.samples or DEFAULT_QUADRATURE_N
    eps = args.epsilon if args.epsilon is not None else 1e-3
    tol = args.tol if args.tol is not None else 1e-10
    res = correct_to_null(entry.f, entry.theta, basis, entry.domain, eps, tol, N=N)
    cert = res.certificate(eps, tol)
    # independent recheck of the final periods on a finer rule
    recheck = periods(res.corrected, entry.theta, basis, 4 * N).norm()
    cert["period_norm_recheck"] = recheck
    cert["pass"] = bool(cert["pass"] and recheck <= tol)
    cert.update(command="correct", entry=entry.name)
    print(f"|P(f1)| = {res.period_norm:.3e} (tol {tol:g}); class {res.initial_class.labels()}")
    if args.out:
        out = Path(args.out)
        rows = []
        for snap in res.trace:
            for r in period_table_rows(snap.periods):
                rows.append([snap.t] + r)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + period_table_header(entry.n))
        for r in rows:
            w.writerow([repr(float(r[0])), r[1]] + [repr(float(x)) for x in r[2:]])
        out.with_name(out.name + ".periods.csv").write_text(buf.getvalue())
        samples = {}
        for loop in basis:
            z = loop.point(np.arange(64) / 64)
            samples[str(loop.index)] = {"z": [_pair(x) for x in z],
                                        "f": [[_pair(c) for c in row] for row in res.corrected(z)]}
        _write_json(out, {"zeta_star": cert["zeta_star"], "loop_samples": samples,
                          "flows": [] if res.config is None else res.config.describe()})
    return _emit_certificate(args, cert)


def _surface(entry, n_angular):
    basis = entry.basis()
    c = complex(entry.domain.punctures[0]) if entry.domain.punctures else 0j
    r = float(basis[0].radius) if basis else 1.0
    grid = PolarGrid.spanning(c, r / 2, 2 * r, n_angular)
    base = c + r
    try:
        return integrate_real(entry.f, entry.theta, base, np.zeros(entry.n), grid), True
    except NonzeroRealPeriods:
        log.warning("%s has real periods on C*; exporting one sheet without closing the seam",
                    entry.name)
        return integrate_real(entry.f, entry.theta, base, np.zeros(entry.n), grid,
                              single_valued=False), False


def cmd_mesh(args):
    if not args.out:
        raise UsageError("mesh needs --out PATH")
    entry = _entry(args)
    grid, closed = _surface(entry, args.samples or 64)
    text = export_mesh(grid, args.out)
    nv = text.count("\nv ")
    nf = text.count("\nf ")
    print(f"wrote {args.out}: {nv} vertices, {nf} triangles")
    cert = {"command": "mesh", "entry": entry.name, "vertices": nv, "triangles": nf,
            "seam_closed": closed, "plaquette_defect": grid.plaquette_defect,
            "pass": bool(grid.plaquette_defect < 1e-8)}
    return _emit_certificate(args, cert)


def cmd_verify(args):
    entry = _entry(args)
    grid, closed = _surface(entry, args.samples or 64)
    basis = entry.basis()
    pv = periods(entry.f, entry.theta, basis)
    cls = classify(entry.f, entry.domain, basis)
    rep = verify_minimal(grid, period_table=period_table_rows(pv), class_bits=list(cls.bits))
    print(f"laplacian {rep.laplacian_max:.3e} (threshold {rep.laplacian_threshold:.3e})")
    print(f"conformality {rep.conformality_max:.3e} (threshold {rep.conformality_threshold:.3e})")
    print("pass" if rep.passed else "FAIL")
    cert = rep.to_json()
    cert.update(command="verify", entry=entry.name, seam_closed=closed)
    return _emit_certificate(args, cert, sidecar=False)


COMMANDS = {
    "classify": (cmd_classify, "Z2 isotopy class of each basis loop"),
    "periods": (cmd_periods, "period table of f*theta over the homology basis"),
    "flux": (cmd_flux, "flux (imaginary periods) over the homology basis"),
    "deform": (cmd_deform, "deform a JSON path family toward target integrals"),
    "correct": (cmd_correct, "correct an entry to vanishing periods by a spray"),
    "mesh": (cmd_mesh, "export the surface as an OBJ mesh"),
    "verify": (cmd_verify, "finite-difference minimality check"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="ambient dimension (checked against the data)")
    common.add_argument("--samples", type=int, metavar="N", help="quadrature / grid sample count")
    common.add_argument("--epsilon", type=float, help="approximation tolerance")
    common.add_argument("--tol", type=float, help="period tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--catalog", metavar="PATH", help="catalog JSON (default: shipped)")
    common.add_argument("--out", metavar="PATH", help="output file; certificates go next to it")
    common.add_argument("--loop", type=int, help="1-based basis loop index")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = _Parser(prog="nullcurves", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("name", help="catalog entry name or JSON file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command][0](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NullCurveError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
