"""Command-line driver.

    python -m viscospec run --scenario tg.cfg --out results/
    python -m viscospec defect --scenario smooth.cfg --eps 0.1,0.05,0.025
    python -m viscospec uniqueness --scenario coarse.cfg --reference fine.cfg
    python -m viscospec basis --nx 16 --k 8
    python -m viscospec check

Exit status: 0 when every asserted inequality holds, 1 on a violation, 2 on
usage errors (bad flags, unreadable or invalid config).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .checks import run_checks
from .diagnostics import defect_study, verify_energy_inequality
from .errors import InitialMismatch, NonFinite, UnknownGenerator
from .integrator import run
from .ledger import CSV_COLUMNS
from .neumann_basis import RectGrid, assemble, eigensolve, gram_matrices
from .relative_energy import verify_uniqueness
from .scenarios import load_scenario, make_initial
from .snapshot import save_basis, save_snapshot

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits, locale independent."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def _scenario(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"scenario file not found: {p}")
    try:
        return load_scenario(p)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"invalid scenario {p}: {exc}") from exc


def _initial(sc):
    try:
        return make_initial(sc)
    except (UnknownGenerator, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_run(args) -> int:
    sc = _scenario(args.scenario)
    traj = run(_initial(sc), sc.config)
    out = Path(args.out)
    write_csv(out / "energy.csv", CSV_COLUMNS, (r.csv_values() for r in traj.ledger))
    if args.snapshot:
        save_snapshot(out / f"{sc.name}_final.snap", traj.final)
    chk = verify_energy_inequality(traj, args.tol)
    print(f"{sc.name}: {len(traj.ledger) - 1} steps to t={traj.final.t:.6g}, "
          f"worst energy excess {chk.worst_violation:.3e} (tol {args.tol:g})")
    return EXIT_OK if chk.passed else EXIT_VIOLATION


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_defect(args) -> int:
    sc = _scenario(args.scenario)
    eps = _floats(args.eps)
    _initial(sc)
    try:
        rep = defect_study(sc, eps, tol=args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_csv(Path(args.out) / "defect.csv",
              ("eps", "t", "D_proxy", "corrector_proxy", "reg_accum"), rep.rows())
    for e, c, ok in zip(rep.eps_values, rep.fitted_c, rep.dominated):
        print(f"eps={e:g}: fitted c={c:.6g} {'ok' if ok else 'NOT dominated'}")
    print(f"spread of fitted c: {rep.c_spread():.3%}")
    return EXIT_OK if bool(np.all(rep.dominated)) else EXIT_VIOLATION


def _gronwall_c(text: str):
    if text.strip().lower() == "fit":
        return None
    try:
        c = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'fit', got {text!r}") from None
    if not c >= 0:
        raise argparse.ArgumentTypeError("c must be non-negative")
    return c


def cmd_uniqueness(args) -> int:
    a = _scenario(args.scenario)
    b = _scenario(args.reference or args.scenario)
    ta = run(_initial(a), a.config)
    tb = run(_initial(b), b.config)
    try:
        rep = verify_uniqueness(ta, tb, c=args.c, tol=args.tol, tol0=args.tol0)
    except InitialMismatch as exc:
        print(f"initial mismatch: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    s = rep.series
    env = s.envelope(rep.c) if np.isfinite(rep.c) else np.full_like(s.rel_energy, np.inf)
    write_csv(Path(args.out) / "relenergy.csv", ("t", "rel_energy", "coeff", "envelope"),
              zip(s.times, s.rel_energy, s.coeff, env))
    print(f"rel_energy(0)={rep.rel0:.3e} sup={rep.sup_rel:.3e} c={rep.c:.6g} "
          f"{'pass' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_basis(args) -> int:
    ny = args.ny or args.nx
    grid = RectGrid(args.nx, ny, args.lx, args.ly)
    asm = assemble(grid)
    basis = eigensolve(grid, args.k, asm)
    out = Path(args.out)
    write_csv(out / "eigen.csv", ("j", "lambda"), ((j + 1, p.lam) for j, p in enumerate(basis)))
    save_basis(out / "basis.bin", basis)
    G, W = gram_matrices(basis, asm)
    lam = np.array([p.lam for p in basis])
    ok = (np.abs(lam[: min(4, len(lam))] - 1).max() <= 1e-10
          and np.abs(G - np.eye(len(lam))).max() <= 1e-10
          and np.abs(W - np.diag(lam)).max() <= 1e-8)
    print(" ".join(f"{x:.10g}" for x in lam))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_check(args) -> int:
    results = run_checks()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="viscospec", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one scenario, write energy.csv")
    r.add_argument("--scenario", required=True)
    r.add_argument("--out", default=".")
    r.add_argument("--tol", type=float, default=1e-8)
    r.add_argument("--snapshot", action="store_true", help="also save the final state")
    r.set_defaults(fn=cmd_run)

    d = sub.add_parser("defect", help="eps sweep, write defect.csv")
    d.add_argument("--scenario", required=True)
    d.add_argument("--eps", default="0.1,0.05,0.025,0.0125")
    d.add_argument("--out", default=".")
    d.add_argument("--tol", type=float, default=1e-10)
    d.set_defaults(fn=cmd_defect)

    u = sub.add_parser("uniqueness", help="relative energy of two runs, write relenergy.csv")
    u.add_argument("--scenario", required=True)
    u.add_argument("--reference", help="defaults to --scenario")
    u.add_argument("--c", type=_gronwall_c, default=1.0,
                   help="Gronwall constant, or 'fit' for the smallest admissible one")
    u.add_argument("--tol", type=float, default=1e-12)
    u.add_argument("--tol0", type=float, default=1e-2)
    u.add_argument("--out", default=".")
    u.set_defaults(fn=cmd_uniqueness)

    b = sub.add_parser("basis", help="rectangle eigenbasis, write eigen.csv and basis.bin")
    b.add_argument("--nx", type=int, required=True)
    b.add_argument("--ny", type=int, default=None)
    b.add_argument("--lx", type=float, default=1.0)
    b.add_argument("--ly", type=float, default=1.0)
    b.add_argument("--k", type=int, default=8)
    b.add_argument("--out", default=".")
    b.set_defaults(fn=cmd_basis)

    c = sub.add_parser("check", help="run the property suite")
    c.set_defaults(fn=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFinite as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
