"""``gapcross`` command line.

Every run writes its artifacts atomically into ``--out`` together with a
manifest holding the resolved configuration and artifact hashes;
``gapcross replay`` re-runs a manifest and compares the hashes.

Exit codes: 0 success, 1 acceptance failure, 2 invalid input, 3 a
numerical contract was violated (the message names it).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import eigensolve
from .specio import SpecError, load_potential, manifest, pmap, potential_to_dict, write_csv, write_json

SEED_ENV = "GAPCROSS_SEED"


class ContractError(RuntimeError):
    """A numerical invariant failed; ``invariant`` names it."""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant


def _angle(args):
    from .rotation import Angle

    if getattr(args, "tan", None) is not None:
        try:
            return Angle(Fraction(args.tan))
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"--tan: not a rational number: {args.tan!r}") from None
    if getattr(args, "theta", None) is not None:
        if not 0.0 <= args.theta < math.pi / 2:
            raise SpecError("--theta must lie in [0, pi/2)")
        return Angle.from_radians(args.theta)
    raise SpecError("give --tan p/q or --theta radians")


def _potential(args, dim: int):
    from .potentials import default_potential_2d, default_step_potential

    if getattr(args, "potential", None):
        V = load_potential(args.potential)
        if V.ndim != dim:
            raise SpecError(f"{args.potential}: expected a {dim}D potential, got {V.ndim}D")
        return V
    return default_step_potential() if dim == 1 else default_potential_2d()


def _check_h(h: float):
    if not (h > 0 and abs(1 / h - round(1 / h)) < 1e-9):
        raise SpecError(f"h must be 1/N for an integer N, got {h}")


# -- subcommands ---------------------------------------------------------------

def cmd_bands(args, out: Path):
    from .bands1d import band_structure

    V = _potential(args, 1)
    bs = band_structure(V, args.emax, method=args.method)
    rows = [{"kind": "band", "k": i + 1, "lower": lo, "upper": hi, "open": True} for i, (lo, hi) in enumerate(bs.bands)]
    rows += [{"kind": "gap", "k": g.k, "lower": g.lower, "upper": g.upper, "open": g.open} for g in bs.gaps]
    return [write_csv(out / "bands.csv", rows)], {"potential": potential_to_dict(V), **bs.meta}


def cmd_dislocate(args, out: Path):
    from .dislocation import track_branches

    V = _potential(args, 1)
    _check_h(args.h)
    fam = track_branches(V, args.gap, args.n, args.t_steps, args.h)
    rows = [{"branch": br.j, "t": t, "value": v, "entry": br.entry_edge, "exit": br.exit_edge}
            for br in fam.branches for t, v in zip(br.t, br.values)]
    cfg = {"potential": potential_to_dict(V), "gap": fam.gap, "t_grid_snapped": fam.t_grid, "seams": fam.seams}
    return [write_csv(out / "branches.csv", rows, ["branch", "t", "value", "entry", "exit"])], cfg


def cmd_crossings(args, out: Path):
    from .dislocation import band_count_check, crossing_count

    V = _potential(args, 1)
    _check_h(args.h)
    checks = [band_count_check(V, args.n, args.gap, t, args.h) for t in (0.0, 1.0)]
    for c in checks:
        if not c["ok"]:
            raise ContractError("band eigenvalue count", f"{c['count']} != {c['expected']} at t={c['t']}; "
                                + c.get("advice", ""))
    rep = crossing_count(V, args.gap, args.n, args.t_steps, args.h)
    d = {**rep.to_dict(), "band_checks": checks}
    path = write_json(out / "crossings.json", d)
    if rep.seams:
        raise ContractError("continuation without seams", f"{rep.seams} seams in gap {args.gap}")
    return [path], {"potential": potential_to_dict(V)}


def cmd_strip(args, out: Path):
    from .dislocation import strip_find_t, strip_gaps, strip_section_spectrum

    V = _potential(args, 2)
    _check_h(args.h)
    gaps = strip_gaps(V, args.h)
    if not 1 <= args.gap <= len(gaps):
        raise SpecError(f"--gap {args.gap}: only {len(gaps)} strip gaps found")
    gap = gaps[args.gap - 1]
    if args.energy is not None:
        r = strip_find_t(V, args.energy, args.n, gap, args.h)
        path = write_json(out / "strip_find_t.json", {**r, "gap": gap})
        return [path], {"potential": potential_to_dict(V), "gap": gap}
    r, op = strip_section_spectrum(V, args.t, args.n, gap, "periodic", args.h)
    rows = [{"t": op.meta["t_snapped"], "value": float(v)} for v in r.values]
    return [write_csv(out / "strip.csv", rows, ["t", "value"])], {
        "potential": potential_to_dict(V), "gap": gap, "t_snapped": op.meta["t_snapped"]}


def _sdos_task(task):
    from .sdos import box_gap_count

    V, n, window, h = task
    return box_gap_count(V, n, window, h)["count"]


def cmd_sdos(args, out: Path):
    from .potentials import DislocationPotential, InterfacePotential
    from .sdos import fit_through_origin

    V = _potential(args, 2)
    if isinstance(V, DislocationPotential):
        ref = V.base
    elif isinstance(V, InterfacePotential):
        ref = V.right
    elif args.t is not None:
        V, ref = DislocationPotential(V, args.t), V
    else:
        raise SpecError("sdos needs a dislocation or interface potential, or --t")
    _check_h(args.h)
    window = tuple(args.window)
    if not window[1] > window[0]:
        raise SpecError("--window must be increasing")
    sizes = list(args.sizes)
    raw = pmap(_sdos_task, [(V, n, window, args.h) for n in sizes], args.jobs)
    ref_c = pmap(_sdos_task, [(ref, n, window, args.h) for n in sizes], args.jobs)
    rows = []
    for n, r, f in zip(sizes, raw, ref_c):
        rows.append({"n": n, "raw": r, "reference": f, "differenced": r - f, "surface": (r - f) / n,
                     "upper": r / (n * math.log(n)) if n > 1 else math.nan})
    c, s = fit_through_origin(sizes, [r["differenced"] for r in rows])
    p1 = write_csv(out / "sdos.csv", rows)
    p2 = write_json(out / "sdos.json", {"slope": c, "sigma": s, "window": window, "h": args.h, "rows": rows})
    return [p1, p2], {"potential": potential_to_dict(V)}


def cmd_rotate(args, out: Path):
    from .rotation import find_alignment, orbit_frequency

    if args.action == "align":
        ang = _angle(args)
        w = find_alignment(ang, args.t, args.eps, args.kmax)
        d = {"found": w is not None, **(w.to_dict() if w else {**ang.describe(), "t": args.t, "eps": args.eps})}
        return [write_json(out / "alignment.json", d)], {}
    if args.action == "orbit":
        ang = _angle(args)
        st = orbit_frequency(ang, args.t, args.eps, args.M)
        return [write_json(out / "orbit.json", st.to_dict())], {}
    # residual ladder on the default 2D potential (or a given one)
    from .dislocation import approximate_eigenfunction, bulk_gaps_2d, strip_find_t, strip_gaps
    from .rotation import rotation_residual, theta_ladder

    V = _potential(args, 2)
    _check_h(args.h)
    a, b = bulk_gaps_2d(V, args.h)[0]
    E = 0.5 * (a + b) if args.energy is None else args.energy
    sg = strip_gaps(V, args.h)[0]
    f = strip_find_t(V, E, args.n, sg, args.h)
    if not f["found"]:
        raise ContractError("gap eigenvalue near E", f"no strip eigenvalue within (b-a)/100 of {E}")
    eig = approximate_eigenfunction(V, f["t"], E, args.n, args.h, gap=sg, n_left=f.get("n_left"))
    rows = []
    for i, ang in enumerate(theta_ladder(eig["t"], tuple(args.ks))):
        w = find_alignment(ang, eig["t"], 1e-4, 10 * max(args.ks))
        r = rotation_residual(V, ang, eig["eigenvalue"], eig, w, certify=args.certify and i == 0)
        rows.append({k: r.get(k) for k in ("tan", "theta", "k", "eta", "residual", "r0", "potential_term",
                                            "deviation", "certificate_count")})
    return [write_csv(out / "residual.csv", rows)], {"gap": (a, b), "E": E, "t": eig["t"],
                                                       "eigenvalue": eig["eigenvalue"]}


def cmd_muffin(args, out: Path):
    from . import muffintin as mt

    if not 0 < args.r < 0.5:
        raise SpecError("--r must lie in (0, 1/2)")
    ladder = tuple(args.ladder)
    lad = " ".join(f"{h:g}" for h in ladder)
    if args.action == "discs":
        ds = mt.bessel_disc_eigenvalues(args.r, args.k)
        rows = [{"k": i + 1, "m": m, "s": s, "value": v, "source": "bessel", "h_ladder": ""}
                for i, (v, (m, s)) in enumerate(zip(ds.values, ds.labels))]
        return [write_csv(out / "discs.csv", rows)], {"distinct": ds.distinct()}
    if args.action == "curve":
        tg = mt.default_t_grid(args.r, args.points)
        try:
            curve = mt.cut_disc_curve(args.r, args.k, tg, ladder, jobs=args.jobs)
        except ArithmeticError as e:
            raise ContractError("strict decrease of lambda_k(t)", str(e)) from None
        return [write_csv(out / "curve.csv", list(curve.rows()))], {"t_grid": tg}
    if args.action == "dislocate":
        rep = mt.muffin_dislocation_report(args.r, None, args.gap, ladder)
        return [write_json(out / "muffin_dislocation.json", rep)], {}
    if args.action == "rotate":
        ang = _angle(args)
        scan = mt.rotated_gap_scan(args.r, ang, None, tuple(args.window), ladder)
        geo = scan["geometry"]
        rows = [{"k": i + 1, "theta": geo.angle.theta, "value": v, "source": f"cut disc ({d.i},{d.j})",
                 "h_ladder": lad, "t_eff": d.t_eff} for i, (v, d) in enumerate(zip(scan["values"], scan["discs"]))]
        p1 = write_csv(out / "rotated_gap.csv", rows, ["k", "theta", "value", "source", "h_ladder", "t_eff"])
        p2 = write_json(out / "geometry.json", geo.summary())
        return [p1, p2], {"gap": scan["gap"]}
    # finite height
    ang = _angle(args)
    _check_h(args.h)
    rep = mt.finite_height_spectrum(args.r, ang, args.height, ((-2.0, 2.0), tuple(args.window)), None, args.h)
    rows = [{"k": i + 1, "theta": rep["theta"], "value": v, "source": f"height {args.height:g}", "h_ladder": f"{args.h:g}"}
            for i, v in enumerate(rep["values"])]
    return [write_csv(out / "finite.csv", rows, ["k", "theta", "value", "source", "h_ladder"])], {
        "gap": rep["gap"], "count": rep["count"], "dimension": rep["dimension"]}


def cmd_verify(args, out: Path):
    from .acceptance import run_all

    def echo(res):
        print(res.line(), flush=True)

    results = run_all(args.only or None, seed=args.seed, echo=echo)
    rep = {"seed": args.seed, "results": [r.to_dict() for r in results],
           "passed": all(r.passed for r in results)}
    path = write_json(out / "acceptance.json", rep)
    return [path], {"passed": rep["passed"]}


COMMANDS = {"bands": cmd_bands, "dislocate": cmd_dislocate, "crossings": cmd_crossings, "strip": cmd_strip,
            "sdos": cmd_sdos, "rotate": cmd_rotate, "muffin": cmd_muffin, "verify": cmd_verify}


# -- parser ----------------------------------------------------------------------

def _add_angle(p):
    p.add_argument("--tan", help="exact rational tan(theta), e.g. 3/4")
    p.add_argument("--theta", type=float, help="angle in radians")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapcross", description=__doc__.splitlines()[0])
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--seed", type=int, default=0, help=f"eigensolver seed (env {SEED_ENV} overrides)")
    p.add_argument("--out", default="gapcross-out", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bands", help="bands and gaps of a 1D potential")
    s.add_argument("--potential")
    s.add_argument("--emax", type=float, default=100.0)
    s.add_argument("--method", choices=["exact", "rk4"])

    for name in ("dislocate", "crossings"):
        s = sub.add_parser(name, help="branch tracking" if name == "dislocate" else "net crossing count N_k")
        s.add_argument("--potential")
        s.add_argument("--gap", type=int, default=1)
        s.add_argument("--n", type=int, default=4)
        s.add_argument("--h", type=float, default=1e-3)
        s.add_argument("--t-steps", type=int, default=50)

    s = sub.add_parser("strip", help="strip gap eigenvalues, or the t hitting --energy")
    s.add_argument("--potential")
    s.add_argument("--gap", type=int, default=1)
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--h", type=float, default=1 / 32)
    s.add_argument("--t", type=float, default=0.5)
    s.add_argument("--energy", type=float)

    s = sub.add_parser("sdos", help="gap eigenvalue counts on growing boxes")
    s.add_argument("--potential")
    s.add_argument("--t", type=float, help="dislocate the potential by t")
    s.add_argument("--window", type=float, nargs=2, default=[-10.0, -7.0])
    s.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 40])
    s.add_argument("--h", type=float, default=1 / 16)

    s = sub.add_parser("rotate", help="rotation: alignment witnesses, orbits, residual ladder")
    rs = s.add_subparsers(dest="action", required=True)
    a = rs.add_parser("align")
    _add_angle(a)
    a.add_argument("--t", type=float, default=0.0)
    a.add_argument("--eps", type=float, default=0.02)
    a.add_argument("--kmax", type=int, default=10**6)
    a = rs.add_parser("orbit")
    _add_angle(a)
    a.add_argument("--t", type=float, default=0.3)
    a.add_argument("--eps", type=float, default=0.1)
    a.add_argument("--M", type=int, default=10**6)
    a = rs.add_parser("residual")
    a.add_argument("--potential")
    a.add_argument("--energy", type=float)
    a.add_argument("--n", type=int, default=8)
    a.add_argument("--h", type=float, default=1 / 16)
    a.add_argument("--ks", type=int, nargs="+", default=[1000, 4000, 16000])
    a.add_argument("--certify", action="store_true")

    s = sub.add_parser("muffin", help="muffin-tin spectra")
    ms = s.add_subparsers(dest="action", required=True)
    for name in ("discs", "curve", "dislocate", "rotate", "finite"):
        m = ms.add_parser(name)
        m.add_argument("--r", type=float, default=0.4 if name in ("discs", "curve") else 0.3)
        m.add_argument("--ladder", type=float, nargs="+", default=[0.02, 0.01])
        if name in ("discs", "curve"):
            m.add_argument("--k", type=int, default=5 if name == "discs" else 2)
        if name == "curve":
            m.add_argument("--points", type=int, default=40)
        if name == "dislocate":
            m.add_argument("--gap", type=int, default=1)
        if name in ("rotate", "finite"):
            _add_angle(m)
            m.add_argument("--window", type=float, nargs=2, default=[-50.0, 50.0] if name == "rotate" else [-4.0, 4.0])
        if name == "finite":
            m.add_argument("--height", type=float, default=800.0)
            m.add_argument("--h", type=float, default=1 / 32)

    s = sub.add_parser("verify", help="run the acceptance ladder")
    s.add_argument("--only", type=int, nargs="+")

    s = sub.add_parser("replay", help="re-run a manifest and compare artifact hashes")
    s.add_argument("manifest")
    return p


def _run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if SEED_ENV in os.environ:
        try:
            args.seed = int(os.environ[SEED_ENV])
        except ValueError:
            print(f"error: {SEED_ENV} is not an integer", file=sys.stderr)
            return 2
    if args.command == "replay":
        return _replay(args.manifest)
    eigensolve.set_seed(args.seed)
    out = Path(args.out)
    try:
        paths, extra = COMMANDS[args.command](args, out)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ContractError as e:
        print(f"numerical contract violated: {e}", file=sys.stderr)
        return 3
    except (eigensolve.StagnationError, eigensolve.FactorizationError) as e:
        print(f"numerical contract violated: eigensolver: {e}", file=sys.stderr)
        return 3
    cfg = {k: v for k, v in vars(args).items() if k not in ("jobs",)}
    cfg["argv"] = [a for a in argv]
    cfg.update(extra)
    write_json(out / f"{args.command}.manifest.json", manifest(args.command, cfg, paths, args.seed))
    for p in paths:
        print(p)
    if args.command == "verify" and not extra["passed"]:
        return 1
    return 0


def _replay(path) -> int:
    p = Path(path)
    if not p.is_file():
        print(f"error: manifest not found: {p}", file=sys.stderr)
        return 2
    m = json.loads(p.read_text())
    argv = list(m["config"]["argv"])
    # drop any --out from the recorded argv and send output to a scratch dir
    clean = []
    skip = False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        clean.append(a)
    with tempfile.TemporaryDirectory() as tmp:
        code = _run(["--out", tmp, "--seed", str(m["seed"])] + clean)
        if code not in (0, 1):
            return code
        bad = []
        for name, digest in m["outputs"].items():
            q = Path(tmp) / name
            got = hashlib.sha256(q.read_bytes()).hexdigest() if q.is_file() else None
            if got != digest:
                bad.append(name)
    if bad:
        print("replay differs: " + ", ".join(bad), file=sys.stderr)
        return 3
    print("replay identical")
    return 0


def main(argv: list[str] | None = None) -> int:
    return _run(list(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    sys.exit(main())
