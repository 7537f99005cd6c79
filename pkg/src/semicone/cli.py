"""Command-line interface.

Subcommands mirror the library surface: classify, trace, normalform,
branches, propagate, oscillatory, sweep, fit, run.  Inputs are JSON files
(field definitions, paths, phase profiles, run configs); outputs are JSON or
CSV with deterministic formatting.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import classify as classify_mod
from . import experiments, locus, normalform, oscillatory
from .config import DEFAULT_TOL
from .eigenpath import track_branches
from .field import ControlField, NLevelHamiltonianMap, load_field
from .paths import ControlPath, load_path
from .propagate import propagate_2level


def _parse_point(text: str) -> np.ndarray:
    return np.array([float(p) for p in text.split(",")])


def _tol(args) -> "DEFAULT_TOL.__class__":
    tol = DEFAULT_TOL
    if getattr(args, "tol_rank", None) is not None:
        tol = tol.with_(rank=args.tol_rank)
    return tol


def _load_cf(path: str) -> ControlField:
    fld = load_field(path)
    if not isinstance(fld, ControlField):
        raise SystemExit("this command needs a two-component control field")
    return fld


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    fld = _load_cf(args.field)
    x = _parse_point(args.point)
    tol = _tol(args)
    if len(x) == 2:
        cls = classify_mod.classify_point(fld, x, tol)
    else:
        cls = classify_mod.classify_family_point(fld, x, tol)
    print(json.dumps(cls.to_dict(), indent=1, sort_keys=True))
    return 0


def cmd_trace(args) -> int:
    fld = _load_cf(args.field)
    seed = _parse_point(args.seed)
    curve = locus.trace_locus(fld, seed, step=args.step, max_len=args.max_len)
    lines = ["index,u,v,z,tu,tv,tz,verdict"]
    for i in range(len(curve)):
        p, t = curve.vertices[i], curve.tangents[i]
        verdict = curve.markers[i].verdict.value if curve.markers else ""
        lines.append(f"{i},{p[0]!r},{p[1]!r},{p[2]!r},"
                     f"{t[0]!r},{t[1]!r},{t[2]!r},{verdict}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    tps = locus.turning_points(curve)
    companion = args.out + ".turning.json"
    with open(companion, "w", encoding="utf-8") as fh:
        json.dump([{"point": [repr(float(c)) for c in tp.point],
                    "zdd": repr(tp.zdd), "degenerate": tp.degenerate}
                   for tp in tps], fh, indent=1)
        fh.write("\n")
    print(f"traced {len(curve)} vertices, {len(tps)} turning point(s) -> "
          f"{args.out}, {companion}")
    return 0


def cmd_normalform(args) -> int:
    fld = _load_cf(args.field)
    x = _parse_point(args.point)
    steps = [int(s) for s in args.steps.split(",")] if args.steps else [1, 2]
    report: dict = {"point": [float(c) for c in x], "steps": steps}
    work = fld
    if 1 in steps:
        theta, work = normalform.left_equalize_gradients(work, x)
        report["theta"] = theta
    y = x
    if 2 in steps:
        rot, work = normalform.align_nonconical(work, y)
        report["rotation"] = [[float(v) for v in row] for row in rot]
        y = normalform.EquivalenceTransform(rotation=rot).map_point(y)
    report["jet"] = normalform.second_order_jet(work, y)
    if work.arity == 2:
        report["SC"] = normalform.check_SC(work, y).to_dict()
    else:
        report["SCP"] = normalform.check_SCP(work, y).to_dict()
        try:
            report["beta"] = normalform.invariant_beta(work, y)
        except normalform.TransformError:
            pass
        try:
            report["m0"] = normalform.invariant_m0(work, y)
        except normalform.TransformError:
            pass
    out = json.dumps(report, indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    return 0


def cmd_branches(args) -> int:
    fld = _load_cf(args.field)
    path = load_path(args.path)
    br = track_branches(fld, path, z=args.z, n=args.grid)
    lines = ["t,lam0,lam1,phi0x,phi0y,phi1x,phi1y,theta"]
    for k in range(len(br.t)):
        lines.append(f"{br.t[k]!r},{br.lam0[k]!r},{br.lam1[k]!r},"
                     f"{br.phi0[k, 0]!r},{br.phi0[k, 1]!r},"
                     f"{br.phi1[k, 0]!r},{br.phi1[k, 1]!r},{br.theta[k]!r}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"tracked {len(br.t)} nodes, crossings at "
          f"{[round(c, 6) for c in br.crossing_times]} -> {args.out}")
    return 0


def cmd_propagate(args) -> int:
    fld = _load_cf(args.field)
    path = load_path(args.path)
    from .experiments import eigenvector_at
    psi0 = eigenvector_at(fld, path, args.z, 0.0, -1).astype(complex)
    res = propagate_2level(fld, path, args.z, args.eps, psi0)
    psi = res.psi
    payload = {
        "eps": args.eps,
        "n_steps": res.n_steps,
        "norm_drift": repr(res.norm_drift),
        "psi_re": [repr(float(np.real(c))) for c in psi],
        "psi_im": [repr(float(np.imag(c))) for c in psi],
    }
    if args.frame == "rotating":
        br = track_branches(fld, path, z=args.z, n=4000)
        from .propagate import rotating_frame_states
        y = rotating_frame_states(br, args.eps, psi, tau=1.0)
        payload["rotating_re"] = [repr(float(np.real(c))) for c in y]
        payload["rotating_im"] = [repr(float(np.imag(c))) for c in y]
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"propagated in {res.n_steps} steps -> {args.out}")
    return 0


def cmd_oscillatory(args) -> int:
    with open(args.profile, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    profile = oscillatory.PhaseProfile.from_polynomial(
        float(spec["a"]), float(spec["b"]),
        spec["phase"]["poly"], spec.get("amp", {}).get("poly", [1.0]))
    lo, hi, n = args.eps_grid.split(":")
    grid = np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(n))
    fit = oscillatory.vdc_exponent(profile, args.k, grid)
    payload = {
        "k": fit.k,
        "slope": repr(fit.slope),
        "constant": repr(fit.constant),
        "scale_factor": repr(fit.scale_factor),
        "eps": [repr(float(e)) for e in fit.eps_grid],
        "sup": [repr(float(s)) for s in fit.sup_values],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"k={fit.k}: slope {fit.slope:.4f}, constant {fit.constant:.4f} -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    fld = _load_cf(args.field)
    path = load_path(args.path)
    z_grid = [float(z) for z in args.z_grid.split(",")]
    if args.eps_grid:
        lo, hi, n = args.eps_grid.split(":")
        eps_grid = np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(n))
    else:
        eps_grid = experiments.default_eps_grid()
    result = experiments.ensemble_sweep(fld, path, z_grid, eps_grid)
    transfer = [z in set(float(x) for x in args.transfer_z.split(","))
                if args.transfer_z else False for z in result.z_grid]
    result.to_csv(args.out, transfer)
    if args.dat:
        result.to_dat(args.dat)
    print(f"sweep {result.metadata['run_id']}: "
          f"{len(result.eps_grid)} x {len(result.z_grid)} cells -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    rows = np.loadtxt(args.input, delimiter=",", skiprows=1,
                      usecols=(1, 3))
    by_eps: dict[float, float] = {}
    for eps, defect in rows:
        by_eps[eps] = max(by_eps.get(eps, 0.0), defect)
    eps = sorted(by_eps)
    fit = experiments.fit_rate([by_eps[e] for e in eps], eps)
    payload = {"slope": repr(fit.slope), "intercept": repr(fit.intercept),
               "constant": repr(fit.constant), "floored": fit.floored}
    out = json.dumps(payload, indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    return 0


def cmd_run(args) -> int:
    from .pipeline import run_config
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    results = run_config(config)
    failures = [r for r in results if not r["passed"]]
    for r in results:
        mark = "PASS" if r["passed"] else "FAIL"
        print(f"[{mark}] {r['name']}: {r['detail']}")
    return 0 if not failures else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semicone",
                                description="eigenvalue-intersection toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="classify a candidate intersection")
    c.add_argument("--field", required=True)
    c.add_argument("--point", required=True, help="u,v or u,v,z")
    c.add_argument("--tol-rank", type=float, dest="tol_rank")
    c.set_defaults(func=cmd_classify)

    t = sub.add_parser("trace", help="trace the singular locus")
    t.add_argument("--field", required=True)
    t.add_argument("--seed", required=True, help="u,v,z")
    t.add_argument("--step", type=float, default=1e-3)
    t.add_argument("--max-len", type=float, default=4.0, dest="max_len")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_trace)

    nf = sub.add_parser("normalform", help="reduction steps + condition report")
    nf.add_argument("--field", required=True)
    nf.add_argument("--point", required=True)
    nf.add_argument("--steps", default="1,2")
    nf.add_argument("--out")
    nf.set_defaults(func=cmd_normalform)

    b = sub.add_parser("branches", help="track eigenvalue/vector branches")
    b.add_argument("--field", required=True)
    b.add_argument("--path", required=True)
    b.add_argument("--z", type=float)
    b.add_argument("--grid", type=int, default=2000)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_branches)

    pr = sub.add_parser("propagate", help="adiabatic propagation")
    pr.add_argument("--field", required=True)
    pr.add_argument("--path", required=True)
    pr.add_argument("--z", type=float)
    pr.add_argument("--eps", type=float, required=True)
    pr.add_argument("--frame", choices=("physical", "rotating"), default="physical")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_propagate)

    o = sub.add_parser("oscillatory", help="oscillatory-integral decay fit")
    o.add_argument("--profile", required=True)
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--eps-grid", required=True, dest="eps_grid", help="lo:hi:n")
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oscillatory)

    s = sub.add_parser("sweep", help="(eps, z) ensemble sweep")
    s.add_argument("--field", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--z-grid", required=True, dest="z_grid", help="z1,z2,...")
    s.add_argument("--eps-grid", dest="eps_grid", help="lo:hi:n")
    s.add_argument("--transfer-z", dest="transfer_z",
                   help="comma list of z expected to transfer")
    s.add_argument("--out", required=True)
    s.add_argument("--dat")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fit", help="log-log rate fit of a sweep CSV")
    f.add_argument("--input", required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("run", help="full pipeline from a config file")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
