"""Batch front end: parse a spec, dispatch a check, write a JSON report.

Exit codes: 0 for a conclusive run (including conclusive negatives), 2 for an
inconclusive run, 1 for errors (bad spec, unsupported dimension, caps).
Reports carry a versioned schema tag and the spec hash for provenance; output
files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import (
    DimensionCapError,
    TruncationError,
    assemble_cylinder_product,
    assemble_on_torus,
    numerical_index,
)
from .chern import (
    CallableSymbolField,
    EllipticityLostError,
    MappingTorusGrid,
    SpecSymbolField,
    TraceTailError,
    UnsupportedDimensionError,
    homotopy_invariance_check,
    topological_index,
)
from .ellipticity import CosphereGrid, check_elliptic, check_elliptic_orbit
from .specio import SpecFormatError, load_spec, spec_hash
from .uniformize import (
    apply_I,
    apply_I_inv,
    apply_J,
    apply_J_inv,
    apply_K,
    apply_K_inv,
    conjugate_shift_check,
    factorization_check,
    make_cylinder_sample,
)

SCHEMA = "shiftindex-report/1"

COMMANDS = ("ellipticity", "index", "equality", "uniformize-verify",
            "topo", "homotopy-scan", "corpus")


class CommandError(RuntimeError):
    """A run failed for a reason the exit-code contract maps to 1."""


def _torus_grid(d: int) -> CosphereGrid:
    if d == 1:
        return CosphereGrid.for_torus(1, x_res=16, dir_res=16)
    return CosphereGrid.for_torus(d, x_res=8, dir_res=8)


def _orbit_grid(d: int) -> CosphereGrid:
    return CosphereGrid.for_orbit(d, x_res=4, dir_res=6, t_res=4)


def _index_levels(d: int, K: int):
    """Truncation schedule for the stability check at base dimension d."""
    if d == 1:
        return (max(K - 4, 6), K)
    return (K - 1, K)


def _default_K(d: int) -> int:
    return 16 if d == 1 else 5


def run_ellipticity(spec, args) -> dict:
    N_sched = (8, 16, 32, args.N) if args.N > 32 else (8, 16, 32)
    rep = check_elliptic(spec, _torus_grid(spec.d), N_schedule=N_sched)
    result = {"torus": rep.to_json()}
    status = 0 if rep.status in ("elliptic", "not_elliptic") else 2
    if rep.is_elliptic:
        orb = check_elliptic_orbit(spec, _orbit_grid(spec.d), N_schedule=N_sched)
        result["orbit"] = orb.to_json()
        if orb.R_found is None:
            status = 2
    return {"result": result, "exit": status}


def _require_elliptic(spec):
    rep = check_elliptic(spec, _torus_grid(spec.d), N_schedule=(8, 16, 32))
    if rep.status == "not_elliptic":
        raise CommandError("spec is not elliptic; index undefined")
    if rep.status != "elliptic":
        return False
    return True


def run_index(spec, args) -> dict:
    conclusive = _require_elliptic(spec)
    Ks = _index_levels(spec.d, args.K or _default_K(spec.d))
    ops = [assemble_cylinder_product(spec, K, args.H, 1.0, 0.0) for K in Ks]
    rep = numerical_index(ops)
    result = {"levels": list(Ks), "H": args.H, "index": rep.to_json()}
    status = 0 if (rep.status == "ok" and conclusive) else 2
    return {"result": result, "exit": status}


def run_equality(spec, args) -> dict:
    conclusive = _require_elliptic(spec)
    Ks = _index_levels(spec.d, args.K or _default_K(spec.d))
    repB = numerical_index(
        [assemble_cylinder_product(spec, K, args.H, 1.0, 0.0) for K in Ks])
    KsD = (12, 16) if spec.d == 1 else (6, 8)
    repD = numerical_index([assemble_on_torus(spec, K) for K in KsD])
    both_ok = repB.status == "ok" and repD.status == "ok"
    result = {
        "base_index": repD.to_json(),
        "product_index": repB.to_json(),
        "match": bool(both_ok and repB.index == repD.index),
    }
    status = 0 if (both_ok and conclusive) else 2
    return {"result": result, "exit": status}


def run_uniformize_verify(spec, args) -> dict:
    d = spec.d
    theta = spec.isometry.theta_array
    rng = np.random.default_rng(7)
    freq = rng.integers(-2, 3, size=d)

    def sample(*coords):
        *x, t = coords
        phase = sum(2j * np.pi * f * xi for f, xi in zip(freq, x))
        return np.exp(phase) * np.exp(-0.5 * (t ** 2)) / np.pi ** 0.25

    half = 10
    m = 8
    N_f = 8
    cyl = make_cylinder_sample(sample, d=d, x_res=16, t_half_range=half,
                               steps_per_unit=m)
    fib = apply_I(cyl, theta, N_f=N_f)
    iso_defect = abs(cyl.norm() - fib.norm())
    shift_defect = conjugate_shift_check(cyl, theta, N_f=N_f)
    back = apply_I_inv(fib, theta)
    j0 = (back.t0 - cyl.t0) * m
    rt_I = back.values - cyl.values[..., j0:j0 + back.values.shape[-1]]
    gam = apply_K(fib, M_phi=32)
    rt_K = apply_K_inv(gam, N_f=N_f).values - fib.values
    gam_j = apply_J(cyl, M_phi=32, t_units_out=2)
    rt_J = apply_J_inv(gam_j, t_half_range=half).values - cyl.values
    fac = factorization_check(cyl, theta, N_f=N_f)
    result = {
        "isometry_defect": float(iso_defect),
        "conjugate_shift_defect": float(shift_defect),
        "I_roundtrip": float(np.max(np.abs(rt_I))),
        "K_roundtrip": float(np.max(np.abs(rt_K))),
        "J_roundtrip": float(np.max(np.abs(rt_J))),
        "J_quasi_defect": float(gam_j.quasi_defect),
        "factorization_defect": float(fac),
    }
    result["pass"] = bool(all(v < args.tol for v in result.values()))
    return {"result": result, "exit": 0}


def _topo_field_and_grid(spec, args):
    if spec.d < 2:
        raise UnsupportedDimensionError(
            "topological index requires base dimension n > 1")
    orb = check_elliptic_orbit(spec, _orbit_grid(spec.d), N_schedule=(8, 16, 32))
    if orb.R_found is None:
        raise CommandError("no radius with uniformly invertible orbit symbol found")
    N = min(args.N, 16)
    grid = MappingTorusGrid(d=spec.d, R=orb.R_found, base_res=6, t_res=6,
                            ang_res=10, N=N, chunk=1024)
    return SpecSymbolField(spec, orb.R_found, N), grid


def run_topo(spec, args) -> dict:
    field, grid = _topo_field_and_grid(spec, args)
    rep = topological_index(field, grid)
    conclusive = (abs(rep["total"] - rep["rounded"]) < 0.3 and
                  rep["imag_residual"] < 0.05)
    return {"result": rep, "exit": 0 if conclusive else 2}


def run_homotopy_scan(spec, args) -> dict:
    field, grid = _topo_field_and_grid(spec, args)

    def scaled(xs, ts, angs):
        return np.e * field.batch(xs, ts, angs)

    field1 = CallableSymbolField(scaled, field.size, grid.d)
    field1.N = field.N
    rep = homotopy_invariance_check(field, field1, grid, steps=3)
    ok = rep["max_deviation"] < args.tol
    return {"result": rep, "exit": 0 if ok else 2}


_RUNNERS = {
    "ellipticity": run_ellipticity,
    "index": run_index,
    "equality": run_equality,
    "uniformize-verify": run_uniformize_verify,
    "topo": run_topo,
    "homotopy-scan": run_homotopy_scan,
}


def run_corpus(args) -> dict:
    root = Path(args.spec)
    if not root.is_dir():
        raise CommandError(f"corpus path {root} is not a directory")
    files = sorted(root.glob("*.json")) + sorted(root.glob("*.toml"))
    if not files:
        raise CommandError(f"corpus directory {root} contains no spec files")
    rows = []
    passed = failed = errored = 0
    for path in files:
        row = {"spec": path.name}
        try:
            spec = load_spec(path)
            row["spec_hash"] = spec_hash(path)
            ell = run_ellipticity(spec, args)
            row["ellipticity"] = ell["result"]["torus"]["status"]
            if ell["result"]["torus"]["is_elliptic"]:
                sub = argparse.Namespace(**vars(args))
                sub.K = args.K or _default_K(spec.d)
                eq = run_equality(spec, sub)
                row["equality"] = eq["result"]
                ok = eq["result"]["match"]
            else:
                ok = ell["exit"] == 0
            row["status"] = "pass" if ok else "fail"
            passed += ok
            failed += not ok
        except Exception as err:
            row["status"] = "error"
            row["message"] = str(err)
            errored += 1
        rows.append(row)
    result = {"rows": rows, "passed": int(passed), "failed": int(failed),
              "errors": int(errored)}
    return {"result": result, "exit": 0 if failed == 0 and errored == 0 else 2}


def _atomic_write(path, payload):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent or "."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shiftindex",
        description="ellipticity, index, and uniformization checks for "
                    "operators with shifts on flat tori")
    p.add_argument("--spec", required=True,
                   help="spec file (or directory for the corpus command)")
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--K", type=int, default=None, help="Fourier truncation cap")
    p.add_argument("--H", type=int, default=16, help="Hermite truncation size")
    p.add_argument("--N", type=int, default=32, help="fiber window half-width")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallelism degree (vectorized internals; recorded)")
    p.add_argument("--out", default=None, help="report output path")
    p.add_argument("--fixed-order", action="store_true",
                   help="fixed-order reductions for bit-reproducible reports")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    payload = {
        "schema": SCHEMA,
        "version": __version__,
        "command": args.command,
        "spec": str(args.spec),
        "config": {"K": args.K, "H": args.H, "N": args.N, "tol": args.tol,
                   "jobs": args.jobs, "fixed_order": bool(args.fixed_order)},
    }
    try:
        if args.command == "corpus":
            out = run_corpus(args)
        else:
            spec = load_spec(args.spec)
            payload["spec_hash"] = spec_hash(args.spec)
            out = _RUNNERS[args.command](spec, args)
        payload["result"] = out["result"]
        status = out["exit"]
    except (SpecFormatError, UnsupportedDimensionError, CommandError,
            DimensionCapError, TruncationError, EllipticityLostError,
            TraceTailError, FileNotFoundError, NotImplementedError) as err:
        payload["error"] = str(err)
        status = 1
    payload["exit"] = status
    if args.out:
        _atomic_write(args.out, payload)
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
