"""Command-line front end: ``oddaxis <command> [options]``.

Every command prints (or writes to ``--out``) a UTF-8 JSON report whose keys
come in a fixed order.  Exit codes: 0 pass, 2 usage error, 3 numerical search
failure, 4 non-convergent degree.
"""
import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import bundles as _bundles
from . import charclass as _cc
from . import degree as _degree
from . import spectra as _spectra
from . import sphere as _sphere
from .errors import (DegenerateMapError, DimensionError, NonConvergentDegreeError,
                     OddAxisError, ParameterError, SearchFailureError)

log = logging.getLogger("oddaxis")

EXIT_PASS = 0
EXIT_USAGE = 2
EXIT_SEARCH = 3
EXIT_DEGREE = 4

DEFAULT_TOLS = {
    "degree": {"residual": 0.2},
    "swtable": {},
    "eigen": {"residual": _spectra.RESIDUAL_TOL, "witness": _spectra.WITNESS_TOL},
    "span": {"sigma": 1e-6},
    "bundle": {"defect": 1e-12, "bracket": 1e-12, "sigma": 1e-5},
    "rh": {},
}

BUNDLE_CASES = ("two-gamma-rp1", "four-gamma-rp2", "gamma-eps-rp1", "two-gamma-eps-rp2")
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def dump_report(report):
    return json.dumps(_jsonable(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _quantity(value, tol, method, passed=None):
    q = {"value": value, "tol": tol, "method": method}
    if passed is not None:
        q["pass"] = bool(passed)
    return q


def _mesh_level(text):
    try:
        level = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mesh level must be an integer, got {text!r}")
    if not 0 <= level <= _sphere.MAX_LEVEL:
        raise argparse.ArgumentTypeError(f"mesh level must lie in [0, {_sphere.MAX_LEVEL}]")
    return level


def _seed(text):
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return seed


def _tol_item(text):
    name, eq, val = text.partition("=")
    if not eq or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VAL, got {text!r}")
    try:
        v = float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name} is not a number")
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"tolerance {name} must be positive")
    return name.strip(), v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("value must be >= 1")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mesh-level", type=_mesh_level, default=4)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--tol", type=_tol_item, action="append", default=[],
                        metavar="NAME=VAL", help="override a named tolerance")
    common.add_argument("--out", metavar="PATH", help="write the JSON report here")
    common.add_argument("--emit-csv", action="store_true",
                        help="also write plot data next to --out (as .csv)")
    common.add_argument("--threads", type=_positive_int, default=1)
    common.add_argument("--export-mesh", metavar="PATH",
                        help="write the icosphere at --mesh-level as OFF text")

    p = argparse.ArgumentParser(prog="oddaxis", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"oddaxis {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("degree", parents=[common], help="degree of a sphere map")
    d.add_argument("--map", required=True, dest="map_spec",
                   help="builtin family (e.g. suspension:k=3) or a JSON sample file")

    s = sub.add_parser("swtable", parents=[common], help="Stiefel-Whitney triviality table")
    s.add_argument("--K", type=_positive_int, default=8, dest="K")
    s.add_argument("--N", type=_positive_int, default=2, dest="N")

    e = sub.add_parser("eigen", parents=[common], help="eigenpair of an odd complex matrix")
    e.add_argument("matrix_file")

    sp = sub.add_parser("span", parents=[common], help="singular combination of a triple")
    sp.add_argument("matrix_file")

    b = sub.add_parser("bundle", parents=[common], help="bundle trivialization and obstruction")
    b.add_argument("case", choices=BUNDLE_CASES)

    r = sub.add_parser("rh", parents=[common], help="Radon-Hurwitz number")
    r.add_argument("n", type=_positive_int)
    return p


def _tolerances(args):
    tols = dict(DEFAULT_TOLS[args.command])
    for name, v in args.tol:
        if name not in tols:
            known = ", ".join(sorted(tols)) or "none"
            raise UsageError(f"unknown tolerance {name!r} for {args.command} (known: {known})")
        tols[name] = v
    return tols


def _config(args, tols):
    cfg = {"command": args.command}
    for key in ("map_spec", "K", "N", "matrix_file", "case", "n"):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    cfg.update({"mesh_level": args.mesh_level, "seed": args.seed,
                "tolerances": {k: tols[k] for k in sorted(tols)}, "threads": args.threads})
    return cfg


def _digest(cfg, payload=b""):
    h = hashlib.sha256()
    h.update(json.dumps(_jsonable(cfg), sort_keys=True).encode())
    h.update(payload)
    return h.hexdigest()


def _read_json(path):
    try:
        raw = Path(path).read_bytes()
        return json.loads(raw), raw
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _rows_csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                       for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- commands

def _load_map(spec):
    path = Path(spec)
    if spec.endswith(".json") or path.is_file():
        obj, raw = _read_json(spec)
        try:
            dim = int(obj["dimension"])
            values = np.asarray(obj["values"], dtype=float)
            if dim == 2:
                grid = _sphere.icosphere(int(obj["mesh_level"]))
                if values.shape != (len(grid.vertices), 3):
                    raise ParameterError(
                        f"level {grid.level} needs {len(grid.vertices)} values of length 3")
            elif dim == 1:
                grid = np.asarray(obj["points"], dtype=float)
            else:
                raise ParameterError("dimension must be 1 or 2")
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed sample file {spec}: {exc}") from exc
        return _degree.SphereMap.from_samples(grid, values, name=path.name), raw
    try:
        return _degree.builtin_map(spec), b""
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc


def cmd_degree(args, tols, rng):
    g, payload = _load_map(args.map_spec)
    tol = tols["residual"]
    csv_rows = None
    if g.dimension == 1:
        lift = _degree.winding_number(g)
        integral = _degree.winding_integral(g)
        residual = abs(integral - lift.rounded)
        agree = residual < tol
        grid = _sphere.circle_grid(lift.details["grid"])
        ang = np.cumsum(np.concatenate([[0.0], _degree._lift_increments(g(grid))[:-1]]))
        theta = np.arctan2(grid[:, 1], grid[:, 0])
        csv_rows = (("theta", "lifted_angle"), zip(theta, ang))
        results = {
            "map": g.name,
            "dimension": 1,
            "degree": lift.rounded,
            "primary": {"value": lift.rounded, "raw": lift.raw_integral, "residual": lift.residual,
                        "tol": tol, "method": "lift", "grid": lift.details["grid"]},
            "cross_check": {"value": int(np.rint(integral)), "raw": integral,
                            "residual": residual, "tol": tol, "method": "integral"},
            "agree": agree,
            "antipode_defect": _quantity(_degree.check_antipode_preserving(g, 1024), None,
                                         "circle-grid"),
        }
        checks = {"certified": lift.residual < tol, "agree": agree}
        return results, checks, payload, csv_rows

    mesh = _sphere.icosphere(args.mesh_level)
    integral = _degree.brouwer_degree(g, mesh)
    pre = _degree.preimage_degree_retry(g, mesh, rng)
    agree = integral.rounded == pre.rounded
    p = mesh.centroids
    dens = _degree.jacobian_density(g, p, _degree.FD_RELATIVE_STEP * mesh.edge_lengths)
    csv_rows = (("cx", "cy", "cz", "density", "area"),
                ((*c, d, w) for c, d, w in zip(p, dens, mesh.quad_weights)))
    results = {
        "map": g.name,
        "dimension": 2,
        "degree": integral.rounded,
        "primary": {"value": integral.rounded, "raw": integral.raw_integral,
                    "residual": integral.residual, "tol": tol, "method": "integral",
                    "mesh_level": integral.details["mesh_level"]},
        "cross_check": {"value": pre.rounded, "residual": 0.0, "tol": 0.0, "method": "preimage",
                        "target": pre.details["target"], "preimages": pre.details["preimages"],
                        "simplicial_count": pre.details["simplicial_count"]},
        "agree": agree,
        "antipode_defect": _quantity(_degree.check_antipode_preserving(g, mesh), None,
                                     "mesh-vertices"),
    }
    checks = {"certified": integral.residual < tol, "agree": agree}
    return results, checks, payload, csv_rows


def cmd_swtable(args, tols, rng):
    K, N = args.K, args.N
    table = _cc.sw_table(K, N)
    highlights = []
    for k in range(1, K + 1):
        if k % 2 == 1:
            highlights.append({"case": "odd k over RP^1", "k": k, "n": 1,
                               "expected": "obstructed", "trivial": table[k - 1][0]})
        if N >= 2 and k % 4 == 2:
            highlights.append({"case": "k = 2 mod 4 over RP^2", "k": k, "n": 2,
                               "expected": "obstructed", "trivial": table[k - 1][1]})
        if N >= 2 and k == 4:
            highlights.append({"case": "k = 4 over RP^2", "k": 4, "n": 2,
                               "expected": "trivial", "trivial": table[3][1]})
    for h in highlights:
        h["match"] = h["trivial"] == (h["expected"] == "trivial")
    results = {
        "K": K,
        "N": N,
        "method": "carryless power of (1 + a) in Z2[a]/(a^(n+1))",
        "table": [{"k": k, "trivial_for_n": [n for n in range(1, N + 1) if table[k - 1][n - 1]]}
                  for k in range(1, K + 1)],
        "highlights": highlights,
    }
    checks = {"highlights": all(h["match"] for h in highlights)}
    csv_text = _cc.sw_table_csv(K, N)
    return results, checks, b"", csv_text


def _scan_rows(fam, level, r=3):
    pts = _sphere.icosphere(level).vertices
    sig = np.linalg.svd(fam.batch(pts), compute_uv=False)[:, -1]
    return (("x", "y", "z", "sigma_min"), ((*p, s) for p, s in zip(pts, sig)))


def cmd_eigen(args, tols, rng):
    obj, payload = _read_json(args.matrix_file)
    try:
        mats = _bundles.load_matrices(obj)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    if len(mats) != 1:
        raise UsageError(f"eigen expects exactly one matrix, got {len(mats)}")
    T = np.asarray(mats[0], dtype=complex)
    n = T.shape[0]
    if n % 2 == 0:
        raise UsageError(f"matrix size {n} is even; the eigenvector search covers odd sizes only")
    cert = _spectra.complex_odd_eigen(T, mesh_level=args.mesh_level, threads=args.threads,
                                      witness_tol=tols["witness"])
    body = cert.to_dict()
    body["residual_tol"] = tols["residual"]
    results = {"n": n, "certificate": body}
    checks = {"residual": cert.residual <= tols["residual"],
              "witness": cert.witness_sigma <= tols["witness"]}
    csv_rows = None
    if args.emit_csv:
        fam = _bundles.SpanFamily(np.array([np.eye(2 * n), _spectra._num.realify(T),
                                            _spectra._num.realify_i(T)]))
        csv_rows = _scan_rows(fam, args.mesh_level)
    return results, checks, payload, csv_rows


def cmd_span(args, tols, rng):
    obj, payload = _read_json(args.matrix_file)
    try:
        fam = _bundles.load_span_family(obj)
    except (ParameterError, DimensionError) as exc:
        raise UsageError(str(exc)) from exc
    if fam.r != 3:
        raise UsageError(f"span expects exactly three matrices, got {fam.r}")
    A1, A2, A3 = fam.matrices
    hit = _spectra.singular_combination_search(A1, A2, A3, mesh_level=args.mesh_level,
                                               threads=args.threads)
    q = fam.q
    tol = tols["sigma"]
    applies = q % 4 == 2
    singular = hit.sigma_min < tol
    if singular:
        status = "singular combination found"
    elif q % 4 == 0:
        status = "no singularity (q = 0 mod 4)"
    else:
        status = "no singular combination found"
    method = "immediate" if "immediate witness" in hit.notes else "scan+bisection+nelder-mead"
    results = {
        "q": q,
        "q_mod_4": q % 4,
        "theorem_applies": applies,
        "sigma_min": _quantity(hit.sigma_min, tol, method),
        "witness": hit.witness,
        "rank": hit.rank,
        "classification": hit.flag,
        "status": status,
        "notes": hit.notes,
    }
    checks = {"singular_when_required": singular or not applies}
    csv_rows = _scan_rows(fam, args.mesh_level) if args.emit_csv else None
    return results, checks, payload, csv_rows


def cmd_bundle(args, tols, rng):
    case = args.case
    csv_rows = None
    if case in ("two-gamma-rp1", "four-gamma-rp2"):
        if case == "two-gamma-rp1":
            secs = _bundles.canonical_sections_2gamma()
            samples = _sphere.circle_grid(1024)
            pts = samples
        else:
            secs = _bundles.canonical_sections_4gamma()
            samples = _sphere.icosphere(args.mesh_level)
            pts = np.vstack([samples.vertices, _sphere.random_sphere_points(10_000, rng)])
        L = _bundles.section_matrix_batch(secs, pts)
        k = L.shape[1]
        ortho = float(np.max(np.abs(L @ np.swapaxes(L, 1, 2) - np.eye(k))))
        dets = np.array([_spectra._num.determinant(m) for m in L])
        det_def = float(np.max(np.abs(dets - 1.0)))
        equi = max(_bundles.check_equivariance(s, samples) for s in secs)
        tol = tols["defect"]
        results = {
            "case": case,
            "samples": len(pts),
            "orthonormality_defect": _quantity(ortho, tol, "max |L L^T - I|"),
            "det_defect": _quantity(det_def, tol, "max |det L - 1|, partial pivoting"),
            "equivariance_defect": _quantity(equi, tol, "antipodal sample pairs"),
        }
        checks = {"orthonormal": ortho < tol, "det_one": det_def < tol, "equivariant": equi < tol}
        if args.emit_csv:
            csv_rows = (("index", "det"), enumerate(dets))
        return results, checks, b"", csv_rows

    if case == "gamma-eps-rp1":
        secs = _bundles.random_compliant_sections_rp1(rng)
        w = _bundles.rank_drop_search_rp1(secs)
        tol = tols["bracket"]
        exact = (w.det_antipode == -w.det_start) and w.det_start != 0.0
        results = {
            "case": case,
            "det_start": w.det_start,
            "det_antipode": w.det_antipode,
            "exact_sign_flip": exact,
            "start": w.start,
            "witness": w.point,
            "det_at_witness": w.det,
            "bracket_width": _quantity(w.bracket_width, tol, "arc bisection"),
            "degenerate": w.degenerate,
            "equivariance_defect": max(_bundles.check_equivariance(s, 1024) for s in secs),
        }
        checks = {"exact_sign_flip": exact, "bracketed": w.bracket_width <= tol}
        if args.emit_csv:
            grid = _sphere.circle_grid(720)
            L = _bundles.section_matrix_batch(secs, grid)
            dets = L[:, 0, 0] * L[:, 1, 1] - L[:, 0, 1] * L[:, 1, 0]
            theta = np.arctan2(grid[:, 1], grid[:, 0])
            csv_rows = (("theta", "det"), zip(theta, dets))
        return results, checks, b"", csv_rows

    # two-gamma-eps-rp2
    secs = _bundles.random_compliant_sections_rp2(rng)
    mesh = _sphere.icosphere(args.mesh_level)
    hit = _bundles.rank_drop_search_rp2(secs, mesh_level=args.mesh_level, threads=args.threads)
    tol = tols["sigma"]
    results = {
        "case": case,
        "sigma_min": _quantity(hit.sigma_min, tol, "scan+bisection+nelder-mead"),
        "witness": hit.witness,
        "rank": hit.rank,
        "classification": hit.flag,
    }
    checks = {"rank_drop": hit.sigma_min < tol}
    rho = _bundles.extract_rho_maps(secs, mesh)
    if rho.short_circuit:
        results["rho_trace"] = {"short_circuit": True, "witness": rho.witness,
                                "min_column_norm": rho.min_norm}
    else:
        tr = _bundles.rho_contradiction_trace(secs, mesh)
        results["rho_trace"] = {
            "short_circuit": False,
            "degrees": list(tr.degrees),
            "method": "integral",
            "both_odd": tr.odd,
            "equal": tr.equal,
            "negated_second_component": tr.negated_column,
            "relation": tr.relation,
            "collision": tr.collision,
            "collision_gap": tr.collision_gap,
            "collision_sigma": tr.collision_sigma,
        }
        checks["degrees_odd_and_equal"] = tr.odd and tr.equal
    if args.emit_csv:
        V = mesh.vertices
        sig = np.linalg.svd(_bundles.section_matrix_batch(secs, V), compute_uv=False)[:, -1]
        csv_rows = (("x", "y", "z", "sigma_min"), ((*p, s) for p, s in zip(V, sig)))
    return results, checks, b"", csv_rows


def cmd_rh(args, tols, rng):
    value, dec = _cc.radon_hurwitz(args.n)
    results = {"n": args.n, "rho": value, "b": dec.b, "m": dec.m, "c": dec.c, "d": dec.d,
               "method": "n = 2^b (2m+1), b = c + 4d, rho = 2^c + 8d"}
    csv_rows = None
    if args.emit_csv:
        csv_rows = (("n", "rho"), ((k, _cc.radon_hurwitz(k)[0]) for k in range(1, args.n + 1)))
    return results, {"computed": True}, b"", csv_rows


COMMANDS = {"degree": cmd_degree, "swtable": cmd_swtable, "eigen": cmd_eigen,
            "span": cmd_span, "bundle": cmd_bundle, "rh": cmd_rh}


# ---------------------------------------------------------------- driver

def _setup_logging():
    level_name = os.environ.get("ODDAXIS_LOG", "quiet").strip().lower()
    level = LOG_LEVELS.get(level_name, logging.WARNING)
    root = logging.getLogger("oddaxis")
    if not root.handlers:
        h = logging.StreamHandler(sys.stderr)
        h.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(h)
    root.setLevel(level)
    if level_name not in LOG_LEVELS:
        log.warning("ODDAXIS_LOG=%r not one of quiet/info/debug; using quiet", level_name)


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_PASS

    try:
        tols = _tolerances(args)
        if args.emit_csv and not args.out:
            raise UsageError("--emit-csv needs --out (the CSV goes beside the JSON report)")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"oddaxis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    cfg = _config(args, tols)
    if args.export_mesh:
        _sphere.icosphere(args.mesh_level).write_off(args.export_mesh)

    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    error = None
    code = EXIT_PASS
    payload = b""
    results = checks = csv_data = None
    try:
        results, checks, payload, csv_data = COMMANDS[args.command](args, tols, rng)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"oddaxis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SearchFailureError as exc:
        error, code = exc, EXIT_SEARCH
    except NonConvergentDegreeError as exc:
        error, code = exc, EXIT_DEGREE
    except DegenerateMapError as exc:
        error, code = exc, EXIT_DEGREE
    except (ParameterError, DimensionError) as exc:
        parser.print_usage(sys.stderr)
        print(f"oddaxis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OddAxisError as exc:
        error, code = exc, EXIT_SEARCH
    log.info("%s finished in %.3f s", args.command, time.perf_counter() - t0)

    report = {"tool": "oddaxis", "version": __version__, "command": args.command,
              "config": cfg, "inputs_digest": _digest(cfg, payload)}
    if error is not None:
        print(f"oddaxis: {type(error).__name__}: {error}", file=sys.stderr)
        report["error"] = {"type": type(error).__name__, "message": str(error)}
        report["pass"] = False
    else:
        report["results"] = results
        report["checks"] = checks
        report["pass"] = all(checks.values())
        if not report["pass"]:
            code = EXIT_DEGREE if args.command == "degree" else EXIT_SEARCH
    report["exit_code"] = code
    _emit(dump_report(report), args.out)

    if csv_data is not None and args.emit_csv:
        if isinstance(csv_data, str):
            text = csv_data
        else:
            header, rows = csv_data
            text = _rows_csv(header, rows)
        Path(args.out).with_suffix(".csv").write_text(text, encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
