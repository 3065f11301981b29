"""Command-line front end.

Every command reads one or more JSON objects (``--input``, merged left to
right), writes a JSON report (and CSV data where it makes sense) into
``--out``, and exits with 0 (pass), 1 (check failed) or 2 (invalid input).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import almostper, ergodic, evolution, polycalc, spectrum, weights
from .linalg import ConvergenceError

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

TOLERANCES = {
    "axiom": 1e-9,
    "degree": 1e-9,
    "mean": 1e-3,
    "w_mean": 1e-2,
    "decay": 1e-6,
    "unit_circle": evolution.UNIT_CIRCLE_TOL,
    "resonance": 1e-9,
    "residual": 1e-9,
    "xi": 1e-2,
}

DEMOS = ("example-7-13", "example-8-4", "gelfand-hille", "kt")


class InputError(ValueError):
    """Malformed or missing input; maps to exit code 2."""


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
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


class Output:
    def __init__(self, out_dir: Path, config: dict):
        self.dir = out_dir
        self.config = config
        self.dir.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, payload: dict) -> Path:
        path = self.dir / name
        body = {"config": self.config, **payload}
        path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")
        return path

    def csv(self, name: str, header, rows) -> Path:
        path = self.dir / name
        with path.open("w", newline="") as fh:
            fh.write("# config=" + json.dumps(_jsonable(self.config), sort_keys=True) + "\n")
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for row in rows:
                wr.writerow([format(float(v), ".17g") if not isinstance(v, str) else v for v in row])
        return path


def _load_inputs(paths) -> dict:
    merged: dict = {}
    for p in paths or []:
        try:
            obj = json.loads(Path(p).read_text())
        except FileNotFoundError:
            raise InputError(f"input file not found: {p}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{p}: invalid JSON ({exc})") from None
        if not isinstance(obj, dict):
            raise InputError(f"{p}: top-level JSON value must be an object")
        merged.update(obj)
    return merged


def _parse_tols(items) -> dict:
    tols = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects name=value, got {item!r}")
        if name not in TOLERANCES:
            raise InputError(f"unknown tolerance {name!r}; known: {', '.join(sorted(TOLERANCES))}")
        try:
            tols[name] = float(value)
        except ValueError:
            raise InputError(f"tolerance {name} is not a number: {value!r}") from None
    return tols


def _need(data: dict, key: str):
    if key not in data:
        raise InputError(f"input is missing {key!r}")
    return data[key]


def _complex_cols(values: np.ndarray, prefix: str):
    header = []
    for j in range(values.shape[1]):
        header += [f"{prefix}{j}_re", f"{prefix}{j}_im"]
    cols = []
    for j in range(values.shape[1]):
        cols += [values[:, j].real, values[:, j].imag]
    return header, cols


def _signal_csv(out: Output, name: str, sig: polycalc.Signal):
    header, cols = _complex_cols(sig.values, "v")
    rows = zip(sig.times, *cols)
    return out.csv(name, ["t"] + header, rows)


# ---------------------------------------------------------------------------
# commands


def cmd_weight_check(data, tol, out: Output) -> int:
    w = weights.weight_from_dict(data.get("weight", data))
    grid = data.get("grid", {"T": 200})
    if isinstance(grid, dict):
        T = float(grid.get("T", 200))
        step = 1.0 if w.domain == weights.INTEGER else float(grid.get("step", 0.5))
        n = int(round(T / step))
        grid = step * np.arange(-n, n + 1)
    report = weights.check_axioms(w, np.asarray(grid, dtype=float), tol["axiom"])
    requested = data.get("axioms", list(weights.AXIOM_IDS))
    unknown = set(requested) - set(weights.AXIOM_IDS)
    if unknown:
        raise InputError(f"unknown axiom ids: {sorted(unknown)}")
    failed = [a for a in report.failed() if a in requested]
    out.json("weight_check.json", {"weight": w.to_dict(), "requested": requested,
                                   "failed": failed, "growth_order": weights.growth_order(w),
                                   "report": report.to_dict()})
    print(f"weight-check: failed axioms {failed}" if failed else "weight-check: all axioms pass")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_poly(data, tol, out: Output) -> int:
    sig = polycalc.Signal.from_dict(_need(data, "signal"))
    op = data.get("op", "degree")
    h = data.get("h", sig.step)
    if op == "degree":
        deg = polycalc.degree_test(sig, h, int(data.get("n_max", 8)), tol["degree"])
        out.json("poly.json", {"op": op, "degree": deg})
        print(f"poly: degree {deg}")
        return EXIT_OK if deg is not None else EXIT_FAIL
    if op == "difference":
        res = polycalc.iterated_difference(sig, data.get("t_list", [h]))
    elif op == "sum":
        m = int(data.get("m", 1))
        res = (polycalc.iterated_sum if sig.domain == weights.INTEGER
               else polycalc.iterated_primitive)(sig, m)
    elif op == "extend":
        n = int(_need(data, "n"))
        ts = [int(t) for t in data.get("t", list(range(-10, 0)))]
        vals = [polycalc.extend_from_semigroup(sig, n, t) for t in ts]
        out.json("poly.json", {"op": op, "n": n, "values": {str(t): [complex(z) for z in v]
                                                            for t, v in zip(ts, vals)}})
        print(f"poly: extended to {len(ts)} points")
        return EXIT_OK
    else:
        raise InputError(f"unknown poly op {op!r}")
    _signal_csv(out, "poly.csv", res)
    out.json("poly.json", {"op": op, "result": res.to_dict()})
    print(f"poly: {op} on {len(res)} samples")
    return EXIT_OK


def cmd_mean(data, tol, out: Output) -> int:
    sig = polycalc.Signal.from_dict(_need(data, "signal"))
    if "weight" in data:
        w = weights.weight_from_dict(data["weight"])
        N = int(data.get("N", weights.growth_order(w) or 0))
        est = ergodic.w_mean(sig, w, N, tol["w_mean"])
    else:
        lengths = data.get("window_lengths", [len(sig) // 2])
        est = ergodic.maak_mean(sig, lengths, tol["mean"])
    out.json("mean.json", {"estimate": est.to_dict()})
    print(f"mean: converged={est.converged}")
    return EXIT_OK if est.converged else EXIT_FAIL


def cmd_decompose(data, tol, out: Output) -> int:
    sig = polycalc.Signal.from_dict(_need(data, "signal"))
    dec = almostper.decompose_ap_w(sig, int(data.get("N", 0)), data.get("freq_grid"),
                                   data.get("threshold"), float(data.get("tail_start", 0.5)))
    ok = dec.xi_tail_sup <= tol["xi"]
    out.json("decompose.json", {"decomposition": dec.to_dict(), "xi_ok": ok})
    out.csv("decompose.csv", ["frequency", "mass"],
            [(a["freq"], a["mass"]) for a in dec.info["atoms"]])
    print(f"decompose: {len(dec.psi.terms)} terms, xi_tail_sup={dec.xi_tail_sup:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(data, tol, out: Output) -> int:
    if "trigpoly" in data:
        tp = almostper.TrigPoly.from_dict(data["trigpoly"])
        freqs = spectrum.sp_of_trigpoly(tp)
        rows = [(s, float(np.abs(p.coeffs).max())) for s, p in tp.terms]
        out.json("spectrum.json", {"exact": True, "frequencies": freqs})
    else:
        sig = polycalc.Signal.from_dict(_need(data, "signal"))
        w = weights.weight_from_dict(data.get("weight", {"form": "poly", "N": 0,
                                                         "domain": sig.domain}))
        est = spectrum.sp_estimate(sig, w, data.get("grid"), data.get("threshold"))
        rows = est.atoms
        out.json("spectrum.json", {"exact": False, "estimate": est.to_dict()})
    out.csv("spectrum.csv", ["frequency", "mass"], rows)
    print(f"spectrum: {len(rows)} atoms")
    return EXIT_OK


def _operator_and_matrix(data):
    B = evolution.operator_from_dict(data)
    A = evolution.MatrixOp.from_dict(data)
    return B, A


def cmd_resonance(data, tol, out: Output) -> int:
    B, A = _operator_and_matrix(data)
    rs = evolution.resonance_set(B, A, tol["unit_circle"])
    out.json("resonance.json", {"operator": B.to_dict(), "resonance": rs.to_dict()})
    # display only; the JSON keeps full precision
    print("resonance: {" + ", ".join(f"{round(p, 12) + 0.0:.12g}" for p in rs.values) + "}")
    return EXIT_OK


def cmd_solve(data, tol, out: Output) -> int:
    B = evolution.operator_from_dict(data)
    if not isinstance(B, evolution.RecurrenceOp):
        raise InputError("solve needs a recurrence operator")
    A = evolution.MatrixOp.from_dict(data)
    psi = polycalc.Signal.from_dict(_need(data, "psi"))
    init = data.get("init", [])
    init = polycalc.decode_vectors(init) if init else np.zeros((0, A.dim))
    phi = evolution.solve_recurrence(B, A, psi, init)
    res = evolution.recurrence_residual(B, A, phi, psi)
    scale = max(1.0, phi.sup())
    ok = res <= tol["residual"] * scale
    _signal_csv(out, "solve.csv", phi)
    out.json("solve.json", {"residual": res, "residual_ok": ok, "solution": phi.to_dict()})
    print(f"solve: {len(phi)} samples, residual {res:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_kt(data, tol, out: Output) -> int:
    A = evolution.MatrixOp.from_dict(data)
    horizon = int(data.get("horizon", 10**4))
    rep = evolution.kt_check(A, data.get("a"), horizon, tol["decay"])
    _kt_outputs(out, "kt", rep)
    print(f"kt: case {rep['case']}, passed={rep['passed']}")
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def _kt_outputs(out, stem, rep):
    pc, dc = rep["power_curve"], rep["difference_curve"]
    out.csv(f"{stem}.csv", ["n", "power_over_a", "difference_over_a"],
            zip(range(len(pc)), pc, dc))
    out.json(f"{stem}.json", {k: v for k, v in rep.items() if not k.endswith("_curve")})


def cmd_gelfand_hille(data, tol, out: Output) -> int:
    A = evolution.MatrixOp.from_dict(data)
    rep = evolution.gelfand_hille_check(A, int(_need(data, "N")), int(data.get("horizon", 10**4)))
    _gh_outputs(out, "gelfand_hille", rep)
    print(f"gelfand-hille: premises={rep['premises_hold']} nilpotent={rep['nilpotent']}")
    return EXIT_OK if rep["consistent"] else EXIT_FAIL


def _gh_outputs(out, stem, rep):
    f, b = rep["forward_norms"], rep["backward_norms"]
    out.csv(f"{stem}.csv", ["n", "norm_x_pow_n", "norm_x_pow_minus_n"], zip(range(len(f)), f, b))
    out.json(f"{stem}.json", {k: v for k, v in rep.items() if not k.endswith("_norms")})


# ---------------------------------------------------------------------------
# demos


def _demo_example_7_13(tol, out):
    psi, p1, p2, rep = almostper.example_7_13()
    t = p2.times
    out.csv("example_7_13.csv", ["t", "psi", "P_psi", "P2_psi", "upper_margin", "lower_margin"],
            zip(t, psi.values[:, 0].real, p1.values[:, 0].real, p2.values[:, 0].real,
                rep["upper_margin"], rep["lower_margin"]))
    summary = {k: v for k, v in rep.items() if not isinstance(v, list)}
    summary["expected"] = "P2psi + budget <= 9(1+t) on [0,20]; P2psi - budget >= lower bound on [5,20]"
    return rep["passed"], summary


def _demo_example_8_4(tol, out):
    data = json.loads(resources.files("beurling").joinpath("data/example_8_4.json").read_text())
    B, A = _operator_and_matrix(data)
    rs = evolution.resonance_set_diff(B, A, tol["unit_circle"])
    expected = sorted(data["expected_resonance"])
    pts = rs.values
    match = len(pts) == len(expected) and all(abs(p - e) <= tol["resonance"]
                                              for p, e in zip(pts, expected))
    sols = evolution.homogeneous_solutions(B, A)
    res = max(s.residual for s in sols)
    pairs_ok = True
    for pair in data["expected_pairs"]:
        v = np.asarray(pair["vector"], dtype=complex)
        for f in pair["frequencies"]:
            hit = [s for s in sols if abs(s.frequency - f) <= tol["resonance"]]
            pairs_ok &= bool(hit) and all(
                abs(s.vector[0] * v[1] - s.vector[1] * v[0]) <= 1e-9 * np.abs(v).max() for s in hit)
    ok = bool(match and res <= tol["residual"] and pairs_ok)
    out.csv("example_8_4.csv", ["frequency", "eigenvalue_re", "eigenvalue_im", "residual"],
            [(s.frequency, s.eigenvalue.real, s.eigenvalue.imag, s.residual) for s in sols])
    summary = {"resonance": pts, "expected": expected, "homogeneous_residual": res,
               "pairs_match": pairs_ok, "solutions": [s.to_dict() for s in sols]}
    return ok, summary


def _demo_gelfand_hille(tol, out):
    N = 2
    x = np.eye(N + 1) + np.eye(N + 1, k=1)
    rep = evolution.gelfand_hille_check(x, N, 10**4)
    _gh_outputs(out, "gelfand_hille_curves", rep)
    ok = rep["premises_hold"] and rep["nilpotent"] and rep["nilpotent_norm"] == 0 and rep["sharp"]
    return ok, {"matrix": "J_3(1)", "N": N, "nilpotent_norm": rep["nilpotent_norm"],
                "sharpness_norm": rep["sharpness_norm"], "dominated": rep["dominated"],
                "spectrum_is_one": rep["spectrum_is_one"]}


def _demo_kt(tol, out):
    cases = {
        "a": (np.diag([0.9 * np.exp(1j * np.pi / 3), 0.5]), "empty", 400),
        "b": (np.diag([1.0, 0.5]), "one", 25),
        "control": (np.diag([np.exp(1j * np.pi / 4)]), "other", None),
    }
    summary, ok = {}, True
    for name, (x, case, by) in cases.items():
        rep = evolution.kt_check(x, None, 1000, tol["decay"])
        _kt_outputs(out, f"kt_{name}", rep)
        good = rep["case"] == case and rep["passed"]
        if by is not None:
            good = good and rep["decay_index"] is not None and rep["decay_index"] <= by
        else:
            good = good and not rep["asserted"]
        summary[name] = {"case": rep["case"], "decay_index": rep["decay_index"],
                         "asserted": rep["asserted"], "pass": good}
        ok &= good
    return ok, summary


_DEMO_FUNCS = {"example-7-13": _demo_example_7_13, "example-8-4": _demo_example_8_4,
               "gelfand-hille": _demo_gelfand_hille, "kt": _demo_kt}


def cmd_demo(name, tol, out: Output) -> int:
    ok, summary = _DEMO_FUNCS[name](tol, out)
    out.json(f"{name.replace('-', '_')}_summary.json", {"demo": name, "pass": bool(ok),
                                                         "summary": summary})
    print(f"demo {name}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "weight-check": cmd_weight_check, "poly": cmd_poly, "mean": cmd_mean,
    "decompose": cmd_decompose, "spectrum": cmd_spectrum, "resonance": cmd_resonance,
    "solve": cmd_solve, "kt": cmd_kt, "gelfand-hille": cmd_gelfand_hille,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beurling", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", action="append", default=[], help="JSON input (repeatable)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    demo = sub.add_parser("demo", parents=[common])
    demo.add_argument("name")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        overrides = _parse_tols(args.tol)
        tol = {**TOLERANCES, **overrides}
        config = {"command": args.command, "inputs": list(args.input), "out": args.out,
                  "tolerances": overrides, "seed": args.seed}
        if args.command == "demo":
            config["demo"] = args.name
            if args.name not in _DEMO_FUNCS:
                raise InputError(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}")
            return cmd_demo(args.name, tol, Output(Path(args.out), config))
        data = _load_inputs(args.input)
        return COMMANDS[args.command](data, tol, Output(Path(args.out), config))
    except (InputError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, OverflowError, ArithmeticError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
