"""Command-line driver.

Runs experiments described by a JSON spec file and writes deterministic
CSV/JSON artifacts into a run directory: the manifest first (echoing every
effective parameter, including the derived constants), data files next,
the summary last, so an interrupted run is detectable by its missing
summary. Identical spec plus seed yields byte-identical outputs.

Exit codes: 0 success, 1 schema or I/O problem, 2 refused or escaped or
order-broken runs, 3 failure to converge.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .birkhoff import check_birkhoff
from .continuation import (continue_lamination, quasi_newton_continue,
                           residual_field, truncation_consistency)
from .errors import (CheckInconclusive, ContinuationRefused,
                     ContractionEscape, LaminationBroken, ModelInvalid,
                     NoConvergence, NotBirkhoff, SchemaError,
                     UnclassifiableSite)
from .hull import (GOLDEN_MEAN, generic_parameter, sample_config,
                   step_hull_from_simplex)
from .lattice import Box, Configuration
from .measure import DEFAULT_DENSITY_RADIUS, psi_epsilon, vague_distance
from .model import (Model, InteractionStencil, builtin_harmonic_stencil,
                    builtin_n_well, estimate_constants, osc_bound,
                    potential_from_table)
from .twistmap import chaotic_momentum_orbit, extract_cantorus
from .verification import run_suite

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_REFUSED = 2
EXIT_NO_CONVERGENCE = 3

OMEGA_NAMES = {
    "golden": GOLDEN_MEAN,
    "sqrt2-1": float(np.sqrt(2.0) - 1.0),
    "sqrt3-1": float(np.sqrt(3.0) - 1.0),
}

_ALLOWED = {
    "continue": {"model", "seed", "omega", "eps", "p", "s", "window_radius",
                 "k_max", "M1", "M2"},
    "lamination": {"model", "seed", "omega", "eps", "p", "window_radius",
                   "n_samples", "k_max"},
    "measure": {"model", "seed", "omega", "eps", "p", "window_radius", "n",
                "injectivity"},
    "cantorus": {"model", "seed", "mode", "omega", "eps", "p", "wells",
                 "window_radius", "n_samples", "s0", "labels", "coin_flip"},
    "verify": {"model", "seed", "checks"},
    "sweep": {"model", "seed", "omega", "eps_values", "p", "window_radius",
              "k_max"},
}
_REQUIRED = {
    "continue": {"model", "omega", "eps", "p", "window_radius"},
    "lamination": {"model", "omega", "eps", "p", "window_radius", "n_samples"},
    "measure": {"model", "omega", "eps", "p"},
    "cantorus": {"model", "eps"},
    "verify": set(),
    "sweep": {"model", "omega", "eps_values", "p", "window_radius"},
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage, which collides with the
    exit-code contract; surface usage problems as schema errors instead."""

    def error(self, message):
        raise SchemaError(message)


def _load_spec(path):
    if path is None:
        raise SchemaError("this command needs --spec <file>")
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read spec file: {exc}")
    try:
        spec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"spec file is not valid JSON: {exc}")
    if not isinstance(spec, dict):
        raise SchemaError("spec must be a JSON object")
    return spec


def _validate_keys(spec, command):
    allowed = _ALLOWED[command]
    required = _REQUIRED[command]
    unknown = set(spec) - allowed
    if unknown:
        raise SchemaError(f"unknown spec keys for {command}: {sorted(unknown)}")
    missing = required - set(spec)
    if missing:
        raise SchemaError(f"missing spec keys for {command}: {sorted(missing)}")


def _model_from_spec(spec, omega=None):
    mspec = spec.get("model")
    if not isinstance(mspec, dict):
        raise SchemaError("spec.model must be an object")
    unknown = set(mspec) - {"potential", "stencil", "K", "k"}
    if unknown:
        raise SchemaError(f"unknown model keys: {sorted(unknown)}")
    pspec = mspec.get("potential", {"kind": "n_well", "N": 2})
    if not isinstance(pspec, dict) or "kind" not in pspec:
        raise SchemaError("model.potential must be an object with a kind")
    if pspec["kind"] == "n_well":
        N = pspec.get("N", 2)
        if not isinstance(N, int) or N < 1:
            raise SchemaError("n_well potential needs a positive integer N")
        potential = builtin_n_well(N)
    elif pspec["kind"] == "table":
        samples = pspec.get("samples")
        if not isinstance(samples, list) or len(samples) < 8:
            raise SchemaError("table potential needs at least 8 samples")
        potential = potential_from_table(np.asarray(samples, dtype=float))
    else:
        raise SchemaError(f"unknown potential kind {pspec['kind']!r}")

    sspec = mspec.get("stencil", {"kind": "harmonic", "d": 1})
    if not isinstance(sspec, dict) or sspec.get("kind") != "harmonic":
        raise SchemaError("model.stencil must be harmonic (with a dimension d)")
    d = sspec.get("d", 1)
    if not isinstance(d, int) or d < 1:
        raise SchemaError("stencil dimension d must be a positive integer")
    stencil = builtin_harmonic_stencil(d)
    if sspec.get("flip_sign", False):
        base = stencil
        stencil = InteractionStencil(
            d, 1,
            lambda w: -base.energy(w),
            lambda w: -base.gradient(w),
            lambda w: -base.hessian(w),
            validate=False,
        )

    K = mspec.get("K")
    if K is None:
        if omega is None:
            K = osc_bound([GOLDEN_MEAN] * d, stencil.range)
        else:
            K = osc_bound(omega, stencil.range)
    k = mspec.get("k", 0.5)
    constants = estimate_constants(potential, stencil, float(K), k=float(k))
    return Model(potential, stencil, constants)


def _parse_omega(raw, d):
    def one(v):
        if isinstance(v, str):
            if v not in OMEGA_NAMES:
                raise SchemaError(f"unknown omega name {v!r}")
            return OMEGA_NAMES[v]
        if isinstance(v, (int, float)):
            return float(v)
        raise SchemaError("omega entries must be numbers or known names")

    if isinstance(raw, list):
        omega = [one(v) for v in raw]
    else:
        omega = [one(raw)]
    if len(omega) != d:
        raise SchemaError(f"omega has {len(omega)} components, model is {d}-dimensional")
    return np.asarray(omega)


def _parse_eps(raw, constants):
    if isinstance(raw, (int, float)):
        val = float(raw)
    elif isinstance(raw, str):
        head, _, denom = raw.partition("/")
        if head == "eps0":
            val = constants.eps0
        elif head == "eps1":
            val = constants.eps1
        else:
            raise SchemaError(f"cannot parse eps {raw!r}")
        if denom:
            if not denom.isdigit() or int(denom) == 0:
                raise SchemaError(f"cannot parse eps divisor in {raw!r}")
            val /= int(denom)
    else:
        raise SchemaError("eps must be a number or an eps0/eps1 expression")
    if val < 0:
        raise SchemaError("eps must be nonnegative")
    return val


def _parse_window(spec, model, default=None):
    radius = spec.get("window_radius", default)
    if radius is None:
        raise SchemaError("missing window_radius")
    if not isinstance(radius, int) or radius <= model.stencil.range:
        raise SchemaError("window_radius must be an integer above the stencil range")
    return Box.centered(radius, model.stencil.d)


def _parse_simplex(spec, model):
    p = spec.get("p")
    n = model.potential.minima.size
    if not isinstance(p, list) or len(p) != n or \
            not all(isinstance(v, (int, float)) for v in p):
        raise SchemaError(f"p must be a list of {n} numbers (one weight per well)")
    return [float(v) for v in p]


def _fmt(v):
    return repr(float(v))


def _write_json(path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _site_header(d):
    return ["i"] if d == 1 else [f"i{a + 1}" for a in range(d)]


def _manifest(out, command, effective, model, seed, threads, tol):
    # threads deliberately omitted: outputs must be byte-identical no
    # matter how the work is scheduled
    body = {
        "command": command,
        "parameters": effective,
        "constants": model.constants.as_dict() if model is not None else None,
        "seed": seed,
        "tol": tol,
    }
    _write_json(out / "manifest.json", body)


def _solution_rows(model, eps, window, labels, result):
    d = window.d
    Bp = result.solution.domain
    resid = residual_field(model, eps, result.solution, window)
    interior = window.interior(model.stencil.range)
    resmap = {tuple(site): _fmt(v) for site, v in
              zip(interior.sites(), resid.ravel())}
    rows = []
    for site, x0, x in zip(Bp.sites(), labels.values.ravel(),
                           result.solution.values.ravel()):
        key = tuple(site.tolist())
        rows.append([str(c) for c in key] + [_fmt(x0), _fmt(x),
                                             resmap.get(key, "")])
    return rows


def cmd_continue(spec, out, seed, threads, tol):
    model = _model_from_spec(spec, omega=None)
    omega = _parse_omega(spec["omega"], model.stencil.d)
    model = _model_from_spec(spec, omega=omega)
    eps = _parse_eps(spec["eps"], model.constants)
    window = _parse_window(spec, model)
    p = _parse_simplex(spec, model)
    phi = step_hull_from_simplex(p, model.potential.minima)
    Bp = window.padded(model.stencil.range)
    s = spec.get("s")
    if s is None:
        s = generic_parameter(phi, omega, Bp, 0.5)
    else:
        s = float(s)
    k_max = spec.get("k_max", 2)
    effective = {
        "omega": [float(w) for w in omega], "eps": eps, "p": p, "s": s,
        "window_radius": int(window.hi[0]), "k_max": k_max,
        "M1": spec.get("M1"), "M2": spec.get("M2"),
    }
    _manifest(out, "continue", effective, model, seed, threads, tol)

    x0 = sample_config(phi, omega, s, Bp)
    result = quasi_newton_continue(model, eps, x0, window, tol=tol)
    scan = window.interior(3 * model.stencil.range)
    verdict = check_birkhoff(result.solution.restrict(scan), k_max)
    summary = {
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "contraction_rate": result.contraction_rate,
        "displacement": result.displacement,
        "eps": eps,
        "s": s,
        "ordered": verdict.ordered,
        "violation": list(verdict.violation) if verdict.violation else None,
    }
    if spec.get("M1") is not None or spec.get("M2") is not None:
        M1, M2 = spec.get("M1"), spec.get("M2")
        if not (isinstance(M1, int) and isinstance(M2, int)):
            raise SchemaError("M1 and M2 must both be integers")
        big = Box.centered(M2 + 3 * model.stencil.range, window.d)
        labels_big = sample_config(phi, omega, s, big)
        summary["truncation"] = truncation_consistency(
            model, eps, labels_big, tol, M1, M2)

    _write_csv(out / "solution.csv",
               _site_header(window.d) + ["x0", "x", "residual"],
               _solution_rows(model, eps, window, x0.restrict(Bp), result))
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_lamination(spec, out, seed, threads, tol):
    model = _model_from_spec(spec, omega=None)
    omega = _parse_omega(spec["omega"], model.stencil.d)
    model = _model_from_spec(spec, omega=omega)
    eps = _parse_eps(spec["eps"], model.constants)
    window = _parse_window(spec, model)
    p = _parse_simplex(spec, model)
    n_samples = spec.get("n_samples")
    if not isinstance(n_samples, int) or n_samples < 1:
        raise SchemaError("n_samples must be a positive integer")
    k_max = spec.get("k_max", 2)
    effective = {
        "omega": [float(w) for w in omega], "eps": eps, "p": p,
        "window_radius": int(window.hi[0]), "n_samples": n_samples,
        "k_max": k_max,
    }
    _manifest(out, "lamination", effective, model, seed, threads, tol)

    lam = continue_lamination(model, eps, p, omega, window, n_samples,
                              tol=tol, k_max=k_max, workers=threads)
    for j, member in enumerate(lam.members):
        rows = _solution_rows(model, eps, window, member.labels, member)
        _write_csv(out / f"member_{j:03d}.csv",
                   _site_header(window.d) + ["x0", "x", "residual"], rows)
    n = len(lam.members)
    matrix = []
    for a in range(n):
        row = []
        for b in range(n):
            diff = lam.members[b].solution.values - lam.members[a].solution.values
            lo, hi = float(np.min(diff)), float(np.max(diff))
            if hi <= 1e-9 and lo >= -1e-9:
                row.append("0")
            elif lo >= -1e-9:
                row.append("1")
            elif hi <= 1e-9:
                row.append("-1")
            else:
                row.append("x")
        matrix.append(row)
    _write_csv(out / "ordering_matrix.csv",
               [f"m{b}" for b in range(n)], matrix)
    _write_json(out / "summary.json", {
        "eps": eps,
        "members": n,
        "s_values": [float(s) for s in lam.s_values],
        "ordered": all(c != "x" for row in matrix for c in row),
    })
    return EXIT_OK


def cmd_measure(spec, out, seed, threads, tol):
    model = _model_from_spec(spec, omega=None)
    omega = _parse_omega(spec["omega"], model.stencil.d)
    model = _model_from_spec(spec, omega=omega)
    eps = _parse_eps(spec["eps"], model.constants)
    d = model.stencil.d
    n = spec.get("n", DEFAULT_DENSITY_RADIUS.get(d))
    if not isinstance(n, int) or n < 1:
        raise SchemaError("n must be a positive integer ball radius")
    window = _parse_window(spec, model, default=n)
    p = _parse_simplex(spec, model)
    inj = spec.get("injectivity")
    effective = {
        "omega": [float(w) for w in omega], "eps": eps, "p": p, "n": n,
        "window_radius": int(window.hi[0]), "injectivity": inj,
    }
    _manifest(out, "measure", effective, model, seed, threads, tol)

    mu = psi_epsilon(model, eps, p, omega, window, n, tol=tol)
    _write_json(out / "measure.json", {"atoms": mu.as_pairs()})
    sig_n = model.potential.minima.size
    _write_csv(out / "density.csv",
               ["n"] + [f"p{j + 1}" for j in range(sig_n)],
               [[str(rad)] + [_fmt(v) for v in fr]
                for rad, fr in mu.density_table])
    summary = {"atoms": mu.as_pairs(),
               "table": [[rad, [float(v) for v in fr]]
                         for rad, fr in mu.density_table]}

    if inj:
        spacing = float(inj.get("spacing", 0.25)) if isinstance(inj, dict) else 0.25
        steps = int(round(1.0 / spacing))
        grid = []
        for combo in np.ndindex(*([steps + 1] * (sig_n - 1))):
            weights = [c * spacing for c in combo]
            tail = 1.0 - sum(weights)
            if tail < -1e-12:
                continue
            grid.append(weights + [max(tail, 0.0)])
        measures = [psi_epsilon(model, eps, q, omega, window, n, tol=tol)
                    for q in grid]
        pair_rows = []
        min_margin = np.inf
        for a in range(len(grid)):
            for b in range(a + 1, len(grid)):
                dist = vague_distance(measures[a], measures[b])
                l1 = float(np.sum(np.abs(np.asarray(grid[a]) - np.asarray(grid[b]))))
                min_margin = min(min_margin, dist - l1)
                pair_rows.append([str(a), str(b), _fmt(l1), _fmt(dist)])
        _write_csv(out / "injectivity.csv",
                   ["a", "b", "l1", "vague_distance"], pair_rows)
        summary["injectivity"] = {
            "grid": grid,
            "min_margin": float(min_margin),
        }

    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_cantorus(spec, out, seed, threads, tol):
    model = _model_from_spec(spec, omega=None)
    mode = spec.get("mode", "cantorus")
    if mode == "momentum":
        return _cmd_momentum(spec, out, model, seed, threads, tol)
    if mode != "cantorus":
        raise SchemaError(f"unknown cantorus mode {mode!r}")
    if "omega" not in spec:
        raise SchemaError("cantorus mode needs omega")
    omega = _parse_omega(spec["omega"], model.stencil.d)
    model = _model_from_spec(spec, omega=omega)
    eps = _parse_eps(spec["eps"], model.constants)
    window = _parse_window(spec, model, default=16)
    n_samples = spec.get("n_samples", 64)
    wells = spec.get("wells", "minima")
    if wells == "minima":
        sigma = model.potential.minima
    elif wells == "criticals":
        sigma = model.potential.criticals
    else:
        raise SchemaError("wells must be 'minima' or 'criticals'")
    p = spec.get("p", [1.0 / sigma.size] * sigma.size)
    if len(p) != sigma.size:
        raise SchemaError(f"p must have {sigma.size} entries for wells={wells!r}")
    s0 = spec.get("s0", 0.5)
    effective = {
        "omega": [float(w) for w in omega], "eps": eps, "p": p,
        "wells": wells, "window_radius": int(window.hi[0]),
        "n_samples": n_samples, "s0": s0,
    }
    _manifest(out, "cantorus", effective, model, seed, threads, tol)

    hull = step_hull_from_simplex(p, sigma)
    res = extract_cantorus(model, eps, hull, omega, window, n_samples,
                           s0=s0, newton_tol=tol)
    _write_csv(out / "cantorus.csv", ["s", "x0", "y0"],
               [[_fmt(s), _fmt(x), _fmt(y)]
                for s, (x, y) in zip(res.s_values, res.points)])
    _write_json(out / "summary.json", {
        "eps": eps,
        "n_samples": int(n_samples),
        "invariance_error": res.invariance_error,
        "worst_index": res.worst_index,
        "mean_momentum": res.mean_momentum,
    })
    return EXIT_OK


def _cmd_momentum(spec, out, model, seed, threads, tol):
    eps = _parse_eps(spec["eps"], model.constants)
    window = _parse_window(spec, model, default=32)
    Bp = window.padded(1)
    if "labels" in spec:
        labels = spec["labels"]
        if not isinstance(labels, list) or len(labels) != Bp.size:
            raise SchemaError(f"labels must be a list of {Bp.size} values")
        labels = np.asarray(labels, dtype=float)
    elif "coin_flip" in spec:
        cf = spec["coin_flip"]
        rng = np.random.default_rng(int(cf.get("seed", seed)))
        labels = rng.integers(0, 2, Bp.size).astype(float)
    else:
        raise SchemaError("momentum mode needs labels or coin_flip")
    effective = {
        "eps": eps, "window_radius": int(window.hi[0]),
        "labels": [float(v) for v in labels],
    }
    _manifest(out, "cantorus", effective, model, seed, threads, tol)

    orbit = chaotic_momentum_orbit(model.potential, eps, labels, window,
                                   newton_tol=tol)
    _write_csv(out / "orbit.csv", ["i", "x", "y"],
               [[str(i), _fmt(x), _fmt(y)]
                for i, (x, y) in enumerate(orbit.points)])
    _write_json(out / "summary.json", {
        "eps": eps,
        "points": int(orbit.points.shape[0]),
        "map_residual": orbit.map_residual(model.potential),
    })
    return EXIT_OK


def cmd_verify(spec, out, seed, threads, tol):
    model = None
    overrides = {}
    if spec is not None:
        overrides = spec.get("checks", {})
        if not isinstance(overrides, dict):
            raise SchemaError("checks must map check names to tolerances")
        if "model" in spec:
            model = _model_from_spec(spec)
    rows = run_suite(model, seed=seed, overrides=overrides)
    width = max(len(r.name) for r in rows)
    for r in rows:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    if out is not None:
        _manifest(out, "verify", {"checks": overrides}, model, seed, threads, tol)
        _write_json(out / "verify.json", {
            "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                       for r in rows],
        })
    return EXIT_OK if all(r.passed for r in rows) else EXIT_REFUSED


def cmd_sweep(spec, out, seed, threads, tol):
    model = _model_from_spec(spec, omega=None)
    omega = _parse_omega(spec["omega"], model.stencil.d)
    model = _model_from_spec(spec, omega=omega)
    eps_values = spec.get("eps_values")
    if not isinstance(eps_values, list) or not eps_values:
        raise SchemaError("eps_values must be a nonempty list")
    eps_list = [_parse_eps(v, model.constants) for v in eps_values]
    window = _parse_window(spec, model)
    p = _parse_simplex(spec, model)
    phi = step_hull_from_simplex(p, model.potential.minima)
    Bp = window.padded(model.stencil.range)
    s = generic_parameter(phi, omega, Bp, 0.5)
    effective = {
        "omega": [float(w) for w in omega], "eps_values": eps_list, "p": p,
        "s": s, "window_radius": int(window.hi[0]),
    }
    _manifest(out, "sweep", effective, model, seed, threads, tol)

    x0 = sample_config(phi, omega, s, Bp)

    def run(eps):
        return quasi_newton_continue(model, eps, x0, window, tol=tol)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, eps_list))
    else:
        results = [run(eps) for eps in eps_list]

    rows = [[_fmt(eps), str(r.iterations), _fmt(r.final_residual),
             _fmt(r.contraction_rate), _fmt(r.displacement)]
            for eps, r in zip(eps_list, results)]
    _write_csv(out / "sweep.csv",
               ["eps", "iterations", "residual", "rate", "displacement"], rows)
    _write_json(out / "summary.json", {
        "eps_values": eps_list,
        "max_displacement": max(r.displacement for r in results),
    })
    return EXIT_OK


_COMMANDS = {
    "continue": cmd_continue,
    "lamination": cmd_lamination,
    "measure": cmd_measure,
    "cantorus": cmd_cantorus,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def _build_parser():
    parser = _Parser(prog="lamlab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--spec", help="JSON experiment spec file")
    parser.add_argument("--out", help="output directory for run artifacts")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--tol", type=float, default=1e-12)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("LAMLAB_THREADS", "1"))
        if threads < 1:
            raise SchemaError("threads must be at least 1")
        spec = None
        if args.spec is not None:
            spec = _load_spec(args.spec)
            _validate_keys(spec, args.command)
        elif args.command != "verify":
            spec = _load_spec(None)
        seed = args.seed
        if seed is None:
            seed = int(spec.get("seed", 0)) if spec else 0
        out = None
        if args.out is not None:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
        elif args.command != "verify":
            raise SchemaError("this command needs --out <dir>")
        return _COMMANDS[args.command](spec, out, seed, threads, args.tol)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ModelInvalid, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ContinuationRefused, ContractionEscape, LaminationBroken,
            NotBirkhoff, CheckInconclusive, UnclassifiableSite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
