"""``orbimorse`` command-line interface.

Exit codes: 0 on success, 1 when the input is well formed but fails a
mathematical requirement (degenerate critical point, inconsistent inequality
under ``--strict``), 2 on malformed input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .builtin_examples import (ExampleSpec, k3_resolution_levels, kummer_critical_data, kummer_model,
                               teardrop_data, weighted_projective_data)
from .critical import assert_morse
from .errors import DomainFailure, InconsistentInequality, InputError, OrbiMorseError
from .flowlab import Field, StepControl, Status, Trajectory, integrate, integrate_batch, match_critical
from .formats import (critical_data_to_json, dumps, load_critical_data, load_model, load_polynomial,
                      sector_to_json)
from .inequalities import assemble_even_ranks, betti_from_lacunary, check_inequality, is_lacunary
from .morse_poly import (inertia_morse_polynomial, inertia_sectors, morse_polynomial,
                         orbifold_morse_polynomial)

THREADS_ENV = "ORBIFOLD_MORSE_THREADS"


def worker_count(env=None) -> int:
    """Thread cap from ``ORBIFOLD_MORSE_THREADS``; 0 or unset means one per CPU."""
    env = os.environ if env is None else env
    raw = env.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}") from None
    if n < 0:
        raise InputError(f"{THREADS_ENV} must be a non-negative integer, got {raw!r}")
    return n or (os.cpu_count() or 1)


def _table(headers, rows) -> str:
    cells = [list(map(str, headers))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _emit(text: str, out: str | None = None):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _fmt(v: float) -> str:
    return f"{v:.10g}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    model = load_model(args.model)
    cert = assert_morse(model)
    doc = critical_data_to_json(cert.points)
    if args.output:
        _emit(dumps(doc), args.output)
    if args.json:
        _emit(dumps(doc))
    elif not args.output or args.certify:
        rows = [(c.label, _fmt(c.value), " ".join(_fmt(v) for v in c.location), c.stabilizer.order,
                 c.index, c.coindex, "yes" if c.orientable else "no") for c in cert.points]
        _emit(_table(["point", "value", "location", "|Aut|", "ind", "coind", "orientable"], rows))
    if args.certify:
        search = cert.search
        diag = {
            "critical_points": len(cert.points),
            "seeds": int(search.seeds),
            "converged": int(search.converged),
            "dropped": int(search.dropped),
            "min_orbit_separation": float(cert.min_separation),
            "nondegenerate": True,
        }
        sys.stderr.write(("certificate " + json.dumps(diag, sort_keys=True)) + "\n")
    return 0


def cmd_inertia(args) -> int:
    cpd = load_critical_data(args.critical_data)
    sectors = inertia_sectors(cpd)
    if args.json:
        _emit(dumps([sector_to_json(s) for s in sectors]))
        return 0
    rows = [(s.label, s.class_size, s.centralizer_order, s.ind_fixed_dim, s.coind_fixed_dim,
             "-" if s.age is None else str(s.age), "yes" if s.orientable_pair else "no") for s in sectors]
    _emit(_table(["sector", "|class|", "|C(g)|", "ind^g", "coind^g", "age", "orientable"], rows))
    return 0


def cmd_poly(args) -> int:
    cpd = load_critical_data(args.critical_data)
    if args.kind == "plain":
        poly = morse_polynomial(cpd)
    elif args.kind == "inertia":
        poly = inertia_morse_polynomial(inertia_sectors(cpd))
    else:
        poly = orbifold_morse_polynomial(inertia_sectors(cpd))
    if args.json:
        _emit(dumps({"kind": args.kind, "polynomial": poly.to_json(), "text": poly.render()}))
    else:
        _emit(poly.render())
    return 0


def cmd_check(args) -> int:
    M = load_polynomial(args.morse)
    P = load_polynomial(args.poincare)
    report = check_inequality(M, P)
    if args.json:
        _emit(dumps(report.to_json()))
    else:
        _emit("\n".join([
            f"M = {M.render()}",
            f"P = {P.render()}",
            f"R = {report.remainder.render() if report.remainder is not None else '-'}",
            f"consistent: {'yes' if report.consistent else 'no'}",
            f"euler check: {'yes' if report.euler_check else 'no'}",
        ]))
    if args.strict and not report.consistent:
        raise InconsistentInequality(f"M - P = {M.render()} - ({P.render()}) is not (1 + t) R with R >= 0")
    return 0


def cmd_betti(args) -> int:
    M = load_polynomial(args.morse)
    dims = betti_from_lacunary(M)
    if args.json:
        _emit(dumps({"lacunary": is_lacunary(M), "betti": list(dims)}))
    else:
        _emit(_table(["degree", "dim"], list(enumerate(dims))))
    return 0


def _random_seeds(model, count: int, rng_seed: int) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    if model.lattice:
        return rng.random((count, model.dim))
    lo, hi = model.seeds.box
    return rng.uniform(lo, hi, size=(count, model.dim))


def _census(model, seeds, certified, field, t_max, threads) -> list[Trajectory]:
    # trajectories are independent, so chunking does not change any result
    chunks = [c for c in np.array_split(seeds, min(threads, len(seeds))) if len(c)]

    def run(chunk):
        return integrate_batch(model, chunk, field, t_max, StepControl(), record=False)

    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
    trajs = [tr for part in parts for tr in part]
    for tr in trajs:
        if tr.status is Status.CONVERGED:
            tr.critical_index = match_critical(model, tr.terminal, certified)
    return trajs


def cmd_flow(args) -> int:
    model = load_model(args.model)
    field = Field(args.field)
    if args.x0 is not None:
        x0 = np.array([float(v) for v in args.x0.replace(",", " ").split()])
        if x0.shape != (model.dim,):
            raise InputError(f"--x0 needs {model.dim} coordinates, got {x0.size}")
        cert = assert_morse(model) if args.certify else None
        tr = integrate(model, x0, field, args.tmax, certified=cert.points if cert else None)
        records = tr.to_records()
        label = (cert.points[tr.critical_index].label
                 if cert is not None and tr.critical_index is not None else None)
        if args.json:
            _emit(dumps({"status": tr.status.value, "critical_point": label, "records": records}))
        else:
            rows = [(_fmt(r["t"]), *(_fmt(v) for v in r["x"]), _fmt(r["f"])) for r in records]
            _emit(_table(["t", *(f"x{k + 1}" for k in range(model.dim)), "f"], rows))
            _emit(f"status: {tr.status.value}" + (f" ({label})" if label else ""))
        return 0
    cert = assert_morse(model)
    seeds = _random_seeds(model, args.seeds, args.rng_seed)
    trajs = _census(model, seeds, cert.points, field, args.tmax, worker_count())
    hits = {c.label: 0 for c in cert.points}
    statuses: dict[str, int] = {}
    uncertified = 0
    for tr in trajs:
        statuses[tr.status.value] = statuses.get(tr.status.value, 0) + 1
        if tr.status is Status.CONVERGED:
            if tr.critical_index is None:
                uncertified += 1
            else:
                hits[cert.points[tr.critical_index].label] += 1
    converged = sum(hits.values())
    doc = {"seeds": len(trajs), "hits": hits, "uncertified": uncertified,
           "statuses": dict(sorted(statuses.items())),
           "convergence_rate": converged / len(trajs) if trajs else 0.0}
    if args.json:
        _emit(dumps(doc))
    else:
        _emit(_table(["point", "hits"], [(k, v) for k, v in hits.items()]))
        _emit(f"converged to certified points: {converged}/{len(trajs)}; uncertified: {uncertified}; "
              + ", ".join(f"{k}: {v}" for k, v in doc["statuses"].items()))
    return 0


def cmd_example(args) -> int:
    spec = ExampleSpec(args.name, tuple(args.params))
    if spec.kind != "wps" and args.params:
        raise InputError(f"example {spec.kind!r} takes no parameters")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: dict[str, object] = {}
    if spec.kind == "kummer":
        files["kummer.model.json"] = kummer_model()
        files["kummer.critical.json"] = kummer_critical_data()
    elif spec.kind == "wps":
        files[f"wps_{'_'.join(map(str, spec.weights))}.critical.json"] = weighted_projective_data(spec.weights)
    elif spec.kind == "teardrop":
        files["teardrop.critical.json"] = teardrop_data()
    else:
        levels = k3_resolution_levels()
        files["k3.levels.json"] = {
            "levels": [{"level": lv.level, "relative_ranks": {str(d): r for d, r in lv.relative_ranks.items()}}
                       for lv in levels],
            "ranks": list(assemble_even_ranks(levels)),
        }
    written = []
    for name, doc in files.items():
        path = out_dir / name
        path.write_text(dumps(doc))
        written.append(str(path))
    if args.json:
        _emit(dumps({"written": written}))
    else:
        _emit("\n".join(written))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbimorse",
                                description="Morse invariants of global-quotient orbifolds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.set_defaults(func=func)
        return sp

    sp = add("analyze", cmd_analyze, "find and certify the critical points of a model file")
    sp.add_argument("model")
    sp.add_argument("--certify", action="store_true", help="report search diagnostics on stderr")
    sp.add_argument("-o", "--output", help="write the critical-data file here")

    sp = add("inertia", cmd_inertia, "inertia sectors of a critical-data file")
    sp.add_argument("critical_data")

    sp = add("poly", cmd_poly, "Morse polynomial of a critical-data file")
    sp.add_argument("critical_data")
    kind = sp.add_mutually_exclusive_group()
    kind.add_argument("--plain", dest="kind", action="store_const", const="plain")
    kind.add_argument("--inertia", dest="kind", action="store_const", const="inertia")
    kind.add_argument("--orbifold", dest="kind", action="store_const", const="orbifold")
    sp.set_defaults(kind="plain")

    sp = add("check", cmd_check, "Morse inequalities M = P + (1 + t) R")
    sp.add_argument("morse", help="polynomial file (JSON or text) or literal polynomial")
    sp.add_argument("poincare", help="polynomial file (JSON or text) or literal polynomial")
    sp.add_argument("--strict", action="store_true", help="exit 1 when inconsistent")

    sp = add("betti", cmd_betti, "graded dimensions of a lacunary Morse polynomial")
    sp.add_argument("morse", help="polynomial file (JSON or text) or literal polynomial")

    sp = add("flow", cmd_flow, "integrate gradient flows or run a basin census")
    sp.add_argument("model")
    sp.add_argument("--x0", help="start point, comma or space separated")
    sp.add_argument("--field", choices=[f.value for f in Field], default="neg")
    sp.add_argument("--tmax", type=float, default=50.0)
    sp.add_argument("--seeds", type=int, default=500, help="census size when --x0 is absent")
    sp.add_argument("--rng-seed", type=int, default=0)
    sp.add_argument("--certify", action="store_true", help="match the end point against certified points")

    sp = add("example", cmd_example, "write built-in example files")
    sp.add_argument("name", choices=["kummer", "wps", "teardrop", "k3"])
    sp.add_argument("params", nargs="*", type=int, help="weights for wps")
    sp.add_argument("--out-dir", default=".")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DomainFailure as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    except (InputError, OrbiMorseError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
