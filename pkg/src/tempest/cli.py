"""Command-line front end.

    tempest sample|transform|pmf|limit|conditions --scenario FILE --seed U64 --out DIR [--workers N]

Exit codes: 0 success or pass, 1 numerical failure or failed experiment,
2 configuration error. Outputs carry no timestamps or worker counts, so
re-runs with the same scenario and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import STANDARD_Z_GRID, standard_s_grid, write_transform_csv
from .heavy_tails import BaseMeasure, DegenerateMeasureError
from .limit_lab import (
    ConvergenceReport,
    Schedule,
    check_array_conditions,
    natural_scale_experiment,
    prop34_embedding,
    run_experiment,
)
from .numerics import InversionError, QuadratureError, RngStream
from .scenario import (
    CONFIG_ERRORS,
    ScenarioError,
    _require,
    array_experiment_from,
    distribution_from,
    load_scenario,
    quadrature_from,
    tempering_from,
)
from .stable import StableParams, ds_sample, ps_laplace, ps_sample
from .tempered import (
    DtsParams,
    PmfError,
    PtsParams,
    dts_pmf,
    dts_sample,
    pts_laplace_exponent,
    pts_sample,
    write_pmf_csv,
)
from .tempering import TemperingFunction

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2
NUMERICAL_ERRORS = (QuadratureError, InversionError, PmfError, DegenerateMeasureError)
U64_MAX = 2**64 - 1


class NumericalFailure(RuntimeError):
    pass


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n")


def _header(command: str, doc, seed: int | None) -> list[str]:
    lines = [f"tempest {__version__} {command}", f"scenario={canonical(doc)}"]
    if seed is not None:
        lines.append(f"seed={seed}")
    return lines


def _resolve_seed(args, doc, required: bool) -> int | None:
    seed = args.seed if args.seed is not None else doc.get("seed")
    if seed is None:
        if required:
            raise ScenarioError(f"command {args.command!r} is stochastic and needs --seed")
        return None
    if not 0 <= seed <= U64_MAX:
        raise ScenarioError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return int(seed)


def _distribution(doc):
    dist = _require(doc, "distribution", "scenario")
    return dist, distribution_from(dist)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


# ------------------------------------------------------------------ commands

def cmd_sample(doc, seed: int, out: Path, workers: int = 1) -> int:
    dist, p = _distribution(doc)
    count = int(_require(doc, "count", "scenario"))
    rng = RngStream(seed)
    method, tol = dist.get("method", "auto"), float(dist.get("tol", 1e-3))
    fam = dist["family"]
    if fam == "ps":
        x = ps_sample(p, rng, count)
    elif fam == "ds":
        x = ds_sample(p, rng, count)
    elif fam == "pts":
        x = pts_sample(p, rng, count, tol=tol, method=method)
    else:
        x = dts_sample(p, rng, count, tol=tol, method=method)
    x = np.atleast_1d(x)
    with open(out / "samples.txt", "w") as fh:
        for line in _header("sample", doc, seed):
            fh.write(f"# {line}\n")
        fh.writelines(_fmt(v) + "\n" for v in x)
    return EXIT_OK


def _transform_values(dist, p, grid, spec):
    """Analytic LT (ps, pts) or pgf (ds, dts) at each grid point."""
    fam = dist["family"]
    kind = "pgf" if fam in ("ds", "dts") else "lt"
    vals = []
    for g in grid:
        if kind == "pgf" and not 0 <= g <= 1:
            raise ScenarioError(f"pgf grid point {g!r} outside [0, 1]")
        if kind == "lt" and not g >= 0:
            raise ScenarioError(f"Laplace grid point {g!r} is negative")
        z = 1.0 - g if kind == "pgf" else g
        if fam in ("ps", "ds"):
            vals.append(float(ps_laplace(p, z)))
            continue
        law = p.folded() if fam == "dts" else p
        try:
            # the DTS pgf at s = 0 is its limit P(N = 0), read off the exponent at z = 1
            vals.append(math.exp(-pts_laplace_exponent(law, z, spec)))
        except QuadratureError as exc:
            raise NumericalFailure(f"quadrature failed at grid point {g!r}: {exc}") from None
    return kind, vals


def cmd_transform(doc, seed, out: Path, workers: int = 1) -> int:
    dist, p = _distribution(doc)
    fam = dist["family"]
    default = standard_s_grid() + (0.0, 1.0) if fam in ("ds", "dts") else STANDARD_Z_GRID
    grid = [float(g) for g in doc.get("grid", default)]
    kind, vals = _transform_values(dist, p, grid, quadrature_from(doc))
    with open(out / "transform.csv", "w", newline="") as fh:
        for line in _header("transform", doc, None) + [f"kind={kind}"]:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["grid_point", "value"])
        for g, v in zip(grid, vals):
            w.writerow([repr(g), repr(v)])
    return EXIT_OK


def cmd_pmf(doc, seed, out: Path, workers: int = 1) -> int:
    dist, p = _distribution(doc)
    if isinstance(p, StableParams):
        if dist["family"] != "ds":
            raise ScenarioError("pmf needs a discrete family (ds or dts)")
        p = DtsParams(p.alpha, TemperingFunction.identity(), p.eta)
    elif isinstance(p, PtsParams):
        raise ScenarioError("pmf needs a discrete family (ds or dts)")
    n_max = int(doc.get("n_max", 1000))
    if p.eta == 0 and p.drift == 0:
        n_max = 0  # all mass at zero
    table = dts_pmf(p, n_max, quadrature_from(doc))
    write_pmf_csv(table, out / "pmf.csv", _header("pmf", doc, None))
    return EXIT_OK


def _write_report(out: Path, name: str, rep: ConvergenceReport, header):
    write_transform_csv(out / f"{name}.csv", rep.empirical, rep.gap,
                        header + [f"kind={rep.kind}", f"label={rep.label}", f"passed={rep.passed}"])


def cmd_limit(doc, seed: int, out: Path, workers: int = 1) -> int:
    exp = _require(doc, "experiment", "scenario")
    header = _header("limit", doc, seed)
    kind = exp["type"]
    if kind == "array":
        rep = run_experiment(array_experiment_from(exp, seed), workers)
        write_json(out / "limit.json", rep.to_json())
        _write_report(out, "limit", rep, header)
        passed = rep.passed
    elif kind == "embedding":
        dist = _require(exp, "distribution", "experiment")
        p = distribution_from(dist)
        if dist["family"] != "pts":
            raise ScenarioError("embedding experiments take a pts distribution")
        grid = tuple(exp.get("grid", STANDARD_Z_GRID))
        rep = prop34_embedding(p, _require(exp, "a_list", "experiment"),
                               int(_require(exp, "m", "experiment")), seed, grid, workers)
        write_json(out / "limit.json", rep.to_json())
        for i, r in enumerate(rep.reports):
            _write_report(out, f"limit_{i}", r, header)
        passed = rep.passed
    else:
        rep = natural_scale_experiment(
            BaseMeasure.from_json(_require(exp, "base", "experiment")),
            tempering_from(exp.get("q")),
            float(_require(exp, "ell", "experiment")),
            int(_require(exp, "m", "experiment")),
            seed, float(exp.get("factor", 100.0)), workers)
        write_json(out / "limit.json", rep.to_json())
        _write_report(out, "limit_natural", rep.natural, header)
        _write_report(out, "limit_large", rep.large, header)
        passed = rep.passed
    return EXIT_OK if passed else EXIT_NUMERICAL


def cmd_conditions(doc, seed, out: Path, workers: int = 1) -> int:
    c = _require(doc, "conditions", "scenario")
    rep = check_array_conditions(
        BaseMeasure.from_json(c["base"]), tempering_from(c.get("q")),
        Schedule.from_json(c["schedule"]), c["n_list"], c["s_grid"],
        tuple(c.get("eps_grid", (1.0, 0.1, 0.01))), bool(c.get("discrete", False)))
    write_json(out / "conditions.json", rep.to_json())
    header = _header("conditions", doc, None)
    for name, rows, key in (("tail", rep.tail_rows, "s"), ("mean", rep.mean_rows, "eps")):
        with open(out / f"conditions_{name}.csv", "w", newline="") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", key, "value", "limit", "error"])
            for r in rows:
                w.writerow([_fmt(r["n"]), _fmt(r[key]), _fmt(r["value"]), _fmt(r["limit"]),
                            _fmt(r["error"])])
    return EXIT_OK


COMMANDS = {
    "sample": (cmd_sample, True),
    "transform": (cmd_transform, False),
    "pmf": (cmd_pmf, False),
    "limit": (cmd_limit, True),
    "conditions": (cmd_conditions, False),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tempest", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--scenario", required=True,
                    help="scenario JSON file, or the name of a bundled scenario")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the scenario)")
    ap.add_argument("--out", required=True, type=Path, help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--version", action="version", version=f"tempest {__version__}")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    func, stochastic = COMMANDS[args.command]
    try:
        if args.workers < 1:
            raise ScenarioError("--workers must be >= 1")
        doc = load_scenario(args.scenario)
        seed = _resolve_seed(args, doc, stochastic)
        args.out.mkdir(parents=True, exist_ok=True)
        code = func(doc, seed, args.out, args.workers)
    except CONFIG_ERRORS as exc:
        print(f"tempest: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"tempest: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NUMERICAL_ERRORS as exc:
        print(f"tempest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if code != EXIT_OK:
        print(f"tempest: {args.command} did not pass; see {args.out}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
