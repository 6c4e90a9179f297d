"""Command-line frontend: dispersion curves, band gaps, sensitivity
studies and design-equation checks, exported as plot-ready CSV/JSON.

Every command is reproducible: identical configuration and seed yield
byte-identical output files, and ``--threads`` only changes wall time.
Exit codes: 0 success, 1 numerical failure (such as a gap-free cell
where a gap is required), 2 configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .sampling import ParameterSpace, canonical_space, lhs_sample
from .sobol import (
    ModelEvaluationError,
    analytic_poly_model,
    analytic_poly_reference,
    estimate_sobol_function_1d,
    estimate_sobol_function_2d,
    result_to_json,
    sobol_indices,
)
from .crystal import (
    NoBandGapError,
    Polarization,
    UnitCell,
    dispersion_csv_rows,
    dispersion_curve,
    first_band_gap,
    objective_model,
    transit_time,
)
from .design import (
    KINDS,
    design_model,
    load_design_equations,
    scaled_l2_error,
    truncation_curve,
)


class ConfigError(Exception):
    pass


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out:
        out = Path(args.out)
    else:
        out = Path(os.environ.get("PHONOGAP_OUT", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _write_table(out: Path, name: str, rows: list[list[str]], fmt: str) -> Path:
    """Tabular artifact in the requested format; rows carry full precision."""
    if fmt == "csv":
        path = out / f"{name}.csv"
        _write_csv(path, rows)
    else:
        path = out / f"{name}.json"
        header, *data = rows
        payload = [dict(zip(header, r)) for r in data]
        path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def _load_cell(path: str) -> UnitCell:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read cell file {path}: {err}") from err
    try:
        return UnitCell.from_json(text)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
        raise ConfigError(f"malformed cell file {path}: {err}") from err


def _load_space(path: str | None) -> ParameterSpace:
    if path is None:
        return canonical_space()
    try:
        return ParameterSpace.from_json(Path(path).read_text())
    except OSError as err:
        raise ConfigError(f"cannot read space file {path}: {err}") from err
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
        raise ConfigError(f"malformed space file {path}: {err}") from err


def _polarizations(choice: str) -> list[Polarization]:
    if choice == "both":
        return [Polarization.S, Polarization.P]
    return [Polarization(choice)]


def _gap_summary(cell: UnitCell, pols: list[Polarization], seed: int) -> dict:
    gaps = {}
    for pol in pols:
        gap = first_band_gap(cell, pol)
        gaps[pol.value] = None if gap is None else gap.to_dict()
    return {"seed": seed, "first_band_gap": gaps}


def cmd_dispersion(args: argparse.Namespace) -> int:
    cell = _load_cell(args.cell)
    out = _out_dir(args)
    pols = _polarizations(args.pol)
    for pol in pols:
        omega_max = args.omega_max or 8.0 * math.pi / transit_time(cell, pol)
        points = dispersion_curve(cell, omega_max, args.n_points, pol)
        _write_table(out, f"dispersion_{pol.value}", dispersion_csv_rows(points), args.format)
    _write_json(out / "bandgap_summary.json", _gap_summary(cell, pols, args.seed))
    print(f"wrote dispersion data for {', '.join(p.value for p in pols)} to {out}")
    return 0


def cmd_bandgap(args: argparse.Namespace) -> int:
    cell = _load_cell(args.cell)
    out = _out_dir(args)
    summary = _gap_summary(cell, _polarizations(args.pol), args.seed)
    _write_json(out / "bandgap_summary.json", summary)
    print(json.dumps(summary["first_band_gap"], indent=2, sort_keys=True))
    return 0


def _parse_function_requests(spec: str | None, names: tuple[str, ...]) -> list[tuple[int, ...]]:
    if not spec:
        return []
    requests = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        labels = [p.strip() for p in part.split(",")]
        try:
            axes = tuple(names.index(l) for l in labels)
        except ValueError as err:
            raise ConfigError(f"unknown dimension in --functions: {part} (choose from {names})") from err
        if len(axes) not in (1, 2):
            raise ConfigError(f"--functions entries take one or two dimensions, got {part!r}")
        requests.append(axes)
    return requests


def cmd_sobol(args: argparse.Namespace) -> int:
    if args.n < 100:
        raise ConfigError("sensitivity studies need --n of at least 100")
    out = _out_dir(args)
    if args.target == "poly":
        model = analytic_poly_model()
        names: tuple[str, ...] = ("x1", "x2", "x3")
        space = None
    else:
        space = _load_space(args.space)
        model = objective_model(args.target, space)
        names = space.names
    samples = lhs_sample(model.n_dims, args.n, args.seed)
    try:
        result = sobol_indices(model, samples, threads=args.threads, dim_names=names)
    except ModelEvaluationError as err:
        print(f"model evaluation failed at physical point {err.point.tolist()}", file=sys.stderr)
        return 1
    (out / "sobol_result.json").write_text(result_to_json(result))
    _write_table(out, "sobol_indices", result.to_csv_rows(), args.format)

    for axes in _parse_function_requests(args.functions, names):
        tag = "-".join(names[a].replace("/", "_") for a in axes)
        if len(axes) == 1:
            est = estimate_sobol_function_1d(
                model, axes[0], args.grid, args.inner, seed=args.seed, threads=args.threads
            )
        else:
            est = estimate_sobol_function_2d(
                model, axes[0], axes[1], args.grid, args.inner, seed=args.seed, threads=args.threads
            )
        _write_table(out, f"sobol_function_{tag}", est.to_csv_rows(), args.format)

    if args.target == "poly":
        ref = analytic_poly_reference()
        estimated = {
            "1": float(result.first_order_indices[0]),
            "2": float(result.first_order_indices[1]),
            "3": float(result.first_order_indices[2]),
            "12": float(result.second_order_indices[0, 1]),
            "13": float(result.second_order_indices[0, 2]),
            "23": float(result.second_order_indices[1, 2]),
        }
        comparison = {
            "n_samples": args.n,
            "seed": args.seed,
            "f0": {"estimated": result.f0, "analytic": ref.f0},
            "indices": {
                k: {"estimated": v, "analytic": ref.indices[k]} for k, v in estimated.items()
            },
        }
        _write_json(out / "analytic_comparison.json", comparison)
    print(f"wrote sensitivity study for {model.name} (N={args.n}, seed={args.seed}) to {out}")
    return 0


def _parse_point(text: str) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as err:
        raise ConfigError(f"malformed parameter point {text!r}") from err
    if len(values) != 5:
        raise ConfigError("a design point needs five comma-separated values")
    return np.asarray(values)


def cmd_design(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    kinds = list(KINDS) if args.kind == "all" else [args.kind]
    if args.mode == "eval":
        if not args.params:
            raise ConfigError("eval mode needs --params E2/E1,rho2/rho1,h2/h1,nu1,nu2")
        point = _parse_point(args.params)
        eqs = load_design_equations()
        payload = {
            "mode": "eval",
            "params": point.tolist(),
            "seed": args.seed,
            "predictions_omega_hat": {k: float(eqs[k].evaluate(point)) for k in kinds},
        }
        _write_json(out / "design_eval.json", payload)
        print(json.dumps(payload["predictions_omega_hat"], indent=2, sort_keys=True))
        return 0

    samples = lhs_sample(5, args.n, args.seed)
    if args.mode == "error":
        payload = {"mode": "error", "n_samples": args.n, "seed": args.seed, "delta": {}}
        for kind in kinds:
            delta = scaled_l2_error(
                objective_model(kind), design_model(kind), samples, threads=args.threads
            )
            payload["delta"][kind] = delta
        _write_json(out / "design_error.json", payload)
        print(json.dumps(payload["delta"], indent=2, sort_keys=True))
        return 0

    payload = {"mode": "truncation", "n_samples": args.n, "seed": args.seed, "curves": {}}
    for kind in kinds:
        curve = truncation_curve(kind, samples, threads=args.threads)
        payload["curves"][kind] = curve.to_json_dict()
    _write_json(out / "design_truncation.json", payload)
    for kind in kinds:
        print(kind, " ".join(format(d, ".4f") for d in payload["curves"][kind]["delta_by_k"]))
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="RNG seed recorded in every artifact")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (never changes results)")
    parser.add_argument("--out", type=str, default=None, help="output directory (default $PHONOGAP_OUT or .)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv", help="tabular output format")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phonogap",
        description="1D phononic band gaps: dispersion, sensitivity analysis, design equations",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    pd = sub.add_parser("dispersion", help="dispersion curve CSV + band-gap summary")
    pd.add_argument("--cell", required=True, help="unit-cell JSON file")
    pd.add_argument("--pol", choices=["S", "P", "both"], default="both")
    pd.add_argument("--omega-max", type=float, default=None, help="default: 8*pi/transit time")
    pd.add_argument("--n-points", type=int, default=2000)
    _add_common(pd)
    pd.set_defaults(func=cmd_dispersion)

    pb = sub.add_parser("bandgap", help="first band gap per polarization")
    pb.add_argument("--cell", required=True, help="unit-cell JSON file")
    pb.add_argument("--pol", choices=["S", "P", "both"], default="both")
    _add_common(pb)
    pb.set_defaults(func=cmd_bandgap)

    ps = sub.add_parser("sobol", help="variance-based sensitivity study")
    ps.add_argument("--target", choices=["poly", *KINDS], required=True)
    ps.add_argument("--n", type=int, default=2000, help="Monte Carlo sample size")
    ps.add_argument("--space", default=None, help="parameter-space JSON (default: canonical)")
    ps.add_argument(
        "--functions",
        default=None,
        help="Sobol' functions to export, e.g. 'x2;x2,x3' or 'rho2/rho1;rho2/rho1,h2/h1'",
    )
    ps.add_argument("--grid", type=int, default=64, help="grid nodes per function axis")
    ps.add_argument("--inner", type=int, default=128, help="inner samples per grid node")
    _add_common(ps)
    ps.set_defaults(func=cmd_sobol)

    pg = sub.add_parser("design", help="design-equation evaluation and error analysis")
    pg.add_argument("--kind", choices=["all", *KINDS], default="all")
    pg.add_argument("--mode", choices=["eval", "error", "truncation"], required=True)
    pg.add_argument("--params", default=None, help="five comma-separated values for eval mode")
    pg.add_argument("--n", type=int, default=2000, help="samples for error/truncation modes")
    _add_common(pg)
    pg.set_defaults(func=cmd_design)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except NoBandGapError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
