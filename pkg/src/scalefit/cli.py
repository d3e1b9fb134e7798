"""Command-line interface: ingest, fit, allocate, bootstrap, score, simulate, report.

Every command is reproducible: primary outputs depend only on the inputs
and flags (seeds included), timestamps go to a sidecar .log file.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys

import numpy as np

from . import __version__
from .alignment import BehaviorData, BenchmarkData, behavior_score, neural_score
from .allocation import (
    ComputeModel,
    allocation_coefficients,
    brute_force_allocation,
    fit_compute_model,
    optimal_allocation,
)
from .records import REGIONS, IngestError, export, filter_for_fit, ingest
from .scaling import (
    FitConfig,
    JointFit,
    PowerLawFit,
    Rescale,
    ShiftedPowerLawFit,
    fit_joint,
    fit_power_law,
    fit_shifted_power_law,
    predict,
    region_gain,
)
from .synth import BenchmarkGenerator, CurveGenerator, gen_benchmark, gen_curve_points
from .uncertainty import BootstrapConfig, bootstrap_fit

SPEC_VERSION = "1.0"


def _r(v) -> str:
    """repr of a value as a plain python float (round-trip exact)."""
    return repr(float(v))

TARGETS = ("v1", "v2", "v4", "it", "behavior", "brain", "mean")
_TARGET_REGIONS = {
    "v1": ("V1",),
    "v2": ("V2",),
    "v4": ("V4",),
    "it": ("IT",),
    "behavior": ("behavior",),
    "brain": ("V1", "V2", "V4", "IT"),
    "mean": REGIONS,
}


def _default_seed() -> int:
    return int(os.environ.get("SCALEFIT_SEED", "0"))


def _write_json(path: str, payload: dict) -> None:
    payload = dict(payload)
    payload["spec_version"] = SPEC_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_sidecar_log(path)


def _write_sidecar_log(path: str) -> None:
    with open(path + ".log", "w", encoding="utf-8") as fh:
        fh.write(f"written_at: {datetime.datetime.now().isoformat()}\n")
        fh.write(f"argv: {' '.join(sys.argv)}\n")
        fh.write(f"scalefit_version: {__version__}\n")


def _read_report(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("spec_version", "")
    if version.split(".")[0] != SPEC_VERSION.split(".")[0]:
        raise ValueError(
            f"{path}: unsupported report spec_version {version!r} "
            f"(reader supports major {SPEC_VERSION.split('.')[0]})"
        )
    return payload


def _rescale_from_args(args) -> Rescale:
    if getattr(args, "no_rescale", False):
        return Rescale(1.0, 1.0, 1.0)
    return Rescale(args.c_scale, args.n_scale, args.d_scale)


def _fit_config(args) -> FitConfig:
    return FitConfig(rescale=_rescale_from_args(args))


def _x_value(record, x_kind: str) -> float:
    if x_kind == "flops":
        return record.flops
    if x_kind == "params":
        return float(record.n_params)
    return float(record.samples_seen)


def _target_misalignment(record, target: str) -> float:
    regions = _TARGET_REGIONS[target]
    s = sum(record.scores[r] for r in regions) / len(regions)
    return 1.0 - s


def _load_points(args, need_joint: bool) -> np.ndarray:
    """Fit input: either a run table (scores -> L) or a bare points CSV."""
    if args.points:
        rows = []
        with open(args.points, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            cols = ("n", "d", "l") if need_joint else ("x", "l")
            if reader.fieldnames is None or any(c not in reader.fieldnames for c in cols):
                raise ValueError(
                    f"points CSV must have columns {','.join(cols)}"
                )
            for row in reader:
                rows.append([float(row[c]) for c in cols])
        return np.asarray(rows, dtype=float)

    table = ingest(args.input, format=args.format, average_seeds=args.average_seeds)
    if args.filter:
        table = filter_for_fit(table, args.filter)
    if need_joint:
        return np.array(
            [
                [float(r.n_params), float(r.samples_seen), _target_misalignment(r, args.target)]
                for r in table
            ]
        )
    return np.array(
        [[_x_value(r, args.x), _target_misalignment(r, args.target)] for r in table]
    )


def _fit_payload(fit) -> dict:
    payload = {
        "form": fit.form,
        "params": fit.params(),
        "objective": fit.objective,
        "init_used": list(fit.init_used),
        "degenerate": fit.degenerate,
        "converged": fit.converged,
        "n_points": fit.n_points,
    }
    if isinstance(fit, JointFit):
        payload["rescale"] = {"n_scale": fit.n_scale, "d_scale": fit.d_scale}
    else:
        payload["x_kind"] = fit.x_kind
        payload["rescale"] = {"x_scale": fit.x_scale}
    return payload


def _fit_from_payload(payload: dict):
    params = payload["params"]
    common = dict(
        objective=payload["objective"],
        init_used=tuple(payload["init_used"]),
        degenerate=payload["degenerate"],
        converged=payload.get("converged", True),
        n_points=payload.get("n_points", 0),
    )
    if payload["form"] == "joint":
        return JointFit(
            E=params["E"],
            A=params["A"],
            alpha=params["alpha"],
            B=params["B"],
            beta=params["beta"],
            n_scale=payload["rescale"]["n_scale"],
            d_scale=payload["rescale"]["d_scale"],
            **common,
        )
    if payload["form"] == "shifted":
        return ShiftedPowerLawFit(
            E=params["E"],
            A=params["A"],
            alpha=params["alpha"],
            lam=params["lambda"],
            x_kind=payload["x_kind"],
            x_scale=payload["rescale"]["x_scale"],
            **common,
        )
    return PowerLawFit(
        E=params["E"],
        A=params["A"],
        alpha=params["alpha"],
        x_kind=payload["x_kind"],
        x_scale=payload["rescale"]["x_scale"],
        **common,
    )


def _run_fit(points: np.ndarray, args, cfg: FitConfig):
    if args.form == "power":
        return fit_power_law(points, cfg, args.x)
    if args.form == "shifted":
        return fit_shifted_power_law(points, cfg, args.x, freeze_lambda=args.freeze_lambda)
    return fit_joint(points, cfg)


def _emit_curve(fit, points: np.ndarray, csv_path: str | None, svg_path: str | None, curve_ci=None):
    if isinstance(fit, JointFit):
        raise ValueError("curve emission supports power and shifted fits only")
    x = points[:, 0]
    grid = np.logspace(np.log10(x.min()), np.log10(x.max()), 200)
    L, S = predict(fit, x=grid)
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "L", "S"])
            for xi, li, si in zip(grid, L, S):
                writer.writerow([_r(xi), _r(li), _r(si)])
        _write_sidecar_log(csv_path)
    if svg_path:
        band = None
        if curve_ci:
            band = (
                np.array([c[0] for c in curve_ci], dtype=float),
                np.array([c[1] for c in curve_ci], dtype=float),
                np.array([c[2] for c in curve_ci], dtype=float),
            )
        _write_svg(svg_path, grid, L, points, band)
        _write_sidecar_log(svg_path)


def _write_svg(path: str, x, y, points, band=None, width=640, height=400):
    """Minimal log-x line chart: axes, fitted line, data dots, optional CI band."""
    pad = 50
    all_x = np.concatenate([x, points[:, 0]])
    all_y = np.concatenate([y, points[:, 1]])
    if band is not None:
        all_x = np.concatenate([all_x, band[0]])
        all_y = np.concatenate([all_y, band[1], band[2]])
    lx0, lx1 = np.log10(all_x.min()), np.log10(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return pad + (np.log10(v) - lx0) / (lx1 - lx0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    def poly(xs, ys):
        return " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" font-size="12">x (log scale)</text>',
        f'<text x="12" y="{height // 2}" font-size="12" transform="rotate(-90 12 {height // 2})">L</text>',
    ]
    if band is not None:
        bx, blo, bhi = band
        pts = poly(bx, blo) + " " + poly(bx[::-1], bhi[::-1])
        parts.append(f'<polygon points="{pts}" fill="lightsteelblue" opacity="0.5"/>')
    parts.append(f'<polyline points="{poly(x, y)}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for px, py in points[:, :2]:
        parts.append(f'<circle cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="2.5" fill="black"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    table = ingest(args.input, format=args.format, average_seeds=args.average_seeds)
    if args.filter:
        table = filter_for_fit(table, args.filter)
    export(table, args.output, format=args.output_format)
    _write_sidecar_log(args.output)
    print(f"ingested {len(table)} run(s) -> {args.output}")
    return 0


def cmd_fit(args) -> int:
    need_joint = args.form == "joint"
    points = _load_points(args, need_joint)
    cfg = _fit_config(args)
    fit = _run_fit(points, args, cfg)
    payload = _fit_payload(fit)
    payload["x"] = None if need_joint else args.x
    payload["target"] = args.target
    _write_json(args.output, payload)
    if args.emit_curve or args.svg:
        _emit_curve(fit, points, args.emit_curve, args.svg)
    print(f"fit {fit.form}: params={fit.params()} objective={fit.objective:.6g}")
    return 0


def cmd_allocate(args) -> int:
    payload = _read_report(args.fit_report)
    fit = _fit_from_payload(payload)
    if not isinstance(fit, JointFit):
        raise ValueError("allocation requires a joint fit report")

    rescale = Rescale(args.c_scale, fit.n_scale, fit.d_scale)
    if args.compute_model:
        cm_payload = _read_report(args.compute_model)
        cm = ComputeModel(
            m=cm_payload["m"],
            n=cm_payload["n"],
            r2=cm_payload.get("r2", float("nan")),
            n_points=cm_payload.get("n_points", 0),
        )
    elif args.input:
        table = ingest(args.input, format=args.format)
        cm = fit_compute_model(table, rescale=rescale)
    else:
        raise ValueError("provide --compute-model REPORT or --input RUNS to fit one")

    if args.budget <= 0:
        raise ValueError("--budget must be positive")
    budget_scaled = args.budget / rescale.c_scale
    result = optimal_allocation(fit, cm, budget_scaled)
    coef = allocation_coefficients(fit)
    out = {
        "budget_C": args.budget,
        "n_star": result.n_star * fit.n_scale,
        "d_star": result.d_star * fit.d_scale,
        "predicted_L": result.predicted_L,
        "predicted_S": 1.0 - result.predicted_L,
        "method": result.method,
        "coefficients": {"a_prime": coef.a_prime, "b_prime": coef.b_prime, "G": coef.G},
        "compute_model": {"m": cm.m, "n": cm.n, "r2": cm.r2},
        "rescale": {
            "c_scale": rescale.c_scale,
            "n_scale": fit.n_scale,
            "d_scale": fit.d_scale,
        },
    }
    if args.verify:
        bf = brute_force_allocation(fit, cm, budget_scaled, grid_points=args.grid_points)
        cell = 12.0 / (args.grid_points - 1)  # log10 grid spacing
        out["verify"] = {
            "n_star": bf.n_star * fit.n_scale,
            "d_star": bf.d_star * fit.d_scale,
            "predicted_L": bf.predicted_L,
            "log10_n_discrepancy": abs(np.log10(bf.n_star / result.n_star)),
            "grid_cell_log10": cell,
            "grid_points": args.grid_points,
        }
    _write_json(args.output, out)
    print(
        f"allocation: N*={out['n_star']:.6g} D*={out['d_star']:.6g} "
        f"L={out['predicted_L']:.6g}"
    )
    return 0


def cmd_bootstrap(args) -> int:
    need_joint = args.form == "joint"
    points = _load_points(args, need_joint)
    cfg = _fit_config(args)
    if args.curve_points > 0 and not need_joint:
        x = points[:, 0]
        grid = tuple(np.logspace(np.log10(x.min()), np.log10(x.max()), args.curve_points))
    else:
        grid = ()
    bs_cfg = BootstrapConfig(
        resamples=args.resamples, ci_level=args.ci, seed=args.seed, curve_grid=grid
    )
    result = bootstrap_fit(
        points,
        args.form,
        cfg,
        bs_cfg,
        x_kind=args.x,
        warm_start=args.warm_start,
    )
    payload = _fit_payload(result.point_estimate)
    payload.update(
        {
            "param_ci": {k: list(v) for k, v in result.param_ci.items()},
            "curve_ci": [[x, lo, hi] for x, lo, hi in result.curve_ci],
            "resamples": result.resamples,
            "seed": result.seed,
            "n_failed_resamples": result.n_failed_resamples,
            "ci_level": args.ci,
        }
    )
    _write_json(args.output, payload)
    if args.svg and not need_joint:
        _emit_curve(result.point_estimate, points, None, args.svg, curve_ci=result.curve_ci)
    print(f"bootstrap: {result.resamples} resamples, {result.n_failed_resamples} failed")
    return 0


def _read_matrix_csv(path: str):
    """Matrix CSV: header `stim_id,<col0>,<col1>,...`; returns (ids, array)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "stim_id":
            raise ValueError(f"{path}: first column must be stim_id")
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return ids, np.asarray(rows, dtype=float)


def _read_labeled_csv(path: str):
    """Behavior CSV: header `stim_id,label,f0,...`; returns (ids, labels, features)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["stim_id", "label"]:
            raise ValueError(f"{path}: first columns must be stim_id,label")
        ids, labels, rows = [], [], []
        for row in reader:
            ids.append(row[0])
            labels.append(row[1])
            rows.append([float(v) for v in row[2:]])
    return ids, np.asarray(labels), np.asarray(rows, dtype=float)


def _read_pattern_csv(path: str) -> np.ndarray:
    """Pattern CSV: `image_id,class,probability`, image-major, class ascending."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = ("image_id", "class", "probability")
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in need):
            raise ValueError(f"{path}: pattern CSV must have columns {','.join(need)}")
        return np.array([float(row["probability"]) for row in reader])


def _append_score(runs_path: str, run_id: str, region: str, ceiled: float) -> None:
    with open(runs_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fieldnames = list(reader.fieldnames or [])
        rows = list(reader)
    col = f"score_{region.lower()}"
    if col not in fieldnames:
        raise ValueError(f"{runs_path}: no column {col}")
    hit = False
    for row in rows:
        if row["run_id"] == run_id:
            row[col] = _r(ceiled)
            hit = True
    if not hit:
        raise ValueError(f"{runs_path}: no run_id {run_id!r}")
    with open(runs_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def cmd_score(args) -> int:
    if args.kind == "neural":
        ids_a, acts = _read_matrix_csv(args.activations)
        ids_r, recs = _read_matrix_csv(args.recordings)
        if ids_a != ids_r:
            raise ValueError("activation and recording stimulus ids differ")
        data = BenchmarkData(
            stimulus_ids=ids_a,
            activations=acts,
            recordings=recs,
            ceiling=args.ceiling,
            region=args.region,
        )
        report = neural_score(
            data,
            repeats=args.repeats,
            train_fraction=args.train_fraction,
            seed=args.seed,
            ridge=args.ridge,
            aggregate=args.aggregate,
        )
        region = args.region
    else:
        _, ytr, Xtr = _read_labeled_csv(args.train)
        _, yte, Xte = _read_labeled_csv(args.test)
        pattern = _read_pattern_csv(args.pattern)
        data = BehaviorData(
            train_features=Xtr,
            train_labels=ytr,
            test_features=Xte,
            test_labels=yte,
            primate_pattern=pattern,
            ceiling=args.ceiling,
        )
        report = behavior_score(data, seed=args.seed)
        region = "behavior"

    _write_json(
        args.output,
        {
            "region": region,
            "raw": report.raw,
            "ceiled": report.ceiled,
            "ceiling": report.ceiling,
            "n_repeats": report.n_repeats,
            "seed": report.seed,
            "aggregate": report.aggregate,
        },
    )
    if args.append_to:
        if not args.run_id:
            raise ValueError("--append-to requires --run-id")
        _append_score(args.append_to, args.run_id, region, report.ceiled)
    print(f"score {region}: raw={report.raw:.4f} ceiled={report.ceiled:.4f}")
    return 0


def cmd_simulate(args) -> int:
    if args.kind == "curve":
        params = {"E": args.E, "A": args.A, "alpha": args.alpha}
        if args.form == "shifted":
            params["lambda"] = getattr(args, "lam")
        if args.form == "joint":
            params.update({"B": args.B, "beta": args.beta})
            gen = CurveGenerator(
                form="joint",
                true_params=params,
                n_grid=tuple(np.logspace(np.log10(args.n_min), np.log10(args.n_max), args.grid_side)),
                d_grid=tuple(np.logspace(np.log10(args.d_min), np.log10(args.d_max), args.grid_side)),
                noise_sigma_log=args.sigma,
                seed=args.seed,
            )
            pts = gen_curve_points(gen)
            header = ["n", "d", "l"]
        else:
            gen = CurveGenerator(
                form=args.form,
                true_params=params,
                x_grid=tuple(np.logspace(np.log10(args.x_min), np.log10(args.x_max), args.n_points)),
                noise_sigma_log=args.sigma,
                seed=args.seed,
            )
            pts = gen_curve_points(gen)
            header = ["x", "l"]
        if args.as_runs:
            _write_runs_from_points(args, pts)
        else:
            with open(args.output, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for row in pts:
                    writer.writerow([_r(v) for v in row])
        _write_sidecar_log(args.output)
        print(f"simulated {len(pts)} point(s) -> {args.output}")
        return 0

    gen = BenchmarkGenerator(
        n_stimuli=args.stimuli,
        n_features=args.features,
        n_neuroids=args.neuroids,
        noise_sigma=(
            BenchmarkGenerator.sigma_for_pearson(args.rho) if args.rho is not None else args.noise
        ),
        seed=args.seed,
    )
    bench = gen_benchmark(gen, region=args.region, ceiling=args.ceiling)
    _write_matrix_csv(args.activations, bench.data.stimulus_ids, bench.data.activations, "f")
    _write_matrix_csv(args.recordings, bench.data.stimulus_ids, bench.data.recordings, "n")
    _write_json(
        args.output,
        {
            "theoretical_r": bench.theoretical_r,
            "n_stimuli": args.stimuli,
            "n_features": args.features,
            "n_neuroids": args.neuroids,
            "seed": args.seed,
        },
    )
    print(f"simulated benchmark (theoretical r={bench.theoretical_r:.4f})")
    return 0


def _write_matrix_csv(path, ids, mat, prefix):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stim_id"] + [f"{prefix}{j}" for j in range(mat.shape[1])])
        for sid, row in zip(ids, mat):
            writer.writerow([sid] + [_r(v) for v in row])
    _write_sidecar_log(path)


def _write_runs_from_points(args, pts: np.ndarray) -> None:
    """Emit a run-table CSV with every region score set to S = 1 - L."""
    if pts.shape[1] != 2:
        raise ValueError("--as-runs supports power/shifted points only")
    from .records import CSV_COLUMNS

    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i, (x, l) in enumerate(pts):
            s = 1.0 - l
            if not 0.0 <= s <= 1.0:
                raise ValueError(
                    f"point {i}: score {s:.4f} outside [0, 1]; emit --points instead"
                )
            n_params = round(x) if args.x_kind == "params" else 1_000_000
            samples = round(x) if args.x_kind == "samples" else 10_000_000
            flops = x if args.x_kind == "flops" else 6.0 * n_params * samples
            writer.writerow(
                [
                    f"sim{i}",
                    "Synthetic",
                    "synthetic",
                    "synthetic",
                    "full",
                    args.seed,
                    max(n_params, 1),
                    max(samples, 1),
                    _r(flops),
                ]
                + [_r(s)] * 5
            )


def cmd_report(args) -> int:
    rows = []
    for spec in args.fit:
        region, _, path = spec.partition("=")
        if not path:
            raise ValueError(f"--fit expects REGION=REPORT.json, got {spec!r}")
        payload = _read_report(path)
        fit = _fit_from_payload(payload)
        if isinstance(fit, JointFit):
            raise ValueError(f"{path}: region gain requires a power-law fit")
        rows.append(
            {
                "region": region,
                "E": fit.E,
                "A": fit.A,
                "alpha": fit.alpha,
                "gain": region_gain(fit),
                "degenerate": fit.degenerate,
            }
        )
    if not rows:
        raise ValueError("no fit reports given")
    rows.sort(key=lambda r: -r["gain"])
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["region", "E", "A", "alpha", "gain", "degenerate"])
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for k in ("E", "A", "alpha", "gain"):
                out[k] = _r(out[k])
            writer.writerow(out)
    _write_sidecar_log(args.output)
    print("gain ordering: " + " > ".join(r["region"] for r in rows))
    return 0


# ---------------------------------------------------------------- parser


def _add_rescale_flags(p):
    p.add_argument("--c-scale", type=float, default=1e13, help="flops rescale divisor")
    p.add_argument("--n-scale", type=float, default=1e5, help="params rescale divisor")
    p.add_argument("--d-scale", type=float, default=1e4, help="samples rescale divisor")
    p.add_argument("--no-rescale", action="store_true", help="fit in raw units")


def _add_fit_input_flags(p):
    p.add_argument("--input", help="run-table file (CSV/JSON)")
    p.add_argument("--points", help="bare points CSV (x,l or n,d,l) instead of a run table")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--average-seeds", action="store_true")
    p.add_argument("--filter", choices=["none", "convnext_vit_restricted"], default=None)
    p.add_argument("--target", choices=TARGETS, default="mean")
    p.add_argument(
        "--x",
        choices=["flops", "params", "samples"],
        required=True,
        help="which resource the curve is fit against",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scalefit", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, validate, and re-export a run table")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", required=True)
    p.add_argument("--output-format", choices=["csv", "json"], default="csv")
    p.add_argument("--average-seeds", action="store_true")
    p.add_argument("--filter", choices=["none", "convnext_vit_restricted"], default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit a misalignment curve")
    _add_fit_input_flags(p)
    p.add_argument("--form", choices=["power", "shifted", "joint"], required=True)
    p.add_argument("--freeze-lambda", action="store_true")
    _add_rescale_flags(p)
    p.add_argument("--output", required=True, help="fit report JSON")
    p.add_argument("--emit-curve", help="write (x,L,S) curve samples CSV")
    p.add_argument("--svg", help="write a minimal SVG line chart")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("allocate", help="compute-optimal (N*, D*) for a budget")
    p.add_argument("--fit-report", required=True, help="joint fit report JSON")
    p.add_argument("--compute-model", help="compute-model report JSON with m, n")
    p.add_argument("--input", help="run table to fit the compute model from")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--budget", type=float, required=True, help="compute budget in raw FLOPs")
    p.add_argument("--c-scale", type=float, default=1e13)
    p.add_argument("--verify", action="store_true", help="run the brute-force oracle")
    p.add_argument("--grid-points", type=int, default=10_000)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("bootstrap", help="bootstrap CIs for a curve fit")
    _add_fit_input_flags(p)
    p.add_argument("--form", choices=["power", "shifted", "joint"], required=True)
    _add_rescale_flags(p)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--ci", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--curve-points", type=int, default=25, help="curve CI grid size (0 disables)")
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--output", required=True)
    p.add_argument("--svg", help="SVG chart with CI band")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("score", help="neural or behavioral alignment score")
    p.add_argument("--kind", choices=["neural", "behavior"], required=True)
    p.add_argument("--activations", help="neural: stimulus x feature CSV")
    p.add_argument("--recordings", help="neural: stimulus x neuroid CSV")
    p.add_argument("--region", choices=["V1", "V2", "V4", "IT"], default="IT")
    p.add_argument("--train", help="behavior: training CSV (stim_id,label,f0,...)")
    p.add_argument("--test", help="behavior: test CSV (stim_id,label,f0,...)")
    p.add_argument("--pattern", help="behavior: primate pattern CSV")
    p.add_argument("--ceiling", type=float, required=True)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--aggregate", choices=["median", "mean"], default="median")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--output", required=True)
    p.add_argument("--append-to", help="run-table CSV to merge the ceiled score into")
    p.add_argument("--run-id", help="row to update with --append-to")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="emit synthetic curve points or benchmark matrices")
    p.add_argument("--kind", choices=["curve", "benchmark"], required=True)
    p.add_argument("--form", choices=["power", "shifted", "joint"], default="power")
    p.add_argument("--E", type=float, default=0.52)
    p.add_argument("--A", type=float, default=0.55)
    p.add_argument("--alpha", type=float, default=0.16)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.3)
    p.add_argument("--x-min", type=float, default=1e-3)
    p.add_argument("--x-max", type=float, default=1e3)
    p.add_argument("--n-points", type=int, default=60)
    p.add_argument("--n-min", type=float, default=1.0)
    p.add_argument("--n-max", type=float, default=1e3)
    p.add_argument("--d-min", type=float, default=1.0)
    p.add_argument("--d-max", type=float, default=1e3)
    p.add_argument("--grid-side", type=int, default=10)
    p.add_argument("--sigma", type=float, default=0.0, help="log-space noise sd")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--as-runs", action="store_true", help="emit a run-table CSV")
    p.add_argument("--x-kind", choices=["flops", "params", "samples"], default="flops")
    p.add_argument("--stimuli", type=int, default=100)
    p.add_argument("--features", type=int, default=10)
    p.add_argument("--neuroids", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=None, help="target theoretical Pearson r")
    p.add_argument("--region", choices=["V1", "V2", "V4", "IT"], default="IT")
    p.add_argument("--ceiling", type=float, default=1.0)
    p.add_argument("--activations", default="activations.csv")
    p.add_argument("--recordings", default="recordings.csv")
    p.add_argument("--output", required=True, help="points CSV (curve) or meta JSON (benchmark)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="region-gain summary table from fit reports")
    p.add_argument("--fit", action="append", default=[], metavar="REGION=REPORT.json")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, IngestError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
