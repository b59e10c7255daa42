"""Command-line front end.

Subcommands: solve, frontier, apl, backtest, oracle-check.  Every run reads
prices (a CSV/OR-library file or a seeded synthetic fixture), estimates the
market model, runs the requested solver, and writes plain-text artifacts
plus one manifest.json holding every effective parameter, so a run can be
reproduced from the manifest alone.  Outputs carry no timestamps and all
floats are rendered with repr, making reruns byte-identical.

Exit codes: 0 success, 1 oracle-check mismatch, 2 configuration or input
error, 3 infeasible, 4 tolerance-limited.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .backtest import compare, expost_path, index_path, rho_presets
from .frontier_analytics import (
    SOLVED,
    apl,
    apl_report,
    efficient_points,
    frontier_csv,
    lower_envelope,
    sweep,
)
from .lam_solver import DEFAULT_BEAM, LimitedAssetSpec, lam_solve
from .market_data import (
    ParseError,
    clean_series,
    estimate,
    load_prices,
    log_returns,
    split,
    synthetic_prices,
)
from .milp_solver import (
    APPROX_GAP_TOL,
    BnbConfig,
    branch_and_bound,
    build_lacvar,
    build_lamad,
    solve_linear_risk,
)
from .mv_core import return_range, solve_mv
from .oracle import enumerate_exact

CONSTRAINED = ("lam", "lamad", "lacvar")
UNCONSTRAINED = ("mv", "mad", "cvar")
UNCONSTRAINED_OF = {"lam": "mv", "lamad": "mad", "lacvar": "cvar"}
NEEDS_EPSILON = ("cvar", "lacvar")
DEFAULT_EPSILON = 0.05
ORACLE_REL_TOL = 1e-7


@dataclass
class RunConfig:
    data: str | None = None
    format: str = "csv"
    boundary: str | None = None
    model: str | None = None
    k: int | None = None
    lower: float = 0.01
    upper: float = 1.0
    lower_file: str | None = None
    upper_file: str | None = None
    epsilon: float | None = None
    grid: int | None = None
    beam_width: str | None = None
    penalty: float | None = None
    mode: str = "opt"
    out: str = "."
    seed: int = 7
    workers: int = 1
    rho: float | None = None
    dataset: str | None = None
    preassigned: str = ""
    svg: bool = False


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes"):
        return True
    if low in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_FIELD_PARSERS = {
    "data": str,
    "format": str,
    "boundary": str,
    "model": str,
    "k": int,
    "lower": float,
    "upper": float,
    "lower_file": str,
    "upper_file": str,
    "epsilon": float,
    "grid": int,
    "beam_width": str,
    "penalty": float,
    "mode": str,
    "out": str,
    "seed": int,
    "workers": int,
    "rho": float,
    "dataset": str,
    "preassigned": str,
    "svg": _parse_bool,
}


def parse_config_file(path: str):
    """key=value lines; blank lines and # comments ignored."""
    entries = {}
    errors = []
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                errors.append(f"{path}:{ln}: expected key=value, got {line!r}")
                continue
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in _FIELD_PARSERS:
                errors.append(f"{path}:{ln}: unknown key {key!r}")
                continue
            try:
                entries[key] = _FIELD_PARSERS[key](value)
            except ValueError as e:
                errors.append(f"{path}:{ln}: bad value for {key}: {e}")
    return entries, errors


def resolve_config(args: argparse.Namespace):
    """Merge flags over config-file entries over defaults; collect every
    validation failure instead of stopping at the first."""
    errors = []
    file_entries = {}
    if args.config is not None:
        if os.path.isfile(args.config):
            file_entries, errors = parse_config_file(args.config)
        else:
            errors.append(f"config file not found: {args.config}")
    cfg = RunConfig()
    for name in _FIELD_PARSERS:
        flag = getattr(args, name, None)
        if flag is not None:
            setattr(cfg, name, flag)
        elif name in file_entries:
            setattr(cfg, name, file_entries[name])
    command = args.command

    if cfg.data is None:
        errors.append("--data is required (file path or synthetic:NxT)")
    elif not cfg.data.startswith("synthetic:") and not os.path.isfile(cfg.data):
        errors.append(f"data file not found: {cfg.data}")
    if cfg.format not in ("csv", "orlibrary"):
        errors.append(f"--format must be csv or orlibrary, got {cfg.format!r}")
    if cfg.model is None:
        errors.append("--model is required")
    elif cfg.model not in CONSTRAINED + UNCONSTRAINED:
        errors.append(
            f"unknown model {cfg.model!r}; choose from "
            f"{', '.join(CONSTRAINED + UNCONSTRAINED)}"
        )
    if cfg.model in CONSTRAINED and cfg.k is None:
        errors.append(f"--k is required for model {cfg.model}")
    if cfg.k is not None and cfg.k < 1:
        errors.append("--k must be at least 1")
    if cfg.mode not in ("opt", "appr"):
        errors.append(f"--mode must be opt or appr, got {cfg.mode!r}")
    if cfg.grid is not None and cfg.grid < 2:
        errors.append("--grid must be at least 2")
    if cfg.epsilon is not None and not 0.0 < cfg.epsilon <= 1.0:
        errors.append("--epsilon must lie in (0, 1]")
    if cfg.workers < 1:
        errors.append("--workers must be at least 1")
    if cfg.beam_width is not None and cfg.beam_width != "none":
        try:
            if int(cfg.beam_width) < 1:
                errors.append("--beam-width must be positive or 'none'")
        except ValueError:
            errors.append(f"--beam-width must be an integer or 'none', got {cfg.beam_width!r}")
    for label, path in (("--lower-file", cfg.lower_file), ("--upper-file", cfg.upper_file)):
        if path is not None and not os.path.isfile(path):
            errors.append(f"{label} not found: {path}")
    if cfg.preassigned:
        try:
            _parse_preassigned(cfg.preassigned)
        except ValueError as e:
            errors.append(str(e))
    if command in ("solve", "oracle-check") and cfg.rho is None:
        errors.append(f"--rho is required for {command}")
    if command == "backtest" and cfg.boundary is None:
        errors.append("--boundary is required for backtest")
    if command == "oracle-check" and cfg.model in UNCONSTRAINED:
        errors.append("oracle-check works on the constrained models (lam, lamad, lacvar)")
    if command == "apl" and cfg.model in UNCONSTRAINED:
        errors.append("apl compares a constrained model against its unconstrained base")
    if cfg.data is not None and cfg.data.startswith("synthetic:"):
        try:
            _parse_synthetic(cfg.data)
        except ValueError as e:
            errors.append(str(e))
    return cfg, errors


def _parse_preassigned(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(int(part))
        except ValueError:
            raise ValueError(f"--preassigned expects comma-separated indices, got {part!r}")
    return tuple(out)


def _parse_synthetic(spec: str):
    body = spec[len("synthetic:") :]
    try:
        n, _, t = body.partition("x")
        n, t = int(n), int(t)
    except ValueError:
        raise ValueError(f"synthetic source must look like synthetic:12x120, got {spec!r}")
    if n < 1 or t < 2:
        raise ValueError("synthetic source needs at least 1 asset and 2 periods")
    return n, t


def _resolved_epsilon(cfg: RunConfig) -> float:
    return DEFAULT_EPSILON if cfg.epsilon is None else cfg.epsilon


def _resolved_beam(cfg: RunConfig):
    if cfg.beam_width is not None:
        return None if cfg.beam_width == "none" else int(cfg.beam_width)
    return None if cfg.mode == "opt" else DEFAULT_BEAM


def _resolved_bnb(cfg: RunConfig) -> BnbConfig:
    return BnbConfig(abs_gap_tol=1e-6 if cfg.mode == "opt" else APPROX_GAP_TOL)


def _load_pipeline(cfg: RunConfig):
    """Prices -> cleaned -> optional in/out split; returns the pieces plus
    a manifest-ready description of the data."""
    if cfg.data.startswith("synthetic:"):
        n, t = _parse_synthetic(cfg.data)
        prices = synthetic_prices(n_assets=n, periods=t, seed=cfg.seed)
        source = {"synthetic": {"n_assets": n, "periods": t, "seed": cfg.seed}}
    else:
        with open(cfg.data, "rb") as fh:
            blob = fh.read()
        prices = load_prices(cfg.data, format=cfg.format)
        source = {"path": cfg.data, "sha256": hashlib.sha256(blob).hexdigest()}
    cleaned, report = clean_series(prices)
    if cfg.boundary is not None:
        ins, outs = split(cleaned, cfg.boundary)
    else:
        ins, outs = cleaned, None
    info = {
        "source": source,
        "format": "synthetic" if cfg.data.startswith("synthetic:") else cfg.format,
        "n_assets": len(cleaned.asset_names),
        "n_periods": cleaned.n_periods,
        "boundary": cfg.boundary,
        "dropped": [list(d) for d in report.dropped],
        "interpolated": report.interpolated,
        "extended": report.extended,
    }
    return cleaned, ins, outs, info


def _bounds_vector(scalar, path, n, label):
    if path is None:
        return scalar
    values = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line:
                values.append(float(line))
    if len(values) != n:
        raise ValueError(f"{label} lists {len(values)} bounds for {n} assets")
    return np.array(values)


def _build_spec(cfg: RunConfig, n: int) -> LimitedAssetSpec:
    lower = _bounds_vector(cfg.lower, cfg.lower_file, n, "--lower-file")
    upper = _bounds_vector(cfg.upper, cfg.upper_file, n, "--upper-file")
    return LimitedAssetSpec(
        n=n, k=cfg.k, lower=lower, upper=upper, preassigned=_parse_preassigned(cfg.preassigned)
    )


def _run_single(m, rho, spec, cfg: RunConfig):
    model = cfg.model
    if model == "mv":
        return solve_mv(m, rho)
    if model in ("mad", "cvar"):
        return solve_linear_risk(m, rho, model, epsilon=_resolved_epsilon(cfg))
    if model == "lam":
        return lam_solve(m, rho, spec, beam_width=_resolved_beam(cfg), penalty=cfg.penalty)
    if model == "lamad":
        return branch_and_bound(build_lamad(m, rho, spec), _resolved_bnb(cfg))
    return branch_and_bound(
        build_lacvar(m, rho, spec, _resolved_epsilon(cfg)), _resolved_bnb(cfg)
    )


def _effective(cfg: RunConfig) -> dict:
    eff = asdict(cfg)
    eff["epsilon"] = _resolved_epsilon(cfg) if cfg.model in NEEDS_EPSILON else cfg.epsilon
    beam = _resolved_beam(cfg)
    eff["beam_width"] = "none" if beam is None else beam
    eff["abs_gap_tol"] = _resolved_bnb(cfg).abs_gap_tol
    eff["preassigned"] = list(_parse_preassigned(cfg.preassigned))
    return eff


def _finite(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _write(outdir: str, name: str, text: str, outputs: list) -> None:
    with open(os.path.join(outdir, name), "w", encoding="utf-8") as fh:
        fh.write(text)
    outputs.append(name)


def _write_manifest(outdir, command, cfg, data_info, results, outputs) -> None:
    try:
        from importlib.metadata import version

        pkg_version = version("cardfolio")
    except Exception:
        pkg_version = "unknown"
    manifest = {
        "command": command,
        "effective_config": _effective(cfg),
        "data": data_info,
        "results": results,
        "outputs": sorted(outputs),
        "version": pkg_version,
    }
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _exit_code(statuses) -> int:
    statuses = list(statuses)
    if any(s in SOLVED for s in statuses):
        return 4 if any(s == "tolerance-limited" for s in statuses) else 0
    if any(s == "tolerance-limited" for s in statuses):
        return 4
    return 3


def _svg_chart(series, labels, width=640, height=400) -> str:
    """Minimal polyline chart; one series per label, shared y-scale."""
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
    pad = 40.0
    finite = [v for ys in series for v in ys if np.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if hi - lo < 1e-15:
        hi = lo + 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(width)}" height="{int(height)}" '
        f'viewBox="0 0 {int(width)} {int(height)}">',
        f'<rect width="{int(width)}" height="{int(height)}" fill="white"/>',
    ]
    for si, (ys, label) in enumerate(zip(series, labels)):
        pts = []
        count = len(ys)
        for j, v in enumerate(ys):
            if not np.isfinite(v):
                continue
            x = pad + (width - 2 * pad) * (j / max(1, count - 1))
            y = height - pad - (height - 2 * pad) * ((v - lo) / (hi - lo))
            pts.append(f"{x:.2f},{y:.2f}")
        color = palette[si % len(palette)]
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>'
        )
        parts.append(
            f'<text x="{pad + 4:.2f}" y="{pad + 14 * (si + 1):.2f}" fill="{color}" '
            f'font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_solve(cfg: RunConfig) -> int:
    _, ins, _, data_info = _load_pipeline(cfg)
    m = estimate(log_returns(ins))
    spec = _build_spec(cfg, m.n_assets) if cfg.model in CONSTRAINED else None
    sol = _run_single(m, cfg.rho, spec, cfg)
    outputs = []
    lines = ["asset,weight"]
    for i in sorted(sol.support):
        lines.append(f"{m.asset_names[i]},{float(sol.weights[i])!r}")
    _write(cfg.out, "solution.csv", "\n".join(lines) + "\n", outputs)
    results = {
        "status": sol.status,
        "objective": _finite(sol.objective),
        "achieved_return": _finite(sol.achieved_return),
        "gap": None if sol.gap is None else _finite(sol.gap),
        "n_support": sol.n_support,
        "rho": cfg.rho,
    }
    _write_manifest(cfg.out, "solve", cfg, data_info, results, outputs)
    return _exit_code([sol.status])


def cmd_frontier(cfg: RunConfig) -> int:
    _, ins, _, data_info = _load_pipeline(cfg)
    m = estimate(log_returns(ins))
    spec = _build_spec(cfg, m.n_assets) if cfg.model in CONSTRAINED else None
    grid = cfg.grid if cfg.grid is not None else 500
    curve = sweep(
        m,
        spec,
        cfg.model,
        grid,
        epsilon=_resolved_epsilon(cfg),
        beam_width=_resolved_beam(cfg),
        penalty=cfg.penalty,
        bnb=_resolved_bnb(cfg),
        workers=cfg.workers,
    )
    outputs = []
    statuses = [p.status for p in curve.points]
    solved_any = any(s in SOLVED for s in statuses)
    results = {
        "grid": grid,
        "statuses": {s: statuses.count(s) for s in sorted(set(statuses))},
        "k": cfg.k,
    }
    if solved_any:
        env = lower_envelope(curve)
        eff = efficient_points(curve)
        _write(cfg.out, "frontier.csv", frontier_csv(curve, m.asset_names, envelope=env), outputs)
        _write(cfg.out, "envelope.csv", frontier_csv(env, m.asset_names), outputs)
        _write(cfg.out, "efficient.csv", frontier_csv(eff, m.asset_names), outputs)
        results["efficient_points"] = len(eff)
        if cfg.svg:
            _write(
                cfg.out,
                "frontier.svg",
                _svg_chart(
                    [[p.value for p in curve.points], [p.value for p in env.points]],
                    [f"{cfg.model} frontier", "lower envelope"],
                ),
                outputs,
            )
    else:
        _write(cfg.out, "frontier.csv", frontier_csv(curve, m.asset_names, envelope=None), outputs)
    _write_manifest(cfg.out, "frontier", cfg, data_info, results, outputs)
    return _exit_code(statuses)


def cmd_apl(cfg: RunConfig) -> int:
    _, ins, _, data_info = _load_pipeline(cfg)
    m = estimate(log_returns(ins))
    spec = _build_spec(cfg, m.n_assets)
    grid = cfg.grid if cfg.grid is not None else 100
    eps = _resolved_epsilon(cfg)
    beam = _resolved_beam(cfg)
    con = sweep(
        m,
        spec,
        cfg.model,
        grid,
        epsilon=eps,
        beam_width=beam,
        penalty=cfg.penalty,
        bnb=_resolved_bnb(cfg),
        workers=cfg.workers,
    )
    unc = sweep(m, None, UNCONSTRAINED_OF[cfg.model], grid, epsilon=eps, workers=cfg.workers)
    dataset = cfg.dataset if cfg.dataset is not None else os.path.basename(cfg.data)
    statuses = [p.status for p in con.points]
    outputs = []
    results = {
        "grid": grid,
        "statuses": {s: statuses.count(s) for s in sorted(set(statuses))},
        "k": cfg.k,
    }
    if any(s in SOLVED for s in statuses):
        r1 = apl(con, unc, "APL1")
        r2 = apl(con, unc, "APL2")
        lines = [apl_report(r1, dataset, cfg.k), apl_report(r2, dataset, cfg.k)]
        _write(cfg.out, "apl.txt", "\n".join(lines) + "\n", outputs)
        results["apl1"] = {"value": r1.value, "excluded": r1.excluded}
        results["apl2"] = {"value": r2.value, "excluded": r2.excluded}
    _write_manifest(cfg.out, "apl", cfg, data_info, results, outputs)
    return _exit_code(statuses)


def cmd_backtest(cfg: RunConfig) -> int:
    _, ins, outs, data_info = _load_pipeline(cfg)
    if outs is None or outs.n_periods < 2:
        print("config error: backtest needs an out-of-sample window after --boundary", file=sys.stderr)
        return 2
    if outs.index_prices is None:
        print("config error: backtest needs an INDEX column in the price data", file=sys.stderr)
        return 2
    m = estimate(log_returns(ins))
    spec = _build_spec(cfg, m.n_assets) if cfg.model in CONSTRAINED else None
    presets = rho_presets(return_range(m))
    labels = (f"{cfg.model}-low", f"{cfg.model}-mid")
    paths = []
    statuses = []
    results = {"presets": {}}
    for rho, label in zip(presets, labels):
        sol = _run_single(m, float(rho), spec, cfg)
        statuses.append(sol.status)
        results["presets"][label] = {
            "rho": float(rho),
            "status": sol.status,
            "objective": _finite(sol.objective),
            "n_support": sol.n_support,
        }
        if sol.status in SOLVED:
            paths.append(
                expost_path(sol.weights, outs, asset_names=m.asset_names, label=label)
            )
    outputs = []
    if paths:
        rep = compare(paths, index_path(outs))
        _write(cfg.out, "paths.csv", rep.csv, outputs)
        _write(cfg.out, "summary.txt", "\n".join(rep.summary_lines()) + "\n", outputs)
        if cfg.svg:
            _write(
                cfg.out,
                "backtest.svg",
                _svg_chart(
                    [list(p.values) for p in paths] + [list(index_path(outs).values)],
                    [p.label for p in paths] + ["INDEX"],
                ),
                outputs,
            )
    _write_manifest(cfg.out, "backtest", cfg, data_info, results, outputs)
    return _exit_code(statuses)


def cmd_oracle_check(cfg: RunConfig) -> int:
    _, ins, _, data_info = _load_pipeline(cfg)
    m = estimate(log_returns(ins))
    spec = _build_spec(cfg, m.n_assets)
    eps = _resolved_epsilon(cfg)
    if cfg.model == "lam":
        sol = lam_solve(m, cfg.rho, spec, beam_width=None, penalty=cfg.penalty)
    elif cfg.model == "lamad":
        sol = branch_and_bound(build_lamad(m, cfg.rho, spec), BnbConfig(abs_gap_tol=1e-8))
    else:
        sol = branch_and_bound(
            build_lacvar(m, cfg.rho, spec, eps), BnbConfig(abs_gap_tol=1e-8)
        )
    rep = enumerate_exact(m, cfg.rho, spec, cfg.model, epsilon=eps)
    solved = sol.status in SOLVED and rep.best.status in SOLVED
    if solved:
        scale = max(1.0, abs(rep.best.objective))
        match = abs(sol.objective - rep.best.objective) <= ORACLE_REL_TOL * scale
    else:
        match = sol.status == rep.best.status
    outputs = []
    lines = [
        f"SOLVER {sol.status} {_finite(sol.objective)!r}",
        f"ORACLE {rep.best.status} {_finite(rep.best.objective)!r}",
        f"SUBSETS {rep.subsets_evaluated}",
        f"VERDICT {'match' if match else 'MISMATCH'}",
    ]
    _write(cfg.out, "oracle_check.txt", "\n".join(lines) + "\n", outputs)
    results = {
        "solver": {"status": sol.status, "objective": _finite(sol.objective)},
        "oracle": {"status": rep.best.status, "objective": _finite(rep.best.objective)},
        "match": match,
        "rho": cfg.rho,
    }
    _write_manifest(cfg.out, "oracle-check", cfg, data_info, results, outputs)
    return 0 if match else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cardfolio",
        description="Cardinality-constrained portfolio selection toolkit.",
        epilog=(
            "exit codes: 0 success, 1 oracle-check mismatch, 2 config error, "
            "3 infeasible, 4 tolerance-limited"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "solve one model at a single target return"),
        ("frontier", "sweep a return grid and write frontier CSVs"),
        ("apl", "average percentage loss of a constrained model vs its base"),
        ("backtest", "hold preset-return portfolios through out-of-sample prices"),
        ("oracle-check", "cross-check a solver against exhaustive enumeration"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", help="key=value file; flags win over file entries")
        sp.add_argument("--data", help="price file path or synthetic:NxT")
        sp.add_argument("--format", help="csv or orlibrary")
        sp.add_argument("--boundary", help="timestamp splitting in/out-of-sample")
        sp.add_argument("--model", help="mv | mad | cvar | lam | lamad | lacvar")
        sp.add_argument("--k", type=int, help="cardinality cap")
        sp.add_argument("--lower", type=float, help="scalar holding floor")
        sp.add_argument("--upper", type=float, help="scalar holding cap")
        sp.add_argument("--lower-file", help="per-asset floors, one per line")
        sp.add_argument("--upper-file", help="per-asset caps, one per line")
        sp.add_argument("--epsilon", type=float, help="tail level for cvar/lacvar")
        sp.add_argument("--grid", type=int, help="return grid size")
        sp.add_argument("--beam-width", help="integer or 'none' for unlimited")
        sp.add_argument("--penalty", type=float, help="return-penalty override")
        sp.add_argument("--mode", help="opt (exact) or appr (faster, looser)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="seed for synthetic data")
        sp.add_argument("--workers", type=int, help="parallel sweep processes")
        sp.add_argument("--rho", type=float, help="target return (solve, oracle-check)")
        sp.add_argument("--dataset", help="label used in the apl report")
        sp.add_argument("--preassigned", help="comma-separated asset indices to force in")
        sp.add_argument("--svg", action="store_const", const=True, help="also write charts")
    return parser


_COMMANDS = {
    "solve": cmd_solve,
    "frontier": cmd_frontier,
    "apl": cmd_apl,
    "backtest": cmd_backtest,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg, errors = resolve_config(args)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    os.makedirs(cfg.out, exist_ok=True)
    try:
        return _COMMANDS[args.command](cfg)
    except (ParseError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
