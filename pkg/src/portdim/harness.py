"""Experiment runner and command-line interface.

Wires the library into reproducible desk-scale experiments: simulate a
return panel, build co-moments, run the toy three-asset weight comparison,
run the branch-and-bound and Langevin optimizers, and report portfolio
dimensionality.  Every command reads an optional JSON config, applies CLI
flag overrides (flags beat config, config beats defaults), and writes
deterministic outputs:

* numeric CSVs carry ``#``-prefixed metadata lines (config hash, seed,
  version) ahead of the header, so a rerun of the same config and seed is
  byte-identical;
* ``*_results.json`` files are sorted-key JSON with a mandatory ``version``
  field and no timing information;
* ``run_record.json`` captures the config snapshot, wall clock, and an
  environment fingerprint (the one file a rerun is allowed to change).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bbsolve import BbConfig, solve
from .comoments import (
    CoMomentSet,
    ReturnSample,
    Weights,
    build_comoments,
    portfolio_kurtosis,
)
from .divmeasure import (
    NuMeasure,
    ReferenceAsset,
    diversification,
    dimensionality,
    reference_curve,
    toy_dr_weight,
    toy_rp_weight,
)
from .gld import GldConfig, local_descent, multistart
from .retsim import MarginTarget, MetaGaussianSpec, sample_meta_gaussian

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "config_hash",
    "write_csv",
    "read_returns_csv",
    "write_moments",
    "read_moments",
    "build_universe",
    "load_or_simulate",
    "cmd_simulate",
    "cmd_build_moments",
    "cmd_toy_example",
    "cmd_optimize_bb",
    "cmd_optimize_gld",
    "cmd_dimensionality",
    "cmd_bench",
    "main",
]

_SUPPORT_TOL = 1e-6


@dataclass(frozen=True)
class ExperimentConfig:
    """Merged settings for one run: universe, sample, solvers, output."""

    experiment: str = "adhoc"
    n_assets: int = 3
    mean: float = 0.0
    variance: float = 1.0
    skewness: float = 0.0
    kurtosis: float = 6.0
    rho: float = -0.2
    margins: tuple[MarginTarget, ...] | None = None
    correlation_file: str | None = None
    t_obs: int = 100_000
    seed: int = 0
    returns_file: str | None = None
    output_dir: str = "runs"
    bb: BbConfig = field(default_factory=BbConfig)
    gld: GldConfig = field(default_factory=GldConfig)

    def __post_init__(self) -> None:
        if self.n_assets < 1:
            raise ValueError(f"n_assets must be >= 1, got {self.n_assets}")
        if self.t_obs < 2:
            raise ValueError(f"t_obs must be >= 2, got {self.t_obs}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"homogeneous rho must lie in (-1, 1), got {self.rho}")
        if self.margins is not None and len(self.margins) != self.n_assets:
            raise ValueError(f"{len(self.margins)} margins given for {self.n_assets} assets")
        for name in ("correlation_file", "returns_file"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_file():
                raise FileNotFoundError(f"{name} does not exist: {value}")

    def margin_targets(self) -> tuple[MarginTarget, ...]:
        if self.margins is not None:
            return self.margins
        target = MarginTarget(
            mean=self.mean,
            variance=self.variance,
            skewness=self.skewness,
            kurtosis=self.kurtosis,
        )
        return (target,) * self.n_assets

    def correlation(self) -> np.ndarray:
        if self.correlation_file is not None:
            corr = np.loadtxt(self.correlation_file, delimiter=",", comments="#", ndmin=2)
            if corr.shape != (self.n_assets, self.n_assets):
                raise ValueError(
                    f"correlation file has shape {corr.shape}, expected "
                    f"({self.n_assets}, {self.n_assets})"
                )
            return corr
        corr = np.full((self.n_assets, self.n_assets), self.rho)
        np.fill_diagonal(corr, 1.0)
        return corr

    def snapshot(self) -> dict:
        """A plain-JSON view of the config used for hashing and records."""
        raw = dataclasses.asdict(self)
        if self.margins is not None:
            raw["margins"] = [dataclasses.asdict(m) for m in self.margins]
        return _jsonable(raw)


@dataclass(frozen=True)
class RunRecord:
    """What happened: config snapshot, version, timing, environment."""

    command: str
    config: dict
    config_hash: str
    version: str
    wall_clock_seconds: float
    environment: dict

    @staticmethod
    def capture(command: str, cfg: ExperimentConfig, wall_clock_seconds: float) -> "RunRecord":
        snap = cfg.snapshot()
        return RunRecord(
            command=command,
            config=snap,
            config_hash=config_hash(snap),
            version=__version__,
            wall_clock_seconds=wall_clock_seconds,
            environment={
                "python": platform.python_version(),
                "numpy": np.__version__,
                "platform": platform.platform(),
            },
        )

    def write(self, directory: Path) -> Path:
        path = directory / "run_record.json"
        path.write_text(json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n")
        return path


# ---------------------------------------------------------------------------
# serialization helpers


def _jsonable(value):
    """Recursively convert numpy containers/scalars to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)  # JSON has no inf/nan; keep them readable
    return value


def config_hash(snapshot: dict) -> str:
    """First 12 hex digits of the sha-256 of the canonical config JSON."""
    canonical = json.dumps(_jsonable(snapshot), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | Path, header: list[str], rows, metadata: dict) -> Path:
    """CSV with ``# key: value`` metadata lines, then header, then rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key}: {value}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(cell) for cell in row) + "\n")
    return path


def _write_results(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")
    return path


def read_returns_csv(path: str | Path) -> ReturnSample:
    """Read a returns CSV written by ``cmd_simulate`` (or hand-made in the
    same shape): '#' comment lines, one header row of asset names, then one
    observation per row."""
    names: tuple[str, ...] = ()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            names = tuple(part.strip() for part in line.rstrip("\n").split(","))
            break
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    return ReturnSample(values, asset_names=names)


def write_moments(path: str | Path, c: CoMomentSet, names, metadata: dict) -> Path:
    payload = dict(metadata)
    payload.update(
        {
            "asset_names": list(names),
            "n_assets": c.n_assets,
            "n_obs": c.n_obs,
            "mean": c.mean,
            "m2": c.m2,
            "m3_unique": c.m3_unique,
            "m4_unique": c.m4_unique,
        }
    )
    return _write_results(path, payload)


def read_moments(path: str | Path) -> CoMomentSet:
    data = json.loads(Path(path).read_text())
    return CoMomentSet(
        mean=np.asarray(data["mean"], dtype=float),
        m2=np.asarray(data["m2"], dtype=float),
        m3_unique=np.asarray(data["m3_unique"], dtype=float),
        m4_unique=np.asarray(data["m4_unique"], dtype=float),
        n_assets=int(data["n_assets"]),
        n_obs=int(data["n_obs"]),
    )


# ---------------------------------------------------------------------------
# universe construction


def build_universe(cfg: ExperimentConfig) -> MetaGaussianSpec:
    return MetaGaussianSpec.from_targets(cfg.margin_targets(), cfg.correlation())


def load_or_simulate(cfg: ExperimentConfig) -> ReturnSample:
    """The returns file when configured, otherwise a fresh simulation."""
    if cfg.returns_file is not None:
        return read_returns_csv(cfg.returns_file)
    return sample_meta_gaussian(build_universe(cfg), cfg.t_obs, seed=cfg.seed)


def _out_dir(cfg: ExperimentConfig) -> Path:
    directory = Path(cfg.output_dir) / cfg.experiment
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _metadata(cfg: ExperimentConfig) -> dict:
    return {
        "config_hash": config_hash(cfg.snapshot()),
        "seed": cfg.seed,
        "version": __version__,
    }


def _support(w: np.ndarray) -> list[int]:
    return [int(i) for i in np.nonzero(w > _SUPPORT_TOL)[0]]


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: ExperimentConfig) -> Path:
    """Simulate a return panel and write it as CSV."""
    start = time.perf_counter()
    sample = sample_meta_gaussian(build_universe(cfg), cfg.t_obs, seed=cfg.seed)
    directory = _out_dir(cfg)
    path = write_csv(
        directory / "returns.csv",
        list(sample.asset_names),
        sample.values,
        _metadata(cfg),
    )
    RunRecord.capture("simulate", cfg, time.perf_counter() - start).write(directory)
    return path


def cmd_build_moments(cfg: ExperimentConfig) -> Path:
    """Estimate co-moments from a returns panel and write them as JSON."""
    start = time.perf_counter()
    sample = load_or_simulate(cfg)
    c = build_comoments(sample)
    directory = _out_dir(cfg)
    meta = _metadata(cfg)
    meta["command"] = "build-moments"
    path = write_moments(directory / "moments.json", c, sample.asset_names, meta)
    RunRecord.capture("build-moments", cfg, time.perf_counter() - start).write(directory)
    return path


def toy_universe(cfg: ExperimentConfig, rho: float) -> MetaGaussianSpec:
    """Three assets, unit variances; assets one and two correlated at rho,
    asset three independent."""
    corr = np.array([[1.0, rho, 0.0], [rho, 1.0, 0.0], [0.0, 0.0, 1.0]])
    target = MarginTarget(
        mean=cfg.mean, variance=cfg.variance, skewness=cfg.skewness, kurtosis=cfg.kurtosis
    )
    return MetaGaussianSpec.from_targets((target,) * 3, corr)


def cmd_toy_example(cfg: ExperimentConfig, rho_grid) -> Path:
    """Weight of asset three versus rho: minimum kurtosis (branch and
    bound), closed-form risk parity, closed-form diversification ratio."""
    start = time.perf_counter()
    rows = []
    for rho in rho_grid:
        spec = toy_universe(cfg, rho)
        sample = sample_meta_gaussian(spec, cfg.t_obs, seed=cfg.seed)
        c = build_comoments(sample)
        result = solve(c, cfg.bb)
        w3 = float(np.asarray(result.incumbent)[2])
        rows.append(
            (rho, w3, toy_rp_weight(rho), toy_dr_weight(rho), result.kurtosis, result.status)
        )
    directory = _out_dir(cfg)
    path = write_csv(
        directory / "toy_example.csv",
        ["rho", "w3_min_kurtosis", "w3_risk_parity", "w3_diversification_ratio", "kurtosis", "status"],
        rows,
        _metadata(cfg),
    )
    RunRecord.capture("toy-example", cfg, time.perf_counter() - start).write(directory)
    return path


def cmd_optimize_bb(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Branch-and-bound run: results JSON plus a bound-evolution trace CSV."""
    start = time.perf_counter()
    sample = load_or_simulate(cfg)
    c = build_comoments(sample)
    result = solve(c, cfg.bb)
    directory = _out_dir(cfg)
    meta = _metadata(cfg)
    weights = np.asarray(result.incumbent)
    results_path = _write_results(
        directory / "bb_results.json",
        {
            **meta,
            "command": "optimize-bb",
            "bb": dataclasses.asdict(cfg.bb),
            "status": result.status,
            "iterations": result.iterations,
            "cells_created": result.cells_created,
            "cells_fathomed": result.cells_fathomed,
            "alpha": result.alpha,
            "h_value": result.incumbent_value,
            "kurtosis": result.kurtosis,
            "weights": weights,
            "support": _support(weights),
        },
    )
    n_rows = len(result.lower_bounds)
    trace_path = write_csv(
        directory / "bb_trace.csv",
        ["iteration", "lb", "ub", "fraction_deleted", "kurtosis_lb", "kurtosis_ub"],
        zip(
            range(n_rows),
            result.lower_bounds,
            result.upper_bounds,
            result.fraction_deleted,
            result.kurtosis_lower_bounds,
            result.kurtosis_upper_bounds,
        ),
        meta,
    )
    RunRecord.capture("optimize-bb", cfg, time.perf_counter() - start).write(directory)
    return results_path, trace_path


def cmd_optimize_gld(cfg: ExperimentConfig, record_paths: tuple[int, ...] = ()) -> tuple[Path, Path]:
    """Langevin multistart run: results JSON plus final-iterate histograms."""
    start = time.perf_counter()
    sample = load_or_simulate(cfg)
    c = build_comoments(sample)
    result = multistart(c, cfg.gld, record_paths=record_paths)
    directory = _out_dir(cfg)
    meta = _metadata(cfg)
    weights = np.asarray(result.best_weights)
    results_path = _write_results(
        directory / "gld_results.json",
        {
            **meta,
            "command": "optimize-gld",
            "gld": dataclasses.asdict(cfg.gld),
            "kurtosis": result.best_kurtosis,
            "pre_polish_kurtosis": result.pre_polish_kurtosis,
            "polish_applied": result.polish_applied,
            "best_path": result.best_path,
            "evaluations": result.evaluations,
            "weights": weights,
            "support": _support(weights),
            "support_size": len(_support(weights)),
        },
    )
    hist_rows = []
    summary = result.final_summary
    edges = summary.bin_edges
    for asset in range(c.n_assets):
        counts = summary.counts[asset]
        for b in range(len(counts)):
            hist_rows.append((asset, edges[b], edges[b + 1], int(counts[b])))
    hist_path = write_csv(
        directory / "gld_histogram.csv",
        ["asset", "bin_left", "bin_right", "count"],
        hist_rows,
        meta,
    )
    if record_paths:
        path_rows = []
        for path_id in sorted(result.recorded_paths):
            trace = result.recorded_paths[path_id]
            for it in range(trace.shape[0]):
                path_rows.append((path_id, it, *trace[it]))
        write_csv(
            directory / "gld_paths.csv",
            ["path", "iteration", *(f"w{i + 1}" for i in range(c.n_assets))],
            path_rows,
            meta,
        )
    RunRecord.capture("optimize-gld", cfg, time.perf_counter() - start).write(directory)
    return results_path, hist_path


def cmd_dimensionality(
    cfg: ExperimentConfig,
    weights: np.ndarray,
    reference: ReferenceAsset,
    measure: NuMeasure,
    moments_file: str | None = None,
) -> Path:
    """Evaluate the diversification measure and dimensionality of a portfolio."""
    start = time.perf_counter()
    if moments_file is not None:
        c = read_moments(moments_file)
    else:
        c = build_comoments(load_or_simulate(cfg))
    w = Weights(weights)
    div = diversification(w, c, reference, measure)
    dim = dimensionality(w, c, reference, measure)
    k_grid = list(range(1, 65))
    directory = _out_dir(cfg)
    path = _write_results(
        directory / "dimensionality.json",
        {
            **_metadata(cfg),
            "command": "dimensionality",
            "measure": measure.value,
            "weights": np.asarray(w),
            "nu_portfolio": div.nu_portfolio,
            "nu_reference": div.nu_reference,
            "diversification": div.value,
            "dimensionality": dim.value,
            "near_gaussian": div.near_gaussian,
            "reference_curve": {
                "k": k_grid,
                "nu": [reference_curve(k, reference, measure) for k in k_grid],
            },
        },
    )
    RunRecord.capture("dimensionality", cfg, time.perf_counter() - start).write(directory)
    return path


def cmd_bench(cfg: ExperimentConfig) -> dict:
    """Coarse timings of the expensive kernels at the configured sizes."""
    timings: dict[str, float] = {}
    spec = build_universe(cfg)
    start = time.perf_counter()
    sample = sample_meta_gaussian(spec, cfg.t_obs, seed=cfg.seed)
    timings["simulate_seconds"] = time.perf_counter() - start
    start = time.perf_counter()
    c = build_comoments(sample)
    timings["build_moments_seconds"] = time.perf_counter() - start
    w0 = np.full(cfg.n_assets, 1.0 / cfg.n_assets)
    start = time.perf_counter()
    portfolio_kurtosis(w0, c)
    timings["kurtosis_eval_seconds"] = time.perf_counter() - start
    start = time.perf_counter()
    local_descent(c, w0)
    timings["local_descent_seconds"] = time.perf_counter() - start
    return timings


# ---------------------------------------------------------------------------
# CLI plumbing


def _merge(flag, config_value, default):
    if flag is not None:
        return flag
    if config_value is not None:
        return config_value
    return default


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    doc: dict = {}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())

    def pick(name: str, default):
        return _merge(getattr(args, name, None), doc.get(name), default)

    margins = None
    if doc.get("margins") is not None:
        margins = tuple(MarginTarget(**m) for m in doc["margins"])

    bb_doc = dict(doc.get("bb", {}))
    for flag, key in [
        ("rho_tol", "rho_tol"),
        ("bound_mode", "bound_mode"),
        ("n_c", "n_c"),
        ("max_iterations", "max_iterations"),
        ("max_seconds", "max_seconds"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            bb_doc[key] = value
    gld_doc = dict(doc.get("gld", {}))
    for flag, key in [
        ("lam", "lam"),
        ("noise_scale", "c"),
        ("n_sim", "n_sim"),
        ("n_iter", "n_iter"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            gld_doc[key] = value
    seed = pick("seed", 0)
    gld_doc.setdefault("seed", seed)
    if getattr(args, "no_polish", False):
        gld_doc["polish"] = False

    defaults = ExperimentConfig()
    return ExperimentConfig(
        experiment=pick("experiment", defaults.experiment),
        n_assets=pick("n_assets", defaults.n_assets),
        mean=pick("mean", defaults.mean),
        variance=pick("variance", defaults.variance),
        skewness=pick("skewness", defaults.skewness),
        kurtosis=pick("kurtosis", defaults.kurtosis),
        rho=pick("rho", defaults.rho),
        margins=margins,
        correlation_file=pick("correlation_file", None),
        t_obs=pick("t_obs", defaults.t_obs),
        seed=seed,
        returns_file=pick("returns_file", None),
        output_dir=pick("output_dir", defaults.output_dir),
        bb=BbConfig(**bb_doc),
        gld=GldConfig(**gld_doc),
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; CLI flags override its fields")
    parser.add_argument("--experiment", help="experiment id (output subdirectory name)")
    parser.add_argument("--output-dir", dest="output_dir", help="root output directory")
    parser.add_argument("--seed", type=int, help="top-level seed for all substreams")


def _add_universe(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-assets", dest="n_assets", type=int, help="universe size")
    parser.add_argument("--mean", type=float, help="margin mean")
    parser.add_argument("--variance", type=float, help="margin variance")
    parser.add_argument("--skewness", type=float, help="margin skewness")
    parser.add_argument("--kurtosis", type=float, help="margin kurtosis (> 3)")
    parser.add_argument("--rho", type=float, help="homogeneous correlation")
    parser.add_argument(
        "--correlation-file", dest="correlation_file", help="CSV with an explicit target correlation matrix"
    )
    parser.add_argument("--t-obs", dest="t_obs", type=int, help="number of simulated observations")
    parser.add_argument("--returns", dest="returns_file", help="existing returns CSV instead of simulation")


def _add_bb(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rho-tol", dest="rho_tol", type=float, help="relative optimality tolerance")
    parser.add_argument("--bound-mode", dest="bound_mode", choices=["lp1", "lp2", "milp"])
    parser.add_argument("--n-c", dest="n_c", type=int, help="tangent cuts per asset (lp2)")
    parser.add_argument("--max-iterations", dest="max_iterations", type=int)
    parser.add_argument("--max-seconds", dest="max_seconds", type=float)


def _add_gld(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lam", type=float, help="Langevin step size")
    parser.add_argument("--noise-scale", dest="noise_scale", type=float, help="noise scale c")
    parser.add_argument("--n-sim", dest="n_sim", type=int, help="number of Langevin paths")
    parser.add_argument("--n-iter", dest="n_iter", type=int, help="iterations per path")
    parser.add_argument("--no-polish", dest="no_polish", action="store_true", help="skip the local polish step")
    parser.add_argument(
        "--record-paths",
        dest="record_paths",
        default="",
        help="comma-separated path indices whose full trajectories are written",
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="portdim",
        description="Portfolio dimensionality: simulation, co-moments, and global kurtosis minimization.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a return panel to CSV")
    _add_common(p)
    _add_universe(p)

    p = sub.add_parser("build-moments", help="estimate co-moments from returns")
    _add_common(p)
    _add_universe(p)

    p = sub.add_parser("toy-example", help="three-asset weight comparison over a rho grid")
    _add_common(p)
    _add_universe(p)
    _add_bb(p)
    p.add_argument("--rho-grid", dest="rho_grid", default="-0.7,-0.5,-0.3,0.0,0.5,0.95,0.99",
                   help="comma-separated correlation grid")

    p = sub.add_parser("optimize-bb", help="global kurtosis minimization by branch and bound")
    _add_common(p)
    _add_universe(p)
    _add_bb(p)

    p = sub.add_parser("optimize-gld", help="global kurtosis minimization by Langevin multistart")
    _add_common(p)
    _add_universe(p)
    _add_gld(p)

    p = sub.add_parser("dimensionality", help="diversification and dimensionality of a portfolio")
    _add_common(p)
    _add_universe(p)
    p.add_argument("--weights-file", dest="weights_file", required=True,
                   help='JSON file with a "weights" array')
    p.add_argument("--moments", dest="moments_file", help="moments JSON from build-moments")
    p.add_argument("--measure", choices=[m.value for m in NuMeasure], default=NuMeasure.EXCESS_KURTOSIS.value)
    p.add_argument("--ref-kurtosis", dest="ref_kurtosis", type=float,
                   help="reference-asset kurtosis (> 3); defaults to the universe margin")
    p.add_argument("--ref-skewness", dest="ref_skewness", type=float, default=None)

    p = sub.add_parser("bench", help="coarse kernel timings at the configured sizes")
    _add_common(p)
    _add_universe(p)

    args = parser.parse_args(argv)
    cfg = _build_config(args)

    if args.command == "simulate":
        path = cmd_simulate(cfg)
        print(path)
    elif args.command == "build-moments":
        path = cmd_build_moments(cfg)
        print(path)
    elif args.command == "toy-example":
        grid = [float(tok) for tok in args.rho_grid.split(",") if tok.strip()]
        path = cmd_toy_example(cfg, grid)
        print(path)
    elif args.command == "optimize-bb":
        results_path, trace_path = cmd_optimize_bb(cfg)
        print(results_path)
        print(trace_path)
    elif args.command == "optimize-gld":
        record = tuple(int(tok) for tok in args.record_paths.split(",") if tok.strip())
        results_path, hist_path = cmd_optimize_gld(cfg, record_paths=record)
        print(results_path)
        print(hist_path)
    elif args.command == "dimensionality":
        weights = np.asarray(json.loads(Path(args.weights_file).read_text())["weights"], dtype=float)
        measure = NuMeasure(args.measure)
        ref_kurt = args.ref_kurtosis if args.ref_kurtosis is not None else cfg.kurtosis
        ref_skew = args.ref_skewness if args.ref_skewness is not None else cfg.skewness
        reference = ReferenceAsset.from_target(
            MarginTarget(mean=cfg.mean, variance=cfg.variance, skewness=ref_skew, kurtosis=ref_kurt),
            measure,
        )
        path = cmd_dimensionality(cfg, weights, reference, measure, moments_file=args.moments_file)
        print(path)
    elif args.command == "bench":
        print(json.dumps(_jsonable(cmd_bench(cfg)), sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
