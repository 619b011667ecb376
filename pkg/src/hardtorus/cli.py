"""Command-line front end for reproducible experiments.

Usage:

    hardtorus {simulate|neutral|lyapunov|audit|degeneracy|scan}
              --config experiment.cfg [--out DIR]

Every subcommand reads one config file (grammar in config.py), writes
a canonical summary.json into the output directory, and exits 0 on
success, 2 on configuration or validation errors, 3 on numerical
failures.  simulate additionally writes events.jsonl, audit writes
series.csv.  The HARDTORUS_OUT environment variable overrides the
output directory and nothing else.  Identical configs produce byte-
identical summaries; scan points run in parallel processes but are
merged in grid order, so the output does not depend on worker count.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, parse_config, serialize_config, with_point
from .degenerate import degeneracy_report, degenerate_radius_check
from .errors import ConfigError
from .events import simulate, write_events_jsonl
from .geometry import (PhaseState, SystemParams, energy, momentum,
                       project_to_Z, sample_state, validate_params)
from .hyperbolic import (collision_rate, curvature_propagate, expansion_check,
                         hyperbolicity_series, lyapunov_spectrum,
                         q_evolution_audit, summary_dict, write_series_csv)
from .neutral import neutral_report
from .rng import make_generator
from .serialize import canonical_json
from .tangent import TangentVector

SUBCOMMANDS = ("simulate", "neutral", "lyapunov", "audit", "degeneracy",
               "scan")

OUT_ENV_VAR = "HARDTORUS_OUT"


@dataclass(frozen=True)
class RunSummary:
    """Summary of one subcommand run, serialized as summary.json."""

    subcommand: str
    config_text: str
    config_hash: str
    data: dict

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config": self.config_text,
            "config_hash": self.config_hash,
            **self.data,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict()) + "\n"


def _conservation(traj) -> dict:
    return {
        "n_events": traj.n_events,
        "t_end": traj.t_end,
        "max_energy_drift": traj.max_energy_drift,
        "max_momentum_drift": traj.max_momentum_drift,
        "min_cos_phi": traj.min_cos_phi,
        "singular": traj.singular,
        "stopped_by_count": traj.stopped_by_count,
    }


def _state_dict(state: PhaseState, params: SystemParams) -> dict:
    return {
        "q": np.asarray(state.q, dtype=float).tolist(),
        "v": np.asarray(state.v, dtype=float).tolist(),
        "energy": energy(state, params),
        "momentum": list(momentum(state, params)),
    }


def _run_simulate(config: ExperimentConfig, out_dir: Path) -> dict:
    params = config.params
    state = sample_state(config.seed, params)
    traj = simulate(state, config.t_max, params)
    write_events_jsonl(traj, out_dir / "events.jsonl")
    rate = collision_rate(traj)
    return {
        "conservation": _conservation(traj),
        "initial_state": _state_dict(state, params),
        "final_state": _state_dict(traj.final, params),
        **summary_dict(rate=rate),
    }


def _run_neutral(config: ExperimentConfig, out_dir: Path) -> dict:
    params = config.params
    state = sample_state(config.seed, params)
    traj = simulate(state, config.t_max, params)
    return {
        "conservation": _conservation(traj),
        "neutral": neutral_report(traj, params),
    }


def _run_lyapunov(config: ExperimentConfig, out_dir: Path) -> dict:
    params = config.params
    runs = []
    tops = []
    for k in range(config.ensemble):
        state = sample_state(config.seed, params, stream=k)
        spec = lyapunov_spectrum(state, config.t_max, params,
                                 reorth_interval=config.reorth_interval,
                                 seed=config.seed + k)
        runs.append(summary_dict(spectrum=spec)["lyapunov"])
        tops.append(spec.exponents[0])
    data = {"lyapunov": runs[0], "ensemble": runs}
    if len(tops) > 1:
        data["top_exponent_mean"] = float(np.mean(tops))
        data["top_exponent_std"] = float(np.std(tops, ddof=1))
    return data


def _audit_seed_vector(state: PhaseState, params: SystemParams,
                       config: ExperimentConfig) -> TangentVector:
    # dv = c0 dq puts the seed on the curvature cone boundary, so the
    # expansion check's premise Q(0) >= 0 holds by construction
    rng = make_generator(config.seed, 7)
    dq = project_to_Z(rng.standard_normal((params.n, 2)), params).reshape(-1)
    dq *= config.delta0 / np.linalg.norm(dq)
    return TangentVector(dq=dq, dv=config.c0 * dq)


def _run_audit(config: ExperimentConfig, out_dir: Path) -> dict:
    params = config.params
    state = sample_state(config.seed, params)
    traj = simulate(state, config.t_max, params)
    tau0 = _audit_seed_vector(state, params, config)
    audit = q_evolution_audit(traj, tau0)
    path = curvature_propagate(config.c0, traj)
    expansion = expansion_check(traj, tau0, config.c0)
    series = hyperbolicity_series(traj, tau0, b0=config.c0, l0=config.l0)
    write_series_csv(out_dir / "series.csv", series)
    rate = collision_rate(traj)
    data = {
        "conservation": _conservation(traj),
        "q_audit": {
            "max_flight_residual": audit.max_flight_residual,
            "max_midpoint_residual": audit.max_midpoint_residual,
            "max_jump_defect": audit.max_jump_defect,
            "min_jump": audit.min_jump,
            "min_jump_relative": audit.min_jump_relative,
            "q_monotone": audit.q_monotone,
            "n_jumps": len(audit.jumps),
        },
        **summary_dict(rate=rate, expansion=expansion, curvature=path),
    }
    return data


def _run_degeneracy(config: ExperimentConfig, out_dir: Path) -> dict:
    params = config.params
    state = sample_state(config.seed, params)
    return {
        "degeneracy": degeneracy_report(state, params, l0=config.l0,
                                        horizon=config.horizon,
                                        max_group=config.max_group),
    }


def _scan_axes(config: ExperimentConfig):
    mass_rows = config.mass_grid or (config.masses,)
    radii = config.radius_grid or (config.radius,)
    return mass_rows, radii


def _scan_point(task) -> dict:
    config, index, masses, radius = task
    row: dict = {"index": index, "masses": list(masses), "radius": radius}
    try:
        point = with_point(config, masses=masses, radius=radius)
        params = point.params
        row["status"] = validate_params(params).status
        if config.l0 is not None:
            flags = degenerate_radius_check(params, config.l0,
                                            max_group=config.max_group)
            row["radius_flags"] = flags.to_dict()
        state = sample_state(point.seed, params, stream=index)
        traj = simulate(state, point.t_max, params)
        rate = collision_rate(traj)
        row["conservation"] = _conservation(traj)
        row["collision_rate"] = summary_dict(rate=rate)["collision_rate"]
    except ValueError as exc:
        row["error"] = str(exc)
    return row


def _run_scan(config: ExperimentConfig, out_dir: Path) -> dict:
    mass_rows, radii = _scan_axes(config)
    tasks = [(config, idx, masses, radius)
             for idx, (masses, radius) in enumerate(product(mass_rows, radii))]
    if len(tasks) > 1:
        workers = min(len(tasks), os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_point, tasks))
    else:
        rows = [_scan_point(tasks[0])]
    rows.sort(key=lambda row: row["index"])
    return {
        "grid": {"mass_rows": [list(m) for m in mass_rows],
                 "radii": list(radii)},
        "rows": rows,
    }


_RUNNERS = {
    "simulate": _run_simulate,
    "neutral": _run_neutral,
    "lyapunov": _run_lyapunov,
    "audit": _run_audit,
    "degeneracy": _run_degeneracy,
    "scan": _run_scan,
}


def run(subcommand: str, config: ExperimentConfig,
        out_dir) -> RunSummary:
    """Run one subcommand, write its artifacts, return the summary."""
    if subcommand not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}; expected one "
                          f"of {', '.join(SUBCOMMANDS)}")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    config_text = serialize_config(config)
    config_hash = hashlib.sha256(config_text.encode()).hexdigest()
    data = _RUNNERS[subcommand](config, out_path)
    summary = RunSummary(subcommand=subcommand, config_text=config_text,
                         config_hash=config_hash, data=data)
    (out_path / "summary.json").write_text(summary.to_json(),
                                           encoding="utf-8")
    return summary


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardtorus",
        description="Hard-disk dynamics on the unit torus: simulation and "
                    "hyperbolicity analysis.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="path to the experiment config file")
        p.add_argument("--out", default="out",
                       help=f"output directory (overridden by "
                            f"${OUT_ENV_VAR})")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    out_dir = os.environ.get(OUT_ENV_VAR) or args.out
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
        run(args.subcommand, config, out_dir)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
