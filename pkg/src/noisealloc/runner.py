"""Run orchestration and persistence.

Artifacts per run directory:

* rounds.csv: one row per (round, bin) with the exact header
  round,bin,sigma,lambda,pi,risk,risk_stderr,gap,psnr,psnr_gap.
* summary.json: config echo plus run summary; machine-readable.
* report.txt, gap_curve.csv, lambda_trajectory.csv: emitted from the stored
  record, so the report subcommand can regenerate them without re-solving.
* oracle.json: closed-form scan results (oracle runs only).

Floats are serialized with repr, so a parsed record equals the original
field for field and reruns with an identical config and seed produce
byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Tuple

from .config import ExperimentConfig
from .core import BaselineRiskTable, psnr_from_mse
from .empirical import SgdConfig, SgdLinearTrainer, derive_seed
from .exceptions import ConfigError, InfeasibleProblemError
from .linear import (
    ClosedFormLinearTrainer,
    baseline_table,
    grid_search_constrained,
    grid_search_minimax,
)
from .report import psnr_gap_db, render_distribution_table, render_psnr_table
from .solvers import (
    SolveResult,
    compute_baseline,
    compute_log_baseline,
    solve_constrained,
    solve_minimax_gap,
)

COLUMNS = ["round", "bin", "sigma", "lambda", "pi", "risk", "risk_stderr", "gap", "psnr", "psnr_gap"]

ROUNDS_FILE = "rounds.csv"
SUMMARY_FILE = "summary.json"
REPORT_FILE = "report.txt"
GAP_CURVE_FILE = "gap_curve.csv"
LAMBDA_FILE = "lambda_trajectory.csv"
ORACLE_FILE = "oracle.json"

# Seed stream labels so the solve trainer and the baseline trainer never
# share noise, whatever order they run in.
_STREAM_SOLVE = 1
_STREAM_BASELINE = 2


@dataclass
class RunRecord:
    """Persisted form of one solver run; all fields are JSON-able and the
    dataclass equality is exact field-for-field."""

    config: dict
    columns: list
    rows: list
    summary: dict


def _num(x) -> float:
    return float(x)


def build_record(config: ExperimentConfig, result: SolveResult, baseline: BaselineRiskTable,
                 log_baseline=None) -> RunRecord:
    grid = baseline.grid
    reps = grid.representatives
    rows = []
    for state in result.history:
        stderr = state.risk.stderr
        for i in range(grid.bin_count):
            risk_i = _num(state.risk.values[i])
            rows.append([
                int(state.round_index),
                int(i),
                _num(reps[i]),
                _num(state.multipliers.weights[i]),
                _num(state.pi.weights[i]),
                risk_i,
                _num(stderr[i]) if stderr is not None else 0.0,
                _num(state.gap.values[i]),
                psnr_from_mse(risk_i),
                psnr_gap_db(risk_i, _num(baseline.values[i])),
            ])
    summary = {
        "problem": config.problem,
        "backend": config.backend,
        "seed": config.seed,
        "converged": bool(result.converged),
        "rounds_used": int(result.rounds_used),
        "overall_risk": _num(result.overall_risk),
        "max_gap": _num(result.max_gap),
        "gap_spread": _num(result.gap_spread),
        "dual_value": _num(result.dual_value),
        "duality_gap": _num(result.duality_gap),
        "epsilon": config.epsilon,
        "epsilon_min": None if result.epsilon_min is None else _num(result.epsilon_min),
        "epsilon_min_best": None if result.epsilon_min_best is None else _num(result.epsilon_min_best),
        "estimator_a": _num(result.handle.params.a),
        "advisory": result.advisory,
        "sigma": [_num(s) for s in reps],
        "baseline": [_num(v) for v in baseline.values],
        "log_baseline": None if log_baseline is None else [_num(v) for v in log_baseline],
        "target_p": [_num(v) for v in config.target_distribution(grid).weights],
        "pi": [_num(v) for v in result.pi.weights],
        "multipliers": [_num(v) for v in result.multipliers.weights],
    }
    return RunRecord(config=config.to_dict(), columns=list(COLUMNS), rows=rows, summary=summary)


def _format_cell(value) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def save_record(record: RunRecord, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    lines = [",".join(record.columns)]
    lines += [",".join(_format_cell(v) for v in row) for row in record.rows]
    with open(os.path.join(out_dir, ROUNDS_FILE), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(os.path.join(out_dir, SUMMARY_FILE), "w") as fh:
        json.dump({"config": record.config, "summary": record.summary}, fh, indent=2)
        fh.write("\n")


def load_record(out_dir) -> RunRecord:
    rounds_path = os.path.join(out_dir, ROUNDS_FILE)
    summary_path = os.path.join(out_dir, SUMMARY_FILE)
    with open(summary_path) as fh:
        blob = json.load(fh)
    with open(rounds_path) as fh:
        lines = fh.read().splitlines()
    columns = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rows.append([int(cells[0]), int(cells[1]), *[float(c) for c in cells[2:]]])
    return RunRecord(config=blob["config"], columns=columns, rows=rows, summary=blob["summary"])


def emit_report(record: RunRecord, out_dir) -> None:
    """Write report.txt plus the gap-curve and multiplier-trajectory data
    files, all derived from the stored record."""
    os.makedirs(out_dir, exist_ok=True)
    s = record.summary
    sigmas = s["sigma"]
    final_round = max(row[0] for row in record.rows)
    final_rows = [row for row in record.rows if row[0] == final_round]

    lines = [
        "run summary",
        f"  problem: {s['problem']}",
        f"  backend: {s['backend']}",
        f"  seed: {s['seed']}",
        f"  converged: {str(s['converged']).lower()} (rounds used: {s['rounds_used']})",
        f"  overall risk: {s['overall_risk']:.6g}",
        f"  max gap: {s['max_gap']:.6g}",
        f"  gap spread: {s['gap_spread']:.6g}",
        f"  duality gap: {s['duality_gap']:.6g}",
    ]
    if s["epsilon"] is not None:
        lines.append(f"  epsilon: {s['epsilon']:.6g}")
    if s["epsilon_min"] is not None:
        lines.append(f"  epsilon_min (final round): {s['epsilon_min']:.6g}")
    if s["epsilon_min_best"] is not None:
        lines.append(f"  epsilon_min (best round): {s['epsilon_min_best']:.6g}")
    if s["advisory"]:
        lines.append(f"  advisory: {s['advisory']}")
    lines += [
        "",
        "training distribution by noise level",
        render_distribution_table(sigmas, {"target p": s["target_p"], "solution pi": s["pi"]}),
        "",
        "PSNR (dB) by noise level",
        render_psnr_table(
            sigmas,
            {
                "achieved": [psnr_from_mse(r) for r in (row[5] for row in final_rows)],
                "per-level best": [psnr_from_mse(b) for b in s["baseline"]],
            },
        ),
        "",
    ]
    with open(os.path.join(out_dir, REPORT_FILE), "w") as fh:
        fh.write("\n".join(lines))

    curve = ["sigma,risk,baseline,gap,psnr,psnr_gap"]
    for row, base in zip(final_rows, s["baseline"]):
        curve.append(
            ",".join(_format_cell(v) for v in [row[2], row[5], float(base), row[7], row[8], row[9]])
        )
    with open(os.path.join(out_dir, GAP_CURVE_FILE), "w") as fh:
        fh.write("\n".join(curve) + "\n")

    traj = ["round,bin,sigma,lambda"]
    traj += [",".join(_format_cell(v) for v in row[:4]) for row in record.rows]
    with open(os.path.join(out_dir, LAMBDA_FILE), "w") as fh:
        fh.write("\n".join(traj) + "\n")


def _build_backend(config: ExperimentConfig):
    """Trainer, baseline table, and log normalizers for the configured
    backend. SGD runs estimate the baseline empirically on a dedicated
    trainer; the analytic backend uses the closed form."""
    model = config.model()
    grid = config.grid()
    need_log = config.problem == "p1-log"
    if config.backend == "analytic-linear":
        trainer = ClosedFormLinearTrainer(model, grid, seed=config.seed)
        baseline = baseline_table(model, grid)
        log_baseline = baseline.log_values if need_log else None
        return trainer, baseline, log_baseline
    sgd = SgdConfig(
        epochs_per_round=config.sgd_epochs_per_round,
        batches_per_epoch=config.sgd_batches_per_epoch,
        batch_size=config.sgd_batch_size,
        step_size=config.sgd_step_size,
        seed=config.seed,
    )
    trainer = SgdLinearTrainer(
        model, grid, sgd, mc_samples=config.mc_samples, seed=derive_seed(config.seed, _STREAM_SOLVE)
    )
    baseline_trainer = SgdLinearTrainer(
        model, grid, sgd, mc_samples=config.mc_samples, seed=derive_seed(config.seed, _STREAM_BASELINE)
    )
    baseline = compute_baseline(baseline_trainer)
    log_baseline = compute_log_baseline(baseline_trainer) if need_log else None
    return trainer, baseline, log_baseline


def run_experiment(config: ExperimentConfig) -> Tuple[RunRecord, SolveResult]:
    """Execute the configured solve end-to-end and persist all artifacts."""
    trainer, baseline, log_baseline = _build_backend(config)
    solver_cfg = config.solver_config()
    if config.problem == "p2":
        result = solve_minimax_gap(trainer, baseline, solver_cfg)
    else:
        p = config.target_distribution(trainer.grid)
        result = solve_constrained(trainer, baseline, solver_cfg, p=p, log_baseline=log_baseline)
    record = build_record(config, result, baseline, log_baseline=log_baseline)
    save_record(record, config.output_dir)
    emit_report(record, config.output_dir)
    return record, result


def run_oracle(config: ExperimentConfig) -> dict:
    """Closed-form scan over effective variances; writes oracle.json.

    An infeasible epsilon yields a normal report with feasible=false and the
    attainable minimum; it is not an error."""
    if config.backend != "analytic-linear":
        raise ConfigError("the oracle is closed-form; set backend = analytic-linear")
    if config.problem == "p1-log":
        raise ConfigError("the oracle covers additive risk caps only (p1 or p2)")
    model = config.model()
    grid = config.grid()
    minimax = grid_search_minimax(model, grid)
    report = {
        "problem": config.problem,
        "sigma_y": config.sigma_y,
        "grid": [config.sigma_min, config.sigma_max, config.bins],
        "epsilon": config.epsilon,
        "epsilon_min": _num(minimax.epsilon_min),
        "minimax_sigma_bar_sq": _num(minimax.sigma_bar_sq),
    }
    if config.problem == "p2":
        report.update(
            feasible=True,
            sigma_bar_sq=_num(minimax.sigma_bar_sq),
            overall_risk=_num(minimax.overall_risk),
            max_gap=_num(minimax.max_gap),
        )
    else:
        p = config.target_distribution(grid)
        try:
            oracle = grid_search_constrained(model, p, config.epsilon, grid)
            report.update(
                feasible=True,
                sigma_bar_sq=_num(oracle.sigma_bar_sq),
                overall_risk=_num(oracle.overall_risk),
                max_gap=_num(oracle.max_gap),
            )
        except InfeasibleProblemError as exc:
            report.update(
                feasible=False,
                epsilon_min=_num(exc.epsilon_min),
                advisory=(
                    "epsilon is below the attainable minimum for this grid; "
                    "solve problem p2 to find the tightest feasible cap"
                ),
            )
    os.makedirs(config.output_dir, exist_ok=True)
    with open(os.path.join(config.output_dir, ORACLE_FILE), "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return report
