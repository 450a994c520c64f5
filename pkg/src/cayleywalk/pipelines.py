"""Command pipelines: validated config in, (verdict, summary, CSV) out.

The service endpoints and hence the CLI both run through here.  CSV
text is built deterministically (fixed column order, shortest-roundtrip
float repr, LF line endings): identical config and seeds give
byte-identical CSVs regardless of thread count.  Wall-clock timings
never enter a CSV (the resistance table keeps its wall_time_ms column
empty); they are reported in the JSON summary only.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

from . import conductance, network, speed, walk
from .environment import Environment, EnvSpec, check_a2, check_a3
from .errors import BudgetExceededError, ConfigError
from .group_words import Word
from .schemas import RunConfig

COMMANDS = ("simulate", "flow", "resistance", "speed", "check-assumptions")


@dataclass(frozen=True)
class PipelineResult:
    command: str
    verdict: str
    summary: dict
    csv: str


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def _bool(x: bool | None) -> str | None:
    if x is None:
        return None
    return "true" if x else "false"


def _spec_from_config(config: RunConfig) -> EnvSpec:
    p = config.presentation.build()
    return config.env.build(p)


def _start_word(config: RunConfig) -> Word:
    return tuple(config.walk.start)


def run_simulate(config: RunConfig, threads: int = 1) -> PipelineResult:
    spec = _spec_from_config(config)
    blk = config.walk
    cfg = walk.WalkConfig(
        steps=blk.steps,
        start=_start_word(config),
        trajectory_seed=config.trajectory_seed,
    )
    report, records = walk.annealed_ensemble(
        spec, blk.environments, blk.trajectories, cfg,
        env_seed=config.environment_seed, threads=threads,
    )
    rows = [
        [r.env_seed, r.traj_seed, r.steps, r.final_distance, r.max_distance,
         r.returns_to_root, r.last_return_time]
        for r in records
    ]
    text = _csv_text(
        ["env_seed", "traj_seed", "steps", "final_distance", "max_distance",
         "returns_to_root", "last_return_time"],
        rows,
    )
    summary = {
        "n_env": report.n_env,
        "n_traj": report.n_traj,
        "steps": report.steps,
        "mean_speed": report.mean_speed,
        "stderr_speed": report.stderr_speed,
        "never_return_fraction": report.never_return_fraction,
        "fraction_settled_by_half": report.fraction_settled_by_half,
        "last_return_quantiles": report.last_return_quantiles,
        "per_env_mean_speed": list(report.per_env_mean_speed),
    }
    verdict = (
        f"transience witness: {report.fraction_settled_by_half:.3f} of trajectories "
        f"made no root return after half the horizon "
        f"(never returned: {report.never_return_fraction:.3f}, "
        f"mean |X_n|/n = {report.mean_speed:.4f})"
    )
    return PipelineResult("simulate", verdict, summary, text)


def run_flow(config: RunConfig, threads: int = 1) -> PipelineResult:
    spec = _spec_from_config(config)
    env = Environment(spec, config.environment_seed)
    blk = config.flow
    delta = blk.delta if blk.delta is not None else conductance.default_delta(spec.presentation.d)
    report = conductance.flow_report(
        env, delta, blk.lengths, blk.samples,
        chain_seed=config.trajectory_seed, threads=threads,
    )
    rows = [
        [r.n, r.samples, _fmt(r.mean_log_phi_over_n), _fmt(r.stderr),
         _fmt(r.fraction_below), _fmt(r.flow_lower_bound)]
        for r in report.rows
    ]
    text = _csv_text(
        ["n", "samples", "mean_log_phi_over_n", "stderr", "fraction_below",
         "flow_lower_bound"],
        rows,
    )
    all_above_half = all(r.fraction_below > 0.5 for r in report.rows)
    summary = {
        "delta": report.delta,
        "growth_factor": report.growth_factor,
        "smallest_settled_n": report.smallest_settled_n,
        "all_fractions_above_half": all_above_half,
        "rows": [
            {
                "n": r.n,
                "samples": r.samples,
                "mean_log_phi_over_n": r.mean_log_phi_over_n,
                "stderr": r.stderr,
                "fraction_below": r.fraction_below,
                "flow_lower_bound": r.flow_lower_bound,
            }
            for r in report.rows
        ],
    }
    status = "SUPPORTED" if (all_above_half and report.growth_factor > 1.0) else "NOT WITNESSED"
    verdict = (
        f"flow transience certificate {status}: fraction of sphere vertices below the "
        f"resistance threshold > 1/2 at every tested depth is {all_above_half}, "
        f"flow bound grows by {report.growth_factor:.6g} per level"
    )
    return PipelineResult("flow", verdict, summary, text)


def run_resistance(config: RunConfig, threads: int = 1) -> PipelineResult:
    spec = _spec_from_config(config)
    env = Environment(spec, config.environment_seed)
    blk = config.network
    deepest = network.truncated_vertex_count(spec.presentation, blk.max_depth)
    if deepest > blk.budget:
        raise BudgetExceededError(
            f"depth {blk.max_depth} needs {deepest} vertices, over the budget {blk.budget}"
        )
    profiles = [
        network.resistance_profile(env, L, budget=blk.budget, threads=threads)
        for L in range(1, blk.max_depth + 1)
    ]
    # wall_time_ms stays empty in the CSV so reruns are byte-identical
    rows = [
        [p.depth, _fmt(p.effective_conductance), _fmt(p.escape_probability),
         p.vertices_visited, None]
        for p in profiles
    ]
    text = _csv_text(
        ["L", "effective_conductance", "escape_probability", "vertices_visited",
         "wall_time_ms"],
        rows,
    )
    last = profiles[-1]
    decrements = [
        profiles[i].escape_probability - profiles[i + 1].escape_probability
        for i in range(len(profiles) - 1)
    ]
    summary = {
        "max_depth": blk.max_depth,
        "budget": blk.budget,
        "escape_probability_at_max_depth": last.escape_probability,
        "effective_conductance_at_max_depth": last.effective_conductance,
        "decrements": decrements,
        "log_domain_used": [p.log_domain for p in profiles],
        "wall_time_ms": [p.wall_time_ms for p in profiles],
    }
    verdict = (
        f"escape probability {last.escape_probability:.6f} at depth {last.depth}; "
        f"last decrement {decrements[-1]:.3e}" if decrements else
        f"escape probability {last.escape_probability:.6f} at depth {last.depth}"
    )
    verdict = "finite-volume transience certificate: " + verdict
    return PipelineResult("resistance", verdict, summary, text)


def run_speed(config: RunConfig, threads: int = 1) -> PipelineResult:
    spec = _spec_from_config(config)
    blk = config.speed
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # floor-skip warning lands in the summary
        report, records = speed.speed_ensemble(
            spec, blk.environments, blk.trajectories, blk.steps,
            env_seed=config.environment_seed,
            trajectory_seed=config.trajectory_seed,
            threads=threads,
        )
    rows = [
        [r.env_seed, r.traj_seed, r.report.steps, _fmt(r.report.speed_estimate),
         _fmt(r.report.martingale_term), _fmt(r.report.drift_term),
         None if r.report.theoretical_floor is None else _fmt(r.report.theoretical_floor),
         _bool(r.report.floor_ok)]
        for r in records
    ]
    text = _csv_text(
        ["env_seed", "traj_seed", "steps", "speed", "martingale_over_n",
         "drift_over_n", "floor", "floor_ok"],
        rows,
    )
    summary = {
        "n_env": report.n_env,
        "n_traj": report.n_traj,
        "steps": report.steps,
        "mean_speed": report.mean_speed,
        "min_speed": report.min_speed,
        "mean_drift": report.mean_drift,
        "min_drift": report.min_drift,
        "max_abs_martingale": report.max_abs_martingale,
        "theoretical_floor": report.theoretical_floor,
        "theoretical_floor_origin": None if report.theoretical_floor is None else "derived",
        "floor_satisfied": report.floor_satisfied,
        "floor_skipped_reason": report.floor_skipped_reason,
    }
    if report.theoretical_floor is None:
        verdict = (
            f"positive-speed check (floor skipped: {report.floor_skipped_reason}): "
            f"mean speed {report.mean_speed:.4f}, min speed {report.min_speed:.4f}"
        )
    else:
        state = "satisfied" if report.floor_satisfied else "VIOLATED"
        verdict = (
            f"positive-speed certificate: derived drift floor "
            f"{report.theoretical_floor:.6g} {state} "
            f"(min drift {report.min_drift:.4f}, mean speed {report.mean_speed:.4f})"
        )
    return PipelineResult("speed", verdict, summary, text)


def run_check_assumptions(config: RunConfig, threads: int = 1) -> PipelineResult:
    spec = _spec_from_config(config)
    p = spec.presentation
    a2 = check_a2(spec, config.assumptions.samples, seed=config.environment_seed)
    a3 = check_a3(spec)
    rows = []
    for s in range(p.d):
        rows.append(
            [s, p.letter_label(s), _bool(a2.finite[s]),
             _fmt(a2.estimates[s]) if math.isfinite(a2.estimates[s]) else "inf",
             _fmt(a2.stderrs[s]) if math.isfinite(a2.stderrs[s]) else ""]
        )
    text = _csv_text(
        ["letter", "label", "a2_finite", "abs_log_mean", "abs_log_stderr"],
        rows,
    )
    speed_threshold = 1.0 / (2.0 * (p.d - 1))
    speed_condition = a3 is not None and a3 > speed_threshold
    summary = {
        "family": spec.family,
        "d": p.d,
        "a2_holds": a2.holds,
        "a2_samples": a2.samples,
        "a3_epsilon": a3,
        "speed_threshold": speed_threshold,
        "speed_condition_met": speed_condition,
    }
    a3_text = "absent" if a3 is None else f"epsilon = {a3:.6g}"
    verdict = (
        f"assumptions: independence holds by construction; "
        f"log-moment {'holds' if a2.holds else 'VIOLATED'}; "
        f"ellipticity {a3_text} "
        f"({'>' if speed_condition else 'not >'} 1/(2(d-1)) = {speed_threshold:.6g}, "
        f"speed bound {'applicable' if speed_condition else 'not applicable'})"
    )
    return PipelineResult("check-assumptions", verdict, summary, text)


_RUNNERS = {
    "simulate": run_simulate,
    "flow": run_flow,
    "resistance": run_resistance,
    "speed": run_speed,
    "check-assumptions": run_check_assumptions,
}


def run_command(command: str, config: RunConfig, threads: int = 1) -> PipelineResult:
    try:
        runner = _RUNNERS[command]
    except KeyError:
        raise ConfigError(f"unknown command {command!r}, expected one of {COMMANDS}") from None
    return runner(config, threads)
