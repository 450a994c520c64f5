"""Quenched and annealed simulation of the environment-driven walk.

Every trajectory is a pure function of (environment spec, environment
seed, trajectory seed, config).  Per-run uniform streams are derived as
splitmix64(trajectory_seed XOR run_index), a separate seed domain from
the environment keys, so the quenched and annealed layers never share
randomness.  Ensembles fan trajectories out over a thread pool and
aggregate in fixed index order, so results do not depend on the thread
count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .environment import Environment, EnvSpec
from .group_words import ROOT, Word, validate_word
from .rng import SplitMixStream, check_seed, splitmix64

_EMPTY_TRACE = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class WalkConfig:
    steps: int
    start: Word = ROOT
    trajectory_seed: int = 0
    record_distances: bool = False

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        check_seed(self.trajectory_seed, "trajectory seed")


@dataclass(frozen=True)
class WalkSummary:
    final_distance: int
    max_distance: int
    returns_to_root: int
    last_return_time: int | None
    distance_trace: np.ndarray | None = field(default=None, compare=False)


def step(env: Environment, word: Word, stream: SplitMixStream) -> Word:
    """One transition: sample a letter from the vector at the current
    vertex (CDF walk in letter-code order) and move to that neighbor."""
    p = env.presentation
    vec = env.transition_at(word)
    u = stream.next_unit()
    acc = 0.0
    letter = p.d - 1
    for j in range(p.d):
        acc += vec[j]
        if u < acc:
            letter = j
            break
    if word and word[0] == p.inverse(letter):
        return word[1:]
    return (letter,) + word


def _start_array(env: Environment, start: Word) -> np.ndarray:
    validate_word(env.presentation, start)
    # kernels take letters in application order (reverse of storage)
    return np.asarray(start[::-1], dtype=np.int64)


@dataclass(frozen=True)
class RawWalk:
    """Kernel outputs shared by the walk and speed layers."""

    steps: int
    final_distance: int
    max_distance: int
    returns_to_root: int
    last_return_time: int | None
    compensator_sum: float
    martingale_sum: float
    compensator_min: float
    compensator_max: float
    tail_min_ratio: float
    distance_trace: np.ndarray | None


def run_raw_walk(env: Environment, cfg: WalkConfig, stream_index: int = 0) -> RawWalk:
    code, d, alpha, eps, points, weights = env.spec.kernel_args()
    start = _start_array(env, cfg.start)
    stream_seed = np.uint64(splitmix64(cfg.trajectory_seed ^ stream_index))
    if cfg.record_distances:
        trace = np.empty(cfg.steps + 1, dtype=np.int64)
    else:
        trace = _EMPTY_TRACE
    out = _kernels.run_walk(
        env.presentation.k, d, code, alpha, eps, points, weights,
        np.uint64(env.seed), start, cfg.steps, stream_seed, trace,
        cfg.record_distances,
    )
    final, maxd, returns, last, comp_sum, mg_sum, comp_min, comp_max, tail_min = out
    return RawWalk(
        steps=cfg.steps,
        final_distance=int(final),
        max_distance=int(maxd),
        returns_to_root=int(returns),
        last_return_time=None if last < 0 else int(last),
        compensator_sum=float(comp_sum),
        martingale_sum=float(mg_sum),
        compensator_min=float(comp_min),
        compensator_max=float(comp_max),
        tail_min_ratio=float(tail_min),
        distance_trace=trace if cfg.record_distances else None,
    )


def simulate_quenched(env: Environment, cfg: WalkConfig) -> WalkSummary:
    raw = run_raw_walk(env, cfg, stream_index=0)
    return WalkSummary(
        final_distance=raw.final_distance,
        max_distance=raw.max_distance,
        returns_to_root=raw.returns_to_root,
        last_return_time=raw.last_return_time,
        distance_trace=raw.distance_trace,
    )


@dataclass(frozen=True)
class TrajectoryRecord:
    """One CSV row of the ensemble output; seeds are the derived ones,
    so any row can be reproduced standalone."""

    env_seed: int
    traj_seed: int
    steps: int
    final_distance: int
    max_distance: int
    returns_to_root: int
    last_return_time: int | None


@dataclass(frozen=True)
class EnsembleReport:
    n_env: int
    n_traj: int
    steps: int
    mean_speed: float
    stderr_speed: float
    never_return_fraction: float
    fraction_settled_by_half: float
    last_return_quantiles: dict[str, float]
    per_env_mean_speed: tuple[float, ...]


def annealed_ensemble(
    spec: EnvSpec,
    n_env: int,
    n_traj: int,
    cfg: WalkConfig,
    *,
    env_seed: int,
    threads: int = 1,
) -> tuple[EnsembleReport, list[TrajectoryRecord]]:
    """n_env independent environments times n_traj trajectories each.

    Per-environment seeds are splitmix64(env_seed XOR i); trajectory
    stream index is i*n_traj + j so all runs draw from disjoint streams.
    """
    if n_env < 1 or n_traj < 1:
        raise ValueError("n_env and n_traj must be >= 1")
    check_seed(env_seed, "environment seed")
    if cfg.start != ROOT:
        validate_word(spec.presentation, cfg.start)

    env_seeds = [splitmix64(env_seed ^ i) for i in range(n_env)]
    envs = [Environment(spec, s) for s in env_seeds]

    def job(index: int) -> RawWalk:
        return run_raw_walk(envs[index // n_traj], cfg, stream_index=index)

    total = n_env * n_traj
    raws: list[RawWalk | None] = [None] * total
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for index, raw in zip(range(total), pool.map(job, range(total))):
                raws[index] = raw
    else:
        for index in range(total):
            raws[index] = job(index)

    records = []
    speeds = np.empty(total)
    never = 0
    settled = 0
    last_returns = []
    for index, raw in enumerate(raws):
        assert raw is not None
        i = index // n_traj
        records.append(
            TrajectoryRecord(
                env_seed=env_seeds[i],
                traj_seed=splitmix64(cfg.trajectory_seed ^ index),
                steps=cfg.steps,
                final_distance=raw.final_distance,
                max_distance=raw.max_distance,
                returns_to_root=raw.returns_to_root,
                last_return_time=raw.last_return_time,
            )
        )
        speeds[index] = raw.final_distance / cfg.steps
        if raw.last_return_time is None:
            never += 1
            settled += 1
        elif raw.last_return_time < cfg.steps / 2:
            settled += 1
        if raw.last_return_time is not None:
            last_returns.append(raw.last_return_time)

    per_env = tuple(
        float(speeds[i * n_traj : (i + 1) * n_traj].mean()) for i in range(n_env)
    )
    quantiles: dict[str, float] = {}
    if last_returns:
        arr = np.asarray(last_returns, dtype=np.float64)
        for q in (0.5, 0.9, 0.99):
            quantiles[f"q{q}"] = float(np.quantile(arr, q))
        quantiles["max"] = float(arr.max())
    report = EnsembleReport(
        n_env=n_env,
        n_traj=n_traj,
        steps=cfg.steps,
        mean_speed=float(speeds.mean()),
        stderr_speed=float(speeds.std(ddof=1) / np.sqrt(total)) if total > 1 else 0.0,
        never_return_fraction=never / total,
        fraction_settled_by_half=settled / total,
        last_return_quantiles=quantiles,
        per_env_mean_speed=per_env,
    )
    return report, records
