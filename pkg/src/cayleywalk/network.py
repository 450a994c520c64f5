"""Exact effective conductance on depth-truncated trees.

Root-to-boundary effective conductance via iterative post-order
series/parallel reduction over lazily generated words: a boundary edge
contributes its own conductance, an internal vertex combines its parent
edge in series with the parallel sum of its children, and the root adds
its d subtrees.  Because the root's edge conductances sum to one, the
effective conductance equals the probability of reaching the boundary
before returning to the root -- the finite-volume transience
certificate.

Edge conductances come from the same log-resistance accumulation as
``conductance.log_phi``, term by term in the same order, so the edge
values are bit-identical to ``conductance_edge`` on the same
environment.  Arithmetic runs in ordinary doubles and falls back to an
all-log-domain pass when any edge conductance leaves [1e-300, 1e300].
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .environment import Environment
from .errors import A2ViolatedError, BudgetExceededError
from .group_words import ROOT, Presentation, Word, apply_letter
from .rng import check_seed

DEFAULT_BUDGET = 10_000_000

_LOG_LIMIT = math.log(1e300)


class _NeedLogDomain(Exception):
    pass


@dataclass(frozen=True)
class TruncationConfig:
    depth: int
    budget: int = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


def truncated_vertex_count(p: Presentation, depth: int) -> int:
    """1 + d + d(d-1) + ... + d(d-1)^(depth-1)."""
    d = p.d
    return 1 + d * ((d - 1) ** depth - 1) // (d - 2)


def max_depth_within_budget(p: Presentation, budget: int = DEFAULT_BUDGET) -> int:
    if truncated_vertex_count(p, 1) > budget:
        raise BudgetExceededError(f"even depth 1 exceeds the budget {budget}")
    depth = 1
    while truncated_vertex_count(p, depth + 1) <= budget:
        depth += 1
    return depth


def _vector(env: Environment, path: np.ndarray, depth: int) -> np.ndarray:
    code, d, alpha, eps, points, weights = env.spec.kernel_args()
    out = np.empty(d, dtype=np.float64)
    if code == 0:
        key = np.uint64(0)
    else:
        key = np.uint64(_kernels.vertex_key(np.uint64(env.seed), path, depth))
    _kernels.sample_vector(code, d, alpha, eps, points, weights, key, out)
    return out


def _log_edge_term(vec: np.ndarray, back_letter: int, forward_letter: int) -> float:
    back = vec[back_letter]
    forward = vec[forward_letter]
    if back <= 0.0 or forward <= 0.0:
        raise A2ViolatedError("zero transition probability on a tree edge")
    return math.log(back) - math.log(forward)


def _subtree(env: Environment, root_vec: np.ndarray, first_letter: int, depth_limit: int,
             log_mode: bool) -> tuple[float, int]:
    """Effective conductance of one root subtree (log of it in log mode)
    and the number of subtree vertices visited."""
    p = env.presentation
    d = p.d
    L = depth_limit
    path = np.empty(L, dtype=np.int64)
    path[0] = first_letter

    p0 = root_vec[first_letter]
    if p0 <= 0.0:
        raise A2ViolatedError("zero transition probability at the root")
    log_phi = np.empty(L + 1, dtype=np.float64)
    log_phi[1] = -math.log(p0)

    acc = np.empty(L + 1, dtype=np.float64)
    next_child = np.empty(L + 1, dtype=np.int64)
    vecs: list[np.ndarray | None] = [None] * (L + 1)
    visited = 0

    level = 1
    descending = True
    value = 0.0
    while True:
        if descending:
            visited += 1
            if level == L:
                if log_mode:
                    value = -log_phi[level]
                else:
                    if abs(log_phi[level]) > _LOG_LIMIT:
                        raise _NeedLogDomain
                    value = math.exp(-log_phi[level])
                descending = False
                level -= 1
                if level == 0:
                    return value, visited
                continue
            vecs[level] = _vector(env, path, level)
            acc[level] = -math.inf if log_mode else 0.0
            next_child[level] = 0
        else:
            if log_mode:
                acc[level] = np.logaddexp(acc[level], value)
            else:
                acc[level] += value

        excl = p.inverse(int(path[level - 1]))
        s = int(next_child[level])
        if s == excl:
            s += 1
        if s < d:
            next_child[level] = s + 1
            path[level] = s
            log_phi[level + 1] = log_phi[level] + _log_edge_term(vecs[level], excl, s)
            level += 1
            descending = True
            continue

        # every child combined: series with the vertex's own parent edge
        if log_mode:
            log_cp = -log_phi[level]
            value = log_cp + acc[level] - np.logaddexp(log_cp, acc[level])
        else:
            if abs(log_phi[level]) > _LOG_LIMIT:
                raise _NeedLogDomain
            cp = math.exp(-log_phi[level])
            total = float(acc[level])
            value = cp * total / (cp + total)
            if not math.isfinite(value):  # cp*total can overflow before cp does
                raise _NeedLogDomain
        descending = False
        level -= 1
        if level == 0:
            return value, visited


@dataclass(frozen=True)
class NetworkResult:
    depth: int
    effective_conductance: float
    escape_probability: float
    vertices_visited: int
    log_domain: bool
    wall_time_ms: float


def resistance_profile(
    env: Environment,
    depth: int,
    *,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    log_domain: bool | None = None,
) -> NetworkResult:
    """Full record of one truncated-tree reduction."""
    cfg = TruncationConfig(depth, budget)
    p = env.presentation
    count = truncated_vertex_count(p, depth)
    if count > cfg.budget:
        raise BudgetExceededError(
            f"depth {depth} needs {count} vertices, over the budget {cfg.budget}"
        )
    started = time.perf_counter()
    root_vec = env.transition_array(ROOT)

    def attempt(log_mode: bool) -> tuple[float, int]:
        letters = list(range(p.d))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(
                    pool.map(lambda s: _subtree(env, root_vec, s, depth, log_mode), letters)
                )
        else:
            results = [_subtree(env, root_vec, s, depth, log_mode) for s in letters]
        visited = 1 + sum(v for _, v in results)
        if log_mode:
            total = -math.inf
            for g, _ in results:  # fixed letter order
                total = np.logaddexp(total, g)
            return float(np.exp(total)), visited
        total = 0.0
        for g, _ in results:
            total += g
        return total, visited

    if log_domain is None:
        try:
            value, visited = attempt(False)
            used_log = False
        except _NeedLogDomain:
            value, visited = attempt(True)
            used_log = True
    else:
        value, visited = attempt(log_domain)
        used_log = log_domain
    elapsed_ms = (time.perf_counter() - started) * 1e3
    value = float(value)
    return NetworkResult(
        depth=depth,
        effective_conductance=value,
        escape_probability=value,  # root edge conductances sum to 1
        vertices_visited=visited,
        log_domain=used_log,
        wall_time_ms=elapsed_ms,
    )


def effective_conductance(
    env: Environment,
    depth: int,
    *,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    log_domain: bool | None = None,
) -> float:
    return resistance_profile(
        env, depth, budget=budget, threads=threads, log_domain=log_domain
    ).effective_conductance


def escape_probability(
    env: Environment,
    depth: int,
    *,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    log_domain: bool | None = None,
) -> float:
    """P(hit the depth boundary before returning to the root); equals
    the effective conductance because the root edge weights sum to 1."""
    return resistance_profile(
        env, depth, budget=budget, threads=threads, log_domain=log_domain
    ).escape_probability


@dataclass(frozen=True)
class TruncatedTreeIndex:
    """Node-indexed truncated tree: integer transitions for fast
    trajectory simulation and for dense linear-algebra oracles."""

    words: list[Word]
    depths: np.ndarray
    next_idx: np.ndarray  # (n_nodes, d); rows of boundary nodes unused
    is_boundary: np.ndarray
    vectors: np.ndarray  # rows of boundary nodes are zero


def build_truncated_tree(env: Environment, depth: int,
                         budget: int = DEFAULT_BUDGET) -> TruncatedTreeIndex:
    p = env.presentation
    count = truncated_vertex_count(p, depth)
    if count > budget:
        raise BudgetExceededError(
            f"depth {depth} needs {count} vertices, over the budget {budget}"
        )
    d = p.d
    words: list[Word] = [ROOT]
    index: dict[Word, int] = {ROOT: 0}
    depths = np.zeros(count, dtype=np.int64)
    next_idx = np.zeros((count, d), dtype=np.int64)
    is_boundary = np.zeros(count, dtype=np.bool_)
    vectors = np.zeros((count, d), dtype=np.float64)

    head = 0
    while head < len(words):
        word = words[head]
        dep = depths[head]
        if dep == depth:
            is_boundary[head] = True
            head += 1
            continue
        vectors[head] = env.transition_array(word)
        for s in range(d):
            neighbor = apply_letter(p, word, s)
            at = index.get(neighbor)
            if at is None:
                at = len(words)
                index[neighbor] = at
                words.append(neighbor)
                depths[at] = len(neighbor)
            next_idx[head, s] = at
        head += 1
    return TruncatedTreeIndex(words, depths, next_idx, is_boundary, vectors)


def escape_probability_mc(
    env: Environment,
    depth: int,
    trajectories: int,
    *,
    trajectory_seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> tuple[float, float]:
    """Monte Carlo estimate of the escape probability with its standard
    error, walking the node-indexed truncated tree."""
    if trajectories < 1:
        raise ValueError("trajectories must be >= 1")
    check_seed(trajectory_seed, "trajectory seed")
    tree = build_truncated_tree(env, depth, budget)
    hits = _kernels.run_hit_probe(
        tree.next_idx, tree.is_boundary, tree.vectors, env.presentation.d,
        trajectories, np.uint64(trajectory_seed),
    )
    p_hat = hits / trajectories
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-300) / trajectories)
    return p_hat, stderr
