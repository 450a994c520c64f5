import math

import numpy as np
import pytest

from cayleywalk.conductance import PathToVertex, conductance_edge
from cayleywalk.environment import EnvSpec, Environment
from cayleywalk.errors import A2ViolatedError, BudgetExceededError
from cayleywalk.group_words import ROOT, apply_letter
from cayleywalk.network import (
    TruncationConfig,
    build_truncated_tree,
    effective_conductance,
    escape_probability,
    escape_probability_mc,
    max_depth_within_budget,
    resistance_profile,
    truncated_vertex_count,
)
from helpers import bfs_words


@pytest.fixture(scope="module")
def env_simple(p3):
    return Environment(EnvSpec.simple(p3), 0)


@pytest.fixture(scope="module")
def env_dirichlet(p3):
    return Environment(EnvSpec.dirichlet(p3, (1.0, 1.0, 1.0)), 42)


def reduction_oracle(env, depth):
    """Independent series/parallel reduction built directly from
    conductance_edge values over explicitly enumerated words."""
    p = env.presentation

    def subtree(word):
        c_edge = conductance_edge(env, PathToVertex.from_word(p, word))
        if len(word) == depth:
            return c_edge
        total = 0.0
        for s in range(p.d):
            child = apply_letter(p, word, s)
            if len(child) > len(word):
                total += subtree(child)
        return c_edge * total / (c_edge + total)

    value = 0.0
    for s in range(p.d):
        value += subtree((s,))
    return value


def harmonic_oracle(env, depth):
    """Escape probability from the dense linear hitting system: h = 0 at
    the root, 1 on the boundary, harmonic in between."""
    p = env.presentation
    levels = bfs_words(p, depth)
    words = [w for level in levels for w in level]
    index = {w: i for i, w in enumerate(words)}
    interior = [w for w in words if 0 < len(w) < depth]
    pos = {w: i for i, w in enumerate(interior)}
    A = np.eye(len(interior))
    b = np.zeros(len(interior))
    for w in interior:
        vec = env.transition_at(w)
        for s in range(p.d):
            y = apply_letter(p, w, s)
            weight = vec[s]
            if len(y) == depth:
                b[pos[w]] += weight
            elif y != ROOT:
                A[pos[w], pos[y]] -= weight
    h = np.linalg.solve(A, b)
    root_vec = env.transition_at(ROOT)
    if depth == 1:
        return float(sum(root_vec[s] for s in range(p.d)))
    return float(sum(root_vec[s] * h[pos[(s,)]] for s in range(p.d)))


class TestCounts:
    def test_vertex_count_matches_enumeration(self, p3, p4):
        for p in (p3, p4):
            levels = bfs_words(p, 5)
            for depth in range(1, 6):
                assert truncated_vertex_count(p, depth) == sum(
                    len(level) for level in levels[: depth + 1])

    def test_max_depth_within_budget(self, p3):
        depth = max_depth_within_budget(p3, 10_000_000)
        assert truncated_vertex_count(p3, depth) <= 10_000_000
        assert truncated_vertex_count(p3, depth + 1) > 10_000_000

    def test_budget_error(self, env_simple):
        with pytest.raises(BudgetExceededError):
            effective_conductance(env_simple, 10, budget=100)

    def test_truncation_config_validation(self):
        with pytest.raises(ValueError):
            TruncationConfig(0)
        with pytest.raises(ValueError):
            TruncationConfig(3, budget=0)


class TestSimpleExactness:
    def test_depth_one_is_unity(self, env_simple):
        assert escape_probability(env_simple, 1) == pytest.approx(1.0, abs=1e-12)

    def test_gambler_ruin_closed_form(self, env_simple):
        # escape through depth L for the uniform walk: (1/2)/(1 - 2^-L)
        for L in range(1, 13):
            expected = 0.5 / (1.0 - 2.0**-L)
            assert abs(escape_probability(env_simple, L) - expected) <= 1e-10

    def test_depth_three_fraction(self, env_simple):
        assert abs(escape_probability(env_simple, 3) - 4.0 / 7.0) <= 1e-12

    def test_limit_approached_monotonically(self, env_simple):
        values = [escape_probability(env_simple, L) for L in range(1, 13)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] > 0.5


class TestOracles:
    def test_reduction_oracle_agreement(self, p3):
        for seed in (1, 2, 3):
            env = Environment(EnvSpec.dirichlet(p3, (1.0, 1.0, 1.0)), seed)
            for depth in (1, 2, 3, 4):
                got = effective_conductance(env, depth)
                want = reduction_oracle(env, depth)
                # same edge values, same combination: bit-identical
                assert got == want

    def test_harmonic_oracle_agreement(self, p3):
        for seed in (5, 6, 7, 8, 9):
            env = Environment(EnvSpec.dirichlet(p3, (1.0, 1.0, 1.0)), seed)
            for depth in (1, 2, 3, 4):
                got = escape_probability(env, depth)
                want = harmonic_oracle(env, depth)
                assert abs(got - want) <= 1e-10

    def test_boundary_edges_bitwise_equal_conductance_edge(self, env_dirichlet, p3):
        # depth-1 truncation: parallel sum of the root edges, in letter order
        total = 0.0
        for s in range(p3.d):
            total += conductance_edge(env_dirichlet, PathToVertex.from_letters(p3, [s]))
        assert effective_conductance(env_dirichlet, 1) == total


class TestGeneralProperties:
    def test_monotone_in_depth(self, env_dirichlet):
        values = [escape_probability(env_dirichlet, L) for L in range(1, 11)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] > 0.0

    def test_positive_limit_plateau(self, env_dirichlet):
        values = [escape_probability(env_dirichlet, L) for L in range(1, 12)]
        diffs = np.diff(values)
        assert abs(diffs[-1]) < abs(diffs[0]) * 0.1
        assert values[-1] > 0.1

    def test_log_domain_matches_plain(self, env_dirichlet):
        plain = effective_conductance(env_dirichlet, 6, log_domain=False)
        logged = effective_conductance(env_dirichlet, 6, log_domain=True)
        assert abs(plain - logged) <= 1e-12 * plain

    def test_extreme_conductance_triggers_log_domain(self, p3):
        tiny = 1e-305
        spec = EnvSpec.finite_points(
            p3, [(tiny, 0.5 - tiny / 2, 0.5 - tiny / 2)], (1.0,))
        env = Environment(spec, 1)
        profile = resistance_profile(env, 2)
        assert profile.log_domain
        assert 0.0 < profile.escape_probability <= 1.0 + 1e-12

    def test_series_combine_overflow_falls_back(self, p3):
        # per-edge conductances stay inside [1e-300, 1e300] but their
        # series product overflows; the fallback must engage and agree
        # with forced log-domain evaluation
        tiny = 1e-120
        spec = EnvSpec.finite_points(
            p3,
            [(tiny, 0.5, 0.5 - tiny), (0.5, 0.25, 0.25),
             (1.0 - 2 * tiny, tiny, tiny)],
            (0.4, 0.3, 0.3),
        )
        env = Environment(spec, 7)
        auto = resistance_profile(env, 6)
        forced = resistance_profile(env, 6, log_domain=True)
        assert auto.log_domain
        assert auto.escape_probability == forced.escape_probability
        assert 0.0 <= auto.escape_probability <= 1.0 + 1e-12

    def test_zero_probability_signals_a2(self, p3):
        env = Environment(EnvSpec.finite_points(p3, [(1.0, 0.0, 0.0)], (1.0,)), 1)
        with pytest.raises(A2ViolatedError):
            effective_conductance(env, 2)

    def test_threads_do_not_change_results(self, env_dirichlet):
        a = resistance_profile(env_dirichlet, 7, threads=1)
        b = resistance_profile(env_dirichlet, 7, threads=8)
        assert a.effective_conductance == b.effective_conductance
        assert a.vertices_visited == b.vertices_visited

    def test_visited_counts_whole_tree(self, env_simple, p3):
        profile = resistance_profile(env_simple, 5)
        assert profile.vertices_visited == truncated_vertex_count(p3, 5)


class TestTrajectoryProbe:
    def test_tree_index_structure(self, env_dirichlet, p3):
        tree = build_truncated_tree(env_dirichlet, 3)
        assert len(tree.words) == truncated_vertex_count(p3, 3)
        assert tree.is_boundary.sum() == 12  # sphere size at depth 3
        interior = ~tree.is_boundary
        # interior transition rows are proper probability vectors
        sums = tree.vectors[interior].sum(axis=1)
        assert np.abs(sums - 1.0).max() <= 1e-12
        # neighbor pointers are involutive through the inverse letter
        for i in np.flatnonzero(interior):
            for s in range(p3.d):
                j = tree.next_idx[i, s]
                if not tree.is_boundary[j]:
                    assert tree.next_idx[j, p3.inverse(s)] == i

    def test_mc_matches_exact_escape(self, env_dirichlet):
        exact = escape_probability(env_dirichlet, 6)
        est, se = escape_probability_mc(env_dirichlet, 6, 40_000, trajectory_seed=3)
        assert abs(est - exact) <= 3.0 * se

    def test_mc_deterministic(self, env_dirichlet):
        a = escape_probability_mc(env_dirichlet, 4, 10_000, trajectory_seed=5)
        b = escape_probability_mc(env_dirichlet, 4, 10_000, trajectory_seed=5)
        assert a == b

    def test_simple_probe_matches_closed_form(self, env_simple):
        est, se = escape_probability_mc(env_simple, 8, 60_000, trajectory_seed=9)
        expected = 0.5 / (1.0 - 2.0**-8)
        assert abs(est - expected) <= 3.0 * se


class TestCrossPipelineConsistency:
    def test_escape_limit_matches_walk_never_return(self, env_dirichlet):
        # the deep-truncation escape probability is the never-return
        # probability; estimate the latter with the full word-based walk
        # engine on the same environment (finite horizon biases the MC
        # estimate up by the mass of very late first returns)
        from cayleywalk.walk import WalkConfig, run_raw_walk

        exact = escape_probability(env_dirichlet, 12)
        n_traj = 3_000
        never = sum(
            1 for t in range(n_traj)
            if run_raw_walk(env_dirichlet, WalkConfig(steps=2_000, trajectory_seed=7),
                            stream_index=t).last_return_time is None
        )
        frac = never / n_traj
        se = math.sqrt(frac * (1.0 - frac) / n_traj)
        assert abs(frac - exact) <= 3.0 * se
