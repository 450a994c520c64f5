"""Numba kernels for the Monte Carlo hot paths.

These mirror the plain-Python reference in ``rng.py`` bit for bit (the
test suite asserts it).  All kernels are pure functions of their
arguments: trajectory and sampling streams are counter-based, so
results are independent of scheduling and thread count.  No fastmath
anywhere; reported numbers must be bit-identical across runs.

Words appear here as int64 arrays of letter codes in *application*
order (first applied letter at index 0), the reverse of the tuple
storage used by ``group_words``.  The key fold consumes the serialized
form: LEB128 length bytes, then letters most-recently-applied first.
"""

from __future__ import annotations

import numpy as np
from numba import int64, njit, uint64

GOLD = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)


@njit(uint64(uint64), cache=True, nogil=True)
def splitmix64(x):
    z = x + GOLD
    z = (z ^ (z >> uint64(30))) * _MIX1
    z = (z ^ (z >> uint64(27))) * _MIX2
    return z ^ (z >> uint64(31))


@njit(cache=True, nogil=True)
def fold_serialized(seed, data):
    """Fold the bytes of an already-serialized word into a 64-bit key."""
    state = seed
    for i in range(data.size):
        state = splitmix64(state ^ (uint64(data[i]) + GOLD))
    return splitmix64(state)


@njit(cache=True, nogil=True)
def vertex_key(seed, path, depth):
    """Key of the vertex path[0:depth] without materializing the bytes.

    Equivalent to fold_serialized(seed, serialize(word)): LEB128 length
    first, then letter codes most-recently-applied first (reverse of
    the application-order path array).
    """
    state = seed
    n = depth
    while True:
        b = n & 0x7F
        n >>= 7
        if n != 0:
            b |= 0x80
        state = splitmix64(state ^ (uint64(b) + GOLD))
        if n == 0:
            break
    for i in range(depth - 1, -1, -1):
        state = splitmix64(state ^ (uint64(path[i]) + GOLD))
    return splitmix64(state)


@njit(uint64(uint64, int64), cache=True, nogil=True)
def stream_u64(seed, index):
    return splitmix64(seed + uint64(index) * GOLD)


@njit(cache=True, nogil=True)
def stream_unit(seed, index):
    return (np.float64(stream_u64(seed, index) >> uint64(12)) + 0.5) * 2.0**-52


@njit(cache=True, nogil=True)
def _next_normal(seed, ctr):
    u1 = stream_unit(seed, ctr)
    u2 = stream_unit(seed, ctr + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2), ctr + 2


@njit(cache=True, nogil=True)
def _gamma_mt(shape, seed, ctr):
    """Marsaglia-Tsang gamma sampler driven by the counter stream.

    For shape < 1 draws Gamma(shape+1) and multiplies by U^(1/shape);
    the boost uniform is consumed before the gamma draws.
    """
    boost = 1.0
    if shape < 1.0:
        u = stream_unit(seed, ctr)
        ctr += 1
        boost = u ** (1.0 / shape)
        shape = shape + 1.0
    d0 = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d0)
    while True:
        x, ctr = _next_normal(seed, ctr)
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = stream_unit(seed, ctr)
        ctr += 1
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return boost * d0 * v, ctr
        if np.log(u) < 0.5 * x2 + d0 * (1.0 - v + np.log(v)):
            return boost * d0 * v, ctr


@njit(cache=True, nogil=True)
def sample_vector(family, d, alpha, eps, points, weights, key, out):
    """Fill out[:d] with the transition vector of the vertex with this key."""
    if family == 0:
        for i in range(d):
            out[i] = 1.0 / d
        return
    if family == 2:
        u = stream_unit(key, 0)
        row = weights.size - 1
        acc = 0.0
        for j in range(weights.size):
            acc += weights[j]
            if u < acc:
                row = j
                break
        for i in range(d):
            out[i] = points[row, i]
        return
    # Dirichlet draw, optionally squeezed onto the elliptic floor
    ctr = int64(0)
    total = 0.0
    for i in range(d):
        g, ctr = _gamma_mt(alpha[i], key, ctr)
        out[i] = g
        total += g
    for i in range(d):
        out[i] /= total
    if family == 3:
        scale = 1.0 - eps * d
        for i in range(d):
            out[i] = eps + scale * out[i]


@njit(cache=True, nogil=True)
def sample_marginal_batch(family, d, alpha, eps, points, weights, seed, out):
    """Independent draws from the single-vertex marginal, one per row."""
    for i in range(out.shape[0]):
        key = stream_u64(seed, i)
        sample_vector(family, d, alpha, eps, points, weights, key, out[i])


@njit(cache=True, nogil=True)
def _pick_letter(vec, d, u):
    acc = 0.0
    for j in range(d):
        acc += vec[j]
        if u < acc:
            return j
    return d - 1


@njit(cache=True, nogil=True)
def _inverse_letter(code, k):
    return code ^ 1 if code < 2 * k else code


@njit(cache=True, nogil=True)
def sample_chain_letters(k, d, n, chain_seed, out):
    """Letters Y_1..Y_n of the sphere chain: Y_1 uniform, then each
    next letter uniform over the d-1 letters besides the previous
    letter's inverse.  Consumes stream positions 0..n-1."""
    u = stream_unit(chain_seed, 0)
    j = int64(u * d)
    if j >= d:
        j = d - 1
    out[0] = j
    for m in range(1, n):
        excl = _inverse_letter(out[m - 1], k)
        u = stream_unit(chain_seed, m)
        j = int64(u * (d - 1))
        if j >= d - 1:
            j = d - 2
        out[m] = j if j < excl else j + 1


@njit(cache=True, nogil=True)
def log_phi_at_chain(k, d, family, alpha, eps, points, weights, env_seed, n, chain_seed, letters):
    """Sample a depth-n sphere vertex via the chain and return the log
    of its parent-edge resistance.  Returns NaN on a zero transition
    probability (log-moment assumption violated)."""
    sample_chain_letters(k, d, n, chain_seed, letters)
    vec = np.empty(d, np.float64)
    if family == 0:
        key = uint64(0)
    else:
        key = vertex_key(env_seed, letters, 0)
    sample_vector(family, d, alpha, eps, points, weights, key, vec)
    p0 = vec[letters[0]]
    if p0 <= 0.0:
        return np.nan
    acc = -np.log(p0)
    for m in range(1, n):
        if family == 0:
            key = uint64(0)
        else:
            key = vertex_key(env_seed, letters, m)
        sample_vector(family, d, alpha, eps, points, weights, key, vec)
        a = vec[_inverse_letter(letters[m - 1], k)]
        b = vec[letters[m]]
        if a <= 0.0 or b <= 0.0:
            return np.nan
        acc += np.log(a) - np.log(b)
    return acc


@njit(cache=True, nogil=True)
def log_phi_batch(k, d, family, alpha, eps, points, weights, env_seed, n, chain_seeds, out):
    letters = np.empty(n, np.int64)
    for j in range(chain_seeds.size):
        out[j] = log_phi_at_chain(
            k, d, family, alpha, eps, points, weights, env_seed, n, chain_seeds[j], letters
        )


@njit(cache=True, nogil=True)
def run_walk(
    k,
    d,
    family,
    alpha,
    eps,
    points,
    weights,
    env_seed,
    start,
    steps,
    stream_seed,
    trace,
    want_trace,
):
    """One quenched trajectory.

    Maintains the geodesic path from the root as an application-order
    letter array plus a stack of transition vectors along it; vectors
    above the current depth stay cached until the walk branches off, so
    each distinct vertex is sampled once per excursion.  Uniform
    u_t = stream_unit(stream_seed, t) drives step t.

    Returns (final_distance, max_distance, returns_to_root,
    last_return_time, compensator_sum, martingale_sum, compensator_min,
    compensator_max, tail_min_ratio).
    """
    depth = start.size
    maxdepth = depth + steps + 1
    path = np.empty(maxdepth, np.int64)
    vecs = np.empty((maxdepth + 1, d), np.float64)
    for i in range(depth):
        path[i] = start[i]
    for i in range(depth + 1):
        if family == 0:
            key = uint64(0)
        else:
            key = vertex_key(env_seed, path, i)
        sample_vector(family, d, alpha, eps, points, weights, key, vecs[i])
    known = depth

    max_dist = depth
    returns = 0
    last_return = -1
    comp_sum = 0.0
    mg_sum = 0.0
    comp_min = np.inf
    comp_max = -np.inf
    window_start = steps - steps // 10
    if window_start < 1:
        window_start = 1
    tail_min = np.inf
    if want_trace:
        trace[0] = depth

    for t in range(steps):
        v = vecs[depth]
        if depth > 0:
            inv_lead = _inverse_letter(path[depth - 1], k)
            comp = 1.0 - 2.0 * v[inv_lead]
        else:
            inv_lead = -1
            comp = 1.0
        comp_sum += comp
        if comp < comp_min:
            comp_min = comp
        if comp > comp_max:
            comp_max = comp

        u = stream_unit(stream_seed, t)
        s = _pick_letter(v, d, u)

        if s == inv_lead:
            depth -= 1
            mg_sum += -1.0 - comp
        else:
            if not (depth < known and path[depth] == s):
                path[depth] = s
                if family == 0:
                    key = uint64(0)
                else:
                    key = vertex_key(env_seed, path, depth + 1)
                sample_vector(family, d, alpha, eps, points, weights, key, vecs[depth + 1])
                known = depth + 1
            depth += 1
            mg_sum += 1.0 - comp
            if depth > max_dist:
                max_dist = depth
        if depth == 0:
            returns += 1
            last_return = t + 1
        if t + 1 >= window_start:
            ratio = depth / (t + 1.0)
            if ratio < tail_min:
                tail_min = ratio
        if want_trace:
            trace[t + 1] = depth

    return depth, max_dist, returns, last_return, comp_sum, mg_sum, comp_min, comp_max, tail_min


@njit(cache=True, nogil=True)
def run_hit_probe(next_idx, is_boundary, vecs, d, n_traj, traj_seed):
    """Trajectories on a node-indexed truncated tree from the root
    until the boundary (hit) or the root (miss).  Returns the number of
    hits.  Per-trajectory stream seed is splitmix64(traj_seed XOR t)."""
    hits = 0
    for t in range(n_traj):
        seed = splitmix64(traj_seed ^ uint64(t))
        node = 0
        ctr = int64(0)
        while True:
            u = stream_unit(seed, ctr)
            ctr += 1
            s = _pick_letter(vecs[node], d, u)
            node = next_idx[node, s]
            if is_boundary[node]:
                hits += 1
                break
            if node == 0:
                break
    return hits


def warm_up() -> None:
    """Compile every kernel on tiny inputs (cached to disk afterwards)."""
    alpha = np.ones(3)
    pts = np.full((1, 3), 1.0 / 3.0)
    wts = np.ones(1)
    out = np.empty(3)
    letters = np.empty(4, np.int64)
    trace = np.empty(3, np.int64)
    seeds = np.zeros(2, np.uint64)
    lp = np.empty(2, np.float64)
    batch = np.empty((2, 3), np.float64)
    fold_serialized(np.uint64(1), np.zeros(1, np.uint8))
    vertex_key(np.uint64(1), letters, 0)
    for fam in (0, 1, 2, 3):
        sample_vector(fam, 3, alpha, 0.1, pts, wts, np.uint64(7), out)
        sample_marginal_batch(fam, 3, alpha, 0.1, pts, wts, np.uint64(7), batch)
        log_phi_batch(0, 3, fam, alpha, 0.1, pts, wts, np.uint64(3), 4, seeds, lp)
        run_walk(0, 3, fam, alpha, 0.1, pts, wts, np.uint64(3),
                 np.empty(0, np.int64), 2, np.uint64(5), trace, True)
    nxt = np.array([[1, 1, 1], [0, 2, 2], [0, 0, 0]], np.int64)
    bound = np.array([False, False, True])
    vv = np.full((3, 3), 1.0 / 3.0)
    run_hit_probe(nxt, bound, vv, 3, 4, np.uint64(9))
