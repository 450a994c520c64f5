"""Seeded virtual i.i.d. environments.

An Environment assigns every tree vertex an independent transition
vector with the same marginal law, without storing anything: the vector
at a word is recomputed on demand from a per-vertex key derived by
folding the word's serialized bytes into the environment seed.  Two
queries of the same (seed, word) agree bit-exactly, in any process, in
any order.

Four marginal families are supported (the general case of an arbitrary
law on the simplex is deliberately out of scope):

* ``simple_symmetric`` -- the point mass at the uniform vector.
* ``dirichlet`` -- Dirichlet(alpha), sampled by Marsaglia-Tsang gamma
  draws from the vertex's counter stream.
* ``finite_points`` -- a finite mixture of fixed vectors.
* ``elliptic_floor`` -- eps + (1 - eps*d) * Dirichlet(alpha)
  coordinatewise, the simplest family with a uniform ellipticity
  floor eps.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import EnvSpecError
from .group_words import Presentation, Word, serialize
from .rng import check_seed, fold_bytes

FAMILIES = ("simple_symmetric", "dirichlet", "finite_points", "elliptic_floor")
_FAMILY_CODES = {name: code for code, name in enumerate(FAMILIES)}

_SUM_TOLERANCE = 1e-12
_DEFAULT_CACHE_SIZE = 4096


class TransitionVector:
    """Probability vector over the d letters, indexed by letter code."""

    __slots__ = ("probs",)

    def __init__(self, probs) -> None:
        arr = np.ascontiguousarray(probs, dtype=np.float64)
        if arr.ndim != 1:
            raise EnvSpecError("transition vector must be one-dimensional")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise EnvSpecError("transition vector entries must be finite and nonnegative")
        total = float(arr.sum())
        if total <= 0.0:
            raise EnvSpecError("transition vector must have positive mass")
        if abs(total - 1.0) > _SUM_TOLERANCE:
            arr = arr / total
        self.probs = arr

    def __getitem__(self, code: int) -> float:
        return float(self.probs[code])

    def __len__(self) -> int:
        return self.probs.size

    def __repr__(self) -> str:
        return f"TransitionVector({self.probs.tolist()})"


@dataclass(frozen=True)
class EnvSpec:
    """Marginal law of the environment at a single vertex."""

    presentation: Presentation
    family: str
    alpha: tuple[float, ...] | None = None
    epsilon: float | None = None
    points: tuple[tuple[float, ...], ...] | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        d = self.presentation.d
        if self.family not in FAMILIES:
            raise EnvSpecError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.family == "simple_symmetric":
            self._forbid(alpha=self.alpha, epsilon=self.epsilon,
                         points=self.points, weights=self.weights)
        elif self.family == "dirichlet":
            self._forbid(epsilon=self.epsilon, points=self.points, weights=self.weights)
            self._check_alpha(d)
        elif self.family == "elliptic_floor":
            self._forbid(points=self.points, weights=self.weights)
            if self.alpha is None:
                object.__setattr__(self, "alpha", (1.0,) * d)
            self._check_alpha(d)
            if self.epsilon is None or not 0.0 < self.epsilon:
                raise EnvSpecError("elliptic_floor requires epsilon > 0")
            if self.epsilon * d >= 1.0:
                raise EnvSpecError(f"elliptic_floor requires epsilon*d < 1, got {self.epsilon * d}")
        else:  # finite_points
            self._forbid(alpha=self.alpha, epsilon=self.epsilon)
            if not self.points or self.weights is None or len(self.points) != len(self.weights):
                raise EnvSpecError("finite_points requires matching points and weights")
            normalized = []
            for p in self.points:
                vec = TransitionVector(np.asarray(p, dtype=np.float64))
                if len(vec) != d:
                    raise EnvSpecError(f"support vector has {len(vec)} entries, expected {d}")
                normalized.append(tuple(float(x) for x in vec.probs))
            w = np.asarray(self.weights, dtype=np.float64)
            if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
                raise EnvSpecError("finite_points weights must be positive and finite")
            total = float(w.sum())
            if abs(total - 1.0) > _SUM_TOLERANCE:
                w = w / total
            object.__setattr__(self, "points", tuple(normalized))
            object.__setattr__(self, "weights", tuple(float(x) for x in w))

    def _forbid(self, **fields) -> None:
        for name, value in fields.items():
            if value is not None:
                raise EnvSpecError(f"family {self.family!r} does not take {name!r}")

    def _check_alpha(self, d: int) -> None:
        if self.alpha is None or len(self.alpha) != d:
            raise EnvSpecError(f"alpha must have d={d} entries")
        if any(not (a > 0.0 and math.isfinite(a)) for a in self.alpha):
            raise EnvSpecError("alpha entries must be positive and finite")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    @classmethod
    def simple(cls, p: Presentation) -> "EnvSpec":
        return cls(p, "simple_symmetric")

    @classmethod
    def dirichlet(cls, p: Presentation, alpha) -> "EnvSpec":
        return cls(p, "dirichlet", alpha=tuple(alpha))

    @classmethod
    def elliptic_floor(cls, p: Presentation, epsilon: float, alpha=None) -> "EnvSpec":
        return cls(p, "elliptic_floor", alpha=None if alpha is None else tuple(alpha),
                   epsilon=epsilon)

    @classmethod
    def finite_points(cls, p: Presentation, points, weights) -> "EnvSpec":
        return cls(p, "finite_points", points=tuple(tuple(q) for q in points),
                   weights=tuple(weights))

    def kernel_args(self) -> tuple:
        """(family_code, d, alpha, eps, points, weights) arrays for the kernels."""
        d = self.presentation.d
        code = _FAMILY_CODES[self.family]
        alpha = np.asarray(self.alpha if self.alpha is not None else np.ones(d), dtype=np.float64)
        eps = float(self.epsilon) if self.epsilon is not None else 0.0
        if self.points is not None:
            points = np.asarray(self.points, dtype=np.float64)
            weights = np.asarray(self.weights, dtype=np.float64)
        else:
            points = np.zeros((1, d), dtype=np.float64)
            weights = np.ones(1, dtype=np.float64)
        return code, d, alpha, eps, points, weights


class Environment:
    """A full environment realization: spec + 64-bit seed.

    ``transition_at`` is a pure function of (spec, seed, word); the
    small internal cache is a synchronized, semantically invisible
    optimization (set cache_size=0 to disable it).
    """

    def __init__(self, spec: EnvSpec, seed: int, cache_size: int = _DEFAULT_CACHE_SIZE) -> None:
        self.spec = spec
        self.seed = check_seed(seed, "environment seed")
        self._args = spec.kernel_args()
        self._seed_u64 = np.uint64(seed)
        self._cache_size = cache_size
        self._cache: dict[Word, TransitionVector] = {}
        self._lock = threading.Lock()

    @property
    def presentation(self) -> Presentation:
        return self.spec.presentation

    def vertex_key(self, word: Word) -> int:
        return derive_vertex_key(self.seed, word)

    def transition_array(self, word: Word) -> np.ndarray:
        """Raw probability array at the word (no wrapper, not cached)."""
        code, d, alpha, eps, points, weights = self._args
        out = np.empty(d, dtype=np.float64)
        if code == _FAMILY_CODES["simple_symmetric"]:
            key = np.uint64(0)
        else:
            data = np.frombuffer(serialize(word), dtype=np.uint8)
            key = np.uint64(_kernels.fold_serialized(self._seed_u64, data))
        _kernels.sample_vector(code, d, alpha, eps, points, weights, key, out)
        return out

    def transition_at(self, word: Word) -> TransitionVector:
        if self._cache_size:
            with self._lock:
                hit = self._cache.get(word)
            if hit is not None:
                return hit
        vec = TransitionVector(self.transition_array(word))
        if self._cache_size:
            with self._lock:
                if len(self._cache) >= self._cache_size:
                    self._cache.clear()
                self._cache[word] = vec
        return vec


def transition_at(env: Environment, word: Word) -> TransitionVector:
    return env.transition_at(word)


def derive_vertex_key(seed: int, word: Word) -> int:
    """Per-vertex key: fold the serialized word into the seed.

    state <- seed; for each byte c of serialize(word):
    state <- splitmix64(state XOR (c + 0x9E3779B97F4A7C15)); finally one
    more splitmix64.  Pinned forever: golden values are committed and
    must stay portable across versions and platforms.
    """
    check_seed(seed)
    return fold_bytes(seed, serialize(word))


@dataclass(frozen=True)
class A2Report:
    """Log-moment check: analytic verdict per letter plus a Monte Carlo
    estimate of E|log w(e, s)| with its standard error."""

    finite: tuple[bool, ...]
    estimates: tuple[float, ...]
    stderrs: tuple[float, ...]
    samples: int

    @property
    def holds(self) -> bool:
        return all(self.finite)


def _analytic_a2(spec: EnvSpec) -> list[bool]:
    d = spec.presentation.d
    if spec.family == "finite_points":
        assert spec.points is not None
        return [all(p[s] > 0.0 for p in spec.points) for s in range(d)]
    # point mass, Dirichlet (all alpha > 0) and floored families all
    # have integrable log-coordinates
    return [True] * d


def check_a2(spec: EnvSpec, samples: int = 100_000, *, seed: int = 0) -> A2Report:
    """Analytic verdict per family plus a Monte Carlo moment estimate."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    check_seed(seed)
    finite = _analytic_a2(spec)
    code, d, alpha, eps, points, weights = spec.kernel_args()
    draws = np.empty((samples, d), dtype=np.float64)
    _kernels.sample_marginal_batch(code, d, alpha, eps, points, weights, np.uint64(seed), draws)
    estimates = []
    stderrs = []
    with np.errstate(divide="ignore"):
        logs = np.abs(np.log(draws))
    for s in range(d):
        col = logs[:, s]
        if not finite[s]:
            estimates.append(math.inf)
            stderrs.append(math.nan)
            continue
        estimates.append(float(col.mean()))
        stderrs.append(float(col.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0)
    return A2Report(tuple(finite), tuple(estimates), tuple(stderrs), samples)


def check_a3(spec: EnvSpec) -> float | None:
    """Largest certifiable uniform ellipticity floor, or None."""
    d = spec.presentation.d
    if spec.family == "simple_symmetric":
        return 1.0 / d
    if spec.family == "elliptic_floor":
        return float(spec.epsilon)  # entries are eps + positive slack
    if spec.family == "finite_points":
        assert spec.points is not None
        floor = min(min(p) for p in spec.points)
        return floor if floor > 0.0 else None
    return None  # Dirichlet mass reaches arbitrarily close to the boundary


__all__ = [
    "FAMILIES",
    "TransitionVector",
    "EnvSpec",
    "Environment",
    "transition_at",
    "derive_vertex_key",
    "A2Report",
    "check_a2",
    "check_a3",
]
