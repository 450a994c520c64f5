"""Edge resistances, the uniform sphere sampler and the flow certificate.

The walk is reversible for the edge conductances built from transition
probability ratios along root geodesics.  ``log_phi`` evaluates the log
of a vertex's parent-edge resistance (reciprocal conductance); all
arithmetic stays in the log domain because the value is exponential in
the depth.

The sphere sampler runs the letter chain whose partial products are
uniformly distributed over each sphere: first letter uniform, each next
letter uniform over everything except the previous letter's inverse.
The flow report Monte Carlos the log-resistance of uniform sphere
vertices and, per tested depth, reports the fraction below the decay
threshold together with the geometric flow lower bound it implies.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .environment import Environment
from .errors import A2ViolatedError, ParameterError, WordError
from .group_words import Presentation, ROOT, Word, sphere_size
from .rng import SplitMixStream, check_seed, splitmix64


@dataclass(frozen=True)
class PathToVertex:
    """The geodesic from the root: letters in application order and the
    intermediate words (words[0] = root, words[n] = the vertex)."""

    presentation: Presentation
    letters: tuple[int, ...]
    words: tuple[Word, ...]

    def __len__(self) -> int:
        return len(self.letters)

    @classmethod
    def from_letters(cls, p: Presentation, letters) -> "PathToVertex":
        letters = tuple(letters)
        for code in letters:
            p.check_letter(code)
        for m in range(1, len(letters)):
            if letters[m] == p.inverse(letters[m - 1]):
                raise WordError(f"letters cancel at position {m}: not a geodesic")
        words = [ROOT]
        for code in letters:
            words.append((code,) + words[-1])
        return cls(p, letters, tuple(words))

    @classmethod
    def from_word(cls, p: Presentation, word: Word) -> "PathToVertex":
        return cls.from_letters(p, tuple(reversed(word)))

    @property
    def vertex(self) -> Word:
        return self.words[-1]


def log_phi(env: Environment, path: PathToVertex) -> float:
    """log of the parent-edge resistance of the path's endpoint:
    -log w0(l1) + sum_k [log wk(inv lk) - log wk(l(k+1))]."""
    n = len(path)
    if n < 1:
        raise ValueError("path must be nonempty")
    p = path.presentation
    vec = env.transition_at(ROOT)
    p0 = vec[path.letters[0]]
    if p0 <= 0.0:
        raise A2ViolatedError("zero transition probability at the root")
    acc = -math.log(p0)
    for k in range(1, n):
        vec = env.transition_at(path.words[k])
        back = vec[p.inverse(path.letters[k - 1])]
        forward = vec[path.letters[k]]
        if back <= 0.0 or forward <= 0.0:
            raise A2ViolatedError(f"zero transition probability at depth {k}")
        acc += math.log(back) - math.log(forward)
    return acc


def conductance_edge(env: Environment, path: PathToVertex) -> float:
    """Conductance of the endpoint's parent edge: exp(-log_phi)."""
    return math.exp(-log_phi(env, path))


@dataclass
class SphereSampler:
    """Letter chain state: presentation, counter stream, last letter."""

    presentation: Presentation
    stream: SplitMixStream
    current_letter: int | None = None

    @classmethod
    def seeded(cls, p: Presentation, seed: int) -> "SphereSampler":
        return cls(p, SplitMixStream(check_seed(seed)))

    def _first_letter(self) -> int:
        d = self.presentation.d
        j = int(self.stream.next_unit() * d)
        return min(j, d - 1)

    def _next_letter(self, prev: int) -> int:
        p = self.presentation
        excl = p.inverse(prev)
        j = int(self.stream.next_unit() * (p.d - 1))
        j = min(j, p.d - 2)
        return j if j < excl else j + 1

    def sample_letters(self, n: int) -> list[int]:
        if n < 1:
            raise ValueError("n must be >= 1")
        letters = [self._first_letter()]
        for _ in range(n - 1):
            letters.append(self._next_letter(letters[-1]))
        self.current_letter = letters[-1]
        return letters

    def sample_path(self, n: int) -> PathToVertex:
        """A uniform vertex of the depth-n sphere, as its geodesic."""
        return PathToVertex.from_letters(self.presentation, self.sample_letters(n))


@dataclass(frozen=True)
class OccupationReport:
    counts: np.ndarray
    n: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n


def occupation_frequencies(sampler: SphereSampler, n: int) -> OccupationReport:
    """Letter occupation counts of one chain run of length n."""
    letters = sampler.sample_letters(n)
    counts = np.bincount(letters, minlength=sampler.presentation.d).astype(np.int64)
    return OccupationReport(counts, n)


def default_delta(d: int) -> float:
    """Midpoint of the legal decay interval (1/(d-1), 1)."""
    return (1.0 / (d - 1) + 1.0) / 2.0


def _check_delta(d: int, delta: float) -> None:
    lo = 1.0 / (d - 1)
    if not lo < delta < 1.0:
        raise ParameterError(
            f"delta must lie strictly inside (1/(d-1), 1) = ({lo:.6g}, 1), got {delta}"
        )


def flow_lower_bound(p: Presentation, delta: float, n: int) -> float:
    """(1/2) * d * (d-1)^(n-1) * delta^n, the flow mass the favorable
    half of the sphere guarantees; grows geometrically iff (d-1)*delta > 1."""
    return 0.5 * float(sphere_size(p, n)) * delta**n


@dataclass(frozen=True)
class FlowRow:
    n: int
    samples: int
    mean_log_phi_over_n: float
    stderr: float
    fraction_below: float
    flow_lower_bound: float


@dataclass(frozen=True)
class FlowReport:
    delta: float
    rows: tuple[FlowRow, ...]
    growth_factor: float
    smallest_settled_n: int | None


def flow_report(
    env: Environment,
    delta: float,
    lengths,
    samples: int,
    *,
    chain_seed: int = 0,
    threads: int = 1,
) -> FlowReport:
    """Monte Carlo log-resistance statistics over uniform sphere vertices.

    Per depth n: the mean of (1/n) log-resistance with its standard
    error, the fraction of samples with resistance below delta^(-n/2),
    and the geometric flow lower bound.  Chain streams are
    splitmix64(chain_seed XOR sample_index), disjoint across depths.
    """
    p = env.presentation
    _check_delta(p.d, delta)
    if samples < 100:
        raise ParameterError(f"samples must be >= 100, got {samples}")
    lengths = [int(n) for n in lengths]
    if not lengths or any(n < 1 for n in lengths):
        raise ParameterError("lengths must be nonempty positive depths")
    check_seed(chain_seed, "chain seed")

    code, d, alpha, eps, points, weights = env.spec.kernel_args()
    env_seed = np.uint64(env.seed)
    log_inv_delta = math.log(1.0 / delta)

    rows = []
    for n_index, n in enumerate(lengths):
        base = n_index * samples
        seeds = np.array(
            [splitmix64(chain_seed ^ (base + j)) for j in range(samples)], dtype=np.uint64
        )
        values = np.empty(samples, dtype=np.float64)

        def run_chunk(bounds) -> None:
            lo, hi = bounds
            _kernels.log_phi_batch(
                p.k, d, code, alpha, eps, points, weights,
                env_seed, n, seeds[lo:hi], values[lo:hi],
            )

        if threads > 1:
            chunk = -(-samples // threads)
            spans = [(i, min(i + chunk, samples)) for i in range(0, samples, chunk)]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(run_chunk, spans))
        else:
            run_chunk((0, samples))

        if np.any(np.isnan(values)):
            raise A2ViolatedError("zero transition probability on a sampled path")
        scaled = values / n
        rows.append(
            FlowRow(
                n=n,
                samples=samples,
                mean_log_phi_over_n=float(scaled.mean()),
                stderr=float(scaled.std(ddof=1) / math.sqrt(samples)),
                fraction_below=float(np.mean(values < (n / 2.0) * log_inv_delta)),
                flow_lower_bound=flow_lower_bound(p, delta, n),
            )
        )

    smallest = None
    for row in rows:
        if row.fraction_below > 0.5:
            if smallest is None:
                smallest = row.n
        else:
            smallest = None
    return FlowReport(
        delta=delta,
        rows=tuple(rows),
        growth_factor=(p.d - 1) * delta,
        smallest_settled_n=smallest,
    )
