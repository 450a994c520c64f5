"""Exact word algebra for the d-regular tree.

Vertices are reduced words over a symmetric generator set with k
generator/inverse pairs and r self-inverse generators (degree
d = 2k + r).  A word is stored as a tuple of letter codes with the most
recently applied letter first, so the empty tuple is the root and the
word length is the graph distance to the root.

Letter codes are fixed: codes 2i-2 and 2i-1 are the i-th pair
(generator, inverse) for 1 <= i <= k, and code 2k+j-1 is the j-th
self-inverse generator for 1 <= j <= r.  This encoding is load-bearing:
it feeds the byte serialization and hence every derived environment
key, so it must never change.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidLetterError, NoParentError, PresentationError, WordError

Word = tuple[int, ...]

ROOT: Word = ()

# letters must fit in one byte of the serialized form
MAX_DEGREE = 255


@dataclass(frozen=True)
class Presentation:
    """Shape of the generator set: k two-sided generators, r involutions."""

    k: int
    r: int

    def __post_init__(self) -> None:
        if self.k < 0 or self.r < 0:
            raise PresentationError(f"k and r must be nonnegative, got k={self.k}, r={self.r}")
        if self.k + self.r < 2:
            raise PresentationError(f"need at least two free factors, got k+r={self.k + self.r}")
        if self.d < 3:
            raise PresentationError(f"degree d=2k+r must be >= 3, got d={self.d}")
        if self.d > MAX_DEGREE:
            raise PresentationError(
                f"degree d={self.d} exceeds {MAX_DEGREE}; letters must fit one serialized byte"
            )

    @property
    def d(self) -> int:
        return 2 * self.k + self.r

    def check_letter(self, code: int) -> None:
        if not 0 <= code < self.d:
            raise InvalidLetterError(f"letter code {code} outside [0, {self.d})")

    def inverse(self, code: int) -> int:
        """Inverse letter; an involution, and the identity on the r involutions."""
        self.check_letter(code)
        return code ^ 1 if code < 2 * self.k else code

    def letter_label(self, code: int) -> str:
        self.check_letter(code)
        if code < 2 * self.k:
            i = code // 2 + 1
            return f"a{i}" if code % 2 == 0 else f"a{i}^-1"
        return f"b{code - 2 * self.k + 1}"


def is_reduced(p: Presentation, word: Word) -> bool:
    try:
        for code in word:
            p.check_letter(code)
    except InvalidLetterError:
        return False
    return all(word[m] != p.inverse(word[m + 1]) for m in range(len(word) - 1))


def validate_word(p: Presentation, word: Word) -> None:
    for code in word:
        p.check_letter(code)
    for m in range(len(word) - 1):
        if word[m] == p.inverse(word[m + 1]):
            raise WordError(f"word {word} not reduced at position {m}")


def apply_letter(p: Presentation, word: Word, letter: int) -> Word:
    """Reduced form of letter*word: cancel against the leading letter or prepend."""
    p.check_letter(letter)
    if word and word[0] == p.inverse(letter):
        return word[1:]
    return (letter,) + word


def neighbors(p: Presentation, word: Word) -> list[tuple[int, Word]]:
    """All d pairs (letter, letter*word), reduced."""
    return [(s, apply_letter(p, word, s)) for s in range(p.d)]


def parent(p: Presentation, word: Word) -> tuple[int, Word]:
    """The letter stepping toward the root and the resulting word."""
    if not word:
        raise NoParentError("the root has no parent")
    return p.inverse(word[0]), word[1:]


def sphere_size(p: Presentation, n: int) -> int:
    """Number of vertices at distance n: 1 for n=0, else d*(d-1)^(n-1)."""
    if n < 0:
        raise ValueError(f"distance must be nonnegative, got {n}")
    if n == 0:
        return 1
    return p.d * (p.d - 1) ** (n - 1)


def serialize(word: Word) -> bytes:
    """Canonical injective byte encoding: LEB128 length, then one byte
    per letter in storage order (most recently applied first)."""
    out = bytearray()
    n = len(word)
    while True:
        b = n & 0x7F
        n >>= 7
        out.append(b | 0x80 if n else b)
        if not n:
            break
    out.extend(word)
    return bytes(out)


def deserialize(p: Presentation, data: bytes) -> Word:
    """Inverse of serialize; validates the decoded word."""
    n = 0
    shift = 0
    i = 0
    while True:
        if i >= len(data):
            raise WordError("truncated length prefix")
        b = data[i]
        i += 1
        n |= (b & 0x7F) << shift
        shift += 7
        if not b & 0x80:
            break
    if len(data) - i != n:
        raise WordError(f"length prefix {n} does not match {len(data) - i} letter bytes")
    word = tuple(data[i:])
    validate_word(p, word)
    return word
