"""Cayley tree of order k as reduced words over k+1 involutive generators.

Vertices of the order-k Cayley tree are identified with the elements of the
free product of k+1 copies of Z/2: reduced words over the generator alphabet
{1, ..., k+1} in which no two adjacent letters are equal.  The empty word is
the tree origin.  Two vertices are neighbours exactly when they differ by one
generator on the right, so sphere / ball / successor enumeration is pure word
combinatorics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence


@dataclass(frozen=True)
class Word:
    """A reduced word; doubles as a tree vertex."""

    letters: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "e"
        return ".".join(str(a) for a in self.letters)

    @staticmethod
    def parse(text: str) -> "Word":
        text = text.strip()
        if text == "e" or text == "":
            return Word()
        return Word(tuple(int(part) for part in text.split(".")))


IDENTITY = Word()


def reduce_letters(letters: Sequence[int], k: int) -> Word:
    """Cancel adjacent equal letters (a_i^2 = e) until the word is reduced."""
    for a in letters:
        if not 1 <= a <= k + 1:
            raise ValueError(f"generator index {a} outside 1..{k + 1}")
    stack: list[int] = []
    for a in letters:
        if stack and stack[-1] == a:
            stack.pop()
        else:
            stack.append(a)
    return Word(tuple(stack))


def mul(a: Word, b: Word, k: int) -> Word:
    """Group product of reduced words (concatenate, then reduce)."""
    return reduce_letters(a.letters + b.letters, k)


def inverse(a: Word) -> Word:
    # every generator is an involution, so the inverse is the reversed word
    return Word(tuple(reversed(a.letters)))


def parent(w: Word) -> Word | None:
    """The neighbour of w on the path toward the origin (None at the origin)."""
    if not w.letters:
        return None
    return Word(w.letters[:-1])


def neighbors(w: Word, k: int) -> list[Word]:
    """All k+1 neighbours w·a_i, in generator order."""
    out = []
    for a in range(1, k + 2):
        if w.letters and w.letters[-1] == a:
            out.append(Word(w.letters[:-1]))
        else:
            out.append(Word(w.letters + (a,)))
    return out


def direct_successors(w: Word, k: int) -> list[Word]:
    """One-letter extensions that do not cancel, in generator order.

    The origin has k+1 direct successors, every other vertex has k.
    """
    last = w.letters[-1] if w.letters else None
    return [Word(w.letters + (a,)) for a in range(1, k + 2) if a != last]


def sphere(k: int, n: int) -> list[Word]:
    """All reduced words of length n, in breadth-first generator order."""
    if n < 0:
        raise ValueError("depth must be >= 0")
    level = [IDENTITY]
    for _ in range(n):
        level = [s for w in level for s in direct_successors(w, k)]
    return level


def ball(k: int, n: int) -> list[Word]:
    """All reduced words of length <= n, breadth-first."""
    out = [IDENTITY]
    level = [IDENTITY]
    for _ in range(n):
        level = [s for w in level for s in direct_successors(w, k)]
        out.extend(level)
    return out


def sphere_size(k: int, n: int) -> int:
    if n == 0:
        return 1
    return (k + 1) * k ** (n - 1)


def ball_size(k: int, n: int) -> int:
    return sum(sphere_size(k, d) for d in range(n + 1))


def vertex_addresses(k: int, n: int) -> list[tuple[Word, tuple[int, ...]]]:
    """Ball vertices with their successor-choice addresses from the origin.

    The address of a vertex records, level by level, the index of the chosen
    element of direct_successors (generator order), i.e. the digit sequence of
    the unique path from the origin.
    """
    out: list[tuple[Word, tuple[int, ...]]] = [(IDENTITY, ())]
    level: list[tuple[Word, tuple[int, ...]]] = [(IDENTITY, ())]
    for _ in range(n):
        nxt = []
        for w, addr in level:
            for i, s in enumerate(direct_successors(w, k)):
                nxt.append((s, addr + (i,)))
        out.extend(nxt)
        level = nxt
    return out


def path_vertices(digits: Sequence[int], k: int) -> list[Word]:
    """Vertex sequence from the origin for a successor-choice digit sequence.

    The first digit selects among the origin's k+1 successors, later digits
    among k successors, always in generator order.
    """
    out = [IDENTITY]
    w = IDENTITY
    for depth, d in enumerate(digits):
        succ = direct_successors(w, k)
        if not 0 <= d < len(succ):
            raise ValueError(f"digit {d} at depth {depth} outside 0..{len(succ) - 1}")
        w = succ[d]
        out.append(w)
    return out


@dataclass(frozen=True)
class SubgroupSpec:
    """Index-2 parity subgroup: words with an even count of letters from A.

    A = {1..k+1} gives the subgroup of even-length words; a proper A meets
    the generator set in its complement, so the subgroup contains generators
    exactly when A is proper.
    """

    k: int
    parity_set: frozenset[int]

    def __post_init__(self):
        full = set(range(1, self.k + 2))
        if not self.parity_set:
            raise ValueError("parity set must be nonempty")
        if not set(self.parity_set) <= full:
            raise ValueError("parity set must be a subset of the generators")

    @property
    def is_full(self) -> bool:
        return len(self.parity_set) == self.k + 1

    @property
    def contains_generator(self) -> bool:
        """Whether the subgroup contains some generator (I(K) nonempty)."""
        return not self.is_full

    def label(self) -> str:
        return "even_words" if self.is_full else "A=" + ",".join(map(str, sorted(self.parity_set)))


def coset_of(w: Word, spec: SubgroupSpec) -> int:
    """0 for the subgroup itself, 1 for the other coset."""
    return sum(1 for a in w.letters if a in spec.parity_set) % 2


def coset_profile(w: Word, spec: SubgroupSpec) -> tuple[int, tuple[int, int]]:
    """Coset of w and the counts of its k+1 neighbours in each coset."""
    c = coset_of(w, spec)
    q = [0, 0]
    for y in neighbors(w, spec.k):
        q[coset_of(y, spec)] += 1
    return c, (q[0], q[1])


@lru_cache(maxsize=None)
def _cached_ball(k: int, n: int) -> tuple[Word, ...]:
    return tuple(ball(k, n))


def cached_ball(k: int, n: int) -> tuple[Word, ...]:
    """Memoised ball enumeration (the hot path for the finite-volume oracles)."""
    return _cached_ball(k, n)
