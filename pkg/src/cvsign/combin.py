"""Binomial numerics and set-partition enumeration.

Log-domain binomials stay accurate for arguments up to ~1e9: factorial
ratios are paired before evaluation so that nearly-cancelling ``lgamma``
terms are never subtracted directly.  Out-of-range binomials follow the
zero convention ``C(l, j) = 0`` for ``j < 0``, ``l < 0`` or ``j > l``
(log value ``-inf``).

Modes are labelled ``0 .. n-1`` throughout.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import CapacityError, DomainError

EXACT_CAP = 1000
SUBSET_CAP = 24
PARTITION_CAP = 12

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def comb0(l: int, j: int) -> int:
    """``C(l, j)`` with the zero convention for out-of-range arguments."""
    if j < 0 or l < 0 or j > l:
        return 0
    return math.comb(l, j)


def _stirling_tail(x: float) -> float:
    x2 = x * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x


def log_factorial_ratio(a: int, b: int) -> float:
    """``ln(a! / b!)`` for ``a >= b >= 0``, without cancellation."""
    if a < b:
        return -log_factorial_ratio(b, a)
    d = a - b
    if d == 0:
        return 0.0
    if a <= EXACT_CAP:
        return math.log(math.perm(a, d))
    if d <= 64:
        return math.fsum(math.log(b + i) for i in range(1, d + 1))
    if b < EXACT_CAP:
        return math.lgamma(a + 1) - math.lgamma(b + 1)
    # Stirling series for lgamma(x) - lgamma(y), x = a+1, y = b+1; y >= 1000
    # keeps the truncated tail below 1e-24.
    x, y = a + 1.0, b + 1.0
    main = (x - 0.5) * math.log1p(d / y) + d * math.log(y) - d
    return main + (_stirling_tail(x) - _stirling_tail(y))


def log_binomial(l: int, j: int) -> float:
    """``ln C(l, j)``; ``-inf`` encodes the zero convention."""
    if j < 0 or l < 0 or j > l:
        return -math.inf
    if l <= EXACT_CAP:
        return math.log(math.comb(l, j))
    k = min(j, l - j)
    if k == 0:
        return 0.0
    return log_factorial_ratio(l, l - k) - log_factorial_ratio(k, 0)


@dataclass(frozen=True)
class LogRatio:
    """Nonnegative ratio of binomial products held as its natural log.

    ``exact`` carries the rational value when every argument was small
    enough for exact evaluation.
    """

    log_abs: float
    exact: Fraction | None = None

    @property
    def is_zero(self) -> bool:
        return self.log_abs == -math.inf

    def value(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        return math.exp(self.log_abs)


def _factorial_terms(num, den):
    plus, minus = [], []
    for l, j in num:
        plus.append(l)
        minus.extend((j, l - j))
    for l, j in den:
        minus.append(l)
        plus.extend((j, l - j))
    width = max(len(plus), len(minus))
    plus += [0] * (width - len(plus))
    minus += [0] * (width - len(minus))
    return sorted(plus), sorted(minus)


def binom_ratio(num, den) -> LogRatio:
    """``prod C(l, j) over num / prod C(l, j) over den``.

    Parameters
    ----------
    num, den : sequence of (l, j) pairs

    Raises
    ------
    ZeroDivisionError
        If any denominator binomial vanishes.
    """
    num = [(int(l), int(j)) for l, j in num]
    den = [(int(l), int(j)) for l, j in den]
    if any(comb_is_zero(l, j) for l, j in den):
        raise ZeroDivisionError("binomial ratio has a vanishing denominator")
    if any(comb_is_zero(l, j) for l, j in num):
        exact = Fraction(0) if all(l <= EXACT_CAP for l, _ in num + den) else None
        return LogRatio(-math.inf, exact)
    if all(l <= EXACT_CAP for l, _ in num + den):
        p = math.prod(math.comb(l, j) for l, j in num)
        q = math.prod(math.comb(l, j) for l, j in den)
        frac = Fraction(p, q)
        return LogRatio(math.log(frac.numerator) - math.log(frac.denominator), frac)
    plus, minus = _factorial_terms(num, den)
    return LogRatio(math.fsum(log_factorial_ratio(a, b) for a, b in zip(plus, minus)))


def comb_is_zero(l: int, j: int) -> bool:
    return j < 0 or l < 0 or j > l


def log_sum_exp(logs) -> float:
    """``ln(sum(exp(x)))`` with max factoring and compensated summation."""
    logs = [x for x in logs if x != -math.inf]
    if not logs:
        return -math.inf
    top = max(logs)
    return top + math.log(math.fsum(math.exp(x - top) for x in logs))


# -- subsets and partitions --------------------------------------------------


def enumerate_subsets(n: int, k: int, cap: int = SUBSET_CAP) -> Iterator[tuple[int, ...]]:
    """All ``k``-subsets of ``range(n)`` in lexicographic order."""
    if n > cap:
        raise CapacityError(f"subset enumeration for n={n} exceeds cap {cap}")
    if not 0 < k < n:
        raise DomainError(f"need 0 < k < n, got n={n}, k={k}")
    return itertools.combinations(range(n), k)


@dataclass(frozen=True)
class Partition:
    """A split of ``range(n)`` into disjoint nonempty blocks.

    Blocks are stored sorted, and ordered by their smallest element, so
    equal partitions compare equal.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else -1))
        object.__setattr__(self, "blocks", blocks)
        seen = [x for b in blocks for x in b]
        if any(len(b) == 0 for b in blocks):
            raise DomainError("partition has an empty block")
        if sorted(seen) != list(range(self.n)):
            raise DomainError(f"blocks {blocks} do not partition range({self.n})")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def labels(self) -> list[int]:
        """Block index of every mode."""
        out = [0] * self.n
        for i, b in enumerate(self.blocks):
            for s in b:
                out[s] = i
        return out

    def __str__(self):
        # 1-based mode labels, e.g. "1|23"
        sep = "," if self.n > 9 else ""
        return "|".join(sep.join(str(s + 1) for s in b) for b in self.blocks)


_KINDS = ("all_bipartitions", "fixed_size_bipartition", "k_separable",
          "k_separable_sizes", "j_producible")


@dataclass(frozen=True)
class PartitionFamily:
    """A separability class as a set of partitions of ``range(n)``.

    Use the classmethod constructors rather than the raw fields.
    """

    n: int
    kind: str
    param: object = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown family kind {self.kind!r}")
        if not isinstance(self.n, int) or self.n < 2:
            raise DomainError(f"family needs n >= 2, got {self.n}")
        n, p = self.n, self.param
        if self.kind == "fixed_size_bipartition" and not 1 <= p <= n - 1:
            raise DomainError(f"bipartition size must be in [1, n-1], got {p}")
        if self.kind == "k_separable" and not 1 <= p <= n:
            raise DomainError(f"K must be in [1, n], got {p}")
        if self.kind == "k_separable_sizes":
            if any(s < 1 for s in p) or sum(p) != n:
                raise DomainError(f"block sizes {p} must be positive and sum to {n}")
        if self.kind == "j_producible" and not 1 <= p <= n:
            raise DomainError(f"J must be in [1, n], got {p}")

    @classmethod
    def all_bipartitions(cls, n):
        return cls(n, "all_bipartitions")

    @classmethod
    def fixed_size_bipartition(cls, n, n0):
        return cls(n, "fixed_size_bipartition", int(n0))

    @classmethod
    def k_separable(cls, n, k):
        return cls(n, "k_separable", int(k))

    @classmethod
    def k_separable_sizes(cls, n, sizes):
        return cls(n, "k_separable_sizes", tuple(sorted((int(s) for s in sizes), reverse=True)))

    @classmethod
    def j_producible(cls, n, j):
        return cls(n, "j_producible", int(j))

    def accepts(self, p: Partition) -> bool:
        if p.n != self.n:
            return False
        sizes = p.sizes
        if self.kind == "all_bipartitions":
            return len(sizes) == 2
        if self.kind == "fixed_size_bipartition":
            return len(sizes) == 2 and self.param in sizes
        if self.kind == "k_separable":
            return len(sizes) == self.param
        if self.kind == "k_separable_sizes":
            return Counter(sizes) == Counter(self.param)
        return max(sizes) <= self.param

    def partitions(self, cap: int = PARTITION_CAP) -> tuple[Partition, ...]:
        """All member partitions, in a deterministic order (cached)."""
        key = ("parts", cap)
        if key not in self._cache:
            self._cache[key] = tuple(enumerate_partitions(self, cap=cap))
        return self._cache[key]

    def describe(self) -> str:
        if self.param is None:
            return f"{self.kind}(n={self.n})"
        return f"{self.kind}(n={self.n}, {self.param})"


def _block_rules(family: PartitionFamily):
    """``(choices, accept, initial_state)`` driving the block generator.

    ``choices(remaining, state)`` yields ``(size, next_state)`` for the
    block containing the smallest remaining element.
    """
    n, kind, p = family.n, family.kind, family.param
    if kind in ("all_bipartitions", "k_separable"):
        k = 2 if kind == "all_bipartitions" else p

        def choices(rem, left):
            for s in range(1, rem - (left - 1) + 1):
                if left > 1 or s == rem:
                    yield s, left - 1

        return choices, lambda left: left == 0, k
    if kind in ("fixed_size_bipartition", "k_separable_sizes"):
        sizes = (p, n - p) if kind == "fixed_size_bipartition" else p

        def choices(rem, bag):
            for s in sorted(set(bag)):
                if s <= rem:
                    nxt = list(bag)
                    nxt.remove(s)
                    yield s, tuple(nxt)

        return choices, lambda bag: not bag, tuple(sorted(sizes))

    def choices(rem, state):
        for s in range(1, min(p, rem) + 1):
            yield s, state

    return choices, lambda state: True, None


def enumerate_partitions(family: PartitionFamily, cap: int = PARTITION_CAP) -> Iterator[Partition]:
    """Yield every partition in ``family`` exactly once."""
    if family.n > cap:
        raise CapacityError(f"partition enumeration for n={family.n} exceeds cap {cap}")
    choices, accept, state0 = _block_rules(family)
    n = family.n

    def rec(rem, state, acc):
        if not rem:
            if accept(state):
                yield Partition(n, tuple(acc))
            return
        head, rest = rem[0], rem[1:]
        for s, nxt in choices(len(rem), state):
            for others in itertools.combinations(rest, s - 1):
                block = (head,) + others
                left = tuple(x for x in rest if x not in others)
                yield from rec(left, nxt, acc + [block])

    yield from rec(tuple(range(n)), state0, [])
