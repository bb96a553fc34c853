"""Wick pairings of products of block random matrix elements.

Slots ``1..n+m`` label the random factors of ``conj(L^m) L^n`` in order:
slots ``1..m`` are primed (from the bra), ``m+1..n+m`` unprimed. Factor ``s``
carries the energy labels ``(b[s-1], b[s])`` of the boundary variables

    b[0..n+m] = E'_m, E'_(m-1), ..., E'_1, E_0, E_1, ..., E_n

so ``E'_0`` and ``E_0`` are the same variable. Contracting slots ``s < t``
imposes ``b[s-1] = b[t]`` and ``b[s] = b[t-1]``; the site labels obey the
same equalities.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

MAX_ENUMERATION_K = 8
MAX_MOMENT_K = 6
MAX_LEADING_ORDER_K = 5

Pair = Tuple[int, int]


class GraphClass(enum.Enum):
    SIMPLE = "simple"
    NESTED = "nested"
    CROSSING = "crossing"


@dataclass(frozen=True)
class Pairing:
    pairs: Tuple[Pair, ...]
    split: Tuple[int, int]

    def __post_init__(self):
        n, m = self.split
        if n < 0 or m < 0:
            raise ValueError(f"split must be nonnegative, got {self.split}")
        if (n + m) % 2:
            raise ValueError(f"n + m must be even, got {n} + {m}")
        slots = sorted(x for pair in self.pairs for x in pair)
        if slots != list(range(1, n + m + 1)):
            raise ValueError(f"pairs {self.pairs} do not partition slots 1..{n + m}")
        if any(i >= j for i, j in self.pairs):
            raise ValueError("each pair must be written (i, j) with i < j")
        object.__setattr__(self, "pairs", tuple(sorted(tuple(p) for p in self.pairs)))

    @property
    def order(self) -> int:
        return sum(self.split)

    @property
    def n(self) -> int:
        return self.split[0]

    @property
    def m(self) -> int:
        return self.split[1]

    def outer_contractions(self) -> int:
        m = self.m
        return sum(1 for i, j in self.pairs if i <= m < j)


def double_factorial(n: int) -> int:
    """``n!!`` with ``(-1)!! = 0!! = 1``."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def _matchings(slots: Tuple[int, ...]) -> Iterator[Tuple[Pair, ...]]:
    # smallest unpaired slot takes each larger partner in turn
    if not slots:
        yield ()
        return
    first, rest = slots[0], slots[1:]
    for idx, partner in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1 :]
        for tail in _matchings(remaining):
            yield ((first, partner),) + tail


def enumerate_pairings(k: int, split: Optional[Tuple[int, int]] = None) -> Iterator[Pairing]:
    """Every perfect matching of ``2k`` slots, each exactly once, in a fixed order."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > MAX_ENUMERATION_K:
        raise ValueError(f"k={k} exceeds the enumeration limit {MAX_ENUMERATION_K}")
    if split is None:
        split = (2 * k, 0)
    if sum(split) != 2 * k:
        raise ValueError(f"split {split} does not sum to 2k={2 * k}")
    for pairs in _matchings(tuple(range(1, 2 * k + 1))):
        yield Pairing(pairs, split)


def is_crossing(pairs: Sequence[Pair]) -> bool:
    for (i, j), (k, l) in itertools.combinations(pairs, 2):
        if i < k < j < l or k < i < l < j:
            return True
    return False


def classify(p: Pairing) -> GraphClass:
    if is_crossing(p.pairs):
        return GraphClass.CROSSING
    m = p.m
    for a, b in itertools.permutations(p.pairs, 2):
        i, j = a
        k, l = b
        if i < k < l < j and (j <= m or m < i):
            return GraphClass.NESTED
    return GraphClass.SIMPLE


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def classes(self) -> List[Tuple[int, ...]]:
        groups: Dict[int, List[int]] = {}
        for x in range(len(self.parent)):
            groups.setdefault(self.find(x), []).append(x)
        return [tuple(g) for _, g in sorted(groups.items())]


def variable_name(index: int, split: Tuple[int, int]) -> str:
    """Label of boundary variable ``b[index]``: ``E'_j`` or ``E_i``."""
    n, m = split
    if index < m:
        return f"E'_{m - index}"
    return f"E_{index - m}"


def _constraint_forest(pairs: Sequence[Pair], size: int, cyclic: bool) -> _UnionFind:
    uf = _UnionFind(size + 1)
    for s, t in pairs:
        uf.union(s - 1, t)
        uf.union(s, t - 1)
    if cyclic:
        uf.union(0, size)
    return uf


def kappa(p: Pairing) -> Tuple[int, List[Tuple[int, ...]]]:
    """Number of independent energy variables and their classes.

    Classes hold boundary indices into ``b[0..n+m]``; ``variable_name`` turns
    an index into its ``E``/``E'`` label.
    """
    classes = _constraint_forest(p.pairs, p.order, cyclic=False).classes()
    return len(classes), classes


def ends_meet_check(p: Pairing) -> bool:
    """True when ``E'_m`` and ``E_n`` end up in the same class."""
    uf = _constraint_forest(p.pairs, p.order, cyclic=False)
    return uf.find(0) == uf.find(p.order)


@dataclass(frozen=True)
class GraphSummary:
    kappa: int
    graph_class: GraphClass
    nbar: int
    nprime: int
    multiplicities: Tuple[Tuple[int, int], ...]
    outer_contractions: int
    classes: Tuple[Tuple[int, ...], ...] = field(repr=False)

    def one_sided(self, minimum: int = 2) -> bool:
        """Whether some variable appears only on one side, ``minimum`` times or more."""
        return any(
            (left == 0 and right >= minimum) or (right == 0 and left >= minimum)
            for left, right in self.multiplicities
        )


def multiplicities(p: Pairing) -> GraphSummary:
    """Left/right propagator multiplicities of each independent variable.

    Left counts the unprimed propagators ``E_0..E_n``, right the primed ones
    ``E'_0..E'_m``; ``E_0 = E'_0`` therefore contributes to both sides.
    """
    graph_class = classify(p)
    if graph_class is GraphClass.CROSSING:
        raise ValueError("multiplicities are only defined for non-crossing pairings")
    n, m = p.split
    k, classes = kappa(p)
    mult = []
    for cls in classes:
        left = sum(1 for b in cls if b >= m)
        right = sum(1 for b in cls if b <= m)
        mult.append((left, right))
    nprime = sum(1 for left, right in mult if left + right == 1)
    heavy = sum(1 for left, right in mult if left + right > 1)
    return GraphSummary(
        kappa=k,
        graph_class=graph_class,
        nbar=heavy - 1,
        nprime=nprime,
        multiplicities=tuple(mult),
        outer_contractions=p.outer_contractions(),
        classes=tuple(classes),
    )


def count_by_class(n: int, m: int) -> Tuple[int, int, int]:
    """``(simple, nested, crossing)`` counts over all pairings of the ``(n, m)`` split."""
    if n < 0 or m < 0 or (n + m) % 2:
        raise ValueError(f"n + m must be even and nonnegative, got ({n}, {m})")
    k = (n + m) // 2
    if k > MAX_ENUMERATION_K:
        raise ValueError(f"(n+m)/2={k} exceeds the enumeration limit {MAX_ENUMERATION_K}")
    counts = Counter(classify(p) for p in enumerate_pairings(k, (n, m)))
    return counts[GraphClass.SIMPLE], counts[GraphClass.NESTED], counts[GraphClass.CROSSING]


def _site_assignments(classes: List[Tuple[int, ...]], size: int) -> int:
    """Assignments of sites {1,2} to the classes with every hop changing site."""
    owner = {}
    for c, members in enumerate(classes):
        for b in members:
            owner[b] = c
    edges = {(owner[s - 1], owner[s]) for s in range(1, size + 1)}
    if any(a == b for a, b in edges):
        return 0
    count = 0
    for colors in itertools.product((0, 1), repeat=len(classes)):
        if all(colors[a] != colors[b] for a, b in edges):
            count += 1
    return count


def trace_kappa(pairs: Sequence[Pair], size: int) -> Tuple[int, List[Tuple[int, ...]]]:
    """Independent variables with the trace closure ``b[0] = b[size]``."""
    classes = _constraint_forest(pairs, size, cyclic=True).classes()
    return len(classes), classes


def moment_terms(k: int) -> Dict[Tuple[bool, int], int]:
    """Pairing expansion of ``E Tr V^(2k)`` grouped by (crossing, kappa).

    Values are the summed site-assignment counts, so the moment equals
    ``sum(count * N**(kappa - k))``.
    """
    if k < 0 or k > MAX_MOMENT_K:
        raise ValueError(f"k={k} outside the supported range 0..{MAX_MOMENT_K}")
    size = 2 * k
    terms: Counter = Counter()
    for pairs in _matchings(tuple(range(1, size + 1))):
        kap, classes = trace_kappa(pairs, size)
        weight = _site_assignments(classes, size)
        if weight:
            terms[(is_crossing(pairs), kap)] += weight
    return dict(terms)


def _evaluate(terms: Dict[Tuple[bool, int], int], k: int, n_levels: int, crossing=None) -> Fraction:
    total = Fraction(0)
    for (cross, kap), weight in terms.items():
        if crossing is None or cross == crossing:
            total += weight * Fraction(n_levels) ** (kap - k)
    return total


def moment_from_pairings(k: int, n_levels: int) -> float:
    """``E Tr V^(2k)`` as the pairing sum of ``N^(kappa - k)`` times site assignments."""
    if n_levels < 1:
        raise ValueError("n_levels must be positive")
    if k == 0:
        return float(2 * n_levels)
    return float(_evaluate(moment_terms(k), k, n_levels))


def moment_monte_carlo(k: int, n_levels: int, samples: int, seed: int = 0, odd: bool = False):
    """Sample mean and standard error of ``Tr V^(2k)`` (``Tr V^(2k+1)`` with ``odd``)."""
    if samples < 2:
        raise ValueError("need at least two samples for a standard error")
    from .model import SpectrumConfig, sample_interaction

    config = SpectrumConfig(n_levels)
    seeds = np.random.SeedSequence(seed).spawn(samples)
    values = np.empty(samples)
    for i, ss in enumerate(seeds):
        block = sample_interaction(config, np.random.default_rng(ss).integers(2**63)).upper_block
        if odd:
            v = np.zeros((2 * n_levels, 2 * n_levels), dtype=complex)
            v[:n_levels, n_levels:] = block
            v[n_levels:, :n_levels] = block.conj().T
            values[i] = np.trace(np.linalg.matrix_power(v, 2 * k + 1)).real
        else:
            sv = np.linalg.svd(block, compute_uv=False)
            values[i] = 2.0 * np.sum(sv ** (2 * k))
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples))


@dataclass(frozen=True)
class LeadingOrderReport:
    k: int
    n_values: Tuple[int, ...]
    noncrossing_over_n: Tuple[float, ...]
    crossing_over_n: Tuple[float, ...]
    crossing_kappas: Tuple[int, ...]
    shrink_factors: Tuple[Optional[float], ...]

    @property
    def noncrossing_constant(self) -> bool:
        ref = self.noncrossing_over_n[0]
        return all(abs(x - ref) <= 1e-12 * max(1.0, abs(ref)) for x in self.noncrossing_over_n)

    @property
    def crossing_kappa_bound(self) -> bool:
        return all(kap <= self.k - 1 for kap in self.crossing_kappas)


def leading_order_check(k: int, n_values: Sequence[int]) -> LeadingOrderReport:
    """Split the moment into planar and crossing parts and track their N-scaling.

    ``shrink_factors[i]`` is ``(crossing/N at N_i) / (crossing/N at N_{i+1})``;
    ``None`` where the crossing part vanishes identically.
    """
    if k < 1 or k > MAX_LEADING_ORDER_K:
        raise ValueError(f"k={k} outside the supported range 1..{MAX_LEADING_ORDER_K}")
    n_values = tuple(int(n) for n in n_values)
    terms = moment_terms(k)
    nc = tuple(float(_evaluate(terms, k, n, crossing=False) / n) for n in n_values)
    cr = tuple(float(_evaluate(terms, k, n, crossing=True) / n) for n in n_values)
    crossing_kappas = tuple(
        trace_kappa(pairs, 2 * k)[0]
        for pairs in _matchings(tuple(range(1, 2 * k + 1)))
        if is_crossing(pairs)
    )
    shrink = tuple(
        (a / b) if b != 0.0 else None for a, b in zip(cr[:-1], cr[1:])
    )
    return LeadingOrderReport(k, n_values, nc, cr, crossing_kappas, shrink)
