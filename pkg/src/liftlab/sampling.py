"""Seeded sampling of uniform random lifts, exhaustive enumeration, planting.

Each base edge gets its own RNG stream derived from (seed, stream, edge
index), so the permutations are independent and the result does not depend
on the order in which edges are processed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import FibresNotAdjacentError, FibresNotDistinctError, LiftlabError, TooLargeError
from .graphs import BaseGraph, Lift


@dataclass(frozen=True)
class SeededRng:
    """Reproducible randomness source: same (seed, stream) -> same draws."""

    seed: int = 0
    stream: int = 0

    def generator(self, *extra: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence((self.seed, self.stream) + extra))


def sample_lift(base: BaseGraph, n: int, rng: SeededRng) -> Lift:
    """Draw a uniform random n-lift: one uniform matching per base edge.

    Each permutation comes from its own child stream keyed by the edge's
    position in the sorted edge list, so samples are deterministic in
    (seed, stream) and independent across edges.
    """
    if n < 1:
        raise LiftlabError("n must be at least 1")
    perms = {}
    for k, e in enumerate(base.edges):
        perms[e] = rng.generator(k).permutation(n)
    return Lift(base, n, perms)


def enumerate_lifts(base: BaseGraph, n: int, guard: float = 1e7):
    """Yield every n-lift of the base exactly once, in lexicographic order.

    The total count is (n!)^m over the m base edges; refuses to start when
    that exceeds the guard.
    """
    m = len(base.edges)
    total = float(math.factorial(n)) ** m
    if total > guard:
        raise TooLargeError(f"{total:.3g} lifts exceeds guard {guard:.3g}")
    all_perms = [np.array(p, dtype=np.int64) for p in itertools.permutations(range(n))]
    for combo in itertools.product(all_perms, repeat=m):
        yield Lift(base, n, dict(zip(base.edges, combo)))


def plant_clique(lift: Lift, fibres: list[int]) -> Lift:
    """Force position 0 of each listed fibre into a mutual clique.

    For each pair of listed fibres the matching is composed with the
    transposition that sends position 0 to position 0; other positions of
    that matching move only as far as the swap requires, and matchings not
    between listed fibres are untouched. The construction is deterministic.
    """
    s = len(fibres)
    if len(set(fibres)) != s:
        raise FibresNotDistinctError("fibre ids must be distinct")
    for i in fibres:
        if not (0 <= i < lift.h):
            raise LiftlabError(f"fibre {i} out of range")
    for a, b in itertools.combinations(fibres, 2):
        if not lift.base.are_adjacent(a, b):
            raise FibresNotAdjacentError(f"fibres {a} and {b} are not adjacent in the base")
    new_perms = {e: lift.perms[e].copy() for e in lift.base.edges}
    for a, b in itertools.combinations(sorted(fibres), 2):
        p = new_perms[(a, b)]
        j = int(np.nonzero(p == 0)[0][0])
        p[j], p[0] = p[0], p[j]
    return Lift(lift.base, lift.n, new_perms)
