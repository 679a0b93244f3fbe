"""Weight-class patterns: census data describing how a dyadic vector sits on
a lift, and the reduction machinery that keeps only its improbable core.

A pattern records, for each (fibre, weight-exponent) class, how many entries
the class holds, and for each pair of classes across a base edge, how many
matched pairs join them.  Potency measures how far those joint counts deviate
from what uniformly random matchings would give, weighted by entry products.
The greedy reductions trim the class graph down to a subset on which every
class contributes enough deviation to be individually unlikely.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dyadic import DyadicBandVector, DyadicScale
from .errors import (
    ConfigError,
    DeviationDomainError,
    DimensionMismatchError,
    EmptyInputError,
    InvalidPatternError,
    LiftlabError,
    NotBandVectorError,
    TooLargeError,
    VertexNotInUError,
)
from .graphs import BaseGraph, Lift, complete_graph, cycle_graph

ClassVertex = tuple[int, int]  # (fibre, weight exponent)
ClassEdge = tuple[ClassVertex, ClassVertex]

REGIMES = ("large", "small")

# Deviations above this cutoff count as "large"; at or below, "small".
LARGE_DEVIATION_CUTOFF = math.e ** 2 - 1.0


def _edge_key(u: ClassVertex, v: ClassVertex) -> ClassEdge:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class ClassProfile:
    """Entry counts per (fibre, exponent) class of a norm-capped band vector.

    Validates the class-census invariants: nonnegative integer exponents,
    per-fibre totals at most n, exact squared norm at most 10 (as the integer
    sum of count * 4^exponent against 10nh), and all exponents within one
    band of multiplicative width d.
    """

    scale: DyadicScale
    counts: Mapping[ClassVertex, int]

    def __post_init__(self):
        cleaned: dict[ClassVertex, int] = {}
        for key, value in self.counts.items():
            fibre, exp = key
            count = int(value)
            if count < 0:
                raise InvalidPatternError(f"negative count at {key}")
            if count == 0:
                continue
            if not 0 <= fibre < self.scale.h:
                raise InvalidPatternError(f"fibre {fibre} out of range")
            if exp < 0:
                raise InvalidPatternError(f"negative exponent at {key}")
            cleaned[(int(fibre), int(exp))] = count
        per_fibre: Counter = Counter()
        norm_int = 0
        for (fibre, exp), count in cleaned.items():
            per_fibre[fibre] += count
            norm_int += count * (4 ** exp)
        for fibre, total in per_fibre.items():
            if total > self.scale.n:
                raise InvalidPatternError(
                    f"fibre {fibre} holds {total} entries but n = {self.scale.n}")
        if norm_int > 10 * self.scale.size:
            raise InvalidPatternError("squared norm exceeds 10")
        if cleaned:
            exps = [exp for (_, exp) in cleaned]
            if 2 ** (max(exps) - min(exps)) > self.scale.d:
                raise InvalidPatternError("exponents spread beyond one band of width d")
        ordered = dict(sorted(cleaned.items()))
        object.__setattr__(self, "counts", MappingProxyType(ordered))

    @classmethod
    def from_band_vector(cls, vec: DyadicBandVector) -> "ClassProfile":
        return cls(vec.scale, vec.histogram())

    def weight(self, exponent: int) -> float:
        return math.ldexp(1.0, exponent) / self.scale.root_size

    @property
    def vertices(self) -> tuple[ClassVertex, ...]:
        return tuple(self.counts)

    @property
    def total(self) -> int:
        """Number of entries across all classes."""
        return sum(self.counts.values())

    def fibre_total(self, fibre: int) -> int:
        return sum(c for (i, _), c in self.counts.items() if i == fibre)

    def weights_per_fibre(self) -> dict[int, int]:
        out: Counter = Counter()
        for (fibre, _) in self.counts:
            out[fibre] += 1
        return dict(out)


@dataclass(frozen=True)
class Pattern:
    """A class profile plus matched-pair counts between classes across base
    edges.  Links are stored sparsely on canonically ordered class pairs;
    an absent pair means zero matched pairs."""

    base: BaseGraph
    profile: ClassProfile
    links: Mapping[ClassEdge, int]

    def __post_init__(self):
        if self.base.h != self.profile.scale.h:
            raise DimensionMismatchError("profile and base disagree on the fibre count")
        if self.base.d != self.profile.scale.d:
            raise DimensionMismatchError("profile and base disagree on the degree")
        counts = self.profile.counts
        cleaned: dict[ClassEdge, int] = {}
        for pair, value in self.links.items():
            u, v = pair
            count = int(value)
            if count < 0:
                raise InvalidPatternError(f"negative link count at {pair}")
            if count == 0:
                continue
            key = _edge_key(tuple(u), tuple(v))
            if key in cleaned:
                raise InvalidPatternError(f"duplicate link {pair}")
            a, b = key
            if a not in counts or b not in counts:
                raise InvalidPatternError(f"link {pair} touches an empty class")
            if not self.base.are_adjacent(a[0], b[0]):
                raise InvalidPatternError(
                    f"link {pair} joins fibres that are not adjacent in the base")
            if count > min(counts[a], counts[b]):
                raise InvalidPatternError(
                    f"link {pair} exceeds the smaller class size")
            cleaned[key] = count
        ordered = dict(sorted(cleaned.items()))
        object.__setattr__(self, "links", MappingProxyType(ordered))

    def link(self, u: ClassVertex, v: ClassVertex) -> int:
        return self.links.get(_edge_key(u, v), 0)

    def restricted(self, kept: Iterable[ClassVertex]) -> "Pattern":
        """Sub-pattern induced by a set of class vertices: counts outside the
        set become zero, links survive only when both endpoints are kept."""
        keep = set(kept)
        counts = {v: c for v, c in self.profile.counts.items() if v in keep}
        links = {pair: c for pair, c in self.links.items()
                 if pair[0] in keep and pair[1] in keep}
        return Pattern(self.base, ClassProfile(self.scale, counts), links)

    @property
    def scale(self) -> DyadicScale:
        return self.profile.scale


class ClassGraph:
    """Adjacency among populated classes: fibres adjacent in the base with
    weight ratio strictly inside (1/sqrt(d), sqrt(d))."""

    def __init__(self, pattern: Pattern):
        self._d = pattern.scale.d
        self._base = pattern.base
        self.vertices: tuple[ClassVertex, ...] = pattern.profile.vertices
        by_fibre: dict[int, list[ClassVertex]] = {}
        for v in self.vertices:
            by_fibre.setdefault(v[0], []).append(v)
        adj: dict[ClassVertex, list[ClassVertex]] = {v: [] for v in self.vertices}
        for (fibre, exp) in self.vertices:
            for other in self._base.neighbours(fibre):
                for cand in by_fibre.get(other, ()):
                    if 4 ** abs(exp - cand[1]) < self._d:
                        adj[(fibre, exp)].append(cand)
        self._adj = {v: tuple(sorted(nbrs)) for v, nbrs in adj.items()}

    def neighbours(self, v: ClassVertex) -> tuple[ClassVertex, ...]:
        return self._adj.get(v, ())

    def are_adjacent(self, u: ClassVertex, v: ClassVertex) -> bool:
        if u == v or u not in self._adj or v not in self._adj:
            return False
        return (self._base.are_adjacent(u[0], v[0])
                and 4 ** abs(u[1] - v[1]) < self._d)

    @property
    def edges(self) -> tuple[ClassEdge, ...]:
        out = []
        for v, nbrs in self._adj.items():
            for w in nbrs:
                if v < w:
                    out.append((v, w))
        return tuple(sorted(out))


@dataclass(frozen=True)
class EdgeDeviation:
    """Deviation data for one class-graph edge.

    expected is the mean matched-pair count between the two classes under a
    uniform matching; relative_gap is (observed / expected) - 1, with the
    convention that an edge touching an empty class has gap 1; term is the
    edge's signed contribution to potency.
    """

    edge: ClassEdge
    expected: float
    relative_gap: float
    regime: str
    term: float


def edge_deviation(pattern: Pattern, u: ClassVertex, v: ClassVertex) -> EdgeDeviation:
    counts = pattern.profile.counts
    a = counts.get(u, 0)
    b = counts.get(v, 0)
    n = pattern.scale.n
    observed = pattern.link(u, v)
    if a == 0 or b == 0:
        mu, gap = 0.0, 1.0
    else:
        mu = a * b / n
        gap = observed * n / (a * b) - 1.0
    regime = "large" if gap > LARGE_DEVIATION_CUTOFF else "small"
    weight = pattern.profile.weight(u[1]) * pattern.profile.weight(v[1])
    term = weight * (observed - mu)
    return EdgeDeviation(_edge_key(u, v), mu, gap, regime, term)


class DeviationTable:
    """Per-edge deviation rows over the whole class graph."""

    def __init__(self, pattern: Pattern, graph: ClassGraph | None = None):
        graph = graph if graph is not None else ClassGraph(pattern)
        rows = {}
        for pair in graph.edges:
            rows[pair] = edge_deviation(pattern, *pair)
        self.rows: Mapping[ClassEdge, EdgeDeviation] = MappingProxyType(rows)

    def row(self, u: ClassVertex, v: ClassVertex) -> EdgeDeviation:
        return self.rows[_edge_key(u, v)]

    @property
    def edges(self) -> tuple[ClassEdge, ...]:
        return tuple(self.rows)


def potency(pattern: Pattern) -> float:
    """Absolute signed sum of weight * (observed - expected) over the edges
    of the class graph."""
    table = DeviationTable(pattern)
    return abs(math.fsum(row.term for row in table.rows.values()))


def peak_potency(pattern: Pattern) -> float:
    """Largest absolute signed sum achievable by any subset of class-graph
    edges: the bigger of the positive-term total and the negative-term
    total's magnitude."""
    table = DeviationTable(pattern)
    pos = math.fsum(r.term for r in table.rows.values() if r.term > 0)
    neg = math.fsum(r.term for r in table.rows.values() if r.term < 0)
    return max(pos, -neg)


def deviation_rate(gap: float) -> float:
    """Rate function (1 + gap) * log(1 + gap) - gap, continuously extended
    to 1 at gap = -1."""
    if gap < -1.0:
        raise DeviationDomainError("relative gap below -1")
    if gap == -1.0:
        return 1.0
    return (1.0 + gap) * math.log1p(gap) - gap


# ---------------------------------------------------------------------------
# per-vertex aggregates


@dataclass(frozen=True)
class AggregateRow:
    """Aggregates at one class vertex.

    neighbour_mass: squared-weight mass held by classes in fibres adjacent
        to this one (no band restriction).
    tilted_mass: mass on class-graph neighbours, tilted by the weight ratio
        over sqrt(d) so near-maximal ratios count fully.
    headroom: how much larger the available neighbour mass or the expected
        occupancy is than this class uses; always at least e.
    headroom_log: log(headroom) / headroom.
    local_*: absolute signed term sums over the vertex's class-graph
        neighbours, split by deviation regime.
    """

    vertex: ClassVertex
    count: int
    weight: float
    neighbour_mass: float
    tilted_mass: float
    headroom: float
    headroom_log: float
    local_potency: float
    local_large: float
    local_small: float


class AggregateTable:

    def __init__(self, rows: dict[ClassVertex, AggregateRow]):
        self.rows: Mapping[ClassVertex, AggregateRow] = MappingProxyType(dict(rows))

    def row(self, vertex: ClassVertex) -> AggregateRow:
        return self.rows[vertex]


def aggregates(pattern: Pattern, graph: ClassGraph | None = None,
               table: DeviationTable | None = None) -> AggregateTable:
    profile = pattern.profile
    scale = pattern.scale
    graph = graph if graph is not None else ClassGraph(pattern)
    table = table if table is not None else DeviationTable(pattern, graph)
    fibre_mass = [0.0] * scale.h
    for (fibre, exp), count in profile.counts.items():
        fibre_mass[fibre] += profile.weight(exp) ** 2 * count
    rows = {}
    root_d = math.sqrt(scale.d)
    for vertex in graph.vertices:
        fibre, exp = vertex
        count = profile.counts[vertex]
        weight = profile.weight(exp)
        nb_mass = math.fsum(fibre_mass[i] for i in pattern.base.neighbours(fibre))
        tilted = 0.0
        sum_large = 0.0
        sum_small = 0.0
        for other in graph.neighbours(vertex):
            w2 = profile.weight(other[1])
            tilted += w2 ** 2 * profile.counts[other] * (w2 / (weight * root_d))
            row = table.row(vertex, other)
            if row.regime == "large":
                sum_large += row.term
            else:
                sum_small += row.term
        headroom = max(nb_mass / (count * weight ** 2 * scale.d),
                       math.e * scale.n / count)
        rows[vertex] = AggregateRow(
            vertex=vertex,
            count=count,
            weight=weight,
            neighbour_mass=nb_mass,
            tilted_mass=tilted,
            headroom=headroom,
            headroom_log=math.log(headroom) / headroom,
            local_potency=abs(sum_large + sum_small),
            local_large=abs(sum_large),
            local_small=abs(sum_small),
        )
    return AggregateTable(rows)


# ---------------------------------------------------------------------------
# pattern extraction


def extract_pattern(vec: DyadicBandVector, lift: Lift) -> tuple[Pattern, dict]:
    """Census of a band vector on a lift: class sizes, matched-pair counts
    between classes across every base edge, and the member positions of each
    class."""
    if not isinstance(vec, DyadicBandVector):
        raise NotBandVectorError("expected a dyadic band vector")
    if vec.scale != DyadicScale.of(lift):
        raise DimensionMismatchError("vector scale does not match the lift")
    profile = ClassProfile.from_band_vector(vec)
    links: Counter = Counter()
    for (u, v), perm in lift.perms.items():
        mask = vec.nonzero[u] & vec.nonzero[v][perm]
        if not mask.any():
            continue
        left = vec.exponents[u][mask]
        right = vec.exponents[v][perm][mask]
        for eu, ev in zip(left.tolist(), right.tolist()):
            links[_edge_key((u, eu), (v, ev))] += 1
    witnesses = {}
    for i in range(vec.scale.h):
        row_mask = vec.nonzero[i]
        if not row_mask.any():
            continue
        for exp in np.unique(vec.exponents[i][row_mask]):
            members = np.nonzero(row_mask & (vec.exponents[i] == exp))[0]
            witnesses[(i, int(exp))] = tuple(int(j) for j in members)
    return Pattern(lift.base, profile, dict(links)), witnesses


# ---------------------------------------------------------------------------
# greedy reductions


@dataclass(frozen=True)
class Removal:
    vertex: ClassVertex
    condition: str
    local_potency: float


@dataclass(frozen=True)
class ReductionReport:
    """Transcript of one greedy reduction.

    kept is the surviving class-vertex set; removals lists, in order, each
    discarded vertex with the condition it violated and its local potency on
    the then-current survivor set.  potency_after is guaranteed to be at
    least potency_before - removed_potency, and removed_potency stays within
    the branch budget.
    """

    branch: str
    kept: tuple[ClassVertex, ...]
    removals: tuple[Removal, ...]
    removed_potency: float
    budget: float
    potency_before: float
    potency_after: float

    @property
    def retention_floor(self) -> float:
        return self.potency_before - self.removed_potency


_BRANCH_REGIMES = {
    "large": ("large",),
    "small": ("small",),
    "general": ("large", "small"),
}
_BUDGET_FACTOR = {"large": 30.0, "small": 55.0, "general": 150.0}


def _branch_conditions(row: AggregateRow, level: float, scale: DyadicScale,
                       branch: str) -> list[tuple[str, float]]:
    root_d = math.sqrt(scale.d)
    share = level * row.count * row.weight ** 2 * root_d
    if branch == "large":
        return [("large1", share),
                ("large2", level * row.tilted_mass / root_d)]
    if branch == "small":
        return [("small1", share),
                ("small2", level * row.neighbour_mass * row.count / (scale.n * root_d)),
                ("small3", level * row.neighbour_mass * row.headroom_log / root_d)]
    return [("general1", 2.0 * share),
            ("general2", 2.0 * level * row.tilted_mass / root_d),
            ("general3", 2.0 * level * row.neighbour_mass * row.count
              / (scale.n * root_d)),
            ("general4", 2.0 * level * row.neighbour_mass * row.headroom_log
              / root_d)]


def _local_signed(graph: ClassGraph, table: DeviationTable, alive: set,
                  vertex: ClassVertex, regimes: tuple[str, ...]) -> float:
    total = 0.0
    for other in graph.neighbours(vertex):
        if other in alive:
            row = table.row(vertex, other)
            if row.regime in regimes:
                total += row.term
    return total


def _members_potency(table: DeviationTable, alive: set,
                     regimes: tuple[str, ...]) -> float:
    return abs(math.fsum(
        row.term for pair, row in table.rows.items()
        if row.regime in regimes and pair[0] in alive and pair[1] in alive))


def _greedy_reduce(pattern: Pattern, level: float, branch: str) -> ReductionReport:
    if level < 20.0:
        raise ConfigError("reduction level must be at least 20")
    graph = ClassGraph(pattern)
    table = DeviationTable(pattern, graph)
    agg = aggregates(pattern, graph, table)
    regimes = _BRANCH_REGIMES[branch]
    thresholds = {v: _branch_conditions(agg.row(v), level, pattern.scale, branch)
                  for v in graph.vertices}
    alive = set(graph.vertices)
    removals: list[Removal] = []
    while True:
        victim = None
        for vertex in sorted(alive):
            local = abs(_local_signed(graph, table, alive, vertex, regimes))
            for label, floor in thresholds[vertex]:
                if local < floor:
                    victim = Removal(vertex, label, local)
                    break
            if victim is not None:
                break
        if victim is None:
            break
        alive.remove(victim.vertex)
        removals.append(victim)
    before = _members_potency(table, set(graph.vertices), regimes)
    after = _members_potency(table, alive, regimes)
    return ReductionReport(
        branch=branch,
        kept=tuple(sorted(alive)),
        removals=tuple(removals),
        removed_potency=math.fsum(r.local_potency for r in removals),
        budget=_BUDGET_FACTOR[branch] * level * math.sqrt(pattern.scale.d),
        potency_before=before,
        potency_after=after,
    )


def reduce_large(pattern: Pattern, level: float = 20.0) -> ReductionReport:
    """Greedy reduction keeping classes whose large-deviation local potency
    clears both the weight-share and the tilted-mass conditions."""
    return _greedy_reduce(pattern, level, "large")


def reduce_small(pattern: Pattern, level: float = 20.0) -> ReductionReport:
    """Greedy reduction for the small-deviation regime (three conditions)."""
    return _greedy_reduce(pattern, level, "small")


def reduce_general(pattern: Pattern, level: float = 20.0) -> ReductionReport:
    """Greedy reduction on the full local potency with doubled thresholds."""
    return _greedy_reduce(pattern, level, "general")


def reduce_pattern(pattern: Pattern, level: float = 20.0) -> ReductionReport:
    """Dispatch to the regime carrying at least half the potency, then check
    the survivor guarantees.

    The result satisfies peak_potency(sub-pattern) >= potency/2 -
    55 * level * sqrt(d), and every kept vertex is locally unlikely: its
    expected-count-weighted deviation-rate sum over kept neighbours is at
    least (level/10) * count * log(e n / count).
    """
    graph = ClassGraph(pattern)
    table = DeviationTable(pattern, graph)
    total = abs(math.fsum(row.term for row in table.rows.values()))
    heavy = _members_potency(table, set(graph.vertices), ("large",))
    branch = "large" if heavy >= total / 2.0 else "small"
    report = _greedy_reduce(pattern, level, branch)
    _check_dispatch_guarantees(pattern, level, report, total, graph, table)
    return report


def _check_dispatch_guarantees(pattern: Pattern, level: float,
                               report: ReductionReport, total: float,
                               graph: ClassGraph, table: DeviationTable) -> None:
    kept = set(report.kept)
    floor = total / 2.0 - 55.0 * level * math.sqrt(pattern.scale.d)
    achieved = peak_potency(pattern.restricted(kept))
    if achieved < floor - 1e-9 * max(1.0, abs(floor)):
        raise LiftlabError("reduction lost more potency than its guarantee allows")
    n = pattern.scale.n
    for vertex in report.kept:
        count = pattern.profile.counts[vertex]
        lhs = math.fsum(
            (count * pattern.profile.counts[other] / n)
            * deviation_rate(table.row(vertex, other).relative_gap)
            for other in graph.neighbours(vertex) if other in kept)
        rhs = (level / 10.0) * count * math.log(math.e * n / count)
        if lhs < rhs - 1e-9 * max(1.0, rhs):
            raise LiftlabError("kept vertex fails the local-unlikeliness bound")


# ---------------------------------------------------------------------------
# selection helpers


def dominant_neighbours(pattern: Pattern, members: Iterable[ClassVertex],
                        vertex: ClassVertex, regime: str,
                        level: float = 20.0) -> frozenset:
    """Neighbours of a vertex, within a member set, that carry the dominant
    share of its local potency in the chosen regime.

    In the large regime the cut is an absolute one on the gap-weight ratio;
    in the small regime it is relative to the vertex's own local potency.
    """
    member_set = set(members)
    if vertex not in member_set:
        raise VertexNotInUError(f"{vertex} is not in the member set")
    if regime not in REGIMES:
        raise ConfigError(f"regime must be one of {REGIMES}")
    graph = ClassGraph(pattern)
    table = DeviationTable(pattern, graph)
    count = pattern.profile.counts[vertex]
    weight = pattern.profile.weight(vertex[1])
    n = pattern.scale.n
    d = pattern.scale.d
    candidates = [other for other in graph.neighbours(vertex)
                  if other in member_set
                  and table.row(vertex, other).regime == regime]
    if not candidates:
        return frozenset()
    if regime == "large":
        cut = level * n / (2.0 * count)
        picked = [
            other for other in candidates
            if table.row(vertex, other).relative_gap * weight ** 2 * d
            / pattern.profile.weight(other[1]) ** 2 >= cut]
        return frozenset(picked)
    local = abs(math.fsum(table.row(vertex, o).term for o in candidates))
    nb_mass = aggregates(pattern).row(vertex).neighbour_mass
    if nb_mass == 0.0:
        return frozenset()
    cut = local / (2.0 * weight ** 2 * count * nb_mass)
    picked = [
        other for other in candidates
        if abs(table.row(vertex, other).relative_gap)
        / (weight * pattern.profile.weight(other[1]) * n) >= cut]
    return frozenset(picked)


def measure_select(triples: Sequence[tuple[float, float, float]],
                   threshold: float) -> tuple[int, ...]:
    """Indices whose density ratio h/g is at least threshold times the
    measure-averaged ratio; the selected h-mass is then at least
    (1 - threshold) of the total h-mass."""
    if len(triples) == 0:
        raise EmptyInputError("no triples supplied")
    if not 0.0 < threshold < 1.0:
        raise ConfigError("threshold must lie strictly between 0 and 1")
    for mu, hv, gv in triples:
        if mu <= 0 or hv <= 0 or gv <= 0:
            raise LiftlabError("all triple entries must be positive")
    top = math.fsum(hv * mu for mu, hv, _ in triples)
    bottom = math.fsum(gv * mu for mu, _, gv in triples)
    cut = threshold * top / bottom
    return tuple(k for k, (mu, hv, gv) in enumerate(triples) if hv / gv >= cut)


# ---------------------------------------------------------------------------
# probability and counting bounds


def pattern_probability_bound(pattern: Pattern, kept: Iterable[ClassVertex],
                              level: float = 20.0) -> float:
    """Natural log of the occurrence-probability bound for the sub-pattern
    on the kept set: sum of (d/4) log(count) plus (1 - level/10) times the
    log binomial(n, count clipped to n/2), via log-gamma."""
    if level < 20.0:
        raise ConfigError("level must be at least 20")
    n = pattern.scale.n
    d = pattern.scale.d
    total = 0.0
    for vertex in kept:
        count = pattern.profile.counts.get(vertex)
        if count is None:
            raise InvalidPatternError(f"{vertex} is not a populated class")
        total += (d / 4.0) * math.log(count)
        clipped = min(count, n // 2)
        log_choose = (math.lgamma(n + 1) - math.lgamma(clipped + 1)
                      - math.lgamma(n - clipped + 1))
        total += (1.0 - level / 10.0) * log_choose
    return total


def pattern_count_bound(n: int, h: int, d: int, max_count: int) -> float:
    """Natural log of the counting bound log2(nh) * max_count^(2 h d log2 d)
    on patterns whose class sizes all stay below max_count."""
    if max_count < 1:
        raise ConfigError("max_count must be at least 1")
    if n * h < 2:
        raise ConfigError("need at least two lift vertices")
    return math.log(math.log2(n * h)) + 2.0 * h * d * math.log2(d) * math.log(max_count)


def _default_base(h: int, d: int) -> BaseGraph:
    if d == h - 1:
        return complete_graph(h)
    if d == 2:
        return cycle_graph(h)
    raise ConfigError("no default base for this (h, d); pass one explicitly")


def enumerate_patterns(n: int, h: int, d: int, max_count: int,
                       base: BaseGraph | None = None,
                       guard: int = 1_000_000) -> int:
    """Count distinct valid patterns with every class size below max_count.

    Walks anchor exponents (band starts), then class-size assignments over
    the band's slots, then link counts on the class-graph pairs, deduplicating
    identical patterns that arise under several anchors.  Raises TooLarge if
    the walk or the distinct count would exceed the guard.
    """
    if max_count < 1:
        raise ConfigError("max_count must be at least 1")
    base = base if base is not None else _default_base(h, d)
    if base.h != h or base.d != d:
        raise DimensionMismatchError("base does not match the stated (h, d)")
    scale = DyadicScale(n, h, d)
    cap = 10 * n * h
    width = d.bit_length() - 1  # widest exponent offset within one band
    anchors = []
    exp = 0
    while 4 ** exp <= cap:
        anchors.append(exp)
        exp += 1
    size_limit = min(max_count - 1, n)
    raw = len(anchors) * (size_limit + 1) ** (h * (width + 1))
    if raw > 20 * guard:
        raise TooLargeError("pattern enumeration would take too many steps")
    seen: set = set()
    for anchor in anchors:
        exps = [anchor + t for t in range(width + 1) if 4 ** (anchor + t) <= cap]
        slots = [(i, e) for i in range(h) for e in exps]
        for sizes in itertools.product(range(size_limit + 1), repeat=len(slots)):
            counts = {slot: c for slot, c in zip(slots, sizes) if c > 0}
            if sum(c * 4 ** e for (_, e), c in counts.items()) > cap:
                continue
            per_fibre: Counter = Counter()
            for (i, _), c in counts.items():
                per_fibre[i] += c
            if any(total > n for total in per_fibre.values()):
                continue
            profile = ClassProfile(scale, counts)
            pairs = []
            verts = sorted(counts)
            for u, v in itertools.combinations(verts, 2):
                if base.are_adjacent(u[0], v[0]) and 4 ** abs(u[1] - v[1]) < d:
                    pairs.append(((u, v), min(counts[u], counts[v])))
            profile_key = tuple(sorted(counts.items()))
            for link_values in itertools.product(
                    *(range(m + 1) for _, m in pairs)):
                links = {pair: val for (pair, _), val in zip(pairs, link_values)
                         if val > 0}
                Pattern(base, profile, links)
                seen.add((profile_key, tuple(sorted(links.items()))))
                if len(seen) > guard:
                    raise TooLargeError("more patterns than the guard allows")
    return len(seen)


# ---------------------------------------------------------------------------
# text formats


def pattern_to_text(pattern: Pattern) -> str:
    lines = ["lift-pattern",
             f"n {pattern.scale.n}",
             f"h {pattern.scale.h}",
             f"d {pattern.scale.d}"]
    exps = [e for (_, e) in pattern.profile.counts]
    lines.append(f"band {min(exps) if exps else 0}")
    for (fibre, exp), count in pattern.profile.counts.items():
        lines.append(f"class {fibre} {exp} {count}")
    for ((f1, e1), (f2, e2)), count in pattern.links.items():
        lines.append(f"link {f1} {e1} {f2} {e2} {count}")
    return "\n".join(lines) + "\n"


def pattern_from_text(text: str, base: BaseGraph) -> Pattern:
    header: dict[str, int] = {}
    counts: dict[ClassVertex, int] = {}
    links: dict[ClassEdge, int] = {}
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0] != "lift-pattern":
        raise LiftlabError("not a pattern file")
    for line in lines[1:]:
        tokens = line.split()
        kind, rest = tokens[0], tokens[1:]
        if kind in ("n", "h", "d", "band"):
            if len(rest) != 1:
                raise LiftlabError(f"malformed line: {line!r}")
            header[kind] = int(rest[0])
        elif kind == "class":
            fibre, exp, count = (int(t) for t in rest)
            counts[(fibre, exp)] = count
        elif kind == "link":
            f1, e1, f2, e2, count = (int(t) for t in rest)
            links[((f1, e1), (f2, e2))] = count
        else:
            raise LiftlabError(f"unknown line kind {kind!r}")
    for key in ("n", "h", "d"):
        if key not in header:
            raise LiftlabError(f"missing header field {key!r}")
    scale = DyadicScale(header["n"], header["h"], header["d"])
    pattern = Pattern(base, ClassProfile(scale, counts), links)
    exps = [e for (_, e) in pattern.profile.counts]
    if exps and "band" in header and header["band"] != min(exps):
        raise InvalidPatternError("band anchor does not match the class exponents")
    return pattern


def reduction_to_text(report: ReductionReport) -> str:
    lines = ["reduction",
             f"branch {report.branch}",
             f"budget {report.budget!r}",
             f"potency-before {report.potency_before!r}",
             f"potency-after {report.potency_after!r}",
             f"removed {len(report.removals)}"]
    for removal in report.removals:
        fibre, exp = removal.vertex
        lines.append(
            f"remove {fibre} {exp} {removal.condition} {removal.local_potency!r}")
    lines.append(f"kept {len(report.kept)}")
    for fibre, exp in report.kept:
        lines.append(f"keep {fibre} {exp}")
    return "\n".join(lines) + "\n"
