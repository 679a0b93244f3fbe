"""Pattern census, potency, greedy reductions, and the counting bounds.

Reference computations here are written as plain loops over class pairs and
never call the library's aggregate tables, so library/oracle agreement checks
two independent routes.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liftlab.dyadic import DyadicBandVector, DyadicScale, quad_form_restricted
from liftlab.errors import (
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
from liftlab.graphs import BaseGraph, complete_graph, cycle_graph, identity_lift
from liftlab.patterns import (
    AggregateTable,
    ClassGraph,
    ClassProfile,
    DeviationTable,
    LARGE_DEVIATION_CUTOFF,
    Pattern,
    aggregates,
    deviation_rate,
    dominant_neighbours,
    edge_deviation,
    enumerate_patterns,
    extract_pattern,
    measure_select,
    pattern_count_bound,
    pattern_from_text,
    pattern_probability_bound,
    pattern_to_text,
    peak_potency,
    potency,
    reduce_general,
    reduce_large,
    reduce_pattern,
    reduce_small,
    reduction_to_text,
)

from _support import SMALL_BASES, random_lift


# --- reference implementations ------------------------------------------------------


def ref_weight(exp, scale):
    return 2.0 ** exp / math.sqrt(scale.n * scale.h)


def ref_gamma_edges(pattern):
    """Class-graph edges by brute force over the base adjacency matrix."""
    adj = pattern.base.adjacency()
    verts = sorted(pattern.profile.counts)
    out = []
    for u, v in itertools.combinations(verts, 2):
        if adj[u[0], v[0]] == 1.0 and 4 ** abs(u[1] - v[1]) < pattern.scale.d:
            out.append((u, v))
    return out


def ref_terms(pattern):
    """Signed potency terms per class-graph edge, recomputed from scratch."""
    n = pattern.scale.n
    counts = pattern.profile.counts
    terms = {}
    for (u, v) in ref_gamma_edges(pattern):
        mu = counts[u] * counts[v] / n
        e = pattern.links.get((u, v), 0)
        terms[(u, v)] = ref_weight(u[1], pattern.scale) * ref_weight(v[1], pattern.scale) * (e - mu)
    return terms


def ref_peak_exhaustive(pattern):
    terms = list(ref_terms(pattern).values())
    assert len(terms) <= 16, "exhaustive oracle needs a small class graph"
    best = 0.0
    for r in range(len(terms) + 1):
        for combo in itertools.combinations(terms, r):
            best = max(best, abs(sum(combo)))
    return best


def ref_aggregate(pattern, vertex):
    """neighbour mass, tilted mass and headroom at one vertex, by loops."""
    n, d = pattern.scale.n, pattern.scale.d
    counts = pattern.profile.counts
    fibre, exp = vertex
    a = counts[vertex]
    w = ref_weight(exp, pattern.scale)
    nb = 0.0
    for (i, e), c in counts.items():
        if pattern.base.adjacency()[fibre, i] == 1.0:
            nb += ref_weight(e, pattern.scale) ** 2 * c
    tilted = 0.0
    for (u, v) in ref_gamma_edges(pattern):
        other = v if u == vertex else (u if v == vertex else None)
        if other is None:
            continue
        w2 = ref_weight(other[1], pattern.scale)
        tilted += w2 ** 2 * counts[other] * w2 / (w * math.sqrt(d))
    headroom = max(nb / (a * w * w * d), math.e * n / a)
    return nb, tilted, headroom


def ref_local_potency(pattern, members, vertex, regimes):
    cutoff = math.e ** 2 - 1.0
    n = pattern.scale.n
    counts = pattern.profile.counts
    total = 0.0
    for (u, v), term in ref_terms(pattern).items():
        other = v if u == vertex else (u if v == vertex else None)
        if other is None or other not in members:
            continue
        gap = pattern.links.get((u, v), 0) * n / (counts[u] * counts[v]) - 1.0
        regime = "large" if gap > cutoff else "small"
        if regime in regimes:
            total += term
    return abs(total)


REGIME_SETS = {"large": ("large",), "small": ("small",), "general": ("large", "small")}


def ref_thresholds(pattern, vertex, level, branch):
    n, d = pattern.scale.n, pattern.scale.d
    a = pattern.profile.counts[vertex]
    w = ref_weight(vertex[1], pattern.scale)
    nb, tilted, headroom = ref_aggregate(pattern, vertex)
    hl = math.log(headroom) / headroom
    base = {
        "large": [level * a * w * w * math.sqrt(d), level * tilted / math.sqrt(d)],
        "small": [level * a * w * w * math.sqrt(d),
                  level * nb * a / (n * math.sqrt(d)),
                  level * nb * hl / math.sqrt(d)],
    }
    if branch in base:
        return base[branch]
    return [2.0 * t for t in base["large"] + base["small"]]


def ref_branch_total(pattern, members, regimes):
    cutoff = math.e ** 2 - 1.0
    n = pattern.scale.n
    counts = pattern.profile.counts
    total = 0.0
    for (u, v), term in ref_terms(pattern).items():
        if u not in members or v not in members:
            continue
        gap = pattern.links.get((u, v), 0) * n / (counts[u] * counts[v]) - 1.0
        if ("large" if gap > cutoff else "small") in regimes:
            total += term
    return abs(total)


def ref_verify_reduction(pattern, report, level, branch):
    """Replay the transcript: each removal must violate some condition at the
    recorded local potency, every survivor must satisfy all conditions, and
    the totals must obey the budget and the retention telescope."""
    regimes = REGIME_SETS[branch]
    everything = set(ClassGraph(pattern).vertices)
    alive = set(everything)
    for removal in report.removals:
        lp = ref_local_potency(pattern, alive, removal.vertex, regimes)
        assert lp == pytest.approx(removal.local_potency, rel=1e-9, abs=1e-12)
        thresholds = ref_thresholds(pattern, removal.vertex, level, branch)
        assert any(lp < t for t in thresholds)
        alive.remove(removal.vertex)
    assert alive == set(report.kept)
    for vertex in report.kept:
        lp = ref_local_potency(pattern, alive, vertex, regimes)
        for t in ref_thresholds(pattern, vertex, level, branch):
            assert lp >= t - max(1e-12, 1e-9 * t)
    assert report.potency_before == pytest.approx(
        ref_branch_total(pattern, everything, regimes), rel=1e-9, abs=1e-12)
    assert report.potency_after == pytest.approx(
        ref_branch_total(pattern, alive, regimes), rel=1e-9, abs=1e-12)
    assert report.removed_potency <= report.budget + 1e-9
    assert report.potency_after >= report.retention_floor - 1e-9


def ref_probability_bound(pattern, kept, level):
    n, d = pattern.scale.n, pattern.scale.d
    total = 0.0
    for vertex in kept:
        a = pattern.profile.counts[vertex]
        total += (d / 4.0) * math.log(a)
        total += (1.0 - level / 10.0) * math.log(math.comb(n, min(a, n // 2)))
    return total


def random_pattern(rng, base=None, n=None):
    """A valid pattern with random class sizes and link counts; link counts
    also land on fibre-adjacent pairs outside the band."""
    base = base if base is not None else SMALL_BASES[rng.integers(len(SMALL_BASES))]
    n = n if n is not None else int(rng.integers(4, 40))
    scale = DyadicScale(n, base.h, base.d)
    width = base.d.bit_length() - 1
    lo = int(rng.integers(0, 4))
    per_class_cap = max(1, n // (width + 1))
    counts = {}
    for i in range(base.h):
        for e in range(lo, lo + width + 1):
            if rng.random() < 0.6:
                counts[(i, e)] = int(rng.integers(1, per_class_cap + 1))
    keys = sorted(counts)
    while counts and sum(c * 4 ** e for (_, e), c in counts.items()) > 10 * scale.size:
        victim = keys[rng.integers(len(keys))]
        if victim in counts:
            if counts[victim] > 1:
                counts[victim] -= 1
            else:
                del counts[victim]
    links = {}
    verts = sorted(counts)
    for u, v in itertools.combinations(verts, 2):
        if base.are_adjacent(u[0], v[0]) and rng.random() < 0.6:
            m = min(counts[u], counts[v])
            val = int(rng.integers(0, m + 1))
            if val:
                links[(u, v)] = val
    return Pattern(base, ClassProfile(scale, counts), links)


def random_band_vector(scale, rng, density=0.5):
    width = scale.d.bit_length() - 1
    lo = int(rng.integers(0, 3))
    exps = rng.integers(lo, lo + width + 1, size=(scale.h, scale.n))
    mask = rng.random(size=(scale.h, scale.n)) < density
    while mask.any() and int(np.sum((4 ** exps) * mask)) > 10 * scale.size:
        live = np.argwhere(mask)
        i, j = live[rng.integers(len(live))]
        mask[i, j] = False
    return DyadicBandVector(scale, exps.astype(np.int64), mask)


# --- class profiles -----------------------------------------------------------------


def test_profile_basics():
    scale = DyadicScale(8, 3, 4)
    prof = ClassProfile(scale, {(0, 0): 3, (0, 2): 1, (2, 1): 5, (1, 0): 0})
    assert prof.vertices == ((0, 0), (0, 2), (2, 1))
    assert prof.total == 9
    assert prof.fibre_total(0) == 4 and prof.fibre_total(1) == 0
    assert prof.weight(3) == pytest.approx(8 / math.sqrt(24))
    assert prof.weights_per_fibre() == {0: 2, 2: 1}


def test_profile_rejects_fibre_overflow():
    scale = DyadicScale(4, 2, 2)
    with pytest.raises(InvalidPatternError):
        ClassProfile(scale, {(0, 0): 3, (0, 1): 2})


def test_profile_norm_cap_boundary():
    scale = DyadicScale(40, 1, 1)
    # 25 entries with squared weight 16/40 square-sum to exactly 10
    ClassProfile(scale, {(0, 2): 25})
    with pytest.raises(InvalidPatternError):
        ClassProfile(scale, {(0, 2): 26})


def test_profile_rejects_wide_band():
    scale = DyadicScale(64, 2, 4)
    ClassProfile(scale, {(0, 0): 1, (1, 2): 1})  # ratio 4 = d allowed
    with pytest.raises(InvalidPatternError):
        ClassProfile(scale, {(0, 0): 1, (1, 3): 1})  # ratio 8 > d


def test_profile_rejects_bad_entries():
    scale = DyadicScale(4, 2, 2)
    with pytest.raises(InvalidPatternError):
        ClassProfile(scale, {(0, -1): 1})
    with pytest.raises(InvalidPatternError):
        ClassProfile(scale, {(0, 0): -2})
    with pytest.raises(InvalidPatternError):
        ClassProfile(scale, {(5, 0): 1})


def test_profile_from_band_vector_matches_histogram():
    scale = DyadicScale(6, 3, 4)
    rng = np.random.default_rng(7)
    vec = random_band_vector(scale, rng)
    prof = ClassProfile.from_band_vector(vec)
    assert dict(prof.counts) == vec.histogram()


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_profile_weight_classes_per_fibre_bounded(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    d = pattern.scale.d
    for fibre, distinct in pattern.profile.weights_per_fibre().items():
        assert distinct <= math.log2(2 * d)


# --- patterns and the class graph ----------------------------------------------------


def test_pattern_link_canonicalization():
    base = complete_graph(3)
    scale = DyadicScale(5, 3, 2)
    prof = ClassProfile(scale, {(0, 0): 2, (1, 0): 3})
    pat = Pattern(base, prof, {((1, 0), (0, 0)): 2})
    assert pat.link((0, 0), (1, 0)) == 2
    assert pat.link((1, 0), (0, 0)) == 2
    assert pat.link((0, 0), (2, 0)) == 0
    assert list(pat.links) == [((0, 0), (1, 0))]


def test_pattern_rejects_bad_links():
    base = cycle_graph(4)  # fibres 0 and 2 are not adjacent
    scale = DyadicScale(5, 4, 2)
    prof = ClassProfile(scale, {(0, 0): 2, (1, 0): 3, (2, 0): 1})
    with pytest.raises(InvalidPatternError):
        Pattern(base, prof, {((0, 0), (1, 0)): 3})  # exceeds min(2, 3)
    with pytest.raises(InvalidPatternError):
        Pattern(base, prof, {((0, 0), (2, 0)): 1})  # non-adjacent fibres
    with pytest.raises(InvalidPatternError):
        Pattern(base, prof, {((0, 0), (3, 0)): 1})  # empty class
    with pytest.raises(InvalidPatternError):
        Pattern(base, prof, {((0, 0), (1, 0)): -1})
    with pytest.raises(InvalidPatternError):
        Pattern(base, prof, {((0, 0), (1, 0)): 1, ((1, 0), (0, 0)): 1})


def test_pattern_dimension_checks():
    scale = DyadicScale(5, 3, 2)
    prof = ClassProfile(scale, {(0, 0): 1})
    with pytest.raises(DimensionMismatchError):
        Pattern(cycle_graph(4), prof, {})  # h mismatch
    with pytest.raises(DimensionMismatchError):
        Pattern(complete_graph(4), ClassProfile(DyadicScale(5, 4, 2), {}), {})


def test_pattern_restricted():
    base = complete_graph(3)
    scale = DyadicScale(6, 3, 2)
    prof = ClassProfile(scale, {(0, 0): 2, (1, 0): 2, (2, 0): 2})
    links = {((0, 0), (1, 0)): 1, ((1, 0), (2, 0)): 2, ((0, 0), (2, 0)): 1}
    pat = Pattern(base, prof, links)
    sub = pat.restricted({(0, 0), (1, 0)})
    assert dict(sub.profile.counts) == {(0, 0): 2, (1, 0): 2}
    assert dict(sub.links) == {((0, 0), (1, 0)): 1}
    empty = pat.restricted(set())
    assert not empty.profile.counts and not empty.links


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_class_graph_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    graph = ClassGraph(pattern)
    assert sorted(graph.edges) == ref_gamma_edges(pattern)
    for (u, v) in graph.edges:
        assert graph.are_adjacent(u, v) and graph.are_adjacent(v, u)
        assert v in graph.neighbours(u) and u in graph.neighbours(v)
    assert not graph.are_adjacent((0, 0), (0, 0))


def test_class_graph_band_strictness():
    # ratio 4 between exponents 0 and 1: adjacent only when d > 4
    for d, expect in [(4, 0), (5, 1)]:
        base = complete_graph(d + 1)
        scale = DyadicScale(50, d + 1, d)
        prof = ClassProfile(scale, {(0, 0): 1, (1, 1): 1})
        graph = ClassGraph(Pattern(base, prof, {}))
        assert len(graph.edges) == expect


def test_class_graph_degenerate_degree_one():
    base = BaseGraph(2, ((0, 1),))
    scale = DyadicScale(4, 2, 1)
    prof = ClassProfile(scale, {(0, 0): 1, (1, 0): 1})
    assert ClassGraph(Pattern(base, prof, {})).edges == ()


# --- deviations -----------------------------------------------------------------------


def test_edge_deviation_exact_values():
    base = complete_graph(3)
    scale = DyadicScale(30, 3, 2)
    prof = ClassProfile(scale, {(0, 0): 2, (1, 0): 3})
    pat = Pattern(base, prof, {((0, 0), (1, 0)): 2})
    row = edge_deviation(pat, (0, 0), (1, 0))
    assert row.expected == pytest.approx(0.2)
    assert row.relative_gap == pytest.approx(9.0)
    assert row.regime == "large"
    w2 = (1 / math.sqrt(90)) ** 2
    assert row.term == pytest.approx(w2 * 1.8)


def test_edge_deviation_empty_class_convention():
    base = complete_graph(3)
    scale = DyadicScale(30, 3, 2)
    prof = ClassProfile(scale, {(0, 0): 3})
    pat = Pattern(base, prof, {})
    row = edge_deviation(pat, (0, 0), (1, 0))
    assert row.relative_gap == 1.0 and row.expected == 0.0 and row.term == 0.0


def test_regime_cutoff_is_strict():
    base = complete_graph(3)
    n = 1000
    scale = DyadicScale(n, 3, 2)
    prof = ClassProfile(scale, {(0, 0): 100, (1, 0): 100, (2, 0): 100})
    at_cutoff = int((LARGE_DEVIATION_CUTOFF + 1.0) * 100 * 100 / n)  # 73 -> gap 6.3
    pat = Pattern(base, prof, {((0, 0), (1, 0)): at_cutoff,
                               ((0, 0), (2, 0)): 100})
    rows = DeviationTable(pat).rows
    low = rows[((0, 0), (1, 0))]
    high = rows[((0, 0), (2, 0))]
    assert low.relative_gap <= LARGE_DEVIATION_CUTOFF and low.regime == "small"
    assert high.relative_gap > LARGE_DEVIATION_CUTOFF and high.regime == "large"


def test_deviation_rate_anchors():
    with pytest.raises(DeviationDomainError):
        deviation_rate(-1.5)
    assert deviation_rate(-1.0) == 1.0
    assert deviation_rate(0.0) == 0.0
    cutoff = math.e ** 2 - 1.0
    assert deviation_rate(cutoff) == pytest.approx(math.e ** 2 + 1.0, rel=1e-14)


def test_deviation_rate_lower_bounds_on_grid():
    cutoff = math.e ** 2 - 1.0
    grid = np.concatenate([
        np.linspace(-1.0 + 1e-9, 8.0, 50_000),
        np.geomspace(8.0, 1e4, 50_000),
    ])
    for gap in grid.tolist():
        value = deviation_rate(gap)
        if gap <= cutoff:
            assert value >= gap * gap / 15.0 - 1e-12
        else:
            floor = (1.0 + gap / 2.0) * math.log1p(gap)
            assert value >= floor - 1e-12 * max(1.0, abs(floor))


# --- potency --------------------------------------------------------------------------


def test_full_fibre_pattern_has_zero_potency():
    n = 5
    lift = identity_lift(complete_graph(3), n)
    scale = DyadicScale.of(lift)
    vec = DyadicBandVector(scale, np.zeros((3, n), dtype=np.int64),
                           np.ones((3, n), dtype=bool))
    pat, witnesses = extract_pattern(vec, lift)
    assert dict(pat.profile.counts) == {(0, 0): n, (1, 0): n, (2, 0): n}
    assert all(count == n for count in pat.links.values()) and len(pat.links) == 3
    assert witnesses[(0, 0)] == tuple(range(n))
    assert potency(pat) == 0.0


def test_empty_pattern_everything_trivial():
    base = complete_graph(3)
    pat = Pattern(base, ClassProfile(DyadicScale(5, 3, 2), {}), {})
    assert potency(pat) == 0.0 and peak_potency(pat) == 0.0
    assert aggregates(pat).rows == {}
    for reducer in (reduce_large, reduce_small, reduce_general, reduce_pattern):
        report = reducer(pat, 20.0)
        assert report.kept == () and report.removals == ()
        assert report.budget > 0 and report.potency_after == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_potency_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    expected = abs(math.fsum(ref_terms(pattern).values()))
    assert potency(pattern) == pytest.approx(expected, rel=1e-12, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_peak_potency_matches_exhaustive_subsets(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng, base=SMALL_BASES[3])  # cycle: few class edges
    if len(ref_gamma_edges(pattern)) > 16:
        return
    assert peak_potency(pattern) == pytest.approx(
        ref_peak_exhaustive(pattern), rel=1e-12, abs=1e-15)


def test_peak_potency_can_exceed_total_entry_count():
    # three singleton classes of near-maximal weight: each observed count 1
    # sits far above its expectation 1/13, so the positive terms add up to
    # more than the total number of entries
    base = complete_graph(3)
    scale = DyadicScale(13, 3, 2)
    prof = ClassProfile(scale, {(0, 3): 1, (1, 3): 1, (2, 3): 1})
    pat = Pattern(base, prof, {((0, 3), (1, 3)): 1,
                               ((0, 3), (2, 3)): 1,
                               ((1, 3), (2, 3)): 1})
    expected = 3 * (64 / 39) * (12 / 13)
    assert peak_potency(pat) == pytest.approx(expected, rel=1e-12)
    assert peak_potency(pat) > pat.profile.total


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_peak_potency_structural_bounds(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    counts = pattern.profile.counts
    cap = 0.0
    degree = {}
    for (u, v) in ref_gamma_edges(pattern):
        wu, wv = ref_weight(u[1], pattern.scale), ref_weight(v[1], pattern.scale)
        cap += wu * wv * min(counts[u], counts[v])
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    peak = peak_potency(pattern)
    assert peak <= cap + 1e-12
    if degree:
        assert peak <= 5.0 * max(degree.values()) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_potency_matches_restricted_quadratic_form(seed):
    rng = np.random.default_rng(seed)
    base = SMALL_BASES[int(rng.integers(len(SMALL_BASES)))]
    n = int(rng.integers(2, 8))
    lift = random_lift(base, n, rng)
    vec = random_band_vector(DyadicScale.of(lift), rng)
    pat, _ = extract_pattern(vec, lift)
    form = quad_form_restricted(lift, "centered", vec.vector, vec.vector,
                                "comparable")
    assert abs(form) == pytest.approx(2.0 * potency(pat), rel=1e-9, abs=1e-12)


# --- extraction -----------------------------------------------------------------------


def test_extract_zero_vector():
    lift = identity_lift(complete_graph(4), 3)
    vec = DyadicBandVector.zero(DyadicScale.of(lift))
    pat, witnesses = extract_pattern(vec, lift)
    assert not pat.profile.counts and not pat.links and witnesses == {}


def test_extract_singletons_on_identity_lift():
    lift = identity_lift(complete_graph(4), 6)
    scale = DyadicScale.of(lift)
    exps = np.zeros((4, 6), dtype=np.int64)
    mask = np.zeros((4, 6), dtype=bool)
    mask[:, 0] = True  # position zero of every fibre
    pat, witnesses = extract_pattern(DyadicBandVector(scale, exps, mask), lift)
    assert dict(pat.profile.counts) == {(i, 0): 1 for i in range(4)}
    assert len(pat.links) == 6 and all(v == 1 for v in pat.links.values())
    assert witnesses == {(i, 0): (0,) for i in range(4)}


def test_extract_input_validation():
    lift = identity_lift(complete_graph(3), 4)
    with pytest.raises(NotBandVectorError):
        extract_pattern(np.zeros((3, 4)), lift)
    other = DyadicBandVector.zero(DyadicScale(5, 3, 2))
    with pytest.raises(DimensionMismatchError):
        extract_pattern(other, lift)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_extract_census_consistency(seed):
    rng = np.random.default_rng(seed)
    base = SMALL_BASES[int(rng.integers(len(SMALL_BASES)))]
    n = int(rng.integers(2, 8))
    lift = random_lift(base, n, rng)
    vec = random_band_vector(DyadicScale.of(lift), rng)
    pat, witnesses = extract_pattern(vec, lift)
    # witnesses tile the support and agree with the class sizes
    for (fibre, exp), members in witnesses.items():
        assert pat.profile.counts[(fibre, exp)] == len(members)
        for j in members:
            assert vec.nonzero[fibre, j] and vec.exponents[fibre, j] == exp
    assert sum(len(m) for m in witnesses.values()) == int(vec.nonzero.sum())
    # matched-pair counts, recounted per base edge by brute force
    recount = {}
    for (u, v), perm in lift.perms.items():
        for j in range(n):
            jp = int(perm[j])
            if vec.nonzero[u, j] and vec.nonzero[v, jp]:
                key = tuple(sorted([(u, int(vec.exponents[u, j])),
                                    (v, int(vec.exponents[v, jp]))]))
                recount[key] = recount.get(key, 0) + 1
    assert recount == dict(pat.links)


# --- aggregates -----------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_aggregates_match_reference(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    table = aggregates(pattern)
    for vertex, row in table.rows.items():
        nb, tilted, headroom = ref_aggregate(pattern, vertex)
        assert row.neighbour_mass == pytest.approx(nb, rel=1e-12, abs=1e-15)
        assert row.tilted_mass == pytest.approx(tilted, rel=1e-12, abs=1e-15)
        assert row.headroom == pytest.approx(headroom, rel=1e-12)
        assert row.headroom_log == pytest.approx(
            math.log(headroom) / headroom, rel=1e-12)
        for regimes, value in [(("large",), row.local_large),
                               (("small",), row.local_small),
                               (("large", "small"), row.local_potency)]:
            ref = ref_local_potency(pattern, set(table.rows), vertex, regimes)
            assert value == pytest.approx(ref, rel=1e-9, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_headroom_bounds(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    for row in aggregates(pattern).rows.values():
        assert row.headroom >= math.e
        assert row.headroom_log <= 1.18 * row.headroom ** (-2.0 / 3.0)


# --- reductions -----------------------------------------------------------------------


def big_uniform_pattern(h, n, per_class, link):
    base = complete_graph(h)
    scale = DyadicScale(n, h, h - 1)
    prof = ClassProfile(scale, {(i, 0): per_class for i in range(h)})
    links = {((i, 0), (j, 0)): link for i in range(h) for j in range(i + 1, h)}
    return Pattern(base, prof, links)


@pytest.fixture(scope="module")
def large_regime_pattern():
    # singleton classes on a simplex base: every observed pair count 1 sits
    # 1000x above its expectation, so all deviations are in the large regime
    return big_uniform_pattern(h=452, n=1000, per_class=1, link=1)


@pytest.fixture(scope="module")
def small_regime_pattern():
    # chosen so the relative gap 6.389 lands just below the regime cutoff
    # while the local potency still clears all three small-regime conditions
    return big_uniform_pattern(h=600, n=7389, per_class=1000, link=1000)


def test_reduce_keeps_everything_in_large_regime(large_regime_pattern):
    pat = large_regime_pattern
    report = reduce_pattern(pat, 20.0)
    assert report.branch == "large"
    assert report.removals == ()
    assert len(report.kept) == 452
    assert report.potency_after == report.potency_before
    assert report.retention_floor == report.potency_before
    assert report.budget == pytest.approx(30 * 20 * math.sqrt(451))
    table = DeviationTable(pat)
    assert all(r.regime == "large" for r in table.rows.values())


def test_reduce_keeps_everything_in_small_regime(small_regime_pattern):
    pat = small_regime_pattern
    table = DeviationTable(pat)
    assert all(r.regime == "small" for r in table.rows.values())
    gap = next(iter(table.rows.values())).relative_gap
    assert gap == pytest.approx(6.389) and gap < LARGE_DEVIATION_CUTOFF
    report = reduce_pattern(pat, 20.0)
    assert report.branch == "small"
    assert report.removals == () and len(report.kept) == 600
    assert report.budget == pytest.approx(55 * 20 * math.sqrt(599))


def test_reduce_transcripts_verify_large(large_regime_pattern):
    report = reduce_large(large_regime_pattern, 20.0)
    # spot-check survivor conditions on a few vertices with the reference
    pat = large_regime_pattern
    members = set(report.kept)
    for vertex in [(0, 0), (17, 0), (451, 0)]:
        lp = ref_local_potency(pat, members, vertex, ("large",))
        for t in ref_thresholds(pat, vertex, 20.0, "large"):
            assert lp >= t
    assert report.removed_potency == 0.0


def test_reduce_budget_and_retention_random():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        pattern = random_pattern(rng)
        for branch, reducer in [("large", reduce_large), ("small", reduce_small),
                                ("general", reduce_general)]:
            report = reducer(pattern, 20.0)
            ref_verify_reduction(pattern, report, 20.0, branch)


def test_reduce_is_deterministic():
    rng = np.random.default_rng(99)
    for _ in range(10):
        pattern = random_pattern(rng)
        first = reduce_general(pattern, 20.0)
        second = reduce_general(pattern, 20.0)
        assert first == second


def test_reduce_rejects_low_level():
    pat = Pattern(complete_graph(3), ClassProfile(DyadicScale(5, 3, 2), {}), {})
    for reducer in (reduce_large, reduce_small, reduce_general, reduce_pattern):
        with pytest.raises(ConfigError):
            reducer(pat, 19.0)


def test_reduce_dispatch_picks_dominant_regime():
    rng = np.random.default_rng(5)
    seen = set()
    for _ in range(40):
        pattern = random_pattern(rng)
        terms = ref_terms(pattern)
        if not terms:
            continue
        n = pattern.scale.n
        counts = pattern.profile.counts
        heavy = 0.0
        total = 0.0
        for (u, v), term in terms.items():
            total += term
            gap = pattern.links.get((u, v), 0) * n / (counts[u] * counts[v]) - 1.0
            if gap > LARGE_DEVIATION_CUTOFF:
                heavy += term
        expect = "large" if abs(heavy) >= abs(total) / 2.0 else "small"
        report = reduce_pattern(pattern, 20.0)
        assert report.branch == expect
        seen.add(expect)
    assert seen == {"large", "small"}


def test_desk_scale_patterns_empty_out():
    # at small degree the weight-share condition already dwarfs any local
    # potency, so the survivor set is empty
    rng = np.random.default_rng(11)
    pattern = random_pattern(rng, base=complete_graph(4), n=20)
    report = reduce_pattern(pattern, 20.0)
    assert report.kept == ()


# --- neighbour selection ---------------------------------------------------------------


def test_dominant_neighbours_validation():
    base = complete_graph(3)
    prof = ClassProfile(DyadicScale(5, 3, 2), {(0, 0): 1, (1, 0): 1})
    pat = Pattern(base, prof, {})
    with pytest.raises(VertexNotInUError):
        dominant_neighbours(pat, {(1, 0)}, (0, 0), "large")
    with pytest.raises(ConfigError):
        dominant_neighbours(pat, {(0, 0)}, (0, 0), "weird")


def test_dominant_neighbours_no_candidates():
    base = complete_graph(3)
    prof = ClassProfile(DyadicScale(5, 3, 2), {(0, 0): 1, (1, 0): 1})
    pat = Pattern(base, prof, {})
    assert dominant_neighbours(pat, {(0, 0)}, (0, 0), "large") == frozenset()
    # single-member set: the only class has no neighbours inside it
    assert dominant_neighbours(pat, {(0, 0)}, (0, 0), "small") == frozenset()


def test_dominant_neighbours_large_regime(large_regime_pattern):
    pat = large_regime_pattern
    members = set(ClassGraph(pat).vertices)
    picked = dominant_neighbours(pat, members, (0, 0), "large")
    assert len(picked) == 451  # every neighbour clears the absolute gap cut
    terms = ref_terms(pat)
    selected_sum = sum(t for (u, v), t in terms.items()
                       if (u == (0, 0) and v in picked) or (v == (0, 0) and u in picked))
    lp = ref_local_potency(pat, members, (0, 0), ("large",))
    assert abs(selected_sum) >= lp / 2.0


def test_dominant_neighbours_small_regime(small_regime_pattern):
    pat = small_regime_pattern
    members = set(ClassGraph(pat).vertices)
    picked = dominant_neighbours(pat, members, (0, 0), "small")
    assert len(picked) == 599


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_dominant_neighbours_small_keeps_half_the_potency(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    graph = ClassGraph(pattern)
    if not graph.vertices:
        return
    vertex = graph.vertices[int(rng.integers(len(graph.vertices)))]
    members = {v for v in graph.vertices if rng.random() < 0.7}
    members.add(vertex)
    picked = dominant_neighbours(pattern, members, vertex, "small")
    terms = ref_terms(pattern)
    cutoff = math.e ** 2 - 1.0
    n = pattern.scale.n
    counts = pattern.profile.counts
    total = 0.0
    selected = 0.0
    for (u, v), term in terms.items():
        other = v if u == vertex else (u if v == vertex else None)
        if other is None or other not in members:
            continue
        gap = pattern.links.get((u, v), 0) * n / (counts[u] * counts[v]) - 1.0
        if gap <= cutoff:
            total += term
            if other in picked:
                selected += term
    assert abs(selected) >= abs(total) / 2.0 - 1e-12


# --- measure-based selection -----------------------------------------------------------


def test_measure_select_validation():
    with pytest.raises(EmptyInputError):
        measure_select([], 0.5)
    with pytest.raises(ConfigError):
        measure_select([(1.0, 1.0, 1.0)], 0.0)
    with pytest.raises(ConfigError):
        measure_select([(1.0, 1.0, 1.0)], 1.0)
    with pytest.raises(LiftlabError):
        measure_select([(1.0, -1.0, 1.0)], 0.5)


def test_measure_select_uniform_and_tiny_threshold():
    triples = [(2.0, 3.0, 4.0)] * 5
    assert measure_select(triples, 0.5) == (0, 1, 2, 3, 4)
    rng = np.random.default_rng(3)
    triples = [tuple(rng.uniform(0.1, 5.0, size=3)) for _ in range(8)]
    assert measure_select(triples, 1e-9) == tuple(range(8))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_measure_select_mass_guarantee(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 12))
    triples = [tuple(rng.uniform(0.05, 10.0, size=3)) for _ in range(k)]
    threshold = float(rng.uniform(0.05, 0.95))
    chosen = measure_select(triples, threshold)
    total = sum(hv * mu for mu, hv, _ in triples)
    kept = sum(triples[i][1] * triples[i][0] for i in chosen)
    assert kept >= (1.0 - threshold) * total - 1e-12


# --- probability and counting bounds ----------------------------------------------------


def test_probability_bound_trivial_cases():
    base = complete_graph(3)
    scale = DyadicScale(100, 3, 2)
    prof = ClassProfile(scale, {(0, 0): 1})
    pat = Pattern(base, prof, {})
    assert pattern_probability_bound(pat, [], 20.0) == 0.0
    assert pattern_probability_bound(pat, [(0, 0)], 20.0) == pytest.approx(
        -math.log(100))
    with pytest.raises(ConfigError):
        pattern_probability_bound(pat, [(0, 0)], 10.0)
    with pytest.raises(InvalidPatternError):
        pattern_probability_bound(pat, [(1, 0)], 20.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_probability_bound_matches_comb_oracle(seed):
    rng = np.random.default_rng(seed)
    pattern = random_pattern(rng)
    verts = list(pattern.profile.counts)
    if not verts:
        return
    kept = [v for v in verts if rng.random() < 0.7]
    level = float(rng.uniform(20.0, 60.0))
    got = pattern_probability_bound(pattern, kept, level)
    want = ref_probability_bound(pattern, kept, level)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_probability_bound_decreases_with_level():
    rng = np.random.default_rng(17)
    pattern = random_pattern(rng)
    kept = list(pattern.profile.counts)
    if kept:
        assert (pattern_probability_bound(pattern, kept, 40.0)
                <= pattern_probability_bound(pattern, kept, 20.0))


def test_count_bound_example_and_monotonicity():
    bound = pattern_count_bound(8, 3, 2, 2)
    assert math.exp(bound) == pytest.approx(math.log2(24) * 2 ** 12, rel=1e-12)
    assert pattern_count_bound(8, 3, 2, 3) > bound
    assert pattern_count_bound(8, 3, 2, 1) == pytest.approx(math.log(math.log2(24)))
    with pytest.raises(ConfigError):
        pattern_count_bound(8, 3, 2, 0)
    with pytest.raises(ConfigError):
        pattern_count_bound(1, 1, 1, 2)


def ref_enumerate_tiny(n, h, d, max_count, base):
    """Independent pattern count: scan all size assignments over a global
    exponent window, filter the census invariants, then count link choices."""
    cap = 10 * n * h
    emax = 0
    while 4 ** (emax + 1) <= cap:
        emax += 1
    slots = [(i, e) for i in range(h) for e in range(emax + 1)]
    total = 0
    seen = set()
    for sizes in itertools.product(range(min(max_count - 1, n) + 1),
                                   repeat=len(slots)):
        counts = {s: c for s, c in zip(slots, sizes) if c}
        if sum(c * 4 ** e for (_, e), c in counts.items()) > cap:
            continue
        live_exps = [e for (_, e) in counts]
        if live_exps and 2 ** (max(live_exps) - min(live_exps)) > d:
            continue
        if any(sum(c for (i, _), c in counts.items() if i == f) > n
               for f in range(h)):
            continue
        pairs = [
            (u, v) for u, v in itertools.combinations(sorted(counts), 2)
            if base.are_adjacent(u[0], v[0]) and 4 ** abs(u[1] - v[1]) < d]
        for values in itertools.product(
                *(range(min(counts[u], counts[v]) + 1) for u, v in pairs)):
            key = (tuple(sorted(counts.items())),
                   tuple(sorted((p, x) for p, x in zip(pairs, values) if x)))
            seen.add(key)
    return len(seen)


def test_enumerate_patterns_examples():
    assert enumerate_patterns(8, 3, 2, 1) == 1  # only the empty pattern
    count = enumerate_patterns(8, 3, 2, 2)
    assert count == ref_enumerate_tiny(8, 3, 2, 2, cycle_graph(3))
    assert math.log(count) <= pattern_count_bound(8, 3, 2, 2)


def test_enumerate_patterns_guards_and_defaults():
    with pytest.raises(ConfigError):
        enumerate_patterns(8, 3, 2, 0)
    with pytest.raises(ConfigError):
        enumerate_patterns(8, 5, 3, 2)  # no default base for (h=5, d=3)
    with pytest.raises(DimensionMismatchError):
        enumerate_patterns(8, 3, 2, 2, base=complete_graph(4))
    with pytest.raises(TooLargeError):
        enumerate_patterns(64, 3, 2, 64)


def test_enumerate_patterns_with_explicit_base():
    explicit = enumerate_patterns(8, 3, 2, 2, base=cycle_graph(3))
    assert explicit == enumerate_patterns(8, 3, 2, 2)


# --- text formats ------------------------------------------------------------------------


def test_pattern_text_round_trip():
    rng = np.random.default_rng(23)
    for _ in range(20):
        pattern = random_pattern(rng)
        text = pattern_to_text(pattern)
        back = pattern_from_text(text, pattern.base)
        assert back == pattern


def test_pattern_text_errors():
    base = complete_graph(3)
    with pytest.raises(LiftlabError):
        pattern_from_text("not-a-pattern\n", base)
    with pytest.raises(LiftlabError):
        pattern_from_text("lift-pattern\nn 5\nh 3\n", base)  # missing d
    with pytest.raises(LiftlabError):
        pattern_from_text("lift-pattern\nn 5\nh 3\nd 2\nfrob 1\n", base)
    bad_band = "lift-pattern\nn 5\nh 3\nd 2\nband 3\nclass 0 1 2\n"
    with pytest.raises(InvalidPatternError):
        pattern_from_text(bad_band, base)


def test_reduction_transcript_format():
    rng = np.random.default_rng(31)
    pattern = random_pattern(rng)
    report = reduce_general(pattern, 20.0)
    text = reduction_to_text(report)
    lines = text.strip().splitlines()
    assert lines[0] == "reduction"
    assert lines[1] == "branch general"
    assert sum(1 for ln in lines if ln.startswith("remove ")) == len(report.removals)
    assert sum(1 for ln in lines if ln.startswith("keep ")) == len(report.kept)
    assert f"removed {len(report.removals)}" in text
    assert f"kept {len(report.kept)}" in text
