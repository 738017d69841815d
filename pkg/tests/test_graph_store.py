"""Temporal graph store: ingestion, slicing, cumulative views, node
statistics, sampling, quartiles, synthetic generation."""

import io

import numpy as np
import pytest

from desocial import graph_store as gs
from desocial.errors import GraphError, ParseError, SamplingError


def make_seq(edge_tuples, T, num_users=None):
    edges = [gs.TimestampedEdge(s, d, t, i)
             for i, (s, d, t) in enumerate(edge_tuples)]
    edges.sort(key=lambda e: (e.timestamp, e.ingest_index))
    return gs.partition_slices(edges, T, num_users=num_users)


# -- ingestion ---------------------------------------------------------------

def test_ingest_drops_self_loops_and_remaps():
    src = io.StringIO("a b 5\nb c 6\na a 7\n")
    result = gs.ingest_edge_list(src)
    assert len(result.edges) == 2
    assert result.id_map == {"a": 0, "b": 1, "c": 2}
    assert result.self_loops_dropped == 1


def test_ingest_stable_order_for_equal_timestamps():
    src = io.StringIO("x y 3\np q 3\nm n 3\n")
    result = gs.ingest_edge_list(src)
    pairs = [(e.src, e.dst) for e in result.edges]
    assert pairs == [(0, 1), (2, 3), (4, 5)]
    assert [e.ingest_index for e in result.edges] == [0, 1, 2]


def test_ingest_sorts_by_timestamp_then_index():
    src = io.StringIO("a b 9\nc d 1\ne f 9\n")
    result = gs.ingest_edge_list(src)
    assert [(e.src, e.dst) for e in result.edges] == [(2, 3), (0, 1), (4, 5)]


def test_ingest_comma_and_comments():
    src = io.StringIO("# header\nu1,u2,10\n\nu2,u3,11\n")
    result = gs.ingest_edge_list(src)
    assert len(result.edges) == 2


def test_ingest_malformed_record_reports_line():
    with pytest.raises(ParseError, match="line 2"):
        gs.ingest_edge_list(io.StringIO("a b 1\nbroken\n"))
    with pytest.raises(ParseError, match="timestamp"):
        gs.ingest_edge_list(io.StringIO("a b xyz\n"))


def test_ingest_empty_input():
    with pytest.raises(ParseError, match="no edges"):
        gs.ingest_edge_list(io.StringIO("# nothing\n"))
    with pytest.raises(ParseError, match="no edges"):
        gs.ingest_edge_list(io.StringIO("a a 1\n"))  # only self-loops


# -- slicing -----------------------------------------------------------------

def test_partition_exact_divisibility():
    seq = make_seq([(i % 5, 5 + i % 5, i) for i in range(100)], 4,
                   num_users=10)
    assert seq.slice_sizes == [25, 25, 25, 25]


def test_partition_ceil_floor_sizes():
    seq = make_seq([(0, 1 + i % 3, i) for i in range(10)], 3, num_users=5)
    assert seq.slice_sizes == [4, 3, 3]


def test_partition_conservation_and_gap_bound():
    rng = np.random.default_rng(0)
    tuples = [(int(a), int(b), i) for i, (a, b) in
              enumerate(rng.integers(0, 30, size=(997, 2))) if a != b]
    seq = make_seq(tuples, 7, num_users=30)
    assert sum(seq.slice_sizes) == len(tuples)
    assert max(seq.slice_sizes) - min(seq.slice_sizes) <= 1
    assert len(seq) == 7


def test_partition_too_many_slices():
    with pytest.raises(GraphError, match="too many slices"):
        make_seq([(0, 1, 0), (1, 2, 1)], 3, num_users=3)


def test_snapshot_users_cover_edges():
    seq = make_seq([(0, 1, 0), (1, 2, 1), (0, 1, 2), (3, 0, 3)], 2,
                   num_users=4)
    for snap in seq.snapshots:
        for p, q in snap.edges:
            assert p in snap.users and q in snap.users
        assert snap.users == {u for e in snap.edges for u in e}


# -- cumulative views --------------------------------------------------------

def test_cumulative_base_case_and_idempotence():
    seq = make_seq([(3, 7, 0), (1, 2, 1), (3, 7, 2), (3, 7, 3)], 4,
                   num_users=8)
    v0 = gs.cumulative_view(seq, 0)
    assert v0.has_edge(3, 7) and v0.has_edge(7, 3)
    v1 = gs.cumulative_view(seq, 1)
    assert v1.num_undirected_edges == 2  # (3,7) deduplicated


def test_cumulative_matches_bruteforce_union():
    rng = np.random.default_rng(7)
    tuples = [(int(a), int(b), i) for i, (a, b) in
              enumerate(rng.integers(0, 25, size=(300, 2))) if a != b]
    seq = make_seq(tuples, 5, num_users=25)
    for t in range(5):
        expect = set()
        for tau in range(t + 1):
            for p, q in seq.snapshots[tau].edges:
                expect.add((min(p, q), max(p, q)))
        view = gs.cumulative_view(seq, t)
        assert view.edge_pairs() == expect
        # symmetric adjacency with consistent degrees
        np.testing.assert_array_equal(view.degree, np.diff(view.indptr))


def test_cumulative_monotone():
    rng = np.random.default_rng(8)
    tuples = [(int(a), int(b), i) for i, (a, b) in
              enumerate(rng.integers(0, 15, size=(120, 2))) if a != b]
    seq = make_seq(tuples, 6, num_users=15)
    prev = set()
    for t in range(6):
        cur = gs.cumulative_view(seq, t).edge_pairs()
        assert prev <= cur
        prev = cur


def test_cumulative_out_of_range():
    seq = make_seq([(0, 1, 0), (1, 2, 1)], 2, num_users=3)
    with pytest.raises(GraphError):
        gs.cumulative_view(seq, 2)


def test_last_seen_clamps_to_period():
    seq = make_seq([(3, 7, 0), (1, 2, 1), (0, 1, 2), (7, 3, 3)], 4,
                   num_users=8)
    assert seq.edge_last_seen[(3, 7)] == 3  # reversed orientation counts
    assert seq.last_seen(3, 7) == 3
    assert seq.last_seen(3, 7, upto=2) == 0
    assert seq.last_seen(7, 3, upto=0) == 0
    with pytest.raises(GraphError):
        seq.last_seen(1, 2, upto=0)


# -- clustering --------------------------------------------------------------

def triangle_count_oracle(view, u):
    nbrs = list(view.neighbors(u))
    deg = len(nbrs)
    if deg <= 1:
        return deg, 0.0
    among = 0
    for i in range(deg):
        for j in range(i + 1, deg):
            if view.has_edge(int(nbrs[i]), int(nbrs[j])):
                among += 1
    return deg, 2.0 * among / (deg * (deg - 1))


def test_clustering_triangle_and_star():
    seq = make_seq([(0, 1, 0), (1, 2, 1), (0, 2, 2)], 2, num_users=3)
    view = gs.cumulative_view(seq, 1)
    for u in range(3):
        assert gs.clustering_coefficient(view, u).clustering == 1.0

    star = make_seq([(0, 1, 0), (0, 2, 1), (0, 3, 2), (0, 4, 3)], 2,
                    num_users=5)
    view = gs.cumulative_view(star, 1)
    stats = gs.clustering_coefficient(view, 0)
    assert stats.degree == 4 and stats.clustering == 0.0
    # leaves have degree 1 -> clustering 0
    assert gs.clustering_coefficient(view, 1).clustering == 0.0


def test_clustering_matches_bruteforce_on_random_graphs():
    rng = np.random.default_rng(5)
    tuples = [(int(a), int(b), i) for i, (a, b) in
              enumerate(rng.integers(0, 30, size=(160, 2))) if a != b]
    seq = make_seq(tuples, 2, num_users=30)
    view = gs.cumulative_view(seq, 1)
    for u in range(30):
        stats = gs.clustering_coefficient(view, u)
        deg, expect = triangle_count_oracle(view, u)
        assert stats.degree == deg
        assert stats.clustering == expect
        assert 0.0 <= stats.clustering <= 1.0


def test_clustering_isolated_node():
    seq = make_seq([(0, 1, 0), (0, 1, 1)], 2, num_users=5)
    view = gs.cumulative_view(seq, 1)
    stats = gs.clustering_coefficient(view, 4)
    assert stats.degree == 0 and stats.clustering == 0.0


# -- negative sampling -------------------------------------------------------

def test_sample_negatives_exhausted_pool():
    # src adjacent to all other users
    seq = make_seq([(0, i, i) for i in range(1, 5)], 2, num_users=5)
    view = gs.cumulative_view(seq, 1)
    with pytest.raises(SamplingError, match="exhausted"):
        gs.sample_negatives(view, 0, 1, rng=np.random.default_rng(0))


def test_sample_negatives_forced_choice():
    seq = make_seq([(0, 1, 0), (0, 2, 1), (3, 1, 2)], 2, num_users=4)
    view = gs.cumulative_view(seq, 1)
    out = gs.sample_negatives(view, 0, 1, rng=np.random.default_rng(0))
    assert list(out) == [3]


def test_sample_negatives_validity_and_determinism():
    rng = np.random.default_rng(2)
    tuples = [(int(a), int(b), i) for i, (a, b) in
              enumerate(rng.integers(0, 40, size=(200, 2))) if a != b]
    seq = make_seq(tuples, 3, num_users=40)
    view = gs.cumulative_view(seq, 2)
    nbrs = set(int(v) for v in view.neighbors(5))
    a = gs.sample_negatives(view, 5, 6, exclude=(17,),
                            rng=np.random.default_rng(33))
    b = gs.sample_negatives(view, 5, 6, exclude=(17,),
                            rng=np.random.default_rng(33))
    assert list(a) == list(b)
    assert len(set(a.tolist())) == 6
    for v in a:
        assert int(v) not in nbrs and int(v) != 5 and int(v) != 17


def test_sample_negatives_uniformity_chi2():
    # 10,000 draws of k=1: frequencies uniform over the eligible pool
    seq = make_seq([(0, 1, 0), (0, 2, 1)], 2, num_users=100)
    view = gs.cumulative_view(seq, 1)
    rng = np.random.default_rng(99)
    counts = np.zeros(100)
    for _ in range(10000):
        counts[int(gs.sample_negatives(view, 0, 1, rng=rng)[0])] += 1
    eligible = [u for u in range(100) if u not in (0, 1, 2)]
    assert counts[[0, 1, 2]].sum() == 0
    expected = 10000 / len(eligible)
    chi2 = float(((counts[eligible] - expected) ** 2 / expected).sum())
    # 96 dof; critical value at alpha=0.001 is ~146.6
    assert chi2 < 146.6


# -- quartiles ---------------------------------------------------------------

def test_quartile_sorted_split():
    # degrees 1..8 via a star-chain construction
    tuples = []
    t = 0
    for u in range(1, 9):  # user u gets degree u by linking to enough peers
        for v in range(u):
            tuples.append((u, 9 + v, t))
            t += 1
    seq = make_seq(tuples, 2, num_users=30)
    view = gs.cumulative_view(seq, 1)
    groups = gs.quartile_partition(view, range(1, 9))
    assert groups[0] == [1, 2] and groups[3] == [7, 8]


def test_quartile_balance_and_tiebreak():
    seq = make_seq([(0, 1, 0), (2, 3, 1), (4, 5, 2), (6, 7, 3)], 2,
                   num_users=8)
    view = gs.cumulative_view(seq, 1)
    groups = gs.quartile_partition(view, range(7))  # all-equal degrees
    sizes = [len(g) for g in groups]
    assert max(sizes) - min(sizes) <= 1
    assert sizes == [2, 2, 2, 1]
    assert groups[0] == [0, 1]  # tie-break by ascending id


def test_quartile_too_few_users():
    seq = make_seq([(0, 1, 0), (1, 2, 1)], 2, num_users=4)
    view = gs.cumulative_view(seq, 1)
    with pytest.raises(GraphError):
        gs.quartile_partition(view, [0, 1, 2])


# -- synthetic generation ----------------------------------------------------

def test_synthetic_determinism():
    a = gs.generate_synthetic(20, 100, 4, model="uniform", seed=7)
    b = gs.generate_synthetic(20, 100, 4, model="uniform", seed=7)
    for sa, sb in zip(a.snapshots, b.snapshots):
        assert sa.edges == sb.edges
    c = gs.generate_synthetic(20, 100, 4, model="uniform", seed=8)
    assert any(sa.edges != sc.edges
               for sa, sc in zip(a.snapshots, c.snapshots))


def test_synthetic_preferential_rich_get_richer():
    seq = gs.generate_synthetic(50, 500, 4, model="preferential", seed=3)
    view = gs.cumulative_view(seq, 3)
    assert view.degree.max() >= 2 * view.degree.mean()


def test_synthetic_minimal_case():
    seq = gs.generate_synthetic(4, 4, 4, model="uniform", seed=0)
    assert seq.slice_sizes == [1, 1, 1, 1]


def test_synthetic_infeasible():
    with pytest.raises(GraphError):
        gs.generate_synthetic(3, 10, 2, model="uniform", seed=0)
    with pytest.raises(GraphError):
        gs.generate_synthetic(10, 3, 4, model="uniform", seed=0)
    with pytest.raises(GraphError):
        gs.generate_synthetic(10, 10, 2, model="nope", seed=0)


def test_synthetic_timestamps_strictly_increasing():
    seq = gs.generate_synthetic(10, 50, 5, model="preferential", seed=1)
    # slices partition the stream in order; sizes are near-equal
    assert sum(seq.slice_sizes) == 50
    assert max(seq.slice_sizes) - min(seq.slice_sizes) <= 1
