"""Temporal edge storage: ingestion, snapshot slicing, cumulative views,
node statistics, negative sampling, quartile partitioning and synthetic
graph generation.

The edge stream is a sequence of timestamped (src, dst) interactions.
Slices partition the stream into T equal-count periods; the cumulative
view at period t is the undirected, deduplicated union of slices 0..t and
is the graph every scorer trains and infers on. Views are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError, ParseError, SamplingError


@dataclass(frozen=True)
class TimestampedEdge:
    """One interaction record, post-cleaning."""

    src: int
    dst: int
    timestamp: int
    ingest_index: int


@dataclass(frozen=True)
class Snapshot:
    """Deduplicated directed edge set of one period."""

    index: int
    edges: frozenset[tuple[int, int]]
    users: frozenset[int]

    @property
    def sources(self) -> list[int]:
        return sorted({p for p, _ in self.edges})

    def sorted_edges(self) -> list[tuple[int, int]]:
        """Canonical (src, dst) order; the stable iteration order used by
        query building and committee planning."""
        return sorted(self.edges)


class CumulativeView:
    """Undirected adjacency over all interactions up to a period.

    Stores CSR-style sorted neighbor arrays. Derived structures used by
    the scorers (self-loop normalized propagation, mean aggregation,
    transpose permutation) are computed lazily and cached; the underlying
    arrays are frozen.
    """

    def __init__(self, upto: int, num_users: int,
                 indptr: np.ndarray, indices: np.ndarray):
        self.upto = upto
        self.num_users = num_users
        self.indptr = indptr
        self.indices = indices
        self.degree = np.diff(indptr)
        for arr in (self.indptr, self.indices, self.degree):
            arr.setflags(write=False)
        self._derived: dict[str, object] = {}

    @property
    def num_undirected_edges(self) -> int:
        return int(self.indices.shape[0] // 2)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        k = np.searchsorted(nbrs, v)
        return k < nbrs.shape[0] and nbrs[k] == v

    def edge_pairs(self) -> set[tuple[int, int]]:
        """All undirected edges as (min, max) tuples."""
        rows = np.repeat(np.arange(self.num_users), self.degree)
        mask = rows < self.indices
        return set(zip(rows[mask].tolist(), self.indices[mask].tolist()))

    # Derived structures for the scorers ---------------------------------

    def _cache(self, key: str, build):
        if key not in self._derived:
            self._derived[key] = build()
        return self._derived[key]

    def loop_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR with self-loops added: (indptr, indices, rows). Neighbor
        lists stay sorted, so the structure is symmetric."""

        def build():
            n = self.num_users
            counts = self.degree + 1
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            indices = np.empty(indptr[-1], dtype=np.int64)
            for u in range(n):
                s, e = self.indptr[u], self.indptr[u + 1]
                nbrs = self.indices[s:e]
                k = np.searchsorted(nbrs, u)
                pos = indptr[u]
                indices[pos:pos + k] = nbrs[:k]
                indices[pos + k] = u
                indices[pos + k + 1:pos + counts[u]] = nbrs[k:]
            rows = np.repeat(np.arange(n, dtype=np.int64), counts)
            for arr in (indptr, indices, rows):
                arr.setflags(write=False)
            return indptr, indices, rows

        return self._cache("loop_csr", build)

    def sym_norm_data(self) -> np.ndarray:
        """Edge weights of D~^{-1/2} (A + I) D~^{-1/2} on loop_csr."""

        def build():
            indptr, indices, rows = self.loop_csr()
            inv_sqrt = 1.0 / np.sqrt(self.degree + 1.0)
            data = inv_sqrt[rows] * inv_sqrt[indices]
            data.setflags(write=False)
            return data

        return self._cache("sym_norm", build)

    def mean_data(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-normalized (1/deg) weights on the loop-free structure, and
        the matching transpose weights (1/deg of the neighbor)."""

        def build():
            rows = np.repeat(np.arange(self.num_users, dtype=np.int64),
                             self.degree)
            deg = self.degree.astype(np.float64)
            fwd = 1.0 / deg[rows]
            bwd = 1.0 / deg[self.indices]
            fwd.setflags(write=False)
            bwd.setflags(write=False)
            return fwd, bwd

        return self._cache("mean_data", build)

    def pair_keys(self) -> np.ndarray:
        """Sorted int64 keys for vectorized membership tests:
        key = row * num_users + col for every directed adjacency entry."""

        def build():
            rows = np.repeat(np.arange(self.num_users, dtype=np.int64),
                             self.degree)
            keys = rows * np.int64(self.num_users) + self.indices
            keys.setflags(write=False)
            return keys

        return self._cache("pair_keys", build)

    def has_edges(self, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        """Vectorized undirected membership test for (src[i], dst[i])."""
        keys = self.pair_keys()
        if keys.shape[0] == 0:
            return np.zeros(src.shape[0], dtype=bool)
        q = src.astype(np.int64) * np.int64(self.num_users) + dst
        pos = np.minimum(np.searchsorted(keys, q), keys.shape[0] - 1)
        return keys[pos] == q

    def loop_transpose_perm(self) -> np.ndarray:
        """Permutation mapping each loop_csr edge position to the position
        of its reversed pair; valid because the structure is symmetric."""

        def build():
            _, indices, rows = self.loop_csr()
            # loop_csr enumerates pairs in (row, col) order; sorting by
            # (col, row) enumerates the transpose in its own (row, col)
            # order, so data[perm] is the transpose's data array.
            perm = np.lexsort((rows, indices))
            perm.setflags(write=False)
            return perm

        return self._cache("loop_tperm", build)


@dataclass
class NodeStats:
    """Degree and ego-network density of one user."""

    user: int
    degree: int
    clustering: float


@dataclass
class IngestResult:
    edges: list[TimestampedEdge]
    id_map: dict[str, int]
    self_loops_dropped: int


class SnapshotSequence:
    """Ordered periods 0..T-1 plus per-pair occurrence history."""

    def __init__(self, snapshots: list[Snapshot], num_users: int,
                 occurrences: dict[tuple[int, int], np.ndarray],
                 slice_sizes: list[int]):
        self.snapshots = snapshots
        self.num_users = num_users
        self._occurrences = occurrences
        self.slice_sizes = slice_sizes
        self._views: dict[int, CumulativeView] = {}

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def edge_last_seen(self) -> dict[tuple[int, int], int]:
        """Latest period each undirected pair occurred, over all periods."""
        return {pair: int(p[-1]) for pair, p in self._occurrences.items()}

    def last_seen(self, u: int, v: int, upto: int | None = None) -> int:
        """Latest period the pair occurred, optionally clamped to <= upto
        so selection weights never see future recurrences."""
        key = (u, v) if u <= v else (v, u)
        periods = self._occurrences.get(key)
        if periods is None:
            raise GraphError(f"pair ({u}, {v}) never occurred")
        if upto is None:
            return int(periods[-1])
        k = np.searchsorted(periods, upto, side="right")
        if k == 0:
            raise GraphError(f"pair ({u}, {v}) unseen by period {upto}")
        return int(periods[k - 1])

    def view(self, t: int) -> CumulativeView:
        return cumulative_view(self, t)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def ingest_edge_list(source, fmt: str = "auto") -> IngestResult:
    """Parse a whitespace- or comma-separated `src dst timestamp` stream.

    Tokens are remapped to dense 0-based ids in first-seen order; lines
    starting with '#' and blank lines are skipped; self-loops are dropped
    and counted. Returns edges sorted by (timestamp, ingest_index).
    """
    if isinstance(source, (str, bytes)) and not isinstance(source, bytes):
        fh = open(source, "r", encoding="utf-8")
        close = True
    elif isinstance(source, bytes):
        fh = io.StringIO(source.decode("utf-8"))
        close = False
    else:
        fh = source
        close = False

    id_map: dict[str, int] = {}
    edges: list[TimestampedEdge] = []
    dropped = 0
    try:
        index = 0
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",") if ("," in line and fmt != "whitespace") \
                else line.split()
            parts = [p.strip() for p in parts if p.strip()]
            if len(parts) != 3:
                raise ParseError(
                    f"expected 'src dst timestamp', got {line!r}", line_no)
            ts = _parse_timestamp(parts[2], line_no)
            ids = []
            for tok in parts[:2]:
                if tok not in id_map:
                    id_map[tok] = len(id_map)
                ids.append(id_map[tok])
            if ids[0] == ids[1]:
                dropped += 1
                continue
            edges.append(TimestampedEdge(ids[0], ids[1], ts, index))
            index += 1
    finally:
        if close:
            fh.close()

    if not edges:
        raise ParseError("no edges")
    edges.sort(key=lambda e: (e.timestamp, e.ingest_index))
    return IngestResult(edges, id_map, dropped)


def _parse_timestamp(token: str, line_no: int) -> int:
    try:
        return int(token)
    except ValueError:
        pass
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad timestamp {token!r}", line_no) from None
    if not value.is_integer():
        raise ParseError(f"non-integer timestamp {token!r}", line_no)
    return int(value)


def partition_slices(edges: list[TimestampedEdge], num_slices: int,
                     num_users: int | None = None) -> SnapshotSequence:
    """Split the sorted edge stream into `num_slices` contiguous chunks of
    near-equal interaction count (larger chunks first), preserving order.
    """
    if num_slices < 2:
        raise GraphError("need at least 2 slices")
    if num_slices > len(edges):
        raise GraphError(
            f"too many slices: {num_slices} slices for {len(edges)} edges")
    if num_users is None:
        num_users = 1 + max(max(e.src, e.dst) for e in edges)

    total = len(edges)
    base, extra = divmod(total, num_slices)
    sizes = [base + 1] * extra + [base] * (num_slices - extra)

    snapshots: list[Snapshot] = []
    occurrences: dict[tuple[int, int], list[int]] = {}
    pos = 0
    for t, size in enumerate(sizes):
        chunk = edges[pos:pos + size]
        pos += size
        pairs = frozenset((e.src, e.dst) for e in chunk)
        users = frozenset(u for pair in pairs for u in pair)
        snapshots.append(Snapshot(t, pairs, users))
        for p, q in pairs:
            key = (p, q) if p <= q else (q, p)
            hist = occurrences.setdefault(key, [])
            if not hist or hist[-1] != t:
                hist.append(t)

    frozen = {k: np.asarray(v, dtype=np.int64) for k, v in occurrences.items()}
    return SnapshotSequence(snapshots, num_users, frozen, sizes)


def cumulative_view(seq: SnapshotSequence, t: int) -> CumulativeView:
    """Symmetric, deduplicated adjacency over slices 0..t (cached)."""
    if not 0 <= t < len(seq):
        raise GraphError(f"period {t} out of range [0, {len(seq)})")
    if t in seq._views:
        return seq._views[t]

    # Extend the closest earlier cached view instead of re-unioning from 0.
    start = -1
    base_pairs: set[tuple[int, int]] = set()
    for cached_t in sorted(seq._views):
        if cached_t < t:
            start = cached_t
    if start >= 0:
        base_pairs = set(seq._views[start].edge_pairs())
    for tau in range(start + 1, t + 1):
        for p, q in seq.snapshots[tau].edges:
            base_pairs.add((p, q) if p <= q else (q, p))

    n = seq.num_users
    if base_pairs:
        arr = np.asarray(sorted(base_pairs), dtype=np.int64)
        both = np.concatenate([arr, arr[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.ascontiguousarray(both[:, 1])
    else:
        indptr = np.zeros(n + 1, dtype=np.int64)
        indices = np.zeros(0, dtype=np.int64)

    view = CumulativeView(t, n, indptr, indices)
    seq._views[t] = view
    return view


def clustering_coefficient(view: CumulativeView, u: int) -> NodeStats:
    """Degree and ego-network density: fraction of neighbor pairs that are
    themselves connected; 0 when the degree is at most 1."""
    if not 0 <= u < view.num_users:
        raise GraphError(f"user {u} out of range")
    nbrs = view.neighbors(u)
    deg = int(nbrs.shape[0])
    if deg <= 1:
        return NodeStats(u, deg, 0.0)
    links = 0
    nbr_set = nbrs  # sorted
    for v in nbrs:
        links += int(np.searchsorted(view.neighbors(int(v)), nbr_set,
                                     side="right").sum()
                     - np.searchsorted(view.neighbors(int(v)), nbr_set,
                                       side="left").sum())
    # Each neighbor-neighbor edge was counted twice (once per endpoint).
    edges_among = links // 2
    return NodeStats(u, deg, 2.0 * edges_among / (deg * (deg - 1)))


def sample_negatives(view: CumulativeView, src: int, k: int,
                     exclude=(), rng: np.random.Generator | None = None
                     ) -> np.ndarray:
    """k distinct users outside N(src) ∪ exclude ∪ {src}, uniform."""
    if rng is None:
        raise ValueError("rng is required")
    if k < 1:
        raise SamplingError("k must be >= 1")
    mask = np.ones(view.num_users, dtype=bool)
    mask[view.neighbors(src)] = False
    mask[src] = False
    for u in exclude:
        mask[u] = False
    eligible = np.flatnonzero(mask)
    if eligible.shape[0] < k:
        raise SamplingError(
            f"negative pool exhausted for user {src}: "
            f"{eligible.shape[0]} candidates < {k}")
    return rng.choice(eligible, size=k, replace=False)


def quartile_partition(view: CumulativeView, users) -> list[list[int]]:
    """Split users into four near-equal groups by ascending degree
    (ties by user id); group 0 has the lowest degrees."""
    users = sorted(set(int(u) for u in users))
    if len(users) < 4:
        raise GraphError(f"need at least 4 users, got {len(users)}")
    users.sort(key=lambda u: (int(view.degree[u]), u))
    base, extra = divmod(len(users), 4)
    sizes = [base + 1] * extra + [base] * (4 - extra)
    groups, pos = [], 0
    for size in sizes:
        groups.append(users[pos:pos + size])
        pos += size
    return groups


def generate_synthetic(num_users: int, num_edges: int, num_slices: int,
                       model: str = "uniform", seed: int = 0,
                       repeat_prob: float = 0.5) -> SnapshotSequence:
    """Reproducible synthetic interaction stream, partitioned into slices.

    `uniform` draws independent (src, dst) pairs. `preferential` models a
    social interaction stream: with probability `repeat_prob` an existing
    relationship is re-used (interaction streams are dominated by repeat
    contacts), otherwise a fresh rich-get-richer edge is drawn with both
    endpoints proportional to degree + 1.
    """
    if num_users < 4:
        raise GraphError("need at least 4 users")
    if num_edges < num_slices:
        raise GraphError("need at least one edge per slice")
    if model not in ("uniform", "preferential"):
        raise GraphError(f"unknown model {model!r}")
    rng = np.random.default_rng(seed)
    edges: list[TimestampedEdge] = []
    if model == "uniform":
        src = rng.integers(0, num_users, size=num_edges)
        shift = rng.integers(1, num_users, size=num_edges)
        dst = (src + shift) % num_users
        for i in range(num_edges):
            edges.append(TimestampedEdge(int(src[i]), int(dst[i]), i, i))
    else:
        degree = np.ones(num_users, dtype=np.float64)
        seen: list[tuple[int, int]] = []
        for i in range(num_edges):
            if seen and rng.random() < repeat_prob:
                s, d = seen[int(rng.integers(0, len(seen)))]
            else:
                total = degree.sum()
                s = int(rng.choice(num_users, p=degree / total))
                w = degree.copy()
                w[s] = 0.0
                d = int(rng.choice(num_users, p=w / w.sum()))
                seen.append((s, d))
            degree[s] += 1.0
            degree[d] += 1.0
            edges.append(TimestampedEdge(s, d, i, i))
    return partition_slices(edges, num_slices, num_users=num_users)
