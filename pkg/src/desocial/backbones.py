"""The five link-scoring architectures and their training loop.

Every validator owns an independent parameter set: a learnable node
embedding table (the datasets carry no node features) plus per-
architecture weights. All architectures decode a pair (p, q) as
sigmoid(dot(z_p, z_q)) over their output node vectors, so rankings and
votes depend only on dot-product order.

Architectures over embeddings E (N x d), message graph = cumulative view:
  MLP   two affine+relu layers on E; ignores the graph entirely.
  GCN   two rounds of sym-normalized self-loop propagation, each followed
        by an affine map and relu.
  GAT   two rounds of multi-head attention: per-edge logits from
        separately transformed endpoint features through a leaky
        rectifier, softmaxed over each node's neighborhood (self-loop
        included); head outputs averaged; relu between rounds.
  SAGE  two rounds of mean-of-neighbors aggregation concatenated with the
        self features then an affine map; relu between rounds.
  SGC   `hops` propagation steps with no nonlinearity, one linear map,
        then a two-layer feedforward decoder head.

All comparisons between candidate scores happen on raw logits: sigmoid is
strictly monotone, and float64 probabilities saturate to exactly 1.0 near
logit 37, which would fabricate ties between strong candidates.
"""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import autograd as ag
from .errors import GraphError, TrainError
from .graph_store import CumulativeView, Snapshot

LEAKY_SLOPE = 0.2
LOGIT_CLIP = 35.0  # sigmoid(35) is still strictly < 1.0 in float64
CHECKPOINT_VERSION = 1


class BackboneKind(enum.Enum):
    MLP = "MLP"
    GCN = "GCN"
    GAT = "GAT"
    SAGE = "SAGE"
    SGC = "SGC"

    def __str__(self) -> str:
        return self.value


# Canonical order; also the tie-break order for algorithm selection.
CANONICAL_POOL = (BackboneKind.MLP, BackboneKind.GCN, BackboneKind.GAT,
                  BackboneKind.SAGE, BackboneKind.SGC)


def parse_kind(name: str) -> BackboneKind:
    try:
        return BackboneKind(name.strip().upper())
    except ValueError:
        raise GraphError(f"unknown backbone {name!r}") from None


@dataclass(frozen=True)
class TrainingHyper:
    learning_rate: float = 0.01
    dropout: float = 0.0
    epochs: int = 100
    patience: int = 20
    embed_dim: int = 64
    neg_ratio: int = 1
    heads: int = 4
    hops: int = 2

    def __post_init__(self):
        if self.patience > self.epochs:
            raise TrainError("patience must be <= epochs")
        if self.embed_dim < 1:
            raise TrainError("embed_dim must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise TrainError("dropout must be in [0, 1)")


@dataclass
class TrainReport:
    losses: list[float] = field(default_factory=list)
    val_scores: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = float("-inf")


def sigmoid(x):
    x = np.clip(x, -LOGIT_CLIP, LOGIT_CLIP)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)),
                    np.exp(x) / (1.0 + np.exp(x)))


class LinkScorer:
    """One validator's scorer: architecture kind + parameters + seed.

    After construction (or training) the scorer must be bound to a view
    with bind() before score()/score_pairs() are used; binding runs the
    encoder over that view and caches the node vectors.
    """

    def __init__(self, kind: BackboneKind, owner: int, num_users: int,
                 hyper: TrainingHyper, seed: int):
        self.kind = kind
        self.owner = owner
        self.num_users = num_users
        self.hyper = hyper
        self.seed = seed
        self.params = _init_params(kind, num_users, hyper,
                                   np.random.default_rng(seed))
        self._z: np.ndarray | None = None
        self._bound_upto: int | None = None

    # -- parameters -------------------------------------------------------

    def param_vector(self) -> np.ndarray:
        return np.concatenate([p.data.ravel() for _, p in
                               sorted(self.params.items())])

    def clone_param_data(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_param_data(self, data: dict[str, np.ndarray]) -> None:
        for k, p in self.params.items():
            p.data = data[k].copy()
        self._z = None
        self._bound_upto = None

    # -- encoding and scoring ---------------------------------------------

    def encode(self, view: CumulativeView, *, training: bool = False,
               rng: np.random.Generator | None = None) -> ag.Tensor:
        """Node vectors over `view`; with training=True, dropout masks are
        drawn from rng and the returned tensor carries the tape."""
        return _ENCODERS[self.kind](self, view, training, rng)

    def bind(self, view: CumulativeView) -> "LinkScorer":
        self._z = self.encode(view).data
        self._bound_upto = view.upto
        return self

    @property
    def node_vectors(self) -> np.ndarray:
        if self._z is None:
            raise TrainError("scorer is not bound to a view")
        return self._z

    def set_node_vectors(self, z: np.ndarray) -> None:
        """Directly install node vectors (test fixtures)."""
        self._z = np.asarray(z, dtype=np.float64)
        self._bound_upto = None

    def pair_logits(self, src, dst) -> np.ndarray:
        z = self.node_vectors
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.size and (src.max() >= z.shape[0] or dst.max() >= z.shape[0]):
            raise GraphError("user id out of range")
        return K.edge_rowdot(np.ascontiguousarray(src),
                             np.ascontiguousarray(dst), z, z)

    def score(self, p: int, q: int) -> float:
        """P(connection p-q) = sigmoid(dot(z_p, z_q)); symmetric in (p, q)."""
        return float(sigmoid(self.pair_logits([p], [q])[0]))

    def score_pairs(self, src, dst) -> np.ndarray:
        return sigmoid(self.pair_logits(src, dst))


def init_scorer(kind: BackboneKind, num_users: int, hyper: TrainingHyper,
                seed: int, owner: int = -1) -> LinkScorer:
    """Fresh scorer with seeded scaled-uniform parameters, untrained."""
    if num_users < 2:
        raise TrainError("need at least 2 users")
    if not isinstance(kind, BackboneKind):
        raise TrainError(f"unsupported backbone kind {kind!r}")
    return LinkScorer(kind, owner, num_users, hyper, seed)


def _uniform(rng, rows, cols, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return ag.Parameter(rng.uniform(-bound, bound, size=(rows, cols)))


def _init_params(kind, num_users, hyper, rng):
    d = hyper.embed_dim
    params = {"embed": _uniform(rng, num_users, d, d)}
    if kind in (BackboneKind.MLP, BackboneKind.GCN):
        params["w1"] = _uniform(rng, d, d, d)
        params["b1"] = ag.Parameter(np.zeros((1, d)))
        params["w2"] = _uniform(rng, d, d, d)
        params["b2"] = ag.Parameter(np.zeros((1, d)))
    elif kind is BackboneKind.SAGE:
        params["w1"] = _uniform(rng, 2 * d, d, 2 * d)
        params["b1"] = ag.Parameter(np.zeros((1, d)))
        params["w2"] = _uniform(rng, 2 * d, d, 2 * d)
        params["b2"] = ag.Parameter(np.zeros((1, d)))
    elif kind is BackboneKind.SGC:
        params["w0"] = _uniform(rng, d, d, d)
        params["b0"] = ag.Parameter(np.zeros((1, d)))
        params["w1"] = _uniform(rng, d, d, d)
        params["b1"] = ag.Parameter(np.zeros((1, d)))
        params["w2"] = _uniform(rng, d, d, d)
        params["b2"] = ag.Parameter(np.zeros((1, d)))
    elif kind is BackboneKind.GAT:
        # Multi-head with dimension splitting: per-head width d/heads,
        # head outputs concatenated back to the full width.
        d_h = max(1, d // hyper.heads)
        width = d_h * hyper.heads
        d_in = d
        for layer in (1, 2):
            for h in range(hyper.heads):
                params[f"ws{layer}_{h}"] = _uniform(rng, d_in, d_h, d_in)
                params[f"wt{layer}_{h}"] = _uniform(rng, d_in, d_h, d_in)
                params[f"a{layer}_{h}"] = ag.Parameter(
                    rng.uniform(-1.0 / np.sqrt(d_h), 1.0 / np.sqrt(d_h),
                                size=d_h))
            params[f"b{layer}"] = ag.Parameter(np.zeros((1, width)))
            d_in = width
    else:  # pragma: no cover
        raise TrainError(f"unsupported backbone kind {kind!r}")
    return params


def _dropout(x: ag.Tensor, p: float, training: bool, rng):
    if not training or p <= 0.0:
        return x
    if rng is None:
        raise TrainError("training-mode encode requires an rng for dropout")
    mask = (rng.random(x.data.shape) >= p) / (1.0 - p)
    return ag.mul_const(x, mask)


def _encode_mlp(s: LinkScorer, view, training, rng):
    p = s.params
    h = ag.relu(ag.add(ag.matmul(p["embed"], p["w1"]), p["b1"]))
    h = _dropout(h, s.hyper.dropout, training, rng)
    return ag.add(ag.matmul(h, p["w2"]), p["b2"])


def _encode_gcn(s: LinkScorer, view, training, rng):
    p = s.params
    indptr, indices, _ = view.loop_csr()
    data = view.sym_norm_data()
    h = ag.csr_propagate(p["embed"], indptr, indices, data, data)
    h = ag.relu(ag.add(ag.matmul(h, p["w1"]), p["b1"]))
    h = _dropout(h, s.hyper.dropout, training, rng)
    h = ag.csr_propagate(h, indptr, indices, data, data)
    return ag.relu(ag.add(ag.matmul(h, p["w2"]), p["b2"]))


def _encode_sage(s: LinkScorer, view, training, rng):
    p = s.params
    fwd, bwd = view.mean_data()
    x = p["embed"]
    mean = ag.csr_propagate(x, view.indptr, view.indices, fwd, bwd)
    h = ag.relu(ag.add(ag.matmul(ag.concat_cols(x, mean), p["w1"]), p["b1"]))
    h = _dropout(h, s.hyper.dropout, training, rng)
    mean = ag.csr_propagate(h, view.indptr, view.indices, fwd, bwd)
    return ag.add(ag.matmul(ag.concat_cols(h, mean), p["w2"]), p["b2"])


def _encode_sgc(s: LinkScorer, view, training, rng):
    p = s.params
    indptr, indices, _ = view.loop_csr()
    data = view.sym_norm_data()
    h = p["embed"]
    for _ in range(s.hyper.hops):
        h = ag.csr_propagate(h, indptr, indices, data, data)
    h = ag.add(ag.matmul(h, p["w0"]), p["b0"])
    h = ag.relu(ag.add(ag.matmul(h, p["w1"]), p["b1"]))
    h = _dropout(h, s.hyper.dropout, training, rng)
    return ag.add(ag.matmul(h, p["w2"]), p["b2"])


def _encode_gat(s: LinkScorer, view, training, rng):
    p = s.params
    indptr, indices, rows = view.loop_csr()
    tperm = view.loop_transpose_perm()
    h = p["embed"]
    for layer in (1, 2):
        heads = []
        for hd in range(s.hyper.heads):
            src = ag.matmul(h, p[f"ws{layer}_{hd}"])
            tgt = ag.matmul(h, p[f"wt{layer}_{hd}"])
            logits = ag.gat_attention_logits(src, tgt, p[f"a{layer}_{hd}"],
                                             rows, indices, LEAKY_SLOPE)
            alpha = ag.edge_softmax(logits, indptr)
            heads.append(ag.edge_aggregate(alpha, tgt, indptr, indices,
                                           rows, tperm))
        out = heads[0]
        for other in heads[1:]:
            out = ag.concat_cols(out, other)
        h = ag.add(out, p[f"b{layer}"])
        if layer == 1:
            h = ag.relu(h)
            h = _dropout(h, s.hyper.dropout, training, rng)
    return h


_ENCODERS = {
    BackboneKind.MLP: _encode_mlp,
    BackboneKind.GCN: _encode_gcn,
    BackboneKind.SAGE: _encode_sage,
    BackboneKind.SGC: _encode_sgc,
    BackboneKind.GAT: _encode_gat,
}


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _sample_epoch_negatives(view: CumulativeView, src: np.ndarray,
                            dst: np.ndarray, rng) -> np.ndarray:
    """One uniform non-neighbor (also != src, != dst) per positive."""
    n = view.num_users
    neg = rng.integers(0, n, size=src.shape[0])
    pending = np.arange(src.shape[0])
    for _ in range(200):
        s = src[pending]
        c = neg[pending]
        bad = (c == s) | (c == dst[pending]) | view.has_edges(s, c)
        pending = pending[bad]
        if pending.size == 0:
            return neg
        neg[pending] = rng.integers(0, n, size=pending.size)
    # Pathological case (near-complete adjacency row): fall back to
    # excluding only the pair endpoints.
    bad = (neg == src) | (neg == dst)
    while bad.any():
        neg[bad] = rng.integers(0, n, size=int(bad.sum()))
        bad = (neg == src) | (neg == dst)
    return neg


class _Adam:
    """Adam updates over the scorer's parameter dict (deterministic:
    no state beyond the moments, which start at zero)."""

    def __init__(self, params: dict, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for key, p in self.params.items():
            if p.grad is None:
                continue
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(p.grad)
            p.data -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def train_scorer(scorer: LinkScorer, message_view: CumulativeView,
                 supervision: Snapshot | list[tuple[int, int]],
                 validation: list[tuple[int, int, int]],
                 rng: np.random.Generator,
                 max_period: int | None = None) -> TrainReport:
    """BCE training with Adam updates and early stopping.

    Supervision edges are the positives; `neg_ratio` negatives per
    positive are resampled every epoch from non-neighbors in the message
    view. Validation is a list of (p, q_pos, q_neg) triples scored as
    Acc@2; training stops once the validation score has not improved for
    `patience` epochs, and the best-validation parameters are restored.

    `max_period` is the test-isolation watermark: both the message view
    and the supervision snapshot must precede it.
    """
    if isinstance(supervision, Snapshot):
        sup_index = supervision.index
        sup_edges = supervision.sorted_edges()
    else:
        sup_index = None
        sup_edges = sorted(supervision)
    if not sup_edges:
        raise TrainError("empty supervision edge set")
    if max_period is not None:
        if message_view.upto >= max_period:
            raise TrainError(
                f"message view at {message_view.upto} breaches watermark "
                f"{max_period}")
        if sup_index is not None and sup_index >= max_period:
            raise TrainError(
                f"supervision snapshot {sup_index} breaches watermark "
                f"{max_period}")

    hyper = scorer.hyper
    src = np.asarray([e[0] for e in sup_edges], dtype=np.int64)
    dst = np.asarray([e[1] for e in sup_edges], dtype=np.int64)
    if hyper.neg_ratio > 1:
        src_rep = np.repeat(src, hyper.neg_ratio)
        dst_rep = np.repeat(dst, hyper.neg_ratio)
    else:
        src_rep, dst_rep = src, dst

    val_p = np.asarray([v[0] for v in validation], dtype=np.int64)
    val_pos = np.asarray([v[1] for v in validation], dtype=np.int64)
    val_neg = np.asarray([v[2] for v in validation], dtype=np.int64)

    report = TrainReport()
    best_params: dict[str, np.ndarray] | None = None
    since_best = 0
    opt = _Adam(scorer.params, hyper.learning_rate)

    for epoch in range(hyper.epochs):
        neg = _sample_epoch_negatives(message_view, src_rep, dst_rep, rng)
        for p in scorer.params.values():
            p.grad = None
        z = scorer.encode(message_view, training=True, rng=rng)
        pos_logits = ag.pair_dots(z, src, dst)
        neg_logits = ag.pair_dots(z, src_rep, neg)
        loss = ag.binary_cross_entropy_with_logits(pos_logits, neg_logits)
        loss_val = float(loss.data)
        if not np.isfinite(loss_val):
            raise TrainError(f"training diverged at epoch {epoch}")
        loss.backward()
        opt.step()
        report.losses.append(loss_val)

        if val_p.size:
            z_eval = scorer.encode(message_view).data
            lp = K.edge_rowdot(val_p, val_pos, z_eval, z_eval)
            ln = K.edge_rowdot(val_p, val_neg, z_eval, z_eval)
            val_score = float(np.mean(lp > ln))
        else:
            val_score = -float(loss_val)
        report.val_scores.append(val_score)

        if val_score > report.best_val:
            report.best_val = val_score
            report.best_epoch = epoch
            best_params = scorer.clone_param_data()
            since_best = 0
        else:
            since_best += 1
        if since_best >= hyper.patience:
            break

    if best_params is not None:
        scorer.load_param_data(best_params)
    return report


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------

def save_scorer(scorer: LinkScorer, path) -> None:
    """Versioned npz dump; loading round-trips to bitwise-equal scores."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "kind": scorer.kind.value,
        "owner": scorer.owner,
        "num_users": scorer.num_users,
        "seed": scorer.seed,
        "hyper": dataclasses.asdict(scorer.hyper),
    }
    arrays = {f"param_{k}": p.data for k, p in scorer.params.items()}
    arrays["meta_json"] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **arrays)


def load_scorer(path) -> LinkScorer:
    with np.load(path) as blob:
        meta = json.loads(bytes(blob["meta_json"]).decode("utf-8"))
        if meta["version"] != CHECKPOINT_VERSION:
            raise TrainError(
                f"unsupported checkpoint version {meta['version']}")
        hyper = TrainingHyper(**meta["hyper"])
        scorer = LinkScorer(parse_kind(meta["kind"]), meta["owner"],
                            meta["num_users"], hyper, meta["seed"])
        for key in scorer.params:
            scorer.params[key].data = blob[f"param_{key}"].copy()
    return scorer
