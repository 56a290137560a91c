"""Desk-scale knowledge-graph embedding models.

Four scorers over entity/relation embedding tables:

    transe    s(h,r,t) = -|| e_h + w_r - e_t ||_2
    distmult  s(h,r,t) = sum_i e_h[i] * w_r[i] * e_t[i]
    rescal    s(h,r,t) = e_h^T W_r e_t          (full dim x dim relation matrix)
    rotate    s(h,r,t) = -|| e_h o r - e_t ||_2  (complex entities, unit-modulus
              relation entries parameterized by phases in [0, 2pi))

Tables are stored float32 (matching the on-disk format, so serialization
round-trips bit-exactly); all arithmetic upcasts to float64.  Training is
binary cross-entropy over sigmoid scores with uniform corrupt-head/tail
negative sampling (margin ranking available for transe), analytic gradients,
and sgd or adagrad updates.  Everything is deterministic under the config
seed in single-worker mode.

Model files: magic ``KGXM``, version byte, kind byte, dim as little-endian
uint32, entity/relation counts, length-prefixed UTF-8 vocabulary labels, then
the float32 little-endian tables in entity-major order.
"""

from __future__ import annotations

import io
import logging
import struct
from dataclasses import dataclass, replace

import numpy as np

from kgxeval.data import Triple, TripleSet, Vocabulary
from kgxeval.errors import DataError, FormatError, TrainingError
from kgxeval.metrics import TieStrategy, masked_rank
from kgxeval.sysout import ExampleRecord, SystemOutput, make_header

log = logging.getLogger(__name__)

MODEL_KINDS = ("transe", "distmult", "rescal", "rotate")
_KIND_BYTES = {kind: i for i, kind in enumerate(MODEL_KINDS)}

_MAGIC = b"KGXM"
_VERSION = 1
_NORM_EPS = 1e-12
_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class KgeModel:
    kind: str
    dim: int
    entity_table: np.ndarray  # float32, (E, dim) or (E, 2*dim) for rotate
    relation_table: np.ndarray  # float32, (R, dim), (R, dim, dim) for rescal
    vocab: Vocabulary

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DataError(f"unknown model kind {self.kind!r}")
        e_shape, r_shape = table_shapes(
            self.kind, self.dim, self.vocab.n_entities, self.vocab.n_relations
        )
        if self.entity_table.shape != e_shape or self.entity_table.dtype != np.float32:
            raise DataError(
                f"{self.kind}: entity table must be float32 {e_shape}, "
                f"got {self.entity_table.dtype} {self.entity_table.shape}"
            )
        if self.relation_table.shape != r_shape or self.relation_table.dtype != np.float32:
            raise DataError(
                f"{self.kind}: relation table must be float32 {r_shape}, "
                f"got {self.relation_table.dtype} {self.relation_table.shape}"
            )

    @property
    def n_entities(self) -> int:
        return self.vocab.n_entities

    @property
    def n_relations(self) -> int:
        return self.vocab.n_relations


def table_shapes(kind: str, dim: int, n_entities: int, n_relations: int):
    if kind == "rescal":
        return (n_entities, dim), (n_relations, dim, dim)
    if kind == "rotate":
        return (n_entities, 2 * dim), (n_relations, dim)
    return (n_entities, dim), (n_relations, dim)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    negatives_per_positive: int = 5
    learning_rate: float = 0.05
    dim: int = 32
    seed: int = 0
    optimizer: str = "adagrad"  # "sgd" | "adagrad"
    margin: float = 1.0
    loss: str = "bce"  # "bce" | "margin" (margin: transe only)

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.negatives_per_positive,
               self.dim) < 0 or self.learning_rate <= 0:
            raise DataError("train config values must be positive")
        if self.optimizer not in ("sgd", "adagrad"):
            raise DataError(f"unknown optimizer {self.optimizer!r}")
        if self.loss not in ("bce", "margin"):
            raise DataError(f"unknown loss {self.loss!r}")


def init_model(kind: str, dim: int, vocab: Vocabulary, seed: int = 0) -> KgeModel:
    """Seed-controlled initialization: uniform(-0.5/sqrt(dim), +0.5/sqrt(dim))
    for real tables, uniform [0, 2pi) phases for rotate relations."""
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    rng = np.random.default_rng(seed)
    e_shape, r_shape = table_shapes(kind, dim, vocab.n_entities, vocab.n_relations)
    bound = 0.5 / np.sqrt(dim)
    ent = rng.uniform(-bound, bound, size=e_shape).astype(np.float32)
    if kind == "rotate":
        rel = rng.uniform(0.0, _TWO_PI, size=r_shape).astype(np.float32)
        rel = _wrap_phases(rel)
    else:
        rel = rng.uniform(-bound, bound, size=r_shape).astype(np.float32)
    return KgeModel(kind=kind, dim=dim, entity_table=ent, relation_table=rel,
                    vocab=vocab)


def _wrap_phases(phases: np.ndarray) -> np.ndarray:
    wrapped = np.mod(phases.astype(np.float64), _TWO_PI).astype(phases.dtype)
    wrapped[wrapped >= np.float32(_TWO_PI)] = 0.0
    return wrapped


# ---------------------------------------------------------------------------
# scoring (pure array functions; dtype follows the input tables)
# ---------------------------------------------------------------------------

def scores_for(kind: str, ent: np.ndarray, rel: np.ndarray,
               triples: np.ndarray) -> np.ndarray:
    """Scores for an (n, 3) id array of (head, relation, tail) triples."""
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    if kind == "transe":
        d = ent[h] + rel[r] - ent[t]
        return -np.sqrt(np.maximum((d * d).sum(axis=1), _NORM_EPS**2))
    if kind == "distmult":
        # (e_h * e_t) first: swapping h and t is then bitwise identical
        return ((ent[h] * ent[t]) * rel[r]).sum(axis=1)
    if kind == "rescal":
        return np.einsum("ni,nij,nj->n", ent[h], rel[r], ent[t])
    # rotate
    dim = rel.shape[1]
    a, b = ent[h, :dim], ent[h, dim:]
    t_re, t_im = ent[t, :dim], ent[t, dim:]
    cos, sin = np.cos(rel[r]), np.sin(rel[r])
    u_re = a * cos - b * sin - t_re
    u_im = a * sin + b * cos - t_im
    return -np.sqrt(np.maximum((u_re * u_re + u_im * u_im).sum(axis=1), _NORM_EPS**2))


def grads_for(kind: str, ent: np.ndarray, rel: np.ndarray, triples: np.ndarray,
              coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate d(loss)/d(tables) given per-example loss/score coefficients.

    ``coef[i]`` is dL/ds_i; the returned arrays have the tables' shapes and
    hold the summed contributions of all examples (float64).
    """
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    g_ent = np.zeros_like(ent, dtype=np.float64)
    g_rel = np.zeros_like(rel, dtype=np.float64)
    c = coef[:, None]

    if kind == "transe":
        d = ent[h] + rel[r] - ent[t]
        norm = np.sqrt(np.maximum((d * d).sum(axis=1), _NORM_EPS**2))[:, None]
        ds = -d / norm  # d(score)/d(e_h) = d(score)/d(w_r) = -d(score)/d(e_t)
        np.add.at(g_ent, h, c * ds)
        np.add.at(g_rel, r, c * ds)
        np.add.at(g_ent, t, -c * ds)
        return g_ent, g_rel

    if kind == "distmult":
        np.add.at(g_ent, h, c * rel[r] * ent[t])
        np.add.at(g_rel, r, c * ent[h] * ent[t])
        np.add.at(g_ent, t, c * ent[h] * rel[r])
        return g_ent, g_rel

    if kind == "rescal":
        W = rel[r]
        np.add.at(g_ent, h, c * np.einsum("nij,nj->ni", W, ent[t]))
        np.add.at(g_ent, t, c * np.einsum("ni,nij->nj", ent[h], W))
        np.add.at(g_rel, r, coef[:, None, None] * np.einsum("ni,nj->nij", ent[h], ent[t]))
        return g_ent, g_rel

    # rotate
    dim = rel.shape[1]
    a, b = ent[h, :dim], ent[h, dim:]
    t_re, t_im = ent[t, :dim], ent[t, dim:]
    cos, sin = np.cos(rel[r]), np.sin(rel[r])
    u_re = a * cos - b * sin - t_re
    u_im = a * sin + b * cos - t_im
    norm = np.sqrt(np.maximum((u_re**2 + u_im**2).sum(axis=1), _NORM_EPS**2))[:, None]
    da = -(u_re * cos + u_im * sin) / norm
    db = -(-u_re * sin + u_im * cos) / norm
    dtheta = -(u_re * (-a * sin - b * cos) + u_im * (a * cos - b * sin)) / norm
    dt_re = u_re / norm
    dt_im = u_im / norm
    np.add.at(g_ent, h, c * np.concatenate([da, db], axis=1))
    np.add.at(g_ent, t, c * np.concatenate([dt_re, dt_im], axis=1))
    np.add.at(g_rel, r, c * dtheta)
    return g_ent, g_rel


def bce_loss_and_coef(scores: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy of sigmoid(score) and dL/ds per example."""
    s = scores.astype(np.float64)
    # softplus(x) = log(1 + e^x), computed stably
    softplus = np.maximum(s, 0.0) + np.log1p(np.exp(-np.abs(s)))
    per = softplus - labels * s
    sig = 1.0 / (1.0 + np.exp(-s))
    coef = (sig - labels) / s.size
    return float(per.mean()), coef


def margin_loss_and_coef(pos_scores: np.ndarray, neg_scores: np.ndarray,
                         margin: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Pairwise margin ranking loss max(0, margin - s_pos + s_neg).

    ``neg_scores`` has shape (n_pos, n_neg) pairing each positive with its
    own corruptions.  Returns the loss plus dL/ds for positives and negatives.
    """
    viol = margin - pos_scores[:, None] + neg_scores
    active = viol > 0
    n_pairs = viol.size
    loss = float(np.where(active, viol, 0.0).sum() / n_pairs)
    g_neg = active.astype(np.float64) / n_pairs
    g_pos = -g_neg.sum(axis=1)
    return loss, g_pos, g_neg


def score_triple(m: KgeModel, triple: Triple) -> float:
    h, r, t = triple
    if not (0 <= h < m.n_entities and 0 <= t < m.n_entities and 0 <= r < m.n_relations):
        raise DataError(f"triple {triple} out of range for model vocabulary")
    ids = np.asarray([[h, r, t]], dtype=np.int64)
    return float(scores_for(m.kind, m.entity_table.astype(np.float64),
                            m.relation_table.astype(np.float64), ids)[0])


def score_all_tails(m: KgeModel, h: int, r: int,
                    ent64: np.ndarray | None = None,
                    rel64: np.ndarray | None = None) -> np.ndarray:
    """Scores of (h, r, e) for every entity e, as float64."""
    ent = ent64 if ent64 is not None else m.entity_table.astype(np.float64)
    rel = rel64 if rel64 is not None else m.relation_table.astype(np.float64)
    kind, dim = m.kind, m.dim
    if kind == "transe":
        d = (ent[h] + rel[r])[None, :] - ent
        return -np.sqrt(np.maximum((d * d).sum(axis=1), _NORM_EPS**2))
    if kind == "distmult":
        return ent @ (ent[h] * rel[r])
    if kind == "rescal":
        return ent @ (ent[h] @ rel[r])
    a, b = ent[h, :dim], ent[h, dim:]
    cos, sin = np.cos(rel[r]), np.sin(rel[r])
    rot_re = a * cos - b * sin
    rot_im = a * sin + b * cos
    u_re = rot_re[None, :] - ent[:, :dim]
    u_im = rot_im[None, :] - ent[:, dim:]
    return -np.sqrt(np.maximum((u_re**2 + u_im**2).sum(axis=1), _NORM_EPS**2))


def score_all_heads(m: KgeModel, r: int, t: int,
                    ent64: np.ndarray | None = None,
                    rel64: np.ndarray | None = None) -> np.ndarray:
    """Scores of (e, r, t) for every entity e, as float64."""
    ent = ent64 if ent64 is not None else m.entity_table.astype(np.float64)
    rel = rel64 if rel64 is not None else m.relation_table.astype(np.float64)
    kind, dim = m.kind, m.dim
    if kind == "transe":
        d = ent + (rel[r] - ent[t])[None, :]
        return -np.sqrt(np.maximum((d * d).sum(axis=1), _NORM_EPS**2))
    if kind == "distmult":
        return ent @ (rel[r] * ent[t])
    if kind == "rescal":
        return ent @ (rel[r] @ ent[t])
    cos, sin = np.cos(rel[r]), np.sin(rel[r])
    a, b = ent[:, :dim], ent[:, dim:]
    u_re = a * cos[None, :] - b * sin[None, :] - ent[t, :dim][None, :]
    u_im = a * sin[None, :] + b * cos[None, :] - ent[t, dim:][None, :]
    return -np.sqrt(np.maximum((u_re**2 + u_im**2).sum(axis=1), _NORM_EPS**2))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def sample_negatives(positives: np.ndarray, n_entities: int, n_per_positive: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Uniform corruptions: each negative replaces head or tail (coin flip)."""
    n = positives.shape[0] * n_per_positive
    negs = np.repeat(positives, n_per_positive, axis=0)
    corrupt_tail = rng.random(n) < 0.5
    random_entities = rng.integers(0, n_entities, size=n)
    negs[corrupt_tail, 2] = random_entities[corrupt_tail]
    negs[~corrupt_tail, 0] = random_entities[~corrupt_tail]
    return negs


class _Adagrad:
    def __init__(self, shape, lr: float, eps: float = 1e-8):
        self.acc = np.zeros(shape, dtype=np.float64)
        self.lr = lr
        self.eps = eps

    def step(self, grad: np.ndarray) -> np.ndarray:
        self.acc += grad * grad
        return self.lr * grad / (np.sqrt(self.acc) + self.eps)


class _Sgd:
    def __init__(self, shape, lr: float):
        self.lr = lr

    def step(self, grad: np.ndarray) -> np.ndarray:
        return self.lr * grad


def _make_optimizer(shape, config: TrainConfig):
    if config.optimizer == "adagrad":
        return _Adagrad(shape, config.learning_rate)
    return _Sgd(shape, config.learning_rate)


@np.errstate(over="ignore", invalid="ignore")  # divergence caught via isfinite
def _epoch_pass(kind: str, ent: np.ndarray, rel: np.ndarray, positives: np.ndarray,
                config: TrainConfig, rng: np.random.Generator,
                opt_ent, opt_rel, update_entities: bool) -> float:
    """One pass over shuffled positives; returns the mean batch loss."""
    order = rng.permutation(positives.shape[0])
    losses = []
    for start in range(0, positives.shape[0], config.batch_size):
        batch = positives[order[start : start + config.batch_size]]
        negs = sample_negatives(batch, ent.shape[0],
                                config.negatives_per_positive, rng)
        if config.loss == "margin":
            pos_scores = scores_for(kind, ent, rel, batch)
            neg_scores = scores_for(kind, ent, rel, negs).reshape(
                batch.shape[0], config.negatives_per_positive
            )
            loss, g_pos, g_neg = margin_loss_and_coef(pos_scores, neg_scores,
                                                      config.margin)
            examples = np.concatenate([batch, negs], axis=0)
            coef = np.concatenate([g_pos, g_neg.reshape(-1)])
        else:
            examples = np.concatenate([batch, negs], axis=0)
            labels = np.concatenate([
                np.ones(batch.shape[0]), np.zeros(negs.shape[0])
            ])
            scores = scores_for(kind, ent, rel, examples)
            loss, coef = bce_loss_and_coef(scores, labels)
        g_ent, g_rel = grads_for(kind, ent, rel, examples, coef)
        if update_entities:
            ent -= opt_ent.step(g_ent)
        rel -= opt_rel.step(g_rel)
        if kind == "rotate":
            np.mod(rel, _TWO_PI, out=rel)
            rel[rel >= _TWO_PI] = 0.0  # mod can round up to 2*pi exactly
        losses.append(loss)
    return float(np.mean(losses)) if losses else 0.0


def train(kind: str, config: TrainConfig, train_set: TripleSet,
          valid: TripleSet | None = None) -> KgeModel:
    """Train a model from scratch; deterministic under ``config.seed``.

    Raises :class:`TrainingError` naming the epoch if the loss goes
    non-finite.  ``epochs=0`` returns the freshly initialized model.
    """
    if valid is not None and valid.vocab is not train_set.vocab:
        if valid.vocab.entity_labels != train_set.vocab.entity_labels or \
                valid.vocab.relation_labels != train_set.vocab.relation_labels:
            raise DataError("train and valid splits must share a vocabulary")
    model = init_model(kind, config.dim, train_set.vocab, config.seed)
    if config.epochs == 0 or len(train_set) == 0:
        return model
    rng = np.random.default_rng(config.seed + 1)
    ent = model.entity_table.astype(np.float64)
    rel = model.relation_table.astype(np.float64)
    positives = train_set.as_array()
    opt_ent = _make_optimizer(ent.shape, config)
    opt_rel = _make_optimizer(rel.shape, config)
    for epoch in range(1, config.epochs + 1):
        loss = _epoch_pass(kind, ent, rel, positives, config, rng,
                           opt_ent, opt_rel, update_entities=True)
        if not np.isfinite(loss):
            raise TrainingError("training loss became non-finite", epoch=epoch)
        log.info("epoch %d/%d loss %.6f", epoch, config.epochs, loss)
    ent32 = ent.astype(np.float32)
    rel32 = rel.astype(np.float32)
    if kind == "rotate":
        rel32 = _wrap_phases(rel32)
    return replace(model, entity_table=ent32, relation_table=rel32)


def uniform_baseline_mrr(n_entities: int) -> float:
    """MRR of a uniformly random ranking over ``n_entities`` candidates."""
    return float(np.mean(1.0 / np.arange(1, n_entities + 1)))


# ---------------------------------------------------------------------------
# evaluation into a system output
# ---------------------------------------------------------------------------

class FilterIndex:
    """Known-positive lookups for filtered ranking."""

    def __init__(self, triples: TripleSet | list[Triple] | frozenset[Triple] | None):
        self.tails: dict[tuple[int, int], list[int]] = {}
        self.heads: dict[tuple[int, int], list[int]] = {}
        self.empty = True
        if triples is None:
            return
        items = triples.triples if isinstance(triples, TripleSet) else triples
        for h, r, t in items:
            self.empty = False
            self.tails.setdefault((h, r), []).append(t)
            self.heads.setdefault((r, t), []).append(h)

    def tail_mask(self, n_entities: int, h: int, r: int) -> np.ndarray | None:
        ids = self.tails.get((h, r))
        if not ids:
            return None
        mask = np.zeros(n_entities, dtype=bool)
        mask[ids] = True
        return mask

    def head_mask(self, n_entities: int, r: int, t: int) -> np.ndarray | None:
        ids = self.heads.get((r, t))
        if not ids:
            return None
        mask = np.zeros(n_entities, dtype=bool)
        mask[ids] = True
        return mask


def evaluate_to_system_output(
    m: KgeModel,
    test: TripleSet,
    filter_triples: TripleSet | list[Triple] | frozenset[Triple] | None = None,
    directions: str = "both",  # "tail" | "head" | "both"
    tie: TieStrategy = TieStrategy.REALISTIC,
    system_name: str = "model",
    dataset_name: str = "dataset",
    include_top_k: int = 0,
) -> SystemOutput:
    """Rank every test query against all entities and emit a system output.

    One record per (test triple, direction).  Ranks are filtered against
    ``filter_triples`` (pass train+valid+test for the standard protocol); the
    header's rank basis is ``filtered`` when a filter is given, else ``raw``.
    """
    if directions not in ("tail", "head", "both"):
        raise DataError(f"bad directions {directions!r}")
    findex = FilterIndex(filter_triples)
    ent64 = m.entity_table.astype(np.float64)
    rel64 = m.relation_table.astype(np.float64)
    vocab = m.vocab
    records = []
    for i, (h, r, t) in enumerate(test.triples):
        queries = []
        if directions in ("tail", "both"):
            queries.append(("tail", t, score_all_tails(m, h, r, ent64, rel64),
                            findex.tail_mask(m.n_entities, h, r)))
        if directions in ("head", "both"):
            queries.append(("head", h, score_all_heads(m, r, t, ent64, rel64),
                            findex.head_mask(m.n_entities, r, t)))
        for suffix, gold, scores, mask in queries:
            rank = masked_rank(scores, gold, mask, tie)
            top_k = None
            if include_top_k > 0:
                visible = scores.copy()
                if mask is not None:
                    hidden = mask.copy()
                    hidden[gold] = False
                    visible[hidden] = -np.inf
                order = np.argsort(-visible, kind="stable")[:include_top_k]
                top_k = tuple(
                    (vocab.entity_label(int(e)), float(visible[e])) for e in order
                )
            records.append(
                ExampleRecord(
                    id=f"{i}-{suffix}",
                    head=vocab.entity_label(h),
                    relation=vocab.relation_label(r),
                    tail=vocab.entity_label(t),
                    direction=f"{suffix}-query",
                    gold_rank=rank,
                    top_k=top_k,
                )
            )
    header = make_header(
        system_name=system_name,
        dataset_name=dataset_name,
        rank_basis="raw" if findex.empty else "filtered",
    )
    return SystemOutput(header=header, records=tuple(records))


def rank_of(m: KgeModel, triple: Triple, direction: str,
            findex: FilterIndex, tie: TieStrategy = TieStrategy.REALISTIC,
            ent64: np.ndarray | None = None, rel64: np.ndarray | None = None) -> float:
    """Filtered rank of one query; shared by the debugger's rank checks."""
    h, r, t = triple
    if direction == "tail":
        scores = score_all_tails(m, h, r, ent64, rel64)
        mask = findex.tail_mask(m.n_entities, h, r)
        return masked_rank(scores, t, mask, tie)
    scores = score_all_heads(m, r, t, ent64, rel64)
    mask = findex.head_mask(m.n_entities, r, t)
    return masked_rank(scores, h, mask, tie)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def serialized_header_size(m: KgeModel) -> int:
    size = 4 + 1 + 1 + 4 + 4 + 4
    for label in m.vocab.entity_labels + m.vocab.relation_labels:
        size += 4 + len(label.encode("utf-8"))
    return size


def serialize_model(m: KgeModel) -> bytes:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<BB", _VERSION, _KIND_BYTES[m.kind]))
    buf.write(struct.pack("<III", m.dim, m.n_entities, m.n_relations))
    for label in m.vocab.entity_labels + m.vocab.relation_labels:
        raw = label.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
    buf.write(np.ascontiguousarray(m.entity_table, dtype="<f4").tobytes())
    buf.write(np.ascontiguousarray(m.relation_table, dtype="<f4").tobytes())
    return buf.getvalue()


def save_model(m: KgeModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_model(m))


def deserialize_model(data: bytes) -> KgeModel:
    """Inverse of :func:`serialize_model`; raises FormatError on any damage."""
    buf = io.BytesIO(data)

    def read(n: int) -> bytes:
        chunk = buf.read(n)
        if len(chunk) != n:
            raise FormatError("truncated model file")
        return chunk

    if read(4) != _MAGIC:
        raise FormatError("bad magic: not a model file")
    version, kind_byte = struct.unpack("<BB", read(2))
    if version != _VERSION:
        raise FormatError(f"unsupported model file version {version}")
    if kind_byte >= len(MODEL_KINDS):
        raise FormatError(f"unknown model kind byte {kind_byte}")
    kind = MODEL_KINDS[kind_byte]
    dim, n_entities, n_relations = struct.unpack("<III", read(12))
    vocab = Vocabulary()
    for _ in range(n_entities):
        (length,) = struct.unpack("<I", read(4))
        vocab.entity_id(read(length).decode("utf-8"), add=True)
    for _ in range(n_relations):
        (length,) = struct.unpack("<I", read(4))
        vocab.relation_id(read(length).decode("utf-8"), add=True)
    if vocab.n_entities != n_entities or vocab.n_relations != n_relations:
        raise FormatError("duplicate labels in model vocabulary")
    e_shape, r_shape = table_shapes(kind, dim, n_entities, n_relations)
    ent = np.frombuffer(read(4 * int(np.prod(e_shape))), dtype="<f4").reshape(e_shape)
    rel = np.frombuffer(read(4 * int(np.prod(r_shape))), dtype="<f4").reshape(r_shape)
    if buf.read(1):
        raise FormatError("trailing bytes after model tables")
    return KgeModel(kind=kind, dim=dim, entity_table=ent.copy(),
                    relation_table=rel.copy(), vocab=vocab)


def load_model(path) -> KgeModel:
    with open(path, "rb") as fh:
        return deserialize_model(fh.read())
