"""BIO span extraction: BiGRU unary scores + linear-chain CRF.

The encoder reads [sentence, <sep>, definition] and scores only the
sentence positions.  Training combines the CRF negative log-likelihood
with a weighted cross-entropy on per-token marginals (weights 0.48 for
B and I, 0.04 for O) so the rare span labels are not drowned out.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import SEP, IdiomEntry, ParallelPair, Vocabulary, derive_bio
from .metrics import span_f1
from .numerics import (
    GruCell,
    ParamStore,
    Tensor,
    adam_step,
    bigru_encode,
    exp,
    logsumexp,
    no_grad,
    reshape,
    stack,
    take_pairs,
    tsum,
)
from .rng import Rng

log = logging.getLogger(__name__)

LABELS = ("B", "I", "O")
B, I, O = 0, 1, 2
MARGINAL_WEIGHTS = {B: 0.48, I: 0.48, O: 0.04}


class ExtractorModel:
    component = "extractor"

    def __init__(self, vocab: Vocabulary, embed_dim: int = 64, hidden: int = 64, seed: int = 0):
        self.vocab = vocab
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.seed = seed
        rng = Rng(seed)
        store = ParamStore()
        self.embedding = store.add("embedding", (len(vocab), embed_dim), rng)
        self.fwd = GruCell(store, "encoder.fwd", embed_dim, hidden, rng)
        self.bwd = GruCell(store, "encoder.bwd", embed_dim, hidden, rng)
        self.unary_w = store.add("unary.weight", (2 * hidden, 3), rng)
        self.unary_b = store.add_zeros("unary.bias", (3,))
        self.transitions = store.add("crf.transitions", (3, 3), rng)
        self.start = store.add("crf.start", (3,), rng)
        self.end = store.add("crf.end", (3,), rng)
        self.store = store

    def hyperparameters(self) -> dict:
        return {"embed_dim": self.embed_dim, "hidden": self.hidden, "seed": self.seed}


def unary_scores(model: ExtractorModel, sentence: Sequence[str], definition: Sequence[str]) -> Tensor:
    """(n, 3) label scores for the n sentence positions."""
    if not sentence:
        raise ValueError("empty sentence")
    tokens = list(sentence) + [SEP] + list(definition)
    ids = model.vocab.encode_all(tokens)
    states = bigru_encode(model.fwd, model.bwd, [model.embedding[i] for i in ids])
    sentence_states = stack(states[: len(sentence)])
    return sentence_states @ model.unary_w + model.unary_b


def crf_log_partition(unary: Tensor, transitions: Tensor, start: Tensor, end: Tensor) -> Tensor:
    """Log of the summed exponentiated scores over all label paths."""
    n = unary.shape[0]
    if n == 0:
        raise ValueError("empty unary score matrix")
    alpha = start + unary[0]
    for t in range(1, n):
        alpha = unary[t] + logsumexp(reshape(alpha, (-1, 1)) + transitions, axis=0)
    return logsumexp(alpha + end)


def crf_path_score(unary: Tensor, transitions: Tensor, start: Tensor, end: Tensor, labels: Sequence[int]) -> Tensor:
    """Unnormalized score of one label path."""
    n = unary.shape[0]
    if len(labels) != n:
        raise ValueError("label path length mismatch")
    score = start[labels[0]] + end[labels[-1]]
    score = score + tsum(take_pairs(unary, range(n), labels))
    if n > 1:
        score = score + tsum(take_pairs(transitions, labels[:-1], labels[1:]))
    return score


def crf_log_marginals(unary: Tensor, transitions: Tensor, start: Tensor, end: Tensor) -> Tensor:
    """(n, k) log posterior marginals via forward-backward."""
    n = unary.shape[0]
    if n == 0:
        raise ValueError("empty unary score matrix")
    alphas = [start + unary[0]]
    for t in range(1, n):
        alphas.append(unary[t] + logsumexp(reshape(alphas[-1], (-1, 1)) + transitions, axis=0))
    betas = [None] * n
    betas[n - 1] = end
    for t in range(n - 2, -1, -1):
        nxt = unary[t + 1] + betas[t + 1]
        betas[t] = logsumexp(transitions + reshape(nxt, (1, -1)), axis=1)
    log_z = logsumexp(alphas[-1] + end)
    return stack([alphas[t] + betas[t] - log_z for t in range(n)])


def crf_marginals(unary: Tensor, transitions: Tensor, start: Tensor, end: Tensor) -> Tensor:
    """Posterior label marginals; each row sums to 1."""
    return exp(crf_log_marginals(unary, transitions, start, end))


def crf_viterbi(
    unary: np.ndarray | Tensor,
    transitions: np.ndarray | Tensor,
    start: np.ndarray | Tensor,
    end: np.ndarray | Tensor,
) -> tuple[list[int], float]:
    """Best label path and its score; ties break toward lower label index."""
    u = unary.data if isinstance(unary, Tensor) else np.asarray(unary, dtype=np.float64)
    t_mat = transitions.data if isinstance(transitions, Tensor) else np.asarray(transitions, dtype=np.float64)
    s_vec = start.data if isinstance(start, Tensor) else np.asarray(start, dtype=np.float64)
    e_vec = end.data if isinstance(end, Tensor) else np.asarray(end, dtype=np.float64)
    n = u.shape[0]
    if n == 0:
        raise ValueError("empty unary score matrix")
    delta = s_vec + u[0]
    backptr = np.zeros((n, u.shape[1]), dtype=np.intp)
    for t in range(1, n):
        scores = delta[:, None] + t_mat
        backptr[t] = np.argmax(scores, axis=0)  # first max = lowest label index
        delta = u[t] + scores[backptr[t], np.arange(u.shape[1])]
    final = delta + e_vec
    last = int(np.argmax(final))
    path = [last]
    for t in range(n - 1, 0, -1):
        last = int(backptr[t][last])
        path.append(last)
    path.reverse()
    return path, float(np.max(final))


@dataclass(frozen=True)
class SpanPrediction:
    labels: tuple[str, ...]
    span: tuple[int, int] | None
    score: float


def _bio_runs(labels: Sequence[int]) -> list[tuple[int, int]]:
    runs = []
    i = 0
    n = len(labels)
    while i < n:
        if labels[i] != O:
            j = i
            while j < n and labels[j] != O:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def repair_labels(labels: Sequence[int], unary: np.ndarray) -> tuple[tuple[str, ...], tuple[int, int] | None]:
    """Collapse a Viterbi labeling to at most one contiguous span.

    When several B/I runs appear, the run whose labels have the highest
    summed unary score survives (earlier run on ties); everything else
    becomes O.  The surviving run is normalized to B I I ...
    """
    runs = _bio_runs(labels)
    n = len(labels)
    if not runs:
        return ("O",) * n, None
    best = runs[0]
    best_score = sum(unary[t, labels[t]] for t in range(*runs[0]))
    for run in runs[1:]:
        score = sum(unary[t, labels[t]] for t in range(*run))
        if score > best_score:
            best, best_score = run, score
    out = ["O"] * n
    s, e = best
    out[s] = "B"
    for t in range(s + 1, e):
        out[t] = "I"
    return tuple(out), (s, e)


def extract_span(model: ExtractorModel, sentence: Sequence[str], definition: Sequence[str]) -> SpanPrediction:
    """Viterbi decode + single-span repair for one sentence."""
    with no_grad():
        unary = unary_scores(model, sentence, definition).data
    path, score = crf_viterbi(unary, model.transitions, model.start, model.end)
    labels, span = repair_labels(path, unary)
    return SpanPrediction(labels=labels, span=span, score=score)


def extractor_loss(model: ExtractorModel, sentence: Sequence[str], definition: Sequence[str], gold: Sequence[int]) -> Tensor:
    """CRF NLL plus weighted marginal cross-entropy, summed over tokens."""
    unary = unary_scores(model, sentence, definition)
    log_z = crf_log_partition(unary, model.transitions, model.start, model.end)
    nll = log_z - crf_path_score(unary, model.transitions, model.start, model.end, gold)
    log_marg = crf_log_marginals(unary, model.transitions, model.start, model.end)
    picked = take_pairs(log_marg, range(len(gold)), gold)
    weights = np.array([MARGINAL_WEIGHTS[g] for g in gold])
    return nll - tsum(picked * weights)


def validation_span_f1(model: ExtractorModel, pairs: Sequence[ParallelPair], lexicon: Sequence[IdiomEntry]) -> float:
    by_id = {e.id: e for e in lexicon}
    preds, golds, sents = [], [], []
    for pair in pairs:
        definition = by_id[pair.idiom_id].senses[pair.sense_index]
        preds.append(extract_span(model, pair.literal, definition).span)
        golds.append(pair.span)
        sents.append(pair.literal)
    return span_f1(preds, golds, sents)


def train_extractor(
    model: ExtractorModel,
    pairs: Sequence[ParallelPair],
    lexicon: Sequence[IdiomEntry],
    *,
    epochs: int,
    lr: float = 1e-3,
    seed: int = 0,
    batch_size: int = 8,
    validation: Sequence[ParallelPair] = (),
    eval_every: int = 1,
    stop_at_f1: float | None = None,
) -> dict:
    """Batched Adam training; returns per-epoch losses and val span F1."""
    by_id = {e.id: e for e in lexicon}
    instances = []
    for pair in pairs:
        entry = by_id.get(pair.idiom_id)
        if entry is None or pair.sense_index >= len(entry.senses):
            log.warning("skipping pair with unresolvable definition (idiom %r)", pair.idiom_id)
            continue
        gold = [LABELS.index(l) for l in derive_bio(pair).labels]
        instances.append((pair.literal, entry.senses[pair.sense_index], gold))
    if not instances:
        raise ValueError("no trainable pairs")
    rng = Rng(seed)
    losses: list[float] = []
    val_f1s: list[float | None] = []
    for epoch in range(epochs):
        order = list(range(len(instances)))
        rng.shuffle(order)
        total = 0.0
        for lo in range(0, len(order), batch_size):
            batch = order[lo : lo + batch_size]
            model.store.zero_grads()
            batch_loss: Tensor | None = None
            for i in batch:
                sentence, definition, gold = instances[i]
                loss = extractor_loss(model, sentence, definition, gold)
                batch_loss = loss if batch_loss is None else batch_loss + loss
            assert batch_loss is not None
            batch_loss = batch_loss * (1.0 / len(batch))
            total += batch_loss.item() * len(batch)
            batch_loss.backward()
            adam_step(model.store, lr)
        losses.append(total / len(instances))
        run_eval = bool(validation) and (epoch + 1) % eval_every == 0
        f1 = validation_span_f1(model, validation, lexicon) if run_eval else None
        val_f1s.append(f1)
        if stop_at_f1 is not None and f1 is not None and f1 >= stop_at_f1:
            break
    return {"epoch_losses": losses, "val_span_f1": val_f1s}
