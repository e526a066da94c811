"""Idiom retrieval: score (sentence, key) pairs and rank the lexicon.

The key for a candidate idiom is one of its definitions (default) or its
surface form.  A BiGRU reads [sentence, <sep>, key]; states are
sum-pooled and a linear head produces the match score.  Training is
binary classification of the gold key against uniformly sampled
negative idioms, resampled every epoch.
"""

from __future__ import annotations

import logging
from typing import Sequence

from .corpus import SEP, IdiomEntry, ParallelPair, Vocabulary
from .numerics import (
    GruCell,
    ParamStore,
    Tensor,
    adam_step,
    bigru_encode,
    neg,
    no_grad,
    softplus,
    stack,
    tsum,
)
from .rng import Rng

log = logging.getLogger(__name__)

KEY_MODES = ("definition", "idiom")


class RetrievalModel:
    component = "retrieval"

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
        self.score_w = store.add("score.weight", (2 * hidden,), rng)
        self.score_b = store.add_zeros("score.bias", ())
        self.store = store

    def hyperparameters(self) -> dict:
        return {"embed_dim": self.embed_dim, "hidden": self.hidden, "seed": self.seed}


def encode_candidate(model: RetrievalModel, sentence: Sequence[str], key: Sequence[str]) -> Tensor:
    """Sum-pooled BiGRU states over [sentence, <sep>, key]."""
    if not sentence or not key:
        raise ValueError("sentence and key must be non-empty")
    tokens = list(sentence) + [SEP] + list(key)
    ids = model.vocab.encode_all(tokens)
    states = bigru_encode(model.fwd, model.bwd, [model.embedding[i] for i in ids])
    return tsum(stack(states), axis=0)


def score(model: RetrievalModel, h_pooled: Tensor) -> Tensor:
    """Linear match score w . h + b."""
    return model.score_w @ h_pooled + model.score_b


def score_pair(model: RetrievalModel, sentence: Sequence[str], key: Sequence[str]) -> float:
    with no_grad():
        return score(model, encode_candidate(model, sentence, key)).item()


def candidate_keys(entry: IdiomEntry, key_mode: str) -> list[tuple[int, tuple[str, ...]]]:
    """(sense index, key tokens) candidates for one idiom under a key mode."""
    if key_mode == "definition":
        return list(enumerate(entry.senses))
    if key_mode == "idiom":
        return [(0, entry.surface)]
    raise ValueError(f"unknown key mode {key_mode!r}")


def retrieve_top1(
    model: RetrievalModel,
    sentence: Sequence[str],
    lexicon: Sequence[IdiomEntry],
    key_mode: str = "definition",
) -> tuple[str, int, float]:
    """Best (idiom id, sense index, score) over every candidate key.

    Per idiom the best-scoring sense wins (lower sense index on ties);
    across idioms, earlier lexicon order wins ties.
    """
    if not lexicon:
        raise ValueError("empty lexicon")
    best: tuple[str, int, float] | None = None
    for entry in lexicon:
        entry_best: tuple[int, float] | None = None
        for sense_index, key in candidate_keys(entry, key_mode):
            s = score_pair(model, sentence, key)
            if entry_best is None or s > entry_best[1]:
                entry_best = (sense_index, s)
        assert entry_best is not None
        if best is None or entry_best[1] > best[2]:
            best = (entry.id, entry_best[0], entry_best[1])
    assert best is not None
    return best


def evaluate_retrieval(
    model: RetrievalModel,
    pairs: Sequence[ParallelPair],
    lexicon: Sequence[IdiomEntry],
    key_mode: str = "definition",
) -> float:
    """Fraction of pairs whose literal sentence retrieves the gold idiom."""
    if not pairs:
        return 0.0
    hits = 0
    for pair in pairs:
        predicted, _, _ = retrieve_top1(model, pair.literal, lexicon, key_mode)
        hits += predicted == pair.idiom_id
    return hits / len(pairs)


def _bce_loss(model: RetrievalModel, sentence: Sequence[str], key: Sequence[str], label: int) -> Tensor:
    r = score(model, encode_candidate(model, sentence, key))
    return softplus(neg(r)) if label == 1 else softplus(r)


def train_retrieval(
    model: RetrievalModel,
    pairs: Sequence[ParallelPair],
    lexicon: Sequence[IdiomEntry],
    *,
    epochs: int,
    negatives_per_positive: int = 100,
    lr: float = 1e-3,
    seed: int = 0,
    key_mode: str = "definition",
    batch_size: int = 16,
    validation: Sequence[ParallelPair] = (),
    eval_every: int = 1,
    stop_at_accuracy: float | None = None,
) -> dict:
    """BCE training with per-epoch uniform negative resampling.

    Gradients are averaged over ``batch_size`` instances per Adam step;
    per-instance stepping lets each update fight the last and stalls
    well short of separating even easy data.
    """
    if key_mode not in KEY_MODES:
        raise ValueError(f"unknown key mode {key_mode!r}")
    if negatives_per_positive >= len(lexicon):
        raise ValueError(
            f"negatives_per_positive={negatives_per_positive} needs a lexicon "
            f"larger than {len(lexicon)} idioms"
        )
    by_id = {e.id: e for e in lexicon}
    rng = Rng(seed)
    losses: list[float] = []
    val_acc: list[float | None] = []
    for epoch in range(epochs):
        instances: list[tuple[tuple[str, ...], tuple[str, ...], int]] = []
        for pair in pairs:
            entry = by_id.get(pair.idiom_id)
            if entry is None:
                log.warning("skipping pair with unknown idiom %r", pair.idiom_id)
                continue
            if key_mode == "definition":
                positive_key = entry.senses[pair.sense_index]
            else:
                positive_key = entry.surface
            instances.append((pair.literal, positive_key, 1))
            others = [e for e in lexicon if e.id != pair.idiom_id]
            for neg_entry in rng.sample(others, negatives_per_positive):
                if key_mode == "definition":
                    key = neg_entry.senses[rng.randint(len(neg_entry.senses))]
                else:
                    key = neg_entry.surface
                instances.append((pair.literal, key, 0))
        if not instances:
            raise ValueError("no trainable pairs")
        rng.shuffle(instances)
        total = 0.0
        for lo in range(0, len(instances), batch_size):
            batch = instances[lo : lo + batch_size]
            model.store.zero_grads()
            batch_loss: Tensor | None = None
            for sentence, key, label in batch:
                loss = _bce_loss(model, sentence, key, label)
                batch_loss = loss if batch_loss is None else batch_loss + loss
            assert batch_loss is not None
            batch_loss = batch_loss * (1.0 / len(batch))
            total += batch_loss.item() * len(batch)
            batch_loss.backward()
            adam_step(model.store, lr)
        losses.append(total / len(instances))
        run_eval = bool(validation) and (epoch + 1) % eval_every == 0
        acc = evaluate_retrieval(model, validation, lexicon, key_mode) if run_eval else None
        val_acc.append(acc)
        if stop_at_accuracy is not None and acc is not None and acc >= stop_at_accuracy:
            break
    return {"epoch_losses": losses, "val_retrieval_accuracy": val_acc}
