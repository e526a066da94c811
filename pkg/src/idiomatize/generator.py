"""Copy-based generation guided by idiom and span markers.

The encoder is a BiGRU over [idiom, <sep>, literal] where each token
embedding is concatenated with a copy-indicator embedding (1 = should
survive into the output, 0 = belongs to the replaced span).  The
decoder is a GRU whose input at step t is

    [word(y_{t-1}) ; label(l_{t-1}) ; attentive read ; selective read]

Each step scores copying every input position and generating every
vocabulary word; both score families are exponentiated and normalized
together, so tokens that appear in the input can draw probability from
both routes.  ``guided=False`` disables the label channel (the label
embedding input is held at 0) for the unguided variant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .corpus import EOS, SEP, Vocabulary
from .metrics import bleu
from .numerics import (
    GruCell,
    ParamStore,
    Tensor,
    adam_step,
    bigru_encode,
    concat,
    gru_step,
    logsumexp,
    no_grad,
    softmax,
    stack,
    take,
    tanh,
    zeros,
)
from .rng import Rng


@dataclass(frozen=True)
class GeneratorInput:
    """Encoder token sequence plus per-token copy indicators."""

    tokens: tuple[str, ...]
    indicators: tuple[int, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("empty generator input")
        if len(self.tokens) != len(self.indicators):
            raise ValueError("tokens and indicators differ in length")
        if any(i not in (0, 1) for i in self.indicators):
            raise ValueError("indicators must be 0 or 1")


def build_guided_input(
    idiom: Sequence[str], literal: Sequence[str], span: tuple[int, int] | None
) -> GeneratorInput:
    """[idiom, <sep>, literal]; span tokens get indicator 0, the rest 1."""
    s, e = span if span is not None else (0, 0)
    tokens = tuple(idiom) + (SEP,) + tuple(literal)
    indicators = (
        (1,) * len(idiom) + (0,) + tuple(0 if s <= i < e else 1 for i in range(len(literal)))
    )
    return GeneratorInput(tokens, indicators)


def build_unguided_input(
    idiom: Sequence[str], literal: Sequence[str], span: tuple[int, int] | None
) -> GeneratorInput:
    """[idiom, <sep>, literal minus span] with constant indicators."""
    s, e = span if span is not None else (0, 0)
    kept = tuple(literal[:s]) + tuple(literal[e:])
    tokens = tuple(idiom) + (SEP,) + kept
    return GeneratorInput(tokens, (0,) * len(tokens))


def rule_based_generate(
    literal: Sequence[str], span: tuple[int, int] | None, idiom: Sequence[str]
) -> tuple[str, ...]:
    """Splice the idiom surface over the span; no span means no change."""
    if span is None:
        return tuple(literal)
    s, e = span
    return tuple(literal[:s]) + tuple(idiom) + tuple(literal[e:])


class GeneratorModel:
    component = "generator"

    def __init__(
        self,
        vocab: Vocabulary,
        word_dim: int = 128,
        copy_dim: int = 32,
        label_dim: int = 32,
        hidden: int = 256,
        guided: bool = True,
        seed: int = 0,
    ):
        if hidden % 2:
            raise ValueError("hidden must be even (split across two encoder directions)")
        self.vocab = vocab
        self.word_dim = word_dim
        self.copy_dim = copy_dim
        self.label_dim = label_dim
        self.hidden = hidden
        self.guided = guided
        self.seed = seed
        rng = Rng(seed)
        store = ParamStore()
        half = hidden // 2
        dec_in = word_dim + label_dim + hidden + hidden
        self.word_emb = store.add("word_emb", (len(vocab), word_dim), rng)
        self.copy_emb = store.add("copy_emb", (2, copy_dim), rng)
        self.label_emb = store.add("label_emb", (2, label_dim), rng)
        self.enc_fwd = GruCell(store, "encoder.fwd", word_dim + copy_dim, half, rng)
        self.enc_bwd = GruCell(store, "encoder.bwd", word_dim + copy_dim, half, rng)
        self.decoder = GruCell(store, "decoder", dec_in, hidden, rng)
        self.w_att = store.add("attention.weight", (hidden, hidden), rng)
        self.u_copy = store.add("copy.weight", (hidden, hidden), rng)
        self.w_gen = store.add("generate.weight", (len(vocab), hidden), rng)
        self.init_w = store.add("decoder_init.weight", (hidden, hidden), rng)
        self.init_b = store.add_zeros("decoder_init.bias", (hidden,))
        self.store = store

    def hyperparameters(self) -> dict:
        return {
            "word_dim": self.word_dim,
            "copy_dim": self.copy_dim,
            "label_dim": self.label_dim,
            "hidden": self.hidden,
            "guided": self.guided,
            "seed": self.seed,
        }


def encode_input(model: GeneratorModel, inp: GeneratorInput) -> Tensor:
    """(n, hidden) memory matrix of BiGRU states."""
    vecs = []
    for token, indicator in zip(inp.tokens, inp.indicators):
        w = model.word_emb[model.vocab.encode(token)]
        c = model.copy_emb[indicator]
        vecs.append(concat([w, c]))
    return stack(bigru_encode(model.enc_fwd, model.enc_bwd, vecs))


@dataclass
class DecodeState:
    hidden: Tensor
    y_prev: str
    l_prev: int
    memory: Tensor
    psi_prev: Tensor | None


def decode_init(model: GeneratorModel, memory: Tensor) -> DecodeState:
    """First decoder state from the final forward/backward encoder states."""
    half = model.hidden // 2
    n = memory.shape[0]
    final = concat([memory[n - 1][:half], memory[0][half:]])
    h0 = tanh(model.init_w @ final + model.init_b)
    return DecodeState(hidden=h0, y_prev=SEP, l_prev=0, memory=memory, psi_prev=None)


def attentive_read(model: GeneratorModel, h_dec: Tensor, memory: Tensor) -> Tensor:
    """Bilinear attention over all memory states."""
    if memory.shape[0] == 0:
        raise ValueError("empty memory")
    scores = memory @ (h_dec @ model.w_att)
    return softmax(scores) @ memory


def selective_read(
    model: GeneratorModel,
    y_prev: str,
    memory: Tensor,
    inp: GeneratorInput,
    psi_prev: Tensor | None,
) -> Tensor:
    """Memory states at positions matching y_prev, weighted by their copy scores.

    Exact zero vector when y_prev occurs nowhere in the input (or on the
    first step, before any copy scores exist).
    """
    matches = [k for k, tok in enumerate(inp.tokens) if tok == y_prev]
    if psi_prev is None or not matches:
        return zeros((model.hidden,))
    weights = softmax(take(psi_prev, matches))
    return weights @ take(memory, matches)


def step_scores(model: GeneratorModel, h_dec: Tensor, memory: Tensor) -> tuple[Tensor, Tensor]:
    """(copy scores over input positions, generate scores over the vocabulary)."""
    copy_scores = tanh(memory @ model.u_copy) @ h_dec
    gen_scores = model.w_gen @ h_dec
    return copy_scores, gen_scores


@dataclass
class StepDistribution:
    """One decoding step's output distribution, collapsed by surface token."""

    probs: dict[str, float]
    copy_probs: dict[str, float]
    p_copy: float
    p_gen: float


def _distribution(
    vocab: Vocabulary, inp_tokens: Sequence[str], copy_scores: np.ndarray, gen_scores: np.ndarray
) -> StepDistribution:
    shift = max(copy_scores.max(), gen_scores.max())
    e_copy = np.exp(copy_scores - shift)
    e_gen = np.exp(gen_scores - shift)
    z = e_copy.sum() + e_gen.sum()
    probs = dict(zip(vocab.tokens, (e_gen / z).tolist()))
    copy_probs: dict[str, float] = {}
    for j, tok in enumerate(inp_tokens):
        w = float(e_copy[j]) / z
        probs[tok] = probs.get(tok, 0.0) + w
        copy_probs[tok] = copy_probs.get(tok, 0.0) + w
    return StepDistribution(
        probs=probs,
        copy_probs=copy_probs,
        p_copy=float(e_copy.sum() / z),
        p_gen=float(e_gen.sum() / z),
    )


def step_distribution(
    model: GeneratorModel, h_dec: Tensor, memory: Tensor, inp: GeneratorInput
) -> tuple[StepDistribution, Tensor]:
    """Distribution at one decoder state plus the raw per-position copy scores."""
    copy_s, gen_s = step_scores(model, h_dec, memory)
    return _distribution(model.vocab, inp.tokens, copy_s.data, gen_s.data), copy_s


def infer_label(dist: StepDistribution) -> int:
    """1 when the copy mass strictly exceeds the generate mass."""
    return 1 if dist.p_copy > dist.p_gen else 0


def _advance(
    model: GeneratorModel, state: DecodeState, inp: GeneratorInput
) -> tuple[DecodeState, Tensor, Tensor]:
    attentive = attentive_read(model, state.hidden, state.memory)
    selective = selective_read(model, state.y_prev, state.memory, inp, state.psi_prev)
    w = model.word_emb[model.vocab.encode(state.y_prev)]
    label = model.label_emb[state.l_prev if model.guided else 0]
    x = concat([w, label, attentive, selective])
    h = gru_step(model.decoder, state.hidden, x)
    copy_s, gen_s = step_scores(model, h, state.memory)
    new_state = DecodeState(
        hidden=h, y_prev=state.y_prev, l_prev=state.l_prev, memory=state.memory, psi_prev=copy_s
    )
    return new_state, copy_s, gen_s


def decode_step(
    model: GeneratorModel, state: DecodeState, inp: GeneratorInput
) -> tuple[DecodeState, StepDistribution]:
    """Advance one step; the caller picks the next token and label.

    The returned state keeps the previous token/label; set them with
    ``dataclasses.replace`` once the step's output token is chosen.
    """
    new_state, copy_s, gen_s = _advance(model, state, inp)
    dist = _distribution(model.vocab, inp.tokens, copy_s.data, gen_s.data)
    return new_state, dist


def _target_indices(vocab: Vocabulary, inp_tokens: Sequence[str], target: str) -> list[int]:
    """Positions in [copy scores ++ generate scores] that emit ``target``."""
    n = len(inp_tokens)
    idxs = [j for j, tok in enumerate(inp_tokens) if tok == target]
    vocab_id = vocab.get(target)
    if vocab_id is not None:
        idxs.append(n + vocab_id)
    if not idxs:
        idxs = [n + vocab.encode(target)]  # unreachable token trains the <unk> route
    return idxs


def teacher_forced_loss(
    model: GeneratorModel, inp: GeneratorInput, reference: Sequence[str]
) -> Tensor:
    """Summed NLL of the reference tokens plus <eos> under teacher forcing."""
    loss, _, _ = _teacher_forced_pass(model, inp, reference)
    return loss


def _teacher_forced_pass(
    model: GeneratorModel, inp: GeneratorInput, reference: Sequence[str], track_accuracy: bool = False
) -> tuple[Tensor, int, int]:
    if not reference:
        raise ValueError("empty reference")
    memory = encode_input(model, inp)
    state = decode_init(model, memory)
    input_tokens = set(inp.tokens)
    targets = list(reference) + [EOS]
    loss: Tensor | None = None
    correct = 0
    for target in targets:
        state, copy_s, gen_s = _advance(model, state, inp)
        all_scores = concat([copy_s, gen_s])
        idxs = _target_indices(model.vocab, inp.tokens, target)
        step_nll = logsumexp(all_scores) - logsumexp(take(all_scores, idxs))
        loss = step_nll if loss is None else loss + step_nll
        if track_accuracy:
            dist = _distribution(model.vocab, inp.tokens, copy_s.data, gen_s.data)
            predicted = max(dist.probs.items(), key=lambda kv: kv[1])[0]
            reachable = target in input_tokens or target in model.vocab
            correct += predicted == (target if reachable else model.vocab.decode(1))
        label = 1 if (model.guided and target in input_tokens) else 0
        state = replace(state, y_prev=target, l_prev=label)
    assert loss is not None
    return loss, len(targets), correct


def teacher_forced_accuracy(model: GeneratorModel, data: Sequence[tuple[GeneratorInput, Sequence[str]]]) -> float:
    """Fraction of teacher-forced steps whose argmax equals the target."""
    steps = 0
    correct = 0
    with no_grad():
        for inp, reference in data:
            _, n, c = _teacher_forced_pass(model, inp, reference, track_accuracy=True)
            steps += n
            correct += c
    return correct / steps if steps else 0.0


def train_generator(
    model: GeneratorModel,
    data: Sequence[tuple[GeneratorInput, Sequence[str]]],
    *,
    epochs: int,
    batch_size: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
    validation: Sequence[tuple[GeneratorInput, Sequence[str]]] = (),
    eval_every: int = 1,
    max_len: int = 40,
    stop_at_token_accuracy: float | None = None,
) -> dict:
    """Teacher-forced NLL with batched Adam updates.

    Reports per-epoch mean loss, running teacher-forced token accuracy
    and (every ``eval_every`` epochs) greedy-decode BLEU on the
    validation set.
    """
    if not data:
        raise ValueError("no training instances")
    rng = Rng(seed)
    losses: list[float] = []
    accuracies: list[float] = []
    val_bleu: list[float | None] = []
    for epoch in range(epochs):
        order = list(range(len(data)))
        rng.shuffle(order)
        total = 0.0
        steps = 0
        correct = 0
        for lo in range(0, len(order), batch_size):
            batch = order[lo : lo + batch_size]
            model.store.zero_grads()
            batch_loss: Tensor | None = None
            for i in batch:
                inp, reference = data[i]
                loss, n, c = _teacher_forced_pass(model, inp, reference, track_accuracy=True)
                steps += n
                correct += c
                batch_loss = loss if batch_loss is None else batch_loss + loss
            assert batch_loss is not None
            batch_loss = batch_loss * (1.0 / len(batch))
            total += batch_loss.item()
            batch_loss.backward()
            adam_step(model.store, lr)
        losses.append(total / max(1, (len(order) + batch_size - 1) // batch_size))
        accuracies.append(correct / steps if steps else 0.0)
        if validation and (epoch + 1) % eval_every == 0:
            hyps = [beam_decode(model, inp, beam=1, max_len=max_len) for inp, _ in validation]
            val_bleu.append(bleu(hyps, [ref for _, ref in validation]))
        else:
            val_bleu.append(None)
        if stop_at_token_accuracy is not None and accuracies[-1] >= stop_at_token_accuracy:
            # Confirm with the post-update parameters before stopping.
            if teacher_forced_accuracy(model, data) >= stop_at_token_accuracy:
                break
    return {"epoch_losses": losses, "train_token_accuracy": accuracies, "val_bleu": val_bleu}


@dataclass
class _Hypothesis:
    tokens: tuple[str, ...]
    logp: float
    steps: int
    state: DecodeState

    @property
    def score(self) -> float:
        return self.logp / max(1, self.steps)


def beam_decode(model: GeneratorModel, inp: GeneratorInput, beam: int = 4, max_len: int = 40) -> tuple[str, ...]:
    """Length-normalized beam search; beam=1 is greedy decoding."""
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    with no_grad():
        memory = encode_input(model, inp)
        alive = [_Hypothesis(tokens=(), logp=0.0, steps=0, state=decode_init(model, memory))]
        finished: list[_Hypothesis] = []
        for _ in range(max_len):
            candidates: list[_Hypothesis] = []
            for hyp in alive:
                state, dist = decode_step(model, hyp.state, inp)
                label = infer_label(dist)
                ranked = sorted(dist.probs.items(), key=lambda kv: -kv[1])[:beam]
                for token, p in ranked:
                    candidates.append(
                        _Hypothesis(
                            tokens=hyp.tokens + (token,),
                            logp=hyp.logp + np.log(p),
                            steps=hyp.steps + 1,
                            state=replace(state, y_prev=token, l_prev=label),
                        )
                    )
            candidates.sort(key=lambda h: -h.score)
            alive = []
            for cand in candidates[:beam]:
                if cand.tokens[-1] == EOS:
                    finished.append(
                        _Hypothesis(cand.tokens[:-1], cand.logp, cand.steps, cand.state)
                    )
                else:
                    alive.append(cand)
            if not alive:
                break
        finished.extend(alive)
        best = finished[0]
        for hyp in finished[1:]:
            if hyp.score > best.score:
                best = hyp
        return best.tokens
