"""Feature extraction from language models.

Sentence-level extraction pools the final hidden states ([CLS] or mean,
flag-selectable); token-level extraction keeps one feature row per token,
flattening the token dimension across the corpus so that n equals the
total token count. Models come from the transformers hub by name (with
their own tokenizer), or as small randomly initialized encoders over a
corpus-built whitespace vocabulary for fully offline runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

PAD, UNK, CLS = "[PAD]", "[UNK]", "[CLS]"


@dataclass
class Corpus:
    sentences: list[list[str]]  # whitespace-split words per sentence
    sentence_labels: np.ndarray | None  # one int per sentence
    word_labels: list[list[int]] | None  # one int per word
    label_names: list[str] | None = None

    @property
    def total_words(self) -> int:
        return sum(len(s) for s in self.sentences)


def load_sentences(path, labels_path=None) -> Corpus:
    """One sentence per line; optional parallel file with one label per line."""
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    sentences = [ln.split() for ln in lines if ln]
    if not sentences:
        raise ValueError(f"no sentences in {path}")
    labels = None
    if labels_path is not None:
        raw = [ln.strip() for ln in Path(labels_path).read_text().splitlines() if ln.strip()]
        if len(raw) != len(sentences):
            raise ValueError(f"{len(raw)} labels for {len(sentences)} sentences")
        labels = np.array([int(v) for v in raw], dtype=np.int64)
    return Corpus(sentences=sentences, sentence_labels=labels, word_labels=None)


def load_conll(path) -> Corpus:
    """Token-per-line format: "word<TAB or space>tag", blank line between sentences."""
    sentences: list[list[str]] = []
    tags: list[list[str]] = []
    words: list[str] = []
    word_tags: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            if words:
                sentences.append(words)
                tags.append(word_tags)
                words, word_tags = [], []
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"token line needs a word and a tag: {line!r}")
        words.append(parts[0])
        word_tags.append(parts[-1])
    if words:
        sentences.append(words)
        tags.append(word_tags)
    if not sentences:
        raise ValueError(f"no sentences in {path}")
    names = sorted({t for sentence in tags for t in sentence})
    index = {t: i for i, t in enumerate(names)}
    word_labels = [[index[t] for t in sentence] for sentence in tags]
    return Corpus(sentences=sentences, sentence_labels=None, word_labels=word_labels, label_names=names)


# ---------------------------------------------------------------------------
# tokenizers: both yield ids plus the owning word of every token
# ---------------------------------------------------------------------------


class WhitespaceVocab:
    """Corpus-built word vocabulary: one word, one token."""

    def __init__(self, sentences: list[list[str]]):
        words = sorted({w for s in sentences for w in s})
        self.index = {PAD: 0, UNK: 1, CLS: 2}
        for word in words:
            self.index[word] = len(self.index)

    def __len__(self) -> int:
        return len(self.index)

    def encode(self, words: list[str], add_cls: bool) -> tuple[list[int], list[int | None]]:
        ids = [self.index.get(w, self.index[UNK]) for w in words]
        word_ids: list[int | None] = list(range(len(words)))
        if add_cls:
            return [self.index[CLS]] + ids, [None] + word_ids
        return ids, word_ids


class HubTokenizer:
    """Wrapper over a transformers tokenizer (subword splitting allowed)."""

    def __init__(self, tokenizer):
        self.tokenizer = tokenizer

    def encode(self, words: list[str], add_cls: bool) -> tuple[list[int], list[int | None]]:
        encoded = self.tokenizer(
            words, is_split_into_words=True, add_special_tokens=add_cls, truncation=True
        )
        return encoded["input_ids"], encoded.word_ids()


def build_tiny_random_encoder(vocab_size: int, hidden_size: int = 32, seed: int = 0):
    """A small randomly initialized bidirectional encoder for offline runs."""
    from transformers import BertConfig, BertModel

    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=2 * hidden_size,
        max_position_embeddings=512,
    )
    model = BertModel(config)
    model.eval()
    return model


def _hidden_states(model, ids: list[int], device: str) -> torch.Tensor:
    input_ids = torch.tensor([ids], dtype=torch.long, device=device)
    attention = torch.ones_like(input_ids)
    with torch.no_grad():
        out = model(input_ids=input_ids, attention_mask=attention)
    return out.last_hidden_state[0]


def extract_sentence_features(
    model, tokenizer, corpus: Corpus, pooling: str = "mean", device: str = "cpu"
) -> np.ndarray:
    """One pooled feature row per sentence (first token or mean over tokens)."""
    if pooling not in ("mean", "cls"):
        raise ValueError(f"pooling must be 'mean' or 'cls', got {pooling!r}")
    model = model.to(device)
    rows = []
    for sentence in corpus.sentences:
        ids, _ = tokenizer.encode(sentence, add_cls=pooling == "cls")
        hidden = _hidden_states(model, ids, device)
        pooled = hidden[0] if pooling == "cls" else hidden.mean(dim=0)
        rows.append(pooled.cpu().double().numpy())
    return np.stack(rows)


def extract_token_features(
    model, tokenizer, corpus: Corpus, device: str = "cpu"
) -> tuple[np.ndarray, np.ndarray | None]:
    """One feature row per token across the whole corpus (flattened).

    n equals the total token count produced by the tokenizer; each token
    inherits the tag of the word it belongs to, so features and labels stay
    row-aligned even under subword splitting.
    """
    model = model.to(device)
    rows = []
    labels: list[int] = []
    for s, sentence in enumerate(corpus.sentences):
        ids, word_ids = tokenizer.encode(sentence, add_cls=False)
        hidden = _hidden_states(model, ids, device)
        rows.append(hidden.cpu().double().numpy())
        if corpus.word_labels is not None:
            sentence_tags = corpus.word_labels[s]
            for owner in word_ids:
                if owner is None:
                    raise ValueError("special tokens are not expected in token-level extraction")
                labels.append(sentence_tags[owner])
    features = np.concatenate(rows, axis=0)
    label_array = np.array(labels, dtype=np.int64) if corpus.word_labels is not None else None
    return features, label_array
