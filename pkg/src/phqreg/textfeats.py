"""Document-level text representations of the participant's side.

A session document is the concatenation of all participant tokens,
lowercased, with ``<...>`` annotations kept as ordinary tokens. Three
representations:

    BOOL    1 iff the token occurs in the document
    TFIDF   raw term count * idf, idf(t) = ln(n_docs / doc_freq(t)) + 1
    WE      average of pre-trained word vectors (annotations and other
            out-of-table tokens are skipped; all-absent doc -> zero vector)

Vocabulary and idf come from the training corpus only; out-of-vocabulary
tokens at transform time are ignored.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Session, Speaker

MODES = ("BOOL", "TFIDF")


def build_document(session: Session) -> list[str]:
    """All participant tokens in order, lowercased."""
    return [tok.lower() for t in session.turns if t.speaker is Speaker.PARTICIPANT for tok in t.text]


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    index: dict

    def __len__(self) -> int:
        return len(self.tokens)


def build_vocabulary(docs) -> Vocabulary:
    """Sorted unique tokens of the training documents, densely indexed."""
    tokens = tuple(sorted({tok for doc in docs for tok in doc}))
    return Vocabulary(tokens, {tok: i for i, tok in enumerate(tokens)})


def idf_weights(docs, vocab: Vocabulary) -> np.ndarray:
    """idf(t) = ln(n_docs / doc_freq(t)) + 1 over the training documents."""
    docs = list(docs)
    df = np.zeros(len(vocab))
    for doc in docs:
        for tok in set(doc):
            i = vocab.index.get(tok)
            if i is not None:
                df[i] += 1
    idf = np.ones(len(vocab))
    seen = df > 0
    idf[seen] = np.log(len(docs) / df[seen]) + 1.0
    return idf


def vectorize(docs, vocab: Vocabulary, mode: str, idf: np.ndarray | None = None) -> np.ndarray:
    """Bag-of-words matrix (n_docs x |V|) in BOOL or TFIDF mode.

    TFIDF requires idf weights fitted on the training corpus.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    if mode == "TFIDF":
        if idf is None:
            raise ValueError("TFIDF mode requires idf weights")
        if len(idf) != len(vocab):
            raise ValueError("idf length does not match vocabulary size")

    docs = list(docs)
    out = np.zeros((len(docs), len(vocab)))
    for r, doc in enumerate(docs):
        counts = Counter(doc)
        for tok, c in counts.items():
            i = vocab.index.get(tok)
            if i is None:
                continue
            out[r, i] = 1.0 if mode == "BOOL" else float(c)
    if mode == "TFIDF":
        out *= idf
    return out


@dataclass(frozen=True)
class EmbeddingTable:
    """token -> fixed-dimension vector lookup."""

    vectors: dict
    dim: int

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path) -> EmbeddingTable:
    """Text format: one ``token v1 ... vd`` per line; d inferred from line 1."""
    vectors = {}
    dim = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split()
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise ValueError(f"{path}:{lineno}: no vector components")
        if len(parts) - 1 != dim:
            raise ValueError(f"{path}:{lineno}: expected {dim} components, got {len(parts) - 1}")
        vectors[parts[0]] = np.array([float(v) for v in parts[1:]])
    if dim is None:
        raise ValueError(f"{path}: empty embedding table")
    return EmbeddingTable(vectors, dim)


def embed_average(doc, table: EmbeddingTable) -> np.ndarray:
    """Mean of the vectors of in-table tokens; zero vector if none are found."""
    if len(table) == 0:
        raise ValueError("empty embedding table")
    found = [table.vectors[tok] for tok in doc if tok in table.vectors]
    if not found:
        return np.zeros(table.dim)
    return np.mean(found, axis=0)


class TextVectorizer:
    """Fit vocabulary (and idf) on training docs, then transform any docs."""

    def __init__(self, mode: str):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode
        self.vocab: Vocabulary | None = None
        self.idf: np.ndarray | None = None

    def fit(self, docs) -> "TextVectorizer":
        docs = list(docs)
        self.vocab = build_vocabulary(docs)
        self.idf = idf_weights(docs, self.vocab) if self.mode == "TFIDF" else None
        return self

    def transform(self, docs) -> np.ndarray:
        if self.vocab is None:
            raise RuntimeError("vectorizer not fitted")
        return vectorize(docs, self.vocab, self.mode, self.idf)

    def feature_names(self) -> tuple[str, ...]:
        if self.vocab is None:
            raise RuntimeError("vectorizer not fitted")
        return tuple(f"tok_{t}" for t in self.vocab.tokens)
