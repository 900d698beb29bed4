"""Sparse text features for screening corpora.

Two consumers: the linear classifier reads L2-normalized TF-IDF rows
(sublinear tf, vocabulary capped at the 4000 highest-mass terms), and the
keyword bootstrap ranks documents with Okapi BM25 (k1=1.5, b=0.75,
idf = ln(1 + (N - df + 0.5)/(df + 0.5))).  Both operate on the same
tokens: lowercased [a-z0-9]+ runs of length >= 2 with standard English
stopwords removed.

Vocabulary and feature matrix are immutable once built; a session freezes
them at start, so identical corpora always yield identical features.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus

MAX_VOCABULARY = 4000
BM25_K1 = 1.5
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# NLTK's English stopword list, restricted to forms an alphanumeric
# tokenizer can produce (apostrophe variants collapse to these stems).
STOPWORDS = frozenset(
    """
    me my myself we our ours ourselves you your yours yourself yourselves
    he him his himself she her hers herself it its itself they them their
    theirs themselves what which who whom this that these those am is are
    was were be been being have has had having do does did doing an the
    and but if or because as until while of at by for with about against
    between into through during before after above below to from up down
    in out on off over under again further then once here there when
    where why how all any both each few more most other some such no nor
    not only own same so than too very can will just don should now ll re
    ve ain aren couldn didn doesn hadn hasn haven isn ma mightn mustn
    needn shan shouldn wasn weren won wouldn
    """.split()
)


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens, length >= 2, stopwords removed."""
    return [
        t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2 and t not in STOPWORDS
    ]


def corpus_tokens(corpus: Corpus) -> list[list[str]]:
    """Token lists for every document (title + abstract), in doc order."""
    return [tokenize(doc.text) for doc in corpus.documents]


@dataclass(frozen=True)
class Vocabulary:
    term_ids: dict[str, int]  # term -> contiguous id, ids follow lexicographic order
    doc_freq: np.ndarray      # df per term id
    n_docs: int

    def __len__(self) -> int:
        return len(self.term_ids)

    def idf(self, term: str) -> float:
        tid = self.term_ids.get(term)
        if tid is None:
            return 0.0
        return math.log(self.n_docs / self.doc_freq[tid])


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-per-document sparse TF-IDF matrix; row index equals doc_id."""

    matrix: sparse.csr_matrix  # (n_docs, n_terms), rows L2-normalized

    def row(self, doc_id: int) -> sparse.csr_matrix:
        return self.matrix[doc_id]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def build_vocabulary(
    corpus: Corpus,
    max_terms: int = MAX_VOCABULARY,
    tokens: Optional[list[list[str]]] = None,
) -> Vocabulary:
    """Select the ``max_terms`` terms with the largest total TF-IDF mass.

    Mass of a term is the sum over documents of (1 + ln tf) * ln(N/df),
    before row normalization.  Ties break lexicographically.
    """
    if len(corpus) == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if tokens is None:
        tokens = corpus_tokens(corpus)
    n_docs = len(corpus)

    df: Counter[str] = Counter()
    tf_by_doc = [Counter(ts) for ts in tokens]
    for counts in tf_by_doc:
        df.update(counts.keys())

    mass: dict[str, float] = {t: 0.0 for t in df}
    for counts in tf_by_doc:
        for term, tf in counts.items():
            idf = math.log(n_docs / df[term])
            mass[term] += (1.0 + math.log(tf)) * idf

    ranked = sorted(mass, key=lambda t: (-mass[t], t))[:max_terms]
    term_ids = {t: i for i, t in enumerate(sorted(ranked))}
    doc_freq = np.zeros(len(term_ids), dtype=np.int64)
    for term, tid in term_ids.items():
        doc_freq[tid] = df[term]
    return Vocabulary(term_ids, doc_freq, n_docs)


def vectorize(
    corpus: Corpus,
    vocab: Vocabulary,
    tokens: Optional[list[list[str]]] = None,
) -> FeatureMatrix:
    """TF-IDF rows: weight = (1 + ln tf) * ln(N/df), then L2-normalize."""
    if tokens is None:
        tokens = corpus_tokens(corpus)
    n_docs = len(corpus)
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for ts in tokens:
        counts = Counter(ts)
        entries = []
        for term, tf in counts.items():
            tid = vocab.term_ids.get(term)
            if tid is None:
                continue
            idf = math.log(vocab.n_docs / vocab.doc_freq[tid])
            entries.append((tid, (1.0 + math.log(tf)) * idf))
        entries.sort()
        norm = math.sqrt(sum(w * w for _, w in entries))
        if norm > 0:
            entries = [(tid, w / norm) for tid, w in entries]
        for tid, w in entries:
            indices.append(tid)
            data.append(w)
        indptr.append(len(indices))
    matrix = sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
        shape=(n_docs, len(vocab)),
    )
    return FeatureMatrix(matrix)


class Bm25Index:
    """Okapi BM25 index over title+abstract tokens of a corpus."""

    def __init__(self, corpus: Corpus, tokens: Optional[list[list[str]]] = None):
        if tokens is None:
            tokens = corpus_tokens(corpus)
        self.doc_ids = [d.doc_id for d in corpus.documents]
        self._pos = {d: i for i, d in enumerate(self.doc_ids)}
        self.tf = [Counter(ts) for ts in tokens]
        self.doc_len = np.array([len(ts) for ts in tokens], dtype=np.float64)
        self.n_docs = len(tokens)
        self.avgdl = float(self.doc_len.mean()) if self.n_docs else 0.0
        df: Counter[str] = Counter()
        for counts in self.tf:
            df.update(counts.keys())
        self.df = df

    def _idf(self, term: str) -> float:
        df = self.df.get(term, 0)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def scores(self, query: str) -> np.ndarray:
        """BM25 score of every document against the query, in doc order."""
        q_terms = tokenize(query)
        if not q_terms:
            raise ValueError("query tokenizes to nothing")
        out = np.zeros(self.n_docs)
        for i, counts in enumerate(self.tf):
            if self.avgdl > 0:
                norm = BM25_K1 * (1.0 - BM25_B + BM25_B * self.doc_len[i] / self.avgdl)
            else:
                norm = BM25_K1
            s = 0.0
            for term in q_terms:
                tf = counts.get(term, 0)
                if tf:
                    s += self._idf(term) * tf * (BM25_K1 + 1.0) / (tf + norm)
            out[i] = s
        return out

    def rank(
        self, query: str, k: int, eligible: Optional[Sequence[int]] = None
    ) -> list[tuple[int, float]]:
        """Top-k (doc_id, score), descending score, ties by ascending doc_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        scores = self.scores(query)
        ids = self.doc_ids if eligible is None else sorted(eligible)
        ordered = sorted(ids, key=lambda d: (-scores[self._pos[d]], d))
        return [(d, float(scores[self._pos[d]])) for d in ordered[:k]]


def bm25_rank(corpus: Corpus, query: str, k: int) -> list[tuple[int, float]]:
    """One-shot BM25 ranking; builds a throwaway index."""
    return Bm25Index(corpus).rank(query, k)
