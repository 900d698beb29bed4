"""Replay harness: run the screening loop against a ground-truth corpus.

The simulated reviewer answers every queried document from the corpus's
ground-truth labels, optionally flipping each answer independently with a
configured error probability.  Flips draw from a dedicated RNG stream
derived from the session seed, so the engine's own presumptive sampling
stream is identical with and without simulated errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import EXCLUDED, INCLUDED, SOURCE_REPLAY, Corpus, Document
from .engine import SessionConfig, start_session
from .metrics import ValidationError, recall_cost_curve

# Salt for the reviewer-error RNG stream (np.default_rng([seed, salt])).
_FLIP_STREAM = 7919


@dataclass(frozen=True)
class SimulationResult:
    stop_screened: int
    true_recall: float
    estimated_recall: Optional[float]
    cost: float
    curve: list[tuple[int, float]]
    stop_reason: Optional[str] = None
    # full label sequence, kept out of the serialized report
    trace: tuple[tuple[int, str], ...] = ()

    def to_dict(self) -> dict:
        return {
            "stop_screened": self.stop_screened,
            "true_recall": self.true_recall,
            "estimated_recall": self.estimated_recall,
            "cost": self.cost,
            "curve": [[s, r] for s, r in self.curve],
            "stop_reason": self.stop_reason,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def ground_truth(corpus: Corpus) -> dict[int, bool]:
    """Extract doc_id -> relevant from a fully labeled replay corpus."""
    truth: dict[int, bool] = {}
    for doc in corpus.documents:
        record = corpus.active_label(doc.doc_id)
        if record is None:
            raise ValidationError(f"doc {doc.doc_id} has no ground-truth label")
        truth[doc.doc_id] = record.decision == INCLUDED
    return truth


def simulate(
    corpus: Corpus, config: SessionConfig, error_rate: float = 0.0
) -> SimulationResult:
    """Run the full loop with an oracle reviewer; stop at the stop rule.

    ``corpus`` must carry a ground-truth label for every document; a fresh
    unlabeled session is started over the same documents.
    """
    if not (0.0 <= error_rate < 1.0):
        raise ValueError("error_rate must be in [0, 1)")
    truth = ground_truth(corpus)
    session = start_session(corpus.copy_documents(), config)
    flip_rng = np.random.default_rng([config.rng_seed, _FLIP_STREAM])

    trace: list[tuple[int, str]] = []
    while True:
        stopped, reason = session.should_stop()
        if stopped:
            break
        batch = session.next_batch()
        answers: list[tuple[int, str]] = []
        for doc_id in batch:
            relevant = truth[doc_id]
            if flip_rng.random() < error_rate:
                relevant = not relevant
            answers.append((doc_id, INCLUDED if relevant else EXCLUDED))
        trace.extend(answers)
        session.submit_labels(answers, source=SOURCE_REPLAY)

    curve = recall_cost_curve(trace, truth) if trace else []
    true_recall = curve[-1][1] if curve else 0.0
    estimate = session.estimate
    return SimulationResult(
        stop_screened=session.corpus.n_labeled,
        true_recall=true_recall,
        estimated_recall=None if estimate is None else estimate.estimated_recall,
        cost=session.corpus.n_labeled / len(corpus),
        curve=curve,
        stop_reason=reason,
        trace=tuple(trace),
    )


def generate_synthetic(
    n_docs: int,
    n_relevant: int,
    vocab_size: int = 200,
    signal: float = 0.6,
    seed: int = 0,
) -> Corpus:
    """Deterministic synthetic benchmark corpus with ground-truth labels.

    Relevant documents draw each token from a topical vocabulary
    (``topic0000`` ...) with probability ``signal``, otherwise from a 4x
    larger background vocabulary (``filler0000`` ...); irrelevant
    documents draw only background tokens.  At signal 1.0 the two classes
    share no terms at all.
    """
    if not (0 < n_relevant < n_docs):
        raise ValueError("need 0 < n_relevant < n_docs")
    if not (0.0 <= signal <= 1.0):
        raise ValueError("signal must be in [0, 1]")
    if vocab_size < 1:
        raise ValueError("vocab_size must be >= 1")

    rng = np.random.default_rng(seed)
    topical = [f"topic{i:04d}" for i in range(vocab_size)]
    background = [f"filler{i:04d}" for i in range(4 * vocab_size)]

    relevant = np.zeros(n_docs, dtype=bool)
    relevant[rng.choice(n_docs, size=n_relevant, replace=False)] = True

    docs: list[Document] = []
    for i in range(n_docs):
        title_len = int(rng.integers(6, 11))
        abstract_len = int(rng.integers(40, 81))
        total = title_len + abstract_len
        topical_mask = rng.random(total) < signal if relevant[i] else np.zeros(total, bool)
        topical_draw = rng.integers(0, vocab_size, size=total)
        background_draw = rng.integers(0, len(background), size=total)
        words = [
            topical[topical_draw[j]] if topical_mask[j] else background[background_draw[j]]
            for j in range(total)
        ]
        year = int(rng.integers(1990, 2019))
        docs.append(
            Document(
                doc_id=i,
                title=" ".join(words[:title_len]),
                abstract=" ".join(words[title_len:]),
                year=year,
                link=f"https://example.org/doc/{i}",
            )
        )

    corpus = Corpus(docs)
    for i in range(n_docs):
        corpus.record_label(i, INCLUDED if relevant[i] else EXCLUDED, source=SOURCE_REPLAY)
    return corpus
