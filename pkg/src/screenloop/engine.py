"""The screening control loop.

A session walks a reviewer through a corpus in three phases:

* bootstrap — no relevant document found yet; batches come from BM25
  ranking against the reviewer's keyword query,
* uncertainty — some relevant documents found (fewer than the strategy
  threshold); batches are the unlabeled documents closest to the decision
  boundary,
* certainty — enough relevant documents found; batches are the unlabeled
  documents the model scores highest.

The model retrains every ``batch_size`` submitted labels (and immediately
when the first relevant document arrives), each time on the labeled set
plus an equal-sized random sample of unlabeled documents presumed
non-relevant.  Once the threshold is reached, retraining adds an
aggressive undersampling pass.  After every retrain the session
re-estimates the total number of relevant documents and stops (softly)
when the included count reaches the target fraction of that estimate.

All orderings break ties by ascending doc_id, and the only randomness is
the seeded presumptive sampler, so a session is a deterministic function
of (corpus, config, label sequence).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import models
from .corpus import (
    EXCLUDED,
    INCLUDED,
    SOURCE_HUMAN,
    Corpus,
    LabelJournal,
)
from .models import LogisticCurve, ModelSnapshot
from .textfeat import Bm25Index, build_vocabulary, corpus_tokens, vectorize

BOOTSTRAP = "bootstrap"
UNCERTAINTY = "uncertainty"
CERTAINTY = "certainty"
DONE = "done"

TARGET_REACHED = "target_reached"
EXHAUSTED = "exhausted"

SEMI_MAX_ITERATIONS = 50


class StateError(Exception):
    """Raised when an operation is illegal in the session's current phase."""


class ConfigurationError(Exception):
    """Raised when a session cannot be created as configured."""


@dataclass(frozen=True)
class SessionConfig:
    target_recall: float = 0.9
    batch_size: int = 10          # labels per query batch and retrain cadence
    strategy_threshold: int = 30  # included count that flips uncertainty -> certainty
    rng_seed: int = 0
    bootstrap_query: str = ""

    def __post_init__(self) -> None:
        if not (0.0 < self.target_recall <= 1.0):
            raise ConfigurationError("target_recall must be in (0, 1]")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.strategy_threshold < 1:
            raise ConfigurationError("strategy_threshold must be >= 1")


@dataclass(frozen=True)
class RecallEstimate:
    estimated_relevant: int
    estimated_recall: Optional[float]  # included / estimated_relevant
    computed_at: int                   # label sequence number when computed


def temporary_label(
    curve: LogisticCurve,
    ids: np.ndarray,
    decisions: np.ndarray,
    y: np.ndarray,
) -> np.ndarray:
    """One accumulation pass assigning provisional positives.

    Walks the unlabeled documents in descending predicted probability
    (ties by ascending doc_id), summing probabilities; every time the
    running sum reaches the current integer target, the first document of
    the current window gets y=1, the target increments, and the window
    resets.  Returns an updated copy of ``y``.
    """
    y = np.array(y, copy=True)
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids) == 0:
        return y
    probs = curve.predict(np.asarray(decisions, dtype=np.float64))
    order = np.lexsort((ids, -probs))
    # Probabilities never exceed 1, so the running sum crosses each integer
    # target at most once per document; the m-th window therefore starts
    # right after the (m-1)-th crossing and its first document is marked.
    sums = np.cumsum(probs[order])
    reached = int(np.floor(sums[-1]))
    if reached < 1:
        return y
    crossings = np.searchsorted(sums, np.arange(1, reached + 1, dtype=np.float64))
    starts = np.empty(reached, dtype=np.int64)
    starts[0] = 0
    starts[1:] = crossings[:-1] + 1
    y[ids[order[starts]]] = 1
    return y


class Session:
    """Single-writer state machine for one screening session."""

    def __init__(
        self,
        corpus: Corpus,
        config: SessionConfig,
        journal: Optional[LabelJournal] = None,
    ):
        if len(corpus) == 0:
            raise ConfigurationError("cannot start a session on an empty corpus")
        ids = [d.doc_id for d in corpus.documents]
        if ids != list(range(len(ids))):
            raise ConfigurationError("doc_ids must be contiguous from 0 in file order")

        self.corpus = corpus
        self.config = config
        self.journal = journal
        self.rng = np.random.default_rng(config.rng_seed)

        tokens = corpus_tokens(corpus)
        self.vocabulary = build_vocabulary(corpus, tokens=tokens)
        self.features = vectorize(corpus, self.vocabulary, tokens=tokens)
        self.bm25 = Bm25Index(corpus, tokens=tokens)

        self.model: Optional[ModelSnapshot] = None
        self.estimate: Optional[RecallEstimate] = None
        self.estimate_history: list[RecallEstimate] = []
        self.pending_batch: Optional[list[int]] = None
        self.labels_since_retrain = 0
        self.target_stop_overridden = False

        # A corpus can arrive with labels (resumed or replayed session);
        # if any are relevant the model must exist before the next query.
        if self._can_train():
            self.retrain()
            self._refresh_estimate()

    def _can_train(self) -> bool:
        """Both classes reachable: a relevant label plus at least one
        excluded label or presumable unlabeled document."""
        if self.corpus.n_included < 1:
            return False
        negatives = self.corpus.n_labeled - self.corpus.n_included
        pool = min(self.corpus.n_labeled, self.corpus.n_unlabeled)
        return negatives + pool >= 1

    # ------------------------------------------------------------------
    # phase machine

    @property
    def phase(self) -> str:
        stopped, reason = self.should_stop()
        if stopped and reason == EXHAUSTED:
            return DONE
        if stopped and not self.target_stop_overridden:
            return DONE
        n_inc = self.corpus.n_included
        if n_inc == 0:
            return BOOTSTRAP
        if n_inc < self.config.strategy_threshold:
            return UNCERTAINTY
        return CERTAINTY

    def should_stop(self) -> tuple[bool, Optional[str]]:
        """Stop when nothing is left, or included count reaches the target
        fraction of the estimated relevant total (estimate unset counts as
        infinite)."""
        if self.corpus.n_unlabeled == 0:
            return True, EXHAUSTED
        if self.estimate is not None:
            threshold = self.config.target_recall * self.estimate.estimated_relevant
            if self.corpus.n_included >= threshold:
                return True, TARGET_REACHED
        return False, None

    def resume(self) -> None:
        """Continue screening past a reached target (the stop is advisory)."""
        self.target_stop_overridden = True

    # ------------------------------------------------------------------
    # querying

    def next_batch(self) -> list[int]:
        phase = self.phase
        if phase == DONE:
            _, reason = self.should_stop()
            raise StateError(f"session is done ({reason})")
        if self.pending_batch is not None:
            return list(self.pending_batch)

        unlabeled = self.corpus.unlabeled_ids()
        k = min(self.config.batch_size, len(unlabeled))
        if phase == BOOTSTRAP:
            ranked = self.bm25.rank(self.config.bootstrap_query, k, eligible=unlabeled)
            batch = [doc_id for doc_id, _ in ranked]
        else:
            if self.model is None:
                self.retrain()
            ids = np.asarray(unlabeled, dtype=np.int64)
            values = models.decision(self.model, self.features.matrix[ids])
            if phase == CERTAINTY:
                order = np.lexsort((ids, -values))
            else:
                order = np.lexsort((ids, np.abs(values)))
            batch = [int(ids[i]) for i in order[:k]]
        self.pending_batch = list(batch)
        return list(batch)

    # ------------------------------------------------------------------
    # labeling

    def submit_labels(
        self, labels: Iterable[tuple[int, str]], source: str = SOURCE_HUMAN
    ) -> None:
        # The stop rule applies between batches: a submission that starts
        # while the session is live is accepted in full, even if a
        # mid-submission estimate reaches the target.
        was_done = self.phase == DONE
        for doc_id, decision in labels:
            existing = self.corpus.active_label(doc_id)
            if existing is None and was_done:
                _, reason = self.should_stop()
                raise StateError(
                    f"session is done ({reason}); resume() to keep screening"
                )
            had_relevant = self.corpus.n_included > 0
            record = self.corpus.record_label(doc_id, decision, source)
            if self.journal is not None:
                self.journal.append(record)
            self.pending_batch = None
            self.labels_since_retrain += 1

            if not self._can_train():
                continue
            first_relevant = not had_relevant
            if self.labels_since_retrain >= self.config.batch_size:
                # Cadence retrain at the batch boundary; this is the one
                # that re-estimates and can therefore trip the stop rule.
                self.retrain()
                self.labels_since_retrain = 0
                self._refresh_estimate()
            elif first_relevant or self.model is None:
                # Warm-up retrain so querying can leave the keyword phase
                # right away.  No estimate: one relevant label carries no
                # information about the relevant total, and the loop's
                # guard only consults estimates made at batch boundaries.
                self.retrain()

    # ------------------------------------------------------------------
    # training and estimation

    def retrain(self) -> ModelSnapshot:
        """Presume non-relevant on a random unlabeled sample, train the
        balanced classifier, then undersample-retrain past the threshold."""
        included = self.corpus.included_ids()
        if not included:
            raise StateError("retraining requires at least one included document")
        labeled = self.corpus.labeled_ids()
        unlabeled = self.corpus.unlabeled_ids()

        n_presume = min(len(labeled), len(unlabeled))
        if n_presume > 0:
            presumed = self.rng.choice(
                np.asarray(unlabeled, dtype=np.int64), size=n_presume, replace=False
            )
        else:
            presumed = np.empty(0, dtype=np.int64)

        rows = np.concatenate([np.asarray(labeled, dtype=np.int64), presumed])
        rows.sort()
        included_set = set(included)
        y = np.array([1.0 if r in included_set else -1.0 for r in rows])

        snapshot = models.train_svm(self.features.matrix[rows], y, balanced=True)
        if len(included) >= self.config.strategy_threshold:
            neg_rows = rows[y < 0]
            snapshot = models.aggressive_undersample(
                snapshot,
                self.features.matrix,
                np.asarray(included, dtype=np.int64),
                neg_rows,
            )
        self.model = snapshot
        return snapshot

    def estimate_recall(self) -> RecallEstimate:
        """Semi-supervised fixed-point estimate of the relevant total.

        Starting from y=1 on included documents, repeatedly fit a 1-D
        logistic over (decision value, y) for every document, then run a
        temporary-label pass over the unlabeled ones; iterate until the
        estimated total stops changing (or the iteration cap)."""
        if self.model is None:
            raise StateError("no trained model to estimate from")
        values = models.decision(self.model, self.features.matrix)
        n = len(self.corpus)
        y = np.zeros(n, dtype=np.int64)
        included = self.corpus.included_ids()
        y[included] = 1
        unlabeled = np.asarray(self.corpus.unlabeled_ids(), dtype=np.int64)

        estimated = int(y.sum())
        last = 0
        iterations = 0
        while estimated != last and iterations < SEMI_MAX_ITERATIONS:
            curve = models.fit_logistic_1d(np.column_stack([values, y]))
            y = temporary_label(curve, unlabeled, values[unlabeled], y)
            last = estimated
            estimated = int(y.sum())
            iterations += 1

        n_included = self.corpus.n_included
        recall = n_included / estimated if estimated > 0 else None
        est = RecallEstimate(estimated, recall, self.corpus.next_sequence - 1)
        self.estimate = est
        self.estimate_history.append(est)
        return est

    def _refresh_estimate(self) -> None:
        self.estimate_recall()

    # ------------------------------------------------------------------
    # error correction

    def suggest_error_checks(self, k: int) -> list[int]:
        """Labeled documents whose label disagrees with the decision sign,
        most confident disagreements first."""
        if self.model is None:
            raise StateError("no trained model to check against")
        labeled = self.corpus.labeled_ids()
        if not labeled:
            return []
        ids = np.asarray(labeled, dtype=np.int64)
        values = models.decision(self.model, self.features.matrix[ids])
        flagged: list[tuple[float, int]] = []
        for doc_id, value in zip(ids, values):
            label = self.corpus.active_label(int(doc_id)).decision
            disagrees = (label == INCLUDED and value < 0) or (
                label == EXCLUDED and value > 0
            )
            if disagrees:
                flagged.append((-abs(float(value)), int(doc_id)))
        flagged.sort()
        return [doc_id for _, doc_id in flagged[:k]]

    # ------------------------------------------------------------------
    # reporting

    def stats(self) -> dict:
        stopped, reason = self.should_stop()
        return {
            "n_documents": len(self.corpus),
            "n_labeled": self.corpus.n_labeled,
            "n_included": self.corpus.n_included,
            "phase": self.phase,
            "estimated_relevant": None
            if self.estimate is None
            else self.estimate.estimated_relevant,
            "estimated_recall": None
            if self.estimate is None
            else self.estimate.estimated_recall,
            "target_recall": self.config.target_recall,
            "should_stop": stopped,
            "stop_reason": reason,
        }


def start_session(
    corpus: Corpus, config: SessionConfig, journal: Optional[LabelJournal] = None
) -> Session:
    return Session(corpus, config, journal)
