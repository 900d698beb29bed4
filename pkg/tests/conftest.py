import csv
from pathlib import Path

import pytest

from screenloop.corpus import Corpus, Document


def make_corpus(rows: list[tuple[str, str]]) -> Corpus:
    """Corpus from (title, abstract) pairs, doc_ids 0..n-1."""
    return Corpus(
        Document(i, title, abstract) for i, (title, abstract) in enumerate(rows)
    )


def write_csv(path: Path, rows: list[dict], columns=None) -> Path:
    columns = columns or ["Document Title", "Abstract", "Year", "PDF Link", "label"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    return path


@pytest.fixture
def csv_dir(tmp_path):
    return tmp_path
