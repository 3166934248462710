"""Shared fixtures: synthetic corpora are expensive, so the ones several
test modules read from are built once per session."""
from __future__ import annotations

import pytest

from readskill import synth


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Nine 8 s recordings, three per skill class, with hypotheses."""
    root = tmp_path_factory.mktemp("corpus_small")
    synth.write_corpus(root, per_class=3, duration=8.0, seed=0)
    return root
