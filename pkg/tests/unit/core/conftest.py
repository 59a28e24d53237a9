"""Shared fixtures for core unit tests"""

import pytest

from qinterp.core.linker import candidate_entities
from qinterp.core.segmentation import filter_skeletons, rank_segmentations, tokenize
from tests.conftest import SAMPLE_QUERY


@pytest.fixture(name="sample_query")
def sample_query_fixture():
    return tokenize(SAMPLE_QUERY)


@pytest.fixture(name="sample_ranked")
def sample_ranked_fixture(tiny_kb, sample_query):
    return rank_segmentations(tiny_kb, sample_query)


@pytest.fixture(name="sample_skeletons")
def sample_skeletons_fixture(sample_ranked):
    return filter_skeletons(sample_ranked, 0.66)


@pytest.fixture(name="sample_candidates")
def sample_candidates_fixture(tiny_kb, sample_query):
    return candidate_entities(tiny_kb, sample_query, 150)
