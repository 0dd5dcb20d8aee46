import pytest

from concept_cnn.data import ConceptEntry, ConceptVocabulary, binary_entry


@pytest.fixture
def tiny_vocab():
    return ConceptVocabulary(
        (
            binary_entry("cough"),
            binary_entry("headache"),
            ConceptEntry("temperature", ("High grade", "Low grade", "Inconsequential", "No info")),
            ConceptEntry("age_group", ("0-5", "6-64", "65+")),
        )
    )
