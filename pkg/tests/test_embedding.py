import numpy as np
import pytest

from concept_cnn.data import ConceptVocabulary, binary_entry, influenza_vocabulary
from concept_cnn.embedding import (
    build_one_hot_table,
    encode_instance,
    load_embedding_table,
    save_embedding_table,
)
from concept_cnn.errors import DataError, DimensionMismatchError

from helpers import make_record


def test_one_hot_dimension_for_influenza_schema():
    table = build_one_hot_table(influenza_vocabulary())
    assert table.dimension == 145
    assert table.source_tag == "one-hot"
    assert len(table.vectors) == 145


def test_one_hot_single_concept():
    vocab = ConceptVocabulary((binary_entry("cough"),))
    table = build_one_hot_table(vocab)
    assert table.vector("cough", "P").tolist() == [1.0, 0.0]
    assert table.vector("cough", "A").tolist() == [0.0, 1.0]


def test_one_hot_rows_are_orthonormal(tiny_vocab):
    table = build_one_hot_table(tiny_vocab)
    all_vecs = np.stack([table.vector(c, l) for c, l in tiny_vocab.pairs()])
    gram = all_vecs @ all_vecs.T
    assert np.array_equal(gram, np.eye(len(all_vecs)))


def test_table_text_round_trip(tiny_vocab):
    table = build_one_hot_table(tiny_vocab)
    text = save_embedding_table(table)
    again = load_embedding_table(text)
    assert again.dimension == table.dimension
    assert again.source_tag == table.source_tag
    for key, vec in table.vectors.items():
        assert np.array_equal(again.vectors[key], vec)
    assert save_embedding_table(again) == text


def test_round_trip_preserves_awkward_floats():
    rng = np.random.default_rng(0)
    header = '{"dimension": 3, "source_tag": "t"}'
    vec = rng.standard_normal(3) * 1e-7
    line = (
        '{"concept": "c", "label": "P", "vector": ['
        + ", ".join(f"{x:.17e}" for x in vec)
        + "]}"
    )
    line2 = line.replace('"P"', '"A"')
    table = load_embedding_table("\n".join([header, line, line2]))
    assert np.array_equal(table.vector("c", "P"), vec)
    assert save_embedding_table(load_embedding_table(save_embedding_table(table))) == save_embedding_table(table)


def test_load_rejects_wrong_vector_length():
    text = '{"dimension": 3, "source_tag": "t"}\n{"concept": "c", "label": "P", "vector": [1.0, 2.0]}'
    with pytest.raises(DimensionMismatchError):
        load_embedding_table(text)


def test_load_rejects_non_finite():
    text = '{"dimension": 2, "source_tag": "t"}\n{"concept": "c", "label": "P", "vector": [1.0, NaN]}'
    with pytest.raises(DataError, match="non-finite"):
        load_embedding_table(text)


def test_load_rejects_duplicate_key():
    row = '{"concept": "c", "label": "P", "vector": [1.0, 2.0]}'
    text = '{"dimension": 2, "source_tag": "t"}\n' + row + "\n" + row
    with pytest.raises(DataError, match="duplicate"):
        load_embedding_table(text)


def test_load_rejects_missing_header():
    with pytest.raises(DataError):
        load_embedding_table('{"concept": "c", "label": "P", "vector": [1.0]}')


def two_symptom_setup():
    vocab = ConceptVocabulary((binary_entry("body_ache"), binary_entry("chest_cold")))
    vectors = {
        ("body_ache", "P"): np.array([-6.7620, -0.6463]),
        ("body_ache", "A"): np.array([0.5, 0.5]),
        ("chest_cold", "P"): np.array([-0.0534, 0.0267]),
        ("chest_cold", "A"): np.array([0.25, -0.25]),
    }
    from concept_cnn.embedding import EmbeddingTable, _freeze

    table = EmbeddingTable(2, "demo", {k: _freeze(v) for k, v in vectors.items()})
    return vocab, table


def test_encode_stacks_rows_in_vocabulary_order():
    vocab, table = two_symptom_setup()
    record = make_record(vocab, outcome=1, body_ache="P", chest_cold="P")
    inst = encode_instance(record, vocab, table)
    assert inst.outcome == 1
    assert np.allclose(inst.matrix, [[-6.7620, -0.6463], [-0.0534, 0.0267]])


def test_encode_one_hot_all_absent(tiny_vocab):
    table = build_one_hot_table(tiny_vocab)
    record = make_record(tiny_vocab)
    inst = encode_instance(record, tiny_vocab, table)
    assert inst.matrix.shape == (len(tiny_vocab), table.dimension)
    assert np.all(inst.matrix.sum(axis=1) == 1.0)
    for i, entry in enumerate(tiny_vocab.entries):
        expected = table.vector(entry.concept_id, record.assignments[entry.concept_id])
        assert np.array_equal(inst.matrix[i], expected)


def test_encode_is_pure():
    vocab, table = two_symptom_setup()
    record = make_record(vocab, body_ache="P")
    a = encode_instance(record, vocab, table)
    b = encode_instance(record, vocab, table)
    assert np.array_equal(a.matrix, b.matrix)


def test_encode_missing_pair_errors():
    vocab, table = two_symptom_setup()
    bigger = ConceptVocabulary(
        (binary_entry("body_ache"), binary_entry("chest_cold"), binary_entry("sniffles"))
    )
    record = make_record(bigger)
    with pytest.raises(DataError, match="no vector"):
        encode_instance(record, bigger, table)


def test_encoded_matrix_is_read_only(tiny_vocab):
    table = build_one_hot_table(tiny_vocab)
    inst = encode_instance(make_record(tiny_vocab), tiny_vocab, table)
    with pytest.raises(ValueError):
        inst.matrix[0, 0] = 5.0
