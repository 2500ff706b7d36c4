import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kgsumm.embeddings import EmbeddingError, EmbeddingTable, cosine_sim, load_embeddings, save_embeddings


def test_cosine_hand_values():
    assert cosine_sim([1, 0], [1, 1]) == pytest.approx(0.70710678, abs=1e-8)
    assert cosine_sim([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0, abs=1e-15)
    assert cosine_sim([1, 0], [-1, 0]) == -1.0
    assert cosine_sim([1, 0], [0, 1]) == 0.0


def test_cosine_errors():
    with pytest.raises(EmbeddingError):
        cosine_sim([0, 0], [1, 0])
    with pytest.raises(EmbeddingError):
        cosine_sim([1, 0], [1, 0, 0])


finite = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda x: abs(x) > 1e-3)


@given(arrays(np.float64, 5, elements=finite), arrays(np.float64, 5, elements=finite), st.floats(1e-2, 1e2))
def test_cosine_properties(u, v, scale):
    s = cosine_sim(u, v)
    assert -1.0 <= s <= 1.0
    assert s == cosine_sim(v, u)
    assert math.isclose(s, cosine_sim(scale * u, v), abs_tol=1e-12)


def test_load_roundtrip(tmp_path):
    table = EmbeddingTable(3, {"a": np.array([1.0, 2.0, 3.0]), "b": np.array([0.5, -1.0, 0.25])})
    save_embeddings(table, tmp_path / "e.txt")
    back = load_embeddings(tmp_path / "e.txt")
    assert back.dim == 3 and set(back.vectors) == {"a", "b"}
    assert np.array_equal(back["b"], table["b"])


def test_dimension_mismatch_names_word(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("2 3\na 1 2 3\nbad 1 2\n")
    with pytest.raises(EmbeddingError, match="bad"):
        load_embeddings(p)


def test_zero_vector_rejected(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("1 2\nz 0 0\n")
    with pytest.raises(EmbeddingError):
        load_embeddings(p)


def test_duplicate_keeps_last(tmp_path, caplog):
    p = tmp_path / "e.txt"
    p.write_text("2 2\na 1 0\na 0 1\n")
    table = load_embeddings(p)
    assert list(table["a"]) == [0.0, 1.0]
    assert "duplicate" in caplog.text
