import json

import numpy as np
import pytest

from lapsmooth.exceptions import InputError
from lapsmooth.utils.io import (
    content_hash,
    read_json,
    read_matrix_csv,
    read_vector_csv,
    write_json,
    write_manifest,
    write_matrix_csv,
    write_table_csv,
)


def test_read_fixture_files(three_point_files):
    points_path, responses_path = three_point_files

    assert read_matrix_csv(points_path).tolist() == [[0.0], [0.5], [2.0]]
    assert read_vector_csv(responses_path).tolist() == [1.5, -0.25, 3.0]


def test_matrix_written_values_read_back_exactly(tmp_path):
    matrix = np.array([[0.1, 1.0 / 3.0], [-2.5e-300, 7.0]])

    path = write_matrix_csv(str(tmp_path / "m.csv"), matrix)

    assert np.array_equal(read_matrix_csv(str(path)), matrix)


def test_ragged_and_non_numeric_rows_are_rejected(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    words = tmp_path / "words.csv"
    words.write_text("1.0\nabc\n")

    with pytest.raises(InputError):
        read_matrix_csv(str(ragged))
    with pytest.raises(InputError):
        read_matrix_csv(str(words))
    with pytest.raises(InputError):
        read_matrix_csv(str(tmp_path / "missing.csv"))


def test_vector_file_must_have_one_column(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text("1,2\n3,4\n")

    with pytest.raises(InputError):
        read_vector_csv(str(path))


def test_table_cells_are_formatted(tmp_path):
    path = write_table_csv(str(tmp_path / "t.csv"), ["a", "b", "c", "d"], [[1, 0.5, None, True], [np.int64(2), np.float64(0.25), "x", False]])

    assert path.read_text().splitlines() == ["a,b,c,d", "1,0.5,,true", "2,0.25,x,false"]


def test_json_keys_are_sorted(tmp_path):
    path = write_json(str(tmp_path / "doc.json"), {"b": np.float64(1.5), "a": np.arange(3)})

    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert read_json(str(path)) == {"a": [0, 1, 2], "b": 1.5}


def test_content_hash_matches_git_blob_hash(tmp_path):
    path = tmp_path / "hello.txt"
    path.write_bytes(b"hello\n")

    assert content_hash(str(path)) == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_manifest_hashes_outputs_but_not_itself(tmp_path):
    first = write_json(str(tmp_path / "a.json"), {"x": 1})
    second = write_table_csv(str(tmp_path / "b.csv"), ["y"], [[2]])

    manifest = write_manifest(str(tmp_path), {"seed": 7}, [first, second, tmp_path / "manifest.json"], extra={"kind": "rates"})

    document = json.loads(manifest.read_text())
    assert document["config"] == {"seed": 7}
    assert document["kind"] == "rates"
    assert set(document["outputs"]) == {"a.json", "b.csv"}
    assert document["outputs"]["a.json"] == content_hash(str(first))
