import struct

import numpy as np
import pytest

from diceconf.io import (
    MAGIC,
    atomic_write_text,
    read_manifest,
    read_vector_file,
    write_vector_binary,
    write_vector_text,
)


class TestVectorFiles:
    def test_text_roundtrip(self, tmp_path):
        path = tmp_path / "v.txt"
        write_vector_text(path, [0.5, 1.0])
        assert read_vector_file(path).tolist() == [0.5, 1.0]

    def test_text_parses_plain_lines(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("0.5\n1.0\n")
        assert read_vector_file(path).tolist() == [0.5, 1.0]

    def test_text_without_trailing_newline(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("0.25\n0.75")
        assert read_vector_file(path).tolist() == [0.25, 0.75]

    def test_binary_roundtrip(self, tmp_path):
        path = tmp_path / "v.ssv"
        write_vector_binary(path, [0.25])
        data = path.read_bytes()
        assert data[:4] == MAGIC
        assert struct.unpack("<I", data[4:8])[0] == 1
        assert read_vector_file(path).tolist() == [0.25]

    def test_binary_short_read(self, tmp_path):
        path = tmp_path / "v.ssv"
        path.write_bytes(MAGIC + struct.pack("<I", 3) + b"\x00" * 4)
        with pytest.raises(ValueError, match="short read"):
            read_vector_file(path)

    def test_binary_trailing_bytes(self, tmp_path):
        path = tmp_path / "v.ssv"
        write_vector_binary(path, [0.25])
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(ValueError, match="trailing"):
            read_vector_file(path)

    def test_out_of_range_value(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("1.5\n")
        with pytest.raises(ValueError, match="outside"):
            read_vector_file(path)

    def test_garbage_line_reports_position(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("0.5\nhello\n")
        with pytest.raises(ValueError, match=":2"):
            read_vector_file(path)

    def test_mask_kind_validates_binary_values(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("0\n1\n0.5\n")
        with pytest.raises(ValueError, match="mask"):
            read_vector_file(path, "mask")
        path.write_text("0\n1\n1\n")
        assert read_vector_file(path, "mask").tolist() == [0, 1, 1]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("")
        with pytest.raises(ValueError):
            read_vector_file(path)

    def test_text_binary_same_values(self, tmp_path):
        values = [0.5, 0.25, 0.8125, 0.0, 1.0]  # exactly representable in float32
        t = tmp_path / "v.txt"
        b = tmp_path / "v.ssv"
        write_vector_text(t, values)
        write_vector_binary(b, values)
        assert np.array_equal(read_vector_file(t), read_vector_file(b))


class TestManifest:
    def make(self, tmp_path, body):
        path = tmp_path / "manifest.csv"
        path.write_text(body)
        return path

    def test_parses_rows_and_resolves_paths(self, tmp_path):
        write_vector_text(tmp_path / "a.txt", [0.5])
        write_vector_text(tmp_path / "b.txt", [1.0])
        manifest = self.make(tmp_path, "sample_id,prob_path\nA,a.txt\nB,b.txt\n")
        rows = read_manifest(manifest)
        assert [r.sample_id for r in rows] == ["A", "B"]
        assert rows[0].prob_path == tmp_path / "a.txt"
        assert rows[0].truth_path is None

    def test_truth_column(self, tmp_path):
        write_vector_text(tmp_path / "a.txt", [0.5])
        write_vector_text(tmp_path / "y.txt", [1.0])
        manifest = self.make(tmp_path, "sample_id,prob_path,truth_path\nA,a.txt,y.txt\n")
        rows = read_manifest(manifest)
        assert rows[0].truth_path == tmp_path / "y.txt"

    def test_duplicate_ids_rejected(self, tmp_path):
        write_vector_text(tmp_path / "a.txt", [0.5])
        manifest = self.make(tmp_path, "sample_id,prob_path\nA,a.txt\nA,a.txt\n")
        with pytest.raises(ValueError, match="duplicate"):
            read_manifest(manifest)

    def test_missing_file_rejected(self, tmp_path):
        manifest = self.make(tmp_path, "sample_id,prob_path\nA,nope.txt\n")
        with pytest.raises(ValueError, match="missing file"):
            read_manifest(manifest)

    def test_bad_header_rejected(self, tmp_path):
        manifest = self.make(tmp_path, "id,path\nA,a.txt\n")
        with pytest.raises(ValueError, match="header"):
            read_manifest(manifest)

    def test_empty_manifest_rejected(self, tmp_path):
        manifest = self.make(tmp_path, "sample_id,prob_path\n")
        with pytest.raises(ValueError, match="no rows"):
            read_manifest(manifest)


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    target = tmp_path / "out.csv"
    atomic_write_text(target, "one\n")
    atomic_write_text(target, "two\n")
    assert target.read_text() == "two\n"
    assert list(tmp_path.iterdir()) == [target]
