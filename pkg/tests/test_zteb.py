import struct

import numpy as np
import pytest

from zerotta.zteb import (
    ZtebFormatError,
    block_offset,
    header_size,
    read_block,
    read_embedding_file,
    write_embedding_file,
)


def unit_matrix(rng, rows, dim):
    mat = rng.normal(size=(rows, dim))
    return mat / np.linalg.norm(mat, axis=-1, keepdims=True)


class TestRoundtrip:
    def test_payload_bitwise_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        mat = unit_matrix(rng, 3, 4)
        first = tmp_path / "a.zteb"
        second = tmp_path / "b.zteb"
        write_embedding_file(mat, first)
        loaded = read_embedding_file(first)
        write_embedding_file(loaded, second)
        assert first.read_bytes() == second.read_bytes()
        # float32 storage, float64 computation
        assert loaded.dtype == np.float64
        np.testing.assert_allclose(loaded, mat, atol=1e-6)

    def test_rank3_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        tensor = rng.normal(size=(4, 3, 8))
        tensor /= np.linalg.norm(tensor, axis=-1, keepdims=True)
        path = tmp_path / "views.zteb"
        write_embedding_file(tensor, path)
        loaded = read_embedding_file(path)
        assert loaded.shape == (4, 3, 8)
        np.testing.assert_allclose(loaded, tensor, atol=1e-6)

    def test_header_layout(self, tmp_path):
        mat = np.eye(2)
        path = tmp_path / "eye.zteb"
        write_embedding_file(mat, path)
        blob = path.read_bytes()
        assert blob[:4] == b"ZTEB"
        version, dtype_tag, rank = struct.unpack_from("<HBB", blob, 4)
        assert (version, dtype_tag, rank) == (1, 1, 2)
        assert struct.unpack_from("<2Q", blob, 8) == (2, 2)
        assert len(blob) == header_size(2) + 2 * 2 * 4

    def test_refuses_non_finite(self, tmp_path):
        with pytest.raises(ValueError, match="non-finite"):
            write_embedding_file(np.array([[np.inf, 0.0]]), tmp_path / "x.zteb")


class TestMalformedFiles:
    def _valid_bytes(self):
        mat = np.eye(2)
        header = struct.pack("<4sHBB", b"ZTEB", 1, 1, 2) + struct.pack("<2Q", 2, 2)
        return header + np.ascontiguousarray(mat, dtype="<f4").tobytes()

    def test_bad_magic_names_offset(self, tmp_path):
        blob = b"XTEB" + self._valid_bytes()[4:]
        path = tmp_path / "bad_magic.zteb"
        path.write_bytes(blob)
        with pytest.raises(ZtebFormatError, match="magic.*offset 0"):
            read_embedding_file(path)

    def test_version_mismatch(self, tmp_path):
        blob = bytearray(self._valid_bytes())
        blob[4:6] = struct.pack("<H", 2)
        path = tmp_path / "bad_version.zteb"
        path.write_bytes(bytes(blob))
        with pytest.raises(ZtebFormatError, match="version 2"):
            read_embedding_file(path)

    def test_unknown_dtype_tag(self, tmp_path):
        blob = bytearray(self._valid_bytes())
        blob[6] = 7
        path = tmp_path / "bad_dtype.zteb"
        path.write_bytes(bytes(blob))
        with pytest.raises(ZtebFormatError, match="dtype tag 7"):
            read_embedding_file(path)

    def test_truncated_payload(self, tmp_path):
        # shape (2, 3) advertises 24 payload bytes but only 20 are present
        header = struct.pack("<4sHBB", b"ZTEB", 1, 1, 2) + struct.pack("<2Q", 2, 3)
        path = tmp_path / "truncated.zteb"
        path.write_bytes(header + b"\x00" * 20)
        with pytest.raises(ZtebFormatError, match="truncated.*24 bytes, found 20"):
            read_embedding_file(path)

    def test_oversized_payload(self, tmp_path):
        blob = self._valid_bytes() + b"\x00" * 8
        path = tmp_path / "oversized.zteb"
        path.write_bytes(blob)
        with pytest.raises(ZtebFormatError, match="oversized"):
            read_embedding_file(path)

    def test_norm_violation(self, tmp_path):
        path = tmp_path / "bad_norm.zteb"
        write_embedding_file(np.array([[0.5, 0.5]]), path)
        with pytest.raises(ZtebFormatError, match="norm"):
            read_embedding_file(path)
        # loading with the check disabled still works
        np.testing.assert_allclose(read_embedding_file(path, check_norm=False),
                                   [[0.5, 0.5]], atol=1e-6)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.zteb"
        path.write_bytes(b"")
        with pytest.raises(ZtebFormatError, match="too short"):
            read_embedding_file(path)


class TestReadBlock:
    def test_block_matches_slice(self, tmp_path):
        rng = np.random.default_rng(2)
        tensor = rng.normal(size=(5, 4, 6))
        tensor /= np.linalg.norm(tensor, axis=-1, keepdims=True)
        path = tmp_path / "views.zteb"
        write_embedding_file(tensor, path)
        for s in range(5):
            block = read_block(path, block_offset(s, 4, 6), 4, 6)
            np.testing.assert_allclose(block, tensor[s], atol=1e-6)

    def test_out_of_range_block(self, tmp_path):
        rng = np.random.default_rng(3)
        tensor = rng.normal(size=(2, 3, 4))
        tensor /= np.linalg.norm(tensor, axis=-1, keepdims=True)
        path = tmp_path / "views.zteb"
        write_embedding_file(tensor, path)
        with pytest.raises(ZtebFormatError, match="outside payload"):
            read_block(path, block_offset(2, 3, 4), 3, 4)

    def test_misaligned_offset(self, tmp_path):
        rng = np.random.default_rng(4)
        tensor = rng.normal(size=(2, 3, 4))
        tensor /= np.linalg.norm(tensor, axis=-1, keepdims=True)
        path = tmp_path / "views.zteb"
        write_embedding_file(tensor, path)
        with pytest.raises(ZtebFormatError, match="misaligned"):
            read_block(path, header_size(3) + 2, 3, 4)
