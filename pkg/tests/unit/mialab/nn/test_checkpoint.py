"""
Unit Tests for the Checkpoint Container.
"""

import json
import struct

import numpy as np
import pytest

from modules.mialab.core.exceptions import CheckpointError
from modules.mialab.nn.checkpoint import MAGIC, load_checkpoint, save_checkpoint


class TestCheckpointContainer:
    """Tests for the little-endian tensor container."""

    def test_restores_tensors_and_metadata(self, tmp_path):
        tensors = {
            "enc.weight": np.arange(6.0).reshape(2, 3),
            "scores": np.array([0.9, 1.1]),
            "users": np.array([3, 1, 2]),
            "scalar": np.array(2.5),
        }
        path = save_checkpoint(tmp_path / "state.mlck", tensors, {"kind": "dlmia", "epoch": 3})

        loaded, metadata = load_checkpoint(path)

        assert metadata == {"kind": "dlmia", "epoch": 3}
        assert set(loaded) == set(tensors)
        np.testing.assert_array_equal(loaded["enc.weight"], tensors["enc.weight"])
        assert loaded["users"].dtype == np.int64
        assert loaded["scalar"].shape == ()

    def test_header_layout(self, tmp_path):
        path = save_checkpoint(tmp_path / "a.mlck", {"w": np.ones((2, 2))})
        raw = path.read_bytes()
        (header_len,) = struct.unpack("<Q", raw[8:16])
        header = json.loads(raw[16:16 + header_len])

        assert raw[:8] == MAGIC
        assert header["tensors"] == [
            {"name": "w", "shape": [2, 2], "dtype": "<f8", "offset": 0, "nbytes": 32}
        ]
        assert len(raw) == 16 + header_len + 32

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "bad.mlck"
        path.write_bytes(b"NOTACKPT" + bytes(8))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_rejects_truncated_payload(self, tmp_path):
        path = save_checkpoint(tmp_path / "t.mlck", {"w": np.ones(10)})
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "missing.mlck")
