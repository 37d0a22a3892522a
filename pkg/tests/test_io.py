import json
import struct

import numpy as np
import pytest

from lddr.alloc import build_pipeline
from lddr.errors import (
    BadMagicError,
    DimensionMismatchError,
    NonFiniteValueError,
    TruncatedFileError,
    ZeroNormRowError,
)
from lddr.io import (
    MAGIC,
    RunConfig,
    read_embeddings,
    read_embeddings_json,
    write_embeddings,
    write_plan,
)
from conftest import random_embeddings


def binary_bytes(frames32, query32):
    frames32 = np.asarray(frames32, dtype="<f4")
    query32 = np.asarray(query32, dtype="<f4")
    T, d = frames32.shape
    return struct.pack("<8sII", MAGIC, T, d) + frames32.tobytes() + query32.tobytes()


class TestReadEmbeddings:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "e.bin"
        path.write_bytes(binary_bytes([[1, 2, 3], [4, 5, 6]], [1, 0, 0]))
        emb = read_embeddings(path)
        assert emb.frame_count == 2 and emb.dim == 3
        np.testing.assert_array_equal(emb.frame_embeddings, [[1, 2, 3], [4, 5, 6]])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "e.bin"
        path.write_bytes(b"XXXXXXXX" + b"\x00" * 24)
        with pytest.raises(BadMagicError):
            read_embeddings(path)

    def test_truncated_payload_reports_lengths(self, tmp_path):
        data = binary_bytes([[1, 2, 3], [4, 5, 6]], [1, 0, 0])
        path = tmp_path / "e.bin"
        path.write_bytes(data[:-4])
        with pytest.raises(TruncatedFileError) as err:
            read_embeddings(path)
        assert err.value.expected == len(data)
        assert err.value.actual == len(data) - 4

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "e.bin"
        path.write_bytes(MAGIC[:4])
        with pytest.raises(TruncatedFileError):
            read_embeddings(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        data = binary_bytes([[1, 2]], [3, 4]) + b"\x00\x00"
        path = tmp_path / "e.bin"
        path.write_bytes(data)
        with pytest.raises(TruncatedFileError):
            read_embeddings(path)

    def test_nonfinite_reports_byte_offset(self, tmp_path):
        frames = np.array([[1.0, 2.0], [np.inf, 3.0]], dtype="<f4")
        path = tmp_path / "e.bin"
        path.write_bytes(binary_bytes(frames, [1.0, 0.0]))
        with pytest.raises(NonFiniteValueError) as err:
            read_embeddings(path)
        assert err.value.byte_offset == 16 + 4 * 2  # row 1, component 0

    def test_zero_norm_row_rejected(self, tmp_path):
        path = tmp_path / "e.bin"
        path.write_bytes(binary_bytes([[0.0, 0.0], [1.0, 0.0]], [1.0, 0.0]))
        with pytest.raises(ZeroNormRowError):
            read_embeddings(path)

    def test_writer_round_trip(self, tmp_path, rng):
        emb = random_embeddings(rng, 7, 5)
        path = tmp_path / "e.bin"
        write_embeddings(emb, path)
        back = read_embeddings(path)
        # disk format is float32, so round-trip through a float32 cast
        np.testing.assert_array_equal(
            back.frame_embeddings, emb.frame_embeddings.astype("<f4").astype(np.float64))


class TestReadEmbeddingsJson:
    def test_simple(self, tmp_path):
        path = tmp_path / "e.json"
        path.write_text('{"frames": [[1, 0], [0, 1]], "query": [1, 0]}')
        emb = read_embeddings_json(path)
        assert emb.frame_count == 2 and emb.dim == 2

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "e.json"
        path.write_text('{"frames": [[1, 0], [0, 1, 2]], "query": [1, 0]}')
        with pytest.raises(DimensionMismatchError):
            read_embeddings_json(path)

    def test_query_length_mismatch(self, tmp_path):
        path = tmp_path / "e.json"
        path.write_text('{"frames": [[1, 0], [0, 1]], "query": [1, 0, 0]}')
        with pytest.raises(DimensionMismatchError):
            read_embeddings_json(path)

    def test_nonfinite_rejected(self, tmp_path):
        path = tmp_path / "e.json"
        path.write_text('{"frames": [[1, NaN]], "query": [1, 0]}')
        with pytest.raises(NonFiniteValueError):
            read_embeddings_json(path)

    def test_binary_json_equivalence(self, tmp_path, rng):
        # same logical float32 data through both readers is bitwise identical
        frames32 = rng.standard_normal((4, 3)).astype("<f4")
        query32 = rng.standard_normal(3).astype("<f4")
        bin_path = tmp_path / "e.bin"
        bin_path.write_bytes(binary_bytes(frames32, query32))
        doc = {"frames": [[float(v) for v in row] for row in frames32],
               "query": [float(v) for v in query32]}
        json_path = tmp_path / "e.json"
        json_path.write_text(json.dumps(doc))
        from_bin = read_embeddings(bin_path)
        from_json = read_embeddings_json(json_path)
        assert from_bin.frame_embeddings.tobytes() == from_json.frame_embeddings.tobytes()
        assert from_bin.query_embedding.tobytes() == from_json.query_embedding.tobytes()


class TestWritePlan:
    def _run(self, rng, mode="dynamic", frames=4):
        emb = random_embeddings(rng, 32, 12)
        cfg = RunConfig(frame_budget=frames, mode=mode)
        return cfg, build_pipeline(emb, frames, mode, cfg)

    def test_fixed_single_frame(self, tmp_path, rng):
        emb = random_embeddings(rng, 10, 6)
        cfg = RunConfig(frame_budget=1, mode="fixed")
        result = build_pipeline(emb, 1, "fixed", cfg)
        out = tmp_path / "plan.json"
        write_plan(result.plan, result.trace, result.scores, cfg, out)
        doc = json.loads(out.read_text())
        assert len(doc["frames"]) == 1
        assert doc["frames"][0]["tokens"] == 1024
        assert doc["totals"]["k_star"] == 1

    def test_byte_identical_reruns(self, tmp_path, rng):
        cfg, result = self._run(rng)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_plan(result.plan, result.trace, result.scores, cfg, p1)
        write_plan(result.plan, result.trace, result.scores, cfg, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_round_trip_invariants(self, tmp_path, rng):
        cfg, result = self._run(rng)
        out = tmp_path / "plan.json"
        write_plan(result.plan, result.trace, result.scores, cfg, out)
        doc = json.loads(out.read_text())
        records = doc["frames"]
        assert [r["frame_index"] for r in records] == sorted(r["frame_index"] for r in records)
        total = sum(r["tokens"] for r in records)
        assert total == doc["totals"]["total_tokens"] <= doc["totals"]["budget"]
        for r in records:
            assert cfg.w_min <= r["tokens"] <= cfg.w_max
            assert r["height_px"] % 14 == 0 and r["width_px"] % 14 == 0
            patches = (r["height_px"] // 14) * (r["width_px"] // 14)
            assert patches <= r["tokens"]
        assert doc["selection"]["order"] == list(result.trace.selected)

    def test_inconsistent_inputs_rejected(self, tmp_path, rng):
        cfg, result = self._run(rng)
        other = build_pipeline(random_embeddings(rng, 8, 4), 2, "fixed")
        with pytest.raises(ValueError, match="missing"):
            write_plan(result.plan, result.trace, other.scores, cfg, tmp_path / "x.json")


class TestRunConfig:
    def test_defaults_follow_protocol(self):
        cfg = RunConfig(frame_budget=8)
        assert (cfg.w_min, cfg.w_max, cfg.tau, cfg.pool_multiplier) == (256, 1024, 1.0, 2.0)
        assert cfg.mode == "dynamic" and cfg.chunks == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(frame_budget=0)
        with pytest.raises(ValueError):
            RunConfig(frame_budget=1, w_min=512, w_max=256)
        with pytest.raises(ValueError):
            RunConfig(frame_budget=1, mode="other")
        with pytest.raises(ValueError):
            RunConfig(frame_budget=1, pool_multiplier=0.5)
        with pytest.raises(ValueError):
            RunConfig(frame_budget=1, tau=-0.1)
