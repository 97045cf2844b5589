import json

import numpy as np
import pytest

from bidal import (
    BUDGET_PRESETS,
    ConfigError,
    FrameFormatError,
    PipelineConfig,
    Proportion,
    SyntheticConfig,
    Threshold,
    TopK,
    generate,
    load_config,
    load_frames,
    parse_schedule,
    parse_source_mode,
    save_frames,
)


def sample_frames(n=5, seed=0):
    cfg = SyntheticConfig(n_source=n, n_target=n, n_eval=1, seed=seed)
    src, tgt, _ = generate(cfg)
    return src + tgt


class TestFrameFiles:
    def test_roundtrip_is_bit_exact(self, tmp_path):
        frames = sample_frames()
        path = str(tmp_path / "frames.ndjson")
        save_frames(frames, path)
        back = load_frames(path)
        assert len(back) == len(frames)
        for a, b in zip(frames, back):
            assert a.id == b.id
            assert a.domain == b.domain
            assert a.hidden_label == b.hidden_label
            assert np.array_equal(a.feature_map, b.feature_map)
            assert np.array_equal(a.objectness_map, b.objectness_map)
            assert np.array_equal(a.roi_features, b.roi_features)
            assert np.array_equal(a.roi_confidences, b.roi_confidences)

    def test_double_roundtrip_identical_bytes(self, tmp_path):
        frames = sample_frames(seed=1)
        p1, p2 = str(tmp_path / "a.ndjson"), str(tmp_path / "b.ndjson")
        save_frames(frames, p1)
        save_frames(load_frames(p1), p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_invalid_json_reports_line_number(self, tmp_path):
        frames = sample_frames(n=2, seed=2)
        path = str(tmp_path / "frames.ndjson")
        save_frames(frames, path)
        with open(path, "a") as fh:
            fh.write("{not json\n")
        with pytest.raises(FrameFormatError, match="line 5"):
            load_frames(path)

    def test_truncated_payload_reports_line_number(self, tmp_path):
        frames = sample_frames(n=1, seed=3)
        path = str(tmp_path / "frames.ndjson")
        save_frames(frames, path)
        record = json.loads(open(path).read().splitlines()[0])
        record["feature_map"] = record["feature_map"][: len(record["feature_map"]) // 2]
        with open(path, "w") as fh:
            fh.write(json.dumps(record) + "\n")
        with pytest.raises(FrameFormatError, match="line 1"):
            load_frames(path)

    def test_missing_key_is_format_error(self, tmp_path):
        frames = sample_frames(n=1, seed=4)
        path = str(tmp_path / "frames.ndjson")
        save_frames(frames, path)
        record = json.loads(open(path).read().splitlines()[0])
        del record["domain"]
        with open(path, "w") as fh:
            fh.write(json.dumps(record) + "\n")
        with pytest.raises(FrameFormatError):
            load_frames(path)

    def test_blank_lines_are_skipped(self, tmp_path):
        frames = sample_frames(n=2, seed=5)
        path = str(tmp_path / "frames.ndjson")
        save_frames(frames, path)
        text = open(path).read().replace("\n", "\n\n")
        with open(path, "w") as fh:
            fh.write(text)
        assert len(load_frames(path)) == 4


class TestSourceModeParsing:
    def test_string_forms(self):
        assert parse_source_mode("threshold:0") == Threshold(0.0)
        assert parse_source_mode("threshold") == Threshold(0.0)
        assert parse_source_mode("proportion:0.3") == Proportion(0.3)
        assert parse_source_mode("topk:5") == TopK(5)

    def test_dict_forms(self):
        assert parse_source_mode({"type": "topk", "value": 7}) == TopK(7)
        assert parse_source_mode({"type": "threshold"}) == Threshold(0.0)

    def test_rejects_unknown_type_and_keys(self):
        with pytest.raises(ConfigError):
            parse_source_mode({"type": "best"})
        with pytest.raises(ConfigError):
            parse_source_mode({"type": "topk", "value": 3, "extra": 1})


class TestScheduleParsing:
    def test_presets_exist_and_parse(self):
        for name, preset in BUDGET_PRESETS.items():
            assert parse_schedule(name) == preset

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            parse_schedule("kitti-50pct")

    def test_explicit_schedule(self):
        s = parse_schedule(
            {"rounds": 2, "per_round": [3, 4], "trigger_epochs": [0, 5]}
        )
        assert s.total_budget == 7

    def test_bad_schedule_is_config_error(self):
        with pytest.raises(ConfigError):
            parse_schedule({"rounds": 2, "per_round": [3], "trigger_epochs": [0, 5]})
        with pytest.raises(ConfigError):
            parse_schedule({"rounds": 1, "per_round": [1], "epochs": [0]})


class TestConfigFiles:
    def write(self, tmp_path, payload):
        path = str(tmp_path / "cfg.json")
        with open(path, "w") as fh:
            json.dump(payload, fh)
        return path

    def test_pipeline_config_roundtrip(self, tmp_path):
        path = self.write(
            tmp_path,
            {
                "kind": "pipeline",
                "schedule": "kitti-1pct",
                "source_mode": "topk:20",
                "discriminator": {"epochs": 50, "seed": 3},
                "seed": 3,
            },
        )
        cfg = load_config(path)
        assert isinstance(cfg, PipelineConfig)
        assert cfg.schedule == BUDGET_PRESETS["kitti-1pct"]
        assert cfg.source_mode == TopK(20)
        assert cfg.discriminator.epochs == 50

    def test_synthetic_config_roundtrip(self, tmp_path):
        path = self.write(
            tmp_path,
            {
                "kind": "synthetic",
                "n_source": 10,
                "n_target": 20,
                "n_eval": 5,
                "domain_shift": 2.5,
                "roi_noise": 0.25,
                "seed": 9,
            },
        )
        cfg = load_config(path)
        assert isinstance(cfg, SyntheticConfig)
        assert cfg.n_target == 20
        assert cfg.roi_noise == 0.25

    def test_unknown_keys_rejected(self, tmp_path):
        path = self.write(
            tmp_path, {"kind": "synthetic", "n_source": 10, "n_tgt": 20}
        )
        with pytest.raises(ConfigError, match="n_tgt"):
            load_config(path)

    def test_missing_kind_rejected(self, tmp_path):
        path = self.write(tmp_path, {"schedule": "kitti-1pct"})
        with pytest.raises(ConfigError):
            load_config(path)

    def test_pipeline_requires_schedule(self, tmp_path):
        path = self.write(tmp_path, {"kind": "pipeline"})
        with pytest.raises(ConfigError):
            load_config(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = str(tmp_path / "cfg.json")
        with open(path, "w") as fh:
            fh.write("{nope")
        with pytest.raises(ConfigError):
            load_config(path)
