import json
import os
from unittest.mock import patch

import pytest

from src.config import (
    AggregationMode,
    NetworkConfig,
    OptimizerConfig,
    RunConfig,
    ensure_valid,
    load_config,
)
from src.errors import UsageError


@patch.dict(os.environ, {}, clear=True)
def test_defaults():
    config = load_config()
    assert config == RunConfig()
    assert config.triplet.alpha == 0.5
    assert config.triplet.margin == 0.3
    assert config.network.gamma == 0.5
    assert config.network.mode is AggregationMode.HIERARCHICAL
    assert config.embedding_optimizer.lr == 5e-5
    assert config.embedding_optimizer.batch_size == 240
    assert config.graph_optimizer.lr == 1e-3


@patch.dict(os.environ, {}, clear=True)
def test_file_and_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "seed": 4,
        "network": {"preset": "compact", "mode": "edge_max_only", "input_dim": 8},
        "embedding_optimizer": {"epochs": 3},
    }))
    config = load_config(str(path), {"seed": 9, "network": {"gamma": 0.0}})
    assert config.seed == 9
    assert config.network.mode is AggregationMode.EDGE_MAX
    assert config.network.node_width == 64
    assert config.network.input_dim == 8
    assert config.network.gamma == 0.0
    # Section defaults survive a partial section.
    assert config.embedding_optimizer.epochs == 3
    assert config.embedding_optimizer.lr == 5e-5


@patch.dict(os.environ, {}, clear=True)
def test_all_problems_reported_together(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "bogus": 1,
        "triplet": {"alpha": 2.0, "colour": "red"},
        "graph_optimizer": {"lr": -1},
    }))
    with pytest.raises(UsageError) as exc:
        load_config(str(path))
    message = str(exc.value)
    assert "bogus" in message
    assert "colour" in message
    assert "triplet.alpha" in message
    assert "optimizer.lr" in message


@patch.dict(os.environ, {"NGF_THREADS": "3", "NGF_LOG_LEVEL": "DEBUG"}, clear=True)
def test_environment():
    config = load_config()
    assert config.threads == 3
    assert config.log_level == "DEBUG"


@patch.dict(os.environ, {"NGF_THREADS": "many"}, clear=True)
def test_bad_environment():
    with pytest.raises(UsageError, match="NGF_THREADS"):
        load_config()


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(UsageError, match="not found"):
        load_config(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(UsageError, match="not valid JSON"):
        load_config(str(bad))


@pytest.mark.parametrize("text,mode", [
    ("hierarchical", AggregationMode.HIERARCHICAL),
    ("edge-avg", AggregationMode.EDGE_AVG),
    ("EDGE_AVG_ONLY", AggregationMode.EDGE_AVG),
    ("node-only", AggregationMode.NODE),
])
def test_mode_parse(text, mode):
    assert AggregationMode.parse(text) is mode


def test_mode_parse_unknown():
    with pytest.raises(UsageError):
        AggregationMode.parse("attention")


def test_presets():
    full = NetworkConfig.preset("full")
    assert full.h_widths == ((128, 128), (256, 256))
    assert full.node_width == 1024
    assert full.head_widths == (512, 256)
    assert full.output_width == 7
    with pytest.raises(UsageError):
        NetworkConfig.preset("huge")


def test_network_from_dict_rejects_mismatched_layers():
    with pytest.raises(UsageError, match="same nonzero layer count"):
        NetworkConfig.from_dict({"h_widths": [[4, 4]], "g_widths": [[4, 4], [5, 5]]})


def test_ensure_valid():
    ensure_valid(OptimizerConfig())
    with pytest.raises(UsageError):
        ensure_valid(OptimizerConfig(epochs=-1))


def test_to_dict_is_json_ready():
    data = RunConfig().to_dict()
    assert data["network"]["mode"] == "hierarchical"
    json.dumps(data)
