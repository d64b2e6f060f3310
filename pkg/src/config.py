import json
import os
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Optional

from src.errors import UsageError


class AggregationMode(str, Enum):
    HIERARCHICAL = "hierarchical"
    EDGE_MAX = "edge-max"
    EDGE_AVG = "edge-avg"
    NODE = "node"

    @classmethod
    def parse(cls, text: str) -> "AggregationMode":
        key = text.strip().lower().replace("_", "-")
        aliases = {
            "edge-max-only": "edge-max",
            "edge-avg-only": "edge-avg",
            "node-only": "node",
        }
        key = aliases.get(key, key)
        for mode in cls:
            if mode.value == key:
                return mode
        raise UsageError(f"Unknown aggregation mode: {text}")


@dataclass(frozen=True)
class TripletConfig:
    alpha: float = 0.5
    margin: float = 0.3
    metric: str = "euclidean"
    max_triplets: int = 20000

    def problems(self) -> list[str]:
        out = []
        if not 0.0 <= self.alpha <= 1.0:
            out.append(f"triplet.alpha must be in [0, 1], got {self.alpha}")
        if self.margin <= 0:
            out.append(f"triplet.margin must be > 0, got {self.margin}")
        if self.metric != "euclidean":
            out.append(f"triplet.metric must be 'euclidean', got {self.metric!r}")
        if self.max_triplets < 1:
            out.append(f"triplet.max_triplets must be >= 1, got {self.max_triplets}")
        return out


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 50
    batch_size: int = 64

    def problems(self) -> list[str]:
        out = []
        if self.lr < 0:
            out.append(f"optimizer.lr must be >= 0, got {self.lr}")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            out.append("optimizer betas must be in [0, 1)")
        if self.eps <= 0:
            out.append(f"optimizer.eps must be > 0, got {self.eps}")
        if self.epochs < 0:
            out.append(f"optimizer.epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            out.append(f"optimizer.batch_size must be >= 1, got {self.batch_size}")
        return out


# h/g maps 128,128 then 256,256; node map 1024; FC 512, 256, then 7 logits.
FULL_PRESET: dict[str, Any] = {
    "h_widths": ((128, 128), (256, 256)),
    "g_widths": ((128, 128), (256, 256)),
    "node_width": 1024,
    "head_widths": (512, 256),
}

COMPACT_PRESET: dict[str, Any] = {
    "h_widths": ((16, 16), (32, 32)),
    "g_widths": ((16, 16), (32, 32)),
    "node_width": 64,
    "head_widths": (32, 16),
}

PRESETS = {"full": FULL_PRESET, "compact": COMPACT_PRESET}


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int = 512
    h_widths: tuple[tuple[int, int], ...] = FULL_PRESET["h_widths"]
    g_widths: tuple[tuple[int, int], ...] = FULL_PRESET["g_widths"]
    node_width: int = FULL_PRESET["node_width"]
    head_widths: tuple[int, ...] = FULL_PRESET["head_widths"]
    num_styles: int = 6
    mode: AggregationMode = AggregationMode.HIERARCHICAL
    gamma: float = 0.5
    style_head: bool = True
    focal_weight: float = 1.0

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> "NetworkConfig":
        if name not in PRESETS:
            raise UsageError(f"Unknown architecture preset: {name}")
        return cls(**{**PRESETS[name], **overrides})

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        return _build(cls, data, "network", raise_on_problems=True)

    @property
    def output_width(self) -> int:
        return 1 + self.num_styles

    def problems(self) -> list[str]:
        out = []
        if self.input_dim < 1:
            out.append(f"network.input_dim must be >= 1, got {self.input_dim}")
        if len(self.h_widths) != len(self.g_widths) or not self.h_widths:
            out.append("network.h_widths and network.g_widths need the same nonzero layer count")
        for name, layers in (("h_widths", self.h_widths), ("g_widths", self.g_widths)):
            for pair in layers:
                if len(pair) != 2 or any(w < 1 for w in pair):
                    out.append(f"network.{name} entries must be two positive widths, got {pair}")
        if self.node_width < 1 or any(w < 1 for w in self.head_widths):
            out.append("network widths must be positive")
        if self.num_styles < 1:
            out.append(f"network.num_styles must be >= 1, got {self.num_styles}")
        if self.gamma < 0:
            out.append(f"network.gamma must be >= 0, got {self.gamma}")
        if self.focal_weight < 0:
            out.append(f"network.focal_weight must be >= 0, got {self.focal_weight}")
        return out

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["h_widths"] = [list(p) for p in self.h_widths]
        data["g_widths"] = [list(p) for p in self.g_widths]
        data["head_widths"] = list(self.head_widths)
        return data


@dataclass(frozen=True)
class StyleRuleConfig:
    same_hue: float = 5.0
    same_sv: float = 0.1
    mono_saturation: float = 0.15
    analogous_arc: float = 60.0
    cluster_tolerance: float = 15.0

    def problems(self) -> list[str]:
        out = []
        for f in fields(self):
            if getattr(self, f.name) < 0:
                out.append(f"styles.{f.name} must be >= 0")
        return out


@dataclass(frozen=True)
class CollocationConfig:
    threshold: float = 0.5
    accept_ties: bool = True

    def problems(self) -> list[str]:
        if not 0.0 <= self.threshold <= 1.0:
            return [f"collocation.threshold must be in [0, 1], got {self.threshold}"]
        return []


# Embedding optimizer: Adam at 5e-5, batch 240.
EMBEDDING_OPTIMIZER_DEFAULTS: dict[str, Any] = {"lr": 5e-5, "epochs": 200, "batch_size": 240}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    threads: int = 1
    log_level: str = "INFO"
    negatives: str = "all"
    oversample: bool = False
    triplet: TripletConfig = field(default_factory=TripletConfig)
    embedding_optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(**EMBEDDING_OPTIMIZER_DEFAULTS)
    )
    graph_optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    styles: StyleRuleConfig = field(default_factory=StyleRuleConfig)
    collocation: CollocationConfig = field(default_factory=CollocationConfig)

    def problems(self) -> list[str]:
        out = []
        if self.threads < 1:
            out.append(f"threads must be >= 1, got {self.threads}")
        if self.negatives not in ("all", "one"):
            out.append(f"negatives must be 'all' or 'one', got {self.negatives!r}")
        for section in (
            self.triplet, self.embedding_optimizer, self.graph_optimizer,
            self.network, self.styles, self.collocation,
        ):
            out.extend(section.problems())
        return out

    def to_dict(self) -> dict:
        data = asdict(self)
        data["network"] = self.network.to_dict()
        return data


SECTION_DEFAULTS = {"embedding_optimizer": EMBEDDING_OPTIMIZER_DEFAULTS}

SECTIONS = {
    "triplet": TripletConfig,
    "embedding_optimizer": OptimizerConfig,
    "graph_optimizer": OptimizerConfig,
    "network": NetworkConfig,
    "styles": StyleRuleConfig,
    "collocation": CollocationConfig,
}


def _coerce(cls, name: str, value: Any) -> Any:
    if cls is NetworkConfig:
        if name == "mode" and not isinstance(value, AggregationMode):
            return AggregationMode.parse(str(value))
        if name in ("h_widths", "g_widths"):
            return tuple(tuple(int(w) for w in pair) for pair in value)
        if name == "head_widths":
            return tuple(int(w) for w in value)
    return value


def _build(cls, data: dict, section: str, problems: Optional[list] = None, raise_on_problems: bool = False):
    problems = [] if problems is None else problems
    data = dict(data or {})
    preset = data.pop("preset", None) if cls is NetworkConfig else None
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        problems.append(f"Unknown key(s) in {section}: {', '.join(unknown)}")
    kwargs = dict(SECTION_DEFAULTS.get(section, {}))
    if preset is not None:
        if preset not in PRESETS:
            problems.append(f"Unknown architecture preset in {section}: {preset}")
        else:
            kwargs.update(PRESETS[preset])
    for name in known & set(data):
        try:
            kwargs[name] = _coerce(cls, name, data[name])
        except (UsageError, TypeError, ValueError) as e:
            problems.append(f"{section}.{name}: {e}")
    obj = cls(**kwargs)
    if raise_on_problems:
        problems.extend(obj.problems())
        if problems:
            raise UsageError("; ".join(problems))
    return obj


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Load a run configuration from JSON, CLI overrides and the environment.

    Every problem found is collected and reported in a single UsageError.
    """
    problems: list[str] = []
    data: dict = {}
    if path:
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise UsageError(f"Config file not found: {path}")
        except json.JSONDecodeError as e:
            raise UsageError(f"Config file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise UsageError(f"Config file {path} must hold a JSON object")

    env: dict[str, Any] = {}
    threads = os.environ.get("NGF_THREADS", "").strip()
    if threads:
        try:
            env["threads"] = int(threads)
        except ValueError:
            problems.append(f"NGF_THREADS must be an integer, got {threads!r}")
    log_level = os.environ.get("NGF_LOG_LEVEL", "").strip()
    if log_level:
        env["log_level"] = log_level

    merged = _merge(_merge(data, env), overrides or {})

    top_known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(merged) - top_known)
    if unknown:
        problems.append(f"Unknown top-level key(s): {', '.join(unknown)}")

    kwargs: dict[str, Any] = {}
    for name, cls in SECTIONS.items():
        if name in merged:
            if not isinstance(merged[name], dict):
                problems.append(f"Section {name} must be an object")
                continue
            kwargs[name] = _build(cls, merged[name], name, problems)
    for name in ("seed", "threads", "log_level", "negatives", "oversample"):
        if name in merged:
            kwargs[name] = merged[name]

    config = RunConfig(**kwargs)
    problems.extend(config.problems())
    if problems:
        raise UsageError("Invalid configuration: " + "; ".join(problems))
    return config


def ensure_valid(*configs) -> None:
    """Raise UsageError when any of the given config sections is invalid."""
    problems = [p for c in configs for p in c.problems()]
    if problems:
        raise UsageError("; ".join(problems))
