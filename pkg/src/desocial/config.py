"""Experiment configuration: flat `key = value` text files.

Lines are `key = value`; `#` starts a comment; no nesting. Lists are
comma-separated. Backbone-specific training overrides use a dotted key,
e.g. `sgc.learning_rate = 0.3`. Unknown keys are rejected by name.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from .backbones import CANONICAL_POOL, BackboneKind, TrainingHyper, parse_kind
from .errors import ConfigError

# Known-good fixed settings per backbone for desk-scale runs; a config
# file can override any field globally or per backbone. Dropout doubles
# as the validators' diversity source: committee members share data and
# architecture, so regularization noise is what decorrelates their votes.
DEFAULT_HYPER = {
    BackboneKind.MLP: TrainingHyper(learning_rate=0.01, dropout=0.3),
    BackboneKind.GCN: TrainingHyper(learning_rate=0.01, dropout=0.3),
    BackboneKind.GAT: TrainingHyper(learning_rate=0.01, dropout=0.3),
    BackboneKind.SAGE: TrainingHyper(learning_rate=0.01, dropout=0.3),
    BackboneKind.SGC: TrainingHyper(learning_rate=0.01, dropout=0.3),
}

_HYPER_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainingHyper)}
_INT_HYPER = {"epochs", "patience", "embed_dim", "neg_ratio", "heads", "hops"}

_GRID_LEARNING_RATES = [1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4,
                        5e-5, 1e-5, 5e-6, 1e-6]
_GRID_DROPOUTS = [0.3, 0.5, 0.7]


@dataclass
class ExperimentConfig:
    dataset: str = "synthetic:users=200,edges=6000,model=preferential,seed=1"
    T: int = 40
    start_test_period: int | None = None
    end_test_period: int | None = None
    pool: tuple[BackboneKind, ...] = CANONICAL_POOL
    strategy: str = "personalized"
    fixed_backbone: BackboneKind | None = None
    n: int = 5
    K_values: tuple[int, ...] = (2, 3, 5)
    gamma: int = 250
    alpha: float = -0.1
    B_req: int = 128
    B_vote: int = 256
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs/out"
    per_validator_negatives: bool = False
    grid_search: bool = False
    grid_learning_rates: tuple[float, ...] = tuple(_GRID_LEARNING_RATES)
    grid_dropouts: tuple[float, ...] = tuple(_GRID_DROPOUTS)
    hyper_global: dict = field(default_factory=dict)
    hyper_by_kind: dict = field(default_factory=dict)

    def resolved(self) -> "ExperimentConfig":
        cfg = dataclasses.replace(self)
        if cfg.start_test_period is None:
            cfg.start_test_period = max(2, cfg.T - 10)
        if cfg.end_test_period is None:
            cfg.end_test_period = cfg.T - 1
        _validate(cfg)
        return cfg

    def hyper_for(self, kind: BackboneKind) -> TrainingHyper:
        base = dataclasses.asdict(DEFAULT_HYPER[kind])
        base.update(self.hyper_global)
        base.update(self.hyper_by_kind.get(kind, {}))
        # Lowering epochs below the default patience means "train less",
        # not a contradiction; keep patience <= epochs.
        base["patience"] = min(base["patience"], base["epochs"])
        return TrainingHyper(**base)

    def test_periods(self) -> range:
        return range(self.start_test_period, self.end_test_period + 1)

    def to_dict(self) -> dict:
        """Fully-resolved, JSON-ready view (echoed into report.json)."""
        return {
            "dataset": self.dataset,
            "T": self.T,
            "start_test_period": self.start_test_period,
            "end_test_period": self.end_test_period,
            "pool": [k.value for k in self.pool],
            "strategy": self.strategy,
            "fixed_backbone":
                self.fixed_backbone.value if self.fixed_backbone else None,
            "n": self.n,
            "K_values": list(self.K_values),
            "gamma": self.gamma,
            "alpha": self.alpha,
            "B_req": self.B_req,
            "B_vote": self.B_vote,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "per_validator_negatives": self.per_validator_negatives,
            "grid_search": self.grid_search,
            "hyper": {k.value: dataclasses.asdict(self.hyper_for(k))
                      for k in self.pool},
        }


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.T < 2:
        raise ConfigError("T must be >= 2")
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    if not cfg.pool:
        raise ConfigError("pool must be non-empty")
    if not (1 <= cfg.start_test_period <= cfg.end_test_period < cfg.T):
        raise ConfigError(
            "need 1 <= start_test_period <= end_test_period < T, got "
            f"{cfg.start_test_period}..{cfg.end_test_period} with T={cfg.T}")
    if any(k < 2 for k in cfg.K_values):
        raise ConfigError("K values must be >= 2")
    if cfg.gamma < 1:
        raise ConfigError("gamma must be >= 1")
    if cfg.B_req < 1 or cfg.B_vote < 1:
        raise ConfigError("batch sizes must be >= 1")
    if not cfg.seeds:
        raise ConfigError("seeds must be non-empty")
    if cfg.strategy not in ("personalized", "rule", "random", "fixed"):
        raise ConfigError(f"unknown strategy {cfg.strategy!r}")
    if cfg.strategy == "fixed" and cfg.fixed_backbone is None:
        raise ConfigError("fixed strategy needs fixed_backbone")
    if cfg.fixed_backbone is not None and cfg.fixed_backbone not in cfg.pool:
        raise ConfigError("fixed_backbone must belong to the pool")


def _parse_scalar(key: str, value: str, kind: type):
    try:
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
        if kind is bool:
            low = value.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(value)
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def _parse_list(key: str, value: str, kind: type) -> tuple:
    return tuple(_parse_scalar(key, part.strip(), kind)
                 for part in value.split(",") if part.strip())


def load_config(path: str) -> ExperimentConfig:
    """Parse and resolve a config file; defaults fill absent keys."""
    cfg = ExperimentConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {line_no}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            _apply_key(cfg, key, value, line_no)
    return cfg.resolved()


def _apply_key(cfg: ExperimentConfig, key: str, value: str,
               line_no: int) -> None:
    if "." in key:
        kind_name, _, hyper_key = key.partition(".")
        kind = parse_kind(kind_name)
        if hyper_key not in _HYPER_FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        typ = int if hyper_key in _INT_HYPER else float
        cfg.hyper_by_kind.setdefault(kind, {})[hyper_key] = \
            _parse_scalar(key, value, typ)
        return
    if key in _HYPER_FIELDS:
        typ = int if key in _INT_HYPER else float
        cfg.hyper_global[key] = _parse_scalar(key, value, typ)
        return
    match key:
        case "dataset":
            cfg.dataset = value
        case "T":
            cfg.T = _parse_scalar(key, value, int)
        case "start_test_period":
            cfg.start_test_period = _parse_scalar(key, value, int)
        case "end_test_period":
            cfg.end_test_period = _parse_scalar(key, value, int)
        case "pool":
            cfg.pool = tuple(parse_kind(p) for p in value.split(","))
        case "strategy":
            if value.startswith("fixed:") or value.startswith("fixed("):
                cfg.strategy = "fixed"
                inner = value[6:].rstrip(")") if value.startswith("fixed(") \
                    else value[6:]
                cfg.fixed_backbone = parse_kind(inner)
            else:
                cfg.strategy = value
        case "fixed_backbone":
            cfg.fixed_backbone = parse_kind(value)
        case "n":
            cfg.n = _parse_scalar(key, value, int)
            if cfg.n < 1:
                raise ConfigError("n must be >= 1")
        case "K_values":
            cfg.K_values = _parse_list(key, value, int)
        case "gamma":
            cfg.gamma = _parse_scalar(key, value, int)
        case "alpha":
            cfg.alpha = _parse_scalar(key, value, float)
        case "B_req":
            cfg.B_req = _parse_scalar(key, value, int)
        case "B_vote":
            cfg.B_vote = _parse_scalar(key, value, int)
        case "seeds":
            cfg.seeds = _parse_list(key, value, int)
        case "output_dir":
            cfg.output_dir = value
        case "per_validator_negatives":
            cfg.per_validator_negatives = _parse_scalar(key, value, bool)
        case "grid_search":
            cfg.grid_search = _parse_scalar(key, value, bool)
        case "grid_learning_rates":
            cfg.grid_learning_rates = _parse_list(key, value, float)
        case "grid_dropouts":
            cfg.grid_dropouts = _parse_list(key, value, float)
        case _:
            raise ConfigError(f"unknown key {key!r} (line {line_no})")


def apply_env_overrides(cfg: ExperimentConfig) -> ExperimentConfig:
    """DESOCIAL_SEED replaces the seed list; DESOCIAL_THREADS is read by
    the harness at run time."""
    seed = os.environ.get("DESOCIAL_SEED")
    if seed:
        cfg = dataclasses.replace(cfg, seeds=(int(seed),))
    return cfg


def thread_count() -> int:
    value = os.environ.get("DESOCIAL_THREADS")
    if value:
        return max(1, int(value))
    return min(os.cpu_count() or 1, 8)
