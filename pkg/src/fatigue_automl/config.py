"""Run configuration: one YAML (or JSON) file with nested sections."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields

import yaml

from .learners.spaces import DEFAULT_SEARCH_SPACES


@dataclass
class DataConfig:
    csv: str = None
    synth: dict = None  # SynthConfig fields; used when csv is absent
    schema: str = None  # YAML schema file; default schema when absent
    missing_tokens: list = field(default_factory=lambda: ["", "NA", "NaN", "-"])
    test_fraction: float = 0.1


@dataclass
class GoldenConfig:
    enabled: bool = False
    policy: str = "strict"
    include_flagged: bool = False


@dataclass
class HpoConfig:
    budget_seconds: float = 3600.0
    max_trials: int = None
    folds: int = 5
    spaces: list = field(default_factory=lambda: list(DEFAULT_SEARCH_SPACES))
    max_members: int = 25


@dataclass
class SeedConfig:
    split: int = 0
    pipeline: int = 0
    search: int = 0
    explain: int = 0


@dataclass
class ExplainConfig:
    enabled: bool = True
    background: int = 512
    permutations: int = 2048
    repeats: int = 5
    top_k: int = 10
    max_rows: int = None  # explain at most this many test rows (None: all)


@dataclass
class RunConfig:
    output_dir: str = "run"
    hypothesis: str = "M1"
    extra_features: list = field(default_factory=list)
    impute: dict = field(default_factory=dict)  # column -> {strategy, value}
    vif_threshold: float = 5.0  # None disables screening
    band: list = field(default_factory=lambda: [0.0, 150.0])
    jobs: int = 1
    data: DataConfig = field(default_factory=DataConfig)
    golden: GoldenConfig = field(default_factory=GoldenConfig)
    hpo: HpoConfig = field(default_factory=HpoConfig)
    seeds: SeedConfig = field(default_factory=SeedConfig)
    explain: ExplainConfig = field(default_factory=ExplainConfig)

    _SECTIONS = {"data": DataConfig, "golden": GoldenConfig, "hpo": HpoConfig, "seeds": SeedConfig,
                 "explain": ExplainConfig}

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(dict(d or {}))
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        kw = {}
        for k, v in d.items():
            sec = cls._SECTIONS.get(k)
            if sec is not None:
                sub_known = {f.name for f in fields(sec)}
                bad = set(v or {}) - sub_known
                if bad:
                    raise ValueError(f"unknown keys in [{k}]: {sorted(bad)}")
                kw[k] = sec(**(v or {}))
            else:
                kw[k] = v
        return cls(**kw)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)

    def with_seed(self, seed):
        out = copy.deepcopy(self)
        out.seeds = SeedConfig(seed, seed, seed, seed)
        return out
