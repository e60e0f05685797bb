from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .minhash import DEFAULT_NUM_PERMS, DEFAULT_SEED, choose_banding
from .normalization import DEFAULT_SHINGLE_WIDTH


@dataclass(frozen=True)
class Paths:
    funders: str | None = None
    institutions: str | None = None
    ror: str | None = None
    index: str | None = None
    corpus: str | None = None
    annotations: str | None = None
    papers: str | None = None
    eu_list: str | None = None
    matches: str | None = None
    assignments: str | None = None
    evaluation_annotations: str | None = None
    paired_papers: str | None = None
    sectors: str | None = None
    out: str = "out"


@dataclass(frozen=True)
class PipelineConfig:
    """Pinned pipeline parameters; every run echoes them next to its outputs."""

    shingle_width: int = DEFAULT_SHINGLE_WIDTH
    num_perms: int = DEFAULT_NUM_PERMS
    seed: int = DEFAULT_SEED
    cluster_threshold: float = 0.95
    fallback_threshold: float = 0.9
    high_freq_cutoff: int = 1000
    medium_freq_band: tuple[int, int] = (100, 1000)
    coverage_ratio: float = 0.5
    bare_acronyms: bool = True
    output_format: str = "parquet"
    paths: Paths = field(default_factory=Paths)

    def __post_init__(self) -> None:
        if not 0 < self.fallback_threshold <= self.cluster_threshold < 1:
            raise ValueError("need 0 < fallback_threshold <= cluster_threshold < 1")
        lo, hi = self.medium_freq_band
        if not 0 <= lo <= hi <= self.high_freq_cutoff:
            raise ValueError("medium frequency band must sit below the high-frequency cutoff")
        if self.shingle_width < 1 or self.num_perms < 1:
            raise ValueError("shingle_width and num_perms must be positive")
        # fail here rather than midway through a run
        choose_banding(self.num_perms, self.cluster_threshold)
        choose_banding(self.num_perms, self.fallback_threshold)
        if not 0 < self.coverage_ratio <= 1:
            raise ValueError("coverage_ratio must lie in (0, 1]")
        if self.output_format not in ("parquet", "csv"):
            raise ValueError("output_format must be 'parquet' or 'csv'")

    def to_dict(self, include_paths: bool = True) -> dict[str, Any]:
        d = asdict(self)
        d["medium_freq_band"] = list(self.medium_freq_band)
        if not include_paths:
            d.pop("paths")
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "medium_freq_band" in d:
            d["medium_freq_band"] = tuple(d["medium_freq_band"])
        if "paths" in d:
            d["paths"] = Paths(**d["paths"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def with_paths(self, **updates: str | None) -> "PipelineConfig":
        current = asdict(self.paths)
        current.update({k: v for k, v in updates.items() if v is not None})
        d = self.to_dict()
        d["paths"] = current
        return PipelineConfig.from_dict(d)
