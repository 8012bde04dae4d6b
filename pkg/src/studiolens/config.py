"""Engine configuration: every analytic parameter in one JSON-loadable place.

Reports embed a snapshot of the parameters each analytic ran with, and the
whole config hashes to a short digest so stored verdicts and cached reports
bind to exact parameter sets.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .consistency import ConsistencyConfig
from .contrast import ContrastConfig
from .ideas import IdeaConfig, default_stopwords, load_stopwords

ANALYTIC_KINDS = (
    "fluency",
    "flexibility",
    "visual_consistency",
    "multiscale_organization",
    "legible_contrast",
)


@dataclass(frozen=True)
class EngineConfig:
    enabled: tuple[str, ...] = ANALYTIC_KINDS
    # ideas / fluency
    stopwords_path: str | None = None
    keep_descriptors_whole: bool = False
    recognizer_cmd: tuple[str, ...] = ()
    recognizer_timeout: float = 10.0
    # semantics / flexibility
    embeddings_path: str | None = None
    tau: float = 0.6
    # spatial
    amoeba_k: float = 1.0
    min_split_size: int = 3
    max_depth: int = 6
    beta: float = 0.5
    scale_ratio_rho: float = 4.0
    grid_resolution: int = 64
    # consistency
    epsilon_numeric: float = 0.05
    delta_color: float = 8 / 255
    typed_mode_threshold: float = 0.5
    # contrast
    contrast: ContrastConfig = field(default_factory=ContrastConfig)

    def __post_init__(self):
        unknown = [k for k in self.enabled if k not in ANALYTIC_KINDS]
        if unknown:
            raise ValueError(f"unknown analytics enabled: {unknown}")

    def idea_config(self) -> IdeaConfig:
        stopwords = (
            load_stopwords(self.stopwords_path)
            if self.stopwords_path
            else default_stopwords()
        )
        return IdeaConfig(
            stopwords=stopwords,
            keep_descriptors_whole=self.keep_descriptors_whole,
            recognizer_cmd=self.recognizer_cmd,
            recognizer_timeout=self.recognizer_timeout,
        )

    def consistency_config(self) -> ConsistencyConfig:
        return ConsistencyConfig(
            epsilon_numeric=self.epsilon_numeric,
            delta_color=self.delta_color,
            typed_mode_threshold=self.typed_mode_threshold,
        )

    def to_json(self) -> dict:
        return {
            "enabled": list(self.enabled),
            "stopwords_path": self.stopwords_path,
            "keep_descriptors_whole": self.keep_descriptors_whole,
            "recognizer_cmd": list(self.recognizer_cmd),
            "recognizer_timeout": self.recognizer_timeout,
            "embeddings_path": self.embeddings_path,
            "tau": self.tau,
            "amoeba_k": self.amoeba_k,
            "min_split_size": self.min_split_size,
            "max_depth": self.max_depth,
            "beta": self.beta,
            "scale_ratio_rho": self.scale_ratio_rho,
            "grid_resolution": self.grid_resolution,
            "epsilon_numeric": self.epsilon_numeric,
            "delta_color": self.delta_color,
            "typed_mode_threshold": self.typed_mode_threshold,
            "contrast": {
                "block_resolution": self.contrast.block_resolution,
                "ratio_threshold": self.contrast.ratio_threshold,
                "min_run_length": self.contrast.min_run_length,
                "loudness_threshold": self.contrast.loudness_threshold,
                "loud_area_min_fraction": self.contrast.loud_area_min_fraction,
                "hue_gap_degrees": self.contrast.hue_gap_degrees,
                "flag_fraction": self.contrast.flag_fraction,
                "hc_norm": self.contrast.hc_norm,
                "loud_norm": self.contrast.loud_norm,
                "weight_hc": self.contrast.weight_hc,
                "weight_loud": self.contrast.weight_loud,
            },
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def with_enabled(self, kinds) -> "EngineConfig":
        return replace(self, enabled=tuple(kinds))

    @staticmethod
    def from_json(obj: dict) -> "EngineConfig":
        contrast_obj = obj.get("contrast", {})
        contrast = ContrastConfig(**contrast_obj) if contrast_obj else ContrastConfig()
        kwargs = {k: v for k, v in obj.items() if k != "contrast"}
        if "enabled" in kwargs:
            kwargs["enabled"] = tuple(kwargs["enabled"])
        if "recognizer_cmd" in kwargs:
            kwargs["recognizer_cmd"] = tuple(kwargs["recognizer_cmd"])
        return EngineConfig(contrast=contrast, **kwargs)

    @staticmethod
    def from_file(path) -> "EngineConfig":
        with open(path, encoding="utf-8") as fh:
            return EngineConfig.from_json(json.load(fh))
