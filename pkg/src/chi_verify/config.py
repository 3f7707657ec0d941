from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import TypedDict

from typing_extensions import NotRequired

ENV_CACHE_DIR = "CHI_VERIFY_CACHE_DIR"


def _default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "chi-verify"


class MinimalConfig(TypedDict):
    """Configuration for the chi_verify module."""

    # Directory holding the persistent zero cache
    cache_dir: NotRequired[str | Path]

    # Number of worker processes used for the per-J shards
    workers: NotRequired[int]

    # Largest ground set a Subset may live in
    max_ground_set: NotRequired[int]

    # Valuations are enumerated exhaustively up to this n, sampled one above
    max_exhaustive_valuations: NotRequired[int]
    sample_points: NotRequired[int]
    seed: NotRequired[int]

    # Numeric cross-check defaults
    grid: NotRequired[int]
    tol: NotRequired[float]

    # Share of cache entries re-checked by `cache verify-integrity`
    integrity_fraction: NotRequired[float]


@dataclass
class Config:
    """Configuration for the chi_verify module."""

    # Directory holding the persistent zero cache
    cache_dir: Path = field(default_factory=_default_cache_dir)

    # Number of worker processes used for the per-J shards
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)

    # Largest ground set a Subset may live in, one machine word
    max_ground_set: int = 16

    # Valuations are enumerated exhaustively up to this n and sampled one
    # above it
    max_exhaustive_valuations: int = 5
    sample_points: int = 2000
    seed: int = 0

    # Points per unit length, must be a power of two
    grid: int = 64
    # Round-off floor of the numeric tolerance, for grids where both sides are exact
    tol: float = 1e-9

    integrity_fraction: float = 0.01

    def override(self, config: MinimalConfig) -> Config:
        """Override the configuration with the provided configuration."""
        return Config(
            cache_dir=Path(config.get("cache_dir", self.cache_dir)),
            workers=config.get("workers", self.workers),
            max_ground_set=config.get("max_ground_set", self.max_ground_set),
            max_exhaustive_valuations=config.get(
                "max_exhaustive_valuations", self.max_exhaustive_valuations
            ),
            sample_points=config.get("sample_points", self.sample_points),
            seed=config.get("seed", self.seed),
            grid=config.get("grid", self.grid),
            tol=config.get("tol", self.tol),
            integrity_fraction=config.get(
                "integrity_fraction", self.integrity_fraction
            ),
        )

    @property
    def max_sampled_valuations(self) -> int:
        """Return the largest n the sampled valuation mode accepts."""
        return self.max_exhaustive_valuations + 1

    @property
    def cache_file(self) -> Path:
        """Return the path of the zero cache file inside the cache directory."""
        return Path(self.cache_dir) / "zero-cache.txt"


CONFIG = Config()
