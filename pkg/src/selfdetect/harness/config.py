"""Experiment configuration read from a TOML file."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError
from ..strategies import COUNTERFACTUAL_STRATEGY, STRATEGIES, StrategyConfig

TARGET_MODES = ("greedy", "sc", "cc")
_TOP_LEVEL = {"dataset", "output_dir", "cache_path", "sample_limit", "parallelism", "rng_seed", "target_mode",
              "trace", "lenient", "strategies", "templates_dir", "backend", "hyperparameters", "strategy", "ece_bins"}
_BACKEND = {"kind", "script", "model", "base_url", "api_key_env", "requests_per_minute", "use_n", "timeout",
            "max_attempts"}


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "mock"
    script: Optional[Path] = None
    model: str = "mock"
    base_url: Optional[str] = None
    api_key_env: str = "OPENAI_API_KEY"
    requests_per_minute: float = 60.0
    use_n: bool = True
    timeout: float = 60.0
    max_attempts: int = 5

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"backend.kind must be 'mock' or 'http', got {self.kind!r}")
        if self.kind == "mock" and self.script is None:
            raise ConfigError("a mock backend needs backend.script")
        if self.kind == "http" and not self.base_url:
            raise ConfigError("an http backend needs backend.base_url")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Path
    backend: BackendSpec
    strategies: tuple[str, ...]
    output_dir: Path = Path("results")
    cache_path: Optional[Path] = None
    sample_limit: Optional[int] = None
    parallelism: int = 1
    rng_seed: int = 0
    target_mode: str = "greedy"
    trace: bool = False
    lenient: bool = False
    ece_bins: int = 10
    hyperparameters: StrategyConfig = field(default_factory=StrategyConfig)
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        known = set(STRATEGIES) | {COUNTERFACTUAL_STRATEGY}
        bad = [s for s in self.strategies if s not in known]
        if bad:
            raise ConfigError(f"unknown strategies {bad}; known: {sorted(known)}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigError("strategies must not repeat")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.sample_limit is not None and self.sample_limit < 1:
            raise ConfigError("sample_limit must be >= 1")
        if self.target_mode not in TARGET_MODES:
            raise ConfigError(f"target_mode must be one of {TARGET_MODES}")
        if self.ece_bins < 1:
            raise ConfigError("ece_bins must be >= 1")
        for name in self.overrides:
            if name not in self.strategies:
                raise ConfigError(f"settings given for strategy {name!r} which is not run")

    def strategy_config(self, name: str) -> StrategyConfig:
        return self.hyperparameters.with_overrides(**self.overrides.get(name, {}))

    def with_cli(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        if "strategies" in changes:
            changes["overrides"] = {k: v for k, v in self.overrides.items() if k in changes["strategies"]}
        return replace(self, **changes)

    def to_json(self) -> dict:
        b = self.backend
        return {
            "dataset": str(self.dataset),
            "backend": {"kind": b.kind, "script": str(b.script) if b.script else None, "model": b.model,
                        "base_url": b.base_url, "api_key_env": b.api_key_env,
                        "requests_per_minute": b.requests_per_minute, "use_n": b.use_n},
            "strategies": list(self.strategies),
            "sample_limit": self.sample_limit,
            "parallelism": self.parallelism,
            "rng_seed": self.rng_seed,
            "target_mode": self.target_mode,
            "trace": self.trace,
            "ece_bins": self.ece_bins,
            "hyperparameters": self.hyperparameters.to_json(),
            "overrides": {k: dict(v) for k, v in sorted(self.overrides.items())},
        }


def _path(base: Path, value) -> Optional[Path]:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_config(data: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    unknown = set(data) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("dataset", "strategies", "backend"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}")
    braw = dict(data["backend"])
    bad = set(braw) - _BACKEND
    if bad:
        raise ConfigError(f"unknown backend keys: {sorted(bad)}")
    if "script" in braw:
        braw["script"] = _path(base_dir, braw["script"])
    backend = BackendSpec(**braw)

    hyper = dict(data.get("hyperparameters", {}))
    if "templates_dir" in data:
        hyper["templates_dir"] = str(_path(base_dir, data["templates_dir"]))
    try:
        hyperparameters = StrategyConfig.from_mapping(hyper)
        overrides = {name: dict(v) for name, v in data.get("strategy", {}).items()}
        for name, v in overrides.items():
            hyperparameters.with_overrides(**v)  # validate early
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    return ExperimentConfig(
        dataset=_path(base_dir, data["dataset"]),
        backend=backend,
        strategies=tuple(data["strategies"]),
        output_dir=_path(base_dir, data.get("output_dir", "results")),
        cache_path=_path(base_dir, data.get("cache_path")),
        sample_limit=data.get("sample_limit"),
        parallelism=int(data.get("parallelism", 1)),
        rng_seed=int(data.get("rng_seed", 0)),
        target_mode=data.get("target_mode", "greedy"),
        trace=bool(data.get("trace", False)),
        lenient=bool(data.get("lenient", False)),
        ece_bins=int(data.get("ece_bins", 10)),
        hyperparameters=hyperparameters,
        overrides=overrides,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.parent)
