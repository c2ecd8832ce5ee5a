"""Pipeline configuration: ``key = value`` files with command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .evaluation import VARIANTS, ExperimentConfig


@dataclass
class PipelineConfig:
    input_mode: str = "features"  # features | volumes
    t1_features: str | None = None
    t2_features: str | None = None
    labels: str | None = None
    volumes: str | None = None
    annotations: str | None = None
    out: str = "out"
    half_window: int = 2
    image_size: int = 224
    t1_projection: str = "min"
    t2_projection: str = "max"
    variant: str = "all"
    folds: int = 10
    seed: int = 0
    svm_c: float = 1.0
    svm_tol: float = 1e-3
    svm_max_iter: int = 100_000
    cca_epsilon: float | None = None  # None -> 1e-4 * trace(Cxx) / p
    cca_dmax: int | None = None
    adasyn: bool = True
    adasyn_beta: float = 1.0
    adasyn_k: int = 5
    fusion_adasyn: bool = False

    def experiment(self) -> ExperimentConfig:
        names = {f.name for f in fields(ExperimentConfig)}
        return ExperimentConfig(**{k: getattr(self, k) for k in names})

    def variants(self) -> tuple[str, ...]:
        return VARIANTS if self.variant == "all" else (self.variant,)

    def validate(self, need_paths: tuple[str, ...] = ()) -> "PipelineConfig":
        def require(cond, msg):
            if not cond:
                raise ConfigError(msg)

        require(self.input_mode in ("features", "volumes"), f"input_mode must be features or volumes, got {self.input_mode!r}")
        require(self.variant in VARIANTS + ("all",), f"variant must be one of {VARIANTS + ('all',)}")
        require(self.half_window >= 0, "half_window must be >= 0")
        require(self.image_size >= 1, "image_size must be >= 1")
        for key in ("t1_projection", "t2_projection"):
            require(getattr(self, key) in ("min", "max"), f"{key} must be min or max")
        require(self.folds >= 2, "folds must be >= 2")
        require(self.svm_c > 0, "svm_c must be > 0")
        require(self.svm_tol > 0, "svm_tol must be > 0")
        require(self.svm_max_iter >= 1, "svm_max_iter must be >= 1")
        require(self.cca_epsilon is None or self.cca_epsilon >= 0, "cca_epsilon must be >= 0")
        require(self.cca_dmax is None or self.cca_dmax >= 1, "cca_dmax must be >= 1")
        require(0 <= self.adasyn_beta <= 1, "adasyn_beta must lie in [0, 1]")
        require(self.adasyn_k >= 1, "adasyn_k must be >= 1")
        for key in need_paths:
            value = getattr(self, key)
            require(value is not None, f"{key} is required")
            require(Path(value).exists(), f"{key}: path does not exist: {value}")
        return self


_NONE_WORDS = {"", "none", "auto", "null"}


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _convert(name: str, raw, annotation: str):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    optional = "None" in annotation
    if optional and text.lower() in _NONE_WORDS:
        return None
    try:
        if annotation.startswith("bool"):
            return parse_bool(text)
        if annotation.startswith("int"):
            return int(text)
        if annotation.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {annotation}") from None
    return text


def _field_types() -> dict[str, str]:
    return {f.name: str(f.type) for f in fields(PipelineConfig)}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    types = _field_types()
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, value, types[key])
    return values


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then the file (if any), then ``overrides`` (non-None entries win)."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, str(path)))
    types = _field_types()
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _convert(key, value, types[key])
    return PipelineConfig(**values)


def dump_config(cfg: PipelineConfig) -> str:
    def fmt(v):
        if v is None:
            return "none"
        if isinstance(v, bool):
            return str(v).lower()
        return str(v)

    return "".join(f"{f.name} = {fmt(getattr(cfg, f.name))}\n" for f in fields(cfg))
