"""Turn model configuration and its flat ``key=value`` file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .backchannel import CueList, default_cue_list, load_cue_list

CONFIDENCE_MODES = ("off", "flag", "remove")


class ConfigError(ValueError):
    pass


def _default_cues() -> frozenset[str]:
    return default_cue_list().cues


def _default_prohibited() -> frozenset[str]:
    return default_cue_list().prohibited_starts


@dataclass(frozen=True)
class TurnModelConfig:
    """All tunable parameters for segmentation, filtering and statistics."""

    max_pause_s: float = 1.5
    backchannel_max_words: int = 3
    backchannel_fraction: float = 0.5
    cue_list: frozenset[str] = field(default_factory=_default_cues)
    prohibited_start_list: frozenset[str] = field(default_factory=_default_prohibited)
    min_confidence: float = 0.0
    confidence_mode: str = "off"
    max_turn_duration_s: float = 120.0
    interval_min_s: float = -5.0
    interval_max_s: float = 5.0
    drop_first_turn: bool = True

    def __post_init__(self) -> None:
        cues = CueList(frozenset(self.cue_list), frozenset(self.prohibited_start_list))
        object.__setattr__(self, "cue_list", cues.cues)
        object.__setattr__(self, "prohibited_start_list", cues.prohibited_starts)
        object.__setattr__(self, "_cues", cues)
        self.validate()

    @property
    def cues(self) -> CueList:
        return self._cues  # type: ignore[attr-defined]

    def validate(self) -> None:
        if not (self.max_pause_s > 0 and math.isfinite(self.max_pause_s)):
            raise ConfigError(f"max_pause_s must be > 0, got {self.max_pause_s}")
        if self.backchannel_max_words < 1:
            raise ConfigError("backchannel_max_words must be >= 1")
        if not 0.0 <= self.backchannel_fraction <= 1.0:
            raise ConfigError("backchannel_fraction must be in [0, 1]")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ConfigError("min_confidence must be in [0, 1]")
        if self.confidence_mode not in CONFIDENCE_MODES:
            raise ConfigError(f"confidence_mode must be one of {CONFIDENCE_MODES}")
        if not self.max_turn_duration_s > 0:
            raise ConfigError("max_turn_duration_s must be > 0")
        if not self.interval_min_s < self.interval_max_s:
            raise ConfigError("interval_min_s must be < interval_max_s")

    def replace(self, **changes) -> TurnModelConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = sorted(v) if isinstance(v, frozenset) else v
        return out

    def dumps(self) -> str:
        """Serialize to the flat ``key=value`` format read by :func:`load_config`."""
        lines = []
        for key, v in self.to_dict().items():
            if isinstance(v, list):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{key}={v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(TurnModelConfig)}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_words(key: str, value: str, base: Path | None) -> frozenset[str]:
    value = value.strip()
    if value.startswith("@"):
        path = Path(value[1:])
        if base is not None and not path.is_absolute():
            path = base / path
        cues = load_cue_list(path)
        return cues.cues if key == "cue_list" else cues.prohibited_starts
    return frozenset(w.strip() for w in value.split(",") if w.strip())


def parse_config(text: str, source: str = "<string>", base: Path | None = None) -> TurnModelConfig:
    """Parse ``key=value`` lines into a :class:`TurnModelConfig`.

    Keys must be TurnModelConfig field names; unknown keys are an error.
    Word-set keys take a comma-separated list, or ``@path`` to read the
    matching section of a cue-list file.
    """
    kwargs: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in kwargs:
            raise ConfigError(f"{source}:{lineno}: duplicate config key {key!r}")
        try:
            if key in ("cue_list", "prohibited_start_list"):
                kwargs[key] = _parse_words(key, value, base)
            elif key == "drop_first_turn":
                kwargs[key] = _parse_bool(value)
            elif key == "backchannel_max_words":
                kwargs[key] = int(value)
            elif key == "confidence_mode":
                kwargs[key] = value.lower()
            else:
                kwargs[key] = float(value)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return TurnModelConfig(**kwargs)


def load_config(path: str | Path) -> TurnModelConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path), base=path.parent)
