"""Backchannel classification of listener utterances.

A candidate turn is a backchannel when it is short, does not open with a
prohibited word, and is mostly made of cue words. All three thresholds are
configurable; the shipped cue list is an editable default.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from .config import TurnModelConfig

_EDGE_PUNCT = string.punctuation + "‘’“”…"


def normalize_word(word: str) -> str:
    """Lowercase and strip punctuation from the edges of ``word``.

    Inner punctuation is kept, so contractions like ``I'm`` stay one word.
    """
    return word.strip().strip(_EDGE_PUNCT).lower()


@dataclass(frozen=True)
class CueList:
    """Immutable backchannel vocabulary.

    Attributes:
        cues: Words that count toward the backchannel fraction.
        prohibited_starts: Words a backchannel may not begin with.
    """

    cues: frozenset[str] = field(default_factory=frozenset)
    prohibited_starts: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "cues", frozenset(_normalize_entries(self.cues)))
        object.__setattr__(
            self, "prohibited_starts", frozenset(_normalize_entries(self.prohibited_starts))
        )


def _normalize_entries(words: Iterable[str]) -> set[str]:
    out = set()
    for w in words:
        w = normalize_word(w)
        if not w:
            continue
        if any(c.isspace() for c in w):
            raise ValueError(f"cue entries must be single words, got {w!r}")
        out.add(w)
    return out


def parse_cue_list(text: str, source: str = "<string>") -> CueList:
    """Parse cue-list file content with ``[cues]`` and ``[prohibited]`` sections."""
    sections: dict[str, list[str]] = {"cues": [], "prohibited": []}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in sections:
                raise ValueError(f"{source}:{lineno}: unknown section [{name}]")
            current = name
            continue
        if current is None:
            raise ValueError(f"{source}:{lineno}: entry outside of a section")
        sections[current].append(line)
    cues = CueList(frozenset(sections["cues"]), frozenset(sections["prohibited"]))
    if not cues.cues:
        raise ValueError(f"{source}: empty cues section")
    return cues


def load_cue_list(path: str | Path) -> CueList:
    """Load a cue-list file.

    Args:
        path: UTF-8 text file; ``[cues]`` then ``[prohibited]`` sections, one
            word per line, ``#`` comments allowed.

    Returns:
        Normalized CueList (lowercased, trimmed, duplicates collapsed).

    Raises:
        FileNotFoundError: ``path`` does not exist.
        ValueError: the cues section is empty or the file is malformed.
    """
    path = Path(path)
    return parse_cue_list(path.read_text(encoding="utf-8"), source=str(path))


_DEFAULT: CueList | None = None


def default_cue_list() -> CueList:
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("turnforge").joinpath("data/default_cues.txt").read_text("utf-8")
        _DEFAULT = parse_cue_list(text, source="default_cues.txt")
    return _DEFAULT


def is_backchannel(
    words: Sequence[str],
    cue_list: CueList | None = None,
    config: TurnModelConfig | None = None,
) -> bool:
    """Return True if ``words`` form a backchannel.

    Rules, all of which must hold:

    * at most ``config.backchannel_max_words`` words;
    * the first word is not in ``cue_list.prohibited_starts``;
    * the share of cue words is strictly greater than
      ``config.backchannel_fraction``.

    Words are compared case-insensitively after stripping edge punctuation.
    Repeated words count once per occurrence.
    """
    if not words:
        raise ValueError("empty turn")
    if config is None:
        max_words, fraction = 3, 0.5
    else:
        max_words, fraction = config.backchannel_max_words, config.backchannel_fraction
    if cue_list is None:
        cue_list = config.cues if config is not None else default_cue_list()

    if len(words) > max_words:
        return False
    norm = [normalize_word(w) for w in words]
    if norm[0] in cue_list.prohibited_starts:
        return False
    hits = sum(1 for w in norm if w in cue_list.cues)
    return hits / len(norm) > fraction
