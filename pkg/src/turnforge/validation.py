"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

from typing import Any, Iterable

from .metrics import TurnFeatures
from .segmentation import Transcript
from .tokens import TokenStream


def _as_list(X: Any, single: type, what: str) -> list:
    if isinstance(X, single):
        return [X]
    if isinstance(X, (str, bytes)) or not isinstance(X, Iterable):
        raise TypeError(f"expected a {single.__name__} or an iterable of them, got {type(X).__name__}")
    items = list(X)
    for i, item in enumerate(items):
        if not isinstance(item, single):
            raise TypeError(f"{what}[{i}] is {type(item).__name__}, expected {single.__name__}")
    return items


def check_token_streams(X: Any) -> list[TokenStream]:
    """Accept one TokenStream or an iterable of them (one per conversation)."""
    streams = _as_list(X, TokenStream, "X")
    seen = set()
    for s in streams:
        if s.conversation_id in seen:
            raise ValueError(f"duplicate conversation_id {s.conversation_id!r}")
        seen.add(s.conversation_id)
    return streams


def check_transcripts(X: Any) -> list[Transcript]:
    return _as_list(X, Transcript, "X")


def check_features(X: Any) -> list[TurnFeatures]:
    """Accept an iterable of TurnFeatures rows (nested lists are flattened)."""
    if isinstance(X, TurnFeatures):
        return [X]
    rows: list[TurnFeatures] = []
    for i, item in enumerate(X):
        if isinstance(item, TurnFeatures):
            rows.append(item)
        elif isinstance(item, (list, tuple)):
            rows.extend(check_features(item))
        else:
            raise TypeError(f"X[{i}] is {type(item).__name__}, expected TurnFeatures")
    return rows
