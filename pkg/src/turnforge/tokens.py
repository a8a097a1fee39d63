"""Word-token ingest: canonical TSV format, stereo STT adapter, confidence filter."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Iterable, Mapping

from .config import TurnModelConfig

logger = logging.getLogger(__name__)

CANONICAL_HEADER = ("conversation_id", "speaker", "text", "start_s", "end_s", "confidence")

# vendor channel label -> canonical speaker label
CHANNEL_SPEAKERS = {
    "left": "0",
    "right": "1",
    "ch_0": "0",
    "ch_1": "1",
    "0": "0",
    "1": "1",
}


class TokenFormatError(ValueError):
    """Malformed token input. ``location`` is ``path:line`` when known."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class WordToken:
    conversation_id: str
    speaker: str
    text: str
    start_s: float
    end_s: float
    confidence: float = 1.0
    low_confidence: bool = False

    def __post_init__(self) -> None:
        if not self.text or any(c.isspace() for c in self.text):
            raise TokenFormatError(f"token text must be one non-empty word, got {self.text!r}")
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise TokenFormatError("non-finite timestamp")
        if self.start_s < 0:
            raise TokenFormatError(f"negative start time {self.start_s}")
        if self.end_s < self.start_s:
            raise TokenFormatError(
                f"negative duration token {self.text!r}: end_s={self.end_s} < start_s={self.start_s}"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise TokenFormatError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def sort_key(self) -> tuple[float, str, float]:
        return (self.start_s, self.speaker, self.end_s)


@dataclass(frozen=True)
class TokenStream:
    """One conversation's tokens, sorted by (start_s, speaker, end_s)."""

    conversation_id: str
    tokens: tuple[WordToken, ...] = ()

    def __post_init__(self) -> None:
        toks = tuple(sorted(self.tokens, key=lambda t: t.sort_key))
        object.__setattr__(self, "tokens", toks)
        for t in toks:
            if t.conversation_id != self.conversation_id:
                raise TokenFormatError(
                    f"token conversation_id {t.conversation_id!r} != {self.conversation_id!r}"
                )
        if len(self.speakers) > 2:
            raise TokenFormatError(f"more than two speakers: {sorted(self.speakers)}")

    @property
    def speakers(self) -> list[str]:
        return sorted({t.speaker for t in self.tokens})

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def _format_seconds(x: float) -> str:
    return str(Decimal(repr(x)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def serialize_tokens(stream: TokenStream) -> str:
    """Render ``stream`` in the canonical tab-separated format (with header)."""
    lines = ["\t".join(CANONICAL_HEADER)]
    for t in stream.tokens:
        lines.append(
            "\t".join(
                (
                    t.conversation_id,
                    t.speaker,
                    t.text,
                    _format_seconds(t.start_s),
                    _format_seconds(t.end_s),
                    repr(float(t.confidence)),
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_canonical_tokens(data: bytes | str, source: str = "<input>") -> TokenStream:
    """Parse canonical token file content into a validated TokenStream.

    Args:
        data: UTF-8 content. First line is the header, then one tab-separated
            record per word: conversation_id, speaker, text, start_s, end_s,
            confidence.
        source: Name used in error locations.

    Raises:
        TokenFormatError: empty input, bad header, malformed record, invalid
            token values, mixed conversation ids, or more than two speakers.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise TokenFormatError("empty file", source)
    header = tuple(h.strip() for h in lines[0].split("\t"))
    if header != CANONICAL_HEADER:
        raise TokenFormatError(f"bad header {header}, expected {CANONICAL_HEADER}", f"{source}:1")

    tokens = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        loc = f"{source}:{lineno}"
        fields = line.split("\t")
        if len(fields) != len(CANONICAL_HEADER):
            raise TokenFormatError(f"expected {len(CANONICAL_HEADER)} fields, got {len(fields)}", loc)
        conv, speaker, word, start, end, conf = fields
        try:
            start_s, end_s, confidence = float(start), float(end), float(conf)
        except ValueError as exc:
            raise TokenFormatError(f"non-numeric field: {exc}", loc) from None
        try:
            tokens.append(WordToken(conv, speaker, word, start_s, end_s, confidence))
        except TokenFormatError as exc:
            raise TokenFormatError(str(exc), loc) from None
    if not tokens:
        raise TokenFormatError("empty file", source)

    conv_ids = {t.conversation_id for t in tokens}
    if len(conv_ids) > 1:
        raise TokenFormatError(f"mixed conversation ids {sorted(conv_ids)}", source)
    try:
        return TokenStream(tokens[0].conversation_id, tuple(tokens))
    except TokenFormatError as exc:
        raise TokenFormatError(str(exc), source) from None


def read_tokens(path: str | Path) -> TokenStream:
    path = Path(path)
    return parse_canonical_tokens(path.read_bytes(), source=str(path))


def write_tokens(stream: TokenStream, path: str | Path) -> None:
    Path(path).write_text(serialize_tokens(stream), encoding="utf-8")


def _vendor_items(doc: Mapping[str, Any]) -> Iterable[tuple[str, Mapping[str, Any]]]:
    """Yield (channel_label, item) pairs from either supported document shape."""
    results = doc.get("results", doc)
    channel_labels = results.get("channel_labels") if isinstance(results, Mapping) else None
    if channel_labels:
        for channel in channel_labels.get("channels", []):
            label = channel.get("channel_label")
            for item in channel.get("items", []):
                yield label, item
        return
    for item in results.get("items", []):
        yield item.get("channel"), item


def _field(item: Mapping[str, Any], *names: str) -> Any:
    for name in names:
        if name in item and item[name] is not None:
            return item[name]
    alts = item.get("alternatives")
    if alts:
        for name in names:
            if name in alts[0]:
                return alts[0][name]
    return None


def adapt_stereo_stt(raw: Mapping[str, Any] | str | bytes, conversation_id: str | None = None) -> TokenStream:
    """Convert a two-channel word-level STT document into a TokenStream.

    Two shapes are accepted: a flat ``{"items": [...]}`` list whose items
    carry ``content``, ``start``, ``end``, ``channel``, ``confidence``; and
    the channel-identified layout ``results.channel_labels.channels[*].items``
    with ``start_time``/``end_time`` and content/confidence under
    ``alternatives``. Punctuation items (``type == "punctuation"``) are
    skipped since they carry no timing. Channels map left/ch_0 to speaker
    ``"0"`` and right/ch_1 to ``"1"``.
    """
    if isinstance(raw, (str, bytes)):
        raw = json.loads(raw)
    conv = conversation_id or str(raw.get("conversation_id") or raw.get("jobName") or "conversation")

    pairs = [(label, item) for label, item in _vendor_items(raw) if item.get("type") != "punctuation"]
    labels = {str(label) for label, _ in pairs}
    if len(labels) > 2:
        raise TokenFormatError(f"more than two channels: {sorted(labels)}")

    tokens = []
    for i, (label, item) in enumerate(pairs):
        loc = f"item {i}"
        speaker = CHANNEL_SPEAKERS.get(str(label).lower())
        if speaker is None:
            raise TokenFormatError(f"unknown channel label {label!r}", loc)
        start = _field(item, "start", "start_time")
        end = _field(item, "end", "end_time")
        content = _field(item, "content", "text", "word")
        conf = _field(item, "confidence", "conf")
        if start is None or end is None:
            raise TokenFormatError("missing timestamps", loc)
        try:
            start_s, end_s = float(start), float(end)
            confidence = 1.0 if conf is None else float(conf)
        except (TypeError, ValueError):
            raise TokenFormatError("non-numeric time field", loc) from None
        try:
            tokens.append(WordToken(conv, speaker, str(content), start_s, end_s, confidence))
        except TokenFormatError as exc:
            raise TokenFormatError(str(exc), loc) from None
    if not tokens:
        logger.warning("STT document for %s has no word items", conv)
    return TokenStream(conv, tuple(tokens))


def filter_tokens(stream: TokenStream, config: TurnModelConfig) -> TokenStream:
    """Drop or flag tokens with confidence below ``config.min_confidence``.

    ``confidence_mode`` selects the behavior: ``off`` returns the input,
    ``remove`` drops low-confidence tokens, ``flag`` keeps them with
    ``low_confidence=True``. Order is preserved.
    """
    if config.confidence_mode == "off" or config.min_confidence <= 0.0:
        return stream
    thr = config.min_confidence
    if config.confidence_mode == "remove":
        kept = tuple(t for t in stream.tokens if t.confidence >= thr)
    else:
        kept = tuple(
            dataclasses.replace(t, low_confidence=True) if t.confidence < thr else t
            for t in stream.tokens
        )
    return TokenStream(stream.conversation_id, kept)
